//! Weighted-Jacobi smoothing of vectors lifted from a coarser graph.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::normalize;

pub const DEFAULT_THETA: f64 = 2.0 / 3.0;
pub const DEFAULT_SMOOTH_ITERS: usize = 10;

/// Mass matrix of the generalized problem `L u = λ B u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BMode {
    /// `B = I` (ratio cut).
    Identity,
    /// `B = D` (normalized cut).
    Degree,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!("smoothing weight must lie in [0, 1], got {theta}")));
    }
    Ok(())
}

/// `x ← (1 − ϑ) x + ϑ D⁻¹ A x`, `iters` times per vector.
pub fn jacobi_smooth(g: &Graph, vectors: &[Vec<f64>], theta: f64, iters: usize) -> Result<Vec<Vec<f64>>> {
    check_theta(theta)?;
    let d = g.degrees();
    if let Some(p) = d.iter().position(|&x| x <= 0.0) {
        return Err(Error::ZeroDegree(p));
    }
    let mut out = Vec::with_capacity(vectors.len());
    let mut buf = vec![0.0; g.n()];
    for v in vectors {
        if v.len() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                got: v.len(),
            });
        }
        let mut x = v.clone();
        for _ in 0..iters {
            for (p, b) in buf.iter_mut().enumerate() {
                let ax: f64 = g.neighbors(p).map(|(q, w)| w * x[q]).sum();
                *b = (1.0 - theta) * x[p] + theta * ax / d[p];
            }
            std::mem::swap(&mut x, &mut buf);
        }
        out.push(x);
    }
    Ok(out)
}

/// Weighted Jacobi on `(L − λB) y = 0`, then unit normalization.
///
/// The update is `y ← (1 − ϑ) y + ϑ A y / (d − λ b)` with `b = 1` or `b = d`.
/// Where the shifted diagonal vanishes the row carries no information about
/// `y_p`, so that entry is left as it is.
pub fn eigen_smooth(g: &Graph, mode: BMode, lambda: f64, y: &[f64], theta: f64, iters: usize) -> Result<Vec<f64>> {
    check_theta(theta)?;
    if y.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: y.len(),
        });
    }
    let d = g.degrees();
    let diag: Vec<f64> = d
        .iter()
        .map(|&dp| match mode {
            BMode::Identity => dp - lambda,
            BMode::Degree => dp * (1.0 - lambda),
        })
        .collect();
    if !lambda.is_finite() {
        return Err(Error::invalid(format!("shift must be finite, got {lambda}")));
    }
    let mut x = y.to_vec();
    let mut buf = vec![0.0; g.n()];
    for _ in 0..iters {
        for (p, b) in buf.iter_mut().enumerate() {
            if diag[p] == 0.0 {
                *b = x[p];
                continue;
            }
            let ax: f64 = g.neighbors(p).map(|(q, w)| w * x[q]).sum();
            *b = (1.0 - theta) * x[p] + theta * ax / diag[p];
        }
        std::mem::swap(&mut x, &mut buf);
    }
    if !normalize(&mut x) {
        return Err(Error::ZeroVector);
    }
    Ok(x)
}
