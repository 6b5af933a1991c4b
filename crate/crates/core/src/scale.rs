//! Extreme generalized eigenvalue estimates of `L_P⁺ L_G` and the
//! constrained momentum-SGD edge scaling of the sparsifier.
//!
//! Scaling P's weights up lowers `λmax`. The smallest eigenvalue drops too,
//! so every weight update is clamped to keep the degree-ratio estimate of
//! `λmin` above `λmin⁽ᵏ⁾ · Δ̄^(1/K_max)` per iteration, hence above
//! `λmin⁽⁰⁾ · Δ̄` overall.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{random_orthogonal_to_ones, scale};
use crate::linsolve::LaplacianSolver;
use crate::sparsify::{pencil_apply, pencil_solver, power_vectors, Sparsifier};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdParams {
    /// Momentum coefficient.
    pub alpha: f64,
    pub eta_max: f64,
    /// Stop once the relative λmax decrease falls below this.
    pub epsilon: f64,
    pub k_max: usize,
    /// Allowed overall reduction factor of λmin.
    pub delta_bar: f64,
    /// Power steps for the per-iteration sensitivity vector.
    pub t: usize,
    /// Minimum power iterations per λmax estimate.
    pub lambda_iters: usize,
    /// Extra iterations continue until the Rayleigh quotient moves by less
    /// than `lambda_tol` (relative), up to `lambda_max_iters`.
    pub lambda_tol: f64,
    pub lambda_max_iters: usize,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams {
            alpha: 0.5,
            eta_max: 0.2,
            epsilon: 0.01,
            k_max: 100,
            delta_bar: 0.5,
            t: 2,
            lambda_iters: 10,
            lambda_tol: 1e-13,
            lambda_max_iters: 500,
        }
    }
}

impl SgdParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("momentum alpha must lie in [0, 1), got {}", self.alpha)));
        }
        if !(self.eta_max > 0.0 && self.eta_max.is_finite()) {
            return Err(Error::invalid(format!("eta_max must be positive, got {}", self.eta_max)));
        }
        if !(self.delta_bar > 0.0 && self.delta_bar <= 1.0) {
            return Err(Error::invalid(format!("delta_bar must lie in (0, 1], got {}", self.delta_bar)));
        }
        if self.k_max == 0 {
            return Err(Error::invalid("k_max must be at least 1"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon must be nonnegative"));
        }
        if self.t == 0 || self.lambda_iters == 0 {
            return Err(Error::invalid("power iteration counts must be at least 1"));
        }
        Ok(())
    }
}

/// Power iteration on the pencil with a Rayleigh-quotient stopping rule.
/// Returns the estimate and the final iterate (normalized, `hᵀ L_P h = 1`).
fn dominant(
    g: &Graph,
    p: &Graph,
    solver: &LaplacianSolver<'_>,
    mut h: Vec<f64>,
    min_iters: usize,
    max_iters: usize,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let mut lambda = f64::NAN;
    let mut it = 0;
    while it < max_iters.max(min_iters) {
        h = pencil_apply(g, solver, &h)?;
        it += 1;
        let lg = g.quadratic_form(&h)?;
        let lp = p.quadratic_form(&h)?;
        if !(lp > 0.0) {
            return Err(Error::ZeroVector);
        }
        scale(&mut h, 1.0 / lp.sqrt());
        let next = lg / lp;
        let settled = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if it >= min_iters && settled {
            break;
        }
    }
    Ok((lambda, h))
}

/// Rayleigh quotient `hᵀL_G h / hᵀL_P h` after `iters` applications of
/// `L_P⁺ L_G` to a seeded random start vector. Never exceeds the true λmax.
pub fn estimate_lambda_max(g: &Graph, s: &Sparsifier, iters: usize, seed: u64) -> Result<f64> {
    if iters == 0 {
        return Err(Error::invalid("power iteration count must be at least 1"));
    }
    let p = s.base();
    if p.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: p.n(),
        });
    }
    let solver = pencil_solver(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h0 = random_orthogonal_to_ones(g.n(), &mut rng);
    Ok(dominant(g, p, &solver, h0, iters, iters, 0.0)?.0)
}

/// `min_p d_G(p) / d_P(p)`, the best single-node indicator bound on λmin.
pub fn estimate_lambda_min(d_g: &[f64], d_p: &[f64]) -> Result<f64> {
    if d_g.len() != d_p.len() {
        return Err(Error::DimensionMismatch {
            expected: d_g.len(),
            got: d_p.len(),
        });
    }
    let mut best = f64::INFINITY;
    for (i, (&a, &b)) in d_g.iter().zip(d_p).enumerate() {
        if !(b > 0.0) {
            return Err(Error::ZeroDegree(i));
        }
        best = best.min(a / b);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `(λmax⁽ᵏ⁻¹⁾ − λmax⁽ᵏ⁾) / λmax⁽ᵏ⁾`
    pub rel_change: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingResult {
    pub sparsifier: Sparsifier,
    pub lambda_min0: f64,
    pub lambda_max0: f64,
    /// One row per executed weight-update pass.
    pub trace: Vec<TraceRow>,
}

impl ScalingResult {
    pub fn final_lambdas(&self) -> (f64, f64) {
        self.trace
            .last()
            .map_or((self.lambda_min0, self.lambda_max0), |r| (r.lambda_min, r.lambda_max))
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("k,lambda_min,lambda_max,rel_change\n");
        for r in &self.trace {
            let _ = writeln!(out, "{},{:.12e},{:.12e},{:.6e}", r.k, r.lambda_min, r.lambda_max, r.rel_change);
        }
        out
    }
}

/// Scales up the edge weights of `s` by constrained momentum SGD.
///
/// Each pass draws a fresh seeded vector `h = (L_P⁺L_G)ᵗ h₀` normalized to
/// `hᵀL_P h = 1`, takes the sensitivity `−λmax (h(p) − h(q))²` for every P
/// edge in canonical order, and applies the momentum update subject to the
/// degree-ratio guard. Passes stop once the relative λmax decrease drops
/// below `epsilon` or after `k_max` passes.
pub fn sgd_edge_scaling(g: &Graph, s: &Sparsifier, params: &SgdParams, seed: u64) -> Result<ScalingResult> {
    params.validate()?;
    let n = g.n();
    if s.base().n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.base().n(),
        });
    }
    let d_g = g.degrees();
    let mut p = s.clone();
    let mut d_p = p.base().degrees().0;
    let mut w: Vec<f64> = p.base().edges().iter().map(|e| e.w).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let lambda_min0 = estimate_lambda_min(&d_g, &d_p)?;
    let (lambda_max0, mut h_dom) = {
        let solver = pencil_solver(p.base())?;
        let h0 = random_orthogonal_to_ones(n, &mut rng);
        dominant(g, p.base(), &solver, h0, params.lambda_iters, params.lambda_max_iters, params.lambda_tol)?
    };
    let step_floor = params.delta_bar.powf(1.0 / params.k_max as f64);
    let mut eta = params.eta_max;
    let mut dw = vec![0.0; w.len()];
    let (mut lam1, mut lamn) = (lambda_min0, lambda_max0);
    let mut rel = f64::INFINITY;
    let mut trace = Vec::new();
    let mut k = 1;
    while rel >= params.epsilon && k <= params.k_max {
        let h = power_vectors(g, p.base(), params.t, 1, rng_seed(&mut rng))?;
        let Some(h) = h.into_iter().next() else { break };
        let bound = lam1 * step_floor;
        for (i, e) in p.base().edges().iter().enumerate() {
            let (a, b) = (e.p, e.q);
            let diff = h[a] - h[b];
            let sens = -lamn * diff * diff;
            let mut step = params.alpha * dw[i] - eta * sens;
            let phi_a = d_g[a] / (d_p[a] + step);
            let phi_b = d_g[b] / (d_p[b] + step);
            if phi_a.min(phi_b) <= bound {
                let step_a = d_g[a] / bound - d_p[a];
                let step_b = d_g[b] / bound - d_p[b];
                step = step_a.min(step_b).max(0.0);
            }
            dw[i] = step;
            w[i] += step;
            d_p[a] += step;
            d_p[b] += step;
        }
        eta = lamn / lambda_max0 * params.eta_max;
        k += 1;
        p = p.with_weights(&w)?;
        lam1 = estimate_lambda_min(&d_g, &d_p)?;
        let solver = pencil_solver(p.base())?;
        let (next, hv) = dominant(
            g,
            p.base(),
            &solver,
            h_dom,
            params.lambda_iters,
            params.lambda_max_iters,
            params.lambda_tol,
        )?;
        h_dom = hv;
        rel = (lamn - next) / next;
        lamn = next;
        trace.push(TraceRow {
            k: k - 1,
            lambda_min: lam1,
            lambda_max: lamn,
            rel_change: rel,
        });
    }
    log::debug!(
        "edge scaling: {} passes, lambda_min {lambda_min0:.4} -> {lam1:.4}, lambda_max {lambda_max0:.4} -> {lamn:.4}",
        trace.len()
    );
    Ok(ScalingResult {
        sparsifier: p,
        lambda_min0,
        lambda_max0,
        trace,
    })
}

fn rng_seed(rng: &mut ChaCha8Rng) -> u64 {
    use rand::Rng;
    rng.random()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::sparsify::spanning_tree;
    use rand::Rng;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    fn random_connected(n: usize, extra: usize, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut es: Vec<(usize, usize, f64)> = (1..n)
            .map(|i| (rng.random_range(0..i), i, rng.random_range(0.2..3.0)))
            .collect();
        for _ in 0..extra {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b {
                es.push((a, b, rng.random_range(0.2..3.0)));
            }
        }
        Graph::from_edges(n, es).unwrap()
    }

    #[test]
    fn lambda_max_examples() {
        let g = triangle();
        let full = Sparsifier::full(&g).unwrap();
        assert!((estimate_lambda_max(&g, &full, 3, 1).unwrap() - 1.0).abs() < 1e-12);
        let tree = spanning_tree(&g).unwrap();
        assert!((estimate_lambda_max(&g, &tree, 10, 1).unwrap() - 3.0).abs() < 1e-6);
        let star = Graph::from_edges(5, (1..5).map(|i| (0, i, 1.0))).unwrap();
        let st = spanning_tree(&star).unwrap();
        assert!((estimate_lambda_max(&star, &st, 4, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_min_examples() {
        assert_eq!(estimate_lambda_min(&[2.0, 2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(estimate_lambda_min(&[2.0, 2.0, 2.0], &[1.0, 2.0, 1.0]).unwrap(), 1.0);
        assert_eq!(estimate_lambda_min(&[4.0, 4.0, 4.0], &[1.0, 2.0, 1.0]).unwrap(), 2.0);
        assert!(matches!(estimate_lambda_min(&[1.0, 1.0], &[1.0, 0.0]), Err(Error::ZeroDegree(1))));
        let ev = oracle::pencil_eigenvalues(
            &triangle().dense_laplacian(),
            &spanning_tree(&triangle()).unwrap().base().dense_laplacian(),
            3,
        );
        assert!((ev[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn params_are_validated() {
        let bad = [
            SgdParams { alpha: 1.0, ..Default::default() },
            SgdParams { eta_max: 0.0, ..Default::default() },
            SgdParams { delta_bar: 0.0, ..Default::default() },
            SgdParams { delta_bar: 1.5, ..Default::default() },
            SgdParams { k_max: 0, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
        assert!(SgdParams::default().validate().is_ok());
    }

    #[test]
    fn scaling_full_graph_is_a_fixed_point() {
        let g = random_connected(20, 20, 3);
        let full = Sparsifier::full(&g).unwrap();
        let r = sgd_edge_scaling(&g, &full, &SgdParams::default(), 1).unwrap();
        assert!(r.trace.len() <= 1);
        for (a, b) in r.sparsifier.base().edges().iter().zip(g.edges()) {
            assert!((a.w - b.w).abs() <= 0.01 * b.w);
        }
    }

    #[test]
    fn scaling_triangle() {
        let g = triangle();
        let tree = spanning_tree(&g).unwrap();
        let params = SgdParams {
            k_max: 50,
            delta_bar: 0.5,
            ..Default::default()
        };
        let r = sgd_edge_scaling(&g, &tree, &params, 4).unwrap();
        let ev = oracle::pencil_eigenvalues(&g.dense_laplacian(), &r.sparsifier.base().dense_laplacian(), 3);
        assert!(ev[1] < 3.0);
        assert!(ev[0] >= 0.5 - 1e-9);
        let (l1, ln) = r.final_lambdas();
        assert!(ln < 3.0 && l1 >= 0.5);
    }

    #[test]
    fn k_max_one_runs_one_pass() {
        let g = random_connected(30, 40, 8);
        let tree = spanning_tree(&g).unwrap();
        let params = SgdParams {
            k_max: 1,
            ..Default::default()
        };
        let r = sgd_edge_scaling(&g, &tree, &params, 0).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert!(r.trace_csv().lines().count() == 2);
    }

    #[test]
    fn estimators_bracket_true_extremes() {
        for seed in 0..15 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(5..40);
            let g = random_connected(n, 2 * n, seed);
            let s = spanning_tree(&g).unwrap();
            let ev = oracle::pencil_eigenvalues(&g.dense_laplacian(), &s.base().dense_laplacian(), n);
            let lo = estimate_lambda_min(&g.degrees(), &s.base().degrees()).unwrap();
            let hi = estimate_lambda_max(&g, &s, 15, seed).unwrap();
            assert!(lo >= ev[0] - 1e-9);
            assert!(hi <= ev[n - 2] + 1e-9);
        }
    }

    #[test]
    fn scaled_weights_stay_positive_and_trace_monotone() {
        for seed in 0..6 {
            let g = random_connected(60, 120, 40 + seed);
            let s = spanning_tree(&g).unwrap();
            let r = sgd_edge_scaling(&g, &s, &SgdParams::default(), seed).unwrap();
            assert!(r.sparsifier.base().edges().iter().all(|e| e.w > 0.0));
            let mut prev = r.lambda_max0;
            for row in &r.trace {
                assert!(row.lambda_max <= prev + 1e-9, "{row:?} after {prev}");
                prev = row.lambda_max;
                assert!(row.lambda_min >= r.lambda_min0 * 0.5 - 1e-9);
            }
        }
    }
}
