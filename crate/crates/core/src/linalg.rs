//! Small vector kernels and the dense symmetric eigensolver used on coarse graphs.

use faer::{Mat, Side};
use rand::Rng;

use crate::error::{Error, Result};

/// Largest matrix handed to the dense eigensolver.
pub const DENSE_EIGEN_LIMIT: usize = 8000;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &mut [f64], s: f64) {
    a.iter_mut().for_each(|x| *x *= s);
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Removes the all-ones component.
pub fn project_out_ones(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

/// Returns false if the vector is (numerically) zero and was left untouched.
pub fn normalize(x: &mut [f64]) -> bool {
    let nrm = norm(x);
    if nrm == 0.0 || !nrm.is_finite() {
        return false;
    }
    scale(x, 1.0 / nrm);
    true
}

/// Uniform entries in `[-0.5, 0.5]` with the all-ones component removed.
pub fn random_orthogonal_to_ones<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    project_out_ones(&mut x);
    x
}

/// Modified Gram–Schmidt on the columns in place. Columns that collapse to
/// zero are replaced by a zero vector; returns how many stayed independent.
pub fn gram_schmidt(cols: &mut [Vec<f64>]) -> usize {
    let mut rank = 0;
    for i in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(i);
        let v = &mut rest[0];
        let before = norm(v);
        for _ in 0..2 {
            for u in done.iter() {
                let c = dot(u, v);
                axpy(-c, u, v);
            }
        }
        let after = norm(v);
        if after > 1e-12 * before.max(f64::MIN_POSITIVE) && after > 0.0 {
            scale(v, 1.0 / after);
            rank += 1;
        } else {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    rank
}

/// Eigen-decomposition of a dense symmetric row-major matrix.
/// Eigenvalues ascend; `vectors[i]` pairs with `values[i]`.
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

fn to_faer(a: &[f64], n: usize) -> Result<Mat<f64>> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.len(),
        });
    }
    if n > DENSE_EIGEN_LIMIT {
        return Err(Error::TooLargeForDense {
            n,
            limit: DENSE_EIGEN_LIMIT,
        });
    }
    Ok(Mat::from_fn(n, n, |i, j| a[i * n + j]))
}

pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<SymmetricEigen> {
    if n == 0 {
        return Ok(SymmetricEigen {
            values: vec![],
            vectors: vec![],
        });
    }
    let m = to_faer(a, n)?;
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let values = order.iter().map(|&i| s[i]).collect();
    let vectors = order
        .iter()
        .map(|&j| (0..n).map(|i| u[(i, j)]).collect())
        .collect();
    Ok(SymmetricEigen { values, vectors })
}

pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(vec![]);
    }
    let m = to_faer(a, n)?;
    let mut v = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}
