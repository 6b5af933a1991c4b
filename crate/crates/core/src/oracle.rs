//! Brute-force and dense reference computations for tests.
//!
//! Everything here works on dense row-major matrices or by exhaustive
//! enumeration and shares no numerical code with the library. The file is
//! also mounted by integration tests, so it only names `crate::graph::Graph`.
#![allow(dead_code)]

use crate::graph::Graph;

/// Gauss–Seidel sweeps on `L x = 0` from `x0`, then the mean removed.
pub fn dense_gauss_seidel(l: &[f64], n: usize, mut x: Vec<f64>, sweeps: usize) -> Vec<f64> {
    for _ in 0..sweeps {
        for p in 0..n {
            let diag = l[p * n + p];
            if diag == 0.0 {
                continue;
            }
            let off: f64 = (0..n).filter(|&q| q != p).map(|q| l[p * n + q] * x[q]).sum();
            x[p] = -off / diag;
        }
    }
    let m = x.iter().sum::<f64>() / n as f64;
    x.iter_mut().for_each(|v| *v -= m);
    x
}

/// `H L Hᵀ` with `H[c][p] = 1` iff `cluster_of[p] == c`, row-major `nc × nc`.
pub fn dense_galerkin(l: &[f64], n: usize, cluster_of: &[usize], nc: usize) -> Vec<f64> {
    let mut h = vec![0.0; nc * n];
    for (p, &c) in cluster_of.iter().enumerate() {
        h[c * n + p] = 1.0;
    }
    let hl = matmul(&h, nc, n, l, n);
    let ht = transpose(&h, nc, n);
    matmul(&hl, nc, n, &ht, nc)
}

pub fn matmul(a: &[f64], r: usize, k: usize, b: &[f64], c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        for t in 0..k {
            let v = a[i * k + t];
            if v != 0.0 {
                for j in 0..c {
                    out[i * c + j] += v * b[t * c + j];
                }
            }
        }
    }
    out
}

pub fn transpose(a: &[f64], r: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..c {
            out[j * r + i] = a[i * c + j];
        }
    }
    out
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns ascending
/// eigenvalues and the matching unit eigenvectors.
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let vals = order.iter().map(|&i| m[i * n + i]).collect();
    let vecs = order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    (vals, vecs)
}

/// Orthonormal basis of the complement of the all-ones vector: columns
/// 2..n of the Householder reflector that maps `e_1` to `1/√n`.
fn ones_complement(n: usize) -> Vec<Vec<f64>> {
    let s = 1.0 / (n as f64).sqrt();
    let mut u = vec![s; n];
    u[0] -= 1.0;
    let uu: f64 = u.iter().map(|x| x * x).sum();
    (1..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let e = if i == j { 1.0 } else { 0.0 };
                    e - 2.0 * u[i] * u[j] / uu
                })
                .collect()
        })
        .collect()
}

fn lower_cholesky(a: &[f64], n: usize) -> Vec<f64> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = a[i * n + i] - s;
                assert!(d > 0.0, "matrix is not positive definite");
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    l
}

/// `L⁻¹ B` for lower-triangular `L` (`m × m`) and `B` (`m × c`).
fn forward_solve(l: &[f64], m: usize, b: &[f64], c: usize) -> Vec<f64> {
    let mut x = b.to_vec();
    for j in 0..c {
        for i in 0..m {
            let s: f64 = (0..i).map(|k| l[i * m + k] * x[k * c + j]).sum();
            x[i * c + j] = (x[i * c + j] - s) / l[i * m + i];
        }
    }
    x
}

/// Generalized eigenpairs of `(L_G, L_P)` restricted to the complement of
/// the all-ones vector: `n − 1` ascending values with `L_P`-normalized
/// eigenvectors in the original coordinates.
pub fn pencil_eigen(lg: &[f64], lp: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let q = ones_complement(n);
    let m = n - 1;
    let mut qm = vec![0.0; n * m];
    for (j, col) in q.iter().enumerate() {
        for i in 0..n {
            qm[i * m + j] = col[i];
        }
    }
    let qt = transpose(&qm, n, m);
    let a = matmul(&matmul(&qt, m, n, lg, n), m, n, &qm, m);
    let b = matmul(&matmul(&qt, m, n, lp, n), m, n, &qm, m);
    let r = lower_cholesky(&b, m);
    // C = R⁻¹ A R⁻ᵀ
    let ra = forward_solve(&r, m, &a, m);
    let c = transpose(&forward_solve(&r, m, &transpose(&ra, m, m), m), m, m);
    let c: Vec<f64> = (0..m * m).map(|i| 0.5 * (c[i] + c[(i % m) * m + i / m])).collect();
    let (vals, ys) = jacobi_eigen(&c, m);
    let rt = transpose(&r, m, m);
    let vecs = ys
        .iter()
        .map(|y| {
            // z = R⁻ᵀ y by back substitution, then x = Q z
            let mut z = y.clone();
            for i in (0..m).rev() {
                let s: f64 = (i + 1..m).map(|k| rt[i * m + k] * z[k]).sum();
                z[i] = (z[i] - s) / rt[i * m + i];
            }
            (0..n).map(|i| (0..m).map(|k| qm[i * m + k] * z[k]).sum()).collect()
        })
        .collect();
    (vals, vecs)
}

pub fn pencil_eigenvalues(lg: &[f64], lp: &[f64], n: usize) -> Vec<f64> {
    pencil_eigen(lg, lp, n).0
}

/// Central differences of `f` at `x` with step `h`.
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct Cuts {
    /// Σ over clusters of the weight leaving the cluster.
    pub edge_cut: f64,
    pub ratio_cut: f64,
    pub normalized_cut: f64,
}

/// Cut values of a labeling straight from the edge list.
pub fn cut_values(g: &Graph, labels: &[usize], k: usize) -> Cuts {
    let mut size = vec![0.0; k];
    let mut vol = vec![0.0; k];
    let mut out = vec![0.0; k];
    for &l in labels {
        size[l] += 1.0;
    }
    for e in g.edges() {
        vol[labels[e.p]] += e.w;
        vol[labels[e.q]] += e.w;
        if labels[e.p] != labels[e.q] {
            out[labels[e.p]] += e.w;
            out[labels[e.q]] += e.w;
        }
    }
    Cuts {
        edge_cut: out.iter().sum(),
        ratio_cut: (0..k).map(|c| out[c] / size[c]).sum(),
        normalized_cut: (0..k).map(|c| if vol[c] > 0.0 { out[c] / vol[c] } else { 0.0 }).sum(),
    }
}

/// Minimum ratio and normalized cut over all bipartitions, each minimized
/// separately (`edge_cut` belongs to the normalized-cut minimizer).
pub fn best_bipartition(g: &Graph) -> Cuts {
    let n = g.n();
    assert!((2..=24).contains(&n), "exhaustive search is for tiny graphs");
    let mut best = Cuts {
        edge_cut: f64::INFINITY,
        ratio_cut: f64::INFINITY,
        normalized_cut: f64::INFINITY,
    };
    // node n-1 is pinned to side 0
    for mask in 1u32..(1u32 << (n - 1)) {
        let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        let c = cut_values(g, &labels, 2);
        best.ratio_cut = best.ratio_cut.min(c.ratio_cut);
        if c.normalized_cut < best.normalized_cut {
            best.normalized_cut = c.normalized_cut;
            best.edge_cut = c.edge_cut;
        }
    }
    best
}

/// Smallest 2-means inertia over all splits, with a minimizing labeling.
pub fn best_two_means(points: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = points.len();
    assert!((2..=20).contains(&n));
    let d = points[0].len();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 1u32..(1u32 << (n - 1)) {
        let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        let mut inertia = 0.0;
        for side in 0..2 {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == side).map(|(p, _)| p).collect();
            let mean: Vec<f64> =
                (0..d).map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64).collect();
            inertia += members
                .iter()
                .map(|p| p.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .sum::<f64>();
        }
        if inertia < best.0 {
            best = (inertia, labels);
        }
    }
    best
}
