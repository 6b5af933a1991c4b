//! k-way spectral partitioning: cut metrics, k-means, the direct dense
//! spectral method and the multilevel eigensolver on a reduction hierarchy.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{gram_schmidt, symmetric_eigen, SymmetricEigen};
use crate::pipeline::{spectral_reduce, Hierarchy, ReduceOptions};
use crate::refine::{eigen_smooth, BMode, DEFAULT_SMOOTH_ITERS, DEFAULT_THETA};

/// Largest coarsest level handed to the dense eigensolver.
pub const COARSEST_DENSE_LIMIT: usize = 3000;

/// Above this many nodes the direct method is reported as slow.
pub const DIRECT_WARN_NODES: usize = 5000;

const KMEANS_RESTARTS: usize = 5;
const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutType {
    Ratio,
    Normalized,
}

impl CutType {
    pub fn b_mode(self) -> BMode {
        match self {
            CutType::Ratio => BMode::Identity,
            CutType::Normalized => BMode::Degree,
        }
    }
}

impl std::str::FromStr for CutType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ratio" => Ok(CutType::Ratio),
            "normalized" | "ncut" => Ok(CutType::Normalized),
            other => Err(Error::invalid(format!("unknown cut type '{other}' (ratio|normalized)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Every label in `0..k` must be used.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Partition> {
        let mut used = vec![false; k];
        for &l in &labels {
            if l >= k {
                return Err(Error::IndexOutOfRange { index: l, n: k });
            }
            used[l] = true;
        }
        if let Some(c) = used.iter().position(|u| !u) {
            return Err(Error::EmptyCluster(c));
        }
        Ok(Partition { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.labels.len() * 3);
        for l in &self.labels {
            let _ = writeln!(out, "{l}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    pub edge_cut: f64,
    pub ratio_cut: f64,
    pub normalized_cut: f64,
}

/// k-way cut objectives. `edge_cut` is `Σ_i C(S_i, S̄_i)`, so each boundary
/// edge is counted once from either side.
pub fn cut_metrics(g: &Graph, part: &Partition) -> Result<CutReport> {
    if part.labels.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: part.labels.len(),
        });
    }
    let k = part.k;
    let mut cut = vec![0.0; k];
    let mut vol = vec![0.0; k];
    let mut size = vec![0usize; k];
    for &l in &part.labels {
        size[l] += 1;
    }
    for e in g.edges() {
        let (a, b) = (part.labels[e.p], part.labels[e.q]);
        vol[a] += e.w;
        vol[b] += e.w;
        if a != b {
            cut[a] += e.w;
            cut[b] += e.w;
        }
    }
    if let Some(c) = size.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(c));
    }
    let mut r = CutReport {
        edge_cut: 0.0,
        ratio_cut: 0.0,
        normalized_cut: 0.0,
    };
    for i in 0..k {
        r.edge_cut += cut[i];
        r.ratio_cut += cut[i] / size[i] as f64;
        if cut[i] > 0.0 {
            r.normalized_cut += cut[i] / vol[i];
        }
    }
    Ok(r)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub partition: Partition,
    pub inertia: f64,
    pub centers: Vec<Vec<f64>>,
}

/// k-means++ seeding and Lloyd iterations, best of five restarts by inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<KMeansResult> {
    let n = points.len();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if n < k {
        return Err(Error::invalid(format!("cannot form {k} clusters from {n} points")));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64, Vec<Vec<f64>>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let centers = plus_plus(points, k, &mut rng);
        let (labels, inertia, centers) = lloyd(points, centers, max_iter);
        if best.as_ref().is_none_or(|b| inertia < b.1) {
            best = Some((labels, inertia, centers));
        }
    }
    let (labels, inertia, centers) = best.expect("at least one restart");
    Ok(KMeansResult {
        partition: Partition::new(labels, k)?,
        inertia,
        centers,
    })
}

fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            // guard against landing on a zero-weight tail through rounding
            if d2[idx] == 0.0 {
                idx = d2.iter().rposition(|&d| d > 0.0).unwrap_or(idx);
            }
            idx
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(pick);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[pick]));
        }
    }
    chosen.iter().map(|&i| points[i].clone()).collect()
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize]) -> (bool, f64) {
    let mut changed = false;
    let mut inertia = 0.0;
    for (p, l) in points.iter().zip(labels.iter_mut()) {
        let mut best = (0, f64::INFINITY);
        for (c, ctr) in centers.iter().enumerate() {
            let d = sq_dist(p, ctr);
            if d < best.1 {
                best = (c, d);
            }
        }
        if *l != best.0 {
            *l = best.0;
            changed = true;
        }
        inertia += best.1;
    }
    (changed, inertia)
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> (Vec<usize>, f64, Vec<Vec<f64>>) {
    let k = centers.len();
    let dim = points[0].len();
    let mut labels = vec![usize::MAX; points.len()];
    for it in 0..max_iter.max(1) {
        let (changed, _) = assign(points, &centers, &mut labels);
        let repaired = repair_empty(points, &centers, &mut labels, k);
        if !changed && !repaired && it > 0 {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
    (labels, inertia, centers)
}

/// Gives every empty cluster the point of the largest cluster that sits
/// farthest from its center. Returns whether anything moved.
fn repair_empty(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize], k: usize) -> bool {
    let mut moved = false;
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return moved;
        };
        let largest = (0..k).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).expect("k >= 1");
        let far = (0..points.len())
            .filter(|&i| labels[i] == largest)
            .max_by(|&a, &b| {
                sq_dist(&points[a], &centers[largest])
                    .total_cmp(&sq_dist(&points[b], &centers[largest]))
                    .then(b.cmp(&a))
            })
            .expect("largest cluster is nonempty");
        labels[far] = empty;
        moved = true;
    }
}

/// Rows of the `n × k` matrix whose columns are `vectors`.
pub fn rows_of(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = vectors.first().map_or(0, Vec::len);
    (0..n).map(|i| vectors.iter().map(|v| v[i]).collect()).collect()
}

/// First `k` eigenpairs of `L u = λ B u` by a dense symmetric solve. For
/// `B = D` the problem is solved on `D^{-1/2} L D^{-1/2}` and mapped back,
/// each column rescaled to unit length.
pub fn dense_generalized_eigen(g: &Graph, k: usize, cut: CutType) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = g.n();
    if k > n {
        return Err(Error::CoarsestTooSmall { n, k });
    }
    let mut l = g.dense_laplacian();
    let scale: Option<Vec<f64>> = match cut {
        CutType::Ratio => None,
        CutType::Normalized => {
            let d = g.degrees();
            if let Some(p) = d.iter().position(|&x| x <= 0.0) {
                return Err(Error::ZeroDegree(p));
            }
            let s: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
            for i in 0..n {
                for j in 0..n {
                    l[i * n + j] *= s[i] * s[j];
                }
            }
            Some(s)
        }
    };
    let SymmetricEigen { values, vectors } = symmetric_eigen(&l, n)?;
    let mut vecs: Vec<Vec<f64>> = vectors.into_iter().take(k).collect();
    if let Some(s) = scale {
        for v in &mut vecs {
            v.iter_mut().zip(&s).for_each(|(x, si)| *x *= si);
            crate::linalg::normalize(v);
        }
    }
    Ok((values.into_iter().take(k).collect(), vecs))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub t_reduce_s: f64,
    pub t_eigs_s: f64,
    pub t_smooth_s: f64,
    pub t_kmeans_s: f64,
    pub t_total_s: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralPartition {
    pub partition: Partition,
    pub report: CutReport,
    pub timings: Timings,
    /// Eigenvalues of the level where the eigensolve ran.
    pub eigenvalues: Vec<f64>,
}

/// Direct spectral partitioning: dense eigensolve of the whole graph.
pub fn direct_spectral_partition(g: &Graph, k: usize, cut: CutType, seed: u64) -> Result<SpectralPartition> {
    if k < 2 {
        return Err(Error::invalid("k must be at least 2"));
    }
    let start = Instant::now();
    let (values, vecs) = dense_generalized_eigen(g, k, cut)?;
    let t_eigs = start.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let km = kmeans(&rows_of(&vecs), k, seed, KMEANS_MAX_ITER)?;
    let t_kmeans = t0.elapsed().as_secs_f64();
    let report = cut_metrics(g, &km.partition)?;
    Ok(SpectralPartition {
        partition: km.partition,
        report,
        timings: Timings {
            t_reduce_s: 0.0,
            t_eigs_s: t_eigs,
            t_smooth_s: 0.0,
            t_kmeans_s: t_kmeans,
            t_total_s: start.elapsed().as_secs_f64(),
        },
        eigenvalues: values,
    })
}

#[derive(Debug, Clone)]
pub struct MultilevelEigen {
    /// `k` unit, mutually orthogonal columns on the finest level.
    pub vectors: Vec<Vec<f64>>,
    pub coarse_values: Vec<f64>,
    pub t_eigs_s: f64,
    pub t_smooth_s: f64,
}

/// Dense solve on the coarsest level, then lift and smooth level by level
/// against the coarsest eigenvalues, and orthonormalize at the finest level.
pub fn multilevel_eigensolver(h: &Hierarchy, k: usize, cut: CutType, theta: f64, smooth_iters: usize) -> Result<MultilevelEigen> {
    let coarse = h.coarsest();
    if coarse.n() < k {
        return Err(Error::CoarsestTooSmall { n: coarse.n(), k });
    }
    if coarse.n() > COARSEST_DENSE_LIMIT {
        return Err(Error::TooLargeForDense {
            n: coarse.n(),
            limit: COARSEST_DENSE_LIMIT,
        });
    }
    let t0 = Instant::now();
    let (values, mut vecs) = dense_generalized_eigen(coarse, k, cut)?;
    let t_eigs = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let mode = cut.b_mode();
    for j in (0..h.levels().len() - 1).rev() {
        let map = &h.maps()[j];
        let fine = &h.levels()[j];
        for (i, v) in vecs.iter_mut().enumerate() {
            let lifted = map.lift(v)?;
            *v = eigen_smooth(fine, mode, values[i], &lifted, theta, smooth_iters)?;
        }
    }
    let rank = gram_schmidt(&mut vecs);
    if rank < k {
        return Err(Error::Eigen(format!("lifted eigenvectors have rank {rank} < {k}")));
    }
    Ok(MultilevelEigen {
        vectors: vecs,
        coarse_values: values,
        t_eigs_s: t_eigs,
        t_smooth_s: t1.elapsed().as_secs_f64(),
    })
}

/// Reduce, solve on the hierarchy, cluster the rows and score the cut on `g`.
pub fn multilevel_spectral_partition(
    g: &Graph,
    k: usize,
    opts: &ReduceOptions,
    cut: CutType,
    seed: u64,
) -> Result<SpectralPartition> {
    if k < 2 {
        return Err(Error::invalid("k must be at least 2"));
    }
    let start = Instant::now();
    let h = spectral_reduce(g, opts)?;
    multilevel_partition_on(&h, g, k, cut, seed, start)
}

/// Partition using an existing hierarchy whose finest level is `g`.
pub fn multilevel_partition_on(
    h: &Hierarchy,
    g: &Graph,
    k: usize,
    cut: CutType,
    seed: u64,
    start: Instant,
) -> Result<SpectralPartition> {
    let t_reduce = start.elapsed().as_secs_f64();
    let eig = multilevel_eigensolver(h, k, cut, DEFAULT_THETA, DEFAULT_SMOOTH_ITERS)?;
    let t0 = Instant::now();
    let km = kmeans(&rows_of(&eig.vectors), k, seed, KMEANS_MAX_ITER)?;
    let t_kmeans = t0.elapsed().as_secs_f64();
    let report = cut_metrics(g, &km.partition)?;
    Ok(SpectralPartition {
        partition: km.partition,
        report,
        timings: Timings {
            t_reduce_s: t_reduce,
            t_eigs_s: eig.t_eigs_s,
            t_smooth_s: eig.t_smooth_s,
            t_kmeans_s: t_kmeans,
            t_total_s: start.elapsed().as_secs_f64(),
        },
        eigenvalues: eig.coarse_values,
    })
}
