//! Exact t-SNE and its multilevel variant on spectrally reduced kNN graphs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::MappingOperator;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pipeline::{reduce_each_component, ReduceOptions};

/// Feature matrix, one sample per row, with optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    data: Vec<f64>,
    labels: Option<Vec<usize>>,
    label_names: Vec<String>,
}

impl Dataset {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Dataset> {
        if n < 2 {
            return Err(Error::invalid(format!("dataset needs at least 2 samples, got {n}")));
        }
        if d == 0 {
            return Err(Error::invalid("dataset needs at least one feature column"));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(Dataset {
            n,
            d,
            data,
            labels: None,
            label_names: Vec::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Dataset> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        Dataset::new(rows.len(), d, rows.concat())
    }

    /// Attaches labels; `names[l]` is the display name of label id `l`. With an
    /// empty `names`, ids are their own names.
    pub fn with_labels(mut self, labels: Vec<usize>, names: Vec<String>) -> Result<Dataset> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: labels.len(),
            });
        }
        let names = if names.is_empty() {
            let m = labels.iter().max().map_or(0, |&m| m + 1);
            (0..m).map(|i| i.to_string()).collect()
        } else {
            names
        };
        if let Some(&l) = labels.iter().find(|&&l| l >= names.len()) {
            return Err(Error::IndexOutOfRange {
                index: l,
                n: names.len(),
            });
        }
        self.labels = Some(labels);
        self.label_names = names;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn pairwise_sq(f: &Dataset) -> Vec<f64> {
    let n = f.n();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(f.row(i), f.row(j));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnWeights {
    #[default]
    Unit,
    /// `exp(−d² / s²)` with `s²` the mean squared neighbor distance.
    Gaussian,
}

/// Symmetrized exact kNN graph with unit weights.
pub fn knn_graph(f: &Dataset, k: usize) -> Result<Graph> {
    knn_graph_weighted(f, k, KnnWeights::Unit)
}

pub fn knn_graph_weighted(f: &Dataset, k: usize, weights: KnnWeights) -> Result<Graph> {
    let n = f.n();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("need 1 <= k < n for a kNN graph, got k={k}, n={n}")));
    }
    let mut pairs: Vec<(usize, usize, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut cand: Vec<(f64, usize)> =
                (0..n).filter(|&j| j != i).map(|j| (sq_dist(f.row(i), f.row(j)), j)).collect();
            cand.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            cand.into_iter().map(move |(d2, j)| (i.min(j), i.max(j), d2))
        })
        .collect();
    pairs.sort_by_key(|x| (x.0, x.1));
    pairs.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
    let s2 = match weights {
        KnnWeights::Unit => 1.0,
        KnnWeights::Gaussian => {
            let m = pairs.iter().map(|p| p.2).sum::<f64>() / pairs.len() as f64;
            if m > 0.0 {
                m
            } else {
                1.0
            }
        }
    };
    Graph::from_edges(
        n,
        pairs.into_iter().map(|(a, b, d2)| {
            let w = match weights {
                KnnWeights::Unit => 1.0,
                KnnWeights::Gaussian => (-d2 / s2).exp().max(f64::MIN_POSITIVE),
            };
            (a, b, w)
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureReduction {
    /// Cluster means.
    #[default]
    Mean,
    /// Plain cluster sums `H F`.
    Sum,
}

/// Coarse feature rows per cluster. Labels, when present, become the
/// cluster's majority label (ties to the smaller id).
pub fn reduce_features(f: &Dataset, h: &MappingOperator, mode: FeatureReduction) -> Result<Dataset> {
    if h.n_fine() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            got: h.n_fine(),
        });
    }
    let (nc, d) = (h.n_coarse(), f.d());
    let mut data = vec![0.0; nc * d];
    let sizes = h.cluster_sizes();
    for (i, &c) in h.cluster_of().iter().enumerate() {
        let row = &mut data[c * d..(c + 1) * d];
        row.iter_mut().zip(f.row(i)).for_each(|(a, b)| *a += b);
    }
    if mode == FeatureReduction::Mean {
        for c in 0..nc {
            let s = sizes[c] as f64;
            data[c * d..(c + 1) * d].iter_mut().for_each(|a| *a /= s);
        }
    }
    let mut out = Dataset {
        n: nc,
        d,
        data,
        labels: None,
        label_names: Vec::new(),
    };
    if let Some(labels) = f.labels() {
        out.labels = Some(majority_labels(labels, h, f.label_names().len()));
        out.label_names = f.label_names().to_vec();
    }
    Ok(out)
}

/// Most frequent fine label per coarse node.
pub fn majority_labels(labels: &[usize], h: &MappingOperator, n_labels: usize) -> Vec<usize> {
    let mut counts = vec![0usize; h.n_coarse() * n_labels.max(1)];
    for (i, &c) in h.cluster_of().iter().enumerate() {
        counts[c * n_labels + labels[i]] += 1;
    }
    (0..h.n_coarse())
        .map(|c| {
            let row = &counts[c * n_labels..(c + 1) * n_labels];
            let mut best = 0;
            for (l, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = l;
                }
            }
            best
        })
        .collect()
}

/// Symmetric joint probabilities, stored densely (`n × n`, zero diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    p: Vec<f64>,
}

impl AffinityMatrix {
    /// From a dense row-major matrix; must be symmetric, nonnegative, with a
    /// zero diagonal and unit total.
    pub fn from_dense(n: usize, p: Vec<f64>) -> Result<AffinityMatrix> {
        if p.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: p.len(),
            });
        }
        for i in 0..n {
            if p[i * n + i] != 0.0 {
                return Err(Error::invalid("affinity diagonal must be zero"));
            }
            for j in 0..i {
                if p[i * n + j] != p[j * n + i] || !(p[i * n + j] >= 0.0) {
                    return Err(Error::invalid("affinities must be symmetric and nonnegative"));
                }
            }
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!("affinities sum to {s}, not 1")));
        }
        Ok(AffinityMatrix { n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

const PERPLEXITY_TOL: f64 = 1e-5;
const MAX_BISECTIONS: usize = 200;

/// Conditional distribution of row `i` at precision `beta`; returns the
/// entropy in bits.
fn conditional_row(d2: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let dmin = d2
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, (o, &v)) in out.iter_mut().zip(d2).enumerate() {
        *o = if j == i { 0.0 } else { (-beta * (v - dmin)).exp() };
        sum += *o;
    }
    let mut h = 0.0;
    for o in out.iter_mut() {
        *o /= sum;
        if *o > 0.0 {
            h -= *o * o.log2();
        }
    }
    h
}

/// Row-wise bisection on the precision; returns the conditionals, the
/// achieved perplexity per row and the number of uniform fallbacks.
fn calibrate_rows(d2: &[f64], n: usize, perplexity: f64) -> (Vec<f64>, Vec<f64>, usize) {
    let mut cond = vec![0.0; n * n];
    let perps: Vec<(f64, bool)> = cond
        .par_chunks_mut(n)
        .enumerate()
        .map(|(i, row)| calibrate_row(&d2[i * n..(i + 1) * n], i, perplexity, row))
        .collect();
    let fallbacks = perps.iter().filter(|p| !p.1).count();
    (cond, perps.into_iter().map(|p| p.0).collect(), fallbacks)
}

/// Bisection on the precision of row `i`; returns the achieved perplexity
/// and whether it met the tolerance (otherwise the row is made uniform).
fn calibrate_row(row_d: &[f64], i: usize, perplexity: f64, row: &mut [f64]) -> (f64, bool) {
    let n = row_d.len();
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut beta = 1.0;
    for _ in 0..MAX_BISECTIONS {
        let perp = conditional_row(row_d, i, beta, row).exp2();
        if (perp - perplexity).abs() <= PERPLEXITY_TOL {
            return (perp, true);
        }
        if perp > perplexity {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (lo + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (lo + hi);
        }
    }
    let u = 1.0 / (n - 1) as f64;
    row.iter_mut().enumerate().for_each(|(j, v)| *v = if j == i { 0.0 } else { u });
    ((n - 1) as f64, false)
}

fn check_perplexity(n: usize, perplexity: f64) -> Result<()> {
    if !(perplexity > 1.0 && perplexity < n as f64) {
        return Err(Error::invalid(format!("perplexity must lie in (1, {n}), got {perplexity}")));
    }
    Ok(())
}

/// Per-point Gaussian bandwidths matched to `perplexity` by bisection, then
/// `P_ij = (P_{j|i} + P_{i|j}) / 2N`.
pub fn perplexity_calibrate(f: &Dataset, perplexity: f64) -> Result<AffinityMatrix> {
    let n = f.n();
    check_perplexity(n, perplexity)?;
    let (cond, _, fallbacks) = calibrate_rows(&pairwise_sq(f), n, perplexity);
    if fallbacks > 0 {
        log::warn!("perplexity search did not converge for {fallbacks} point(s); using uniform conditionals");
    }
    let mut p = vec![0.0; n * n];
    let z = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..i {
            let v = (cond[i * n + j] + cond[j * n + i]) / z;
            p[i * n + j] = v;
            p[j * n + i] = v;
        }
    }
    Ok(AffinityMatrix { n, p })
}

/// Perplexity actually reached by each row's conditional distribution.
pub fn calibrated_perplexities(f: &Dataset, perplexity: f64) -> Result<Vec<f64>> {
    check_perplexity(f.n(), perplexity)?;
    Ok(calibrate_rows(&pairwise_sq(f), f.n(), perplexity).1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub min_gain: f64,
    pub max_gain: f64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            min_gain: 0.01,
            max_gain: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// `n × 2`, row-major.
    pub y: Vec<f64>,
    /// KL divergence against the true (unexaggerated) P, one per iteration.
    pub kl_trace: Vec<f64>,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.y.len() / 2
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        [self.y[2 * i], self.y[2 * i + 1]]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.y.chunks(2).map(<[f64]>::to_vec).collect()
    }
}

/// KL(P‖Q) for the Cauchy-kernel similarities of `y` (`n × 2`).
pub fn kl_divergence(p: &AffinityMatrix, y: &[f64]) -> Result<f64> {
    Ok(kl_gradient(p, y, 1.0)?.0)
}

/// KL cost and its exact gradient `4 Σ_j (p_ij − q_ij) q_ij Z (y_i − y_j)`,
/// with P multiplied by `exaggeration` in the gradient only.
pub fn kl_gradient(p: &AffinityMatrix, y: &[f64], exaggeration: f64) -> Result<(f64, Vec<f64>)> {
    let n = p.n();
    if y.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: y.len(),
        });
    }
    let mut num = vec![0.0; n * n];
    let mut z = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let dx = y[2 * i] - y[2 * j];
            let dy = y[2 * i + 1] - y[2 * j + 1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = v;
            num[j * n + i] = v;
            z += 2.0 * v;
        }
    }
    let mut grad = vec![0.0; 2 * n];
    let mut kl = 0.0;
    let pm = p.as_slice();
    for i in 0..n {
        let (mut gx, mut gy) = (0.0, 0.0);
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = num[i * n + j];
            let q = v / z;
            let pij = pm[i * n + j];
            let m = (exaggeration * pij - q) * v;
            gx += m * (y[2 * i] - y[2 * j]);
            gy += m * (y[2 * i + 1] - y[2 * j + 1]);
            if pij > 0.0 {
                kl += pij * (pij / q.max(f64::MIN_POSITIVE)).ln();
            }
        }
        grad[2 * i] = 4.0 * gx;
        grad[2 * i + 1] = 4.0 * gy;
    }
    if cfg!(debug_assertions) {
        let qsum: f64 = num.iter().sum::<f64>() / z;
        debug_assert!((qsum - 1.0).abs() < 1e-9, "q sums to {qsum}");
    }
    Ok((kl.max(0.0), grad))
}

/// Gradient descent with momentum and per-coordinate gains.
pub fn tsne_embed(p: &AffinityMatrix, params: &TsneParams, seed: u64) -> Result<Embedding> {
    let n = p.n();
    if !(params.learning_rate > 0.0) || !(params.min_gain > 0.0) || params.max_gain < params.min_gain {
        return Err(Error::invalid("t-SNE learning rate and gains must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<f64> = (0..2 * n).map(|_| normal.sample(&mut rng)).collect();
    let mut update = vec![0.0; 2 * n];
    let mut gains = vec![1.0f64; 2 * n];
    let mut kl_trace = Vec::with_capacity(params.iterations);
    for it in 0..params.iterations {
        let ex = if it < params.exaggeration_iters {
            params.exaggeration
        } else {
            1.0
        };
        let (_, grad) = kl_gradient(p, &y, ex)?;
        let mom = if it < params.momentum_switch {
            params.momentum
        } else {
            params.final_momentum
        };
        for c in 0..2 * n {
            let same = (grad[c] > 0.0) == (update[c] > 0.0);
            gains[c] = if same { gains[c] * 0.8 } else { gains[c] + 0.2 };
            gains[c] = gains[c].clamp(params.min_gain, params.max_gain);
            update[c] = mom * update[c] - params.learning_rate * gains[c] * grad[c];
            y[c] += update[c];
        }
        let (mx, my) = (0..n).fold((0.0, 0.0), |(a, b), i| (a + y[2 * i], b + y[2 * i + 1]));
        let (mx, my) = (mx / n as f64, my / n as f64);
        for i in 0..n {
            y[2 * i] -= mx;
            y[2 * i + 1] -= my;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: f64::NAN,
            });
        }
        kl_trace.push(kl_divergence(p, &y)?);
    }
    Ok(Embedding { y, kl_trace })
}

#[derive(Debug, Clone)]
pub struct MultilevelTsne {
    pub embedding: Embedding,
    pub mapping: MappingOperator,
    pub reduced: Dataset,
    pub perplexity: f64,
}

/// kNN graph → spectral reduction → reduced features → calibration → t-SNE.
///
/// The reduction always sparsifies and scales the kNN graph before
/// aggregating it, and each connected component is reduced on its own. The
/// perplexity is lowered to `(n_reduced − 1) / 3` when the reduced set is
/// too small for the requested value.
pub fn multilevel_tsne(
    f: &Dataset,
    knn_k: usize,
    weights: KnnWeights,
    opts: &ReduceOptions,
    params: &TsneParams,
    seed: u64,
) -> Result<MultilevelTsne> {
    multilevel_tsne_with(f, knn_k, weights, FeatureReduction::Mean, opts, params, seed)
}

/// [`multilevel_tsne`] with a choice of how cluster features are formed.
pub fn multilevel_tsne_with(
    f: &Dataset,
    knn_k: usize,
    weights: KnnWeights,
    features: FeatureReduction,
    opts: &ReduceOptions,
    params: &TsneParams,
    seed: u64,
) -> Result<MultilevelTsne> {
    let g = knn_graph_weighted(f, knn_k, weights)?;
    let opts = ReduceOptions {
        force_phase_b_first: true,
        ..*opts
    };
    let mapping = reduce_each_component(&g, &opts)?;
    let reduced = reduce_features(f, &mapping, features)?;
    embed_reduced(reduced, mapping, params, seed)
}

/// Exact t-SNE of the full data set, reported with an identity mapping.
pub fn plain_tsne(f: &Dataset, params: &TsneParams, seed: u64) -> Result<MultilevelTsne> {
    embed_reduced(f.clone(), MappingOperator::identity(f.n()), params, seed)
}

fn embed_reduced(reduced: Dataset, mapping: MappingOperator, params: &TsneParams, seed: u64) -> Result<MultilevelTsne> {
    let cap = (reduced.n() as f64 - 1.0) / 3.0;
    let perplexity = if params.perplexity > cap {
        log::warn!(
            "perplexity {} too large for {} reduced points; using {cap:.2}",
            params.perplexity,
            reduced.n()
        );
        cap
    } else {
        params.perplexity
    };
    let p = perplexity_calibrate(&reduced, perplexity)?;
    let embedding = tsne_embed(&p, params, seed)?;
    Ok(MultilevelTsne {
        embedding,
        mapping,
        reduced,
        perplexity,
    })
}

/// `‖U Uᵀ v‖ / ‖v‖` for orthonormal columns `u`.
pub fn correlation_factor(v: &[f64], u: &[Vec<f64>]) -> Result<f64> {
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut proj = 0.0;
    for col in u {
        if col.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                got: col.len(),
            });
        }
        let c: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
        proj += c * c;
    }
    Ok((proj / vv).sqrt().min(1.0))
}

/// Mean silhouette coefficient of labeled points.
pub fn silhouette_score(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let n = points.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut size = vec![0usize; k];
    for &l in labels {
        size[l] += 1;
    }
    if size.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::invalid("silhouette needs at least two labeled groups"));
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[labels[j]] += sq_dist(&points[i], &points[j]).sqrt();
            }
        }
        let li = labels[i];
        if size[li] <= 1 {
            continue;
        }
        let a = sums[li] / (size[li] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != li && size[c] > 0)
            .map(|c| sums[c] / size[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}
