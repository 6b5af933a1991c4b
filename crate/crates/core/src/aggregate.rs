//! Spectrum-preserving node aggregation.
//!
//! Random vectors orthogonal to the all-ones vector are smoothed with a few
//! Gauss–Seidel sweeps on `L x = 0`. What survives is dominated by the smooth
//! (low-frequency) Laplacian modes, so two nodes whose rows of the smoothed
//! block are nearly parallel sit close together spectrally. The affinity
//!
//! ```text
//! a(p,q) = (X_p · X_q)² / ((X_p · X_p)(X_q · X_q))
//! ```
//!
//! drives a greedy aggregation into connected clusters, and the coarse graph
//! is the Galerkin product `H L Hᵀ` of the 0/1 aggregation matrix `H`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{project_out_ones, random_orthogonal_to_ones};

/// Smoothed test vectors, stored row-major (`n` rows of `k` entries) so a
/// node's embedding is contiguous.
#[derive(Debug, Clone)]
pub struct TestVectors {
    n: usize,
    k: usize,
    sweeps: usize,
    rows: Vec<f64>,
}

impl TestVectors {
    pub fn from_columns(columns: &[Vec<f64>], sweeps: usize) -> Result<TestVectors> {
        let k = columns.len();
        if k == 0 {
            return Err(Error::invalid("need at least one test vector"));
        }
        let n = columns[0].len();
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.len(),
            });
        }
        let mut rows = vec![0.0; n * k];
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                rows[i * k + j] = v;
            }
        }
        Ok(TestVectors { n, k, sweeps, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn row(&self, p: usize) -> &[f64] {
        &self.rows[p * self.k..(p + 1) * self.k]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.rows[i * self.k + j]).collect()
    }
}

/// Fine-to-coarse aggregation map. `cluster_of[p]` is the coarse node of
/// fine node `p`; as a matrix this is the 0/1 operator `H` with
/// `H[c][p] = 1` iff `cluster_of[p] == c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingOperator {
    cluster_of: Vec<usize>,
    n_coarse: usize,
}

impl MappingOperator {
    /// Every id in `0..=max` must be used by at least one fine node.
    pub fn new(cluster_of: Vec<usize>) -> Result<MappingOperator> {
        let max = cluster_of.iter().max().copied();
        if let Some(m) = max.filter(|&m| m >= cluster_of.len()) {
            return Err(Error::invalid(format!(
                "coarse id {m} exceeds fine node count {}",
                cluster_of.len()
            )));
        }
        let n_coarse = max.map_or(0, |m| m + 1);
        let mut used = vec![false; n_coarse];
        for &c in &cluster_of {
            used[c] = true;
        }
        if let Some(c) = used.iter().position(|u| !u) {
            return Err(Error::EmptyCluster(c));
        }
        Ok(MappingOperator {
            cluster_of,
            n_coarse,
        })
    }

    pub fn identity(n: usize) -> MappingOperator {
        MappingOperator {
            cluster_of: (0..n).collect(),
            n_coarse: n,
        }
    }

    pub fn n_fine(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn n_coarse(&self) -> usize {
        self.n_coarse
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn is_identity(&self) -> bool {
        self.n_coarse == self.cluster_of.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_coarse];
        for &c in &self.cluster_of {
            s[c] += 1;
        }
        s
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.n_coarse];
        for (p, &c) in self.cluster_of.iter().enumerate() {
            m[c].push(p);
        }
        m
    }

    /// Coarse-to-fine map `Hᵀ y`: every member copies its cluster's value.
    pub fn lift(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n_coarse {
            return Err(Error::DimensionMismatch {
                expected: self.n_coarse,
                got: y.len(),
            });
        }
        Ok(self.cluster_of.iter().map(|&c| y[c]).collect())
    }

    /// Fine-to-coarse map `H x`: cluster sums.
    pub fn restrict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_fine() {
            return Err(Error::DimensionMismatch {
                expected: self.n_fine(),
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_coarse];
        for (&c, &v) in self.cluster_of.iter().zip(x) {
            y[c] += v;
        }
        Ok(y)
    }

    /// `self` maps fine → mid, `next` maps mid → coarse; returns fine → coarse.
    pub fn compose(&self, next: &MappingOperator) -> Result<MappingOperator> {
        if next.n_fine() != self.n_coarse {
            return Err(Error::DimensionMismatch {
                expected: self.n_coarse,
                got: next.n_fine(),
            });
        }
        Ok(MappingOperator {
            cluster_of: self.cluster_of.iter().map(|&c| next.cluster_of[c]).collect(),
            n_coarse: next.n_coarse,
        })
    }
}

/// `k` Gauss–Seidel-smoothed test vectors for `L x = 0`.
pub fn gs_test_vectors(g: &Graph, k: usize, sweeps: usize, seed: u64) -> Result<TestVectors> {
    if k == 0 {
        return Err(Error::invalid("test vector count must be at least 1"));
    }
    if sweeps == 0 {
        return Err(Error::invalid("Gauss-Seidel sweep count must be at least 1"));
    }
    g.require_connected()?;
    let n = g.n();
    let d = g.degrees();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = Vec::with_capacity(k);
    for _ in 0..k {
        let mut x = random_orthogonal_to_ones(n, &mut rng);
        for _ in 0..sweeps {
            for p in 0..n {
                if d[p] > 0.0 {
                    let s: f64 = g.neighbors(p).map(|(q, w)| w * x[q]).sum();
                    x[p] = s / d[p];
                }
            }
        }
        project_out_ones(&mut x);
        columns.push(x);
    }
    TestVectors::from_columns(&columns, sweeps)
}

/// Squared cosine of the two nodes' test-vector rows.
pub fn node_affinity(x: &TestVectors, p: usize, q: usize) -> Result<f64> {
    for v in [p, q] {
        if v >= x.n() {
            return Err(Error::IndexOutOfRange { index: v, n: x.n() });
        }
    }
    let (a, b) = (x.row(p), x.row(q));
    let ab: f64 = a.iter().zip(b).map(|(u, v)| u * v).sum();
    let aa: f64 = a.iter().map(|u| u * u).sum();
    let bb: f64 = b.iter().map(|u| u * u).sum();
    if aa == 0.0 {
        return Err(Error::ZeroRow(p));
    }
    if bb == 0.0 {
        return Err(Error::ZeroRow(q));
    }
    Ok((ab * ab) / (aa * bb))
}

/// A neighbor is accepted if its affinity is at least this fraction of the
/// node's best neighbor affinity (which may belong to a full cluster).
const ACCEPT_FRACTION: f64 = 0.4;

/// Greedily aggregates `g` into connected clusters, aiming for
/// `ceil(n / target_ratio)` coarse nodes.
///
/// Each pass visits the current units (singletons at first, clusters later)
/// in ascending volume order. A unit not yet touched in the pass joins the
/// neighboring unit of highest affinity, provided the merged cluster stays
/// within `ceil(2 · target_ratio)` fine nodes and the affinity is at least
/// 0.4 of its best neighbor's. Passes repeat until the target is met or a
/// pass merges nothing. Ties go to the smaller unit id; pairs with zero or
/// undefined affinity never merge.
pub fn aggregate_nodes(g: &Graph, x: &TestVectors, target_ratio: f64) -> Result<MappingOperator> {
    if !(target_ratio >= 1.0) || !target_ratio.is_finite() {
        return Err(Error::invalid(format!(
            "target ratio must be >= 1, got {target_ratio}"
        )));
    }
    let n = g.n();
    if x.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.n(),
        });
    }
    g.require_connected()?;
    let wanted = (n as f64 / target_ratio).ceil() as usize;
    if target_ratio == 1.0 || n <= 2 {
        return Ok(MappingOperator::identity(n));
    }
    if wanted < 2 {
        log::warn!("reduction ratio {target_ratio} would leave {wanted} coarse node(s) from {n}; keeping 2");
    }
    let target = wanted.max(2);
    let cap = (2.0 * target_ratio).ceil() as usize;

    let edge_aff: Vec<f64> = g
        .edges()
        .iter()
        .map(|e| node_affinity(x, e.p, e.q).unwrap_or(0.0))
        .collect();
    let degrees = g.degrees();

    // unit_of: fine node -> unit, units numbered by smallest member
    let mut unit_of: Vec<usize> = (0..n).collect();
    let mut count = n;
    loop {
        let mut size = vec![0usize; count];
        let mut volume = vec![0.0; count];
        for p in 0..n {
            size[unit_of[p]] += 1;
            volume[unit_of[p]] += degrees[p];
        }
        let adj = unit_adjacency(g, &unit_of, count, &edge_aff);

        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| volume[a].total_cmp(&volume[b]).then(a.cmp(&b)));

        // group_of: unit -> group (a unit's own id until it joins another)
        let mut group_of: Vec<usize> = (0..count).collect();
        let mut group_size = size.clone();
        let mut touched = vec![false; count];
        let mut remaining = count;
        let mut merged = false;
        for &u in &order {
            if remaining <= target {
                break;
            }
            if touched[u] {
                continue;
            }
            let nbrs = &adj[u];
            let best_all = nbrs.iter().map(|&(_, a)| a).fold(0.0, f64::max);
            if best_all <= 0.0 {
                continue;
            }
            let mut choice: Option<(usize, f64)> = None;
            for &(v, a) in nbrs {
                if a <= 0.0 || a < ACCEPT_FRACTION * best_all {
                    continue;
                }
                if group_size[group_of[v]] + size[u] > cap {
                    continue;
                }
                let better = match choice {
                    None => true,
                    Some((cv, ca)) => a > ca || (a == ca && v < cv),
                };
                if better {
                    choice = Some((v, a));
                }
            }
            if let Some((v, _)) = choice {
                let gv = group_of[v];
                group_of[u] = gv;
                group_size[gv] += size[u];
                touched[u] = true;
                touched[v] = true;
                remaining -= 1;
                merged = true;
            }
        }
        if !merged {
            break;
        }
        // relabel groups by smallest fine member
        let mut label = vec![usize::MAX; count];
        let mut next = 0;
        for p in 0..n {
            let gid = group_of[unit_of[p]];
            if label[gid] == usize::MAX {
                label[gid] = next;
                next += 1;
            }
            unit_of[p] = label[gid];
        }
        count = next;
        if count <= target {
            break;
        }
    }
    MappingOperator::new(unit_of)
}

/// Per-unit neighbor lists holding the best fine-edge affinity between units.
fn unit_adjacency(g: &Graph, unit_of: &[usize], count: usize, edge_aff: &[f64]) -> Vec<Vec<(usize, f64)>> {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * g.num_edges());
    for (e, &a) in g.edges().iter().zip(edge_aff) {
        let (cu, cv) = (unit_of[e.p], unit_of[e.q]);
        if cu != cv {
            pairs.push((cu, cv, a));
            pairs.push((cv, cu, a));
        }
    }
    pairs.sort_by_key(|a| (a.0, a.1));
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); count];
    for (u, v, a) in pairs {
        match adj[u].last_mut() {
            Some(last) if last.0 == v => last.1 = last.1.max(a),
            _ => adj[u].push((v, a)),
        }
    }
    adj
}

/// Coarse graph with Laplacian `H L Hᵀ`: crossing weights sum, intra-cluster
/// edges vanish.
pub fn reduce_graph(g: &Graph, h: &MappingOperator) -> Result<Graph> {
    if h.n_fine() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: h.n_fine(),
        });
    }
    let c = h.cluster_of();
    Ok(Graph::from_edges_dropping_loops(
        h.n_coarse(),
        g.edges().iter().map(|e| (c[e.p], c[e.q], e.w)),
    ))
}
