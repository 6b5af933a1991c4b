//! Density-routed spectral reduction producing a multilevel hierarchy.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate_nodes, gs_test_vectors, reduce_graph, MappingOperator};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io::{load_graph, load_mapping, save_graph, save_mapping, GraphFormat};
use crate::linalg::{symmetric_eigenvalues, DENSE_EIGEN_LIMIT};
use crate::scale::{sgd_edge_scaling, SgdParams};
use crate::sparsify::{densify_to_similarity, spanning_tree, DensifyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReduceOptions {
    /// Target node-reduction ratio `|V_G| / |V_S|`.
    pub psi: f64,
    /// Graphs with `|E| / |V|` above this are sparsified before aggregation.
    pub gamma_max: f64,
    /// Spectral similarity target of the sparsifier.
    pub sigma: f64,
    /// Largest aggregation ratio of a single level.
    pub max_level_ratio: f64,
    pub test_vectors: usize,
    pub gs_sweeps: usize,
    pub force_phase_b_first: bool,
    pub seed: u64,
    #[serde(skip)]
    pub densify: DensifyOptions,
    #[serde(skip)]
    pub sgd: SgdParams,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions {
            psi: 4.0,
            gamma_max: 40.0,
            sigma: 2.0,
            max_level_ratio: 4.0,
            test_vectors: 8,
            gs_sweeps: 5,
            force_phase_b_first: false,
            seed: 42,
            densify: DensifyOptions::default(),
            // λmax only steers the step size here, so a loose estimate will do
            sgd: SgdParams {
                lambda_tol: 1e-6,
                lambda_max_iters: 60,
                ..SgdParams::default()
            },
        }
    }
}

impl ReduceOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.psi >= 1.0 && self.psi.is_finite()) {
            return Err(Error::invalid(format!("reduction ratio must be >= 1, got {}", self.psi)));
        }
        if !(self.gamma_max > 0.0) {
            return Err(Error::invalid(format!("density threshold must be positive, got {}", self.gamma_max)));
        }
        if !(self.sigma > 1.0) {
            return Err(Error::invalid(format!("similarity target must exceed 1, got {}", self.sigma)));
        }
        if !(self.max_level_ratio > 1.0) {
            return Err(Error::invalid("per-level ratio must exceed 1"));
        }
        if self.test_vectors == 0 || self.gs_sweeps == 0 {
            return Err(Error::invalid("need at least one test vector and one sweep"));
        }
        self.sgd.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Sparsification and edge scaling.
    SparsifyScale,
    /// One level of node aggregation.
    Aggregate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// No reduction requested.
    Identity,
    AggregateFirst,
    SparsifyFirst,
}

/// `levels[0]` is the input graph, `levels[j + 1] = maps[j]` applied to
/// `levels[j]` (or to its sparsifier), and the last level is `S`.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<Graph>,
    maps: Vec<MappingOperator>,
    route: Route,
    trace: Vec<Phase>,
    stalled: bool,
    t_reduction_s: f64,
    /// Original node ids of `levels[0]` when only a component was reduced.
    component: Option<Vec<usize>>,
}

impl Hierarchy {
    /// Validates level sizes against the maps.
    pub fn new(levels: Vec<Graph>, maps: Vec<MappingOperator>) -> Result<Hierarchy> {
        if levels.is_empty() || maps.len() + 1 != levels.len() {
            return Err(Error::invalid(format!(
                "hierarchy needs one more level than maps, got {} levels and {} maps",
                levels.len(),
                maps.len()
            )));
        }
        for (j, m) in maps.iter().enumerate() {
            if m.n_fine() != levels[j].n() || m.n_coarse() != levels[j + 1].n() {
                return Err(Error::DimensionMismatch {
                    expected: levels[j + 1].n(),
                    got: m.n_coarse(),
                });
            }
        }
        Ok(Hierarchy {
            levels,
            maps,
            route: Route::Identity,
            trace: Vec::new(),
            stalled: false,
            t_reduction_s: 0.0,
            component: None,
        })
    }

    pub fn levels(&self) -> &[Graph] {
        &self.levels
    }

    pub fn maps(&self) -> &[MappingOperator] {
        &self.maps
    }

    pub fn coarsest(&self) -> &Graph {
        self.levels.last().expect("hierarchy has a level")
    }

    pub fn finest(&self) -> &Graph {
        &self.levels[0]
    }

    pub fn route(&self) -> Route {
        self.route
    }

    pub fn trace(&self) -> &[Phase] {
        &self.trace
    }

    /// The requested ratio could not be reached.
    pub fn stalled(&self) -> bool {
        self.stalled
    }

    pub fn t_reduction_s(&self) -> f64 {
        self.t_reduction_s
    }

    pub fn component(&self) -> Option<&[usize]> {
        self.component.as_deref()
    }

    /// All maps composed into one fine-to-coarsest operator.
    pub fn composed_map(&self) -> MappingOperator {
        self.maps
            .iter()
            .try_fold(MappingOperator::identity(self.levels[0].n()), |acc, m| acc.compose(m))
            .expect("maps chain by construction")
    }

    pub fn node_ratio(&self) -> f64 {
        self.levels[0].n() as f64 / self.coarsest().n() as f64
    }
}

/// Sparsify to the similarity target, then scale the sparsifier's weights.
pub fn phase_b(g: &Graph, opts: &ReduceOptions) -> Result<Graph> {
    let tree = spanning_tree(g)?;
    let densify = DensifyOptions {
        seed: opts.seed,
        ..opts.densify
    };
    let p = densify_to_similarity(g, &tree, opts.sigma, densify)?;
    let scaled = sgd_edge_scaling(g, &p, &opts.sgd, opts.seed.wrapping_add(1))?;
    Ok(scaled.sparsifier.base().clone())
}

/// Aggregates level by level until the cumulative ratio reaches `psi` or a
/// level shrinks the graph by less than 5%. Returns `(levels, maps, stalled)`
/// with `levels[0] = g`.
fn aggregate_levels(g: &Graph, n0: usize, opts: &ReduceOptions) -> Result<(Vec<Graph>, Vec<MappingOperator>, bool)> {
    let mut levels = vec![g.clone()];
    let mut maps = Vec::new();
    loop {
        let cur = levels.last().expect("nonempty");
        let remaining = opts.psi * cur.n() as f64 / n0 as f64;
        if remaining < 1.0 + 1e-9 || cur.n() <= 2 {
            return Ok((levels, maps, remaining >= 1.0 + 1e-9));
        }
        let ratio = remaining.min(opts.max_level_ratio);
        let level_seed = opts.seed.wrapping_add(1000 + levels.len() as u64);
        let x = gs_test_vectors(cur, opts.test_vectors, opts.gs_sweeps, level_seed)?;
        let h = aggregate_nodes(cur, &x, ratio)?;
        let shrink = h.n_coarse() as f64 / cur.n() as f64;
        if shrink > 0.95 {
            return Ok((levels, maps, true));
        }
        let next = reduce_graph(cur, &h)?;
        log::debug!("aggregation level {}: {} -> {} nodes", maps.len(), cur.n(), next.n());
        maps.push(h);
        levels.push(next);
    }
}

/// Builds the reduction hierarchy of `g`.
///
/// Sparse graphs are aggregated first and the coarsest graph is then
/// sparsified and scaled. Dense graphs, or any graph when
/// `force_phase_b_first` is set, are sparsified and scaled first and the
/// sparsifier is aggregated; the finest level stays `g`. A disconnected input
/// is replaced by its largest component.
pub fn spectral_reduce(g: &Graph, opts: &ReduceOptions) -> Result<Hierarchy> {
    opts.validate()?;
    if g.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    let start = Instant::now();
    let (g, component) = if g.is_connected() {
        (g.clone(), None)
    } else {
        let (sub, ids) = g.largest_component();
        log::warn!(
            "graph is disconnected; reducing its largest component ({} of {} nodes)",
            sub.n(),
            g.n()
        );
        (sub, Some(ids))
    };
    let n0 = g.n();
    let dense = g.density() > opts.gamma_max;
    let b_first = dense || opts.force_phase_b_first;
    let mut trace = Vec::new();

    let (levels, maps, stalled, route) = if opts.psi == 1.0 && !b_first {
        (vec![g], Vec::new(), false, Route::Identity)
    } else if b_first {
        trace.push(Phase::SparsifyScale);
        let p = phase_b(&g, opts)?;
        let (mut plevels, maps, stalled) = aggregate_levels(&p, n0, opts)?;
        trace.extend(std::iter::repeat_n(Phase::Aggregate, maps.len()));
        let maps = if maps.is_empty() {
            plevels.push(p);
            vec![MappingOperator::identity(n0)]
        } else {
            maps
        };
        plevels[0] = g;
        (plevels, maps, stalled, Route::SparsifyFirst)
    } else {
        let (mut levels, mut maps, stalled) = aggregate_levels(&g, n0, opts)?;
        trace.extend(std::iter::repeat_n(Phase::Aggregate, maps.len()));
        trace.push(Phase::SparsifyScale);
        let r = levels.last().expect("nonempty");
        let s = phase_b(r, opts)?;
        if maps.is_empty() {
            maps.push(MappingOperator::identity(n0));
            levels.push(s);
        } else {
            *levels.last_mut().expect("nonempty") = s;
        }
        (levels, maps, stalled, Route::AggregateFirst)
    };
    if stalled {
        log::warn!(
            "aggregation stalled at {} nodes; requested ratio {} not reached",
            levels.last().map_or(0, Graph::n),
            opts.psi
        );
    }
    let mut h = Hierarchy::new(levels, maps)?;
    h.route = route;
    h.trace = trace;
    h.stalled = stalled;
    h.component = component;
    h.t_reduction_s = start.elapsed().as_secs_f64();
    Ok(h)
}

/// Reduces every connected component of `g` on its own and returns the
/// composed fine-to-coarse map over all of `g`. Components of three or fewer
/// nodes are kept as they are.
pub fn reduce_each_component(g: &Graph, opts: &ReduceOptions) -> Result<MappingOperator> {
    opts.validate()?;
    if opts.psi == 1.0 {
        return Ok(MappingOperator::identity(g.n()));
    }
    let comps = g.connected_components();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); comps.count];
    for (p, &c) in comps.labels.iter().enumerate() {
        members[c].push(p);
    }
    if comps.count > 1 {
        log::warn!("kNN graph has {} components; reducing each separately", comps.count);
    }
    let mut cluster_of = vec![0usize; g.n()];
    let mut offset = 0;
    for nodes in &members {
        if nodes.len() <= 3 {
            for (i, &p) in nodes.iter().enumerate() {
                cluster_of[p] = offset + i;
            }
            offset += nodes.len();
            continue;
        }
        let sub = g.induced_subgraph(nodes);
        let h = spectral_reduce(&sub, opts)?;
        let map = h.composed_map();
        for (i, &p) in nodes.iter().enumerate() {
            cluster_of[p] = offset + map.cluster_of()[i];
        }
        offset += map.n_coarse();
    }
    MappingOperator::new(cluster_of)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigCompare {
    /// First `m` nontrivial eigenvalues of each graph, each set divided by
    /// its own largest member.
    pub original: Vec<f64>,
    pub reduced: Vec<f64>,
    pub mean_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub nodes_original: usize,
    pub nodes_reduced: usize,
    pub edges_original: usize,
    pub edges_reduced: usize,
    pub node_ratio: f64,
    pub edge_ratio: f64,
    pub t_reduction_s: f64,
    pub route: Route,
    pub trace: Vec<Phase>,
    pub levels: Vec<usize>,
    pub stalled: bool,
    /// Absent when a graph is too large for the dense eigensolver.
    pub eig_compare: Option<EigCompare>,
}

/// First `m` nontrivial Laplacian eigenvalues divided by the `m`-th.
pub fn normalized_low_spectrum(g: &Graph, m: usize) -> Result<Vec<f64>> {
    if g.n() > DENSE_EIGEN_LIMIT {
        return Err(Error::TooLargeForDense {
            n: g.n(),
            limit: DENSE_EIGEN_LIMIT,
        });
    }
    let vals = symmetric_eigenvalues(&g.dense_laplacian(), g.n())?;
    let m = m.min(g.n() - 1);
    let low = &vals[1..=m];
    let top = low[m - 1];
    if !(top > 0.0) {
        return Err(Error::Disconnected(2));
    }
    Ok(low.iter().map(|v| v / top).collect())
}

/// Compares the first `m` normalized eigenvalues when both ends fit the
/// dense eigensolver.
pub fn compare_spectra(g: &Graph, s: &Graph, m: usize) -> Result<EigCompare> {
    let m = m.min(s.n() - 1).min(g.n() - 1);
    let original = normalized_low_spectrum(g, m)?;
    let reduced = normalized_low_spectrum(s, m)?;
    let mean_rel_error =
        original.iter().zip(&reduced).map(|(a, b)| (a - b).abs() / a).sum::<f64>() / m as f64;
    Ok(EigCompare {
        original,
        reduced,
        mean_rel_error,
    })
}

pub fn reduction_report(h: &Hierarchy, m: usize) -> Result<ReductionReport> {
    let (g, s) = (h.finest(), h.coarsest());
    let eig_compare = if m == 0 || s.n() < 2 {
        None
    } else {
        match compare_spectra(g, s, m) {
            Ok(c) => Some(c),
            Err(Error::TooLargeForDense { n, .. }) => {
                log::warn!("skipping eigenvalue comparison: {n} nodes exceeds the dense limit");
                None
            }
            Err(e) => return Err(e),
        }
    };
    Ok(ReductionReport {
        nodes_original: g.n(),
        nodes_reduced: s.n(),
        edges_original: g.num_edges(),
        edges_reduced: s.num_edges(),
        node_ratio: g.n() as f64 / s.n() as f64,
        edge_ratio: g.num_edges() as f64 / s.num_edges().max(1) as f64,
        t_reduction_s: h.t_reduction_s,
        route: h.route,
        trace: h.trace.clone(),
        levels: h.levels.iter().map(Graph::n).collect(),
        stalled: h.stalled,
        eig_compare,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    levels: usize,
    nodes: Vec<usize>,
    route: Route,
    trace: Vec<Phase>,
    stalled: bool,
    t_reduction_s: f64,
    component: Option<Vec<usize>>,
}

/// Writes `level_<j>.edges`, `map_<j>.txt` and `meta.json` into `dir`.
pub fn save_hierarchy(dir: &Path, h: &Hierarchy) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (j, g) in h.levels.iter().enumerate() {
        save_graph(&dir.join(format!("level_{j}.edges")), g, GraphFormat::EdgeList)?;
    }
    for (j, m) in h.maps.iter().enumerate() {
        save_mapping(&dir.join(format!("map_{j}.txt")), m)?;
    }
    let meta = Meta {
        levels: h.levels.len(),
        nodes: h.levels.iter().map(Graph::n).collect(),
        route: h.route,
        trace: h.trace.clone(),
        stalled: h.stalled,
        t_reduction_s: h.t_reduction_s,
        component: h.component.clone(),
    };
    let path = dir.join("meta.json");
    fs::write(&path, serde_json::to_string_pretty(&meta)?).map_err(|source| Error::Io { path, source })
}

pub fn load_hierarchy(dir: &Path) -> Result<Hierarchy> {
    let path = dir.join("meta.json");
    let text = fs::read_to_string(&path).map_err(|source| Error::Io { path, source })?;
    let meta: Meta = serde_json::from_str(&text)?;
    let levels = (0..meta.levels)
        .map(|j| load_graph(&dir.join(format!("level_{j}.edges")), GraphFormat::EdgeList))
        .collect::<Result<Vec<_>>>()?;
    let maps = (0..meta.levels.saturating_sub(1))
        .map(|j| load_mapping(&dir.join(format!("map_{j}.txt"))))
        .collect::<Result<Vec<_>>>()?;
    let mut h = Hierarchy::new(levels, maps)?;
    h.route = meta.route;
    h.trace = meta.trace;
    h.stalled = meta.stalled;
    h.t_reduction_s = meta.t_reduction_s;
    h.component = meta.component;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(w: usize, h: usize) -> Graph {
        let mut es = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if x + 1 < w {
                    es.push((i, i + 1, 1.0));
                }
                if y + 1 < h {
                    es.push((i, i + w, 1.0));
                }
            }
        }
        Graph::from_edges(w * h, es).unwrap()
    }

    fn two_triangles() -> Graph {
        Graph::from_edges(
            6,
            [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0), (2, 3, 0.01)],
        )
        .unwrap()
    }

    #[test]
    fn branch_follows_density() {
        let tri = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let h = spectral_reduce(&tri, &ReduceOptions { psi: 2.0, ..Default::default() }).unwrap();
        assert_eq!(h.route(), Route::AggregateFirst);
        assert_eq!(h.trace().last(), Some(&Phase::SparsifyScale));

        // 101 nodes, complete graph: 50 edges per node
        let n = 101;
        let mut es = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                es.push((i, j, 1.0));
            }
        }
        let dense = Graph::from_edges(n, es).unwrap();
        assert!(dense.density() > 40.0);
        let h = spectral_reduce(&dense, &ReduceOptions { psi: 4.0, sigma: 4.0, ..Default::default() }).unwrap();
        assert_eq!(h.route(), Route::SparsifyFirst);
        assert_eq!(h.trace()[0], Phase::SparsifyScale);
        assert!(h.trace()[1..].iter().all(|&p| p == Phase::Aggregate));
        assert_eq!(h.finest(), &dense);
    }

    #[test]
    fn psi_one_is_identity() {
        let g = grid(5, 4);
        let h = spectral_reduce(&g, &ReduceOptions { psi: 1.0, ..Default::default() }).unwrap();
        assert_eq!(h.levels().len(), 1);
        assert_eq!(h.coarsest(), &g);
        let r = reduction_report(&h, 10).unwrap();
        assert_eq!((r.node_ratio, r.edge_ratio), (1.0, 1.0));
        assert_eq!(r.eig_compare.unwrap().mean_rel_error, 0.0);

        let forced = ReduceOptions { psi: 1.0, force_phase_b_first: true, ..Default::default() };
        let h = spectral_reduce(&g, &forced).unwrap();
        assert_eq!(h.levels().len(), 2);
        assert!(h.maps()[0].is_identity());
        assert!(h.coarsest().num_edges() <= g.num_edges());
    }

    #[test]
    fn grid_report() {
        let g = grid(32, 32);
        let h = spectral_reduce(&g, &ReduceOptions { psi: 8.0, ..Default::default() }).unwrap();
        let r = reduction_report(&h, 10).unwrap();
        let c = r.eig_compare.unwrap();
        assert_eq!(c.original.len(), 10);
        assert_eq!(c.reduced.len(), 10);
        let lg = symmetric_eigenvalues(&g.dense_laplacian(), g.n()).unwrap();
        let ls = symmetric_eigenvalues(&h.coarsest().dense_laplacian(), h.coarsest().n()).unwrap();
        let mean = (1..=10).map(|i| ((lg[i] / lg[10]) - (ls[i] / ls[10])).abs() / (lg[i] / lg[10])).sum::<f64>() / 10.0;
        assert!((mean - c.mean_rel_error).abs() < 1e-9);
        for w in h.levels().windows(2) {
            assert!(w[1].n() < w[0].n());
        }
        assert!(r.node_ratio >= 6.0, "ratio {}", r.node_ratio);
    }

    #[test]
    fn two_triangles_ratio() {
        let h = spectral_reduce(&two_triangles(), &ReduceOptions { psi: 3.0, ..Default::default() }).unwrap();
        let r = reduction_report(&h, 1).unwrap();
        assert!((r.node_ratio - 3.0).abs() <= 0.5, "ratio {}", r.node_ratio);
    }

    #[test]
    fn composition_matches_stepwise_reduction() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(20..60);
            let mut es: Vec<(usize, usize, f64)> =
                (1..n).map(|i| (rng.random_range(0..i), i, rng.random_range(0.5..2.0))).collect();
            for _ in 0..n {
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                if a != b {
                    es.push((a, b, rng.random_range(0.5..2.0)));
                }
            }
            let g = Graph::from_edges(n, es).unwrap();
            let (levels, maps, _) = aggregate_levels(&g, n, &ReduceOptions { psi: 10.0, ..Default::default() }).unwrap();
            let h = Hierarchy::new(levels, maps).unwrap();
            let one = reduce_graph(&g, &h.composed_map()).unwrap();
            let a = one.dense_laplacian();
            let b = h.coarsest().dense_laplacian();
            let direct = oracle::dense_galerkin(&g.dense_laplacian(), n, h.composed_map().cluster_of(), one.n());
            for ((x, y), z) in a.iter().zip(&b).zip(&direct) {
                assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
                assert!((x - z).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn disconnected_input_uses_largest_component() {
        let mut es: Vec<(usize, usize, f64)> = grid(4, 4).edges().iter().map(|e| (e.p, e.q, e.w)).collect();
        es.push((16, 17, 1.0));
        let g = Graph::from_edges(18, es).unwrap();
        let h = spectral_reduce(&g, &ReduceOptions { psi: 2.0, ..Default::default() }).unwrap();
        assert_eq!(h.finest().n(), 16);
        assert_eq!(h.component().unwrap().len(), 16);
    }

    #[test]
    fn per_component_reduction() {
        let a = grid(6, 6);
        let mut es: Vec<(usize, usize, f64)> = a.edges().iter().map(|e| (e.p, e.q, e.w)).collect();
        es.extend(a.edges().iter().map(|e| (e.p + 36, e.q + 36, e.w)));
        es.push((72, 73, 1.0));
        let g = Graph::from_edges(74, es).unwrap();
        let m = reduce_each_component(&g, &ReduceOptions { psi: 4.0, ..Default::default() }).unwrap();
        assert_eq!(m.n_fine(), 74);
        assert!(m.n_coarse() < 40);
        let c = m.cluster_of();
        assert_ne!(c[72], c[73]);
        assert!((0..36).all(|i| !(36..74).any(|j| c[i] == c[j])));
    }

    #[test]
    fn save_load_round_trip() {
        let g = grid(8, 8);
        let h = spectral_reduce(&g, &ReduceOptions { psi: 4.0, ..Default::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_hierarchy(dir.path(), &h).unwrap();
        let back = load_hierarchy(dir.path()).unwrap();
        assert_eq!(back.levels().len(), h.levels().len());
        assert_eq!(back.maps(), h.maps());
        assert_eq!(back.route(), h.route());
        for (x, y) in back.levels().iter().zip(h.levels()) {
            assert_eq!(x.n(), y.n());
            assert_eq!(x.num_edges(), y.num_edges());
        }
        assert!(ReduceOptions { psi: 0.5, ..Default::default() }.validate().is_err());
        assert!(ReduceOptions { sigma: 1.0, ..Default::default() }.validate().is_err());
    }
}
