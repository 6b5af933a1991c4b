//! Spectral sparsification: a spanning-tree backbone plus the off-tree edges
//! that matter most for the pencil `(L_G, L_P)`.
//!
//! Off-tree edges are ranked by their Joule heat `w_G (h(p) − h(q))²` under
//! approximate dominant generalized eigenvectors `h = (L_P⁺ L_G)ᵗ h₀`, and
//! are recovered a few at a time until the estimated relative condition
//! number drops below `σ²`.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::linalg::{axpy, dot, random_orthogonal_to_ones};
use crate::linsolve::{LaplacianSolver, Preconditioner, SolveOptions};
use crate::scale::{estimate_lambda_max, estimate_lambda_min};

/// Subgraph `P` of `G` on the same node set, with its spanning-tree backbone.
#[derive(Debug, Clone)]
pub struct Sparsifier {
    base: Graph,
    /// G edge index of every P edge, ascending, aligned with `base.edges()`.
    g_ids: Vec<usize>,
    tree: Vec<bool>,
    recovered: Vec<usize>,
    kappa: Option<f64>,
}

impl Sparsifier {
    /// The subgraph `P` with its current (possibly scaled) weights.
    pub fn base(&self) -> &Graph {
        &self.base
    }

    /// G edge index per P edge.
    pub fn g_edge_ids(&self) -> &[usize] {
        &self.g_ids
    }

    /// Per P edge: true for spanning-tree edges.
    pub fn tree_mask(&self) -> &[bool] {
        &self.tree
    }

    pub fn tree_edges(&self) -> Vec<Edge> {
        self.base
            .edges()
            .iter()
            .zip(&self.tree)
            .filter(|(_, &t)| t)
            .map(|(e, _)| *e)
            .collect()
    }

    /// Recovered off-tree edges in recovery order, with their G weights.
    pub fn offtree_recovered(&self, g: &Graph) -> Vec<Edge> {
        self.recovered.iter().map(|&id| g.edges()[id]).collect()
    }

    pub fn recovered_ids(&self) -> &[usize] {
        &self.recovered
    }

    /// Estimated relative condition number reached by the last densification.
    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    pub fn num_edges(&self) -> usize {
        self.base.num_edges()
    }

    fn contains(&self, g_id: usize) -> bool {
        self.g_ids.binary_search(&g_id).is_ok()
    }

    /// Same topology, new P weights (aligned with `base().edges()`).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Sparsifier> {
        Ok(Sparsifier {
            base: self.base.with_weights(weights)?,
            ..self.clone()
        })
    }

    fn with_added(&self, g: &Graph, add: &[usize]) -> Sparsifier {
        if add.is_empty() {
            return self.clone();
        }
        // keep already-scaled weights for existing edges
        let mut items: Vec<(usize, f64, bool)> = self
            .g_ids
            .iter()
            .zip(self.base.edges())
            .zip(&self.tree)
            .map(|((&id, e), &t)| (id, e.w, t))
            .collect();
        items.extend(add.iter().map(|&id| (id, g.edges()[id].w, false)));
        items.sort_by_key(|x| x.0);
        let base = Graph::from_edges(
            g.n(),
            items.iter().map(|&(id, w, _)| (g.edges()[id].p, g.edges()[id].q, w)),
        )
        .expect("subgraph of a valid graph");
        let mut recovered = self.recovered.clone();
        recovered.extend_from_slice(add);
        Sparsifier {
            base,
            g_ids: items.iter().map(|x| x.0).collect(),
            tree: items.iter().map(|x| x.2).collect(),
            recovered,
            kappa: None,
        }
    }

    /// Sparsifier equal to `g` itself, every edge treated as recovered except
    /// those of the spanning tree.
    pub fn full(g: &Graph) -> Result<Sparsifier> {
        let s = spanning_tree(g)?;
        let rest: Vec<usize> = (0..g.num_edges()).filter(|&id| !s.contains(id)).collect();
        Ok(s.with_added(g, &rest))
    }
}

/// Maximum-weight spanning tree of a connected graph.
pub fn spanning_tree(g: &Graph) -> Result<Sparsifier> {
    g.require_connected()?;
    let g_ids = g.maximum_spanning_forest();
    let base = g.edge_subgraph(|id| g_ids.binary_search(&id).is_ok());
    Ok(Sparsifier {
        base,
        tree: vec![true; g_ids.len()],
        g_ids,
        recovered: Vec::new(),
        kappa: None,
    })
}

/// Off-tree edges beyond this fraction of `n` switch the pencil solver from
/// the tree preconditioner to multigrid.
const TREE_PRECOND_OFFTREE: f64 = 0.005;

pub(crate) fn pencil_solver(p: &Graph) -> Result<LaplacianSolver<'_>> {
    let offtree = (p.num_edges() + 1).saturating_sub(p.n());
    let preconditioner = if offtree as f64 <= TREE_PRECOND_OFFTREE * p.n() as f64 {
        Preconditioner::SpanningTree
    } else {
        Preconditioner::Multigrid
    };
    LaplacianSolver::new(
        p,
        SolveOptions {
            tol: 1e-10,
            max_iter: None,
            preconditioner,
        },
    )
}

/// One generalized power step `L_P⁺ L_G h`.
pub(crate) fn pencil_apply(g: &Graph, solver: &LaplacianSolver<'_>, h: &[f64]) -> Result<Vec<f64>> {
    let y = g.laplacian_apply(h)?;
    solver.solve_strict(&y)
}

/// Off-tree edge scores and the per-vector embedding coordinates
/// `h_j(p) − h_j(q)` used for filtering.
#[derive(Debug, Clone)]
pub struct EdgeCriticality {
    /// G edge ids of the scored edges (those of G not in P).
    pub edges: Vec<usize>,
    pub scores: Vec<f64>,
    /// `k` coordinates per scored edge, row-major.
    pub coords: Vec<f64>,
    pub k: usize,
}

impl EdgeCriticality {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn coord(&self, i: usize) -> &[f64] {
        &self.coords[i * self.k..(i + 1) * self.k]
    }
}

/// Scores the edges of `g` missing from `s` against the given node vectors.
pub fn criticality_for_vectors(g: &Graph, s: &Sparsifier, vectors: &[Vec<f64>]) -> Result<EdgeCriticality> {
    for v in vectors {
        if v.len() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                got: v.len(),
            });
        }
    }
    let k = vectors.len();
    let mut edges = Vec::new();
    let mut scores = Vec::new();
    let mut coords = Vec::new();
    for (id, e) in g.edges().iter().enumerate() {
        if s.contains(id) {
            continue;
        }
        let mut c = 0.0;
        for h in vectors {
            let d = h[e.p] - h[e.q];
            coords.push(d);
            c += d * d;
        }
        edges.push(id);
        scores.push(e.w * c);
    }
    Ok(EdgeCriticality {
        edges,
        scores,
        coords,
        k,
    })
}

/// `k` approximate dominant generalized eigenvectors after `t` power steps,
/// orthonormalized in the `L_P` inner product so that they span a
/// `k`-dimensional subspace instead of collapsing onto one direction.
pub(crate) fn power_vectors(g: &Graph, p: &Graph, t: usize, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let solver = pencil_solver(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut lp_out: Vec<Vec<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut h = random_orthogonal_to_ones(g.n(), &mut rng);
        for _ in 0..t {
            h = pencil_apply(g, &solver, &h)?;
        }
        for _ in 0..2 {
            for (u, lu) in out.iter().zip(&lp_out) {
                let c = dot(lu, &h);
                axpy(-c, u, &mut h);
            }
        }
        let lh = p.laplacian_apply(&h)?;
        let nrm = dot(&h, &lh);
        if nrm > 0.0 && nrm.is_finite() {
            let s = 1.0 / nrm.sqrt();
            out.push(h.iter().map(|x| x * s).collect());
            lp_out.push(lh.iter().map(|x| x * s).collect());
        }
    }
    Ok(out)
}

/// Criticality of every edge of `g` not yet in `s`.
pub fn offtree_embedding(g: &Graph, s: &Sparsifier, t: usize, k: usize, seed: u64) -> Result<EdgeCriticality> {
    if t == 0 || k == 0 {
        return Err(Error::invalid("power steps and vector count must be at least 1"));
    }
    check_spans(g, s)?;
    if s.num_edges() == g.num_edges() {
        return criticality_for_vectors(g, s, &[]);
    }
    let h = power_vectors(g, s.base(), t, k, seed)?;
    criticality_for_vectors(g, s, &h)
}

fn check_spans(g: &Graph, s: &Sparsifier) -> Result<()> {
    if s.base().n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: s.base().n(),
        });
    }
    Ok(())
}

/// Candidates whose normalized coordinates have |cosine| above this with an
/// edge already taken in the same pass are skipped.
pub const FILTER_COSINE: f64 = 0.95;

/// Adds up to `budget` of the most critical off-tree edges.
pub fn recover_edges(g: &Graph, s: &Sparsifier, crit: &EdgeCriticality, budget: usize) -> Sparsifier {
    recover_filtered(g, s, crit, budget, FILTER_COSINE)
}

fn recover_filtered(g: &Graph, s: &Sparsifier, crit: &EdgeCriticality, budget: usize, cos_max: f64) -> Sparsifier {
    if budget == 0 || crit.is_empty() {
        return s.clone();
    }
    let mut order: Vec<usize> = (0..crit.len()).filter(|&i| !s.contains(crit.edges[i])).collect();
    order.sort_by(|&a, &b| {
        crit.scores[b]
            .total_cmp(&crit.scores[a])
            .then(crit.edges[a].cmp(&crit.edges[b]))
    });
    let mut taken: Vec<usize> = Vec::with_capacity(budget);
    let mut taken_dirs: Vec<Vec<f64>> = Vec::with_capacity(budget);
    for i in order {
        if taken.len() == budget {
            break;
        }
        let c = crit.coord(i);
        let nrm = dot(c, c).sqrt();
        if nrm > 0.0 && cos_max < 1.0 {
            let dir: Vec<f64> = c.iter().map(|x| x / nrm).collect();
            if taken_dirs.iter().any(|t| dot(t, &dir).abs() > cos_max) {
                continue;
            }
            taken_dirs.push(dir);
        }
        taken.push(crit.edges[i]);
    }
    taken.sort_unstable();
    s.with_added(g, &taken)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensifyOptions {
    /// Fraction of `n` recovered per round.
    pub step_fraction: f64,
    pub power_steps: usize,
    pub vectors: usize,
    /// Power iterations for the λmax estimate.
    pub lambda_iters: usize,
    pub seed: u64,
}

impl Default for DensifyOptions {
    fn default() -> Self {
        DensifyOptions {
            step_fraction: 0.05,
            power_steps: 2,
            vectors: 3,
            lambda_iters: 20,
            seed: 0,
        }
    }
}

/// Estimated `κ(L_G, L_P) = λmax / λmin`.
pub fn estimate_kappa(g: &Graph, s: &Sparsifier, iters: usize, seed: u64) -> Result<f64> {
    let hi = estimate_lambda_max(g, s, iters, seed)?;
    let lo = estimate_lambda_min(&g.degrees(), &s.base().degrees())?;
    Ok(hi / lo)
}

/// Recovers off-tree edges in rounds of `ceil(step_fraction · n)` until the
/// estimated condition number is at most `sigma_target²` or no off-tree
/// edges remain. The achieved estimate is stored in the result.
pub fn densify_to_similarity(g: &Graph, s: &Sparsifier, sigma_target: f64, opts: DensifyOptions) -> Result<Sparsifier> {
    if !(sigma_target > 1.0) {
        return Err(Error::invalid(format!("similarity target must exceed 1, got {sigma_target}")));
    }
    if !(opts.step_fraction > 0.0) {
        return Err(Error::invalid("densification step fraction must be positive"));
    }
    check_spans(g, s)?;
    let budget = ((opts.step_fraction * g.n() as f64).ceil() as usize).max(1);
    let target = sigma_target * sigma_target;
    let mut cur = s.clone();
    let mut round = 0u64;
    loop {
        if cur.num_edges() == g.num_edges() {
            cur.kappa = Some(estimate_kappa(g, &cur, opts.lambda_iters, opts.seed ^ round)?);
            return Ok(cur);
        }
        let kappa = estimate_kappa(g, &cur, opts.lambda_iters, opts.seed ^ round)?;
        log::debug!("densify round {round}: {} edges, kappa {kappa:.4}", cur.num_edges());
        if kappa <= target {
            cur.kappa = Some(kappa);
            return Ok(cur);
        }
        let crit = offtree_embedding(g, &cur, opts.power_steps, opts.vectors, opts.seed.wrapping_add(round))?;
        let before = cur.num_edges();
        let mut next = recover_edges(g, &cur, &crit, budget);
        let added = next.num_edges() - before;
        if added < budget {
            // a k-dimensional embedding admits few mutually dissimilar
            // edges; fill the round with the best of the skipped ones
            next = recover_filtered(g, &next, &crit, budget - added, 1.0);
        }
        cur = next;
        round += 1;
    }
}

/// Writes `P` as an edge list at `path` and a sidecar `<path>.tree` with one
/// `0`/`1` flag per edge line marking spanning-tree edges.
pub fn save_sparsifier(path: &Path, s: &Sparsifier) -> Result<()> {
    crate::io::save_graph(path, s.base(), crate::io::GraphFormat::EdgeList)?;
    let mut side = String::with_capacity(2 * s.tree.len());
    for &t in &s.tree {
        side.push(if t { '1' } else { '0' });
        side.push('\n');
    }
    let side_path = tree_sidecar(path);
    fs::write(&side_path, side).map_err(|source| Error::Io { path: side_path, source })
}

/// Reads a sparsifier written by [`save_sparsifier`]; every edge must exist in `g`.
pub fn load_sparsifier(path: &Path, g: &Graph) -> Result<Sparsifier> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    parse_sparsifier(&read(path)?, &read(&tree_sidecar(path))?, g)
}

/// Sparsifier from its edge-list text and the `0`/`1` tree-flag sidecar.
pub fn parse_sparsifier(edges: &str, flags: &str, g: &Graph) -> Result<Sparsifier> {
    let limits = crate::io::ParseLimits { max_nodes: g.n() };
    let base = crate::io::parse_edge_list(edges, limits)?;
    if base.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: base.n(),
        });
    }
    let tree: Vec<bool> = flags
        .lines()
        .enumerate()
        .map(|(i, l)| match l.trim() {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(Error::parse(i + 1, format!("expected 0 or 1, found '{other}'"))),
        })
        .collect::<Result<_>>()?;
    if tree.len() != base.num_edges() {
        return Err(Error::DimensionMismatch {
            expected: base.num_edges(),
            got: tree.len(),
        });
    }
    let mut g_ids = Vec::with_capacity(base.num_edges());
    for e in base.edges() {
        match g.edge_index(e.p, e.q) {
            Some(id) => g_ids.push(id),
            None => return Err(Error::invalid(format!("edge ({}, {}) is not in the graph", e.p + 1, e.q + 1))),
        }
    }
    let recovered = g_ids.iter().zip(&tree).filter(|(_, &t)| !t).map(|(&id, _)| id).collect();
    Ok(Sparsifier {
        base,
        g_ids,
        tree,
        recovered,
        kappa: None,
    })
}

fn tree_sidecar(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".tree");
    s.into()
}
