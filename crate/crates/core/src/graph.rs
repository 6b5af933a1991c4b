//! Undirected weighted graphs in canonical edge-list form.
//!
//! A [`Graph`] stores its edges sorted by `(p, q)` with `p < q`, and a CSR
//! adjacency derived from them. The Laplacian `L = D - A` is only ever applied
//! as an operator; [`Graph::dense_laplacian`] exists for small coarse graphs
//! and for verification.

use std::collections::VecDeque;
use std::ops::Deref;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub p: usize,
    pub q: usize,
    pub w: f64,
}

/// Per-node sum of incident edge weights (the Laplacian diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector(pub Vec<f64>);

impl Deref for DegreeVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct Components {
    pub labels: Vec<usize>,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    edge_ids: Vec<usize>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Graph {
    /// Builds a canonical graph, merging duplicate edges by summing weights.
    ///
    /// Rejects self-loops, out-of-range endpoints and weights that are not
    /// strictly positive and finite.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut raw = Vec::new();
        for (p, q, w) in edges {
            if p >= n {
                return Err(Error::IndexOutOfRange { index: p, n });
            }
            if q >= n {
                return Err(Error::IndexOutOfRange { index: q, n });
            }
            if p == q {
                return Err(Error::SelfLoop(p));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::BadWeight { p, q, w });
            }
            raw.push(Edge {
                p: p.min(q),
                q: p.max(q),
                w,
            });
        }
        let g = Self::canonical(n, raw);
        if let Some(e) = g.edges.iter().find(|e| !e.w.is_finite()) {
            return Err(Error::BadWeight {
                p: e.p,
                q: e.q,
                w: e.w,
            });
        }
        Ok(g)
    }

    /// Like [`Graph::from_edges`] but silently drops self-loops and
    /// non-positive weights. Used when contracting clusters, where
    /// intra-cluster edges become loops.
    pub(crate) fn from_edges_dropping_loops<I>(n: usize, edges: I) -> Graph
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let raw = edges
            .into_iter()
            .filter(|&(p, q, w)| p != q && w > 0.0)
            .map(|(p, q, w)| Edge {
                p: p.min(q),
                q: p.max(q),
                w,
            })
            .collect();
        Self::canonical(n, raw)
    }

    pub fn empty(n: usize) -> Graph {
        Self::canonical(n, Vec::new())
    }

    fn canonical(n: usize, mut raw: Vec<Edge>) -> Graph {
        raw.sort_by_key(|a| (a.p, a.q));
        let mut edges: Vec<Edge> = Vec::with_capacity(raw.len());
        for e in raw {
            match edges.last_mut() {
                Some(last) if last.p == e.p && last.q == e.q => last.w += e.w,
                _ => edges.push(e),
            }
        }
        Self::with_sorted_edges(n, edges)
    }

    fn with_sorted_edges(n: usize, edges: Vec<Edge>) -> Graph {
        let mut counts = vec![0usize; n + 1];
        for e in &edges {
            counts[e.p + 1] += 1;
            counts[e.q + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts;
        let mut fill = offsets.clone();
        let nnz = 2 * edges.len();
        let mut targets = vec![0usize; nnz];
        let mut weights = vec![0.0; nnz];
        let mut edge_ids = vec![0usize; nnz];
        for (id, e) in edges.iter().enumerate() {
            for (a, b) in [(e.p, e.q), (e.q, e.p)] {
                let slot = fill[a];
                targets[slot] = b;
                weights[slot] = e.w;
                edge_ids[slot] = id;
                fill[a] += 1;
            }
        }
        Graph {
            n,
            edges,
            offsets,
            targets,
            weights,
            edge_ids,
        }
    }

    /// Same topology with new per-edge weights (indexed like [`Graph::edges`]).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Graph> {
        if weights.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                expected: self.edges.len(),
                got: weights.len(),
            });
        }
        let mut edges = self.edges.clone();
        for (e, &w) in edges.iter_mut().zip(weights) {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::BadWeight { p: e.p, q: e.q, w });
            }
            e.w = w;
        }
        Ok(Self::with_sorted_edges(self.n, edges))
    }

    /// Subgraph keeping the edges whose index satisfies `keep`.
    pub fn edge_subgraph(&self, keep: impl Fn(usize) -> bool) -> Graph {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, e)| *e)
            .collect();
        Self::with_sorted_edges(self.n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree_count(&self, p: usize) -> usize {
        self.offsets[p + 1] - self.offsets[p]
    }

    /// `(neighbor, weight)` pairs of node `p`.
    pub fn neighbors(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[p]..self.offsets[p + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    /// `(neighbor, weight, edge index)` triples of node `p`.
    pub fn incident(&self, p: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        let r = self.offsets[p]..self.offsets[p + 1];
        r.map(move |s| (self.targets[s], self.weights[s], self.edge_ids[s]))
    }

    /// Index of edge `{p, q}` in [`Graph::edges`], if present.
    pub fn edge_index(&self, p: usize, q: usize) -> Option<usize> {
        let key = (p.min(q), p.max(q));
        self.edges.binary_search_by(|e| (e.p, e.q).cmp(&key)).ok()
    }

    pub fn degrees(&self) -> DegreeVector {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.p] += e.w;
            d[e.q] += e.w;
        }
        DegreeVector(d)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// `out = L x`. Panics on length mismatch; see [`Graph::laplacian_apply`]
    /// for the checked form.
    pub fn apply_laplacian(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        for p in 0..self.n {
            let mut acc = 0.0;
            let r = self.offsets[p]..self.offsets[p + 1];
            let xp = x[p];
            for (&q, &w) in self.targets[r.clone()].iter().zip(&self.weights[r]) {
                acc += w * (xp - x[q]);
            }
            out[p] = acc;
        }
    }

    pub fn laplacian_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut out = vec![0.0; self.n];
        self.apply_laplacian(x, &mut out);
        Ok(out)
    }

    /// `xᵀ L x = Σ w(p,q) (x(p) − x(q))²`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.quadratic_form_unchecked(x))
    }

    pub(crate) fn quadratic_form_unchecked(&self, x: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|e| {
                let d = x[e.p] - x[e.q];
                e.w * d * d
            })
            .sum()
    }

    /// Edge density `|E| / |V|`.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.edges.len() as f64 / self.n as f64
    }

    pub fn connected_components(&self) -> Components {
        let mut labels = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            if labels[s] != usize::MAX {
                continue;
            }
            labels[s] = count;
            queue.push_back(s);
            while let Some(p) = queue.pop_front() {
                for (q, _) in self.neighbors(p) {
                    if labels[q] == usize::MAX {
                        labels[q] = count;
                        queue.push_back(q);
                    }
                }
            }
            count += 1;
        }
        Components { labels, count }
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.connected_components().count == 1
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyGraph);
        }
        let c = self.connected_components().count;
        if c > 1 {
            return Err(Error::Disconnected(c));
        }
        Ok(())
    }

    /// Induced subgraph on `nodes` (renumbered in the given order).
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in nodes.iter().enumerate() {
            local[v] = i;
        }
        let edges = self.edges.iter().filter_map(|e| {
            let (a, b) = (local[e.p], local[e.q]);
            (a != usize::MAX && b != usize::MAX).then_some((a, b, e.w))
        });
        Self::from_edges_dropping_loops(nodes.len(), edges)
    }

    /// Largest connected component and the original ids of its nodes.
    /// Ties between equally sized components go to the lowest label.
    pub fn largest_component(&self) -> (Graph, Vec<usize>) {
        let comps = self.connected_components();
        let mut sizes = vec![0usize; comps.count];
        for &l in &comps.labels {
            sizes[l] += 1;
        }
        let best = (0..comps.count)
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let nodes: Vec<usize> = (0..self.n).filter(|&v| comps.labels[v] == best).collect();
        (self.induced_subgraph(&nodes), nodes)
    }

    /// Edge indices of a maximum-weight spanning forest (Kruskal). Equal
    /// weights are taken in edge-index order, so the result is deterministic.
    pub fn maximum_spanning_forest(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by(|&a, &b| self.edges[b].w.total_cmp(&self.edges[a].w).then(a.cmp(&b)));
        let mut dsu = DisjointSets::new(self.n);
        let mut forest = Vec::with_capacity(self.n.saturating_sub(1));
        for id in order {
            let e = self.edges[id];
            if dsu.union(e.p, e.q) {
                forest.push(id);
                if forest.len() + 1 == self.n {
                    break;
                }
            }
        }
        forest.sort_unstable();
        forest
    }

    /// Row-major dense Laplacian. Quadratic in `n`; meant for small graphs.
    pub fn dense_laplacian(&self) -> Vec<f64> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for e in &self.edges {
            l[e.p * n + e.q] -= e.w;
            l[e.q * n + e.p] -= e.w;
            l[e.p * n + e.p] += e.w;
            l[e.q * n + e.q] += e.w;
        }
        l
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }
}

pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}
