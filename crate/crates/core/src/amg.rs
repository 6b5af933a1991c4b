//! Aggregation multigrid for graph Laplacians used as a CG preconditioner:
//! forward Gauss–Seidel, a coarse correction over pairwise-matched
//! aggregates accelerated by two inner Krylov steps per level (K-cycle),
//! backward Gauss–Seidel. The cycle is nonlinear, so the outer iteration
//! must be flexible CG.

use crate::graph::Graph;
use crate::linalg::{dot, norm, project_out_ones};

/// Coarsening stops at this size.
const DENSE_LIMIT: usize = 64;
/// Largest coarsest level that is factored densely instead of swept.
const DENSE_MAX: usize = 1000;
/// Coarsening stops when a level keeps more than this fraction of nodes.
const MIN_SHRINK: f64 = 0.85;
/// Symmetric sweeps used when the coarsest level is too large to factor.
const COARSE_SWEEPS: usize = 20;
/// Residual reduction after which the second Krylov step is skipped.
const KRYLOV_SKIP: f64 = 0.25;

struct Csr {
    n: usize,
    xadj: Vec<usize>,
    adj: Vec<usize>,
    w: Vec<f64>,
    diag: Vec<f64>,
}

impl Csr {
    fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Csr {
        let mut count = vec![0usize; n + 1];
        for &(p, q, _) in edges {
            count[p + 1] += 1;
            count[q + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut adj = vec![0; 2 * edges.len()];
        let mut w = vec![0.0; 2 * edges.len()];
        let mut diag = vec![0.0; n];
        for &(p, q, wt) in edges {
            adj[fill[p]] = q;
            w[fill[p]] = wt;
            fill[p] += 1;
            adj[fill[q]] = p;
            w[fill[q]] = wt;
            fill[q] += 1;
            diag[p] += wt;
            diag[q] += wt;
        }
        Csr {
            n,
            xadj: count,
            adj,
            w,
            diag,
        }
    }

    fn row(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.xadj[p], self.xadj[p + 1]);
        self.adj[a..b].iter().copied().zip(self.w[a..b].iter().copied())
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for p in 0..self.n {
            let off: f64 = self.row(p).map(|(q, w)| w * x[q]).sum();
            out[p] = self.diag[p] * x[p] - off;
        }
    }

    fn gs_sweep(&self, r: &[f64], x: &mut [f64], forward: bool) {
        let mut step = |p: usize| {
            if self.diag[p] > 0.0 {
                let off: f64 = self.row(p).map(|(q, w)| w * x[q]).sum();
                x[p] = (r[p] + off) / self.diag[p];
            }
        };
        if forward {
            (0..self.n).for_each(&mut step);
        } else {
            (0..self.n).rev().for_each(&mut step);
        }
    }

    /// Pairs each unmatched node with its heaviest unmatched neighbor; a node
    /// whose neighbors are all taken joins its heaviest neighbor's pair.
    fn pair(&self) -> (Vec<usize>, usize) {
        let mut agg = vec![usize::MAX; self.n];
        let mut nc = 0;
        for p in 0..self.n {
            if agg[p] != usize::MAX {
                continue;
            }
            let best = self
                .row(p)
                .filter(|&(q, _)| agg[q] == usize::MAX && q != p)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            agg[p] = nc;
            if let Some((q, _)) = best {
                agg[q] = nc;
            }
            nc += 1;
        }
        // fold singletons into a neighboring aggregate
        let mut size = vec![0usize; nc];
        agg.iter().for_each(|&a| size[a] += 1);
        for p in 0..self.n {
            if size[agg[p]] == 1 {
                if let Some((q, _)) = self.row(p).max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0))) {
                    size[agg[p]] = 0;
                    agg[p] = agg[q];
                    size[agg[q]] += 1;
                }
            }
        }
        renumber(&mut agg)
    }
}

fn renumber(agg: &mut [usize]) -> (Vec<usize>, usize) {
    let mut id = std::collections::HashMap::new();
    for a in agg.iter_mut() {
        let next = id.len();
        *a = *id.entry(*a).or_insert(next);
    }
    (agg.to_vec(), id.len())
}

fn coarse_edges(edges: &[(usize, usize, f64)], agg: &[usize]) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<(usize, usize, f64)> = edges
        .iter()
        .filter_map(|&(p, q, w)| {
            let (a, b) = (agg[p], agg[q]);
            (a != b).then(|| (a.min(b), a.max(b), w))
        })
        .collect();
    out.sort_unstable_by_key(|x| (x.0, x.1));
    out.dedup_by(|next, kept| {
        if (next.0, next.1) == (kept.0, kept.1) {
            kept.2 += next.2;
            true
        } else {
            false
        }
    });
    out
}

enum Coarsest {
    /// Lower Cholesky factor of `L + ᾱ·11ᵀ`.
    Dense { n: usize, chol: Vec<f64> },
    Sweeps,
}

pub(crate) struct Amg {
    /// `mats[l]` is level `l`; `aggs[l]` maps level `l` onto `l + 1`.
    mats: Vec<Csr>,
    aggs: Vec<Vec<usize>>,
    coarsest: Coarsest,
}

impl Amg {
    pub(crate) fn new(g: &Graph) -> Amg {
        let mut edges: Vec<(usize, usize, f64)> = g.edges().iter().map(|e| (e.p, e.q, e.w)).collect();
        let mut mats = vec![Csr::from_edges(g.n(), &edges)];
        let mut aggs = Vec::new();
        loop {
            let cur = mats.last().expect("nonempty");
            if cur.n <= DENSE_LIMIT {
                break;
            }
            // two matching passes give aggregates of about four nodes
            let (a1, n1) = cur.pair();
            let e1 = coarse_edges(&edges, &a1);
            let (a2, n2) = Csr::from_edges(n1, &e1).pair();
            if n2 < 2 || n2 as f64 > MIN_SHRINK * cur.n as f64 {
                break;
            }
            let agg: Vec<usize> = a1.iter().map(|&a| a2[a]).collect();
            edges = coarse_edges(&e1, &a2);
            mats.push(Csr::from_edges(n2, &edges));
            aggs.push(agg);
        }
        let last = mats.last().expect("nonempty");
        let coarsest = if last.n <= DENSE_MAX {
            Coarsest::Dense {
                n: last.n,
                chol: shifted_cholesky(last),
            }
        } else {
            Coarsest::Sweeps
        };
        Amg { mats, aggs, coarsest }
    }

    #[cfg(test)]
    fn levels(&self) -> usize {
        self.mats.len()
    }

    /// `z ≈ L⁺ r`, projected onto the complement of the ones vector.
    pub(crate) fn apply(&self, r: &[f64], z: &mut [f64]) {
        let mut rr = r.to_vec();
        project_out_ones(&mut rr);
        let x = self.cycle(0, &rr);
        z.copy_from_slice(&x);
        project_out_ones(z);
    }

    fn cycle(&self, l: usize, r: &[f64]) -> Vec<f64> {
        let a = &self.mats[l];
        let mut x = vec![0.0; a.n];
        if l + 1 == self.mats.len() {
            match &self.coarsest {
                Coarsest::Dense { n, chol } => {
                    cholesky_solve(chol, *n, r, &mut x);
                    project_out_ones(&mut x);
                }
                Coarsest::Sweeps => {
                    for _ in 0..COARSE_SWEEPS {
                        a.gs_sweep(r, &mut x, true);
                        a.gs_sweep(r, &mut x, false);
                    }
                }
            }
            return x;
        }
        a.gs_sweep(r, &mut x, true);
        let mut res = vec![0.0; a.n];
        a.apply(&x, &mut res);
        res.iter_mut().zip(r).for_each(|(s, ri)| *s = ri - *s);
        let agg = &self.aggs[l];
        let coarse = &self.mats[l + 1];
        let mut rc = vec![0.0; coarse.n];
        agg.iter().zip(&res).for_each(|(&c, v)| rc[c] += v);
        let ec = if l + 2 < self.mats.len() {
            self.krylov_correction(l + 1, &rc)
        } else {
            self.cycle(l + 1, &rc)
        };
        x.iter_mut().zip(agg).for_each(|(xi, &c)| *xi += ec[c]);
        a.gs_sweep(r, &mut x, false);
        x
    }
}

impl Amg {
    /// Two steps of flexible CG on level `l`, each preconditioned by one
    /// recursive cycle; the second is skipped once the first has reduced
    /// the residual enough.
    fn krylov_correction(&self, l: usize, r: &[f64]) -> Vec<f64> {
        let a = &self.mats[l];
        let c1 = self.cycle(l, r);
        let mut v1 = vec![0.0; a.n];
        a.apply(&c1, &mut v1);
        let rho1 = dot(&c1, r);
        let alpha1 = dot(&c1, &v1);
        if !(alpha1 > 0.0) {
            return c1;
        }
        let t1 = rho1 / alpha1;
        let r2: Vec<f64> = r.iter().zip(&v1).map(|(ri, vi)| ri - t1 * vi).collect();
        if norm(&r2) <= KRYLOV_SKIP * norm(r) {
            return c1.iter().map(|c| t1 * c).collect();
        }
        let c2 = self.cycle(l, &r2);
        let mut v2 = vec![0.0; a.n];
        a.apply(&c2, &mut v2);
        let gamma = dot(&c2, &v1);
        let alpha2 = dot(&c2, &v2) - gamma * gamma / alpha1;
        if !(alpha2 > 0.0) {
            return c1.iter().map(|c| t1 * c).collect();
        }
        let rho2 = dot(&c2, &r2);
        let (s1, s2) = (t1 - gamma * rho2 / (alpha1 * alpha2), rho2 / alpha2);
        c1.iter().zip(&c2).map(|(x, y)| s1 * x + s2 * y).collect()
    }
}

fn shifted_cholesky(a: &Csr) -> Vec<f64> {
    let n = a.n;
    let total: f64 = a.diag.iter().sum();
    let shift = if total > 0.0 { total / (n * n) as f64 } else { 1.0 };
    let mut m = vec![shift; n * n];
    for p in 0..n {
        m[p * n + p] += a.diag[p];
        for (q, w) in a.row(p) {
            m[p * n + q] -= w;
        }
    }
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        let d = d.max(f64::MIN_POSITIVE).sqrt();
        m[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = s / d;
        }
    }
    m
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64], x: &mut [f64]) {
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * x[k]).sum();
        x[i] = (b[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (x[i] - s) / l[i * n + i];
    }
}
