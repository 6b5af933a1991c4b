//! Laplacian solves `L x = b` with `b ⊥ 1`, returning `x ⊥ 1`.
//!
//! Preconditioned conjugate gradients on the semidefinite system with one of
//! three preconditioners: the Laplacian diagonal (Jacobi), an exact solve
//! with a maximum-weight spanning tree of the same graph, which suits
//! tree-plus-few-edges graphs, or an aggregation multigrid cycle whose
//! iteration count stays flat as graphs grow.

use crate::amg::Amg;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{axpy, dot, norm, project_out_ones};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    #[default]
    Jacobi,
    SpanningTree,
    Multigrid,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    /// Defaults to `10 n` when `None`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final relative residual `‖Lx − b‖ / ‖b‖`.
    pub residual: f64,
    pub converged: bool,
}

/// One-shot Jacobi-preconditioned solve.
pub fn solve_laplacian(g: &Graph, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    let opts = SolveOptions {
        tol,
        max_iter: Some(max_iter),
        preconditioner: Preconditioner::Jacobi,
    };
    LaplacianSolver::new(g, opts)?.solve(b)
}

const RESTARTS: usize = 4;

enum Precond {
    Jacobi(Vec<f64>),
    Tree(TreeFactor),
    Multigrid(Amg),
}

/// Reusable solver bound to one connected graph.
pub struct LaplacianSolver<'g> {
    g: &'g Graph,
    opts: SolveOptions,
    precond: Precond,
}

impl<'g> LaplacianSolver<'g> {
    pub fn new(g: &'g Graph, opts: SolveOptions) -> Result<Self> {
        g.require_connected()?;
        if !(opts.tol > 0.0) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        let precond = match opts.preconditioner {
            Preconditioner::Jacobi => {
                let d = g.degrees();
                Precond::Jacobi(d.iter().map(|&x| if x > 0.0 { 1.0 / x } else { 0.0 }).collect())
            }
            Preconditioner::SpanningTree => Precond::Tree(TreeFactor::new(g)),
            Preconditioner::Multigrid => Precond::Multigrid(Amg::new(g)),
        };
        Ok(LaplacianSolver { g, opts, precond })
    }

    pub fn graph(&self) -> &Graph {
        self.g
    }

    fn apply_precond(&self, r: &[f64], z: &mut [f64]) {
        match &self.precond {
            Precond::Jacobi(inv) => {
                z.iter_mut()
                    .zip(r.iter().zip(inv))
                    .for_each(|(zi, (ri, di))| *zi = ri * di);
                project_out_ones(z);
            }
            Precond::Tree(t) => t.solve(r, z),
            Precond::Multigrid(m) => m.apply(r, z),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        let n = self.g.n();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let bnorm = norm(b);
        let sum: f64 = b.iter().sum();
        if sum.abs() > 1e-8 * bnorm.max(f64::MIN_POSITIVE) {
            return Err(Error::NotOrthogonal { sum });
        }
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok((
                x,
                SolveReport {
                    iterations: 0,
                    residual: 0.0,
                    converged: true,
                },
            ));
        }
        let max_iter = self.opts.max_iter.unwrap_or(10 * n.max(1));
        let mut iterations = 0;
        let mut residual = f64::INFINITY;
        let mut r = b.to_vec();
        project_out_ones(&mut r);
        // The recurrence residual drifts from the true one near the
        // tolerance; restart from the true residual a few times.
        for _ in 0..RESTARTS {
            iterations += self.cg(&mut x, &r, bnorm, max_iter - iterations);
            project_out_ones(&mut x);
            self.g.apply_laplacian(&x, &mut r);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
            project_out_ones(&mut r);
            residual = norm(&r) / bnorm;
            if residual <= self.opts.tol || iterations >= max_iter {
                break;
            }
        }
        Ok((
            x,
            SolveReport {
                iterations,
                residual,
                converged: residual <= self.opts.tol,
            },
        ))
    }

    /// CG on `L d = r0`, accumulating `d` into `x`; returns iterations used.
    fn cg(&self, x: &mut [f64], r0: &[f64], bnorm: f64, budget: usize) -> usize {
        let n = self.g.n();
        let mut r = r0.to_vec();
        let mut z = vec![0.0; n];
        self.apply_precond(&r, &mut z);
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let mut r_prev = r.clone();
        let mut residual = norm(&r) / bnorm;
        let mut iterations = 0;
        while residual > self.opts.tol && iterations < budget {
            self.g.apply_laplacian(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            axpy(alpha, &p, x);
            r_prev.copy_from_slice(&r);
            axpy(-alpha, &ap, &mut r);
            iterations += 1;
            residual = norm(&r) / bnorm;
            if residual <= self.opts.tol {
                break;
            }
            self.apply_precond(&r, &mut z);
            let rz_new = dot(&r, &z);
            // Polak–Ribière form, which tolerates a nonlinear preconditioner
            let beta = (rz_new - dot(&z, &r_prev)) / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        iterations
    }

    /// Solve that treats non-convergence as an error.
    pub fn solve_strict(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (x, rep) = self.solve(b)?;
        if !rep.converged {
            return Err(Error::NoConvergence {
                iterations: rep.iterations,
                residual: rep.residual,
            });
        }
        Ok(x)
    }
}

/// Exact pseudo-inverse of a spanning-tree Laplacian, applied by one upward
/// and one downward sweep over a BFS ordering.
struct TreeFactor {
    order: Vec<usize>,
    parent: Vec<usize>,
    parent_w: Vec<f64>,
}

impl TreeFactor {
    fn new(g: &Graph) -> TreeFactor {
        let n = g.n();
        let forest = g.maximum_spanning_forest();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for id in forest {
            let e = g.edges()[id];
            adj[e.p].push((e.q, e.w));
            adj[e.q].push((e.p, e.w));
        }
        let mut parent = vec![usize::MAX; n];
        let mut parent_w = vec![0.0; n];
        let mut order = Vec::with_capacity(n);
        if n > 0 {
            parent[0] = 0;
            order.push(0);
            let mut head = 0;
            while head < order.len() {
                let v = order[head];
                head += 1;
                for &(u, w) in &adj[v] {
                    if parent[u] == usize::MAX {
                        parent[u] = v;
                        parent_w[u] = w;
                        order.push(u);
                    }
                }
            }
        }
        TreeFactor {
            order,
            parent,
            parent_w,
        }
    }

    fn solve(&self, r: &[f64], z: &mut [f64]) {
        let mut flow = r.to_vec();
        let mean = flow.iter().sum::<f64>() / flow.len().max(1) as f64;
        flow.iter_mut().for_each(|f| *f -= mean);
        for &v in self.order.iter().skip(1).rev() {
            let f = flow[v];
            flow[self.parent[v]] += f;
        }
        if let Some(&root) = self.order.first() {
            z[root] = 0.0;
        }
        for &v in self.order.iter().skip(1) {
            z[v] = z[self.parent[v]] + flow[v] / self.parent_w[v];
        }
        project_out_ones(z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p3() -> Graph {
        Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    fn random_connected(n: usize, extra: usize, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut es: Vec<(usize, usize, f64)> = (1..n)
            .map(|i| (rng.random_range(0..i), i, rng.random_range(0.1..3.0)))
            .collect();
        for _ in 0..extra {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b {
                es.push((a, b, rng.random_range(0.1..3.0)));
            }
        }
        Graph::from_edges(n, es).unwrap()
    }

    #[test]
    fn p3_solution() {
        let (x, rep) = solve_laplacian(&p3(), &[1.0, 0.0, -1.0], 1e-12, 100).unwrap();
        assert!(rep.converged);
        for (a, b) in x.iter().zip([1.0, 0.0, -1.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_and_ones_rhs() {
        let (x, rep) = solve_laplacian(&p3(), &[0.0; 3], 1e-8, 10).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(rep.iterations, 0);
        assert!(matches!(
            solve_laplacian(&p3(), &[1.0; 3], 1e-8, 10),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn disconnected_is_rejected() {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(matches!(
            LaplacianSolver::new(&g, SolveOptions::default()),
            Err(Error::Disconnected(2))
        ));
    }

    #[test]
    fn tree_preconditioner_is_exact_on_trees() {
        let g = random_connected(200, 0, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut b: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        project_out_ones(&mut b);
        let opts = SolveOptions {
            tol: 1e-10,
            preconditioner: Preconditioner::SpanningTree,
            ..Default::default()
        };
        let (_, rep) = LaplacianSolver::new(&g, opts).unwrap().solve(&b).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 2, "{rep:?}");
    }

    #[test]
    fn contract_holds_for_both_preconditioners() {
        for seed in 0..10 {
            let n = 30 + 7 * seed as usize;
            let g = random_connected(n, 2 * n, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let mut b: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            project_out_ones(&mut b);
            for pc in [Preconditioner::Jacobi, Preconditioner::SpanningTree, Preconditioner::Multigrid] {
                let opts = SolveOptions {
                    tol: 1e-9,
                    preconditioner: pc,
                    ..Default::default()
                };
                let (x, rep) = LaplacianSolver::new(&g, opts).unwrap().solve(&b).unwrap();
                assert!(rep.converged);
                let lx = g.laplacian_apply(&x).unwrap();
                let res: f64 = lx.iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
                assert!(res <= 1e-9 * norm(&b) * 1.0001);
                assert!(x.iter().sum::<f64>().abs() <= 1e-8 * norm(&x));
            }
        }
    }
}
