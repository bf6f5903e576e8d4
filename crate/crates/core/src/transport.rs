//! Exact linear optimal transport by the transportation simplex method.
//!
//! The basis is kept as a spanning tree on the `m + n` row/column nodes, so
//! every returned plan is a vertex of the transportation polytope with at
//! most `m + n - 1` nonzero entries.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::measures::{Coupling, NodeDistribution, MARGINAL_TOL};

/// Minimizes `⟨cost, C⟩` over couplings of `p` and `q`.
pub fn solve_linear_ot(cost: &DMatrix<f64>, p: &NodeDistribution, q: &NodeDistribution) -> Result<Coupling> {
    let plan = transport_simplex(cost, p.as_slice(), q.as_slice())?;
    Coupling::new(plan, p.clone(), q.clone())
}

/// Transportation simplex on raw supplies and demands with equal totals.
pub fn transport_simplex(cost: &DMatrix<f64>, supply: &[f64], demand: &[f64]) -> Result<DMatrix<f64>> {
    let (m, n) = cost.shape();
    if supply.len() != m || demand.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{} x {}", supply.len(), demand.len()),
            got: format!("{m} x {n}"),
        });
    }
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("empty transport problem".into()));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical("cost matrix has non-finite entries".into()));
    }
    if supply.iter().chain(demand).any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidParameter("supplies and demands must be nonnegative".into()));
    }
    let (ts, td): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (ts - td).abs() > MARGINAL_TOL {
        return Err(Error::InfeasibleMarginals(ts, td));
    }
    let mut tree = BasisTree::least_cost_start(cost, supply, demand);
    tree.optimize(cost)?;
    Ok(tree.flow.map(|x| x.max(0.0)))
}

struct BasisTree {
    m: usize,
    n: usize,
    flow: DMatrix<f64>,
    /// Tree adjacency over nodes `0..m` (rows) and `m..m+n` (columns).
    adj: Vec<Vec<usize>>,
}

impl BasisTree {
    /// Matrix-minimum rule: visit cells by increasing cost and close exactly
    /// one line per allocation, so the `m + n - 1` basic cells form a tree.
    fn least_cost_start(cost: &DMatrix<f64>, supply: &[f64], demand: &[f64]) -> Self {
        let (m, n) = cost.shape();
        let mut order: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        order.sort_by(|a, b| cost[*a].total_cmp(&cost[*b]).then(a.cmp(b)));
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let mut row_open = vec![true; m];
        let mut col_open = vec![true; n];
        let (mut open_rows, mut open_cols) = (m, n);
        let mut tree = Self {
            m,
            n,
            flow: DMatrix::zeros(m, n),
            adj: vec![Vec::new(); m + n],
        };
        for (i, j) in order {
            if !row_open[i] || !col_open[j] {
                continue;
            }
            let x = s[i].min(d[j]).max(0.0);
            tree.flow[(i, j)] = x;
            tree.link(i, j);
            s[i] -= x;
            d[j] -= x;
            if open_rows == 1 && open_cols == 1 {
                break;
            }
            let close_row = if open_rows == 1 {
                false
            } else if open_cols == 1 {
                true
            } else {
                s[i] <= d[j]
            };
            if close_row {
                row_open[i] = false;
                open_rows -= 1;
            } else {
                col_open[j] = false;
                open_cols -= 1;
            }
        }
        tree
    }

    fn link(&mut self, i: usize, j: usize) {
        self.adj[i].push(self.m + j);
        self.adj[self.m + j].push(i);
    }

    fn unlink(&mut self, i: usize, j: usize) {
        let c = self.m + j;
        self.adj[i].retain(|&x| x != c);
        self.adj[c].retain(|&x| x != i);
    }

    /// Dual potentials with `u_0 = 0`; returns (row potentials, column potentials).
    fn potentials(&self, cost: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if pot[v].is_nan() {
                    pot[v] = if u < m {
                        cost[(u, v - m)] - pot[u]
                    } else {
                        cost[(v, u - m)] - pot[u]
                    };
                    queue.push_back(v);
                }
            }
        }
        let cols = pot.split_off(m);
        (pot, cols)
    }

    /// Tree path from row node `i` to column node `m + j`, as node list.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let target = self.m + j;
        let mut parent = vec![usize::MAX; self.m + self.n];
        parent[i] = i;
        let mut queue = VecDeque::from([i]);
        while let Some(u) = queue.pop_front() {
            if u == target {
                break;
            }
            for &v in &self.adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let mut nodes = vec![target];
        let mut cur = target;
        while cur != i {
            cur = parent[cur];
            nodes.push(cur);
        }
        nodes.reverse();
        nodes
    }

    fn cell(&self, a: usize, b: usize) -> (usize, usize) {
        if a < self.m {
            (a, b - self.m)
        } else {
            (b, a - self.m)
        }
    }

    fn optimize(&mut self, cost: &DMatrix<f64>) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let scale = cost.amax();
        if scale == 0.0 || m == 1 || n == 1 {
            return Ok(());
        }
        let tol = 1e-12 * scale;
        let max_pivots = 50 * m * n + 1000;
        let mut degenerate_streak = 0;
        for _ in 0..max_pivots {
            let (u, v) = self.potentials(cost);
            let bland = degenerate_streak > m + n;
            let mut entering = None;
            let mut best = -tol;
            'scan: for i in 0..m {
                for j in 0..n {
                    let r = cost[(i, j)] - u[i] - v[j];
                    if r < best {
                        entering = Some((i, j));
                        if bland {
                            break 'scan;
                        }
                        best = r;
                    }
                }
            }
            let Some((ei, ej)) = entering else {
                return Ok(());
            };
            let nodes = self.path(ei, ej);
            // Edges along the path alternate -, +, -, ... starting at row ei.
            let mut theta = f64::INFINITY;
            let mut leaving = None;
            for (k, w) in nodes.windows(2).enumerate() {
                if k % 2 == 0 {
                    let c = self.cell(w[0], w[1]);
                    let f = self.flow[c];
                    let better = match leaving {
                        None => true,
                        Some(prev) => f < theta || (bland && f == theta && c < prev),
                    };
                    if better {
                        theta = f;
                        leaving = Some(c);
                    }
                }
            }
            let (li, lj) = leaving.expect("cycle has a decreasing edge");
            let theta = theta.max(0.0);
            for (k, w) in nodes.windows(2).enumerate() {
                let c = self.cell(w[0], w[1]);
                if k % 2 == 0 {
                    self.flow[c] -= theta;
                } else {
                    self.flow[c] += theta;
                }
            }
            self.flow[(ei, ej)] += theta;
            self.flow[(li, lj)] = 0.0;
            self.unlink(li, lj);
            self.link(ei, ej);
            if theta == 0.0 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
        }
        Err(Error::Numerical(format!(
            "transportation simplex did not terminate within {max_pivots} pivots"
        )))
    }
}
