//! Exact solver for the discrete transportation problem.
//!
//! Network simplex specialized to the dense bipartite transport graph:
//! `k` sources with supplies `a`, `m` sinks with demands `b`, cost `c[i][j]`
//! per unit of flow. The basis is a spanning tree of `k + m - 1` cells kept
//! explicitly; each pivot finds the most negative reduced cost, pushes flow
//! around the unique tree cycle and swaps the leaving cell out. Degenerate
//! pivots fall back to Bland's smallest-index rule, which guarantees
//! termination. At desk scale (k, m <= a few hundred) this is exact and
//! fast; no approximation is involved anywhere.

/// Solves `min Σ plan[i][j] c[i][j]` subject to the marginal constraints
/// `Σ_j plan[i][j] = a[i]`, `Σ_i plan[i][j] = b[j]`, `plan >= 0`.
///
/// `a` and `b` must have equal positive totals (probability weights here).
/// Returns the optimal plan, row-major `k`×`m`.
pub fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Vec<f64> {
    solve_with_duals(a, b, cost).0
}

/// Like [`solve`] but also returns the final dual potentials `(u, v)`,
/// which certify optimality: dual feasibility `c_ij - u_i - v_j >= 0` plus
/// complementary slackness on the returned plan.
pub fn solve_with_duals(a: &[f64], b: &[f64], cost: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = a.len();
    let m = b.len();
    assert_eq!(cost.len(), k * m, "cost matrix shape");
    debug_assert!(a.iter().all(|x| *x >= 0.0) && b.iter().all(|x| *x >= 0.0));

    let mut state = Simplex::northwest(a, b, cost);
    let pivot_eps = 1e-13 * (1.0 + cost.iter().fold(0.0_f64, |acc, c| acc.max(c.abs())));

    // Most-negative pivoting normally; Bland's rule after a run of
    // degenerate pivots to rule out cycling.
    let mut degenerate_run = 0usize;
    let max_pivots = 1_000_000usize;
    let mut duals = (vec![0.0; k], vec![0.0; m]);
    for _ in 0..max_pivots {
        let (u, v) = state.potentials();
        let entering = if degenerate_run > 100 * (k + m) {
            state.entering_bland(&u, &v, pivot_eps)
        } else {
            state.entering_most_negative(&u, &v, pivot_eps)
        };
        duals = (u, v);
        let Some((ei, ej)) = entering else { break };
        let theta = state.pivot(ei, ej);
        if theta == 0.0 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
    }
    let (u, v) = duals;
    (state.into_plan(), u, v)
}

struct Simplex {
    k: usize,
    m: usize,
    cost: Vec<f64>,
    /// Basic cells (i, j) with their flows; always k + m - 1 entries.
    basis: Vec<(usize, usize, f64)>,
    /// Adjacency: node -> indices into `basis`. Rows are nodes 0..k,
    /// columns are nodes k..k+m.
    adj: Vec<Vec<usize>>,
}

impl Simplex {
    /// Northwest-corner initial basic feasible solution: exactly
    /// `k + m - 1` basic cells forming a spanning tree (some possibly with
    /// zero flow when supplies and demands tie).
    fn northwest(a: &[f64], b: &[f64], cost: &[f64]) -> Simplex {
        let k = a.len();
        let m = b.len();
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let mut basis = Vec::with_capacity(k + m - 1);
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let q = ra[i].min(rb[j]).max(0.0);
            basis.push((i, j, q));
            if i == k - 1 && j == m - 1 {
                break;
            }
            ra[i] -= q;
            rb[j] -= q;
            if j == m - 1 || (ra[i] <= rb[j] && i < k - 1) {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(basis.len(), k + m - 1);
        let mut s = Simplex { k, m, cost: cost.to_vec(), basis, adj: vec![Vec::new(); k + m] };
        s.rebuild_adjacency();
        s
    }

    fn rebuild_adjacency(&mut self) {
        for l in &mut self.adj {
            l.clear();
        }
        for (idx, &(i, j, _)) in self.basis.iter().enumerate() {
            self.adj[i].push(idx);
            self.adj[self.k + j].push(idx);
        }
    }

    /// Dual potentials from the spanning tree: fix u[0] = 0 and propagate
    /// `u_i + v_j = c_ij` across basic cells.
    fn potentials(&self) -> (Vec<f64>, Vec<f64>) {
        let (k, m) = (self.k, self.m);
        let mut u = vec![f64::NAN; k];
        let mut v = vec![f64::NAN; m];
        u[0] = 0.0;
        let mut stack = vec![0usize]; // node ids
        let mut seen = vec![false; k + m];
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &cell in &self.adj[node] {
                let (i, j, _) = self.basis[cell];
                let (row_node, col_node) = (i, k + j);
                let other = if node == row_node { col_node } else { row_node };
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                if other >= k {
                    v[other - k] = self.cost[i * m + j] - u[i];
                } else {
                    u[other] = self.cost[i * m + j] - v[j];
                }
                stack.push(other);
            }
        }
        (u, v)
    }

    fn entering_most_negative(&self, u: &[f64], v: &[f64], eps: f64) -> Option<(usize, usize)> {
        let m = self.m;
        let mut best = -eps;
        let mut cell = None;
        for i in 0..self.k {
            for j in 0..m {
                let red = self.cost[i * m + j] - u[i] - v[j];
                if red < best {
                    best = red;
                    cell = Some((i, j));
                }
            }
        }
        cell
    }

    fn entering_bland(&self, u: &[f64], v: &[f64], eps: f64) -> Option<(usize, usize)> {
        let m = self.m;
        for i in 0..self.k {
            for j in 0..m {
                if self.cost[i * m + j] - u[i] - v[j] < -eps {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Pushes flow around the unique cycle closed by the entering cell and
    /// swaps out the blocking cell. Returns the amount of flow moved.
    fn pivot(&mut self, ei: usize, ej: usize) -> f64 {
        let k = self.k;
        // Tree path from the entering cell's row node to its column node.
        let path = self.tree_path(ei, k + ej);

        // Cycle cells: entering first (sign +), then the path cells from the
        // column node back to the row node with alternating signs.
        let mut minus_cells: Vec<usize> = Vec::new();
        let mut plus_cells: Vec<usize> = Vec::new();
        for (pos, &cell) in path.iter().enumerate() {
            if pos % 2 == 0 {
                minus_cells.push(cell);
            } else {
                plus_cells.push(cell);
            }
        }

        // Blocking cell: minimum flow among the minus cells, ties broken by
        // lexicographic (i, j) for determinism.
        let mut theta = f64::INFINITY;
        let mut leave = minus_cells[0];
        for &cell in &minus_cells {
            let (i, j, f) = self.basis[cell];
            let (li, lj, _) = self.basis[leave];
            let take = f < theta || (f == theta && (i, j) < (li, lj));
            if take {
                theta = f;
                leave = cell;
            }
        }

        for &cell in &plus_cells {
            self.basis[cell].2 += theta;
        }
        for &cell in &minus_cells {
            self.basis[cell].2 -= theta;
            if self.basis[cell].2 < 0.0 {
                self.basis[cell].2 = 0.0; // rounding guard
            }
        }
        // Replace the leaving cell with the entering one.
        self.basis[leave] = (ei, ej, theta);
        self.rebuild_adjacency();
        theta
    }

    /// Basic-cell path between two nodes of the spanning tree.
    fn tree_path(&self, from: usize, to: usize) -> Vec<usize> {
        let n_nodes = self.k + self.m;
        let mut parent_cell = vec![usize::MAX; n_nodes];
        let mut parent_node = vec![usize::MAX; n_nodes];
        let mut seen = vec![false; n_nodes];
        seen[from] = true;
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(node) = queue.pop_front() {
            if node == to {
                break;
            }
            for &cell in &self.adj[node] {
                let (i, j, _) = self.basis[cell];
                let other = if node == i { self.k + j } else { i };
                if !seen[other] {
                    seen[other] = true;
                    parent_cell[other] = cell;
                    parent_node[other] = node;
                    queue.push_back(other);
                }
            }
        }
        debug_assert!(seen[to], "basis must span the bipartite graph");
        let mut path = Vec::new();
        let mut node = to;
        while node != from {
            path.push(parent_cell[node]);
            node = parent_node[node];
        }
        path
    }

    fn into_plan(self) -> Vec<f64> {
        let mut plan = vec![0.0; self.k * self.m];
        for (i, j, f) in self.basis {
            plan[i * self.m + j] += f;
        }
        plan
    }
}
