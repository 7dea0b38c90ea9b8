//! Transportation simplex on the complete bipartite network.
//!
//! The basis is a spanning tree over `m` row nodes and `n` column nodes with
//! exactly `m + n - 1` basic cells. Initial basis from the north-west corner
//! rule, potentials by tree traversal, Dantzig pricing with a switch to
//! Bland's rule after a run of degenerate pivots.

use std::collections::VecDeque;

/// Result of a transportation solve: dense `m x n` flow and its cost.
#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub flow: Vec<f64>,
    pub value: f64,
}

const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    Row(usize),
    Col(usize),
}

struct Basis {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
}

impl Basis {
    fn north_west(supply: &[f64], demand: &[f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        let mut ra = supply[0];
        let mut rb = demand[0];
        loop {
            let x = ra.min(rb).max(0.0);
            cells.push((i, j));
            flow.push(x);
            ra -= x;
            rb -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
                rb = demand[j];
            } else if j == n - 1 || ra <= rb {
                i += 1;
                ra = supply[i];
            } else {
                j += 1;
                rb = demand[j];
            }
        }
        debug_assert_eq!(cells.len(), m + n - 1);
        Basis { m, n, cells, flow }
    }

    /// Adjacency lists: for each node, the basic cell indices touching it.
    fn adjacency(&self) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let mut rows = vec![Vec::new(); self.m];
        let mut cols = vec![Vec::new(); self.n];
        for (e, &(i, j)) in self.cells.iter().enumerate() {
            rows[i].push(e);
            cols[j].push(e);
        }
        (rows, cols)
    }

    fn potentials(&self, cost: &[f64], adj: &(Vec<Vec<usize>>, Vec<Vec<usize>>)) -> (Vec<f64>, Vec<f64>) {
        let (rows, cols) = adj;
        let mut u = vec![f64::NAN; self.m];
        let mut v = vec![f64::NAN; self.n];
        u[0] = 0.0;
        let mut queue = VecDeque::from([Node::Row(0)]);
        while let Some(node) = queue.pop_front() {
            match node {
                Node::Row(i) => {
                    for &e in &rows[i] {
                        let j = self.cells[e].1;
                        if v[j].is_nan() {
                            v[j] = cost[i * self.n + j] - u[i];
                            queue.push_back(Node::Col(j));
                        }
                    }
                }
                Node::Col(j) => {
                    for &e in &cols[j] {
                        let i = self.cells[e].0;
                        if u[i].is_nan() {
                            u[i] = cost[i * self.n + j] - v[j];
                            queue.push_back(Node::Row(i));
                        }
                    }
                }
            }
        }
        (u, v)
    }

    /// Basic cells on the tree path from row `from` to column `to`, in path order.
    fn tree_path(&self, from: usize, to: usize, adj: &(Vec<Vec<usize>>, Vec<Vec<usize>>)) -> Vec<usize> {
        let (rows, cols) = adj;
        // parent edge for each node, discovered by BFS from the row node
        let mut row_parent: Vec<Option<usize>> = vec![None; self.m];
        let mut col_parent: Vec<Option<usize>> = vec![None; self.n];
        let mut row_seen = vec![false; self.m];
        let mut col_seen = vec![false; self.n];
        row_seen[from] = true;
        let mut queue = VecDeque::from([Node::Row(from)]);
        'search: while let Some(node) = queue.pop_front() {
            match node {
                Node::Row(i) => {
                    for &e in &rows[i] {
                        let j = self.cells[e].1;
                        if !col_seen[j] {
                            col_seen[j] = true;
                            col_parent[j] = Some(e);
                            if j == to {
                                break 'search;
                            }
                            queue.push_back(Node::Col(j));
                        }
                    }
                }
                Node::Col(j) => {
                    for &e in &cols[j] {
                        let i = self.cells[e].0;
                        if !row_seen[i] {
                            row_seen[i] = true;
                            row_parent[i] = Some(e);
                            queue.push_back(Node::Row(i));
                        }
                    }
                }
            }
        }
        let mut path = Vec::new();
        let mut node = Node::Col(to);
        loop {
            match node {
                Node::Row(i) if i == from => break,
                Node::Row(i) => {
                    let e = row_parent[i].expect("basis is a spanning tree");
                    path.push(e);
                    node = Node::Col(self.cells[e].1);
                }
                Node::Col(j) => {
                    let e = col_parent[j].expect("basis is a spanning tree");
                    path.push(e);
                    node = Node::Row(self.cells[e].0);
                }
            }
        }
        path.reverse();
        path
    }
}

/// Solves `min Σ c_ij x_ij` over couplings of `supply` and `demand`.
///
/// Both marginals must be strictly positive and have (numerically) equal totals.
pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Solution {
    let (m, n) = (supply.len(), demand.len());
    debug_assert_eq!(cost.len(), m * n);
    let mut basis = Basis::north_west(supply, demand);
    let scale = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs())).max(1.0);
    let tol = 1e-13 * scale;
    let mut in_basis = vec![false; m * n];
    for &(i, j) in &basis.cells {
        in_basis[i * n + j] = true;
    }
    let mut degenerate_run = 0usize;
    let max_pivots = 50 * (m + n) * (m + n) + 1000;

    for _ in 0..max_pivots {
        let adj = basis.adjacency();
        let (u, v) = basis.potentials(cost, &adj);
        let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
        let mut entering = None;
        let mut best = -tol;
        'price: for i in 0..m {
            for j in 0..n {
                if in_basis[i * n + j] {
                    continue;
                }
                let r = cost[i * n + j] - u[i] - v[j];
                if r < best {
                    entering = Some((i, j));
                    best = r;
                    if bland {
                        break 'price;
                    }
                }
            }
        }
        let Some((ei, ej)) = entering else { break };

        let path = basis.tree_path(ei, ej, &adj);
        // Edges alternate -, +, -, ... starting from the one touching row `ei`.
        let mut leave_pos = 0;
        let mut theta = f64::INFINITY;
        for (pos, &e) in path.iter().enumerate().step_by(2) {
            let f = basis.flow[e];
            let better = if bland {
                f < theta || (f == theta && e_index(&basis, e, n) < e_index(&basis, path[leave_pos], n))
            } else {
                f < theta
            };
            if better {
                theta = f;
                leave_pos = pos;
            }
        }
        let theta = theta.max(0.0);
        if theta == 0.0 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis.flow[e] -= theta;
            } else {
                basis.flow[e] += theta;
            }
        }
        let leaving = path[leave_pos];
        let (li, lj) = basis.cells[leaving];
        in_basis[li * n + lj] = false;
        in_basis[ei * n + ej] = true;
        basis.cells[leaving] = (ei, ej);
        basis.flow[leaving] = theta;
    }

    let mut flow = vec![0.0; m * n];
    for (&(i, j), &f) in basis.cells.iter().zip(&basis.flow) {
        flow[i * n + j] = f.max(0.0);
    }
    let value = flow.iter().zip(cost).map(|(f, c)| f * c).sum();
    Solution { flow, value }
}

fn e_index(basis: &Basis, e: usize, n: usize) -> usize {
    let (i, j) = basis.cells[e];
    i * n + j
}
