//! Transportation simplex on the bipartite source/target graph.
//!
//! The basis is a spanning tree of `m + n - 1` cells. Each pivot recomputes
//! node potentials from the tree, prices cells in blocks, and pushes flow
//! around the unique tree cycle closed by the entering cell. Long runs of
//! degenerate pivots switch pricing to Bland's smallest-index rule, which
//! cannot cycle.

use super::{check_exponent, distance, TransportPlan, MARGINAL_TOL};
use crate::error::{invalid, Error, Result};
use crate::measures::DiscreteMeasure;

/// Largest support size accepted on either side.
pub const MAX_SUPPORT: usize = 2000;

/// An optimal plan together with the dual solution certifying it.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub plan: TransportPlan,
    pub cost: f64,
    pub row_potentials: Vec<f64>,
    pub col_potentials: Vec<f64>,
    /// `min_ij c_ij - u_i - v_j`; nonnegative up to rounding at optimality.
    pub min_reduced_cost: f64,
    pub pivots: usize,
}

/// Optimal plan between `mu` and `nu` for the cost `|x - y|^p`, and its
/// cost `W_p^p`.
pub fn solve_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<(TransportPlan, f64)> {
    let cert = solve_with_certificate(mu, nu, p)?;
    Ok((cert.plan, cert.cost))
}

pub fn solve_with_certificate(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<Certificate> {
    check_exponent(p)?;
    if mu.dim() != nu.dim() {
        return Err(invalid!("dimension mismatch: {} vs {}", mu.dim(), nu.dim()));
    }
    let (ma, mb) = (mu.total_mass(), nu.total_mass());
    if (ma - mb).abs() > MARGINAL_TOL * ma {
        return Err(invalid!("total masses differ: {ma} vs {mb}"));
    }
    if mu.len() > MAX_SUPPORT || nu.len() > MAX_SUPPORT {
        return Err(Error::Capacity(format!(
            "supports of size {} and {} exceed the limit of {MAX_SUPPORT}",
            mu.len(),
            nu.len()
        )));
    }
    let (m, n) = (mu.len(), nu.len());
    let cost: Vec<f64> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| distance(mu.point(i), nu.point(j)).powf(p))
        .collect();
    let supply = mu.masses().to_vec();
    let demand: Vec<f64> = nu.masses().iter().map(|b| b * ma / mb).collect();

    let mut tree = Tree::northwest_corner(&supply, &demand);
    let pivots = tree.optimize(&cost)?;

    let mut entries = vec![0.0; m * n];
    for e in &tree.edges {
        entries[e.row * n + e.col] += e.flow.max(0.0);
    }
    let total: f64 = entries.iter().zip(&cost).map(|(f, c)| f * c).sum();
    let min_reduced_cost = (0..m * n)
        .map(|k| cost[k] - tree.potential[k / n] - tree.potential[m + k % n])
        .fold(f64::INFINITY, f64::min);
    let plan = TransportPlan::unchecked(mu, nu, entries)?;
    Ok(Certificate {
        plan,
        cost: total,
        row_potentials: tree.potential[..m].to_vec(),
        col_potentials: tree.potential[m..].to_vec(),
        min_reduced_cost,
        pivots,
    })
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    row: usize,
    col: usize,
    flow: f64,
}

struct Tree {
    m: usize,
    n: usize,
    edges: Vec<Edge>,
    /// Edge ids incident to each node; rows are `0..m`, columns `m..m+n`.
    adjacency: Vec<Vec<usize>>,
    potential: Vec<f64>,
    parent_edge: Vec<usize>,
    depth: Vec<usize>,
}

impl Tree {
    fn northwest_corner(supply: &[f64], demand: &[f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut a = supply.to_vec();
        let mut b = demand.to_vec();
        let mut edges = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        loop {
            let x = a[i].min(b[j]);
            edges.push(Edge { row: i, col: j, flow: x });
            a[i] -= x;
            b[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        let mut adjacency = vec![Vec::new(); m + n];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.row].push(k);
            adjacency[m + e.col].push(k);
        }
        Self {
            m,
            n,
            edges,
            adjacency,
            potential: vec![0.0; m + n],
            parent_edge: vec![usize::MAX; m + n],
            depth: vec![0; m + n],
        }
    }

    fn other_end(&self, edge: usize, node: usize) -> usize {
        let e = self.edges[edge];
        if node == e.row {
            self.m + e.col
        } else {
            e.row
        }
    }

    /// Potentials with `u_0 = 0` and `u_i + v_j = c_ij` on tree cells.
    fn update_potentials(&mut self, cost: &[f64]) {
        let mut stack = vec![0usize];
        self.potential[0] = 0.0;
        self.parent_edge[0] = usize::MAX;
        self.depth[0] = 0;
        let mut seen = vec![false; self.m + self.n];
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &k in &self.adjacency[node] {
                let next = self.other_end(k, node);
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let e = self.edges[k];
                self.potential[next] = cost[e.row * self.n + e.col] - self.potential[node];
                self.parent_edge[next] = k;
                self.depth[next] = self.depth[node] + 1;
                stack.push(next);
            }
        }
    }

    fn reduced(&self, cost: &[f64], k: usize) -> f64 {
        cost[k] - self.potential[k / self.n] - self.potential[self.m + k % self.n]
    }

    fn optimize(&mut self, cost: &[f64]) -> Result<usize> {
        let (m, n) = (self.m, self.n);
        let cells = m * n;
        let scale = cost.iter().fold(0.0f64, |a, &c| a.max(c)).max(f64::MIN_POSITIVE);
        let eps = 1e-12 * scale;
        let block = ((cells as f64).sqrt() as usize).max(32).min(cells);
        let max_pivots = 1_000_000 + 100 * cells;
        let mut cursor = 0usize;
        let mut degenerate_run = 0usize;
        let mut pivots = 0usize;
        loop {
            self.update_potentials(cost);
            let bland = degenerate_run > 2 * (m + n);
            let entering = if bland {
                (0..cells).find(|&k| self.reduced(cost, k) < -eps)
            } else {
                self.price_block(cost, eps, block, &mut cursor)
            };
            let Some(k) = entering else {
                return Ok(pivots);
            };
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::Solver(format!("no convergence after {max_pivots} pivots")));
            }
            let (row, col) = (k / n, k % n);
            let cycle = self.cycle(row, m + col);
            // cycle[0] is adjacent to the entering column and loses flow
            let mut leaving: Option<usize> = None;
            for (pos, &edge) in cycle.iter().enumerate() {
                if pos % 2 == 0 {
                    let better = match leaving {
                        None => true,
                        Some(l) => {
                            let (fl, fe) = (self.edges[l].flow, self.edges[edge].flow);
                            fe < fl || (bland && fe == fl && self.cell(edge) < self.cell(l))
                        }
                    };
                    if better {
                        leaving = Some(edge);
                    }
                }
            }
            let leaving = leaving.expect("a tree cycle has at least one backward cell");
            let theta = self.edges[leaving].flow;
            for (pos, &edge) in cycle.iter().enumerate() {
                let f = &mut self.edges[edge].flow;
                if pos % 2 == 0 {
                    *f = (*f - theta).max(0.0);
                } else {
                    *f += theta;
                }
            }
            degenerate_run = if theta > 0.0 { 0 } else { degenerate_run + 1 };
            let old = self.edges[leaving];
            self.adjacency[old.row].retain(|&x| x != leaving);
            self.adjacency[m + old.col].retain(|&x| x != leaving);
            self.edges[leaving] = Edge { row, col, flow: theta };
            self.adjacency[row].push(leaving);
            self.adjacency[m + col].push(leaving);
        }
    }

    fn cell(&self, edge: usize) -> usize {
        self.edges[edge].row * self.n + self.edges[edge].col
    }

    fn price_block(&self, cost: &[f64], eps: f64, block: usize, cursor: &mut usize) -> Option<usize> {
        let cells = cost.len();
        let mut best: Option<(usize, f64)> = None;
        let mut scanned = 0;
        while scanned < cells {
            let end = (scanned + block).min(cells);
            for _ in scanned..end {
                let k = *cursor;
                *cursor = if k + 1 == cells { 0 } else { k + 1 };
                let r = self.reduced(cost, k);
                if r < -eps && best.map_or(true, |(_, b)| r < b) {
                    best = Some((k, r));
                }
            }
            scanned = end;
            if best.is_some() {
                break;
            }
        }
        best.map(|(k, _)| k)
    }

    /// Tree path from `col_node` to `row_node`, as edge ids in that order.
    fn cycle(&self, row_node: usize, col_node: usize) -> Vec<usize> {
        let (mut a, mut b) = (row_node, col_node);
        let mut from_row = Vec::new();
        let mut from_col = Vec::new();
        while a != b {
            if self.depth[a] >= self.depth[b] {
                let k = self.parent_edge[a];
                from_row.push(k);
                a = self.other_end(k, a);
            } else {
                let k = self.parent_edge[b];
                from_col.push(k);
                b = self.other_end(k, b);
            }
        }
        from_col.extend(from_row.into_iter().rev());
        from_col
    }
}
