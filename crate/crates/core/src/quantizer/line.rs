//! Exact integration against one-dimensional measures.
//!
//! A 1-D measure is split into a piecewise-constant part, a multiple of the
//! Cantor measure and a set of atoms. Voronoi cells on the line are
//! intervals bounded by midpoints, so every cell integral has a closed form
//! or a dyadic recursion.

use crate::measures::dyadic::{self, CostIntegrator};
use crate::measures::Measure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub a: f64,
    pub b: f64,
    pub density: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LineMeasure {
    /// Sorted, non-overlapping, positive-density pieces.
    pieces: Vec<Piece>,
    cantor_weight: f64,
    /// Sorted atoms `(x, mass)`.
    atoms: Vec<(f64, f64)>,
    lo: f64,
    hi: f64,
}

fn collect(measure: &Measure, weight: f64, pieces: &mut Vec<Piece>, cantor: &mut f64, atoms: &mut Vec<(f64, f64)>) {
    match measure {
        Measure::Discrete(m) => {
            atoms.extend(m.points().zip(m.masses()).map(|(p, &w)| (p[0], w * weight)));
        }
        Measure::Gridded(g) => {
            for (i, &v) in g.values().iter().enumerate() {
                if v > 0.0 {
                    let [a, b] = g.cell_interval(0, i);
                    pieces.push(Piece { a, b, density: v * weight });
                }
            }
        }
        Measure::Cantor(_) => *cantor += weight,
        Measure::Mixture(mix) => {
            for (w, c) in mix.components() {
                collect(c, weight * w, pieces, cantor, atoms);
            }
        }
    }
}

/// Overlays possibly overlapping pieces into a sorted disjoint refinement.
fn overlay(mut pieces: Vec<Piece>) -> Vec<Piece> {
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    if pieces.windows(2).all(|w| w[0].b <= w[1].a) {
        return pieces;
    }
    let mut cuts: Vec<f64> = pieces.iter().flat_map(|p| [p.a, p.b]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let density: f64 = pieces.iter().filter(|p| p.a <= mid && mid <= p.b).map(|p| p.density).sum();
        if density > 0.0 {
            out.push(Piece { a: w[0], b: w[1], density });
        }
    }
    out
}

/// `∫_a^b |x - c|^p dx`.
pub(crate) fn uniform_cost(a: f64, b: f64, c: f64, p: f64) -> f64 {
    let (u, v) = (a - c, b - c);
    if p == 2.0 {
        (v * v * v - u * u * u) / 3.0
    } else if p == 1.0 {
        0.5 * (v * v.abs() - u * u.abs())
    } else {
        let prim = |t: f64| t.signum() * t.abs().powf(p + 1.0) / (p + 1.0);
        prim(v) - prim(u)
    }
}

impl LineMeasure {
    pub(crate) fn new(measure: &Measure) -> Self {
        debug_assert_eq!(measure.dim(), 1);
        let mut pieces = Vec::new();
        let mut cantor = 0.0;
        let mut atoms = Vec::new();
        collect(measure, 1.0, &mut pieces, &mut cantor, &mut atoms);
        let pieces = overlay(pieces);
        atoms.sort_by(|x: &(f64, f64), y| x.0.total_cmp(&y.0));
        let [[lo, hi]] = measure.support_bounds()[..] else { unreachable!("1-d measure") };
        Self { pieces, cantor_weight: cantor, atoms, lo, hi }
    }

    pub(crate) fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub(crate) fn cantor_weight(&self) -> f64 {
        self.cantor_weight
    }

    pub(crate) fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub(crate) fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn pieces_in(&self, l: f64, r: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let start = self.pieces.partition_point(|p| p.b <= l);
        self.pieces[start..]
            .iter()
            .take_while(move |p| p.a < r)
            .map(move |p| (p.a.max(l), p.b.min(r), p.density))
            .filter(|(a, b, _)| b > a)
    }

    /// Continuous mass of `[l, r]`.
    pub(crate) fn cont_mass(&self, l: f64, r: f64) -> f64 {
        if r <= l {
            return 0.0;
        }
        let mut m: f64 = self.pieces_in(l, r).map(|(a, b, rho)| rho * (b - a)).sum();
        if self.cantor_weight > 0.0 {
            m += self.cantor_weight * dyadic::mass(l, r);
        }
        m
    }

    fn cont_moment(&self, l: f64, r: f64) -> f64 {
        if r <= l {
            return 0.0;
        }
        let mut m: f64 = self.pieces_in(l, r).map(|(a, b, rho)| rho * 0.5 * (b * b - a * a)).sum();
        if self.cantor_weight > 0.0 {
            m += self.cantor_weight * dyadic::first_moment(l, r);
        }
        m
    }

    fn cont_cost(&self, l: f64, r: f64, c: f64, integ: &CostIntegrator, p: f64) -> f64 {
        if r <= l {
            return 0.0;
        }
        let mut s: f64 = self.pieces_in(l, r).map(|(a, b, rho)| rho * uniform_cost(a, b, c, p)).sum();
        if self.cantor_weight > 0.0 {
            s += self.cantor_weight * integ.cost(l, r, c);
        }
        s
    }

    /// Voronoi structure of `centers` (distinct): each center's cell
    /// interval and the atoms it owns.
    pub(crate) fn cells(&self, centers: &[f64]) -> Vec<Cell> {
        let n = centers.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| centers[i].total_cmp(&centers[j]));
        let mut cells: Vec<Cell> = (0..n)
            .map(|_| Cell { l: self.lo, r: self.hi, atoms: Vec::new() })
            .collect();
        for k in 0..n {
            let i = order[k];
            let l = if k == 0 { self.lo } else { 0.5 * (centers[order[k - 1]] + centers[i]) };
            let r = if k + 1 == n { self.hi } else { 0.5 * (centers[i] + centers[order[k + 1]]) };
            cells[i].l = l.max(self.lo).min(self.hi);
            cells[i].r = r.min(self.hi).max(self.lo);
        }
        let sorted: Vec<f64> = order.iter().map(|&i| centers[i]).collect();
        for (a, &(x, _)) in self.atoms.iter().enumerate() {
            let pos = sorted.partition_point(|&s| s < x);
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for k in [pos.wrapping_sub(1), pos] {
                if k < n {
                    let i = order[k];
                    let d = (x - centers[i]).abs();
                    if d < best_d || (d == best_d && i < best) {
                        best = i;
                        best_d = d;
                    }
                }
            }
            cells[best].atoms.push(a);
        }
        cells
    }

    pub(crate) fn cell_mass(&self, cell: &Cell) -> f64 {
        self.cont_mass(cell.l, cell.r) + cell.atoms.iter().map(|&a| self.atoms[a].1).sum::<f64>()
    }

    pub(crate) fn cell_cost(&self, cell: &Cell, c: f64, integ: &CostIntegrator, p: f64) -> f64 {
        self.cont_cost(cell.l, cell.r, c, integ, p)
            + cell.atoms.iter().map(|&a| self.atoms[a].1 * (self.atoms[a].0 - c).abs().powf(p)).sum::<f64>()
    }

    /// Center of mass of a cell, `None` when it carries no mass.
    pub(crate) fn cell_centroid(&self, cell: &Cell) -> Option<f64> {
        let mass = self.cell_mass(cell);
        if mass <= 0.0 {
            return None;
        }
        let moment = self.cont_moment(cell.l, cell.r)
            + cell.atoms.iter().map(|&a| self.atoms[a].0 * self.atoms[a].1).sum::<f64>();
        Some((moment / mass).clamp(cell.l, cell.r))
    }

    /// Weighted median of a cell by bisection on its distribution function.
    pub(crate) fn cell_median(&self, cell: &Cell) -> Option<f64> {
        let mass = self.cell_mass(cell);
        if mass <= 0.0 {
            return None;
        }
        let below = |c: f64| {
            self.cont_mass(cell.l, c)
                + cell.atoms.iter().filter(|&&a| self.atoms[a].0 <= c).map(|&a| self.atoms[a].1).sum::<f64>()
        };
        let (mut a, mut b) = (cell.l, cell.r);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if below(mid) >= 0.5 * mass {
                b = mid;
            } else {
                a = mid;
            }
        }
        Some(b)
    }

    /// Minimizer of the cell energy by golden-section search on `[l, r]`;
    /// the energy is convex in the center.
    pub(crate) fn cell_minimizer(&self, cell: &Cell, integ: &CostIntegrator, p: f64) -> Option<f64> {
        if self.cell_mass(cell) <= 0.0 {
            return None;
        }
        let f = |c: f64| self.cell_cost(cell, c, integ, p);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (cell.l, cell.r);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let (mut f1, mut f2) = (f(x1), f(x2));
        let tol = 1e-13 * (self.hi - self.lo).max(f64::MIN_POSITIVE);
        while b - a > tol {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = f(x2);
            }
        }
        Some(if f1 <= f2 { x1 } else { x2 })
    }

    /// Farthest support point of a cell from `c` (the Cantor part is
    /// bounded by the cell interval itself).
    pub(crate) fn cell_reach(&self, cell: &Cell, c: f64) -> f64 {
        let mut reach: f64 = 0.0;
        for (a, b, _) in self.pieces_in(cell.l, cell.r) {
            reach = reach.max((a - c).abs()).max((b - c).abs());
        }
        if self.cantor_weight > 0.0 && dyadic::mass(cell.l, cell.r) > 0.0 {
            reach = reach.max((cell.l.max(0.0) - c).abs()).max((cell.r.min(1.0) - c).abs());
        }
        for &a in &cell.atoms {
            reach = reach.max((self.atoms[a].0 - c).abs());
        }
        reach
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Cell {
    pub l: f64,
    pub r: f64,
    pub atoms: Vec<usize>,
}
