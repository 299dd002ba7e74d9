//! Globally optimal quantization of a discretized line measure.
//!
//! On the line every Voronoi cell is an interval, so an optimal `N`-point
//! quantizer of a measure made of ordered, disjoint elements is an optimal
//! partition of the element sequence into `N` contiguous runs, each run
//! paying the minimum over `c` of its cost `∫ |x - c|^p`. The optimal split
//! points are monotone in the right end, which the divide-and-conquer
//! evaluation of each layer relies on.

use rayon::prelude::*;

use super::line::{uniform_cost, LineMeasure};
use super::{unflatten, Engine, QuadratureSpec, QuantizerResult};
use crate::error::{invalid, Result};
use crate::measures::dyadic::binomial;
use crate::measures::Measure;
use crate::transport::check_exponent;

/// Largest integer exponent evaluated through prefix moments.
const MAX_MOMENT: usize = 8;

/// A uniform slab `[a, b]` or, when `a == b`, an atom.
#[derive(Debug, Clone, Copy)]
struct Element {
    a: f64,
    b: f64,
    mass: f64,
}

impl Element {
    fn is_atom(&self) -> bool {
        self.a == self.b
    }

    fn density(&self) -> f64 {
        self.mass / (self.b - self.a)
    }

    /// `∫ x^j` against the element.
    fn moment(&self, j: usize) -> f64 {
        if self.is_atom() {
            return self.mass * self.a.powi(j as i32);
        }
        // (b^{j+1} - a^{j+1}) / (b - a) without cancellation
        let mut s = 0.0;
        for i in 0..=j {
            s += self.a.powi(i as i32) * self.b.powi((j - i) as i32);
        }
        self.mass * s / (j + 1) as f64
    }

    fn cost(&self, c: f64, p: f64) -> f64 {
        if self.is_atom() {
            self.mass * (self.a - c).abs().powf(p)
        } else {
            self.density() * uniform_cost(self.a, self.b, c, p)
        }
    }
}

/// Splits the measure into `resolution` slabs of its continuous part, the
/// Cantor part into `2^m <= resolution` atoms at generation-`m` interval
/// centres, plus its own atoms. Coordinates are shifted by `origin`.
fn discretize(line: &LineMeasure, resolution: usize, origin: f64) -> Vec<Element> {
    let mut slabs = Vec::new();
    let length: f64 = line.pieces().iter().map(|p| p.b - p.a).sum();
    if length > 0.0 {
        let h = length / resolution as f64;
        for piece in line.pieces() {
            let k = ((piece.b - piece.a) / h).round().max(1.0) as usize;
            let w = (piece.b - piece.a) / k as f64;
            for i in 0..k {
                let a = piece.a + i as f64 * w;
                let b = if i + 1 == k { piece.b } else { a + w };
                slabs.push(Element { a: a - origin, b: b - origin, mass: piece.density * (b - a) });
            }
        }
    }
    let mut atoms: Vec<Element> =
        line.atoms().iter().map(|&(x, m)| Element { a: x - origin, b: x - origin, mass: m }).collect();
    if line.cantor_weight() > 0.0 {
        let m = (usize::BITS - 1 - resolution.max(1).leading_zeros()).min(20);
        let count = 1usize << m;
        let width = 3f64.powi(-(m as i32));
        let mass = line.cantor_weight() / count as f64;
        for code in 0..count {
            // left end: ternary digits 0 or 2 from the binary code
            let mut lo = 0.0;
            let mut scale = 1.0;
            for bit in (0..m).rev() {
                scale /= 3.0;
                if code >> bit & 1 == 1 {
                    lo += 2.0 * scale;
                }
            }
            let x = lo + 0.5 * width - origin;
            atoms.push(Element { a: x, b: x, mass });
        }
    }
    atoms.sort_by(|x, y| x.a.total_cmp(&y.a));
    // interleave, splitting slabs that contain atoms
    let mut out = Vec::with_capacity(slabs.len() + atoms.len());
    let mut next = 0;
    for slab in slabs {
        let mut a = slab.a;
        let rho = slab.density();
        while next < atoms.len() && atoms[next].a <= a {
            out.push(atoms[next]);
            next += 1;
        }
        while next < atoms.len() && atoms[next].a < slab.b {
            let x = atoms[next].a;
            if x > a {
                out.push(Element { a, b: x, mass: rho * (x - a) });
                a = x;
            }
            out.push(atoms[next]);
            next += 1;
        }
        out.push(Element { a, b: slab.b, mass: rho * (slab.b - a) });
    }
    out.extend_from_slice(&atoms[next..]);
    out.retain(|e| e.mass > 0.0);
    out
}

/// Cost of contiguous runs of elements, with the optimal center.
struct RunCost {
    elems: Vec<Element>,
    p: f64,
    /// Integer exponent with prefix moments `prefix[j][k] = Σ_{e<k} ∫ x^j`.
    q: Option<usize>,
    prefix: Vec<Vec<f64>>,
}

impl RunCost {
    fn new(elems: Vec<Element>, p: f64) -> Self {
        let q = (p.fract() == 0.0 && p <= MAX_MOMENT as f64).then_some(p as usize);
        let orders = q.map_or(2, |q| q + 1);
        let mut prefix = vec![vec![0.0; elems.len() + 1]; orders];
        for (j, row) in prefix.iter_mut().enumerate() {
            for (k, e) in elems.iter().enumerate() {
                row[k + 1] = row[k] + e.moment(j);
            }
        }
        Self { elems, p, q, prefix }
    }

    fn len(&self) -> usize {
        self.elems.len()
    }

    fn moment(&self, j: usize, i: usize, k: usize) -> f64 {
        self.prefix[j][k] - self.prefix[j][i]
    }

    /// `(Σ_left ∫ (c - x)^r, Σ_right ∫ (x - c)^r)` over run `[i, j)`, the
    /// element straddling `c` split between both sides.
    fn side_powers(&self, i: usize, j: usize, c: f64, r: usize) -> (f64, f64) {
        let run = &self.elems[i..j];
        let kl = i + run.partition_point(|e| e.b <= c);
        let kr = i + run.partition_point(|e| e.a < c);
        let mut left = 0.0;
        let mut right = 0.0;
        for t in 0..=r {
            let bin = binomial(r, t);
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            left += bin * c.powi((r - t) as i32) * sign * self.moment(t, i, kl);
            let sign_c = if (r - t) % 2 == 0 { 1.0 } else { -1.0 };
            right += bin * sign_c * c.powi((r - t) as i32) * self.moment(t, kr, j);
        }
        if kr > kl {
            let e = &self.elems[kl];
            let rho = e.density();
            let e1 = (r + 1) as f64;
            left += rho * (c - e.a).powi(r as i32 + 1) / e1;
            right += rho * (e.b - c).powi(r as i32 + 1) / e1;
        }
        (left.max(0.0), right.max(0.0))
    }

    fn direct_cost(&self, i: usize, j: usize, c: f64) -> f64 {
        self.elems[i..j].iter().map(|e| e.cost(c, self.p)).sum()
    }

    fn cost_at(&self, i: usize, j: usize, c: f64) -> f64 {
        match self.q {
            Some(q) => {
                let (l, r) = self.side_powers(i, j, c, q);
                l + r
            }
            None => self.direct_cost(i, j, c),
        }
    }

    /// Weighted median of the run.
    fn median(&self, i: usize, j: usize) -> f64 {
        let p0 = &self.prefix[0];
        let half = 0.5 * (p0[i] + p0[j]);
        let k = (i + p0[i + 1..=j].partition_point(|&s| s < half)).min(j - 1);
        let e = &self.elems[k];
        if e.is_atom() {
            e.a
        } else {
            (e.a + (half - p0[k]) / e.density()).clamp(e.a, e.b)
        }
    }

    /// Optimal center and cost of run `[i, j)`.
    fn solve(&self, i: usize, j: usize) -> (f64, f64) {
        let lo = self.elems[i].a;
        let hi = self.elems[j - 1].b;
        let centroid = (self.moment(1, i, j) / self.moment(0, i, j)).clamp(lo, hi);
        let c = match self.q {
            Some(2) => centroid,
            Some(1) => self.median(i, j),
            Some(q) => self.newton(i, j, q, centroid, lo, hi),
            None => self.golden(i, j, lo, hi),
        };
        (c, self.cost_at(i, j, c))
    }

    /// Safeguarded Newton on the derivative of the convex run cost.
    fn newton(&self, i: usize, j: usize, q: usize, start: f64, lo: f64, hi: f64) -> f64 {
        let (mut a, mut b) = (lo, hi);
        let mut c = start;
        let qf = q as f64;
        for _ in 0..60 {
            let (l1, r1) = self.side_powers(i, j, c, q - 1);
            let (l2, r2) = self.side_powers(i, j, c, q - 2);
            let grad = qf * (l1 - r1);
            let curv = qf * (qf - 1.0) * (l2 + r2);
            if grad > 0.0 {
                b = c;
            } else if grad < 0.0 {
                a = c;
            } else {
                break;
            }
            let mut next = if curv > 0.0 { c - grad / curv } else { 0.5 * (a + b) };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            let moved = (next - c).abs();
            c = next;
            if moved <= 1e-13 * (hi - lo).max(1e-300) || b - a <= 1e-13 * (hi - lo) {
                break;
            }
        }
        c
    }

    fn golden(&self, i: usize, j: usize, lo: f64, hi: f64) -> f64 {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let f = |c: f64| self.direct_cost(i, j, c);
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let (mut f1, mut f2) = (f(x1), f(x2));
        let tol = 1e-12 * (hi - lo).max(1e-300);
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
        if f1 <= f2 {
            x1
        } else {
            x2
        }
    }
}

/// Fills `cur[j]` for `j` in `[jlo, jhi)`: the best cost of covering the
/// first `j` elements with one more run than `prev` allows, the last run
/// starting at `arg[j]`.
#[allow(clippy::too_many_arguments)]
fn layer(
    rc: &RunCost,
    prev: &[f64],
    cur: &mut [f64],
    arg: &mut [u32],
    jlo: usize,
    jhi: usize,
    optlo: usize,
    opthi: usize,
) {
    if jlo >= jhi {
        return;
    }
    let mid = (jlo + jhi) / 2;
    let mut best = f64::INFINITY;
    let mut best_i = optlo;
    for i in optlo..=opthi.min(mid - 1) {
        if !prev[i].is_finite() {
            continue;
        }
        let v = prev[i] + rc.solve(i, mid).1;
        if v < best {
            best = v;
            best_i = i;
        }
    }
    cur[mid] = best;
    arg[mid] = best_i as u32;
    layer(rc, prev, cur, arg, jlo, mid, optlo, best_i);
    layer(rc, prev, cur, arg, mid + 1, jhi, best_i, opthi);
}

/// Optimal `N`-point quantizer of the measure discretized into
/// `resolution` pieces, by dynamic programming over contiguous runs.
///
/// The returned energy is the exact energy of the optimal support against
/// the undiscretized measure.
pub fn quantize_1d_dp(measure: &Measure, n: usize, p: f64, resolution: usize) -> Result<QuantizerResult> {
    check_exponent(p)?;
    if measure.dim() != 1 {
        return Err(invalid!("quantize_1d_dp needs a 1-d measure, got dimension {}", measure.dim()));
    }
    if n == 0 {
        return Err(invalid!("N must be ≥ 1"));
    }
    if resolution == 0 {
        return Err(invalid!("grid resolution must be >= 1"));
    }
    let line = LineMeasure::new(measure);
    let (lo, hi) = line.support();
    let origin = 0.5 * (lo + hi);
    let rc = RunCost::new(discretize(&line, resolution, origin), p);
    let m = rc.len();
    let k = n.min(m);

    let mut prev = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    let mut args: Vec<Vec<u32>> = Vec::with_capacity(k);
    for layer_no in 1..=k {
        let mut cur = vec![f64::INFINITY; m + 1];
        let mut arg = vec![0u32; m + 1];
        layer(&rc, &prev, &mut cur, &mut arg, layer_no, m + 1, layer_no - 1, m - 1);
        prev = cur;
        args.push(arg);
    }
    // backtrack
    let mut runs = Vec::with_capacity(k);
    let mut j = m;
    for arg in args.iter().rev() {
        let i = arg[j] as usize;
        runs.push((i, j));
        j = i;
    }
    runs.reverse();
    let mut centers: Vec<f64> = runs.par_iter().map(|&(i, j)| rc.solve(i, j).0 + origin).collect();
    centers.dedup();

    let quad = QuadratureSpec::grid(resolution);
    let engine = Engine::Line(line);
    Ok(QuantizerResult {
        points: unflatten(&centers, 1),
        masses: engine.masses(&centers),
        energy: engine.energy(&centers, p),
        p,
        n,
        seed: 0,
        quad,
        iterations: 0,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{CantorMeasure, DiscreteMeasure, GriddedDensity};
    use approx::assert_relative_eq;

    fn uniform() -> Measure {
        GriddedDensity::unit_cube(1).unwrap().into()
    }

    #[test]
    fn uniform_four_points() {
        let r = quantize_1d_dp(&uniform(), 4, 2.0, 64).unwrap();
        let target = 1.0 / (8.0 * 3f64.sqrt());
        assert_relative_eq!(r.wasserstein(), target, max_relative = 1e-10);
        for (x, e) in r.points.iter().zip([0.125, 0.375, 0.625, 0.875]) {
            assert_relative_eq!(x[0], e, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_point_median_and_centroid() {
        let r = quantize_1d_dp(&uniform(), 1, 1.0, 10).unwrap();
        assert_relative_eq!(r.wasserstein(), 0.25, epsilon = 1e-12);
        let ramp: Measure = GriddedDensity::affine(vec![[0.0, 1.0]], vec![1024], 0.0, &[2.0]).unwrap().into();
        let r = quantize_1d_dp(&ramp, 1, 2.0, 1024).unwrap();
        assert_relative_eq!(r.points[0][0], 2.0 / 3.0, epsilon = 1e-6);
        assert_relative_eq!(r.energy, 1.0 / 18.0, max_relative = 1e-6);
    }

    #[test]
    fn integer_paths_match_direct_summation() {
        let ramp: Measure = GriddedDensity::affine(vec![[0.0, 1.0]], vec![64], 0.5, &[1.0]).unwrap().into();
        let line = LineMeasure::new(&ramp);
        for p in [1.0, 2.0, 3.0, 4.0] {
            let rc = RunCost::new(discretize(&line, 200, 0.5), p);
            let m = rc.len();
            for (i, j) in [(0, 1), (3, 40), (100, m), (0, m)] {
                let (c, cost) = rc.solve(i, j);
                assert_relative_eq!(cost, rc.direct_cost(i, j, c), max_relative = 1e-7);
                let lo = rc.elems[i].a;
                let hi = rc.elems[j - 1].b;
                let g = rc.golden(i, j, lo, hi);
                assert!(cost <= rc.direct_cost(i, j, g) * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn cantor_dyadic_counts_are_exact() {
        let kappa: Measure = CantorMeasure.into();
        for k in 0..5 {
            let n = 1usize << k;
            let r = quantize_1d_dp(&kappa, n, 2.0, 1024).unwrap();
            let c1 = 1.0 / 8f64.sqrt();
            assert_relative_eq!(r.wasserstein(), c1 * 3f64.powi(-k), max_relative = 1e-6);
        }
    }

    #[test]
    fn atoms_recovered_exactly() {
        let m: Measure = DiscreteMeasure::new(vec![vec![0.0], vec![1.0], vec![5.0]], vec![0.2, 0.3, 0.5]).unwrap().into();
        let r = quantize_1d_dp(&m, 3, 1.5, 8).unwrap();
        assert_eq!(r.energy, 0.0);
        assert_eq!(r.points.len(), 3);
        let r = quantize_1d_dp(&m, 5, 2.0, 8).unwrap();
        assert_eq!(r.points.len(), 3);
    }

    #[test]
    fn rejects_planar_measures() {
        let sq: Measure = GriddedDensity::unit_cube(2).unwrap().into();
        assert!(quantize_1d_dp(&sq, 2, 2.0, 16).is_err());
    }
}
