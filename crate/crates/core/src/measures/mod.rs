//! The measure classes that get quantized: finitely supported measures,
//! piecewise-constant densities on a box grid, the dyadic Cantor measure and
//! positive mixtures of those.

pub mod dyadic;
mod spec;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use spec::{AffineSpec, ComponentSpec, MeasureSpec};

/// An axis-aligned closed box `[a_1, b_1] × … × [a_d, b_d]`.
pub type BoxBounds = Vec<[f64; 2]>;

/// Seeded generator used for every random draw in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A finitely supported measure with pairwise distinct atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from points and masses; repeated points are merged
    /// by summing their masses, keeping first-occurrence order.
    pub fn new(points: Vec<Vec<f64>>, masses: Vec<f64>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(invalid!("all points must share one dimension"));
        }
        let coords = points.into_iter().flatten().collect();
        Self::from_flat(dim, coords, masses)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid!("a discrete measure needs at least one point of dimension >= 1"));
        }
        if coords.len() != dim * masses.len() || masses.is_empty() {
            return Err(invalid!(
                "{} coordinates do not describe {} points of dimension {dim}",
                coords.len(),
                masses.len()
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid!("point coordinates must be finite"));
        }
        if masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(invalid!("masses must be strictly positive and finite"));
        }
        let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(masses.len());
        let mut merged_coords = Vec::with_capacity(coords.len());
        let mut merged_masses: Vec<f64> = Vec::with_capacity(masses.len());
        for (point, &m) in coords.chunks_exact(dim).zip(&masses) {
            let key: Vec<u64> = point.iter().map(|&c| (c + 0.0).to_bits()).collect();
            match index.get(&key) {
                Some(&i) => merged_masses[i] += m,
                None => {
                    index.insert(key, merged_masses.len());
                    merged_coords.extend_from_slice(point);
                    merged_masses.push(m);
                }
            }
        }
        Ok(Self { dim, coords: merged_coords, masses: merged_masses })
    }

    pub fn dirac(point: &[f64], mass: f64) -> Result<Self> {
        Self::from_flat(point.len(), point.to_vec(), vec![mass])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Index of the atom located exactly at `point`, if any.
    pub fn find(&self, point: &[f64]) -> Option<usize> {
        self.points().position(|q| q == point)
    }

    /// Pushes the measure forward by `x ↦ t·x`.
    pub fn scale_coords(&self, t: f64) -> Result<Self> {
        Self::from_flat(self.dim, self.coords.iter().map(|c| c * t).collect(), self.masses.clone())
    }

    /// Multiplies every mass by `m`.
    pub fn scale_mass(&self, m: f64) -> Result<Self> {
        Self::from_flat(self.dim, self.coords.clone(), self.masses.iter().map(|x| x * m).collect())
    }

    /// The measure sum `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(invalid!("dimension mismatch: {} vs {}", self.dim, other.dim));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        let mut masses = self.masses.clone();
        masses.extend_from_slice(&other.masses);
        Self::from_flat(self.dim, coords, masses)
    }
}

/// Piecewise-constant density on a regular grid over a box.
///
/// `values` is stored row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriddedDensity {
    bounds: BoxBounds,
    resolution: Vec<usize>,
    values: Vec<f64>,
}

impl GriddedDensity {
    pub fn new(bounds: BoxBounds, resolution: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let d = bounds.len();
        if !(1..=3).contains(&d) {
            return Err(invalid!("gridded densities support dimensions 1..=3, got {d}"));
        }
        if resolution.len() != d {
            return Err(invalid!("resolution has {} axes, bounds have {d}", resolution.len()));
        }
        if bounds.iter().any(|[a, b]| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(invalid!("every axis needs finite bounds with a < b"));
        }
        if resolution.iter().any(|&r| r == 0) {
            return Err(invalid!("per-axis cell counts must be >= 1"));
        }
        let cells: usize = resolution.iter().product();
        if values.len() != cells {
            return Err(invalid!("expected {cells} cell values, got {}", values.len()));
        }
        if values.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(invalid!("density values must be finite and nonnegative"));
        }
        if !values.iter().any(|&v| v > 0.0) {
            return Err(invalid!("density must be positive somewhere"));
        }
        Ok(Self { bounds, resolution, values })
    }

    /// Density 1 on the box.
    pub fn uniform(bounds: BoxBounds) -> Result<Self> {
        let d = bounds.len();
        Self::new(bounds, vec![1; d], vec![1.0])
    }

    /// Unit cube `[0, 1]^d` with density 1.
    pub fn unit_cube(d: usize) -> Result<Self> {
        Self::uniform(vec![[0.0, 1.0]; d])
    }

    /// Discretizes `f` by its value at each cell centre.
    pub fn from_fn(bounds: BoxBounds, resolution: Vec<usize>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = bounds.len();
        if resolution.len() != d || resolution.iter().any(|&r| r == 0) {
            return Err(invalid!("resolution must list one positive cell count per axis"));
        }
        let cells: usize = resolution.iter().product();
        let mut values = Vec::with_capacity(cells);
        let mut centre = vec![0.0; d];
        for flat in 0..cells {
            let mut rem = flat;
            for axis in (0..d).rev() {
                let i = rem % resolution[axis];
                rem /= resolution[axis];
                let [a, b] = bounds[axis];
                centre[axis] = a + (i as f64 + 0.5) * (b - a) / resolution[axis] as f64;
            }
            values.push(f(&centre));
        }
        Self::new(bounds, resolution, values)
    }

    /// Affine density `offset + gradient·x`; exact cell averages since the
    /// centre value of an affine function is its mean over the cell.
    pub fn affine(bounds: BoxBounds, resolution: Vec<usize>, offset: f64, gradient: &[f64]) -> Result<Self> {
        if gradient.len() != bounds.len() {
            return Err(invalid!("gradient has {} entries for a {}-d box", gradient.len(), bounds.len()));
        }
        Self::from_fn(bounds, resolution, |x| offset + x.iter().zip(gradient).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        let [a, b] = self.bounds[axis];
        (b - a) / self.resolution[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.cell_width(k)).product()
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// Per-axis cell indices of a flat cell index.
    pub fn cell_multi_index(&self, flat: usize) -> Vec<usize> {
        let d = self.dim();
        let mut idx = vec![0; d];
        let mut rem = flat;
        for axis in (0..d).rev() {
            idx[axis] = rem % self.resolution[axis];
            rem /= self.resolution[axis];
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.resolution).fold(0, |acc, (&i, &r)| acc * r + i)
    }

    /// Cell bounds `[lo, hi]` of one axis index.
    pub fn cell_interval(&self, axis: usize, i: usize) -> [f64; 2] {
        let a = self.bounds[axis][0];
        let h = self.cell_width(axis);
        let hi = if i + 1 == self.resolution[axis] { self.bounds[axis][1] } else { a + (i + 1) as f64 * h };
        [a + i as f64 * h, hi]
    }

    /// Density value at `x`; zero outside the box.
    pub fn density_at(&self, x: &[f64]) -> f64 {
        let mut multi = Vec::with_capacity(self.dim());
        for (axis, &c) in x.iter().enumerate() {
            let [a, b] = self.bounds[axis];
            if c < a || c > b {
                return 0.0;
            }
            let i = (((c - a) / self.cell_width(axis)) as usize).min(self.resolution[axis] - 1);
            multi.push(i);
        }
        self.values[self.flat_index(&multi)]
    }

    /// `|ρ|_β = (Σ value^β · cellVolume)^{1/β}`.
    pub fn beta_norm(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid!("beta must be positive, got {beta}"));
        }
        let s: f64 = self.values.iter().filter(|&&v| v > 0.0).map(|v| v.powf(beta)).sum();
        Ok((s * self.cell_volume()).powf(1.0 / beta))
    }

    fn box_mass(&self, bx: &[[f64; 2]]) -> f64 {
        let d = self.dim();
        // per-axis overlap lengths of every cell with the query box
        let overlaps: Vec<Vec<(usize, f64)>> = (0..d)
            .map(|axis| {
                let [qa, qb] = bx[axis];
                (0..self.resolution[axis])
                    .filter_map(|i| {
                        let [lo, hi] = self.cell_interval(axis, i);
                        let len = hi.min(qb) - lo.max(qa);
                        (len > 0.0).then_some((i, len))
                    })
                    .collect()
            })
            .collect();
        let mut total = 0.0;
        let mut multi = vec![0usize; d];
        let mut cursor = vec![0usize; d];
        if overlaps.iter().any(Vec::is_empty) {
            return 0.0;
        }
        loop {
            let mut vol = 1.0;
            for axis in 0..d {
                let (i, len) = overlaps[axis][cursor[axis]];
                multi[axis] = i;
                vol *= len;
            }
            total += self.values[self.flat_index(&multi)] * vol;
            let mut axis = d;
            loop {
                if axis == 0 {
                    return total;
                }
                axis -= 1;
                cursor[axis] += 1;
                if cursor[axis] < overlaps[axis].len() {
                    break;
                }
                cursor[axis] = 0;
            }
        }
    }

    fn sample_into<R: Rng>(&self, rng: &mut R, cdf: &[f64], out: &mut Vec<f64>) {
        let u = rng.gen::<f64>() * cdf[cdf.len() - 1];
        let flat = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let multi = self.cell_multi_index(flat);
        for (axis, &i) in multi.iter().enumerate() {
            let [lo, hi] = self.cell_interval(axis, i);
            out.push(lo + rng.gen::<f64>() * (hi - lo));
        }
    }

    /// Maps a point of the unit cube to the density's box through the
    /// inverse Rosenblatt transform: axis by axis, the conditional
    /// distribution function given the cells already chosen. Uniform inputs
    /// give draws from the density; low-discrepancy inputs give stratified
    /// draws.
    pub fn inverse_rosenblatt(&self, u: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d);
        let mut start = 0;
        let mut block = self.values.len();
        for axis in 0..d {
            let res = self.resolution[axis];
            let chunk = block / res;
            let weights: Vec<f64> =
                (0..res).map(|i| self.values[start + i * chunk..start + (i + 1) * chunk].iter().sum()).collect();
            let total: f64 = weights.iter().sum();
            let target = u[axis].clamp(0.0, 1.0) * total;
            let mut acc: f64 = 0.0;
            let mut pick = res - 1;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 && acc + w >= target {
                    pick = i;
                    break;
                }
                acc += w;
            }
            while weights[pick] <= 0.0 && pick > 0 {
                pick -= 1;
            }
            let acc: f64 = weights[..pick].iter().sum();
            let [lo, hi] = self.cell_interval(axis, pick);
            let frac = if weights[pick] > 0.0 { ((target - acc) / weights[pick]).clamp(0.0, 1.0) } else { 0.5 };
            out.push(lo + frac * (hi - lo));
            start += pick * chunk;
            block = chunk;
        }
        out
    }

    fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.values
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect()
    }
}

/// The dyadic middle-thirds Cantor measure κ on `[0, 1]`: mass 1, two
/// contractions of ratio 1/3 with weights 1/2.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CantorMeasure;

impl CantorMeasure {
    /// Similarity dimension `log 2 / log 3`.
    pub fn dimension() -> f64 {
        2f64.ln() / 3f64.ln()
    }

    /// Mass of the closed interval `[a, b]`.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        dyadic::mass(a, b)
    }

    fn sample_one<R: Rng>(rng: &mut R) -> f64 {
        // random dyadic address of depth 48, summed from the finest digit
        let bits: u64 = rng.gen();
        let mut x = 0.0;
        for k in (1..=48).rev() {
            if bits >> (k - 1) & 1 == 1 {
                x += 2.0 * 3f64.powi(-k);
            }
        }
        x
    }
}

/// Positive combination `Σ a_i μ^i`; weights need not sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    components: Vec<(f64, Measure)>,
}

impl Mixture {
    pub fn new(components: Vec<(f64, Measure)>) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return Err(invalid!("a mixture needs at least one component"));
        };
        let d = first.dim();
        for (w, m) in &components {
            if !(*w > 0.0 && w.is_finite()) {
                return Err(invalid!("mixture weights must be strictly positive, got {w}"));
            }
            if m.dim() != d {
                return Err(invalid!("mixture components disagree on dimension"));
            }
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, Measure)] {
        &self.components
    }
}

/// Any of the supported measure classes.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Discrete(DiscreteMeasure),
    Gridded(GriddedDensity),
    Cantor(CantorMeasure),
    Mixture(Mixture),
}

impl From<DiscreteMeasure> for Measure {
    fn from(m: DiscreteMeasure) -> Self {
        Measure::Discrete(m)
    }
}

impl From<GriddedDensity> for Measure {
    fn from(m: GriddedDensity) -> Self {
        Measure::Gridded(m)
    }
}

impl From<CantorMeasure> for Measure {
    fn from(m: CantorMeasure) -> Self {
        Measure::Cantor(m)
    }
}

impl From<Mixture> for Measure {
    fn from(m: Mixture) -> Self {
        Measure::Mixture(m)
    }
}

impl Measure {
    pub fn dim(&self) -> usize {
        match self {
            Measure::Discrete(m) => m.dim(),
            Measure::Gridded(m) => m.dim(),
            Measure::Cantor(_) => 1,
            Measure::Mixture(m) => m.components[0].1.dim(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Measure::Discrete(m) => m.total_mass(),
            Measure::Gridded(m) => m.total_mass(),
            Measure::Cantor(_) => 1.0,
            Measure::Mixture(m) => m.components.iter().map(|(w, c)| w * c.total_mass()).sum(),
        }
    }

    /// Smallest box containing the support.
    pub fn support_bounds(&self) -> BoxBounds {
        match self {
            Measure::Discrete(m) => {
                let mut b = vec![[f64::INFINITY, f64::NEG_INFINITY]; m.dim()];
                for p in m.points() {
                    for (axis, &c) in p.iter().enumerate() {
                        b[axis][0] = b[axis][0].min(c);
                        b[axis][1] = b[axis][1].max(c);
                    }
                }
                b
            }
            Measure::Gridded(m) => m.bounds.clone(),
            Measure::Cantor(_) => vec![[0.0, 1.0]],
            Measure::Mixture(m) => {
                let mut b = vec![[f64::INFINITY, f64::NEG_INFINITY]; self.dim()];
                for (_, c) in &m.components {
                    for (axis, [lo, hi]) in c.support_bounds().into_iter().enumerate() {
                        b[axis][0] = b[axis][0].min(lo);
                        b[axis][1] = b[axis][1].max(hi);
                    }
                }
                b
            }
        }
    }

    /// Mass of a closed box.
    pub fn box_mass(&self, bx: &[[f64; 2]]) -> Result<f64> {
        if bx.len() != self.dim() {
            return Err(invalid!("box has {} axes, measure lives in dimension {}", bx.len(), self.dim()));
        }
        if bx.iter().any(|[a, b]| a > b) {
            return Ok(0.0);
        }
        Ok(match self {
            Measure::Discrete(m) => m
                .points()
                .zip(m.masses())
                .filter(|(p, _)| p.iter().zip(bx).all(|(c, [a, b])| (a..=b).contains(&c)))
                .map(|(_, w)| w)
                .sum(),
            Measure::Gridded(m) => m.box_mass(bx),
            Measure::Cantor(k) => k.interval_mass(bx[0][0], bx[0][1]),
            Measure::Mixture(m) => {
                let mut s = 0.0;
                for (w, c) in &m.components {
                    s += w * c.box_mass(bx)?;
                }
                s
            }
        })
    }

    /// `n` deterministic draws from the normalized measure.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let flat = self.sample_flat(n, seed)?;
        Ok(flat.chunks_exact(self.dim()).map(<[f64]>::to_vec).collect())
    }

    /// As [`Measure::sample`], with coordinates laid out contiguously.
    pub fn sample_flat(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(invalid!("sample count must be >= 1"));
        }
        let mut rng = rng_from_seed(seed);
        let sampler = Sampler::new(self);
        let mut out = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            sampler.draw(&mut rng, &mut out);
        }
        Ok(out)
    }
}

/// Precomputed cumulative tables for repeated draws.
pub(crate) struct Sampler<'a> {
    measure: &'a Measure,
    cdf: Vec<f64>,
    children: Vec<Sampler<'a>>,
}

impl<'a> Sampler<'a> {
    pub(crate) fn new(measure: &'a Measure) -> Self {
        match measure {
            Measure::Discrete(m) => {
                let mut acc = 0.0;
                let cdf = m.masses().iter().map(|w| { acc += w; acc }).collect();
                Self { measure, cdf, children: Vec::new() }
            }
            Measure::Gridded(m) => Self { measure, cdf: m.cumulative(), children: Vec::new() },
            Measure::Cantor(_) => Self { measure, cdf: Vec::new(), children: Vec::new() },
            Measure::Mixture(m) => {
                let mut acc = 0.0;
                let cdf = m.components.iter().map(|(w, c)| { acc += w * c.total_mass(); acc }).collect();
                let children = m.components.iter().map(|(_, c)| Sampler::new(c)).collect();
                Self { measure, cdf, children }
            }
        }
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self.measure {
            Measure::Discrete(m) => {
                let i = self.pick(rng);
                out.extend_from_slice(m.point(i));
            }
            Measure::Gridded(m) => m.sample_into(rng, &self.cdf, out),
            Measure::Cantor(_) => out.push(CantorMeasure::sample_one(rng)),
            Measure::Mixture(_) => {
                let i = self.pick(rng);
                self.children[i].draw(rng, out);
            }
        }
    }

    fn pick<R: Rng>(&self, rng: &mut R) -> usize {
        let u = rng.gen::<f64>() * self.cdf[self.cdf.len() - 1];
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

/// `|ρ|_β` of a gridded density.
pub fn beta_norm(density: &GriddedDensity, beta: f64) -> Result<f64> {
    density.beta_norm(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn duplicates_are_merged() {
        let m = DiscreteMeasure::new(vec![vec![0.0], vec![1.0], vec![0.0]], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.masses(), &[4.0, 2.0]);
        let neg_zero = DiscreteMeasure::new(vec![vec![0.0], vec![-0.0]], vec![1.0, 1.0]).unwrap();
        assert_eq!(neg_zero.len(), 1);
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(DiscreteMeasure::new(vec![vec![0.0]], vec![0.0]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0, 2.0]], vec![1.0, 1.0]).is_err());
        assert!(GriddedDensity::new(vec![[0.0, 1.0]], vec![2], vec![0.0, 0.0]).is_err());
        assert!(GriddedDensity::new(vec![[0.0, 1.0]], vec![2], vec![-1.0, 2.0]).is_err());
    }

    #[test]
    fn beta_norm_examples() {
        let unit = GriddedDensity::unit_cube(2).unwrap();
        assert_abs_diff_eq!(unit.beta_norm(0.5).unwrap(), 1.0, epsilon = 1e-15);
        let two = GriddedDensity::new(vec![[0.0, 1.0]], vec![2], vec![0.0, 2.0]).unwrap();
        assert_abs_diff_eq!(two.beta_norm(1.0 / 3.0).unwrap(), 0.25, epsilon = 1e-14);
        let ramp = GriddedDensity::affine(vec![[0.0, 1.0]], vec![1 << 12], 0.0, &[2.0]).unwrap();
        assert_abs_diff_eq!(ramp.beta_norm(1.0 / 3.0).unwrap(), 27.0 / 32.0, epsilon = 1e-4);
        assert!(unit.beta_norm(0.0).is_err());
        assert!(unit.beta_norm(-1.0).is_err());
    }

    #[test]
    fn beta_one_is_total_mass() {
        let g = GriddedDensity::from_fn(vec![[0.0, 2.0], [-1.0, 1.0]], vec![5, 7], |x| 1.0 + x[0] * x[1].abs()).unwrap();
        assert_abs_diff_eq!(g.beta_norm(1.0).unwrap(), g.total_mass(), epsilon = 1e-12);
    }

    #[test]
    fn box_mass_examples() {
        let k = Measure::Cantor(CantorMeasure);
        assert_abs_diff_eq!(k.box_mass(&[[0.0, 1.0 / 3.0]]).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(k.box_mass(&[[0.0, 1.0 / 9.0]]).unwrap(), 0.25, epsilon = 1e-12);
        let sq = Measure::Gridded(GriddedDensity::unit_cube(2).unwrap());
        assert_abs_diff_eq!(sq.box_mass(&[[0.0, 0.5], [0.0, 0.5]]).unwrap(), 0.25, epsilon = 1e-15);
        let d = Measure::Discrete(DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]], vec![1.0, 2.0]).unwrap());
        assert_eq!(d.box_mass(&[[0.0, 1.0], [0.0, 0.5]]).unwrap(), 1.0);
        assert!(d.box_mass(&[[0.0, 1.0]]).is_err());
    }

    #[test]
    fn sample_dirac_repeats_point() {
        let m = Measure::Discrete(DiscreteMeasure::dirac(&[0.3, -2.0], 5.0).unwrap());
        let s = m.sample(7, 11).unwrap();
        assert_eq!(s.len(), 7);
        assert!(s.iter().all(|p| p == &vec![0.3, -2.0]));
        assert!(m.sample(0, 1).is_err());
    }

    #[test]
    fn uniform_square_quadrants_balanced() {
        let n = 100_000;
        let m = Measure::Gridded(GriddedDensity::unit_cube(2).unwrap());
        let s = m.sample_flat(n, 2024).unwrap();
        let mut counts = [0usize; 4];
        for p in s.chunks_exact(2) {
            counts[(p[0] >= 0.5) as usize * 2 + (p[1] >= 0.5) as usize] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 4.0).abs() < 4.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn cantor_samples_avoid_middle_third() {
        let s = Measure::Cantor(CantorMeasure).sample_flat(100_000, 5).unwrap();
        assert!(s.iter().all(|&x| !(x > 1.0 / 3.0 && x < 2.0 / 3.0) && (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = Measure::Cantor(CantorMeasure);
        assert_eq!(m.sample_flat(100, 9).unwrap(), m.sample_flat(100, 9).unwrap());
        assert_ne!(m.sample_flat(100, 9).unwrap(), m.sample_flat(100, 10).unwrap());
    }

    #[test]
    fn mixture_mass_and_bounds() {
        let mix = Mixture::new(vec![
            (0.5, CantorMeasure.into()),
            (0.5, GriddedDensity::uniform(vec![[2.0, 3.0]]).unwrap().into()),
        ])
        .unwrap();
        let m = Measure::Mixture(mix);
        assert_abs_diff_eq!(m.total_mass(), 1.0);
        assert_eq!(m.support_bounds(), vec![[0.0, 3.0]]);
        assert_abs_diff_eq!(m.box_mass(&[[0.0, 1.0 / 3.0]]).unwrap(), 0.25, epsilon = 1e-12);
        assert!(Mixture::new(vec![(0.0, CantorMeasure.into())]).is_err());
    }
}
