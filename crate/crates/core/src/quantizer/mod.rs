//! N-point quantizers: Lloyd-type local search for any exponent `p >= 1`,
//! an exact dynamic-programming oracle on the line, a covering baseline and
//! the point-allocation predictor for piecewise-constant densities.
//!
//! The search space is always the support `X`; the masses are the Voronoi
//! masses of `X`, which is the optimal choice of weights for a fixed
//! support. Energies are `∫ min_i |x - x_i|^p dμ(x) = W_p^p(μ, Δ-measure on X)`.
//!
//! One-dimensional measures integrate exactly (closed forms on
//! piecewise-constant parts, dyadic recursion on the Cantor part, sums on
//! atoms) and ignore the quadrature spec. In dimension two and up every cell
//! integral goes through weighted quadrature nodes.

mod allocation;
mod cover;
mod dp;
pub(crate) mod line;
pub(crate) mod nodes;

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measures::dyadic::CostIntegrator;
use crate::measures::{rng_from_seed, GriddedDensity, Measure, Sampler};
use crate::transport::check_exponent;
use line::LineMeasure;
use nodes::NodeSet;

pub use allocation::predict_allocation;
pub use cover::{cover_baseline, CoverResult};
pub use dp::quantize_1d_dp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadMode {
    /// `nodes` per axis over the support box.
    Grid,
    /// `nodes` i.i.d. draws from the measure.
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub mode: QuadMode,
    pub nodes: usize,
    pub seed: u64,
}

impl QuadratureSpec {
    pub fn grid(per_axis: usize) -> Self {
        Self { mode: QuadMode::Grid, nodes: per_axis, seed: 0 }
    }

    pub fn monte_carlo(nodes: usize, seed: u64) -> Self {
        Self { mode: QuadMode::MonteCarlo, nodes, seed }
    }

    /// 512 nodes per axis up to the plane, 2·10⁶ Monte Carlo nodes in 3-d.
    pub fn default_for(dim: usize) -> Self {
        if dim <= 2 {
            Self::grid(512)
        } else {
            Self::monte_carlo(2_000_000, 0)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(invalid!("quadrature needs at least one node"));
        }
        Ok(())
    }
}

/// Output of every quantizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerResult {
    pub points: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    /// `W_p^p` between the measure and the Voronoi-weighted support.
    pub energy: f64,
    pub p: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub quad: QuadratureSpec,
    pub iterations: usize,
    pub converged: bool,
}

impl QuantizerResult {
    /// `W_p = energy^{1/p}`.
    pub fn wasserstein(&self) -> f64 {
        self.energy.max(0.0).powf(1.0 / self.p)
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizeOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once one sweep lowers the energy by less than this fraction.
    pub tol: f64,
    pub seed: u64,
    pub quad: Option<QuadratureSpec>,
    pub init: InitLaw,
    /// Split-and-merge polishing after Lloyd converges, for `N` up to this.
    pub polish_max_n: usize,
}

/// Law of the i.i.d. initial support of each restart.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitLaw {
    /// Draws from the measure itself.
    #[default]
    Measure,
    /// Stratified draws from the normalized `ρ^{d/(d+p)}` of a gridded
    /// density, the limiting law of optimal supports: a Halton sequence
    /// shifted by the restart seed, pushed through the inverse Rosenblatt
    /// transform. Lloyd evens out point counts across the domain only
    /// slowly, so i.i.d. starts leave their count fluctuations in large-N
    /// results; this start has almost none.
    PredictedDensity,
}

impl Default for QuantizeOptions {
    fn default() -> Self {
        Self { restarts: 4, max_iters: 1000, tol: 1e-9, seed: 0, quad: None, init: InitLaw::Measure, polish_max_n: 64 }
    }
}

/// Integration backend chosen from the measure's dimension.
pub(crate) enum Engine {
    Line(LineMeasure),
    Nodes(NodeSet),
}

impl Engine {
    pub(crate) fn new(measure: &Measure, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        Ok(if measure.dim() == 1 {
            Engine::Line(LineMeasure::new(measure))
        } else {
            Engine::Nodes(NodeSet::build(measure, quad)?)
        })
    }

    /// Energy of each center's Voronoi cell.
    pub(crate) fn cell_energies(&self, centers: &[f64], p: f64) -> Vec<f64> {
        match self {
            Engine::Line(line) => {
                let integ = CostIntegrator::new(p);
                line.cells(centers).iter().zip(centers).map(|(cell, &c)| line.cell_cost(cell, c, &integ, p)).collect()
            }
            Engine::Nodes(nodes) => {
                let n = centers.len() / nodes.dim;
                let (owner, dist2) = nodes.assign(centers);
                let mut e = vec![0.0; n];
                for ((&o, &d2), &w) in owner.iter().zip(&dist2).zip(&nodes.weights) {
                    e[o as usize] += w * pow_half(d2, p);
                }
                e
            }
        }
    }

    pub(crate) fn energy(&self, centers: &[f64], p: f64) -> f64 {
        self.cell_energies(centers, p).iter().sum()
    }

    pub(crate) fn masses(&self, centers: &[f64]) -> Vec<f64> {
        match self {
            Engine::Line(line) => line.cells(centers).iter().map(|c| line.cell_mass(c)).collect(),
            Engine::Nodes(nodes) => {
                let mut m = vec![0.0; centers.len() / nodes.dim];
                let (owner, _) = nodes.assign(centers);
                for (&o, &w) in owner.iter().zip(&nodes.weights) {
                    m[o as usize] += w;
                }
                m
            }
        }
    }

    /// Largest distance from a support point (quadrature node) to its center.
    pub(crate) fn reach(&self, centers: &[f64]) -> f64 {
        match self {
            Engine::Line(line) => {
                line.cells(centers).iter().zip(centers).map(|(cell, &c)| line.cell_reach(cell, c)).fold(0.0, f64::max)
            }
            Engine::Nodes(nodes) => {
                let (owner, dist2) = nodes.assign(centers);
                owner
                    .iter()
                    .zip(&dist2)
                    .zip(&nodes.weights)
                    .filter(|(_, &w)| w > 0.0)
                    .map(|((_, &d2), _)| d2.sqrt())
                    .fold(0.0, f64::max)
            }
        }
    }

    /// One sweep: every center moves to the minimizer of its cell energy.
    /// Returns the new centers, the indices whose cells were empty and the
    /// energy of the input centers.
    pub(crate) fn sweep(&self, centers: &[f64], p: f64) -> (Vec<f64>, Vec<usize>, f64) {
        match self {
            Engine::Line(line) => {
                let integ = CostIntegrator::new(p);
                let cells = line.cells(centers);
                let moved: Vec<(Option<f64>, f64)> = cells
                    .par_iter()
                    .zip(centers.par_iter())
                    .map(|(cell, &c)| {
                        let before = line.cell_cost(cell, c, &integ, p);
                        let target = if p == 2.0 {
                            line.cell_centroid(cell)
                        } else if p == 1.0 {
                            line.cell_median(cell)
                        } else {
                            line.cell_minimizer(cell, &integ, p)
                        };
                        // keep the old center unless the move helps
                        let next = target.map(|t| if line.cell_cost(cell, t, &integ, p) <= before { t } else { c });
                        (next, before)
                    })
                    .collect();
                let energy = moved.iter().map(|m| m.1).sum();
                let (next, empty) = split_moves(centers, 1, moved.into_iter().map(|m| m.0.map(|x| vec![x])).collect());
                (next, empty, energy)
            }
            Engine::Nodes(nodes) => step_nodes(nodes, centers, p),
        }
    }
}

fn pow_half(d2: f64, p: f64) -> f64 {
    if p == 2.0 {
        d2
    } else if p == 1.0 {
        d2.sqrt()
    } else {
        d2.powf(0.5 * p)
    }
}

fn split_moves(centers: &[f64], dim: usize, moved: Vec<Option<Vec<f64>>>) -> (Vec<f64>, Vec<usize>) {
    let mut out = centers.to_vec();
    let mut empty = Vec::new();
    for (i, m) in moved.into_iter().enumerate() {
        match m {
            Some(x) => out[i * dim..(i + 1) * dim].copy_from_slice(&x),
            None => empty.push(i),
        }
    }
    (out, empty)
}

fn step_nodes(nodes: &NodeSet, centers: &[f64], p: f64) -> (Vec<f64>, Vec<usize>, f64) {
    let d = nodes.dim;
    let n = centers.len() / d;
    let (owner, dist2) = nodes.assign(centers);
    let energy: f64 = dist2.iter().zip(&nodes.weights).map(|(&d2, &w)| w * pow_half(d2, p)).sum();
    if p == 2.0 {
        let mut sums = vec![0.0; n * d];
        let mut mass = vec![0.0; n];
        for (k, (&o, &w)) in owner.iter().zip(&nodes.weights).enumerate() {
            let o = o as usize;
            mass[o] += w;
            for (s, x) in sums[o * d..(o + 1) * d].iter_mut().zip(nodes.node(k)) {
                *s += w * x;
            }
        }
        let moved = (0..n)
            .map(|i| (mass[i] > 0.0).then(|| sums[i * d..(i + 1) * d].iter().map(|s| s / mass[i]).collect()))
            .collect();
        let (next, empty) = split_moves(centers, d, moved);
        return (next, empty, energy);
    }
    // bucket node indices by owner
    let mut starts = vec![0usize; n + 1];
    for &o in &owner {
        starts[o as usize + 1] += 1;
    }
    for i in 0..n {
        starts[i + 1] += starts[i];
    }
    let mut fill = starts.clone();
    let mut members = vec![0usize; owner.len()];
    for (k, &o) in owner.iter().enumerate() {
        members[fill[o as usize]] = k;
        fill[o as usize] += 1;
    }
    let moved: Vec<Option<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let cell = &members[starts[i]..starts[i + 1]];
            let mass: f64 = cell.iter().map(|&k| nodes.weights[k]).sum();
            if mass <= 0.0 {
                return None;
            }
            Some(cell_minimizer(nodes, cell, &centers[i * d..(i + 1) * d], p))
        })
        .collect();
    let (next, empty) = split_moves(centers, d, moved);
    (next, empty, energy)
}

fn cell_energy(nodes: &NodeSet, cell: &[usize], x: &[f64], p: f64) -> f64 {
    cell.iter()
        .map(|&k| {
            let d2: f64 = nodes.node(k).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            nodes.weights[k] * pow_half(d2, p)
        })
        .sum()
}

/// Per-cell minimizer of `Σ w |y - x|^p`: Weiszfeld iteration from the
/// coordinate-wise weighted median for `p = 1`, damped Newton-scaled
/// gradient descent with step halving otherwise.
fn cell_minimizer(nodes: &NodeSet, cell: &[usize], start: &[f64], p: f64) -> Vec<f64> {
    let d = nodes.dim;
    let current = cell_energy(nodes, cell, start, p);
    let mut x: Vec<f64>;
    let scale = {
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &k in cell {
            for (a, &y) in nodes.node(k).iter().enumerate() {
                lo[a] = lo[a].min(y);
                hi[a] = hi[a].max(y);
            }
        }
        lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max).max(1e-300)
    };
    if p == 1.0 {
        const EPS: f64 = 1e-12;
        x = (0..d)
            .map(|a| {
                let mut vals: Vec<(f64, f64)> = cell.iter().map(|&k| (nodes.node(k)[a], nodes.weights[k])).collect();
                vals.sort_by(|u, v| u.0.total_cmp(&v.0));
                let half = 0.5 * vals.iter().map(|v| v.1).sum::<f64>();
                let mut acc = 0.0;
                vals.iter().find(|v| {
                    acc += v.1;
                    acc >= half
                })
                .map_or(start[a], |v| v.0)
            })
            .collect();
        for _ in 0..200 {
            let mut num = vec![0.0; d];
            let mut den = 0.0;
            for &k in cell {
                let y = nodes.node(k);
                let dist = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt().max(EPS);
                let w = nodes.weights[k] / dist;
                den += w;
                for (nu, yi) in num.iter_mut().zip(y) {
                    *nu += w * yi;
                }
            }
            let next: Vec<f64> = num.iter().map(|v| v / den).collect();
            let moved = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = next;
            if moved < 1e-8 * scale {
                break;
            }
        }
    } else {
        x = start.to_vec();
        let mut fx = current;
        for _ in 0..100 {
            let mut grad = vec![0.0; d];
            let mut curv = 0.0;
            for &k in cell {
                let y = nodes.node(k);
                let dist = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt().max(1e-12 * scale);
                let w = nodes.weights[k];
                let g = w * p * dist.powf(p - 2.0);
                for (gr, (xi, yi)) in grad.iter_mut().zip(x.iter().zip(y)) {
                    *gr += g * (xi - yi);
                }
                curv += g * (p - 1.0).max(1.0);
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, g)| xi - step * g / curv).collect();
                let ft = cell_energy(nodes, cell, &trial, p);
                if ft < fx {
                    let moved = trial.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    x = trial;
                    fx = ft;
                    accepted = moved >= 1e-8 * scale;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
    if cell_energy(nodes, cell, &x, p) <= current {
        x
    } else {
        start.to_vec()
    }
}

fn flatten(points: &[Vec<f64>], dim: usize) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(invalid!("the support X must be nonempty"));
    }
    if points.iter().any(|p| p.len() != dim) {
        return Err(invalid!("support points must have the measure's dimension {dim}"));
    }
    Ok(points.iter().flatten().copied().collect())
}

fn unflatten(flat: &[f64], dim: usize) -> Vec<Vec<f64>> {
    flat.chunks_exact(dim).map(<[f64]>::to_vec).collect()
}

fn check_distinct(flat: &[f64], dim: usize) -> Result<()> {
    let mut seen = HashSet::new();
    for p in flat.chunks_exact(dim) {
        let key: Vec<u64> = p.iter().map(|&c| (c + 0.0).to_bits()).collect();
        if !seen.insert(key) {
            return Err(invalid!("support points must be pairwise distinct, {p:?} repeats"));
        }
    }
    Ok(())
}

fn resolve_quad(measure: &Measure, quad: Option<QuadratureSpec>) -> QuadratureSpec {
    quad.unwrap_or_else(|| QuadratureSpec::default_for(measure.dim()))
}

/// `∫ min_i |x - x_i|^p dμ(x)`.
pub fn energy(measure: &Measure, points: &[Vec<f64>], p: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_exponent(p)?;
    let flat = flatten(points, measure.dim())?;
    Ok(Engine::new(measure, quad)?.energy(&flat, p))
}

/// Voronoi cell masses of `points`, ties going to the lowest index.
pub fn voronoi_masses(measure: &Measure, points: &[Vec<f64>], quad: &QuadratureSpec) -> Result<Vec<f64>> {
    let flat = flatten(points, measure.dim())?;
    check_distinct(&flat, measure.dim())?;
    Ok(Engine::new(measure, quad)?.masses(&flat))
}

/// Energy of each point's Voronoi cell, `E^p_{V_i}(x_i)`.
pub fn cell_energies(measure: &Measure, points: &[Vec<f64>], p: f64, quad: &QuadratureSpec) -> Result<Vec<f64>> {
    check_exponent(p)?;
    let flat = flatten(points, measure.dim())?;
    Ok(Engine::new(measure, quad)?.cell_energies(&flat, p))
}

/// Largest distance from a quadrature node (exact support point in 1-D) to
/// its nearest point of `points`.
pub fn assignment_reach(measure: &Measure, points: &[Vec<f64>], quad: &QuadratureSpec) -> Result<f64> {
    let flat = flatten(points, measure.dim())?;
    Ok(Engine::new(measure, quad)?.reach(&flat))
}

/// One Lloyd-type sweep. Points whose cell is empty are reseeded at fresh
/// draws from the measure, deterministically from `seed`.
pub fn improve_step(measure: &Measure, points: &[Vec<f64>], p: f64, quad: &QuadratureSpec, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_exponent(p)?;
    let dim = measure.dim();
    let flat = flatten(points, dim)?;
    let engine = Engine::new(measure, quad)?;
    let sampler = Sampler::new(measure);
    let mut rng = rng_from_seed(seed);
    let (mut next, empty, _) = engine.sweep(&flat, p);
    reseed(&mut next, &empty, dim, &sampler, &mut rng);
    Ok(unflatten(&next, dim))
}

fn reseed<R: Rng>(centers: &mut [f64], empty: &[usize], dim: usize, sampler: &Sampler<'_>, rng: &mut R) {
    if empty.is_empty() {
        return;
    }
    let mut taken: HashSet<Vec<u64>> =
        centers.chunks_exact(dim).map(|p| p.iter().map(|c| (c + 0.0).to_bits()).collect()).collect();
    for &i in empty {
        let mut draw = Vec::with_capacity(dim);
        for _ in 0..1000 {
            draw.clear();
            sampler.draw(rng, &mut draw);
            let key: Vec<u64> = draw.iter().map(|c| (c + 0.0).to_bits()).collect();
            if taken.insert(key) {
                break;
            }
        }
        centers[i * dim..(i + 1) * dim].copy_from_slice(&draw);
    }
}

/// Derives the seed of restart `r` from the run seed.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    let mut z = seed.wrapping_add((r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Initial support: `n` distinct i.i.d. draws from the measure.
fn initial_support<R: Rng>(n: usize, dim: usize, sampler: &Sampler<'_>, rng: &mut R) -> Vec<f64> {
    let mut taken = HashSet::new();
    let mut out = Vec::with_capacity(n * dim);
    let mut draw = Vec::with_capacity(dim);
    let mut attempts = 0;
    while out.len() < n * dim {
        draw.clear();
        sampler.draw(rng, &mut draw);
        attempts += 1;
        let key: Vec<u64> = draw.iter().map(|c| (c + 0.0).to_bits()).collect();
        if taken.insert(key) {
            out.extend_from_slice(&draw);
        } else if attempts > 1000 * n {
            // atoms exhausted: nudge the duplicate off the support
            let k = out.len() / dim;
            draw[0] += 1e-9 * (k as f64 + 1.0);
            out.extend_from_slice(&draw);
        }
    }
    out
}

struct RunOutcome {
    centers: Vec<f64>,
    energy: f64,
    iterations: usize,
    converged: bool,
}

/// The powered density stratified starts are drawn from, if any.
fn init_density(measure: &Measure, p: f64, law: InitLaw) -> Result<Option<GriddedDensity>> {
    match (law, measure) {
        (InitLaw::Measure, _) => Ok(None),
        (InitLaw::PredictedDensity, Measure::Gridded(g)) => {
            let beta = g.dim() as f64 / (g.dim() as f64 + p);
            let values = g.values().iter().map(|v| v.max(0.0).powf(beta)).collect();
            Ok(Some(GriddedDensity::new(g.bounds().to_vec(), g.resolution().to_vec(), values)?))
        }
        (InitLaw::PredictedDensity, _) => Err(invalid!("predicted-density initialization needs a gridded density")),
    }
}

/// Radical inverse of `index` in `base`.
fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn stratified_support<R: Rng>(density: &GriddedDensity, n: usize, rng: &mut R) -> Vec<f64> {
    const PRIMES: [u64; 3] = [2, 3, 5];
    let d = density.dim();
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(n * d);
    for k in 0..n {
        let u: Vec<f64> = (0..d).map(|a| (halton(k as u64 + 1, PRIMES[a]) + shift[a]).fract()).collect();
        out.extend(density.inverse_rosenblatt(&u));
    }
    out
}

/// Lloyd sweeps from `centers` until the relative decrease drops below
/// `tol`, reseeding empty cells from the measure.
fn descend<R: Rng>(
    engine: &Engine,
    mut centers: Vec<f64>,
    dim: usize,
    p: f64,
    opts: &QuantizeOptions,
    sampler: &Sampler<'_>,
    rng: &mut R,
) -> RunOutcome {
    let (mut pending, mut empty, mut energy) = engine.sweep(&centers, p);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;
        let reseeded = !empty.is_empty();
        reseed(&mut pending, &empty, dim, sampler, rng);
        let (follow, follow_empty, e) = engine.sweep(&pending, p);
        if e > energy && !reseeded {
            // uphill only through round-off: a fixed point
            converged = true;
            break;
        }
        let decrease = energy - e;
        let before = energy;
        centers = pending;
        energy = e;
        pending = follow;
        empty = follow_empty;
        if !reseeded && (e == 0.0 || decrease < opts.tol * before) {
            converged = true;
            break;
        }
    }
    RunOutcome { centers, energy, iterations, converged }
}

/// Donors tried per polishing round.
const POLISH_DONORS: usize = 3;
/// Lloyd sweeps granted to a trial move before it is judged.
const POLISH_SWEEPS: usize = 100;

/// Split-and-merge moves on a Lloyd fixed point: the center of a
/// low-energy cell is moved next to the center of the highest-energy cell,
/// the pair is split along a random direction and Lloyd runs briefly. A
/// move is kept when it lowers the energy; polishing stops after a round in
/// which no donor helps, and a full Lloyd descent finishes the result.
fn polish<R: Rng>(
    engine: &Engine,
    mut run: RunOutcome,
    dim: usize,
    p: f64,
    opts: &QuantizeOptions,
    sampler: &Sampler<'_>,
    rng: &mut R,
) -> RunOutcome {
    let n = run.centers.len() / dim;
    let trial_opts = QuantizeOptions { max_iters: opts.max_iters.min(POLISH_SWEEPS), ..*opts };
    let mut moved = false;
    let mut budget = 4 * n;
    while budget > 0 {
        let energies = engine.cell_energies(&run.centers, p);
        let masses = engine.masses(&run.centers);
        let Some(worst) = (0..n).filter(|&i| masses[i] > 0.0).reduce(|a, b| if energies[b] > energies[a] { b } else { a })
        else {
            break;
        };
        let radius = 0.5 * (energies[worst] / masses[worst]).powf(1.0 / p);
        let mut donors: Vec<usize> = (0..n).filter(|&i| i != worst).collect();
        donors.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let mut improved = false;
        for &donor in donors.iter().take(POLISH_DONORS) {
            if budget == 0 {
                break;
            }
            budget -= 1;
            let mut dir: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            dir.iter_mut().for_each(|v| *v *= radius / norm);
            let mut trial = run.centers.clone();
            for a in 0..dim {
                let c = run.centers[worst * dim + a];
                trial[worst * dim + a] = c + dir[a];
                trial[donor * dim + a] = c - dir[a];
            }
            let out = descend(engine, trial, dim, p, &trial_opts, sampler, rng);
            run.iterations += out.iterations;
            if out.energy < run.energy * (1.0 - opts.tol) {
                run = RunOutcome { iterations: run.iterations, ..out };
                improved = true;
                moved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    if !moved {
        return run;
    }
    let done = descend(engine, run.centers.clone(), dim, p, opts, sampler, rng);
    let iterations = run.iterations + done.iterations;
    if done.energy <= run.energy {
        RunOutcome { iterations, ..done }
    } else {
        RunOutcome { iterations, ..run }
    }
}

fn lloyd_run(
    measure: &Measure,
    start: Option<&GriddedDensity>,
    engine: &Engine,
    n: usize,
    p: f64,
    opts: &QuantizeOptions,
    seed: u64,
) -> RunOutcome {
    let dim = measure.dim();
    let sampler = Sampler::new(measure);
    let mut rng = rng_from_seed(seed);
    let centers = match start {
        Some(g) => stratified_support(g, n, &mut rng),
        None => initial_support(n, dim, &sampler, &mut rng),
    };
    let run = descend(engine, centers, dim, p, opts, &sampler, &mut rng);
    if n >= 2 && n <= opts.polish_max_n {
        polish(engine, run, dim, p, opts, &sampler, &mut rng)
    } else {
        run
    }
}

/// Best-of-restarts local optimum of the `N`-point quantization problem.
///
/// A discrete measure with at most `N` atoms is returned exactly, with fewer
/// than `N` points.
pub fn quantize(measure: &Measure, n: usize, p: f64, opts: &QuantizeOptions) -> Result<QuantizerResult> {
    check_exponent(p)?;
    if n == 0 {
        return Err(invalid!("N must be ≥ 1"));
    }
    if opts.restarts == 0 {
        return Err(invalid!("restarts must be >= 1"));
    }
    let quad = resolve_quad(measure, opts.quad);
    let dim = measure.dim();
    let engine = Engine::new(measure, &quad)?;
    if let Measure::Discrete(m) = measure {
        if m.len() <= n {
            let centers = m.coords().to_vec();
            return Ok(QuantizerResult {
                points: unflatten(&centers, dim),
                masses: m.masses().to_vec(),
                energy: 0.0,
                p,
                n,
                seed: opts.seed,
                quad,
                iterations: 0,
                converged: true,
            });
        }
    }
    let start = init_density(measure, p, opts.init)?;
    let runs: Vec<RunOutcome> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| lloyd_run(measure, start.as_ref(), &engine, n, p, opts, restart_seed(opts.seed, r)))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.energy < a.energy { b } else { a })
        .expect("at least one restart");
    let masses = engine.masses(&best.centers);
    Ok(QuantizerResult {
        points: unflatten(&best.centers, dim),
        masses,
        energy: engine.energy(&best.centers, p),
        p,
        n,
        seed: opts.seed,
        quad,
        iterations: best.iterations,
        converged: best.converged,
    })
}

#[cfg(test)]
mod tests;
