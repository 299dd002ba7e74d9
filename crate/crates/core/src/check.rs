//! Randomized property suites for the transport inequalities and the quantizer
//! invariants, checked against the exact solver.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measures::{rng_from_seed, DiscreteMeasure, GriddedDensity, Measure};
use crate::quantizer::{self, predict_allocation, QuadratureSpec};
use crate::transport::{self, plan_cost, restrict_rows, solve_exact, sum_plans, TransportPlan};

/// Relative tolerance of every inequality and identity.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    /// Largest relative violation seen (0 when every trial passed).
    pub worst: f64,
    /// First failure, for diagnosis.
    pub first_failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub seed: u64,
    pub trials: usize,
    pub properties: Vec<PropertyResult>,
    pub all_passed: bool,
}

/// Outcome of one trial: `Ok(violation)` where `violation <= 0` passes.
type Trial = Result<f64>;

fn run_property(name: &str, trials: usize, seed: u64, mut f: impl FnMut(&mut ChaCha8Rng) -> Trial) -> PropertyResult {
    let mut rng = rng_from_seed(seed);
    let mut res =
        PropertyResult { name: name.into(), trials, passed: 0, failed: 0, worst: 0.0, first_failure: None };
    for t in 0..trials {
        match f(&mut rng) {
            Ok(v) if v <= 0.0 => res.passed += 1,
            Ok(v) => {
                res.failed += 1;
                res.worst = res.worst.max(v);
                res.first_failure.get_or_insert_with(|| format!("trial {t}: violation {v:e}"));
            }
            Err(e) => {
                res.failed += 1;
                res.first_failure.get_or_insert_with(|| format!("trial {t}: {e}"));
            }
        }
    }
    res
}

/// Random discrete measure with `k` atoms in `[-1, 1]^d` and total `mass`.
pub fn random_measure<R: Rng>(rng: &mut R, k: usize, dim: usize, mass: f64) -> Result<DiscreteMeasure> {
    let points: Vec<Vec<f64>> = (0..k).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    DiscreteMeasure::new(points, raw.iter().map(|w| w * mass / total).collect())
}

fn random_p<R: Rng>(rng: &mut R) -> f64 {
    [1.0, 1.5, 2.0, 3.0][rng.gen_range(0..4)]
}

fn random_pair<R: Rng>(rng: &mut R, max_atoms: usize) -> Result<(DiscreteMeasure, DiscreteMeasure, f64)> {
    let dim = rng.gen_range(1..=3);
    let mass = rng.gen_range(0.5..2.0);
    let k = rng.gen_range(1..=max_atoms);
    let mu = random_measure(rng, k, dim, mass)?;
    let k = rng.gen_range(1..=max_atoms);
    let nu = random_measure(rng, k, dim, mass)?;
    Ok((mu, nu, random_p(rng)))
}

/// `a <= b` up to the relative tolerance; returns the violation.
fn excess(a: f64, b: f64) -> f64 {
    (a - b) / b.abs().max(1e-300) - TOL
}

/// `|a - b|` against the relative tolerance; returns the violation.
fn mismatch(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300) - TOL
}

/// Cheapest vertex of the transportation polytope by exhaustive search over
/// spanning trees of the bipartite support graph. Exponential; for supports
/// of at most four atoms.
pub fn enumerate_optimal_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    let (m, n) = (mu.len(), nu.len());
    if m > 4 || n > 4 {
        return Err(invalid!("enumeration is limited to 4 atoms per side"));
    }
    let cells = m * n;
    let edges = m + n - 1;
    let cost: Vec<f64> =
        (0..cells).map(|c| transport::distance(mu.point(c / n), nu.point(c % n)).powf(p)).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << cells) {
        if mask.count_ones() as usize != edges {
            continue;
        }
        if let Some(flow) = tree_flow(mask, m, n, mu.masses(), nu.masses()) {
            let c: f64 = flow.iter().zip(&cost).map(|(f, c)| f * c).sum();
            best = best.min(c);
        }
    }
    Ok(best)
}

/// Flows of the basic solution on the spanning tree `mask`, by repeatedly
/// peeling leaves; `None` if `mask` is not a tree or a flow is negative.
fn tree_flow(mask: u32, m: usize, n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mut supply: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut alive: Vec<usize> = (0..m * n).filter(|c| mask >> c & 1 == 1).collect();
    let mut flow = vec![0.0; m * n];
    let total: f64 = a.iter().sum();
    while !alive.is_empty() {
        let mut degree = vec![0usize; m + n];
        for &c in &alive {
            degree[c / n] += 1;
            degree[m + c % n] += 1;
        }
        let pos = alive.iter().position(|&c| degree[c / n] == 1 || degree[m + c % n] == 1)?;
        let c = alive.swap_remove(pos);
        let (r, col) = (c / n, m + c % n);
        let leaf = if degree[r] == 1 { r } else { col };
        let other = if leaf == r { col } else { r };
        let f = supply[leaf];
        if f < -1e-12 * total {
            return None;
        }
        flow[c] = f.max(0.0);
        supply[leaf] = 0.0;
        supply[other] -= f;
    }
    // every node must be balanced, which also rules out forests
    if supply.iter().all(|s| s.abs() <= 1e-9 * total) {
        Some(flow)
    } else {
        None
    }
}

fn enumeration_trial(rng: &mut ChaCha8Rng) -> Trial {
    let (mu, nu, p) = random_pair(rng, 4)?;
    let (_, cost) = solve_exact(&mu, &nu, p)?;
    Ok(mismatch(cost, enumerate_optimal_cost(&mu, &nu, p)?))
}

fn monotony_trial(rng: &mut ChaCha8Rng) -> Trial {
    let (mu, nu, p) = random_pair(rng, 6)?;
    let (plan, cost) = solve_exact(&mu, &nu, p)?;
    // keep a random nonempty subset of atoms, each with a random fraction
    let mut points = Vec::new();
    let mut masses = Vec::new();
    for (i, &w) in mu.masses().iter().enumerate() {
        if points.is_empty() && i + 1 == mu.len() || rng.gen_bool(0.7) {
            points.push(mu.point(i).to_vec());
            masses.push(w * rng.gen_range(0.01..=1.0));
        }
    }
    let mu_t = DiscreteMeasure::new(points, masses)?;
    let (restricted, nu_t) = restrict_rows(&plan, &mu_t)?;
    let w_t = solve_exact(&mu_t, &nu_t, p)?.1;
    let v1 = excess(w_t, cost);
    let v2 = excess(plan_cost(&restricted, p), cost);
    let v3 = nu_t
        .points()
        .zip(nu_t.masses())
        .map(|(y, &m)| nu.find(y).map_or(1.0, |j| excess(m, nu.masses()[j])))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(v1.max(v2).max(v3))
}

fn summing_trial(rng: &mut ChaCha8Rng) -> Trial {
    let (mu, nu, p) = random_pair(rng, 5)?;
    let dim = mu.dim();
    let mass = rng.gen_range(0.5..2.0);
    let k = rng.gen_range(1..=5);
    let mu2 = random_measure(rng, k, dim, mass)?;
    let k = rng.gen_range(1..=5);
    let nu2 = random_measure(rng, k, dim, mass)?;
    let (a, ca) = solve_exact(&mu, &nu, p)?;
    let (b, cb) = solve_exact(&mu2, &nu2, p)?;
    let summed = sum_plans(&a, &b)?;
    let additive = mismatch(plan_cost(&summed, p), ca + cb);
    let joint = solve_exact(&mu.add(&mu2)?, &nu.add(&nu2)?, p)?.1;
    Ok(additive.max(excess(joint, ca + cb)))
}

fn triangle_trial(rng: &mut ChaCha8Rng) -> Trial {
    let (mu, nu, p) = random_pair(rng, 6)?;
    let k = rng.gen_range(1..=6);
    let rho = random_measure(rng, k, mu.dim(), mu.total_mass())?;
    let w = |a: &DiscreteMeasure, b: &DiscreteMeasure| transport::wasserstein(a, b, p);
    Ok(excess(w(&mu, &rho)?, w(&mu, &nu)? + w(&nu, &rho)?))
}

fn scaling_trial(rng: &mut ChaCha8Rng) -> Trial {
    let (mu, nu, p) = random_pair(rng, 6)?;
    let base = transport::wasserstein(&mu, &nu, p)?;
    let t = rng.gen_range(0.1..10.0);
    let coords = transport::wasserstein(&mu.scale_coords(t)?, &nu.scale_coords(t)?, p)?;
    let m = rng.gen_range(0.1..10.0);
    let mass = transport::wasserstein(&mu.scale_mass(m)?, &nu.scale_mass(m)?, p)?;
    Ok(mismatch(coords, t * base).max(mismatch(mass, m.powf(1.0 / p) * base)))
}

fn descent_trial(rng: &mut ChaCha8Rng) -> Trial {
    let dim = rng.gen_range(1..=2);
    let res: Vec<usize> = (0..dim).map(|_| rng.gen_range(1..=4)).collect();
    let cells: usize = res.iter().product();
    let values: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.1..2.0)).collect();
    let density: Measure = GriddedDensity::new(vec![[0.0, 1.0]; dim], res, values)?.into();
    let n = rng.gen_range(1..=6);
    let p = random_p(rng);
    let quad = QuadratureSpec::grid(24);
    let x = density.sample(n, rng.gen())?;
    let before = quantizer::energy(&density, &x, p, &quad)?;
    let stepped = quantizer::improve_step(&density, &x, p, &quad, rng.gen())?;
    let after = quantizer::energy(&density, &stepped, p, &quad)?;
    let masses = quantizer::voronoi_masses(&density, &stepped, &quad);
    let mass_gap = match masses {
        Ok(m) => mismatch(m.iter().sum(), density.total_mass()),
        // a reseeded point may land on another one
        Err(_) => 0.0,
    };
    Ok(excess(after, before).max(mass_gap))
}

fn allocation_trial(rng: &mut ChaCha8Rng) -> Trial {
    let k = rng.gen_range(1..=6);
    let alphas: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..10.0)).collect();
    let d = rng.gen_range(1..=3);
    let p = random_p(rng);
    let (x, f) = predict_allocation(&alphas, d, p)?;
    let c = rng.gen_range(0.1..10.0);
    let scaled: Vec<f64> = alphas.iter().map(|a| a * c).collect();
    let (y, g) = predict_allocation(&scaled, d, p)?;
    let sum = mismatch(x.iter().sum(), 1.0);
    let invariant = x.iter().zip(&y).map(|(a, b)| mismatch(*a, *b)).fold(f64::NEG_INFINITY, f64::max);
    Ok(sum.max(invariant).max(mismatch(g, c * f)))
}

/// Property names in report order.
pub const PROPERTIES: [&str; 7] =
    ["enumeration", "monotony", "summing", "triangle", "scaling", "lloyd_descent", "allocation"];

/// Runs every property on `trials` random instances.
pub fn run_checks(trials: usize, seed: u64) -> Result<CheckSummary> {
    if trials == 0 {
        return Err(invalid!("trials must be >= 1"));
    }
    let suites: [fn(&mut ChaCha8Rng) -> Trial; 7] = [
        enumeration_trial,
        monotony_trial,
        summing_trial,
        triangle_trial,
        scaling_trial,
        descent_trial,
        allocation_trial,
    ];
    let properties: Vec<PropertyResult> = PROPERTIES
        .iter()
        .zip(suites)
        .enumerate()
        .map(|(k, (name, f))| run_property(name, trials, seed.wrapping_add(k as u64 * 0x1000_0001), f))
        .collect();
    let all_passed = properties.iter().all(|p| p.failed == 0);
    Ok(CheckSummary { seed, trials, properties, all_passed })
}

/// A plan whose first row carries too much mass, for negative controls.
pub fn faulty_plan() -> Result<(DiscreteMeasure, DiscreteMeasure, Vec<f64>)> {
    let mu = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5])?;
    let nu = DiscreteMeasure::new(vec![vec![0.0], vec![2.0]], vec![0.5, 0.5])?;
    Ok((mu, nu, vec![0.5, 0.25, 0.0, 0.5]))
}

/// Validates [`faulty_plan`]; the returned message names the violation.
pub fn negative_control() -> PropertyResult {
    let outcome = faulty_plan().and_then(|(mu, nu, entries)| TransportPlan::new(&mu, &nu, entries));
    let mut res = PropertyResult {
        name: "faulty_plan".into(),
        trials: 1,
        passed: 0,
        failed: 1,
        worst: 0.0,
        first_failure: None,
    };
    match outcome {
        Err(e) => res.first_failure = Some(e.to_string()),
        Ok(_) => {
            // a faulty plan slipping through is itself the failure to report
            res.first_failure = Some("faulty plan accepted".into());
        }
    }
    res
}
