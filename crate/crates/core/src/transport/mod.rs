//! Exact discrete optimal transport at desk scale, and the plan algebra
//! (row restriction, plan sums) behind the monotony, summing and
//! localization arguments.

mod simplex;

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::format::g12;
use crate::measures::DiscreteMeasure;

pub use simplex::{solve_exact, solve_with_certificate, Certificate, MAX_SUPPORT};

/// Relative tolerance on marginal constraints.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Euclidean distance between two points of equal dimension.
pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// A coupling between two finitely supported measures: `entries[i][j]` is
/// the mass moved from source atom `i` to target atom `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    dim: usize,
    sources: Vec<f64>,
    targets: Vec<f64>,
    source_masses: Vec<f64>,
    target_masses: Vec<f64>,
    entries: Vec<f64>,
}

impl TransportPlan {
    /// Plan between `mu` and `nu`; `entries` is row-major and must reproduce
    /// both marginals to [`MARGINAL_TOL`] relative.
    pub fn new(mu: &DiscreteMeasure, nu: &DiscreteMeasure, entries: Vec<f64>) -> Result<Self> {
        let plan = Self::unchecked(mu, nu, entries)?;
        plan.validate()?;
        Ok(plan)
    }

    /// Builds a plan without checking the marginal constraints; see
    /// [`TransportPlan::validate`].
    pub fn unchecked(mu: &DiscreteMeasure, nu: &DiscreteMeasure, entries: Vec<f64>) -> Result<Self> {
        if mu.dim() != nu.dim() {
            return Err(invalid!("source dimension {} differs from target dimension {}", mu.dim(), nu.dim()));
        }
        if entries.len() != mu.len() * nu.len() {
            return Err(invalid!("expected {}x{} entries, got {}", mu.len(), nu.len(), entries.len()));
        }
        Ok(Self {
            dim: mu.dim(),
            sources: mu.coords().to_vec(),
            targets: nu.coords().to_vec(),
            source_masses: mu.masses().to_vec(),
            target_masses: nu.masses().to_vec(),
            entries,
        })
    }

    /// Plan whose marginals are read off its own row and column sums.
    pub fn from_entries(dim: usize, sources: Vec<f64>, targets: Vec<f64>, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || sources.len() % dim != 0 || targets.len() % dim != 0 {
            return Err(invalid!("coordinate arrays do not match dimension {dim}"));
        }
        let (m, n) = (sources.len() / dim, targets.len() / dim);
        if entries.len() != m * n {
            return Err(invalid!("expected {m}x{n} entries, got {}", entries.len()));
        }
        if entries.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
            return Err(invalid!("plan entries must be finite and nonnegative"));
        }
        let source_masses = (0..m).map(|i| entries[i * n..(i + 1) * n].iter().sum()).collect();
        let target_masses = (0..n).map(|j| (0..m).map(|i| entries[i * n + j]).sum()).collect();
        Ok(Self { dim, sources, targets, source_masses, target_masses, entries })
    }

    /// The plan with no mass in ambient dimension `dim`.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            sources: Vec::new(),
            targets: Vec::new(),
            source_masses: Vec::new(),
            target_masses: Vec::new(),
            entries: Vec::new(),
        }
    }

    /// Checks nonnegativity and that row/column sums match the marginals.
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.entries.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return Err(invalid!("negative or non-finite plan entry {e}"));
        }
        let tol = MARGINAL_TOL * self.total_mass().max(f64::MIN_POSITIVE);
        for (i, (s, m)) in self.row_sums().iter().zip(&self.source_masses).enumerate() {
            if (s - m).abs() > tol {
                return Err(invalid!("marginal violation: row {i} sums to {s}, source mass is {m}"));
            }
        }
        for (j, (s, m)) in self.col_sums().iter().zip(&self.target_masses).enumerate() {
            if (s - m).abs() > tol {
                return Err(invalid!("marginal violation: column {j} sums to {s}, target mass is {m}"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.source_masses.len()
    }

    pub fn cols(&self) -> usize {
        self.target_masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols() + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn source_point(&self, i: usize) -> &[f64] {
        &self.sources[i * self.dim..(i + 1) * self.dim]
    }

    pub fn target_point(&self, j: usize) -> &[f64] {
        &self.targets[j * self.dim..(j + 1) * self.dim]
    }

    pub fn source_masses(&self) -> &[f64] {
        &self.source_masses
    }

    pub fn target_masses(&self) -> &[f64] {
        &self.target_masses
    }

    pub fn total_mass(&self) -> f64 {
        self.source_masses.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let n = self.cols();
        (0..self.rows()).map(|i| self.entries[i * n..(i + 1) * n].iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.cols();
        let mut sums = vec![0.0; n];
        for row in self.entries.chunks_exact(n.max(1)) {
            for (s, e) in sums.iter_mut().zip(row) {
                *s += e;
            }
        }
        sums
    }

    /// The source marginal as a measure, dropping zero rows.
    pub fn source_measure(&self) -> Result<DiscreteMeasure> {
        marginal_measure(self.dim, &self.sources, &self.source_masses)
    }

    /// The target marginal as a measure, dropping zero columns.
    pub fn target_measure(&self) -> Result<DiscreteMeasure> {
        marginal_measure(self.dim, &self.targets, &self.target_masses)
    }

    /// `c_p(Π) = Σ Π_ij |x_i - y_j|^p`.
    pub fn cost(&self, p: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let e = self.entry(i, j);
                if e > 0.0 {
                    total += e * distance(self.source_point(i), self.target_point(j)).powf(p);
                }
            }
        }
        total
    }

    /// Largest distance travelled by a non-negligible amount of mass.
    pub fn linf_length(&self) -> f64 {
        let threshold = 1e-12 * self.total_mass();
        let mut best: f64 = 0.0;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                if self.entry(i, j) > threshold {
                    best = best.max(distance(self.source_point(i), self.target_point(j)));
                }
            }
        }
        best
    }

    /// `i,j,mass` triples of the nonzero entries.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,mass\n");
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let e = self.entry(i, j);
                if e > 0.0 {
                    out.push_str(&format!("{i},{j},{}\n", g12(e)));
                }
            }
        }
        out
    }
}

fn marginal_measure(dim: usize, coords: &[f64], masses: &[f64]) -> Result<DiscreteMeasure> {
    let mut kept_coords = Vec::new();
    let mut kept = Vec::new();
    for (p, &m) in coords.chunks_exact(dim).zip(masses) {
        if m > 0.0 {
            kept_coords.extend_from_slice(p);
            kept.push(m);
        }
    }
    DiscreteMeasure::from_flat(dim, kept_coords, kept)
}

/// `c_p` of a plan.
pub fn plan_cost(plan: &TransportPlan, p: f64) -> f64 {
    plan.cost(p)
}

/// ℓ∞ length of a plan.
pub fn linf_length(plan: &TransportPlan) -> f64 {
    plan.linf_length()
}

/// Restricts the source marginal to `mu_tilde <= μ` by scaling each row by
/// `m̃_i / m_i`, returning the restricted plan and its target marginal `ν̃`.
///
/// Atoms absent from `mu_tilde` get mass zero; zero rows and columns are
/// dropped from the result.
pub fn restrict_rows(plan: &TransportPlan, mu_tilde: &DiscreteMeasure) -> Result<(TransportPlan, DiscreteMeasure)> {
    if mu_tilde.dim() != plan.dim() {
        return Err(invalid!("restriction lives in dimension {}, plan in {}", mu_tilde.dim(), plan.dim()));
    }
    let mut factors = vec![0.0; plan.rows()];
    for (q, &mt) in mu_tilde.points().zip(mu_tilde.masses()) {
        let i = (0..plan.rows())
            .find(|&i| plan.source_point(i) == q)
            .ok_or_else(|| invalid!("restriction has an atom {q:?} outside the source support"))?;
        let m = plan.source_masses()[i];
        if mt > m * (1.0 + MARGINAL_TOL) {
            return Err(invalid!("restricted mass {mt} exceeds source mass {m} at row {i}"));
        }
        factors[i] = if m > 0.0 { (mt / m).min(1.0) } else { 0.0 };
    }
    let n = plan.cols();
    let rows: Vec<usize> = (0..plan.rows()).filter(|&i| factors[i] > 0.0).collect();
    let mut scaled = vec![0.0; rows.len() * n];
    for (r, &i) in rows.iter().enumerate() {
        for j in 0..n {
            scaled[r * n + j] = plan.entry(i, j) * factors[i];
        }
    }
    let col_sums: Vec<f64> = (0..n).map(|j| (0..rows.len()).map(|r| scaled[r * n + j]).sum()).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| col_sums[j] > 0.0).collect();
    let d = plan.dim();
    let sources: Vec<f64> = rows.iter().flat_map(|&i| plan.source_point(i).to_vec()).collect();
    let targets: Vec<f64> = cols.iter().flat_map(|&j| plan.target_point(j).to_vec()).collect();
    let entries: Vec<f64> = (0..rows.len()).flat_map(|r| cols.iter().map(move |&j| (r, j))).map(|(r, j)| scaled[r * n + j]).collect();
    let restricted = TransportPlan::from_entries(d, sources, targets, entries)?;
    let nu_tilde = restricted.target_measure()?;
    Ok((restricted, nu_tilde))
}

/// The plan `Π + Π̃` between `μ + μ̃` and `ν + ν̃`; atoms at identical
/// locations are merged.
pub fn sum_plans(a: &TransportPlan, b: &TransportPlan) -> Result<TransportPlan> {
    if a.dim() != b.dim() {
        return Err(invalid!("cannot sum plans of dimensions {} and {}", a.dim(), b.dim()));
    }
    if b.is_empty() && b.rows() == 0 {
        return Ok(a.clone());
    }
    if a.is_empty() && a.rows() == 0 {
        return Ok(b.clone());
    }
    let d = a.dim();
    let mut src = PointIndex::new(d);
    let mut tgt = PointIndex::new(d);
    let map_a_rows: Vec<usize> = (0..a.rows()).map(|i| src.insert(a.source_point(i))).collect();
    let map_b_rows: Vec<usize> = (0..b.rows()).map(|i| src.insert(b.source_point(i))).collect();
    let map_a_cols: Vec<usize> = (0..a.cols()).map(|j| tgt.insert(a.target_point(j))).collect();
    let map_b_cols: Vec<usize> = (0..b.cols()).map(|j| tgt.insert(b.target_point(j))).collect();
    let (m, n) = (src.len(), tgt.len());
    let mut entries = vec![0.0; m * n];
    let mut source_masses = vec![0.0; m];
    let mut target_masses = vec![0.0; n];
    for (plan, rmap, cmap) in [(a, &map_a_rows, &map_a_cols), (b, &map_b_rows, &map_b_cols)] {
        for i in 0..plan.rows() {
            source_masses[rmap[i]] += plan.source_masses()[i];
            for j in 0..plan.cols() {
                entries[rmap[i] * n + cmap[j]] += plan.entry(i, j);
            }
        }
        for j in 0..plan.cols() {
            target_masses[cmap[j]] += plan.target_masses()[j];
        }
    }
    Ok(TransportPlan {
        dim: d,
        sources: src.coords,
        targets: tgt.coords,
        source_masses,
        target_masses,
        entries,
    })
}

struct PointIndex {
    dim: usize,
    coords: Vec<f64>,
    index: HashMap<Vec<u64>, usize>,
}

impl PointIndex {
    fn new(dim: usize) -> Self {
        Self { dim, coords: Vec::new(), index: HashMap::new() }
    }

    fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    fn insert(&mut self, p: &[f64]) -> usize {
        let key: Vec<u64> = p.iter().map(|&c| (c + 0.0).to_bits()).collect();
        let next = self.len();
        *self.index.entry(key).or_insert_with(|| {
            self.coords.extend_from_slice(p);
            next
        })
    }
}

/// `W_p(μ, ν)` via [`solve_exact`].
pub fn wasserstein(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    let (_, cost) = solve_exact(mu, nu, p)?;
    Ok(cost.max(0.0).powf(1.0 / p))
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("exponent p must be finite and >= 1, got {p}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(points: &[f64], masses: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(points.iter().map(|&x| vec![x]).collect(), masses.to_vec()).unwrap()
    }

    #[test]
    fn cost_examples() {
        let mu = line(&[0.0, 1.0], &[1.0, 1.0]);
        let identity = TransportPlan::new(&mu, &mu, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(identity.cost(2.0), 0.0);
        assert_eq!(identity.linf_length(), 0.0);

        let single = TransportPlan::new(&line(&[0.0], &[1.0]), &line(&[2.0], &[1.0]), vec![1.0]).unwrap();
        assert_eq!(plan_cost(&single, 2.0), 4.0);

        let split = TransportPlan::new(&line(&[0.0], &[1.0]), &line(&[1.0, 3.0], &[0.5, 0.5]), vec![0.5, 0.5]).unwrap();
        assert_eq!(split.cost(1.0), 2.0);
        assert_eq!(linf_length(&split), 3.0);
    }

    #[test]
    fn validate_reports_marginal_violation() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        let faulty = TransportPlan::unchecked(&mu, &mu, vec![0.5, 0.0, 0.2, 0.3]).unwrap();
        let err = faulty.validate().unwrap_err().to_string();
        assert!(err.contains("marginal violation"), "{err}");
        assert!(TransportPlan::new(&mu, &mu, vec![0.6, -0.1, -0.1, 0.6]).is_err());
    }

    #[test]
    fn restrict_full_marginal_is_identity() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = line(&[0.25, 0.75], &[0.5, 0.5]);
        let plan = TransportPlan::new(&mu, &nu, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let (r, nu_t) = restrict_rows(&plan, &mu).unwrap();
        assert_eq!(r, plan);
        assert_eq!(nu_t, nu);
    }

    #[test]
    fn restrict_drops_zero_row() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = line(&[0.25, 0.75], &[0.5, 0.5]);
        let plan = TransportPlan::new(&mu, &nu, vec![0.3, 0.2, 0.2, 0.3]).unwrap();
        let (r, nu_t) = restrict_rows(&plan, &line(&[1.0], &[0.5])).unwrap();
        assert_eq!(r.rows(), 1);
        assert_eq!(r.entries(), &[0.2, 0.3]);
        assert_eq!(nu_t.masses(), &[0.2, 0.3]);
        assert!(restrict_rows(&plan, &line(&[1.0], &[0.6])).is_err());
        assert!(restrict_rows(&plan, &line(&[0.5], &[0.1])).is_err());
    }

    #[test]
    fn sums_are_additive() {
        let a = TransportPlan::new(&line(&[0.0], &[1.0]), &line(&[2.0], &[1.0]), vec![1.0]).unwrap();
        let b = TransportPlan::new(&line(&[5.0], &[1.0]), &line(&[6.0], &[1.0]), vec![1.0]).unwrap();
        let s = sum_plans(&a, &b).unwrap();
        s.validate().unwrap();
        assert_eq!(s.cost(2.0), 5.0);
        assert_eq!(sum_plans(&a, &TransportPlan::empty(1)).unwrap(), a);
        // shared atoms merge
        let s2 = sum_plans(&a, &a).unwrap();
        assert_eq!((s2.rows(), s2.cols()), (1, 1));
        assert_abs_diff_eq!(s2.cost(2.0), 8.0);
    }

    #[test]
    fn csv_lists_nonzero_entries() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        let plan = TransportPlan::new(&mu, &mu, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(plan.to_csv(), "i,j,mass\n0,0,0.5\n1,1,0.5\n");
    }
}
