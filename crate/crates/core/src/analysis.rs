//! Asymptotic post-processing of quantizer output: rate exponents, the
//! cube constants θ(d, p), the support-point law and the equidistribution
//! of point energies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::format::g12;
use crate::measures::{CantorMeasure, GriddedDensity, Measure};
use crate::quantizer::{self, quantize, quantize_1d_dp, QuadratureSpec, QuantizeOptions, QuantizerResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    #[serde(rename = "N")]
    pub n: usize,
    /// `W_p` at this `N`.
    pub value: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateScanReport {
    pub rows: Vec<RateRow>,
    pub fitted_slope: f64,
    pub fitted_log_constant: f64,
    pub r_squared: f64,
}

impl RateScanReport {
    /// `N,Wp,scaled,seed` rows, `scaled = W_p · N^{-slope}`, then a footer
    /// with the fit.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,Wp,scaled,seed\n");
        for r in &self.rows {
            let scaled = r.value * (r.n as f64).powf(-self.fitted_slope);
            s.push_str(&format!("{},{},{},{}\n", r.n, g12(r.value), g12(scaled), r.seed));
        }
        s.push_str(&format!(
            "# slope={},log_constant={},r_squared={}\n",
            g12(self.fitted_slope),
            g12(self.fitted_log_constant),
            g12(self.r_squared)
        ));
        s
    }
}

/// Least-squares fit of `log W_p = slope · log N + c`.
pub fn fit_rate(rows: &[RateRow]) -> Result<RateScanReport> {
    if rows.len() < 3 {
        return Err(invalid!("a rate fit needs at least 3 rows, got {}", rows.len()));
    }
    if let Some(r) = rows.iter().find(|r| !(r.value > 0.0 && r.value.is_finite())) {
        return Err(invalid!("rate values must be positive, got {} at N={}", r.value, r.n));
    }
    let mut rows = rows.to_vec();
    rows.sort_by_key(|r| r.n);
    if rows.windows(2).any(|w| w[0].n == w[1].n) || rows[0].n == 0 {
        return Err(invalid!("rate rows need distinct positive N"));
    }
    let k = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(RateScanReport { rows, fitted_slope: slope, fitted_log_constant: intercept, r_squared })
}

/// Quantizes `measure` at every `N` (in parallel) and fits the rate.
pub fn rate_scan(measure: &Measure, p: f64, n_list: &[usize], opts: &QuantizeOptions) -> Result<RateScanReport> {
    let rows: Result<Vec<RateRow>> = n_list
        .par_iter()
        .map(|&n| {
            let r = quantize(measure, n, p, opts)?;
            Ok(RateRow { n, value: r.wasserstein(), seed: opts.seed })
        })
        .collect();
    fit_rate(&rows?)
}

/// Rate scan of the Cantor measure from the closed-form errors.
pub fn cantor_exact_scan(p: f64, n_list: &[usize]) -> Result<RateScanReport> {
    let rows: Result<Vec<RateRow>> = n_list
        .iter()
        .map(|&n| Ok(RateRow { n, value: crate::cantor::exact_error(n as u64, p)?, seed: 0 }))
        .collect();
    fit_rate(&rows?)
}

/// A closed-form θ(d, p) together with the constant as printed in the
/// literature when the two disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownTheta {
    pub d: usize,
    pub p: f64,
    pub value: f64,
    pub formula: String,
    pub printed: Option<f64>,
    pub printed_formula: Option<String>,
    pub note: Option<String>,
}

/// θ(1, p) for every `p`, and the hexagonal-cell values θ(2, 2), θ(2, 1).
pub fn known_theta(d: usize, p: f64) -> Option<KnownTheta> {
    match (d, p) {
        (1, _) => Some(KnownTheta {
            d,
            p,
            value: 0.5 * (p + 1.0).powf(-1.0 / p),
            formula: "(p+1)^(-1/p)/2".into(),
            printed: None,
            printed_formula: None,
            note: None,
        }),
        (2, 2.0) => {
            let raw = 5.0 * 3f64.sqrt() / 54.0;
            Some(KnownTheta {
                d,
                p,
                value: raw.sqrt(),
                formula: "(5*sqrt(3)/54)^(1/2)".into(),
                printed: Some(raw),
                printed_formula: Some("5*sqrt(3)/54".into()),
                note: Some(
                    "5*sqrt(3)/54 is the second moment of the unit-area regular hexagon about its centre, \
                     i.e. theta^p; theta itself is its square root"
                        .into(),
                ),
            })
        }
        (2, 1.0) => {
            let ln27 = 27f64.ln();
            Some(KnownTheta {
                d,
                p,
                value: 2f64.powf(-1.5) * 3f64.powf(-1.75) * (4.0 + ln27),
                formula: "2^(-3/2)*3^(-7/4)*(4+ln 27)".into(),
                printed: Some(2f64.powf(-2.0 / 3.0) * 3f64.powf(-1.75) * (4.0 + ln27)),
                printed_formula: Some("2^(-2/3)*3^(-7/4)*(4+ln 27)".into()),
                note: Some(
                    "the mean distance to the centre of the unit-area regular hexagon carries the power 2^(-3/2); \
                     the printed exponent -2/3 overstates it"
                        .into(),
                ),
            })
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub d: usize,
    pub p: f64,
    pub theta_hat: f64,
    pub stderr: f64,
    /// `(N, N^{1/d} · W_p, seed of the best run)`.
    pub per_n: Vec<(usize, f64, u64)>,
    pub method: String,
    pub known: Option<KnownTheta>,
    /// `theta_hat / known - 1`.
    pub relative_error: Option<f64>,
}

/// Slabs per support point used by the one-dimensional oracle.
pub const DP_RESOLUTION_PER_POINT: usize = 32;

/// `θ̂ = mean over N of N^{1/d} W_p(□^d, best quantizer)`. The segment uses
/// the exact dynamic-programming oracle; higher dimensions take the best of
/// one Lloyd run per seed.
pub fn estimate_theta(
    d: usize,
    p: f64,
    n_list: &[usize],
    seeds: &[u64],
    base: &QuantizeOptions,
) -> Result<ThetaEstimate> {
    if !(1..=3).contains(&d) {
        return Err(invalid!("d must be 1, 2 or 3, got {d}"));
    }
    if n_list.is_empty() {
        return Err(invalid!("the N list is empty"));
    }
    let cube: Measure = GriddedDensity::unit_cube(d)?.into();
    let per_n: Result<Vec<(usize, f64, u64)>> = if d == 1 {
        n_list
            .par_iter()
            .map(|&n| {
                let r = quantize_1d_dp(&cube, n, p, DP_RESOLUTION_PER_POINT * n)?;
                Ok((n, n as f64 * r.wasserstein(), 0))
            })
            .collect()
    } else {
        if seeds.is_empty() {
            return Err(invalid!("need at least one seed"));
        }
        let jobs: Vec<(usize, u64)> = n_list.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
        let runs: Result<Vec<(usize, u64, f64)>> = jobs
            .par_iter()
            .map(|&(n, seed)| {
                let opts = QuantizeOptions { restarts: 1, seed, ..*base };
                Ok((n, seed, quantize(&cube, n, p, &opts)?.wasserstein()))
            })
            .collect();
        let runs = runs?;
        Ok(n_list
            .iter()
            .map(|&n| {
                let (seed, w) = runs
                    .iter()
                    .filter(|r| r.0 == n)
                    .map(|r| (r.1, r.2))
                    .reduce(|a, b| if b.1 < a.1 { b } else { a })
                    .expect("one run per seed");
                (n, (n as f64).powf(1.0 / d as f64) * w, seed)
            })
            .collect())
    };
    let per_n = per_n?;
    let k = per_n.len() as f64;
    let theta_hat = per_n.iter().map(|r| r.1).sum::<f64>() / k;
    let stderr = if per_n.len() > 1 {
        let var = per_n.iter().map(|r| (r.1 - theta_hat).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    let known = known_theta(d, p);
    let relative_error = known.as_ref().map(|t| theta_hat / t.value - 1.0);
    let method = if d == 1 { "dynamic-programming oracle" } else { "best-of-seeds Lloyd" }.to_string();
    Ok(ThetaEstimate { d, p, theta_hat, stderr, per_n, method, known, relative_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Lower corner of the bin.
    pub lower: [f64; 3],
    pub observed: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportLawReport {
    /// `d / (d + p)`.
    pub beta: f64,
    /// Kolmogorov–Smirnov distance in 1-D.
    pub ks: Option<f64>,
    /// `Σ (observed - expected)² / expected` over bins with positive
    /// predicted mass, counts in points.
    pub chi_square: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Compares the support points of `result` with the law proportional to
/// `ρ^{d/(d+p)}`, binned over `bins_per_axis` cubes of the density box.
pub fn support_density_report(
    result: &QuantizerResult,
    density: &GriddedDensity,
    p: f64,
    bins_per_axis: usize,
) -> Result<SupportLawReport> {
    let d = density.dim();
    if result.dim() != d {
        return Err(invalid!("result has dimension {} but the density has {d}", result.dim()));
    }
    if bins_per_axis == 0 {
        return Err(invalid!("need at least one bin per axis"));
    }
    let beta = d as f64 / (d as f64 + p);
    let powered = GriddedDensity::new(
        density.bounds().to_vec(),
        density.resolution().to_vec(),
        density.values().iter().map(|v| v.max(0.0).powf(beta)).collect(),
    )?;
    let total = powered.total_mass();
    let law: Measure = powered.into();
    let n = result.points.len() as f64;

    let ks = (d == 1).then(|| {
        let [lo, _] = density.bounds()[0];
        let mut xs: Vec<f64> = result.points.iter().map(|x| x[0]).collect();
        xs.sort_by(f64::total_cmp);
        let cdf = |x: f64| law.box_mass(&[[lo, x]]).map_or(0.0, |m| m / total);
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    });

    let bounds = density.bounds();
    let widths: Vec<f64> = bounds.iter().map(|[a, b]| (b - a) / bins_per_axis as f64).collect();
    let bins = bins_per_axis.pow(d as u32);
    let mut observed = vec![0.0; bins];
    for x in &result.points {
        let mut flat = 0;
        for axis in 0..d {
            let k = ((x[axis] - bounds[axis][0]) / widths[axis]).floor().clamp(0.0, (bins_per_axis - 1) as f64);
            flat = flat * bins_per_axis + k as usize;
        }
        observed[flat] += 1.0;
    }
    let mut histogram = Vec::with_capacity(bins);
    let mut chi_square = 0.0;
    for (flat, &obs) in observed.iter().enumerate() {
        let mut rest = flat;
        let mut bx = vec![[0.0; 2]; d];
        let mut lower = [0.0; 3];
        for axis in (0..d).rev() {
            let k = rest % bins_per_axis;
            rest /= bins_per_axis;
            let a = bounds[axis][0] + k as f64 * widths[axis];
            bx[axis] = [a, a + widths[axis]];
            lower[axis] = a;
        }
        let predicted = law.box_mass(&bx)? / total;
        let expected = predicted * n;
        if expected > 0.0 {
            chi_square += (obs - expected).powi(2) / expected;
        }
        histogram.push(HistogramBin { lower, observed: obs / n, predicted });
    }
    Ok(SupportLawReport { beta, ks, chi_square, histogram })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistCell {
    pub index: Vec<usize>,
    pub points: usize,
    /// Mean point energy in the cell times `N^{(d+p)/d}`.
    pub scaled_avg_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistReport {
    pub cells_per_axis: usize,
    pub cells: Vec<EquidistCell>,
    pub empty_cells: Vec<Vec<usize>>,
    pub coefficient_of_variation: f64,
    /// `max / min` of the scaled averages over occupied cells.
    pub spread: f64,
    /// `θ(d,p)^p |ρ|_{d/(d+p)}`, when θ is known.
    pub predicted_limit: Option<f64>,
}

/// Scaled average point energies over a partition of the density box into
/// `cells_per_axis^d` congruent cubes. Points on a shared face go to the
/// lower-index cube.
pub fn equidist_report(
    result: &QuantizerResult,
    density: &GriddedDensity,
    p: f64,
    cells_per_axis: usize,
) -> Result<EquidistReport> {
    let d = density.dim();
    if result.dim() != d {
        return Err(invalid!("result has dimension {} but the density has {d}", result.dim()));
    }
    if cells_per_axis == 0 {
        return Err(invalid!("need at least one cell per axis"));
    }
    let measure: Measure = density.clone().into();
    let energies = quantizer::cell_energies(&measure, &result.points, p, &result.quad)?;
    let n = result.points.len();
    let scale = (n as f64).powf((d as f64 + p) / d as f64);
    let bounds = density.bounds();
    let count = cells_per_axis.pow(d as u32);
    let mut sums = vec![0.0; count];
    let mut counts = vec![0usize; count];
    for (x, e) in result.points.iter().zip(&energies) {
        let mut flat = 0;
        for axis in 0..d {
            let [a, b] = bounds[axis];
            let t = (x[axis] - a) / (b - a) * cells_per_axis as f64;
            let k = (t.ceil() - 1.0).clamp(0.0, (cells_per_axis - 1) as f64) as usize;
            flat = flat * cells_per_axis + k;
        }
        sums[flat] += e;
        counts[flat] += 1;
    }
    let index_of = |mut flat: usize| {
        let mut idx = vec![0; d];
        for axis in (0..d).rev() {
            idx[axis] = flat % cells_per_axis;
            flat /= cells_per_axis;
        }
        idx
    };
    let mut cells = Vec::new();
    let mut empty_cells = Vec::new();
    for flat in 0..count {
        if counts[flat] == 0 {
            empty_cells.push(index_of(flat));
        } else {
            cells.push(EquidistCell {
                index: index_of(flat),
                points: counts[flat],
                scaled_avg_energy: sums[flat] / counts[flat] as f64 * scale,
            });
        }
    }
    let vals: Vec<f64> = cells.iter().map(|c| c.scaled_avg_energy).collect();
    let k = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / k;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k).sqrt();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let beta = d as f64 / (d as f64 + p);
    let predicted_limit = match known_theta(d, p) {
        Some(t) => Some(t.value.powf(p) * density.beta_norm(beta)?),
        None => None,
    };
    Ok(EquidistReport {
        cells_per_axis,
        cells,
        empty_cells,
        coefficient_of_variation: sd / mean,
        spread: hi / lo,
        predicted_limit,
    })
}

/// Similarity dimension of each component: `log 2/log 3` for the Cantor
/// measure, the ambient dimension for densities, 0 for atoms.
pub fn component_dimension(measure: &Measure) -> f64 {
    match measure {
        Measure::Discrete(_) => 0.0,
        Measure::Gridded(g) => g.dim() as f64,
        Measure::Cantor(_) => CantorMeasure::dimension(),
        Measure::Mixture(m) => m.components().iter().map(|(_, c)| component_dimension(c)).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRateReport {
    pub scan: RateScanReport,
    /// `-1 / max_i s_i`.
    pub expected_slope: f64,
}

/// Rate scan of a mixture via `quantize`, against `-1/max_i s_i`.
pub fn mixture_rate_check(
    measure: &Measure,
    p: f64,
    n_list: &[usize],
    opts: &QuantizeOptions,
) -> Result<MixtureRateReport> {
    let s = component_dimension(measure);
    if s <= 0.0 {
        return Err(invalid!("a purely atomic measure has no rate"));
    }
    Ok(MixtureRateReport { scan: rate_scan(measure, p, n_list, opts)?, expected_slope: -1.0 / s })
}

/// Default quadrature used by the reports: the quantizer's own.
pub fn default_quad(d: usize) -> QuadratureSpec {
    QuadratureSpec::default_for(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Mixture;
    use approx::assert_relative_eq;

    fn rows(f: impl Fn(f64) -> f64, ns: &[usize]) -> Vec<RateRow> {
        ns.iter().map(|&n| RateRow { n, value: f(n as f64), seed: 0 }).collect()
    }

    #[test]
    fn exact_power_law() {
        let r = fit_rate(&rows(|n| 3.0 * n.powf(-0.5), &[4, 9, 50, 1000])).unwrap();
        assert_relative_eq!(r.fitted_slope, -0.5, epsilon = 1e-12);
        assert_relative_eq!(r.fitted_log_constant, 3f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(r.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_bad_rows() {
        assert!(fit_rate(&rows(|n| n, &[1, 2])).is_err());
        assert!(fit_rate(&rows(|n| n - 2.0, &[1, 2, 3])).is_err());
        assert!(fit_rate(&rows(|n| n, &[1, 2, 2])).is_err());
    }

    #[test]
    fn cantor_exact_slope() {
        let ns: Vec<usize> = (0..10).map(|k| 1 << k).collect();
        let r = cantor_exact_scan(1.0, &ns).unwrap();
        assert_relative_eq!(r.fitted_slope, -1.0 / CantorMeasure::dimension(), epsilon = 1e-12);
    }

    #[test]
    fn theta_on_the_segment() {
        for p in [1.0, 2.0] {
            let t = estimate_theta(1, p, &[16, 32], &[], &QuantizeOptions::default()).unwrap();
            assert!(t.relative_error.unwrap().abs() < 1e-6, "{t:?}");
        }
        assert!(estimate_theta(4, 2.0, &[4], &[0], &QuantizeOptions::default()).is_err());
    }

    #[test]
    fn printed_constants_are_flagged() {
        let t = known_theta(2, 2.0).unwrap();
        assert_relative_eq!(t.value, 0.40046856902, epsilon = 1e-10);
        assert_relative_eq!(t.printed.unwrap(), 5.0 * 3f64.sqrt() / 54.0, epsilon = 1e-15);
        let t = known_theta(2, 1.0).unwrap();
        assert_relative_eq!(t.value, 0.3771967, epsilon = 1e-6);
        assert!(t.note.is_some());
        assert!(known_theta(3, 2.0).is_none());
    }

    #[test]
    fn uniform_support_law() {
        let seg = GriddedDensity::unit_cube(1).unwrap();
        let r = quantize_1d_dp(&seg.clone().into(), 20, 2.0, 160).unwrap();
        let rep = support_density_report(&r, &seg, 2.0, 4).unwrap();
        assert!(rep.ks.unwrap() <= 0.05 + 1e-12);
        assert_relative_eq!(rep.chi_square, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_block_fractions() {
        let dens = GriddedDensity::new(vec![[0.0, 1.0]], vec![2], vec![0.4, 3.2]).unwrap();
        let r = quantize_1d_dp(&dens.clone().into(), 90, 2.0, 1440).unwrap();
        let rep = support_density_report(&r, &dens, 2.0, 2).unwrap();
        assert_relative_eq!(rep.histogram[0].predicted, 1.0 / 3.0, epsilon = 1e-12);
        assert!((rep.histogram[0].observed - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn symmetric_grid_is_equidistributed() {
        let sq = GriddedDensity::unit_cube(2).unwrap();
        let pts: Vec<Vec<f64>> =
            (0..16).map(|k| vec![(k / 4) as f64 / 4.0 + 0.125, (k % 4) as f64 / 4.0 + 0.125]).collect();
        let quad = QuadratureSpec::grid(64);
        let e = quantizer::energy(&sq.clone().into(), &pts, 2.0, &quad).unwrap();
        let result = QuantizerResult {
            points: pts,
            masses: vec![1.0 / 16.0; 16],
            energy: e,
            p: 2.0,
            n: 16,
            seed: 0,
            quad,
            iterations: 0,
            converged: true,
        };
        let rep = equidist_report(&result, &sq, 2.0, 2).unwrap();
        assert_eq!(rep.cells.len(), 4);
        assert!(rep.coefficient_of_variation < 1e-12);
        // square cells: N^2 · (1/6)(1/4)^2 / 16 per point = 1/6, less the
        // midpoint-rule bias (16 nodes per cell side: factor 1 - 1/256)
        assert_relative_eq!(rep.cells[0].scaled_avg_energy, (1.0 - 1.0 / 256.0) / 6.0, max_relative = 1e-12);
    }

    #[test]
    fn mixture_dimension() {
        let mix: Measure = Mixture::new(vec![
            (0.5, CantorMeasure.into()),
            (0.5, GriddedDensity::uniform(vec![[2.0, 3.0]]).unwrap().into()),
        ])
        .unwrap()
        .into();
        assert_eq!(component_dimension(&mix), 1.0);
        assert_relative_eq!(component_dimension(&CantorMeasure.into()), 2f64.ln() / 3f64.ln());
    }
}
