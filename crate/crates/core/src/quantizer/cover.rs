//! Covering baseline: a greedy `2δ`-packing of a dense support sample,
//! with `δ` shrunk as far as `N` centers allow. Every sample point lies
//! within `2δ` of a center, so the support is covered at radius `5δ`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{resolve_quad, unflatten, Engine, QuantizerResult};
use crate::error::{invalid, Result};
use crate::measures::Measure;
use crate::transport::check_exponent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    pub result: QuantizerResult,
    /// Final packing radius; `energy^{1/p} <= 5δ` on the sample.
    pub delta: f64,
}

/// Sample points per requested center, and the floor on the sample size.
const PER_CENTER: usize = 64;
const MIN_SAMPLE: usize = 8192;

/// Greedy maximal `2δ`-separated subset of `sample`, in sample order.
/// Stops early once more than `cap` centers are picked.
fn pack(sample: &[f64], dim: usize, delta: f64, cap: usize) -> Option<Vec<usize>> {
    let sep = 2.0 * delta;
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut centers = Vec::new();
    let key = |x: &[f64]| -> Vec<i64> { x.iter().map(|c| (c / sep).floor() as i64).collect() };
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(dim as u32))
        .map(|mut code| {
            (0..dim)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect();
    for (k, x) in sample.chunks_exact(dim).enumerate() {
        let base = key(x);
        let covered = offsets.iter().any(|off| {
            let cell: Vec<i64> = base.iter().zip(off).map(|(b, o)| b + o).collect();
            grid.get(&cell).is_some_and(|members| {
                members.iter().any(|&c| {
                    let y = &sample[c * dim..(c + 1) * dim];
                    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= sep * sep
                })
            })
        });
        if !covered {
            centers.push(k);
            if centers.len() > cap {
                return None;
            }
            grid.entry(base).or_default().push(k);
        }
    }
    Some(centers)
}

/// Covering-based `N`-point support with Voronoi masses.
pub fn cover_baseline(measure: &Measure, n: usize, p: f64, seed: u64) -> Result<CoverResult> {
    check_exponent(p)?;
    if n == 0 {
        return Err(invalid!("N must be ≥ 1"));
    }
    let dim = measure.dim();
    let sample = match measure {
        Measure::Discrete(m) => m.coords().to_vec(),
        _ => measure.sample_flat((PER_CENTER * n).max(MIN_SAMPLE), seed)?,
    };
    let bounds = measure.support_bounds();
    let diam = bounds.iter().map(|[a, b]| (b - a) * (b - a)).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);

    // a radius whose packing has a single center
    let mut hi = diam;
    let mut best = (hi, pack(&sample, dim, hi, n).expect("one center covers the support"));
    let mut lo = 1e-12 * diam;
    if let Some(c) = pack(&sample, dim, lo, n) {
        best = (lo, c);
    } else {
        for _ in 0..60 {
            let mid = (lo * hi).sqrt();
            match pack(&sample, dim, mid, n) {
                Some(c) => {
                    hi = mid;
                    best = (mid, c);
                }
                None => lo = mid,
            }
            if hi / lo < 1.0 + 1e-6 {
                break;
            }
        }
    }
    let (delta, picked) = best;
    let centers: Vec<f64> = picked.iter().flat_map(|&k| sample[k * dim..(k + 1) * dim].iter().copied()).collect();
    let quad = resolve_quad(measure, None);
    let engine = Engine::new(measure, &quad)?;
    let result = QuantizerResult {
        points: unflatten(&centers, dim),
        masses: engine.masses(&centers),
        energy: engine.energy(&centers, p),
        p,
        n,
        seed,
        quad,
        iterations: 0,
        converged: true,
    };
    Ok(CoverResult { result, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{CantorMeasure, DiscreteMeasure, GriddedDensity};

    #[test]
    fn discrete_recovered_exactly() {
        let m: Measure =
            DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 3.0]], vec![0.2, 0.3, 0.5]).unwrap().into();
        let c = cover_baseline(&m, 4, 2.0, 1).unwrap();
        assert_eq!(c.result.energy, 0.0);
        assert_eq!(c.result.points.len(), 3);
    }

    #[test]
    fn uniform_segment_bound() {
        let m: Measure = GriddedDensity::unit_cube(1).unwrap().into();
        let c = cover_baseline(&m, 10, 2.0, 3).unwrap();
        assert!(c.result.points.len() <= 10);
        assert!(c.result.wasserstein() <= 0.5);
        assert!(c.result.wasserstein() <= 5.0 * c.delta);
    }

    #[test]
    fn cantor_bound() {
        let s = CantorMeasure::dimension();
        for k in 0..6 {
            let n = 1usize << k;
            let c = cover_baseline(&CantorMeasure.into(), n, 1.0, 5).unwrap();
            assert!(c.result.points.len() <= n);
            assert!(c.result.wasserstein() <= 15.0 * (n as f64).powf(-1.0 / s));
        }
    }
}
