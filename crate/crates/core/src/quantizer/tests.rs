use super::*;
use crate::measures::{CantorMeasure, DiscreteMeasure, GriddedDensity};
use approx::{assert_abs_diff_eq, assert_relative_eq};

fn segment() -> Measure {
    GriddedDensity::unit_cube(1).unwrap().into()
}

fn square() -> Measure {
    GriddedDensity::unit_cube(2).unwrap().into()
}

fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
    xs.iter().map(|&x| vec![x]).collect()
}

fn q() -> QuadratureSpec {
    QuadratureSpec::grid(64)
}

#[test]
fn energy_examples() {
    assert_relative_eq!(energy(&segment(), &pts(&[0.5]), 2.0, &q()).unwrap(), 1.0 / 12.0, epsilon = 1e-15);
    for n in [1usize, 3, 10] {
        let mids: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let e = energy(&segment(), &pts(&mids), 2.0, &q()).unwrap();
        assert_relative_eq!(e, 1.0 / (12.0 * (n * n) as f64), max_relative = 1e-12);
    }
    assert_relative_eq!(energy(&CantorMeasure.into(), &pts(&[0.5]), 2.0, &q()).unwrap(), 0.125, epsilon = 1e-12);
    assert!(energy(&segment(), &[], 2.0, &q()).is_err());
}

#[test]
fn voronoi_examples() {
    let m = voronoi_masses(&segment(), &pts(&[0.25, 0.75]), &q()).unwrap();
    assert_abs_diff_eq!(m[0], 0.5, epsilon = 1e-15);
    let m = voronoi_masses(&square(), &[vec![0.25, 0.5], vec![0.75, 0.5]], &q()).unwrap();
    assert_abs_diff_eq!(m[0], 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(m[1], 0.5, epsilon = 1e-12);
    let m = voronoi_masses(&CantorMeasure.into(), &pts(&[1.0 / 6.0, 5.0 / 6.0]), &q()).unwrap();
    assert_abs_diff_eq!(m[0], 0.5, epsilon = 1e-12);
    assert!(voronoi_masses(&segment(), &pts(&[0.2, 0.2]), &q()).is_err());
}

#[test]
fn grid_tie_break_keeps_mass() {
    // centers symmetric about grid nodes produce exact ties
    let x = vec![vec![0.5, 0.25], vec![0.5, 0.75], vec![0.25, 0.5], vec![0.75, 0.5]];
    let m = voronoi_masses(&square(), &x, &QuadratureSpec::grid(16)).unwrap();
    assert_eq!(m.iter().sum::<f64>(), 1.0);
}

#[test]
fn improve_step_examples() {
    for p in [1.0, 2.0, 3.0] {
        let x = improve_step(&segment(), &pts(&[0.3]), p, &q(), 0).unwrap();
        assert_abs_diff_eq!(x[0][0], 0.5, epsilon = 1e-9);
    }
    let cvt = pts(&[0.125, 0.375, 0.625, 0.875]);
    let x = improve_step(&segment(), &cvt, 2.0, &q(), 0).unwrap();
    for (a, b) in x.iter().zip(&cvt) {
        assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-14);
    }
}

#[test]
fn improve_step_reseeds_empty_cells() {
    let m: Measure = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5]).unwrap().into();
    // both atoms fall in the first cell; the second point is redrawn
    let x = improve_step(&m, &pts(&[0.0, 5.0]), 2.0, &q(), 9).unwrap();
    assert_eq!(x[0], vec![0.5]);
    assert!(x[1] == vec![0.0] || x[1] == vec![1.0]);
    assert_eq!(x, improve_step(&m, &pts(&[0.0, 5.0]), 2.0, &q(), 9).unwrap());
}

#[test]
fn planar_step_descends_for_every_exponent() {
    let sq = square();
    let quad = QuadratureSpec::grid(48);
    let x0: Vec<Vec<f64>> = sq.sample(12, 4).unwrap();
    for p in [1.0, 1.5, 2.0, 3.0] {
        let e0 = energy(&sq, &x0, p, &quad).unwrap();
        let x1 = improve_step(&sq, &x0, p, &quad, 0).unwrap();
        let e1 = energy(&sq, &x1, p, &quad).unwrap();
        assert!(e1 <= e0 * (1.0 + 1e-12), "p={p}: {e1} > {e0}");
        assert!(e1 < e0);
    }
}

#[test]
fn quantize_examples() {
    let opts = QuantizeOptions { restarts: 2, ..Default::default() };
    let r = quantize(&segment(), 1, 2.0, &opts).unwrap();
    assert_abs_diff_eq!(r.points[0][0], 0.5, epsilon = 1e-9);
    assert_relative_eq!(r.energy, 1.0 / 12.0, max_relative = 1e-9);
    let r = quantize(&segment(), 2, 2.0, &opts).unwrap();
    let mut xs: Vec<f64> = r.points.iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    assert_abs_diff_eq!(xs[0], 0.25, epsilon = 1e-4);
    assert_abs_diff_eq!(xs[1], 0.75, epsilon = 1e-4);
    assert_relative_eq!(r.wasserstein(), 1.0 / (4.0 * 3f64.sqrt()), max_relative = 1e-6);
    assert!(r.converged);
    let r = quantize(&CantorMeasure.into(), 1, 2.0, &opts).unwrap();
    assert_abs_diff_eq!(r.points[0][0], 0.5, epsilon = 1e-9);
}

#[test]
fn quantize_result_is_self_consistent() {
    let sq = square();
    let opts = QuantizeOptions { restarts: 2, quad: Some(QuadratureSpec::grid(40)), ..Default::default() };
    let r = quantize(&sq, 7, 2.0, &opts).unwrap();
    assert_relative_eq!(r.masses.iter().sum::<f64>(), 1.0, max_relative = 1e-9);
    assert_relative_eq!(energy(&sq, &r.points, 2.0, &r.quad).unwrap(), r.energy, max_relative = 1e-12);
    assert_eq!(quantize(&sq, 7, 2.0, &opts).unwrap(), r);
}

#[test]
fn quantize_returns_small_discrete_measures() {
    let m: Measure = DiscreteMeasure::new(vec![vec![0.0], vec![2.0]], vec![0.25, 0.75]).unwrap().into();
    let r = quantize(&m, 3, 1.0, &QuantizeOptions::default()).unwrap();
    assert_eq!(r.energy, 0.0);
    assert_eq!(r.masses, vec![0.25, 0.75]);
}

#[test]
fn quantize_rejects_bad_arguments() {
    assert!(quantize(&segment(), 0, 2.0, &QuantizeOptions::default()).is_err());
    assert!(quantize(&segment(), 2, 0.5, &QuantizeOptions::default()).is_err());
}

#[test]
fn result_json_field_names() {
    let r = quantize(&segment(), 1, 2.0, &QuantizeOptions { restarts: 1, ..Default::default() }).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for key in ["points", "masses", "energy", "p", "N", "seed", "quad", "iterations", "converged"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["quad"]["mode"], "grid");
}
