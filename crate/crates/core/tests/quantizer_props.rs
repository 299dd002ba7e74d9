use proptest::prelude::*;
use wq::analysis::{fit_rate, support_density_report, RateRow, DP_RESOLUTION_PER_POINT};
use wq::measures::{CantorMeasure, GriddedDensity, Measure, Mixture};
use wq::quantizer::{
    assignment_reach, energy, improve_step, predict_allocation, quantize, quantize_1d_dp, voronoi_masses, QuadratureSpec,
    QuantizeOptions,
};

fn ramp() -> GriddedDensity {
    GriddedDensity::affine(vec![[0.0, 1.0]], vec![4096], 0.0, &[2.0]).unwrap()
}

fn line_measures() -> Vec<(&'static str, Measure)> {
    let mix = Mixture::new(vec![
        (0.5, CantorMeasure.into()),
        (0.5, GriddedDensity::uniform(vec![[2.0, 3.0]]).unwrap().into()),
    ])
    .unwrap();
    vec![
        ("uniform", GriddedDensity::unit_cube(1).unwrap().into()),
        ("ramp", ramp().into()),
        ("cantor", CantorMeasure.into()),
        ("mixture", mix.into()),
    ]
}

#[test]
fn energy_is_monotone_in_n() {
    let opts = QuantizeOptions { restarts: 4, seed: 3, ..Default::default() };
    for (name, m) in line_measures().into_iter().take(3) {
        let mut prev = f64::INFINITY;
        for n in 1..=32 {
            let e = quantize(&m, n, 2.0, &opts).unwrap().energy;
            assert!(e <= prev + 1e-8, "{name}: N={n} energy {e} above {prev}");
            prev = e;
        }
    }
}

#[test]
fn lloyd_matches_dynamic_programming_on_the_line() {
    let opts = QuantizeOptions { restarts: 8, seed: 1, ..Default::default() };
    for (name, m) in line_measures() {
        for p in [1.0, 2.0] {
            for n in [1usize, 2, 3, 5, 8, 13, 21, 32] {
                let lloyd = quantize(&m, n, p, &opts).unwrap().energy;
                let dp = quantize_1d_dp(&m, n, p, 64 * n).unwrap().energy;
                let rel = lloyd / dp - 1.0;
                assert!(rel.abs() < 0.01, "{name} p={p} N={n}: lloyd {lloyd} dp {dp}");
            }
        }
    }
}

#[test]
fn reach_shrinks_on_doubling_schedule() {
    let square: Measure = GriddedDensity::unit_cube(2).unwrap().into();
    let quad = QuadratureSpec::grid(128);
    let opts = QuantizeOptions { restarts: 2, quad: Some(quad), tol: 1e-7, ..Default::default() };
    let mut prev = f64::INFINITY;
    for k in 0..=8 {
        let r = quantize(&square, 1 << k, 2.0, &opts).unwrap();
        let reach = assignment_reach(&square, &r.points, &quad).unwrap();
        assert!(reach <= prev, "square N={}: {reach} > {prev}", 1 << k);
        prev = reach;
    }
    let ramp: Measure = ramp().into();
    let mut prev = f64::INFINITY;
    for k in 0..=8 {
        let r = quantize_1d_dp(&ramp, 1 << k, 2.0, 64 << k).unwrap();
        let reach = assignment_reach(&ramp, &r.points, &quad).unwrap();
        assert!(reach <= prev, "ramp N={}: {reach} > {prev}", 1 << k);
        prev = reach;
    }
}

#[test]
fn support_law_tightens_with_n() {
    let density = ramp();
    let m: Measure = density.clone().into();
    let ks: Vec<f64> = [128usize, 256, 512]
        .iter()
        .map(|&n| {
            let r = quantize_1d_dp(&m, n, 2.0, DP_RESOLUTION_PER_POINT * n).unwrap();
            support_density_report(&r, &density, 2.0, 16).unwrap().ks.unwrap()
        })
        .collect();
    assert!(ks[1] < ks[0] && ks[2] < ks[1], "{ks:?}");
}

fn planar_density() -> impl Strategy<Value = GriddedDensity> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(a, b)| {
        prop::collection::vec(0.1f64..3.0, a * b)
            .prop_map(move |v| GriddedDensity::new(vec![[0.0, 1.0], [0.0, 2.0]], vec![a, b], v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn improve_step_never_increases_energy(g in planar_density(), n in 1usize..8, seed in any::<u64>(), p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])) {
        let m: Measure = g.into();
        let quad = QuadratureSpec::grid(32);
        let x = m.sample(n, seed).unwrap();
        let before = energy(&m, &x, p, &quad).unwrap();
        let y = improve_step(&m, &x, p, &quad, seed).unwrap();
        prop_assert!(energy(&m, &y, p, &quad).unwrap() <= before * (1.0 + 1e-12));
    }

    #[test]
    fn voronoi_masses_keep_all_mass(g in planar_density(), n in 1usize..10, seed in any::<u64>(), snap in any::<bool>()) {
        let m: Measure = g.into();
        let quad = QuadratureSpec::grid(16);
        let mut x = m.sample(n, seed).unwrap();
        if snap {
            // centers on a coarse lattice create exact distance ties
            for p in &mut x {
                for c in p.iter_mut() {
                    *c = (*c * 4.0).round() / 4.0;
                }
            }
            x.sort_by(|a, b| a.partial_cmp(b).unwrap());
            x.dedup();
        }
        let masses = voronoi_masses(&m, &x, &quad).unwrap();
        let total: f64 = masses.iter().sum();
        prop_assert!((total - m.total_mass()).abs() <= 1e-12 * m.total_mass());
    }

    #[test]
    fn allocation_is_normalized_and_homogeneous(alphas in prop::collection::vec(0.01f64..100.0, 1..8), c in 0.01f64..100.0, d in 1usize..=3, p in 1.0f64..4.0) {
        let (x, f) = predict_allocation(&alphas, d, p).unwrap();
        prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let scaled: Vec<f64> = alphas.iter().map(|a| a * c).collect();
        let (y, g) = predict_allocation(&scaled, d, p).unwrap();
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((g / (c * f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_fit_recovers_exact_power_laws(slope in -3.0f64..-0.1, c in 0.01f64..10.0, ns in prop::collection::btree_set(1usize..100_000, 3..12)) {
        let rows: Vec<RateRow> = ns.iter().map(|&n| RateRow { n, value: c * (n as f64).powf(slope), seed: 0 }).collect();
        let fit = fit_rate(&rows).unwrap();
        prop_assert!((fit.fitted_slope - slope).abs() < 1e-12);
        prop_assert!((fit.fitted_log_constant - c.ln()).abs() < 1e-10);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
