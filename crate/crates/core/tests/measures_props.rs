use proptest::prelude::*;
use wq::measures::{CantorMeasure, GriddedDensity, Measure};

fn density_strategy() -> impl Strategy<Value = GriddedDensity> {
    (1usize..=3)
        .prop_flat_map(|d| (prop::collection::vec(1usize..=4, d), prop::collection::vec((-2.0f64..2.0, 0.1f64..3.0), d)))
        .prop_flat_map(|(res, boxes)| {
            let cells: usize = res.iter().product();
            (Just(res), Just(boxes), prop::collection::vec(0.0f64..5.0, cells))
        })
        .prop_filter_map("needs positive mass", |(res, boxes, values)| {
            let bounds = boxes.iter().map(|&(a, w)| [a, a + w]).collect();
            GriddedDensity::new(bounds, res, values).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn beta_one_norm_is_total_mass(g in density_strategy()) {
        let n = g.beta_norm(1.0).unwrap();
        prop_assert!((n - g.total_mass()).abs() <= 1e-12 * g.total_mass());
    }

    #[test]
    fn cantor_is_ahlfors_regular(seed in any::<u64>(), u in 0.0f64..=1.0) {
        let k = Measure::Cantor(CantorMeasure);
        let x = k.sample(1, seed).unwrap()[0][0];
        let r = 3f64.powf(-8.0 * u);
        let s = CantorMeasure::dimension();
        let m = k.box_mass(&[[x - r, x + r]]).unwrap();
        prop_assert!(m >= r.powf(s) / 3.0, "x={x} r={r} m={m}");
        prop_assert!(m <= 3.0 * r.powf(s), "x={x} r={r} m={m}");
    }

    #[test]
    fn box_mass_additive_and_monotone(g in density_strategy(), t in 0.0f64..=1.0, lo in 0.0f64..0.5, hi in 0.5f64..=1.0) {
        let m: Measure = g.clone().into();
        let bounds = g.bounds().to_vec();
        let mut left = bounds.clone();
        let mut right = bounds.clone();
        let [a, b] = bounds[0];
        let cut = a + t * (b - a);
        left[0] = [a, cut];
        right[0] = [cut, b];
        let whole = m.box_mass(&bounds).unwrap();
        let sum = m.box_mass(&left).unwrap() + m.box_mass(&right).unwrap();
        prop_assert!((whole - sum).abs() <= 1e-12 * whole.max(1.0));

        let inner: Vec<[f64; 2]> = bounds.iter().map(|[a, b]| [a + lo * (b - a), a + hi * (b - a)]).collect();
        prop_assert!(m.box_mass(&inner).unwrap() <= whole * (1.0 + 1e-12));
    }

    #[test]
    fn cantor_interval_mass_is_additive(a in 0.0f64..1.0, t in 0.0f64..=1.0, w in 0.0f64..1.0) {
        let k = CantorMeasure;
        let b = (a + w).min(1.0);
        let c = a + t * (b - a);
        // the shared endpoint carries no mass
        let sum = k.interval_mass(a, c) + k.interval_mass(c, b);
        prop_assert!((k.interval_mass(a, b) - sum).abs() <= 1e-12);
        prop_assert!(k.interval_mass(a, b) <= k.interval_mass(a.min(0.0), 1.0) + 1e-15);
    }
}
