//! Log-log rate fits: the square, exact Cantor rows, and a mixture whose
//! rate is set by its highest-dimensional part.

use wq::analysis::{cantor_exact_scan, mixture_rate_check, rate_scan};
use wq::measures::{CantorMeasure, GriddedDensity, Measure, Mixture};
use wq::quantizer::{QuadratureSpec, QuantizeOptions};

fn main() -> wq::Result<()> {
    let square: Measure = GriddedDensity::unit_cube(2)?.into();
    let opts = QuantizeOptions { restarts: 1, tol: 1e-6, quad: Some(QuadratureSpec::grid(256)), ..Default::default() };
    let scan = rate_scan(&square, 2.0, &[8, 16, 32, 64, 128], &opts)?;
    print!("{}", scan.to_csv());

    let cantor = cantor_exact_scan(2.0, &[1, 2, 4, 8, 16, 32, 64, 128, 256])?;
    println!("\nexact Cantor slope {:.5}", cantor.fitted_slope);

    let mix: Measure = Mixture::new(vec![
        (0.5, CantorMeasure.into()),
        (0.5, GriddedDensity::uniform(vec![[2.0, 3.0]])?.into()),
    ])?
    .into();
    let rep = mixture_rate_check(&mix, 1.0, &[16, 32, 64, 128], &QuantizeOptions { restarts: 2, ..Default::default() })?;
    println!("mixture slope {:.4}, asymptotic {:.1}", rep.scan.fitted_slope, rep.expected_slope);
    Ok(())
}
