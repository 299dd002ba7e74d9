//! Per-cell average point energies of a large quantizer are nearly constant
//! across the domain, even for a nonuniform density.

use wq::analysis::equidist_report;
use wq::measures::GriddedDensity;
use wq::quantizer::{quantize, InitLaw, QuantizeOptions};

fn main() -> wq::Result<()> {
    let opts = QuantizeOptions { restarts: 1, init: InitLaw::PredictedDensity, ..Default::default() };
    let densities = [
        ("square", GriddedDensity::unit_cube(2)?),
        ("ramp", GriddedDensity::affine(vec![[0.0, 1.0]; 2], vec![256, 256], 0.4, &[1.2, 0.0])?),
    ];
    for (name, density) in densities {
        let r = quantize(&density.clone().into(), 1024, 2.0, &opts)?;
        let rep = equidist_report(&r, &density, 2.0, 4)?;
        println!(
            "{name}: CV={:.4} max/min={:.4} limit={:.5}",
            rep.coefficient_of_variation,
            rep.spread,
            rep.predicted_limit.unwrap_or(f64::NAN)
        );
        for row in rep.cells.chunks(4) {
            let line: Vec<String> = row.iter().map(|c| format!("{:.4}({:>3})", c.scaled_avg_energy, c.points)).collect();
            println!("  {}", line.join("  "));
        }
    }
    Ok(())
}
