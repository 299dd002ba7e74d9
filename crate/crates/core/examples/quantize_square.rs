//! Lloyd quantization of the unit square, compared with the covering baseline.

use wq::measures::{GriddedDensity, Measure};
use wq::quantizer::{cover_baseline, quantize, QuadratureSpec, QuantizeOptions};

fn main() -> wq::Result<()> {
    let square: Measure = GriddedDensity::unit_cube(2)?.into();
    let opts = QuantizeOptions { restarts: 2, tol: 1e-7, quad: Some(QuadratureSpec::grid(256)), ..Default::default() };
    println!("{:>5} {:>12} {:>12} {:>10}", "N", "lloyd W2", "cover W2", "√N·W2");
    for n in [4, 16, 64, 256] {
        let r = quantize(&square, n, 2.0, &opts)?;
        let c = cover_baseline(&square, n, 2.0, 0)?;
        println!("{n:>5} {:>12.6} {:>12.6} {:>10.5}", r.wasserstein(), c.result.wasserstein(), (n as f64).sqrt() * r.wasserstein());
    }
    let r = quantize(&square, 7, 2.0, &opts)?;
    println!("\nN=7 support (mass):");
    for (x, m) in r.points.iter().zip(&r.masses) {
        println!("  ({:.4}, {:.4})  {m:.4}", x[0], x[1]);
    }
    Ok(())
}
