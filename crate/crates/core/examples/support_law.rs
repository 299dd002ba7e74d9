//! Support points of optimal quantizers of the density 2x follow the law
//! with density proportional to (2x)^{1/3}.

use wq::analysis::{support_density_report, DP_RESOLUTION_PER_POINT};
use wq::measures::{GriddedDensity, Measure};
use wq::quantizer::quantize_1d_dp;

fn main() -> wq::Result<()> {
    let ramp = GriddedDensity::affine(vec![[0.0, 1.0]], vec![4096], 0.0, &[2.0])?;
    let m: Measure = ramp.clone().into();
    for n in [32, 128, 256] {
        let r = quantize_1d_dp(&m, n, 2.0, DP_RESOLUTION_PER_POINT * n)?;
        let rep = support_density_report(&r, &ramp, 2.0, 8)?;
        println!("N={n:>4}: N·W2={:.6} KS={:.5} chi²={:.3}", n as f64 * r.wasserstein(), rep.ks.unwrap(), rep.chi_square);
        if n == 256 {
            for b in &rep.histogram {
                println!("  [{:.3}, ..): observed {:.4}  predicted {:.4}", b.lower[0], b.observed, b.predicted);
            }
        }
    }
    Ok(())
}
