//! Estimates of the uniform-cube constants θ(d, p) against the closed forms.

use wq::analysis::{estimate_theta, known_theta};
use wq::quantizer::QuantizeOptions;

fn main() -> wq::Result<()> {
    let base = QuantizeOptions { tol: 1e-6, ..Default::default() };
    for p in [1.0, 2.0, 3.0] {
        let est = estimate_theta(1, p, &[64, 256], &[0], &base)?;
        println!("d=1 p={p}: θ̂={:.6} known={:.6}", est.theta_hat, est.known.unwrap().value);
    }
    let est = estimate_theta(2, 2.0, &[128], &[0, 1, 2, 3], &base)?;
    let known = known_theta(2, 2.0).unwrap();
    println!("d=2 p=2: θ̂={:.6} known={:.6} ({})", est.theta_hat, known.value, known.formula);
    if let (Some(printed), Some(note)) = (known.printed, known.note) {
        println!("  printed value {printed:.6}: {note}");
    }
    let t21 = known_theta(2, 1.0).unwrap();
    println!("d=2 p=1: known={:.7} ({}), printed {:.7}", t21.value, t21.formula, t21.printed.unwrap());
    Ok(())
}
