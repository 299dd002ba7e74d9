//! Closed-form quantization errors of the dyadic Cantor measure and the
//! oscillation of the scaled sequence.

use wq::cantor;
use wq::measures::CantorMeasure;

fn main() -> wq::Result<()> {
    let s = CantorMeasure::dimension();
    println!("dimension s = {s:.6}");
    for p in [1.0, 2.0] {
        let table = cantor::scan(48, p)?;
        println!("\np={p}: c1 = {:.9}, ratio at 3·2^k = {:.6}", cantor::c1(p, 1e-12)?, cantor::oscillation_ratio(p));
        println!("{:>4} {:>12} {:>10}", "N", "W_p", "N^(1/s)W_p");
        for row in table.rows.iter().filter(|r| r.n.is_power_of_two() || (r.n % 3 == 0 && (r.n / 3).is_power_of_two())) {
            println!("{:>4} {:>12.8} {:>10.6}", row.n, row.wp, row.scaled);
        }
    }
    println!("\noptimal support for N=6: {:?}", cantor::canonical_support(6)?);
    for b in cantor::c1_brackets(1.5, 1e-6)?.iter().take(5) {
        println!("c1(p=1.5) in [{:.8}, {:.8}]", b.lower, b.upper);
    }
    Ok(())
}
