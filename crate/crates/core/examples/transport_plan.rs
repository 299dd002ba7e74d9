//! Exact optimal transport between two small discrete measures, with the
//! dual certificate and the plan algebra used by the property checks.

use wq::measures::DiscreteMeasure;
use wq::transport::{restrict_rows, solve_with_certificate, sum_plans, wasserstein};

fn main() -> wq::Result<()> {
    let mu = DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.25, 0.25])?;
    let nu = DiscreteMeasure::new(vec![vec![0.5, 0.5], vec![1.0, 1.0]], vec![0.75, 0.25])?;

    for p in [1.0, 2.0, 3.0] {
        let cert = solve_with_certificate(&mu, &nu, p)?;
        println!("p={p}: W_p={:.6} pivots={} min reduced cost={:.2e}", cert.cost.powf(1.0 / p), cert.pivots, cert.min_reduced_cost);
    }

    let cert = solve_with_certificate(&mu, &nu, 2.0)?;
    println!("\noptimal plan for p=2:\n{}", cert.plan.to_csv());
    println!("largest displacement: {:.4}", cert.plan.linf_length());

    // half of the first source atom and all of the second
    let sub = DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.25, 0.25])?;
    let (restricted, image) = restrict_rows(&cert.plan, &sub)?;
    println!("restricted cost {:.6} ≤ full cost {:.6}", restricted.cost(2.0), cert.plan.cost(2.0));
    println!("restricted image has {} atoms, mass {:.3}", image.len(), image.total_mass());

    let doubled = sum_plans(&cert.plan, &cert.plan)?;
    println!("summed plan moves mass {:.3} at cost {:.6}", doubled.total_mass(), doubled.cost(2.0));
    println!("W_2(mu, nu) = {:.6}", wasserstein(&mu, &nu, 2.0)?);
    Ok(())
}
