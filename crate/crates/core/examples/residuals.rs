//! Residual of the approximate two-soliton solutions against the speed.
//!
//! `cargo run --release --example residuals`

use nlscollide::ansatz::CorrectionSource;
use nlscollide::experiments::residual_scaling;
use nlscollide::PolynomialNonlinearity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let speeds = [0.05, 0.1, 0.2, 0.3];
    let f = PolynomialNonlinearity::cubic();
    let rs = residual_scaling(&f, 1.0, &speeds, &[0.0], CorrectionSource::Balanced, true, None)?;
    println!("{:>6} {:>6} {:>12} {:>12}", "v", "order", "L2", "H1");
    for r in &rs.rows {
        println!("{:>6} {:>6} {:>12.3e} {:>12.3e}", r.v, r.order, r.l2, r.h1);
    }
    println!("slopes: order 0 {:.3}, order 1 {:.3}", rs.order0.slope, rs.order1.slope);
    if let Some(s) = rs.refined {
        println!("        refined order 0 {:.3}", s.slope);
    }
    Ok(())
}
