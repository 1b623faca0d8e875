//! Ground states of the cubic and a cubic-quintic nonlinearity.
//!
//! `cargo run --release --example profile -- 1.5`

use nlscollide::ansatz::interaction_constant;
use nlscollide::profile::{default_grid, solve_profile, stability_margin};
use nlscollide::PolynomialNonlinearity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let omega: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let grid = default_grid(omega)?;
    for (name, f) in [
        ("cubic", PolynomialNonlinearity::cubic()),
        ("cubic-quintic", PolynomialNonlinearity::cubic_quintic(2.0, 0.1)?),
    ] {
        let p = solve_profile(&f, omega, &grid)?;
        let m = p.meta();
        println!("{name}: y0 {:.10} mass {:.10} tail amplitude {:.6} decay {:.6}", m.y0, m.mass, m.a_inf, m.decay_rate);
        println!("  ODE residual {:.1e}, interaction constant {:.8}", p.ode_residual(), interaction_constant(&p)?);
        println!("  d mass / d omega sign check: {:.6}", stability_margin(&f, omega, 1e-4 * omega)?);
    }
    Ok(())
}
