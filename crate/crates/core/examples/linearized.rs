//! Kernel identities and coercivity floors of the linearized operator.
//!
//! `cargo run --release --example linearized`

use std::sync::Arc;

use nlscollide::linop::{Constraints, LinearizedOperator};
use nlscollide::profile::{default_grid, solve_profile};
use nlscollide::PolynomialNonlinearity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = default_grid(1.0)?;
    let profile = Arc::new(solve_profile(&PolynomialNonlinearity::cubic(), 1.0, &grid)?);
    let op = LinearizedOperator::new(profile);
    println!("{:#?}", op.identity_residuals()?);
    for c in [Constraints::Standard, Constraints::Alternative, Constraints::Mass] {
        println!("coercivity floor {c:?}: {:+.5}", op.coercivity_floor(c)?);
    }
    Ok(())
}
