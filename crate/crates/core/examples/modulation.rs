//! Modulation fit of a perturbed odd two-soliton state.
//!
//! `cargo run --release --example modulation`

use std::sync::Arc;

use nlscollide::experiments::{fit_field, odd_perturbation};
use nlscollide::field::place_real;
use nlscollide::profile::{default_grid, solve_profile};
use nlscollide::{PolynomialNonlinearity, SolitonParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = default_grid(1.0)?;
    let profile = Arc::new(solve_profile(&PolynomialNonlinearity::cubic(), 1.0, &grid)?);
    let truth = SolitonParams::new(12.0, 0.15, 0.4, 1.0);
    let u = place_real(&profile.phi, &truth, &grid)?.sym();
    for eps in [0.0, 1e-6, 1e-3] {
        let w = u.add(&odd_perturbation(&grid, truth.zeta, eps, 7))?;
        let fit = fit_field(profile.clone(), &w)?;
        let p = fit.params;
        println!(
            "eps {eps:.0e}: zeta {:+.2e} v {:+.2e} gamma {:+.2e} (errors), {} Newton steps, remainder {:.2e}",
            p.zeta - truth.zeta,
            p.v - truth.v,
            p.gamma - truth.gamma,
            fit.iterations,
            fit.diagnostics.r_h1
        );
    }
    Ok(())
}
