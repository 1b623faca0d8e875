//! A single moving soliton under the split-step flow, compared with the exact
//! solution at the final time.
//!
//! `cargo run --release --example boosted -- 0.2`

use std::sync::Arc;

use nlscollide::ansatz::{ApproximateSolution, BoostedSoliton};
use nlscollide::evolve::{EvolutionConfig, Scheme, conserved, run};
use nlscollide::profile::solve_profile;
use nlscollide::{PolynomialNonlinearity, SpectralGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.2);
    let grid = SpectralGrid::new(2048, 80.0)?;
    let f = PolynomialNonlinearity::cubic_quintic(2.0, 0.1)?;
    let profile = Arc::new(solve_profile(&f, 1.0, &grid)?);
    let exact = BoostedSoliton { profile, zeta0: -5.0, v, gamma0: 0.0 };
    let t_end = 50.0;
    for scheme in [Scheme::Strang, Scheme::Yoshida4] {
        let mut u = exact.field(0.0)?;
        let q0 = conserved(&u, &f);
        run(&mut u, &EvolutionConfig::new(1e-3, 0.0, t_end, 1000, scheme), &f, |_, _| Ok(()))?;
        let (dh, dq, _) = conserved(&u, &f).drift(&q0);
        let err = u.sub(&exact.field(t_end)?)?.norm_h1();
        println!("{scheme:?}: H1 error {err:.2e}, energy drift {dh:.1e}, mass drift {dq:.1e}");
    }
    Ok(())
}
