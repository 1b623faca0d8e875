//! Orbital window: an odd pair of free solitons plus a small odd perturbation
//! stays close to the modulated family.
//!
//! `cargo run --release --example orbital -- 0.2`

use nlscollide::config::RunConfig;
use nlscollide::experiments::orbital_window;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.2);
    let run = orbital_window(&RunConfig { v: Some(v), ..RunConfig::default() })?;
    println!("{:#?}", run.report);
    Ok(())
}
