//! Inelasticity against the speed for a cubic-quintic nonlinearity, with the
//! cubic runs at the same resolution as the noise floor.
//!
//! `cargo run --release --example sweep -- 0.2 0.3`

use nlscollide::config::RunConfig;
use nlscollide::experiments::sweep;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut v_list: Vec<f64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    if v_list.is_empty() {
        v_list = vec![0.2, 0.3];
    }
    let cfg = RunConfig { nonlinearity: vec![(2, 1.0), (3, 0.1 / 3.0)], v_list: Some(v_list), ..RunConfig::default() };
    let s = sweep(&cfg, None)?;
    for e in &s.entries {
        println!("{e:?}");
    }
    match s.fitted_slope {
        Some(fit) => println!("slope {:.3} +- {:.3}", fit.slope, fit.stderr),
        None => println!("no slope (noise limited: {})", s.noise_limited),
    }
    Ok(())
}
