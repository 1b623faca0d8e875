//! Head-on collision of two opposite-phase solitons.
//!
//! `cargo run --release --example collision -- 0.2 cubic-quintic`

use nlscollide::config::RunConfig;
use nlscollide::experiments::run_collision;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let v: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.2);
    let mut cfg = RunConfig::default();
    if args.next().as_deref() == Some("cubic-quintic") {
        cfg.nonlinearity = vec![(2, 1.0), (3, 0.1 / 3.0)];
    }
    let t = std::time::Instant::now();
    let run = run_collision(&cfg, v)?;
    let r = &run.report;
    println!("grid n={} L={:.1}, t in [{:.1}, {:.1}]", r.grid_n, r.grid_length, r.t_start, r.t_end);
    println!("v_in  = {:.10} +- {:.1e} ({} fits)", r.v_in.v, r.v_in.stderr, r.v_in.samples);
    println!("v_out = {:.10} +- {:.1e} ({} fits)", r.v_out.v, r.v_out.stderr, r.v_out.samples);
    println!("inelasticity {:.3e}, final remainder H1 {:.3e}", r.inelasticity, r.remainder_h1_final);
    println!("closest approach {:.3} at t = {:.2}", r.min_separation, r.t_min_separation);
    println!("drift: H {:.1e}, Q {:.1e}; M+ monotone: {}", r.energy_drift, r.mass_drift, r.m_plus_monotone);
    if let Some(f) = &r.flux {
        println!("dM+/dt vs |u_x(0)|^2: rel err {:.1e} (vs half: {:.1e})", f.max_rel_err_full, f.max_rel_err_half);
    }
    println!("elapsed {:.1?}", t.elapsed());
    Ok(())
}
