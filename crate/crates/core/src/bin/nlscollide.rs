//! Command-line frontend. Every subcommand writes its outputs and a
//! `manifest.json` into `--out`. Exit codes: 0 success, 2 numerical failure
//! (diagnostic JSON in `error.json`), 3 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nlscollide::ansatz::CorrectionSource;
use nlscollide::config::{GridConfig, RunConfig};
use nlscollide::error::{Error, Result};
use nlscollide::evolve::Scheme;
use nlscollide::experiments;
use nlscollide::linop::{Constraints, LinearizedOperator};
use nlscollide::output::{self, RunManifest};
use nlscollide::profile::{default_grid, solve_profile};

#[derive(Parser)]
#[command(name = "nlscollide", version, about = "Odd two-soliton collisions for polynomial NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Ground state profile and its metadata.
    Profile,
    /// Kernel and identity residuals of the linearized operator, coercivity floors.
    LinopCheck,
    /// Plain evolution of `initial` with the configured observers.
    Evolve,
    /// Residual of the order-0, order-1 and refined ansatz over `v_list`.
    AnsatzResidual,
    /// One collision at speed `v`.
    Collide,
    /// Parallel collisions over `v_list` with a cubic noise floor.
    Sweep,
    /// Receding solitons with an odd perturbation.
    Orbital,
    /// Modulation fit of the snapshot at `input`.
    Fit,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `cubic`, `cubic-quintic[:a,b]` (F = a s^2/2 + b s^3/3) or `p:c,p:c,...`.
    #[arg(long, global = true)]
    nonlinearity: Option<String>,
    #[arg(long, global = true)]
    omega: Option<f64>,
    #[arg(long, global = true)]
    v: Option<f64>,
    /// Comma-separated speeds.
    #[arg(long, global = true, value_delimiter = ',')]
    v_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    order: Option<u8>,
    #[arg(long, global = true, value_parser = parse_source)]
    correction_source: Option<CorrectionSource>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long = "length", global = true)]
    length: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    t_start: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    t_end: Option<f64>,
    #[arg(long, global = true, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    separation_margin: Option<f64>,
    #[arg(long, global = true)]
    fit_separation: Option<f64>,
    #[arg(long, global = true)]
    m_plus_slack: Option<f64>,
    #[arg(long, global = true)]
    rate_tolerance: Option<f64>,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::LinopCheck => "linop-check",
            Command::Evolve => "evolve",
            Command::AnsatzResidual => "ansatz-residual",
            Command::Collide => "collide",
            Command::Sweep => "sweep",
            Command::Orbital => "orbital",
            Command::Fit => "fit",
        }
    }
}

fn parse_source(s: &str) -> std::result::Result<CorrectionSource, String> {
    serde_json::from_value(json!(s)).map_err(|e| e.to_string())
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    serde_json::from_value(json!(s)).map_err(|e| e.to_string())
}

fn parse_nonlinearity(s: &str) -> Result<Vec<(u32, f64)>> {
    let bad = || Error::Config(format!("cannot parse nonlinearity {s:?}"));
    if s == "cubic" {
        return Ok(vec![(2, 1.0)]);
    }
    if let Some(rest) = s.strip_prefix("cubic-quintic") {
        let (a, b) = match rest.strip_prefix(':') {
            None if rest.is_empty() => (2.0, 0.1),
            Some(ab) => {
                let (a, b) = ab.split_once(',').ok_or_else(bad)?;
                (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)
            }
            None => return Err(bad()),
        };
        return Ok(vec![(2, a / 2.0), (3, b / 3.0)]);
    }
    s.split(',')
        .map(|t| {
            let (p, c) = t.split_once(':').ok_or_else(bad)?;
            Ok((p.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

fn resolve(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &c.nonlinearity {
        cfg.nonlinearity = parse_nonlinearity(s)?;
    }
    macro_rules! set {
        ($($src:ident => $dst:expr),* $(,)?) => { $(if let Some(v) = c.$src.clone() { $dst = v.into(); })* };
    }
    set!(omega => cfg.omega, order => cfg.order, dt => cfg.time.dt, seed => cfg.seed,
         separation_margin => cfg.tolerances.separation_margin, fit_separation => cfg.tolerances.fit_separation,
         m_plus_slack => cfg.tolerances.m_plus_slack, rate_tolerance => cfg.tolerances.rate_tolerance,
         correction_source => cfg.correction_source, scheme => cfg.time.scheme);
    set!(v => cfg.v, v_list => cfg.v_list, t_start => cfg.time.t_start, t_end => cfg.time.t_end, input => cfg.input);
    match (c.n, c.length, &mut cfg.grid) {
        (None, None, _) => {}
        (n, l, Some(g)) => {
            g.n = n.unwrap_or(g.n);
            g.length = l.unwrap_or(g.length);
        }
        (Some(n), Some(length), None) => cfg.grid = Some(GridConfig { n, length }),
        _ => return Err(Error::Config("--n and --length must be given together".into())),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn grid_or_default(cfg: &RunConfig) -> Result<Arc<nlscollide::SpectralGrid>> {
    match &cfg.grid {
        Some(g) => g.build(),
        None => default_grid(cfg.omega),
    }
}

fn execute(cmd: Command, cfg: &RunConfig, out: &Path, threads: Option<usize>) -> Result<(Vec<PathBuf>, bool)> {
    let f = cfg.f()?;
    let mut files = Vec::new();
    let mut ok = true;
    match cmd {
        Command::Profile => {
            let prof = solve_profile(&f, cfg.omega, &grid_or_default(cfg)?)?;
            files.extend(output::write_profile(out, &prof)?);
            println!("{}", serde_json::to_string(&prof.meta())?);
        }
        Command::LinopCheck => {
            let prof = Arc::new(solve_profile(&f, cfg.omega, &grid_or_default(cfg)?)?);
            let op = LinearizedOperator::new(prof.clone());
            let id = op.identity_residuals()?;
            let floors = json!({
                "standard": op.coercivity_floor(Constraints::Standard)?,
                "alternative": op.coercivity_floor(Constraints::Alternative)?,
                "mass": op.coercivity_floor(Constraints::Mass)?,
            });
            let report = json!({
                "kernel_residuals": [id.s_dphi, id.s_iphi],
                "identity_residuals": id,
                "coercivity_floor": floors,
                "grid": {"n": prof.grid.n(), "L": prof.grid.length()},
            });
            let p = out.join("linop.json");
            output::write_json(&p, &report)?;
            files.push(p);
            println!("{report}");
        }
        Command::Evolve => {
            let tr = experiments::evolve_trace(cfg)?;
            if !tr.conserved.is_empty() {
                let p = out.join("conserved.csv");
                output::write_conserved(&p, &tr.conserved)?;
                files.push(p);
            }
            if !tr.samples.is_empty() {
                let p = out.join("halfline.csv");
                output::write_samples(&p, &tr.samples)?;
                files.push(p);
            }
            if !tr.fits.is_empty() {
                let p = out.join("fits.csv");
                output::write_fits(&p, &tr.fits)?;
                files.push(p);
            }
            if !tr.snapshots.is_empty() {
                std::fs::create_dir_all(out.join("snapshots"))?;
                for (k, (t, u)) in tr.snapshots.iter().enumerate() {
                    let p = out.join("snapshots").join(format!("u_{k:05}.csv"));
                    output::write_snapshot(&p, u, *t)?;
                    files.push(p);
                }
            }
            let p = out.join("final.csv");
            output::write_snapshot(&p, &tr.final_field, tr.final_time)?;
            files.push(p);
            let drift = match (tr.conserved.first(), tr.conserved.last()) {
                (Some(a), Some(b)) => Some(b.1.drift(&a.1)),
                _ => None,
            };
            let report = json!({"final_time": tr.final_time, "drift_energy_mass_momentum": drift});
            let p = out.join("report.json");
            output::write_json(&p, &report)?;
            files.push(p);
            println!("{report}");
        }
        Command::AnsatzResidual => {
            let mut times = vec![cfg.time.t_start.unwrap_or(0.0)];
            times.extend(cfg.time.t_end);
            let grid = cfg.grid.as_ref().map(|g| g.build()).transpose()?;
            let rs =
                experiments::residual_scaling(&f, cfg.omega, &cfg.speeds()?, &times, cfg.correction_source, cfg.refine, grid)?;
            let p = out.join("residuals.csv");
            output::write_residual_rows(&p, &rs.rows)?;
            files.push(p);
            let p = out.join("slopes.json");
            output::write_json(&p, &rs)?;
            files.push(p);
            println!("{}", serde_json::to_string(&rs)?);
        }
        Command::Collide => {
            let run = experiments::run_collision(cfg, cfg.speed()?)?;
            for (name, res) in [
                ("samples.csv", output::write_samples(&out.join("samples.csv"), &run.samples)),
                ("fits.csv", output::write_fits(&out.join("fits.csv"), &run.fits)),
                ("report.json", output::write_json(&out.join("report.json"), &run.report)),
                ("final.csv", output::write_snapshot(&out.join("final.csv"), &run.final_field, run.report.t_end)),
            ] {
                res?;
                files.push(out.join(name));
            }
            println!("{}", serde_json::to_string(&run.report)?);
        }
        Command::Sweep => {
            let s = experiments::sweep(cfg, threads)?;
            let p = out.join("sweep.csv");
            let mut w = csv::Writer::from_path(&p)?;
            for e in &s.entries {
                w.serialize(e)?;
            }
            w.flush()?;
            files.push(p);
            let p = out.join("sweep.json");
            output::write_json(&p, &json!({"result": &s, "reports": &s.reports}))?;
            files.push(p);
            println!("{}", serde_json::to_string(&s)?);
            ok = s.failures == 0;
        }
        Command::Orbital => {
            let run = experiments::orbital_window(cfg)?;
            let p = out.join("fits.csv");
            output::write_fits(&p, &run.fits)?;
            files.push(p);
            let p = out.join("orbital.json");
            output::write_json(&p, &run.report)?;
            files.push(p);
            println!("{}", serde_json::to_string(&run.report)?);
        }
        Command::Fit => {
            let input = cfg.input.as_ref().ok_or_else(|| Error::Config("fit needs `input`".into()))?;
            let (u, t) = output::read_snapshot(input)?;
            let prof = Arc::new(solve_profile(&f, cfg.omega, u.grid())?);
            let fit = experiments::fit_field(prof, &u)?;
            let report = json!({"t": t, "fit": fit});
            let p = out.join("fit.json");
            output::write_json(&p, &report)?;
            files.push(p);
            println!("{report}");
        }
    }
    Ok((files, ok))
}

fn fail(out: &Path, e: &Error) -> ExitCode {
    let diag = json!({"error": e.to_string(), "detail": format!("{e:?}")});
    let _ = output::write_json(&out.join("error.json"), &diag);
    eprintln!("{diag}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match resolve(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(3);
        }
    };
    if let Some(n) = cli.common.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = &cli.common.out;
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("cannot create {}: {e}", out.display());
        return ExitCode::from(2);
    }
    let started = output::unix_now();
    let result = execute(cli.command, &cfg, out, cli.common.threads);
    let manifest = RunManifest::new(cli.command.name(), &cfg, cli.common.threads, started);
    match result {
        Ok((files, ok)) => {
            if let Err(e) = manifest.and_then(|m| m.finish(out, &files)) {
                return fail(out, &e);
            }
            if ok { ExitCode::SUCCESS } else { ExitCode::from(2) }
        }
        Err(e) if e.is_config() => {
            eprintln!("configuration error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            if let Ok(m) = manifest {
                let _ = m.finish(out, &[out.join("error.json")]);
            }
            fail(out, &e)
        }
    }
}
