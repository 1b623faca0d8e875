//! End-to-end experiments: ansatz residual scaling, collisions through
//! closest approach, speed sweeps with a cubic noise floor, and the
//! receding-soliton orbital window.

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{
    Ansatz, ApproximateSolution, CorrectionSource, InteractionDynamics, RefinedAnsatz, interaction_constant, residual,
};
use crate::config::{Observer, RunConfig};
use crate::error::{Error, Result};
use crate::evolve::{
    ConservedQuantities, EvolutionConfig, conserved, half_quantities, half_quantities_unchecked, run_with,
};
use crate::field::{C64, ComplexField, SolitonParams, SpectralGrid};
use crate::linop::LinearizedOperator;
use crate::modulation::{ModulationState, RateReport, RateSample, SolitonFamily, rate_check};
use crate::nonlinearity::PolynomialNonlinearity;
use crate::profile::{SolitonProfile, default_grid, solve_profile};
use crate::stats::log_log_slope;

/// Slope of a log-log regression with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
}

impl SlopeFit {
    fn of(x: &[f64], y: &[f64]) -> Self {
        let (slope, stderr) = log_log_slope(x, y);
        Self { slope, stderr }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualRow {
    pub v: f64,
    /// `"0"`, `"1"` or `"refined"`.
    pub order: String,
    pub t: f64,
    #[serde(rename = "L2_residual")]
    pub l2: f64,
    #[serde(rename = "H1_residual")]
    pub h1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualScaling {
    pub source: CorrectionSource,
    /// Time at which the slopes are fitted.
    pub t: f64,
    pub speeds: Vec<f64>,
    pub order0: SlopeFit,
    pub order1: SlopeFit,
    pub refined: Option<SlopeFit>,
    #[serde(skip)]
    pub rows: Vec<ResidualRow>,
}

/// `||Lambda||` of the order-0, order-1 and (optionally) numerically refined
/// order-0 ansatz over `speeds x times`; slopes in `v` are fitted at `times[0]`.
pub fn residual_scaling(
    f: &PolynomialNonlinearity,
    omega: f64,
    speeds: &[f64],
    times: &[f64],
    source: CorrectionSource,
    refine: bool,
    grid: Option<Arc<SpectralGrid>>,
) -> Result<ResidualScaling> {
    if speeds.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: speeds.len() });
    }
    if times.is_empty() {
        return Err(Error::Config("no evaluation times".into()));
    }
    let grid = match grid {
        Some(g) => g,
        None => default_grid(omega)?,
    };
    let profile = Arc::new(solve_profile(f, omega, &grid)?);
    let op = Arc::new(LinearizedOperator::new(profile.clone()));
    let c = interaction_constant(&profile)?;
    let corr = crate::ansatz::corrections(&op, c, source)?;

    let per_v: Vec<Result<Vec<ResidualRow>>> = speeds
        .par_iter()
        .map(|&v| {
            let dynamics = InteractionDynamics::new(c, omega, v)?;
            let a0 = Ansatz::order0(profile.clone(), dynamics);
            let a1 = Ansatz::order1(profile.clone(), dynamics, corr.clone());
            let refined = RefinedAnsatz::new(&a0, op.clone());
            let mut rows = Vec::new();
            for &t in times {
                let mut push = |order: &str, r: ComplexField| {
                    rows.push(ResidualRow { v, order: order.into(), t, l2: r.norm_l2(), h1: r.norm_h1() })
                };
                push("0", residual(&a0, t)?);
                push("1", residual(&a1, t)?);
                if refine {
                    push("refined", residual(&refined, t)?);
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_v {
        rows.extend(r?);
    }

    let t0 = times[0];
    let slope = |order: &str| {
        let (x, y): (Vec<f64>, Vec<f64>) =
            rows.iter().filter(|r| r.order == order && r.t == t0).map(|r| (r.v, r.h1)).unzip();
        SlopeFit::of(&x, &y)
    };
    let refined = if refine {
        let vmin = speeds.iter().cloned().fold(f64::INFINITY, f64::min);
        let at = |order: &str| rows.iter().find(|r| r.order == order && r.t == t0 && r.v == vmin).map(|r| r.h1);
        if let (Some(before), Some(after)) = (at("0"), at("refined")) {
            if after > 0.5 * before {
                return Err(Error::NoImprovement { before, after });
            }
        }
        Some(slope("refined"))
    } else {
        None
    };
    Ok(ResidualScaling { source, t: t0, speeds: speeds.to_vec(), order0: slope("0"), order1: slope("1"), refined, rows })
}

/// Smallest power of two `n >= 1024` with `L / n <= 0.06 / sqrt(omega)`.
pub fn auto_grid(length: f64, omega: f64) -> Result<Arc<SpectralGrid>> {
    let need = (length * omega.sqrt() / 0.06).ceil() as usize;
    SpectralGrid::new(need.next_power_of_two().max(1024), length)
}

/// Prepared two-soliton data for a collision at incoming half-speed `v`.
pub struct CollisionSetup {
    pub v: f64,
    pub profile: Arc<SolitonProfile>,
    pub ansatz: Ansatz,
    /// Separation above which speeds are measured (`e^{-2 sqrt(omega) d} <= 1e-3 v^2` plus margin).
    pub d_sep: f64,
    /// Separation at `t_start`.
    pub d_start: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub u0: ComplexField,
    pub initial_residual_h1: f64,
}

pub fn prepare(cfg: &RunConfig, v: f64) -> Result<CollisionSetup> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Config(format!("speed must lie in (0, 1), got {v}")));
    }
    let f = cfg.f()?;
    let omega = cfg.omega;
    let sw = omega.sqrt();
    let d_sep = (1e3 / (v * v)).ln() / (2.0 * sw) + cfg.tolerances.separation_margin / sw;
    let d_start = d_sep + 10.0 / sw;
    let grid = match &cfg.grid {
        Some(g) => {
            let g = g.build()?;
            if g.length() < 2.0 * d_start + 40.0 / sw {
                return Err(Error::Config(format!(
                    "domain length {} is below 2 d_start + 40/sqrt(omega) = {}",
                    g.length(),
                    2.0 * d_start + 40.0 / sw
                )));
            }
            g
        }
        None => auto_grid(2.0 * d_start + 60.0 / sw, omega)?,
    };
    let profile = Arc::new(solve_profile(&f, omega, &grid)?);
    let ansatz = if cfg.order == 1 {
        Ansatz::order1_from(profile.clone(), v, cfg.correction_source)?
    } else {
        Ansatz::order0(profile.clone(), InteractionDynamics::from_profile(&profile, v)?)
    };
    let t_start = cfg.time.t_start.unwrap_or(-ansatz.dynamics.time_at_separation(d_start));
    let t_end = cfg.time.t_end.unwrap_or(-t_start);
    let d0 = ansatz.dynamics.separation(t_start).0;
    if d0 < d_sep - 1e-9 {
        return Err(Error::Config(format!("separation {d0} at t_start is below the interaction threshold {d_sep}")));
    }
    let u0 = ansatz.field(t_start)?;
    let initial_residual_h1 = residual(&ansatz, t_start)?.norm_h1();
    Ok(CollisionSetup { v, profile, ansatz, d_sep, d_start: d0, t_start, t_end, u0, initial_residual_h1 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleRow {
    pub t: f64,
    pub energy: f64,
    pub mass: f64,
    pub momentum: f64,
    pub mass_plus: f64,
    pub energy_plus: f64,
    pub momentum_plus: f64,
    pub boundary_flux: f64,
    pub oddness: f64,
    /// `int_{x>0} x |u|^2 / int_{x>0} |u|^2`.
    pub centroid: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackPhase {
    Incoming,
    Collision,
    Outgoing,
}

/// One modulation fit with its remainder diagnostics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FitRow {
    pub t: f64,
    pub phase: TrackPhase,
    pub zeta: f64,
    pub v: f64,
    pub gamma: f64,
    pub f_omega: f64,
    pub p_zeta: f64,
    pub p_v: f64,
    pub p_gamma: f64,
    pub p_omega: f64,
    pub r_l2: f64,
    pub r_h1: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    #[serde(rename = "P2")]
    pub p2: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub fit_residual: f64,
}

fn fit_row(family: &SolitonFamily, u: &ComplexField, state: &ModulationState, t: f64, phase: TrackPhase) -> Result<FitRow> {
    let p = state.params();
    let r = family.remainder(u, state)?;
    let d = family.lyapunov(&r, state, p.v)?;
    Ok(FitRow {
        t,
        phase,
        zeta: p.zeta,
        v: p.v,
        gamma: p.gamma,
        f_omega: p.f_omega,
        p_zeta: state.shifts[0],
        p_v: state.shifts[1],
        p_gamma: state.shifts[2],
        p_omega: state.shifts[3],
        r_l2: d.r_l2,
        r_h1: d.r_h1,
        l: d.l,
        p1: d.p1,
        p2: d.p2,
        e: d.e,
        fit_residual: state.residual_norm,
    })
}

/// Half-line mass centroid.
pub fn centroid(u: &ComplexField) -> f64 {
    let g = u.grid();
    let (mut m, mut xm) = (0.0, 0.0);
    for j in g.center() + 1..g.n() {
        let s = u.values()[j].norm_sqr();
        m += s;
        xm += g.x()[j] * s;
    }
    if m > 0.0 { xm / m } else { 0.0 }
}

/// Initial guess for the right soliton of an odd field: the peak of `|u|`
/// on `x > 0` refined by maximizing the overlap with a placed profile, the
/// speed from the half-line momentum-to-mass ratio, and the phase from the
/// overlap.
pub fn locate(profile: &SolitonProfile, u: &ComplexField, f: &PolynomialNonlinearity) -> SolitonParams {
    let g = u.grid();
    let c = g.center();
    let peak = (c + 1..g.n()).max_by(|&a, &b| u.values()[a].norm().total_cmp(&u.values()[b].norm())).unwrap_or(c);
    let h = half_quantities_unchecked(u, f);
    let v = if h.mass_plus > 0.0 { 2.0 * h.momentum_plus / h.mass_plus } else { 0.0 };
    let phi: Vec<C64> = profile.phi_complex();
    let overlap = |zeta: f64| -> C64 {
        let s = g.shift(&phi, zeta);
        let p = SolitonParams::new(zeta, v, 0.0, profile.omega);
        (c..g.n()).map(|j| u.values()[j] * (s[j] * C64::from_polar(1.0, p.phase(g.x()[j]))).conj()).sum()
    };
    // golden section on |overlap| around the peak
    let (mut a, mut b) = (g.x()[peak] - 1.0, g.x()[peak] + 1.0);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - r * (b - a), a + r * (b - a));
    let (mut f1, mut f2) = (overlap(x1).norm(), overlap(x2).norm());
    for _ in 0..40 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = overlap(x1).norm();
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = overlap(x2).norm();
        }
    }
    let zeta = 0.5 * (a + b);
    SolitonParams::new(zeta, v, overlap(zeta).arg(), profile.omega)
}

fn advance(p: &SolitonParams, dt: f64, omega: f64) -> SolitonParams {
    let mut q = *p;
    q.zeta += q.v * dt;
    q.gamma += omega * dt;
    q
}

/// Speed from a Gauss-Newton fit of `zeta(t)` to the separation family
/// `(1/sqrt(omega)) ln(sqrt(C) cosh(sqrt(omega) V (t - t0)) / (omega^{1/4} V))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpeedFit {
    pub v: f64,
    pub t0: f64,
    pub stderr: f64,
    pub samples: usize,
    pub window: (f64, f64),
    /// Largest absolute misfit of `zeta`.
    pub max_misfit: f64,
}

pub fn fit_speed(t: &[f64], zeta: &[f64], c: f64, omega: f64) -> Result<SpeedFit> {
    let n = t.len();
    if n < 10 {
        return Err(Error::InsufficientSamples { needed: 10, got: n });
    }
    let sw = omega.sqrt();
    let (slope, _, _) = crate::stats::linear_fit(t, zeta);
    let mut vv = slope.abs();
    if !(vv > 0.0) {
        return Err(Error::SingularJacobian);
    }
    let model = |vv: f64, t0: f64, ti: f64| {
        let s = sw * vv * (ti - t0);
        (ln_cosh(s) + c.sqrt().ln() - 0.25 * omega.ln() - vv.ln()) / sw
    };
    let k = (c.sqrt().ln() - 0.25 * omega.ln() - vv.ln() - std::f64::consts::LN_2) / sw;
    let sign = slope.signum();
    let mut t0 = t.iter().zip(zeta).map(|(&ti, &z)| ti - sign * (z - k) / vv).sum::<f64>() / n as f64;
    let mut jtj = Matrix2::zeros();
    let mut sse = 0.0;
    for _ in 0..100 {
        jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        sse = 0.0;
        for (&ti, &z) in t.iter().zip(zeta) {
            let s = sw * vv * (ti - t0);
            let r = z - model(vv, t0, ti);
            let jv = (-1.0 / vv + s.tanh() * sw * (ti - t0)) / sw;
            let jt = -vv * s.tanh();
            let j = Vector2::new(jv, jt);
            jtj += j * j.transpose();
            jtr += j * r;
            sse += r * r;
        }
        let step = jtj.lu().solve(&jtr).ok_or(Error::SingularJacobian)?;
        vv += step[0];
        t0 += step[1];
        if !(vv > 0.0) || !vv.is_finite() {
            return Err(Error::SingularJacobian);
        }
        if step[0].abs() < 1e-15 * vv && step[1].abs() < 1e-12 * t0.abs().max(1.0) {
            break;
        }
    }
    let cov = jtj.try_inverse().ok_or(Error::SingularJacobian)?;
    let sigma2 = if n > 2 { sse / (n - 2) as f64 } else { 0.0 };
    let max_misfit = t.iter().zip(zeta).map(|(&ti, &z)| (z - model(vv, t0, ti)).abs()).fold(0.0, f64::max);
    Ok(SpeedFit {
        v: vv,
        t0,
        stderr: (sigma2 * cov[(0, 0)]).sqrt(),
        samples: n,
        window: (t[0], t[n - 1]),
        max_misfit,
    })
}

fn ln_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Five-point derivative of `M+` against the boundary flux at sample times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluxCheck {
    pub samples: usize,
    /// Largest `|dM+/dt - |u_x(0)|^2/2| / (|u_x(0)|^2/2)`.
    pub max_rel_err_half: f64,
    /// Largest `|dM+/dt - |u_x(0)|^2| / |u_x(0)|^2`.
    pub max_rel_err_full: f64,
}

pub fn flux_check(rows: &[SampleRow], count: usize) -> Option<FluxCheck> {
    let n = rows.len();
    if n < 5 {
        return None;
    }
    let fmax = rows.iter().map(|r| r.boundary_flux).fold(0.0, f64::max);
    let uniform = |i: usize| {
        let h = rows[i + 1].t - rows[i].t;
        (i - 2..i + 2).all(|j| ((rows[j + 1].t - rows[j].t) - h).abs() < 1e-9 * h.abs().max(1.0))
    };
    let cand: Vec<usize> = (2..n - 2).filter(|&i| rows[i].boundary_flux >= 1e-3 * fmax && uniform(i)).collect();
    if cand.is_empty() {
        return None;
    }
    let picks: Vec<usize> = if cand.len() <= count {
        cand
    } else {
        (0..count).map(|k| cand[k * (cand.len() - 1) / (count - 1).max(1)]).collect()
    };
    let (mut half, mut full) = (0.0f64, 0.0f64);
    for &i in &picks {
        let h = rows[i + 1].t - rows[i].t;
        let m = |j: usize| rows[j].momentum_plus;
        let d = (-m(i + 2) + 8.0 * m(i + 1) - 8.0 * m(i - 1) + m(i - 2)) / (12.0 * h);
        let q = rows[i].boundary_flux;
        half = half.max((d - q).abs() / q);
        full = full.max((d - 2.0 * q).abs() / (2.0 * q));
    }
    Some(FluxCheck { samples: picks.len(), max_rel_err_half: half, max_rel_err_full: full })
}

#[derive(Clone, Debug, Serialize)]
pub struct CollisionReport {
    pub v: f64,
    pub grid_n: usize,
    pub grid_length: f64,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub d_start: f64,
    pub d_sep: f64,
    pub initial_residual_h1: f64,
    pub interaction_constant: f64,
    pub v_in: SpeedFit,
    pub v_out: SpeedFit,
    pub inelasticity: f64,
    pub remainder_h1_final: f64,
    pub remainder_l2_final: f64,
    /// Frequency of the re-solved outgoing profile.
    pub omega_final: f64,
    pub energy_drift: f64,
    pub mass_drift: f64,
    pub momentum_drift: f64,
    pub min_separation: f64,
    pub t_min_separation: f64,
    /// Largest decrease of `M+` between consecutive samples (0 when monotone).
    pub m_plus_max_decrease: f64,
    pub m_plus_monotone: bool,
    pub flux: Option<FluxCheck>,
    pub max_oddness: f64,
    pub rate: Option<RateReport>,
}

pub struct CollisionRun {
    pub report: CollisionReport,
    pub samples: Vec<SampleRow>,
    pub fits: Vec<FitRow>,
    pub final_field: ComplexField,
}

fn strides(cfg: &RunConfig) -> (usize, usize) {
    let tc = &cfg.time;
    let sample = ((tc.sample_every / tc.dt).round() as usize).max(1);
    let fit = ((tc.fit_every / tc.sample_every).round() as usize).max(1);
    (sample, fit)
}

fn sample_row(t: f64, u: &ComplexField, f: &PolynomialNonlinearity) -> Result<(SampleRow, ConservedQuantities)> {
    let h = half_quantities(u, f)?;
    let c = conserved(u, f);
    let row = SampleRow {
        t,
        energy: c.energy,
        mass: c.mass,
        momentum: c.momentum,
        mass_plus: h.mass_plus,
        energy_plus: h.energy_plus,
        momentum_plus: h.momentum_plus,
        boundary_flux: h.boundary_flux,
        oddness: u.oddness_residual(),
        centroid: centroid(u),
    };
    Ok((row, c))
}

/// Evolves prepared data through the collision. Modulation fits run while
/// the fitted half separation is at least `fit_separation / sqrt(omega)`;
/// in between, the half-line centroid tracks the soliton.
pub fn run_collision(cfg: &RunConfig, v: f64) -> Result<CollisionRun> {
    let setup = prepare(cfg, v)?;
    let f = cfg.f()?;
    let omega = cfg.omega;
    let sw = omega.sqrt();
    let (sample_stride, fit_ratio) = strides(cfg);
    let evo = EvolutionConfig::new(cfg.time.dt, setup.t_start, setup.t_end, sample_stride, cfg.time.scheme);
    let family = SolitonFamily::new(setup.profile.clone(), setup.ansatz.corrections.clone());
    let fit_min = cfg.tolerances.fit_separation / sw;

    let mut u = setup.u0.clone();
    let mut samples = Vec::new();
    let mut fits: Vec<FitRow> = Vec::new();
    let mut states: Vec<ModulationState> = Vec::new();
    let mut phase = TrackPhase::Incoming;
    let mut reference: Option<ConservedQuantities> = None;
    let mut drift = (0.0f64, 0.0f64, 0.0f64);
    let mut last: Option<(f64, SolitonParams)> = None;
    let mut k = 0usize;
    run_with(&mut u, &evo, &f, |t, u| {
        let (row, cq) = sample_row(t, u, &f)?;
        // the flow preserves oddness; remove the round-off that does not
        *u = u.odd_part();
        let r0 = *reference.get_or_insert(cq);
        let d = cq.drift(&r0);
        drift = (drift.0.max(d.0), drift.1.max(d.1), drift.2.max(d.2));
        samples.push(row);
        let due = k % fit_ratio == 0;
        k += 1;
        if !due {
            return Ok(());
        }
        let base = setup.ansatz.params(t);
        match phase {
            TrackPhase::Incoming => {
                let guess = last.map(|(tl, p)| advance(&p, t - tl, omega)).unwrap_or(base);
                match family.fit(u, &guess) {
                    Ok(s) if s.params().zeta >= fit_min => {
                        let s = s.rebased(base);
                        fits.push(fit_row(&family, u, &s, t, phase)?);
                        states.push(s);
                        last = Some((t, s.params()));
                    }
                    _ => phase = TrackPhase::Collision,
                }
            }
            TrackPhase::Collision => {
                if t > 0.0 && row.centroid >= fit_min {
                    phase = TrackPhase::Outgoing;
                    let mut guess = locate(&setup.profile, u, &f);
                    guess.f_omega = base.f_omega;
                    let s = family.fit(u, &guess).map_err(|e| Error::FitLost { t, reason: e.to_string() })?;
                    let s = s.rebased(base);
                    fits.push(fit_row(&family, u, &s, t, phase)?);
                    last = Some((t, s.params()));
                }
            }
            TrackPhase::Outgoing => {
                let (tl, p) = last.expect("outgoing phase starts with a fit");
                let s = family
                    .fit(u, &advance(&p, t - tl, omega))
                    .map_err(|e| Error::FitLost { t, reason: e.to_string() })?;
                let s = s.rebased(base);
                fits.push(fit_row(&family, u, &s, t, phase)?);
                last = Some((t, s.params()));
            }
        }
        Ok(())
    })?;

    let c = setup.ansatz.dynamics.c;
    let window = |ph: TrackPhase| -> (Vec<f64>, Vec<f64>) {
        fits.iter().filter(|r| r.phase == ph && r.zeta >= setup.d_sep).map(|r| (r.t, r.zeta)).unzip()
    };
    let (ti, zi) = window(TrackPhase::Incoming);
    let (to, zo) = window(TrackPhase::Outgoing);
    let v_in = fit_speed(&ti, &zi, c, omega)?;
    let v_out = fit_speed(&to, &zo, c, omega)?;

    // Final remainder against a family re-solved at the fitted outgoing frequency.
    let (_, p_last) = last.ok_or(Error::FitLost { t: setup.t_end, reason: "no outgoing fit".into() })?;
    let (remainder_h1_final, remainder_l2_final, omega_final) = {
        let omega_f = omega + p_last.f_omega;
        let refit = solve_profile(&f, omega_f, &setup.profile.grid).ok().and_then(|prof| {
            let fam = SolitonFamily::new(Arc::new(prof), None);
            let mut guess = p_last;
            guess.f_omega = 0.0;
            guess.omega = omega_f;
            let s = fam.fit(&u, &guess).ok()?;
            let r = fam.remainder(&u, &s).ok()?;
            Some((r.norm_h1(), r.norm_l2(), omega_f))
        });
        match refit {
            Some(r) => r,
            None => {
                let last_fit = fits.last().expect("outgoing fit exists");
                (last_fit.r_h1, last_fit.r_l2, omega)
            }
        }
    };

    let (t_min, min_sep) =
        samples.iter().map(|r| (r.t, r.centroid)).fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let m_plus_max_decrease =
        samples.windows(2).map(|w| w[0].momentum_plus - w[1].momentum_plus).fold(0.0f64, f64::max);
    let rate_samples: Vec<RateSample> = states
        .iter()
        .zip(fits.iter().filter(|r| r.phase == TrackPhase::Incoming))
        .map(|(s, r)| RateSample { t: r.t, d: s.base.zeta, shifts: s.shifts, r_h1: r.r_h1 })
        .collect();
    let rate = rate_check(&rate_samples, omega, v, cfg.tolerances.rate_tolerance).ok();
    let g = &setup.profile.grid;
    let report = CollisionReport {
        v,
        grid_n: g.n(),
        grid_length: g.length(),
        dt: cfg.time.dt,
        t_start: setup.t_start,
        t_end: setup.t_end,
        d_start: setup.d_start,
        d_sep: setup.d_sep,
        initial_residual_h1: setup.initial_residual_h1,
        interaction_constant: c,
        inelasticity: (v_out.v - v_in.v).abs(),
        v_in,
        v_out,
        remainder_h1_final,
        remainder_l2_final,
        omega_final,
        energy_drift: drift.0,
        mass_drift: drift.1,
        momentum_drift: drift.2,
        min_separation: min_sep,
        t_min_separation: t_min,
        m_plus_max_decrease,
        m_plus_monotone: m_plus_max_decrease <= cfg.tolerances.m_plus_slack,
        flux: flux_check(&samples, 100),
        max_oddness: samples.iter().map(|r| r.oddness).fold(0.0, f64::max),
        rate,
    };
    Ok(CollisionRun { report, samples, fits, final_field: u })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub v: f64,
    pub inelasticity: Option<f64>,
    pub remainder_h1: Option<f64>,
    /// Inelasticity of the cubic run at the same speed and resolution.
    pub noise_floor: Option<f64>,
    /// `sqrt(max(I^2 - floor^2, 0))`.
    pub corrected: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub v_list: Vec<f64>,
    pub entries: Vec<SweepEntry>,
    /// `d log(corrected inelasticity) / d log v`; absent when a run failed or
    /// a corrected value is at the noise floor.
    pub fitted_slope: Option<SlopeFit>,
    pub remainder_slope: Option<SlopeFit>,
    pub noise_limited: bool,
    pub failures: usize,
    #[serde(skip)]
    pub reports: Vec<Option<CollisionReport>>,
}

fn is_cubic(f: &PolynomialNonlinearity) -> bool {
    f.terms().iter().all(|&(p, c)| p == 2 || c == 0.0)
}

/// Parallel collisions over `v_list`; for a non-cubic `F` each speed is
/// also run with the cubic leading term alone to estimate the noise floor.
pub fn sweep(cfg: &RunConfig, threads: Option<usize>) -> Result<SweepResult> {
    let speeds = cfg.speeds()?;
    let f = cfg.f()?;
    let cubic = is_cubic(&f);
    let mut floor_cfg = cfg.clone();
    floor_cfg.nonlinearity = f.terms().iter().filter(|t| t.0 == 2).cloned().collect();
    let mut jobs: Vec<(f64, bool)> = speeds.iter().map(|&v| (v, false)).collect();
    if !cubic {
        jobs.extend(speeds.iter().map(|&v| (v, true)));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<Result<CollisionReport>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(v, floor)| run_collision(if floor { &floor_cfg } else { cfg }, v).map(|r| r.report))
            .collect()
    });
    let ns = speeds.len();
    let mut entries = Vec::with_capacity(ns);
    let mut reports = Vec::with_capacity(ns);
    for (i, &v) in speeds.iter().enumerate() {
        let main = &results[i];
        let floor = if cubic { main.as_ref().ok().map(|r| r.inelasticity) } else { results[ns + i].as_ref().ok().map(|r| r.inelasticity) };
        let inel = main.as_ref().ok().map(|r| r.inelasticity);
        let corrected = match (inel, floor) {
            (Some(a), Some(b)) if !cubic => Some((a * a - b * b).max(0.0).sqrt()),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        let mut error = main.as_ref().err().map(|e| e.to_string());
        if !cubic {
            if let Err(e) = &results[ns + i] {
                error = Some(format!("noise-floor run: {e}"));
            }
        }
        entries.push(SweepEntry {
            v,
            inelasticity: inel,
            remainder_h1: main.as_ref().ok().map(|r| r.remainder_h1_final),
            noise_floor: floor,
            corrected,
            error,
        });
        reports.push(main.as_ref().ok().cloned());
    }
    let failures = entries.iter().filter(|e| e.error.is_some()).count();
    let all_positive = entries.iter().all(|e| e.corrected.is_some_and(|c| c > 0.0));
    let fitted_slope = if failures == 0 && all_positive {
        let y: Vec<f64> = entries.iter().map(|e| e.corrected.unwrap()).collect();
        Some(SlopeFit::of(&speeds, &y))
    } else {
        None
    };
    let remainder_slope = if failures == 0 {
        let y: Vec<f64> = entries.iter().map(|e| e.remainder_h1.unwrap()).collect();
        Some(SlopeFit::of(&speeds, &y))
    } else {
        None
    };
    Ok(SweepResult {
        v_list: speeds,
        noise_limited: failures == 0 && !all_positive,
        entries,
        fitted_slope,
        remainder_slope,
        failures,
        reports,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitalReport {
    pub v: f64,
    pub zeta0: f64,
    pub window: f64,
    pub grid_n: usize,
    pub grid_length: f64,
    pub perturbation_h1: f64,
    pub r0_h1: f64,
    pub max_r_h1: f64,
    /// `1e-5 + 10 e^{-sqrt(omega) zeta0 / 2}`.
    pub remainder_bound: f64,
    pub min_zeta_dot: f64,
    pub max_speed_error: f64,
    /// `max(||r||, |zeta' - v|) / (||r0|| + e^{-sqrt(omega) zeta0 / 2})`.
    pub fitted_constant: f64,
    pub remainder_ok: bool,
    pub separation_ok: bool,
    pub rate: Option<RateReport>,
}

pub struct OrbitalRun {
    pub report: OrbitalReport,
    pub fits: Vec<FitRow>,
}

/// Odd random perturbation of `H^1` size `eps`: Gaussian bumps with complex
/// amplitudes near the right soliton, antisymmetrized.
pub fn odd_perturbation(grid: &Arc<SpectralGrid>, center: f64, eps: f64, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(C64, f64, f64)> = (0..8)
        .map(|_| {
            let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (a, center + rng.random_range(-8.0..8.0), rng.random_range(1.0..3.0))
        })
        .collect();
    let p = ComplexField::from_fn(grid, |x| {
        bumps.iter().map(|&(a, b, s)| a * (-(x - b) * (x - b) / (2.0 * s * s)).exp()).sum()
    })
    .sym();
    let n = p.norm_h1();
    if n > 0.0 { p.scale_re(eps / n) } else { p }
}

/// Receding solitons `P(zeta0 + v t, v, omega t)` plus an odd perturbation,
/// tracked by modulation fits over `[0, window]`.
pub fn orbital_window(cfg: &RunConfig) -> Result<OrbitalRun> {
    let v = cfg.speed()?;
    let f = cfg.f()?;
    let omega = cfg.omega;
    let sw = omega.sqrt();
    let zeta0 = cfg.zeta0.unwrap_or(16.0 * (1.0 / v).ln() / sw);
    let window = cfg.window.unwrap_or(20.0 / v);
    let grid = match &cfg.grid {
        Some(g) => g.build()?,
        None => auto_grid(2.0 * (zeta0 + v * window) + 60.0 / sw, omega)?,
    };
    let profile = Arc::new(solve_profile(&f, omega, &grid)?);
    let family = SolitonFamily::new(profile.clone(), None);
    let free = |t: f64| SolitonParams::new(zeta0 + v * t, v, omega * t, omega);
    let pert = odd_perturbation(&grid, zeta0, cfg.perturbation, cfg.seed);
    let mut u = family.evaluate(&free(0.0)).add(&pert)?;
    let (sample_stride, fit_ratio) = strides(cfg);
    let evo = EvolutionConfig::new(cfg.time.dt, 0.0, window, sample_stride * fit_ratio, cfg.time.scheme);
    let mut fits = Vec::new();
    let mut states = Vec::new();
    let mut last: Option<(f64, SolitonParams)> = None;
    run_with(&mut u, &evo, &f, |t, u| {
        *u = u.odd_part();
        let guess = last.map(|(tl, p)| advance(&p, t - tl, omega)).unwrap_or(free(t));
        let s = family.fit(u, &guess).map_err(|e| Error::FitLost { t, reason: e.to_string() })?.rebased(free(t));
        fits.push(fit_row(&family, u, &s, t, TrackPhase::Outgoing)?);
        states.push(s);
        last = Some((t, s.params()));
        Ok(())
    })?;

    let tail = (-0.5 * sw * zeta0).exp();
    let r0 = fits.first().map(|r| r.r_h1).unwrap_or(0.0);
    let max_r = fits.iter().map(|r| r.r_h1).fold(0.0, f64::max);
    let zdot: Vec<f64> = fits.windows(3).map(|w| (w[2].zeta - w[0].zeta) / (w[2].t - w[0].t)).collect();
    let min_zeta_dot = zdot.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_speed_error = zdot.iter().map(|z| (z - v).abs()).fold(0.0, f64::max);
    let remainder_bound = 1e-5 + 10.0 * tail;
    // uniform spacing except possibly the last fit
    let uniform = if fits.len() > 2 { fits.len() - 1 } else { fits.len() };
    let rate_samples: Vec<RateSample> = states[..uniform]
        .iter()
        .zip(&fits)
        .map(|(s, r)| RateSample { t: r.t, d: s.base.zeta, shifts: s.shifts, r_h1: r.r_h1 })
        .collect();
    let report = OrbitalReport {
        v,
        zeta0,
        window,
        grid_n: grid.n(),
        grid_length: grid.length(),
        perturbation_h1: pert.norm_h1(),
        r0_h1: r0,
        max_r_h1: max_r,
        remainder_bound,
        min_zeta_dot,
        max_speed_error,
        fitted_constant: max_r.max(max_speed_error) / (r0 + tail),
        remainder_ok: max_r <= remainder_bound,
        separation_ok: min_zeta_dot >= 0.75 * v,
        rate: rate_check(&rate_samples, omega, v, cfg.tolerances.rate_tolerance).ok(),
    };
    Ok(OrbitalRun { report, fits })
}

/// Samples and snapshots of a plain evolution (`evolve` subcommand).
pub struct EvolveTrace {
    pub samples: Vec<SampleRow>,
    pub conserved: Vec<(f64, ConservedQuantities)>,
    pub snapshots: Vec<(f64, ComplexField)>,
    pub fits: Vec<FitRow>,
    pub final_field: ComplexField,
    pub final_time: f64,
}

/// Builds the initial data of `cfg.initial` and evolves it over
/// `[t_start, t_end]` (defaults `0` and `10`).
pub fn evolve_trace(cfg: &RunConfig) -> Result<EvolveTrace> {
    let f = cfg.f()?;
    let omega = cfg.omega;
    let grid = match &cfg.grid {
        Some(g) => g.build()?,
        None => default_grid(omega)?,
    };
    let profile = Arc::new(solve_profile(&f, omega, &grid)?);
    let initial = cfg.initial.clone().ok_or_else(|| Error::Config("missing `initial`".into()))?;
    let t_start = cfg.time.t_start.unwrap_or(0.0);
    let (u0, odd, family, base): (ComplexField, bool, Option<SolitonFamily>, Box<dyn Fn(f64) -> SolitonParams>) =
        match initial {
            crate::config::InitialData::Boosted { zeta0, v, gamma0 } => {
                let p = SolitonParams::new(zeta0, v, gamma0, omega);
                let u = crate::field::place_real(&profile.phi, &p, &grid)?;
                (u, false, None, Box::new(move |t| SolitonParams::new(zeta0 + v * t, v, gamma0 + omega * t, omega)))
            }
            crate::config::InitialData::TwoSoliton { t } => {
                let v = cfg.speed()?;
                let a = Ansatz::order0(profile.clone(), InteractionDynamics::from_profile(&profile, v)?);
                let u = a.field(t)?;
                let fam = SolitonFamily::new(profile.clone(), None);
                let dynamics = a.dynamics;
                // the data sit at ansatz time `t` while the clock starts at `t_start`
                let shift = t - t_start;
                (
                    u,
                    true,
                    Some(fam),
                    Box::new(move |s| {
                        let s = s + shift;
                        let (d, dd, _) = dynamics.separation(s);
                        SolitonParams::new(d, dd, omega * s, omega)
                    }),
                )
            }
        };
    let t_end = cfg.time.t_end.unwrap_or(10.0);
    let (sample_stride, fit_ratio) = strides(cfg);
    let evo = EvolutionConfig::new(cfg.time.dt, t_start, t_end, sample_stride, cfg.time.scheme);
    let mut u = u0;
    let (mut samples, mut cons, mut snaps, mut fits) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut last: Option<(f64, SolitonParams)> = None;
    let mut k = 0usize;
    let final_time = run_with(&mut u, &evo, &f, |t, u| {
        if odd {
            *u = u.odd_part();
        }
        let due = k % fit_ratio == 0;
        k += 1;
        if cfg.has(Observer::Conserved) {
            cons.push((t, conserved(u, &f)));
        }
        if odd && cfg.has(Observer::HalfLine) {
            samples.push(sample_row(t, u, &f)?.0);
        }
        if due && cfg.has(Observer::Snapshots) {
            snaps.push((t, u.clone()));
        }
        if due && cfg.has(Observer::Modulation) {
            if let Some(fam) = &family {
                let b = base(t);
                let guess = last.map(|(tl, p)| advance(&p, t - tl, omega)).unwrap_or(b);
                if let Ok(s) = fam.fit(u, &guess) {
                    let s = s.rebased(b);
                    fits.push(fit_row(fam, u, &s, t, TrackPhase::Incoming)?);
                    last = Some((t, s.params()));
                }
            }
        }
        Ok(())
    })?;
    Ok(EvolveTrace { samples, conserved: cons, snapshots: snaps, fits, final_field: u, final_time })
}

/// Fit of a single odd field against the order-0 family.
#[derive(Clone, Debug, Serialize)]
pub struct FieldFit {
    pub params: SolitonParams,
    pub residual_norm: f64,
    pub iterations: usize,
    pub diagnostics: crate::modulation::RemainderDiagnostics,
}

pub fn fit_field(profile: Arc<SolitonProfile>, u: &ComplexField) -> Result<FieldFit> {
    let family = SolitonFamily::new(profile.clone(), None);
    let guess = locate(&profile, u, &profile.nonlinearity);
    let s = family.fit(u, &guess)?;
    let r = family.remainder(u, &s)?;
    let diagnostics = family.lyapunov(&r, &s, s.params().v)?;
    Ok(FieldFit { params: s.params(), residual_norm: s.residual_norm, iterations: s.iterations, diagnostics })
}
