//! Ground state `phi_omega`: the even positive solution of
//! `-phi'' + omega phi - F'(phi^2) phi = 0`, sampled on a spectral grid, with
//! its `omega`-derivative, tail amplitude and mass.

use std::sync::Arc;

use ode_solvers::{Dop853, System, Vector1, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{C64, ComplexField, SpectralGrid};
use crate::nonlinearity::PolynomialNonlinearity;

const RTOL: f64 = 1e-13;
const ATOL: f64 = 1e-16;

/// Sampled ground state on a symmetric periodic grid.
#[derive(Clone, Debug)]
pub struct SolitonProfile {
    pub omega: f64,
    pub grid: Arc<SpectralGrid>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub dphi_domega: Vec<f64>,
    pub y0: f64,
    pub a_inf: f64,
    /// Fitted exponential decay rate of the tail (close to `sqrt(omega)`).
    pub decay_rate: f64,
    pub mass: f64,
    pub nonlinearity: PolynomialNonlinearity,
}

/// Metadata exported next to profile samples.
#[derive(Clone, Debug, Serialize)]
pub struct ProfileMeta {
    pub omega: f64,
    pub y0: f64,
    pub a_inf: f64,
    pub mass: f64,
    pub decay_rate: f64,
    pub n: usize,
    pub length: f64,
}

impl SolitonProfile {
    pub fn meta(&self) -> ProfileMeta {
        ProfileMeta {
            omega: self.omega,
            y0: self.y0,
            a_inf: self.a_inf,
            mass: self.mass,
            decay_rate: self.decay_rate,
            n: self.grid.n(),
            length: self.grid.length(),
        }
    }

    pub fn phi_field(&self) -> ComplexField {
        ComplexField::from_real(&self.grid, &self.phi)
    }

    pub fn dphi_field(&self) -> ComplexField {
        ComplexField::from_real(&self.grid, &self.dphi)
    }

    pub fn domega_field(&self) -> ComplexField {
        ComplexField::from_real(&self.grid, &self.dphi_domega)
    }

    pub fn phi_complex(&self) -> Vec<C64> {
        self.phi.iter().map(|&r| C64::new(r, 0.0)).collect()
    }

    /// `H(phi) = int phi'^2/2 - F(phi^2)/2`.
    pub fn energy(&self) -> f64 {
        let f = &self.nonlinearity;
        self.phi
            .iter()
            .zip(&self.dphi)
            .map(|(&p, &d)| 0.5 * d * d - 0.5 * f.f(p * p))
            .sum::<f64>()
            * self.grid.dx()
    }

    /// Max over the grid of `|-phi'' + omega phi - F'(phi^2) phi|`.
    pub fn ode_residual(&self) -> f64 {
        let d2 = self.grid.derivative_real(&self.phi, 2);
        self.phi
            .iter()
            .zip(&d2)
            .map(|(&p, &q)| (-q + self.omega * p - self.nonlinearity.fp(p * p) * p).abs())
            .fold(0.0, f64::max)
    }
}

/// Grid used when a routine needs a profile but no grid is given.
pub fn default_grid(omega: f64) -> Result<Arc<SpectralGrid>> {
    SpectralGrid::new(2048, 80.0 / omega.sqrt())
}

struct SecondOrder<'a> {
    f: &'a PolynomialNonlinearity,
    omega: f64,
    stop_below: f64,
}

impl System<f64, Vector2<f64>> for SecondOrder<'_> {
    fn system(&self, _x: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        dy[0] = y[1];
        dy[1] = self.omega * y[0] - self.f.fp(y[0] * y[0]) * y[0];
    }
    fn solout(&mut self, _x: f64, y: &Vector2<f64>, _dy: &Vector2<f64>) -> bool {
        y[0] <= self.stop_below
    }
}

struct LogFirstOrder<'a> {
    f: &'a PolynomialNonlinearity,
    omega: f64,
}

impl System<f64, Vector1<f64>> for LogFirstOrder<'_> {
    fn system(&self, _x: f64, y: &Vector1<f64>, dy: &mut Vector1<f64>) {
        // psi = ln phi:  psi' = -sqrt(omega - F(phi^2)/phi^2)
        let s = (2.0 * y[0]).exp();
        let rad = self.omega - self.f.f_over_s(s);
        dy[0] = -rad.max(0.0).sqrt();
    }
}

/// Samples of `phi_omega` at `x = m dx`, `m = 0..=n/2`.
fn half_line_samples(f: &PolynomialNonlinearity, omega: f64, y0: f64, dx: f64, count: usize) -> Result<Vec<f64>> {
    let x_end = dx * (count as f64 - 0.5);
    // Second-order IVP from the maximum: regular at x = 0 but unstable in the
    // tail, so it only runs until phi has halved.
    let sys = SecondOrder { f, omega, stop_below: 0.5 * y0 };
    let mut s1 = Dop853::new(sys, 0.0, x_end, dx, Vector2::new(y0, 0.0), RTOL, ATOL);
    s1.integrate().map_err(|e| Error::ProfileBlowup(format!("{e:?}")))?;
    let mut out: Vec<f64> = s1.y_out().iter().map(|y| y[0]).collect();
    if out.len() >= count {
        return Err(Error::ProfileBlowup("profile does not decay below y0/2 on the grid".into()));
    }
    if out.iter().any(|&p| !(p.is_finite() && p > 0.0 && p <= y0 * (1.0 + 1e-12))) {
        return Err(Error::ProfileBlowup("second-order phase left (0, y0]".into()));
    }
    let m1 = out.len() - 1;
    let x1 = m1 as f64 * dx;
    let rad = omega - f.f_over_s(out[m1] * out[m1]);
    if rad < 1e-24 * omega {
        return Err(Error::ProfileBlowup(format!("radicand {rad:e} at x={x1}")));
    }
    let sys = LogFirstOrder { f, omega };
    let mut s2 = Dop853::new(sys, x1, x_end, dx, Vector1::new(out[m1].ln()), RTOL, ATOL);
    s2.integrate().map_err(|e| Error::ProfileBlowup(format!("{e:?}")))?;
    out.truncate(m1);
    out.extend(s2.y_out().iter().map(|y| y[0].exp()));
    out.truncate(count);
    if out.len() < count {
        return Err(Error::ProfileBlowup(format!("tail integration produced {} of {count} samples", out.len())));
    }
    Ok(out)
}

/// Samples of `phi_omega` on the grid (no derivative data).
pub fn profile_samples(f: &PolynomialNonlinearity, omega: f64, grid: &SpectralGrid) -> Result<(f64, Vec<f64>)> {
    let check = f.check_existence(omega, None)?;
    if !check.satisfied {
        return Err(Error::ProfileBlowup(check.reason));
    }
    let n = grid.n();
    let c = grid.center();
    let half = half_line_samples(f, omega, check.y0, grid.dx(), n / 2 + 1)?;
    let phi: Vec<f64> = (0..n).map(|j| half[(j as isize - c as isize).unsigned_abs()]).collect();
    let phi = polish(f, omega, grid, phi);
    Ok((phi[c], phi))
}

/// `-phi'' + omega phi - F'(phi^2) phi` on the grid.
fn profile_residual(f: &PolynomialNonlinearity, omega: f64, grid: &SpectralGrid, phi: &[f64]) -> Vec<f64> {
    let d2 = grid.derivative_real(phi, 2);
    phi.iter().zip(&d2).map(|(&p, &q)| -q + omega * p - f.fp(p * p) * p).collect()
}

/// Newton steps on the spectral discretization. The ODE samples carry
/// grid-scale noise near round-off that the second derivative amplifies;
/// the discrete ground state removes it. Steps stop once they stop helping.
fn polish(f: &PolynomialNonlinearity, omega: f64, grid: &SpectralGrid, mut phi: Vec<f64>) -> Vec<f64> {
    let l2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut g = profile_residual(f, omega, grid, &phi);
    for _ in 0..4 {
        let pot: Vec<f64> = phi.iter().map(|&p| f.fp(p * p) + 2.0 * p * p * f.fpp(p * p)).collect();
        // even functions only: the odd kernel phi' would swallow round-off
        let even = |u: Vec<f64>| {
            let m = grid.reflect(&u);
            u.iter().zip(&m).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<f64>>()
        };
        let apply = |u: &[f64]| {
            let d2 = grid.derivative_real(u, 2);
            even(u.iter().zip(&d2).zip(&pot).map(|((&a, &b), &w)| -b + (omega - w) * a).collect())
        };
        let precond = |u: &[f64]| {
            let c: Vec<C64> = u.iter().map(|&r| C64::new(r, 0.0)).collect();
            grid.multiplier(&c, |k| C64::new(1.0 / (k * k + omega), 0.0)).into_iter().map(|z| z.re).collect()
        };
        let (delta, _, _) = crate::linop::minres(apply, precond, &even(g.clone()), 1e-14, 500);
        let delta = even(delta);
        let next: Vec<f64> = phi.iter().zip(&delta).map(|(&p, &d)| p - d).collect();
        let g_next = profile_residual(f, omega, grid, &next);
        if !(l2(&g_next) < l2(&g)) {
            break;
        }
        phi = next;
        g = g_next;
    }
    phi
}

/// Fit window: samples with `1e-10 <= phi <= 1e-3 y0` on `x > 0`.
fn tail_window(x: &[f64], phi: &[f64], y0: f64) -> Vec<(f64, f64)> {
    x.iter()
        .zip(phi)
        .filter(|&(&x, &p)| x > 0.0 && p >= 1e-10 && p <= 1e-3 * y0)
        .map(|(&x, &p)| (x, p))
        .collect()
}

/// Tail amplitude `a` from `log phi ~ -sqrt(omega) x + log a`, plus the
/// free two-parameter fit of the decay rate.
pub fn asymptotic_amplitude(x: &[f64], phi: &[f64], omega: f64, y0: f64) -> Result<(f64, f64)> {
    let w = tail_window(x, phi, y0);
    if w.len() < 2 {
        return Err(Error::TailUnresolved);
    }
    let sw = omega.sqrt();
    let log_a = w.iter().map(|&(x, p)| p.ln() + sw * x).sum::<f64>() / w.len() as f64;
    let xs: Vec<f64> = w.iter().map(|t| t.0).collect();
    let ys: Vec<f64> = w.iter().map(|t| t.1.ln()).collect();
    let (slope, _, _) = crate::stats::linear_fit(&xs, &ys);
    Ok((log_a.exp(), -slope))
}

/// Ground state with `d phi / d omega` by central difference (`h = 1e-4 omega`).
pub fn solve_profile(f: &PolynomialNonlinearity, omega: f64, grid: &Arc<SpectralGrid>) -> Result<SolitonProfile> {
    solve_profile_with_step(f, omega, grid, 1e-4 * omega)
}

pub fn solve_profile_with_step(
    f: &PolynomialNonlinearity,
    omega: f64,
    grid: &Arc<SpectralGrid>,
    h_omega: f64,
) -> Result<SolitonProfile> {
    if grid.length() / 2.0 < 10.0 / omega.sqrt() {
        return Err(Error::InvalidGrid(format!(
            "half length {} < 10/sqrt(omega) = {}",
            grid.length() / 2.0,
            10.0 / omega.sqrt()
        )));
    }
    let (y0, phi) = profile_samples(f, omega, grid)?;
    let dphi_domega = d_omega_profile(f, omega, grid, h_omega)?;
    let dphi = grid.derivative_real(&phi, 1);
    let (a_inf, decay_rate) = asymptotic_amplitude(grid.x(), &phi, omega, y0)?;
    let mass = phi.iter().map(|p| p * p).sum::<f64>() * grid.dx();
    Ok(SolitonProfile {
        omega,
        grid: grid.clone(),
        phi,
        dphi,
        dphi_domega,
        y0,
        a_inf,
        decay_rate,
        mass,
        nonlinearity: f.clone(),
    })
}

/// `(phi_{omega+h} - phi_{omega-h}) / 2h` on the grid.
pub fn d_omega_profile(f: &PolynomialNonlinearity, omega: f64, grid: &SpectralGrid, h: f64) -> Result<Vec<f64>> {
    let (_, p) = profile_samples(f, omega + h, grid)?;
    let (_, m) = profile_samples(f, omega - h, grid)?;
    Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

fn mass_at(f: &PolynomialNonlinearity, omega: f64, grid: &SpectralGrid) -> Result<f64> {
    let (_, p) = profile_samples(f, omega, grid)?;
    Ok(p.iter().map(|v| v * v).sum::<f64>() * grid.dx())
}

/// `dQ/domega` by central difference; errors if halving `h` moves the value
/// by more than `1e-3` relative.
pub fn stability_margin(f: &PolynomialNonlinearity, omega: f64, h: f64) -> Result<f64> {
    let grid = default_grid(omega)?;
    let diff = |h: f64| -> Result<f64> {
        Ok((mass_at(f, omega + h, &grid)? - mass_at(f, omega - h, &grid)?) / (2.0 * h))
    };
    let d1 = diff(h)?;
    let d2 = diff(0.5 * h)?;
    let discrepancy = (d1 - d2).abs() / d2.abs().max(f64::MIN_POSITIVE);
    if discrepancy > 1e-3 {
        return Err(Error::StepTooLarge { discrepancy });
    }
    // Richardson combination of the two central differences.
    Ok((4.0 * d2 - d1) / 3.0)
}
