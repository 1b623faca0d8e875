//! Split-step Fourier integration of `i u_t + u_xx + F'(|u|^2) u = 0` and the
//! conserved / half-line quantities.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{C64, ComplexField, SpectralGrid};
use crate::nonlinearity::PolynomialNonlinearity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Nonlinear half step, linear step, nonlinear half step.
    Strang,
    /// Yoshida triple jump of three Strang steps (order 4).
    Yoshida4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_begin: f64,
    pub t_end: f64,
    /// Observer is called every `snapshot_stride` steps.
    pub snapshot_stride: usize,
    pub scheme: Scheme,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_begin: f64, t_end: f64, snapshot_stride: usize, scheme: Scheme) -> Self {
        Self { dt, t_begin, t_end, snapshot_stride, scheme }
    }

    /// Validates the config. Returns whether `dt max|k|^2 <= pi` holds; the
    /// linear step is exact in Fourier space, so a violation is only reported.
    pub fn validate(&self, grid: &SpectralGrid) -> Result<bool> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.t_begin.is_finite() || !self.t_end.is_finite() {
            return Err(Error::Config("non-finite time span".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot_stride must be at least 1".into()));
        }
        let kmax = grid.k().iter().fold(0.0f64, |m, k| m.max(k.abs()));
        Ok(self.dt * kmax * kmax <= std::f64::consts::PI)
    }
}

/// Fixed-step propagator with cached linear multipliers.
pub struct SplitStep {
    grid: Arc<SpectralGrid>,
    f: PolynomialNonlinearity,
    dt: f64,
    /// `(nonlinear fraction before, linear multiplier)` pairs followed by a
    /// trailing nonlinear fraction.
    stages: Vec<(f64, Vec<C64>)>,
    tail: f64,
}

impl SplitStep {
    /// `dt` may be negative for backward integration.
    pub fn new(grid: &Arc<SpectralGrid>, f: &PolynomialNonlinearity, dt: f64, scheme: Scheme) -> Self {
        let weights: Vec<f64> = match scheme {
            Scheme::Strang => vec![1.0],
            Scheme::Yoshida4 => {
                let c = 2f64.powf(1.0 / 3.0);
                let w1 = 1.0 / (2.0 - c);
                vec![w1, -c * w1, w1]
            }
        };
        let mut stages = Vec::with_capacity(weights.len());
        let mut pending = 0.0;
        for &w in &weights {
            let tau = w * dt;
            let m = grid.k().iter().map(|&k| C64::from_polar(1.0, -k * k * tau)).collect();
            stages.push((pending + 0.5 * w, m));
            pending = 0.5 * w;
        }
        Self { grid: grid.clone(), f: f.clone(), dt, stages, tail: pending }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn nonlinear(&self, u: &mut [C64], frac: f64) {
        let tau = frac * self.dt;
        for z in u.iter_mut() {
            *z *= C64::from_polar(1.0, tau * self.f.fp(z.norm_sqr()));
        }
    }

    pub fn step(&self, u: &mut ComplexField) {
        let v = u.values_mut();
        for (frac, m) in &self.stages {
            self.nonlinear(v, *frac);
            self.grid.fft(v);
            v.iter_mut().zip(m).for_each(|(z, &w)| *z *= w);
            self.grid.ifft(v);
        }
        self.nonlinear(v, self.tail);
    }
}

/// Integrates `u` in place over the config's span. The observer sees the
/// initial state, every `snapshot_stride`-th step and the final state.
/// Returns the final time. On `NonFinite` the observer has seen the partial
/// trajectory.
pub fn run(
    u: &mut ComplexField,
    config: &EvolutionConfig,
    f: &PolynomialNonlinearity,
    mut observer: impl FnMut(f64, &ComplexField) -> Result<()>,
) -> Result<f64> {
    run_with(u, config, f, |t, u| observer(t, u))
}

/// [`run`] with an observer that may modify the state, e.g. to project out
/// round-off that breaks a symmetry of the flow.
pub fn run_with(
    u: &mut ComplexField,
    config: &EvolutionConfig,
    f: &PolynomialNonlinearity,
    mut observer: impl FnMut(f64, &mut ComplexField) -> Result<()>,
) -> Result<f64> {
    config.validate(u.grid())?;
    let span = config.t_end - config.t_begin;
    let steps = (span.abs() / config.dt).round() as usize;
    let dt = if steps == 0 { 0.0 } else { span / steps as f64 };
    let stepper = SplitStep::new(u.grid(), f, dt, config.scheme);
    let mut t = config.t_begin;
    observer(t, u)?;
    for s in 1..=steps {
        stepper.step(u);
        t = config.t_begin + s as f64 * dt;
        if s % config.snapshot_stride == 0 || s == steps {
            if !u.is_finite() {
                return Err(Error::NonFinite { t });
            }
            observer(t, u)?;
        }
    }
    if !u.is_finite() {
        return Err(Error::NonFinite { t });
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConservedQuantities {
    /// `H = int |u_x|^2/2 - F(|u|^2)/2`
    pub energy: f64,
    /// `Q = ||u||^2`
    pub mass: f64,
    /// `M = Im int conj(u) u_x`
    pub momentum: f64,
}

impl ConservedQuantities {
    /// Largest relative drift against a reference, per quantity `(H, Q, M)`.
    /// Momentum drift is absolute when the reference is below `1e-8`.
    pub fn drift(&self, reference: &Self) -> (f64, f64, f64) {
        let rel = |a: f64, b: f64| if b.abs() > 1e-8 { (a - b).abs() / b.abs() } else { (a - b).abs() };
        (rel(self.energy, reference.energy), rel(self.mass, reference.mass), rel(self.momentum, reference.momentum))
    }
}

pub fn conserved(u: &ComplexField, f: &PolynomialNonlinearity) -> ConservedQuantities {
    let ux = u.derivative(1);
    let dx = u.grid().dx();
    let (mut h, mut q, mut m) = (0.0, 0.0, 0.0);
    for (z, zx) in u.values().iter().zip(ux.values()) {
        let s = z.norm_sqr();
        h += 0.5 * zx.norm_sqr() - 0.5 * f.f(s);
        q += s;
        m += (z.conj() * zx).im;
    }
    ConservedQuantities { energy: h * dx, mass: q * dx, momentum: m * dx }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HalfLineQuantities {
    pub mass_plus: f64,
    pub energy_plus: f64,
    pub momentum_plus: f64,
    /// `|u_x(0)|^2 / 2`
    pub boundary_flux: f64,
}

/// Integrals over `x > 0` (trapezoid, half weight at `x = 0` and at the
/// periodic seam `x = L/2`). Requires an odd field.
pub fn half_quantities(u: &ComplexField, f: &PolynomialNonlinearity) -> Result<HalfLineQuantities> {
    let odd = u.oddness_residual();
    if odd > 1e-8 {
        return Err(Error::NotOdd(odd));
    }
    Ok(half_quantities_unchecked(u, f))
}

pub fn half_quantities_unchecked(u: &ComplexField, f: &PolynomialNonlinearity) -> HalfLineQuantities {
    let g = u.grid();
    let (n, c, dx) = (g.n(), g.center(), g.dx());
    let ux = u.derivative(1);
    let (v, vx) = (u.values(), ux.values());
    let (mut q, mut h, mut m) = (0.0, 0.0, 0.0);
    for j in (c..n).chain(std::iter::once(0)) {
        let w = if j == c || j == 0 { 0.5 } else { 1.0 };
        let s = v[j].norm_sqr();
        q += w * s;
        h += w * (0.5 * vx[j].norm_sqr() - 0.5 * f.f(s));
        m += w * (v[j].conj() * vx[j]).im;
    }
    HalfLineQuantities {
        mass_plus: q * dx,
        energy_plus: h * dx,
        momentum_plus: m * dx,
        boundary_flux: 0.5 * vx[c].norm_sqr(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{I, SolitonParams, place_real};

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn free_gaussian_matches_closed_form() {
        // i u_t + u_xx = 0, u0 = e^{-x^2}: u = (1 + 4 i t)^{-1/2} e^{-x^2 / (1 + 4 i t)}
        let g = SpectralGrid::new(512, 60.0).unwrap();
        let f = PolynomialNonlinearity::new(&[(2, 1e-300)]).unwrap();
        let mut u = ComplexField::from_fn(&g, |x| C64::new((-x * x).exp(), 0.0));
        run(&mut u, &EvolutionConfig::new(0.01, 0.0, 1.0, 1000, Scheme::Strang), &f, |_, _| Ok(())).unwrap();
        let a = C64::new(1.0, 4.0);
        let exact = ComplexField::from_fn(&g, |x| (-(x * x) / a).exp() / a.sqrt());
        assert!(u.sub(&exact).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn standing_soliton_keeps_shape() {
        let g = SpectralGrid::new(2048, 80.0).unwrap();
        let f = PolynomialNonlinearity::cubic();
        let mut u = ComplexField::from_fn(&g, |x| C64::new(sech(x), 0.0));
        run(&mut u, &EvolutionConfig::new(1e-3, 0.0, 10.0, 10_000, Scheme::Strang), &f, |_, _| Ok(())).unwrap();
        let err = u.values().iter().zip(g.x()).map(|(z, &x)| (z.norm() - sech(x)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        // phase e^{i t}
        let c = g.center();
        let e = (u.values()[c] - C64::from_polar(1.0, 10.0)).norm();
        assert!(e < 1e-4, "{e}");
    }

    #[test]
    fn zero_and_reversibility() {
        let g = SpectralGrid::new(256, 40.0).unwrap();
        let f = PolynomialNonlinearity::cubic();
        let mut z = ComplexField::zeros(&g);
        run(&mut z, &EvolutionConfig::new(1e-2, 0.0, 1.0, 10, Scheme::Strang), &f, |_, _| Ok(())).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let u0 = ComplexField::from_fn(&g, |x| C64::new(1.2 * sech(x), 0.0) * C64::from_polar(1.0, 0.3 * x));
        let mut u = u0.clone();
        run(&mut u, &EvolutionConfig::new(1e-2, 0.0, 2.0, 100, Scheme::Strang), &f, |_, _| Ok(())).unwrap();
        run(&mut u, &EvolutionConfig::new(1e-2, 2.0, 0.0, 100, Scheme::Strang), &f, |_, _| Ok(())).unwrap();
        assert!(u.sub(&u0).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn conserved_examples() {
        let g = SpectralGrid::new(1024, 80.0).unwrap();
        let f = PolynomialNonlinearity::cubic();
        let phi: Vec<f64> = g.x().iter().map(|&x| sech(x)).collect();
        let c = conserved(&ComplexField::from_real(&g, &phi), &f);
        assert!((c.mass - 2.0).abs() < 1e-12);
        assert!(c.momentum.abs() < 1e-14);
        // H(sech) = 1/3 - 2/3
        assert!((c.energy + 1.0 / 3.0).abs() < 1e-10);
        let boosted = place_real(&phi, &SolitonParams::new(0.0, 0.4, 0.0, 1.0), &g).unwrap();
        let cb = conserved(&boosted, &f);
        assert!((cb.momentum - 0.2 * cb.mass).abs() < 1e-8);
    }

    #[test]
    fn half_line_of_odd_field() {
        let g = SpectralGrid::new(1024, 80.0).unwrap();
        let f = PolynomialNonlinearity::cubic();
        let p = SolitonParams::new(6.0, 0.3, 0.0, 1.0);
        let phi: Vec<f64> = g.x().iter().map(|&x| sech(x)).collect();
        let u = place_real(&phi, &p, &g).unwrap().sym();
        let hq = half_quantities(&u, &f).unwrap();
        let c = conserved(&u, &f);
        assert!((hq.mass_plus - 0.5 * c.mass).abs() < 1e-10 * c.mass);
        assert!((hq.energy_plus - 0.5 * c.energy).abs() < 1e-10 * c.energy.abs());
        assert!(matches!(half_quantities(&u.add(&ComplexField::from_real(&g, &phi).scale(I)).unwrap(), &f), Err(Error::NotOdd(_))));
        let z = half_quantities(&ComplexField::zeros(&g), &f).unwrap();
        assert_eq!((z.mass_plus, z.energy_plus, z.momentum_plus, z.boundary_flux), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn guard_reports_phase_wrap() {
        let g = SpectralGrid::new(2048, 80.0).unwrap();
        assert!(!EvolutionConfig::new(1e-3, 0.0, 1.0, 1, Scheme::Strang).validate(&g).unwrap());
        assert!(EvolutionConfig::new(1e-5, 0.0, 1.0, 1, Scheme::Strang).validate(&g).unwrap());
        assert!(EvolutionConfig::new(0.0, 0.0, 1.0, 1, Scheme::Strang).validate(&g).is_err());
    }
}
