//! Approximate two-soliton solutions: the interaction law for the half
//! separation `d(t)`, the antisymmetric order-0 ansatz, the order-1
//! corrections and a numerical one-step refinement.

use std::sync::Arc;

use ode_solvers::{Dop853, System, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{C64, ComplexField, I, SolitonParams, SpectralGrid};
use crate::linop::{LinearizedOperator, ProjectionBasis};
use crate::nonlinearity::PolynomialNonlinearity;
use crate::profile::SolitonProfile;

/// `C` by route (i), the tail integral, and route (ii), `8 a^2 omega / ||phi||^2`.
pub fn interaction_constant_routes(profile: &SolitonProfile) -> (f64, f64) {
    let sw = profile.omega.sqrt();
    let f = &profile.nonlinearity;
    let g = &profile.grid;
    let integral: f64 = g
        .x()
        .iter()
        .zip(&profile.phi)
        .map(|(&x, &p)| f.fp(p * p) * p * (-sw * x).exp())
        .filter(|v| v.is_finite())
        .sum::<f64>()
        * g.dx();
    let a = profile.a_inf;
    (4.0 * a * sw * integral / profile.mass, 8.0 * a * a * profile.omega / profile.mass)
}

/// `int F'(phi^2) phi e^{-sqrt(omega) x} dx`, which equals `2 a sqrt(omega)`.
pub fn tail_integral(profile: &SolitonProfile) -> f64 {
    let (i, _) = interaction_constant_routes(profile);
    i * profile.mass / (4.0 * profile.a_inf * profile.omega.sqrt())
}

/// Interaction constant with the two-route cross-check at `1e-5` relative.
pub fn interaction_constant(profile: &SolitonProfile) -> Result<f64> {
    let (c1, c2) = interaction_constant_routes(profile);
    if !((c1 - c2).abs() <= 1e-5 * c2.abs()) {
        return Err(Error::CrossCheckFailed { route_i: c1, route_ii: c2 });
    }
    Ok(c1)
}

/// `ln cosh z` without overflow.
fn ln_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `d'' = C e^{-2 sqrt(omega) d}` with `d'(0) = 0`, `d'(+inf) = v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionDynamics {
    pub c: f64,
    pub omega: f64,
    pub v: f64,
}

impl InteractionDynamics {
    pub fn new(c: f64, omega: f64, v: f64) -> Result<Self> {
        if !(c > 0.0 && omega > 0.0 && v > 0.0) {
            return Err(Error::Config(format!("need C, omega, v > 0 (got {c}, {omega}, {v})")));
        }
        Ok(Self { c, omega, v })
    }

    pub fn from_profile(profile: &SolitonProfile, v: f64) -> Result<Self> {
        Self::new(interaction_constant(profile)?, profile.omega, v)
    }

    /// `(d, d', d'')` from the closed form
    /// `d = ln(sqrt(C) cosh(sqrt(omega) v t) / (omega^{1/4} v)) / sqrt(omega)`.
    pub fn separation(&self, t: f64) -> (f64, f64, f64) {
        let sw = self.omega.sqrt();
        let z = sw * self.v * t;
        let d = (0.5 * self.c.ln() - 0.25 * self.omega.ln() - self.v.ln() + ln_cosh(z)) / sw;
        let e = (-2.0 * z.abs()).exp();
        let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
        (d, self.v * z.tanh(), sw * self.v * self.v * sech2)
    }

    /// `|d'' - C e^{-2 sqrt(omega) d}|`.
    pub fn ode_residual(&self, t: f64) -> f64 {
        let (d, _, dd) = self.separation(t);
        (dd - self.c * (-2.0 * self.omega.sqrt() * d).exp()).abs()
    }

    /// Smallest `t >= 0` with `d(t) = target` (0 if `target <= d(0)`).
    pub fn time_at_separation(&self, target: f64) -> f64 {
        let sw = self.omega.sqrt();
        let d0 = self.separation(0.0).0;
        if target <= d0 {
            return 0.0;
        }
        // ln cosh z = sw (target - d0)
        let r = sw * (target - d0);
        // Newton from the large-z asymptote ln cosh z ~ z - ln 2.
        let mut z = (r + std::f64::consts::LN_2).max(1e-8);
        for _ in 0..60 {
            let g = ln_cosh(z) - r;
            z -= g / z.tanh();
            if g.abs() < 1e-15 * r.max(1.0) {
                break;
            }
        }
        z / (sw * self.v)
    }

    /// Integrates the ODE numerically from `t = 0` with the closed-form
    /// initial data; returns `(t, d, d')` every `dt_out` up to `t_end`.
    pub fn integrate_numeric(&self, t_end: f64, dt_out: f64) -> Result<Vec<(f64, f64, f64)>> {
        struct Law {
            c: f64,
            sw: f64,
        }
        impl System<f64, Vector2<f64>> for Law {
            fn system(&self, _t: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
                dy[0] = y[1];
                dy[1] = self.c * (-2.0 * self.sw * y[0]).exp();
            }
        }
        let (d0, _, _) = self.separation(0.0);
        let law = Law { c: self.c, sw: self.omega.sqrt() };
        let mut s = Dop853::new(law, 0.0, t_end, dt_out, Vector2::new(d0, 0.0), 1e-13, 1e-14);
        s.integrate().map_err(|_| Error::NoConvergence { residual: f64::NAN, iterations: 0 })?;
        Ok(s.x_out().iter().zip(s.y_out()).map(|(&t, y)| (t, y[0], y[1])).collect())
    }
}

/// Which source formulas define the order-1 corrections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionSource {
    /// `e^{-2 sqrt(omega) y}` on the `F'` terms, `e^{-sqrt(omega) y}` on the `F''` term.
    #[default]
    Displayed,
    /// `e^{-sqrt(omega) y}` on every term.
    MatchedExponent,
    /// Matched exponents plus the `-(C/2) y phi` phase-ramp term in `p1` and
    /// the frequency slot `f_omega = (C/4) d e^{-2 sqrt(omega) d}`.
    Balanced,
}

/// Order-1 correction profiles in the soliton frame.
#[derive(Clone, Debug)]
pub struct Corrections {
    pub source: CorrectionSource,
    pub p1: ComplexField,
    pub p2: ComplexField,
    pub p3: ComplexField,
    /// `f_omega(t) = f_omega_coeff * d e^{-2 sqrt(omega) d}`.
    pub f_omega_coeff: f64,
}

pub fn corrections(op: &LinearizedOperator, c: f64, source: CorrectionSource) -> Result<Corrections> {
    let p = &op.profile;
    let g = op.grid().clone();
    let f = &p.nonlinearity;
    let sw = p.omega.sqrt();
    let a = p.a_inf;
    let x = g.x();
    let finite = |v: f64| if v.is_finite() { v } else { 0.0 };
    let e1: Vec<f64> = x.iter().map(|&y| (-sw * y).exp()).collect();
    let fp: Vec<f64> = p.phi.iter().map(|&q| f.fp(q * q)).collect();
    let fpp2: Vec<f64> = p.phi.iter().map(|&q| 2.0 * f.fpp(q * q) * q * q).collect();
    let e_fp: Vec<f64> = match source {
        CorrectionSource::Displayed => x.iter().zip(&fp).map(|(&y, &v)| finite(v * (-2.0 * sw * y).exp())).collect(),
        _ => e1.iter().zip(&fp).map(|(&e, &v)| finite(v * e)).collect(),
    };
    let pi = ProjectionBasis::pi(p)?;
    let perp_inv = |h: ComplexField| -> Result<ComplexField> { op.invert_projected(&pi.complement(&h)?) };

    let p1 = match source {
        CorrectionSource::Balanced => {
            let src: Vec<f64> = (0..g.n())
                .map(|j| -0.5 * c * x[j] * p.phi[j] - a * finite((fp[j] + fpp2[j]) * e1[j]))
                .collect();
            op.invert_modulo_kernel(&ComplexField::from_real(&g, &src))?.0
        }
        _ => {
            let src: Vec<f64> = (0..g.n()).map(|j| e_fp[j] + finite(fpp2[j] * e1[j])).collect();
            perp_inv(ComplexField::from_real(&g, &src))?.scale_re(-a)
        }
    };
    let ip1 = p1.scale(I);
    let x_e_fp: Vec<f64> = x.iter().zip(&e_fp).map(|(y, v)| y * v).collect();
    let p2 = op
        .invert_modulo_kernel(&ip1)?
        .0
        .scale_re(-2.0 * sw)
        .add(&perp_inv(ComplexField::from_imag(&g, &x_e_fp))?)?;
    let p3 = perp_inv(ComplexField::from_imag(&g, &e_fp))?;
    let f_omega_coeff = if source == CorrectionSource::Balanced { 0.25 * c } else { 0.0 };
    Ok(Corrections { source, p1, p2, p3, f_omega_coeff })
}

/// A time-dependent field with an exact (non-snapshot) time derivative.
pub trait ApproximateSolution: Send + Sync {
    fn grid(&self) -> &Arc<SpectralGrid>;
    fn nonlinearity(&self) -> &PolynomialNonlinearity;
    /// `(u(t), u_t(t))`.
    fn field_and_dt(&self, t: f64) -> Result<(ComplexField, ComplexField)>;
    /// Modulation parameters of the right soliton at `t`.
    fn params(&self, t: f64) -> SolitonParams;

    fn field(&self, t: f64) -> Result<ComplexField> {
        Ok(self.field_and_dt(t)?.0)
    }

    /// `(u, u_t, u_xx)`. Placed fields override this with the exact second
    /// derivative: the Galilean phase is not periodic, and spectral
    /// differentiation would see its jump at the seam.
    fn field_dt_dxx(&self, t: f64) -> Result<(ComplexField, ComplexField, ComplexField)> {
        let (u, ut) = self.field_and_dt(t)?;
        let uxx = u.derivative(2);
        Ok((u, ut, uxx))
    }
}

/// `Lambda(u) = i u_t + u_xx + F'(|u|^2) u`.
pub fn residual(approx: &dyn ApproximateSolution, t: f64) -> Result<ComplexField> {
    let (u, ut, uxx) = approx.field_dt_dxx(t)?;
    lambda_with(&u, &ut, &uxx, approx.nonlinearity())
}

pub fn lambda(u: &ComplexField, ut: &ComplexField, f: &PolynomialNonlinearity) -> Result<ComplexField> {
    lambda_with(u, ut, &u.derivative(2), f)
}

fn lambda_with(u: &ComplexField, ut: &ComplexField, uxx: &ComplexField, f: &PolynomialNonlinearity) -> Result<ComplexField> {
    let vals = u
        .values()
        .iter()
        .zip(ut.values())
        .zip(uxx.values())
        .map(|((&z, &zt), &zxx)| I * zt + zxx + f.fp(z.norm_sqr()) * z)
        .collect();
    Ok(ComplexField::new(u.grid(), vals))
}

/// Parameters with their time derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamRates {
    pub p: SolitonParams,
    pub zeta_t: f64,
    pub v_t: f64,
    pub gamma_t: f64,
}

/// `sum_j g_j e^{i alpha} q_j(x - zeta)` with its time and second space
/// derivatives, where each term is `(g, g_t, q)`.
fn placed_terms(
    grid: &Arc<SpectralGrid>,
    r: &ParamRates,
    terms: &[(f64, f64, &[C64])],
    check_first: bool,
) -> Result<(Vec<C64>, Vec<C64>, Vec<C64>)> {
    let n = grid.n();
    let p = &r.p;
    let x = grid.x();
    let phase: Vec<C64> = x.iter().map(|&xi| C64::from_polar(1.0, p.phase(xi))).collect();
    let alpha_t: Vec<f64> = x
        .iter()
        .map(|&xi| r.gamma_t + 0.5 * r.v_t * (xi - 0.5 * p.zeta) - 0.25 * p.v * r.zeta_t)
        .collect();
    let mut u = vec![C64::new(0.0, 0.0); n];
    let mut ut = vec![C64::new(0.0, 0.0); n];
    let mut uxx = vec![C64::new(0.0, 0.0); n];
    let k = 0.5 * p.v;
    for (idx, &(g, gt, q)) in terms.iter().enumerate() {
        if g == 0.0 && gt == 0.0 {
            continue;
        }
        let s = grid.shift(q, p.zeta);
        if idx == 0 && check_first {
            let scale = q.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if s[0].norm() > 1e-10 * scale {
                return Err(Error::WrapAround { edge: s[0].norm(), limit: 1e-10 * scale });
            }
        }
        let sx = grid.derivative(&s, 1);
        let sxx = grid.derivative(&s, 2);
        for j in 0..n {
            let e = phase[j] * s[j];
            u[j] += g * e;
            ut[j] += gt * e + g * (I * alpha_t[j] * e - r.zeta_t * phase[j] * sx[j]);
            uxx[j] += g * phase[j] * (sxx[j] + 2.0 * I * k * sx[j] - k * k * s[j]);
        }
    }
    Ok((u, ut, uxx))
}

fn antisymmetrize(
    grid: &Arc<SpectralGrid>,
    (u, ut, uxx): (Vec<C64>, Vec<C64>, Vec<C64>),
) -> (ComplexField, ComplexField, ComplexField) {
    let odd = |v| ComplexField::new(grid, v).sym();
    (odd(u), odd(ut), odd(uxx))
}

/// A single moving soliton `e^{i(v/2)(x - zeta/2) + i gamma} phi(x - zeta)`
/// with `zeta = zeta0 + v t`, `gamma = gamma0 + omega t`: an exact solution.
pub struct BoostedSoliton {
    pub profile: Arc<SolitonProfile>,
    pub zeta0: f64,
    pub v: f64,
    pub gamma0: f64,
}

impl ApproximateSolution for BoostedSoliton {
    fn grid(&self) -> &Arc<SpectralGrid> {
        &self.profile.grid
    }
    fn nonlinearity(&self) -> &PolynomialNonlinearity {
        &self.profile.nonlinearity
    }
    fn params(&self, t: f64) -> SolitonParams {
        SolitonParams::new(self.zeta0 + self.v * t, self.v, self.gamma0 + self.profile.omega * t, self.profile.omega)
    }
    fn field_and_dt(&self, t: f64) -> Result<(ComplexField, ComplexField)> {
        let (u, ut, _) = self.field_dt_dxx(t)?;
        Ok((u, ut))
    }
    fn field_dt_dxx(&self, t: f64) -> Result<(ComplexField, ComplexField, ComplexField)> {
        let r = ParamRates { p: self.params(t), zeta_t: self.v, v_t: 0.0, gamma_t: self.profile.omega };
        let phi = self.profile.phi_complex();
        let (u, ut, uxx) = placed_terms(self.grid(), &r, &[(1.0, 0.0, &phi)], true)?;
        let g = self.grid();
        Ok((ComplexField::new(g, u), ComplexField::new(g, ut), ComplexField::new(g, uxx)))
    }
}

/// Order-0 or order-1 antisymmetric two-soliton ansatz.
pub struct Ansatz {
    pub profile: Arc<SolitonProfile>,
    pub dynamics: InteractionDynamics,
    pub corrections: Option<Corrections>,
    phi: Vec<C64>,
    domega: Vec<C64>,
}

impl Ansatz {
    pub fn order0(profile: Arc<SolitonProfile>, dynamics: InteractionDynamics) -> Self {
        let phi = profile.phi_complex();
        let domega = profile.dphi_domega.iter().map(|&r| C64::new(r, 0.0)).collect();
        Self { profile, dynamics, corrections: None, phi, domega }
    }

    pub fn order1(profile: Arc<SolitonProfile>, dynamics: InteractionDynamics, corrections: Corrections) -> Self {
        let mut a = Self::order0(profile, dynamics);
        a.corrections = Some(corrections);
        a
    }

    /// Builds the operator and corrections for the given source.
    pub fn order1_from(profile: Arc<SolitonProfile>, v: f64, source: CorrectionSource) -> Result<Self> {
        let dynamics = InteractionDynamics::from_profile(&profile, v)?;
        let op = LinearizedOperator::new(profile.clone());
        let corr = corrections(&op, dynamics.c, source)?;
        Ok(Self::order1(profile, dynamics, corr))
    }

    pub fn order(&self) -> u8 {
        if self.corrections.is_some() { 1 } else { 0 }
    }

    fn rates(&self, t: f64) -> ParamRates {
        let (d, dd, ddd) = self.dynamics.separation(t);
        let mut p = SolitonParams::new(d, dd, self.profile.omega * t, self.profile.omega);
        if let Some(c) = &self.corrections {
            p.f_omega = c.f_omega_coeff * d * (-2.0 * self.profile.omega.sqrt() * d).exp();
        }
        ParamRates { p, zeta_t: dd, v_t: ddd, gamma_t: self.profile.omega }
    }
}

impl ApproximateSolution for Ansatz {
    fn grid(&self) -> &Arc<SpectralGrid> {
        &self.profile.grid
    }
    fn nonlinearity(&self) -> &PolynomialNonlinearity {
        &self.profile.nonlinearity
    }
    fn params(&self, t: f64) -> SolitonParams {
        self.rates(t).p
    }
    fn field_and_dt(&self, t: f64) -> Result<(ComplexField, ComplexField)> {
        let (u, ut, _) = self.field_dt_dxx(t)?;
        Ok((u, ut))
    }
    fn field_dt_dxx(&self, t: f64) -> Result<(ComplexField, ComplexField, ComplexField)> {
        let r = self.rates(t);
        let grid = self.grid();
        let mut terms: Vec<(f64, f64, &[C64])> = vec![(1.0, 0.0, &self.phi)];
        if let Some(c) = &self.corrections {
            let sw = self.profile.omega.sqrt();
            let (d, dd, ddd) = (r.p.zeta, r.zeta_t, r.v_t);
            let e = (-2.0 * sw * d).exp();
            let et = -2.0 * sw * dd * e;
            let fw = c.f_omega_coeff * d * e;
            let fwt = c.f_omega_coeff * (dd * e + d * et);
            terms.push((e, et, c.p1.values()));
            terms.push((dd * e, ddd * e + dd * et, c.p2.values()));
            terms.push((dd * d * e, ddd * d * e + dd * dd * e + dd * d * et, c.p3.values()));
            terms.push((fw, fwt, &self.domega));
        }
        Ok(antisymmetrize(grid, placed_terms(grid, &r, &terms, true)?))
    }
}

/// One numerical refinement step applied to any ansatz.
pub struct RefinedAnsatz<'a> {
    pub base: &'a dyn ApproximateSolution,
    pub op: Arc<LinearizedOperator>,
    /// Central-difference step for the correction's time derivative.
    pub h: f64,
}

/// Per-time diagnostics of a refinement.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RefinementReport {
    pub t: f64,
    /// Removed kernel components along `phi'` and `i phi` (the modulation
    /// re-fit for `zeta` and `gamma`).
    pub kernel: [f64; 2],
    pub correction_l2: f64,
}

impl<'a> RefinedAnsatz<'a> {
    pub fn new(base: &'a dyn ApproximateSolution, op: Arc<LinearizedOperator>) -> Self {
        Self { base, op, h: 1e-3 }
    }

    /// Correction at `t`: the right-frame part of the residual, inverted by
    /// `S` modulo its kernel, transported back and antisymmetrized.
    pub fn correction(&self, t: f64) -> Result<(ComplexField, RefinementReport)> {
        let grid = self.base.grid();
        let r = residual(self.base, t)?;
        let p = self.base.params(t);
        let sw = self.op.omega().sqrt();
        let frame: Vec<C64> = r
            .values()
            .iter()
            .zip(grid.x())
            .map(|(&z, &x)| z * C64::from_polar(0.5 * (1.0 + (sw * x).tanh()), -p.phase(x)))
            .collect();
        let rf = ComplexField::new(grid, grid.shift(&frame, -p.zeta));
        let (w, kernel) = self.op.invert_modulo_kernel(&rf)?;
        let back: Vec<C64> = grid
            .shift(w.values(), p.zeta)
            .into_iter()
            .zip(grid.x())
            .map(|(z, &x)| z * C64::from_polar(1.0, p.phase(x)))
            .collect();
        let c = ComplexField::new(grid, back).sym();
        let report = RefinementReport { t, kernel, correction_l2: c.norm_l2() };
        Ok((c, report))
    }
}

impl ApproximateSolution for RefinedAnsatz<'_> {
    fn grid(&self) -> &Arc<SpectralGrid> {
        self.base.grid()
    }
    fn nonlinearity(&self) -> &PolynomialNonlinearity {
        self.base.nonlinearity()
    }
    fn params(&self, t: f64) -> SolitonParams {
        self.base.params(t)
    }
    fn field_and_dt(&self, t: f64) -> Result<(ComplexField, ComplexField)> {
        let (u, ut, _) = self.field_dt_dxx(t)?;
        Ok((u, ut))
    }
    fn field_dt_dxx(&self, t: f64) -> Result<(ComplexField, ComplexField, ComplexField)> {
        let (u, ut, uxx) = self.base.field_dt_dxx(t)?;
        let (c0, _) = self.correction(t)?;
        let (cp, _) = self.correction(t + self.h)?;
        let (cm, _) = self.correction(t - self.h)?;
        let ct = cp.sub(&cm)?.scale_re(0.5 / self.h);
        let cxx = c0.derivative(2);
        Ok((u.add(&c0)?, ut.add(&ct)?, uxx.add(&cxx)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::solve_profile;

    fn cubic(n: usize, l: f64) -> Arc<SolitonProfile> {
        let g = SpectralGrid::new(n, l).unwrap();
        Arc::new(solve_profile(&PolynomialNonlinearity::cubic(), 1.0, &g).unwrap())
    }

    #[test]
    fn cubic_constant_is_sixteen() {
        let p = cubic(2048, 80.0);
        let (c1, c2) = interaction_constant_routes(&p);
        assert!((c1 - 16.0).abs() < 1e-3 * 16.0 && (c2 - 16.0).abs() < 1e-3 * 16.0, "{c1} {c2}");
        assert!((tail_integral(&p) - 4.0).abs() < 1e-5);
    }

    #[test]
    fn separation_closed_form() {
        let dyn_ = InteractionDynamics::new(16.0, 1.0, 0.1).unwrap();
        let (d, dd, _) = dyn_.separation(0.0);
        assert!((d - (4.0f64 / 0.1).ln()).abs() < 1e-14 && dd == 0.0);
        assert!((dyn_.separation(1e3).1 - 0.1).abs() < 1e-12);
        for t in [-1e3, -37.0, 0.0, 2.5, 400.0, 1e3] {
            assert!(dyn_.ode_residual(t) <= 1e-12, "{t}");
        }
        let t = dyn_.time_at_separation(10.0);
        assert!((dyn_.separation(t).0 - 10.0).abs() < 1e-10);
    }

    #[test]
    fn numeric_separation_matches() {
        let dyn_ = InteractionDynamics::new(16.0, 1.0, 0.2).unwrap();
        for (t, d, dd) in dyn_.integrate_numeric(60.0, 0.5).unwrap() {
            let (de, dde, _) = dyn_.separation(t);
            assert!((d - de).abs() < 1e-8 && (dd - dde).abs() < 1e-8, "{t}");
        }
    }

    #[test]
    fn boosted_soliton_is_exact() {
        let p = cubic(1024, 60.0);
        let b = BoostedSoliton { profile: p, zeta0: -3.0, v: 0.4, gamma0: 0.2 };
        let r = residual(&b, 1.5).unwrap();
        assert!(r.norm_l2() < 1e-9, "{}", r.norm_l2());
    }

    #[test]
    fn order0_is_odd_and_time_symmetric() {
        let p = cubic(1024, 60.0);
        let dy = InteractionDynamics::from_profile(&p, 0.2).unwrap();
        let a = Ansatz::order0(p, dy);
        let u = a.field(3.0).unwrap();
        assert!(u.oddness_residual() < 1e-12);
        let r1 = residual(&a, 3.0).unwrap().norm_h1();
        let r2 = residual(&a, -3.0).unwrap().norm_h1();
        assert!((r1 - r2).abs() < 1e-10 * r1);
    }

    #[test]
    fn corrections_are_real_and_orthogonal() {
        let p = cubic(1024, 60.0);
        let op = LinearizedOperator::new(p.clone());
        let c = interaction_constant(&p).unwrap();
        for src in [CorrectionSource::Displayed, CorrectionSource::MatchedExponent, CorrectionSource::Balanced] {
            let k = corrections(&op, c, src).unwrap();
            assert!(k.p1.im().iter().all(|v| v.abs() < 1e-10));
            assert!(k.p2.re().iter().all(|v| v.abs() < 1e-10));
            assert!(k.p3.re().iter().all(|v| v.abs() < 1e-10));
            for q in [&k.p1, &k.p2, &k.p3] {
                assert!(q.inner(&p.dphi_field()).unwrap().abs() < 1e-8);
                assert!(q.inner(&p.phi_field().scale(I)).unwrap().abs() < 1e-8);
            }
        }
    }

    #[test]
    fn refinement_of_exact_solution_is_trivial() {
        let p = cubic(1024, 60.0);
        let op = Arc::new(LinearizedOperator::new(p.clone()));
        let b = BoostedSoliton { profile: p, zeta0: 4.0, v: 0.1, gamma0: 0.0 };
        let r = RefinedAnsatz::new(&b, op);
        let (c, _) = r.correction(0.5).unwrap();
        assert!(c.norm_l2() < 1e-9, "{}", c.norm_l2());
    }
}
