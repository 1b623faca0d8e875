//! Modulation fits of a numerical odd solution against the antisymmetric
//! soliton family, remainder extraction and the Lyapunov diagnostics.

use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::ansatz::Corrections;
use crate::error::{Error, Result};
use crate::field::{C64, ComplexField, I, SolitonParams, SpectralGrid};
use crate::profile::SolitonProfile;

/// Parametrized odd family
/// `P(sigma) = Sym(e^{i alpha} [phi + f_omega d_omega phi + corrections](x - zeta))`
/// with the order-1 corrections weighted by `e^{-2 sqrt(omega) zeta}`, `v e^{..}`
/// and `v zeta e^{..}` when present.
pub struct SolitonFamily {
    pub profile: Arc<SolitonProfile>,
    pub corrections: Option<Corrections>,
    phi: Vec<C64>,
    dphi: Vec<C64>,
    domega: Vec<C64>,
    xphi: Vec<C64>,
}

/// Shifts `(p_zeta, p_v, p_gamma, p_omega)` on top of a base parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModulationState {
    pub base: SolitonParams,
    pub shifts: [f64; 4],
    /// Largest orthogonality residual relative to `||u||`.
    pub residual_norm: f64,
    pub iterations: usize,
}

impl ModulationState {
    /// `sigma_u = sigma_k + shifts`.
    pub fn params(&self) -> SolitonParams {
        let mut p = self.base;
        p.zeta += self.shifts[0];
        p.v += self.shifts[1];
        p.gamma += self.shifts[2];
        p.f_omega += self.shifts[3];
        p
    }

    /// Same fitted parameters expressed as shifts from another base.
    pub fn rebased(&self, base: SolitonParams) -> Self {
        let p = self.params();
        let shifts = [p.zeta - base.zeta, p.v - base.v, p.gamma - base.gamma, p.f_omega - base.f_omega];
        Self { base, shifts, ..*self }
    }
}

fn real(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&r| C64::new(r, 0.0)).collect()
}

impl SolitonFamily {
    pub fn new(profile: Arc<SolitonProfile>, corrections: Option<Corrections>) -> Self {
        let x = profile.grid.x();
        let xphi = x.iter().zip(&profile.phi).map(|(&a, &b)| C64::new(a * b, 0.0)).collect();
        Self {
            phi: real(&profile.phi),
            dphi: real(&profile.dphi),
            domega: real(&profile.dphi_domega),
            xphi,
            profile,
            corrections,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.profile.grid
    }

    /// Frame profile `g = phi + f_omega d_omega phi + corrections` (before placement).
    fn frame_profile(&self, p: &SolitonParams) -> Vec<C64> {
        let mut g: Vec<C64> = self.phi.iter().zip(&self.domega).map(|(&a, &b)| a + p.f_omega * b).collect();
        if let Some(c) = &self.corrections {
            let e = (-2.0 * self.profile.omega.sqrt() * p.zeta).exp();
            let w = [e, p.v * e, p.v * p.zeta * e];
            for (wk, q) in w.iter().zip([&c.p1, &c.p2, &c.p3]) {
                g.iter_mut().zip(q.values()).for_each(|(a, &b)| *a += wk * b);
            }
        }
        g
    }

    /// `e^{i alpha(x)} q(x - zeta)` without antisymmetrization.
    fn placed(&self, q: &[C64], p: &SolitonParams) -> Vec<C64> {
        let g = self.grid();
        g.shift(q, p.zeta)
            .into_iter()
            .zip(g.x())
            .map(|(z, &x)| z * C64::from_polar(1.0, p.phase(x)))
            .collect()
    }

    pub fn evaluate(&self, p: &SolitonParams) -> ComplexField {
        ComplexField::new(self.grid(), self.placed(&self.frame_profile(p), p)).sym()
    }

    /// Right-soliton test fields `(phi_gamma, phi_zeta, phi_omega, phi_v)`.
    pub fn test_fields(&self, p: &SolitonParams) -> [ComplexField; 4] {
        let g = self.grid();
        let xz: Vec<C64> = self.xphi.iter().map(|&z| 0.5 * I * z).collect();
        let iphi: Vec<C64> = self.phi.iter().map(|&z| I * z).collect();
        [
            ComplexField::new(g, self.placed(&iphi, p)),
            ComplexField::new(g, self.placed(&self.dphi, p)),
            ComplexField::new(g, self.placed(&self.domega, p)),
            ComplexField::new(g, self.placed(&xz, p)),
        ]
    }

    /// `dP/d(zeta, v, gamma, f_omega)` of the leading (uncorrected) profile.
    fn tangents(&self, p: &SolitonParams) -> [ComplexField; 4] {
        let g = self.grid();
        let prof = self.frame_profile(p);
        let dprof = g.derivative(&prof, 1);
        let dz: Vec<C64> = prof.iter().zip(&dprof).map(|(&a, &b)| -0.25 * I * p.v * a - b).collect();
        let shifted = self.placed(&prof, p);
        let dv: Vec<C64> =
            shifted.iter().zip(g.x()).map(|(&z, &x)| 0.5 * I * (x - 0.5 * p.zeta) * z).collect();
        let dg: Vec<C64> = shifted.iter().map(|&z| I * z).collect();
        [
            ComplexField::new(g, self.placed(&dz, p)).sym(),
            ComplexField::new(g, dv).sym(),
            ComplexField::new(g, dg).sym(),
            ComplexField::new(g, self.placed(&self.domega, p)).sym(),
        ]
    }

    /// Orthogonality conditions `<u - P(sigma), i phi_j>` for `j = gamma, zeta, omega, v`.
    pub fn conditions(&self, u: &ComplexField, p: &SolitonParams) -> Result<[f64; 4]> {
        let diff = u.sub(&self.evaluate(p))?;
        let t = self.test_fields(p);
        let mut out = [0.0; 4];
        for (o, f) in out.iter_mut().zip(&t) {
            *o = diff.inner(&f.scale(I))?;
        }
        Ok(out)
    }

    /// Newton iteration on the four shifts. The Jacobian is
    /// `-<dP/dsigma_k, i phi_j>` with the test fields frozen per step.
    pub fn fit(&self, u: &ComplexField, base: &SolitonParams) -> Result<ModulationState> {
        let un = u.norm_l2().max(f64::MIN_POSITIVE);
        let pre = u.sub(&self.evaluate(base))?.norm_h1();
        if !(pre < 0.1 * un.max(1.0)) {
            return Err(Error::NoConvergence { residual: pre, iterations: 0 });
        }
        let mut shifts = Vector4::zeros();
        let apply = |s: &Vector4<f64>| {
            let mut q = *base;
            q.zeta += s[0];
            q.v += s[1];
            q.gamma += s[2];
            q.f_omega += s[3];
            q
        };
        let mut res = f64::INFINITY;
        for it in 0..50 {
            let p = apply(&shifts);
            let g = self.conditions(u, &p)?;
            res = g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / un;
            if res <= 1e-12 {
                return Ok(self.state(base, &shifts, res, it));
            }
            let tests = self.test_fields(&p);
            let tang = self.tangents(&p);
            let mut j = Matrix4::zeros();
            for r in 0..4 {
                let tf = tests[r].scale(I);
                for c in 0..4 {
                    j[(r, c)] = -tang[c].inner(&tf)?;
                }
            }
            let lu = j.lu();
            let step = lu.solve(&Vector4::from(g)).ok_or(Error::SingularJacobian)?;
            if !step.iter().all(|v| v.is_finite()) {
                return Err(Error::SingularJacobian);
            }
            shifts -= step;
            if shifts[0].abs() > 0.5 * base.zeta.abs().max(1.0) {
                return Err(Error::NoConvergence { residual: res, iterations: it + 1 });
            }
        }
        if res <= 1e-10 {
            Ok(self.state(base, &shifts, res, 50))
        } else {
            Err(Error::NoConvergence { residual: res, iterations: 50 })
        }
    }

    fn state(&self, base: &SolitonParams, s: &Vector4<f64>, res: f64, it: usize) -> ModulationState {
        ModulationState { base: *base, shifts: [s[0], s[1], s[2], s[3]], residual_norm: res, iterations: it }
    }

    /// `r = e^{-i gamma} (u - P(sigma_u))`.
    pub fn remainder(&self, u: &ComplexField, state: &ModulationState) -> Result<ComplexField> {
        let p = state.params();
        Ok(u.sub(&self.evaluate(&p))?.scale(C64::from_polar(1.0, -p.gamma)))
    }

    /// Quadratic form `L`, localized momenta and `E = L - d' P2 + d' P1`.
    pub fn lyapunov(&self, r: &ComplexField, state: &ModulationState, d_dot: f64) -> Result<RemainderDiagnostics> {
        let p = state.params();
        let g = self.grid();
        let f = &self.profile.nonlinearity;
        let omega = self.profile.omega;
        let right = g.shift_real(&self.profile.phi, p.zeta);
        let left = g.reflect(&right);
        let rx = r.derivative(1);
        let x = g.x();
        let zeta = p.zeta;
        let chi1: Vec<f64> = x.iter().map(|&xi| cutoff((xi + zeta) / (2.0 * zeta))).collect();
        let (mut l, mut p1, mut p2) = (0.0, 0.0, 0.0);
        for j in 0..g.n() {
            let (z, zx) = (r.values()[j], rx.values()[j]);
            let s = z.norm_sqr();
            let (qr, ql) = (right[j] * right[j], left[j] * left[j]);
            let conj2 = (z * z).conj();
            let cr = f.fpp(qr) * qr;
            let cl = f.fpp(ql) * ql;
            let ph_r = C64::from_polar(1.0, p.v * (x[j] - 0.5 * zeta));
            let ph_l = C64::from_polar(1.0, p.v * (-x[j] - 0.5 * zeta));
            l += zx.norm_sqr() + omega * s - (f.fp(qr) + f.fp(ql)) * s
                - cr * (ph_r * conj2).re
                - cl * (ph_l * conj2).re
                - (cr + cl) * s;
            let m = (z.conj() * zx).im;
            p1 += chi1[j] * m;
            p2 += (1.0 - chi1[j]) * m;
        }
        let dx = g.dx();
        let (l, p1, p2) = (l * dx, p1 * dx, p2 * dx);
        Ok(RemainderDiagnostics {
            l,
            p1,
            p2,
            e: l - d_dot * p2 + d_dot * p1,
            r_l2: r.norm_l2(),
            r_h1: r.norm_h1(),
            oddness: r.oddness_residual(),
            chi_plateau: (0.5, 0.6),
        })
    }
}

/// `chi(s)`: 1 for `s <= 1/2`, 0 for `s >= 6/10`, quintic smoothstep between.
pub fn cutoff(s: f64) -> f64 {
    let u = ((s - 0.5) / 0.1).clamp(0.0, 1.0);
    1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RemainderDiagnostics {
    pub l: f64,
    pub p1: f64,
    pub p2: f64,
    pub e: f64,
    pub r_l2: f64,
    pub r_h1: f64,
    pub oddness: f64,
    /// Transition interval of the cutoff `chi`.
    pub chi_plateau: (f64, f64),
}

/// Residuals of the modulation equations along a fitted trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    /// Least-squares `C1` in `p_v' + C1 p_zeta e^{-2 sqrt(omega) d} = 0`.
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Largest residual of each of the four equations `(v, zeta, gamma, omega)`.
    pub max_residuals: [f64; 4],
    /// Largest residual divided by the surrogate `||r||^2 + v^2 ||r||` (+ floor).
    pub max_ratio: f64,
    pub violated: bool,
}

/// One fitted sample for [`rate_check`].
#[derive(Clone, Copy, Debug)]
pub struct RateSample {
    pub t: f64,
    pub d: f64,
    pub shifts: [f64; 4],
    pub r_h1: f64,
}

/// Finite-differences the shifts (uniform spacing) and measures the
/// modulation equations. `tolerance` multiplies the surrogate bound.
pub fn rate_check(samples: &[RateSample], omega: f64, v: f64, tolerance: f64) -> Result<RateReport> {
    let n = samples.len();
    if n < 10 {
        return Err(Error::InsufficientSamples { needed: 10, got: n });
    }
    let sw = omega.sqrt();
    let mut rows = Vec::with_capacity(n - 2);
    for k in 1..n - 1 {
        let h = samples[k + 1].t - samples[k - 1].t;
        let d: Vec<f64> = (0..4).map(|j| (samples[k + 1].shifts[j] - samples[k - 1].shifts[j]) / h).collect();
        rows.push((k, d));
    }
    let e = |k: usize| (-2.0 * sw * samples[k].d).exp();
    // C1
    let (mut num, mut den) = (0.0, 0.0);
    for (k, d) in &rows {
        let a = samples[*k].shifts[0] * e(*k);
        num -= d[1] * a;
        den += a * a;
    }
    let c1 = if den > 0.0 { num / den } else { 0.0 };
    // C2, C3 from p_gamma' + p_omega = C2 pz E + C3 d pz E
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, d) in &rows {
        let s = &samples[*k];
        let y = d[2] + s.shifts[3];
        let x1 = s.shifts[0] * e(*k);
        let x2 = s.d * x1;
        a11 += x1 * x1;
        a12 += x1 * x2;
        a22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    let det = a11 * a22 - a12 * a12;
    let (c2, c3) = if det.abs() > 1e-300 { ((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det) } else { (0.0, 0.0) };
    let mut max_res = [0.0f64; 4];
    let mut max_ratio = 0.0f64;
    for (k, d) in &rows {
        let s = &samples[*k];
        let ek = e(*k);
        let r = [
            (d[1] + c1 * s.shifts[0] * ek).abs(),
            (d[0] - s.shifts[1]).abs(),
            (d[2] + s.shifts[3] - c2 * s.shifts[0] * ek - c3 * s.d * s.shifts[0] * ek).abs(),
            d[3].abs(),
        ];
        let surrogate = s.r_h1 * s.r_h1 + v * v * s.r_h1 + 1e-14;
        for j in 0..4 {
            max_res[j] = max_res[j].max(r[j]);
            max_ratio = max_ratio.max(r[j] / surrogate);
        }
    }
    Ok(RateReport { c1, c2, c3, max_residuals: max_res, max_ratio, violated: max_ratio > tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::PolynomialNonlinearity;
    use crate::profile::solve_profile;

    fn family() -> SolitonFamily {
        let g = SpectralGrid::new(1024, 80.0).unwrap();
        SolitonFamily::new(Arc::new(solve_profile(&PolynomialNonlinearity::cubic(), 1.0, &g).unwrap()), None)
    }

    #[test]
    fn exact_member_has_zero_shifts() {
        let fam = family();
        let p = SolitonParams::new(8.0, 0.2, 0.3, 1.0);
        let u = fam.evaluate(&p);
        let s = fam.fit(&u, &p).unwrap();
        assert!(s.shifts.iter().all(|v| v.abs() < 1e-10), "{:?}", s.shifts);
        let r = fam.remainder(&u, &s).unwrap();
        assert!(r.max_abs() < 1e-12);
        let d = fam.lyapunov(&r, &s, 0.2).unwrap();
        assert_eq!((d.l, d.p1, d.p2, d.e), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn recovers_translation_and_phase() {
        let fam = family();
        let p = SolitonParams::new(8.0, 0.2, 0.3, 1.0);
        let mut q = p;
        q.zeta += 1e-3;
        q.gamma -= 2e-3;
        let s = fam.fit(&fam.evaluate(&q), &p).unwrap();
        assert!((s.shifts[0] - 1e-3).abs() < 1e-6 && (s.shifts[2] + 2e-3).abs() < 1e-6, "{:?}", s.shifts);
        assert!(s.residual_norm < 1e-10);
    }

    #[test]
    fn gauge_shift_moves_gamma() {
        let fam = family();
        let p = SolitonParams::new(8.0, 0.1, 0.0, 1.0);
        let u = fam.evaluate(&p).add(&ComplexField::from_fn(fam.grid(), |x| C64::new(1e-4 * x * (-x * x / 20.0).exp(), 0.0))).unwrap();
        let s0 = fam.fit(&u, &p).unwrap();
        let s1 = fam.fit(&u.scale(C64::from_polar(1.0, 0.01)), &p).unwrap();
        assert!((s1.shifts[2] - s0.shifts[2] - 0.01).abs() < 1e-9);
        let r0 = fam.remainder(&u, &s0).unwrap().norm_l2();
        let r1 = fam.remainder(&u.scale(C64::from_polar(1.0, 0.01)), &s1).unwrap().norm_l2();
        assert!((r0 - r1).abs() < 1e-10);
    }

    #[test]
    fn cutoff_plateaus() {
        assert_eq!(cutoff(0.2), 1.0);
        assert_eq!(cutoff(0.7), 0.0);
        assert!((cutoff(0.55) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rate_check_needs_samples() {
        let s = RateSample { t: 0.0, d: 5.0, shifts: [0.0; 4], r_h1: 0.0 };
        assert!(matches!(rate_check(&[s; 5], 1.0, 0.1, 10.0), Err(Error::InsufficientSamples { .. })));
        let samples: Vec<RateSample> = (0..20).map(|k| RateSample { t: k as f64, ..s }).collect();
        let r = rate_check(&samples, 1.0, 0.1, 10.0).unwrap();
        assert!(r.max_residuals.iter().all(|v| *v <= 1e-8) && !r.violated);
    }
}
