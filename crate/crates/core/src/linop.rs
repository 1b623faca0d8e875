//! Linearization of the stationary equation around `phi_omega`:
//! `S rho = -rho'' + omega rho - F'(phi^2) rho - F''(phi^2) phi^2 (rho + conj rho)`.
//!
//! `S` is real-linear. On `rho = a + i b` it splits into
//! `L+ a = -a'' + (omega - F' - 2 F'' phi^2) a` and `L- b = -b'' + (omega - F') b`,
//! with kernels spanned by `phi'` and `phi`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{C64, ComplexField, I, SpectralGrid};
use crate::profile::SolitonProfile;

/// Real or imaginary sector of `S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    /// `L+`, acting on the real part.
    Plus,
    /// `L-`, acting on the imaginary part.
    Minus,
}

/// Constraint sets for the coercivity floor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Constraints {
    /// Orthogonal to `phi'`, `i phi`, `d phi/d omega`.
    Standard,
    /// Orthogonal to `x phi`, `i d phi/d omega`, `phi`.
    Alternative,
    /// Orthogonal to `phi'`, `phi`, `i phi`.
    Mass,
    None,
}

pub struct LinearizedOperator {
    pub profile: Arc<SolitonProfile>,
    grid: Arc<SpectralGrid>,
    omega: f64,
    v_plus: Vec<f64>,
    v_minus: Vec<f64>,
}

impl LinearizedOperator {
    pub fn new(profile: Arc<SolitonProfile>) -> Self {
        let f = &profile.nonlinearity;
        let omega = profile.omega;
        let v_minus: Vec<f64> = profile.phi.iter().map(|&p| omega - f.fp(p * p)).collect();
        let v_plus = profile
            .phi
            .iter()
            .zip(&v_minus)
            .map(|(&p, &m)| m - 2.0 * f.fpp(p * p) * p * p)
            .collect();
        Self { grid: profile.grid.clone(), omega, profile, v_plus, v_minus }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    fn potential(&self, block: Block) -> &[f64] {
        match block {
            Block::Plus => &self.v_plus,
            Block::Minus => &self.v_minus,
        }
    }

    /// Kernel vector of a block: `phi'` for `L+`, `phi` for `L-`.
    pub fn kernel(&self, block: Block) -> &[f64] {
        match block {
            Block::Plus => &self.profile.dphi,
            Block::Minus => &self.profile.phi,
        }
    }

    pub fn apply_block(&self, block: Block, u: &[f64]) -> Vec<f64> {
        let d2 = self.grid.derivative_real(u, 2);
        d2.iter().zip(u).zip(self.potential(block)).map(|((&d, &a), &v)| -d + v * a).collect()
    }

    pub fn apply(&self, rho: &ComplexField) -> Result<ComplexField> {
        if rho.grid().n() != self.grid.n() || rho.grid().length() != self.grid.length() {
            return Err(Error::GridMismatch);
        }
        let d2 = self.grid.derivative(rho.values(), 2);
        let values = d2
            .iter()
            .zip(rho.values())
            .zip(self.v_plus.iter().zip(&self.v_minus))
            .map(|((&d, &r), (&vp, &vm))| -d + C64::new(vp * r.re, vm * r.im))
            .collect();
        Ok(ComplexField::new(&self.grid, values))
    }

    /// Solves `S u = f` for `f` orthogonal to `phi'` and `i phi`, returning the
    /// solution orthogonal to both.
    pub fn invert_projected(&self, f: &ComplexField) -> Result<ComplexField> {
        let nf = f.norm_l2();
        if nf == 0.0 {
            return Ok(ComplexField::zeros(&self.grid));
        }
        let (re, im) = (f.re(), f.im());
        let cp = kernel_component(&re, self.kernel(Block::Plus), self.grid.dx()) / nf;
        let cm = kernel_component(&im, self.kernel(Block::Minus), self.grid.dx()) / nf;
        if cp.abs() > 1e-8 || cm.abs() > 1e-8 {
            return Err(Error::NotOrthogonal(cp, cm));
        }
        let a = self.solve_block(Block::Plus, &re)?;
        let b = self.solve_block(Block::Minus, &im)?;
        let u = ComplexField::new(&self.grid, a.iter().zip(&b).map(|(&x, &y)| C64::new(x, y)).collect());
        let res = self.apply(&u)?.sub(f)?.norm_l2() / nf;
        if res > 1e-8 {
            return Err(Error::NoConvergence { residual: res, iterations: 0 });
        }
        Ok(u)
    }

    /// Removes the kernel components of `f` (reported as `(c_phi', c_iphi)`,
    /// coefficients along the normalized kernel vectors divided by their
    /// norms squared) and inverts on the complement.
    pub fn invert_modulo_kernel(&self, f: &ComplexField) -> Result<(ComplexField, [f64; 2])> {
        let dx = self.grid.dx();
        let (mut re, mut im) = (f.re(), f.im());
        let kp = self.kernel(Block::Plus);
        let km = self.kernel(Block::Minus);
        let cp = remove_component(&mut re, kp, dx);
        let cm = remove_component(&mut im, km, dx);
        let g = ComplexField::new(&self.grid, re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect());
        Ok((self.invert_projected(&g)?, [cp, cm]))
    }

    fn solve_block(&self, block: Block, b: &[f64]) -> Result<Vec<f64>> {
        let k = self.kernel(block).to_vec();
        let kk: f64 = k.iter().map(|v| v * v).sum();
        let project = |u: &mut [f64]| {
            let c = u.iter().zip(&k).map(|(a, b)| a * b).sum::<f64>() / kk;
            u.iter_mut().zip(&k).for_each(|(a, &b)| *a -= c * b);
        };
        let omega = self.omega;
        let grid = &self.grid;
        let apply = |u: &[f64]| {
            let mut v = u.to_vec();
            project(&mut v);
            let mut w = self.apply_block(block, &v);
            project(&mut w);
            w
        };
        let precond = |u: &[f64]| {
            let mut v = u.to_vec();
            project(&mut v);
            let c: Vec<C64> = v.iter().map(|&r| C64::new(r, 0.0)).collect();
            let mut w: Vec<f64> =
                grid.multiplier(&c, |k| C64::new(1.0 / (k * k + omega), 0.0)).into_iter().map(|z| z.re).collect();
            project(&mut w);
            w
        };
        let mut rhs = b.to_vec();
        project(&mut rhs);
        let (mut x, iters, _) = minres(apply, precond, &rhs, 1e-13, 2000);
        project(&mut x);
        let r = apply(&x);
        let nb = norm(&rhs);
        let res = if nb > 0.0 { norm(&r.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>()) / nb } else { 0.0 };
        if !(res <= 1e-9) {
            return Err(Error::NoConvergence { residual: res, iterations: iters });
        }
        Ok(x)
    }

    /// Dense reference solve of one block by a kernel-bordered LU
    /// factorization. Quadratic memory; meant for small grids and tests.
    pub fn solve_block_dense(&self, block: Block, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n();
        let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.apply_block(block, &e);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        let k = self.kernel(block);
        let kn = norm(k);
        for i in 0..n {
            m[(i, n)] = k[i] / kn;
            m[(n, i)] = k[i] / kn;
        }
        let mut rhs = DVector::<f64>::zeros(n + 1);
        let dx = self.grid.dx();
        let mut bb = b.to_vec();
        remove_component(&mut bb, k, dx);
        for i in 0..n {
            rhs[i] = bb[i];
        }
        let sol = m.lu().solve(&rhs).ok_or(Error::NoConvergence { residual: f64::INFINITY, iterations: 0 })?;
        Ok(sol.iter().take(n).copied().collect())
    }

    /// Smallest `<S g, g> / ||g||_{H^1}^2` over the constrained complement,
    /// by Lanczos on the `H^1`-symmetrized operator in each block.
    pub fn coercivity_floor(&self, constraints: Constraints) -> Result<f64> {
        let p = &self.profile;
        let xphi: Vec<f64> = self.grid.x().iter().zip(&p.phi).map(|(x, v)| x * v).collect();
        let (plus, minus): (Vec<&[f64]>, Vec<&[f64]>) = match constraints {
            Constraints::Standard => (vec![&p.dphi, &p.dphi_domega], vec![&p.phi]),
            Constraints::Alternative => (vec![&xphi, &p.phi], vec![&p.dphi_domega]),
            Constraints::Mass => (vec![&p.dphi, &p.phi], vec![&p.phi]),
            Constraints::None => (vec![], vec![]),
        };
        let a = self.block_floor(Block::Plus, &plus)?;
        let b = self.block_floor(Block::Minus, &minus)?;
        Ok(a.min(b))
    }

    fn block_floor(&self, block: Block, constraints: &[&[f64]]) -> Result<f64> {
        let grid = &self.grid;
        let w = |u: &[f64]| -> Vec<f64> {
            let c: Vec<C64> = u.iter().map(|&r| C64::new(r, 0.0)).collect();
            grid.multiplier(&c, |k| C64::new((1.0 + k * k).powf(-0.5), 0.0)).into_iter().map(|z| z.re).collect()
        };
        // Orthonormal constraint directions in the transformed variable h = W^{-1} g.
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for c in constraints {
            let mut v = w(c);
            for b in &basis {
                let d = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(a, &q)| *a -= d * q);
            }
            let nv = norm(&v);
            if nv == 0.0 {
                return Err(Error::SingularGram);
            }
            v.iter_mut().for_each(|a| *a /= nv);
            basis.push(v);
        }
        let project = |v: &mut Vec<f64>| {
            for b in &basis {
                let d = dot(v, b);
                v.iter_mut().zip(b).for_each(|(a, &q)| *a -= d * q);
            }
        };
        let op = |h: &[f64]| -> Vec<f64> {
            let mut v = h.to_vec();
            project(&mut v);
            let mut r = w(&self.apply_block(block, &w(&v)));
            project(&mut r);
            r
        };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = grid.x();
        // Smooth random start so the iteration begins near the low spectrum.
        let mut q: Vec<f64> =
            x.iter().map(|&xi| (-(xi * xi) / 50.0).exp() * (1.0 + 0.5 * rng.random::<f64>())).collect();
        project(&mut q);
        let nq = norm(&q);
        q.iter_mut().for_each(|a| *a /= nq);
        lanczos_min(op, q, project, 400, 1e-11)
    }

    /// Residuals of the kernel and generalized-kernel identities.
    pub fn identity_residuals(&self) -> Result<IdentityResiduals> {
        let p = &self.profile;
        let phi = p.phi_field();
        let dphi = p.dphi_field();
        let dom = p.domega_field();
        let ixphi2 = ComplexField::from_imag(&self.grid, &self.grid.x().iter().zip(&p.phi).map(|(x, v)| 0.5 * x * v).collect::<Vec<_>>());
        let s_dphi = self.apply(&dphi)?.norm_l2() / dphi.norm_l2();
        let s_iphi = self.apply(&phi.scale(I))?.norm_l2() / phi.norm_l2();
        let s_dom = self.apply(&dom)?.add(&phi)?.norm_l2() / phi.norm_l2();
        let s_xphi = self.apply(&ixphi2)?.add(&dphi.scale(I))?.norm_l2() / dphi.norm_l2();
        Ok(IdentityResiduals { s_dphi, s_iphi, s_domega_plus_phi: s_dom, s_ixphi_half_plus_idphi: s_xphi })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityResiduals {
    /// `||S phi'|| / ||phi'||`
    pub s_dphi: f64,
    /// `||S(i phi)|| / ||phi||`
    pub s_iphi: f64,
    /// `||S d_omega phi + phi|| / ||phi||`
    pub s_domega_plus_phi: f64,
    /// `||S(i x phi / 2) + i phi'|| / ||phi'||`
    pub s_ixphi_half_plus_idphi: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn kernel_component(u: &[f64], k: &[f64], dx: f64) -> f64 {
    dot(u, k) * dx / (norm(k) * dx.sqrt())
}

/// Removes the `k` component of `u`; returns the coefficient `<u,k>/<k,k>`.
fn remove_component(u: &mut [f64], k: &[f64], _dx: f64) -> f64 {
    let c = dot(u, k) / dot(k, k);
    u.iter_mut().zip(k).for_each(|(a, &b)| *a -= c * b);
    c
}

/// Preconditioned MINRES for symmetric (possibly indefinite) `A` with an SPD
/// preconditioner `M^{-1}`. Returns `(x, iterations, preconditioned residual estimate)`.
pub fn minres(
    a: impl Fn(&[f64]) -> Vec<f64>,
    m_inv: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize, f64) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = m_inv(&r1);
    let beta1 = dot(&r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return (x, 0, 0.0);
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut itn = 0;
    while itn < max_iter {
        itn += 1;
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|&t| s * t).collect();
        y = a(&v);
        if itn >= 2 {
            let c = beta / oldb;
            y.iter_mut().zip(&r1).for_each(|(t, &r)| *t -= c * r);
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        y.iter_mut().zip(&r2).for_each(|(t, &r)| *t -= c * r);
        r1 = std::mem::replace(&mut r2, y.clone());
        y = m_inv(&r2);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, w.clone());
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        if phibar <= tol * beta1 || beta == 0.0 {
            break;
        }
    }
    (x, itn, phibar / beta1)
}

/// Smallest Ritz value of a symmetric operator restricted by `project`,
/// Lanczos with full reorthogonalization.
fn lanczos_min(
    op: impl Fn(&[f64]) -> Vec<f64>,
    q0: Vec<f64>,
    project: impl Fn(&mut Vec<f64>),
    max_steps: usize,
    tol: f64,
) -> Result<f64> {
    let mut qs: Vec<Vec<f64>> = vec![q0];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::INFINITY;
    let mut stable = 0;
    for j in 0..max_steps {
        let mut r = op(&qs[j]);
        let a = dot(&r, &qs[j]);
        alpha.push(a);
        for _ in 0..2 {
            for q in &qs {
                let d = dot(&r, q);
                r.iter_mut().zip(q).for_each(|(t, &s)| *t -= d * s);
            }
            project(&mut r);
        }
        let b = norm(&r);
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let ritz = SymmetricEigen::new(t).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if (ritz - last).abs() < tol * ritz.abs().max(1e-3) {
            stable += 1;
            if stable >= 5 {
                return Ok(ritz);
            }
        } else {
            stable = 0;
        }
        last = ritz;
        if b < 1e-14 {
            return Ok(ritz);
        }
        beta.push(b);
        qs.push(r.iter().map(|v| v / b).collect());
    }
    if last.is_finite() { Ok(last) } else { Err(Error::NoConvergence { residual: f64::NAN, iterations: max_steps }) }
}

/// Orthogonal projection onto the span of four fields under `<.,.>`.
pub struct ProjectionBasis {
    pub vectors: Vec<ComplexField>,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
}

impl ProjectionBasis {
    pub fn new(vectors: Vec<ComplexField>) -> Result<Self> {
        let m = vectors.len();
        let mut gram = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] = vectors[i].inner(&vectors[j])?;
            }
        }
        let eig = SymmetricEigen::new(gram.clone());
        let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        if !(lo > 0.0) || hi / lo > 1e12 {
            return Err(Error::SingularGram);
        }
        let gram_inv = gram.clone().try_inverse().ok_or(Error::SingularGram)?;
        Ok(Self { vectors, gram, gram_inv })
    }

    /// `{phi', i phi, d phi/d omega, i x phi}`.
    pub fn pi(profile: &SolitonProfile) -> Result<Self> {
        let g = &profile.grid;
        let xphi: Vec<f64> = g.x().iter().zip(&profile.phi).map(|(x, v)| x * v).collect();
        Self::new(vec![
            profile.dphi_field(),
            ComplexField::from_imag(g, &profile.phi),
            profile.domega_field(),
            ComplexField::from_imag(g, &xphi),
        ])
    }

    /// `{i phi', i phi, i x phi, i d phi/d omega}`.
    pub fn pi1(profile: &SolitonProfile) -> Result<Self> {
        let g = &profile.grid;
        let xphi: Vec<f64> = g.x().iter().zip(&profile.phi).map(|(x, v)| x * v).collect();
        Self::new(vec![
            ComplexField::from_imag(g, &profile.dphi),
            ComplexField::from_imag(g, &profile.phi),
            ComplexField::from_imag(g, &xphi),
            ComplexField::from_imag(g, &profile.dphi_domega),
        ])
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Expansion coefficients of the projection of `f`.
    pub fn coefficients(&self, f: &ComplexField) -> Result<Vec<f64>> {
        let mut rhs = DVector::<f64>::zeros(self.vectors.len());
        for (i, v) in self.vectors.iter().enumerate() {
            rhs[i] = f.inner(v)?;
        }
        Ok((&self.gram_inv * rhs).iter().copied().collect())
    }

    pub fn project(&self, f: &ComplexField) -> Result<ComplexField> {
        let c = self.coefficients(f)?;
        let mut out = ComplexField::zeros(f.grid());
        for (ci, v) in c.iter().zip(&self.vectors) {
            out = out.axpy(C64::new(*ci, 0.0), v)?;
        }
        Ok(out)
    }

    /// `f - project(f)`.
    pub fn complement(&self, f: &ComplexField) -> Result<ComplexField> {
        f.sub(&self.project(f)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::PolynomialNonlinearity;
    use crate::profile::solve_profile;

    fn op(n: usize, l: f64) -> LinearizedOperator {
        let g = SpectralGrid::new(n, l).unwrap();
        LinearizedOperator::new(Arc::new(solve_profile(&PolynomialNonlinearity::cubic(), 1.0, &g).unwrap()))
    }

    #[test]
    fn identities_small_grid() {
        // x phi jumps at the seam by about (L/2) e^{-L/2}; L = 50 is seam-limited
        let s = op(512, 60.0);
        let r = s.identity_residuals().unwrap();
        assert!(r.s_dphi < 1e-7 && r.s_iphi < 1e-7, "{r:?}");
        assert!(r.s_domega_plus_phi < 1e-5 && r.s_ixphi_half_plus_idphi < 1e-7, "{r:?}");
    }

    #[test]
    fn block_structure() {
        let s = op(256, 40.0);
        let g = s.grid().clone();
        let real = ComplexField::from_fn(&g, |x| C64::new((-x * x).exp() * x, 0.0));
        assert!(s.apply(&real).unwrap().im().iter().all(|v| v.abs() < 1e-12));
        let imag = real.scale(I);
        assert!(s.apply(&imag).unwrap().re().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn inversion_matches_dense() {
        let s = op(256, 40.0);
        let g = s.grid().clone();
        let f = ComplexField::from_fn(&g, |x| C64::new((-x * x / 4.0).exp() * (1.0 + 0.3 * x), (-x * x).exp() * x));
        let (u, _) = s.invert_modulo_kernel(&f).unwrap();
        let dense_re = s.solve_block_dense(Block::Plus, &f.re()).unwrap();
        let dense_im = s.solve_block_dense(Block::Minus, &f.im()).unwrap();
        let err = u
            .values()
            .iter()
            .zip(dense_re.iter().zip(&dense_im))
            .map(|(z, (a, b))| (z.re - a).abs().max((z.im - b).abs()))
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn generalized_kernel_inverses() {
        let s = op(512, 50.0);
        let p = s.profile.clone();
        let g = s.grid().clone();
        // S^{-1}(-phi) = d_omega phi modulo phi'
        let (u, _) = s.invert_modulo_kernel(&p.phi_field().scale_re(-1.0)).unwrap();
        let err = u.sub(&p.domega_field()).unwrap().norm_l2() / p.domega_field().norm_l2();
        assert!(err < 1e-5, "{err}");
        // S^{-1}(-i phi') = i x phi / 2 modulo i phi
        let (u, _) = s.invert_modulo_kernel(&p.dphi_field().scale(-I)).unwrap();
        let target: Vec<f64> = g.x().iter().zip(&p.phi).map(|(x, v)| 0.5 * x * v).collect();
        let err = u.im().iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
        assert!(s.invert_projected(&ComplexField::zeros(&g)).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn rejects_kernel_rhs() {
        let s = op(256, 40.0);
        let f = s.profile.dphi_field();
        assert!(matches!(s.invert_projected(&f), Err(Error::NotOrthogonal(..))));
    }

    #[test]
    fn coercivity_signs() {
        let s = op(512, 50.0);
        assert!(s.coercivity_floor(Constraints::Alternative).unwrap() > 0.0);
        assert!(s.coercivity_floor(Constraints::Mass).unwrap() > 0.0);
        assert!(s.coercivity_floor(Constraints::None).unwrap() < 0.0);
        // L+ keeps a negative direction on {phi', d_omega phi}^perp; for the cubic at
        // omega = 1 the L2 Rayleigh minimum there is about -0.193 (dense eigensolve).
        assert!(s.coercivity_floor(Constraints::Standard).unwrap() < -0.1);
    }

    #[test]
    fn projector_properties() {
        let s = op(256, 40.0);
        let b = ProjectionBasis::pi(&s.profile).unwrap();
        let g = s.grid().clone();
        let f = ComplexField::from_fn(&g, |x| C64::new((-x * x).exp(), (-(x - 1.0).powi(2)).exp()));
        let p = b.project(&f).unwrap();
        let pp = b.project(&p).unwrap();
        assert!(pp.sub(&p).unwrap().norm_l2() < 1e-10);
        let c = b.complement(&f).unwrap();
        assert!(b.project(&c).unwrap().norm_l2() < 1e-10);
        let inside = b.vectors[2].add(&b.vectors[3].scale_re(0.5)).unwrap();
        assert!(b.project(&inside).unwrap().sub(&inside).unwrap().norm_l2() < 1e-10);
    }
}
