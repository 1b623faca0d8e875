//! Periodic spectral grid on `[-L/2, L/2)`, complex fields on it, norms,
//! the antisymmetrizer `Sym f(x) = f(x) - f(-x)`, soliton placement and
//! Galilean boosts.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Uniform periodic grid with cached FFT plans.
pub struct SpectralGrid {
    n: usize,
    length: f64,
    dx: f64,
    x: Vec<f64>,
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid").field("n", &self.n).field("length", &self.length).finish()
    }
}

impl SpectralGrid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Self>> {
        if n < 256 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 256")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("length = {length}")));
        }
        let dx = length / n as f64;
        let x = (0..n).map(|j| -0.5 * length + j as f64 * dx).collect();
        let k = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * m / length
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n,
            length,
            dx,
            x,
            k,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    /// Wavenumbers `2 pi m / L` in FFT order; the Nyquist entry is `+pi/dx`.
    pub fn k(&self) -> &[f64] {
        &self.k
    }
    /// Index of the sample at `x = 0`.
    pub fn center(&self) -> usize {
        self.n / 2
    }

    /// Forward transform in place (unnormalized).
    pub fn fft(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
    }

    /// Inverse transform in place, normalized so that `ifft(fft(u)) = u`.
    pub fn ifft(&self, buf: &mut [C64]) {
        self.inv.process(buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }

    /// Applies the Fourier multiplier `m(k)` to `u`.
    pub fn multiplier(&self, u: &[C64], m: impl Fn(f64) -> C64) -> Vec<C64> {
        let mut buf = u.to_vec();
        self.fft(&mut buf);
        for (z, &k) in buf.iter_mut().zip(&self.k) {
            *z *= m(k);
        }
        self.ifft(&mut buf);
        buf
    }

    /// `d^order u / dx^order`; odd orders drop the Nyquist mode.
    pub fn derivative(&self, u: &[C64], order: u32) -> Vec<C64> {
        let nyq = self.k[self.n / 2];
        self.multiplier(u, |k| {
            if order % 2 == 1 && k == nyq {
                C64::new(0.0, 0.0)
            } else {
                (I * k).powu(order)
            }
        })
    }

    pub fn derivative_real(&self, u: &[f64], order: u32) -> Vec<f64> {
        let c: Vec<C64> = u.iter().map(|&r| C64::new(r, 0.0)).collect();
        self.derivative(&c, order).into_iter().map(|z| z.re).collect()
    }

    /// Band-limited translate `u(x - z)`.
    pub fn shift(&self, u: &[C64], z: f64) -> Vec<C64> {
        if z == 0.0 {
            return u.to_vec();
        }
        let nyq = self.k[self.n / 2];
        self.multiplier(u, |k| if k == nyq { C64::new((k * z).cos(), 0.0) } else { C64::from_polar(1.0, -k * z) })
    }

    pub fn shift_real(&self, u: &[f64], z: f64) -> Vec<f64> {
        let c: Vec<C64> = u.iter().map(|&r| C64::new(r, 0.0)).collect();
        self.shift(&c, z).into_iter().map(|z| z.re).collect()
    }

    /// Index reflection `j -> -j (mod n)` about `x = 0`, i.e. samples of `u(-x)`.
    pub fn reflect<T: Copy>(&self, u: &[T]) -> Vec<T> {
        let n = self.n;
        let c = self.center();
        (0..n).map(|j| u[(2 * c + n - j) % n]).collect()
    }
}

/// Complex samples on a shared grid.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Arc<SpectralGrid>,
    values: Vec<C64>,
}

impl ComplexField {
    pub fn new(grid: &Arc<SpectralGrid>, values: Vec<C64>) -> Self {
        assert_eq!(values.len(), grid.n(), "sample count must match the grid");
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self::new(grid, vec![C64::new(0.0, 0.0); grid.n()])
    }

    pub fn from_fn(grid: &Arc<SpectralGrid>, f: impl Fn(f64) -> C64) -> Self {
        Self::new(grid, grid.x().iter().map(|&x| f(x)).collect())
    }

    pub fn from_real(grid: &Arc<SpectralGrid>, re: &[f64]) -> Self {
        Self::new(grid, re.iter().map(|&r| C64::new(r, 0.0)).collect())
    }

    pub fn from_imag(grid: &Arc<SpectralGrid>, im: &[f64]) -> Self {
        Self::new(grid, im.iter().map(|&r| C64::new(0.0, r)).collect())
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
            || (self.grid.n == other.grid.n && self.grid.length == other.grid.length)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) { Ok(()) } else { Err(Error::GridMismatch) }
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }
    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.im).collect()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&z| f(z)).collect() }
    }

    /// Pointwise `f(x_j, u_j)`.
    pub fn map_x(&self, f: impl Fn(f64, C64) -> C64) -> Self {
        let values = self.grid.x().iter().zip(&self.values).map(|(&x, &z)| f(x, z)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        self.check(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }
    /// `self + s * other`.
    pub fn axpy(&self, s: C64, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + s * b)
    }
    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }
    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }
    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn derivative(&self, order: u32) -> Self {
        Self { grid: self.grid.clone(), values: self.grid.derivative(&self.values, order) }
    }

    /// `u(x - z)`, band-limited.
    pub fn shift(&self, z: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.grid.shift(&self.values, z) }
    }

    /// Samples of `u(-x)`.
    pub fn reflect(&self) -> Self {
        Self { grid: self.grid.clone(), values: self.grid.reflect(&self.values) }
    }

    /// `Sym u (x) = u(x) - u(-x)`.
    pub fn sym(&self) -> Self {
        let r = self.grid.reflect(&self.values);
        let values = self.values.iter().zip(&r).map(|(&a, &b)| a - b).collect();
        Self { grid: self.grid.clone(), values }
    }

    /// `||u(x) + u(-x)|| / ||u||` (0 for odd fields).
    /// `(u(x) - u(-x)) / 2`.
    pub fn odd_part(&self) -> Self {
        self.sym().scale_re(0.5)
    }

    pub fn oddness_residual(&self) -> f64 {
        let nrm = self.norm_l2();
        if nrm == 0.0 {
            return 0.0;
        }
        let r = self.grid.reflect(&self.values);
        let s: f64 = self.values.iter().zip(&r).map(|(&a, &b)| (a + b).norm_sqr()).sum();
        (s * self.grid.dx).sqrt() / nrm
    }

    /// `<u, w> = Re sum u conj(w) dx`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check(other)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &Self) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
        s * self.grid.dx
    }

    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx).sqrt()
    }

    /// `L^2` norm computed in Fourier space (Plancherel).
    pub fn norm_l2_fourier(&self) -> f64 {
        self.norm_hm(0.0)
    }

    /// `H^m` norm with the multiplier `(1 + k^2)^{m/2}`.
    pub fn norm_hm(&self, m: f64) -> f64 {
        let mut buf = self.values.clone();
        self.grid.fft(&mut buf);
        let s: f64 = buf.iter().zip(self.grid.k()).map(|(z, &k)| (1.0 + k * k).powf(m) * z.norm_sqr()).sum();
        (s * self.grid.dx / self.grid.n as f64).sqrt()
    }

    pub fn norm_h1(&self) -> f64 {
        self.norm_hm(1.0)
    }

    /// Weighted Sobolev norm: `H^m` in Fourier space when `l = 0`, otherwise
    /// `(sum_{j<=m} ||(1+x^2)^{l/2} d^j u||^2)^{1/2}`.
    pub fn norm_weighted(&self, m: u32, l: f64) -> f64 {
        if l == 0.0 {
            return self.norm_hm(m as f64);
        }
        let mut total = 0.0;
        for j in 0..=m {
            let d = if j == 0 { self.values.clone() } else { self.grid.derivative(&self.values, j) };
            total += d
                .iter()
                .zip(self.grid.x())
                .map(|(z, &x)| (1.0 + x * x).powf(l) * z.norm_sqr())
                .sum::<f64>()
                * self.grid.dx;
        }
        total.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Galilean boost `u(x - v t) e^{i(v x/2 - v^2 t/4)}` with a band-limited shift.
    pub fn galilean(&self, v: f64, t: f64) -> Result<Self> {
        let shifted = self.shift(v * t);
        check_edge(&shifted.values, self.max_abs())?;
        Ok(shifted.map_x(|x, z| z * C64::from_polar(1.0, 0.5 * v * x - 0.25 * v * v * t)))
    }
}

/// Soliton placement parameters `(zeta, v, gamma, omega)` plus the
/// frequency-modulation amplitude `f_omega` multiplying `d phi / d omega`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub zeta: f64,
    pub v: f64,
    pub gamma: f64,
    pub omega: f64,
    #[serde(default)]
    pub f_omega: f64,
}

impl SolitonParams {
    pub fn new(zeta: f64, v: f64, gamma: f64, omega: f64) -> Self {
        Self { zeta, v, gamma, omega, f_omega: 0.0 }
    }

    /// Placement phase `v/2 (x - zeta/2) + gamma`.
    pub fn phase(&self, x: f64) -> f64 {
        0.5 * self.v * (x - 0.5 * self.zeta) + self.gamma
    }

    pub fn is_valid(&self) -> bool {
        self.omega > 0.0
            && [self.zeta, self.v, self.gamma, self.omega, self.f_omega].iter().all(|v| v.is_finite())
    }
}

const EDGE_TOL: f64 = 1e-10;

fn check_edge(values: &[C64], scale: f64) -> Result<()> {
    let edge = values[0].norm();
    let limit = EDGE_TOL * scale.max(f64::MIN_POSITIVE);
    if edge > limit { Err(Error::WrapAround { edge, limit }) } else { Ok(()) }
}

/// `e^{i(v/2)(x - zeta/2) + i gamma} f(x - zeta)` for samples `f` centered at 0.
pub fn place(f: &[C64], p: &SolitonParams, grid: &Arc<SpectralGrid>) -> Result<ComplexField> {
    let shifted = grid.shift(f, p.zeta);
    let scale = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    check_edge(&shifted, scale)?;
    Ok(place_shifted(shifted, p, grid))
}

/// Placement without the wrap-around check.
pub fn place_unchecked(f: &[C64], p: &SolitonParams, grid: &Arc<SpectralGrid>) -> ComplexField {
    place_shifted(grid.shift(f, p.zeta), p, grid)
}

fn place_shifted(shifted: Vec<C64>, p: &SolitonParams, grid: &Arc<SpectralGrid>) -> ComplexField {
    let values = shifted
        .into_iter()
        .zip(grid.x())
        .map(|(z, &x)| z * C64::from_polar(1.0, p.phase(x)))
        .collect();
    ComplexField::new(grid, values)
}

pub fn place_real(f: &[f64], p: &SolitonParams, grid: &Arc<SpectralGrid>) -> Result<ComplexField> {
    let c: Vec<C64> = f.iter().map(|&r| C64::new(r, 0.0)).collect();
    place(&c, p, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn grid_basics() {
        let g = SpectralGrid::new(256, 40.0).unwrap();
        assert_eq!(g.x()[g.center()], 0.0);
        assert!((g.dx() - 40.0 / 256.0).abs() < 1e-15);
        assert!(SpectralGrid::new(100, 1.0).is_err());
        assert!(SpectralGrid::new(128, 1.0).is_err());
    }

    #[test]
    fn sech_norm_and_plancherel() {
        let g = SpectralGrid::new(1024, 80.0).unwrap();
        let u = ComplexField::from_fn(&g, |x| C64::new(sech(x), 0.0));
        assert!((u.norm_l2() - 2f64.sqrt()).abs() < 1e-12);
        assert!((u.norm_l2() - u.norm_l2_fourier()).abs() < 1e-12);
        assert_eq!(ComplexField::zeros(&g).norm_h1(), 0.0);
        // int sech^2 + (sech tanh)^2 = 2 + 2/3
        assert!((u.norm_h1() - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((u.norm_weighted(1, 0.0) - u.norm_h1()).abs() < 1e-14);
    }

    #[test]
    fn inner_identities() {
        let g = SpectralGrid::new(512, 60.0).unwrap();
        let phi = ComplexField::from_fn(&g, |x| C64::new(sech(x), 0.0));
        let iphi = phi.scale(I);
        assert!(phi.inner(&iphi).unwrap().abs() < 1e-15);
        assert!((phi.inner(&phi).unwrap() - phi.norm_l2().powi(2)).abs() < 1e-13);
        assert!(phi.derivative(1).inner(&phi).unwrap().abs() < 1e-13);
    }

    #[test]
    fn sym_cases() {
        let g = SpectralGrid::new(512, 80.0).unwrap();
        let even = ComplexField::from_fn(&g, |x| C64::new(sech(x), 0.3 * sech(2.0 * x)));
        assert!(even.sym().max_abs() < 1e-15);
        let odd = ComplexField::from_fn(&g, |x| C64::new(x * sech(x), (x).tanh() * sech(x)));
        let s = odd.sym();
        let diff = s.sub(&odd.scale_re(2.0)).unwrap();
        assert!(diff.max_abs() < 1e-14);
    }

    #[test]
    fn placement_cases() {
        let g = SpectralGrid::new(1024, 80.0).unwrap();
        let f: Vec<f64> = g.x().iter().map(|&x| sech(x)).collect();
        let same = place_real(&f, &SolitonParams::new(0.0, 0.0, 0.0, 1.0), &g).unwrap();
        assert!(same.re().iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-14));
        let neg = place_real(&f, &SolitonParams::new(0.0, 0.0, PI, 1.0), &g).unwrap();
        assert!(neg.add(&same).unwrap().max_abs() < 1e-14);
        let moved = place_real(&f, &SolitonParams::new(10.0, 0.2, 0.0, 1.0), &g).unwrap();
        let err = moved
            .values()
            .iter()
            .zip(g.x())
            .map(|(z, &x)| (z.norm() - sech(x - 10.0)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!(matches!(
            place_real(&f, &SolitonParams::new(38.0, 0.0, 0.0, 1.0), &g),
            Err(Error::WrapAround { .. })
        ));
    }

    #[test]
    fn galilean_cases() {
        let g = SpectralGrid::new(512, 60.0).unwrap();
        let u = ComplexField::from_fn(&g, |x| C64::new(sech(x), 0.1 * sech(x) * x.tanh()));
        assert!(u.galilean(0.0, 3.0).unwrap().sub(&u).unwrap().max_abs() < 1e-14);
        let ramp = u.galilean(0.4, 0.0).unwrap();
        assert!(ramp.values().iter().zip(u.values()).all(|(a, b)| (a.norm() - b.norm()).abs() < 1e-14));
        assert!((ramp.norm_l2() - u.norm_l2()).abs() < 1e-13);
    }
}
