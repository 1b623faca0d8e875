//! Polynomial nonlinearities `F(s) = sum_j c_j s^j` (j >= 2) and the
//! ground-state existence test on `T_omega(y) = -omega y^2/2 + F(y^2)/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `F(s) = sum c_j s^j` over `s = |u|^2`, with every power at least 2 so that
/// `F(0) = F'(0) = 0`. The PDE term is `F'(|u|^2) u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialNonlinearity {
    /// `(power, coefficient)` pairs, sorted by power, no duplicates.
    terms: Vec<(u32, f64)>,
}

impl PolynomialNonlinearity {
    pub fn new(terms: &[(u32, f64)]) -> Result<Self> {
        let mut sorted: Vec<(u32, f64)> = Vec::with_capacity(terms.len());
        for &(p, c) in terms {
            if p < 2 {
                return Err(Error::InvalidNonlinearity(format!(
                    "power {p} < 2 would break F(0) = F'(0) = 0"
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidNonlinearity(format!("coefficient {c} for power {p}")));
            }
            match sorted.iter_mut().find(|(q, _)| *q == p) {
                Some(t) => t.1 += c,
                None => sorted.push((p, c)),
            }
        }
        sorted.retain(|&(_, c)| c != 0.0);
        if sorted.is_empty() {
            return Err(Error::InvalidNonlinearity("all coefficients vanish".into()));
        }
        sorted.sort_by_key(|t| t.0);
        Ok(Self { terms: sorted })
    }

    /// `F(s) = s^2`, i.e. the cubic equation `i u_t + u_xx + 2|u|^2 u = 0`.
    pub fn cubic() -> Self {
        Self { terms: vec![(2, 1.0)] }
    }

    /// The nonlinearity with `F'(s) = a s + b s^2`.
    pub fn cubic_quintic(a: f64, b: f64) -> Result<Self> {
        Self::new(&[(2, a / 2.0), (3, b / 3.0)])
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.last().map(|t| t.0).unwrap_or(0)
    }

    /// `F`, `F'` or `F''` at `s`.
    pub fn eval(&self, s: f64, order: u8) -> f64 {
        // Horner over the dense coefficient list of the differentiated polynomial.
        let deg = self.degree() as usize;
        let mut dense = vec![0.0; deg + 1];
        for &(p, c) in &self.terms {
            dense[p as usize] = c;
        }
        for _ in 0..order {
            for j in 0..dense.len() - 1 {
                dense[j] = dense[j + 1] * (j + 1) as f64;
            }
            dense.pop();
            if dense.is_empty() {
                return 0.0;
            }
        }
        dense.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn f(&self, s: f64) -> f64 {
        self.terms.iter().map(|&(p, c)| c * s.powi(p as i32)).sum()
    }

    pub fn fp(&self, s: f64) -> f64 {
        self.terms.iter().map(|&(p, c)| c * p as f64 * s.powi(p as i32 - 1)).sum()
    }

    pub fn fpp(&self, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(p, c)| c * (p * (p - 1)) as f64 * s.powi(p as i32 - 2))
            .sum()
    }

    /// `F(s)/s`, exact near `s = 0`.
    pub fn f_over_s(&self, s: f64) -> f64 {
        self.terms.iter().map(|&(p, c)| c * s.powi(p as i32 - 1)).sum()
    }

    /// `T_omega(y) = -omega y^2 / 2 + F(y^2) / 2`.
    pub fn t_omega(&self, omega: f64, y: f64) -> f64 {
        -0.5 * omega * y * y + 0.5 * self.f(y * y)
    }

    /// `T_omega'(y) = -omega y + F'(y^2) y`.
    pub fn t_omega_prime(&self, omega: f64, y: f64) -> f64 {
        -omega * y + self.fp(y * y) * y
    }

    /// Default upper bound for the root scan.
    pub fn default_y_max(&self, omega: f64) -> f64 {
        let cmin = self
            .terms
            .iter()
            .filter(|t| t.1 > 0.0)
            .map(|t| t.1)
            .fold(f64::INFINITY, f64::min);
        if cmin.is_finite() { 10.0 * (omega / cmin).sqrt().max(1.0) } else { 10.0 * omega.sqrt().max(1.0) }
    }

    /// Smallest positive root of `T_omega` with the slope and positivity checks.
    pub fn check_existence(&self, omega: f64, y_max: Option<f64>) -> Result<ExistenceCheck> {
        if !(omega > 0.0) {
            return Err(Error::Config(format!("omega must be positive, got {omega}")));
        }
        let y_max = y_max.unwrap_or_else(|| self.default_y_max(omega));
        const SCAN: usize = 10_000;
        let h = y_max / SCAN as f64;
        let t = |y: f64| self.t_omega(omega, y);
        let mut bracket = None;
        let mut prev = t(h);
        for j in 2..=SCAN {
            let y = j as f64 * h;
            let cur = t(y);
            if prev < 0.0 && cur >= 0.0 {
                bracket = Some((y - h, y));
                break;
            }
            prev = cur;
        }
        let (mut lo, mut hi) = bracket.ok_or(Error::NoRoot { y_max })?;
        while hi - lo > 1e-14 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if t(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let y0 = 0.5 * (lo + hi);
        let slope = self.t_omega_prime(omega, y0);
        if slope <= 1e-10 {
            return Err(Error::DegenerateRoot { y0, slope });
        }
        let first_negative = (1..=SCAN)
            .map(|j| y0 + (y_max - y0) * j as f64 / SCAN as f64)
            .find(|&y| t(y) <= 0.0);
        let (satisfied, reason) = match first_negative {
            None => (true, format!("T(y0)=0 at y0={y0}, T'(y0)={slope:e}, T>0 on (y0, {y_max}]")),
            Some(y) => (false, format!("T_omega is not positive at y={y} > y0")),
        };
        Ok(ExistenceCheck { omega, y0, y_max, slope, satisfied, reason })
    }
}

/// Outcome of [`PolynomialNonlinearity::check_existence`].
#[derive(Clone, Debug, Serialize)]
pub struct ExistenceCheck {
    pub omega: f64,
    pub y0: f64,
    pub y_max: f64,
    /// `T_omega'(y0)`.
    pub slope: f64,
    pub satisfied: bool,
    pub reason: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_orders() {
        let f = PolynomialNonlinearity::cubic();
        assert_eq!(f.eval(2.0, 1), 4.0);
        assert_eq!(f.eval(0.0, 0), 0.0);
        let g = PolynomialNonlinearity::cubic_quintic(2.0, 1.0).unwrap();
        assert!((g.eval(1.0, 1) - 3.0).abs() < 1e-14);
        assert!((g.fp(1.0) - 3.0).abs() < 1e-14);
        assert!((g.eval(0.7, 2) - g.fpp(0.7)).abs() < 1e-14);
        assert!((g.eval(0.7, 3) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_linear_terms() {
        assert!(PolynomialNonlinearity::new(&[(1, 1.0)]).is_err());
        assert!(PolynomialNonlinearity::new(&[(2, 0.0)]).is_err());
    }

    #[test]
    fn cubic_roots() {
        let f = PolynomialNonlinearity::cubic();
        let e = f.check_existence(1.0, None).unwrap();
        assert!((e.y0 - 1.0).abs() < 1e-12 && e.satisfied);
        assert!((e.slope - 1.0).abs() < 1e-10);
        let e = f.check_existence(4.0, None).unwrap();
        assert!((e.y0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn defocusing_has_no_root() {
        let f = PolynomialNonlinearity::new(&[(2, -1.0)]).unwrap();
        assert!(matches!(f.check_existence(1.0, None), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn cubic_quintic_root_is_closed_form() {
        // T = 0  <=>  omega = a/2 y^2 + b/3 y^4
        let (a, b, w) = (2.0, 0.1, 1.0);
        let f = PolynomialNonlinearity::cubic_quintic(a, b).unwrap();
        let s = (-(a / 2.0) + ((a / 2.0).powi(2) + 4.0 * b / 3.0 * w).sqrt()) / (2.0 * b / 3.0);
        let e = f.check_existence(w, None).unwrap();
        assert!((e.y0 - s.sqrt()).abs() < 1e-12);
    }
}
