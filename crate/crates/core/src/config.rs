//! JSON run configuration shared by the experiments and the CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ansatz::CorrectionSource;
use crate::error::{Error, Result};
use crate::evolve::Scheme;
use crate::field::SpectralGrid;
use crate::nonlinearity::PolynomialNonlinearity;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<std::sync::Arc<SpectralGrid>> {
        SpectralGrid::new(self.n, self.length)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub scheme: Scheme,
    /// Spacing of conserved / half-line samples.
    pub sample_every: f64,
    /// Spacing of modulation fits (a multiple of `sample_every`).
    pub fit_every: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_start: None, t_end: None, scheme: Scheme::Yoshida4, sample_every: 0.05, fit_every: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observer {
    Conserved,
    HalfLine,
    Modulation,
    Snapshots,
}

/// Initial data for the `evolve` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// One moving soliton centered at `zeta0`.
    Boosted { zeta0: f64, v: f64, #[serde(default)] gamma0: f64 },
    /// The antisymmetric two-soliton ansatz at time `t`.
    TwoSoliton { t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Extra separation (in units of `1/sqrt(omega)`) added to the
    /// interaction-smallness separation when preparing collisions.
    pub separation_margin: f64,
    /// Minimum separation `d sqrt(omega)` for modulation tracking.
    pub fit_separation: f64,
    /// Monotonicity slack for `M+` between samples.
    pub m_plus_slack: f64,
    /// Multiplier on the surrogate bound in the modulation rate check.
    pub rate_tolerance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { separation_margin: 5.0, fit_separation: 5.0, m_plus_slack: 1e-8, rate_tolerance: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `(power, coefficient)` pairs of `F(s)`, `s = |u|^2`; the PDE term is `F'(|u|^2) u`.
    pub nonlinearity: Vec<(u32, f64)>,
    pub omega: f64,
    pub v: Option<f64>,
    pub v_list: Option<Vec<f64>>,
    pub order: u8,
    pub correction_source: CorrectionSource,
    pub grid: Option<GridConfig>,
    pub time: TimeConfig,
    pub observers: Vec<Observer>,
    pub initial: Option<InitialData>,
    /// Orbital window: initial half separation (default `16 ln(1/v) / sqrt(omega)`).
    pub zeta0: Option<f64>,
    /// Orbital window: `H^1` size of the odd perturbation.
    pub perturbation: f64,
    /// Orbital window length (default `20 / v`).
    pub window: Option<f64>,
    /// Run the numerical refinement in `ansatz-residual`.
    pub refine: bool,
    pub seed: u64,
    /// Snapshot file read by the `fit` subcommand.
    pub input: Option<std::path::PathBuf>,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nonlinearity: vec![(2, 1.0)],
            omega: 1.0,
            v: None,
            v_list: None,
            order: 0,
            correction_source: CorrectionSource::default(),
            grid: None,
            time: TimeConfig::default(),
            observers: vec![Observer::Conserved, Observer::HalfLine, Observer::Modulation],
            initial: None,
            zeta0: None,
            perturbation: 1e-6,
            window: None,
            refine: true,
            seed: 0,
            input: None,
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.f()?;
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::Config(format!("omega must be positive, got {}", self.omega)));
        }
        for v in self.v.iter().chain(self.v_list.iter().flatten()) {
            if !(*v > 0.0 && *v < 1.0) {
                return Err(Error::Config(format!("speeds must lie in (0, 1), got {v}")));
            }
        }
        if self.order > 1 {
            return Err(Error::Config(format!("order must be 0 or 1, got {}", self.order)));
        }
        if !(self.time.dt > 0.0) || !(self.time.sample_every >= self.time.dt) || !(self.time.fit_every >= self.time.sample_every) {
            return Err(Error::Config("need 0 < dt <= sample_every <= fit_every".into()));
        }
        if let Some(g) = &self.grid {
            g.build()?;
        }
        Ok(())
    }

    pub fn f(&self) -> Result<PolynomialNonlinearity> {
        PolynomialNonlinearity::new(&self.nonlinearity)
    }

    pub fn speed(&self) -> Result<f64> {
        self.v.ok_or_else(|| Error::Config("missing `v`".into()))
    }

    pub fn speeds(&self) -> Result<Vec<f64>> {
        match (&self.v_list, self.v) {
            (Some(l), _) if l.len() >= 3 => Ok(l.clone()),
            (Some(l), _) => Err(Error::Config(format!("v_list needs at least 3 speeds, got {}", l.len()))),
            (None, _) => Err(Error::Config("missing `v_list`".into())),
        }
    }

    pub fn has(&self, o: Observer) -> bool {
        self.observers.contains(&o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = RunConfig::from_json(r#"{"omega": 2.0, "v": 0.2, "grid": {"n": 1024, "L": 60}, "time": {"dt": 0.002}}"#).unwrap();
        assert_eq!(c.nonlinearity, vec![(2, 1.0)]);
        assert_eq!(c.time.scheme, Scheme::Yoshida4);
        assert_eq!(c.grid.unwrap().n, 1024);
        let q = RunConfig::from_json(r#"{"nonlinearity": [[2, 1.0], [3, 0.0333]], "time": {"scheme": "strang"}}"#).unwrap();
        assert_eq!(q.f().unwrap().degree(), 3);
        assert_eq!(q.time.scheme, Scheme::Strang);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_json(r#"{"omega": -1}"#).unwrap_err().is_config());
        assert!(RunConfig::from_json(r#"{"nonlinearity": [[1, 1.0]]}"#).unwrap_err().is_config());
        assert!(RunConfig::from_json(r#"{"grid": {"n": 1000, "L": 10}}"#).unwrap_err().is_config());
        assert!(RunConfig::from_json(r#"{"omgea": 1}"#).unwrap_err().is_config());
        assert!(RunConfig::from_json("not json").unwrap_err().is_config());
    }
}
