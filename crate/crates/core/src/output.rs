//! Files written by the CLI: CSV traces, profile and snapshot exports, JSON
//! reports and the run manifest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evolve::ConservedQuantities;
use crate::experiments::{FitRow, ResidualRow, SampleRow};
use crate::field::{C64, ComplexField, SpectralGrid};
use crate::profile::SolitonProfile;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Two columns `x phi` plus `<stem>.json` with `{omega, y0, a_inf, mass, ...}`.
pub fn write_profile(dir: &Path, profile: &SolitonProfile) -> Result<Vec<PathBuf>> {
    let txt = dir.join("profile.txt");
    let mut w = BufWriter::new(File::create(&txt)?);
    for (x, p) in profile.grid.x().iter().zip(&profile.phi) {
        writeln!(w, "{x:.17e} {p:.17e}")?;
    }
    w.flush()?;
    let json = dir.join("profile.json");
    write_json(&json, &profile.meta())?;
    Ok(vec![txt, json])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub t: f64,
}

/// CSV `x,re,im` at `path` and the header next to it (`.json` extension).
pub fn write_snapshot(path: &Path, u: &ComplexField, t: f64) -> Result<()> {
    let g = u.grid();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "re", "im"])?;
    for (x, z) in g.x().iter().zip(u.values()) {
        w.write_record([format!("{x:.17e}"), format!("{:.17e}", z.re), format!("{:.17e}", z.im)])?;
    }
    w.flush()?;
    write_json(&path.with_extension("json"), &SnapshotHeader { n: g.n(), length: g.length(), t })
}

pub fn read_snapshot(path: &Path) -> Result<(ComplexField, f64)> {
    let header: SnapshotHeader = serde_json::from_reader(BufReader::new(File::open(path.with_extension("json"))?))?;
    let grid = SpectralGrid::new(header.n, header.length)?;
    let mut r = csv::Reader::from_path(path)?;
    let mut vals = Vec::with_capacity(header.n);
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("bad snapshot row {:?}", rec)))
        };
        vals.push(C64::new(num(1)?, num(2)?));
    }
    if vals.len() != header.n {
        return Err(Error::Config(format!("snapshot has {} rows, header says {}", vals.len(), header.n)));
    }
    Ok((ComplexField::new(&grid, vals), header.t))
}

/// Reads a two-column profile file back (used by tests and plotting scripts).
pub fn read_profile_text(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        let mut it = line.split_whitespace().map(|s| s.parse::<f64>());
        match (it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(p))) => out.push((x, p)),
            _ => return Err(Error::Config(format!("bad profile line {line:?}"))),
        }
    }
    Ok(out)
}

fn f(v: f64) -> String {
    format!("{v:.12e}")
}

/// Observer stream `t,H,Q,M,Q_plus,M_plus,flux,oddness_residual` (+ `H_plus`, `centroid`).
pub fn write_samples(path: &Path, rows: &[SampleRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "H", "Q", "M", "Q_plus", "M_plus", "flux", "oddness_residual", "H_plus", "centroid"])?;
    for r in rows {
        w.write_record([
            f(r.t),
            f(r.energy),
            f(r.mass),
            f(r.momentum),
            f(r.mass_plus),
            f(r.momentum_plus),
            f(r.boundary_flux),
            f(r.oddness),
            f(r.energy_plus),
            f(r.centroid),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_conserved(path: &Path, rows: &[(f64, ConservedQuantities)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "H", "Q", "M"])?;
    for (t, c) in rows {
        w.write_record([f(*t), f(c.energy), f(c.mass), f(c.momentum)])?;
    }
    w.flush()?;
    Ok(())
}

/// Modulation stream `t,p_zeta,p_v,p_gamma,p_omega,r_L2,r_H1,L,P1,P2,E` followed
/// by the fitted parameters.
pub fn write_fits(path: &Path, rows: &[FitRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "t", "p_zeta", "p_v", "p_gamma", "p_omega", "r_L2", "r_H1", "L", "P1", "P2", "E", "phase", "zeta", "v", "gamma",
        "f_omega", "fit_residual",
    ])?;
    for r in rows {
        let phase = serde_json::to_value(r.phase)?.as_str().unwrap_or_default().to_string();
        w.write_record([
            f(r.t),
            f(r.p_zeta),
            f(r.p_v),
            f(r.p_gamma),
            f(r.p_omega),
            f(r.r_l2),
            f(r.r_h1),
            f(r.l),
            f(r.p1),
            f(r.p2),
            f(r.e),
            phase,
            f(r.zeta),
            f(r.v),
            f(r.gamma),
            f(r.f_omega),
            f(r.fit_residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_residual_rows(path: &Path, rows: &[ResidualRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// SHA-256 of the canonical JSON form of the resolved config.
    pub config_hash: String,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<String>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub config: RunConfig,
}

pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(subcommand: &str, cfg: &RunConfig, threads: Option<usize>, started_unix: f64) -> Result<Self> {
        Ok(Self {
            subcommand: subcommand.into(),
            config_hash: config_hash(cfg)?,
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix,
            finished_unix: started_unix,
            outputs: Vec::new(),
            seed: cfg.seed,
            threads,
            config: cfg.clone(),
        })
    }

    /// Stamps the finish time and writes `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path, outputs: &[PathBuf]) -> Result<PathBuf> {
        self.finished_unix = unix_now();
        self.outputs = outputs
            .iter()
            .map(|p| p.strip_prefix(dir).unwrap_or(p).display().to_string())
            .collect();
        let path = dir.join("manifest.json");
        write_json(&path, &self)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::PolynomialNonlinearity;
    use crate::profile::solve_profile;

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("nlscollide-out-{name}-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn snapshot_round_trip() {
        let g = SpectralGrid::new(256, 20.0).unwrap();
        let u = ComplexField::from_fn(&g, |x| C64::new((-x * x).exp(), 0.1 * x));
        let d = tmp("snap");
        let p = d.join("u.csv");
        write_snapshot(&p, &u, 1.5).unwrap();
        let (v, t) = read_snapshot(&p).unwrap();
        assert_eq!(t, 1.5);
        assert!(u.sub(&v).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn profile_export() {
        let g = SpectralGrid::new(512, 40.0).unwrap();
        let prof = solve_profile(&PolynomialNonlinearity::cubic(), 1.0, &g).unwrap();
        let d = tmp("prof");
        write_profile(&d, &prof).unwrap();
        let rows = read_profile_text(&d.join("profile.txt")).unwrap();
        assert_eq!(rows.len(), 512);
        let meta: serde_json::Value = serde_json::from_reader(File::open(d.join("profile.json")).unwrap()).unwrap();
        assert!((meta["mass"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn hash_tracks_config() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        b.seed = 1;
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    }
}
