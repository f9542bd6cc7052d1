//! File formats: orbit JSON, branch/event CSV, classification JSON, run
//! configuration. Output is deterministic: identical inputs produce identical
//! bytes; CSV numbers carry 17 significant digits, '.' decimals, ',' field
//! separators, and '\n' line endings.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bvp::RotatingOrbit;
use crate::choreography::{OrbitClass, ResonanceLabel};
use crate::continuation::{Branch, ResonanceHit};
use crate::lattice::LatticeParams;
use crate::{Error, Result};

pub const FORMAT_VERSION: &str = "dnls-orbit-1";

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// 17-significant-digit decimal form that round-trips `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// On-disk orbit representation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitFile {
    pub version: String,
    pub params: LatticeParams,
    pub mesh: Vec<f64>,
    pub degree: usize,
    /// Point values, each a flat `[x_1, y_1, …, x_n, y_n]` row.
    pub coeffs: Vec<Vec<f64>>,
    #[serde(rename = "T")]
    pub t_period: f64,
    pub p1: f64,
    pub p2: f64,
    pub xn0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_k: Option<usize>,
}

impl From<&RotatingOrbit> for OrbitFile {
    fn from(o: &RotatingOrbit) -> Self {
        OrbitFile {
            version: FORMAT_VERSION.into(),
            params: o.params,
            mesh: o.mesh.clone(),
            degree: o.degree,
            coeffs: o.points.iter().map(|p| p.as_slice().to_vec()).collect(),
            t_period: o.t_period,
            p1: o.p1,
            p2: o.p2,
            xn0: o.xn0,
            mode_k: o.mode_k,
        }
    }
}

impl OrbitFile {
    pub fn into_orbit(self) -> Result<RotatingOrbit> {
        let dim = 2 * self.params.n;
        let n_int = self.mesh.len().saturating_sub(1);
        if n_int < 1 || self.coeffs.len() != n_int * self.degree + 1 {
            return Err(Error::Format {
                path: "<orbit>".into(),
                detail: format!(
                    "{} coefficient rows for {} intervals of degree {}",
                    self.coeffs.len(),
                    n_int,
                    self.degree
                ),
            });
        }
        let mut points = Vec::with_capacity(self.coeffs.len());
        for row in &self.coeffs {
            if row.len() != dim {
                return Err(Error::Format {
                    path: "<orbit>".into(),
                    detail: format!("coefficient row of length {} (need {dim})", row.len()),
                });
            }
            points.push(nalgebra::DVector::from_vec(row.clone()));
        }
        Ok(RotatingOrbit {
            params: self.params,
            mesh: self.mesh,
            degree: self.degree,
            points,
            t_period: self.t_period,
            p1: self.p1,
            p2: self.p2,
            xn0: self.xn0,
            mode_k: self.mode_k,
        })
    }
}

pub fn orbit_to_json(orbit: &RotatingOrbit) -> String {
    serde_json::to_string_pretty(&OrbitFile::from(orbit)).expect("orbit serialization")
}

pub fn orbit_from_json(s: &str) -> Result<RotatingOrbit> {
    let file: OrbitFile = serde_json::from_str(s).map_err(|e| Error::Format {
        path: "<orbit json>".into(),
        detail: e.to_string(),
    })?;
    file.into_orbit()
}

pub fn write_orbit(path: &Path, orbit: &RotatingOrbit) -> Result<()> {
    std::fs::write(path, orbit_to_json(orbit)).map_err(|e| io_err(path, e))
}

pub fn read_orbit(path: &Path) -> Result<RotatingOrbit> {
    let s = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    orbit_from_json(&s).map_err(|e| match e {
        Error::Format { detail, .. } => Error::Format {
            path: path.display().to_string(),
            detail,
        },
        other => other,
    })
}

pub const BRANCH_CSV_HEADER: &str =
    "step,s,a,T,T0,ratio,E,A,xn0,p1,p2,n_unstable,stability_flag";

/// Branch monitor CSV (one line per branch point plus the header line).
pub fn branch_to_csv(branch: &Branch) -> String {
    let mut out = String::from(BRANCH_CSV_HEADER);
    out.push('\n');
    for (i, p) in branch.points.iter().enumerate() {
        let m = &p.monitors;
        let (nu, flag) = match &m.stability {
            Some(s) => (s.n_unstable.to_string(), s.class.flag().to_string()),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            i,
            fmt_f64(p.arclength),
            fmt_f64(m.a),
            fmt_f64(m.t_period),
            fmt_f64(m.t0),
            fmt_f64(m.ratio),
            fmt_f64(m.energy),
            fmt_f64(m.amplitude_norm),
            fmt_f64(m.xn0),
            fmt_f64(m.p1),
            fmt_f64(m.p2),
            nu,
            flag,
        ));
    }
    out
}

pub fn write_branch_csv(path: &Path, branch: &Branch) -> Result<()> {
    std::fs::write(path, branch_to_csv(branch)).map_err(|e| io_err(path, e))
}

/// Resonance events CSV: `ell,m,orbit` rows pointing at orbit files.
pub fn write_events_csv(path: &Path, events: &[(ResonanceHit, String)]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut s = String::from("ell,m,orbit\n");
    for (hit, orbit_path) in events {
        s.push_str(&format!("{},{},{}\n", hit.ell, hit.m, orbit_path));
    }
    f.write_all(s.as_bytes()).map_err(|e| io_err(path, e))
}

/// Classification record of one located orbit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationFile {
    #[serde(rename = "type")]
    pub kind: String,
    pub curves: usize,
    pub winding: i64,
    pub residual: f64,
    pub symmetry_error: f64,
    pub label: ResonanceLabel,
}

impl ClassificationFile {
    pub fn new(
        class: OrbitClass,
        n: usize,
        winding: i64,
        residual: f64,
        symmetry_error: f64,
        label: ResonanceLabel,
    ) -> Self {
        let (kind, curves) = match class {
            OrbitClass::Full => ("Full".to_string(), 1),
            OrbitClass::Partial { curves } => ("Partial".to_string(), curves),
        };
        let _ = n;
        ClassificationFile {
            kind,
            curves,
            winding,
            residual,
            symmetry_error,
            label,
        }
    }
}

pub fn write_classification(path: &Path, c: &ClassificationFile) -> Result<()> {
    let s = serde_json::to_string_pretty(c).expect("classification serialization");
    std::fs::write(path, s).map_err(|e| io_err(path, e))
}

/// Stability tolerances of a run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub tol_unit: f64,
    pub tol_stab: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            tol_unit: crate::floquet::TOL_UNIT_DEFAULT,
            tol_stab: crate::floquet::TOL_STAB_DEFAULT,
        }
    }
}

/// Mesh/Newton settings of a run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n_intervals: usize,
    pub degree: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_intervals: 100,
            degree: 4,
            tol: 1e-10,
            max_iter: 10,
        }
    }
}

/// Stepper settings of a run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepConfig {
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_steps: usize,
    #[serde(default)]
    pub adapt_every: usize,
    /// Weight of the period in the arclength metric (1.0 = plain).
    #[serde(default = "default_period_weight")]
    pub period_metric_weight: f64,
}

fn default_period_weight() -> f64 {
    1.0
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            ds0: 0.01,
            ds_min: 1e-6,
            ds_max: 0.05,
            max_steps: 2000,
            adapt_every: 0,
            period_metric_weight: 1.0,
        }
    }
}

/// One resonance target of a run: locate `ℓ:m` on the main branch, then
/// optionally continue with the ratio locked to the listed amplitudes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonanceTarget {
    pub ell: i64,
    pub m: i64,
    #[serde(default)]
    pub lock_a_targets: Vec<f64>,
}

/// Mode selection for the starting stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelect {
    Scan,
    K(usize),
}

/// Full pipeline configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    #[serde(default = "default_alpha")]
    pub alpha: usize,
    pub mode_k: ModeSelect,
    pub a_init: f64,
    /// Starter amplitude; `None` uses `1e-4 · a_init`.
    #[serde(default)]
    pub eps: Option<f64>,
    pub xn0_target: f64,
    /// Direction of the main (amplitude) continuation: +1 or −1.
    #[serde(default = "default_direction")]
    pub main_direction: f64,
    /// Amplitude bounds halting the main continuation.
    #[serde(default)]
    pub a_min: Option<f64>,
    #[serde(default)]
    pub a_max: Option<f64>,
    #[serde(default)]
    pub resonances: Vec<ResonanceTarget>,
    #[serde(default = "default_max_den")]
    pub max_den: i64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub continuation: StepConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
    /// Verification length (periods) for located stable orbits.
    #[serde(default = "default_verify_periods")]
    pub verify_periods: usize,
    /// Marked presets are excluded from gating checks.
    #[serde(default)]
    pub aspirational: bool,
    #[serde(default)]
    pub out_dir: Option<String>,
}

fn default_alpha() -> usize {
    1
}
fn default_direction() -> f64 {
    1.0
}
fn default_max_den() -> i64 {
    32
}
fn default_verify_periods() -> usize {
    100
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Config(format!("n = {} below 3", self.n)));
        }
        if self.alpha == 0 || self.alpha > self.n {
            return Err(Error::Config(format!("alpha = {} outside 1..=n", self.alpha)));
        }
        if !(self.a_init > 0.0) {
            return Err(Error::Config(format!("a_init = {} must be positive", self.a_init)));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return Err(Error::Config(format!("eps = {e} must be positive")));
            }
        }
        if self.main_direction != 1.0 && self.main_direction != -1.0 {
            return Err(Error::Config("main_direction must be +1 or -1".into()));
        }
        if self.solver.n_intervals < 4 || !(1..=7).contains(&self.solver.degree) {
            return Err(Error::Config(format!(
                "solver mesh {}x{} out of range",
                self.solver.n_intervals, self.solver.degree
            )));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::Config("solver tolerance/iterations invalid".into()));
        }
        if !(self.continuation.ds_min > 0.0)
            || self.continuation.ds_min > self.continuation.ds_max
            || self.continuation.ds0 > self.continuation.ds_max
            || self.continuation.ds0 < self.continuation.ds_min
        {
            return Err(Error::Config("step sizes must satisfy ds_min <= ds0 <= ds_max".into()));
        }
        if self.max_den < 1 {
            return Err(Error::Config(format!("max_den = {}", self.max_den)));
        }
        for r in &self.resonances {
            if r.m <= 0 {
                return Err(Error::Config(format!("resonance {}:{} has m <= 0", r.ell, r.m)));
            }
            if crate::continuation::gcd(r.ell.unsigned_abs(), r.m as u64) != 1 {
                return Err(Error::Config(format!("resonance {}:{} not coprime", r.ell, r.m)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::polygonal_equilibrium;

    #[test]
    fn orbit_json_roundtrip_is_exact() {
        let params = LatticeParams::from_dispersion(5, 0.37, 1).unwrap();
        let eq = polygonal_equilibrium(5, 0.37, 1).unwrap();
        let mut orbit = crate::bvp::RotatingOrbit::constant(params, &eq, 7, 3, 12.345).unwrap();
        orbit.p1 = 1e-13;
        orbit.xn0 = eq.0[8];
        orbit.mode_k = Some(2);
        let json = orbit_to_json(&orbit);
        let back = orbit_from_json(&json).unwrap();
        assert_eq!(back.t_period, orbit.t_period);
        assert_eq!(back.p1, orbit.p1);
        assert_eq!(back.mesh, orbit.mesh);
        assert_eq!(back.mode_k, Some(2));
        for (a, b) in back.points.iter().zip(orbit.points.iter()) {
            assert_eq!(a, b);
        }
        // monitors agree exactly after the round trip
        let m0 = orbit.monitors();
        let m1 = back.monitors();
        assert_eq!(m0.energy, m1.energy);
        assert_eq!(m0.ratio, m1.ratio);
    }

    #[test]
    fn branch_csv_shape() {
        let params = LatticeParams::from_dispersion(3, 0.3, 3).unwrap();
        let eq = polygonal_equilibrium(3, 0.3, 3).unwrap();
        let orbit = crate::bvp::RotatingOrbit::constant(params, &eq, 4, 2, 1.0).unwrap();
        let branch = Branch {
            points: (0..5)
                .map(|i| crate::continuation::BranchPoint::new(orbit.clone(), i as f64))
                .collect(),
            constraint_stage: "test".into(),
            status: crate::continuation::BranchStatus::MaxSteps,
        };
        let csv = branch_to_csv(&branch);
        let lines: Vec<&str> = csv.trim_end().split('\n').collect();
        assert_eq!(lines.len(), branch.points.len() + 1);
        assert_eq!(lines[0], BRANCH_CSV_HEADER);
        // determinism
        assert_eq!(csv, branch_to_csv(&branch));
    }

    #[test]
    fn config_validation_rejects_unbalanced_input() {
        let good = r#"{
            "n": 9, "mode_k": {"k": 1}, "a_init": 0.4, "xn0_target": -0.04,
            "resonances": [{"ell": 1, "m": 10}]
        }"#;
        let cfg = RunConfig::from_json(good).unwrap();
        assert_eq!(cfg.alpha, 1);
        assert_eq!(cfg.max_den, 32);

        let bad = r#"{"n": 2, "mode_k": "scan", "a_init": 0.4, "xn0_target": -0.04}"#;
        assert!(RunConfig::from_json(bad).is_err());

        let bad_res = r#"{
            "n": 9, "mode_k": "scan", "a_init": 0.4, "xn0_target": -0.04,
            "resonances": [{"ell": 4, "m": 10}]
        }"#;
        assert!(RunConfig::from_json(bad_res).is_err());
    }
}
