//! JSON scenario files.

use std::fmt;
use std::path::{Path, PathBuf};

use ncbf_core::acc::{AccParams, Barrier, Integrator};
use ncbf_core::{NcbfParams, SolverConfig, Vector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BarrierChoice {
    Ncbf,
    Hocbf,
    Both,
}

impl BarrierChoice {
    pub fn barriers(self) -> Vec<Barrier> {
        match self {
            BarrierChoice::Ncbf => vec![Barrier::Ncbf],
            BarrierChoice::Hocbf => vec![Barrier::Hocbf],
            BarrierChoice::Both => vec![Barrier::Ncbf, Barrier::Hocbf],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorChoice {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NcbfConfig {
    pub delta: f64,
    pub r: f64,
    pub d: [f64; 2],
    #[serde(rename = "K")]
    pub k: f64,
}

impl Default for NcbfConfig {
    fn default() -> Self {
        NcbfConfig { delta: 0.09, r: 0.01, d: [0.1, 0.1], k: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOverrides {
    pub tol_mu: f64,
    pub tol_residual: f64,
    pub max_iter: usize,
    pub tau: f64,
    pub init_margin: f64,
}

impl Default for SolverOverrides {
    fn default() -> Self {
        let c = SolverConfig::default();
        SolverOverrides {
            tol_mu: c.tol_mu,
            tol_residual: c.tol_residual,
            max_iter: c.max_iter,
            tau: c.tau,
            init_margin: c.init_margin,
        }
    }
}

impl From<&SolverOverrides> for SolverConfig {
    fn from(s: &SolverOverrides) -> Self {
        SolverConfig {
            tol_mu: s.tol_mu,
            tol_residual: s.tol_residual,
            max_iter: s.max_iter,
            tau: s.tau,
            init_margin: s.init_margin,
        }
    }
}

/// Plant, controller and sweep settings. Missing keys take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    #[serde(rename = "M")]
    pub m: f64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub v_f: f64,
    pub v_max: f64,
    pub v_min: f64,
    #[serde(rename = "v_T")]
    pub v_t: f64,
    pub c_a: f64,
    pub c_d: f64,
    pub g: f64,
    pub a0: f64,
    pub dt: f64,
    pub horizon: f64,
    pub chi3: f64,
    pub p: f64,
    pub ncbf: NcbfConfig,
    pub hocbf_gains: [f64; 2],
    pub integrator: IntegratorChoice,
    pub equilibrate: bool,
    pub v0_list: Vec<f64>,
    pub z0: f64,
    pub output_dir: PathBuf,
    pub barrier: BarrierChoice,
    pub solver: SolverOverrides,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let a = AccParams::default();
        ScenarioConfig {
            m: a.m,
            f0: a.f0,
            f1: a.f1,
            f2: a.f2,
            v_f: a.v_f,
            v_max: a.v_max,
            v_min: a.v_min,
            v_t: a.v_t,
            c_a: a.c_a,
            c_d: a.c_d,
            g: a.g,
            a0: a.a0,
            dt: a.dt,
            horizon: a.horizon,
            chi3: a.chi3,
            p: a.p,
            ncbf: NcbfConfig::default(),
            hocbf_gains: [a.hocbf_gains.0, a.hocbf_gains.1],
            integrator: IntegratorChoice::Euler,
            equilibrate: a.equilibrate,
            v0_list: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
            z0: 100.0,
            output_dir: PathBuf::from("out"),
            barrier: BarrierChoice::Both,
            solver: SolverOverrides::default(),
        }
    }
}

/// Invalid or unreadable configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError { field: field.into(), reason: reason.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error in `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::new("<json>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::new(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn acc_params(&self) -> AccParams {
        AccParams {
            m: self.m,
            f0: self.f0,
            f1: self.f1,
            f2: self.f2,
            v_f: self.v_f,
            v_max: self.v_max,
            v_min: self.v_min,
            v_t: self.v_t,
            c_a: self.c_a,
            c_d: self.c_d,
            g: self.g,
            a0: self.a0,
            dt: self.dt,
            horizon: self.horizon,
            chi3: self.chi3,
            p: self.p,
            ncbf: NcbfParams {
                delta: self.ncbf.delta,
                r: self.ncbf.r,
                d: Vector::from_slice(&self.ncbf.d),
                k: self.ncbf.k,
            },
            hocbf_gains: (self.hocbf_gains[0], self.hocbf_gains[1]),
            integrator: match self.integrator {
                IntegratorChoice::Euler => Integrator::Euler,
                IntegratorChoice::Rk4 => Integrator::Rk4,
            },
            equilibrate: self.equilibrate,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        (&self.solver).into()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.acc_params().validate().map_err(|e| ConfigError::new(e.field, e.reason))?;
        if self.v0_list.is_empty() {
            return Err(ConfigError::new("v0_list", "must not be empty"));
        }
        if let Some(v) = self.v0_list.iter().find(|v| !(**v >= self.v_min && **v <= self.v_max)) {
            return Err(ConfigError::new("v0_list", format!("{v} lies outside [v_min, v_max]")));
        }
        if !(self.z0 > 0.0 && self.z0.is_finite()) {
            return Err(ConfigError::new("z0", "must be finite and positive"));
        }
        let s = &self.solver;
        for (field, x) in [
            ("solver.tol_mu", s.tol_mu),
            ("solver.tol_residual", s.tol_residual),
            ("solver.init_margin", s.init_margin),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(ConfigError::new(field, "must be finite and positive"));
            }
        }
        if !(s.tau > 0.0 && s.tau < 1.0) {
            return Err(ConfigError::new("solver.tau", "must lie in (0, 1)"));
        }
        if s.max_iter == 0 {
            return Err(ConfigError::new("solver.max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ScenarioConfig::default();
        assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert_eq!(cfg.acc_params(), AccParams::default());
    }

    #[test]
    fn partial_file_takes_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"v0_list": [3.0], "ncbf": {"K": 0.5}}"#).unwrap();
        assert_eq!(cfg.v0_list, vec![3.0]);
        assert_eq!(cfg.ncbf.k, 0.5);
        assert_eq!(cfg.ncbf.delta, 0.09);
        assert_eq!(cfg.m, 1650.0);
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(ScenarioConfig::from_json(r#"{"dt": -1}"#).unwrap_err().field, "dt");
        assert_eq!(ScenarioConfig::from_json(r#"{"v0_list": []}"#).unwrap_err().field, "v0_list");
        assert_eq!(ScenarioConfig::from_json(r#"{"solver": {"tau": 1.5}}"#).unwrap_err().field, "solver.tau");
        let e = ScenarioConfig::from_json(r#"{"speed": 3}"#).unwrap_err();
        assert!(e.reason.contains("speed"));
        assert!(ScenarioConfig::from_json("{").is_err());
    }
}
