//! Run-wide configuration: big-M constants, tolerances, caps, solver knobs.

use serde::{Deserialize, Serialize};
use std::path::Path;

/// Environment variable pointing at a JSON config file.
pub const CONFIG_ENV: &str = "LTL_LEARN_CONFIG";

/// All numeric knobs in one place. Loaded from JSON, overridable per field;
/// every encoding reads its constants from here.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Big-M for indicator rows coupling geometry to binaries.
    pub m: f64,
    /// Strictness slack in the AP indicator encoding, in (0, 1).
    pub m_eps: f64,
    /// Bound on all Lagrange multiplier variables.
    pub m_lambda: f64,
    /// Realization of strict inequalities (`> 0` becomes `>= eps_strict`).
    pub eps_strict: f64,
    /// Minimum separation when blocking a rejected cost-weight vector.
    pub eps_av: f64,
    /// Half-width of the band around zero within which a constraint value
    /// is treated as "on the boundary" when parameters are numeric.
    pub boundary_eps: f64,
    /// Margin guarding float equality in the counterexample cost test.
    pub cex_margin: f64,
    /// Salient spec-optimality indices keep `|G| <= salient_eps` (needs nominals).
    pub salient_eps: f64,
    /// Maximum constraint violation tolerated by the post-solve audit.
    pub audit_tol: f64,
    /// Inner falsification iterations per DAG size.
    pub inner_cap: usize,
    /// Outer cost-proposal iterations for the unknown-cost loop.
    pub outer_cap: usize,
    /// Largest DAG size tried before giving up.
    pub n_dag_max: usize,
    /// Wall-clock limit per solver call, seconds.
    pub time_limit: Option<f64>,
    /// Solver backend key; only "highs" is built in.
    pub backend: String,
    /// Threads per solver call (1 keeps runs deterministic).
    pub solver_threads: u32,
    /// Random seed handed to the backend.
    pub seed: i32,
    /// MIP relative gap; 0 demands proven optima.
    pub mip_rel_gap: f64,
    /// MIP absolute gap.
    pub mip_abs_gap: f64,
    /// Outer-approximation convergence: absolute gap.
    pub oa_abs_tol: f64,
    /// Outer-approximation convergence: relative gap.
    pub oa_rel_tol: f64,
    /// Outer-approximation iteration cap.
    pub oa_max_iter: usize,
    /// Cap on parallel jobs (0 = rayon default).
    pub jobs: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            m: 1e3,
            m_eps: 0.5,
            m_lambda: 1e3,
            eps_strict: 1e-4,
            eps_av: 0.05,
            boundary_eps: 1e-4,
            cex_margin: 1e-6,
            salient_eps: 0.05,
            audit_tol: 1e-5,
            inner_cap: 50,
            outer_cap: 20,
            n_dag_max: 16,
            time_limit: None,
            backend: "highs".to_owned(),
            solver_threads: 1,
            seed: 0,
            mip_rel_gap: 0.0,
            mip_abs_gap: 0.0,
            oa_abs_tol: 1e-7,
            oa_rel_tol: 1e-9,
            oa_max_iter: 400,
            jobs: 0,
        }
    }
}

impl Config {
    pub fn from_json_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(ConfigError::Parse)
    }

    /// Config from `LTL_LEARN_CONFIG` if set, defaults otherwise.
    pub fn from_env() -> Result<Self, ConfigError> {
        match std::env::var(CONFIG_ENV) {
            Ok(p) => Self::from_json_file(Path::new(&p)),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.m > 0.0) {
            return Err(ConfigError::Invalid("m must be positive".into()));
        }
        if !(self.m_eps > 0.0 && self.m_eps < 1.0) {
            return Err(ConfigError::Invalid("m_eps must lie in (0, 1)".into()));
        }
        if !(self.m_lambda > 0.0) {
            return Err(ConfigError::Invalid("m_lambda must be positive".into()));
        }
        if self.backend != "highs" {
            return Err(ConfigError::Invalid(format!(
                "unknown solver backend '{}'",
                self.backend
            )));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_m_eps() {
        let cfg = Config {
            m_eps: 1.5,
            ..Config::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_unknown_backend() {
        let cfg = Config {
            backend: "cplex".into(),
            ..Config::default()
        };
        assert!(cfg.validate().is_err());
    }
}
