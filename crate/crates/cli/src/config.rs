//! Run configuration read from a single JSON file.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use subshock::hetero::{MAX_EPSILON, MIN_EPSILON};
use subshock::{Error, ModelSpec, WaveProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndStates {
    pub u_minus: f64,
    pub u_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Half-length of the collocation domain.
    #[serde(rename = "L")]
    pub half_length: Option<f64>,
    pub mesh_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    #[serde(default = "default_cells")]
    pub n_cells: usize,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: f64,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    #[serde(default)]
    pub second_order: bool,
}

fn default_cells() -> usize {
    4096
}

fn default_t_final() -> f64 {
    20.0
}

fn default_snapshot_every() -> f64 {
    1.0
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            n_cells: default_cells(),
            t_final: default_t_final(),
            snapshot_every: default_snapshot_every(),
            x_min: None,
            x_max: None,
            second_order: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcConfig {
    /// `u₊ − u₋`; taken from the end states when absent.
    pub delta: Option<f64>,
    pub mesh_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "ModelSpec::hamer")]
    pub model: ModelSpec,
    pub end_states: EndStates,
    pub epsilon: Option<f64>,
    pub eps_list: Option<Vec<f64>>,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub pde: PdeConfig,
    #[serde(default)]
    pub bifurc: BifurcConfig,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    /// The end-state problem with the Lax condition enforced.
    pub fn problem(&self) -> Result<WaveProblem, Error> {
        self.model.validate()?;
        WaveProblem::admissible(self.model, self.end_states.u_minus, self.end_states.u_plus)
    }

    pub fn epsilon(&self) -> Result<f64, Error> {
        let e = self.epsilon.ok_or_else(|| Error::InvalidInput("config needs `epsilon`".into()))?;
        check_epsilon(e)?;
        Ok(e)
    }

    pub fn eps_list(&self) -> Result<Vec<f64>, Error> {
        let list = self.eps_list.clone().ok_or_else(|| Error::InvalidInput("config needs `eps_list`".into()))?;
        if list.is_empty() {
            return Err(Error::InvalidInput("eps_list is empty".into()));
        }
        for &e in &list {
            check_epsilon(e)?;
        }
        if list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidInput("eps_list must be strictly descending".into()));
        }
        Ok(list)
    }

    /// Validation shared by every subcommand.
    pub fn validate(&self) -> Result<(), Error> {
        self.problem()?;
        if let Some(e) = self.epsilon {
            check_epsilon(e)?;
        }
        if self.eps_list.is_some() {
            self.eps_list()?;
        }
        if let Some(l) = self.domain.half_length {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidInput(format!("domain.L must be positive, got {l}")));
            }
        }
        if let Some(n) = self.domain.mesh_size {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidInput(format!("domain.mesh_size must be even and >= 4, got {n}")));
            }
        }
        let p = &self.pde;
        if !(p.t_final >= 0.0 && p.t_final.is_finite()) || !(p.snapshot_every > 0.0) {
            return Err(Error::InvalidInput("pde.t_final must be >= 0 and pde.snapshot_every > 0".into()));
        }
        if let Some(d) = self.bifurc.delta {
            if !(d < 0.0 && d.is_finite()) {
                return Err(Error::InvalidInput(format!("bifurc.delta must be negative, got {d}")));
            }
        }
        Ok(())
    }
}

fn check_epsilon(e: f64) -> Result<(), Error> {
    if !(MIN_EPSILON..=MAX_EPSILON).contains(&e) {
        return Err(Error::InvalidInput(format!("epsilon must lie in [{MIN_EPSILON}, {MAX_EPSILON}], got {e}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = RunConfig::parse(r#"{"end_states": {"u_minus": 1.0, "u_plus": -1.0}}"#).unwrap();
        assert!(c.model.is_hamer());
        assert_eq!(c.pde.n_cells, 4096);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = RunConfig::parse(r#"{"end_states": {"u_minus": 1.0, "u_plus": -1.0}, "speed": 2}"#);
        assert!(e.is_err());
        let e = RunConfig::parse(r#"{"end_states": {"u_minus": 1.0, "u_plus": -1.0, "c": 0}}"#);
        assert!(e.is_err());
    }

    #[test]
    fn model_block() {
        let c = RunConfig::parse(
            r#"{"model": {"flux": {"kind": "quadratic", "a": 1.0, "b": 0.0},
                          "coupling": {"kind": "power_plus_linear", "kappa": 0.2, "m": 3}},
                "end_states": {"u_minus": 1.0, "u_plus": -1.0}}"#,
        )
        .unwrap();
        assert!(!c.model.is_hamer());
    }

    #[test]
    fn lax_violation() {
        let c = RunConfig::parse(r#"{"end_states": {"u_minus": -1.0, "u_plus": 1.0}}"#).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("Lax"));
    }
}
