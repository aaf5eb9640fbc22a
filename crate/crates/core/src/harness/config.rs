//! Sweep configuration, read from flat TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillatory::DEFAULT_PAD;
use crate::problem::{PRESET_PULSE, PRESET_TORUS};
use crate::schemes::{LinearBackend, SchemeKind, SolverParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Standard,
    Oscillatory,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Oscillatory => "oscillatory",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Mode::Standard),
            "oscillatory" => Ok(Mode::Oscillatory),
            other => Err(Error::config(format!("unknown mode '{other}'"))),
        }
    }
}

/// Which discretisation parameter a sweep refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Refine `h` at a fixed small time step.
    Spatial,
    /// Refine the time step on a fixed fine grid.
    Temporal,
}

fn default_t0() -> f64 {
    1.0
}

fn default_pad() -> f64 {
    DEFAULT_PAD
}

fn default_factor() -> f64 {
    4.0
}

fn default_tol() -> f64 {
    SolverParams::default().tol
}

fn default_max_iter() -> usize {
    SolverParams::default().max_iter
}

fn default_backend() -> LinearBackend {
    SolverParams::default().linear_backend
}

fn default_name() -> String {
    "sweep".to_string()
}

/// One convergence study: a matrix of `eps_list x resolutions`.
///
/// `resolutions` holds mesh sizes for a spatial sweep and time steps (in the
/// sweep's own time variable) for a temporal one; `fixed` is the other
/// parameter, multiplied by `eps^fixed_eps_power` per row. The reference
/// solver always integrates the standard form, so `reference_tau` is a step in
/// the unscaled time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub scheme: SchemeKind,
    pub mode: Mode,
    pub beta: f64,
    pub eps_list: Vec<f64>,
    pub axis: Axis,
    pub resolutions: Vec<f64>,
    pub fixed: f64,
    #[serde(default)]
    pub fixed_eps_power: f64,
    #[serde(default = "default_t0")]
    pub t0: f64,
    pub preset: String,
    #[serde(default = "default_pad")]
    pub pad: f64,
    /// Sine-regularised first step for oscillatory runs; unset picks the default rule.
    pub regularized: Option<bool>,
    pub reference_h: f64,
    pub reference_tau: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_backend")]
    pub linear_backend: LinearBackend,
    /// Allowed spread of the scalability diagonal.
    #[serde(default = "default_factor")]
    pub scalability_factor: f64,
    pub output: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    /// Worker count for the parallel runner; unset uses every core.
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        SweepConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn solver(&self) -> SolverParams {
        SolverParams {
            tol: self.tol,
            max_iter: self.max_iter,
            linear_backend: self.linear_backend,
        }
    }

    /// The fixed counterpart resolution on row `eps`.
    pub fn fixed_for(&self, eps: f64) -> f64 {
        self.fixed * eps.powf(self.fixed_eps_power)
    }

    /// Final time in the sweep's own time variable.
    pub fn final_time(&self, eps: f64) -> f64 {
        match self.mode {
            Mode::Standard => self.t0 * eps.powf(-self.beta),
            Mode::Oscillatory => self.t0,
        }
    }

    /// Converts a step in the sweep's time variable to the standard time `t`.
    pub fn standard_step(&self, step: f64, eps: f64) -> f64 {
        match self.mode {
            Mode::Standard => step,
            Mode::Oscillatory => step * eps.powf(-self.beta),
        }
    }

    pub fn regularized_for(&self, eps: f64) -> bool {
        self.regularized
            .unwrap_or_else(|| crate::oscillatory::default_regularized(eps, self.beta))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(msg));
        if self.eps_list.is_empty() {
            return bad("eps_list is empty".into());
        }
        if let Some(e) = self.eps_list.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return bad(format!("eps values must lie in (0, 1], got {e}"));
        }
        if !(0.0..=2.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 2], got {}", self.beta));
        }
        if self.resolutions.is_empty() {
            return bad("resolutions is empty".into());
        }
        if self.resolutions.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("resolutions must be positive".into());
        }
        if self.resolutions.windows(2).any(|w| w[1] >= w[0]) {
            return bad("resolutions must be strictly decreasing".into());
        }
        for (name, v) in [
            ("fixed", self.fixed),
            ("t0", self.t0),
            ("reference_h", self.reference_h),
            ("reference_tau", self.reference_tau),
            ("scalability_factor", self.scalability_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.preset != PRESET_TORUS && self.preset != PRESET_PULSE {
            return bad(format!("unknown initial-data preset '{}'", self.preset));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        self.solver().validate()?;

        // The reference must be at least as fine as every sweep point.
        let finest = *self.resolutions.last().expect("non-empty");
        for &eps in &self.eps_list {
            let (h_min, step_min) = match self.axis {
                Axis::Spatial => (finest, self.fixed_for(eps)),
                Axis::Temporal => (self.fixed_for(eps), finest),
            };
            if self.reference_h > h_min * (1.0 + 1e-12) {
                return bad(format!(
                    "reference_h = {} is coarser than the sweep mesh {h_min} (eps = {eps})",
                    self.reference_h
                ));
            }
            let std_step = self.standard_step(step_min, eps);
            if self.reference_tau > std_step * (1.0 + 1e-12) {
                return bad(format!(
                    "reference_tau = {} is coarser than the sweep step {std_step} in t (eps = {eps})",
                    self.reference_tau
                ));
            }
        }
        Ok(())
    }
}
