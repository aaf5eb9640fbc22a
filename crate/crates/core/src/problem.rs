//! Problem definition: `u_tt - u_xx + u + eps^2 u^3 = 0` on a periodic interval.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Pure real function of one variable, shareable across worker threads.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Smooth periodic data `phi = cos x + cos 2x`, `gamma = sin x` on `[0, 2 pi]`.
pub const PRESET_TORUS: &str = "paper-4.1";
/// Localised pulse `phi = 2 / (e^{x^2} + e^{-x^2})`, `gamma = 0` for the whole-space runs.
pub const PRESET_PULSE: &str = "paper-5.1";

/// An NKGE instance: domain, nonlinearity strength, long-time exponent and initial data.
#[derive(Clone)]
pub struct ProblemSpec {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub beta: f64,
    pub phi: ScalarFn,
    pub gamma: ScalarFn,
    pub label: String,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("eps", &self.eps)
            .field("beta", &self.beta)
            .field("label", &self.label)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        a: f64,
        b: f64,
        eps: f64,
        beta: f64,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let spec = ProblemSpec {
            a,
            b,
            eps,
            beta,
            phi: Arc::new(phi),
            gamma: Arc::new(gamma),
            label: "custom".to_string(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Named initial data on an explicit domain.
    pub fn preset(name: &str, a: f64, b: f64, eps: f64, beta: f64) -> Result<Self> {
        let mut spec = match name {
            PRESET_TORUS => ProblemSpec::new(a, b, eps, beta, |x| x.cos() + (2.0 * x).cos(), f64::sin)?,
            PRESET_PULSE => ProblemSpec::new(
                a,
                b,
                eps,
                beta,
                |x| 2.0 / ((x * x).exp() + (-x * x).exp()),
                |_| 0.0,
            )?,
            other => return Err(Error::config(format!("unknown initial-data preset '{other}'"))),
        };
        spec.label = name.to_string();
        Ok(spec)
    }

    /// Named initial data on its natural domain: `[0, 2 pi]` for the periodic
    /// preset, `[-pad - eps^-beta, pad + eps^-beta]` for the pulse.
    pub fn preset_on_default_domain(name: &str, eps: f64, beta: f64, pad: f64) -> Result<Self> {
        let (a, b) = match name {
            PRESET_TORUS => (0.0, 2.0 * PI),
            PRESET_PULSE => crate::oscillatory::truncate_whole_space(eps, beta, pad)?,
            other => return Err(Error::config(format!("unknown initial-data preset '{other}'"))),
        };
        ProblemSpec::preset(name, a, b, eps, beta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::config(format!("eps must lie in (0, 1], got {}", self.eps)));
        }
        if !(0.0..=2.0).contains(&self.beta) {
            return Err(Error::config(format!("beta must lie in [0, 2], got {}", self.beta)));
        }
        if !(self.a < self.b) {
            return Err(Error::config(format!("invalid domain [{}, {}]", self.a, self.b)));
        }
        Ok(())
    }

    /// Coefficient `eps^2` of the cubic term.
    pub fn eps2(&self) -> f64 {
        self.eps * self.eps
    }

    /// Long-time horizon `T0 * eps^-beta`.
    pub fn horizon(&self, t0: f64) -> f64 {
        t0 * self.eps.powf(-self.beta)
    }

    /// The equivalent small-data problem `w = eps u`: unit nonlinearity,
    /// initial data `(eps phi, eps gamma)`. Its solution is `eps` times the
    /// solution of `self`.
    pub fn small_data_form(&self) -> ProblemSpec {
        let eps = self.eps;
        let phi = self.phi.clone();
        let gamma = self.gamma.clone();
        ProblemSpec {
            a: self.a,
            b: self.b,
            eps: 1.0,
            beta: self.beta,
            phi: Arc::new(move |x| eps * phi(x)),
            gamma: Arc::new(move |x| eps * gamma(x)),
            label: format!("{}-small-data", self.label),
        }
    }
}

/// `F(v) = v^4 / 4`.
pub fn eval_f(v: f64) -> f64 {
    let v2 = v * v;
    0.25 * v2 * v2
}

/// `G(v, w) = (F(v) - F(w)) / (v - w)` in factored form `(v + w)(v^2 + w^2) / 4`;
/// equals `v^3` on the diagonal.
pub fn eval_g(v: f64, w: f64) -> f64 {
    0.25 * (v + w) * (v * v + w * w)
}

/// `dG/dv = (3 v^2 + 2 v w + w^2) / 4`.
pub(crate) fn eval_g_dv(v: f64, w: f64) -> f64 {
    0.25 * (3.0 * v * v + 2.0 * v * w + w * w)
}

/// Maps a sampled solution of the weak-nonlinearity problem to `w = eps u`.
pub fn rescale_small_data(spec: &ProblemSpec, u_solution: &GridFunction) -> GridFunction {
    u_solution.scaled(spec.eps)
}
