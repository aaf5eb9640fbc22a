//! The oscillatory form `eps^{2 beta} v_ss - v_xx + v + eps^2 v^3 = 0` in the
//! rescaled time `s = eps^beta t`.
//!
//! The schemes are the standard kernels with `mass = eps^{2 beta}` and step `k`.

use crate::error::{Error, Result};
use crate::grid::{Grid1D, GridFunction};
use crate::problem::ProblemSpec;
use crate::schemes::{self, SchemeKind, SolverParams, StepperState};

/// Default half-width padding of the truncated whole-space domain.
pub const DEFAULT_PAD: f64 = 4.0;

/// A problem viewed in rescaled time. The initial velocity in `s` is
/// `eps^-beta gamma`.
#[derive(Debug, Clone)]
pub struct OscProblemSpec {
    pub base: ProblemSpec,
}

impl OscProblemSpec {
    pub fn new(base: ProblemSpec) -> Self {
        OscProblemSpec { base }
    }

    /// `eps^{2 beta}`.
    pub fn mass(&self) -> f64 {
        self.base.eps.powf(2.0 * self.base.beta)
    }

    /// Oscillatory step matching the standard step `tau`.
    pub fn step_for(&self, tau: f64) -> f64 {
        tau * self.base.eps.powf(self.base.beta)
    }

    /// Standard time corresponding to rescaled time `s`.
    pub fn standard_time(&self, s: f64) -> f64 {
        s * self.base.eps.powf(-self.base.beta)
    }
}

/// Symmetric truncation `(-pad - eps^-beta, pad + eps^-beta)` of the real line.
pub fn truncate_whole_space(eps: f64, beta: f64, pad: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::config(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(pad >= 0.0 && pad.is_finite()) {
        return Err(Error::config(format!("padding must be finite and >= 0, got {pad}")));
    }
    let half = pad + eps.powf(-beta);
    Ok((-half, half))
}

/// Whether the sine-regularised first step is used when not configured.
pub fn default_regularized(eps: f64, beta: f64) -> bool {
    eps <= 0.25 && beta >= 1.0
}

/// Initial levels `v^0 = phi` and `v^1`. Unregularised, `v^1` is the Taylor
/// step with coefficients `(k eps^-beta, k^2 eps^-2beta)`; regularised, they
/// become `(sin(k eps^-beta), k sin(k eps^-2beta))`.
pub fn osc_first_step(
    spec: &OscProblemSpec,
    g: &Grid1D,
    k: f64,
    regularized: bool,
) -> Result<(GridFunction, GridFunction)> {
    if !(k > 0.0) {
        return Err(Error::config(format!("oscillatory step must be positive, got {k}")));
    }
    let base = &spec.base;
    let inv = base.eps.powf(-base.beta);
    let (a, b) = if regularized {
        ((k * inv).sin(), k * (k * inv * inv).sin())
    } else {
        (k * inv, (k * inv) * (k * inv))
    };
    let (v0, v1) = schemes::taylor_first_step(base, g, a, b, base.eps2());
    if !v1.is_finite() {
        return Err(Error::BlowUp {
            step: 1,
            max_abs: f64::INFINITY,
        });
    }
    Ok((v0, v1))
}

/// Stepper for the oscillatory form, positioned after the first step.
pub fn osc_stepper(
    spec: &OscProblemSpec,
    scheme: SchemeKind,
    g: Grid1D,
    k: f64,
    regularized: bool,
    solver: SolverParams,
) -> Result<StepperState> {
    let (v0, v1) = osc_first_step(spec, &g, k, regularized)?;
    StepperState::new(scheme, g, k, spec.mass(), spec.base.eps2(), v0, v1, 1, solver)
}

/// One oscillatory step from `state` (which must carry `mass = eps^{2 beta}`).
pub fn osc_step(state: &mut StepperState) -> Result<GridFunction> {
    state.next_level()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{PRESET_PULSE, PRESET_TORUS};
    use std::f64::consts::PI;

    fn torus(eps: f64, beta: f64) -> OscProblemSpec {
        OscProblemSpec::new(ProblemSpec::preset(PRESET_TORUS, 0.0, 2.0 * PI, eps, beta).unwrap())
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate_whole_space(1.0, 1.0, 4.0).unwrap(), (-5.0, 5.0));
        for eps in [1.0, 0.5, 0.01] {
            assert_eq!(truncate_whole_space(eps, 0.0, 4.0).unwrap(), (-5.0, 5.0));
        }
        assert_eq!(truncate_whole_space(0.25, 2.0, 4.0).unwrap(), (-20.0, 20.0));
        assert!(truncate_whole_space(0.0, 1.0, 4.0).is_err());
    }

    #[test]
    fn regularization_default() {
        assert!(default_regularized(0.25, 1.0));
        assert!(!default_regularized(0.5, 2.0));
        assert!(!default_regularized(0.1, 0.0));
    }

    #[test]
    fn beta_zero_first_step_is_standard() {
        let spec = torus(0.7, 0.0);
        let g = Grid1D::new(0.0, 2.0 * PI, 16).unwrap();
        let (a0, a1) = osc_first_step(&spec, &g, 0.05, false).unwrap();
        let (b0, b1) = schemes::first_step(&spec.base, &g, 0.05).unwrap();
        assert_eq!(a0, b0);
        assert_eq!(a1, b1);
    }

    #[test]
    fn zero_data_first_step() {
        let base = ProblemSpec::new(0.0, 1.0, 0.5, 1.0, |_| 0.0, |_| 0.0).unwrap();
        let g = Grid1D::new(0.0, 1.0, 8).unwrap();
        for reg in [false, true] {
            let (v0, v1) = osc_first_step(&OscProblemSpec::new(base.clone()), &g, 0.01, reg).unwrap();
            assert_eq!(v0.max_abs() + v1.max_abs(), 0.0);
        }
    }

    #[test]
    fn unregularized_first_step_is_substitution() {
        let spec = torus(0.5, 1.0);
        let g = Grid1D::new(0.0, 2.0 * PI, 32).unwrap();
        let (_, v1) = osc_first_step(&spec, &g, 0.01, false).unwrap();
        let (_, u1) = schemes::first_step(&spec.base, &g, 0.02).unwrap();
        assert!(v1.max_abs_diff(&u1) <= 1e-15);
    }

    #[test]
    fn unit_eps_step_is_standard() {
        let spec = torus(1.0, 2.0);
        let g = Grid1D::new(0.0, 2.0 * PI, 16).unwrap();
        for scheme in SchemeKind::ALL {
            let mut osc = osc_stepper(&spec, scheme, g, 0.05, false, SolverParams::default()).unwrap();
            let mut std = StepperState::from_problem(&spec.base, scheme, g, 0.05, SolverParams::default()).unwrap();
            assert_eq!(osc_step(&mut osc).unwrap(), std.next_level().unwrap());
        }
    }

    #[test]
    fn pulse_domain_follows_truncation() {
        let p = ProblemSpec::preset_on_default_domain(PRESET_PULSE, 0.25, 2.0, DEFAULT_PAD).unwrap();
        assert_eq!((p.a, p.b), (-20.0, 20.0));
    }
}
