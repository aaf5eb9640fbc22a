//! Discrete and continuous energies, linear stability bounds and the error
//! function used by the convergence studies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dplus_into, seminorm_h1_sq, Grid1D, GridFunction};
use crate::schemes::SchemeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    CnfdDiscrete,
    Sifd1Discrete,
    Continuous,
    OscCnfdDiscrete,
    OscSifd1Discrete,
}

impl EnergyKind {
    pub fn name(self) -> &'static str {
        match self {
            EnergyKind::CnfdDiscrete => "cnfd_discrete",
            EnergyKind::Sifd1Discrete => "sifd1_discrete",
            EnergyKind::Continuous => "continuous",
            EnergyKind::OscCnfdDiscrete => "osc_cnfd_discrete",
            EnergyKind::OscSifd1Discrete => "osc_sifd1_discrete",
        }
    }

    /// The conserved discrete energy of `scheme`, if it has one.
    pub fn discrete_for(scheme: SchemeKind, oscillatory: bool) -> Option<EnergyKind> {
        match (scheme, oscillatory) {
            (SchemeKind::Cnfd, false) => Some(EnergyKind::CnfdDiscrete),
            (SchemeKind::Cnfd, true) => Some(EnergyKind::OscCnfdDiscrete),
            (SchemeKind::Sifd1, false) => Some(EnergyKind::Sifd1Discrete),
            (SchemeKind::Sifd1, true) => Some(EnergyKind::OscSifd1Discrete),
            _ => None,
        }
    }

    /// Whether the value is guaranteed nonnegative.
    pub fn is_nonnegative(self) -> bool {
        !matches!(self, EnergyKind::Sifd1Discrete | EnergyKind::OscSifd1Discrete)
    }
}

impl fmt::Display for EnergyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnergyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            EnergyKind::CnfdDiscrete,
            EnergyKind::Sifd1Discrete,
            EnergyKind::Continuous,
            EnergyKind::OscCnfdDiscrete,
            EnergyKind::OscSifd1Discrete,
        ]
        .into_iter()
        .find(|k| k.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::config(format!("unknown energy kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub n: usize,
    pub t: f64,
    pub kind: EnergyKind,
    pub value: f64,
}

fn sum_sq(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum()
}

fn sum_quartic(u: &[f64]) -> f64 {
    u.iter().map(|v| (v * v) * (v * v)).sum()
}

/// Kinetic, mass and quartic parts shared by both discrete energies.
fn common_terms(h: f64, un: &[f64], unp1: &[f64], tau: f64, eps2: f64, mass: f64) -> f64 {
    let kinetic: f64 = un
        .iter()
        .zip(unp1)
        .map(|(a, b)| {
            let d = (b - a) / tau;
            d * d
        })
        .sum();
    mass * h * kinetic + 0.5 * h * (sum_sq(un) + sum_sq(unp1)) + 0.25 * eps2 * h * (sum_quartic(un) + sum_quartic(unp1))
}

fn check_pair(g: &Grid1D, a: &GridFunction, b: &GridFunction) -> Result<()> {
    g.check(a)?;
    g.check(b)
}

/// Energy conserved by the Crank-Nicolson scheme.
pub fn energy_cnfd(g: &Grid1D, u_n: &GridFunction, u_np1: &GridFunction, tau: f64, eps2: f64, mass: f64) -> Result<f64> {
    check_pair(g, u_n, u_np1)?;
    let h = g.h();
    let (a, b) = (u_n.as_slice(), u_np1.as_slice());
    let grad = 0.5 * (seminorm_h1_sq(h, a) + seminorm_h1_sq(h, b));
    Ok(common_terms(h, a, b, tau, eps2, mass) + grad)
}

/// Energy conserved by SIFD1: the gradient term is the cross product of the two levels.
pub fn energy_sifd1(g: &Grid1D, u_n: &GridFunction, u_np1: &GridFunction, tau: f64, eps2: f64, mass: f64) -> Result<f64> {
    check_pair(g, u_n, u_np1)?;
    let h = g.h();
    let (a, b) = (u_n.as_slice(), u_np1.as_slice());
    let mut da = vec![0.0; a.len()];
    let mut db = vec![0.0; b.len()];
    dplus_into(h, a, &mut da);
    dplus_into(h, b, &mut db);
    let cross: f64 = h * da.iter().zip(&db).map(|(x, y)| x * y).sum::<f64>();
    Ok(common_terms(h, a, b, tau, eps2, mass) + cross)
}

/// Rectangle-rule quadrature of `int u_t^2 + u_x^2 + u^2 + (eps2 / 2) u^4`,
/// with the gradient taken as the forward difference.
pub fn continuous_energy(g: &Grid1D, u: &GridFunction, u_t: &GridFunction, eps2: f64) -> Result<f64> {
    check_pair(g, u, u_t)?;
    let h = g.h();
    let (a, v) = (u.as_slice(), u_t.as_slice());
    Ok(h * (sum_sq(v) + sum_sq(a) + 0.5 * eps2 * sum_quartic(a)) + seminorm_h1_sq(h, a))
}

/// Evaluates `kind` on two consecutive levels. `mass` is 1 for the standard
/// kinds; `Continuous` uses the forward difference quotient as `u_t`.
pub fn energy(kind: EnergyKind, g: &Grid1D, u_n: &GridFunction, u_np1: &GridFunction, tau: f64, eps2: f64, mass: f64) -> Result<f64> {
    match kind {
        EnergyKind::CnfdDiscrete | EnergyKind::OscCnfdDiscrete => energy_cnfd(g, u_n, u_np1, tau, eps2, mass),
        EnergyKind::Sifd1Discrete | EnergyKind::OscSifd1Discrete => energy_sifd1(g, u_n, u_np1, tau, eps2, mass),
        EnergyKind::Continuous => {
            check_pair(g, u_n, u_np1)?;
            let v = GridFunction::from_vec_unchecked(
                u_n.as_slice()
                    .iter()
                    .zip(u_np1.as_slice())
                    .map(|(a, b)| (b - a) / tau)
                    .collect(),
            );
            continuous_energy(g, u_n, &v, eps2)
        }
    }
}

/// Largest relative deviation `|E^n - E^0| / |E^0|` of a trace.
pub fn relative_drift(trace: &[EnergyReport]) -> Option<f64> {
    let first = trace.first()?.value;
    let scale = if first != 0.0 { first.abs() } else { 1.0 };
    Some(trace.iter().fold(0.0_f64, |acc, r| acc.max((r.value - first).abs() / scale)))
}

/// Linear stability bound on the time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StabilityBound {
    Unconditional,
    Bounded(f64),
}

impl StabilityBound {
    pub fn admits(self, tau: f64) -> bool {
        match self {
            StabilityBound::Unconditional => true,
            StabilityBound::Bounded(b) => tau.abs() < b,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            StabilityBound::Unconditional => None,
            StabilityBound::Bounded(b) => Some(b),
        }
    }
}

/// Step-size bound for `scheme`. With `oscillatory_beta = Some(beta)` the
/// bound applies to the oscillatory step `k` and carries the factor `eps^beta`.
pub fn stability_bound(scheme: SchemeKind, h: f64, eps: f64, sigma_max: f64, oscillatory_beta: Option<f64>) -> StabilityBound {
    let eps2 = eps * eps;
    let base = match scheme {
        SchemeKind::Cnfd => StabilityBound::Unconditional,
        SchemeKind::Sifd1 => {
            if h >= 2.0 {
                StabilityBound::Unconditional
            } else {
                StabilityBound::Bounded(2.0 * h / (4.0 - h * h).sqrt())
            }
        }
        SchemeKind::Sifd2 => {
            if eps2 * sigma_max <= 1.0 {
                StabilityBound::Unconditional
            } else {
                StabilityBound::Bounded(2.0 / (eps2 * sigma_max - 1.0).sqrt())
            }
        }
        SchemeKind::Lffd => StabilityBound::Bounded(2.0 * h / (4.0 + h * h * (1.0 + eps2 * sigma_max)).sqrt()),
    };
    match (base, oscillatory_beta) {
        (StabilityBound::Bounded(b), Some(beta)) => StabilityBound::Bounded(b * eps.powf(beta)),
        (other, _) => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub scheme: SchemeKind,
    pub bound: StabilityBound,
    pub tau: f64,
    pub stable: bool,
    pub sigma_max_used: f64,
}

pub fn stability_verdict(
    scheme: SchemeKind,
    h: f64,
    eps: f64,
    sigma_max: f64,
    oscillatory_beta: Option<f64>,
    tau: f64,
) -> StabilityVerdict {
    let bound = stability_bound(scheme, h, eps, sigma_max, oscillatory_beta);
    StabilityVerdict {
        scheme,
        bound,
        tau,
        stable: bound.admits(tau),
        sigma_max_used: sigma_max,
    }
}

/// `sqrt(||d||^2 + ||delta_x^+ d||^2)` with `d = exact - num`.
pub fn error_norm(g: &Grid1D, u_exact: &GridFunction, u_num: &GridFunction) -> Result<f64> {
    check_pair(g, u_exact, u_num)?;
    let d: Vec<f64> = u_exact.as_slice().iter().zip(u_num.as_slice()).map(|(a, b)| a - b).collect();
    let h = g.h();
    Ok((h * sum_sq(&d) + seminorm_h1_sq(h, &d)).sqrt())
}
