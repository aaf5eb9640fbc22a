//! Named sweeps mirroring the published error tables.
//!
//! Standard tables use the periodic data on `[0, 2 pi]`, oscillatory ones the
//! pulse on the truncated line. By default the deepest `eps` rows are dropped
//! (and the oscillatory tables are cut further); `full` restores them.

use std::f64::consts::PI;

use super::config::{Axis, Mode, SweepConfig};
use crate::error::{Error, Result};
use crate::oscillatory::DEFAULT_PAD;
use crate::problem::{PRESET_PULSE, PRESET_TORUS};
use crate::schemes::{SchemeKind, SolverParams};

pub const TABLE_NAMES: [&str; 10] = [
    "table-1", "table-2", "table-3", "table-4", "table-5", "table-6", "table-7", "table-8", "table-9", "table-10",
];

/// Fine mesh of the standard tables, also the reference mesh.
pub const STANDARD_H_E: f64 = PI / 2048.0;
/// Time step of the spatial sweeps and of the reference solver.
pub const STANDARD_TAU_E: f64 = 1e-4;

fn geometric(first: f64, ratio: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| first / ratio.powi(j as i32)).collect()
}

fn base(name: &str, mode: Mode, beta: f64, axis: Axis) -> SweepConfig {
    let solver = SolverParams::default();
    SweepConfig {
        name: name.to_string(),
        scheme: SchemeKind::Cnfd,
        mode,
        beta,
        eps_list: Vec::new(),
        axis,
        resolutions: Vec::new(),
        fixed: 0.0,
        fixed_eps_power: 0.0,
        t0: 1.0,
        preset: match mode {
            Mode::Standard => PRESET_TORUS,
            Mode::Oscillatory => PRESET_PULSE,
        }
        .to_string(),
        pad: DEFAULT_PAD,
        regularized: None,
        reference_h: STANDARD_H_E,
        reference_tau: STANDARD_TAU_E,
        tol: solver.tol,
        max_iter: solver.max_iter,
        linear_backend: solver.linear_backend,
        scalability_factor: 4.0,
        output: None,
        cache_dir: None,
        threads: None,
    }
}

fn standard(name: &str, beta: f64, axis: Axis, eps_ratio: f64, rows: usize) -> SweepConfig {
    let mut cfg = base(name, Mode::Standard, beta, axis);
    cfg.eps_list = geometric(1.0, eps_ratio, rows);
    match axis {
        Axis::Spatial => {
            cfg.resolutions = geometric(PI / 16.0, 2.0, 6);
            cfg.fixed = STANDARD_TAU_E;
        }
        Axis::Temporal => {
            cfg.resolutions = geometric(0.05, 2.0, 6);
            cfg.fixed = STANDARD_H_E;
        }
    }
    cfg
}

fn oscillatory(name: &str, beta: f64, axis: Axis, eps_ratio: f64, full: bool) -> SweepConfig {
    let mut cfg = base(name, Mode::Oscillatory, beta, axis);
    cfg.eps_list = geometric(1.0, eps_ratio, if full { 5 } else { 3 });
    let cols = if full { 6 } else { 4 };
    if full {
        cfg.reference_tau = 2e-6;
    }
    match axis {
        Axis::Spatial => {
            cfg.resolutions = geometric(1.0 / 8.0, 2.0, cols);
            // k_e = tau_e eps^beta keeps the temporal error at the standard level.
            cfg.fixed = STANDARD_TAU_E;
            cfg.fixed_eps_power = beta;
            cfg.reference_h = cfg.resolutions[cols - 1] / 2.0;
        }
        Axis::Temporal => {
            cfg.resolutions = geometric(0.025, 4.0, cols);
            cfg.fixed = 1.0 / 256.0;
            cfg.reference_h = cfg.fixed;
        }
    }
    cfg
}

/// The sweep named `table-N`; `full` adds the rows omitted at desk scale.
pub fn table(name: &str, full: bool) -> Result<SweepConfig> {
    let deep = |rows: usize| if full { rows + 1 } else { rows };
    let cfg = match name {
        "table-1" => standard(name, 0.0, Axis::Spatial, 2.0, 5),
        "table-2" => standard(name, 0.0, Axis::Temporal, 2.0, 5),
        "table-3" => standard(name, 1.0, Axis::Spatial, 4.0, deep(4)),
        "table-4" => standard(name, 1.0, Axis::Temporal, 4.0, deep(4)),
        "table-5" => {
            let mut cfg = standard(name, 2.0, Axis::Spatial, 2.0, deep(4));
            cfg.scalability_factor = 6.0;
            cfg
        }
        "table-6" => {
            let mut cfg = standard(name, 2.0, Axis::Temporal, 2.0, deep(4));
            cfg.scalability_factor = 6.0;
            cfg
        }
        "table-7" => oscillatory(name, 1.0, Axis::Spatial, 4.0, full),
        "table-8" => oscillatory(name, 1.0, Axis::Temporal, 4f64.powf(2.0 / 3.0), full),
        "table-9" => oscillatory(name, 2.0, Axis::Spatial, 2.0, full),
        "table-10" => oscillatory(name, 2.0, Axis::Temporal, 4f64.powf(1.0 / 3.0), full),
        other => {
            return Err(Error::config(format!(
                "unknown table '{other}', expected one of {}",
                TABLE_NAMES.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
