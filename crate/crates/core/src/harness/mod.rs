//! Convergence studies: sweeps over `(eps, resolution)` matrices, order
//! estimates and the eps-scalability check.

pub mod cache;
pub mod config;
pub mod presets;

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cache::{ReferenceCache, ReferenceKey};
pub use config::{Axis, Mode, SweepConfig};

use crate::diagnostics::{error_norm, stability_verdict, StabilityVerdict};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, GridFunction};
use crate::io::{write_sweep_rows, SweepRow};
use crate::oscillatory::{osc_stepper, OscProblemSpec};
use crate::problem::ProblemSpec;
use crate::schemes::{SchemeKind, StepperState};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointStatus {
    Ok,
    BlowUp,
    NonConvergence,
}

impl PointStatus {
    pub fn name(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::BlowUp => "blowup",
            PointStatus::NonConvergence => "nonconvergence",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(PointStatus::Ok),
            "blowup" => Ok(PointStatus::BlowUp),
            "nonconvergence" => Ok(PointStatus::NonConvergence),
            other => Err(Error::config(format!("unknown point status '{other}'"))),
        }
    }
}

/// One cell of a sweep matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub scheme: SchemeKind,
    pub mode: Mode,
    pub axis: Axis,
    pub beta: f64,
    pub eps: f64,
    pub eps_index: usize,
    pub res_index: usize,
    /// Nominal value of the refined parameter (`h` or the time step).
    pub resolution: f64,
    /// Mesh size actually used.
    pub h: f64,
    /// Time step in the sweep's own time variable.
    pub tau: f64,
    pub t_final: f64,
    pub m: usize,
    pub steps: usize,
    pub error: Option<f64>,
    pub order: Option<f64>,
    pub status: PointStatus,
    pub verdict: Option<StabilityVerdict>,
    pub sigma_max: f64,
    pub message: Option<String>,
}

impl ConvergenceRecord {
    pub fn to_row(&self) -> SweepRow {
        SweepRow {
            scheme: self.scheme.name().to_string(),
            mode: self.mode.name().to_string(),
            beta: self.beta,
            eps: self.eps,
            h: self.h,
            tau: self.tau,
            t_final: self.t_final,
            error: self.error,
            order: self.order,
            status: self.status.name().to_string(),
        }
    }
}

/// `log(e_coarse / e_fine) / log(ratio)`; `None` unless both errors are positive.
pub fn estimate_order(e_coarse: f64, e_fine: f64, ratio: f64) -> Option<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0 && ratio > 0.0 && ratio != 1.0) {
        return None;
    }
    Some((e_coarse / e_fine).ln() / ratio.ln())
}

/// How sweep points are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

fn map_tasks<T, R, F>(tasks: Vec<T>, exec: Execution, threads: Option<usize>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    match exec {
        Execution::Sequential => Ok(tasks.into_iter().map(f).collect()),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            match threads {
                Some(n) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build()
                        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
                    Ok(pool.install(|| tasks.into_par_iter().map(f).collect()))
                }
                None => Ok(tasks.into_par_iter().map(f).collect()),
            }
        }
    }
}

/// Cell count nearest to `length / h`, rounded to an even number.
fn even_cells(length: f64, h: f64) -> usize {
    (2.0 * (length / (2.0 * h)).round()).max(2.0) as usize
}

fn step_count(t_final: f64, step: f64) -> Result<usize> {
    let n = (t_final / step).round();
    if n < 1.0 || (n * step - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::config(format!(
            "final time {t_final} is not an integer multiple of the step {step}"
        )));
    }
    Ok(n as usize)
}

/// Everything one `eps` row needs, fixed before any solve runs.
#[derive(Debug, Clone)]
struct RowPlan {
    eps_index: usize,
    eps: f64,
    spec: ProblemSpec,
    t_final: f64,
    ref_grid: Grid1D,
    ref_key: ReferenceKey,
    points: Vec<PointPlan>,
}

#[derive(Debug, Clone)]
struct PointPlan {
    res_index: usize,
    resolution: f64,
    grid: Grid1D,
    step: f64,
    steps: usize,
}

fn plan_rows(cfg: &SweepConfig) -> Result<Vec<RowPlan>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.eps_list.len());
    for (eps_index, &eps) in cfg.eps_list.iter().enumerate() {
        let spec = ProblemSpec::preset_on_default_domain(&cfg.preset, eps, cfg.beta, cfg.pad)?;
        let length = spec.b - spec.a;
        let t_final = cfg.final_time(eps);
        let ref_grid = Grid1D::new(spec.a, spec.b, even_cells(length, cfg.reference_h))?;
        let fixed = cfg.fixed_for(eps);
        let mut points = Vec::with_capacity(cfg.resolutions.len());
        for (res_index, &r) in cfg.resolutions.iter().enumerate() {
            let (grid, step) = match cfg.axis {
                Axis::Spatial => (Grid1D::with_spacing(spec.a, spec.b, r)?, fixed),
                Axis::Temporal => (Grid1D::new(spec.a, spec.b, even_cells(length, fixed))?, r),
            };
            grid.refinement_factor(&ref_grid)?;
            points.push(PointPlan {
                res_index,
                resolution: r,
                grid,
                step,
                steps: step_count(t_final, step)?,
            });
        }
        let ref_key = ReferenceKey {
            preset: cfg.preset.clone(),
            a: spec.a,
            b: spec.b,
            eps,
            beta: cfg.beta,
            t_final: match cfg.mode {
                Mode::Standard => t_final,
                Mode::Oscillatory => t_final * eps.powf(-cfg.beta),
            },
            m: ref_grid.m(),
            tau: cfg.reference_tau,
        };
        rows.push(RowPlan {
            eps_index,
            eps,
            spec,
            t_final,
            ref_grid,
            ref_key,
            points,
        });
    }
    Ok(rows)
}

fn compute_reference(row: &RowPlan, cache: &ReferenceCache) -> Result<Arc<Vec<f64>>> {
    cache.get_or_compute(&row.ref_key, || {
        let key = &row.ref_key;
        spectral::reference_fine(&row.spec, key.t_final, key.m, key.tau).map(GridFunction::into_vec)
    })
}

fn run_point(
    cfg: &SweepConfig,
    row: &RowPlan,
    point: &PointPlan,
    reference: &[f64],
) -> Result<ConvergenceRecord> {
    let solver = cfg.solver();
    let state = match cfg.mode {
        Mode::Standard => StepperState::from_problem(&row.spec, cfg.scheme, point.grid, point.step, solver),
        Mode::Oscillatory => osc_stepper(
            &OscProblemSpec::new(row.spec.clone()),
            cfg.scheme,
            point.grid,
            point.step,
            cfg.regularized_for(row.eps),
            solver,
        ),
    };
    let mut record = ConvergenceRecord {
        scheme: cfg.scheme,
        mode: cfg.mode,
        axis: cfg.axis,
        beta: cfg.beta,
        eps: row.eps,
        eps_index: row.eps_index,
        res_index: point.res_index,
        resolution: point.resolution,
        h: point.grid.h(),
        tau: point.step,
        t_final: row.t_final,
        m: point.grid.m(),
        steps: point.steps,
        error: None,
        order: None,
        status: PointStatus::Ok,
        verdict: None,
        sigma_max: 0.0,
        message: None,
    };
    let osc_beta = match cfg.mode {
        Mode::Standard => None,
        Mode::Oscillatory => Some(cfg.beta),
    };
    let verdict = |sigma: f64| stability_verdict(cfg.scheme, point.grid.h(), row.eps, sigma, osc_beta, point.step);

    let mut state = match state {
        Ok(s) => s,
        Err(e) if e.is_numerical() => return Ok(failure(record, &e)),
        Err(e) => return Err(e),
    };
    while state.n < point.steps {
        if let Err(e) = state.advance() {
            if !e.is_numerical() {
                return Err(e);
            }
            record.sigma_max = state.sigma_max;
            record.verdict = Some(verdict(state.sigma_max));
            return Ok(failure(record, &e));
        }
    }
    let factor = point.grid.refinement_factor(&row.ref_grid)?;
    let exact = GridFunction::new(reference.iter().step_by(factor).copied().collect())?;
    record.error = Some(error_norm(&point.grid, &exact, &state.u_curr)?);
    record.sigma_max = state.sigma_max;
    record.verdict = Some(verdict(state.sigma_max));
    Ok(record)
}

fn failure(mut record: ConvergenceRecord, e: &Error) -> ConvergenceRecord {
    record.status = match e {
        Error::NonConvergence { .. } => PointStatus::NonConvergence,
        _ => PointStatus::BlowUp,
    };
    record.message = Some(e.to_string());
    record
}

/// Fills the `order` column between adjacent resolutions of each row.
pub fn fill_orders(records: &mut [ConvergenceRecord]) {
    for i in 0..records.len() {
        records[i].order = None;
        let j = i.wrapping_sub(1);
        if i == 0 || records[j].eps_index != records[i].eps_index || records[j].res_index + 1 != records[i].res_index {
            continue;
        }
        if let (Some(ec), Some(ef)) = (records[j].error, records[i].error) {
            records[i].order = estimate_order(ec, ef, records[j].resolution / records[i].resolution);
        }
    }
}

/// Runs the sweep with the default scheduler and an in-memory (or
/// `cfg.cache_dir`) reference cache.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<ConvergenceRecord>> {
    let cache = match &cfg.cache_dir {
        Some(dir) => ReferenceCache::with_dir(dir)?,
        None => ReferenceCache::in_memory(),
    };
    run_sweep_with(cfg, Execution::default(), &cache)
}

pub fn run_sweep_sequential(cfg: &SweepConfig, cache: &ReferenceCache) -> Result<Vec<ConvergenceRecord>> {
    run_sweep_with(cfg, Execution::Sequential, cache)
}

#[cfg(feature = "parallel")]
pub fn run_sweep_parallel(cfg: &SweepConfig, cache: &ReferenceCache) -> Result<Vec<ConvergenceRecord>> {
    run_sweep_with(cfg, Execution::Parallel, cache)
}

pub fn run_sweep_with(cfg: &SweepConfig, exec: Execution, cache: &ReferenceCache) -> Result<Vec<ConvergenceRecord>> {
    let rows = plan_rows(cfg)?;
    let references = map_tasks(rows.iter().collect(), exec, cfg.threads, |row| compute_reference(row, cache))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(&RowPlan, &PointPlan, &[f64])> = rows
        .iter()
        .zip(&references)
        .flat_map(|(row, r)| row.points.iter().map(move |p| (row, p, r.as_slice())))
        .collect();
    let mut records = map_tasks(tasks, exec, cfg.threads, |(row, point, reference)| {
        run_point(cfg, row, point, reference)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    fill_orders(&mut records);
    Ok(records)
}

pub fn write_records<W: Write>(sink: W, records: &[ConvergenceRecord]) -> Result<()> {
    let rows: Vec<SweepRow> = records.iter().map(ConvergenceRecord::to_row).collect();
    write_sweep_rows(sink, &rows)
}

pub fn write_records_to_path(path: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    write_records(File::create(path)?, records)
}

/// Rebuilds records from sweep CSV rows. Rows are grouped by `eps` in order of
/// appearance; the refined axis is whichever of `h`, `tau` varies in a row.
pub fn records_from_rows(rows: &[SweepRow]) -> Result<Vec<ConvergenceRecord>> {
    let mut eps_values: Vec<f64> = Vec::new();
    for r in rows {
        if !eps_values.contains(&r.eps) {
            eps_values.push(r.eps);
        }
    }
    let mut records = Vec::with_capacity(rows.len());
    for (eps_index, &eps) in eps_values.iter().enumerate() {
        let row: Vec<&SweepRow> = rows.iter().filter(|r| r.eps == eps).collect();
        let h_varies = row.windows(2).any(|w| w[0].h != w[1].h);
        let axis = if h_varies { Axis::Spatial } else { Axis::Temporal };
        for (res_index, r) in row.iter().enumerate() {
            let mode = Mode::parse(&r.mode)?;
            records.push(ConvergenceRecord {
                scheme: r.scheme.parse()?,
                mode,
                axis,
                beta: r.beta,
                eps,
                eps_index,
                res_index,
                resolution: match axis {
                    Axis::Spatial => r.h,
                    Axis::Temporal => r.tau,
                },
                h: r.h,
                tau: r.tau,
                t_final: r.t_final,
                m: 0,
                steps: 0,
                error: r.error,
                order: r.order,
                status: PointStatus::parse(&r.status)?,
                verdict: None,
                sigma_max: f64::NAN,
                message: None,
            });
        }
    }
    Ok(records)
}

/// Exponent `p` of the meshing rule `resolution ~ eps^p`.
pub fn scalability_exponent(mode: Mode, axis: Axis, beta: f64) -> f64 {
    match (mode, axis) {
        (Mode::Oscillatory, Axis::Temporal) => 1.5 * beta,
        _ => 0.5 * beta,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalCell {
    pub eps: f64,
    pub column: usize,
    pub resolution: f64,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperCell {
    pub eps: f64,
    pub column: usize,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalabilityReport {
    pub exponent: f64,
    pub factor: f64,
    pub diagonal: Vec<DiagonalCell>,
    /// `max / min` over the diagonal errors.
    pub spread: Option<f64>,
    pub diagonal_ok: bool,
    /// Whether the coarsest column was required to degrade as eps decreases.
    pub growth_checked: bool,
    pub growth_ok: bool,
    /// Orders of the cells strictly finer than the diagonal.
    pub upper: Vec<UpperCell>,
}

impl ScalabilityReport {
    pub fn passes(&self) -> bool {
        self.diagonal_ok && self.growth_ok
    }

    /// Whether every upper-triangle order lies within `tol` of `target`.
    pub fn upper_orders_within(&self, target: f64, tol: f64) -> bool {
        self.upper
            .iter()
            .all(|c| c.order.is_some_and(|o| (o - target).abs() <= tol))
    }
}

/// Extracts the diagonal `resolution ~ eps^p` of a sweep matrix and checks
/// that its errors stay within `factor` of each other. When `p > 0`, the
/// coarsest column must also degrade from the first to the last row.
pub fn check_scalability(records: &[ConvergenceRecord], beta: f64, factor: f64) -> Result<ScalabilityReport> {
    let first = records
        .first()
        .ok_or_else(|| Error::structural("no records to check"))?;
    let n_rows = records.iter().map(|r| r.eps_index).max().map_or(0, |m| m + 1);
    let n_cols = records.iter().map(|r| r.res_index).max().map_or(0, |m| m + 1);
    let mut matrix: Vec<Vec<Option<&ConvergenceRecord>>> = vec![vec![None; n_cols]; n_rows];
    for r in records {
        let cell = &mut matrix[r.eps_index][r.res_index];
        if cell.is_some() {
            return Err(Error::structural(format!(
                "duplicate record at eps = {}, column {}",
                r.eps, r.res_index
            )));
        }
        *cell = Some(r);
    }
    let matrix: Vec<Vec<&ConvergenceRecord>> = matrix
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .enumerate()
                .map(|(j, c)| c.ok_or_else(|| Error::structural(format!("missing sweep cell ({i}, {j})"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let p = scalability_exponent(first.mode, first.axis, beta);
    let (eps0, r0) = (matrix[0][0].eps, matrix[0][0].resolution);
    let mut diagonal = Vec::with_capacity(n_rows);
    let mut upper = Vec::new();
    for row in &matrix {
        let target = p * (row[0].eps / eps0).ln();
        let column = (0..n_cols)
            .min_by(|&a, &b| {
                let da = ((row[a].resolution / r0).ln() - target).abs();
                let db = ((row[b].resolution / r0).ln() - target).abs();
                da.total_cmp(&db)
            })
            .expect("at least one column");
        diagonal.push(DiagonalCell {
            eps: row[column].eps,
            column,
            resolution: row[column].resolution,
            error: row[column].error.filter(|_| row[column].status == PointStatus::Ok),
        });
        for cell in &row[column + 1..] {
            upper.push(UpperCell {
                eps: cell.eps,
                column: cell.res_index,
                order: cell.order,
            });
        }
    }
    let errors: Option<Vec<f64>> = diagonal.iter().map(|d| d.error.filter(|e| *e > 0.0)).collect();
    let spread = errors.map(|es| {
        let max = es.iter().copied().fold(f64::MIN, f64::max);
        let min = es.iter().copied().fold(f64::MAX, f64::min);
        max / min
    });
    let diagonal_ok = spread.is_some_and(|s| s <= factor);
    let growth_checked = p > 0.0 && n_rows >= 2;
    let growth_ok = !growth_checked
        || match (matrix[0][0].error, matrix[n_rows - 1][0].error) {
            (Some(top), Some(bottom)) => bottom > top,
            (Some(_), None) => matrix[n_rows - 1][0].status != PointStatus::Ok,
            _ => false,
        };
    Ok(ScalabilityReport {
        exponent: p,
        factor,
        diagonal,
        spread,
        diagonal_ok,
        growth_checked,
        growth_ok,
        upper,
    })
}
