use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nkge_core::diagnostics::{energy, relative_drift, stability_verdict, EnergyKind, EnergyReport, StabilityBound};
use nkge_core::harness::cache::ReferenceCache;
use nkge_core::harness::config::{Mode, SweepConfig};
use nkge_core::harness::{self, presets, Execution, ScalabilityReport};
use nkge_core::io::{self as nio, EnergyWriter};
use nkge_core::oscillatory::{default_regularized, osc_stepper, OscProblemSpec, DEFAULT_PAD};
use nkge_core::{Error, Grid1D, LinearBackend, ProblemSpec, SchemeKind, SolverParams, StepperState};

#[derive(Parser)]
#[command(name = "nkge", version, about = "Finite difference solvers for the nonlinear Klein-Gordon equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write snapshots plus an energy trace.
    Run(RunArgs),
    /// Run a convergence sweep from a config file or a named table.
    Sweep(SweepArgs),
    /// Inspect a sweep or energy CSV.
    #[command(subcommand)]
    Check(CheckCommand),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scheme: SchemeKind,
    #[arg(long, default_value = "standard", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Mesh size; rounded so that it divides the domain.
    #[arg(long)]
    h: f64,
    /// Time step in the chosen mode's time variable.
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    #[arg(long, default_value = "paper-4.1")]
    preset: String,
    /// Oscillatory mode only; defaults to on for eps <= 1/4 and beta >= 1.
    #[arg(long)]
    regularized_first_step: Option<bool>,
    /// Write a snapshot every N steps (0 writes only the initial and final levels).
    #[arg(long, default_value_t = 0)]
    snapshot_every: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "run")]
    run_id: String,
    #[arg(long, default_value_t = DEFAULT_PAD)]
    pad: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value = "fft")]
    linear_backend: LinearBackend,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, conflicts_with = "table", required_unless_present = "table")]
    config: Option<PathBuf>,
    /// One of table-1 .. table-10.
    #[arg(long)]
    table: Option<String>,
    /// Include the deepest eps rows of a named table.
    #[arg(long, requires = "table")]
    full: bool,
    /// Output CSV; overrides the config's `output`. Without either, CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Run points one after another on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Scalability diagonal and orders of a sweep CSV.
    Scalability {
        csv: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        factor: f64,
    },
    /// Relative drift of an energy trace.
    Energy {
        csv: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        max_drift: f64,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).map_err(|e| e.to_string())
}

enum Failure {
    Config(String),
    Numerical(String),
    CheckFailed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Check(cmd) => check(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::CheckFailed(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
    }
}

fn step_count(t_final: f64, tau: f64) -> Result<usize, Failure> {
    let n = t_final / tau;
    let rounded = n.round();
    if rounded < 1.0 || (n - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Failure::Config(format!(
            "final time {t_final} is not a whole number of steps of {tau}"
        )));
    }
    Ok(rounded as usize)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let spec = ProblemSpec::preset_on_default_domain(&args.preset, args.eps, args.beta, args.pad)?;
    let grid = Grid1D::with_spacing(spec.a, spec.b, args.h)?;
    let solver = SolverParams {
        tol: args.tol,
        max_iter: args.max_iter,
        linear_backend: args.linear_backend,
    };
    solver.validate()?;
    fs::create_dir_all(&args.out)?;

    let oscillatory = args.mode == Mode::Oscillatory;
    let t_final = match args.mode {
        Mode::Standard => spec.horizon(args.t0),
        Mode::Oscillatory => args.t0,
    };
    let steps = step_count(t_final, args.tau)?;
    let state = if oscillatory {
        let regularized = args
            .regularized_first_step
            .unwrap_or_else(|| default_regularized(args.eps, args.beta));
        osc_stepper(&OscProblemSpec::new(spec.clone()), args.scheme, grid, args.tau, regularized, solver)?
    } else {
        StepperState::from_problem(&spec, args.scheme, grid, args.tau, solver)?
    };
    let kind = EnergyKind::discrete_for(args.scheme, oscillatory).unwrap_or(if oscillatory {
        EnergyKind::OscCnfdDiscrete
    } else {
        EnergyKind::CnfdDiscrete
    });

    let energy_path = args.out.join(format!("{}_energy.csv", args.run_id));
    let mut writer = EnergyWriter::create(&energy_path)?;
    let mut trace: Vec<EnergyReport> = Vec::with_capacity(steps);
    nio::write_snapshot(&nio::snapshot_path(&args.out, &args.run_id, 0), &grid, &state.u_prev)?;

    let mut observe = |s: &StepperState| -> nkge_core::Result<()> {
        let value = energy(kind, &s.grid, &s.u_prev, &s.u_curr, s.tau, s.eps2, s.mass)?;
        let report = EnergyReport {
            n: s.n,
            t: s.time(),
            kind,
            value,
        };
        writer.write(&report)?;
        trace.push(report);
        let snap = args.snapshot_every > 0 && s.n % args.snapshot_every == 0;
        if snap || s.n == steps {
            nio::write_snapshot(&nio::snapshot_path(&args.out, &args.run_id, s.n), &s.grid, &s.u_curr)?;
        }
        Ok(())
    };
    let outcome = nkge_core::schemes::advance_to(state, steps, &mut observe);
    writer.finish()?;
    let state = outcome?;

    let osc_beta = oscillatory.then_some(args.beta);
    let verdict = stability_verdict(args.scheme, grid.h(), args.eps, state.sigma_max, osc_beta, args.tau);
    println!("scheme      {}", args.scheme);
    println!("mode        {}", args.mode.name());
    println!("grid        M = {}, h = {}", grid.m(), grid.h());
    println!("steps       {steps} of {} (final time {})", args.tau, state.time());
    println!("sigma_max   {:e}", state.sigma_max);
    match verdict.bound {
        StabilityBound::Unconditional => println!("stability   unconditional"),
        StabilityBound::Bounded(b) => println!(
            "stability   bound {b:e}, step {} ({})",
            args.tau,
            if verdict.stable { "inside" } else { "outside" }
        ),
    }
    if let Some(d) = relative_drift(&trace) {
        println!("energy      {} drift {d:e}", kind.name());
    }
    println!("output      {}", args.out.display());
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut cfg = match (&args.config, &args.table) {
        (Some(path), _) => SweepConfig::from_path(path)?,
        (None, Some(name)) => presets::table(name, args.full)?,
        (None, None) => return Err(Failure::Config("either --config or --table is required".into())),
    };
    if let Some(dir) = args.cache_dir {
        cfg.cache_dir = Some(dir);
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    cfg.validate()?;
    let cache = match &cfg.cache_dir {
        Some(dir) => ReferenceCache::with_dir(dir)?,
        None => ReferenceCache::in_memory(),
    };
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let records = harness::run_sweep_with(&cfg, exec, &cache)?;
    match args.out.or_else(|| cfg.output.clone()) {
        Some(path) => {
            harness::write_records_to_path(&path, &records)?;
            eprintln!("wrote {} rows to {}", records.len(), path.display());
        }
        None => harness::write_records(io::stdout().lock(), &records)?,
    }
    let failed = records.iter().filter(|r| r.error.is_none()).count();
    if failed > 0 {
        eprintln!("{failed} point(s) failed; see the status column");
    }
    if records.iter().any(|r| r.error.is_some()) {
        match harness::check_scalability(&records, cfg.beta, cfg.scalability_factor) {
            Ok(report) => print_scalability(&mut io::stderr().lock(), &report)?,
            Err(e) => eprintln!("scalability check skipped: {e}"),
        }
    }
    Ok(())
}

fn print_scalability(out: &mut impl Write, report: &ScalabilityReport) -> io::Result<()> {
    writeln!(out, "diagonal (resolution ~ eps^{}):", report.exponent)?;
    for d in &report.diagonal {
        let err = d.error.map_or("-".to_string(), |e| format!("{e:.3e}"));
        writeln!(out, "  eps = {:<10} column {} resolution {:.6e} error {err}", d.eps, d.column, d.resolution)?;
    }
    let spread = report.spread.map_or("-".to_string(), |s| format!("{s:.3}"));
    writeln!(
        out,
        "spread {spread} (limit {}): {}",
        report.factor,
        if report.diagonal_ok { "ok" } else { "exceeded" }
    )?;
    if report.growth_checked {
        writeln!(out, "coarsest column degrades with eps: {}", report.growth_ok)?;
    }
    let orders: Vec<f64> = report.upper.iter().filter_map(|c| c.order).collect();
    if let (Some(lo), Some(hi)) = (
        orders.iter().copied().reduce(f64::min),
        orders.iter().copied().reduce(f64::max),
    ) {
        writeln!(out, "upper-triangle orders in [{lo:.3}, {hi:.3}] over {} cells", orders.len())?;
    }
    Ok(())
}

fn check(cmd: CheckCommand) -> Result<(), Failure> {
    match cmd {
        CheckCommand::Scalability { csv, factor } => check_scalability(&csv, factor),
        CheckCommand::Energy { csv, max_drift } => {
            let trace = nio::read_energy_trace(&csv)?;
            let drift = relative_drift(&trace).ok_or_else(|| Failure::Config(format!("{} is empty", csv.display())))?;
            println!("{} steps, {} drift {drift:e}", trace.len(), trace[0].kind);
            if drift > max_drift {
                return Err(Failure::CheckFailed(format!("drift {drift:e} exceeds {max_drift:e}")));
            }
            Ok(())
        }
    }
}

fn check_scalability(csv: &Path, factor: f64) -> Result<(), Failure> {
    let rows = nio::read_sweep_rows(csv)?;
    let records = harness::records_from_rows(&rows)?;
    let beta = records
        .first()
        .map(|r| r.beta)
        .ok_or_else(|| Failure::Config(format!("{} has no rows", csv.display())))?;
    let report = harness::check_scalability(&records, beta, factor)?;
    print_scalability(&mut io::stdout().lock(), &report)?;
    if !report.passes() {
        return Err(Failure::CheckFailed("scalability diagonal not within limits".into()));
    }
    Ok(())
}
