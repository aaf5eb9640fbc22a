//! The four finite difference time steppers and their shared first step.
//!
//! All kernels solve
//!
//! ```text
//! mass * delta_t^2 u^n - (spatial part) + (mass part) + eps2 * (nonlinear part) = 0
//! ```
//!
//! with `mass = 1` for the standard equation and `mass = eps^{2 beta}` for the
//! oscillatory one. Each scheme is written in "field units", i.e. the equation
//! multiplied by `c = tau^2 / mass`, so residuals and tolerances are measured
//! on the scale of `u` itself.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{d2x_into, Grid1D, GridFunction};
use crate::linalg::{CyclicTridiagonal, FourierDiagonalSolver};
use crate::problem::{eval_g, eval_g_dv, ProblemSpec};

/// Any level with `max |u|` above this is treated as a blow-up.
pub const BLOWUP_GUARD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// Crank-Nicolson, fully implicit and energy conservative.
    Cnfd,
    /// Semi-implicit, energy conservative, explicit in the Laplacian.
    Sifd1,
    /// Semi-implicit, linear per step, explicit in the nonlinearity.
    Sifd2,
    /// Explicit leap-frog.
    Lffd,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Cnfd,
        SchemeKind::Sifd1,
        SchemeKind::Sifd2,
        SchemeKind::Lffd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Cnfd => "cnfd",
            SchemeKind::Sifd1 => "sifd1",
            SchemeKind::Sifd2 => "sifd2",
            SchemeKind::Lffd => "lffd",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnfd" => Ok(SchemeKind::Cnfd),
            "sifd1" => Ok(SchemeKind::Sifd1),
            "sifd2" => Ok(SchemeKind::Sifd2),
            "lffd" => Ok(SchemeKind::Lffd),
            other => Err(Error::config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Linear solver used for the constant-coefficient SIFD2 system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearBackend {
    /// Fourier diagonalisation of the periodic second difference.
    Fft,
    /// Cyclic tridiagonal elimination (Thomas + Sherman-Morrison).
    Dense,
}

impl FromStr for LinearBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fft" => Ok(LinearBackend::Fft),
            "dense" => Ok(LinearBackend::Dense),
            other => Err(Error::config(format!("unknown linear backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Tolerance on the l-infinity norm of the field-unit residual.
    pub tol: f64,
    pub max_iter: usize,
    pub linear_backend: LinearBackend,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-12,
            max_iter: 50,
            linear_backend: LinearBackend::Fft,
        }
    }
}

impl SolverParams {
    pub fn with_tol(tol: f64) -> Self {
        SolverParams {
            tol,
            ..SolverParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::config(format!("solver tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::config("solver max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of one nonlinear solve.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
struct Workspace {
    d2: Vec<f64>,
    rhs: Vec<f64>,
    diag: Vec<f64>,
    delta: Vec<f64>,
    cyclic: CyclicTridiagonal,
    fourier: Option<FourierDiagonalSolver>,
}

impl Workspace {
    fn new(m: usize) -> Self {
        Workspace {
            d2: vec![0.0; m],
            rhs: vec![0.0; m],
            diag: vec![0.0; m],
            delta: vec![0.0; m],
            cyclic: CyclicTridiagonal::new(m),
            fourier: None,
        }
    }
}

/// Two consecutive time levels plus everything needed to produce the next one.
#[derive(Debug, Clone)]
pub struct StepperState {
    pub scheme: SchemeKind,
    pub grid: Grid1D,
    pub tau: f64,
    pub mass: f64,
    pub eps2: f64,
    pub u_prev: GridFunction,
    pub u_curr: GridFunction,
    /// Index of `u_curr`.
    pub n: usize,
    pub solver: SolverParams,
    /// Running maximum of `||u^k||_inf^2` over every level seen so far.
    pub sigma_max: f64,
    pub last_solve: SolveStats,
    work: Workspace,
}

impl StepperState {
    /// State holding levels `n - 1` and `n` (normally `u^0, u^1` with `n = 1`).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        scheme: SchemeKind,
        grid: Grid1D,
        tau: f64,
        mass: f64,
        eps2: f64,
        u_prev: GridFunction,
        u_curr: GridFunction,
        n: usize,
        solver: SolverParams,
    ) -> Result<Self> {
        grid.check(&u_prev)?;
        grid.check(&u_curr)?;
        if !(tau.is_finite() && tau != 0.0) {
            return Err(Error::config(format!("time step must be finite and nonzero, got {tau}")));
        }
        if !(mass > 0.0) {
            return Err(Error::config(format!("mass coefficient must be positive, got {mass}")));
        }
        if !(eps2 >= 0.0) {
            return Err(Error::config(format!("nonlinearity coefficient must be >= 0, got {eps2}")));
        }
        solver.validate()?;
        let sigma_max = u_prev.max_abs().powi(2).max(u_curr.max_abs().powi(2));
        Ok(StepperState {
            scheme,
            grid,
            tau,
            mass,
            eps2,
            u_prev,
            u_curr,
            n,
            solver,
            sigma_max,
            last_solve: SolveStats::default(),
            work: Workspace::new(grid.m()),
        })
    }

    /// Standard-equation state from the Taylor first step (`mass = 1`).
    pub fn from_problem(
        spec: &ProblemSpec,
        scheme: SchemeKind,
        grid: Grid1D,
        tau: f64,
        solver: SolverParams,
    ) -> Result<Self> {
        let (u0, u1) = first_step(spec, &grid, tau)?;
        StepperState::new(scheme, grid, tau, 1.0, spec.eps2(), u0, u1, 1, solver)
    }

    /// Time of `u_curr`.
    pub fn time(&self) -> f64 {
        self.n as f64 * self.tau
    }

    /// `tau^2 / mass`.
    fn coeff(&self) -> f64 {
        self.tau * self.tau / self.mass
    }

    /// Computes level `n + 1` without advancing.
    pub fn next_level(&mut self) -> Result<GridFunction> {
        let m = self.grid.m();
        let mut out = GridFunction::zeros(m);
        let stats = match self.scheme {
            SchemeKind::Lffd => self.lffd_into(out.as_mut_slice()),
            SchemeKind::Sifd2 => self.sifd2_into(out.as_mut_slice()),
            SchemeKind::Sifd1 => self.sifd1_into(out.as_mut_slice())?,
            SchemeKind::Cnfd => self.cnfd_into(out.as_mut_slice())?,
        };
        self.last_solve = stats;
        check_level(&out, self.n + 1)?;
        Ok(out)
    }

    /// Advances by one step: `(u^{n-1}, u^n) -> (u^n, u^{n+1})`.
    pub fn advance(&mut self) -> Result<()> {
        let next = self.next_level()?;
        self.sigma_max = self.sigma_max.max(next.max_abs().powi(2));
        self.u_prev = std::mem::replace(&mut self.u_curr, next);
        self.n += 1;
        Ok(())
    }

    /// Swaps the two stored levels, which runs the schemes backwards in time.
    pub fn reverse(&mut self) {
        std::mem::swap(&mut self.u_prev, &mut self.u_curr);
    }

    fn lffd_into(&mut self, out: &mut [f64]) -> SolveStats {
        let c = self.coeff();
        let (p, u) = (self.u_prev.as_slice(), self.u_curr.as_slice());
        d2x_into(self.grid.h(), u, &mut self.work.d2);
        let d2 = &self.work.d2;
        for j in 0..out.len() {
            let uj = u[j];
            out[j] = 2.0 * uj - p[j] + c * (d2[j] - uj - self.eps2 * uj * uj * uj);
        }
        SolveStats::default()
    }

    fn sifd2_into(&mut self, out: &mut [f64]) -> SolveStats {
        let c = self.coeff();
        let h = self.grid.h();
        let (p, u) = (self.u_prev.as_slice(), self.u_curr.as_slice());
        d2x_into(h, p, &mut self.work.d2);
        for j in 0..out.len() {
            let uj = u[j];
            self.work.rhs[j] =
                2.0 * uj - p[j] + c * (0.5 * self.work.d2[j] - 0.5 * p[j] - self.eps2 * uj * uj * uj);
        }
        let alpha = 1.0 + 0.5 * c;
        let coupling = 0.5 * c;
        match self.solver.linear_backend {
            LinearBackend::Fft => {
                let m = self.grid.m();
                let fourier = self
                    .work
                    .fourier
                    .get_or_insert_with(|| FourierDiagonalSolver::new(m, h));
                fourier.solve(alpha, coupling, &self.work.rhs, out);
            }
            LinearBackend::Dense => {
                let diag0 = alpha + 2.0 * coupling / (h * h);
                self.work.diag.iter_mut().for_each(|d| *d = diag0);
                let off = -coupling / (h * h);
                self.work
                    .cyclic
                    .solve(&self.work.diag, off, &self.work.rhs, out);
            }
        }
        SolveStats::default()
    }

    fn sifd1_into(&mut self, out: &mut [f64]) -> Result<SolveStats> {
        let c = self.coeff();
        let (p, u) = (self.u_prev.as_slice(), self.u_curr.as_slice());
        d2x_into(self.grid.h(), u, &mut self.work.d2);
        let alpha = 1.0 + 0.5 * c;
        let kappa = 0.25 * c * self.eps2;
        let mut stats = SolveStats::default();
        for j in 0..out.len() {
            let rhs = 2.0 * u[j] - p[j] + c * (self.work.d2[j] - 0.5 * p[j]);
            let cubic = ScalarCubic {
                alpha,
                kappa,
                w: p[j],
                rhs,
            };
            let guess = 2.0 * u[j] - p[j];
            match cubic.solve(guess, self.solver.tol, self.solver.max_iter) {
                Ok(root) => {
                    out[j] = root.x;
                    stats.iterations = stats.iterations.max(root.iterations);
                    stats.residual = stats.residual.max(root.residual);
                }
                Err(residual) => {
                    return Err(Error::NonConvergence {
                        step: self.n + 1,
                        node: Some(j),
                        residual,
                    })
                }
            }
        }
        Ok(stats)
    }

    fn cnfd_into(&mut self, out: &mut [f64]) -> Result<SolveStats> {
        let c = self.coeff();
        let h = self.grid.h();
        let m = self.grid.m();
        let eps2 = self.eps2;
        let (p, u) = (self.u_prev.as_slice(), self.u_curr.as_slice());
        let w = &mut self.work;

        // Constant part q = -2u + p + c(-d2(p)/2 + p/2), stored in rhs.
        d2x_into(h, p, &mut w.d2);
        let mut q = std::mem::take(&mut w.rhs);
        for j in 0..m {
            q[j] = -2.0 * u[j] + p[j] + c * (0.5 * p[j] - 0.5 * w.d2[j]);
        }
        for j in 0..m {
            out[j] = 2.0 * u[j] - p[j];
        }

        let off = -0.5 * c / (h * h);
        let base = 1.0 + 0.5 * c + c / (h * h);
        let mut stats = SolveStats::default();
        let mut converged = false;
        for iter in 0..=self.solver.max_iter {
            d2x_into(h, out, &mut w.d2);
            let mut res = 0.0_f64;
            for j in 0..m {
                let v = out[j];
                let r = v + c * (0.5 * v - 0.5 * w.d2[j] + eps2 * eval_g(v, p[j])) + q[j];
                w.delta[j] = -r;
                res = res.max(r.abs());
                w.diag[j] = base + c * eps2 * eval_g_dv(v, p[j]);
            }
            stats.iterations = iter;
            // The Jacobian is symmetric with spectrum >= 1, so `res` bounds the error.
            stats.residual = res;
            if stats.residual <= self.solver.tol {
                converged = true;
                break;
            }
            if iter == self.solver.max_iter {
                break;
            }
            let rhs = std::mem::take(&mut w.delta);
            let mut correction = std::mem::take(&mut w.d2);
            w.cyclic.solve(&w.diag, off, &rhs, &mut correction);
            let mut step = 0.0_f64;
            let mut size = 1.0_f64;
            for j in 0..m {
                out[j] += correction[j];
                step = step.max(correction[j].abs());
                size = size.max(out[j].abs());
            }
            w.delta = rhs;
            w.d2 = correction;
            if !step.is_finite() {
                break;
            }
            if step <= 8.0 * f64::EPSILON * size {
                // Roundoff floor: the residual cannot be reduced further.
                stats.iterations = iter + 1;
                converged = true;
                break;
            }
        }
        w.rhs = q;
        if !converged {
            return Err(Error::NonConvergence {
                step: self.n + 1,
                node: None,
                residual: stats.residual,
            });
        }
        Ok(stats)
    }
}

fn check_level(u: &GridFunction, step: usize) -> Result<()> {
    let max_abs = u
        .as_slice()
        .iter()
        .fold(0.0_f64, |acc, v| if v.is_finite() { acc.max(v.abs()) } else { f64::INFINITY });
    if !max_abs.is_finite() || max_abs > BLOWUP_GUARD {
        return Err(Error::BlowUp { step, max_abs });
    }
    Ok(())
}

/// Scalar equation `alpha x + kappa (x + w)(x^2 + w^2) = rhs` with `alpha > 0`,
/// `kappa >= 0`. The left side is strictly increasing in `x`, so the root is unique.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarCubic {
    pub alpha: f64,
    pub kappa: f64,
    pub w: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRoot {
    pub x: f64,
    pub iterations: usize,
    /// `|g(x)| / alpha`.
    pub residual: f64,
}

impl ScalarCubic {
    pub fn eval(&self, x: f64) -> f64 {
        let w = self.w;
        self.alpha * x + self.kappa * (x + w) * (x * x + w * w) - self.rhs
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let w = self.w;
        self.alpha + self.kappa * (3.0 * x * x + 2.0 * x * w + w * w)
    }

    /// A bracket `[lo, hi]` with `g(lo) <= 0 <= g(hi)`: the cubic term has the sign
    /// of `x + w`, so beyond both `rhs / alpha` and `-w` it cannot flip the sign.
    pub fn bracket(&self) -> (f64, f64) {
        let lin = self.rhs / self.alpha;
        (lin.min(-self.w), lin.max(-self.w))
    }

    /// Newton iteration safeguarded by bisection on the bracket. On failure the
    /// last residual is returned.
    pub fn solve(&self, guess: f64, tol: f64, max_iter: usize) -> Result<ScalarRoot, f64> {
        let (mut lo, mut hi) = self.bracket();
        let mut x = if guess >= lo && guess <= hi { guess } else { 0.5 * (lo + hi) };
        let mut residual = f64::INFINITY;
        for iter in 0..=max_iter {
            let g = self.eval(x);
            residual = g.abs() / self.alpha;
            if residual <= tol || lo == hi {
                // One extra Newton step is nearly free and lands at roundoff.
                let polished = x - g / self.derivative(x);
                if polished.is_finite() {
                    let r = self.eval(polished).abs() / self.alpha;
                    if r < residual {
                        return Ok(ScalarRoot {
                            x: polished,
                            iterations: iter + 1,
                            residual: r,
                        });
                    }
                }
                return Ok(ScalarRoot {
                    x,
                    iterations: iter,
                    residual,
                });
            }
            if iter == max_iter {
                break;
            }
            if g < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - g / self.derivative(x);
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
                return Ok(ScalarRoot {
                    x: next,
                    iterations: iter + 1,
                    residual: self.eval(next).abs() / self.alpha,
                });
            }
            x = next;
        }
        Err(residual)
    }
}

/// Taylor first step `u^1 = phi + A gamma + (B/2)[d2(phi) - phi - eps2 phi^3]`.
pub(crate) fn taylor_first_step(
    spec: &ProblemSpec,
    g: &Grid1D,
    vel_coeff: f64,
    acc_coeff: f64,
    eps2: f64,
) -> (GridFunction, GridFunction) {
    let phi = g.sample(|x| (spec.phi)(x));
    let gamma = g.sample(|x| (spec.gamma)(x));
    let mut d2 = vec![0.0; g.m()];
    d2x_into(g.h(), phi.as_slice(), &mut d2);
    let u1 = (0..g.m())
        .map(|j| {
            let f = phi[j];
            f + vel_coeff * gamma[j] + 0.5 * acc_coeff * (d2[j] - f - eps2 * f * f * f)
        })
        .collect();
    (phi, GridFunction::from_vec_unchecked(u1))
}

/// Initial levels `u^0 = phi` and the Taylor-expanded `u^1`.
pub fn first_step(spec: &ProblemSpec, g: &Grid1D, tau: f64) -> Result<(GridFunction, GridFunction)> {
    if !(tau > 0.0) {
        return Err(Error::config(format!("time step must be positive, got {tau}")));
    }
    let (u0, u1) = taylor_first_step(spec, g, tau, tau * tau, spec.eps2());
    check_level(&u0, 0)?;
    check_level(&u1, 1)?;
    Ok((u0, u1))
}

/// Explicit leap-frog step from `state`.
pub fn lffd_step(state: &mut StepperState) -> Result<GridFunction> {
    with_scheme(state, SchemeKind::Lffd)
}

/// Semi-implicit step with implicit Laplacian and explicit cubic term.
pub fn sifd2_step(state: &mut StepperState) -> Result<GridFunction> {
    with_scheme(state, SchemeKind::Sifd2)
}

/// Semi-implicit conservative step, one scalar cubic per node.
pub fn sifd1_step(state: &mut StepperState) -> Result<GridFunction> {
    with_scheme(state, SchemeKind::Sifd1)
}

/// Crank-Nicolson step, Newton on the full periodic system.
pub fn cnfd_step(state: &mut StepperState) -> Result<GridFunction> {
    with_scheme(state, SchemeKind::Cnfd)
}

fn with_scheme(state: &mut StepperState, kind: SchemeKind) -> Result<GridFunction> {
    let saved = state.scheme;
    state.scheme = kind;
    let out = state.next_level();
    state.scheme = saved;
    out
}

/// Residual of `kind` at level `n` for the triple `(u^{n-1}, u^n, u^{n+1})`,
/// in the equation's own units (`mass * delta_t^2 u - ...`).
#[allow(clippy::too_many_arguments)]
pub fn scheme_residual(
    kind: SchemeKind,
    g: &Grid1D,
    tau: f64,
    mass: f64,
    eps2: f64,
    u_prev: &GridFunction,
    u_curr: &GridFunction,
    u_next: &GridFunction,
) -> Result<GridFunction> {
    g.check(u_prev)?;
    g.check(u_curr)?;
    g.check(u_next)?;
    let m = g.m();
    let (p, u, v) = (u_prev.as_slice(), u_curr.as_slice(), u_next.as_slice());
    let mut lap_u = vec![0.0; m];
    let mut lap_pv = vec![0.0; m];
    d2x_into(g.h(), u, &mut lap_u);
    let avg: Vec<f64> = p.iter().zip(v).map(|(a, b)| a + b).collect();
    d2x_into(g.h(), &avg, &mut lap_pv);
    let out = (0..m)
        .map(|j| {
            let dtt = mass * (v[j] - 2.0 * u[j] + p[j]) / (tau * tau);
            let half_sum = 0.5 * (v[j] + p[j]);
            match kind {
                SchemeKind::Cnfd => dtt - 0.5 * lap_pv[j] + half_sum + eps2 * eval_g(v[j], p[j]),
                SchemeKind::Sifd1 => dtt - lap_u[j] + half_sum + eps2 * eval_g(v[j], p[j]),
                SchemeKind::Sifd2 => dtt - 0.5 * lap_pv[j] + half_sum + eps2 * u[j].powi(3),
                SchemeKind::Lffd => dtt - lap_u[j] + u[j] + eps2 * u[j].powi(3),
            }
        })
        .collect();
    Ok(GridFunction::from_vec_unchecked(out))
}

/// Runs `kind` from the Taylor first step to level `n_steps`.
pub fn run(
    spec: &ProblemSpec,
    kind: SchemeKind,
    g: &Grid1D,
    tau: f64,
    n_steps: usize,
    solver: SolverParams,
) -> Result<StepperState> {
    run_with(spec, kind, g, tau, n_steps, solver, |_| Ok(()))
}

/// As [`run`], calling `observe` on the initial state and after every step.
pub fn run_with(
    spec: &ProblemSpec,
    kind: SchemeKind,
    g: &Grid1D,
    tau: f64,
    n_steps: usize,
    solver: SolverParams,
    observe: impl FnMut(&StepperState) -> Result<()>,
) -> Result<StepperState> {
    if n_steps == 0 {
        return Err(Error::config("run needs at least one step"));
    }
    let state = StepperState::from_problem(spec, kind, *g, tau, solver)?;
    advance_to(state, n_steps, observe)
}

/// Advances `state` until `state.n == n_final`, observing every level.
pub fn advance_to(
    mut state: StepperState,
    n_final: usize,
    mut observe: impl FnMut(&StepperState) -> Result<()>,
) -> Result<StepperState> {
    observe(&state)?;
    while state.n < n_final {
        state.advance()?;
        observe(&state)?;
    }
    Ok(state)
}
