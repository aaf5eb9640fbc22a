//! Fourier pseudospectral reference solver with a Gautschi-type exponential
//! wave integrator.
//!
//! Each Fourier mode obeys `u_l'' + omega_l^2 u_l = -f_l` with
//! `omega_l = sqrt(1 + mu_l^2)` and `f = eps2 u^3`. The linear part is
//! integrated exactly; the nonlinearity is frozen for the position update and
//! averaged over the step for the velocity update.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, GridFunction};
use crate::problem::ProblemSpec;

/// Progress guard shared with the finite difference schemes.
const BLOWUP_GUARD: f64 = crate::schemes::BLOWUP_GUARD;

#[derive(Clone)]
struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Plans {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Plans {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }
}

/// Per-mode propagator for a fixed step.
#[derive(Debug, Clone)]
struct Propagator {
    tau: f64,
    cos: Vec<f64>,
    sin_over_omega: Vec<f64>,
    omega_sin: Vec<f64>,
    one_minus_cos_over_omega2: Vec<f64>,
}

/// Spectral coefficients of `u` and `u_t` (unnormalised DFT convention).
#[derive(Clone)]
pub struct SpectralState {
    pub grid: Grid1D,
    pub u_hat: Vec<Complex64>,
    pub v_hat: Vec<Complex64>,
    /// `mu_l = 2 pi l / (b - a)` in FFT index order.
    pub mu: Vec<f64>,
    pub omega: Vec<f64>,
    pub t: f64,
    pub n: usize,
    /// Largest `|Im|` relative to `max |Re|` seen in any inverse transform.
    pub max_imag_residue: f64,
    f_hat: Vec<Complex64>,
    f_eps2: f64,
    plans: Plans,
    prop: Option<Propagator>,
    buf: Vec<Complex64>,
}

impl std::fmt::Debug for SpectralState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralState")
            .field("grid", &self.grid)
            .field("t", &self.t)
            .field("n", &self.n)
            .finish()
    }
}

/// Wave index of FFT slot `k` on `M` points: `0..M/2-1` then `-M/2..-1`.
fn wave_index(k: usize, m: usize) -> i64 {
    if k < m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

impl SpectralState {
    /// Transforms physical data `u(., 0)`, `u_t(., 0)`; `M` must be even.
    pub fn new(grid: Grid1D, u0: &GridFunction, v0: &GridFunction, eps2: f64) -> Result<Self> {
        grid.check(u0)?;
        grid.check(v0)?;
        let m = grid.m();
        if m % 2 != 0 {
            return Err(Error::structural(format!(
                "spectral grid needs an even number of cells, got {m}"
            )));
        }
        let mu: Vec<f64> = (0..m)
            .map(|k| 2.0 * std::f64::consts::PI * wave_index(k, m) as f64 / grid.length())
            .collect();
        let omega = mu.iter().map(|mu| (1.0 + mu * mu).sqrt()).collect();
        let mut state = SpectralState {
            grid,
            u_hat: vec![Complex64::new(0.0, 0.0); m],
            v_hat: vec![Complex64::new(0.0, 0.0); m],
            mu,
            omega,
            t: 0.0,
            n: 0,
            max_imag_residue: 0.0,
            f_hat: vec![Complex64::new(0.0, 0.0); m],
            f_eps2: eps2,
            plans: Plans::new(m),
            prop: None,
            buf: vec![Complex64::new(0.0, 0.0); m],
        };
        state.u_hat = state.forward(u0.as_slice());
        state.v_hat = state.forward(v0.as_slice());
        state.refresh_nonlinearity(eps2, None)?;
        Ok(state)
    }

    /// Spectral state for the initial data of `spec` on `grid`.
    pub fn from_problem(spec: &ProblemSpec, grid: Grid1D) -> Result<Self> {
        let u0 = grid.sample(|x| (spec.phi)(x));
        let v0 = grid.sample(|x| (spec.gamma)(x));
        SpectralState::new(grid, &u0, &v0, spec.eps2())
    }

    fn forward(&mut self, values: &[f64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plans
            .forward
            .process_with_scratch(&mut out, &mut self.plans.scratch);
        out
    }

    /// Inverse transform of `coeffs` into `self.buf`; returns the imaginary residue.
    fn inverse_into_buf(&mut self, coeffs: &[Complex64]) -> f64 {
        let norm = 1.0 / self.grid.m() as f64;
        for (b, c) in self.buf.iter_mut().zip(coeffs) {
            *b = c * norm;
        }
        self.plans
            .inverse
            .process_with_scratch(&mut self.buf, &mut self.plans.scratch);
        let (mut re, mut im) = (0.0_f64, 0.0_f64);
        for b in &self.buf {
            re = re.max(b.re.abs());
            im = im.max(b.im.abs());
        }
        if re > 0.0 {
            im / re
        } else {
            im
        }
    }

    /// Recomputes `f_hat` from `u_hat` (or from physical values already in
    /// `self.buf` when `physical` is given).
    fn refresh_nonlinearity(&mut self, eps2: f64, physical: Option<()>) -> Result<()> {
        if physical.is_none() {
            let u_hat = std::mem::take(&mut self.u_hat);
            let residue = self.inverse_into_buf(&u_hat);
            self.u_hat = u_hat;
            self.max_imag_residue = self.max_imag_residue.max(residue);
        }
        let mut max_abs = 0.0_f64;
        for b in self.buf.iter_mut() {
            let u = b.re;
            max_abs = if u.is_finite() { max_abs.max(u.abs()) } else { f64::INFINITY };
            *b = Complex64::new(eps2 * u * u * u, 0.0);
        }
        if !max_abs.is_finite() || max_abs > BLOWUP_GUARD {
            return Err(Error::BlowUp {
                step: self.n,
                max_abs,
            });
        }
        self.plans
            .forward
            .process_with_scratch(&mut self.buf, &mut self.plans.scratch);
        self.f_hat.copy_from_slice(&self.buf);
        self.f_eps2 = eps2;
        Ok(())
    }

    fn propagator(&mut self, tau: f64) -> &Propagator {
        let stale = self.prop.as_ref().map_or(true, |p| p.tau != tau);
        if stale {
            let mut p = Propagator {
                tau,
                cos: Vec::with_capacity(self.omega.len()),
                sin_over_omega: Vec::with_capacity(self.omega.len()),
                omega_sin: Vec::with_capacity(self.omega.len()),
                one_minus_cos_over_omega2: Vec::with_capacity(self.omega.len()),
            };
            for &w in &self.omega {
                let (s, c) = (tau * w).sin_cos();
                p.cos.push(c);
                p.sin_over_omega.push(s / w);
                p.omega_sin.push(w * s);
                // 1 - cos(x) = 2 sin^2(x / 2), stable for small x.
                let half = (0.5 * tau * w).sin();
                p.one_minus_cos_over_omega2.push(2.0 * half * half / (w * w));
            }
            self.prop = Some(p);
        }
        self.prop.as_ref().expect("propagator just built")
    }

    /// Advances in place by one step of size `tau`.
    pub fn advance(&mut self, tau: f64, eps2: f64) -> Result<()> {
        if eps2 != self.f_eps2 {
            self.refresh_nonlinearity(eps2, None)?;
        }
        let m = self.grid.m();
        self.propagator(tau);
        let prop = self.prop.take().expect("propagator present");
        let f_old = std::mem::take(&mut self.f_hat);
        let mut u_new = vec![Complex64::new(0.0, 0.0); m];
        for l in 0..m {
            u_new[l] = self.u_hat[l] * prop.cos[l] + self.v_hat[l] * prop.sin_over_omega[l]
                - f_old[l] * prop.one_minus_cos_over_omega2[l];
        }
        self.f_hat = vec![Complex64::new(0.0, 0.0); m];
        let residue = self.inverse_into_buf(&u_new);
        self.max_imag_residue = self.max_imag_residue.max(residue);
        self.n += 1;
        self.refresh_nonlinearity(eps2, Some(()))?;
        for l in 0..m {
            let v = -self.u_hat[l] * prop.omega_sin[l] + self.v_hat[l] * prop.cos[l]
                - (f_old[l] + self.f_hat[l]) * (0.5 * prop.sin_over_omega[l]);
            self.v_hat[l] = v;
        }
        self.u_hat = u_new;
        self.t += tau;
        self.prop = Some(prop);
        if self.u_hat.iter().chain(&self.v_hat).any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::BlowUp {
                step: self.n,
                max_abs: f64::INFINITY,
            });
        }
        Ok(())
    }

    /// Physical values of `u`.
    pub fn u(&self) -> GridFunction {
        self.physical(&self.u_hat)
    }

    /// Physical values of `u_t`.
    pub fn u_t(&self) -> GridFunction {
        self.physical(&self.v_hat)
    }

    fn physical(&self, coeffs: &[Complex64]) -> GridFunction {
        let mut plans = self.plans.clone();
        let norm = 1.0 / self.grid.m() as f64;
        let mut buf: Vec<Complex64> = coeffs.iter().map(|c| c * norm).collect();
        plans.inverse.process_with_scratch(&mut buf, &mut plans.scratch);
        GridFunction::from_vec_unchecked(buf.iter().map(|c| c.re).collect())
    }

    /// Largest `|c_l - conj(c_{-l})|` over both coefficient arrays.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let m = self.grid.m();
        let mut worst = 0.0_f64;
        for coeffs in [&self.u_hat, &self.v_hat] {
            for k in 0..m {
                let mirror = (m - k) % m;
                worst = worst.max((coeffs[k] - coeffs[mirror].conj()).norm());
            }
        }
        worst
    }
}

/// Functional form of [`SpectralState::advance`].
pub fn ewi_step(state: &SpectralState, tau_e: f64, eps2: f64) -> Result<SpectralState> {
    let mut next = state.clone();
    next.advance(tau_e, eps2)?;
    Ok(next)
}

/// Integrates `spec` to `t_final` on `fine_m` cells with step close to `tau_e`
/// (shrunk so that it divides `t_final`) and returns the fine-grid solution.
pub fn reference_fine(spec: &ProblemSpec, t_final: f64, fine_m: usize, tau_e: f64) -> Result<GridFunction> {
    let fine = Grid1D::new(spec.a, spec.b, fine_m)?;
    if t_final < 0.0 || !t_final.is_finite() {
        return Err(Error::config(format!("final time must be >= 0, got {t_final}")));
    }
    if !(tau_e > 0.0) {
        return Err(Error::config(format!("reference step must be positive, got {tau_e}")));
    }
    let mut state = SpectralState::from_problem(spec, fine)?;
    if t_final == 0.0 {
        return Ok(state.u());
    }
    let steps = (t_final / tau_e - 1e-9).ceil().max(1.0) as usize;
    let tau = t_final / steps as f64;
    let eps2 = spec.eps2();
    for _ in 0..steps {
        state.advance(tau, eps2)?;
    }
    Ok(state.u())
}

/// Restricts a fine-grid function to the nodes of `coarse` by subsampling.
pub fn restrict(fine_grid: &Grid1D, fine: &GridFunction, coarse: &Grid1D) -> Result<GridFunction> {
    fine_grid.check(fine)?;
    let factor = coarse.refinement_factor(fine_grid)?;
    Ok(GridFunction::from_vec_unchecked(
        fine.as_slice().iter().step_by(factor).copied().collect(),
    ))
}

/// Reference solution at `t_final` sampled on `coarse`, computed on `fine_m`
/// cells; `fine_m` must be a multiple of `coarse.m()`.
pub fn reference_solve(
    spec: &ProblemSpec,
    t_final: f64,
    fine_m: usize,
    tau_e: f64,
    coarse: &Grid1D,
) -> Result<GridFunction> {
    let fine_grid = Grid1D::new(spec.a, spec.b, fine_m)?;
    coarse.refinement_factor(&fine_grid)?;
    let fine = reference_fine(spec, t_final, fine_m, tau_e)?;
    restrict(&fine_grid, &fine, coarse)
}
