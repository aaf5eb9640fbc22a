//! Linear solvers for the periodic systems `(diag_j) x_j + off (x_{j-1} + x_{j+1}) = r_j`.
//!
//! Two independent routes: cyclic Thomas elimination with a Sherman-Morrison
//! corner correction (any diagonal), and Fourier diagonalisation (constant
//! diagonal only).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Reusable scratch for the cyclic tridiagonal solver.
#[derive(Debug, Clone, Default)]
pub struct CyclicTridiagonal {
    pivots: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl CyclicTridiagonal {
    pub fn new(m: usize) -> Self {
        CyclicTridiagonal {
            pivots: vec![0.0; m],
            y: vec![0.0; m],
            z: vec![0.0; m],
        }
    }

    /// Solves the periodic tridiagonal system with diagonal `diag` and the
    /// constant coupling `off` to both neighbours (wrapping at the ends),
    /// writing the solution into `x`.
    ///
    /// The matrix must be strictly diagonally dominant; every caller in this
    /// crate satisfies that by construction.
    pub fn solve(&mut self, diag: &[f64], off: f64, rhs: &[f64], x: &mut [f64]) {
        let m = diag.len();
        debug_assert!(m >= 2 && rhs.len() == m && x.len() == m);
        if m == 2 {
            // Both neighbours of each node are the other node.
            let (a, c, d) = (diag[0], 2.0 * off, diag[1]);
            let det = a * d - c * c;
            x[0] = (d * rhs[0] - c * rhs[1]) / det;
            x[1] = (a * rhs[1] - c * rhs[0]) / det;
            return;
        }
        if self.pivots.len() != m {
            *self = CyclicTridiagonal::new(m);
        }

        // A = A' + u v^T with u = (g, 0, .., 0, off), v = (1, 0, .., 0, off / g).
        let g = -diag[0];
        let first = diag[0] - g;
        let last = diag[m - 1] - off * off / g;

        // Forward elimination shared by both right-hand sides.
        let pivots = &mut self.pivots;
        let (y, z) = (&mut self.y, &mut self.z);
        pivots[0] = first;
        y[0] = rhs[0];
        z[0] = g;
        for j in 1..m {
            let d = if j == m - 1 { last } else { diag[j] };
            let w = off / pivots[j - 1];
            pivots[j] = d - w * off;
            y[j] = rhs[j] - w * y[j - 1];
            z[j] = (if j == m - 1 { off } else { 0.0 }) - w * z[j - 1];
        }
        y[m - 1] /= pivots[m - 1];
        z[m - 1] /= pivots[m - 1];
        for j in (0..m - 1).rev() {
            y[j] = (y[j] - off * y[j + 1]) / pivots[j];
            z[j] = (z[j] - off * z[j + 1]) / pivots[j];
        }

        let factor = (y[0] + off * y[m - 1] / g) / (1.0 + z[0] + off * z[m - 1] / g);
        for j in 0..m {
            x[j] = y[j] - factor * z[j];
        }
    }
}

/// Solver for `(alpha I - coupling * D2) x = r` on a periodic grid via FFT,
/// using the eigenvalues `-4 sin^2(pi l / M) / h^2` of the second difference.
#[derive(Clone)]
pub struct FourierDiagonalSolver {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    neg_lambda: Vec<f64>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for FourierDiagonalSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierDiagonalSolver").field("m", &self.m).finish()
    }
}

impl FourierDiagonalSolver {
    pub fn new(m: usize, h: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let neg_lambda = (0..m)
            .map(|l| {
                let s = (std::f64::consts::PI * l as f64 / m as f64).sin();
                4.0 * s * s / (h * h)
            })
            .collect();
        FourierDiagonalSolver {
            m,
            forward,
            inverse,
            neg_lambda,
            buffer: vec![Complex64::new(0.0, 0.0); m],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn solve(&mut self, alpha: f64, coupling: f64, rhs: &[f64], x: &mut [f64]) {
        debug_assert!(rhs.len() == self.m && x.len() == self.m);
        for (b, &r) in self.buffer.iter_mut().zip(rhs) {
            *b = Complex64::new(r, 0.0);
        }
        self.forward
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        let norm = 1.0 / self.m as f64;
        for (b, &nl) in self.buffer.iter_mut().zip(&self.neg_lambda) {
            *b *= norm / (alpha + coupling * nl);
        }
        self.inverse
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (xi, b) in x.iter_mut().zip(&self.buffer) {
            *xi = b.re;
        }
    }
}
