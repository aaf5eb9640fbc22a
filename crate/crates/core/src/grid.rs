//! Periodic uniform 1D grid, finite difference operators and discrete norms.
//!
//! A grid function stores the `M` values `u_0..u_{M-1}`; the closing node
//! `u_M = u_0` is implicit and every operator wraps indices modulo `M`.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[a, b]` with `M` cells of width `h = (b - a) / M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    a: f64,
    b: f64,
    m: usize,
    h: f64,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::structural(format!("invalid interval [{a}, {b}]")));
        }
        if m < 2 {
            return Err(Error::structural(format!("grid needs at least 2 cells, got {m}")));
        }
        Ok(Grid1D {
            a,
            b,
            m,
            h: (b - a) / m as f64,
        })
    }

    /// Grid on `[a, b]` whose cell count is the nearest integer to `(b - a) / h`.
    pub fn with_spacing(a: f64, b: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::structural(format!("mesh size must be positive, got {h}")));
        }
        let m = ((b - a) / h).round();
        if !(m >= 2.0) {
            return Err(Error::structural(format!("mesh size {h} too coarse for [{a}, {b}]")));
        }
        Grid1D::new(a, b, m as usize)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Node `x_j = a + j h` for `j = 0..=M`.
    pub fn node(&self, j: usize) -> f64 {
        if j == self.m {
            self.b
        } else {
            self.a + j as f64 * self.h
        }
    }

    /// The `M` stored nodes `x_0..x_{M-1}`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.node(j)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction((0..self.m).map(|j| f(self.node(j))).collect())
    }

    /// Grid-function length check shared by every operator.
    pub fn check(&self, u: &GridFunction) -> Result<()> {
        if u.len() != self.m {
            return Err(Error::structural(format!(
                "grid function has {} values, grid has M = {}",
                u.len(),
                self.m
            )));
        }
        Ok(())
    }

    /// Ratio `M_fine / M_self` when `fine` refines this grid node-for-node.
    pub fn refinement_factor(&self, fine: &Grid1D) -> Result<usize> {
        let same_domain = (self.a - fine.a).abs() <= 1e-12 * self.length().max(1.0)
            && (self.b - fine.b).abs() <= 1e-12 * self.length().max(1.0);
        if !same_domain || fine.m % self.m != 0 {
            return Err(Error::structural(format!(
                "grid with M = {} on [{}, {}] is not nested in M = {} on [{}, {}]",
                self.m, self.a, self.b, fine.m, fine.a, fine.b
            )));
        }
        Ok(fine.m / self.m)
    }
}

/// Real periodic grid vector in `X_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction(Vec<f64>);

impl GridFunction {
    /// Wraps `values`, rejecting non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::structural(format!("non-finite value at node {j}")));
        }
        Ok(GridFunction(values))
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        GridFunction(values)
    }

    pub fn zeros(m: usize) -> Self {
        GridFunction(vec![0.0; m])
    }

    pub fn constant(m: usize, c: f64) -> Self {
        GridFunction(vec![c; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Value at any integer index, wrapped periodically.
    pub fn wrapped(&self, j: isize) -> f64 {
        let m = self.0.len() as isize;
        self.0[j.rem_euclid(m) as usize]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, s: f64) -> GridFunction {
        GridFunction(self.0.iter().map(|v| s * v).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction(self.0.iter().map(|&v| f(v)).collect())
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.len() != other.len() {
            return Err(Error::structural(format!(
                "length mismatch {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(GridFunction(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

impl Index<usize> for GridFunction {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

impl IndexMut<usize> for GridFunction {
    fn index_mut(&mut self, j: usize) -> &mut f64 {
        &mut self.0[j]
    }
}

pub(crate) fn d2x_into(h: f64, u: &[f64], out: &mut [f64]) {
    let m = u.len();
    let inv_h2 = 1.0 / (h * h);
    out[0] = (u[1] - 2.0 * u[0] + u[m - 1]) * inv_h2;
    for j in 1..m - 1 {
        out[j] = (u[j + 1] - 2.0 * u[j] + u[j - 1]) * inv_h2;
    }
    out[m - 1] = (u[0] - 2.0 * u[m - 1] + u[m - 2]) * inv_h2;
}

pub(crate) fn dplus_into(h: f64, u: &[f64], out: &mut [f64]) {
    let m = u.len();
    for j in 0..m - 1 {
        out[j] = (u[j + 1] - u[j]) / h;
    }
    out[m - 1] = (u[0] - u[m - 1]) / h;
}

/// Squared semi-`H^1` norm `h * sum (delta_x^+ u_j)^2` without allocating.
pub(crate) fn seminorm_h1_sq(h: f64, u: &[f64]) -> f64 {
    let m = u.len();
    let mut acc = 0.0;
    for j in 0..m {
        let d = (u[(j + 1) % m] - u[j]) / h;
        acc += d * d;
    }
    h * acc
}

/// Second difference `delta_x^2 u` with periodic wrap.
pub fn d2x(g: &Grid1D, u: &GridFunction) -> Result<GridFunction> {
    g.check(u)?;
    let mut out = vec![0.0; g.m()];
    d2x_into(g.h(), u.as_slice(), &mut out);
    Ok(GridFunction(out))
}

/// Forward difference `delta_x^+ u` with periodic wrap.
pub fn dplus_x(g: &Grid1D, u: &GridFunction) -> Result<GridFunction> {
    g.check(u)?;
    let mut out = vec![0.0; g.m()];
    dplus_into(g.h(), u.as_slice(), &mut out);
    Ok(GridFunction(out))
}

pub fn norm_l2(g: &Grid1D, u: &GridFunction) -> Result<f64> {
    g.check(u)?;
    Ok((g.h() * u.0.iter().map(|v| v * v).sum::<f64>()).sqrt())
}

/// `||delta_x^+ u||_{l^2}`.
pub fn seminorm_h1(g: &Grid1D, u: &GridFunction) -> Result<f64> {
    g.check(u)?;
    Ok(seminorm_h1_sq(g.h(), u.as_slice()).sqrt())
}

pub fn norm_linf(g: &Grid1D, u: &GridFunction) -> Result<f64> {
    g.check(u)?;
    Ok(u.max_abs())
}

/// Discrete inner product `(u, v) = h * sum u_j v_j`.
pub fn inner(g: &Grid1D, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    g.check(u)?;
    g.check(v)?;
    Ok(g.h() * u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum::<f64>())
}
