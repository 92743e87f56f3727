use nalgebra::{DMatrix, DVector};

use super::CollocationGrid;
use crate::error::{Error, Result};

/// Scalar field on the closed reference strip, stored as cosine modes in
/// `x` times nodal values at the positive `t`-nodes.
///
/// Entry `(k, j)` is `U_k(t_j)`; the represented function is
/// `u(x, t) = sum_k U_k(t) cos(kx)` with each `U_k` extended oddly.
#[derive(Debug, Clone, PartialEq)]
pub struct StripField {
    modes: DMatrix<f64>,
    dirichlet: bool,
}

impl StripField {
    pub fn zeros(grid: &CollocationGrid, dirichlet: bool) -> Self {
        Self {
            modes: DMatrix::zeros(grid.nx(), grid.nt()),
            dirichlet,
        }
    }

    /// Wrap a mode matrix. With `dirichlet` set the boundary column must vanish.
    pub fn from_modes(modes: DMatrix<f64>, dirichlet: bool) -> Result<Self> {
        if dirichlet && modes.ncols() > 0 && modes.column(0).iter().any(|&v| v != 0.0) {
            return Err(Error::Contract(
                "dirichlet field has nonzero values at t = pi_m".into(),
            ));
        }
        Ok(Self { modes, dirichlet })
    }

    /// Build from `U_k(t)` given mode-wise. With `dirichlet` set the
    /// boundary node is pinned to zero.
    pub fn from_mode_fn<F: Fn(usize, f64) -> f64>(
        grid: &CollocationGrid,
        dirichlet: bool,
        f: F,
    ) -> Self {
        let mut modes = DMatrix::from_fn(grid.nx(), grid.nt(), |k, j| f(k, grid.t_nodes()[j]));
        if dirichlet {
            modes.column_mut(0).fill(0.0);
        }
        Self { modes, dirichlet }
    }

    /// Sample a function of `(x, t)`, even in `x`, by cosine projection.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &CollocationGrid, dirichlet: bool, f: F) -> Self {
        let mut modes = DMatrix::zeros(grid.nx(), grid.nt());
        for (j, &t) in grid.t_nodes().iter().enumerate() {
            let values: Vec<f64> = grid.xq().iter().map(|&x| f(x, t)).collect();
            for (k, c) in grid.project(&values).into_iter().enumerate() {
                modes[(k, j)] = c;
            }
        }
        if dirichlet {
            modes.column_mut(0).fill(0.0);
        }
        Self { modes, dirichlet }
    }

    pub fn nx(&self) -> usize {
        self.modes.nrows()
    }

    pub fn nt(&self) -> usize {
        self.modes.ncols()
    }

    pub fn is_dirichlet(&self) -> bool {
        self.dirichlet
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn value(&self, k: usize, j: usize) -> f64 {
        self.modes[(k, j)]
    }

    /// Nodal values of mode `k`.
    pub fn mode(&self, k: usize) -> DVector<f64> {
        self.modes.row(k).transpose()
    }

    pub fn mode_slice(&self, k: usize) -> Vec<f64> {
        self.modes.row(k).iter().copied().collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            modes: &self.modes * factor,
            dirichlet: self.dirichlet,
        }
    }

    /// `self + factor * other`; the result is Dirichlet only if both are.
    pub fn add_scaled(&self, other: &StripField, factor: f64) -> Self {
        Self {
            modes: &self.modes + &other.modes * factor,
            dirichlet: self.dirichlet && other.dirichlet,
        }
    }

    /// Point evaluation; exactly odd in `t` and exactly even in `x`.
    pub fn eval(&self, grid: &CollocationGrid, x: f64, t: f64) -> f64 {
        let xr = x.abs().rem_euclid(2.0 * std::f64::consts::PI);
        let sign = if t.is_sign_negative() { -1.0 } else { 1.0 };
        let ta = t.abs();
        let mut total = 0.0;
        for k in 0..self.nx() {
            let row = self.mode_slice(k);
            total += grid.interpolate_t(&row, ta, true) * (k as f64 * xr).cos();
        }
        sign * total
    }

    /// Max of `|u|` over the oversampled x-points and the stored t-nodes.
    pub fn sup_norm(&self, grid: &CollocationGrid) -> f64 {
        let mut sup: f64 = 0.0;
        for j in 0..self.nt() {
            for i in 0..grid.xq().len() {
                let v: f64 = (0..self.nx()).map(|k| self.modes[(k, j)] * grid.cos_q(k)[i]).sum();
                sup = sup.max(v.abs());
            }
        }
        sup
    }
}
