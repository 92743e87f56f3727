//! Reference strip, perturbed strips and their spectral representation.
//!
//! The reference strip is `R x (-pi_m, pi_m)` with `pi_m = (2m + 1) pi`.
//! Fields are even and 2pi-periodic in `x` and odd in `t`; only the half
//! `t >= 0` is stored and the other half is obtained by reflection.

mod field;
mod grid;
pub(crate) mod lgl;

pub use field::StripField;
pub use grid::{collocation_grid, CollocationGrid};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest value a profile may take when used as a domain map.
pub const MIN_PROFILE: f64 = 0.1;

/// Fixed reference strip index `m` and mode index `ell`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripParams {
    m: u32,
    ell: u32,
    pi_m: f64,
}

impl StripParams {
    pub fn new(m: u32, ell: u32) -> Result<Self> {
        if ell > 2 * m {
            return Err(Error::Parameter(format!(
                "mode index ell = {ell} outside 0..=2m = 0..={}",
                2 * m
            )));
        }
        Ok(Self {
            m,
            ell,
            pi_m: (2 * m + 1) as f64 * PI,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// Half-height `(2m + 1) pi` of the reference strip.
    pub fn pi_m(&self) -> f64 {
        self.pi_m
    }

    /// `(-1)^ell`
    pub fn parity_sign(&self) -> f64 {
        if self.ell.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Validated strip parameters.
pub fn make_strip(m: u32, ell: i64) -> Result<StripParams> {
    if ell < 0 {
        return Err(Error::Parameter(format!("mode index ell = {ell} is negative")));
    }
    StripParams::new(m, ell as u32)
}

/// Even, 2pi-periodic profile `h(x) = sum_k h_k cos(kx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProfile {
    coeffs: Vec<f64>,
}

impl BoundaryProfile {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(modes: usize) -> Self {
        Self { coeffs: vec![0.0; modes] }
    }

    pub fn constant(value: f64, modes: usize) -> Self {
        let mut p = Self::zeros(modes.max(1));
        p.coeffs[0] = value;
        p
    }

    /// Single mode `amplitude * cos(kx)`.
    pub fn mode(k: usize, amplitude: f64, modes: usize) -> Self {
        let mut p = Self::zeros(modes.max(k + 1));
        p.coeffs[k] = amplitude;
        p
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Number of retained modes (`K + 1`).
    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * (k as f64 * x).cos())
            .sum()
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| -(k as f64) * c * (k as f64 * x).sin())
            .sum()
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| -((k * k) as f64) * c * (k as f64 * x).cos())
            .sum()
    }

    /// `1 + self`, the domain map associated with a perturbation.
    pub fn one_plus(&self) -> Self {
        let mut p = self.clone();
        if p.coeffs.is_empty() {
            p.coeffs.push(0.0);
        }
        p.coeffs[0] += 1.0;
        p
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Minimum over `samples` uniform points of one period.
    pub fn min_on_grid(&self, samples: usize) -> f64 {
        let n = samples.max(1);
        (0..n)
            .map(|i| self.eval(2.0 * PI * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Sup-norm over `samples` uniform points of one period.
    pub fn sup_on_grid(&self, samples: usize) -> f64 {
        let n = samples.max(1);
        (0..n)
            .map(|i| self.eval(2.0 * PI * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Fails with a domain error unless the profile stays above `guard`.
    pub fn check_positive(&self, guard: f64) -> Result<()> {
        let min = self.min_on_grid(16 * self.modes().max(4));
        if min < guard || !min.is_finite() {
            return Err(Error::Domain { min, guard });
        }
        Ok(())
    }
}

/// A (field, profile) pair: element of the product space on which the
/// linearization and its adjoint act.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPair {
    pub field: StripField,
    pub profile: BoundaryProfile,
}

impl LinearPair {
    pub fn new(field: StripField, profile: BoundaryProfile) -> Self {
        Self { field, profile }
    }

    pub fn zeros(grid: &CollocationGrid) -> Self {
        Self {
            field: StripField::zeros(grid, true),
            profile: BoundaryProfile::zeros(grid.nx()),
        }
    }
}

/// `(x, tau) -> (x, tau / h(x))`
pub fn map_to_physical(h: &BoundaryProfile, x: f64, tau: f64) -> Result<(f64, f64)> {
    let hx = h.eval(x);
    if hx <= 0.0 {
        return Err(Error::Domain { min: hx, guard: 0.0 });
    }
    Ok((x, tau / hx))
}

/// `(x, t) -> (x, h(x) t)`
pub fn map_to_reference(h: &BoundaryProfile, x: f64, t: f64) -> Result<(f64, f64)> {
    let hx = h.eval(x);
    if hx <= 0.0 {
        return Err(Error::Domain { min: hx, guard: 0.0 });
    }
    Ok((x, hx * t))
}

/// Weight of `cos(kx)^2` integrated over one period.
pub(crate) fn mode_norm(k: usize) -> f64 {
    if k == 0 {
        2.0 * PI
    } else {
        PI
    }
}

/// `<(v, g), (w, h)> = int int v w dx dt + int g h dx` over
/// `(-pi, pi) x (-pi_m, pi_m)` and `(-pi, pi)`.
///
/// The x-integrals are evaluated exactly through cosine orthogonality,
/// the t-integral by Gauss–Lobatto quadrature.
pub fn inner_product(grid: &CollocationGrid, a: &LinearPair, b: &LinearPair) -> Result<f64> {
    grid.check_field(&a.field)?;
    grid.check_field(&b.field)?;
    if a.profile.modes() != b.profile.modes() {
        return Err(Error::Dimension(format!(
            "profile modes differ: {} vs {}",
            a.profile.modes(),
            b.profile.modes()
        )));
    }
    Ok(field_product(grid, &a.field, &b.field)
        + a.profile
            .coeffs()
            .iter()
            .zip(b.profile.coeffs())
            .enumerate()
            .map(|(k, (g, h))| mode_norm(k) * g * h)
            .sum::<f64>())
}

/// `int int v w dx dt` for two fields on the same grid.
pub(crate) fn field_product(grid: &CollocationGrid, v: &StripField, w: &StripField) -> f64 {
    let tw = grid.t_weights();
    let mut total = 0.0;
    for k in 0..grid.nx() {
        let mut s = 0.0;
        for (j, wj) in tw.iter().enumerate() {
            s += 2.0 * wj * v.value(k, j) * w.value(k, j);
        }
        total += mode_norm(k) * s;
    }
    total
}
