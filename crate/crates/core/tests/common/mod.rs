//! Smooth random test data shared by the property and acceptance suites.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use strip_bifurcation::domain::{
    collocation_grid, inner_product, make_strip, BoundaryProfile, CollocationGrid, LinearPair,
    StripField,
};

pub fn grid(m: u32, ell: i64, nx: usize, nt: usize) -> CollocationGrid {
    collocation_grid(make_strip(m, ell).unwrap(), nx, nt).unwrap()
}

/// Number of `t`-frequencies in a random field.
pub const FREQS: usize = 3;

/// Dirichlet field `sum_k cos(kx) sum_p c[k][p] sin(p t / (2m+1))`.
pub fn dirichlet_field(g: &CollocationGrid, c: &[f64]) -> StripField {
    let scale = 1.0 / (2 * g.params().m() + 1) as f64;
    StripField::from_mode_fn(g, true, |k, t| {
        (0..FREQS)
            .map(|p| c[k * FREQS + p] * ((p + 1) as f64 * scale * t).sin())
            .sum()
    })
}

/// Odd field with no boundary condition, frequencies `(p + 1/2) / (2m+1)`.
pub fn free_field(g: &CollocationGrid, c: &[f64]) -> StripField {
    let scale = 1.0 / (2 * g.params().m() + 1) as f64;
    StripField::from_mode_fn(g, false, |k, t| {
        (0..FREQS)
            .map(|p| c[k * FREQS + p] * ((p as f64 + 0.5) * scale * t).sin())
            .sum()
    })
}

/// Coefficient count needed by the field builders plus a profile.
pub fn n_coeffs(g: &CollocationGrid) -> usize {
    g.nx() * (FREQS + 1)
}

pub fn split(g: &CollocationGrid, c: &[f64]) -> (Vec<f64>, BoundaryProfile) {
    let n = g.nx() * FREQS;
    (c[..n].to_vec(), BoundaryProfile::new(c[n..n + g.nx()].to_vec()))
}

pub fn norm(g: &CollocationGrid, p: &LinearPair) -> f64 {
    inner_product(g, p, p).unwrap().sqrt()
}

/// Seeded coefficients uniform in `[-1, 1)` for the acceptance suite.
pub fn coeffs(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}
