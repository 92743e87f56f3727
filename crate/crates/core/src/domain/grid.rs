use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{lgl, StripField, StripParams};
use crate::error::{Error, Result};

/// Discretization of the reference strip.
///
/// * `x`: `nx` cosine modes `k = 0..nx`; products are formed on an
///   oversampled trapezoid grid over `[0, pi]` and projected back.
/// * `t`: Legendre–Gauss–Lobatto nodes of degree `2 nt - 1` on
///   `[-pi_m, pi_m]`. The `nt` nodes with `t > 0` are stored, ordered
///   from `t = pi_m` downwards; oddness supplies the rest.
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    params: StripParams,
    nx: usize,
    nt: usize,
    x_nodes: Vec<f64>,
    t_nodes: Vec<f64>,
    t_weights: Vec<f64>,
    full_nodes: Vec<f64>,
    bary: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    xq: Vec<f64>,
    cos_q: Vec<Vec<f64>>,
    sin_q: Vec<Vec<f64>>,
    proj_q: Vec<Vec<f64>>,
}

impl CollocationGrid {
    pub const DEFAULT_NX: usize = 8;
    pub const DEFAULT_NT: usize = 64;

    pub fn new(params: StripParams, nx: usize, nt: usize) -> Result<Self> {
        if nx < 2 {
            return Err(Error::Parameter(format!("nx = {nx} < 2")));
        }
        if nt < 4 {
            return Err(Error::Parameter(format!("nt = {nt} < 4")));
        }
        let degree = 2 * nt - 1;
        let (x_ref, w_ref) = lgl::nodes_and_weights(degree);
        let pi_m = params.pi_m();
        let full_nodes: Vec<f64> = x_ref.iter().map(|x| x * pi_m).collect();
        let bary = lgl::barycentric_weights(&x_ref);
        let d_ref = lgl::diff_matrix(&x_ref);
        let d2_full = lgl::diff2_matrix(&x_ref, &d_ref) / (pi_m * pi_m);
        let d_full = d_ref / pi_m;

        // Parity reduction: the value at node `degree - j` is minus the value at `j`.
        let reduce = |full: &DMatrix<f64>| {
            DMatrix::from_fn(nt, nt, |i, j| full[(i, j)] - full[(i, degree - j)])
        };
        let d1 = reduce(&d_full);
        let d2 = reduce(&d2_full);

        let nh = 2 * nx;
        let xq: Vec<f64> = (0..=nh).map(|i| PI * i as f64 / nh as f64).collect();
        let trap: Vec<f64> = (0..=nh)
            .map(|i| {
                let w = PI / nh as f64;
                if i == 0 || i == nh {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect();
        let cos_q: Vec<Vec<f64>> = (0..nx)
            .map(|k| xq.iter().map(|x| (k as f64 * x).cos()).collect())
            .collect();
        let sin_q: Vec<Vec<f64>> = (0..nx)
            .map(|k| xq.iter().map(|x| (k as f64 * x).sin()).collect())
            .collect();
        let proj_q: Vec<Vec<f64>> = (0..nx)
            .map(|k| {
                let eps = if k == 0 { 1.0 } else { 2.0 };
                (0..=nh).map(|i| eps / PI * trap[i] * cos_q[k][i]).collect()
            })
            .collect();

        Ok(Self {
            params,
            nx,
            nt,
            x_nodes: (0..nx).map(|i| 2.0 * PI * i as f64 / nx as f64).collect(),
            t_nodes: full_nodes[..nt].to_vec(),
            t_weights: w_ref[..nt].iter().map(|w| w * pi_m).collect(),
            full_nodes,
            bary,
            d1,
            d2,
            xq,
            cos_q,
            sin_q,
            proj_q,
        })
    }

    pub fn params(&self) -> &StripParams {
        &self.params
    }

    pub fn pi_m(&self) -> f64 {
        self.params.pi_m()
    }

    /// Number of cosine modes.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of stored `t`-nodes (on `(0, pi_m]`).
    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Uniform nodes on `[0, 2pi)`; each carries weight `2pi / nx`.
    pub fn x_nodes(&self) -> &[f64] {
        &self.x_nodes
    }

    pub fn x_weight(&self) -> f64 {
        2.0 * PI / self.nx as f64
    }

    /// Positive `t`-nodes, `t_nodes()[0] == pi_m`.
    pub fn t_nodes(&self) -> &[f64] {
        &self.t_nodes
    }

    /// Weights such that `int_{-pi_m}^{pi_m} f = sum_j w_j (f(t_j) + f(-t_j))`.
    pub fn t_weights(&self) -> &[f64] {
        &self.t_weights
    }

    /// d/dt acting on odd nodal values, result even (sampled at positive nodes).
    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    /// d2/dt2 acting on odd nodal values.
    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    /// Tensor quadrature of `f` over `(-pi, pi) x (-pi_m, pi_m)`.
    pub fn quadrature<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let mut total = 0.0;
        for &x in &self.x_nodes {
            for (&t, &w) in self.t_nodes.iter().zip(&self.t_weights) {
                total += w * (f(x, t) + f(x, -t));
            }
        }
        total * self.x_weight()
    }

    /// Interpolate nodal half-values at arbitrary `t` in `[-pi_m, pi_m]`,
    /// extending oddly (`odd = true`) or evenly.
    pub fn interpolate_t(&self, half: &[f64], t: f64, odd: bool) -> f64 {
        let tc = t.clamp(-self.pi_m(), self.pi_m());
        let ta = tc.abs();
        let sign = if odd && tc.is_sign_negative() { -1.0 } else { 1.0 };
        let n = self.full_nodes.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..n {
            let (value, node) = if j < self.nt {
                (half[j], self.full_nodes[j])
            } else {
                let mirror = half[n - 1 - j];
                (if odd { -mirror } else { mirror }, self.full_nodes[j])
            };
            let dx = ta - node;
            if dx == 0.0 {
                return sign * value;
            }
            let c = self.bary[j] / dx;
            num += c * value;
            den += c;
        }
        sign * num / den
    }

    pub(crate) fn check_field(&self, f: &StripField) -> Result<()> {
        if f.nx() != self.nx || f.nt() != self.nt {
            return Err(Error::Dimension(format!(
                "field is {}x{}, grid is {}x{}",
                f.nx(),
                f.nt(),
                self.nx,
                self.nt
            )));
        }
        Ok(())
    }

    /// Oversampled x-points on `[0, pi]` used for pointwise products.
    pub(crate) fn xq(&self) -> &[f64] {
        &self.xq
    }

    pub(crate) fn cos_q(&self, k: usize) -> &[f64] {
        &self.cos_q[k]
    }

    pub(crate) fn sin_q(&self, k: usize) -> &[f64] {
        &self.sin_q[k]
    }

    /// Weights mapping pointwise values on `xq` to the `k`-th cosine coefficient.
    pub(crate) fn proj_q(&self, k: usize) -> &[f64] {
        &self.proj_q[k]
    }

    /// Project pointwise values on `xq` onto the retained cosine modes.
    pub(crate) fn project(&self, values: &[f64]) -> Vec<f64> {
        (0..self.nx)
            .map(|k| self.proj_q[k].iter().zip(values).map(|(p, v)| p * v).sum())
            .collect()
    }
}

/// Grid descriptor for `params` at the requested resolution.
pub fn collocation_grid(params: StripParams, nx: usize, nt: usize) -> Result<CollocationGrid> {
    CollocationGrid::new(params, nx, nt)
}
