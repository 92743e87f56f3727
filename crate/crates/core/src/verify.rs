//! Checks of the original overdetermined problem on the physical strip
//! `{(x, t) : |t| < pi_m / H(x)}`, `H = 1 + h`.
//!
//! The physical solution is `v(x, t) = u~(x, H(x) t)` with `u~ = sin + u`.
//! Its derivatives come from spectral evaluation of `u~` and the chain rule;
//! the boundary normal is computed from the curve `t = +-pi_m / H(x)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::continuation::BranchPoint;
use crate::domain::{BoundaryProfile, CollocationGrid, StripField, MIN_PROFILE};
use crate::error::Result;
use crate::linear_analysis::kernel_pair;

/// Number of x-samples per period used by the checks.
pub const X_SAMPLES: usize = 64;

/// Derivatives of the physical solution at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalDerivs {
    pub v: f64,
    pub vx: f64,
    pub vt: f64,
    pub vxx: f64,
    pub vtt: f64,
}

/// `v(x, t) = (sin + u)(x, H(x) t)` on the perturbed strip.
#[derive(Debug, Clone)]
pub struct PhysicalSolution<'a> {
    grid: &'a CollocationGrid,
    u: DMatrix<f64>,
    du: DMatrix<f64>,
    d2u: DMatrix<f64>,
    map: BoundaryProfile,
}

impl<'a> PhysicalSolution<'a> {
    /// `u` is the correction to `sin t`, `h` the profile perturbation.
    pub fn new(grid: &'a CollocationGrid, u: &StripField, h: &BoundaryProfile) -> Result<Self> {
        grid.check_field(u)?;
        let map = h.one_plus();
        map.check_positive(MIN_PROFILE)?;
        Ok(Self {
            grid,
            u: u.modes().clone(),
            du: u.modes() * grid.d1().transpose(),
            d2u: u.modes() * grid.d2().transpose(),
            map,
        })
    }

    pub fn domain_map(&self) -> &BoundaryProfile {
        &self.map
    }

    /// Upper boundary `pi_m / H(x)`.
    pub fn top(&self, x: f64) -> f64 {
        self.grid.pi_m() / self.map.eval(x)
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.derivs(x, t).v
    }

    pub fn derivs(&self, x: f64, t: f64) -> PhysicalDerivs {
        let g = self.grid;
        let h = self.map.eval(x);
        let hp = self.map.deriv(x);
        let hpp = self.map.deriv2(x);
        let tau = h * t;
        let (mut u, mut ux, mut ut, mut uxx, mut uxt, mut utt) = (tau.sin(), 0.0, tau.cos(), 0.0, 0.0, -tau.sin());
        for k in 0..g.nx() {
            let kf = k as f64;
            let (s, c) = (kf * x).sin_cos();
            let uk = g.interpolate_t(self.u.row(k).transpose().as_slice(), tau, true);
            let dk = g.interpolate_t(self.du.row(k).transpose().as_slice(), tau, false);
            let d2k = g.interpolate_t(self.d2u.row(k).transpose().as_slice(), tau, true);
            u += uk * c;
            ux -= kf * uk * s;
            uxx -= kf * kf * uk * c;
            ut += dk * c;
            uxt -= kf * dk * s;
            utt += d2k * c;
        }
        PhysicalDerivs {
            v: u,
            vx: ux + ut * hp * t,
            vt: ut * h,
            vxx: uxx + 2.0 * uxt * hp * t + utt * hp * hp * t * t + ut * hpp * t,
            vtt: utt * h * h,
        }
    }

    /// Outward normal derivative on the top (`+1`) or bottom (`-1`) curve.
    pub fn boundary_normal_derivative(&self, x: f64, side: f64) -> f64 {
        let t = side * self.top(x);
        let d = self.derivs(x, t);
        // top curve T(x) = pi_m / H(x); the bottom is -T
        let h = self.map.eval(x);
        let tp = -self.grid.pi_m() * self.map.deriv(x) / (h * h);
        // outward normals: top (-T', 1), bottom (-T', -1), both over sqrt(1 + T'^2)
        (-tp * d.vx + side * d.vt) / (1.0 + tp * tp).sqrt()
    }

    /// Samples `(x, t, v)` on `nx_samples` x-points of `[-pi, pi)` and the
    /// physical images of the `t`-nodes.
    pub fn sample(&self, nx_samples: usize) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for x in x_samples(nx_samples) {
            let h = self.map.eval(x);
            for &tau in self.grid.t_nodes() {
                for t in [tau / h, -tau / h] {
                    out.push((x, t, self.value(x, t)));
                }
            }
        }
        out
    }
}

fn x_samples(n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(1);
    (0..n).map(move |i| -PI + 2.0 * PI * i as f64 / n as f64)
}

/// Physical solution of a branch point.
pub fn pushforward_solution<'a>(
    grid: &'a CollocationGrid,
    point: &BranchPoint,
) -> Result<PhysicalSolution<'a>> {
    PhysicalSolution::new(grid, &point.u, &point.h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub s: f64,
    pub lambda: f64,
    /// `max |v|` on both boundary curves.
    pub dirichlet_sup: f64,
    /// `max |d_eta v + 1|` on the top curve.
    pub neumann_top_sup: f64,
    /// `max |d_eta v - 1|` on the bottom curve.
    pub neumann_bottom_sup: f64,
    /// `max |d_eta v(x, top) + d_eta v(x, bottom)|`.
    pub neumann_antisymmetry: f64,
    /// `max |v + lambda v_xx + v_tt|` over the sample points.
    pub pde_sup: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub sign_changing: bool,
    /// `max |v(x, t) + v(x, -t)|`.
    pub oddness_defect: f64,
    /// Top Neumann defect of the first-order approximation
    /// `sin t + s v_ell` on `H = 1 + s cos x`.
    pub first_order_neumann_sup: f64,
    pub tol: f64,
    pub within_tol: bool,
}

struct NeumannDefects {
    top: f64,
    bottom: f64,
    antisymmetry: f64,
}

fn neumann_defects(sol: &PhysicalSolution<'_>) -> NeumannDefects {
    let mut d = NeumannDefects {
        top: 0.0,
        bottom: 0.0,
        antisymmetry: 0.0,
    };
    for x in x_samples(X_SAMPLES) {
        let top = sol.boundary_normal_derivative(x, 1.0);
        let bottom = sol.boundary_normal_derivative(x, -1.0);
        d.top = d.top.max((top + 1.0).abs());
        d.bottom = d.bottom.max((bottom - 1.0).abs());
        d.antisymmetry = d.antisymmetry.max((top + bottom).abs());
    }
    d
}

/// Every condition of the overdetermined problem at one branch point.
pub fn check_overdetermined(
    grid: &CollocationGrid,
    point: &BranchPoint,
    tol: f64,
) -> Result<VerificationReport> {
    let sol = pushforward_solution(grid, point)?;
    let lambda = point.lambda;
    let mut dirichlet: f64 = 0.0;
    let mut pde: f64 = 0.0;
    let mut odd: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in x_samples(X_SAMPLES) {
        let top = sol.top(x);
        dirichlet = dirichlet
            .max(sol.value(x, top).abs())
            .max(sol.value(x, -top).abs());
        let h = sol.domain_map().eval(x);
        for &tau in grid.t_nodes() {
            let t = tau / h;
            let d = sol.derivs(x, t);
            let dm = sol.derivs(x, -t);
            pde = pde
                .max((d.v + lambda * d.vxx + d.vtt).abs())
                .max((dm.v + lambda * dm.vxx + dm.vtt).abs());
            odd = odd.max((d.v + dm.v).abs());
            lo = lo.min(d.v).min(dm.v);
            hi = hi.max(d.v).max(dm.v);
        }
    }
    let nd = neumann_defects(&sol);

    let kernel = kernel_pair(grid);
    let first = PhysicalSolution::new(
        grid,
        &kernel.field.scaled(point.s),
        &kernel.profile.scaled(point.s),
    )?;
    let first_order = neumann_defects(&first).top;

    let within_tol = dirichlet <= tol && pde <= tol && nd.top <= tol && nd.bottom <= tol;
    Ok(VerificationReport {
        s: point.s,
        lambda,
        dirichlet_sup: dirichlet,
        neumann_top_sup: nd.top,
        neumann_bottom_sup: nd.bottom,
        neumann_antisymmetry: nd.antisymmetry,
        pde_sup: pde,
        u_min: lo,
        u_max: hi,
        sign_changing: lo < 0.0 && 0.0 < hi,
        oddness_defect: odd,
        first_order_neumann_sup: first_order,
        tol,
        within_tol,
    })
}

/// `W(y, zeta) = v(lambda y, sqrt(lambda) zeta)` on the rescaled strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledSolution {
    pub lambda: f64,
    /// `(y, zeta, W)` samples.
    pub samples: Vec<[f64; 3]>,
    /// `(y, zeta_top(y))` on the upper boundary curve.
    pub top_boundary: Vec<[f64; 2]>,
    /// `max |-Laplace W - lambda W|` over the samples.
    pub pde_sup: f64,
    /// Range of the outward normal derivative on the upper boundary.
    pub top_neumann_min: f64,
    pub top_neumann_max: f64,
}

impl RescaledSolution {
    /// Value the top Neumann data takes on a flat strip, `-sqrt(lambda)`.
    pub fn flat_top_neumann(&self) -> f64 {
        -self.lambda.sqrt()
    }
}

/// Rescale to the isotropic form `-Laplace W = lambda W`.
pub fn schiffer_rescale(grid: &CollocationGrid, point: &BranchPoint) -> Result<RescaledSolution> {
    let sol = pushforward_solution(grid, point)?;
    let lambda = point.lambda;
    let rl = lambda.sqrt();
    let mut samples = Vec::new();
    let mut top_boundary = Vec::new();
    let mut pde: f64 = 0.0;
    let (mut nmin, mut nmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in x_samples(X_SAMPLES) {
        let h = sol.domain_map().eval(x);
        for &tau in grid.t_nodes() {
            for t in [tau / h, -tau / h] {
                let d = sol.derivs(x, t);
                // W_yy = lambda^2 v_xx, W_zz = lambda v_tt
                let r = -lambda * lambda * d.vxx - lambda * d.vtt - lambda * d.v;
                pde = pde.max(r.abs());
                samples.push([x / lambda, t / rl, d.v]);
            }
        }
        let top = sol.top(x);
        let d = sol.derivs(x, top);
        let tp = -grid.pi_m() * sol.domain_map().deriv(x) / (h * h);
        // boundary zeta = T(lambda y) / sqrt(lambda) has slope sqrt(lambda) T'
        let n = (-lambda * rl * tp * d.vx + rl * d.vt) / (1.0 + lambda * tp * tp).sqrt();
        nmin = nmin.min(n);
        nmax = nmax.max(n);
        top_boundary.push([x / lambda, top / rl]);
    }
    Ok(RescaledSolution {
        lambda,
        samples,
        top_boundary,
        pde_sup: pde,
        top_neumann_min: nmin,
        top_neumann_max: nmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::{initial_point, ContinuationConfig};
    use crate::domain::make_strip;

    #[test]
    fn trivial_point_is_exact() {
        let params = make_strip(0, 0).unwrap();
        let c = ContinuationConfig {
            nx: 4,
            nt: 16,
            ..Default::default()
        };
        let grid = c.grid(params).unwrap();
        let p = initial_point(&params, &c).unwrap();
        let r = check_overdetermined(&grid, &p, 1e-12).unwrap();
        assert!(r.dirichlet_sup <= 1e-12);
        assert!(r.neumann_top_sup <= 1e-12 && r.neumann_bottom_sup <= 1e-12);
        assert!(r.pde_sup <= 1e-12);
        assert!(r.sign_changing);
        assert!(r.within_tol);
        let sol = pushforward_solution(&grid, &p).unwrap();
        assert!((sol.value(0.3, 1.2) - 1.2f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn geometric_normal_on_flat_strip() {
        let grid = CollocationGrid::new(make_strip(1, 0).unwrap(), 4, 24).unwrap();
        let sol = PhysicalSolution::new(&grid, &StripField::zeros(&grid, true), &BoundaryProfile::zeros(4))
            .unwrap();
        for &x in &[-2.0, 0.0, 1.3] {
            assert!((sol.boundary_normal_derivative(x, 1.0) + 1.0).abs() < 1e-12);
            assert!((sol.boundary_normal_derivative(x, -1.0) - 1.0).abs() < 1e-12);
        }
    }
}
