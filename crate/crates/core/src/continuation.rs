//! Amplitude-parameterized continuation of the branch bifurcating from the
//! trivial state at `lambda = mu_ell(m)`.
//!
//! The unknowns `(u, psi, lambda)` solve the discrete `F = 0` together with
//! the scalar constraint `<(u, psi), (v, g)> = s ||(v, g)||^2`, where
//! `(v, g)` is the kernel pair.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::{
    field_product, inner_product, mode_norm, BoundaryProfile, CollocationGrid, LinearPair,
    StripField, StripParams,
};
use crate::error::{Error, Result};
use crate::linear_analysis::{critical_lambda, kernel_pair};
use crate::operators::{evaluate_f, jacobian, StateLayout};

/// Which way along the branch to go from `s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub s_max: f64,
    pub ds: f64,
    /// Smallest step before the trace gives up.
    pub min_ds: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub nx: usize,
    pub nt: usize,
    pub min_profile: f64,
    pub direction: Direction,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            s_max: 0.05,
            ds: 1e-3,
            min_ds: 1e-6,
            newton_tol: 1e-10,
            max_newton_iters: 20,
            nx: CollocationGrid::DEFAULT_NX,
            nt: CollocationGrid::DEFAULT_NT,
            min_profile: 0.1,
            direction: Direction::Positive,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("s_max", self.s_max),
            ("ds", self.ds),
            ("min_ds", self.min_ds),
            ("newton_tol", self.newton_tol),
            ("min_profile", self.min_profile),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} = {v} must be positive")));
            }
        }
        if self.ds > self.s_max {
            return Err(Error::Parameter(format!(
                "ds = {} exceeds s_max = {}",
                self.ds, self.s_max
            )));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::Parameter("max_newton_iters must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self, params: StripParams) -> Result<CollocationGrid> {
        CollocationGrid::new(params, self.nx, self.nt)
    }
}

/// A converged point `(s, lambda(s), u_s, psi_s)` of the branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub s: f64,
    pub lambda: f64,
    /// Correction to `sin t`; vanishes at `t = +-pi_m`.
    pub u: StripField,
    /// Profile perturbation; the domain map is `1 + h`.
    pub h: BoundaryProfile,
    pub residual_interior: f64,
    pub residual_neumann: f64,
    pub newton_iters: usize,
}

impl BranchPoint {
    pub fn pair(&self) -> LinearPair {
        LinearPair::new(self.u.clone(), self.h.clone())
    }
}

/// A traced branch. `failure` is set when continuation stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub params: StripParams,
    pub nx: usize,
    pub nt: usize,
    pub points: Vec<BranchPoint>,
    pub failure: Option<String>,
}

impl Branch {
    pub fn grid(&self) -> Result<CollocationGrid> {
        CollocationGrid::new(self.params, self.nx, self.nt)
    }

    /// Point whose amplitude is closest to `s`.
    pub fn nearest(&self, s: f64) -> Option<&BranchPoint> {
        self.points
            .iter()
            .min_by(|a, b| (a.s - s).abs().total_cmp(&(b.s - s).abs()))
    }
}

/// The trivial point `s = 0`, `lambda = mu_ell(m)`.
pub fn initial_point(params: &StripParams, config: &ContinuationConfig) -> Result<BranchPoint> {
    config.validate()?;
    let grid = config.grid(*params)?;
    Ok(BranchPoint {
        s: 0.0,
        lambda: critical_lambda(params),
        u: StripField::zeros(&grid, true),
        h: BoundaryProfile::zeros(grid.nx()),
        residual_interior: 0.0,
        residual_neumann: 0.0,
        newton_iters: 0,
    })
}

/// Bordered system data that depend only on the grid.
struct Bordered {
    layout: StateLayout,
    kernel: LinearPair,
    kernel_norm2: f64,
    /// Gradient of the normalized constraint with respect to the unknowns.
    constraint_row: DVector<f64>,
}

impl Bordered {
    fn new(grid: &CollocationGrid) -> Result<Self> {
        let layout = StateLayout::new(grid);
        let kernel = kernel_pair(grid);
        let kernel_norm2 = inner_product(grid, &kernel, &kernel)?;
        let mut row = DVector::zeros(layout.n_unknowns());
        let tw = grid.t_weights();
        for k in 0..grid.nx() {
            for j in 1..grid.nt() {
                row[layout.field_index(k, j)] =
                    mode_norm(k) * 2.0 * tw[j] * kernel.field.value(k, j) / kernel_norm2;
            }
            row[layout.profile_index(k)] = mode_norm(k) * kernel.profile.coeffs()[k] / kernel_norm2;
        }
        Ok(Self {
            layout,
            kernel,
            kernel_norm2,
            constraint_row: row,
        })
    }

    fn constraint(&self, grid: &CollocationGrid, u: &StripField, h: &BoundaryProfile, s: f64) -> f64 {
        let proj = field_product(grid, u, &self.kernel.field)
            + h.coeffs()
                .iter()
                .zip(self.kernel.profile.coeffs())
                .enumerate()
                .map(|(k, (a, b))| mode_norm(k) * a * b)
                .sum::<f64>();
        proj / self.kernel_norm2 - s
    }
}

struct Residual {
    vector: DVector<f64>,
    interior: f64,
    neumann: f64,
    constraint: f64,
}

impl Residual {
    fn norm(&self) -> f64 {
        self.interior.max(self.neumann).max(self.constraint.abs())
    }
}

fn residual(
    grid: &CollocationGrid,
    b: &Bordered,
    x: &DVector<f64>,
    s: f64,
    min_profile: f64,
) -> Result<Residual> {
    let (u, h, lambda) = b.layout.unpack(x);
    h.one_plus().check_positive(min_profile)?;
    let out = evaluate_f(grid, lambda, &u, &h)?;
    let c = b.constraint(grid, &u, &h, s);
    let mut vector = DVector::zeros(b.layout.n_unknowns());
    vector
        .rows_mut(0, b.layout.n_equations())
        .copy_from(&b.layout.residual(&out));
    vector[b.layout.n_equations()] = c;
    Ok(Residual {
        vector,
        interior: out.interior_sup_collocated(grid),
        neumann: out.trace_sup(),
        constraint: c,
    })
}

fn bordered_jacobian(grid: &CollocationGrid, b: &Bordered, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (u, h, lambda) = b.layout.unpack(x);
    let j = jacobian(grid, lambda, &u, &h)?;
    let n = b.layout.n_unknowns();
    let mut full = DMatrix::zeros(n, n);
    full.rows_mut(0, b.layout.n_equations()).copy_from(&j);
    full.set_row(n - 1, &b.constraint_row.transpose());
    Ok(full)
}

/// Maximum number of step halvings in the line search.
const MAX_HALVINGS: usize = 8;

/// Solve the bordered system at amplitude `s_target` by damped Newton,
/// starting from `guess`.
pub fn newton_step(
    params: &StripParams,
    config: &ContinuationConfig,
    guess: &BranchPoint,
    s_target: f64,
) -> Result<BranchPoint> {
    config.validate()?;
    let grid = config.grid(*params)?;
    let b = Bordered::new(&grid)?;
    // d_lambda F vanishes on the trivial branch, so the bordered Jacobian
    // is singular there; start from the kernel direction instead
    let trivial = guess.u.modes().iter().all(|&v| v == 0.0) && guess.h.coeffs().iter().all(|&v| v == 0.0);
    if trivial && s_target != guess.s {
        let seeded = predict(&b, std::slice::from_ref(guess), s_target);
        return newton_on_grid(&grid, &b, config, &seeded, s_target);
    }
    newton_on_grid(&grid, &b, config, guess, s_target)
}

fn newton_on_grid(
    grid: &CollocationGrid,
    b: &Bordered,
    config: &ContinuationConfig,
    guess: &BranchPoint,
    s_target: f64,
) -> Result<BranchPoint> {
    grid.check_field(&guess.u)?;
    guess.h.one_plus().check_positive(config.min_profile)?;
    let mut x = b.layout.pack(&guess.u, &guess.h, guess.lambda);
    let mut r = residual(grid, b, &x, s_target, config.min_profile)?;
    let mut iters = 0;
    while r.norm() > config.newton_tol {
        if iters == config.max_newton_iters {
            return Err(Error::StepFailure {
                s: s_target,
                reason: format!("no convergence in {iters} iterations, residual {:.3e}", r.norm()),
            });
        }
        iters += 1;
        let jac = bordered_jacobian(grid, b, &x)?;
        let dx = jac.lu().solve(&(-&r.vector)).ok_or_else(|| Error::StepFailure {
            s: s_target,
            reason: "singular bordered jacobian".into(),
        })?;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &x + &dx * step;
            match residual(grid, b, &trial, s_target, config.min_profile) {
                Ok(rt) if rt.norm() < r.norm() => {
                    accepted = Some((trial, rt));
                    break;
                }
                Ok(_) | Err(Error::Domain { .. }) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        match accepted {
            Some((xt, rt)) => {
                x = xt;
                r = rt;
            }
            None => {
                return Err(Error::StepFailure {
                    s: s_target,
                    reason: format!("line search stalled at residual {:.3e}", r.norm()),
                })
            }
        }
    }
    let (u, h, lambda) = b.layout.unpack(&x);
    Ok(BranchPoint {
        s: s_target,
        lambda,
        u,
        h,
        residual_interior: r.interior,
        residual_neumann: r.neumann,
        newton_iters: iters,
    })
}

/// Trace the branch from `s = 0` to `direction * s_max`.
///
/// The first predictor is the kernel direction with `lambda' = 0`; later
/// ones are secants through the last two points. Failed steps are halved
/// until `min_ds`, after which the partial branch is returned with the
/// failure recorded.
pub fn trace_branch(params: &StripParams, config: &ContinuationConfig) -> Result<Branch> {
    config.validate()?;
    let grid = config.grid(*params)?;
    let b = Bordered::new(&grid)?;
    let sign = config.direction.sign();
    let target = sign * config.s_max;
    let mut points = vec![initial_point(params, config)?];
    let mut ds = config.ds;
    let mut failure = None;
    while (points.last().expect("nonempty").s - target).abs() > 1e-15 {
        let last = points.last().expect("nonempty");
        let remaining = (target - last.s).abs();
        let step = ds.min(remaining);
        let s_new = if step == remaining {
            target
        } else {
            snap(last.s + sign * step, config.ds)
        };
        let guess = predict(&b, &points, s_new);
        match newton_on_grid(&grid, &b, config, &guess, s_new) {
            Ok(p) => points.push(p),
            Err(e @ (Error::StepFailure { .. } | Error::Domain { .. })) => {
                ds *= 0.5;
                if ds < config.min_ds {
                    failure = Some(e.to_string());
                    break;
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Branch {
        params: *params,
        nx: config.nx,
        nt: config.nt,
        points,
        failure,
    })
}

/// Round `s` onto the `ds` lattice when it is within roundoff of it, so
/// amplitudes do not drift by repeated addition.
fn snap(s: f64, ds: f64) -> f64 {
    let n = (s / ds).round();
    if (s - n * ds).abs() <= 1e-9 * ds {
        n * ds
    } else {
        s
    }
}

fn predict(b: &Bordered, points: &[BranchPoint], s_new: f64) -> BranchPoint {
    let last = points.last().expect("nonempty");
    let (u, h, lambda) = if points.len() == 1 {
        let ds = s_new - last.s;
        (
            last.u.add_scaled(&b.kernel.field, ds),
            combine(&last.h, &b.kernel.profile, ds),
            last.lambda,
        )
    } else {
        let prev = &points[points.len() - 2];
        let r = (s_new - last.s) / (last.s - prev.s);
        (
            last.u.add_scaled(&last.u.add_scaled(&prev.u, -1.0), r),
            combine(&last.h, &combine(&last.h, &prev.h, -1.0), r),
            last.lambda + r * (last.lambda - prev.lambda),
        )
    };
    BranchPoint {
        s: s_new,
        lambda,
        u,
        h,
        residual_interior: f64::NAN,
        residual_neumann: f64::NAN,
        newton_iters: 0,
    }
}

fn combine(a: &BoundaryProfile, b: &BoundaryProfile, factor: f64) -> BoundaryProfile {
    BoundaryProfile::new(
        a.coeffs()
            .iter()
            .zip(b.coeffs())
            .map(|(x, y)| x + factor * y)
            .collect(),
    )
}

/// `(u, h) / s - (v, g)` at a nonzero-amplitude point.
pub fn remainder(grid: &CollocationGrid, point: &BranchPoint) -> Result<LinearPair> {
    if point.s == 0.0 {
        return Err(Error::Parameter("remainder undefined at s = 0".into()));
    }
    let k = kernel_pair(grid);
    Ok(LinearPair::new(
        point.u.scaled(1.0 / point.s).add_scaled(&k.field, -1.0),
        combine(&point.h.scaled(1.0 / point.s), &k.profile, -1.0),
    ))
}
