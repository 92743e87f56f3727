//! Closed-form spectral data of the linearization at the trivial branch.
//!
//! Eigenvalues `mu_ell(m) = 1 - ((1 + 2 ell) / (1 + 2m))^2 / 4` are kept as
//! exact rationals; conversion to `f64` happens only when a grid is involved.

use num_rational::Ratio;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::domain::{BoundaryProfile, CollocationGrid, LinearPair, StripField, StripParams};
use crate::error::{Error, Result};
use crate::operators::linearization_at_origin;

pub type Rational = Ratio<i64>;

/// One entry of the eigenvalue sequence for a fixed strip index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EigenvalueEntry {
    pub ell: u32,
    #[serde(serialize_with = "ser_ratio")]
    pub mu: Rational,
    /// `sqrt(1 - mu) = (1 + 2 ell) / (2 (2m + 1))`
    #[serde(serialize_with = "ser_ratio")]
    pub sqrt_one_minus_mu: Rational,
}

fn ser_ratio<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

impl EigenvalueEntry {
    pub fn mu_f64(&self) -> f64 {
        to_f64(self.mu)
    }

    pub fn xi_f64(&self) -> f64 {
        to_f64(self.sqrt_one_minus_mu)
    }
}

pub fn to_f64(r: Rational) -> f64 {
    r.to_f64().expect("finite rational")
}

/// `sqrt(1 - mu_ell(m))` as an exact rational.
pub fn eigen_frequency(m: u32, ell: u32) -> Rational {
    Rational::new(1 + 2 * ell as i64, 2 * (2 * m as i64 + 1))
}

/// `mu_ell(m)` as an exact rational.
pub fn eigenvalue(m: u32, ell: u32) -> Rational {
    let xi = eigen_frequency(m, ell);
    Rational::one() - xi * xi
}

/// All `2m + 1` eigenvalues, ordered by `ell` (hence strictly decreasing).
pub fn eigenvalue_sequence(m: u32) -> Vec<EigenvalueEntry> {
    (0..=2 * m)
        .map(|ell| EigenvalueEntry {
            ell,
            mu: eigenvalue(m, ell),
            sqrt_one_minus_mu: eigen_frequency(m, ell),
        })
        .collect()
}

/// `mu_ell(m)` for the given strip as `f64`.
pub fn critical_lambda(params: &StripParams) -> f64 {
    to_f64(eigenvalue(params.m(), params.ell()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Zero,
    Sub,
    Critical,
    Super,
}

impl Regime {
    pub fn of(mu: f64) -> Self {
        if mu == 0.0 {
            Regime::Zero
        } else if mu < 1.0 {
            Regime::Sub
        } else if mu == 1.0 {
            Regime::Critical
        } else {
            Regime::Super
        }
    }
}

/// Odd solution of `u'' + (1 - mu) u = 0`, `u(+-pi_m) = -+pi_m`.
///
/// * sub: `u = amplitude * sin(frequency t)`
/// * critical: `u = amplitude * t`
/// * super: `u = amplitude * sinh(frequency t)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSolution {
    pub regime: Regime,
    pub amplitude: f64,
    pub frequency: f64,
    /// `u'(pi_m)`; it vanishes exactly at the eigenvalues.
    pub boundary_derivative: f64,
}

impl ModeSolution {
    pub fn eval(&self, t: f64) -> f64 {
        match self.regime {
            Regime::Sub => self.amplitude * (self.frequency * t).sin(),
            Regime::Critical => self.amplitude * t,
            Regime::Super => self.amplitude * (self.frequency * t).sinh(),
            Regime::Zero => unreachable!("no solution in the zero regime"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ModeOutcome {
    Solution(ModeSolution),
    NoSolution { reason: String },
}

impl ModeOutcome {
    pub fn solution(&self) -> Option<&ModeSolution> {
        match self {
            ModeOutcome::Solution(s) => Some(s),
            ModeOutcome::NoSolution { .. } => None,
        }
    }

    /// True when both the Dirichlet data and `u'(pi_m) = 0` hold.
    pub fn solves_initial_value_problem(&self, tol: f64) -> bool {
        self.solution()
            .is_some_and(|s| s.boundary_derivative.abs() <= tol)
    }
}

/// Relative size below which `sin(sqrt(1 - mu) pi_m)` counts as zero.
const RESONANCE_TOL: f64 = 1e-12;

pub fn mode_ode_solution(mu: f64, params: &StripParams) -> Result<ModeOutcome> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::Parameter(format!("mu = {mu} must be non-negative")));
    }
    let pi_m = params.pi_m();
    let out = match Regime::of(mu) {
        Regime::Zero => ModeOutcome::NoSolution {
            reason: "mu = 0: sin(pi_m) = 0, the boundary data cannot be met".into(),
        },
        Regime::Critical => ModeOutcome::Solution(ModeSolution {
            regime: Regime::Critical,
            amplitude: -1.0,
            frequency: 0.0,
            boundary_derivative: -1.0,
        }),
        Regime::Sub => {
            let xi = (1.0 - mu).sqrt();
            let s = (xi * pi_m).sin();
            if s.abs() < RESONANCE_TOL {
                ModeOutcome::NoSolution {
                    reason: format!("sin(sqrt(1 - mu) pi_m) = 0 at mu = {mu}"),
                }
            } else {
                let amplitude = -pi_m / s;
                ModeOutcome::Solution(ModeSolution {
                    regime: Regime::Sub,
                    amplitude,
                    frequency: xi,
                    boundary_derivative: amplitude * xi * (xi * pi_m).cos(),
                })
            }
        }
        Regime::Super => {
            let kappa = (mu - 1.0).sqrt();
            ModeOutcome::Solution(ModeSolution {
                regime: Regime::Super,
                amplitude: -pi_m / (kappa * pi_m).sinh(),
                frequency: kappa,
                boundary_derivative: -pi_m * kappa / (kappa * pi_m).tanh(),
            })
        }
    };
    Ok(out)
}

/// Kernel profile `w(t) = -(-1)^ell pi_m sin(xi t) - t cos t`.
pub fn kernel_profile(params: &StripParams, t: f64) -> f64 {
    let xi = to_f64(eigen_frequency(params.m(), params.ell()));
    -params.parity_sign() * params.pi_m() * (xi * t).sin() - t * t.cos()
}

/// `(v_ell, g_ell) = (w(t) cos x, cos x)` sampled on `grid`.
pub fn kernel_pair(grid: &CollocationGrid) -> LinearPair {
    let params = *grid.params();
    let v = StripField::from_mode_fn(grid, true, |k, t| {
        if k == 1 {
            kernel_profile(&params, t)
        } else {
            0.0
        }
    });
    LinearPair::new(v, BoundaryProfile::mode(1, 1.0, grid.nx()))
}

/// `(w_bar, z_bar) = (sin(xi t) cos x, -2 (-1)^ell cos x)` sampled on `grid`.
///
/// `z_bar` is taken as `-2 w_bar(., pi_m)`, which equals `-2 (-1)^ell cos x`.
pub fn cokernel_pair(grid: &CollocationGrid) -> LinearPair {
    let params = grid.params();
    let xi = to_f64(eigen_frequency(params.m(), params.ell()));
    let w = StripField::from_mode_fn(grid, false, |k, t| if k == 1 { (xi * t).sin() } else { 0.0 });
    let z = BoundaryProfile::new((0..grid.nx()).map(|k| -2.0 * w.value(k, 0)).collect());
    LinearPair::new(w, z)
}

/// `int_{-pi_m}^{pi_m} (mu t cos t + 2 sin t) sin(sqrt(1 - mu) t) dt`
/// `= 2 sin(xi pi_m) - 2 xi pi_m cos(xi pi_m)`.
pub fn cokernel_integral(mu: f64, params: &StripParams) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Parameter(format!("mu = {mu} outside (0, 1)")));
    }
    let xi = (1.0 - mu).sqrt();
    let p = params.pi_m();
    Ok(2.0 * (xi * p).sin() - 2.0 * xi * p * (xi * p).cos())
}

/// Left side of the mode-`k` compatibility condition for `mu = k^2 mu_ell(m) > 1`
/// with `w_k = 2 sinh(kappa t)` and `z_k = -2 w_k(pi_m)`:
/// `int (mu t cos t + 2 sin t) w_k dt + z_k = -4 kappa pi_m cosh(kappa pi_m)`.
pub fn super_mode_integral(k: u32, params: &StripParams) -> Result<f64> {
    let mu = Rational::from_integer((k * k) as i64) * eigenvalue(params.m(), params.ell());
    if mu <= Rational::one() {
        return Err(Error::Parameter(format!(
            "k^2 mu = {mu} is not above 1 for k = {k}"
        )));
    }
    let kappa = (to_f64(mu) - 1.0).sqrt();
    let p = params.pi_m();
    Ok(-4.0 * kappa * p * (kappa * p).cosh())
}

/// True iff no `k >= 2`, `0 <= ell <= 2m` satisfy `k^2 mu_ell0(m) = mu_ell(m)`.
///
/// Exact search; `k^2 mu_ell0 < 1` is necessary, which bounds `k`.
pub fn mode_simplicity_check(m: u32, ell0: u32) -> Result<bool> {
    if ell0 > 2 * m {
        return Err(Error::Parameter(format!("ell0 = {ell0} outside 0..={}", 2 * m)));
    }
    let seq = eigenvalue_sequence(m);
    let base = seq[ell0 as usize].mu;
    let mu_min = seq.last().expect("nonempty").mu;
    let bound = (1.0 / to_f64(mu_min).sqrt()).ceil() as i64 + 1;
    for k in 2..=bound {
        let scaled = base * Rational::from_integer(k * k);
        if seq.iter().any(|e| e.mu == scaled) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `<d_lambda DF_lambda(0,0)(v_ell, g_ell), (w_bar, z_bar)> = (-1)^ell pi pi_m^2`.
pub fn transversality_pairing(params: &StripParams) -> f64 {
    params.parity_sign() * std::f64::consts::PI * params.pi_m() * params.pi_m()
}

/// The same pairing computed on the grid. `DF_lambda` is affine in
/// `lambda`, so the unit difference quotient is its exact derivative.
pub fn discrete_transversality_pairing(grid: &CollocationGrid) -> Result<f64> {
    let lambda = critical_lambda(grid.params());
    let ker = kernel_pair(grid);
    let cok = cokernel_pair(grid);
    let a = linearization_at_origin(grid, lambda, &ker.field, &ker.profile)?;
    let b = linearization_at_origin(grid, lambda + 1.0, &ker.field, &ker.profile)?;
    let diff = LinearPair::new(
        b.interior.add_scaled(&a.interior, -1.0),
        BoundaryProfile::new(
            b.trace
                .coeffs()
                .iter()
                .zip(a.trace.coeffs())
                .map(|(x, y)| x - y)
                .collect(),
        ),
    );
    crate::domain::inner_product(grid, &diff, &cok)
}
