//! Pulled-back operator, boundary functional, the nonlinear map `F` and its
//! linearization at the trivial branch.
//!
//! With `H = 1 + psi` the map reads
//!
//! ```text
//! F(lambda, u, psi) = ( L^H_lambda (u + sin t),  Q(u + sin t, H) )
//! L^h_lambda = id + lambda d_xx + (h^2 + lambda tau^2 h'^2 / h^2) d_tautau
//!            + 2 lambda (h'/h) tau d_xtau + lambda (h''/h) tau d_tau
//! Q(u, h)    = (pi_m^2 h'^2 / h^3 + h) u_tau(x, pi_m) / sqrt(1 + pi_m^2 h'^2 / h^4) + 1
//! ```
//!
//! Everything is evaluated pointwise on the oversampled x-grid and projected
//! back onto the retained cosine modes.

use nalgebra::{DMatrix, DVector};

use crate::domain::{mode_norm, BoundaryProfile, CollocationGrid, LinearPair, StripField, MIN_PROFILE};
use crate::error::{Error, Result};

/// Residual pair `(interior, trace)` produced by `F` and its linearization.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorOutput {
    pub interior: StripField,
    pub trace: BoundaryProfile,
}

impl OperatorOutput {
    /// Sup of the interior residual over all stored nodes.
    pub fn interior_sup(&self, grid: &CollocationGrid) -> f64 {
        self.interior.sup_norm(grid)
    }

    /// Sup of the interior residual over the nodes `t < pi_m`, where the
    /// discrete equations are imposed.
    pub fn interior_sup_collocated(&self, grid: &CollocationGrid) -> f64 {
        let mut sup: f64 = 0.0;
        for j in 1..grid.nt() {
            for i in 0..grid.xq().len() {
                let v: f64 = (0..grid.nx())
                    .map(|k| self.interior.value(k, j) * grid.cos_q(k)[i])
                    .sum();
                sup = sup.max(v.abs());
            }
        }
        sup
    }

    pub fn trace_sup(&self) -> f64 {
        self.trace.sup_on_grid(8 * self.trace.modes().max(4))
    }

    pub fn sup(&self, grid: &CollocationGrid) -> f64 {
        self.interior_sup(grid).max(self.trace_sup())
    }
}

/// Which boundary line of the reference strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Top,
    Bottom,
}

/// `h, h', h''` sampled on the oversampled x-grid.
struct ProfileSamples {
    h: Vec<f64>,
    dh: Vec<f64>,
    d2h: Vec<f64>,
}

impl ProfileSamples {
    fn new(grid: &CollocationGrid, h: &BoundaryProfile) -> Result<Self> {
        h.check_positive(MIN_PROFILE)?;
        let xq = grid.xq();
        Ok(Self {
            h: xq.iter().map(|&x| h.eval(x)).collect(),
            dh: xq.iter().map(|&x| h.deriv(x)).collect(),
            d2h: xq.iter().map(|&x| h.deriv2(x)).collect(),
        })
    }
}

/// Nodal t-derivatives of every mode: `(U, U_tau, U_tautau)`, rows are modes.
struct ModeDerivs<'a> {
    u: &'a DMatrix<f64>,
    du: DMatrix<f64>,
    d2u: DMatrix<f64>,
}

impl<'a> ModeDerivs<'a> {
    fn new(grid: &CollocationGrid, u: &'a StripField) -> Self {
        let m = u.modes();
        Self {
            u: m,
            du: m * grid.d1().transpose(),
            d2u: m * grid.d2().transpose(),
        }
    }
}

/// Pointwise values of the pulled-back operator, split as `base + lambda * lam`.
/// Indexed `[j][i]` (t-node, x-point).
struct Pointwise {
    base: Vec<Vec<f64>>,
    lam: Vec<Vec<f64>>,
}

fn pulled_back_pointwise(
    grid: &CollocationGrid,
    prof: &ProfileSamples,
    u: Option<&ModeDerivs<'_>>,
    with_sine: bool,
) -> Pointwise {
    let nx = grid.nx();
    let nq = grid.xq().len();
    let mut base = vec![vec![0.0; nq]; grid.nt()];
    let mut lam = vec![vec![0.0; nq]; grid.nt()];
    for (j, &tau) in grid.t_nodes().iter().enumerate() {
        let (st, ct) = tau.sin_cos();
        for i in 0..nq {
            let h = prof.h[i];
            let hp = prof.dh[i] / h;
            let hpp = prof.d2h[i] / h;
            let a_base = h * h;
            let a_lam = tau * tau * hp * hp;
            let (mut b, mut l) = (0.0, 0.0);
            if let Some(d) = u {
                let (mut val, mut uxx, mut ut, mut uxt, mut utt) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for k in 0..nx {
                    let c = grid.cos_q(k)[i];
                    let s = grid.sin_q(k)[i];
                    let kf = k as f64;
                    val += d.u[(k, j)] * c;
                    uxx -= kf * kf * d.u[(k, j)] * c;
                    ut += d.du[(k, j)] * c;
                    uxt -= kf * d.du[(k, j)] * s;
                    utt += d.d2u[(k, j)] * c;
                }
                b += val + a_base * utt;
                l += uxx + a_lam * utt + 2.0 * hp * tau * uxt + hpp * tau * ut;
            }
            if with_sine {
                b += st * (1.0 - a_base);
                l += -a_lam * st + hpp * tau * ct;
            }
            base[j][i] = b;
            lam[j][i] = l;
        }
    }
    Pointwise { base, lam }
}

fn project_rows(grid: &CollocationGrid, rows: impl Fn(usize) -> Vec<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(grid.nx(), grid.nt());
    for j in 0..grid.nt() {
        for (k, c) in grid.project(&rows(j)).into_iter().enumerate() {
            out[(k, j)] = c;
        }
    }
    out
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter(format!("lambda = {lambda} must be positive")));
    }
    Ok(())
}

/// `L^h_lambda u`, with `h` the full domain map (not the perturbation).
pub fn apply_pulled_back_operator(
    grid: &CollocationGrid,
    lambda: f64,
    h: &BoundaryProfile,
    u: &StripField,
) -> Result<StripField> {
    check_lambda(lambda)?;
    grid.check_field(u)?;
    let prof = ProfileSamples::new(grid, h)?;
    let d = ModeDerivs::new(grid, u);
    if h.coeffs().iter().skip(1).all(|&c| c == 0.0) {
        // constant map: no x-coupling, skip the product grid
        let h2 = h.coeffs()[0] * h.coeffs()[0];
        let modes = DMatrix::from_fn(grid.nx(), grid.nt(), |k, j| {
            (1.0 - lambda * (k * k) as f64) * d.u[(k, j)] + h2 * d.d2u[(k, j)]
        });
        return StripField::from_modes(modes, false);
    }
    let pw = pulled_back_pointwise(grid, &prof, Some(&d), false);
    let modes = project_rows(grid, |j| {
        pw.base[j].iter().zip(&pw.lam[j]).map(|(b, l)| b + lambda * l).collect()
    });
    StripField::from_modes(modes, false)
}

/// Normal derivative `d_{eta_h} u` on one boundary line of the reference
/// strip, sampled at `xs`. Uses the full expression including the `u_x` term.
pub fn normal_derivative(
    grid: &CollocationGrid,
    h: &BoundaryProfile,
    u: &StripField,
    side: Side,
    xs: &[f64],
) -> Result<Vec<f64>> {
    grid.check_field(u)?;
    h.check_positive(MIN_PROFILE)?;
    let pi_m = grid.pi_m();
    let d = ModeDerivs::new(grid, u);
    let (tau, sign) = match side {
        Side::Top => (pi_m, 1.0),
        Side::Bottom => (-pi_m, -1.0),
    };
    Ok(xs
        .iter()
        .map(|&x| {
            let mut ux_top = 0.0;
            let mut ut = 0.0;
            for k in 0..grid.nx() {
                let kf = k as f64;
                ux_top -= kf * d.u[(k, 0)] * (kf * x).sin();
                ut += d.du[(k, 0)] * (kf * x).cos();
            }
            // u_x is odd in t, u_tau is even
            let ux = sign * ux_top;
            let hx = h.eval(x);
            let hp = h.deriv(x);
            let slope = pi_m * hp / (hx * hx);
            let pre = 1.0 / (1.0 + slope * slope).sqrt();
            pre * (slope * (ux + hp / hx * tau * ut) + sign * hx * ut)
        })
        .collect())
}

/// `u_*(x, t) = sin t` has `d_tau u_* (pi_m) = cos((2m + 1) pi) = -1`.
const SINE_SLOPE_AT_TOP: f64 = -1.0;

/// Pointwise Neumann functional with the boundary factor of `H`:
/// `P(x) = (pi_m^2 H'^2 / H^3 + H) / sqrt(1 + pi_m^2 H'^2 / H^4)`.
fn neumann_factor(pi_m: f64, h: f64, dh: f64) -> f64 {
    let g = pi_m * pi_m * dh * dh;
    (g / (h * h * h) + h) / (1.0 + g / (h * h * h * h)).sqrt()
}

/// `Q~(u, psi) = Q(u + sin t, 1 + psi)` projected onto the cosine modes.
pub fn neumann_functional(
    grid: &CollocationGrid,
    u: &StripField,
    psi: &BoundaryProfile,
) -> Result<BoundaryProfile> {
    grid.check_field(u)?;
    if !u.is_dirichlet() {
        return Err(Error::Contract("neumann functional needs a Dirichlet field".into()));
    }
    let h = psi.one_plus();
    let prof = ProfileSamples::new(grid, &h)?;
    let d = ModeDerivs::new(grid, u);
    let pi_m = grid.pi_m();
    let values: Vec<f64> = (0..grid.xq().len())
        .map(|i| {
            let ut: f64 = (0..grid.nx()).map(|k| d.du[(k, 0)] * grid.cos_q(k)[i]).sum();
            neumann_factor(pi_m, prof.h[i], prof.dh[i]) * (ut + SINE_SLOPE_AT_TOP) + 1.0
        })
        .collect();
    Ok(BoundaryProfile::new(grid.project(&values)))
}

/// `F(lambda, u, psi) = (L^{1+psi}_lambda (u + sin t), Q~(u, psi))`.
pub fn evaluate_f(
    grid: &CollocationGrid,
    lambda: f64,
    u: &StripField,
    psi: &BoundaryProfile,
) -> Result<OperatorOutput> {
    check_lambda(lambda)?;
    grid.check_field(u)?;
    let h = psi.one_plus();
    let prof = ProfileSamples::new(grid, &h)?;
    let d = ModeDerivs::new(grid, u);
    let pw = pulled_back_pointwise(grid, &prof, Some(&d), true);
    let interior = project_rows(grid, |j| {
        pw.base[j].iter().zip(&pw.lam[j]).map(|(b, l)| b + lambda * l).collect()
    });
    Ok(OperatorOutput {
        interior: StripField::from_modes(interior, false)?,
        trace: neumann_functional(grid, u, psi)?,
    })
}

/// `U = v + g(x) t cos t`.
pub fn substitute_u(grid: &CollocationGrid, v: &StripField, g: &BoundaryProfile) -> Result<StripField> {
    grid.check_field(v)?;
    check_profile(grid, g)?;
    let mut modes = v.modes().clone();
    for k in 0..grid.nx() {
        for (j, &t) in grid.t_nodes().iter().enumerate() {
            modes[(k, j)] += g.coeffs()[k] * t * t.cos();
        }
    }
    StripField::from_modes(modes, false)
}

fn check_profile(grid: &CollocationGrid, g: &BoundaryProfile) -> Result<()> {
    if g.modes() != grid.nx() {
        return Err(Error::Dimension(format!(
            "profile has {} modes, grid has {}",
            g.modes(),
            grid.nx()
        )));
    }
    Ok(())
}

/// `DF_lambda(0,0)(v, g) = (U + lambda U_xx + U_tt, U_tau(., pi_m))`.
pub fn linearization_at_origin(
    grid: &CollocationGrid,
    lambda: f64,
    v: &StripField,
    g: &BoundaryProfile,
) -> Result<OperatorOutput> {
    check_lambda(lambda)?;
    if !v.is_dirichlet() {
        return Err(Error::Contract("linearization needs a Dirichlet field".into()));
    }
    let u = substitute_u(grid, v, g)?;
    let d = ModeDerivs::new(grid, &u);
    let interior = DMatrix::from_fn(grid.nx(), grid.nt(), |k, j| {
        (1.0 - lambda * (k * k) as f64) * d.u[(k, j)] + d.d2u[(k, j)]
    });
    let trace = (0..grid.nx()).map(|k| d.du[(k, 0)]).collect();
    Ok(OperatorOutput {
        interior: StripField::from_modes(interior, false)?,
        trace: BoundaryProfile::new(trace),
    })
}

/// The same linearization written without the substitution:
/// `(v + lambda v_xx + v_tt - 2 g sin t + lambda g'' t cos t, v_tau - g)`.
pub fn linearization_expanded(
    grid: &CollocationGrid,
    lambda: f64,
    v: &StripField,
    g: &BoundaryProfile,
) -> Result<OperatorOutput> {
    check_lambda(lambda)?;
    grid.check_field(v)?;
    check_profile(grid, g)?;
    if !v.is_dirichlet() {
        return Err(Error::Contract("linearization needs a Dirichlet field".into()));
    }
    let d = ModeDerivs::new(grid, v);
    let t = grid.t_nodes();
    let interior = DMatrix::from_fn(grid.nx(), grid.nt(), |k, j| {
        let k2 = (k * k) as f64;
        let gk = g.coeffs()[k];
        (1.0 - lambda * k2) * d.u[(k, j)] + d.d2u[(k, j)] - 2.0 * gk * t[j].sin()
            - lambda * k2 * gk * t[j] * t[j].cos()
    });
    let trace = (0..grid.nx()).map(|k| d.du[(k, 0)] - g.coeffs()[k]).collect();
    Ok(OperatorOutput {
        interior: StripField::from_modes(interior, false)?,
        trace: BoundaryProfile::new(trace),
    })
}

/// Image of `(w, z)` under the formal adjoint of `DF_lambda(0,0)`.
///
/// The first block row contains the boundary functionals
/// `v -> int v_t(x, pi_m) (2 w(x, pi_m) + z(x)) dx`; they are kept as the
/// density `boundary_density` rather than folded into `field`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointImage {
    /// `w + lambda w_xx + w_tt`
    pub field: StripField,
    /// `2 w(., pi_m) + z`
    pub boundary_density: BoundaryProfile,
    /// `lambda A(w) - 2 B(w) - z`
    pub profile: BoundaryProfile,
}

impl AdjointImage {
    /// `<adjoint(w, z), (v, g)>`, boundary functional included.
    pub fn pair_with(&self, grid: &CollocationGrid, v: &StripField, g: &BoundaryProfile) -> Result<f64> {
        check_profile(grid, g)?;
        let volume = crate::domain::inner_product(
            grid,
            &LinearPair::new(self.field.clone(), self.profile.clone()),
            &LinearPair::new(v.clone(), g.clone()),
        )?;
        let d1 = grid.d1();
        let boundary: f64 = (0..grid.nx())
            .map(|k| {
                let vt: f64 = (0..grid.nt()).map(|j| d1[(0, j)] * v.value(k, j)).sum();
                mode_norm(k) * self.boundary_density.coeffs()[k] * vt
            })
            .sum();
        Ok(volume + boundary)
    }

    /// Fold the boundary functional into the field through its discrete
    /// representer, giving an ordinary pair for the grid inner product.
    pub fn to_pair(&self, grid: &CollocationGrid) -> LinearPair {
        let d1 = grid.d1();
        let w = grid.t_weights();
        let mut modes = self.field.modes().clone();
        for k in 0..grid.nx() {
            let c = self.boundary_density.coeffs()[k];
            for j in 0..grid.nt() {
                modes[(k, j)] += c * d1[(0, j)] / (2.0 * w[j]);
            }
        }
        LinearPair::new(
            StripField::from_modes(modes, false).expect("non-Dirichlet"),
            self.profile.clone(),
        )
    }

    pub fn sup(&self, grid: &CollocationGrid) -> f64 {
        let n = 8 * grid.nx();
        self.field
            .sup_norm(grid)
            .max(self.boundary_density.sup_on_grid(n))
            .max(self.profile.sup_on_grid(n))
    }
}

/// Formal adjoint of `DF_lambda(0,0)` applied to `(w, z)`:
///
/// ```text
/// [ id + lambda d_xx + d_tt + C   L ] [w]
/// [ lambda A - 2 B                K ] [z]
/// A(w) = int t cos t w_xx dt,  B(w) = int sin t w dt,  K(z) = -z
/// ```
pub fn adjoint_apply(
    grid: &CollocationGrid,
    lambda: f64,
    w: &StripField,
    z: &BoundaryProfile,
) -> Result<AdjointImage> {
    check_lambda(lambda)?;
    grid.check_field(w)?;
    check_profile(grid, z)?;
    let d = ModeDerivs::new(grid, w);
    let field = DMatrix::from_fn(grid.nx(), grid.nt(), |k, j| {
        (1.0 - lambda * (k * k) as f64) * d.u[(k, j)] + d.d2u[(k, j)]
    });
    let tw = grid.t_weights();
    let t = grid.t_nodes();
    let density = (0..grid.nx()).map(|k| 2.0 * d.u[(k, 0)] + z.coeffs()[k]).collect();
    let profile = (0..grid.nx())
        .map(|k| {
            let (mut a, mut b) = (0.0, 0.0);
            for j in 0..grid.nt() {
                // odd * odd integrands: twice the half-sum
                a += 2.0 * tw[j] * t[j] * t[j].cos() * d.u[(k, j)];
                b += 2.0 * tw[j] * t[j].sin() * d.u[(k, j)];
            }
            -lambda * (k * k) as f64 * a - 2.0 * b - z.coeffs()[k]
        })
        .collect();
    Ok(AdjointImage {
        field: StripField::from_modes(field, false)?,
        boundary_density: BoundaryProfile::new(density),
        profile: BoundaryProfile::new(profile),
    })
}

/// Index map between `(u, psi, lambda)` and the flat unknown vector.
///
/// Unknowns: `u` at nodes `t_1..t_{nt-1}` for every mode (the node
/// `t_0 = pi_m` is pinned to zero), then the `nx` profile coefficients,
/// then `lambda`. Equations: interior residual at the same nodes, then the
/// `nx` trace coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    nx: usize,
    nt: usize,
}

impl StateLayout {
    pub fn new(grid: &CollocationGrid) -> Self {
        Self {
            nx: grid.nx(),
            nt: grid.nt(),
        }
    }

    pub fn n_field(&self) -> usize {
        self.nx * (self.nt - 1)
    }

    pub fn field_index(&self, k: usize, j: usize) -> usize {
        debug_assert!(j >= 1);
        k * (self.nt - 1) + (j - 1)
    }

    pub fn profile_index(&self, k: usize) -> usize {
        self.n_field() + k
    }

    pub fn lambda_index(&self) -> usize {
        self.n_field() + self.nx
    }

    /// Number of residual equations of `F`.
    pub fn n_equations(&self) -> usize {
        self.n_field() + self.nx
    }

    /// Number of unknowns including `lambda`.
    pub fn n_unknowns(&self) -> usize {
        self.n_equations() + 1
    }

    pub fn pack(&self, u: &StripField, psi: &BoundaryProfile, lambda: f64) -> DVector<f64> {
        let mut x = DVector::zeros(self.n_unknowns());
        for k in 0..self.nx {
            for j in 1..self.nt {
                x[self.field_index(k, j)] = u.value(k, j);
            }
            x[self.profile_index(k)] = psi.coeffs()[k];
        }
        x[self.lambda_index()] = lambda;
        x
    }

    pub fn unpack(&self, x: &DVector<f64>) -> (StripField, BoundaryProfile, f64) {
        let modes = DMatrix::from_fn(self.nx, self.nt, |k, j| {
            if j == 0 {
                0.0
            } else {
                x[self.field_index(k, j)]
            }
        });
        let psi = (0..self.nx).map(|k| x[self.profile_index(k)]).collect();
        (
            StripField::from_modes(modes, true).expect("boundary column is zero"),
            BoundaryProfile::new(psi),
            x[self.lambda_index()],
        )
    }

    /// Flatten an operator output into the residual vector.
    pub fn residual(&self, out: &OperatorOutput) -> DVector<f64> {
        let mut r = DVector::zeros(self.n_equations());
        for k in 0..self.nx {
            for j in 1..self.nt {
                r[self.field_index(k, j)] = out.interior.value(k, j);
            }
            r[self.n_field() + k] = out.trace.coeffs()[k];
        }
        r
    }
}

/// Jacobian of the discrete `F` with respect to `(u, psi, lambda)`.
///
/// `F` is linear in `u` and affine in `lambda`, so those columns are
/// assembled exactly; the `psi` columns use forward differences with step
/// `sqrt(eps) (1 + |psi_k|)`.
pub fn jacobian(
    grid: &CollocationGrid,
    lambda: f64,
    u: &StripField,
    psi: &BoundaryProfile,
) -> Result<DMatrix<f64>> {
    check_lambda(lambda)?;
    grid.check_field(u)?;
    check_profile(grid, psi)?;
    let layout = StateLayout::new(grid);
    let (nx, nt) = (grid.nx(), grid.nt());
    let nq = grid.xq().len();
    let h = psi.one_plus();
    let prof = ProfileSamples::new(grid, &h)?;
    let d1 = grid.d1();
    let d2 = grid.d2();
    let mut jac = DMatrix::zeros(layout.n_equations(), layout.n_unknowns());

    let m0 = DMatrix::from_fn(nx, nx, |kp, k| {
        (0..nq).map(|i| grid.proj_q(kp)[i] * grid.cos_q(k)[i]).sum::<f64>()
    });
    let mut a2 = DMatrix::zeros(nx, nx);
    let mut a1 = DMatrix::zeros(nx, nx);
    let mut coef_a = vec![0.0; nq];
    let mut coef_b = vec![0.0; nq];
    let mut coef_e = vec![0.0; nq];
    for j in 1..nt {
        let tau = grid.t_nodes()[j];
        for i in 0..nq {
            let hp = prof.dh[i] / prof.h[i];
            coef_a[i] = prof.h[i] * prof.h[i] + lambda * tau * tau * hp * hp;
            coef_b[i] = 2.0 * lambda * hp * tau;
            coef_e[i] = lambda * prof.d2h[i] / prof.h[i] * tau;
        }
        for kp in 0..nx {
            let pw = grid.proj_q(kp);
            for k in 0..nx {
                let (c, s) = (grid.cos_q(k), grid.sin_q(k));
                let kf = k as f64;
                let (mut s2, mut s1) = (0.0, 0.0);
                for i in 0..nq {
                    s2 += pw[i] * c[i] * coef_a[i];
                    s1 += pw[i] * (c[i] * coef_e[i] - kf * s[i] * coef_b[i]);
                }
                a2[(kp, k)] = s2;
                a1[(kp, k)] = s1;
            }
        }
        for kp in 0..nx {
            let row = layout.field_index(kp, j);
            for k in 0..nx {
                let diag = m0[(kp, k)] * (1.0 - lambda * (k * k) as f64);
                for jp in 1..nt {
                    let mut v = a2[(kp, k)] * d2[(j, jp)] + a1[(kp, k)] * d1[(j, jp)];
                    if jp == j {
                        v += diag;
                    }
                    jac[(row, layout.field_index(k, jp))] = v;
                }
            }
        }
    }

    // trace rows, u-columns
    let pi_m = grid.pi_m();
    let factor: Vec<f64> = (0..nq)
        .map(|i| neumann_factor(pi_m, prof.h[i], prof.dh[i]))
        .collect();
    for kp in 0..nx {
        let row = layout.n_field() + kp;
        for k in 0..nx {
            let w: f64 = (0..nq)
                .map(|i| grid.proj_q(kp)[i] * factor[i] * grid.cos_q(k)[i])
                .sum();
            for jp in 1..nt {
                jac[(row, layout.field_index(k, jp))] = w * d1[(0, jp)];
            }
        }
    }

    // lambda column
    let d = ModeDerivs::new(grid, u);
    let pw = pulled_back_pointwise(grid, &prof, Some(&d), true);
    let lam_modes = project_rows(grid, |j| pw.lam[j].clone());
    for k in 0..nx {
        for j in 1..nt {
            jac[(layout.field_index(k, j), layout.lambda_index())] = lam_modes[(k, j)];
        }
    }

    // psi columns
    let f0 = layout.residual(&evaluate_f(grid, lambda, u, psi)?);
    for k in 0..nx {
        let step = f64::EPSILON.sqrt() * (1.0 + psi.coeffs()[k].abs());
        let mut shifted = psi.clone();
        shifted.coeffs_mut()[k] += step;
        let f1 = layout.residual(&evaluate_f(grid, lambda, u, &shifted)?);
        let col = (f1 - &f0) / step;
        jac.set_column(layout.profile_index(k), &col);
    }
    Ok(jac)
}

/// Boundary slope `V(mu) = U'(pi_m)` of the discrete single-mode problem
/// `U'' + (1 - mu) U = 0`, `U` odd, `U(pi_m) = -pi_m`.
pub fn discrete_mode_boundary_derivative(grid: &CollocationGrid, mu: f64) -> Result<f64> {
    let nt = grid.nt();
    let pi_m = grid.pi_m();
    let d2 = grid.d2();
    let a = DMatrix::from_fn(nt - 1, nt - 1, |r, c| {
        d2[(r + 1, c + 1)] + if r == c { 1.0 - mu } else { 0.0 }
    });
    let rhs = DVector::from_fn(nt - 1, |r, _| d2[(r + 1, 0)] * pi_m);
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Parameter(format!("single-mode problem singular at mu = {mu}")))?;
    let d1 = grid.d1();
    Ok(d1[(0, 0)] * (-pi_m) + (1..nt).map(|j| d1[(0, j)] * sol[j - 1]).sum::<f64>())
}
