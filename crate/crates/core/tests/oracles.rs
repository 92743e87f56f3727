//! Worked examples with known answers, one module at a time.

use std::f64::consts::PI;

use strip_bifurcation::continuation::{
    initial_point, newton_step, remainder, trace_branch, ContinuationConfig, Direction,
};
use strip_bifurcation::domain::{
    collocation_grid, inner_product, make_strip, map_to_physical, map_to_reference,
    BoundaryProfile, CollocationGrid, LinearPair, StripField,
};
use strip_bifurcation::linear_analysis::*;
use strip_bifurcation::operators::*;
use strip_bifurcation::persist::{branch_from_json, branch_to_json, export_domain, DOMAIN_HEADER};
use strip_bifurcation::verify::{check_overdetermined, pushforward_solution, schiffer_rescale};
use strip_bifurcation::Error;

fn grid(m: u32, ell: i64, nx: usize, nt: usize) -> CollocationGrid {
    collocation_grid(make_strip(m, ell).unwrap(), nx, nt).unwrap()
}

/// `int_{-pi_m}^{pi_m} f dt` on the grid's Gauss-Lobatto rule.
fn t_integral(g: &CollocationGrid, f: impl Fn(f64) -> f64) -> f64 {
    g.t_nodes().iter().zip(g.t_weights()).map(|(&t, &w)| w * (f(t) + f(-t))).sum()
}

fn pair_sub(a: &OperatorOutput, b: &OperatorOutput) -> LinearPair {
    LinearPair::new(
        a.interior.add_scaled(&b.interior, -1.0),
        BoundaryProfile::new(
            a.trace.coeffs().iter().zip(b.trace.coeffs()).map(|(x, y)| x - y).collect(),
        ),
    )
}

// ---- domain ----

#[test]
fn strip_half_heights() {
    assert_eq!(make_strip(0, 0).unwrap().pi_m(), PI);
    assert_eq!(make_strip(1, 2).unwrap().pi_m(), 3.0 * PI);
    assert!(matches!(make_strip(1, 3), Err(Error::Parameter(_))));
}

#[test]
fn uniform_scaling_map() {
    let two = BoundaryProfile::constant(2.0, 1);
    assert_eq!(map_to_physical(&two, 0.0, PI).unwrap(), (0.0, PI / 2.0));
    assert_eq!(map_to_reference(&two, 0.0, PI / 2.0).unwrap(), (0.0, PI));
    assert!(matches!(
        map_to_physical(&BoundaryProfile::constant(-1.0, 1), 0.0, 1.0),
        Err(Error::Domain { .. })
    ));
}

#[test]
fn inner_product_examples() {
    let g = grid(0, 0, 4, 16);
    let cos_x = LinearPair::new(StripField::zeros(&g, true), BoundaryProfile::mode(1, 1.0, 4));
    assert!((inner_product(&g, &cos_x, &cos_x).unwrap() - PI).abs() < 1e-14);

    // distinct cosine modes are orthogonal
    let a = LinearPair::new(
        StripField::from_mode_fn(&g, false, |k, t| if k == 1 { t.sin() } else { 0.0 }),
        BoundaryProfile::zeros(4),
    );
    let b = LinearPair::new(
        StripField::from_mode_fn(&g, false, |k, t| if k == 2 { t.sin() } else { 0.0 }),
        BoundaryProfile::zeros(4),
    );
    assert_eq!(inner_product(&g, &a, &b).unwrap(), 0.0);

    let w = LinearPair::new(cokernel_pair(&g).field, BoundaryProfile::zeros(4));
    assert!((inner_product(&g, &w, &w).unwrap() - PI * PI).abs() < 1e-12);

    let other = grid(0, 0, 4, 8);
    let z = LinearPair::zeros(&other);
    assert!(matches!(inner_product(&g, &w, &z), Err(Error::Dimension(_))));
}

#[test]
fn grid_quadrature() {
    let g = grid(0, 0, 4, 8);
    assert_eq!((g.x_nodes().len(), g.t_nodes().len()), (4, 8));
    assert!((g.quadrature(|_, _| 1.0) - 4.0 * PI * PI).abs() < 1e-12);
    let g = grid(0, 0, 4, 16);
    assert!((g.quadrature(|x, t| (x.cos() * t.sin()).powi(2)) - PI * PI).abs() < 1e-12);
    assert!(matches!(collocation_grid(make_strip(0, 0).unwrap(), 1, 8), Err(Error::Parameter(_))));
}

// ---- operators ----

#[test]
fn pulled_back_operator_on_sine_matches_closed_form() {
    let g = grid(1, 0, 32, 48);
    let mut coeffs = vec![0.0; 32];
    coeffs[..4].copy_from_slice(&[1.0, 0.12, -0.05, 0.02]);
    let h = BoundaryProfile::new(coeffs);
    let sine = StripField::from_mode_fn(&g, false, |k, t| if k == 0 { t.sin() } else { 0.0 });
    let lambda = 0.6;
    let got = apply_pulled_back_operator(&g, lambda, &h, &sine).unwrap();
    for &x in &[0.0, 0.7, 2.1, PI] {
        for &t in &[0.3f64, 1.9, 5.5, 8.0] {
            let (hx, hp, hpp) = (h.eval(x), h.deriv(x), h.deriv2(x));
            let expect = t.sin() * (1.0 - hx * hx - lambda * t * t * hp * hp / (hx * hx))
                + lambda * hpp / hx * t * t.cos();
            assert!((got.eval(&g, x, t) - expect).abs() < 1e-9, "x {x} t {t}");
        }
    }
}

#[test]
fn flat_operator_is_mode_diagonal() {
    let g = grid(0, 0, 6, 24);
    let u = StripField::from_mode_fn(&g, false, |k, t| (k as f64 + 1.0) * (0.3 * t).sin());
    let one = BoundaryProfile::constant(1.0, 6);
    let got = apply_pulled_back_operator(&g, 0.8, &one, &u).unwrap();
    let d2u = u.modes() * g.d2().transpose();
    for k in 0..6 {
        for j in 0..24 {
            let expect = (1.0 - 0.8 * (k * k) as f64) * u.value(k, j) + d2u[(k, j)];
            assert!((got.value(k, j) - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn normal_derivative_examples() {
    let g = grid(0, 0, 4, 16);
    let sine = StripField::from_mode_fn(&g, false, |k, t| if k == 0 { t.sin() } else { 0.0 });
    let xs = [0.0, 1.0, 2.5];
    let one = normal_derivative(&g, &BoundaryProfile::constant(1.0, 4), &sine, Side::Top, &xs).unwrap();
    assert!(one.iter().all(|v| (v + 1.0).abs() < 1e-12));
    let two = normal_derivative(&g, &BoundaryProfile::constant(2.0, 4), &sine, Side::Top, &xs).unwrap();
    assert!(two.iter().all(|v| (v + 2.0).abs() < 1e-12));

    let odd = StripField::from_mode_fn(&g, true, |k, t| if k == 1 { (0.5 * t).sin() } else { 0.0 });
    let top = normal_derivative(&g, &BoundaryProfile::constant(1.0, 4), &odd, Side::Top, &xs).unwrap();
    let bot = normal_derivative(&g, &BoundaryProfile::constant(1.0, 4), &odd, Side::Bottom, &xs).unwrap();
    for (a, b) in top.iter().zip(&bot) {
        assert_eq!(*a, -*b);
    }
    assert!(matches!(
        normal_derivative(&g, &BoundaryProfile::constant(0.0, 4), &odd, Side::Top, &xs),
        Err(Error::Domain { .. })
    ));
}

#[test]
fn neumann_functional_derivative_by_differences() {
    let g = grid(0, 0, 6, 24);
    let v = StripField::from_mode_fn(&g, true, |k, t| match k {
        1 => (0.5 * t).sin() - (0.5 * PI).sin() * t / PI,
        2 => 0.3 * (t * (PI * PI - t * t)),
        _ => 0.0,
    });
    let gp = BoundaryProfile::new(vec![0.1, 0.4, -0.2, 0.0, 0.0, 0.0]);
    let eps = 1e-6;
    let q = neumann_functional(&g, &v.scaled(eps), &gp.scaled(eps)).unwrap();
    let d1 = g.d1();
    for k in 0..6 {
        let vt: f64 = (0..24).map(|j| d1[(0, j)] * v.value(k, j)).sum();
        let expect = vt - gp.coeffs()[k];
        assert!((q.coeffs()[k] / eps - expect).abs() < 1e-5, "mode {k}");
    }
    let zero = neumann_functional(&g, &StripField::zeros(&g, true), &BoundaryProfile::zeros(6)).unwrap();
    assert!(zero.coeffs().iter().all(|&c| c == 0.0));
}

#[test]
fn f_vanishes_on_trivial_branch() {
    let g = grid(1, 1, 6, 24);
    for &lambda in &[0.2, 0.75, 3.0] {
        let out = evaluate_f(&g, lambda, &StripField::zeros(&g, true), &BoundaryProfile::zeros(6)).unwrap();
        assert_eq!(out.sup(&g), 0.0);
    }
}

#[test]
fn f_along_kernel_is_second_order() {
    let g = grid(0, 0, 8, 48);
    let lambda = critical_lambda(g.params());
    let k = kernel_pair(&g);
    let res = |eps: f64| {
        evaluate_f(&g, lambda, &k.field.scaled(eps), &k.profile.scaled(eps))
            .unwrap()
            .sup(&g)
    };
    let ratio = res(1e-3) / res(5e-4);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn substitution_of_kernel_pair() {
    let g = grid(1, 2, 4, 32);
    let k = kernel_pair(&g);
    let u = substitute_u(&g, &k.field, &k.profile).unwrap();
    let xi = eigen_frequency(1, 2);
    let xi = to_f64(xi);
    for (j, &t) in g.t_nodes().iter().enumerate() {
        let expect = -g.params().parity_sign() * g.pi_m() * (xi * t).sin();
        assert!((u.value(1, j) - expect).abs() < 1e-12);
    }
}

#[test]
fn linearization_at_general_lambda() {
    for &(m, ell) in &[(0, 0), (1, 1), (2, 3)] {
        let g = grid(m, ell, 4, 64);
        let mu = critical_lambda(g.params());
        let k = kernel_pair(&g);
        let xi = to_f64(eigen_frequency(m, ell as u32));
        for &lambda in &[0.3, 1.1] {
            let out = linearization_at_origin(&g, lambda, &k.field, &k.profile).unwrap();
            for (j, &t) in g.t_nodes().iter().enumerate() {
                let expect = (lambda - mu) * g.params().parity_sign() * g.pi_m() * (xi * t).sin();
                assert!((out.interior.value(1, j) - expect).abs() < 1e-8);
            }
            assert!(out.trace_sup() < 1e-10);
        }
    }
}

#[test]
fn two_forms_of_linearization_agree_on_kernel() {
    let g = grid(1, 0, 6, 24);
    let k = kernel_pair(&g);
    let a = linearization_at_origin(&g, 0.9, &k.field, &k.profile).unwrap();
    let b = linearization_expanded(&g, 0.9, &k.field, &k.profile).unwrap();
    let d = pair_sub(&a, &b);
    assert!(d.field.sup_norm(&g) < 1e-10 && d.profile.sup_on_grid(64) < 1e-10);
}

#[test]
fn cokernel_is_annihilated_by_adjoint() {
    for &(m, ell) in &[(0, 0), (1, 0), (1, 2)] {
        let g = grid(m, ell, 4, 64);
        let c = cokernel_pair(&g);
        let a = adjoint_apply(&g, critical_lambda(g.params()), &c.field, &c.profile).unwrap();
        assert!(a.sup(&g) < 1e-8, "({m},{ell}): {}", a.sup(&g));
    }
    let g = grid(0, 0, 4, 16);
    let z = adjoint_apply(&g, 0.5, &StripField::zeros(&g, false), &BoundaryProfile::zeros(4)).unwrap();
    assert_eq!(z.sup(&g), 0.0);
}

#[test]
fn jacobian_at_origin_examples() {
    let g = grid(0, 0, 4, 24);
    let mu = critical_lambda(g.params());
    let layout = StateLayout::new(&g);
    let zero_u = StripField::zeros(&g, true);
    let zero_h = BoundaryProfile::zeros(4);
    let jac = jacobian(&g, mu, &zero_u, &zero_h).unwrap();
    let k = kernel_pair(&g);
    let mut dir = layout.pack(&k.field, &k.profile, 0.0);
    let kernel_image = &jac * &dir;
    assert!(kernel_image.amax() < 1e-6, "{}", kernel_image.amax());

    // mixed derivative: d_lambda J applied to the kernel direction
    let jac2 = jacobian(&g, mu + 1.0, &zero_u, &zero_h).unwrap();
    dir[layout.lambda_index()] = 0.0;
    let mixed = (&jac2 - &jac) * &dir;
    let xi = 0.5;
    for (j, &t) in g.t_nodes().iter().enumerate().skip(1) {
        let expect = g.pi_m() * (xi * t).sin();
        assert!((mixed[layout.field_index(1, j)] - expect).abs() < 1e-5);
    }
}

#[test]
fn jacobian_matches_central_differences() {
    let g = grid(0, 0, 4, 16);
    let layout = StateLayout::new(&g);
    let u = StripField::from_mode_fn(&g, true, |k, t| 0.05 * (k as f64 + 1.0) * (0.5 * t).sin() * (PI - t) / PI);
    let h = BoundaryProfile::new(vec![0.02, 0.05, -0.01, 0.004]);
    let lambda = 0.8;
    let jac = jacobian(&g, lambda, &u, &h).unwrap();
    let x0 = layout.pack(&u, &h, lambda);
    let f = |x: &nalgebra::DVector<f64>| {
        let (u, h, l) = layout.unpack(x);
        layout.residual(&evaluate_f(&g, l, &u, &h).unwrap())
    };
    let step = 1e-6;
    let mut fd = nalgebra::DMatrix::zeros(layout.n_equations(), layout.n_unknowns());
    for c in 0..layout.n_unknowns() {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[c] += step;
        xm[c] -= step;
        fd.set_column(c, &((f(&xp) - f(&xm)) / (2.0 * step)));
    }
    let rel = (&jac - &fd).amax() / fd.amax();
    assert!(rel <= 1e-5, "relative error {rel}");
}

// ---- linear analysis ----

#[test]
fn cokernel_integral_closed_form_against_quadrature() {
    for &(m, mu) in &[(0u32, 0.5f64), (1, 0.5), (2, 0.2), (1, 0.95)] {
        let p = make_strip(m, 0).unwrap();
        let xi = (1.0 - mu).sqrt();
        let g = collocation_grid(p, 2, 200).unwrap();
        let quad = t_integral(&g, |t| (mu * t * t.cos() + 2.0 * t.sin()) * (xi * t).sin());
        let closed = cokernel_integral(mu, &p).unwrap();
        assert!((closed - quad).abs() < 1e-9 * (1.0 + quad.abs()), "m {m} mu {mu}: {closed} vs {quad}");
    }
    assert!(cokernel_integral(1.2, &make_strip(0, 0).unwrap()).is_err());
}

#[test]
fn bordered_identity_vanishes_at_eigenvalues() {
    for m in 0..3 {
        for e in eigenvalue_sequence(m) {
            let p = make_strip(m, e.ell as i64).unwrap();
            let mu = e.mu_f64();
            let xi = e.xi_f64();
            // B = 1 and z = -2 sin(xi pi_m)
            let val = cokernel_integral(mu, &p).unwrap() - 2.0 * (xi * p.pi_m()).sin();
            assert!(val.abs() < 1e-12, "m {m} ell {}", e.ell);
        }
    }
}

#[test]
fn super_mode_integral_against_quadrature() {
    for &(m, ell, k) in &[(0u32, 0i64, 2u32), (1, 0, 2), (1, 2, 3)] {
        let p = make_strip(m, ell).unwrap();
        let mu = (k * k) as f64 * critical_lambda(&p);
        let kappa = (mu - 1.0).sqrt();
        let g = collocation_grid(p, 2, 200).unwrap();
        let quad = t_integral(&g, |t| (mu * t * t.cos() + 2.0 * t.sin()) * 2.0 * (kappa * t).sinh());
        let z = -2.0 * 2.0 * (kappa * p.pi_m()).sinh();
        let closed = super_mode_integral(k, &p).unwrap();
        assert!(closed < 0.0);
        assert!((closed - (quad + z)).abs() < 1e-9 * closed.abs(), "{closed} vs {}", quad + z);
    }
}

#[test]
fn transversality_against_quadrature() {
    for &(m, ell) in &[(0, 0), (1, 1), (1, 2)] {
        let g = grid(m, ell, 4, 64);
        let p = g.params();
        let xi = to_f64(eigen_frequency(m, ell as u32));
        let quad = p.parity_sign() * p.pi_m() * g.quadrature(|x, t| (x.cos() * (xi * t).sin()).powi(2));
        let closed = transversality_pairing(p);
        assert!(((quad - closed) / closed).abs() < 1e-9);
        let disc = discrete_transversality_pairing(&g).unwrap();
        assert!(((disc - closed) / closed).abs() < 1e-9);
    }
}

#[test]
fn kernel_pair_m0() {
    let g = grid(0, 0, 4, 16);
    let k = kernel_pair(&g);
    assert!(k.field.is_dirichlet());
    for (j, &t) in g.t_nodes().iter().enumerate().skip(1) {
        assert!((k.field.value(1, j) - (-PI * (t / 2.0).sin() - t * t.cos())).abs() < 1e-14);
    }
    assert_eq!(k.profile.coeffs()[1], 1.0);
}

// ---- continuation ----

fn small_config() -> ContinuationConfig {
    ContinuationConfig {
        nx: 6,
        nt: 32,
        s_max: 0.01,
        ds: 2.5e-3,
        ..Default::default()
    }
}

#[test]
fn newton_first_order_expansion() {
    let params = make_strip(0, 0).unwrap();
    let c = small_config();
    let g = c.grid(params).unwrap();
    let p0 = initial_point(&params, &c).unwrap();
    let mut errs = Vec::new();
    for &s in &[1e-3, 5e-4, 2.5e-4] {
        let p = newton_step(&params, &c, &p0, s).unwrap();
        assert!(p.residual_interior <= 1e-10 && p.residual_neumann <= 1e-10);
        let r = remainder(&g, &p).unwrap();
        errs.push(r.field.sup_norm(&g).max(r.profile.sup_on_grid(64)));
        assert!((p.lambda - 0.75).abs() < 1e-5);
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.5..2.5).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn branch_orthogonality_and_mirror() {
    let params = make_strip(0, 0).unwrap();
    let c = small_config();
    let g = c.grid(params).unwrap();
    let pos = trace_branch(&params, &c).unwrap();
    let neg = trace_branch(&params, &ContinuationConfig { direction: Direction::Negative, ..c.clone() }).unwrap();
    assert!(pos.failure.is_none() && neg.failure.is_none());
    assert!(pos.points.windows(2).all(|w| w[1].s > w[0].s));
    let k = kernel_pair(&g);
    for p in pos.points.iter().skip(1) {
        let r = remainder(&g, p).unwrap();
        assert!(inner_product(&g, &r, &k).unwrap().abs() < 1e-8);
    }
    let (a, b) = (pos.points.last().unwrap(), neg.points.last().unwrap());
    assert_eq!(b.s, -a.s);
    assert!((a.lambda - b.lambda).abs() < 1e-12);
}

#[test]
fn guard_violation_is_reported() {
    let params = make_strip(0, 0).unwrap();
    let c = small_config();
    let mut p = initial_point(&params, &c).unwrap();
    p.h = BoundaryProfile::constant(-0.95, 6);
    assert!(matches!(newton_step(&params, &c, &p, 0.0), Err(Error::Domain { .. })));
}

// ---- verification and persistence ----

#[test]
fn pushforward_examples() {
    let params = make_strip(0, 0).unwrap();
    let c = small_config();
    let g = c.grid(params).unwrap();
    let br = trace_branch(&params, &c).unwrap();
    let sol0 = pushforward_solution(&g, &br.points[0]).unwrap();
    assert!((sol0.value(1.0, 2.0) - 2.0f64.sin()).abs() < 1e-14);
    let p = br.points.last().unwrap();
    let sol = pushforward_solution(&g, p).unwrap();
    for &x in &[0.0, 1.0, 3.0] {
        assert!(sol.value(x, sol.top(x)).abs() < 1e-10);
        assert!(sol.value(x, -sol.top(x)).abs() < 1e-10);
    }
    assert!(sol.value(0.0, 0.05) > 0.0 && sol.value(0.0, -0.05) < 0.0);
}

#[test]
fn verification_and_rescaling_at_small_amplitude() {
    let params = make_strip(0, 0).unwrap();
    let c = ContinuationConfig { nx: 8, nt: 48, ..small_config() };
    let g = c.grid(params).unwrap();
    let br = trace_branch(&params, &c).unwrap();
    let p = br.points.last().unwrap();
    let r = check_overdetermined(&g, p, 1e-8).unwrap();
    assert!(r.within_tol && r.sign_changing, "{r:?}");
    assert!(r.neumann_antisymmetry <= 1e-10);

    let w = schiffer_rescale(&g, p).unwrap();
    assert!(w.pde_sup <= r.pde_sup * p.lambda.max(1.0) + 1e-15);
    assert!((w.top_neumann_min - w.flat_top_neumann()).abs() < 0.01);
    assert!((w.top_neumann_max - w.flat_top_neumann()).abs() < 0.01);

    // lambda = 1 leaves the solution unchanged
    let mut unit = p.clone();
    unit.lambda = 1.0;
    let w1 = schiffer_rescale(&g, &unit).unwrap();
    let sol = pushforward_solution(&g, &unit).unwrap();
    let [y, z, v] = w1.samples[5];
    assert_eq!(v, sol.value(y, z));
}

#[test]
fn domain_export_examples() {
    let params = make_strip(0, 0).unwrap();
    let c = small_config();
    let g = c.grid(params).unwrap();
    let br = trace_branch(&params, &c).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let flat = dir.path().join("flat.csv");
    export_domain(&g, &br.points[0], 9, &flat).unwrap();
    let text = std::fs::read_to_string(&flat).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(DOMAIN_HEADER));
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        let t: f64 = cols[2].parse().unwrap();
        match cols[0] {
            "top" => assert_eq!(t, PI),
            "bottom" => assert_eq!(t, -PI),
            _ => assert_eq!(cols[0], "field"),
        }
    }

    let p = br.points.last().unwrap();
    let path = dir.path().join("bent.csv");
    export_domain(&g, p, 33, &path).unwrap();
    for line in std::fs::read_to_string(&path).unwrap().lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols[0] == "top" {
            let x: f64 = cols[1].parse().unwrap();
            let t: f64 = cols[2].parse().unwrap();
            assert!((t - PI * (1.0 - p.s * x.cos())).abs() < 5.0 * p.s * p.s * PI);
        }
    }
    let missing = dir.path().join("no/such/dir.csv");
    assert!(matches!(export_domain(&g, p, 9, &missing), Err(Error::Io { .. })));
}

#[test]
fn branch_file_round_trip() {
    let params = make_strip(0, 0).unwrap();
    let br = trace_branch(&params, &small_config()).unwrap();
    let text = branch_to_json(&br).unwrap();
    let back = branch_from_json(&text, std::path::Path::new("mem.json")).unwrap();
    assert_eq!(back, br);
}
