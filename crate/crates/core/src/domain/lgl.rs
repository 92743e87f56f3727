//! Legendre–Gauss–Lobatto nodes, weights and differentiation on [-1, 1].
//!
//! Nodes are returned in descending order (`x[0] = 1`) and are exactly
//! mirror-symmetric: `x[n - i] == -x[i]`.

use nalgebra::DMatrix;

/// Nodes and quadrature weights for polynomial degree `n` (n + 1 points).
pub(crate) fn nodes_and_weights(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let np = n + 1;
    let mut x: Vec<f64> = (0..np)
        .map(|i| (std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    let mut p_n = vec![0.0; np];
    let mut p_nm1 = vec![0.0; np];
    for _ in 0..100 {
        let mut max_dx: f64 = 0.0;
        for i in 0..np {
            let (pn, pnm1) = legendre_pair(n, x[i]);
            p_n[i] = pn;
            p_nm1[i] = pnm1;
            let dx = (x[i] * pn - pnm1) / (np as f64 * pn);
            x[i] -= dx;
            max_dx = max_dx.max(dx.abs());
        }
        if max_dx < 1e-16 {
            break;
        }
    }
    // Symmetrize so that parity reductions are exact.
    for i in 0..np / 2 {
        let a = 0.5 * (x[i] - x[n - i]);
        x[i] = a;
        x[n - i] = -a;
    }
    if np % 2 == 1 {
        x[n / 2] = 0.0;
    }
    x[0] = 1.0;
    x[n] = -1.0;
    let scale = 2.0 / (n as f64 * np as f64);
    let mut w: Vec<f64> = x
        .iter()
        .map(|&xi| {
            let (pn, _) = legendre_pair(n, xi);
            scale / (pn * pn)
        })
        .collect();
    for i in 0..np / 2 {
        let a = 0.5 * (w[i] + w[n - i]);
        w[i] = a;
        w[n - i] = a;
    }
    (x, w)
}

/// `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// First-derivative collocation matrix at the LGL nodes.
pub(crate) fn diff_matrix(x: &[f64]) -> DMatrix<f64> {
    let np = x.len();
    let n = np - 1;
    let pn: Vec<f64> = x.iter().map(|&xi| legendre_pair(n, xi).0).collect();
    let mut d = DMatrix::zeros(np, np);
    for i in 0..np {
        let mut row_sum = 0.0;
        for j in 0..np {
            if i != j {
                let v = pn[i] / (pn[j] * (x[i] - x[j]));
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        // negative-sum trick: rows annihilate constants exactly
        d[(i, i)] = -row_sum;
    }
    d
}

/// Second-derivative collocation matrix built from `d` directly
/// (`D2_ij = 2 D_ij (D_ii - 1 / (x_i - x_j))`), rows summing to zero.
pub(crate) fn diff2_matrix(x: &[f64], d: &DMatrix<f64>) -> DMatrix<f64> {
    let np = x.len();
    let mut d2 = DMatrix::zeros(np, np);
    for i in 0..np {
        let mut row_sum = 0.0;
        for j in 0..np {
            if i != j {
                let v = 2.0 * d[(i, j)] * (d[(i, i)] - 1.0 / (x[i] - x[j]));
                d2[(i, j)] = v;
                row_sum += v;
            }
        }
        d2[(i, i)] = -row_sum;
    }
    d2
}

/// Barycentric weights for Lagrange interpolation through `x`.
pub(crate) fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    let np = x.len();
    let mut w = vec![1.0; np];
    for j in 0..np {
        let mut prod = 1.0;
        for k in 0..np {
            if k != j {
                // factor 2 keeps the product near unit magnitude on [-1, 1]
                prod *= 2.0 * (x[j] - x[k]);
            }
        }
        w[j] = 1.0 / prod;
    }
    let max = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    w.iter_mut().for_each(|v| *v /= max);
    w
}
