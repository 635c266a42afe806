//! Gauss-Legendre quadrature and orthonormal Legendre bases on the
//! reference interval `[-1, 1]` and on physical cells.
//!
//! The basis is orthonormal (not merely orthogonal), so L² projection
//! coefficients are plain inner products and the left-hand side of the
//! cellwise weak form reduces to the raw modal coefficients.

use crate::error::{Result, SldgError};

/// Largest supported rule size.
pub const MAX_QUAD_POINTS: usize = 32;

/// A Gauss-Legendre rule on `[-1, 1]`: `n` nodes in `(-1, 1)` (strictly
/// increasing, symmetric about 0) with positive weights summing to 2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Legendre polynomial value and derivative at `x` by the three-term
/// recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Build the `n`-point Gauss-Legendre rule by Newton iteration on the roots
/// of `P_n`, starting from Chebyshev estimates. Converges to 1e-15 in a
/// handful of iterations for all supported sizes.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_QUAD_POINTS {
        return Err(SldgError::InvalidArgument(format!(
            "quadrature size {n} out of range 1..={MAX_QUAD_POINTS}"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Compute the lower half; mirror for exact symmetry.
    for i in 0..n.div_ceil(2) {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        if n % 2 == 1 && i == n / 2 {
            x = 0.0;
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Evaluate the orthonormal Legendre basis `[phi_0, ..., phi_k]` at a
/// reference coordinate `xi` in `[-1, 1]`: `phi_i = sqrt((2i+1)/2) P_i`.
///
/// Coordinates within 1e-12 of the interval are clamped; anything further
/// out is an argument error.
pub fn eval_basis_ref(degree: usize, xi: f64) -> Result<Vec<f64>> {
    if xi.abs() > 1.0 + 1e-12 {
        return Err(SldgError::InvalidArgument(format!(
            "reference coordinate {xi} outside [-1, 1]"
        )));
    }
    let mut out = vec![0.0; degree + 1];
    eval_basis_ref_into(degree, xi.clamp(-1.0, 1.0), &mut out);
    Ok(out)
}

/// Unchecked basis evaluation used by inner solver loops, where forward
/// traces may land a tracer-error distance outside the cell. Legendre
/// polynomials extrapolate smoothly there.
#[inline]
pub(crate) fn eval_basis_ref_into(degree: usize, xi: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= degree + 1);
    let mut p_prev = 1.0;
    out[0] = std::f64::consts::FRAC_1_SQRT_2; // sqrt(1/2)
    if degree == 0 {
        return;
    }
    let mut p = xi;
    out[1] = (1.5f64).sqrt() * p;
    for k in 1..degree {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * xi * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
        out[k + 1] = ((2.0 * (kf + 1.0) + 1.0) / 2.0).sqrt() * p;
    }
}

/// Evaluate the basis orthonormal on a physical cell with center `xc` and
/// width `h`: `phi_i(x) = sqrt(2/h) phi_i^ref(2 (x - xc) / h)`.
pub fn eval_basis_cell(degree: usize, xc: f64, h: f64, x: f64) -> Result<Vec<f64>> {
    if h <= 0.0 {
        return Err(SldgError::InvalidArgument(format!("cell width {h} must be positive")));
    }
    let xi = 2.0 * (x - xc) / h;
    if xi.abs() > 1.0 + 1e-12 {
        return Err(SldgError::InvalidArgument(format!(
            "point {x} outside cell (center {xc}, width {h})"
        )));
    }
    let mut out = vec![0.0; degree + 1];
    eval_basis_ref_into(degree, xi.clamp(-1.0, 1.0), &mut out);
    let scale = (2.0 / h).sqrt();
    for v in &mut out {
        *v *= scale;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_rules() {
        let r1 = gauss_legendre(1).unwrap();
        assert_eq!(r1.nodes, vec![0.0]);
        assert_eq!(r1.weights, vec![2.0]);

        let r2 = gauss_legendre(2).unwrap();
        let s3 = 1.0 / 3.0f64.sqrt();
        assert_abs_diff_eq!(r2.nodes[0], -s3, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.nodes[1], s3, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.weights[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.weights[1], 1.0, epsilon = 1e-15);

        let r3 = gauss_legendre(3).unwrap();
        let n = (3.0f64 / 5.0).sqrt();
        assert_abs_diff_eq!(r3.nodes[0], -n, epsilon = 1e-15);
        assert_abs_diff_eq!(r3.nodes[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r3.nodes[2], n, epsilon = 1e-15);
        assert_abs_diff_eq!(r3.weights[0], 5.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r3.weights[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn size_bounds_rejected() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(33).is_err());
        assert!(gauss_legendre(32).is_ok());
    }

    #[test]
    fn weights_sum_to_measure_and_nodes_symmetric() {
        for n in 1..=MAX_QUAD_POINTS {
            let r = gauss_legendre(n).unwrap();
            let sum: f64 = r.weights.iter().sum();
            assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-14);
            for i in 0..n {
                assert_eq!(r.nodes[i], -r.nodes[n - 1 - i], "rule {n} node {i}");
                assert!(r.weights[i] > 0.0);
                assert!(r.nodes[i].abs() < 1.0);
                if i > 0 {
                    assert!(r.nodes[i] > r.nodes[i - 1]);
                }
            }
        }
    }

    #[test]
    fn exact_for_monomials_up_to_2n_minus_1() {
        for n in 1..=16 {
            let r = gauss_legendre(n).unwrap();
            for m in 0..=(2 * n - 1) {
                let got = r.integrate(-1.0, 1.0, |x| x.powi(m as i32));
                let exact = if m % 2 == 1 { 0.0 } else { 2.0 / (m as f64 + 1.0) };
                assert!(
                    (got - exact).abs() <= 1e-13,
                    "n={n} m={m}: got {got}, want {exact}"
                );
            }
        }
    }

    #[test]
    fn reference_basis_values() {
        let v = eval_basis_ref(1, 0.0).unwrap();
        assert_abs_diff_eq!(v[0], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-15);

        let v = eval_basis_ref(2, 1.0).unwrap();
        assert_abs_diff_eq!(v[0], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 2.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn reference_basis_matches_explicit_polynomials() {
        // Independent oracle: explicit P_0..P_3 formulas.
        let xi = 0.5;
        let p = [
            1.0,
            xi,
            0.5 * (3.0 * xi * xi - 1.0),
            0.5 * (5.0 * xi * xi * xi - 3.0 * xi),
        ];
        let v = eval_basis_ref(3, xi).unwrap();
        for i in 0..4 {
            let expect = ((2.0 * i as f64 + 1.0) / 2.0).sqrt() * p[i];
            assert_abs_diff_eq!(v[i], expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn reference_basis_domain_check() {
        assert!(eval_basis_ref(2, 1.0 + 1e-13).is_ok());
        assert!(eval_basis_ref(2, 1.1).is_err());
    }

    #[test]
    fn cell_basis_values() {
        let h = 0.37;
        let v = eval_basis_cell(0, 1.2, h, 1.3).unwrap();
        assert_abs_diff_eq!(v[0], 1.0 / h.sqrt(), epsilon = 1e-15);

        let v = eval_basis_cell(1, 1.2, h, 1.2).unwrap();
        assert_abs_diff_eq!(v[0], 1.0 / h.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-15);

        // Identity map for the reference cell (center 0, width 2).
        let v = eval_basis_cell(2, 0.0, 2.0, 1.0).unwrap();
        let r = eval_basis_ref(2, 1.0).unwrap();
        assert_eq!(v, r);

        assert!(eval_basis_cell(2, 0.0, 2.0, 1.5).is_err());
        assert!(eval_basis_cell(2, 0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn reference_orthonormality() {
        let degree = 6;
        let quad = gauss_legendre(degree + 1).unwrap();
        for i in 0..=degree {
            for j in 0..=degree {
                let mut acc = 0.0;
                for (&x, &w) in quad.nodes.iter().zip(&quad.weights) {
                    let v = eval_basis_ref(degree, x).unwrap();
                    acc += w * v[i] * v[j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((acc - expect).abs() <= 1e-12, "({i},{j}) -> {acc}");
            }
        }
    }

    #[test]
    fn cell_orthonormality_random_cells() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let degree = 3;
        let quad = gauss_legendre(degree + 2).unwrap();
        for _ in 0..50 {
            let xc: f64 = rng.gen_range(-10.0..10.0);
            let h: f64 = rng.gen_range(1e-3..5.0);
            for i in 0..=degree {
                for j in 0..=degree {
                    let acc = quad.integrate(xc - 0.5 * h, xc + 0.5 * h, |x| {
                        let v = eval_basis_cell(degree, xc, h, x).unwrap();
                        v[i] * v[j]
                    });
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (acc - expect).abs() <= 1e-12,
                        "cell ({xc},{h}) pair ({i},{j}) -> {acc}"
                    );
                }
            }
        }
    }
}
