//! Orthogonal polynomials of the Askey scheme used by the chaos expansions:
//! Legendre (uniform law, weight 1 on [-1, 1]) and probabilists' Hermite
//! (normal law, weight `exp(-x^2/2)` on the real line).
//!
//! All polynomials are the classical, unnormalized ones: `P_n(1) = 1` and
//! `H_n` monic. Norms are exposed separately through [`legendre_norm`] and
//! [`hermite_norm`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Hermite degree whose norm `sqrt(2 pi) n!` is evaluated.
pub const HERMITE_MAX_DEGREE: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolynomialKind {
    Legendre,
    HermiteProbabilists,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialFamily {
    pub kind: PolynomialKind,
    pub max_degree: usize,
}

impl PolynomialFamily {
    pub fn legendre(max_degree: usize) -> Self {
        PolynomialFamily {
            kind: PolynomialKind::Legendre,
            max_degree,
        }
    }

    pub fn hermite(max_degree: usize) -> Self {
        PolynomialFamily {
            kind: PolynomialKind::HermiteProbabilists,
            max_degree,
        }
    }

    /// Weight function `w(x)` of the family.
    pub fn weight(&self, x: f64) -> f64 {
        match self.kind {
            PolynomialKind::Legendre => {
                if (-1.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            PolynomialKind::HermiteProbabilists => (-0.5 * x * x).exp(),
        }
    }

    /// Total mass `int w dx`.
    pub fn weight_mass(&self) -> f64 {
        match self.kind {
            PolynomialKind::Legendre => 2.0,
            PolynomialKind::HermiteProbabilists => (2.0 * std::f64::consts::PI).sqrt(),
        }
    }

    pub fn eval(&self, n: usize, x: f64) -> f64 {
        match self.kind {
            PolynomialKind::Legendre => legendre_eval(n, x),
            PolynomialKind::HermiteProbabilists => hermite_eval(n, x),
        }
    }

    /// Values of degrees `0..=max_degree` at `x`.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        match self.kind {
            PolynomialKind::Legendre => legendre_eval_all(self.max_degree, x),
            PolynomialKind::HermiteProbabilists => hermite_eval_all(self.max_degree, x),
        }
    }

    /// Squared norm of the degree-`n` polynomial under the family weight.
    pub fn norm(&self, n: usize) -> Result<f64> {
        match self.kind {
            PolynomialKind::Legendre => Ok(legendre_norm(n)),
            PolynomialKind::HermiteProbabilists => hermite_norm(n),
        }
    }

    /// Off-diagonal entries of the Jacobi matrix of the orthonormal family,
    /// `x p_k = b_{k+1} p_{k+1} + b_k p_{k-1}` (both families are symmetric).
    fn jacobi_offdiag(&self, k: usize) -> f64 {
        let k = k as f64;
        match self.kind {
            PolynomialKind::Legendre => k / (4.0 * k * k - 1.0).sqrt(),
            PolynomialKind::HermiteProbabilists => k.sqrt(),
        }
    }
}

/// Legendre polynomial `P_n(x)` by the three-term recurrence
/// `(n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}`.
pub fn legendre_eval(n: usize, x: f64) -> f64 {
    let mut p_prev = 1.0;
    if n == 0 {
        return p_prev;
    }
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    p
}

/// `[P_0(x), ..., P_n(x)]`.
pub fn legendre_eval_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Probabilists' Hermite polynomial via `H_{n+1} = x H_n - n H_{n-1}`.
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    let mut h_prev = 1.0;
    if n == 0 {
        return h_prev;
    }
    let mut h = x;
    for k in 1..n {
        let next = x * h - k as f64 * h_prev;
        h_prev = h;
        h = next;
    }
    h
}

/// `[H_0(x), ..., H_n(x)]`.
pub fn hermite_eval_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 1..n {
        let next = x * out[k] - k as f64 * out[k - 1];
        out.push(next);
    }
    out
}

/// `int_{-1}^{1} P_n^2 dx = 2 / (2n + 1)`.
pub fn legendre_norm(n: usize) -> f64 {
    2.0 / (2.0 * n as f64 + 1.0)
}

/// `int H_n^2 exp(-x^2/2) dx = sqrt(2 pi) n!`, evaluated in log space.
pub fn hermite_norm(n: usize) -> Result<f64> {
    if n > HERMITE_MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            n,
            max: HERMITE_MAX_DEGREE,
        });
    }
    let log_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
    Ok((0.5 * (2.0 * std::f64::consts::PI).ln() + log_fact).exp())
}

/// `int_{-1}^{1} xi L_l(xi) L_lp(xi) dxi`, nonzero only for `|l - lp| = 1`.
pub fn xi_triple_product(l: usize, lp: usize) -> f64 {
    let lpf = lp as f64;
    if l == lp + 1 {
        2.0 * (lpf + 1.0) / ((2.0 * lpf + 1.0) * (2.0 * lpf + 3.0))
    } else if lp >= 1 && l + 1 == lp {
        2.0 * lpf / ((2.0 * lpf + 1.0) * (2.0 * lpf - 1.0))
    } else {
        0.0
    }
}

/// `int_{-1}^{1} P_m'(x) P_n'(x) dx`: `k(k+1)` with `k = min(m, n)` when the
/// degrees share parity, zero otherwise.
pub fn legendre_deriv_product_integral(m: usize, n: usize) -> f64 {
    if !(m + n).is_multiple_of(2) {
        return 0.0;
    }
    let k = m.min(n) as f64;
    k * (k + 1.0)
}

/// An n-point Gauss rule for a family weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub family: PolynomialFamily,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i f(x_i)`, i.e. the weighted integral `int f w dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Nodes and weights of a Legendre rule transplanted to `[a, b]`.
    /// The weights sum to `b - a`.
    pub fn mapped_to(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = self.nodes.iter().map(|&x| half * x + mid).collect();
        let weights = self.weights.iter().map(|&w| half * w).collect();
        (nodes, weights)
    }

    /// `V[q][l] = p_l(x_q)` for `l = 0..=degree`.
    pub fn vandermonde(&self, degree: usize) -> DMatrix<f64> {
        let fam = PolynomialFamily {
            kind: self.family.kind,
            max_degree: degree,
        };
        let mut v = DMatrix::zeros(self.len(), degree + 1);
        for (q, &x) in self.nodes.iter().enumerate() {
            for (l, p) in fam.eval_all(x).into_iter().enumerate() {
                v[(q, l)] = p;
            }
        }
        v
    }
}

/// Orthonormal values `p_0..p_{n-1}` and `p_n` plus its derivative at `x`.
fn orthonormal_tail(family: &PolynomialFamily, n: usize, x: f64) -> (f64, f64, f64) {
    // returns (sum_{k<n} p_k^2, p_n, p_n')
    let p0 = 1.0 / family.weight_mass().sqrt();
    let (mut p_prev, mut p) = (0.0, p0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += p * p;
        let b_next = family.jacobi_offdiag(k + 1);
        let b_k = if k == 0 {
            0.0
        } else {
            family.jacobi_offdiag(k)
        };
        let p_next = (x * p - b_k * p_prev) / b_next;
        let d_next = (p + x * d - b_k * d_prev) / b_next;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (sum_sq, p, d)
}

/// n-point Gauss rule for the family weight.
///
/// Nodes come from the eigenvalues of the symmetric tridiagonal Jacobi
/// matrix, are polished by Newton steps on the orthonormal recurrence, and
/// the weights are the Christoffel numbers `1 / sum_k p_k(x_i)^2`.
pub fn gauss_nodes(family: PolynomialFamily, n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::invalid("n", "a Gauss rule needs at least one node"));
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = family.jacobi_offdiag(k);
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = jac
        .try_symmetric_eigen(1e-15, 10_000)
        .ok_or(Error::QuadratureFailed { n })?;
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (_, p, d) = orthonormal_tail(&family, n, *x);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let step = p / d;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }
    // both weights are even: enforce exact symmetry of the rule
    for i in 0..n / 2 {
        let s = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -s;
        nodes[n - 1 - i] = s;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let mut weights = Vec::with_capacity(n);
    for &x in &nodes {
        let (sum_sq, _, _) = orthonormal_tail(&family, n, x);
        let w = 1.0 / sum_sq;
        if !w.is_finite() || w < 0.0 {
            return Err(Error::QuadratureFailed { n });
        }
        weights.push(w);
    }
    for i in 0..n / 2 {
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }

    Ok(QuadratureRule {
        nodes,
        weights,
        family: PolynomialFamily {
            kind: family.kind,
            max_degree: family.max_degree.max(2 * n - 1),
        },
    })
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    gauss_nodes(PolynomialFamily::legendre(2 * n.max(1) - 1), n)
}

/// Gauss-Hermite rule for the weight `exp(-x^2/2)`.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    gauss_nodes(PolynomialFamily::hermite(2 * n.max(1) - 1), n)
}

/// Legendre expansion coefficients `c_l = (2l+1)/2 int f P_l` of a function
/// given by its values on a Gauss-Legendre rule.
pub fn legendre_project(rule: &QuadratureRule, values: &[f64], degree: usize) -> DVector<f64> {
    let v = rule.vandermonde(degree);
    DVector::from_fn(degree + 1, |l, _| {
        let s: f64 = (0..rule.len())
            .map(|q| rule.weights[q] * values[q] * v[(q, l)])
            .sum();
        s / legendre_norm(l)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_listed_values() {
        assert_eq!(legendre_eval(0, 0.3), 1.0);
        for n in 0..30 {
            assert_abs_diff_eq!(legendre_eval(n, 1.0), 1.0, epsilon = 1e-13);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(legendre_eval(n, -1.0), sign, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(legendre_eval(2, 0.5), -0.125, epsilon = 1e-15);
        for n in (1..20).step_by(2) {
            assert_abs_diff_eq!(legendre_eval(n, 0.0), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn hermite_listed_values() {
        assert_eq!(hermite_eval(2, 2.0), 3.0);
        assert_eq!(hermite_eval(0, -7.5), 1.0);
        assert_eq!(hermite_eval(3, 1.0), -2.0);
        let all = hermite_eval_all(5, 0.7);
        for (n, h) in all.iter().enumerate() {
            assert_abs_diff_eq!(*h, hermite_eval(n, 0.7), epsilon = 1e-14);
        }
    }

    #[test]
    fn small_gauss_rules() {
        let r1 = gauss_legendre(1).unwrap();
        assert_abs_diff_eq!(r1.nodes[0], 0.0);
        assert_abs_diff_eq!(r1.weights[0], 2.0, epsilon = 1e-15);

        let r2 = gauss_legendre(2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(r2.nodes[0], -s, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.nodes[1], s, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.weights[0], 1.0, epsilon = 1e-15);
        // exact integrals of 1, x, x^2, x^3
        let exact = [2.0, 0.0, 2.0 / 3.0, 0.0];
        for (k, e) in exact.iter().enumerate() {
            assert_abs_diff_eq!(r2.integrate(|x| x.powi(k as i32)), *e, epsilon = 1e-15);
        }

        let h1 = gauss_hermite(1).unwrap();
        assert_abs_diff_eq!(h1.nodes[0], 0.0);
        assert_abs_diff_eq!(
            h1.weights[0],
            (2.0 * std::f64::consts::PI).sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn weights_positive_and_sum_to_mass() {
        for n in [3, 17, 64, 200] {
            let r = gauss_legendre(n).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert_abs_diff_eq!(r.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        }
        for n in [3, 30, 80] {
            let r = gauss_hermite(n).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            let mass = (2.0 * std::f64::consts::PI).sqrt();
            assert!((r.weights.iter().sum::<f64>() - mass).abs() < 1e-12 * mass);
        }
    }

    #[test]
    fn hermite_norm_values() {
        let s = (2.0 * std::f64::consts::PI).sqrt();
        assert!((hermite_norm(0).unwrap() - s).abs() < 1e-15);
        assert!((hermite_norm(1).unwrap() - s).abs() < 1e-15);
        assert!((hermite_norm(4).unwrap() - 24.0 * s).abs() < 1e-12);
        assert!(hermite_norm(150).unwrap().is_finite());
        assert!(matches!(
            hermite_norm(151),
            Err(Error::DegreeOverflow { .. })
        ));
    }

    #[test]
    fn triple_product_and_derivative_listed_cases() {
        assert_abs_diff_eq!(xi_triple_product(1, 0), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(xi_triple_product(3, 3), 0.0);
        assert_abs_diff_eq!(xi_triple_product(2, 1), 4.0 / 15.0, epsilon = 1e-15);
        assert_eq!(xi_triple_product(0, 0), 0.0);
        assert_eq!(xi_triple_product(5, 1), 0.0);

        assert_eq!(legendre_deriv_product_integral(1, 1), 2.0);
        assert_eq!(legendre_deriv_product_integral(7, 8), 0.0);
        assert_eq!(legendre_deriv_product_integral(2, 2), 6.0);
        assert_eq!(legendre_deriv_product_integral(0, 4), 0.0);
    }

    #[test]
    fn projection_recovers_polynomial_coefficients() {
        let rule = gauss_legendre(12).unwrap();
        let vals: Vec<f64> = rule
            .nodes
            .iter()
            .map(|&x| 0.5 - 2.0 * legendre_eval(3, x) + 0.25 * legendre_eval(7, x))
            .collect();
        let c = legendre_project(&rule, &vals, 9);
        let expect = [0.5, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0];
        for (l, e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(c[l], *e, epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_point_rule_rejected() {
        assert!(gauss_legendre(0).is_err());
    }
}
