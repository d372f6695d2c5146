use critgpc::orthopoly::*;
use proptest::prelude::*;

fn legendre_inner(rule: &QuadratureRule, f: impl Fn(f64) -> f64) -> f64 {
    rule.integrate(f)
}

proptest! {
    #[test]
    fn legendre_orthogonality(i in 0usize..40, j in 0usize..40) {
        let rule = gauss_legendre(45).unwrap();
        let got = legendre_inner(&rule, |x| legendre_eval(i, x) * legendre_eval(j, x));
        let want = if i == j { legendre_norm(i) } else { 0.0 };
        prop_assert!((got - want).abs() < 1e-12, "<P{i}, P{j}> = {got}");
    }

    #[test]
    fn hermite_orthogonality(i in 0usize..25, j in 0usize..25) {
        let rule = gauss_hermite(30).unwrap();
        let norm = hermite_norm(i).unwrap();
        let got = rule.integrate(|x| hermite_eval(i, x) * hermite_eval(j, x));
        let want = if i == j { norm } else { 0.0 };
        let scale = norm.max(hermite_norm(j).unwrap()).sqrt() * norm.min(hermite_norm(j).unwrap()).sqrt();
        prop_assert!((got - want).abs() <= 1e-12 * scale.max(1.0), "<H{i}, H{j}> = {got}");
    }

    #[test]
    fn triple_product_matches_quadrature(l in 0usize..=15, lp in 0usize..=15) {
        let rule = gauss_legendre(20).unwrap();
        let q = rule.integrate(|x| x * legendre_eval(l, x) * legendre_eval(lp, x));
        prop_assert!((xi_triple_product(l, lp) - q).abs() < 1e-12);
    }

    #[test]
    fn derivative_products_are_n_n_plus_1(a in 0usize..=6, b in 0usize..=6, odd in any::<bool>()) {
        // both degrees share a parity
        let (m, n) = (2 * a + odd as usize, 2 * b + odd as usize);
        let k = m.min(n) as f64;
        prop_assert!((legendre_deriv_product_integral(m, n) - k * (k + 1.0)).abs() < 1e-10);

        let rule = gauss_legendre(16).unwrap();
        let d = |deg: usize, x: f64| {
            // P_n' = n (x P_n - P_{n-1}) / (x^2 - 1) is singular at the ends;
            // the Gauss nodes are interior
            if deg == 0 { 0.0 } else { deg as f64 * (x * legendre_eval(deg, x) - legendre_eval(deg - 1, x)) / (x * x - 1.0) }
        };
        let q = rule.integrate(|x| d(m, x) * d(n, x));
        prop_assert!((q - k * (k + 1.0)).abs() < 1e-10 * (1.0 + k * k));
    }

    #[test]
    fn mixed_parity_derivative_products_vanish(a in 0usize..=6, b in 0usize..=5) {
        prop_assert_eq!(legendre_deriv_product_integral(2 * a, 2 * b + 1), 0.0);
    }

    #[test]
    fn gauss_rule_exact_to_degree(n in 1usize..30, k in 0usize..59) {
        prop_assume!(k < 2 * n);
        let rule = gauss_legendre(n).unwrap();
        let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
        prop_assert!((rule.integrate(|x| x.powi(k as i32)) - exact).abs() < 1e-13);
    }
}

#[test]
fn mapped_rule_weights_sum_to_length() {
    let rule = gauss_legendre(12).unwrap();
    let (nodes, weights) = rule.mapped_to(0.95, 1.05);
    assert!((weights.iter().sum::<f64>() - 0.1).abs() < 1e-15);
    assert!(nodes.iter().all(|&x| (0.95..=1.05).contains(&x)));
}

#[test]
fn hermite_overflow_is_reported() {
    assert!(hermite_norm(HERMITE_MAX_DEGREE + 1).is_err());
}
