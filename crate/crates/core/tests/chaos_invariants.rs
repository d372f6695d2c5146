use critgpc::gpc_kg::*;
use critgpc::gpc_sg::*;
use critgpc::kleingordon::{evolve_kg, KgConfig, KgDiscretization};
use critgpc::sinegordon::{evolve_sg, SgConfig};
use proptest::prelude::*;
use std::f64::consts::{PI, SQRT_2};

fn short_sg() -> SgConfig {
    SgConfig {
        velocity: 0.3,
        epsilon: 0.5,
        m: 31,
        t_final: 12.0,
        ..Default::default()
    }
}

fn small_chaos() -> ChaosSettings {
    ChaosSettings {
        n_order: 4,
        n_quad: 8,
    }
}

#[test]
fn kg_degenerate_interval_decouples() {
    let disc = KgDiscretization::aligned(31, 10.0).unwrap();
    let system = GpcKgSystem::new(6, 1.003, 1.003, disc.clone()).unwrap();
    let states = assemble_and_evolve(&system, &[10.0, 20.0]).unwrap();
    let det = evolve_kg(
        &KgConfig {
            eta: 1.003,
            m: 31,
            dt: Some(disc.dt),
            t_final: 20.0,
            ..Default::default()
        },
        &disc.grid.sample(|x| 1.0 + x),
    )
    .unwrap();
    let last = &states[1];
    for l in 1..=6 {
        assert!(last.mode(l).amax() < 1e-8, "mode {l}");
    }
    assert!((gpc_mean(last) - &det.final_field).amax() < 1e-8);
}

#[test]
fn sg_velocity_degenerate_interval_decouples() {
    let base = short_sg();
    let run = evolve_gpc_sg_legendre_v(&base, 0.3, 0.3, &small_chaos()).unwrap();
    let det = evolve_sg(&base).unwrap();
    assert!((&run.mean - &det.final_field).amax() < 1e-8);
    for l in 1..run.modes.ncols() {
        assert!(run.modes.column(l).amax() < 1e-8, "mode {l}");
    }
    assert!(run.std.amax() < 1e-8);
}

#[test]
fn sg_amplitude_degenerate_interval_decouples() {
    let base = short_sg();
    let run = evolve_gpc_sg_legendre_eps(&base, 0.5, 0.5, &small_chaos()).unwrap();
    let det = evolve_sg(&base).unwrap();
    assert!((&run.mean - &det.final_field).amax() < 1e-8);
    for l in 1..run.modes.ncols() {
        assert!(run.modes.column(l).amax() < 1e-8, "mode {l}");
    }
}

#[test]
fn hermite_degenerate_spread_matches_deterministic() {
    // sigma -> 0 collapses the law onto mu
    let base = short_sg();
    let run = evolve_gpc_sg_hermite(&base, 0.3, 1e-12, 0.29, 0.31, &small_chaos()).unwrap();
    let det = evolve_sg(&base).unwrap();
    assert!((&run.mean - &det.final_field).amax() < 1e-8);
}

#[test]
fn normal_cdf_at_one_matches_series() {
    // erf by its Maclaurin series, independent of the library routine
    let x = 1.0 / SQRT_2;
    let (mut term, mut erf) = (x, 0.0);
    for n in 0..40 {
        erf += term / (2 * n + 1) as f64;
        term *= -x * x / (n + 1) as f64;
    }
    erf *= 2.0 / PI.sqrt();
    let series = 0.5 * (1.0 + erf);
    assert!(
        (normal_cdf(1.0) - series).abs() < 1e-15,
        "{} vs {series}",
        normal_cdf(1.0)
    );
    assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
}

#[test]
fn one_sigma_truncation_is_flagged() {
    // [alpha, beta] = mu -+ sigma cuts the normal law at one deviation
    let err = hermite_truncation_error(0.12, 0.01, 0.11, 0.13, 14).unwrap();
    assert!(err > HERMITE_APPROX_TOL);
    let wide = hermite_truncation_error(0.12, 0.001, 0.11, 0.13, 14).unwrap();
    assert!(wide < HERMITE_APPROX_TOL);
}

proptest! {
    #[test]
    fn legendre_velocity_round_trip(va in 0.05f64..0.5, w in 1e-4f64..0.2, r in 0.0f64..1.0) {
        let vb = va + w;
        let vc = va + r * w;
        let u = 2.0 * PI * (vc - va) / (vb - va);
        prop_assert!((critical_velocity_from_mean(u, va, vb) - vc).abs() < 1e-14);
    }

    #[test]
    fn legendre_eps_round_trip(ea in 0.1f64..1.0, w in 1e-4f64..0.1, r in 0.0f64..1.0) {
        let eb = ea + w;
        let ec = eb - r * w;
        let u = 2.0 * PI * (eb - ec) / (eb - ea);
        prop_assert!((critical_eps_from_mean(u, ea, eb) - ec).abs() < 1e-14);
    }

    #[test]
    fn hermite_round_trip(mu in 0.05f64..0.5, sigma in 1e-3f64..0.05, r in 0.05f64..0.95) {
        let (alpha, beta) = (mu - sigma, mu + sigma);
        let vc = alpha + r * (beta - alpha);
        let cdf = |v: f64| normal_cdf((v - mu) / sigma);
        let u = 2.0 * PI * (cdf(vc) - cdf(alpha)) / (cdf(beta) - cdf(alpha));
        prop_assert!((critical_velocity_hermite(u, mu, sigma, alpha, beta) - vc).abs() < 1e-14);
    }

    #[test]
    fn sin_projection_of_constant(c in -3.0f64..3.0) {
        let rule = critgpc::orthopoly::gauss_legendre(10).unwrap();
        let (phi, psi) = project_sin_legendre(&[c, 0.0, 0.0], &rule, true).unwrap();
        prop_assert!((phi[0] - 2.0 * c.sin()).abs() < 1e-14);
        prop_assert!(phi[1].abs() < 1e-14 && phi[2].abs() < 1e-14);
        // xi * L_1 integrates to 2/3
        prop_assert!((psi.unwrap()[1] - 2.0 / 3.0 * c.sin()).abs() < 1e-14);
    }

    #[test]
    fn coupling_is_the_xi_expansion(l in 1usize..60) {
        let disc = KgDiscretization::new(7, None).unwrap();
        let (a, b) = (0.95, 1.05);
        let s = GpcKgSystem::new(60, a, b, disc).unwrap();
        let lf = l as f64;
        prop_assert!((s.coupling_a(l) - 0.5 * (b - a) * lf / (2.0 * lf - 1.0)).abs() < 1e-15);
        prop_assert!((s.coupling_c(l) - 0.5 * (b - a) * (lf + 1.0) / (2.0 * lf + 3.0)).abs() < 1e-15);
        prop_assert!((s.eta_of(s.xi_of(1.01)) - 1.01).abs() < 1e-14);
    }
}
