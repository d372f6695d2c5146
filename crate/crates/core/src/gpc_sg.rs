//! Stochastic Galerkin systems for kink scattering with an uncertain kink
//! velocity (Legendre or Hermite chaos) or an uncertain impurity amplitude
//! (Legendre chaos).
//!
//! The nonlinearity is projected by Gauss quadrature in the random variable
//! at every step. Since each sample ends near `0` (pass) or `2 pi`
//! (trapped) at `x = L`, the chaos mean there is `2 pi` times the trapped
//! probability, which inverts to the critical parameter.

use libm::erfc;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::estimate::CriticalEstimate;
use crate::orthopoly::{
    gauss_hermite, gauss_legendre, hermite_norm, legendre_norm, PolynomialKind, QuadratureRule,
};
use crate::sinegordon::{kink_profile, SgConfig, SgGeometry, BLOWUP_THRESHOLD};

pub const DEFAULT_PROJECTION_POINTS: usize = 30;

/// Relative tolerance of the untruncated-normal orthogonality shortcut.
pub const HERMITE_APPROX_TOL: f64 = 1e-4;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChaosBasis {
    Legendre,
    Hermite,
}

/// Distribution of the kink velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VelocityLaw {
    Uniform {
        va: f64,
        vb: f64,
    },
    TruncatedNormal {
        mu: f64,
        sigma: f64,
        alpha: f64,
        beta: f64,
    },
}

impl VelocityLaw {
    pub fn basis(&self) -> ChaosBasis {
        match self {
            VelocityLaw::Uniform { .. } => ChaosBasis::Legendre,
            VelocityLaw::TruncatedNormal { .. } => ChaosBasis::Hermite,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            VelocityLaw::Uniform { va, vb } => {
                if !(va > 0.0 && va <= vb && vb < 1.0) {
                    return Err(Error::invalid(
                        "Va/Vb",
                        format!("need 0 < Va <= Vb < 1, got [{va}, {vb}]"),
                    ));
                }
            }
            VelocityLaw::TruncatedNormal {
                mu,
                sigma,
                alpha,
                beta,
            } => {
                if !(sigma > 0.0) {
                    return Err(Error::invalid("sigma", "must be positive"));
                }
                if !(alpha > 0.0 && alpha < beta && beta < 1.0) {
                    return Err(Error::invalid("alpha/beta", "need 0 < alpha < beta < 1"));
                }
                if !(mu.abs() < 1.0) {
                    return Err(Error::invalid("mu", "need |mu| < 1"));
                }
            }
        }
        Ok(())
    }

    /// Velocity at a node of the chaos variable.
    pub fn velocity(&self, z: f64) -> f64 {
        match *self {
            VelocityLaw::Uniform { va, vb } => 0.5 * (vb - va) * z + 0.5 * (va + vb),
            VelocityLaw::TruncatedNormal { mu, sigma, .. } => mu + sigma * z,
        }
    }
}

/// Chaos truncation and numerical settings shared by all three systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosSettings {
    /// Highest retained mode.
    pub n_order: usize,
    /// Projection quadrature size, at least `n_order + 1`.
    pub n_quad: usize,
}

impl Default for ChaosSettings {
    fn default() -> Self {
        ChaosSettings {
            n_order: 14,
            n_quad: DEFAULT_PROJECTION_POINTS,
        }
    }
}

impl ChaosSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_quad < self.n_order + 1 {
            return Err(Error::invalid(
                "n_quad",
                format!(
                    "projection needs at least N + 1 = {} points",
                    self.n_order + 1
                ),
            ));
        }
        Ok(())
    }
}

/// Result of a chaos evolution.
#[derive(Debug, Clone)]
pub struct ChaosRun {
    /// Modal fields at the final time, column `l` is mode `l`.
    pub modes: DMatrix<f64>,
    pub nodes: DVector<f64>,
    pub mean: DVector<f64>,
    pub std: DVector<f64>,
    /// `(t, mean u(L, t))` samples.
    pub mean_right: Vec<(f64, f64)>,
    pub dt: f64,
    pub warnings: Vec<String>,
}

impl ChaosRun {
    /// Mean at `x = L` at the final time.
    pub fn terminal_mean(&self) -> f64 {
        self.mean[self.mean.len() - 1]
    }

    /// Modal values at `x = L`.
    pub fn right_modes(&self) -> Vec<f64> {
        let last = self.modes.nrows() - 1;
        self.modes.row(last).iter().copied().collect()
    }
}

/// `phi_l = sum_q w_q sin(sum_k u_k p_k(z_q)) p_l(z_q)`, and with the flag
/// also `psi_l` carrying an extra `z_q`. Unnormalized, as integrals.
pub fn project_sin(
    coeffs: &[f64],
    rule: &QuadratureRule,
    with_xi_weight: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let modes = coeffs.len();
    if rule.len() < modes {
        return Err(Error::invalid(
            "n_quad",
            "projection rule smaller than N + 1",
        ));
    }
    let v = rule.vandermonde(modes.saturating_sub(1));
    let mut phi = vec![0.0; modes];
    let mut psi = with_xi_weight.then(|| vec![0.0; modes]);
    for q in 0..rule.len() {
        let u: f64 = (0..modes).map(|k| coeffs[k] * v[(q, k)]).sum();
        let s = rule.weights[q] * u.sin();
        for l in 0..modes {
            phi[l] += s * v[(q, l)];
            if let Some(psi) = psi.as_mut() {
                psi[l] += s * rule.nodes[q] * v[(q, l)];
            }
        }
    }
    Ok((phi, psi))
}

/// Legendre form of [`project_sin`].
pub fn project_sin_legendre(
    coeffs: &[f64],
    rule: &QuadratureRule,
    with_xi_weight: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    if rule.family.kind != PolynomialKind::Legendre {
        return Err(Error::invalid("rule", "expected a Gauss-Legendre rule"));
    }
    project_sin(coeffs, rule, with_xi_weight)
}

/// Quadrature tables for one chaos basis.
struct Projector {
    rule: QuadratureRule,
    /// `p_l(z_q)`, modes x points.
    recon: DMatrix<f64>,
    /// `w_q p_l(z_q) / ||p_l||^2`, points x modes.
    proj: DMatrix<f64>,
    /// As `proj` with an extra `z_q`.
    proj_xi: DMatrix<f64>,
}

impl Projector {
    fn new(basis: ChaosBasis, settings: &ChaosSettings) -> Result<Self> {
        settings.validate()?;
        let rule = match basis {
            ChaosBasis::Legendre => gauss_legendre(settings.n_quad)?,
            ChaosBasis::Hermite => gauss_hermite(settings.n_quad)?,
        };
        let modes = settings.n_order + 1;
        let v = rule.vandermonde(settings.n_order);
        let mut norms = Vec::with_capacity(modes);
        for l in 0..modes {
            norms.push(match basis {
                ChaosBasis::Legendre => legendre_norm(l),
                ChaosBasis::Hermite => hermite_norm(l)?,
            });
        }
        let recon = v.transpose();
        let proj = DMatrix::from_fn(rule.len(), modes, |q, l| {
            rule.weights[q] * v[(q, l)] / norms[l]
        });
        let proj_xi = DMatrix::from_fn(rule.len(), modes, |q, l| proj[(q, l)] * rule.nodes[q]);
        Ok(Projector {
            rule,
            recon,
            proj,
            proj_xi,
        })
    }

    fn modes(&self) -> usize {
        self.recon.nrows()
    }

    /// Expansion coefficients of `f(z)` sampled at the rule nodes.
    fn coefficients<F: Fn(f64) -> f64>(&self, f: F, out: &mut [f64]) {
        out.iter_mut().for_each(|c| *c = 0.0);
        for (q, &z) in self.rule.nodes.iter().enumerate() {
            let fz = f(z);
            for (l, c) in out.iter_mut().enumerate() {
                *c += fz * self.proj[(q, l)];
            }
        }
    }
}

/// How the impurity enters the modal right-hand side.
enum Forcing {
    /// `(eps delta - 1) phi_l`.
    Fixed { epsilon: f64 },
    /// `(B delta - 1) phi_l + h delta psi_l` for `eps = B + h xi`.
    Uncertain { mid: f64, half_width: f64 },
}

/// Left-boundary data per mode as a function of time.
type Trace<'a> = Box<dyn Fn(f64, &mut [f64]) + 'a>;

/// Final modes and the `(t, mean u(L, t))` samples.
type ModalHistory = (DMatrix<f64>, Vec<(f64, f64)>);

fn evolve_modal(
    geo: &SgGeometry,
    proj: &Projector,
    forcing: Forcing,
    u0: DMatrix<f64>,
    ut0: DMatrix<f64>,
    left: Trace<'_>,
    sample_interval: f64,
) -> Result<ModalHistory> {
    let grid = &geo.grid;
    let n = grid.len();
    let m = grid.m;
    let modes = proj.modes();
    let q = proj.rule.len();
    let dt = geo.dt;
    let dt2 = dt * dt;
    let delta = &geo.delta.values;
    let (delta_coef, xi_coef) = match forcing {
        Forcing::Fixed { epsilon } => (epsilon, 0.0),
        Forcing::Uncertain { mid, half_width } => (mid, half_width),
    };
    let phi_coef: Vec<f64> = delta.iter().map(|&d| delta_coef * d - 1.0).collect();
    let psi_coef: Vec<f64> = delta.iter().map(|&d| xi_coef * d).collect();

    let mut prev = u0;
    let mut now = &prev + &ut0 * dt;
    let mut trace = vec![0.0; modes];
    left(dt, &mut trace);
    for l in 0..modes {
        now[(0, l)] = trace[l];
    }
    let mut lap = DMatrix::zeros(n, modes);
    let mut recon = DMatrix::zeros(n, q);
    let mut phi = DMatrix::zeros(n, modes);
    let mut psi = DMatrix::zeros(n, modes);
    let sample_every = geo.sample_every(sample_interval);
    let mut samples = vec![(0.0, prev[(m, 0)])];

    for step in 1..geo.steps {
        lap.gemm(1.0, &grid.diff2, &now, 0.0);
        recon.gemm(1.0, &now, &proj.recon, 0.0);
        recon.apply(|v| *v = v.sin());
        phi.gemm(1.0, &recon, &proj.proj, 0.0);
        if xi_coef != 0.0 {
            psi.gemm(1.0, &recon, &proj.proj_xi, 0.0);
        }
        for l in 0..modes {
            for j in 0..n {
                let mut f = phi_coef[j] * phi[(j, l)];
                if xi_coef != 0.0 {
                    f += psi_coef[j] * psi[(j, l)];
                }
                prev[(j, l)] = 2.0 * now[(j, l)] - prev[(j, l)] + dt2 * (lap[(j, l)] + f);
            }
        }
        let t_next = (step + 1) as f64 * dt;
        left(t_next, &mut trace);
        for l in 0..modes {
            prev[(0, l)] = trace[l];
            prev[(m, l)] = (1.0 - geo.lambda) * now[(m, l)] + geo.lambda * now[(m - 1, l)];
        }
        std::mem::swap(&mut now, &mut prev);
        if (step + 1) % sample_every == 0 {
            let max_abs = now.amax();
            if !(max_abs <= BLOWUP_THRESHOLD) {
                return Err(Error::BlowUp { t: t_next, max_abs });
            }
            samples.push((t_next, now[(m, 0)]));
        }
    }
    Ok((now, samples))
}

/// Kink data projected onto the chaos basis: initial field, initial
/// velocity, and the left-boundary trace.
fn projected_kink(
    geo: &SgGeometry,
    proj: &Projector,
    base: &SgConfig,
    law: VelocityLaw,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = geo.grid.len();
    let modes = proj.modes();
    let mut u0 = DMatrix::zeros(n, modes);
    let mut ut0 = DMatrix::zeros(n, modes);
    let mut buf = vec![0.0; modes];
    for j in 0..n {
        let x = geo.grid.nodes[j];
        proj.coefficients(
            |z| kink_profile(x, 0.0, base.x0, law.velocity(z)).0,
            &mut buf,
        );
        for l in 0..modes {
            u0[(j, l)] = buf[l];
        }
        proj.coefficients(
            |z| kink_profile(x, 0.0, base.x0, law.velocity(z)).1,
            &mut buf,
        );
        for l in 0..modes {
            ut0[(j, l)] = buf[l];
        }
    }
    (u0, ut0)
}

fn finish(
    geo: &SgGeometry,
    modes: DMatrix<f64>,
    mean_right: Vec<(f64, f64)>,
    variance_weight: impl Fn(usize) -> f64,
    warnings: Vec<String>,
) -> ChaosRun {
    let n = modes.nrows();
    let mean = modes.column(0).into_owned();
    let std = DVector::from_fn(n, |j, _| {
        (1..modes.ncols())
            .map(|l| variance_weight(l) * modes[(j, l)].powi(2))
            .sum::<f64>()
            .sqrt()
    });
    ChaosRun {
        modes,
        nodes: geo.grid.nodes.clone(),
        mean,
        std,
        mean_right,
        dt: geo.dt,
        warnings,
    }
}

/// Velocity chaos with the physical settings (epsilon, L, x0, m, dt,
/// t_final, sample interval) taken from `base`; `base.velocity` is unused.
pub fn evolve_gpc_sg_velocity(
    base: &SgConfig,
    law: VelocityLaw,
    settings: &ChaosSettings,
) -> Result<ChaosRun> {
    law.validate()?;
    let probe = SgConfig {
        velocity: law.velocity(0.0),
        ..base.clone()
    };
    probe.validate()?;
    let basis = law.basis();
    let proj = Projector::new(basis, settings)?;
    if proj
        .rule
        .nodes
        .iter()
        .any(|&z| !(law.velocity(z).abs() < 1.0))
    {
        return Err(Error::invalid(
            "sigma",
            "a quadrature velocity reaches |V| >= 1",
        ));
    }
    let geo = SgGeometry::new(base.m, base.half_length, base.dt, base.t_final)?;
    let (u0, ut0) = projected_kink(&geo, &proj, base, law);
    let (x0, half) = (base.x0, base.half_length);
    let left: Trace<'_> = Box::new(|t, out: &mut [f64]| {
        proj.coefficients(|z| kink_profile(-half, t, x0, law.velocity(z)).0, out)
    });
    let (modes, mean_right) = evolve_modal(
        &geo,
        &proj,
        Forcing::Fixed {
            epsilon: base.epsilon,
        },
        u0,
        ut0,
        left,
        base.sample_interval,
    )?;
    let mut warnings = Vec::new();
    let run = match law {
        VelocityLaw::Uniform { .. } => finish(
            &geo,
            modes,
            mean_right,
            |l| 1.0 / (2 * l + 1) as f64,
            warnings,
        ),
        VelocityLaw::TruncatedNormal {
            mu,
            sigma,
            alpha,
            beta,
        } => {
            let mass = normal_cdf((beta - mu) / sigma) - normal_cdf((alpha - mu) / sigma);
            let err = hermite_truncation_error(mu, sigma, alpha, beta, settings.n_order)?;
            if err > HERMITE_APPROX_TOL {
                warnings.push(format!(
                    "truncated-normal orthogonality shortcut off by {err:.3e} (relative) for degrees <= {}",
                    settings.n_order
                ));
            }
            let mut factorial = 1.0;
            let weights: Vec<f64> = (0..=settings.n_order)
                .map(|l| {
                    if l > 0 {
                        factorial *= l as f64;
                    }
                    factorial / mass
                })
                .collect();
            finish(&geo, modes, mean_right, move |l| weights[l], warnings)
        }
    };
    Ok(run)
}

/// Legendre chaos in the velocity, uniform on `[va, vb]`.
pub fn evolve_gpc_sg_legendre_v(
    base: &SgConfig,
    va: f64,
    vb: f64,
    settings: &ChaosSettings,
) -> Result<ChaosRun> {
    evolve_gpc_sg_velocity(base, VelocityLaw::Uniform { va, vb }, settings)
}

/// Hermite chaos in the velocity, normal with truncation to `[alpha, beta]`.
pub fn evolve_gpc_sg_hermite(
    base: &SgConfig,
    mu: f64,
    sigma: f64,
    alpha: f64,
    beta: f64,
    settings: &ChaosSettings,
) -> Result<ChaosRun> {
    evolve_gpc_sg_velocity(
        base,
        VelocityLaw::TruncatedNormal {
            mu,
            sigma,
            alpha,
            beta,
        },
        settings,
    )
}

/// Legendre chaos in the impurity amplitude, uniform on `[eps_a, eps_b]`,
/// at the deterministic kink velocity `base.velocity`.
pub fn evolve_gpc_sg_legendre_eps(
    base: &SgConfig,
    eps_a: f64,
    eps_b: f64,
    settings: &ChaosSettings,
) -> Result<ChaosRun> {
    if !(eps_a > 0.0 && eps_a <= eps_b) {
        return Err(Error::invalid(
            "eps_a/eps_b",
            format!("need 0 < eps_a <= eps_b, got [{eps_a}, {eps_b}]"),
        ));
    }
    base.validate()?;
    let proj = Projector::new(ChaosBasis::Legendre, settings)?;
    let geo = SgGeometry::new(base.m, base.half_length, base.dt, base.t_final)?;
    let n = geo.grid.len();
    let modes = proj.modes();
    let (x0, vel, half) = (base.x0, base.velocity, base.half_length);
    let mut u0 = DMatrix::zeros(n, modes);
    let mut ut0 = DMatrix::zeros(n, modes);
    for j in 0..n {
        let (u, ut) = kink_profile(geo.grid.nodes[j], 0.0, x0, vel);
        u0[(j, 0)] = u;
        ut0[(j, 0)] = ut;
    }
    let left: Trace<'_> = Box::new(move |t, out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[0] = kink_profile(-half, t, x0, vel).0;
    });
    let forcing = Forcing::Uncertain {
        mid: 0.5 * (eps_a + eps_b),
        half_width: 0.5 * (eps_b - eps_a),
    };
    let (modes, mean_right) =
        evolve_modal(&geo, &proj, forcing, u0, ut0, left, base.sample_interval)?;
    Ok(finish(
        &geo,
        modes,
        mean_right,
        |l| 1.0 / (2 * l + 1) as f64,
        Vec::new(),
    ))
}

/// Clamps a mean at `x = L` into `[0, 2 pi]`, reporting whether it moved.
pub fn clamp_mean(u_mean: f64) -> (f64, bool) {
    let c = u_mean.clamp(0.0, TWO_PI);
    (c, c != u_mean)
}

/// `V_c = Va + (Vb - Va) u / (2 pi)`.
pub fn critical_velocity_from_mean(u_mean_at_l: f64, va: f64, vb: f64) -> f64 {
    let (u, _) = clamp_mean(u_mean_at_l);
    va + (vb - va) * (u / TWO_PI)
}

/// `eps_c = eps_b - (eps_b - eps_a) u / (2 pi)`; trapping sits at high
/// amplitude, so the direction is reversed.
pub fn critical_eps_from_mean(u_mean_at_l: f64, eps_a: f64, eps_b: f64) -> f64 {
    let (u, _) = clamp_mean(u_mean_at_l);
    eps_b - (eps_b - eps_a) * (u / TWO_PI)
}

/// Solves `Phi((Vc - mu)/sigma) = r Phi(beta') + (1 - r) Phi(alpha')` with
/// `r = u / (2 pi)`.
pub fn critical_velocity_hermite(
    u_mean_at_l: f64,
    mu: f64,
    sigma: f64,
    alpha: f64,
    beta: f64,
) -> f64 {
    let (u, _) = clamp_mean(u_mean_at_l);
    let r = u / TWO_PI;
    let lo = normal_cdf((alpha - mu) / sigma);
    let hi = normal_cdf((beta - mu) / sigma);
    let target = r * hi + (1.0 - r) * lo;
    let (mut a, mut b) = (alpha, beta);
    if target <= lo {
        return alpha;
    }
    if target >= hi {
        return beta;
    }
    while b - a > 1e-15 * beta.abs().max(1.0) {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if normal_cdf((m - mu) / sigma) < target {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Inverse of [`normal_cdf`] by bisection, to `1e-12` in `z`.
pub fn normal_cdf_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", "probability must lie in (0, 1)"));
    }
    let (mut a, mut b) = (-40.0_f64, 40.0_f64);
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if normal_cdf(m) < p {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Largest relative deviation, over degrees `0..=n`, of the truncated
/// integral `int_alpha^beta w H_l^2 dV` from its untruncated value
/// `sigma sqrt(2 pi) l!`.
pub fn hermite_truncation_error(
    mu: f64,
    sigma: f64,
    alpha: f64,
    beta: f64,
    n: usize,
) -> Result<f64> {
    // the weight is below 1e-300 outside |z| < 38
    let za = ((alpha - mu) / sigma).max(-38.0);
    let zb = ((beta - mu) / sigma).min(38.0);
    let rule = gauss_legendre(n + 300)?;
    let (nodes, weights) = rule.mapped_to(za, zb);
    let mut worst: f64 = 0.0;
    for l in 0..=n {
        let full = hermite_norm(l)?;
        let part: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&z, &w)| w * (-0.5 * z * z).exp() * crate::orthopoly::hermite_eval(l, z).powi(2))
            .sum();
        worst = worst.max((1.0 - part / full).abs());
    }
    Ok(worst)
}

/// Critical velocity from a velocity-chaos run.
pub fn velocity_estimate(run: &ChaosRun, law: VelocityLaw) -> CriticalEstimate {
    let u = run.terminal_mean();
    let (value, bracket, chaos) = match law {
        VelocityLaw::Uniform { va, vb } => {
            (critical_velocity_from_mean(u, va, vb), (va, vb), "Legendre")
        }
        VelocityLaw::TruncatedNormal {
            mu,
            sigma,
            alpha,
            beta,
        } => (
            critical_velocity_hermite(u, mu, sigma, alpha, beta),
            (alpha, beta),
            "Hermite",
        ),
    };
    let mut est = CriticalEstimate::new(format!("gpc-mean-inversion/{chaos}"), value, bracket)
        .with_diagnostic("u_mean_at_L", u)
        .with_diagnostic("std_at_L", run.std[run.std.len() - 1]);
    if clamp_mean(u).1 {
        est = est.with_diagnostic("clamped", 1.0);
    }
    est
}

/// Critical amplitude from an amplitude-chaos run.
pub fn eps_estimate(run: &ChaosRun, eps_a: f64, eps_b: f64) -> CriticalEstimate {
    let u = run.terminal_mean();
    CriticalEstimate::new(
        "gpc-mean-inversion/Legendre-eps",
        critical_eps_from_mean(u, eps_a, eps_b),
        (eps_a, eps_b),
    )
    .with_diagnostic("u_mean_at_L", u)
    .with_diagnostic("std_at_L", run.std[run.std.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn projection_examples() {
        let rule = gauss_legendre(30).unwrap();
        let (phi, _) = project_sin_legendre(&[0.0; 5], &rule, false).unwrap();
        assert!(phi.iter().all(|&p| p == 0.0));
        let (phi, _) = project_sin_legendre(&[PI / 2.0, 0.0, 0.0], &rule, false).unwrap();
        assert_abs_diff_eq!(phi[0], 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(phi[1], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(phi[2], 0.0, epsilon = 1e-13);
        let (phi, psi) = project_sin_legendre(&[0.0, 1.0], &rule, true).unwrap();
        let exact = 2.0 * (1.0_f64.sin() - 1.0_f64.cos());
        assert_abs_diff_eq!(phi[1], exact, epsilon = 1e-12);
        // psi_0 = int xi sin(xi) is the same integral
        assert_abs_diff_eq!(psi.unwrap()[0], exact, epsilon = 1e-12);
        assert!(project_sin_legendre(&[0.0; 5], &gauss_legendre(4).unwrap(), false).is_err());
    }

    #[test]
    fn inversion_limits() {
        assert_eq!(critical_velocity_from_mean(0.0, 0.1, 0.2), 0.1);
        assert_abs_diff_eq!(
            critical_velocity_from_mean(TWO_PI, 0.1, 0.2),
            0.2,
            epsilon = 1e-15
        );
        assert_eq!(critical_velocity_from_mean(-0.5, 0.1, 0.2), 0.1);
        assert_abs_diff_eq!(
            critical_velocity_from_mean(2.011976945534794, 0.1215, 0.121757),
            0.1215822955316,
            epsilon = 1e-12
        );
        assert_eq!(critical_eps_from_mean(0.0, 0.495, 0.4975), 0.4975);
        assert_abs_diff_eq!(
            critical_eps_from_mean(TWO_PI, 0.495, 0.4975),
            0.495,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            critical_velocity_hermite(TWO_PI, 0.12, 0.01, 0.11, 0.13),
            0.13,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            critical_velocity_hermite(0.0, 0.12, 0.01, 0.11, 0.13),
            0.11,
            epsilon = 1e-14
        );
    }

    #[test]
    fn hermite_inversion_hand_check() {
        let vc = critical_velocity_hermite(3.24341621, 0.12, 0.01, 0.11, 0.13);
        let r = 3.24341621 / TWO_PI;
        let lhs = normal_cdf((vc - 0.12) / 0.01);
        let rhs = r * normal_cdf(1.0) + (1.0 - r) * normal_cdf(-1.0);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
        assert_abs_diff_eq!(vc, 0.1203, epsilon = 1e-3);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for p in [0.01, 0.5, 0.99] {
            assert_abs_diff_eq!(
                normal_cdf(normal_cdf_inverse(p).unwrap()),
                p,
                epsilon = 1e-10
            );
        }
        assert!(normal_cdf_inverse(1.0).is_err());
    }

    #[test]
    fn truncation_error_detects_wide_sigma() {
        assert!(hermite_truncation_error(0.12, 0.01, 0.11, 0.13, 7).unwrap() > 0.1);
        assert!(hermite_truncation_error(0.5, 0.01, 0.3, 0.7, 3).unwrap() < 1e-10);
    }

    #[test]
    fn settings_and_laws_validate() {
        assert!(ChaosSettings {
            n_order: 30,
            n_quad: 30
        }
        .validate()
        .is_err());
        assert!(VelocityLaw::Uniform { va: 0.2, vb: 0.1 }
            .validate()
            .is_err());
        assert!(VelocityLaw::Uniform { va: 0.1, vb: 0.1 }.validate().is_ok());
        let bad = VelocityLaw::TruncatedNormal {
            mu: 0.1,
            sigma: 0.0,
            alpha: 0.05,
            beta: 0.2,
        };
        assert!(bad.validate().is_err());
    }
}
