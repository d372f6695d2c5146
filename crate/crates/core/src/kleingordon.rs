//! Klein-Gordon equation with a self-interacting point potential,
//! `u_tt = u_xx + eta delta(x) u` on `[-1, 1]`, `u(-1) = 0`,
//! `u_t + u_x = 0` at `x = 1`.
//!
//! Below the critical strength the energy leaks out through the right end,
//! above it the solution grows without bound; at the critical value the
//! solution settles on a piecewise-linear steady state.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::estimate::CriticalEstimate;
use crate::spectral1d::{build_grid, consistent_delta, DeltaApprox, SpectralGrid};

/// Runs with `max |u|` above this abort with [`Error::BlowUp`].
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgConfig {
    pub eta: f64,
    /// Location of the point potential; the discrete solver needs 0.
    pub alpha: f64,
    pub m: usize,
    pub dt: Option<f64>,
    pub t_final: f64,
    /// Adds the `-u` mass term of the linearized sine-Gordon equation.
    pub linearized_sg: bool,
    /// Spacing of recorded energy samples.
    pub record_interval: f64,
}

impl Default for KgConfig {
    fn default() -> Self {
        KgConfig {
            eta: 1.0,
            alpha: 0.0,
            m: 63,
            dt: None,
            t_final: 100.0,
            linearized_sg: false,
            record_interval: 1.0,
        }
    }
}

impl KgConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() {
            return Err(Error::invalid("eta", "must be finite"));
        }
        if self.alpha != 0.0 {
            return Err(Error::invalid(
                "alpha",
                "the discrete solver places the potential at x = 0",
            ));
        }
        if self.m.is_multiple_of(2) || self.m < 5 {
            return Err(Error::invalid("m", "grid order must be odd and at least 5"));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::invalid("t_final", "must be positive"));
        }
        if !(self.record_interval > 0.0) {
            return Err(Error::invalid("record_interval", "must be positive"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::invalid("dt", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub energy_rate: Vec<f64>,
}

impl EnergySeries {
    fn from_samples(times: Vec<f64>, energy: Vec<f64>) -> Self {
        let energy_rate = finite_difference(&times, &energy);
        EnergySeries {
            times,
            energy,
            energy_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Energy at the recorded time closest to `t`.
    pub fn energy_near(&self, t: f64) -> Option<f64> {
        nearest_index(&self.times, t).map(|i| self.energy[i])
    }
}

fn nearest_index(times: &[f64], t: f64) -> Option<usize> {
    times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map(|(i, _)| i)
}

/// Centered differences inside, one-sided at the ends.
fn finite_difference(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (y[b] - y[a]) / (t[b] - t[a])
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct KgRun {
    pub energy: EnergySeries,
    /// `u(1, t)` at the energy sample times.
    pub u_right: Vec<f64>,
    pub final_field: DVector<f64>,
    pub dt: f64,
}

impl KgRun {
    /// Rows `t, E, Edot, u_at_x1`.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        let e = &self.energy;
        (0..e.len()).map(move |i| [e.times[i], e.energy[i], e.energy_rate[i], self.u_right[i]])
    }

    pub fn u_right_near(&self, t: f64) -> Option<f64> {
        nearest_index(&self.energy.times, t).map(|i| self.u_right[i])
    }
}

/// Grid, delta and step shared by the deterministic and chaos solvers.
#[derive(Debug, Clone)]
pub struct KgDiscretization {
    pub grid: SpectralGrid,
    pub delta: DeltaApprox,
    pub dt: f64,
    /// `dt / (x_m - x_{m-1})`.
    pub lambda: f64,
}

impl KgDiscretization {
    pub fn new(m: usize, dt: Option<f64>) -> Result<Self> {
        let grid = build_grid(m)?;
        let delta = consistent_delta(&grid)?;
        let dt = dt.unwrap_or_else(|| grid.default_dt());
        let lambda = dt / grid.right_spacing();
        if !(lambda <= 1.0) {
            return Err(Error::invalid(
                "dt",
                "outflow closure needs dt <= x_m - x_{m-1}",
            ));
        }
        Ok(KgDiscretization {
            grid,
            delta,
            dt,
            lambda,
        })
    }

    /// Shrinks the default step so that `interval` is a whole number of steps.
    pub fn aligned(m: usize, interval: f64) -> Result<Self> {
        let grid = build_grid(m)?;
        let steps = (interval / grid.default_dt()).ceil().max(1.0);
        Self::new(m, Some(interval / steps))
    }

    pub fn steps_for(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }

    /// Discrete energy with `u_t` from the two neighbouring levels.
    pub fn energy(&self, prev: &DVector<f64>, now: &DVector<f64>, next: &DVector<f64>) -> f64 {
        let ux = &self.grid.diff * now;
        let inv = 0.5 / self.dt;
        let w = &self.grid.quad_weights;
        let mut e = 0.0;
        for j in 0..now.len() {
            let ut = (next[j] - prev[j]) * inv;
            e += w[j] * (ut * ut + ux[j] * ux[j]);
        }
        0.5 * e
    }

    /// Applies the two boundary closures to a freshly computed level.
    #[inline]
    pub(crate) fn close(&self, now: &[f64], next: &mut [f64]) {
        let m = next.len() - 1;
        next[0] = 0.0;
        next[m] = (1.0 - self.lambda) * now[m] + self.lambda * now[m - 1];
    }

    /// One-step matrix acting on `[U^n; (U^n - U^{n-1}) / dt]`. The
    /// velocity form keeps powers of the matrix bounded, so products stay
    /// accurate where the two-level form loses digits to cancellation.
    pub fn step_matrix(&self, eta: f64, linearized_sg: bool) -> DMatrix<f64> {
        let n = self.grid.len();
        let m = n - 1;
        let dt = self.dt;
        let mass = if linearized_sg { 1.0 } else { 0.0 };
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        for i in 1..m {
            for j in 0..n {
                let l = self.grid.diff2[(i, j)];
                s[(n + i, j)] = dt * l;
                s[(i, j)] = dt * dt * l;
            }
            let c = eta * self.delta.values[i] - mass;
            s[(n + i, i)] += dt * c;
            s[(i, i)] += 1.0 + dt * dt * c;
            s[(n + i, n + i)] = 1.0;
            s[(i, n + i)] = dt;
        }
        let h = self.grid.right_spacing();
        s[(m, m)] = 1.0 - self.lambda;
        s[(m, m - 1)] = self.lambda;
        s[(n + m, m)] = -1.0 / h;
        s[(n + m, m - 1)] = 1.0 / h;
        s
    }
}

/// Leapfrog evolution from `initial` with zero initial velocity.
pub fn evolve_kg(config: &KgConfig, initial: &DVector<f64>) -> Result<KgRun> {
    config.validate()?;
    let disc = KgDiscretization::new(config.m, config.dt)?;
    let n = disc.grid.len();
    if initial.len() != n {
        return Err(Error::invalid(
            "initial",
            format!("expected {} node values, got {}", n, initial.len()),
        ));
    }
    if initial[0].abs() > 1e-12 {
        return Err(Error::invalid("initial", "must vanish at x = -1"));
    }
    let dt = disc.dt;
    let dt2 = dt * dt;
    let mass = if config.linearized_sg { 1.0 } else { 0.0 };
    let coef: Vec<f64> = disc
        .delta
        .values
        .iter()
        .map(|&d| config.eta * d - mass)
        .collect();
    let steps = disc.steps_for(config.t_final).max(1);
    let record_every = ((config.record_interval / dt).round() as usize).max(1);

    // u^{-1} = u^1 = u^0 makes the centered velocity vanish at t = 0
    let mut prev = initial.clone();
    let mut now = initial.clone();
    let mut next = DVector::zeros(n);
    let mut rhs = DVector::zeros(n);
    let mut times = Vec::new();
    let mut energy = Vec::new();
    let mut u_right = Vec::new();

    for level in 0..=steps {
        if level == 0 {
            next.copy_from(&now);
        } else {
            rhs.gemv(1.0, &disc.grid.diff2, &now, 0.0);
            for j in 0..n {
                next[j] = 2.0 * now[j] - prev[j] + dt2 * (rhs[j] + coef[j] * now[j]);
            }
            disc.close(now.as_slice(), next.as_mut_slice());
        }
        if level % record_every == 0 || level == steps {
            let t = level as f64 * dt;
            let max_abs = now.amax();
            if !(max_abs <= BLOWUP_THRESHOLD) {
                return Err(Error::BlowUp { t, max_abs });
            }
            let back = if level == 0 { &next } else { &prev };
            times.push(t);
            energy.push(disc.energy(back, &now, &next));
            u_right.push(now[n - 1]);
        }
        if level == steps {
            break;
        }
        std::mem::swap(&mut prev, &mut now);
        std::mem::swap(&mut now, &mut next);
    }
    Ok(KgRun {
        energy: EnergySeries::from_samples(times, energy),
        u_right,
        final_field: now,
        dt,
    })
}

/// Repeated application of the one-step matrix by binary powering, so a
/// long run costs `O(log n)` dense products instead of `n` steps. Used for
/// parameter sweeps where only a few time levels are needed.
pub struct KgPropagator {
    step: DMatrix<f64>,
    n: usize,
}

impl KgPropagator {
    pub fn new(disc: &KgDiscretization, eta: f64, linearized_sg: bool) -> Self {
        KgPropagator {
            step: disc.step_matrix(eta, linearized_sg),
            n: disc.grid.len(),
        }
    }

    /// Matrix advancing a state by `steps` levels.
    pub fn power(&self, mut steps: usize) -> DMatrix<f64> {
        let dim = 2 * self.n;
        let mut result = DMatrix::identity(dim, dim);
        let mut base = self.step.clone();
        let mut first = true;
        while steps > 0 {
            if steps & 1 == 1 {
                result = if first { base.clone() } else { &base * &result };
                first = false;
            }
            steps >>= 1;
            if steps > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Fields at each of `levels` (increasing) starting from `initial` at
    /// rest; the state at level 1 equals the initial field.
    pub fn fields_at(&self, initial: &DVector<f64>, levels: &[usize]) -> Vec<DVector<f64>> {
        let n = self.n;
        let mut state = DVector::zeros(2 * n);
        state.rows_mut(0, n).copy_from(initial);
        let mut at = 1usize;
        let mut cache: Option<(usize, DMatrix<f64>)> = None;
        let mut out = Vec::with_capacity(levels.len());
        for &level in levels {
            if level > at {
                let gap = level - at;
                let reuse = matches!(&cache, Some((g, _)) if *g == gap);
                if !reuse {
                    cache = Some((gap, self.power(gap)));
                }
                state = &cache.as_ref().unwrap().1 * &state;
                at = level;
            }
            out.push(state.rows(0, n).into_owned());
        }
        out
    }
}

/// Critical steady state for a point potential at `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSteadyState {
    pub alpha: f64,
    pub c: f64,
    pub critical_eta: f64,
}

impl AnalyticSteadyState {
    /// `C (x + 1)` left of the potential, `C (1 + alpha)` right of it.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.alpha {
            self.c * (x + 1.0)
        } else {
            self.c * (1.0 + self.alpha)
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x < self.alpha {
            self.c
        } else {
            0.0
        }
    }
}

pub fn steady_state_analytic(alpha: f64, c: f64) -> Result<AnalyticSteadyState> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", "potential must lie inside (-1, 1)"));
    }
    Ok(AnalyticSteadyState {
        alpha,
        c,
        critical_eta: 1.0 / (1.0 + alpha),
    })
}

/// Closed-form solution of `-u'' + u = eta delta(x)` with `u_x(1) = 0` and
/// `u(-1) = 0` (homogeneous) or `u(-1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletNeumannSteady {
    pub eta: f64,
    pub inhomogeneous: bool,
}

impl DirichletNeumannSteady {
    fn coefficients(&self) -> (f64, f64) {
        let (e2, e4) = (E * E, E.powi(4));
        let eta = self.eta;
        if self.inhomogeneous {
            let a = 0.5 * eta * e2 * (e2 + 1.0) / (e4 + 1.0) + E / (e4 + 1.0);
            let b = (E.powi(5) / (e4 + 1.0) - 0.5 * eta * e2 * (e2 + 1.0) / (e4 + 1.0)) / e2;
            (a, b)
        } else {
            // eta e (e^2+1)/(e^4+1) sinh(x+1) = a e^x + b e^-x
            let k = eta * E * (e2 + 1.0) / (e4 + 1.0);
            (0.5 * k * E, -0.5 * k / E)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (a, b) = self.coefficients();
        let kink = if x > 0.0 { self.eta * x.sinh() } else { 0.0 };
        a * x.exp() + b * (-x).exp() - kink
    }

    /// One-sided derivative; at `x = 0` the right limit.
    pub fn derivative(&self, x: f64) -> f64 {
        let (a, b) = self.coefficients();
        let kink = if x >= 0.0 { self.eta * x.cosh() } else { 0.0 };
        a * x.exp() - b * (-x).exp() - kink
    }

    pub fn derivative_left(&self, x: f64) -> f64 {
        let (a, b) = self.coefficients();
        let kink = if x > 0.0 { self.eta * x.cosh() } else { 0.0 };
        a * x.exp() - b * (-x).exp() - kink
    }
}

pub fn steady_state_dirichlet_neumann(eta: f64, inhomogeneous_bc: bool) -> DirichletNeumannSteady {
    DirichletNeumannSteady {
        eta,
        inhomogeneous: inhomogeneous_bc,
    }
}

/// First-order energy and energy rate near the critical value (initial
/// amplitude normalized to one).
pub fn perturbation_energy(t: f64, eta: f64) -> (f64, f64) {
    let d = eta - 1.0;
    let s = eta + t * d;
    let e = 0.5 * s * s + 7.0 / 6.0 * d * d + (1.0 + t) * d * d * s;
    let edot = eta * d * s + d.powi(3) * (1.0 + t);
    (e, edot)
}

/// Steady state of `u_tt = u_xx - u + eta delta(x) u` at the critical value
/// `2 coth 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedSgSteady {
    pub critical_eta: f64,
    pub c: f64,
}

impl LinearizedSgSteady {
    pub fn eval(&self, x: f64) -> f64 {
        let e2 = E * E;
        if x <= 0.0 {
            self.c * (1.0 + e2) * ((-x).exp() - (x + 2.0).exp())
        } else {
            self.c * (1.0 - e2) * (x.exp() + (2.0 - x).exp())
        }
    }

    pub fn derivative_left(&self, x: f64) -> f64 {
        let e2 = E * E;
        -self.c * (1.0 + e2) * ((-x).exp() + (x + 2.0).exp())
    }

    pub fn derivative_right(&self, x: f64) -> f64 {
        let e2 = E * E;
        self.c * (1.0 - e2) * (x.exp() - (2.0 - x).exp())
    }
}

pub fn linearized_sg_critical() -> LinearizedSgSteady {
    LinearizedSgSteady {
        critical_eta: 2.0 / 2.0_f64.tanh(),
        c: 1.0,
    }
}

/// Discrete steady state at the critical strength.
#[derive(Debug, Clone)]
pub struct DiscreteSteadyState {
    pub eta: f64,
    /// Normalized to `u(1) = 1`.
    pub profile: DVector<f64>,
    pub residual: f64,
    pub nodes: DVector<f64>,
}

/// Solves `-D^2 U (+ U) = eta Delta U` with `U_0 = 0` and the steady form
/// `U_m = U_{m-1}` of the outflow closure, for the eigenvalue nearest
/// `shift`, by shifted inverse iteration with Rayleigh-style shift updates.
pub fn discrete_steady_state(
    m: usize,
    linearized_sg: bool,
    shift: f64,
) -> Result<DiscreteSteadyState> {
    if m.is_multiple_of(2) {
        return Err(Error::invalid("m", "grid order must be odd"));
    }
    let disc = KgDiscretization::new(m, None)?;
    let n = disc.grid.len();
    let mut a = -disc.grid.diff2.clone();
    let mut b = DMatrix::zeros(n, n);
    for i in 1..m {
        if linearized_sg {
            a[(i, i)] += 1.0;
        }
        b[(i, i)] = disc.delta.values[i];
    }
    a.row_mut(0).fill(0.0);
    a[(0, 0)] = 1.0;
    a.row_mut(m).fill(0.0);
    a[(m, m)] = 1.0;
    a[(m, m - 1)] = -1.0;

    let mut sigma = shift;
    let mut v = DVector::from_element(n, 1.0);
    v[0] = 0.0;
    'outer: for outer in 0..12 {
        let lu = (&a - &b * sigma).lu();
        let mut mu = 0.0;
        for _ in 0..if outer == 0 { 40 } else { 2 } {
            let Some(w) = lu.solve(&(&b * &v)) else {
                if outer == 0 {
                    return Err(Error::Singular(format!(
                        "shifted steady operator at {sigma}"
                    )));
                }
                // the shift landed on the eigenvalue to working precision
                break 'outer;
            };
            let k = w.iamax();
            mu = if v[k] != 0.0 { w[k] / v[k] } else { w[k] };
            v = &w / w[k];
        }
        let next = sigma + 1.0 / mu;
        let done = (next - sigma).abs() <= 4.0 * f64::EPSILON * next.abs();
        sigma = next;
        if done {
            break;
        }
    }
    let residual = (&a * &v - &b * &v * sigma).amax();
    let scale = v[m];
    if scale == 0.0 {
        return Err(Error::Singular("steady profile vanishes at x = 1".into()));
    }
    Ok(DiscreteSteadyState {
        eta: sigma,
        profile: v / scale,
        residual,
        nodes: disc.grid.nodes.clone(),
    })
}

/// Critical strength of the discrete problem as the steady-state eigenvalue
/// nearest one.
pub fn critical_eta_discrete(m: usize) -> Result<CriticalEstimate> {
    let ss = discrete_steady_state(m, false, 1.0)?;
    let half = (ss.residual * 10.0).max(f64::EPSILON * ss.eta);
    Ok(
        CriticalEstimate::new("steady-eigenvalue", ss.eta, (ss.eta - half, ss.eta + half))
            .with_diagnostic("residual", ss.residual)
            .with_diagnostic("m", m as f64),
    )
}

/// Sign of `E(t_final) - E(t_final / 2)` for the run from `1 + x`.
pub fn energy_trend(disc: &KgDiscretization, eta: f64, t_final: f64) -> f64 {
    let prop = KgPropagator::new(disc, eta, false);
    let initial = disc.grid.sample(|x| 1.0 + x);
    let half = disc.steps_for(0.5 * t_final);
    let full = disc.steps_for(t_final);
    let levels = [half - 1, half, half + 1, full - 1, full, full + 1];
    let f = prop.fields_at(&initial, &levels);
    disc.energy(&f[3], &f[4], &f[5]) - disc.energy(&f[0], &f[1], &f[2])
}

/// Critical strength by bisection on the long-time energy trend.
pub fn critical_eta_by_evolution(
    m: usize,
    lo: f64,
    hi: f64,
    t_final: f64,
    tol: f64,
) -> Result<CriticalEstimate> {
    if !(lo < hi && tol > 0.0 && t_final > 0.0) {
        return Err(Error::invalid(
            "bracket",
            "need lo < hi, tol > 0, t_final > 0",
        ));
    }
    let disc = KgDiscretization::new(m, None)?;
    let (mut a, mut b) = (lo, hi);
    let grows = |eta: f64| energy_trend(&disc, eta, t_final) > 0.0;
    if grows(a) || !grows(b) {
        return Err(Error::NoBracket(format!(
            "energy trend must decay at {lo} and grow at {hi}"
        )));
    }
    let mut evals = 2;
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if grows(mid) {
            b = mid;
        } else {
            a = mid;
        }
        evals += 1;
    }
    Ok(
        CriticalEstimate::new("energy-bisection", 0.5 * (a + b), (a, b))
            .with_diagnostic("runs", evals as f64)
            .with_diagnostic("t_final", t_final),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lemma_one_examples() {
        let s = steady_state_analytic(0.0, 1.0).unwrap();
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.critical_eta, 1.0);
        assert_abs_diff_eq!(
            steady_state_analytic(0.5, 2.0).unwrap().critical_eta,
            2.0 / 3.0
        );
        let s = steady_state_analytic(-0.3, 2.5).unwrap();
        let jump = s.derivative(-0.3 - 1e-9) - s.derivative(-0.3 + 1e-9);
        assert_abs_diff_eq!(jump, s.critical_eta * s.eval(-0.3), epsilon = 1e-12);
        assert!(steady_state_analytic(1.0, 1.0).is_err());
    }

    #[test]
    fn dirichlet_neumann_forms() {
        for eta in [0.3, 1.0, 2.7] {
            let u = steady_state_dirichlet_neumann(eta, false);
            assert_abs_diff_eq!(u.eval(-1.0), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(u.derivative(1.0), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                u.derivative(0.0) - u.derivative_left(0.0),
                -eta,
                epsilon = 1e-12
            );
            let w = steady_state_dirichlet_neumann(eta, true);
            assert_abs_diff_eq!(w.eval(-1.0), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(w.derivative(1.0), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                w.derivative(0.0) - w.derivative_left(0.0),
                -eta,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn perturbation_energy_signs() {
        let (e, ed) = perturbation_energy(37.0, 1.0);
        assert_eq!((e, ed), (0.5, 0.0));
        assert!(perturbation_energy(100.0, 1.0005).1 > 0.0);
        assert!(perturbation_energy(100.0, 0.9995).1 < 0.0);
    }

    #[test]
    fn linearized_profile() {
        let s = linearized_sg_critical();
        assert_abs_diff_eq!(
            s.critical_eta,
            2.0 * 2.0_f64.cosh() / 2.0_f64.sinh(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(s.eval(-1.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.derivative_right(1.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eval(-1e-15), s.eval(1e-15), epsilon = 1e-12);
        let ratio = (s.derivative_left(0.0) - s.derivative_right(0.0)) / s.eval(0.0);
        assert_abs_diff_eq!(ratio, s.critical_eta, epsilon = 1e-10);
    }

    #[test]
    fn config_validation() {
        assert!(KgConfig::default().validate().is_ok());
        for bad in [
            KgConfig {
                alpha: 0.2,
                ..Default::default()
            },
            KgConfig {
                m: 64,
                ..Default::default()
            },
            KgConfig {
                t_final: 0.0,
                ..Default::default()
            },
            KgConfig {
                eta: f64::NAN,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn initial_must_vanish_on_left() {
        let cfg = KgConfig {
            m: 15,
            t_final: 0.1,
            ..Default::default()
        };
        let bad = DVector::from_element(16, 1.0);
        assert!(evolve_kg(&cfg, &bad).is_err());
    }

    #[test]
    fn zero_strength_energy_never_grows() {
        let cfg = KgConfig {
            eta: 0.0,
            m: 15,
            t_final: 20.0,
            ..Default::default()
        };
        let grid = build_grid(15).unwrap();
        let run = evolve_kg(&cfg, &grid.sample(|x| 1.0 + x)).unwrap();
        assert!(run.energy.energy.iter().all(|&e| e >= 0.0));
        let first = run.energy.energy[0];
        let last = *run.energy.energy.last().unwrap();
        assert!(last < first);
        assert_eq!(run.u_right.len(), run.energy.len());
    }

    #[test]
    fn propagator_matches_stepping() {
        let cfg = KgConfig {
            eta: 1.02,
            m: 15,
            t_final: 7.0,
            ..Default::default()
        };
        let disc = KgDiscretization::new(15, None).unwrap();
        let initial = disc.grid.sample(|x| 1.0 + x);
        let run = evolve_kg(&cfg, &initial).unwrap();
        let steps = disc.steps_for(7.0);
        let f = KgPropagator::new(&disc, 1.02, false).fields_at(&initial, &[1, steps]);
        assert_eq!(f[0], initial);
        let diff = (&f[1] - &run.final_field).amax();
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn discrete_linearized_critical_approaches_analytic() {
        let coarse = discrete_steady_state(31, true, 2.0).unwrap().eta;
        let fine = discrete_steady_state(63, true, 2.0).unwrap().eta;
        let exact = linearized_sg_critical().critical_eta;
        assert!((fine - exact).abs() < (coarse - exact).abs());
        assert!((fine - exact).abs() < 0.05);
    }
}
