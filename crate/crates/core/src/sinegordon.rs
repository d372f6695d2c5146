//! Sine-Gordon kink scattering on a delta impurity,
//! `u_tt - u_xx + sin u = eps delta(x) sin u` on `[-L, L]`.
//!
//! The kink starts at `x0 < 0` moving right with speed `V`. The left end is
//! pinned to the exact free-kink trace, the right end uses a first-order
//! upwind discretization of `u_t + u_x = 0`. After passing the impurity the
//! kink leaves through `x = L` and `u(L, t)` drops from `2 pi` to `0`; a
//! trapped (or reflected) kink leaves `u(L, t)` at `2 pi`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::spectral1d::{build_grid_on, consistent_delta, DeltaApprox, SpectralGrid};

/// Solutions with `max |u|` above this are reported as blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgConfig {
    pub velocity: f64,
    pub epsilon: f64,
    pub half_length: f64,
    pub x0: f64,
    pub m: usize,
    /// Time step; `None` selects the grid default.
    pub dt: Option<f64>,
    pub t_final: f64,
    /// Spacing of recorded trajectory samples.
    pub sample_interval: f64,
}

impl Default for SgConfig {
    fn default() -> Self {
        SgConfig {
            velocity: 0.1,
            epsilon: 0.5,
            half_length: 8.0,
            x0: -6.0,
            m: 127,
            dt: None,
            t_final: 600.0,
            sample_interval: 1.0,
        }
    }
}

impl SgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.velocity.abs() < 1.0) {
            return Err(Error::invalid(
                "velocity",
                "kink speed must satisfy |V| < 1",
            ));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon", "impurity amplitude must be >= 0"));
        }
        if !(self.half_length > 0.0) {
            return Err(Error::invalid("half_length", "must be positive"));
        }
        if !(self.x0 < 0.0 && self.x0 > -self.half_length) {
            return Err(Error::invalid("x0", "kink front must satisfy -L < x0 < 0"));
        }
        if self.m.is_multiple_of(2) {
            return Err(Error::invalid("m", "grid order must be odd"));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::invalid("t_final", "must be positive"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::invalid("dt", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Free kink `4 atan(exp((x - x0 - V t)/sqrt(1 - V^2)))` and its time
/// derivative.
pub fn kink_profile(x: f64, t: f64, x0: f64, velocity: f64) -> (f64, f64) {
    let gamma = (1.0 - velocity * velocity).sqrt();
    let s = (x - x0 - velocity * t) / gamma;
    let u = 4.0 * s.exp().atan();
    // e^s / (1 + e^{2s}) = 1 / (2 cosh s)
    let ut = -4.0 * velocity / gamma / (2.0 * s.cosh());
    (u, ut)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    Pass,
    Trapped,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeKind::Pass => write!(f, "pass"),
            OutcomeKind::Trapped => write!(f, "trapped"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    /// Time average of `u(L, t)` over the last tenth of the run.
    pub terminal_value: f64,
}

impl Outcome {
    pub fn from_terminal(terminal_value: f64) -> Self {
        let kind = if terminal_value < PI {
            OutcomeKind::Pass
        } else {
            OutcomeKind::Trapped
        };
        Outcome {
            kind,
            terminal_value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgSample {
    pub t: f64,
    pub u_right: f64,
    /// Leftmost position where `u` crosses `pi`, if any.
    pub front: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SgRun {
    pub samples: Vec<SgSample>,
    pub outcome: Outcome,
    pub final_field: DVector<f64>,
    pub dt: f64,
}

/// Leftmost upward crossing of `level`, linearly interpolated.
pub fn front_position(nodes: &DVector<f64>, u: &DVector<f64>, level: f64) -> Option<f64> {
    (0..u.len() - 1).find_map(|j| {
        let (a, b) = (u[j], u[j + 1]);
        (a < level && b >= level).then(|| {
            let s = (level - a) / (b - a);
            nodes[j] + s * (nodes[j + 1] - nodes[j])
        })
    })
}

/// Shared leapfrog machinery for the deterministic and chaos SG solvers.
pub(crate) struct SgGeometry {
    pub grid: SpectralGrid,
    pub delta: DeltaApprox,
    pub dt: f64,
    pub steps: usize,
    /// `dt / (x_m - x_{m-1})`.
    pub lambda: f64,
}

impl SgGeometry {
    pub fn new(m: usize, half_length: f64, dt: Option<f64>, t_final: f64) -> Result<Self> {
        let grid = build_grid_on(m, half_length)?;
        let delta = consistent_delta(&grid)?;
        let dt = dt.unwrap_or_else(|| grid.default_dt());
        let steps = (t_final / dt).round().max(1.0) as usize;
        let lambda = dt / grid.right_spacing();
        if lambda > 1.0 {
            return Err(Error::invalid(
                "dt",
                "outflow closure needs dt <= x_m - x_{m-1}",
            ));
        }
        Ok(SgGeometry {
            grid,
            delta,
            dt,
            steps,
            lambda,
        })
    }

    /// Number of trailing steps averaged for the terminal value.
    pub fn tail_steps(&self) -> usize {
        (self.steps / 10).max(1)
    }

    pub fn sample_every(&self, interval: f64) -> usize {
        ((interval / self.dt).round() as usize).max(1)
    }
}

/// Leapfrog evolution of one kink.
pub fn evolve_sg(config: &SgConfig) -> Result<SgRun> {
    config.validate()?;
    let geo = SgGeometry::new(config.m, config.half_length, config.dt, config.t_final)?;
    let grid = &geo.grid;
    let n = grid.len();
    let m = grid.m;
    let dt = geo.dt;
    let dt2 = dt * dt;
    let (x0, vel, eps, half) = (
        config.x0,
        config.velocity,
        config.epsilon,
        config.half_length,
    );
    let trace = |t: f64| kink_profile(-half, t, x0, vel).0;

    let mut u_prev = DVector::from_fn(n, |j, _| kink_profile(grid.nodes[j], 0.0, x0, vel).0);
    let mut u = DVector::from_fn(n, |j, _| {
        let (v, vt) = kink_profile(grid.nodes[j], 0.0, x0, vel);
        v + dt * vt
    });
    u[0] = trace(dt);

    // eps * delta - 1, applied pointwise to sin u
    let source_coef: Vec<f64> = geo.delta.values.iter().map(|&d| eps * d - 1.0).collect();
    let mut rhs = DVector::zeros(n);
    let sample_every = geo.sample_every(config.sample_interval);
    let tail_start = geo.steps - geo.tail_steps();
    let mut tail_sum = 0.0;
    let mut tail_count = 0usize;
    let mut samples = vec![SgSample {
        t: 0.0,
        u_right: u_prev[m],
        front: front_position(&grid.nodes, &u_prev, PI),
    }];

    for step in 1..geo.steps {
        rhs.gemv(1.0, &grid.diff2, &u, 0.0);
        for j in 0..n {
            rhs[j] += source_coef[j] * u[j].sin();
        }
        for j in 0..n {
            u_prev[j] = 2.0 * u[j] - u_prev[j] + dt2 * rhs[j];
        }
        let t_next = (step + 1) as f64 * dt;
        u_prev[0] = trace(t_next);
        u_prev[m] = (1.0 - geo.lambda) * u[m] + geo.lambda * u[m - 1];
        std::mem::swap(&mut u, &mut u_prev);

        let level = step + 1;
        if level > tail_start {
            tail_sum += u[m];
            tail_count += 1;
        }
        if level % sample_every == 0 {
            let max_abs = u.amax();
            if !(max_abs <= BLOWUP_THRESHOLD) {
                return Err(Error::BlowUp { t: t_next, max_abs });
            }
            samples.push(SgSample {
                t: t_next,
                u_right: u[m],
                front: front_position(&grid.nodes, &u, PI),
            });
        }
    }
    if tail_count == 0 {
        tail_sum = u[m];
        tail_count = 1;
    }
    Ok(SgRun {
        samples,
        outcome: Outcome::from_terminal(tail_sum / tail_count as f64),
        final_field: u,
        dt,
    })
}

/// Which outcome occupies the low end of the parameter interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Low parameter traps, high passes (kink velocity).
    TrappedBelow,
    /// Low parameter passes, high traps (impurity amplitude).
    PassBelow,
}

impl Direction {
    fn low_outcome(self) -> OutcomeKind {
        match self {
            Direction::TrappedBelow => OutcomeKind::Trapped,
            Direction::PassBelow => OutcomeKind::Pass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub iteration: usize,
    pub point: f64,
    pub outcome: OutcomeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub log: Vec<BisectionStep>,
}

impl Bracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bisection on the outcome class until the bracket is narrower than `tol`.
/// The endpoints are classified first and must disagree in the order given
/// by `direction`.
pub fn bisect_critical<F>(
    lo: f64,
    hi: f64,
    mut classify: F,
    tol: f64,
    direction: Direction,
) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<OutcomeKind>,
{
    if !(lo < hi) {
        return Err(Error::invalid("bracket", "need lo < hi"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let mut log = Vec::new();
    let c_lo = classify(lo)?;
    log.push(BisectionStep {
        iteration: 0,
        point: lo,
        outcome: c_lo,
    });
    let c_hi = classify(hi)?;
    log.push(BisectionStep {
        iteration: 0,
        point: hi,
        outcome: c_hi,
    });
    if c_lo == c_hi {
        return Err(Error::NoBracket(c_lo.to_string()));
    }
    if c_lo != direction.low_outcome() {
        return Err(Error::invalid(
            "direction",
            format!(
                "low end classified {c_lo}, expected {}",
                direction.low_outcome()
            ),
        ));
    }
    let (mut a, mut b) = (lo, hi);
    let mut iteration = 0;
    while b - a > tol {
        iteration += 1;
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let c = classify(mid)?;
        log.push(BisectionStep {
            iteration,
            point: mid,
            outcome: c,
        });
        if c == c_lo {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Bracket { lo: a, hi: b, log })
}

/// Classifier for the kink velocity at otherwise fixed settings.
pub fn velocity_classifier(base: SgConfig) -> impl FnMut(f64) -> Result<OutcomeKind> {
    move |v| {
        let cfg = SgConfig {
            velocity: v,
            ..base.clone()
        };
        Ok(evolve_sg(&cfg)?.outcome.kind)
    }
}

/// Classifier for the impurity amplitude at otherwise fixed settings.
pub fn amplitude_classifier(base: SgConfig) -> impl FnMut(f64) -> Result<OutcomeKind> {
    move |eps| {
        let cfg = SgConfig {
            epsilon: eps,
            ..base.clone()
        };
        Ok(evolve_sg(&cfg)?.outcome.kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kink_values() {
        let (u, _) = kink_profile(-6.0, 0.0, -6.0, 0.3);
        assert_abs_diff_eq!(u, PI, epsilon = 1e-15);
        assert!(kink_profile(-1e3, 0.0, -6.0, 0.3).0 < 1e-12);
        assert_abs_diff_eq!(
            kink_profile(1e3, 0.0, -6.0, 0.3).0,
            2.0 * PI,
            epsilon = 1e-12
        );
        for x in [-8.0, -6.0, 0.0, 3.0] {
            assert_eq!(kink_profile(x, 0.0, -6.0, 0.0).1, 0.0);
        }
    }

    #[test]
    fn kink_time_derivative_matches_difference() {
        let (x, x0, v) = (-5.3, -6.0, 0.4);
        let h = 1e-6;
        let fd = (kink_profile(x, h, x0, v).0 - kink_profile(x, -h, x0, v).0) / (2.0 * h);
        assert_abs_diff_eq!(kink_profile(x, 0.0, x0, v).1, fd, epsilon = 1e-8);
    }

    #[test]
    fn synthetic_bisection() {
        let classify = |p: f64| {
            Ok(if p < 0.5 {
                OutcomeKind::Trapped
            } else {
                OutcomeKind::Pass
            })
        };
        let b = bisect_critical(0.0, 1.0, classify, 1e-9, Direction::TrappedBelow).unwrap();
        assert!(b.lo < 0.5 && 0.5 <= b.hi);
        assert!(b.width() <= 1e-9);
    }

    #[test]
    fn bisection_without_bracket() {
        let classify = |_p: f64| Ok(OutcomeKind::Pass);
        let e = bisect_critical(0.0, 1.0, classify, 1e-3, Direction::PassBelow).unwrap_err();
        assert!(matches!(e, Error::NoBracket(_)));
    }

    #[test]
    fn bisection_wrong_direction() {
        let classify = |p: f64| {
            Ok(if p < 0.5 {
                OutcomeKind::Pass
            } else {
                OutcomeKind::Trapped
            })
        };
        assert!(bisect_critical(0.0, 1.0, classify, 1e-3, Direction::TrappedBelow).is_err());
        assert!(bisect_critical(0.0, 1.0, classify, 1e-3, Direction::PassBelow).is_ok());
    }

    #[test]
    fn config_validation() {
        let bad = SgConfig {
            velocity: 1.0,
            ..SgConfig::default()
        };
        assert!(evolve_sg(&bad).is_err());
        let even = SgConfig {
            m: 64,
            ..SgConfig::default()
        };
        assert!(evolve_sg(&even).is_err());
    }

    #[test]
    fn front_interpolation() {
        let x = DVector::from_vec(vec![0.0, 1.0, 2.0]);
        let u = DVector::from_vec(vec![0.0, 2.0, 4.0]);
        assert_abs_diff_eq!(front_position(&x, &u, 3.0).unwrap(), 1.5);
        assert!(front_position(&x, &u, 5.0).is_none());
    }
}
