//! Legendre chaos for the Klein-Gordon problem with a uniformly distributed
//! potential strength `eta = B + (b - a)/2 xi`, `xi` uniform on `[-1, 1]`.
//!
//! Multiplication by `xi` couples neighbouring Legendre modes only, so the
//! Galerkin system is a block-tridiagonal set of wave equations. The
//! critical strength is where the reconstructed `u(1, t, eta)` stops
//! changing in time: successive loci cross there.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::CriticalEstimate;
use crate::kleingordon::{KgDiscretization, KgPropagator, BLOWUP_THRESHOLD};
use crate::orthopoly::{gauss_legendre, legendre_eval_all};

/// Snapshot times of the locus experiment.
pub const DEFAULT_SNAPSHOTS: [f64; 7] = [50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0];

/// Paper default for the number of reconstruction samples on `[-1, 1]`.
pub const DEFAULT_LOCUS_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct GpcKgSystem {
    /// Truncation order; modes `0..=n_order`.
    pub n_order: usize,
    pub a: f64,
    pub b: f64,
    pub disc: KgDiscretization,
}

impl GpcKgSystem {
    pub fn new(n_order: usize, a: f64, b: f64, disc: KgDiscretization) -> Result<Self> {
        if !(a > 0.0 && a <= b && b.is_finite()) {
            return Err(Error::invalid(
                "a/b",
                format!("need 0 < a <= b, got [{a}, {b}]"),
            ));
        }
        Ok(GpcKgSystem {
            n_order,
            a,
            b,
            disc,
        })
    }

    pub fn modes(&self) -> usize {
        self.n_order + 1
    }

    /// Sub-diagonal coupling `A_l`.
    pub fn coupling_a(&self, l: usize) -> f64 {
        if l == 0 {
            return 0.0;
        }
        let lf = l as f64;
        0.5 * (self.b - self.a) * lf / (2.0 * lf - 1.0)
    }

    pub fn coupling_b(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    /// Super-diagonal coupling `C_l`.
    pub fn coupling_c(&self, l: usize) -> f64 {
        if l >= self.n_order {
            return 0.0;
        }
        let lf = l as f64;
        0.5 * (self.b - self.a) * (lf + 1.0) / (2.0 * lf + 3.0)
    }

    pub fn eta_of(&self, xi: f64) -> f64 {
        0.5 * (self.b - self.a) * xi + self.coupling_b()
    }

    pub fn xi_of(&self, eta: f64) -> f64 {
        if self.b == self.a {
            0.0
        } else {
            (eta - self.coupling_b()) / (0.5 * (self.b - self.a))
        }
    }
}

/// Modal fields at one time: column `l` holds mode `l` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub t: f64,
    pub fields: DMatrix<f64>,
}

impl ModalState {
    pub fn mode(&self, l: usize) -> DVector<f64> {
        self.fields.column(l).into_owned()
    }

    /// Modal values at the right boundary.
    pub fn right_trace(&self) -> Vec<f64> {
        let last = self.fields.nrows() - 1;
        self.fields.row(last).iter().copied().collect()
    }
}

/// Evolves the Galerkin system from `u_0 = 1 + x`, `u_l = 0` otherwise, and
/// returns the modal state at each snapshot time (rounded to whole steps).
pub fn assemble_and_evolve(system: &GpcKgSystem, snapshots: &[f64]) -> Result<Vec<ModalState>> {
    if snapshots.is_empty() || snapshots.windows(2).any(|w| w[1] <= w[0]) || snapshots[0] <= 0.0 {
        return Err(Error::invalid(
            "snapshots",
            "need increasing positive times",
        ));
    }
    let disc = &system.disc;
    let n = disc.grid.len();
    let modes = system.modes();
    let dt2 = disc.dt * disc.dt;
    let delta = &disc.delta.values;
    let bcoef: Vec<f64> = delta.iter().map(|&d| system.coupling_b() * d).collect();
    let a_l: Vec<f64> = (0..modes).map(|l| system.coupling_a(l)).collect();
    let c_l: Vec<f64> = (0..modes).map(|l| system.coupling_c(l)).collect();
    let targets: Vec<usize> = snapshots
        .iter()
        .map(|&t| disc.steps_for(t).max(1))
        .collect();
    let last = *targets.last().unwrap();

    let mut now = DMatrix::zeros(n, modes);
    now.set_column(0, &disc.grid.sample(|x| 1.0 + x));
    let mut prev = now.clone();
    let mut lap = DMatrix::zeros(n, modes);
    let mut out = Vec::with_capacity(targets.len());
    let mut next_target = 0;

    // level 1 equals level 0 (first-order start from rest)
    for level in 1..=last {
        while next_target < targets.len() && targets[next_target] == level {
            out.push(ModalState {
                t: level as f64 * disc.dt,
                fields: now.clone(),
            });
            next_target += 1;
        }
        if level == last {
            break;
        }
        lap.gemm(1.0, &disc.grid.diff2, &now, 0.0);
        for l in 0..modes {
            for j in 0..n {
                let mut coupled = bcoef[j] * now[(j, l)];
                if l > 0 {
                    coupled += delta[j] * a_l[l] * now[(j, l - 1)];
                }
                if l + 1 < modes {
                    coupled += delta[j] * c_l[l] * now[(j, l + 1)];
                }
                let v = 2.0 * now[(j, l)] - prev[(j, l)] + dt2 * (lap[(j, l)] + coupled);
                prev[(j, l)] = v;
            }
            prev[(0, l)] = 0.0;
            prev[(n - 1, l)] =
                (1.0 - disc.lambda) * now[(n - 1, l)] + disc.lambda * now[(n - 2, l)];
        }
        std::mem::swap(&mut now, &mut prev);
        if level % 4096 == 0 {
            let max_abs = now.amax();
            if !(max_abs <= BLOWUP_THRESHOLD) {
                return Err(Error::BlowUp {
                    t: level as f64 * disc.dt,
                    max_abs,
                });
            }
        }
    }
    Ok(out)
}

/// The mean under the uniform law is the zeroth mode.
pub fn gpc_mean(state: &ModalState) -> DVector<f64> {
    state.mode(0)
}

/// Fields `u(x, t, eta)` at each of `times` for each strength, with
/// independent solves spread over the rayon pool.
pub fn sample_fields(
    disc: &KgDiscretization,
    etas: &[f64],
    times: &[f64],
) -> Vec<Vec<DVector<f64>>> {
    let initial = disc.grid.sample(|x| 1.0 + x);
    let levels: Vec<usize> = times.iter().map(|&t| disc.steps_for(t).max(1)).collect();
    etas.par_iter()
        .map(|&eta| KgPropagator::new(disc, eta, false).fields_at(&initial, &levels))
        .collect()
}

/// Mean over `n_quad` Gauss-Legendre strengths on `[a, b]`, one field per
/// time.
pub fn quadrature_mean(
    disc: &KgDiscretization,
    a: f64,
    b: f64,
    n_quad: usize,
    times: &[f64],
) -> Result<Vec<DVector<f64>>> {
    if n_quad == 0 {
        return Err(Error::invalid("n_quad", "must be at least 1"));
    }
    let rule = gauss_legendre(n_quad)?;
    let (etas, weights) = rule.mapped_to(a, b);
    let fields = sample_fields(disc, &etas, times);
    let total: f64 = weights.iter().sum();
    Ok(weighted_mean(&fields, &weights, total, times.len()))
}

fn weighted_mean(
    fields: &[Vec<DVector<f64>>],
    weights: &[f64],
    total: f64,
    n_times: usize,
) -> Vec<DVector<f64>> {
    (0..n_times)
        .map(|k| {
            let mut acc = DVector::zeros(fields[0][k].len());
            for (f, &w) in fields.iter().zip(weights) {
                acc.axpy(w / total, &f[k], 1.0);
            }
            acc
        })
        .collect()
}

/// `M + 1` equally spaced strengths on `[a, b]`.
pub fn uniform_etas(a: f64, b: f64, m_samples: usize) -> Vec<f64> {
    (0..=m_samples)
        .map(|i| a + (b - a) * i as f64 / m_samples as f64)
        .collect()
}

/// Composite trapezoid weights for `M + 1` equally spaced samples.
pub fn trapezoid_weights(m_samples: usize) -> Vec<f64> {
    (0..=m_samples)
        .map(|i| if i == 0 || i == m_samples { 0.5 } else { 1.0 })
        .collect()
}

/// Trapezoid mean over `M + 1` uniformly spaced solves on `[a, b]`.
pub fn mc_mean(
    disc: &KgDiscretization,
    a: f64,
    b: f64,
    m_samples: usize,
    times: &[f64],
) -> Result<Vec<DVector<f64>>> {
    if m_samples < 2 {
        return Err(Error::invalid("M", "need at least 2 intervals"));
    }
    let fields = sample_fields(disc, &uniform_etas(a, b, m_samples), times);
    nested_mean(&fields, m_samples, m_samples)
}

/// Trapezoid mean on the sub-grid of `M` intervals taken from samples on a
/// finer nested grid of `M_fine` intervals.
pub fn nested_mean(
    fields: &[Vec<DVector<f64>>],
    m_fine: usize,
    m_samples: usize,
) -> Result<Vec<DVector<f64>>> {
    if m_samples == 0 || !m_fine.is_multiple_of(m_samples) || fields.len() != m_fine + 1 {
        return Err(Error::invalid(
            "M",
            "sample grid is not nested in the fine grid",
        ));
    }
    let stride = m_fine / m_samples;
    let picked: Vec<Vec<DVector<f64>>> = (0..=m_samples)
        .map(|i| fields[i * stride].clone())
        .collect();
    let w = trapezoid_weights(m_samples);
    Ok(weighted_mean(
        &picked,
        &w,
        m_samples as f64,
        fields[0].len(),
    ))
}

/// Reconstruction of `u(1, t, xi)` from the right-boundary modal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusSnapshot {
    pub t_final: f64,
    pub coeffs: Vec<f64>,
}

impl LocusSnapshot {
    pub fn from_state(state: &ModalState) -> Self {
        LocusSnapshot {
            t_final: state.t,
            coeffs: state.right_trace(),
        }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        legendre_series(&self.coeffs, xi)
    }

    /// `(xi, u)` on `samples` uniform points of `[-1, 1]`.
    pub fn sample(&self, samples: usize) -> Vec<(f64, f64)> {
        uniform_xi(samples).map(|x| (x, self.eval(x))).collect()
    }
}

fn uniform_xi(samples: usize) -> impl Iterator<Item = f64> {
    let s = samples.max(2);
    (0..s).map(move |i| -1.0 + 2.0 * i as f64 / (s - 1) as f64)
}

/// `sum c_l P_l(x)` by the three-term recurrence.
pub fn legendre_series(coeffs: &[f64], x: f64) -> f64 {
    match coeffs.len() {
        0 => 0.0,
        1 => coeffs[0],
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            let mut s = coeffs[0] + coeffs[1] * x;
            for (k, &c) in coeffs.iter().enumerate().skip(2) {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                s += c * p2;
                p0 = p1;
                p1 = p2;
            }
            s
        }
    }
}

/// Roots of `f` on a uniform scan, refined by bisection then secant.
fn scan_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let s = samples.max(2);
    let h = (hi - lo) / (s - 1) as f64;
    let mut roots = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for i in 1..s {
        let x = if i == s - 1 { hi } else { lo + h * i as f64 };
        let fx = f(x);
        if f_prev == 0.0 {
            roots.push(x_prev);
        } else if f_prev * fx < 0.0 {
            roots.push(refine_root(&f, x_prev, x, f_prev, fx));
        }
        x_prev = x;
        f_prev = fx;
    }
    if f_prev == 0.0 {
        roots.push(x_prev);
    }
    roots
}

fn refine_root<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    while b - a > 1e-10 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    // secant, kept inside the bracket
    for _ in 0..50 {
        let x = b - fb * (b - a) / (fb - fa);
        if !(x > a && x < b) || b - a <= 1e-14 {
            break;
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fa * fx < 0.0 {
            b = x;
            fb = fx;
        } else {
            a = x;
            fa = fx;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

fn nearest(roots: &[f64], target: f64) -> f64 {
    *roots
        .iter()
        .min_by(|a, b| (*a - target).abs().total_cmp(&(*b - target).abs()))
        .unwrap()
}

/// Crossing points of consecutive loci, mapped to `eta`.
///
/// With several crossings in a pair, the one nearest the previous pair's
/// crossing is kept (the first pair takes the one nearest the interval
/// centre).
pub fn critical_eta_from_loci(
    snapshots: &[LocusSnapshot],
    a: f64,
    b: f64,
    samples: usize,
) -> Result<CriticalEstimate> {
    if snapshots.len() < 2 {
        return Err(Error::invalid("snapshots", "need at least two loci"));
    }
    let eta_of = |xi: f64| 0.5 * (b - a) * xi + 0.5 * (a + b);
    let mut xis = Vec::new();
    for pair in snapshots.windows(2) {
        let diff: Vec<f64> = pair[1]
            .coeffs
            .iter()
            .zip(&pair[0].coeffs)
            .map(|(p, q)| p - q)
            .collect();
        let roots = scan_roots(|x| legendre_series(&diff, x), -1.0, 1.0, samples);
        if roots.is_empty() {
            return Err(Error::NoCrossing {
                t_prev: pair[0].t_final,
                t_next: pair[1].t_final,
            });
        }
        xis.push(nearest(&roots, xis.last().copied().unwrap_or(0.0)));
    }
    crossing_estimate(
        "locus-intersection",
        xis.iter().map(|&x| eta_of(x)).collect(),
        || {
            let x = *xis.last().unwrap();
            snapshots.last().unwrap().eval(x)
        },
        snapshots,
    )
}

fn crossing_estimate<F: FnOnce() -> f64>(
    method: &str,
    etas: Vec<f64>,
    u_at_crossing: F,
    snapshots: &[LocusSnapshot],
) -> Result<CriticalEstimate> {
    let value = *etas.last().unwrap();
    let spread = if etas.len() > 1 {
        (value - etas[etas.len() - 2]).abs()
    } else {
        0.0
    };
    let mut est = CriticalEstimate::new(method, value, (value - spread, value + spread))
        .with_diagnostic("u_steady", u_at_crossing());
    for (k, eta) in etas.iter().enumerate() {
        est = est.with_diagnostic(format!("crossing_{}", k + 1), *eta);
    }
    for s in snapshots {
        est = est.with_diagnostic("t_final", s.t_final);
    }
    Ok(est)
}

/// Same extraction on sampled loci `u(1, t_k, eta_i)` (e.g. from Monte
/// Carlo solves), with linear interpolation between samples.
pub fn critical_eta_from_samples(
    etas: &[f64],
    loci: &[Vec<f64>],
    times: &[f64],
) -> Result<CriticalEstimate> {
    if loci.len() < 2 || loci.len() != times.len() {
        return Err(Error::invalid(
            "loci",
            "need at least two sampled loci, one per time",
        ));
    }
    let centre = 0.5 * (etas[0] + etas[etas.len() - 1]);
    let mut found: Vec<f64> = Vec::new();
    let mut last_u = f64::NAN;
    for k in 1..loci.len() {
        let d: Vec<f64> = loci[k]
            .iter()
            .zip(&loci[k - 1])
            .map(|(p, q)| p - q)
            .collect();
        let mut roots = Vec::new();
        for i in 1..etas.len() {
            if d[i - 1] == 0.0 {
                roots.push((etas[i - 1], i - 1, 0.0));
            } else if d[i - 1] * d[i] < 0.0 {
                let s = d[i - 1] / (d[i - 1] - d[i]);
                roots.push((etas[i - 1] + s * (etas[i] - etas[i - 1]), i - 1, s));
            }
        }
        if roots.is_empty() {
            return Err(Error::NoCrossing {
                t_prev: times[k - 1],
                t_next: times[k],
            });
        }
        let target = found.last().copied().unwrap_or(centre);
        let &(eta, i, s) = roots
            .iter()
            .min_by(|a, b| (a.0 - target).abs().total_cmp(&(b.0 - target).abs()))
            .unwrap();
        found.push(eta);
        last_u = loci[k][i] + s * (loci[k][(i + 1).min(etas.len() - 1)] - loci[k][i]);
    }
    let snaps: Vec<LocusSnapshot> = times
        .iter()
        .map(|&t| LocusSnapshot {
            t_final: t,
            coeffs: Vec::new(),
        })
        .collect();
    crossing_estimate("sampled-locus-intersection", found, || last_u, &snaps)
}

/// Legendre values `P_0..P_N` on each of the given points.
pub fn legendre_table(points: &[f64], degree: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(points.len(), degree + 1);
    for (i, &x) in points.iter().enumerate() {
        for (l, p) in legendre_eval_all(degree, x).into_iter().enumerate() {
            t[(i, l)] = p;
        }
    }
    t
}
