//! Chebyshev Gauss-Lobatto collocation on `[-L, L]`.
//!
//! Nodes are ordered left to right, `x_j = -L cos(j pi / m)`, so `x_0 = -L`
//! and `x_m = L`. The point source sits at `x = 0`, which is never a node
//! when `m` is odd.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Safety factor applied to the smallest node spacing to get the default
/// leapfrog step.
pub const CFL_FACTOR: f64 = 0.25;

/// `-cos(j pi / m)` for `j = 0..=m`, computed through a sine so that the
/// set is exactly antisymmetric.
pub fn chebyshev_nodes(m: usize) -> Vec<f64> {
    let mf = m as f64;
    (0..=m)
        .map(|j| (PI * (2.0 * j as f64 - mf) / (2.0 * mf)).sin())
        .collect()
}

#[derive(Debug, Clone)]
pub struct SpectralGrid {
    /// Polynomial order; the grid has `m + 1` nodes.
    pub m: usize,
    /// Half-width of the domain `[-L, L]`.
    pub half_length: f64,
    pub nodes: DVector<f64>,
    /// First-derivative collocation matrix.
    pub diff: DMatrix<f64>,
    /// `diff * diff`.
    pub diff2: DMatrix<f64>,
    /// Clenshaw-Curtis weights for `int_{-L}^{L}`.
    pub quad_weights: DVector<f64>,
}

/// Grid on `[-1, 1]`.
pub fn build_grid(m: usize) -> Result<SpectralGrid> {
    build_grid_on(m, 1.0)
}

/// Grid on `[-half_length, half_length]`.
pub fn build_grid_on(m: usize, half_length: f64) -> Result<SpectralGrid> {
    if m < 4 {
        return Err(Error::invalid(
            "m",
            format!("grid order must be >= 4, got {m}"),
        ));
    }
    if !(half_length > 0.0 && half_length.is_finite()) {
        return Err(Error::invalid("half_length", "must be positive"));
    }
    let n = m + 1;
    let mf = m as f64;
    let unit = chebyshev_nodes(m);
    let c = |j: usize| -> f64 {
        let base = if j == 0 || j == m { 2.0 } else { 1.0 };
        if j.is_multiple_of(2) {
            base
        } else {
            -base
        }
    };
    let mut diff = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            // x_i - x_j written with sines to avoid cancellation
            let dx = 2.0
                * (PI * (i + j) as f64 / (2.0 * mf)).sin()
                * (PI * (i as f64 - j as f64) / (2.0 * mf)).sin();
            let v = c(i) / c(j) / dx;
            diff[(i, j)] = v;
            row_sum += v;
        }
        diff[(i, i)] = -row_sum;
    }
    diff /= half_length;
    let diff2 = &diff * &diff;

    let quad_weights = clenshaw_curtis_weights(m) * half_length;
    let nodes = DVector::from_iterator(n, unit.into_iter().map(|x| x * half_length));
    Ok(SpectralGrid {
        m,
        half_length,
        nodes,
        diff,
        diff2,
        quad_weights,
    })
}

/// Clenshaw-Curtis weights on the Lobatto nodes of `[-1, 1]`.
pub fn clenshaw_curtis_weights(m: usize) -> DVector<f64> {
    let n = m as f64;
    let mut w = DVector::zeros(m + 1);
    if m == 0 {
        w[0] = 2.0;
        return w;
    }
    let end = if m.is_multiple_of(2) {
        1.0 / (n * n - 1.0)
    } else {
        1.0 / (n * n)
    };
    w[0] = end;
    w[m] = end;
    for j in 1..m {
        let theta = PI * j as f64 / n;
        let mut v = 1.0;
        for k in 1..=(m - 1) / 2 {
            let kf = k as f64;
            v -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
        }
        if m.is_multiple_of(2) {
            v -= (n * theta).cos() / (n * n - 1.0);
        }
        w[j] = 2.0 * v / n;
    }
    w
}

impl SpectralGrid {
    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `x_1 - x_0`, the smallest spacing.
    pub fn min_spacing(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// `x_m - x_{m-1}`, the spacing used by the outflow closure.
    pub fn right_spacing(&self) -> f64 {
        self.nodes[self.m] - self.nodes[self.m - 1]
    }

    /// Default leapfrog step `CFL_FACTOR * min_spacing`.
    pub fn default_dt(&self) -> f64 {
        CFL_FACTOR * self.min_spacing()
    }

    /// Clenshaw-Curtis integral of node values.
    pub fn integrate(&self, values: &DVector<f64>) -> f64 {
        self.quad_weights.dot(values)
    }

    pub fn derivative(&self, values: &DVector<f64>) -> DVector<f64> {
        &self.diff * values
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> DVector<f64> {
        self.nodes.map(f)
    }

    /// Index of the last node left of the origin, `(m - 1) / 2`, for odd m.
    pub fn split_index(&self) -> Option<usize> {
        (self.m % 2 == 1).then_some((self.m - 1) / 2)
    }
}

/// Discrete delta: the collocation derivative of the sampled step function.
#[derive(Debug, Clone)]
pub struct DeltaApprox {
    pub values: DVector<f64>,
    /// `k` with `x_k < 0 < x_{k+1}`.
    pub split_index: usize,
    pub heaviside: DVector<f64>,
}

/// `delta_m = D H_m` with `H_m = (0, ..., 0, 1, ..., 1)` switching between
/// `x_k` and `x_{k+1}`, `k = (m - 1)/2`.
pub fn consistent_delta(grid: &SpectralGrid) -> Result<DeltaApprox> {
    let k = grid.split_index().ok_or_else(|| {
        Error::invalid(
            "m",
            format!(
                "grid order must be odd so the delta falls between nodes, got {}",
                grid.m
            ),
        )
    })?;
    let heaviside = DVector::from_fn(grid.len(), |i, _| if i > k { 1.0 } else { 0.0 });
    let values = &grid.diff * &heaviside;
    Ok(DeltaApprox {
        values,
        split_index: k,
        heaviside,
    })
}

/// Chebyshev coefficients `a_k` of the interpolant through node values on
/// the Lobatto grid (nodes in increasing order).
pub fn chebyshev_coefficients(values: &[f64]) -> Vec<f64> {
    let m = values.len() - 1;
    let mf = m as f64;
    (0..=m)
        .map(|k| {
            let mut s = 0.0;
            for (j, &f) in values.iter().enumerate() {
                // x_j = cos((m - j) pi / m)
                let t = (k as f64 * (m - j) as f64 * PI / mf).cos();
                let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                s += w * f * t;
            }
            let scale = if k == 0 || k == m { 1.0 / mf } else { 2.0 / mf };
            scale * s
        })
        .collect()
}

/// Clenshaw evaluation of `sum a_k T_k(x)` for `x` in `[-1, 1]`.
pub fn chebyshev_evaluate(coeffs: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &a in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + a;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + coeffs.first().copied().unwrap_or(0.0)
}

/// Exponential filter `sigma(k) = exp(-strength (k/m)^order)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Even filter order `2p`.
    pub order: u32,
    pub strength: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            order: 8,
            strength: -f64::EPSILON.ln(),
        }
    }
}

impl FilterSpec {
    pub fn factor(&self, k: usize, m: usize) -> f64 {
        if m == 0 {
            return 1.0;
        }
        let eta = k as f64 / m as f64;
        (-self.strength * eta.powi(self.order as i32)).exp()
    }
}

/// Scale mode `k` of a Chebyshev coefficient sequence by the filter factor.
pub fn apply_filter(coeffs: &[f64], spec: &FilterSpec) -> Vec<f64> {
    let m = coeffs.len().saturating_sub(1);
    coeffs
        .iter()
        .enumerate()
        .map(|(k, &a)| a * spec.factor(k, m))
        .collect()
}

/// `2 u_now - u_prev + dt^2 rhs`, where `rhs` already holds the spatial
/// operator applied to `u_now` plus any source. Boundary rows are left to
/// the caller.
pub fn leapfrog_step(
    u_now: &DVector<f64>,
    u_prev: &DVector<f64>,
    rhs: &DVector<f64>,
    dt: f64,
) -> DVector<f64> {
    let dt2 = dt * dt;
    DVector::from_fn(u_now.len(), |i, _| {
        2.0 * u_now[i] - u_prev[i] + dt2 * rhs[i]
    })
}
