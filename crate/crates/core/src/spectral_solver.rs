//! The Fourier-side solution of `u_t = d(J*u) - u`.
//!
//! Transforming in `x` decouples the modes: `û(t,ξ) = e^{t(dĴ(ξ)-1)}·û₀(ξ)`.
//! For even data the inverse transform is the cosine integral
//! `u(t,x) = ∫_ℝ e^{t(dĴ(ξ)-1)} û₀(ξ) cos(2πxξ) dξ`, which is what this module
//! evaluates. Since `0 < Ĵ ≤ 1`, `|u(t,x)| ≤ ‖û₀‖₁·e^{(d-1)t}`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kernels::KernelSpec;
use crate::profiles::FrequencyProfile;
use crate::quadrature::{self, QuadratureConfig, QuadratureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("profile `{0}` is not declared even; the cosine representation does not apply")]
    ProfileNotEven(String),
    #[error("rate multiplier d must be positive, got {0}")]
    InvalidRate(f64),
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// `d`, `J` and `û₀` for one instance of the equation.
#[derive(Debug, Clone)]
pub struct ModelParams {
    d: f64,
    kernel: KernelSpec,
    profile: FrequencyProfile,
}

impl ModelParams {
    pub fn new(d: f64, kernel: KernelSpec, profile: FrequencyProfile) -> Result<Self, SolverError> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(SolverError::InvalidRate(d));
        }
        Ok(Self { d, kernel, profile })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn profile(&self) -> &FrequencyProfile {
        &self.profile
    }

    pub fn with_kernel(&self, kernel: KernelSpec) -> Self {
        Self {
            kernel,
            ..self.clone()
        }
    }

    /// `e^{t(dĴ(ξ)-1)}`.
    pub fn weight(&self, t: f64, xi: f64) -> f64 {
        (t * (self.d * self.kernel.transform(xi) - 1.0)).exp()
    }

    /// `‖û₀‖₁·e^{(d-1)t}`.
    pub fn envelope(&self, t: f64) -> f64 {
        self.profile.l1_norm() * ((self.d - 1.0) * t).exp()
    }
}

/// `û(t,ξ) = e^{t(dĴ(ξ)-1)}·û₀(ξ)`.
pub fn u_hat(m: &ModelParams, t: f64, xi: f64) -> f64 {
    m.weight(t, xi) * m.profile.eval(xi)
}

/// `u(t,x)` with its quadrature error estimate.
pub fn solve_at_with_error(
    m: &ModelParams,
    t: f64,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<quadrature::Estimate, SolverError> {
    if !m.profile.is_even() {
        return Err(SolverError::ProfileNotEven(m.profile.name().to_string()));
    }
    if !(t >= 0.0) {
        return Err(SolverError::NegativeTime(t));
    }
    let cfg = cfg.with_singularity(m.profile.singularity_order());
    let x = x.abs();
    let quarter = (x > 0.0).then(|| 0.25 / x);
    let e = quadrature::integrate_real_line_even(
        |xi| u_hat(m, t, xi) * (2.0 * PI * x * xi).cos(),
        quarter,
        &cfg,
    )?;
    Ok(e)
}

/// `u(t,x) = ∫_ℝ û(t,ξ) cos(2πxξ) dξ`.
pub fn solve_at(
    m: &ModelParams,
    t: f64,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, SolverError> {
    solve_at_with_error(m, t, x, cfg).map(|e| e.value)
}

/// `∫_ℝ u(t,x) dx = û(t,0) = e^{(d-1)t}·û₀(0)`. Infinite when `û₀` is
/// singular at the origin.
pub fn mass(m: &ModelParams, t: f64) -> f64 {
    u_hat(m, t, 0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionGrid {
    pub t_values: Vec<f64>,
    pub x_values: Vec<f64>,
    /// `u[i][j] = u(t_i, x_j)`.
    pub u: Vec<Vec<f64>>,
    pub upper_envelope: Vec<f64>,
    /// Cells `(i, j)` with `|u| > envelope + abs_tol`.
    pub violations: Vec<(usize, usize)>,
}

impl SolutionGrid {
    /// Smallest `envelope - |u|` over the grid.
    pub fn min_envelope_margin(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.upper_envelope)
            .flat_map(|(row, env)| row.iter().map(move |v| env - v.abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn solve_grid(
    m: &ModelParams,
    ts: &[f64],
    xs: &[f64],
    cfg: &QuadratureConfig,
) -> Result<SolutionGrid, SolverError> {
    if let Some(&t) = ts.iter().find(|&&t| !(t >= 0.0)) {
        return Err(SolverError::NegativeTime(t));
    }
    let cells: Vec<(usize, usize)> = (0..ts.len())
        .flat_map(|i| (0..xs.len()).map(move |j| (i, j)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(i, j)| solve_at(m, ts[i], xs[j], cfg))
        .collect::<Result<Vec<f64>, _>>()?;

    let upper_envelope: Vec<f64> = ts.iter().map(|&t| m.envelope(t)).collect();
    let u: Vec<Vec<f64>> = values
        .chunks(xs.len().max(1))
        .map(<[f64]>::to_vec)
        .collect();
    let u = if xs.is_empty() {
        vec![Vec::new(); ts.len()]
    } else {
        u
    };
    let violations = cells
        .iter()
        .copied()
        .filter(|&(i, j)| u[i][j].abs() > upper_envelope[i] + cfg.abs_tol)
        .collect();

    Ok(SolutionGrid {
        t_values: ts.to_vec(),
        x_values: xs.to_vec(),
        u,
        upper_envelope,
        violations,
    })
}
