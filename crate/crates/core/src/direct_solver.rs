//! Method-of-lines integration of `u_t = d(J*u) - u` in physical space.
//!
//! The convolution is discretised with the trapezoid rule on a uniform grid
//! over `[-L, L]` with zero extension, and the resulting linear ODE system is
//! advanced with classical RK4 (or forward Euler). This solver shares no code
//! path with the Fourier-side solution and serves as its independent check on
//! smooth, rapidly decaying data.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::KernelSpec;
use crate::spectral_solver::ModelParams;

/// Largest `dt·(d+1)` for which RK4 stays stable on the real axis.
const RK4_STABILITY: f64 = 2.78;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DirectError {
    #[error("invalid direct-solver configuration: {0}")]
    InvalidConfig(String),
    #[error("solution blew up at t = {t}: max |u| = {max_abs:e} exceeds {limit:e}")]
    Instability { t: f64, max_abs: f64, limit: f64 },
    #[error("profile `{0}` has no closed-form physical-space initial datum")]
    NoPhysicalForm(String),
    #[error(
        "initial datum of profile `{0}` is not integrable; truncating it to [-L, L] is meaningless"
    )]
    NotIntegrable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeIntegrator {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvolutionMethod {
    /// Dense `O(n²)` trapezoid sum.
    Dense,
    /// The same trapezoid sum evaluated by zero-padded FFT.
    Fft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectConfig {
    pub domain_half_width: f64,
    pub n_points: usize,
    pub dt: f64,
    pub time_integrator: TimeIntegrator,
    pub convolution: ConvolutionMethod,
}

impl Default for DirectConfig {
    fn default() -> Self {
        Self {
            domain_half_width: 30.0,
            n_points: 2048,
            dt: 1e-3,
            time_integrator: TimeIntegrator::Rk4,
            convolution: ConvolutionMethod::Fft,
        }
    }
}

impl DirectConfig {
    pub fn validate(&self, d: f64) -> Result<(), DirectError> {
        let bad = |m: String| Err(DirectError::InvalidConfig(m));
        if !(self.domain_half_width > 0.0) {
            return bad(format!(
                "domain_half_width must be positive, got {}",
                self.domain_half_width
            ));
        }
        if self.n_points < 16 {
            return bad(format!(
                "n_points must be at least 16, got {}",
                self.n_points
            ));
        }
        if !(self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        let limit = match self.time_integrator {
            TimeIntegrator::Euler => 2.0,
            TimeIntegrator::Rk4 => RK4_STABILITY,
        };
        if self.dt * (d + 1.0) >= limit {
            return bad(format!(
                "dt·(d+1) = {} violates the stability limit {limit}",
                self.dt * (d + 1.0)
            ));
        }
        Ok(())
    }
}

/// Uniform grid `x_j = -L + j·h`, `h = 2L/(n-1)`, with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub h: f64,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Self {
        let h = 2.0 * half_width / (n - 1) as f64;
        let xs = (0..n).map(|j| -half_width + j as f64 * h).collect();
        Grid { xs, h }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Trapezoid weight of node `j` (including `h`).
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.xs.len() {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// `∫ u dx` by the trapezoid rule.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        u.iter().enumerate().map(|(j, v)| self.weight(j) * v).sum()
    }

    /// Eight-point Lagrange interpolation of grid values at `x`.
    pub fn interpolate(&self, u: &[f64], x: f64) -> f64 {
        const POINTS: usize = 8;
        let n = self.xs.len();
        let pos = (x - self.xs[0]) / self.h;
        let start = (pos.floor() as isize - (POINTS as isize / 2 - 1))
            .clamp(0, (n - POINTS) as isize) as usize;
        let mut acc = 0.0;
        for (i, ui) in u.iter().enumerate().skip(start).take(POINTS) {
            let mut l = 1.0;
            for j in start..start + POINTS {
                if j != i {
                    l *= (pos - j as f64) / (i as f64 - j as f64);
                }
            }
            acc += l * ui;
        }
        acc
    }
}

/// `(J*u)(x_i) ≈ Σ_j J(x_i - x_j)·w_j·u_j`, dense evaluation.
pub fn convolve(k: &KernelSpec, u: &[f64], grid: &Grid) -> Vec<f64> {
    let n = grid.len();
    let taps: Vec<f64> = (0..n).map(|m| k.density(m as f64 * grid.h)).collect();
    let wu: Vec<f64> = (0..n).map(|j| grid.weight(j) * u[j]).collect();
    (0..n)
        .map(|i| (0..n).map(|j| taps[i.abs_diff(j)] * wu[j]).sum::<f64>())
        .collect()
}

/// The spatial operator `u ↦ J*u` of the semi-discrete system.
pub trait SpatialOperator: Send + Sync {
    fn apply(&self, u: &[f64]) -> Vec<f64>;
}

/// `J = δ`: the identity, giving the local equation `u_t = (d-1)u`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiracIdentity;

impl SpatialOperator for DiracIdentity {
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }
}

/// Trapezoid-rule convolution with a kernel density on a fixed grid.
pub struct KernelConvolution {
    grid: Grid,
    kernel: KernelSpec,
    method: ConvolutionMethod,
    fft_len: usize,
    taps_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl KernelConvolution {
    pub fn new(kernel: KernelSpec, grid: Grid, method: ConvolutionMethod) -> Self {
        let n = grid.len();
        // linear convolution of 2n-1 taps with n samples
        let fft_len = (3 * n - 2).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);

        // taps[m] = J((m - (n-1))·h) for m = 0..2n-1
        let mut taps_hat = vec![Complex64::new(0.0, 0.0); fft_len];
        if method == ConvolutionMethod::Fft {
            for (m, slot) in taps_hat.iter_mut().enumerate().take(2 * n - 1) {
                let offset = m as f64 - (n - 1) as f64;
                *slot = Complex64::new(kernel.density(offset * grid.h), 0.0);
            }
            forward.process(&mut taps_hat);
        }

        Self {
            grid,
            kernel,
            method,
            fft_len,
            taps_hat,
            forward,
            inverse,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

impl SpatialOperator for KernelConvolution {
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        match self.method {
            ConvolutionMethod::Dense => convolve(&self.kernel, u, &self.grid),
            ConvolutionMethod::Fft => {
                let n = self.grid.len();
                let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
                for (j, slot) in buf.iter_mut().enumerate().take(n) {
                    *slot = Complex64::new(self.grid.weight(j) * u[j], 0.0);
                }
                self.forward.process(&mut buf);
                for (b, t) in buf.iter_mut().zip(&self.taps_hat) {
                    *b *= t;
                }
                self.inverse.process(&mut buf);
                let scale = 1.0 / self.fft_len as f64;
                (0..n).map(|i| buf[i + n - 1].re * scale).collect()
            }
        }
    }
}

fn rhs<O: SpatialOperator + ?Sized>(op: &O, d: f64, u: &[f64]) -> Vec<f64> {
    op.apply(u)
        .iter()
        .zip(u)
        .map(|(ju, v)| d * ju - v)
        .collect()
}

fn axpy(u: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    u.iter().zip(k).map(|(v, kv)| v + a * kv).collect()
}

/// One step of `du/dt = d·(J*u) - u`.
pub fn step<O: SpatialOperator + ?Sized>(
    op: &O,
    d: f64,
    u: &[f64],
    dt: f64,
    integrator: TimeIntegrator,
) -> Vec<f64> {
    match integrator {
        TimeIntegrator::Euler => axpy(u, dt, &rhs(op, d, u)),
        TimeIntegrator::Rk4 => {
            let k1 = rhs(op, d, u);
            let k2 = rhs(op, d, &axpy(u, 0.5 * dt, &k1));
            let k3 = rhs(op, d, &axpy(u, 0.5 * dt, &k2));
            let k4 = rhs(op, d, &axpy(u, dt, &k3));
            u.iter()
                .enumerate()
                .map(|(i, v)| v + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    }
}

/// Grid snapshots at the requested save times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn sample(&self, snapshot: usize, x: f64) -> f64 {
        self.grid.interpolate(&self.snapshots[snapshot], x)
    }

    pub fn mass(&self, snapshot: usize) -> f64 {
        self.grid.integrate(&self.snapshots[snapshot])
    }
}

/// Advance `u0` through `save_times` (sorted, nonnegative) with a fixed step,
/// shortening the last step before each save time.
///
/// When `envelope` is given (`t ↦` admissible bound on `max |u|`), a snapshot
/// beyond ten times that bound aborts with [`DirectError::Instability`].
pub fn run_with<O: SpatialOperator + ?Sized>(
    op: &O,
    d: f64,
    grid: Grid,
    u0: Vec<f64>,
    cfg: &DirectConfig,
    save_times: &[f64],
    envelope: Option<&dyn Fn(f64) -> f64>,
) -> Result<Trajectory, DirectError> {
    cfg.validate(d)?;
    if save_times.iter().any(|&t| !(t >= 0.0)) || save_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(DirectError::InvalidConfig(
            "save times must be nonnegative and sorted".into(),
        ));
    }
    let mut t = 0.0;
    let mut u = u0;
    let mut times = Vec::with_capacity(save_times.len());
    let mut snapshots = Vec::with_capacity(save_times.len());
    for &target in save_times {
        while target - t > 1e-12 * target.max(1.0) {
            let h = cfg.dt.min(target - t);
            u = step(op, d, &u, h, cfg.time_integrator);
            t = if target - t <= cfg.dt { target } else { t + h };
        }
        if let Some(env) = envelope {
            let limit = 10.0 * env(t);
            let max_abs = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(max_abs <= limit) {
                return Err(DirectError::Instability { t, max_abs, limit });
            }
        }
        times.push(target);
        snapshots.push(u.clone());
    }
    Ok(Trajectory {
        grid,
        times,
        snapshots,
    })
}

/// Solve the model on `[-L, L]`, starting from the profile's closed-form
/// physical-space datum.
pub fn run(
    m: &ModelParams,
    cfg: &DirectConfig,
    save_times: &[f64],
) -> Result<Trajectory, DirectError> {
    cfg.validate(m.d())?;
    let grid = Grid::new(cfg.domain_half_width, cfg.n_points);
    let p = m.profile();
    if !p.eval(0.0).is_finite() {
        return Err(DirectError::NotIntegrable(p.name().to_string()));
    }
    let u0 = grid
        .xs
        .iter()
        .map(|&x| p.physical(x))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| DirectError::NoPhysicalForm(p.name().to_string()))?;
    let op = KernelConvolution::new(m.kernel().clone(), grid.clone(), cfg.convolution);
    let envelope = |t: f64| m.envelope(t);
    run_with(&op, m.d(), grid, u0, cfg, save_times, Some(&envelope))
}
