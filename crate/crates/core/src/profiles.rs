//! Initial data in frequency space, `û₀(ξ)`.
//!
//! Profiles are evaluators plus metadata flags declared by the constructor.
//! The flags (evenness, radial decrease, nonnegativity) are what the
//! solvers and series diagnostics rely on; [`FrequencyProfile::spot_check`]
//! verifies them on a sample grid.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::quadrature::{self, QuadratureConfig, QuadratureError};

/// `Γ(1/4)`, the `L¹` norm of `e^{-ξ²}/√|ξ|`.
const GAMMA_QUARTER: f64 = 3.625_609_908_221_908_3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("profile `{0}` is not declared even, nonnegative and radially decreasing")]
    ProfileNotRadial(String),
    #[error("invalid profile parameter: {0}")]
    InvalidParameter(String),
    #[error("profile `{name}` fails its declared {property} at xi = {xi}")]
    FlagViolated {
        name: String,
        property: &'static str,
        xi: f64,
    },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Outer factor `f` in the `f(|ξ|)/√|ξ|` family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SqrtWeight {
    /// `e^{-|ξ|}`, which gives `example_profile`.
    Exp,
    /// `e^{-ξ²}`.
    Gaussian,
}

#[derive(Clone)]
enum Shape {
    OverSqrt(SqrtWeight),
    Gaussian { s: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// Declared qualitative properties of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProfileFlags {
    pub is_even: bool,
    pub is_radially_decreasing: bool,
    pub is_nonnegative: bool,
}

impl ProfileFlags {
    pub const RADIAL: ProfileFlags = ProfileFlags {
        is_even: true,
        is_radially_decreasing: true,
        is_nonnegative: true,
    };
}

#[derive(Clone)]
pub struct FrequencyProfile {
    name: String,
    shape: Shape,
    l1_norm: f64,
    flags: ProfileFlags,
    singularity_order: Option<f64>,
}

impl fmt::Debug for FrequencyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencyProfile")
            .field("name", &self.name)
            .field("l1_norm", &self.l1_norm)
            .field("flags", &self.flags)
            .field("singularity_order", &self.singularity_order)
            .finish()
    }
}

/// `û₀(ξ) = e^{-|ξ|}/√|ξ|`.
pub fn example_profile() -> FrequencyProfile {
    FrequencyProfile::over_sqrt(SqrtWeight::Exp)
}

/// `û₀(ξ) = e^{-sξ²}`.
pub fn gaussian_profile(s: f64) -> Result<FrequencyProfile, ProfileError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(ProfileError::InvalidParameter(format!(
            "Gaussian profile needs s > 0, got {s}"
        )));
    }
    Ok(FrequencyProfile {
        name: format!("gaussian(s={s})"),
        shape: Shape::Gaussian { s },
        l1_norm: (PI / s).sqrt(),
        flags: ProfileFlags::RADIAL,
        singularity_order: None,
    })
}

impl FrequencyProfile {
    /// `f(|ξ|)/√|ξ|` for a positive, radially decreasing, integrable `f`.
    pub fn over_sqrt(weight: SqrtWeight) -> Self {
        let (name, l1_norm) = match weight {
            SqrtWeight::Exp => ("example", 2.0 * PI.sqrt()),
            SqrtWeight::Gaussian => ("exp-sqrt(gaussian)", GAMMA_QUARTER),
        };
        FrequencyProfile {
            name: name.to_string(),
            shape: Shape::OverSqrt(weight),
            l1_norm,
            flags: ProfileFlags::RADIAL,
            singularity_order: Some(0.5),
        }
    }

    /// A user-supplied evaluator. The `L¹` norm is computed numerically.
    pub fn custom(
        name: impl Into<String>,
        eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        flags: ProfileFlags,
        singularity_order: Option<f64>,
        cfg: &QuadratureConfig,
    ) -> Result<Self, ProfileError> {
        let cfg = cfg.with_singularity(singularity_order);
        let l1_norm = quadrature::integrate_real_line(|xi| eval(xi).abs(), &cfg)?.value;
        Ok(FrequencyProfile {
            name: name.into(),
            shape: Shape::Custom(eval),
            l1_norm,
            flags,
            singularity_order,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, xi: f64) -> f64 {
        match &self.shape {
            Shape::OverSqrt(w) => {
                let a = xi.abs();
                let outer = match w {
                    SqrtWeight::Exp => (-a).exp(),
                    SqrtWeight::Gaussian => (-a * a).exp(),
                };
                outer / a.sqrt()
            }
            Shape::Gaussian { s } => (-s * xi * xi).exp(),
            Shape::Custom(f) => f(xi),
        }
    }

    /// `‖û₀‖_{L¹(ℝ)}`.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn flags(&self) -> ProfileFlags {
        self.flags
    }

    pub fn is_even(&self) -> bool {
        self.flags.is_even
    }

    pub fn is_radial(&self) -> bool {
        let f = self.flags;
        f.is_even && f.is_radially_decreasing && f.is_nonnegative
    }

    pub fn singularity_order(&self) -> Option<f64> {
        self.singularity_order
    }

    /// `u₀(x)` in physical space, where a closed form is known.
    pub fn physical(&self, x: f64) -> Option<f64> {
        match &self.shape {
            Shape::OverSqrt(SqrtWeight::Exp) => Some(example_inverse_transform(x)),
            Shape::Gaussian { s } => Some((PI / s).sqrt() * (-PI * PI * x * x / s).exp()),
            _ => None,
        }
    }

    /// Check the declared flags on a sample grid in `(0, radius]`.
    pub fn spot_check(&self, radius: f64, samples: usize) -> Result<(), ProfileError> {
        let violated = |property, xi| ProfileError::FlagViolated {
            name: self.name.clone(),
            property,
            xi,
        };
        let mut prev = f64::INFINITY;
        for i in 1..=samples {
            let xi = radius * i as f64 / samples as f64;
            let v = self.eval(xi);
            if self.flags.is_even {
                let w = self.eval(-xi);
                if (v - w).abs() > 1e-14 * v.abs().max(1.0) {
                    return Err(violated("evenness", xi));
                }
            }
            if self.flags.is_nonnegative && v < 0.0 {
                return Err(violated("nonnegativity", xi));
            }
            if self.flags.is_radially_decreasing && v > prev {
                return Err(violated("radial decrease", xi));
            }
            prev = v;
        }
        Ok(())
    }
}

/// The Fresnel cosine integral `C(x) = ∫_0^x cos(πt²/2) dt`.
///
/// Panels break at `t = √k`, where the phase crosses multiples of `π/2`.
/// `C` is odd, so negative arguments are reflected.
pub fn fresnel_c(x: f64) -> f64 {
    if x < 0.0 {
        return -fresnel_c(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    let mut breaks = vec![0.0];
    let mut k: f64 = 1.0;
    while k.sqrt() < x {
        breaks.push(k.sqrt());
        k += 1.0;
    }
    breaks.push(x);
    let cfg = QuadratureConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_subdivisions: 100_000,
        ..Default::default()
    };
    quadrature::integrate_with_breaks(|t| (0.5 * PI * t * t).cos(), &breaks, &cfg)
        .expect("Fresnel panels are smooth and single-signed")
        .value
}

/// `u₀ = ℱ⁻¹(e^{-|ξ|}/√|ξ|)` in closed form:
/// `√(2π)·√((√(1+4π²x²)+1)/(1+4π²x²))`.
pub fn example_inverse_transform(x: f64) -> f64 {
    let r2 = 1.0 + 4.0 * PI * PI * x * x;
    (2.0 * PI).sqrt() * ((r2.sqrt() + 1.0) / r2).sqrt()
}

/// Result of evaluating the positivity condition
/// `∫_0^{3/(4x)} û₀(ξ) cos(2πxξ) dξ > 0` on a set of points.
#[derive(Debug, Clone, Serialize)]
pub struct H2Report {
    pub x_values: Vec<f64>,
    pub integrals: Vec<f64>,
    pub all_positive: bool,
    /// `e^{-1/(4x)}·C(√3)/√x` per point; only known for `example_profile`.
    pub lower_bounds: Option<Vec<f64>>,
    pub above_lower_bounds: Option<bool>,
}

impl H2Report {
    /// Smallest `integral - bound` (or smallest integral when no bound is
    /// known).
    pub fn min_margin(&self) -> f64 {
        match &self.lower_bounds {
            Some(b) => self
                .integrals
                .iter()
                .zip(b)
                .map(|(i, b)| i - b)
                .fold(f64::INFINITY, f64::min),
            None => self.integrals.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// `∫_0^{3/(4x)} û₀(ξ) cos(2πxξ) dξ`, split at `1/(4x)`.
pub fn h2_integral(
    p: &FrequencyProfile,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, ProfileError> {
    if !(x > 0.0) {
        return Err(ProfileError::InvalidParameter(format!(
            "x must be positive, got {x}"
        )));
    }
    let cfg = cfg.with_singularity(p.singularity_order());
    let breaks = [0.0, 0.25 / x, 0.75 / x];
    let e = quadrature::integrate_with_breaks(
        |xi| p.eval(xi) * (2.0 * PI * x * xi).cos(),
        &breaks,
        &cfg,
    )?;
    Ok(e.value)
}

pub fn check_h2(
    p: &FrequencyProfile,
    xs: &[f64],
    cfg: &QuadratureConfig,
) -> Result<H2Report, ProfileError> {
    if !p.is_radial() {
        return Err(ProfileError::ProfileNotRadial(p.name().to_string()));
    }
    let integrals = xs
        .iter()
        .map(|&x| h2_integral(p, x, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let all_positive = integrals.iter().all(|&v| v > 0.0);

    let lower_bounds = matches!(p.shape, Shape::OverSqrt(SqrtWeight::Exp)).then(|| {
        let c = fresnel_c(3f64.sqrt());
        xs.iter()
            .map(|&x| (-0.25 / x).exp() * c / x.sqrt())
            .collect::<Vec<_>>()
    });
    let above_lower_bounds = lower_bounds
        .as_ref()
        .map(|b| integrals.iter().zip(b).all(|(i, b)| i > b));

    Ok(H2Report {
        x_values: xs.to_vec(),
        integrals,
        all_positive,
        lower_bounds,
        above_lower_bounds,
    })
}

/// `n` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
