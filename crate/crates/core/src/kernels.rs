//! Dispersal kernels `J`: nonnegative continuous probability densities with
//! their Fourier transforms `Ĵ(ξ) = ∫ J(x) e^{-2πixξ} dx`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::quadrature::{self, QuadratureConfig, QuadratureError};

/// Safety factor applied to the critical width in [`sigma_for_epsilon`].
pub const SIGMA_SAFETY: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("kernel density integrates to {mass}, not 1")]
    NotNormalized { mass: f64 },
    #[error("kernel density is negative at x = {x}")]
    Negative { x: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A density supplied as a function, with its transform tabulated on a
/// uniform frequency grid at construction time.
pub struct NumericKernel {
    density: DensityFn,
    support_radius: f64,
    xi_step: f64,
    cache: Vec<f64>,
    max_imag: f64,
}

impl fmt::Debug for NumericKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericKernel")
            .field("support_radius", &self.support_radius)
            .field("xi_step", &self.xi_step)
            .field("nodes", &self.cache.len())
            .field("max_imag", &self.max_imag)
            .finish()
    }
}

impl NumericKernel {
    /// Build a kernel from `density`, which must vanish (to quadrature
    /// tolerance) outside `[-support_radius, support_radius]`.
    ///
    /// `Ĵ` is tabulated on `[0, xi_max]` with step `1/(8·xi_max)` and read by
    /// linear interpolation; `|ξ| > xi_max` returns the last node.
    pub fn new(
        density: DensityFn,
        support_radius: f64,
        xi_max: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Self, KernelError> {
        if !(support_radius > 0.0) || !(xi_max > 0.0) {
            return Err(KernelError::DomainError(
                "support_radius and xi_max must be positive".into(),
            ));
        }
        let space_cfg = cfg
            .with_truncation_radius(support_radius)
            .with_singularity(None);

        for i in 0..=400 {
            let x = -support_radius + 2.0 * support_radius * i as f64 / 400.0;
            let v = density(x);
            if v < 0.0 || !v.is_finite() {
                return Err(KernelError::Negative { x });
            }
        }
        let mass = quadrature::integrate_real_line(|x| density(x), &space_cfg)?.value;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(KernelError::NotNormalized { mass });
        }

        let xi_step = 1.0 / (8.0 * xi_max);
        let nodes = (xi_max / xi_step).round() as usize + 1;
        let parts: Vec<Result<(f64, f64), QuadratureError>> = (0..nodes)
            .into_par_iter()
            .map(|j| {
                let xi = j as f64 * xi_step;
                let quarter = if xi > 0.0 { Some(0.25 / xi) } else { None };
                let breaks = match quarter {
                    Some(w) => quadrature::panel_breaks(-support_radius, support_radius, w),
                    None => vec![-support_radius, support_radius],
                };
                let re = quadrature::integrate_with_breaks(
                    |x| density(x) * (2.0 * PI * x * xi).cos(),
                    &breaks,
                    &space_cfg,
                )?;
                let im = quadrature::integrate_with_breaks(
                    |x| -density(x) * (2.0 * PI * x * xi).sin(),
                    &breaks,
                    &space_cfg,
                )?;
                Ok((re.value, im.value))
            })
            .collect();
        let mut cache = Vec::with_capacity(nodes);
        let mut max_imag: f64 = 0.0;
        for p in parts {
            let (re, im) = p?;
            cache.push(re);
            max_imag = max_imag.max(im.abs());
        }

        Ok(Self {
            density,
            support_radius,
            xi_step,
            cache,
            max_imag,
        })
    }

    pub fn density(&self, x: f64) -> f64 {
        (self.density)(x)
    }

    pub fn transform(&self, xi: f64) -> f64 {
        let pos = xi.abs() / self.xi_step;
        let last = self.cache.len() - 1;
        if pos >= last as f64 {
            return self.cache[last];
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.cache[i] * (1.0 - frac) + self.cache[i + 1] * frac
    }

    /// Largest `|Im Ĵ|` seen while tabulating; near zero for even densities.
    pub fn max_imag(&self) -> f64 {
        self.max_imag
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }
}

/// A convolution kernel: a nonnegative, continuous probability density.
#[derive(Debug, Clone)]
pub enum KernelSpec {
    /// Centred normal density with standard deviation `sigma`.
    Gaussian {
        sigma: f64,
    },
    NumericDensity(Arc<NumericKernel>),
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self, KernelError> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(KernelError::DomainError(format!(
                "Gaussian width must be positive, got {sigma}"
            )));
        }
        Ok(KernelSpec::Gaussian { sigma })
    }

    pub fn numeric(kernel: NumericKernel) -> Self {
        KernelSpec::NumericDensity(Arc::new(kernel))
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            KernelSpec::Gaussian { sigma } => {
                (-x * x / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
            }
            KernelSpec::NumericDensity(k) => k.density(x),
        }
    }

    /// `Ĵ(ξ)`; `e^{-2π²σ²ξ²}` for the Gaussian.
    pub fn transform(&self, xi: f64) -> f64 {
        match self {
            KernelSpec::Gaussian { sigma } => (-2.0 * PI * PI * sigma * sigma * xi * xi).exp(),
            KernelSpec::NumericDensity(k) => k.transform(xi),
        }
    }

    /// Radius outside which the density is negligible.
    pub fn effective_radius(&self) -> f64 {
        match self {
            KernelSpec::Gaussian { sigma } => 40.0 * sigma,
            KernelSpec::NumericDensity(k) => k.support_radius(),
        }
    }

    /// `∫_ℝ J`, which must be 1.
    pub fn total_mass(&self, cfg: &QuadratureConfig) -> Result<f64, KernelError> {
        let cfg = cfg
            .with_truncation_radius(self.effective_radius())
            .with_singularity(None);
        Ok(quadrature::integrate_real_line(|x| self.density(x), &cfg)?.value)
    }

    /// `Ĵ(ξ)` by direct quadrature of `∫ J(x) cos(2πxξ) dx`, independent of
    /// the closed form.
    pub fn transform_by_quadrature(
        &self,
        xi: f64,
        cfg: &QuadratureConfig,
    ) -> Result<f64, KernelError> {
        let cfg = cfg
            .with_truncation_radius(self.effective_radius())
            .with_singularity(None);
        let quarter = (xi != 0.0).then(|| 0.25 / xi.abs());
        let e = quadrature::integrate_real_line_even(
            |x| self.density(x) * (2.0 * PI * x * xi).cos(),
            quarter,
            &cfg,
        )?;
        Ok(e.value)
    }
}

/// Width of a Gaussian kernel whose transform exceeds `1 - eps` at `xi0`.
///
/// `e^{-2π²σ²ξ₀²} > 1 - ε` holds exactly when
/// `σ < √(-ln(1-ε)) / (√2·π·|ξ₀|)`; the returned width is
/// [`SIGMA_SAFETY`] times that critical value.
pub fn sigma_for_epsilon(xi0: f64, eps: f64) -> Result<f64, KernelError> {
    if xi0 == 0.0 || !xi0.is_finite() {
        return Err(KernelError::DomainError(format!(
            "frequency must be nonzero and finite, got {xi0}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(KernelError::DomainError(format!(
            "epsilon must lie in (0, 1), got {eps}"
        )));
    }
    let critical = (-(1.0 - eps).ln()).sqrt() / (2f64.sqrt() * PI * xi0.abs());
    let sigma = SIGMA_SAFETY * critical;
    debug_assert!(KernelSpec::Gaussian { sigma }.transform(xi0) > 1.0 - eps);
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_peak_values() {
        let k1 = KernelSpec::gaussian(1.0).unwrap();
        let k2 = KernelSpec::gaussian(2.0).unwrap();
        assert!((k1.density(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((k2.density(0.0) - 0.199_471_140_200_716_35).abs() < 1e-15);
    }

    #[test]
    fn gaussian_transform_values() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        assert_eq!(k.transform(0.0), 1.0);
        let expected = (-2.0 * PI * PI).exp();
        assert!((k.transform(1.0) - expected).abs() < 1e-20);
        assert!((k.transform(1.0) - 2.675e-9).abs() < 1e-12);
        assert_eq!(k.transform(0.7), k.transform(-0.7));
    }

    #[test]
    fn rejects_bad_width() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::gaussian(-1.0).is_err());
        assert!(KernelSpec::gaussian(f64::NAN).is_err());
    }

    #[test]
    fn sigma_for_epsilon_reference_value() {
        let sigma = sigma_for_epsilon(1.0, 0.5).unwrap();
        let expected = 0.99 * 2f64.ln().sqrt() / (2f64.sqrt() * PI);
        assert!((sigma - expected).abs() < 1e-15);
        assert!((sigma - 0.1856).abs() < 1e-4);
        assert!(KernelSpec::gaussian(sigma).unwrap().transform(1.0) > 0.5);
    }

    #[test]
    fn sigma_for_epsilon_grows_as_eps_approaches_one() {
        let mut prev = 0.0;
        for eps in [0.5, 0.9, 0.99, 0.999_999, 1.0 - 1e-15] {
            let s = sigma_for_epsilon(0.05, eps).unwrap();
            assert!(s > prev);
            prev = s;
        }
        assert!(prev > 25.0);
    }

    #[test]
    fn sigma_for_quarter_frequency() {
        let sigma = sigma_for_epsilon(0.25, 0.1).unwrap();
        assert!(KernelSpec::gaussian(sigma).unwrap().transform(0.25) > 0.9);
    }

    #[test]
    fn sigma_for_epsilon_domain() {
        assert!(sigma_for_epsilon(0.0, 0.5).is_err());
        assert!(sigma_for_epsilon(1.0, 0.0).is_err());
        assert!(sigma_for_epsilon(1.0, 1.0).is_err());
        assert!(sigma_for_epsilon(1.0, -0.2).is_err());
    }

    #[test]
    fn numeric_gaussian_matches_closed_form() {
        let cfg = QuadratureConfig::default();
        let sigma = 0.5;
        let density: DensityFn = Arc::new(move |x: f64| {
            (-x * x / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
        });
        let k = NumericKernel::new(density, 20.0 * sigma, 3.0, &cfg).unwrap();
        let exact = KernelSpec::gaussian(sigma).unwrap();
        assert!(k.max_imag() < 1e-10);
        // nodes are exact, between nodes linear interpolation
        for j in 0..10 {
            let xi = j as f64 / 24.0;
            assert!(
                (k.transform(xi) - exact.transform(xi)).abs() < 1e-9,
                "xi={xi}"
            );
        }
        let step = 1.0 / 24.0;
        let mid = 10.5 * step;
        assert!((k.transform(mid) - exact.transform(mid)).abs() < 1e-3);
        assert!((k.transform(-mid) - k.transform(mid)).abs() == 0.0);
    }

    #[test]
    fn numeric_kernel_rejects_unnormalised_density() {
        let cfg = QuadratureConfig::default();
        let density: DensityFn = Arc::new(|x: f64| 2.0 * (-x * x / 2.0).exp() / (2.0 * PI).sqrt());
        assert!(matches!(
            NumericKernel::new(density, 20.0, 1.0, &cfg),
            Err(KernelError::NotNormalized { .. })
        ));
        let density: DensityFn = Arc::new(|x: f64| x.abs() - 0.1);
        assert!(matches!(
            NumericKernel::new(density, 1.0, 1.0, &cfg),
            Err(KernelError::Negative { .. })
        ));
    }
}
