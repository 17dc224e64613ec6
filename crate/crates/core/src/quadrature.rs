//! One-dimensional adaptive quadrature.
//!
//! Every integral in the crate goes through this module. The engine is a
//! globally adaptive 7/15-point Gauss–Kronrod scheme: the initial panels are
//! given as breakpoints, and the panel with the largest error estimate is
//! bisected until the summed estimate meets `max(abs_tol, rel_tol·|I|)`.
//!
//! Two refinements sit on top of the engine:
//!
//! * an algebraic endpoint singularity `|ξ - a|^{-α}` at the left end of the
//!   first panel is removed with the substitution `ξ = a + s^p`, `p = 1/(1-α)`,
//!   which makes the transformed integrand bounded (for `α = 1/2` this is the
//!   familiar `ξ = s²`);
//! * oscillatory integrands of the form `g(ξ)·cos(2πxξ)` are split at the
//!   quarter-period points `k/(4x)`, so every panel sees a single-signed
//!   cosine.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Width of the leading interval that is integrated in the substituted
/// variable when an endpoint singularity is declared.
pub const SINGULAR_SPLIT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid interval: [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimated error {error:e}, target {target:e})"
    )]
    NonConvergence {
        subdivisions: usize,
        error: f64,
        target: f64,
    },
    #[error(
        "integrand magnitude {tail:e} at the truncation radius {radius} exceeds \
         abs_tol {abs_tol:e}; increase truncation_radius"
    )]
    TailTooFat {
        radius: f64,
        tail: f64,
        abs_tol: f64,
    },
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, QuadratureError>;

/// Tolerances, truncation and singularity policy shared by all integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Bisections allowed beyond the initial panels.
    pub max_subdivisions: usize,
    /// Integrals over the real line are computed on `[-Ξ, Ξ]`.
    pub truncation_radius: f64,
    /// Order `α` of an integrable `|ξ - a|^{-α}` singularity at the left
    /// endpoint.
    pub singularity_order: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-11,
            max_subdivisions: 20_000,
            truncation_radius: 50.0,
            singularity_order: None,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(QuadratureError::InvalidConfig(msg.to_string()));
        if !(self.abs_tol > 0.0) {
            return bad("abs_tol must be positive");
        }
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol must be positive");
        }
        if self.max_subdivisions < 1 {
            return bad("max_subdivisions must be at least 1");
        }
        if !(self.truncation_radius > 0.0) || !self.truncation_radius.is_finite() {
            return bad("truncation_radius must be positive and finite");
        }
        if let Some(alpha) = self.singularity_order {
            if !(alpha > 0.0 && alpha < 1.0) {
                return bad("singularity_order must lie in (0, 1)");
            }
        }
        Ok(())
    }

    pub fn with_singularity(mut self, order: Option<f64>) -> Self {
        self.singularity_order = order;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_truncation_radius(mut self, radius: f64) -> Self {
        self.truncation_radius = radius;
        self
    }
}

/// An integral value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;

    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

// Kronrod abscissae, descending, the last one is the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod_15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> Panel {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();

    let mut f1 = [0.0; 7];
    let mut f2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let lo = f(centre - dx);
        let hi = f(centre + dx);
        f1[j] = lo;
        f2[j] = hi;
        kronrod += WGK[j] * (lo + hi);
        abs_sum += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo + hi);
        }
    }

    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }

    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        error = f64::INFINITY;
    }

    Panel { a, b, value, error }
}

/// Globally adaptive Gauss–Kronrod over consecutive breakpoints.
fn adaptive<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<Estimate> {
    let mut heap = BinaryHeap::with_capacity(breaks.len() + 64);
    let mut total = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        let p = gauss_kronrod_15(f, w[0], w[1]);
        total += p.value;
        error += p.error;
        heap.push(p);
    }

    let mut subdivisions = 0;
    loop {
        let target = abs_tol.max(rel_tol * total.abs());
        if error <= target {
            break;
        }
        if subdivisions >= max_subdivisions {
            return Err(QuadratureError::NonConvergence {
                subdivisions,
                error,
                target,
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || !worst.error.is_finite() {
            return Err(QuadratureError::NonConvergence {
                subdivisions,
                error,
                target,
            });
        }
        let left = gauss_kronrod_15(f, worst.a, mid);
        let right = gauss_kronrod_15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;

        // Incremental error bookkeeping drifts; resynchronise occasionally.
        if subdivisions % 256 == 0 {
            error = heap.iter().map(|p| p.error).sum();
        }
    }

    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(Estimate {
        value: panels.iter().map(|p| p.value).sum(),
        error: panels.iter().map(|p| p.error).sum(),
    })
}

/// Breakpoints `a, k·w, …, b` with every multiple of `w` strictly inside
/// `(a, b)`.
pub fn panel_breaks(a: f64, b: f64, width: f64) -> Vec<f64> {
    let mut breaks = vec![a];
    if width > 0.0 && width.is_finite() {
        let mut k = (a / width).floor() + 1.0;
        loop {
            let p = k * width;
            if p >= b {
                break;
            }
            if p > a {
                breaks.push(p);
            }
            k += 1.0;
        }
    }
    breaks.push(b);
    breaks
}

/// Integrate over the panels `[breaks[i], breaks[i+1]]`.
///
/// A singularity declared in `cfg` is taken to sit at `breaks[0]`; the first
/// `min(SINGULAR_SPLIT, breaks[1] - breaks[0])` of the range is integrated in
/// the substituted variable.
pub fn integrate_with_breaks<F>(f: F, breaks: &[f64], cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if breaks.len() < 2 {
        let a = breaks.first().copied().unwrap_or(f64::NAN);
        return Err(QuadratureError::InvalidInterval { a, b: a });
    }
    for w in breaks.windows(2) {
        if !(w[0] < w[1]) || !w[0].is_finite() || !w[1].is_finite() {
            return Err(QuadratureError::InvalidInterval { a: w[0], b: w[1] });
        }
    }

    let Some(alpha) = cfg.singularity_order else {
        return adaptive(&f, breaks, cfg.abs_tol, cfg.rel_tol, cfg.max_subdivisions);
    };

    let a = breaks[0];
    let delta = SINGULAR_SPLIT.min(breaks[1] - a);
    let power = 1.0 / (1.0 - alpha);
    let substituted = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        power * s.powf(power - 1.0) * f(a + s.powf(power))
    };
    let s_max = delta.powf(1.0 / power);
    let half_tol = 0.5 * cfg.abs_tol;
    let head = adaptive(
        &substituted,
        &[0.0, s_max],
        half_tol,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )?;

    let mut rest = vec![a + delta];
    rest.extend(breaks.iter().copied().filter(|&p| p > a + delta));
    if rest.len() < 2 {
        return Ok(head);
    }
    let tail = adaptive(&f, &rest, half_tol, cfg.rel_tol, cfg.max_subdivisions)?;
    Ok(head + tail)
}

/// `∫_a^b f`, with the error estimate.
pub fn integrate_with_error<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    if !(a < b) {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    integrate_with_breaks(f, &[a, b], cfg)
}

/// `∫_a^b f`.
///
/// ```
/// use nonloc_core::quadrature::{integrate, QuadratureConfig};
/// let one = integrate(|_| 1.0, 0.0, 1.0, &QuadratureConfig::default()).unwrap();
/// assert!((one - 1.0).abs() < 1e-14);
/// ```
pub fn integrate<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_with_error(f, a, b, cfg).map(|e| e.value)
}

fn sampled_tail<F: Fn(f64) -> f64>(f: &F, radius: f64) -> f64 {
    (0..5)
        .map(|j| radius * (1.0 - 1e-3 * j as f64))
        .flat_map(|r| [f(r).abs(), f(-r).abs()])
        .fold(0.0, f64::max)
}

/// `∫_ℝ f`, computed on `[-Ξ, Ξ]` as two half-line integrals that start at
/// the origin (where a declared singularity is assumed to sit).
///
/// The reported error includes a tail bound `Ξ·max|f|` sampled near `±Ξ`.
pub fn integrate_real_line<F>(f: F, cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let radius = cfg.truncation_radius;
    let tail = sampled_tail(&f, radius);
    if tail > cfg.abs_tol {
        return Err(QuadratureError::TailTooFat {
            radius,
            tail,
            abs_tol: cfg.abs_tol,
        });
    }
    let right = integrate_with_breaks(&f, &[0.0, radius], cfg)?;
    let left = integrate_with_breaks(|s| f(-s), &[0.0, radius], cfg)?;
    Ok(Estimate {
        value: left.value + right.value,
        error: left.error + right.error + radius * tail,
    })
}

/// `∫_ℝ f` for an even integrand, as `2∫_0^Ξ f`.
///
/// When `quarter_period` is given the half line is split at its multiples,
/// which is how `g(ξ)·cos(2πxξ)` integrands are handled (`quarter_period =
/// 1/(4|x|)`).
pub fn integrate_real_line_even<F>(
    f: F,
    quarter_period: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let radius = cfg.truncation_radius;
    let tail = sampled_tail(&f, radius);
    if tail > cfg.abs_tol {
        return Err(QuadratureError::TailTooFat {
            radius,
            tail,
            abs_tol: cfg.abs_tol,
        });
    }
    let breaks = match quarter_period {
        Some(w) => panel_breaks(0.0, radius, w),
        None => vec![0.0, radius],
    };
    let half_cfg = QuadratureConfig {
        abs_tol: 0.5 * cfg.abs_tol,
        ..*cfg
    };
    let half = integrate_with_breaks(&f, &breaks, &half_cfg)?;
    Ok(Estimate {
        value: 2.0 * half.value,
        error: 2.0 * (half.error + radius * tail),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn midpoint<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn constant_integrand() {
        let v = integrate(|_| 1.0, 0.0, 1.0, &QuadratureConfig::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_or_reversed_interval() {
        let cfg = QuadratureConfig::default();
        assert!(matches!(
            integrate(|x| x, 1.0, 1.0, &cfg),
            Err(QuadratureError::InvalidInterval { .. })
        ));
        assert!(matches!(
            integrate(|x| x, 2.0, 1.0, &cfg),
            Err(QuadratureError::InvalidInterval { .. })
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = QuadratureConfig {
            singularity_order: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            integrate(|x| x, 0.0, 1.0, &cfg),
            Err(QuadratureError::InvalidConfig(_))
        ));
        let cfg = QuadratureConfig {
            abs_tol: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let cfg = QuadratureConfig {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_subdivisions: 3,
            ..Default::default()
        };
        let r = integrate(|x: f64| (1.0 / x).sin() / x.sqrt(), 1e-6, 1.0, &cfg);
        assert!(matches!(r, Err(QuadratureError::NonConvergence { .. })));
    }

    #[test]
    fn gamma_half_with_substitution() {
        // The substituted integrand is 2 e^{-s²}; the oracle integrates that
        // with a plain midpoint rule.
        let cfg = QuadratureConfig::default().with_singularity(Some(0.5));
        let v = integrate(|x: f64| (-x).exp() / x.sqrt(), 0.0, 50.0, &cfg).unwrap();
        let oracle = midpoint(|s: f64| 2.0 * (-s * s).exp(), 0.0, 50f64.sqrt(), 1_000_000);
        assert!((oracle - PI.sqrt()).abs() < 1e-9);
        assert!((v - PI.sqrt()).abs() < 1e-10, "{v}");
    }

    #[test]
    fn general_singularity_order() {
        // ∫_0^1 x^{-3/4} dx = 4
        let cfg = QuadratureConfig::default().with_singularity(Some(0.75));
        let v = integrate(|x: f64| x.powf(-0.75), 0.0, 1.0, &cfg).unwrap();
        assert!((v - 4.0).abs() < 1e-10);
    }

    #[test]
    fn fresnel_type_integral_at_unit_frequency() {
        // ∫_0^{3/4} cos(2πξ)/√ξ dξ; the Riemann oracle runs on the substituted
        // form 2∫_0^{√3/2} cos(2πs²) ds.
        let cfg = QuadratureConfig::default().with_singularity(Some(0.5));
        let v = integrate(|x: f64| (2.0 * PI * x).cos() / x.sqrt(), 0.0, 0.75, &cfg).unwrap();
        let oracle = midpoint(
            |s: f64| 2.0 * (2.0 * PI * s * s).cos(),
            0.0,
            0.75f64.sqrt(),
            1_000_000,
        );
        assert!(v > 0.0);
        assert!((v - oracle).abs() < 1e-10, "{v} vs {oracle}");
    }

    #[test]
    fn gaussian_density_on_real_line() {
        let cfg = QuadratureConfig::default().with_truncation_radius(10.0);
        let e =
            integrate_real_line(|x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt(), &cfg).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn singular_profile_on_real_line() {
        let cfg = QuadratureConfig::default().with_singularity(Some(0.5));
        let f = |x: f64| (-x.abs()).exp() / x.abs().sqrt();
        let e = integrate_real_line(f, &cfg).unwrap();
        assert!((e.value - 2.0 * PI.sqrt()).abs() < 1e-9);
        let even = integrate_real_line_even(f, None, &cfg).unwrap();
        assert!((even.value - e.value).abs() < 1e-12);
    }

    #[test]
    fn odd_integrand_vanishes() {
        let cfg = QuadratureConfig::default().with_truncation_radius(20.0);
        let e = integrate_real_line(|x: f64| x * (-x * x).exp(), &cfg).unwrap();
        assert!(e.value.abs() < cfg.abs_tol);
    }

    #[test]
    fn fat_tail_is_reported() {
        let cfg = QuadratureConfig::default().with_truncation_radius(5.0);
        let r = integrate_real_line(|x: f64| 1.0 / (1.0 + x * x), &cfg);
        assert!(matches!(r, Err(QuadratureError::TailTooFat { .. })));
    }

    #[test]
    fn quarter_period_breaks() {
        let b = panel_breaks(0.0, 1.0, 0.25);
        assert_eq!(b, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let b = panel_breaks(0.1, 0.6, 0.25);
        assert_eq!(b, vec![0.1, 0.25, 0.5, 0.6]);
        assert_eq!(panel_breaks(0.0, 1.0, 2.0), vec![0.0, 1.0]);
    }

    #[test]
    fn oscillatory_split_matches_closed_form() {
        // ∫_ℝ e^{-ξ²} cos(2πxξ) dξ = √π e^{-π²x²}
        let cfg = QuadratureConfig::default();
        for &x in &[0.3, 1.0, 2.5] {
            let e = integrate_real_line_even(
                |xi: f64| (-xi * xi).exp() * (2.0 * PI * x * xi).cos(),
                Some(0.25 / x),
                &cfg,
            )
            .unwrap();
            let exact = PI.sqrt() * (-PI * PI * x * x).exp();
            assert!((e.value - exact).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn refinement_never_moves_away_from_oracle() {
        let tests: Vec<Box<dyn Fn(f64) -> f64>> = vec![
            Box::new(|x: f64| (40.0 * x).cos() * (-x).exp()),
            Box::new(|x: f64| 1.0 / (1.0 + 25.0 * x * x)),
            Box::new(|x: f64| (x * x * 30.0).sin()),
        ];
        for f in &tests {
            let oracle = midpoint(f, 0.0, 1.0, 1_000_000);
            let mut prev = f64::INFINITY;
            let mut tol = 1e-3;
            for _ in 0..8 {
                let cfg = QuadratureConfig {
                    abs_tol: tol,
                    rel_tol: 1e-300,
                    ..Default::default()
                };
                let dev = (integrate(f, 0.0, 1.0, &cfg).unwrap() - oracle).abs();
                // the oracle itself is good to about 1e-11
                assert!(dev <= prev + 1e-11, "tol {tol}: {dev} > {prev}");
                prev = dev;
                tol *= 0.5;
            }
        }
    }
}
