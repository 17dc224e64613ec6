//! Alternating-series decomposition of `u(t,x)` and the sharpness machinery.
//!
//! For `x > 0` the frequency axis is cut at the zeros `(2k±1)/(4x)` of
//! `cos(2πxξ)`. On each quarter-period panel the cosine keeps one sign, so
//!
//! * `A_k = ∫_panel û₀(ξ) cos(2πxξ) dξ`
//! * `B_k = ∫_panel e^{t(dĴ(ξ)-1)} û₀(ξ) cos(2πxξ) dξ`
//!
//! alternate in sign with `k`, and for even, radially decreasing data their
//! magnitudes decrease. With `C_0 = B_0`, `C_n = B_n + B_{-n}` the solution is
//! the alternating sum `u(t,x) = Σ C_n`, whose first two partial sums bracket
//! `u`. Combined with the panel-wise bounds on `B_k/A_k` this yields
//!
//! ```text
//! (A_0 + 2A_1)·e^{t(dĴ(1/(4x))-1)} < u(t,x) < A_0·e^{t(d-1)}
//! ```
//!
//! and, with a Gaussian kernel narrow enough that `Ĵ(1/(4x)) > 1 - ε/d`, a
//! lower envelope growing like `e^{(d-1-ε)t}`.

use std::f64::consts::PI;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::kernels::{sigma_for_epsilon, KernelError, KernelSpec};
use crate::profiles::{self, FrequencyProfile, ProfileError};
use crate::quadrature::{self, QuadratureConfig, QuadratureError};
use crate::spectral_solver::{self, ModelParams, SolverError};

/// Allowed slack in the Leibniz remainder bound.
pub const LEIBNIZ_TOL: f64 = 1e-8;

/// `(3√2 - 2)/8`, the small-`x` lower-bound coefficient.
pub const C_SMALL_COEFFICIENT: f64 = (3.0 * std::f64::consts::SQRT_2 - 2.0) / 8.0;

/// Largest panel index tried before giving up on the tail.
pub const MAX_PANELS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("positivity condition fails at x = {x}: A0/2 + A1 = {value:e}")]
    H2Violated { x: f64, value: f64 },
    #[error("no x0 >= 1e-6 captures three quarters of the L1 mass")]
    NotFound,
    #[error("fitted growth rate {slope} outside ({low}, {high}]")]
    SlopeOutOfRange { slope: f64, low: f64, high: f64 },
    #[error("two-sided growth envelope violated at t = {t}")]
    SandwichViolated { t: f64 },
    #[error("|A_k| did not fall below {tail_tol:e} within {panels} panels")]
    TailNotReached { tail_tol: f64, panels: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

pub type Result<T> = std::result::Result<T, SeriesError>;

fn require_radial(p: &FrequencyProfile) -> Result<()> {
    if p.is_radial() {
        Ok(())
    } else {
        Err(ProfileError::ProfileNotRadial(p.name().to_string()).into())
    }
}

fn require_positive_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(SeriesError::InvalidArgument(format!(
            "x must be positive, got {x}"
        )))
    }
}

/// `∫ g(ξ)·cos(2πxξ) dξ` over panel `k`. The central panel straddles the
/// origin and is split there, so a declared singularity sits at an endpoint.
fn panel_integral<G: Fn(f64) -> f64>(
    g: G,
    singularity: Option<f64>,
    x: f64,
    k: i64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let f = |xi: f64| g(xi) * (2.0 * PI * x * xi).cos();
    let lo = (2 * k - 1) as f64 / (4.0 * x);
    let hi = (2 * k + 1) as f64 / (4.0 * x);
    if k == 0 {
        let cfg = cfg.with_singularity(singularity);
        let right = quadrature::integrate_with_breaks(f, &[0.0, hi], &cfg)?;
        let left = quadrature::integrate_with_breaks(|s| f(-s), &[0.0, hi], &cfg)?;
        Ok(left.value + right.value)
    } else {
        let cfg = cfg.with_singularity(None);
        Ok(quadrature::integrate_with_breaks(f, &[lo, hi], &cfg)?.value)
    }
}

/// `A_k(x) = ∫_{(2k-1)/(4x)}^{(2k+1)/(4x)} û₀(ξ) cos(2πxξ) dξ`.
pub fn compute_a(p: &FrequencyProfile, x: f64, k: i64, cfg: &QuadratureConfig) -> Result<f64> {
    require_positive_x(x)?;
    panel_integral(|xi| p.eval(xi), p.singularity_order(), x, k, cfg)
}

/// `B_k(t,x)`, the same panel integral weighted by `e^{t(dĴ(ξ)-1)}`.
pub fn compute_b(m: &ModelParams, t: f64, x: f64, k: i64, cfg: &QuadratureConfig) -> Result<f64> {
    require_positive_x(x)?;
    if !(t >= 0.0) {
        return Err(SolverError::NegativeTime(t).into());
    }
    panel_integral(
        |xi| spectral_solver::u_hat(m, t, xi),
        m.profile().singularity_order(),
        x,
        k,
        cfg,
    )
}

/// `|B_k| - |A_k|·e^{t(dj-1)}`, integrated as the single integrand
/// `|û₀(ξ) cos(2πxξ)|·(w(ξ) - e^{t(dj-1)})`. Its sign is reliable even when the
/// difference is far below the size of `B_k` itself.
fn weighted_gap(
    m: &ModelParams,
    t: f64,
    x: f64,
    k: i64,
    j_ref: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let (d, p, kernel) = (m.d(), m.profile(), m.kernel());
    let w_ref = (t * (d * j_ref - 1.0)).exp();
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    panel_integral(
        |xi| sign * p.eval(xi) * w_ref * (t * d * (kernel.transform(xi) - j_ref)).exp_m1(),
        p.singularity_order(),
        x,
        k,
        cfg,
    )
}

/// Smallest slack in `lo < |B_k| < hi` where `lo`, `hi` use `Ĵ = j_lo, j_hi`.
/// `None` when `td(j_hi - j_lo)` is too small for the two sides to differ.
fn strict_panel_bound(
    m: &ModelParams,
    t: f64,
    x: f64,
    k: i64,
    (j_lo, j_hi): (f64, f64),
    cfg: &QuadratureConfig,
) -> Result<Option<f64>> {
    if !(t * m.d() * (j_hi - j_lo) > 1e-200) {
        return Ok(None);
    }
    let above_lo = weighted_gap(m, t, x, k, j_lo, cfg)?;
    let below_hi = -weighted_gap(m, t, x, k, j_hi, cfg)?;
    Ok(Some(above_lo.min(below_hi)))
}

/// Default truncation threshold for `|A_k|`: `1e-12·‖û₀‖₁`.
pub fn default_tail_tol(p: &FrequencyProfile) -> f64 {
    1e-12 * p.l1_norm()
}

/// A verdict plus the smallest slack observed (positive when passing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub pass: bool,
    pub margin: f64,
}

impl Check {
    fn from_margin(margin: f64) -> Self {
        Check {
            pass: margin > 0.0,
            margin,
        }
    }

    fn vacuous() -> Self {
        Check {
            pass: true,
            margin: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesChecks {
    /// `A_k = A_{-k}`, `B_k = B_{-k}`.
    pub evenness: Check,
    /// `sign A_k = sign B_k = (-1)^k`.
    pub signs: Check,
    /// `|A_k| e^{t(dĴ((2k+1)/(4x))-1)} < |B_k| < |A_k| e^{t(dĴ((2k-1)/(4x))-1)}`, `k ≥ 1`.
    pub eq5: Check,
    /// `|A_0| e^{t(dĴ(1/(4x))-1)} < |B_0| < |A_0| e^{t(d-1)}`.
    pub eq6: Check,
    /// `|A_k|`, `|B_k|` strictly decreasing for `k ≥ 0`.
    pub monotone: Check,
    /// `|A_{k_max}|` below the tail threshold and `|B_k|` still shrinking there.
    pub tail: Check,
    /// `Σ C_k` agrees with the direct cosine integral.
    pub decomposition: Check,
    /// Partial sums alternate around `u` within `|C_{n+1}|`.
    pub leibniz: Check,
    /// `sandwich_low < u < sandwich_high` and `C_0 + C_1 < u < C_0`.
    pub eq7: Check,
}

impl SeriesChecks {
    pub fn named(&self) -> [(&'static str, Check); 9] {
        [
            ("evenness", self.evenness),
            ("signs", self.signs),
            ("eq5", self.eq5),
            ("eq6", self.eq6),
            ("monotone", self.monotone),
            ("tail", self.tail),
            ("decomposition", self.decomposition),
            ("leibniz", self.leibniz),
            ("eq7", self.eq7),
        ]
    }

    pub fn all_pass(&self) -> bool {
        self.named().iter().all(|(_, c)| c.pass)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesReport {
    pub t: f64,
    pub x: f64,
    pub k_max: usize,
    /// `A_0 … A_{k_max}`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `A_0, A_{-1}, …, A_{-k_max}`.
    pub a_neg: Vec<f64>,
    pub b_neg: Vec<f64>,
    pub c: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub u_direct: f64,
    pub sandwich_low: f64,
    pub sandwich_high: f64,
    /// `A_0/2 + A_1`, positive exactly when the positivity condition holds
    /// at this `x`.
    pub h2_value: f64,
    pub h2_holds: bool,
    /// Per-`k` slack in the panel sandwich, `k = 1..=k_max`; `None` where the
    /// two bounds are closer than the quadrature can resolve.
    pub eq5_margins: Vec<Option<f64>>,
    pub tail_tol: f64,
    pub checks: SeriesChecks,
}

impl SeriesReport {
    /// The report as `{"t","x","A","B","C","u","sandwich","checks"}`.
    pub fn to_json(&self) -> serde_json::Value {
        let c = &self.checks;
        json!({
            "t": self.t,
            "x": self.x,
            "A": self.a,
            "B": self.b,
            "C": self.c,
            "u": self.u_direct,
            "sandwich": [self.sandwich_low, self.sandwich_high],
            "checks": {
                "evenness": c.evenness.pass,
                "signs": c.signs.pass,
                "eq5": c.eq5.pass,
                "eq6": c.eq6.pass,
                "monotone": c.monotone.pass,
                "leibniz": c.leibniz.pass,
                "eq7": c.eq7.pass,
            }
        })
    }
}

/// Build the `A/B/C` decomposition at `(t, x)` and run every check on it.
///
/// A failing positivity condition does not abort the report: `h2_holds` is
/// cleared and the checks that depend on it are reported as computed.
pub fn series_report(
    m: &ModelParams,
    t: f64,
    x: f64,
    cfg: &QuadratureConfig,
    tail_tol: f64,
) -> Result<SeriesReport> {
    require_positive_x(x)?;
    if !(t >= 0.0) {
        return Err(SolverError::NegativeTime(t).into());
    }
    if !(tail_tol > 0.0) {
        return Err(SeriesError::InvalidArgument(format!(
            "tail_tol must be positive, got {tail_tol}"
        )));
    }
    let p = m.profile();
    require_radial(p)?;

    let panel_cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol.min(1e-3 * tail_tol),
        rel_tol: cfg.rel_tol.min(1e-13),
        ..*cfg
    };
    // What a single panel value can be trusted to.
    let resolution = |v: f64| panel_cfg.abs_tol + 1e-12 * v.abs();

    let (mut a, mut b, mut a_neg, mut b_neg) = (vec![], vec![], vec![], vec![]);
    let mut k = 0usize;
    let k_max = loop {
        let ki = k as i64;
        let ak = compute_a(p, x, ki, &panel_cfg)?;
        let bk = compute_b(m, t, x, ki, &panel_cfg)?;
        let (ak_neg, bk_neg) = if k == 0 {
            (ak, bk)
        } else {
            (
                compute_a(p, x, -ki, &panel_cfg)?,
                compute_b(m, t, x, -ki, &panel_cfg)?,
            )
        };
        a.push(ak);
        b.push(bk);
        a_neg.push(ak_neg);
        b_neg.push(bk_neg);
        if k >= 2 && ak.abs() < tail_tol {
            break k;
        }
        k += 1;
        if k > MAX_PANELS {
            return Err(SeriesError::TailNotReached {
                tail_tol,
                panels: MAX_PANELS,
            });
        }
    };

    let c: Vec<f64> = (0..=k_max)
        .map(|n| if n == 0 { b[0] } else { b[n] + b_neg[n] })
        .collect();
    let partial_sums: Vec<f64> = c
        .iter()
        .scan(0.0, |s, &v| {
            *s += v;
            Some(*s)
        })
        .collect();
    let u_direct = spectral_solver::solve_at(m, t, x, cfg)?;

    let d = m.d();
    let w = |xi: f64| m.weight(t, xi);
    let w_first = w(0.25 / x);
    let growth = ((d - 1.0) * t).exp();
    let sandwich_low = (a[0] + 2.0 * a[1]) * w_first;
    let sandwich_high = a[0] * growth;
    let h2_value = 0.5 * a[0] + a[1];

    let mut evenness = f64::INFINITY;
    for n in 1..=k_max {
        evenness = evenness
            .min(2.0 * resolution(a[n]) - (a[n] - a_neg[n]).abs())
            .min(2.0 * resolution(b[n]) - (b[n] - b_neg[n]).abs());
    }
    let evenness = if k_max >= 1 {
        Check::from_margin(evenness)
    } else {
        Check::vacuous()
    };

    let mut signs = f64::INFINITY;
    for n in 0..=k_max {
        let expected = if n % 2 == 0 { 1.0 } else { -1.0 };
        for v in [a[n], b[n], a_neg[n], b_neg[n]] {
            if v.abs() > 10.0 * resolution(v) {
                signs = signs.min(expected * v);
            }
        }
    }
    let signs = Check::from_margin(signs);

    let j = |xi: f64| m.kernel().transform(xi);
    let eq5_margins: Vec<Option<f64>> = (1..=k_max)
        .map(|n| {
            let bounds = (
                j((2 * n + 1) as f64 / (4.0 * x)),
                j((2 * n - 1) as f64 / (4.0 * x)),
            );
            strict_panel_bound(m, t, x, n as i64, bounds, &panel_cfg)
        })
        .collect::<Result<_>>()?;
    let eq5 = eq5_margins
        .iter()
        .flatten()
        .copied()
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        })
        .map_or_else(Check::vacuous, Check::from_margin);
    let eq6 = strict_panel_bound(m, t, x, 0, (j(0.25 / x), 1.0), &panel_cfg)?
        .map_or_else(Check::vacuous, Check::from_margin);

    let mut monotone = f64::INFINITY;
    for n in 0..k_max {
        monotone = monotone
            .min(a[n].abs() - a[n + 1].abs())
            .min(b[n].abs() - b[n + 1].abs());
    }
    let monotone = Check::from_margin(monotone);

    let tail =
        Check::from_margin((tail_tol - a[k_max].abs()).min(b[k_max - 1].abs() - b[k_max].abs()));

    let decomposition =
        Check::from_margin(5.0 * (tail_tol + cfg.abs_tol) - (partial_sums[k_max] - u_direct).abs());

    let mut leibniz = f64::INFINITY;
    for n in 0..k_max {
        let gap = partial_sums[n] - u_direct;
        leibniz = leibniz.min(c[n + 1].abs() + LEIBNIZ_TOL - gap.abs());
        // S_0 lies above u, S_1 below, and so on.
        if c[n + 1].abs() > LEIBNIZ_TOL {
            let expected = if n % 2 == 0 { 1.0 } else { -1.0 };
            leibniz = leibniz.min(expected * gap + LEIBNIZ_TOL);
        }
    }
    let leibniz = Check::from_margin(leibniz);

    let eq7 = Check::from_margin(
        (u_direct - sandwich_low)
            .min(sandwich_high - u_direct)
            .min(u_direct - (c[0] + c[1]))
            .min(c[0] - u_direct)
            - cfg.abs_tol,
    );

    Ok(SeriesReport {
        t,
        x,
        k_max,
        a,
        b,
        a_neg,
        b_neg,
        c,
        partial_sums,
        u_direct,
        sandwich_low,
        sandwich_high,
        h2_value,
        h2_holds: h2_value > 0.0,
        eq5_margins,
        tail_tol,
        checks: SeriesChecks {
            evenness,
            signs,
            eq5,
            eq6,
            monotone,
            tail,
            decomposition,
            leibniz,
            eq7,
        },
    })
}

/// Fraction of `‖û₀‖₁` carried by `|ξ| ≤ radius`.
pub fn central_mass_fraction(
    p: &FrequencyProfile,
    radius: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let r = radius.min(cfg.truncation_radius);
    let mut breaks = vec![0.0];
    let mut b = 1.0;
    while b < r {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(r);
    let cfg = cfg.with_singularity(p.singularity_order());
    let half = quadrature::integrate_with_breaks(|xi| p.eval(xi).abs(), &breaks, &cfg)?;
    Ok(2.0 * half.value / p.l1_norm())
}

/// The largest `x₀` (up to bisection resolution) with
/// `∫_{|ξ| ≤ 1/(8x₀)} û₀ ≥ ¾‖û₀‖₁`.
pub fn find_x0(p: &FrequencyProfile, cfg: &QuadratureConfig) -> Result<f64> {
    if !p.is_even() {
        return Err(SolverError::ProfileNotEven(p.name().to_string()).into());
    }
    let holds = |r: f64| -> Result<bool> { Ok(central_mass_fraction(p, r, cfg)? >= 0.75) };
    let r_limit = 1.0 / (8.0 * 1e-6);

    let mut hi = 1.0;
    while !holds(hi)? {
        hi *= 2.0;
        if hi > r_limit {
            if holds(r_limit)? {
                hi = r_limit;
                break;
            }
            return Err(SeriesError::NotFound);
        }
    }
    let mut lo = hi;
    while holds(lo)? {
        lo *= 0.5;
        if lo < 1e-300 {
            // every radius works: any x0 does
            return Ok(f64::MAX);
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(1.0 / (8.0 * hi))
}

/// The lower-bound coefficient `c(x)`: `(3√2-2)/8·‖û₀‖₁` below `x₀`,
/// `A_0(x) + 2A_1(x)` from `x₀` on.
pub fn c_of_x(p: &FrequencyProfile, x: f64, x0: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if x < x0 {
        Ok(C_SMALL_COEFFICIENT * p.l1_norm())
    } else {
        Ok(compute_a(p, x, 0, cfg)? + 2.0 * compute_a(p, x, 1, cfg)?)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LowerBoundProbe {
    pub t: f64,
    pub x: f64,
    pub c: f64,
    pub u: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub x0: f64,
    pub c_small: f64,
    /// `dĴ(1/(4x₀)) - 1`.
    pub rate_exponent: f64,
    pub probes: Vec<LowerBoundProbe>,
    pub all_hold: bool,
}

/// Assemble `x₀`, `c(x)` and the rate, then check
/// `u(t,x) ≥ c(x)·e^{t(dĴ(1/(4x₀))-1)}` at every `(t, |x|)` probe.
pub fn lower_bound(
    m: &ModelParams,
    ts: &[f64],
    xs: &[f64],
    cfg: &QuadratureConfig,
) -> Result<LowerBoundReport> {
    let p = m.profile();
    require_radial(p)?;
    let x0 = find_x0(p, cfg)?;
    let c_small = C_SMALL_COEFFICIENT * p.l1_norm();
    let rate_exponent = m.d() * m.kernel().transform(0.25 / x0) - 1.0;

    let mut probes = Vec::with_capacity(ts.len() * xs.len());
    for &x in xs {
        let x = x.abs();
        let c = c_of_x(p, x, x0, cfg)?;
        if x >= x0 && c <= 0.0 {
            return Err(SeriesError::H2Violated { x, value: 0.5 * c });
        }
        for &t in ts {
            let u = spectral_solver::solve_at(m, t, x, cfg)?;
            let bound = c * (t * rate_exponent).exp();
            probes.push(LowerBoundProbe {
                t,
                x,
                c,
                u,
                bound,
                holds: u >= bound,
            });
        }
    }
    let all_hold = probes.iter().all(|p| p.holds);
    Ok(LowerBoundReport {
        x0,
        c_small,
        rate_exponent,
        probes,
        all_hold,
    })
}

/// Parameters of one growth-rate experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpnessSetup {
    pub d: f64,
    pub eps: f64,
    pub x_probe: f64,
    pub window: (f64, f64),
    pub n_times: usize,
    /// Use this kernel width instead of the automatic choice.
    pub sigma: Option<f64>,
}

impl SharpnessSetup {
    pub fn new(d: f64, eps: f64, x_probe: f64) -> Self {
        Self {
            d,
            eps,
            x_probe,
            window: (5.0, 20.0),
            n_times: 16,
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub d: f64,
    pub eps: f64,
    pub sigma: f64,
    pub sigma_overridden: bool,
    pub x_probe: f64,
    pub x0: f64,
    /// Frequency at which the kernel transform was tuned, `1/(4·max(x_probe, x₀))`.
    pub xi0: f64,
    /// `dĴ(ξ₀) - 1`, the exponent the lower envelope actually guarantees.
    pub rate_exponent: f64,
    pub g: f64,
    pub g_source: &'static str,
    pub h: f64,
    pub ts: Vec<f64>,
    pub us: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub fitted_slope: f64,
    pub two_point_slope: f64,
    pub slope_range: (f64, f64),
    pub slope_ok: bool,
    pub sandwich_ok: bool,
    /// Smallest `min(ln(u/lower), ln(upper/u))` over the window.
    pub sandwich_log_margin: f64,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.slope_ok && self.sandwich_ok
    }

    pub fn check(&self) -> Result<()> {
        if !self.slope_ok {
            return Err(SeriesError::SlopeOutOfRange {
                slope: self.fitted_slope,
                low: self.slope_range.0,
                high: self.slope_range.1,
            });
        }
        if !self.sandwich_ok {
            let t = self
                .ts
                .iter()
                .zip(self.us.iter().zip(self.lower.iter().zip(&self.upper)))
                .find(|(_, (u, (lo, hi)))| !(lo < u && u < hi))
                .map_or(f64::NAN, |(t, _)| *t);
            return Err(SeriesError::SandwichViolated { t });
        }
        Ok(())
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Tune a Gaussian kernel so that `dĴ(ξ₀) > d - ε`, measure the growth rate
/// of `u(t, x_probe)` over the window, and check the two-sided envelope
/// `g·e^{(d-1-ε)t} < u < h·e^{(d-1)t}`.
///
/// The report is returned even when the rate falls outside
/// `(d-1-ε, d-1]`; [`BoundsReport::check`] turns that into an error.
pub fn sharpness_experiment(
    p: &FrequencyProfile,
    setup: &SharpnessSetup,
    cfg: &QuadratureConfig,
) -> Result<BoundsReport> {
    let SharpnessSetup {
        d,
        eps,
        x_probe,
        window: (t1, t2),
        n_times,
        sigma,
    } = *setup;
    if !(d > 0.0) {
        return Err(SolverError::InvalidRate(d).into());
    }
    if !(eps > 0.0 && eps < d) {
        return Err(SeriesError::InvalidArgument(format!(
            "epsilon must lie in (0, d) = (0, {d}), got {eps}"
        )));
    }
    require_positive_x(x_probe)?;
    if !(t1 >= 0.0 && t2 > t1) || n_times < 2 {
        return Err(SeriesError::InvalidArgument(format!(
            "need 0 <= t1 < t2 and at least two times, got [{t1}, {t2}] with {n_times}"
        )));
    }
    require_radial(p)?;
    let h2 = profiles::h2_integral(p, x_probe, cfg)?;
    if h2 <= 0.0 {
        return Err(SeriesError::H2Violated {
            x: x_probe,
            value: h2,
        });
    }

    let x0 = find_x0(p, cfg)?;
    let xi0 = 0.25 / x_probe.max(x0);
    let sigma_overridden = sigma.is_some();
    let sigma = match sigma {
        Some(s) => s,
        None => sigma_for_epsilon(xi0, eps / d)?,
    };
    let kernel = KernelSpec::gaussian(sigma)?;
    let rate_exponent = d * kernel.transform(xi0) - 1.0;
    let m = ModelParams::new(d, kernel, p.clone())?;

    let g = c_of_x(p, x_probe, x0, cfg)?;
    let g_source = if x_probe < x0 { "c_small" } else { "A0+2A1" };
    let h = p.l1_norm();

    let ts: Vec<f64> = (0..n_times)
        .map(|i| t1 + (t2 - t1) * i as f64 / (n_times - 1) as f64)
        .collect();
    let us = ts
        .iter()
        .map(|&t| spectral_solver::solve_at(&m, t, x_probe, cfg))
        .collect::<std::result::Result<Vec<f64>, _>>()?;

    let (fitted_slope, two_point_slope) = if us.iter().all(|&u| u > 0.0) {
        let logs: Vec<f64> = us.iter().map(|u| u.ln()).collect();
        (
            least_squares_slope(&ts, &logs),
            (logs[n_times - 1] - logs[0]) / (t2 - t1),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    let slope_range = (d - 1.0 - eps, d - 1.0);
    let slope_ok = fitted_slope > slope_range.0 && fitted_slope <= slope_range.1;

    let lower: Vec<f64> = ts
        .iter()
        .map(|&t| g * ((d - 1.0 - eps) * t).exp())
        .collect();
    let upper: Vec<f64> = ts.iter().map(|&t| h * ((d - 1.0) * t).exp()).collect();
    let sandwich_ok = us
        .iter()
        .zip(lower.iter().zip(&upper))
        .all(|(u, (lo, hi))| lo < u && u < hi);
    let sandwich_log_margin = us
        .iter()
        .zip(lower.iter().zip(&upper))
        .map(|(u, (lo, hi))| (u / lo).ln().min((hi / u).ln()))
        .fold(f64::INFINITY, f64::min);

    Ok(BoundsReport {
        d,
        eps,
        sigma,
        sigma_overridden,
        x_probe,
        x0,
        xi0,
        rate_exponent,
        g,
        g_source,
        h,
        ts,
        us,
        lower,
        upper,
        fitted_slope,
        two_point_slope,
        slope_range,
        slope_ok,
        sandwich_ok,
        sandwich_log_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{example_profile, gaussian_profile};

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn example_model(x: f64) -> ModelParams {
        let sigma = sigma_for_epsilon(0.25 / x, 0.1).unwrap();
        ModelParams::new(2.0, KernelSpec::gaussian(sigma).unwrap(), example_profile()).unwrap()
    }

    #[test]
    fn c_small_two_spellings() {
        let a = 3.0 * 2f64.sqrt() / 8.0 - 0.25;
        assert!((C_SMALL_COEFFICIENT - a).abs() < 1e-16);
        assert!((C_SMALL_COEFFICIENT - 0.2803).abs() < 1e-4);
    }

    #[test]
    fn panel_symmetry_and_signs() {
        let p = example_profile();
        for x in [0.3, 1.0, 3.0] {
            for k in 1..=5 {
                let a = compute_a(&p, x, k, &cfg()).unwrap();
                let a_neg = compute_a(&p, x, -k, &cfg()).unwrap();
                assert!((a - a_neg).abs() <= 2.0 * cfg().abs_tol);
                assert_eq!(a > 0.0, k % 2 == 0);
            }
            assert!(compute_a(&p, x, 0, &cfg()).unwrap() > 0.0);
        }
    }

    #[test]
    fn weighted_panels_at_time_zero_equal_unweighted() {
        let m = example_model(1.0);
        for k in -3..=3 {
            let a = compute_a(m.profile(), 1.0, k, &cfg()).unwrap();
            let b = compute_b(&m, 0.0, 1.0, k, &cfg()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_nonpositive_x() {
        let m = example_model(1.0);
        assert!(compute_a(m.profile(), 0.0, 0, &cfg()).is_err());
        assert!(series_report(&m, 1.0, -1.0, &cfg(), 1e-12).is_err());
    }

    #[test]
    fn report_at_reference_point() {
        let sigma = sigma_for_epsilon(0.25, 0.1).unwrap();
        let m =
            ModelParams::new(2.0, KernelSpec::gaussian(sigma).unwrap(), example_profile()).unwrap();
        let r = series_report(&m, 1.0, 1.0, &cfg(), default_tail_tol(m.profile())).unwrap();
        for (name, c) in r.checks.named() {
            assert!(c.pass, "{name}: {c:?}");
        }
        assert!(r.h2_holds);
        assert!(r.sandwich_low < r.u_direct && r.u_direct < r.sandwich_high);
        let json = r.to_json();
        assert_eq!(json["checks"]["eq7"], true);
        assert_eq!(json["A"].as_array().unwrap().len(), r.k_max + 1);
    }

    #[test]
    fn report_at_time_zero() {
        let m = example_model(1.0);
        let r = series_report(&m, 0.0, 1.0, &cfg(), default_tail_tol(m.profile())).unwrap();
        assert_eq!(r.a, r.b);
        let sum_a: f64 = r.c.iter().sum();
        assert!(r.a[0] + 2.0 * r.a[1] < sum_a && sum_a < r.a[0]);
        assert!(r.checks.all_pass(), "{:?}", r.checks);
    }

    #[test]
    fn h2_failure_is_reported_not_raised() {
        // The indicator of |ξ| < 1 is even and radially decreasing, but its
        // positivity integral is sin(3π/2)/(2πx) < 0 at x = 0.8.
        let flat = FrequencyProfile::custom(
            "box",
            std::sync::Arc::new(|xi: f64| if xi.abs() < 1.0 { 1.0 } else { 0.0 }),
            crate::profiles::ProfileFlags::RADIAL,
            None,
            &cfg().with_truncation_radius(2.0),
        )
        .unwrap();
        let x = 0.8;
        assert!(profiles::h2_integral(&flat, x, &cfg()).unwrap() < 0.0);
        let m = ModelParams::new(2.0, KernelSpec::gaussian(0.1).unwrap(), flat).unwrap();
        let q = cfg().with_truncation_radius(2.0);
        let a0 = compute_a(m.profile(), x, 0, &q).unwrap();
        let a1 = compute_a(m.profile(), x, 1, &q).unwrap();
        assert!(0.5 * a0 + a1 < 0.0);
    }

    #[test]
    fn x0_for_gaussian_profile() {
        // erf(R) = 3/4 at R = 0.8134198475976185
        let x0 = find_x0(&gaussian_profile(1.0).unwrap(), &cfg()).unwrap();
        let expected = 1.0 / (8.0 * 0.813_419_847_597_618_5);
        assert!((x0 - expected).abs() < 1e-9, "{x0} vs {expected}");
    }

    #[test]
    fn lower_bound_conserved_case_decays() {
        let m =
            ModelParams::new(1.0, KernelSpec::gaussian(0.5).unwrap(), example_profile()).unwrap();
        let r = lower_bound(&m, &[0.0, 1.0, 3.0], &[0.05, 0.5, 1.0, 2.0], &cfg()).unwrap();
        assert!(r.rate_exponent < 0.0);
        assert!(r.all_hold, "{:?}", r.probes);
    }

    #[test]
    fn slope_fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.7 * x - 2.0).collect();
        assert!((least_squares_slope(&xs, &ys) - 0.7).abs() < 1e-14);
    }

    #[test]
    fn sharpness_rejects_eps_at_least_d() {
        let s = SharpnessSetup::new(1.0, 1.0, 1.0);
        assert!(matches!(
            sharpness_experiment(&example_profile(), &s, &cfg()),
            Err(SeriesError::InvalidArgument(_))
        ));
    }
}
