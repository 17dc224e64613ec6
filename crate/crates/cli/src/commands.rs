use std::f64::consts::PI;

use anyhow::{bail, Result};
use nonloc_core::direct_solver::{self, DirectError};
use nonloc_core::profiles::log_grid;
use nonloc_core::series_lab::{default_tail_tol, lower_bound};
use nonloc_core::{
    check_h2, example_inverse_transform, fresnel_c, gaussian_profile, mass, series_report,
    sharpness_experiment, solve_at, solve_grid, ModelParams, SeriesReport, SharpnessSetup,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::output::{csv, json};

/// What a command produced: the data file contents, lines for stderr and an
/// exit code.
pub struct Outcome {
    pub data: String,
    pub messages: Vec<String>,
    pub code: u8,
}

impl Outcome {
    fn ok(data: String) -> Self {
        Self {
            data,
            messages: vec![],
            code: 0,
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn solve(cfg: &ExperimentConfig) -> Result<Outcome> {
    let m = cfg.model()?;
    let ts = cfg.grids.t.values("t")?;
    let xs = cfg.grids.x.values("x")?;
    let g = solve_grid(&m, &ts, &xs, &cfg.quadrature)?;
    let data = match cfg.output.format {
        Format::Json => json(&g)?,
        Format::Csv => {
            let rows: Vec<[f64; 4]> = ts
                .iter()
                .enumerate()
                .flat_map(|(i, &t)| {
                    let g = &g;
                    xs.iter()
                        .enumerate()
                        .map(move |(j, &x)| [t, x, g.u[i][j], g.upper_envelope[i]])
                })
                .collect();
            csv(
                &["t", "x", "u", "upper_bound"],
                rows.iter().map(|r| r.as_slice()),
            )
        }
    };
    let mut out = Outcome::ok(data);
    if !g.violations.is_empty() {
        out.code = 2;
        out.messages.push(format!(
            "upper bound violated at {} grid points",
            g.violations.len()
        ));
    }
    Ok(out)
}

#[derive(Serialize)]
struct DirectTable<'a> {
    t: &'a [f64],
    x: &'a [f64],
    u: Vec<Vec<f64>>,
}

pub fn direct(cfg: &ExperimentConfig, full_grid: bool) -> Result<Outcome> {
    let m = cfg.model()?;
    let mut ts = cfg.grids.t.values("t")?;
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let traj = match direct_solver::run(&m, &cfg.direct, &ts) {
        Ok(tr) => tr,
        Err(e @ DirectError::Instability { .. }) => {
            return Ok(Outcome {
                data: String::new(),
                messages: vec![e.to_string()],
                code: 2,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let xs = if full_grid {
        traj.grid.xs.clone()
    } else {
        cfg.grids.x.values("x")?
    };
    let u: Vec<Vec<f64>> = (0..ts.len())
        .map(|i| {
            if full_grid {
                traj.snapshots[i].clone()
            } else {
                xs.iter().map(|&x| traj.sample(i, x)).collect()
            }
        })
        .collect();
    let data = match cfg.output.format {
        Format::Json => json(&DirectTable { t: &ts, x: &xs, u })?,
        Format::Csv => {
            let rows: Vec<[f64; 3]> = ts
                .iter()
                .zip(&u)
                .flat_map(|(&t, row)| xs.iter().zip(row).map(move |(&x, &v)| [t, x, v]))
                .collect();
            csv(&["t", "x", "u"], rows.iter().map(|r| r.as_slice()))
        }
    };
    Ok(Outcome::ok(data))
}

fn series_points(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>> {
    let ts = cfg.series.t.values("series t")?;
    let xs = cfg.series.x.values("series x")?;
    if let Some(x) = xs.iter().find(|&&x| !(x > 0.0)) {
        bail!("series needs x > 0, got {x}");
    }
    Ok(ts
        .iter()
        .flat_map(|&t| xs.iter().map(move |&x| (t, x)))
        .collect())
}

fn series_reports(cfg: &ExperimentConfig, m: &ModelParams) -> Result<Vec<SeriesReport>> {
    let tail = cfg
        .series
        .tail_tol
        .unwrap_or_else(|| default_tail_tol(m.profile()));
    series_points(cfg)?
        .into_iter()
        .map(|(t, x)| Ok(series_report(m, t, x, &cfg.quadrature, tail)?))
        .collect()
}

pub fn series(cfg: &ExperimentConfig) -> Result<Outcome> {
    let m = cfg.model()?;
    let reports = series_reports(cfg, &m)?;
    let mut messages = vec![];
    let mut all_pass = true;
    for r in &reports {
        let prefix = if reports.len() > 1 {
            format!("[t={} x={}] ", r.t, r.x)
        } else {
            String::new()
        };
        messages.push(format!("{prefix}h2: {}", verdict(r.h2_holds)));
        for (name, c) in r.checks.named() {
            messages.push(format!(
                "{prefix}{name}: {} (margin {:.3e})",
                verdict(c.pass),
                c.margin
            ));
        }
        all_pass &= r.h2_holds && r.checks.all_pass();
    }
    let data = if reports.len() == 1 {
        json(&reports[0].to_json())?
    } else {
        json(
            &reports
                .iter()
                .map(SeriesReport::to_json)
                .collect::<Vec<_>>(),
        )?
    };
    Ok(Outcome {
        data,
        messages,
        code: if all_pass { 0 } else { 3 },
    })
}

fn sharpness_setup(cfg: &ExperimentConfig) -> SharpnessSetup {
    let s = &cfg.sharpness;
    SharpnessSetup {
        window: (s.window[0], s.window[1]),
        n_times: s.n_times,
        sigma: s.sigma,
        ..SharpnessSetup::new(cfg.d, s.eps, s.x_probe)
    }
}

pub fn sharpness(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.frequency_profile()?;
    let r = sharpness_experiment(&p, &sharpness_setup(cfg), &cfg.quadrature)?;
    let messages = vec![
        format!(
            "slope: {} (fitted {:.6}, two-point {:.6}, range ({:.6}, {:.6}])",
            verdict(r.slope_ok),
            r.fitted_slope,
            r.two_point_slope,
            r.slope_range.0,
            r.slope_range.1
        ),
        format!(
            "sandwich: {} (log margin {:.3e}, sigma {:.6})",
            verdict(r.sandwich_ok),
            r.sandwich_log_margin,
            r.sigma
        ),
    ];
    Ok(Outcome {
        data: json(&r)?,
        messages,
        code: if r.passed() { 0 } else { 3 },
    })
}

pub fn example(cfg: &ExperimentConfig, xs: Option<Vec<f64>>) -> Result<Outcome> {
    let xs = xs.unwrap_or_else(|| vec![0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0]);
    if let Some(x) = xs.iter().find(|&&x| !(x > 0.0)) {
        bail!("example needs x > 0, got {x}");
    }
    let p = nonloc_core::example_profile();
    let h2 = check_h2(&p, &xs, &cfg.quadrature)?;
    let bounds = h2.lower_bounds.clone().unwrap_or_default();
    let m = ModelParams::new(1.0, nonloc_core::KernelSpec::gaussian(1.0)?, p)?;
    let mut rows = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let u0 = solve_at(&m, 0.0, x, &cfg.quadrature)?;
        rows.push([
            x,
            h2.integrals[i],
            bounds[i],
            h2.integrals[i] - bounds[i],
            example_inverse_transform(x),
            u0,
        ]);
    }
    let data = csv(
        &[
            "x",
            "h2_integral",
            "lower_bound",
            "margin",
            "u0_closed_form",
            "u0_quadrature",
        ],
        rows.iter().map(|r| r.as_slice()),
    );
    let (c1, c3) = (fresnel_c(1.0), fresnel_c(3f64.sqrt()));
    let messages = vec![
        format!("FresnelC(1) = {c1:.16}"),
        format!("FresnelC(sqrt 3) = {c3:.16}"),
        format!("FresnelC(sqrt 3) - FresnelC(1) = {:.16}", c3 - c1),
        format!(
            "u0(0) = {:.16} (2 sqrt(pi) = {:.16})",
            example_inverse_transform(0.0),
            2.0 * PI.sqrt()
        ),
    ];
    let pass = h2.all_positive && h2.above_lower_bounds == Some(true);
    Ok(Outcome {
        data,
        messages,
        code: if pass { 0 } else { 3 },
    })
}

/// One row of the verification table.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub detail: String,
}

fn row(name: &str, pass: bool, margin: f64, detail: impl Into<String>) -> CheckRow {
    CheckRow {
        name: name.to_string(),
        pass,
        margin,
        detail: detail.into(),
    }
}

pub const VERIFY_GROUPS: [&str; 8] = [
    "h1",
    "h2",
    "t1",
    "series",
    "lower-bound",
    "sharpness",
    "cross-solver",
    "mass",
];

fn verify_group(cfg: &ExperimentConfig, group: &str) -> Result<Vec<CheckRow>> {
    let q = &cfg.quadrature;
    match group {
        "h1" => {
            let k = cfg.kernel_spec()?;
            let mass_err = (k.total_mass(q)? - 1.0).abs();
            let mut transform_err: f64 = 0.0;
            let mut decreasing = true;
            let mut prev = f64::INFINITY;
            for xi in [0.0, 0.25, 0.5, 1.0, 2.0] {
                let closed = k.transform(xi);
                transform_err =
                    transform_err.max((closed - k.transform_by_quadrature(xi, q)?).abs());
                decreasing &= closed <= prev;
                prev = closed;
            }
            Ok(vec![
                row(
                    "h1-mass",
                    mass_err < 1e-8,
                    1e-8 - mass_err,
                    format!("|∫J - 1| = {mass_err:.3e}"),
                ),
                row(
                    "h1-transform",
                    transform_err < 1e-8 && decreasing,
                    1e-8 - transform_err,
                    format!("max |Ĵ - quadrature| = {transform_err:.3e}"),
                ),
            ])
        }
        "h2" => {
            let p = cfg.frequency_profile()?;
            let r = check_h2(&p, &log_grid(0.05, 20.0, 200), q)?;
            let pass = r.all_positive && r.above_lower_bounds != Some(false);
            let detail = match r.above_lower_bounds {
                Some(_) => "200 points in [0.05, 20], against the Fresnel lower bound",
                None => "200 points in [0.05, 20]",
            };
            Ok(vec![row("h2", pass, r.min_margin(), detail)])
        }
        "t1" => {
            let m = cfg.model()?;
            let ts = cfg.grids.t.values("t")?;
            let xs = cfg.grids.x.values("x")?;
            let g = solve_grid(&m, &ts, &xs, q)?;
            let mut slack = f64::INFINITY;
            for (r, env) in g.u.iter().zip(&g.upper_envelope) {
                for v in r {
                    slack = slack.min(env * (1.0 + 1e-9) + 1e-8 - v.abs());
                }
            }
            Ok(vec![row(
                "t1",
                slack > 0.0,
                slack,
                format!("{} grid points", ts.len() * xs.len()),
            )])
        }
        "series" => {
            let m = cfg.model()?;
            let reports = series_reports(cfg, &m)?;
            let names = reports[0].checks.named().map(|(n, _)| n);
            Ok(names
                .iter()
                .enumerate()
                .map(|(i, name)| {
                    let (pass, margin) =
                        reports.iter().fold((true, f64::INFINITY), |(p, mg), r| {
                            let c = r.checks.named()[i].1;
                            (p && c.pass, mg.min(c.margin))
                        });
                    row(name, pass, margin, format!("{} points", reports.len()))
                })
                .collect())
        }
        "lower-bound" => {
            let m = cfg.model()?;
            let ts = cfg.series.t.values("series t")?;
            let xs = cfg.series.x.values("series x")?;
            let r = lower_bound(&m, &ts, &xs, q)?;
            let margin = r
                .probes
                .iter()
                .map(|p| p.u - p.bound)
                .fold(f64::INFINITY, f64::min);
            Ok(vec![row(
                "lower-bound",
                r.all_hold,
                margin,
                format!("x0 = {:.6}, exponent {:.6}", r.x0, r.rate_exponent),
            )])
        }
        "sharpness" => {
            let p = cfg.frequency_profile()?;
            let r = sharpness_experiment(&p, &sharpness_setup(cfg), q)?;
            let slope_margin =
                (r.fitted_slope - r.slope_range.0).min(r.slope_range.1 - r.fitted_slope);
            Ok(vec![
                row(
                    "sharpness-slope",
                    r.slope_ok,
                    slope_margin,
                    format!(
                        "slope {:.6} in ({:.6}, {:.6}], sigma {:.6}",
                        r.fitted_slope, r.slope_range.0, r.slope_range.1, r.sigma
                    ),
                ),
                row(
                    "sharpness-sandwich",
                    r.sandwich_ok,
                    r.sandwich_log_margin,
                    "g e^{(d-1-eps)t} < u < h e^{(d-1)t}",
                ),
            ])
        }
        "cross-solver" => {
            let m = smooth_model(cfg)?;
            let ts: Vec<f64> = (0..=8).map(|i| 0.25 * i as f64).collect();
            let tr = direct_solver::run(&m, &cfg.direct, &ts)?;
            let mut worst: f64 = 0.0;
            for (i, &t) in ts.iter().enumerate() {
                for x in [0.0, 1.0, 3.0] {
                    let s = solve_at(&m, t, x, q)?;
                    if s.abs() > q.abs_tol {
                        worst = worst.max((tr.sample(i, x) - s).abs() / s.abs());
                    }
                }
            }
            Ok(vec![row(
                "cross-solver",
                worst < 1e-3,
                1e-3 - worst,
                format!("max relative error {worst:.3e} on t in [0, 2], x in {{0, 1, 3}}"),
            )])
        }
        "mass" => {
            let m = smooth_model(cfg)?;
            let ts: Vec<f64> = (0..=4).map(|i| 0.5 * i as f64).collect();
            let tr = direct_solver::run(&m, &cfg.direct, &ts)?;
            let (mut spectral, mut direct): (f64, f64) = (0.0, 0.0);
            for (i, &t) in ts.iter().enumerate() {
                let law = ((m.d() - 1.0) * t).exp();
                spectral = spectral.max((mass(&m, t) / mass(&m, 0.0) - law).abs() / law);
                direct = direct.max((tr.mass(i) - mass(&m, t)).abs() / mass(&m, t));
            }
            Ok(vec![
                row(
                    "mass-spectral",
                    spectral <= 1e-12,
                    1e-12 - spectral,
                    format!("ratio error {spectral:.3e}"),
                ),
                row(
                    "mass-direct",
                    direct < 1e-2,
                    1e-2 - direct,
                    format!("relative error {direct:.3e}"),
                ),
            ])
        }
        other => bail!(
            "unknown check `{other}`; expected one of {}",
            VERIFY_GROUPS.join(", ")
        ),
    }
}

/// The configured model when its data has a physical closed form, otherwise
/// the same `d` and kernel with `gaussian(1)` data.
fn smooth_model(cfg: &ExperimentConfig) -> Result<ModelParams> {
    let m = cfg.model()?;
    if m.profile().physical(0.0).is_some() && mass(&m, 0.0).is_finite() {
        Ok(m)
    } else {
        Ok(ModelParams::new(
            m.d(),
            m.kernel().clone(),
            gaussian_profile(1.0)?,
        )?)
    }
}

pub fn verify(cfg: &ExperimentConfig, only: Option<&[String]>) -> Result<Outcome> {
    let groups: Vec<&str> = match only {
        Some(names) => {
            for n in names {
                if !VERIFY_GROUPS.contains(&n.as_str()) {
                    bail!(
                        "unknown check `{n}`; expected one of {}",
                        VERIFY_GROUPS.join(", ")
                    );
                }
            }
            VERIFY_GROUPS
                .iter()
                .copied()
                .filter(|g| names.iter().any(|n| n == g))
                .collect()
        }
        None => VERIFY_GROUPS.to_vec(),
    };
    let mut rows = vec![];
    for g in groups {
        rows.extend(verify_group(cfg, g)?);
    }
    let all_pass = rows.iter().all(|r| r.pass);
    let data = match cfg.output.format {
        Format::Json => json(&rows)?,
        Format::Csv => {
            let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
            let mut s = format!(
                "{:width$}  {:6}  {:>12}  detail\n",
                "check", "result", "margin"
            );
            for r in &rows {
                s.push_str(&format!(
                    "{:width$}  {:6}  {:>12.3e}  {}\n",
                    r.name,
                    verdict(r.pass),
                    r.margin,
                    r.detail
                ));
            }
            s
        }
    };
    Ok(Outcome {
        data,
        messages: vec![],
        code: if all_pass { 0 } else { 3 },
    })
}
