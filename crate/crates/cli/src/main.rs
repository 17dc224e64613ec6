//! `nonloc`: run spectral solves, direct integrations, series diagnostics and
//! growth-rate experiments for `u_t = d(J*u) - u`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{
    parse_grid, ExperimentConfig, Format, GridSpec, ProfileConfig, SqrtWeightName,
};

#[derive(Parser)]
#[command(
    name = "nonloc",
    version,
    about = "Nonlocal evolution laboratory for u_t = d(J*u) - u"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate u(t,x) on a grid by cosine transform; CSV columns t,x,u,upper_bound.
    Solve(Common),
    /// Integrate the equation in physical space; CSV columns t,x,u.
    Direct(DirectArgs),
    /// Alternating-series decomposition and its checks at (t, x).
    Series(SeriesArgs),
    /// Measure the growth rate against the sharp exponent d-1.
    Sharpness(SharpnessArgs),
    /// Run the property suite and print a PASS/FAIL table.
    Verify(VerifyArgs),
    /// Table for the singular example profile: positivity integral, its lower bound, u0.
    Example(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileName {
    Example,
    Gaussian,
    ExpSqrt,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    d: Option<f64>,
    /// Gaussian kernel width.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long, value_enum)]
    profile: Option<ProfileName>,
    /// Exponent of the gaussian profile e^{-s ξ²}.
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
    /// Times: "0,1,2" or "lo..hi:n".
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    /// Positions: "-1,0,1" or "lo..hi:n".
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file; stdout when absent. A `.meta.json` sidecar is written next to it.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DirectArgs {
    #[command(flatten)]
    common: Common,
    /// Half-width L of the domain [-L, L].
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum)]
    integrator: Option<Integrator>,
    /// Write every grid node instead of interpolating to --x.
    #[arg(long)]
    full_grid: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Integrator {
    Rk4,
    Euler,
}

#[derive(Args)]
struct SeriesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    tail_tol: Option<f64>,
}

#[derive(Args)]
struct SharpnessArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long)]
    x_probe: Option<f64>,
    /// Fit window "t1,t2".
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    n_times: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated subset of: h1, h2, t1, series, lower-bound, sharpness, cross-solver, mass.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
}

fn grid_flag(flag: &str, text: &str) -> Result<GridSpec> {
    let v = parse_grid(text).with_context(|| format!("invalid value for {flag}: `{text}`"))?;
    Ok(GridSpec::List(v))
}

/// Where `--t`/`--x` land for a given command.
enum GridTarget {
    Solution,
    Series,
}

impl Common {
    fn load(&self, target: GridTarget) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(self.config.as_deref())?;
        if let Some(d) = self.d {
            cfg.d = d;
        }
        if let Some(sigma) = self.sigma {
            cfg.kernel = config::KernelConfig::Gaussian { sigma };
        }
        match self.profile {
            Some(ProfileName::Example) => cfg.profile = ProfileConfig::Example,
            Some(ProfileName::Gaussian) => cfg.profile = ProfileConfig::Gaussian { s: 1.0 },
            Some(ProfileName::ExpSqrt) => {
                cfg.profile = ProfileConfig::ExpSqrt {
                    f: SqrtWeightName::Gaussian,
                }
            }
            None => {}
        }
        if let Some(s) = self.s {
            match &mut cfg.profile {
                ProfileConfig::Gaussian { s: current } => *current = s,
                _ => bail!("--s applies only to the gaussian profile"),
            }
        }
        let (t_slot, x_slot) = match target {
            GridTarget::Solution => (&mut cfg.grids.t, &mut cfg.grids.x),
            GridTarget::Series => (&mut cfg.series.t, &mut cfg.series.x),
        };
        if let Some(t) = &self.t {
            *t_slot = grid_flag("--t", t)?;
        }
        if let Some(x) = &self.x {
            *x_slot = grid_flag("--x", x)?;
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if let Some(o) = &self.output {
            cfg.output.path = Some(o.display().to_string());
        }
        cfg.quadrature.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("NONLOC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("NONLOC_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("cannot configure the thread pool")?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    configure_threads()?;
    let start = Instant::now();
    let (name, cfg, outcome) = match cli.command {
        Command::Solve(c) => {
            let cfg = c.load(GridTarget::Solution)?;
            let o = commands::solve(&cfg)?;
            ("solve", cfg, o)
        }
        Command::Direct(a) => {
            let mut cfg = a.common.load(GridTarget::Solution)?;
            if let Some(l) = a.half_width {
                cfg.direct.domain_half_width = l;
            }
            if let Some(n) = a.n_points {
                cfg.direct.n_points = n;
            }
            if let Some(dt) = a.dt {
                cfg.direct.dt = dt;
            }
            if let Some(i) = a.integrator {
                cfg.direct.time_integrator = match i {
                    Integrator::Rk4 => nonloc_core::TimeIntegrator::Rk4,
                    Integrator::Euler => nonloc_core::TimeIntegrator::Euler,
                };
            }
            let o = commands::direct(&cfg, a.full_grid)?;
            ("direct", cfg, o)
        }
        Command::Series(a) => {
            let mut cfg = a.common.load(GridTarget::Series)?;
            if a.tail_tol.is_some() {
                cfg.series.tail_tol = a.tail_tol;
            }
            let o = commands::series(&cfg)?;
            ("series", cfg, o)
        }
        Command::Sharpness(a) => {
            // In this command --sigma fixes the kernel instead of the
            // automatic choice from eps.
            let sigma = a.common.sigma;
            let mut cfg = a.common.load(GridTarget::Solution)?;
            if sigma.is_some() {
                cfg.sharpness.sigma = sigma;
            }
            if let Some(e) = a.eps {
                cfg.sharpness.eps = e;
            }
            if let Some(x) = a.x_probe {
                cfg.sharpness.x_probe = x;
            }
            if let Some(w) = &a.window {
                let v =
                    parse_grid(w).with_context(|| format!("invalid value for --window: `{w}`"))?;
                let [t1, t2] = v[..] else {
                    bail!("invalid value for --window: `{w}` needs two times");
                };
                cfg.sharpness.window = [t1, t2];
            }
            if let Some(n) = a.n_times {
                cfg.sharpness.n_times = n;
            }
            let o = commands::sharpness(&cfg)?;
            ("sharpness", cfg, o)
        }
        Command::Verify(a) => {
            let cfg = a.common.load(GridTarget::Solution)?;
            let o = commands::verify(&cfg, a.only.as_deref())?;
            ("verify", cfg, o)
        }
        Command::Example(c) => {
            let xs =
                c.x.as_deref()
                    .map(|x| parse_grid(x).with_context(|| format!("invalid value for --x: `{x}`")))
                    .transpose()?;
            let cfg = Common { x: None, ..c }.load(GridTarget::Solution)?;
            let o = commands::example(&cfg, xs)?;
            ("example", cfg, o)
        }
    };

    let path = cfg.output.path.as_ref().map(PathBuf::from);
    if !outcome.data.is_empty() {
        output::emit(&outcome.data, path.as_deref())?;
        if let Some(p) = &path {
            output::write_sidecar(p, name, &cfg, start.elapsed())?;
        }
    }
    for m in &outcome.messages {
        eprintln!("{m}");
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
