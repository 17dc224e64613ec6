//! Experiment configuration: a TOML file merged with command-line overrides.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nonloc_core::{
    example_profile, gaussian_profile, DirectConfig, FrequencyProfile, KernelSpec, ModelParams,
    QuadratureConfig, SqrtWeight,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: f64,
    pub kernel: KernelConfig,
    pub profile: ProfileConfig,
    pub quadrature: QuadratureConfig,
    pub direct: DirectConfig,
    pub grids: GridsConfig,
    pub series: SeriesConfig,
    pub sharpness: SharpnessConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 2.0,
            kernel: KernelConfig::Gaussian { sigma: 1.0 },
            profile: ProfileConfig::Example,
            quadrature: QuadratureConfig::default(),
            direct: DirectConfig::default(),
            grids: GridsConfig::default(),
            series: SeriesConfig::default(),
            sharpness: SharpnessConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelConfig {
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileConfig {
    Example,
    Gaussian { s: f64 },
    ExpSqrt { f: SqrtWeightName },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SqrtWeightName {
    Exp,
    Gaussian,
}

/// A grid given either as a TOML array or as text (`"0,1,2"`, `"-5..5:21"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Text(String),
}

impl GridSpec {
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        match self {
            GridSpec::List(v) => {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    bail!("grid `{name}` must be a nonempty list of finite numbers");
                }
                Ok(v.clone())
            }
            GridSpec::Text(s) => {
                parse_grid(s).with_context(|| format!("invalid grid for {name}: `{s}`"))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridsConfig {
    pub t: GridSpec,
    pub x: GridSpec,
}

impl Default for GridsConfig {
    fn default() -> Self {
        Self {
            t: GridSpec::Text("0,0.5,1".into()),
            x: GridSpec::Text("-5..5:21".into()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesConfig {
    pub t: GridSpec,
    pub x: GridSpec,
    /// Stop once `|A_k|` drops below this; defaults to `1e-12·‖û₀‖₁`.
    pub tail_tol: Option<f64>,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            t: GridSpec::List(vec![1.0]),
            x: GridSpec::List(vec![1.0]),
            tail_tol: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpnessConfig {
    pub eps: f64,
    pub x_probe: f64,
    pub window: [f64; 2],
    pub n_times: usize,
    /// Fixed kernel width; when absent it is chosen from `eps`.
    pub sigma: Option<f64>,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            x_probe: 1.0,
            window: [5.0, 20.0],
            n_times: 16,
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Format,
    /// Write here instead of stdout.
    pub path: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))
            }
        }
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        match self.kernel {
            KernelConfig::Gaussian { sigma } => Ok(KernelSpec::gaussian(sigma)?),
        }
    }

    pub fn frequency_profile(&self) -> Result<FrequencyProfile> {
        Ok(match &self.profile {
            ProfileConfig::Example => example_profile(),
            ProfileConfig::Gaussian { s } => gaussian_profile(*s)?,
            ProfileConfig::ExpSqrt { f } => FrequencyProfile::over_sqrt(match f {
                SqrtWeightName::Exp => SqrtWeight::Exp,
                SqrtWeightName::Gaussian => SqrtWeight::Gaussian,
            }),
        })
    }

    pub fn model(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(
            self.d,
            self.kernel_spec()?,
            self.frequency_profile()?,
        )?)
    }
}

/// `"a,b,c"` or `"lo..hi:n"` (n evenly spaced points, endpoints included).
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if let Some((range, n)) = s.split_once(':') {
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| anyhow!("expected `lo..hi:n`"))?;
        let lo: f64 = parse_number(lo)?;
        let hi: f64 = parse_number(hi)?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad point count `{n}`"))?;
        if n == 0 {
            bail!("point count must be at least 1");
        }
        if n == 1 {
            if lo != hi {
                bail!("a single point needs lo == hi");
            }
            return Ok(vec![lo]);
        }
        if !(hi > lo) {
            bail!("range must satisfy lo < hi");
        }
        let step = (hi - lo) / (n - 1) as f64;
        return Ok((0..n)
            .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
            .collect());
    }
    let values = s
        .split(',')
        .map(parse_number)
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        bail!("empty grid");
    }
    Ok(values)
}

fn parse_number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| anyhow!("`{}` is not a number", s.trim()))?;
    if !v.is_finite() {
        bail!("`{}` is not finite", s.trim());
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0,1,2").unwrap(), vec![0.0, 1.0, 2.0]);
        let g = parse_grid("-5..5:21").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], -5.0);
        assert_eq!(g[10], 0.0);
        assert_eq!(g[20], 5.0);
        assert_eq!(parse_grid("3..3:1").unwrap(), vec![3.0]);
        for bad in ["", "1,,2", "a", "0..1", "1..0:3", "0..1:0", "0..1:x", "nan"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            d = 1.5
            kernel = { type = "gaussian", sigma = 0.5 }
            profile = { type = "exp-sqrt", f = "gaussian" }
            [grids]
            t = [0.0, 1.0]
            x = "-1..1:3"
            [sharpness]
            eps = 0.2
            sigma = 3.0
        "#;
        let c: ExperimentConfig = toml::from_str(text).unwrap();
        assert_eq!(c.d, 1.5);
        assert_eq!(
            c.profile,
            ProfileConfig::ExpSqrt {
                f: SqrtWeightName::Gaussian
            }
        );
        assert_eq!(c.grids.x.values("x").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(c.sharpness.sigma, Some(3.0));
        assert_eq!(c.sharpness.window, [5.0, 20.0]);
        let back: ExperimentConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.kernel, c.kernel);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("dd = 2").is_err());
        assert!(toml::from_str::<ExperimentConfig>("[grids]\ny = \"0\"").is_err());
        assert!(toml::from_str::<ExperimentConfig>("profile = { type = \"box\" }").is_err());
    }
}
