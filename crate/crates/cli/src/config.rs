//! Run configuration: a JSON file, command-line flags over it, and the
//! `DAMCTL_PRECISION` environment variable for the recurrence precision.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use damctl_core::verify::VerifyRegime;
use damctl_core::{CostModel, DamModel, Precision, ServiceDistribution};
use serde::Deserialize;

use crate::error::CliError;
use crate::output::Format;

pub const PRECISION_ENV: &str = "DAMCTL_PRECISION";

fn parse_dist(s: &str) -> Result<ServiceDistribution, String> {
    s.parse().map_err(|e: damctl_core::DamError| e.to_string())
}

fn parse_regime(s: &str) -> Result<VerifyRegime, String> {
    s.parse().map_err(|e: damctl_core::DamError| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Asymptotic,
    Exact,
}

/// A distribution in the config file: the flag syntax or the tagged object.
#[derive(Deserialize)]
#[serde(untagged)]
enum DistSpec {
    Text(String),
    Object(ServiceDistribution),
}

fn dist_spec<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<ServiceDistribution>, D::Error> {
    match Option::<DistSpec>::deserialize(d)? {
        None => Ok(None),
        Some(DistSpec::Object(dist)) => Ok(Some(dist)),
        Some(DistSpec::Text(text)) => parse_dist(&text).map(Some).map_err(serde::de::Error::custom),
    }
}

/// `model` section of the config file.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub lambda: Option<f64>,
    #[serde(default, deserialize_with = "dist_spec")]
    pub b1: Option<ServiceDistribution>,
    #[serde(default, deserialize_with = "dist_spec")]
    pub b2: Option<ServiceDistribution>,
    pub level: Option<usize>,
}

/// `costs` section of the config file.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub j1: Option<f64>,
    pub j2: Option<f64>,
}

/// Contents of a `--config` file. Every field is optional; flags win.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub costs: CostSection,
    pub precision: Option<u32>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub c_max: Option<f64>,
    pub rho1_min: Option<f64>,
    pub rho1_max: Option<f64>,
    pub regime: Option<VerifyRegime>,
    pub levels: Option<Vec<usize>>,
    pub c_values: Option<Vec<f64>>,
    pub rho1: Option<f64>,
    pub rho12: Option<f64>,
    pub rho2: Option<f64>,
    pub cycles: Option<u64>,
    pub seed: Option<u64>,
    pub batches: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config file {}: {e}", path.display())))
    }
}

/// Flags shared by every command.
#[derive(Debug, Default, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Arrival rate.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Service law at or below the level, e.g. exp:1.25, erlang:2:2, gamma:0.5:0.5, det:1, hyper:0.3:1:0.7:2.
    #[arg(long, value_parser = parse_dist)]
    pub b1: Option<ServiceDistribution>,
    /// Service law above the level.
    #[arg(long, value_parser = parse_dist)]
    pub b2: Option<ServiceDistribution>,
    /// Threshold level L.
    #[arg(long)]
    pub level: Option<usize>,
    /// Cost rate of the lower-level passage.
    #[arg(long)]
    pub j1: Option<f64>,
    /// Cost rate of the upper-level passage.
    #[arg(long)]
    pub j2: Option<f64>,
    /// Decimal digits for the extended-precision recurrence (16..=250).
    #[arg(long)]
    pub precision: Option<u32>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct OptimizeFlags {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Upper end of the C search interval (asymptotic mode).
    #[arg(long)]
    pub c_max: Option<f64>,
    /// Lower end of the load search interval (exact mode).
    #[arg(long)]
    pub rho1_min: Option<f64>,
    /// Upper end of the load search interval (exact mode).
    #[arg(long)]
    pub rho1_max: Option<f64>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct VerifyFlags {
    /// subcritical, critical, supercritical, heavy_upper or heavy_lower.
    #[arg(long, value_parser = parse_regime)]
    pub regime: Option<VerifyRegime>,
    /// Comma-separated levels.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Comma-separated C values for the heavy-traffic regimes.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub c_values: Option<Vec<f64>>,
    /// Load for the fixed-load regimes.
    #[arg(long)]
    pub rho1: Option<f64>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct SimulateFlags {
    /// Number of regeneration cycles.
    #[arg(long)]
    pub cycles: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of batches for the confidence intervals.
    #[arg(long)]
    pub batches: Option<usize>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct SweepFlags {
    /// Comma-separated C values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub c_values: Option<Vec<f64>>,
    /// Normalized second moment at unit load; derived from --lambda and --b1 when absent.
    #[arg(long)]
    pub rho12: Option<f64>,
    /// Load above the level; derived from --lambda and --b2 when absent.
    #[arg(long)]
    pub rho2: Option<f64>,
}

pub const DEFAULT_CYCLES: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;

/// Flags merged over the config file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub file: RunConfig,
    pub common: CommonArgs,
    pub env_precision: Option<String>,
}

impl Settings {
    pub fn new(common: CommonArgs, env_precision: Option<String>) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(Settings { file, common, env_precision })
    }

    pub fn lambda(&self) -> Result<f64, CliError> {
        self.common.lambda.or(self.file.model.lambda).ok_or_else(|| CliError::missing("lambda", "--lambda"))
    }

    fn dist(&self, flag: &Option<ServiceDistribution>, file: &Option<ServiceDistribution>, name: &str) -> Result<ServiceDistribution, CliError> {
        let d = flag.clone().or_else(|| file.clone()).ok_or_else(|| CliError::missing(name, &format!("--{name}")))?;
        d.validate().map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        Ok(d)
    }

    pub fn b1(&self) -> Result<ServiceDistribution, CliError> {
        self.dist(&self.common.b1, &self.file.model.b1, "b1")
    }

    pub fn b2(&self) -> Result<ServiceDistribution, CliError> {
        self.dist(&self.common.b2, &self.file.model.b2, "b2")
    }

    pub fn level(&self) -> Result<usize, CliError> {
        self.common.level.or(self.file.model.level).ok_or_else(|| CliError::missing("level", "--level"))
    }

    pub fn model(&self) -> Result<DamModel, CliError> {
        Ok(DamModel::new(self.lambda()?, self.b1()?, self.b2()?, self.level()?)?)
    }

    pub fn costs(&self) -> Result<CostModel, CliError> {
        let j1 = self.common.j1.or(self.file.costs.j1).ok_or_else(|| CliError::missing("j1", "--j1"))?;
        let j2 = self.common.j2.or(self.file.costs.j2).ok_or_else(|| CliError::missing("j2", "--j2"))?;
        Ok(CostModel::new(j1, j2)?)
    }

    /// Costs when both rates are given, `None` when neither is.
    pub fn optional_costs(&self) -> Result<Option<CostModel>, CliError> {
        let any = [self.common.j1, self.file.costs.j1, self.common.j2, self.file.costs.j2].iter().any(Option::is_some);
        if any {
            self.costs().map(Some)
        } else {
            Ok(None)
        }
    }

    /// Flag, then config file, then `DAMCTL_PRECISION`; double precision otherwise.
    pub fn precision(&self) -> Result<Precision, CliError> {
        let digits = match self.common.precision.or(self.file.precision) {
            Some(d) => Some(d),
            None => match self.env_precision.as_deref().map(str::trim) {
                None | Some("") | Some("double") => None,
                Some(text) => Some(text.parse::<u32>().map_err(|_| {
                    CliError::Config(format!("{PRECISION_ENV} must be a digit count or 'double', got '{text}'"))
                })?),
            },
        };
        match digits {
            None => Ok(Precision::Double),
            Some(d) => Ok(Precision::extended(d)?),
        }
    }

    pub fn format(&self, default: Format) -> Format {
        self.common.format.or(self.file.format).unwrap_or(default)
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.common.out.clone().or_else(|| self.file.out.clone())
    }
}
