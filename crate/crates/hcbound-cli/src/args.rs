//! Flag definitions and resolution against an optional JSON config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hcbound::distributions::{DistributionConfig, LabeledDistribution};
use hcbound::experiments::DEFAULT_SEED;
use hcbound::hypotheses::{HypothesisSpec, Magnitude};
use hcbound::losses::{LossFamily, MarginLoss};
use hcbound::transforms::MassartParams;
use hcbound::{Error, Result};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "hcbound", version, about = "Estimation-error bounds for margin-based surrogate losses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print a transform, its inverse and curve samples.
    Transform(CommonArgs),
    /// Assemble a bound for one hypothesis under one distribution.
    Bound(CommonArgs),
    /// Compare closed-form minimal conditional risks with grid infima.
    OracleCheck(CommonArgs),
    /// Run a simulation sweep or emit transform curves.
    Sweep(CommonArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassArg {
    All,
    Linear,
    Relu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Exact,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetArg {
    ZeroOne,
    AdversarialZeroOne,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum ExperimentArg {
    #[value(name = "sect7-nonadv")]
    #[serde(rename = "sect7-nonadv")]
    NonAdversarial,
    #[value(name = "sect7-adv")]
    #[serde(rename = "sect7-adv")]
    Adversarial,
    #[value(name = "figure1")]
    #[serde(rename = "figure1")]
    Figure,
}

/// Every flag is optional so that a config file can supply it; flags win.
#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommonArgs {
    /// JSON file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Loss family; a `sup-` prefix marks the supremum-based variant.
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long, value_enum)]
    pub class: Option<ClassArg>,
    /// Weight-norm bound.
    #[arg(long = "W")]
    #[serde(rename = "W")]
    pub w_bound: Option<f64>,
    /// Offset bound; `inf` for none.
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub b_bound: Option<Magnitude>,
    /// Output-weight bound of ReLU networks.
    #[arg(long = "Lambda")]
    #[serde(rename = "Lambda")]
    pub lambda: Option<f64>,
    /// Input norm index; `inf` allowed.
    #[arg(long)]
    pub p: Option<Magnitude>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Perturbation radius; positive values select the adversarial setting.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "massart-beta")]
    #[serde(alias = "massart-beta")]
    pub massart_beta: Option<f64>,
    /// Linear-below-eps modification of the transform.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum)]
    pub target: Option<TargetArg>,
    /// Distribution: `sect7-nonadv`, `sect7-adv`, inline JSON, or a JSON file.
    #[arg(long)]
    pub dist: Option<String>,
    /// Noise scale of the preset distributions.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Comma-separated, strictly decreasing noise scales for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    /// Slope of the evaluated hypothesis.
    #[arg(long = "h-w", allow_hyphen_values = true)]
    #[serde(alias = "h-w")]
    pub h_w: Option<f64>,
    /// Offset of the evaluated hypothesis.
    #[arg(long = "h-b", allow_hyphen_values = true)]
    #[serde(alias = "h-b")]
    pub h_b: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "grid-n")]
    #[serde(alias = "grid-n")]
    pub grid_n: Option<usize>,
    /// Random instances per (loss, class) pair in oracle checks.
    #[arg(long)]
    pub instances: Option<usize>,
    /// Offset closed-form values in oracle checks; a negative control.
    #[arg(long)]
    pub tamper: Option<f64>,
    /// Also run best-in-class searches and report minimizability gaps.
    #[arg(long)]
    pub gaps: Option<bool>,
    #[arg(long, value_enum)]
    pub experiment: Option<ExperimentArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

macro_rules! merge_fields {
    ($flags:expr, $file:expr; $($field:ident),*) => {
        CommonArgs { config: None, $($field: $flags.$field.or($file.$field)),* }
    };
}

impl CommonArgs {
    /// Fills unset flags from the config file, if one was given.
    pub fn resolve(self) -> Result<CommonArgs> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: CommonArgs =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(merge_fields!(self, file; loss, class, w_bound, b_bound, lambda, p, k, rho, gamma, massart_beta, eps,
            target, dist, sigma, sigmas, h_w, h_b, mode, n, seed, grid_n, instances, tamper, gaps, experiment, out,
            format))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(0.0)
    }

    pub fn format(&self) -> FormatArg {
        self.format.unwrap_or(FormatArg::Json)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// The requested loss and whether it was marked supremum-based.
    pub fn loss(&self) -> Result<(MarginLoss, bool)> {
        let raw = self.loss.as_deref().ok_or_else(|| Error::Config("--loss is required".into()))?;
        let (name, sup) = match raw.strip_prefix("sup-") {
            Some(rest) => (rest, true),
            None => (raw, false),
        };
        if sup && self.gamma() <= 0.0 {
            return Err(Error::Config(format!("--loss {raw} is supremum-based and needs --gamma > 0")));
        }
        let family: LossFamily = name.parse()?;
        Ok((MarginLoss::from_family(family, self.k.unwrap_or(1.0), self.rho.unwrap_or(1.0))?, sup))
    }

    pub fn spec(&self) -> Result<HypothesisSpec> {
        let w = self.w_bound.unwrap_or(5.0);
        let b = self.b_bound.unwrap_or(Magnitude::Finite(1.0));
        let spec = match self.class.unwrap_or(ClassArg::Linear) {
            ClassArg::All => HypothesisSpec::all(),
            ClassArg::Linear => HypothesisSpec::linear(w, b)?,
            ClassArg::Relu => HypothesisSpec::relu(self.lambda.unwrap_or(1.0), w, b)?,
        };
        let spec = spec.with_gamma(self.gamma())?;
        match self.p {
            Some(p) => spec.with_p(p),
            None => Ok(spec),
        }
    }

    pub fn massart(&self) -> Result<Option<MassartParams>> {
        self.massart_beta.map(MassartParams::new).transpose()
    }

    pub fn distribution(&self) -> Result<LabeledDistribution> {
        let sigma = self.sigma.unwrap_or(0.1);
        let default = if self.gamma() > 0.0 { "sect7-adv" } else { "sect7-nonadv" };
        match self.dist.as_deref().unwrap_or(default) {
            "sect7-nonadv" => LabeledDistribution::nonadversarial_example(sigma),
            "sect7-adv" => {
                LabeledDistribution::adversarial_example(sigma, if self.gamma() > 0.0 { self.gamma() } else { 0.1 })
            }
            inline if inline.trim_start().starts_with('{') => DistributionConfig::from_json(inline),
            path => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read distribution {path}: {e}")))?;
                DistributionConfig::from_json(&text)
            }
        }
    }
}
