//! Tightness sweeps over the noise scale σ for the two simulated
//! distributions, transform curves, and tabular writers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    assemble_bound, best_in_class_risk, bound_holds, empirical_risks, BoundOptions, BoundReport, RiskLoss, RiskMode,
    Target,
};
use crate::distributions::LabeledDistribution;
use crate::error::{invalid, Error, Result};
use crate::hypotheses::{HypothesisSpec, LinearHypothesis, Magnitude};
use crate::losses::{LossFamily, MarginLoss, TruncationEps};
use crate::transforms::{transform, transform_inverse, MassartParams};

pub const DEFAULT_SIGMAS: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];
pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 20_220_717;
pub const MIN_SAMPLES: usize = 10_000;

/// Required ratio `slack(σ_max) / slack(σ_min)`.
pub const TIGHTENING_FACTOR: f64 = 3.0;

/// Which simulated setting a sweep runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    NonAdversarial,
    Adversarial,
}

/// Scalar hypothesis `x ↦ w x + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarHypothesis {
    pub w: f64,
    pub b: f64,
}

impl Default for ScalarHypothesis {
    fn default() -> Self {
        ScalarHypothesis { w: -5.0, b: 0.0 }
    }
}

impl ScalarHypothesis {
    pub fn linear(self) -> LinearHypothesis {
        LinearHypothesis::scalar(self.w, self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub setting: Setting,
    pub sigmas: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub hypothesis: ScalarHypothesis,
    pub gamma: f64,
    pub losses: Vec<MarginLoss>,
    pub spec: HypothesisSpec,
    pub massart_beta: f64,
}

impl SweepConfig {
    /// Quadratic, logistic and exponential losses over all measurable
    /// functions with noise margin `β = 1/2`.
    pub fn nonadversarial() -> Self {
        SweepConfig {
            setting: Setting::NonAdversarial,
            sigmas: DEFAULT_SIGMAS.to_vec(),
            n_samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            hypothesis: ScalarHypothesis::default(),
            gamma: 0.0,
            losses: vec![MarginLoss::Quadratic, MarginLoss::Logistic, MarginLoss::Exponential],
            spec: HypothesisSpec::all(),
            massart_beta: 0.5,
        }
    }

    /// Supremum-based rho-margin (`ρ = 1`), hinge and sigmoid (`k = 1`)
    /// losses over linear predictors with `W = 5`, `B = 1`, `γ = 0.1`.
    pub fn adversarial() -> Self {
        let spec =
            HypothesisSpec::linear(5.0, Magnitude::Finite(1.0)).and_then(|s| s.with_gamma(0.1)).expect("valid preset");
        SweepConfig {
            setting: Setting::Adversarial,
            sigmas: DEFAULT_SIGMAS.to_vec(),
            n_samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            hypothesis: ScalarHypothesis::default(),
            gamma: 0.1,
            losses: vec![MarginLoss::RhoMargin { rho: 1.0 }, MarginLoss::Hinge, MarginLoss::Sigmoid { k: 1.0 }],
            spec,
            massart_beta: 0.5,
        }
    }

    pub fn validated(self) -> Result<Self> {
        if self.sigmas.is_empty() {
            return Err(invalid("sigmas", "need at least one noise scale"));
        }
        if self.sigmas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("sigmas", "noise scales must be strictly decreasing"));
        }
        if self.n_samples < MIN_SAMPLES {
            return Err(invalid("n", format!("need at least {MIN_SAMPLES} samples, got {}", self.n_samples)));
        }
        MassartParams::new(self.massart_beta)?;
        let spec = self.spec.validated()?;
        self.hypothesis.linear().check_against(&spec)?;
        for loss in &self.losses {
            loss.validated()?;
        }
        match self.setting {
            Setting::NonAdversarial => {
                for loss in &self.losses {
                    if !matches!(loss, MarginLoss::Quadratic | MarginLoss::Logistic | MarginLoss::Exponential) {
                        return Err(invalid(
                            "loss",
                            format!(
                                "the non-adversarial sweep takes quadratic, logistic or exponential losses, got {loss}"
                            ),
                        ));
                    }
                }
                if spec.is_adversarial() {
                    return Err(invalid("gamma", "the non-adversarial sweep needs gamma = 0"));
                }
            }
            Setting::Adversarial => {
                for loss in &self.losses {
                    if !matches!(loss, MarginLoss::RhoMargin { .. } | MarginLoss::Hinge | MarginLoss::Sigmoid { .. }) {
                        return Err(invalid(
                            "loss",
                            format!("the adversarial sweep takes rho-margin, hinge or sigmoid losses, got {loss}"),
                        ));
                    }
                }
                if spec.gamma != self.gamma || !spec.is_adversarial() {
                    return Err(invalid("gamma", "the adversarial sweep needs gamma > 0 matching the class"));
                }
            }
        }
        Ok(SweepConfig { spec, ..self })
    }

    fn distribution(&self, sigma: f64) -> Result<LabeledDistribution> {
        match self.setting {
            Setting::NonAdversarial => LabeledDistribution::nonadversarial_example(sigma),
            Setting::Adversarial => LabeledDistribution::adversarial_example(sigma, self.gamma),
        }
    }
}

/// One `(σ, loss)` cell of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub loss: String,
    pub lhs: f64,
    pub rhs: f64,
    pub stderr_lhs: f64,
    pub stderr_rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Per-loss tightening verdict across the σ grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tightening {
    pub loss: String,
    pub first_slack: f64,
    pub last_slack: f64,
    /// Each slack is at most its predecessor plus three combined stderrs.
    pub monotone: bool,
    /// `slack(σ_min) ≤ slack(σ_max) / TIGHTENING_FACTOR`.
    pub decayed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub reports: Vec<BoundReport>,
    pub tightening: Vec<Tightening>,
    pub notes: Vec<String>,
}

impl SweepResult {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }

    pub fn all_tighten(&self) -> bool {
        self.tightening.iter().all(|t| t.monotone && t.decayed)
    }
}

fn tightening(cfg: &SweepConfig, rows: &[SweepRow]) -> Vec<Tightening> {
    cfg.losses
        .iter()
        .map(|loss| {
            let name = loss.to_string();
            let cells: Vec<&SweepRow> = rows.iter().filter(|r| r.loss == name).collect();
            let monotone = cells.windows(2).all(|w| {
                let noise = 3.0 * (w[0].stderr_lhs + w[0].stderr_rhs + w[1].stderr_lhs + w[1].stderr_rhs);
                w[1].slack <= w[0].slack + noise
            });
            let (first, last) = (cells[0].slack, cells[cells.len() - 1].slack);
            Tightening {
                loss: name,
                first_slack: first,
                last_slack: last,
                monotone,
                decayed: last <= first / TIGHTENING_FACTOR,
            }
        })
        .collect()
}

fn run_cell(cfg: &SweepConfig, sigma: f64, loss: &MarginLoss) -> Result<(SweepRow, BoundReport)> {
    let dist = cfg.distribution(sigma)?;
    let h = cfg.hypothesis.linear();
    let options = BoundOptions {
        massart: Some(MassartParams::new(cfg.massart_beta)?),
        mode: RiskMode::MonteCarlo { n: cfg.n_samples, seed: cfg.seed },
        compute_gaps: false,
    };
    let target = match cfg.setting {
        Setting::NonAdversarial => Target::ZeroOne,
        Setting::Adversarial => Target::AdversarialZeroOne,
    };
    let report = assemble_bound(target, loss, &cfg.spec, &dist, &h, options)?;
    let row = match cfg.setting {
        Setting::NonAdversarial => SweepRow {
            sigma,
            loss: loss.to_string(),
            lhs: report.lhs,
            rhs: report.rhs,
            stderr_lhs: report.mc_stderr_lhs,
            stderr_rhs: report.mc_stderr_rhs,
            slack: report.slack,
            holds: report.holds,
        },
        Setting::Adversarial => {
            let sample = dist.sample(cfg.n_samples, cfg.seed);
            let r = empirical_risks(&[RiskLoss::ZeroOne, RiskLoss::Margin(*loss)], &h, &sample, Some(cfg.gamma))?;
            SweepRow {
                sigma,
                loss: loss.to_string(),
                lhs: r[0].value,
                rhs: r[1].value,
                stderr_lhs: r[0].stderr,
                stderr_rhs: r[1].stderr,
                slack: r[1].value - r[0].value,
                holds: bound_holds(r[0].value, r[1].value, r[0].stderr, r[1].stderr, 0.0),
            }
        }
    };
    Ok((row, report))
}

/// Runs every `(σ, loss)` cell. Non-adversarial rows report the
/// noise-margin bound `R_01(h) − R*_01 ≤ R_Φ(h) − R*_Φ`; adversarial rows
/// report the reduced form `R_γ(h) ≤ R_Φ̃(h)`. Cells run in parallel and
/// are collected in `(σ, loss)` order.
pub fn run_sweep(cfg: SweepConfig) -> Result<SweepResult> {
    let cfg = cfg.validated()?;
    let cells: Vec<(f64, MarginLoss)> =
        cfg.sigmas.iter().flat_map(|&s| cfg.losses.iter().map(move |&l| (s, l))).collect();
    let outcomes = cells.par_iter().map(|(sigma, loss)| run_cell(&cfg, *sigma, loss)).collect::<Result<Vec<_>>>()?;
    let (rows, reports): (Vec<SweepRow>, Vec<BoundReport>) = outcomes.into_iter().unzip();
    let tightening = tightening(&cfg, &rows);
    let mut notes = vec![format!(
        "noise scales {:?} are a chosen grid; tightness is judged by monotone decay and a {TIGHTENING_FACTOR}x drop",
        cfg.sigmas
    )];
    if cfg.setting == Setting::Adversarial {
        notes.push("rows compare absolute risks; reports carry the full noise-margin bound".into());
    }
    Ok(SweepResult { config: cfg, rows, reports, tightening, notes })
}

pub fn run_nonadversarial_sweep(cfg: SweepConfig) -> Result<SweepResult> {
    if cfg.setting != Setting::NonAdversarial {
        return Err(Error::Config("expected a non-adversarial sweep configuration".into()));
    }
    run_sweep(cfg)
}

pub fn run_adversarial_sweep(cfg: SweepConfig) -> Result<SweepResult> {
    if cfg.setting != Setting::Adversarial {
        return Err(Error::Config("expected an adversarial sweep configuration".into()));
    }
    run_sweep(cfg)
}

/// Best-in-class risks of the zero-one loss and each surrogate at `sigma`,
/// over the configured class.
pub fn minimal_errors(cfg: &SweepConfig, sigma: f64) -> Result<Vec<(String, f64)>> {
    let dist = cfg.distribution(sigma)?;
    let adversarial = cfg.setting == Setting::Adversarial;
    std::iter::once(RiskLoss::ZeroOne)
        .chain(cfg.losses.iter().map(|&l| RiskLoss::Margin(l)))
        .map(|loss| {
            let name = match loss {
                RiskLoss::ZeroOne => "zero-one".to_string(),
                RiskLoss::Margin(l) => l.to_string(),
            };
            Ok((name, best_in_class_risk(loss, &cfg.spec, &dist, adversarial)?.value))
        })
        .collect()
}

/// One sample of a transform-figure curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub loss: String,
    /// `surrogate` (`Φ(α)` on `[−2, 2]`), `transform` (`T(t)` on `[0, 1]`),
    /// `inverse` (`T⁻¹` as used in bounds) or `inverse-exact` (bisection).
    pub curve: String,
    pub t: f64,
    pub value: f64,
}

/// The losses drawn in the transform figure: `k = 1`, `ρ = 1`.
pub fn figure_losses() -> Vec<MarginLoss> {
    LossFamily::ALL.iter().map(|&f| MarginLoss::from_family(f, 1.0, 1.0).expect("valid defaults")).collect()
}

/// The linear class used in the transform figure: `W = 1`, `B = 0.8`.
pub fn figure_spec() -> HypothesisSpec {
    HypothesisSpec::linear(1.0, Magnitude::Finite(0.8)).expect("valid preset")
}

pub fn emit_transform_curves(losses: &[MarginLoss], spec: &HypothesisSpec, grid_n: usize) -> Result<Vec<CurveRow>> {
    if grid_n < 100 {
        return Err(invalid("grid_n", format!("curves need at least 100 points, got {grid_n}")));
    }
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (grid_n - 1) as f64;
    let mut rows = Vec::with_capacity(4 * grid_n * losses.len());
    for loss in losses {
        let name = loss.to_string();
        let forward = transform(loss, spec, TruncationEps::ZERO)?;
        let inverse = transform_inverse(loss, spec)?;
        let top = forward.value_at_one();
        let mut push =
            |curve: &str, t: f64, value: f64| rows.push(CurveRow { loss: name.clone(), curve: curve.into(), t, value });
        for i in 0..grid_n {
            let a = step(-2.0, 2.0, i);
            push("surrogate", a, loss.eval(a));
        }
        for i in 0..grid_n {
            let t = step(0.0, 1.0, i);
            push("transform", t, forward.eval(t));
        }
        for i in 0..grid_n {
            let v = step(0.0, top, i);
            push("inverse", v, inverse.eval(v));
            push("inverse-exact", v, forward.invert_numerically(v.min(top))?);
        }
    }
    Ok(rows)
}

/// Formats a number with 17 significant digits.
pub fn format_json_number(v: f64) -> String {
    if v == 0.0 {
        format!("{:.16e}", 0.0)
    } else if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

/// Formats a number rounded to 12 significant digits.
pub fn format_csv_number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Re-renders every number in a JSON value with 17 significant digits.
pub fn to_json_17(value: &serde_json::Value) -> String {
    fn render(v: &serde_json::Value, out: &mut String) {
        use serde_json::Value;
        match v {
            Value::Number(n) => match n.as_f64() {
                Some(f) if n.is_f64() => out.push_str(&format_json_number(f)),
                _ => out.push_str(&n.to_string()),
            },
            Value::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    render(item, out);
                }
                out.push(']');
            }
            Value::Object(map) => {
                out.push('{');
                for (i, (k, item)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&serde_json::to_string(k).expect("string keys serialize"));
                    out.push(':');
                    render(item, out);
                }
                out.push('}');
            }
            other => out.push_str(&other.to_string()),
        }
    }
    let mut out = String::new();
    render(value, &mut out);
    out
}

/// Serializes any value as JSON with 17 significant digits.
pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Config(format!("serialization: {e}")))?;
    Ok(to_json_17(&v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mut cfg: SweepConfig, n: usize) -> SweepConfig {
        cfg.n_samples = n;
        cfg
    }

    #[test]
    fn config_validation() {
        let mut c = SweepConfig::nonadversarial();
        c.sigmas = vec![0.1, 0.2];
        assert!(c.validated().is_err());
        assert!(small(SweepConfig::nonadversarial(), 100).validated().is_err());
        let mut c = SweepConfig::nonadversarial();
        c.losses = vec![MarginLoss::Hinge];
        assert!(c.validated().is_err());
        let mut c = SweepConfig::adversarial();
        c.losses = vec![MarginLoss::Logistic];
        assert!(c.validated().is_err());
        let mut c = SweepConfig::adversarial();
        c.massart_beta = 0.7;
        assert!(c.validated().is_err());
        let text = serde_json::to_string(&SweepConfig::adversarial()).unwrap();
        let back: SweepConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, SweepConfig::adversarial());
    }

    #[test]
    fn sweeps_are_deterministic() {
        let a = run_sweep(small(SweepConfig::adversarial(), 20_000)).unwrap();
        let b = run_sweep(small(SweepConfig::adversarial(), 20_000)).unwrap();
        assert_eq!(json_string(&a).unwrap(), json_string(&b).unwrap());
        assert!(a.all_hold());
    }

    #[test]
    fn stderr_scales_with_sample_size() {
        let mut cfg = small(SweepConfig::nonadversarial(), 10_000);
        cfg.sigmas = vec![0.2];
        let few = run_sweep(cfg.clone()).unwrap();
        cfg.n_samples = 1_000_000;
        let many = run_sweep(cfg).unwrap();
        for (a, b) in few.rows.iter().zip(&many.rows) {
            let ratio = a.stderr_rhs / b.stderr_rhs;
            assert!((ratio / 10.0 - 1.0).abs() < 0.2, "{}: {ratio}", a.loss);
            let ratio = a.stderr_lhs / b.stderr_lhs;
            assert!((ratio / 10.0 - 1.0).abs() < 0.2, "{}: {ratio}", a.loss);
        }
    }

    #[test]
    fn minimal_errors_vanish() {
        let cfg = SweepConfig::nonadversarial();
        for sigma in [0.05, 0.01] {
            for (name, v) in minimal_errors(&cfg, sigma).unwrap() {
                assert!(v.abs() <= 1e-3, "{name} at {sigma}: {v}");
            }
        }
    }

    #[test]
    fn figure_curves() {
        let spec = figure_spec();
        let rows = emit_transform_curves(&figure_losses(), &spec, 201).unwrap();
        for loss in figure_losses() {
            let inv: Vec<&CurveRow> =
                rows.iter().filter(|r| r.loss == loss.to_string() && r.curve == "inverse").collect();
            assert_eq!(inv[0].t, 0.0);
            assert!(inv[0].value.abs() < 1e-12);
            for r in &inv {
                match loss {
                    MarginLoss::Hinge => assert!((r.value - r.t / 0.8).abs() < 1e-12),
                    MarginLoss::Sigmoid { k } => assert!((r.value - r.t / (0.8 * k).tanh()).abs() < 1e-12),
                    _ => {}
                }
            }
        }
        assert!(emit_transform_curves(&figure_losses(), &spec, 50).is_err());
    }

    #[test]
    fn number_formats() {
        assert_eq!(format_json_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_csv_number(0.1 + 0.2), "0.3");
        assert_eq!(format_csv_number(1.0 / 3.0), "0.333333333333");
        let v = serde_json::json!({"a": [1.5, 2], "b": "x"});
        assert_eq!(to_json_17(&v), r#"{"a":[1.5000000000000000e0,2],"b":"x"}"#);
    }
}
