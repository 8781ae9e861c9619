use std::path::{Path, PathBuf};

use hcbound::bounds::{assemble_bound, BoundOptions, BoundReport, RiskMode, Target};
use hcbound::conditional_risk::{
    brute_force_inf, min_conditional_risk, min_conditional_risk_adversarial, ConditionalPoint, Constraint,
};
use hcbound::experiments::{
    emit_transform_curves, figure_losses, figure_spec, run_sweep, CurveRow, SweepConfig, SweepResult,
};
use hcbound::hypotheses::{HypothesisSpec, LinearHypothesis, Magnitude};
use hcbound::losses::{LossFamily, MarginLoss, TruncationEps};
use hcbound::transforms::{
    adversarial_transform, massart_adversarial_transform, massart_transform, transform, transform_inverse,
    PiecewiseTransform,
};
use hcbound::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{ClassArg, CommonArgs, ExperimentArg, FormatArg, ModeArg, TargetArg};
use crate::output::{emit, to_json, Cell, Table};

/// Whether every check in a command passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Passed,
    CheckFailed,
}

impl Status {
    fn from_pass(pass: bool) -> Status {
        if pass {
            Status::Passed
        } else {
            Status::CheckFailed
        }
    }
}

/// Oracle tolerance at 4001 grid points; coarser grids scale it up.
const ORACLE_TOL: f64 = 2e-3;
const ORACLE_GRID: usize = 4001;

#[derive(Serialize)]
struct CurvePoint {
    t: f64,
    value: f64,
}

#[derive(Serialize)]
struct TransformOutput {
    transform: PiecewiseTransform,
    inverse: Option<PiecewiseTransform>,
    curve: Vec<CurvePoint>,
    inverse_curve: Vec<CurvePoint>,
}

fn select_transform(args: &CommonArgs) -> Result<(PiecewiseTransform, Option<PiecewiseTransform>)> {
    let (loss, _) = args.loss()?;
    let spec = args.spec()?;
    let eps = TruncationEps::new(args.eps.unwrap_or(0.0))?;
    let massart = args.massart()?;
    let forward = match (spec.is_adversarial(), massart, loss) {
        (true, Some(mp), MarginLoss::Hinge | MarginLoss::Sigmoid { .. }) => {
            massart_adversarial_transform(&loss, &spec, mp)?
        }
        (true, _, _) => adversarial_transform(&loss, &spec, eps)?,
        (false, Some(mp), _) => massart_transform(&loss, &spec, mp)?,
        (false, None, _) => transform(&loss, &spec, eps)?,
    };
    let standard = !spec.is_adversarial() && massart.is_none() && eps.value() == 0.0;
    let inverse = if standard { Some(transform_inverse(&loss, &spec)?) } else { forward.inverse().ok() };
    Ok((forward, inverse))
}

pub fn transform_cmd(args: &CommonArgs) -> Result<Status> {
    let (forward, inverse) = select_transform(args)?;
    let n = args.grid_n.unwrap_or(101);
    if n < 2 {
        return Err(Error::Config("--grid-n must be at least 2".into()));
    }
    let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let curve: Vec<CurvePoint> =
        (0..n).map(|i| at(0.0, 1.0, i)).map(|t| CurvePoint { t, value: forward.eval(t) }).collect();
    let top = forward.value_at_one();
    let inverse_curve: Vec<CurvePoint> = match &inverse {
        Some(inv) => (0..n).map(|i| at(0.0, top, i)).map(|t| CurvePoint { t, value: inv.eval(t) }).collect(),
        None => Vec::new(),
    };
    let text = match args.format() {
        FormatArg::Json => to_json(&TransformOutput { transform: forward, inverse, curve, inverse_curve })?,
        FormatArg::Csv => {
            let mut table = Table::new(vec!["curve", "t", "value"]);
            for (name, points) in [("transform", &curve), ("inverse", &inverse_curve)] {
                for p in points {
                    table.rows.push(vec![Cell::Text(name.into()), Cell::Num(p.t), Cell::Num(p.value)]);
                }
            }
            table.to_csv()?
        }
    };
    emit(args.out.as_deref(), &text)?;
    Ok(Status::Passed)
}

fn bound_table(reports: &[&BoundReport]) -> Table {
    let mut table = Table::new(vec![
        "target",
        "surrogate",
        "lhs",
        "rhs",
        "slack",
        "mc_stderr_lhs",
        "mc_stderr_rhs",
        "holds",
        "calibration",
    ]);
    for r in reports {
        let target = match r.target {
            Target::ZeroOne => "zero-one",
            Target::AdversarialZeroOne => "adversarial-zero-one",
        };
        table.rows.push(vec![
            Cell::Text(target.into()),
            Cell::Text(r.surrogate.to_string()),
            Cell::Num(r.lhs),
            Cell::Num(r.rhs),
            Cell::Num(r.slack),
            Cell::Num(r.mc_stderr_lhs),
            Cell::Num(r.mc_stderr_rhs),
            Cell::Flag(r.holds),
            Cell::Text(r.components.calibration.clone()),
        ]);
    }
    table
}

pub fn bound_cmd(args: &CommonArgs) -> Result<Status> {
    let (loss, _) = args.loss()?;
    let spec = args.spec()?;
    let target = match args.target {
        Some(TargetArg::ZeroOne) => Target::ZeroOne,
        Some(TargetArg::AdversarialZeroOne) => Target::AdversarialZeroOne,
        None if spec.is_adversarial() => Target::AdversarialZeroOne,
        None => Target::ZeroOne,
    };
    let mode = match args.mode.unwrap_or(ModeArg::Exact) {
        ModeArg::Exact => RiskMode::Exact,
        ModeArg::Mc => RiskMode::MonteCarlo { n: args.n.unwrap_or(1_000_000), seed: args.seed() },
    };
    let options = BoundOptions { massart: args.massart()?, mode, compute_gaps: args.gaps.unwrap_or(false) };
    let dist = args.distribution()?;
    let h = LinearHypothesis::scalar(args.h_w.unwrap_or(-5.0), args.h_b.unwrap_or(0.0));
    let report = assemble_bound(target, &loss, &spec, &dist, &h, options)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = match args.format() {
        FormatArg::Json => to_json(&report)?,
        FormatArg::Csv => bound_table(&[&report]).to_csv()?,
    };
    emit(args.out.as_deref(), &text)?;
    Ok(Status::from_pass(report.holds))
}

#[derive(Clone, Debug, Serialize)]
struct OracleRow {
    loss: String,
    class: String,
    adversarial: bool,
    instances: usize,
    grid_n: usize,
    max_deviation: f64,
    threshold: f64,
    pass: bool,
}

#[derive(Serialize)]
struct OracleSummary {
    grid_n: usize,
    threshold: f64,
    tamper: f64,
    max_deviation: f64,
    pass: bool,
    rows: Vec<OracleRow>,
}

fn random_spec(rng: &mut ChaCha8Rng, class: ClassArg) -> Result<HypothesisSpec> {
    let (w, b) = (rng.random_range(0.1..3.0), Magnitude::Finite(rng.random_range(0.05..2.0)));
    match class {
        ClassArg::Relu => HypothesisSpec::relu(rng.random_range(0.2..2.0), w, b),
        _ => HypothesisSpec::linear(w, b),
    }
}

fn oracle_pairs(args: &CommonArgs) -> Result<Vec<(LossFamily, ClassArg, bool)>> {
    let families: Vec<LossFamily> = match args.loss.as_deref() {
        Some(name) => vec![name.trim_start_matches("sup-").parse()?],
        None => LossFamily::ALL.to_vec(),
    };
    let classes = match args.class {
        Some(ClassArg::All) => return Err(Error::Config("oracle checks need a bounded class: linear or relu".into())),
        Some(c) => vec![c],
        None => vec![ClassArg::Linear, ClassArg::Relu],
    };
    let mut pairs = Vec::new();
    for &f in &families {
        for &c in &classes {
            pairs.push((f, c, false));
        }
    }
    if families.contains(&LossFamily::RhoMargin) {
        for &c in &classes {
            pairs.push((LossFamily::RhoMargin, c, true));
        }
    }
    Ok(pairs)
}

pub fn oracle_check_cmd(args: &CommonArgs) -> Result<Status> {
    let grid_n = args.grid_n.unwrap_or(ORACLE_GRID);
    if grid_n < 3 {
        return Err(Error::Config("--grid-n must be at least 3".into()));
    }
    let instances = args.instances.unwrap_or(100);
    if instances == 0 {
        return Err(Error::Config("--instances must be positive".into()));
    }
    let tamper = args.tamper.unwrap_or(0.0);
    let threshold = ORACLE_TOL * ((ORACLE_GRID - 1) as f64 / (grid_n - 1) as f64).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed());
    let mut rows = Vec::new();
    for (family, class, adversarial) in oracle_pairs(args)? {
        let mut cases = Vec::with_capacity(instances);
        for _ in 0..instances {
            let loss = MarginLoss::from_family(family, rng.random_range(0.5..3.0), rng.random_range(0.2..2.0))?;
            let mut spec = random_spec(&mut rng, class)?;
            if adversarial {
                spec = spec.with_gamma(rng.random_range(0.01..0.5))?;
            }
            let point = ConditionalPoint::new(rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0))?;
            cases.push((loss, spec, point));
        }
        let deviations = cases
            .par_iter()
            .map(|(loss, spec, point)| {
                let closed = if adversarial {
                    min_conditional_risk_adversarial(loss, spec, *point)?.lower
                } else {
                    min_conditional_risk(loss, spec, *point)?
                };
                let oracle = brute_force_inf(loss, spec, *point, Constraint::None, grid_n)?;
                Ok((closed + tamper - oracle).abs())
            })
            .collect::<Result<Vec<f64>>>()?;
        let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
        rows.push(OracleRow {
            loss: family.name().into(),
            class: format!("{class:?}").to_lowercase(),
            adversarial,
            instances,
            grid_n,
            max_deviation,
            threshold,
            pass: max_deviation <= threshold,
        });
    }
    let max_deviation = rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    let pass = rows.iter().all(|r| r.pass);
    eprintln!(
        "oracle-check: {} pairs, max deviation {max_deviation:.3e}, threshold {threshold:.3e}: {}",
        rows.len(),
        if pass { "pass" } else { "FAIL" }
    );
    let text = match args.format() {
        FormatArg::Json => to_json(&OracleSummary { grid_n, threshold, tamper, max_deviation, pass, rows })?,
        FormatArg::Csv => {
            let mut table = Table::new(vec![
                "loss",
                "class",
                "adversarial",
                "instances",
                "grid_n",
                "max_deviation",
                "threshold",
                "pass",
            ]);
            for r in rows {
                table.rows.push(vec![
                    Cell::Text(r.loss),
                    Cell::Text(r.class),
                    Cell::Flag(r.adversarial),
                    Cell::Int(r.instances as u64),
                    Cell::Int(r.grid_n as u64),
                    Cell::Num(r.max_deviation),
                    Cell::Num(r.threshold),
                    Cell::Flag(r.pass),
                ]);
            }
            table.to_csv()?
        }
    };
    emit(args.out.as_deref(), &text)?;
    Ok(Status::from_pass(pass))
}

fn sweep_table(result: &SweepResult) -> Table {
    let mut table = Table::new(vec!["sigma", "loss", "lhs", "rhs", "stderr_lhs", "stderr_rhs", "slack", "holds"]);
    for r in &result.rows {
        table.rows.push(vec![
            Cell::Num(r.sigma),
            Cell::Text(r.loss.clone()),
            Cell::Num(r.lhs),
            Cell::Num(r.rhs),
            Cell::Num(r.stderr_lhs),
            Cell::Num(r.stderr_rhs),
            Cell::Num(r.slack),
            Cell::Flag(r.holds),
        ]);
    }
    table
}

fn curve_table(rows: &[CurveRow]) -> Table {
    let mut table = Table::new(vec!["loss", "curve", "t", "value"]);
    for r in rows {
        table.rows.push(vec![
            Cell::Text(r.loss.clone()),
            Cell::Text(r.curve.clone()),
            Cell::Num(r.t),
            Cell::Num(r.value),
        ]);
    }
    table
}

#[derive(Serialize)]
struct FigureOutput {
    spec: HypothesisSpec,
    rows: Vec<CurveRow>,
}

/// Writes both formats next to `out` (`.csv` and `.json`), or the selected
/// format to stdout.
fn emit_both(args: &CommonArgs, json: String, csv: String) -> Result<()> {
    match args.out.as_deref() {
        Some(path) => {
            let with = |ext: &str| -> PathBuf { path.with_extension(ext) };
            emit(Some(Path::new(&with("json"))), &json)?;
            emit(Some(Path::new(&with("csv"))), &csv)
        }
        None => emit(None, if args.format() == FormatArg::Json { &json } else { &csv }),
    }
}

pub fn sweep_cmd(args: &CommonArgs) -> Result<Status> {
    let experiment = args.experiment.ok_or_else(|| Error::Config("--experiment is required".into()))?;
    if experiment == ExperimentArg::Figure {
        let mut spec = figure_spec();
        if let Some(b) = args.b_bound {
            spec = HypothesisSpec::linear(args.w_bound.unwrap_or(1.0), b)?;
        }
        let rows = emit_transform_curves(&figure_losses(), &spec, args.grid_n.unwrap_or(401))?;
        let csv = curve_table(&rows).to_csv()?;
        emit_both(args, to_json(&FigureOutput { spec, rows })?, csv)?;
        return Ok(Status::Passed);
    }
    let mut cfg = match experiment {
        ExperimentArg::NonAdversarial => SweepConfig::nonadversarial(),
        _ => SweepConfig::adversarial(),
    };
    if let Some(n) = args.n {
        cfg.n_samples = n;
    }
    cfg.seed = args.seed();
    if let Some(s) = &args.sigmas {
        cfg.sigmas = s.clone();
    }
    let result = run_sweep(cfg)?;
    for t in &result.tightening {
        eprintln!(
            "{}: slack {:.4e} -> {:.4e}, monotone {}, decayed {}",
            t.loss, t.first_slack, t.last_slack, t.monotone, t.decayed
        );
    }
    emit_both(args, to_json(&result)?, sweep_table(&result).to_csv()?)?;
    Ok(Status::from_pass(result.all_hold()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_pairs_cover_tables() {
        let pairs = oracle_pairs(&CommonArgs::default()).unwrap();
        assert_eq!(pairs.len(), 14);
        let only = CommonArgs { loss: Some("sup-rho".into()), class: Some(ClassArg::Linear), ..CommonArgs::default() };
        assert_eq!(oracle_pairs(&only).unwrap().len(), 2);
    }
}
