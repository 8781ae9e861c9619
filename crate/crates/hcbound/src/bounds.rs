//! Risks, best-in-class risks, minimizability gaps and assembled
//! estimation-error bounds for scalar-input hypotheses.
//!
//! A bound is reported with both minimizability gaps folded in:
//! `lhs = R_target(h) − E_X[C*_target]` and
//! `rhs = Γ(R_surrogate(h) − E_X[C*_surrogate])`, where `Γ` inverts the
//! selected transform. Since `R* − E[C*] = M`, this is the bound with the
//! target gap moved to the left-hand side.

use std::cell::RefCell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditional_risk::{
    brute_force_inf, min_conditional_risk, min_conditional_risk_adversarial, min_risk_at_reach,
    wrong_side_min_risk_at_reach, ConditionalPoint, Constraint, Interval,
};
use crate::distributions::{FiniteDistribution, LabeledDistribution, LabeledPoint, QUADRATURE_TOL, SAMPLE_CHUNK};
use crate::error::{invalid, Error, Result};
use crate::hypotheses::{HypothesisClass, HypothesisSpec, LinearHypothesis, Magnitude};
use crate::losses::{adversarial_zero_one, sup_loss, zero_one, Label, MarginLoss, TruncationEps};
use crate::transforms::{
    adversarial_transform, massart_adversarial_transform, massart_slope, massart_transform, transform_inverse,
    MassartParams, PiecewiseTransform,
};

/// Slack allowed on exactly evaluated bounds, covering quadrature error.
pub const EXACT_TOL: f64 = 1e-6;

/// Grid points per axis in each best-in-class refinement round.
pub const REFINE_GRID: usize = 21;

/// Number of best-in-class refinement rounds; each shrinks the box tenfold.
pub const REFINE_ROUNDS: usize = 3;

/// Points on `[−1, 1]` at which the noise margin is checked, besides atoms.
pub const MASSART_CHECK_POINTS: usize = 10_000;

/// The loss a bound controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    ZeroOne,
    AdversarialZeroOne,
}

impl Target {
    pub fn is_adversarial(self) -> bool {
        self == Target::AdversarialZeroOne
    }
}

/// A loss whose risk can be evaluated: the zero-one loss or a margin loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskLoss {
    ZeroOne,
    Margin(MarginLoss),
}

/// How risks are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RiskMode {
    Exact,
    MonteCarlo { n: usize, seed: u64 },
}

/// A risk value with its Monte Carlo standard error (zero when exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub stderr: f64,
}

fn scalar_weight(h: &LinearHypothesis) -> Result<f64> {
    match h.w.as_slice() {
        [w] => Ok(*w),
        _ => Err(invalid("w", format!("scalar inputs need a one-dimensional hypothesis, got {} weights", h.w.len()))),
    }
}

fn check_radius(radius: Option<f64>) -> Result<()> {
    match radius {
        Some(g) if !(0.0..1.0).contains(&g) => Err(invalid("gamma", format!("must lie in [0, 1), got {g}"))),
        _ => Ok(()),
    }
}

/// Loss of `h` at `(x, y)`; with a radius, the worst case over the ball.
pub fn pointwise_loss(loss: RiskLoss, w: f64, b: f64, radius: Option<f64>, x: f64, y: Label) -> f64 {
    let centre = w * x + b;
    match radius {
        None => match loss {
            RiskLoss::ZeroOne => zero_one(centre, y),
            RiskLoss::Margin(l) => l.eval(y.sign() * centre),
        },
        Some(gamma) => {
            let spread = gamma * w.abs();
            let (lo, hi) = (centre - spread, centre + spread);
            match loss {
                RiskLoss::ZeroOne => adversarial_zero_one(lo, hi, y).expect("ordered extrema"),
                RiskLoss::Margin(l) => sup_loss(&l, y, lo, hi).expect("ordered extrema"),
            }
        }
    }
}

fn loss_breaks(loss: RiskLoss, w: f64, b: f64, radius: Option<f64>) -> Vec<f64> {
    if w == 0.0 {
        return Vec::new();
    }
    let spread = radius.unwrap_or(0.0) * w.abs();
    let mut levels = vec![0.0, 1.0, -1.0];
    if let RiskLoss::Margin(MarginLoss::RhoMargin { rho }) = loss {
        levels.extend([rho, -rho]);
    }
    let mut out = Vec::new();
    for level in levels {
        for offset in [0.0, spread, -spread] {
            out.push((level - b - offset) / w);
        }
    }
    out
}

/// Risk of `h` under `dist`. With a radius, the adversarial risk.
pub fn risk(
    loss: RiskLoss,
    h: &LinearHypothesis,
    dist: &LabeledDistribution,
    mode: RiskMode,
    radius: Option<f64>,
) -> Result<RiskEstimate> {
    match mode {
        RiskMode::Exact => {
            let w = scalar_weight(h)?;
            check_radius(radius)?;
            let value = dist.integrate_labeled(
                |x, y| pointwise_loss(loss, w, h.b, radius, x, y),
                &loss_breaks(loss, w, h.b, radius),
            )?;
            Ok(RiskEstimate { value, stderr: 0.0 })
        }
        RiskMode::MonteCarlo { n, seed } => {
            let sample = draw(dist, n, seed)?;
            Ok(empirical_risks(&[loss], h, &sample, radius)?[0])
        }
    }
}

fn draw(dist: &LabeledDistribution, n: usize, seed: u64) -> Result<Vec<LabeledPoint>> {
    if n < 2 {
        return Err(invalid("n", format!("Monte Carlo needs at least 2 samples, got {n}")));
    }
    Ok(dist.sample(n, seed))
}

/// Empirical risks of several losses on one shared sample. Partial sums are
/// formed per fixed-size chunk and combined in order, so results do not
/// depend on the thread count.
pub fn empirical_risks(
    losses: &[RiskLoss],
    h: &LinearHypothesis,
    sample: &[LabeledPoint],
    radius: Option<f64>,
) -> Result<Vec<RiskEstimate>> {
    let w = scalar_weight(h)?;
    check_radius(radius)?;
    let n = sample.len();
    if n < 2 {
        return Err(invalid("n", format!("Monte Carlo needs at least 2 samples, got {n}")));
    }
    let k = losses.len();
    let partials: Vec<Vec<(f64, f64)>> = sample
        .par_chunks(SAMPLE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![(0.0, 0.0); k];
            for p in chunk {
                for (slot, &loss) in acc.iter_mut().zip(losses) {
                    let v = pointwise_loss(loss, w, h.b, radius, p.x, p.y);
                    slot.0 += v;
                    slot.1 += v * v;
                }
            }
            acc
        })
        .collect();
    let nf = n as f64;
    Ok((0..k)
        .map(|i| {
            let (s, s2) = partials.iter().fold((0.0, 0.0), |(a, b), p| (a + p[i].0, b + p[i].1));
            let mean = s / nf;
            let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
            RiskEstimate { value: mean, stderr: (var / nf).sqrt() }
        })
        .collect())
}

/// Minimal conditional target risk at a point.
pub fn target_min_risk(target: Target, spec: &HypothesisSpec, x_norm: f64, eta: f64) -> Result<Interval> {
    let floor = eta.min(1.0 - eta);
    match target {
        Target::ZeroOne => Ok(Interval::exact(if spec.score_reach(x_norm).is_positive() { floor } else { 1.0 - eta })),
        Target::AdversarialZeroOne => {
            if spec.class == HypothesisClass::All {
                return Ok(Interval::exact(floor));
            }
            let reach = spec.adversarial_reach(x_norm)?;
            Ok(if reach.lower > 0.0 {
                Interval::exact(floor)
            } else if reach.upper <= 0.0 {
                Interval::exact(1.0)
            } else {
                Interval { lower: floor, upper: 1.0 }
            })
        }
    }
}

/// Minimal conditional surrogate risk at a point, adversarial when
/// `adversarial` is set.
pub fn surrogate_min_risk(
    loss: &MarginLoss,
    spec: &HypothesisSpec,
    adversarial: bool,
    x_norm: f64,
    eta: f64,
) -> Result<Interval> {
    let point = ConditionalPoint::new(x_norm, eta)?;
    if adversarial {
        min_conditional_risk_adversarial(loss, spec, point)
    } else if spec.class == HypothesisClass::All {
        Ok(Interval::exact(min_risk_at_reach(loss, Magnitude::Infinite, eta)))
    } else {
        min_conditional_risk(loss, &HypothesisSpec { gamma: 0.0, ..*spec }, point).map(Interval::exact)
    }
}

fn min_risk_at(loss: RiskLoss, spec: &HypothesisSpec, adversarial: bool, x_norm: f64, eta: f64) -> Result<Interval> {
    match loss {
        RiskLoss::ZeroOne => {
            let target = if adversarial { Target::AdversarialZeroOne } else { Target::ZeroOne };
            target_min_risk(target, spec, x_norm, eta)
        }
        RiskLoss::Margin(l) => surrogate_min_risk(&l, spec, adversarial, x_norm, eta),
    }
}

/// `E_X[C*(x)]`, the expected minimal conditional risk, as an interval
/// wherever the pointwise value is only enclosed.
pub fn expected_min_risk(
    loss: RiskLoss,
    spec: &HypothesisSpec,
    dist: &LabeledDistribution,
    adversarial: bool,
) -> Result<Interval> {
    let failure = RefCell::new(None);
    let pointwise = |x: f64, eta: f64| match min_risk_at(loss, spec, adversarial, x.abs(), eta) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            Interval::exact(0.0)
        }
    };
    let breaks = [0.0, spec.gamma, -spec.gamma];
    let lower = dist.expectation(|x, eta| pointwise(x, eta).lower, &breaks)?;
    let upper = dist.expectation(|x, eta| pointwise(x, eta).upper, &breaks)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(Interval { lower, upper })
}

/// How a best-in-class risk was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BestInClassMethod {
    /// Pointwise minimizers combine into one member of the class.
    Pointwise,
    /// Coarse-to-fine search over `(w, b)`.
    Grid,
}

/// Best-in-class risk with the method that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestInClass {
    pub value: f64,
    pub method: BestInClassMethod,
    /// Final grid spacing in `(w, b)`; zero for pointwise values.
    pub tolerance: f64,
}

fn adversarial_radius(spec: &HypothesisSpec, adversarial: bool) -> Result<Option<f64>> {
    if adversarial && !spec.is_adversarial() {
        return Err(invalid("gamma", "adversarial risks require gamma > 0"));
    }
    Ok(adversarial.then_some(spec.gamma))
}

fn is_singleton(dist: &LabeledDistribution) -> bool {
    dist.component_breaks().is_empty() && dist.atom_support().len() == 1
}

/// `inf_{h ∈ H} R(h)` for scalar inputs.
///
/// All-measurable classes and singleton supports are solved pointwise.
/// Bounded linear classes are searched over `(w, b)` with
/// [`REFINE_ROUNDS`] rounds of tenfold refinement around the incumbent.
pub fn best_in_class_risk(
    loss: RiskLoss,
    spec: &HypothesisSpec,
    dist: &LabeledDistribution,
    adversarial: bool,
) -> Result<BestInClass> {
    let radius = adversarial_radius(spec, adversarial)?;
    let pointwise = spec.class == HypothesisClass::All && !adversarial || is_singleton(dist);
    if pointwise {
        let e = expected_min_risk(loss, spec, dist, adversarial)?;
        if e.is_exact() {
            return Ok(BestInClass { value: e.lower, method: BestInClassMethod::Pointwise, tolerance: 0.0 });
        }
    }
    let (w_bound, b_bound) = match spec.class {
        HypothesisClass::Linear { w_bound, b_bound: Magnitude::Finite(b) } => (w_bound, b),
        _ => {
            return Err(Error::Unsupported(format!(
                "best-in-class search over the {} class needs a bounded linear class",
                spec.class_name()
            )))
        }
    };
    let evaluate = |w: f64, b: f64| -> Result<f64> {
        Ok(risk(loss, &LinearHypothesis::scalar(w, b), dist, RiskMode::Exact, radius)?.value)
    };
    let axis = |centre: f64, half: f64, bound: f64| -> Vec<f64> {
        let (lo, hi) = ((centre - half).max(-bound), (centre + half).min(bound));
        (0..REFINE_GRID).map(|i| lo + (hi - lo) * i as f64 / (REFINE_GRID - 1) as f64).collect()
    };
    let (mut centre, mut half) = ((0.0, 0.0), (w_bound, b_bound));
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let mut spacing = 0.0;
    for _ in 0..REFINE_ROUNDS {
        let (ws, bs) = (axis(centre.0, half.0, w_bound), axis(centre.1, half.1, b_bound));
        spacing = f64::max(ws[1] - ws[0], bs[1] - bs[0]);
        let cells: Vec<(f64, f64)> = ws.iter().flat_map(|&w| bs.iter().map(move |&b| (w, b))).collect();
        let values = cells.par_iter().map(|&(w, b)| evaluate(w, b)).collect::<Result<Vec<f64>>>()?;
        for (&(w, b), &v) in cells.iter().zip(&values) {
            if v < best.0 {
                best = (v, w, b);
            }
        }
        centre = (best.1, best.2);
        half = (half.0 / 10.0, half.1 / 10.0);
    }
    Ok(BestInClass { value: best.0, method: BestInClassMethod::Grid, tolerance: spacing })
}

/// `R*_H − E_X[C*_H]`. Zero for all-measurable classes and singleton
/// supports; otherwise the best-in-class search minus the lower end of the
/// expected minimal conditional risk.
pub fn minimizability_gap(
    loss: RiskLoss,
    spec: &HypothesisSpec,
    dist: &LabeledDistribution,
    adversarial: bool,
) -> Result<f64> {
    adversarial_radius(spec, adversarial)?;
    if spec.class == HypothesisClass::All && !adversarial || is_singleton(dist) {
        return Ok(0.0);
    }
    let best = best_in_class_risk(loss, spec, dist, adversarial)?;
    Ok(best.value - expected_min_risk(loss, spec, dist, adversarial)?.lower)
}

/// The map `Γ` from the surrogate side to the target side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Calibration {
    /// Inverse of a piecewise transform.
    Inverse { inverse: PiecewiseTransform },
    /// Linear rate from a noise-margin transform.
    Linear { multiplier: f64, transform: PiecewiseTransform },
}

impl Calibration {
    pub fn eval(&self, v: f64) -> f64 {
        let v = v.max(0.0);
        match self {
            Calibration::Inverse { inverse } => inverse.eval(v),
            Calibration::Linear { multiplier, .. } => multiplier * v,
        }
    }

    pub fn derivative(&self, v: f64) -> f64 {
        match self {
            Calibration::Inverse { inverse } => inverse.derivative(v.max(0.0)),
            Calibration::Linear { multiplier, .. } => *multiplier,
        }
    }

    pub fn multiplier(&self) -> Option<f64> {
        match self {
            Calibration::Linear { multiplier, .. } => Some(*multiplier),
            Calibration::Inverse { .. } => None,
        }
    }

    pub fn relaxed(&self) -> bool {
        matches!(self, Calibration::Inverse { inverse } if inverse.relaxed)
    }

    pub fn describe(&self) -> String {
        match self {
            Calibration::Inverse { inverse } => {
                let kind = if inverse.relaxed { "relaxed-inverse" } else { "inverse" };
                format!("{kind}:{}", inverse.loss)
            }
            Calibration::Linear { multiplier, transform } => format!("linear:{}:{multiplier}", transform.loss),
        }
    }
}

fn linear_from(transform: PiecewiseTransform) -> Result<Calibration> {
    let slope = massart_slope(&transform);
    if !(slope > 0.0) {
        return Err(Error::Unsupported(format!("the noise-margin transform of the {} loss vanishes", transform.loss)));
    }
    Ok(Calibration::Linear { multiplier: 1.0 / slope, transform })
}

/// Selects `Γ` for a (target, surrogate, class, noise margin) combination,
/// rejecting combinations that admit no non-trivial bound.
pub fn calibration(
    target: Target,
    surrogate: &MarginLoss,
    spec: &HypothesisSpec,
    massart: Option<MassartParams>,
) -> Result<Calibration> {
    match (target, massart) {
        (Target::ZeroOne, None) => Ok(Calibration::Inverse { inverse: transform_inverse(surrogate, spec)? }),
        (Target::ZeroOne, Some(mp)) => linear_from(massart_transform(surrogate, spec, mp)?),
        (Target::AdversarialZeroOne, None) => Ok(Calibration::Inverse {
            inverse: adversarial_transform(surrogate, spec, TruncationEps::ZERO)?.inverse()?,
        }),
        (Target::AdversarialZeroOne, Some(mp)) => match surrogate {
            MarginLoss::RhoMargin { .. } => calibration(target, surrogate, spec, None),
            MarginLoss::Hinge | MarginLoss::Sigmoid { .. } => {
                linear_from(massart_adversarial_transform(surrogate, spec, mp)?)
            }
            _ => Err(Error::ImpossibleBound(format!(
                "the supremum-based {surrogate} loss admits no non-trivial bound, even under a noise margin"
            ))),
        },
    }
}

/// Points on the grid or atoms where `|η − 1/2| < β`.
pub fn massart_violations(dist: &LabeledDistribution, mp: MassartParams) -> Vec<(f64, f64)> {
    let beta = mp.beta();
    let grid = (0..MASSART_CHECK_POINTS).map(|i| -1.0 + 2.0 * i as f64 / (MASSART_CHECK_POINTS - 1) as f64);
    let atoms = dist.atom_support().into_iter().map(|(x, _, _)| x);
    grid.chain(atoms)
        .filter_map(|x| dist.eta(x).map(|eta| (x, eta)))
        .filter(|&(_, eta)| (eta - 0.5).abs() < beta - 1e-12)
        .collect()
}

/// Options for [`assemble_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub massart: Option<MassartParams>,
    pub mode: RiskMode,
    /// Also run the best-in-class searches and report both gaps.
    pub compute_gaps: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions { massart: None, mode: RiskMode::Exact, compute_gaps: false }
    }
}

/// Breakdown of an assembled bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundComponents {
    pub target_risk: RiskEstimate,
    pub surrogate_risk: RiskEstimate,
    pub expected_min_target: Interval,
    pub expected_min_surrogate: Interval,
    /// `R_surrogate(h) − E_X[C*_surrogate]`, the argument of `Γ`.
    pub surrogate_excess: f64,
    pub gap_surrogate: Option<f64>,
    pub gap_target: Option<f64>,
    pub calibration: String,
    pub multiplier: Option<f64>,
    pub relaxed: bool,
}

/// Settings that produced a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub mode: RiskMode,
    pub quadrature_tol: f64,
    pub exact_tol: f64,
    pub grid_tolerance: Option<f64>,
    pub massart_beta: Option<f64>,
}

/// An instantiated bound `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub target: Target,
    pub surrogate: MarginLoss,
    pub spec: HypothesisSpec,
    pub hypothesis: LinearHypothesis,
    pub lhs: f64,
    pub rhs: f64,
    pub components: BoundComponents,
    pub mc_stderr_lhs: f64,
    pub mc_stderr_rhs: f64,
    pub holds: bool,
    pub slack: f64,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
}

/// Whether `lhs ≤ rhs` within three combined standard errors plus `tol`.
pub fn bound_holds(lhs: f64, rhs: f64, se_lhs: f64, se_rhs: f64, tol: f64) -> bool {
    lhs <= rhs + 3.0 * (se_lhs + se_rhs) + tol
}

/// Instantiates the bound for `h` under `dist`.
pub fn assemble_bound(
    target: Target,
    surrogate: &MarginLoss,
    spec: &HypothesisSpec,
    dist: &LabeledDistribution,
    h: &LinearHypothesis,
    options: BoundOptions,
) -> Result<BoundReport> {
    let surrogate = surrogate.validated()?;
    let spec = spec.validated()?;
    h.check_against(&spec)?;
    scalar_weight(h)?;
    let adversarial = target.is_adversarial();
    if adversarial != spec.is_adversarial() {
        return Err(invalid(
            "gamma",
            if adversarial { "an adversarial target needs gamma > 0" } else { "the zero-one target needs gamma = 0" },
        ));
    }
    let gamma_map = calibration(target, &surrogate, &spec, options.massart)?;
    let mut warnings = Vec::new();
    if let Some(mp) = options.massart {
        let bad = massart_violations(dist, mp);
        if let Some(&(x, eta)) = bad.first() {
            warnings.push(format!(
                "noise margin beta = {} violated at {} checked points, first at x = {x} with eta = {eta}",
                mp.beta(),
                bad.len()
            ));
        }
    }
    if gamma_map.relaxed() {
        warnings.push("the transform inverse is a relaxation; the bound is valid but not tight".into());
    }

    let radius = adversarial.then_some(spec.gamma);
    let losses = [RiskLoss::ZeroOne, RiskLoss::Margin(surrogate)];
    let (target_risk, surrogate_risk) = match options.mode {
        RiskMode::Exact => {
            (risk(losses[0], h, dist, RiskMode::Exact, radius)?, risk(losses[1], h, dist, RiskMode::Exact, radius)?)
        }
        RiskMode::MonteCarlo { n, seed } => {
            let sample = draw(dist, n, seed)?;
            let r = empirical_risks(&losses, h, &sample, radius)?;
            (r[0], r[1])
        }
    };
    let expected_min_target = expected_min_risk(losses[0], &spec, dist, adversarial)?;
    let expected_min_surrogate = expected_min_risk(losses[1], &spec, dist, adversarial)?;

    let lhs = target_risk.value - expected_min_target.lower;
    let surrogate_excess = surrogate_risk.value - expected_min_surrogate.lower;
    let rhs = gamma_map.eval(surrogate_excess);
    let mc_stderr_lhs = target_risk.stderr;
    let mc_stderr_rhs = gamma_map.derivative(surrogate_excess) * surrogate_risk.stderr;

    let (mut gap_surrogate, mut gap_target, mut grid_tolerance) = (None, None, None);
    if options.compute_gaps {
        for (loss, slot) in [(losses[1], &mut gap_surrogate), (losses[0], &mut gap_target)] {
            let best = if spec.class == HypothesisClass::All && !adversarial || is_singleton(dist) {
                None
            } else {
                Some(best_in_class_risk(loss, &spec, dist, adversarial)?)
            };
            if let Some(b) = best {
                grid_tolerance = Some(b.tolerance);
            }
            *slot = Some(minimizability_gap(loss, &spec, dist, adversarial)?);
        }
    }

    let exact_tol = if options.mode == RiskMode::Exact { EXACT_TOL } else { 0.0 };
    Ok(BoundReport {
        target,
        surrogate,
        spec,
        hypothesis: h.clone(),
        lhs,
        rhs,
        components: BoundComponents {
            target_risk,
            surrogate_risk,
            expected_min_target,
            expected_min_surrogate,
            surrogate_excess,
            gap_surrogate,
            gap_target,
            calibration: gamma_map.describe(),
            multiplier: gamma_map.multiplier(),
            relaxed: gamma_map.relaxed(),
        },
        mc_stderr_lhs,
        mc_stderr_rhs,
        holds: bound_holds(lhs, rhs, mc_stderr_lhs, mc_stderr_rhs, exact_tol),
        slack: rhs - lhs,
        provenance: Provenance {
            mode: options.mode,
            quadrature_tol: QUADRATURE_TOL,
            exact_tol,
            grid_tolerance,
            massart_beta: options.massart.map(MassartParams::beta),
        },
        warnings,
    })
}

/// An atom where `Ψ(|2η − 1|)` exceeds the smallest wrong-side surrogate
/// regret.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomViolation {
    pub index: usize,
    pub x: f64,
    pub eta: f64,
    pub required: f64,
    pub available: f64,
}

/// Outcome of the discrete check of the convex-`Ψ` bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCheck {
    pub psi_convex: bool,
    pub psi_at_zero: f64,
    pub precondition_violations: Vec<AtomViolation>,
    pub hypotheses_checked: usize,
    pub conclusion_violations: usize,
    /// Smallest `rhs − Ψ(lhs)` over the checked hypotheses.
    pub worst_slack: f64,
}

impl DiscreteCheck {
    pub fn holds(&self) -> bool {
        self.psi_convex
            && self.psi_at_zero.abs() <= 1e-12
            && self.precondition_violations.is_empty()
            && self.conclusion_violations == 0
    }
}

fn midpoint_convex(psi: &PiecewiseTransform) -> bool {
    let n = 2000;
    (1..n).all(|i| {
        let (a, b) = ((i - 1) as f64 / n as f64, (i + 1) as f64 / n as f64);
        psi.eval(0.5 * (a + b)) <= 0.5 * (psi.eval(a) + psi.eval(b)) + 1e-12
    })
}

/// Checks `Ψ(R_01(h) − E[C*_01]) ≤ R_Φ(h) − E[C*_Φ]` exactly on a finite
/// support, after verifying the pointwise condition at every atom.
pub fn verify_discrete_bound(
    dist: &FiniteDistribution,
    surrogate: &MarginLoss,
    spec: &HypothesisSpec,
    psi: &PiecewiseTransform,
    hypotheses: &[LinearHypothesis],
) -> Result<DiscreteCheck> {
    let surrogate = surrogate.validated()?;
    if spec.is_adversarial() || !spec.is_sign_rich() {
        return Err(invalid("B", "the discrete check needs a standard class with hypotheses of both signs everywhere"));
    }
    let mut violations = Vec::new();
    let mut c_target = Vec::with_capacity(dist.atoms.len());
    let mut c_surrogate = Vec::with_capacity(dist.atoms.len());
    for (index, a) in dist.atoms.iter().enumerate() {
        let reach = spec.score_reach(a.x.abs());
        let floor = min_risk_at_reach(&surrogate, reach, a.eta);
        let required = psi.eval((2.0 * a.eta - 1.0).abs());
        let available = wrong_side_min_risk_at_reach(&surrogate, reach, a.eta) - floor;
        if required > available + 1e-12 {
            violations.push(AtomViolation { index, x: a.x, eta: a.eta, required, available });
        }
        c_target.push(a.eta.min(1.0 - a.eta));
        c_surrogate.push(floor);
    }
    let e_target: f64 = dist.atoms.iter().zip(&c_target).map(|(a, c)| a.weight * c).sum();
    let e_surrogate: f64 = dist.atoms.iter().zip(&c_surrogate).map(|(a, c)| a.weight * c).sum();

    let mut conclusion_violations = 0;
    let mut worst_slack = f64::INFINITY;
    for h in hypotheses {
        h.check_against(spec)?;
        let w = scalar_weight(h)?;
        let (mut r_target, mut r_surrogate) = (0.0, 0.0);
        for a in &dist.atoms {
            let u = w * a.x + h.b;
            r_target +=
                a.weight * (a.eta * zero_one(u, Label::Positive) + (1.0 - a.eta) * zero_one(u, Label::Negative));
            r_surrogate += a.weight * (a.eta * surrogate.eval(u) + (1.0 - a.eta) * surrogate.eval(-u));
        }
        let slack = (r_surrogate - e_surrogate) - psi.eval(r_target - e_target);
        worst_slack = worst_slack.min(slack);
        if slack < -1e-10 {
            conclusion_violations += 1;
        }
    }
    Ok(DiscreteCheck {
        psi_convex: midpoint_convex(psi),
        psi_at_zero: psi.eval(0.0),
        precondition_violations: violations,
        hypotheses_checked: hypotheses.len(),
        conclusion_violations,
        worst_slack,
    })
}

/// The singleton construction showing that a supremum-based loss admits no
/// non-trivial bound: `η = 1/2` at the origin and `h₀ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeResult {
    pub surrogate: MarginLoss,
    pub x0: f64,
    pub surrogate_risk: f64,
    pub surrogate_best: f64,
    pub target_risk: f64,
    pub target_best: f64,
    pub surrogate_estimation_error: f64,
    pub target_estimation_error: f64,
}

/// Runs the singleton construction on a grid of `grid_n²` hypotheses.
pub fn negative_result_demo(surrogate: &MarginLoss, spec: &HypothesisSpec, grid_n: usize) -> Result<NegativeResult> {
    let surrogate = surrogate.validated()?;
    if matches!(surrogate, MarginLoss::RhoMargin { .. }) {
        return Err(Error::Unsupported("the rho-margin loss admits a bound; no negative construction applies".into()));
    }
    let spec = spec.validated()?;
    if !spec.is_adversarial() {
        return Err(invalid("gamma", "the construction needs gamma > 0"));
    }
    if spec.class == HypothesisClass::All || !spec.is_sign_rich() {
        return Err(invalid("B", "the construction needs a linear or ReLU class with B > 0"));
    }
    let x0 = 0.0;
    let point = ConditionalPoint::new(x0, 0.5)?;
    let surrogate_risk = 0.5 * surrogate.eval(0.0) + 0.5 * surrogate.eval(0.0);
    let surrogate_best = brute_force_inf(&surrogate, &spec, point, Constraint::None, grid_n)?;
    let target_risk = 1.0;
    let target_best = target_min_risk(Target::AdversarialZeroOne, &spec, x0, 0.5)?.upper;
    Ok(NegativeResult {
        surrogate,
        x0,
        surrogate_risk,
        surrogate_best,
        target_risk,
        target_best,
        surrogate_estimation_error: surrogate_risk - surrogate_best,
        target_estimation_error: target_risk - target_best,
    })
}
