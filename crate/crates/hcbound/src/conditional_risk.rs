//! Conditional risks `C(h, x, t) = t ℓ(h, x, +1) + (1 − t) ℓ(h, x, −1)`,
//! their closed-form infima over each hypothesis class, conditional regrets
//! of the zero-one and adversarial zero-one losses, and a brute-force grid
//! oracle that evaluates the same infima independently.

use std::f64::consts::LN_2;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypotheses::{check_norm, HypothesisClass, HypothesisSpec, Magnitude};
use crate::losses::{softplus, truncate, MarginLoss, TruncationEps};

/// An input norm together with a conditional probability of the positive
/// label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPoint {
    pub x_norm: f64,
    pub t: f64,
}

impl ConditionalPoint {
    pub fn new(x_norm: f64, t: f64) -> Result<Self> {
        check_norm(x_norm)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid("t", format!("conditional probability must lie in [0, 1], got {t}")));
        }
        Ok(ConditionalPoint { x_norm, t })
    }

    /// `t − 1/2`.
    pub fn delta(&self) -> f64 {
        self.t - 0.5
    }
}

/// A closed interval; degenerate when the value is known exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn exact(v: f64) -> Self {
        Interval { lower: v, upper: v }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lower - tol && v <= self.upper + tol
    }
}

/// `t Φ(u) + (1 − t) Φ(−u)` without range validation.
pub fn conditional_value(loss: &MarginLoss, u: f64, t: f64) -> f64 {
    t * loss.eval(u) + (1.0 - t) * loss.eval(-u)
}

/// Conditional surrogate risk of a score `u` attainable by the class.
pub fn conditional_risk(loss: &MarginLoss, spec: &HypothesisSpec, u: f64, point: ConditionalPoint) -> Result<f64> {
    if let Magnitude::Finite(r) = spec.score_reach(point.x_norm) {
        if u.abs() > r {
            return Err(Error::ScoreOutOfRange { score: u, lo: -r, hi: r });
        }
    }
    Ok(conditional_value(loss, u, point.t))
}

/// Conditional zero-one risk of a score `u`.
pub fn zero_one_conditional_risk(u: f64, t: f64) -> f64 {
    if u >= 0.0 {
        1.0 - t
    } else {
        t
    }
}

/// Conditional adversarial zero-one risk given the extrema of `h` over the
/// perturbation ball.
pub fn adversarial_zero_one_conditional_risk(h_lo: f64, h_hi: f64, t: f64) -> f64 {
    let pos = if h_lo <= 0.0 { t } else { 0.0 };
    let neg = if h_hi >= 0.0 { 1.0 - t } else { 0.0 };
    pos + neg
}

fn log2_entropy(t: f64) -> f64 {
    let xlog = |p: f64| if p > 0.0 { p * p.log2() } else { 0.0 };
    -xlog(t) - xlog(1.0 - t)
}

/// Minimal conditional risk when every score in `[−reach, reach]` is
/// attainable and nothing else is.
pub fn min_risk_at_reach(loss: &MarginLoss, reach: Magnitude, t: f64) -> f64 {
    let big = t.max(1.0 - t);
    let small = t.min(1.0 - t);
    let gap = (2.0 * t - 1.0).abs();
    match *loss {
        MarginLoss::Hinge => 1.0 - gap * reach.min_with(1.0),
        MarginLoss::Logistic => {
            let log_odds = if small == 0.0 { f64::INFINITY } else { (big / small).ln() };
            match reach {
                _ if reach.admits(log_odds) => log2_entropy(t),
                Magnitude::Finite(s) => (big * softplus(-s) + small * softplus(s)) / LN_2,
                Magnitude::Infinite => unreachable!(),
            }
        }
        MarginLoss::Exponential => {
            let half_log_odds = if small == 0.0 { f64::INFINITY } else { 0.5 * (big / small).ln() };
            match reach {
                _ if reach.admits(half_log_odds) => 2.0 * (t * (1.0 - t)).sqrt(),
                Magnitude::Finite(s) => big * (-s).exp() + small * s.exp(),
                Magnitude::Infinite => unreachable!(),
            }
        }
        MarginLoss::Quadratic => match reach {
            _ if reach.admits(gap) => 4.0 * t * (1.0 - t),
            Magnitude::Finite(s) => big * (1.0 - s) * (1.0 - s) + small * (1.0 + s) * (1.0 + s),
            Magnitude::Infinite => unreachable!(),
        },
        MarginLoss::Sigmoid { k } => 1.0 - gap * reach.tanh_scaled(k),
        MarginLoss::RhoMargin { rho } => small + big * (1.0 - reach.min_with(rho) / rho),
    }
}

/// Infimum of the conditional risk over scores whose sign disagrees with the
/// Bayes decision, when every score in `[−reach, reach]` is attainable.
pub fn wrong_side_min_risk_at_reach(loss: &MarginLoss, reach: Magnitude, t: f64) -> f64 {
    match *loss {
        MarginLoss::RhoMargin { rho } => {
            let big = t.max(1.0 - t);
            let small = t.min(1.0 - t);
            big + small * (1.0 - reach.min_with(rho) / rho)
        }
        _ => loss.eval(0.0),
    }
}

fn require_standard(spec: &HypothesisSpec) -> Result<()> {
    if spec.is_adversarial() {
        return Err(Error::Unsupported(
            "the standard conditional infimum was requested for an adversarial class; use the adversarial variant"
                .into(),
        ));
    }
    Ok(())
}

/// `C*_{Φ,H}(x)`: the infimum over the class of the conditional risk. For an
/// adversarial linear class and the rho-margin loss this is the infimum of
/// the supremum-based conditional risk.
pub fn min_conditional_risk(loss: &MarginLoss, spec: &HypothesisSpec, point: ConditionalPoint) -> Result<f64> {
    if spec.is_adversarial() {
        return match (loss, spec.class) {
            (MarginLoss::RhoMargin { .. }, HypothesisClass::Linear { .. }) => {
                Ok(min_conditional_risk_adversarial(loss, spec, point)?.lower)
            }
            _ => Err(Error::Unsupported(format!(
                "no exact adversarial conditional infimum for {loss} over the {} class",
                spec.class_name()
            ))),
        };
    }
    Ok(min_risk_at_reach(loss, spec.score_reach(point.x_norm), point.t))
}

/// Infimum of the conditional risk over hypotheses that disagree with the
/// Bayes sign at the point.
pub fn min_conditional_risk_wrong_side(
    loss: &MarginLoss,
    spec: &HypothesisSpec,
    point: ConditionalPoint,
) -> Result<f64> {
    require_standard(spec)?;
    Ok(wrong_side_min_risk_at_reach(loss, spec.score_reach(point.x_norm), point.t))
}

/// Infimum of the supremum-based conditional risk `t Φ(h_lo) + (1 − t) Φ(−h_hi)`.
///
/// Exact for the rho-margin loss on linear classes. ReLU classes, and the
/// hinge and sigmoid losses, yield an enclosing interval.
pub fn min_conditional_risk_adversarial(
    loss: &MarginLoss,
    spec: &HypothesisSpec,
    point: ConditionalPoint,
) -> Result<Interval> {
    if !spec.is_adversarial() {
        return Err(invalid("gamma", "the adversarial infimum requires gamma > 0"));
    }
    let reach = spec.adversarial_reach(point.x_norm)?;
    let t = point.t;
    let gap = (2.0 * t - 1.0).abs();
    match *loss {
        MarginLoss::RhoMargin { rho } => {
            let at = |s: f64| t.min(1.0 - t) + t.max(1.0 - t) * (1.0 - s.min(rho) / rho);
            Ok(Interval { lower: at(reach.upper), upper: at(reach.lower) })
        }
        MarginLoss::Hinge | MarginLoss::Sigmoid { .. } => {
            let scaled = |s: f64| match *loss {
                MarginLoss::Sigmoid { k } => (k * s).tanh(),
                _ => s.min(1.0),
            };
            let witness = spec.floor_reach().finite().ok_or(Error::Unbounded)?;
            Ok(Interval { lower: 1.0 - gap * scaled(reach.upper), upper: 1.0 - gap * scaled(witness) })
        }
        _ => Err(Error::ImpossibleBound(format!("the supremum-based {loss} loss"))),
    }
}

/// Conditional regret of the zero-one loss, truncated at `eps`.
pub fn conditional_regret_zero_one(
    spec: &HypothesisSpec,
    point: ConditionalPoint,
    wrong_side: bool,
    eps: TruncationEps,
) -> Result<f64> {
    if !spec.is_sign_rich() {
        return Err(invalid("B", "the class must contain hypotheses of both signs at every input"));
    }
    Ok(if wrong_side { truncate(2.0 * point.delta().abs(), eps) } else { 0.0 })
}

/// Position of the perturbation-ball extrema relative to zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegretCase {
    Straddling,
    StrictlyNegative,
    StrictlyPositive,
    Other,
}

impl RegretCase {
    /// Classifies `(h_lo, h_hi)`. Classes without a positive-margin
    /// hypothesis fall into `Other`.
    pub fn classify(h_lo: f64, h_hi: f64, spec: &HypothesisSpec) -> RegretCase {
        if !spec.is_sign_rich() {
            RegretCase::Other
        } else if h_lo <= 0.0 && h_hi >= 0.0 {
            RegretCase::Straddling
        } else if h_hi < 0.0 {
            RegretCase::StrictlyNegative
        } else if h_lo > 0.0 {
            RegretCase::StrictlyPositive
        } else {
            RegretCase::Other
        }
    }
}

/// Conditional regret of the adversarial zero-one loss, truncated at `eps`.
pub fn conditional_regret_adversarial(
    spec: &HypothesisSpec,
    point: ConditionalPoint,
    case: RegretCase,
    eps: TruncationEps,
) -> Result<f64> {
    if !spec.is_sign_rich() {
        return Err(invalid("B", "the class must contain a hypothesis with a positive margin over the ball"));
    }
    let d = point.delta();
    Ok(match case {
        RegretCase::Straddling => truncate(d.abs() + 0.5, eps),
        RegretCase::StrictlyNegative => truncate(2.0 * d, eps),
        RegretCase::StrictlyPositive => truncate(-2.0 * d, eps),
        RegretCase::Other => 0.0,
    })
}

/// Restriction applied by the grid oracle. Each set is replaced by its
/// closure; the surrogate losses are continuous, so infima agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    None,
    /// `h(x) ≤ 0`.
    ScoreNegative,
    /// `h_lo ≤ 0 ≤ h_hi`.
    AdvStraddle,
    /// `h_hi ≤ 0`.
    AdvSupNegative,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Constraint::None => "none",
            Constraint::ScoreNegative => "score-negative",
            Constraint::AdvStraddle => "adv-straddle",
            Constraint::AdvSupNegative => "adv-sup-negative",
        };
        f.write_str(name)
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

/// Brute-force infimum of the conditional risk over a uniform grid, for
/// scalar inputs with `|x| = x_norm`.
///
/// Standard classes are gridded over attainable scores. Adversarial classes
/// are gridded over `(w, b) ∈ [−W, W] × [−B, B]`; for ReLU networks the grid
/// ranges over single units of output weight `±Λ`.
pub fn brute_force_inf(
    loss: &MarginLoss,
    spec: &HypothesisSpec,
    point: ConditionalPoint,
    constraint: Constraint,
    grid_n: usize,
) -> Result<f64> {
    if grid_n < 3 {
        return Err(invalid("grid_n", format!("need at least 3 grid points, got {grid_n}")));
    }
    let t = point.t;
    if !spec.is_adversarial() {
        let (lo, hi) = spec.score_range(point.x_norm)?;
        let hi = match constraint {
            Constraint::None => hi,
            Constraint::ScoreNegative => 0.0,
            other => return Err(Error::Unsupported(format!("constraint {other} needs an adversarial class"))),
        };
        return grid(lo, hi, grid_n)
            .map(|u| conditional_value(loss, u, t))
            .reduce(f64::min)
            .ok_or_else(|| Error::InfeasibleConstraint(constraint.to_string()));
    }

    let (w_bound, b_bound) =
        (spec.w_bound().ok_or(Error::Unbounded)?, spec.b_bound().finite().ok_or(Error::Unbounded)?);
    let (x, gamma) = (point.x_norm, spec.gamma);
    let signs: &[f64] = match spec.class {
        HypothesisClass::OneHiddenRelu { .. } => &[1.0, -1.0],
        _ => &[1.0],
    };
    let scale = spec.output_scale();
    let relu = matches!(spec.class, HypothesisClass::OneHiddenRelu { .. });
    let ws: Vec<f64> = grid(-w_bound, w_bound, grid_n).collect();
    let best = ws
        .par_iter()
        .map(|&w| {
            let mut m = f64::INFINITY;
            for &sign in signs {
                for b in grid(-b_bound, b_bound, grid_n) {
                    let lin_lo = w * x - gamma * w.abs() + b;
                    let lin_hi = w * x + gamma * w.abs() + b;
                    let (lo, hi, centre) = if relu {
                        let u = sign * scale;
                        let (a, c) = (u * lin_lo.max(0.0), u * lin_hi.max(0.0));
                        (a.min(c), a.max(c), u * (w * x + b).max(0.0))
                    } else {
                        (lin_lo, lin_hi, w * x + b)
                    };
                    let keep = match constraint {
                        Constraint::None => true,
                        Constraint::ScoreNegative => centre <= 0.0,
                        Constraint::AdvStraddle => lo <= 0.0 && hi >= 0.0,
                        Constraint::AdvSupNegative => hi <= 0.0,
                    };
                    if keep {
                        m = m.min(t * loss.eval(lo) + (1.0 - t) * loss.eval(-hi));
                    }
                }
            }
            m
        })
        .reduce(|| f64::INFINITY, f64::min);
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::InfeasibleConstraint(constraint.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lin(w: f64, b: f64) -> HypothesisSpec {
        HypothesisSpec::linear(w, Magnitude::Finite(b)).unwrap()
    }

    fn pt(x: f64, t: f64) -> ConditionalPoint {
        ConditionalPoint::new(x, t).unwrap()
    }

    fn losses() -> Vec<MarginLoss> {
        vec![
            MarginLoss::Hinge,
            MarginLoss::Logistic,
            MarginLoss::Exponential,
            MarginLoss::Quadratic,
            MarginLoss::Sigmoid { k: 1.0 },
            MarginLoss::Sigmoid { k: 2.5 },
            MarginLoss::RhoMargin { rho: 1.0 },
            MarginLoss::RhoMargin { rho: 0.4 },
        ]
    }

    #[test]
    fn conditional_risk_examples() {
        let spec = lin(1.0, 1.0);
        assert_eq!(conditional_risk(&MarginLoss::Hinge, &spec, 0.0, pt(0.5, 0.7)).unwrap(), 1.0);
        assert_eq!(conditional_risk(&MarginLoss::Quadratic, &spec, 0.0, pt(0.5, 0.3)).unwrap(), 1.0);
        let sig = MarginLoss::Sigmoid { k: 1.0 };
        assert_eq!(conditional_risk(&sig, &spec, 0.5, pt(0.5, 1.0)).unwrap(), 1.0 - 0.5f64.tanh());
        assert!(matches!(conditional_risk(&sig, &spec, 1.6, pt(0.5, 1.0)), Err(Error::ScoreOutOfRange { .. })));
    }

    #[test]
    fn min_conditional_risk_examples() {
        let v = min_conditional_risk(&MarginLoss::Hinge, &lin(1.0, 0.8), pt(0.0, 1.0)).unwrap();
        assert!((v - 0.2).abs() < 1e-15);
        let v = min_conditional_risk(&MarginLoss::Exponential, &lin(1.0, 0.3), pt(0.4, 0.5)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v = min_conditional_risk(&MarginLoss::RhoMargin { rho: 1.0 }, &lin(1.0, 2.0), pt(1.0, 0.7)).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
        let adv = lin(1.0, 0.8).with_gamma(0.1).unwrap();
        assert!(min_conditional_risk(&MarginLoss::Hinge, &adv, pt(1.0, 0.7)).is_err());
    }

    #[test]
    fn adversarial_rho_margin_examples() {
        let rho = MarginLoss::RhoMargin { rho: 1.0 };
        let spec = lin(1.0, 0.8).with_gamma(0.1).unwrap();
        let v = min_conditional_risk_adversarial(&rho, &spec, pt(1.0, 0.9)).unwrap();
        assert!(v.is_exact());
        assert!((v.lower - 0.1).abs() < 1e-15);
        let oracle = brute_force_inf(&rho, &spec, pt(1.0, 0.9), Constraint::None, 1001).unwrap();
        assert!((oracle - 0.1).abs() < 2e-3);

        let spec = lin(1.0, 0.3).with_gamma(0.1).unwrap();
        let m = (1.0f64 * 0.1f64.max(0.05) - 0.1 + 0.3).min(1.0);
        let v = min_conditional_risk_adversarial(&rho, &spec, pt(0.05, 0.5)).unwrap();
        assert!((v.lower - (0.5 * (1.0 - m) + 0.5)).abs() < 1e-15);

        let spec = lin(1.0, 1.0).with_gamma(0.1).unwrap();
        let v = min_conditional_risk_adversarial(&rho, &spec, pt(0.6, 0.8)).unwrap();
        assert!((v.lower - 0.2).abs() < 1e-15);
    }

    #[test]
    fn adversarial_sup_convex_rejected() {
        let spec = lin(1.0, 1.0).with_gamma(0.1).unwrap();
        for loss in [MarginLoss::Logistic, MarginLoss::Exponential, MarginLoss::Quadratic] {
            assert!(matches!(
                min_conditional_risk_adversarial(&loss, &spec, pt(0.5, 0.7)),
                Err(Error::ImpossibleBound(_))
            ));
        }
        assert!(min_conditional_risk_adversarial(&MarginLoss::Hinge, &lin(1.0, 1.0), pt(0.5, 0.7)).is_err());
    }

    #[test]
    fn adversarial_hinge_interval_contains_oracle() {
        let spec = lin(1.0, 0.5).with_gamma(0.1).unwrap();
        for loss in [MarginLoss::Hinge, MarginLoss::Sigmoid { k: 1.0 }] {
            for &(x, t) in &[(0.0, 0.9), (0.5, 0.7), (1.0, 0.95), (0.3, 0.2)] {
                let iv = min_conditional_risk_adversarial(&loss, &spec, pt(x, t)).unwrap();
                let oracle = brute_force_inf(&loss, &spec, pt(x, t), Constraint::None, 801).unwrap();
                assert!(iv.contains(oracle, 3e-3), "{loss} x={x} t={t}: {iv:?} vs {oracle}");
            }
        }
    }

    #[test]
    fn zero_one_regret_examples() {
        let spec = lin(1.0, 0.5);
        let z = TruncationEps::ZERO;
        assert_eq!(conditional_regret_zero_one(&spec, pt(0.3, 0.75), true, z).unwrap(), 0.5);
        assert_eq!(conditional_regret_zero_one(&spec, pt(0.3, 0.5), true, z).unwrap(), 0.0);
        assert_eq!(conditional_regret_zero_one(&spec, pt(0.3, 0.5), false, z).unwrap(), 0.0);
        let half = TruncationEps::new(0.5).unwrap();
        assert_eq!(conditional_regret_zero_one(&spec, pt(0.3, 0.75), true, half).unwrap(), 0.0);
        assert!(conditional_regret_zero_one(&lin(1.0, 0.0), pt(0.3, 0.75), true, z).is_err());
    }

    #[test]
    fn adversarial_regret_examples() {
        let spec = lin(1.0, 0.5).with_gamma(0.1).unwrap();
        let z = TruncationEps::ZERO;
        let p = pt(0.3, 0.8);
        assert!((conditional_regret_adversarial(&spec, p, RegretCase::Straddling, z).unwrap() - 0.8).abs() < 1e-15);
        assert!(
            (conditional_regret_adversarial(&spec, p, RegretCase::StrictlyNegative, z).unwrap() - 0.6).abs() < 1e-15
        );
        assert_eq!(conditional_regret_adversarial(&spec, p, RegretCase::StrictlyPositive, z).unwrap(), 0.0);
        assert!(conditional_regret_adversarial(&lin(1.0, 0.0).with_gamma(0.1).unwrap(), p, RegretCase::Straddling, z)
            .is_err());
    }

    #[test]
    fn oracle_examples() {
        let spec = lin(1.0, 0.8);
        for t in [0.55, 0.7, 0.99, 1.0] {
            let v = brute_force_inf(&MarginLoss::Hinge, &spec, pt(0.4, t), Constraint::ScoreNegative, 4001).unwrap();
            assert!((v - 1.0).abs() < 1e-9);
        }
        assert!(matches!(
            brute_force_inf(&MarginLoss::Hinge, &spec, pt(0.4, 0.7), Constraint::AdvStraddle, 4001),
            Err(Error::Unsupported(_))
        ));
        let adv = lin(1.0, 0.8).with_gamma(0.1).unwrap();
        let rho = MarginLoss::RhoMargin { rho: 1.0 };
        assert!(brute_force_inf(&rho, &adv, pt(0.4, 0.7), Constraint::AdvSupNegative, 101).is_ok());
        let flat = lin(0.0, 0.0).with_gamma(0.1).unwrap();
        assert!(brute_force_inf(&rho, &flat, pt(0.4, 0.7), Constraint::AdvSupNegative, 101).is_ok());
    }

    #[test]
    fn infeasible_constraint_is_reported() {
        let spec = HypothesisSpec::linear(0.0, Magnitude::Finite(0.5)).unwrap().with_gamma(0.1).unwrap();
        let r = brute_force_inf(&MarginLoss::Hinge, &spec, pt(0.4, 0.7), Constraint::AdvStraddle, 4);
        assert!(r.is_err(), "{r:?}");
    }

    #[test]
    fn oracle_refinement_is_monotone() {
        let spec = lin(1.3, 0.4);
        let mut prev = f64::INFINITY;
        for n in [101, 201, 401, 801, 1601] {
            let v = brute_force_inf(&MarginLoss::Logistic, &spec, pt(0.6, 0.83), Constraint::None, n).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn branch_continuity() {
        for &t in &[0.55f64, 0.6, 0.75, 0.9, 0.99] {
            let lo: f64 = (t / (1.0 - t)).ln();
            for (loss, s) in [
                (MarginLoss::Logistic, lo),
                (MarginLoss::Exponential, 0.5 * lo),
                (MarginLoss::Quadratic, 2.0 * t - 1.0),
            ] {
                let at = min_risk_at_reach(&loss, Magnitude::Finite(s), t);
                let above = min_risk_at_reach(&loss, Magnitude::Finite(s * (1.0 + 1e-15)), t);
                let below = match loss {
                    MarginLoss::Logistic => (t * softplus(-s) + (1.0 - t) * softplus(s)) / LN_2,
                    MarginLoss::Exponential => t * (-s).exp() + (1.0 - t) * s.exp(),
                    _ => t * (1.0 - s).powi(2) + (1.0 - t) * (1.0 + s).powi(2),
                };
                assert!((at - below).abs() < 1e-12, "{loss} t={t}");
                assert!((at - above).abs() < 1e-12, "{loss} t={t}");
            }
        }
    }

    #[test]
    fn unbounded_class_limits() {
        let all = HypothesisSpec::all();
        assert_eq!(min_conditional_risk(&MarginLoss::Logistic, &all, pt(0.2, 1.0)).unwrap(), 0.0);
        assert_eq!(min_conditional_risk(&MarginLoss::Exponential, &all, pt(0.2, 0.0)).unwrap(), 0.0);
        assert_eq!(min_conditional_risk(&MarginLoss::Quadratic, &all, pt(0.2, 0.5)).unwrap(), 1.0);
        assert_eq!(min_conditional_risk(&MarginLoss::Hinge, &all, pt(0.2, 0.75)).unwrap(), 0.5);
        let v = min_conditional_risk(&MarginLoss::Logistic, &lin(1.0, 0.5), pt(0.0, 1.0)).unwrap();
        assert!((v - MarginLoss::Logistic.eval(0.5)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn closed_form_matches_oracle(w in 0.0f64..3.0, b in 0.05f64..3.0, x in 0.0f64..1.0, t in 0.0f64..1.0) {
            let spec = lin(w, b);
            for loss in losses() {
                let closed = min_conditional_risk(&loss, &spec, pt(x, t)).unwrap();
                let oracle = brute_force_inf(&loss, &spec, pt(x, t), Constraint::None, 4001).unwrap();
                prop_assert!((closed - oracle).abs() <= 2e-3, "{} closed={} oracle={}", loss, closed, oracle);
                prop_assert!(closed <= oracle + 1e-12);
            }
        }

        #[test]
        fn wrong_side_matches_oracle(w in 0.0f64..3.0, b in 0.05f64..3.0, x in 0.0f64..1.0, t in 0.5f64..1.0) {
            let spec = lin(w, b);
            for loss in losses() {
                let closed = min_conditional_risk_wrong_side(&loss, &spec, pt(x, t)).unwrap();
                let oracle = brute_force_inf(&loss, &spec, pt(x, t), Constraint::ScoreNegative, 4001).unwrap();
                prop_assert!((closed - oracle).abs() <= 2e-3, "{} closed={} oracle={}", loss, closed, oracle);
            }
        }

        #[test]
        fn relu_matches_oracle(lambda in 0.1f64..2.0, w in 0.0f64..2.0, b in 0.05f64..2.0, x in 0.0f64..1.0, t in 0.0f64..1.0) {
            let spec = HypothesisSpec::relu(lambda, w, Magnitude::Finite(b)).unwrap();
            for loss in losses() {
                let closed = min_conditional_risk(&loss, &spec, pt(x, t)).unwrap();
                let oracle = brute_force_inf(&loss, &spec, pt(x, t), Constraint::None, 4001).unwrap();
                prop_assert!((closed - oracle).abs() <= 2e-3);
            }
        }

        #[test]
        fn regret_is_non_negative(w in 0.0f64..3.0, b in 0.05f64..3.0, x in 0.0f64..1.0, t in 0.0f64..1.0, frac in -1.0f64..1.0) {
            let spec = lin(w, b);
            let u = frac * spec.score_range(x).unwrap().1;
            for loss in losses() {
                let c = conditional_risk(&loss, &spec, u, pt(x, t)).unwrap();
                prop_assert!(c >= min_conditional_risk(&loss, &spec, pt(x, t)).unwrap() - 1e-12);
            }
        }

        #[test]
        fn symmetric_in_t(w in 0.0f64..3.0, b in 0.0f64..3.0, x in 0.0f64..1.0, t in 0.0f64..1.0) {
            for spec in [lin(w, b), HypothesisSpec::all()] {
                for loss in losses() {
                    let a = min_conditional_risk(&loss, &spec, pt(x, t)).unwrap();
                    let c = min_conditional_risk(&loss, &spec, pt(x, 1.0 - t)).unwrap();
                    prop_assert!((a - c).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn zero_one_regret_matches_direct(w in -2.0f64..2.0, b in -1.0f64..1.0, x in -1.0f64..1.0, t in 0.0f64..1.0) {
            let spec = lin(2.0, 1.0);
            let u = w * x + b;
            let direct = zero_one_conditional_risk(u, t) - t.min(1.0 - t);
            let wrong = (u >= 0.0 && t < 0.5) || (u < 0.0 && t > 0.5) || t == 0.5;
            let closed = conditional_regret_zero_one(&spec, pt(x.abs(), t), wrong, TruncationEps::ZERO).unwrap();
            prop_assert!((direct - closed).abs() < 1e-15);
        }

        #[test]
        fn adversarial_regret_matches_direct(w in -2.0f64..2.0, b in -1.0f64..1.0, x in -1.0f64..1.0, t in 0.0f64..1.0) {
            let spec = lin(2.0, 1.0).with_gamma(0.1).unwrap();
            let (lo, hi) = (w * x - 0.1 * w.abs() + b, w * x + 0.1 * w.abs() + b);
            let case = RegretCase::classify(lo, hi, &spec);
            prop_assert!(case != RegretCase::Other);
            let direct = adversarial_zero_one_conditional_risk(lo, hi, t) - t.min(1.0 - t);
            let closed = conditional_regret_adversarial(&spec, pt(x.abs(), t), case, TruncationEps::ZERO).unwrap();
            prop_assert!((direct - closed).abs() < 1e-15);
        }
    }
}
