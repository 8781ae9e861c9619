//! Hypothesis classes: all measurable functions, norm-bounded linear
//! predictors, and one-hidden-layer ReLU networks, together with their
//! attainable score ranges and adversarial extrema.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A non-negative extended real. The unbounded case is kept symbolic so that
/// limits are taken analytically instead of through a large float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Magnitude {
    Finite(f64),
    Infinite,
}

impl Magnitude {
    pub fn new(value: f64) -> Result<Self> {
        if value == f64::INFINITY {
            Ok(Magnitude::Infinite)
        } else if value >= 0.0 && value.is_finite() {
            Ok(Magnitude::Finite(value))
        } else {
            Err(invalid("magnitude", format!("must be non-negative, got {value}")))
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Magnitude::Finite(v) => Some(v),
            Magnitude::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Magnitude::Infinite)
    }

    pub fn is_positive(self) -> bool {
        match self {
            Magnitude::Finite(v) => v > 0.0,
            Magnitude::Infinite => true,
        }
    }

    /// `min{self, cap}` for a finite cap.
    pub fn min_with(self, cap: f64) -> f64 {
        match self {
            Magnitude::Finite(v) => v.min(cap),
            Magnitude::Infinite => cap,
        }
    }

    pub fn scale(self, factor: f64) -> Magnitude {
        match self {
            Magnitude::Finite(v) => Magnitude::Finite(v * factor),
            Magnitude::Infinite if factor == 0.0 => Magnitude::Finite(0.0),
            Magnitude::Infinite => Magnitude::Infinite,
        }
    }

    pub fn shifted(self, offset: f64) -> Magnitude {
        match self {
            Magnitude::Finite(v) => Magnitude::Finite(v + offset),
            Magnitude::Infinite => Magnitude::Infinite,
        }
    }

    /// `tanh(k · self)`, equal to one in the unbounded case.
    pub fn tanh_scaled(self, k: f64) -> f64 {
        match self {
            Magnitude::Finite(v) => (k * v).tanh(),
            Magnitude::Infinite => 1.0,
        }
    }

    /// Whether `value ≤ self`.
    pub fn admits(self, value: f64) -> bool {
        match self {
            Magnitude::Finite(v) => value <= v,
            Magnitude::Infinite => true,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Magnitude::Finite(v) => v,
            Magnitude::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Magnitude::Finite(v) => write!(f, "{v}"),
            Magnitude::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Magnitude {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Magnitude::Infinite),
            other => {
                let v: f64 = other.parse().map_err(|_| invalid("magnitude", format!("cannot parse `{s}`")))?;
                Magnitude::new(v)
            }
        }
    }
}

impl Serialize for Magnitude {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Magnitude::Finite(v) => serializer.serialize_f64(*v),
            Magnitude::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Magnitude {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Magnitude::new(v).map_err(de::Error::custom),
            Raw::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

/// `‖v‖_p` for `p ∈ [1, ∞]`.
pub fn lp_norm(v: &[f64], p: Magnitude) -> f64 {
    match p {
        Magnitude::Infinite => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        Magnitude::Finite(1.0) => v.iter().map(|x| x.abs()).sum(),
        Magnitude::Finite(2.0) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        Magnitude::Finite(p) => v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p),
    }
}

/// Hölder conjugate `q` with `1/p + 1/q = 1`.
pub fn conjugate(p: Magnitude) -> Magnitude {
    match p {
        Magnitude::Infinite => Magnitude::Finite(1.0),
        Magnitude::Finite(1.0) => Magnitude::Infinite,
        Magnitude::Finite(p) => Magnitude::Finite(p / (p - 1.0)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum HypothesisClass {
    All,
    Linear {
        w_bound: f64,
        b_bound: Magnitude,
    },
    #[serde(rename = "relu")]
    OneHiddenRelu {
        lambda: f64,
        w_bound: f64,
        b_bound: Magnitude,
    },
}

/// A hypothesis class together with the input norm index `p` and the
/// adversarial radius `gamma` (zero for the standard setting).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpec {
    #[serde(flatten)]
    pub class: HypothesisClass,
    #[serde(default = "default_p")]
    pub p: Magnitude,
    #[serde(default)]
    pub gamma: f64,
}

fn default_p() -> Magnitude {
    Magnitude::Finite(2.0)
}

/// Class-level supremum of the lower adversarial extremum at a point. For
/// linear classes both ends coincide; for ReLU networks only a sandwich is
/// known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialReach {
    pub lower: f64,
    pub upper: f64,
}

impl AdversarialReach {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

impl HypothesisSpec {
    pub fn all() -> Self {
        HypothesisSpec { class: HypothesisClass::All, p: default_p(), gamma: 0.0 }
    }

    pub fn linear(w_bound: f64, b_bound: Magnitude) -> Result<Self> {
        HypothesisSpec { class: HypothesisClass::Linear { w_bound, b_bound }, p: default_p(), gamma: 0.0 }.validated()
    }

    pub fn relu(lambda: f64, w_bound: f64, b_bound: Magnitude) -> Result<Self> {
        HypothesisSpec {
            class: HypothesisClass::OneHiddenRelu { lambda, w_bound, b_bound },
            p: default_p(),
            gamma: 0.0,
        }
        .validated()
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        HypothesisSpec { gamma, ..self }.validated()
    }

    pub fn with_p(self, p: Magnitude) -> Result<Self> {
        HypothesisSpec { p, ..self }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let finite_nonneg = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and non-negative, got {v}")))
            }
        };
        match self.class {
            HypothesisClass::All => {}
            HypothesisClass::Linear { w_bound, .. } => finite_nonneg("W", w_bound)?,
            HypothesisClass::OneHiddenRelu { lambda, w_bound, .. } => {
                finite_nonneg("Lambda", lambda)?;
                finite_nonneg("W", w_bound)?;
            }
        }
        if let Magnitude::Finite(p) = self.p {
            if p < 1.0 || p.is_nan() {
                return Err(invalid("p", format!("norm index must lie in [1, inf], got {p}")));
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid("gamma", format!("must lie in [0, 1), got {}", self.gamma)));
        }
        Ok(self)
    }

    pub fn q(&self) -> Magnitude {
        conjugate(self.p)
    }

    pub fn is_adversarial(&self) -> bool {
        self.gamma > 0.0
    }

    pub fn class_name(&self) -> &'static str {
        match self.class {
            HypothesisClass::All => "all",
            HypothesisClass::Linear { .. } => "linear",
            HypothesisClass::OneHiddenRelu { .. } => "relu",
        }
    }

    pub fn w_bound(&self) -> Option<f64> {
        match self.class {
            HypothesisClass::All => None,
            HypothesisClass::Linear { w_bound, .. } | HypothesisClass::OneHiddenRelu { w_bound, .. } => Some(w_bound),
        }
    }

    pub fn b_bound(&self) -> Magnitude {
        match self.class {
            HypothesisClass::All => Magnitude::Infinite,
            HypothesisClass::Linear { b_bound, .. } | HypothesisClass::OneHiddenRelu { b_bound, .. } => b_bound,
        }
    }

    /// Output scale of the class: `Λ` for ReLU networks, one otherwise.
    pub fn output_scale(&self) -> f64 {
        match self.class {
            HypothesisClass::OneHiddenRelu { lambda, .. } => lambda,
            _ => 1.0,
        }
    }

    /// Largest attainable `|h(x)|` at a point of norm `x_norm`.
    pub fn score_reach(&self, x_norm: f64) -> Magnitude {
        match self.class {
            HypothesisClass::All => Magnitude::Infinite,
            HypothesisClass::Linear { w_bound, b_bound } => b_bound.shifted(w_bound * x_norm),
            HypothesisClass::OneHiddenRelu { lambda, w_bound, b_bound } => {
                b_bound.shifted(w_bound * x_norm).scale(lambda)
            }
        }
    }

    /// Infimum over inputs of the attainable score reach: `B`, `ΛB`, or
    /// unbounded. This is the parameter that governs the transforms.
    pub fn floor_reach(&self) -> Magnitude {
        self.score_reach(0.0)
    }

    /// Exact attainable interval `{h(x) : h ∈ H}`.
    pub fn score_range(&self, x_norm: f64) -> Result<(f64, f64)> {
        check_norm(x_norm)?;
        match self.score_reach(x_norm) {
            Magnitude::Finite(r) => Ok((-r, r)),
            Magnitude::Infinite => Err(Error::Unbounded),
        }
    }

    /// `sup_h inf_{‖x'−x‖ ≤ γ} h(x')`; exact for linear classes, a sandwich
    /// `[ΛB, Λ(W max{‖x‖, γ} − γW + B)]` for ReLU networks.
    pub fn adversarial_reach(&self, x_norm: f64) -> Result<AdversarialReach> {
        check_norm(x_norm)?;
        let gamma = self.gamma;
        match self.class {
            HypothesisClass::All => Err(Error::Unbounded),
            HypothesisClass::Linear { w_bound, b_bound } => {
                let b = b_bound.finite().ok_or(Error::Unbounded)?;
                let v = w_bound * x_norm.max(gamma) - gamma * w_bound + b;
                Ok(AdversarialReach { lower: v, upper: v })
            }
            HypothesisClass::OneHiddenRelu { lambda, w_bound, b_bound } => {
                let b = b_bound.finite().ok_or(Error::Unbounded)?;
                Ok(AdversarialReach {
                    lower: lambda * b,
                    upper: lambda * (w_bound * x_norm.max(gamma) - gamma * w_bound + b),
                })
            }
        }
    }

    /// Whether the class contains hypotheses of both signs at every point,
    /// including the origin.
    pub fn is_sign_rich(&self) -> bool {
        self.floor_reach().is_positive()
    }
}

pub(crate) fn check_norm(x_norm: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x_norm) {
        Ok(())
    } else {
        Err(invalid("x_norm", format!("input norm must lie in [0, 1], got {x_norm}")))
    }
}

/// `x ↦ w·x + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearHypothesis {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearHypothesis {
    pub fn new(w: Vec<f64>, b: f64) -> Self {
        LinearHypothesis { w, b }
    }

    /// One-dimensional `x ↦ w x + b`.
    pub fn scalar(w: f64, b: f64) -> Self {
        LinearHypothesis { w: vec![w], b }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b
    }

    /// Checks `‖w‖_q ≤ W` and `|b| ≤ B` against a linear spec.
    pub fn check_against(&self, spec: &HypothesisSpec) -> Result<()> {
        match spec.class {
            HypothesisClass::All => Ok(()),
            HypothesisClass::Linear { w_bound, b_bound } => {
                let norm = lp_norm(&self.w, spec.q());
                if norm > w_bound * (1.0 + 1e-12) {
                    return Err(invalid("w", format!("‖w‖_q = {norm} exceeds W = {w_bound}")));
                }
                if !b_bound.admits(self.b.abs() * (1.0 - 1e-12)) {
                    return Err(invalid("b", format!("|b| = {} exceeds B = {b_bound}", self.b.abs())));
                }
                Ok(())
            }
            HypothesisClass::OneHiddenRelu { .. } => {
                Err(Error::Unsupported("a linear hypothesis is not a member of a ReLU network class".into()))
            }
        }
    }
}

/// Infimum and supremum of a linear hypothesis over the `γ`-ball around `x`
/// in the `p`-norm, with `q` the dual index.
pub fn adversarial_extrema_linear(h: &LinearHypothesis, x: &[f64], gamma: f64, q: Magnitude) -> (f64, f64) {
    let centre = h.eval(x);
    let spread = gamma * lp_norm(&h.w, q);
    (centre - spread, centre + spread)
}

/// One-dimensional ReLU unit `u (w x + b)_+`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReluUnit {
    pub u: f64,
    pub w: f64,
    pub b: f64,
}

/// One-hidden-layer ReLU network on scalar inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReluNetwork {
    pub units: Vec<ReluUnit>,
}

impl ReluNetwork {
    pub fn eval(&self, x: f64) -> f64 {
        self.units.iter().map(|n| n.u * (n.w * x + n.b).max(0.0)).sum()
    }

    pub fn is_member(&self, spec: &HypothesisSpec) -> bool {
        match spec.class {
            HypothesisClass::OneHiddenRelu { lambda, w_bound, b_bound } => {
                let u_norm: f64 = self.units.iter().map(|n| n.u.abs()).sum();
                u_norm <= lambda * (1.0 + 1e-12)
                    && self.units.iter().all(|n| n.w.abs() <= w_bound && b_bound.admits(n.b.abs()))
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fin(v: f64) -> Magnitude {
        Magnitude::Finite(v)
    }

    #[test]
    fn score_ranges() {
        let lin = HypothesisSpec::linear(1.0, fin(0.8)).unwrap();
        assert_eq!(lin.score_range(1.0).unwrap(), (-1.8, 1.8));
        assert_eq!(lin.score_range(0.0).unwrap(), (-0.8, 0.8));
        let relu = HypothesisSpec::relu(2.0, 1.0, fin(0.5)).unwrap();
        assert_eq!(relu.score_range(1.0).unwrap(), (-3.0, 3.0));
        assert_eq!(HypothesisSpec::all().score_range(0.3), Err(Error::Unbounded));
        assert!(lin.score_range(1.5).is_err());
    }

    #[test]
    fn relu_range_matches_grid_maximum() {
        let spec = HypothesisSpec::relu(2.0, 1.0, fin(0.5)).unwrap();
        let mut best = f64::NEG_INFINITY;
        let n = 40;
        for iu in 0..=n {
            let u = -2.0 + 4.0 * iu as f64 / n as f64;
            for iw in 0..=n {
                let w = -1.0 + 2.0 * iw as f64 / n as f64;
                for ib in 0..=n {
                    let b = -0.5 + ib as f64 / n as f64;
                    let net = ReluNetwork { units: vec![ReluUnit { u, w, b }] };
                    best = best.max(net.eval(1.0).abs());
                }
            }
        }
        assert!((best - 3.0).abs() < 1e-12);
        assert_eq!(spec.score_range(1.0).unwrap().1, 3.0);
    }

    #[test]
    fn extrema_examples() {
        let q = fin(2.0);
        assert_eq!(adversarial_extrema_linear(&LinearHypothesis::scalar(0.0, 0.3), &[0.7], 0.1, q), (0.3, 0.3));
        let (lo, hi) = adversarial_extrema_linear(&LinearHypothesis::scalar(-5.0, 0.0), &[0.05], 0.1, q);
        assert!((lo + 0.75).abs() < 1e-15 && (hi - 0.25).abs() < 1e-15);
        assert_eq!(adversarial_extrema_linear(&LinearHypothesis::scalar(1.0, 0.0), &[0.5], 0.0, q), (0.5, 0.5));
    }

    #[test]
    fn adversarial_reach_examples() {
        let lin = HypothesisSpec::linear(1.0, fin(0.8)).unwrap().with_gamma(0.1).unwrap();
        let r = lin.adversarial_reach(1.0).unwrap();
        assert!(r.is_exact() && (r.lower - 1.7).abs() < 1e-15);
        assert!((lin.adversarial_reach(0.0).unwrap().lower - 0.8).abs() < 1e-15);
        let relu = HypothesisSpec::relu(1.0, 1.0, fin(0.8)).unwrap().with_gamma(0.1).unwrap();
        let r = relu.adversarial_reach(1.0).unwrap();
        assert!((r.lower - 0.8).abs() < 1e-15 && (r.upper - 1.7).abs() < 1e-15);
        assert!(HypothesisSpec::all().adversarial_reach(0.5).is_err());
    }

    #[test]
    fn adversarial_reach_matches_wb_grid() {
        let spec = HypothesisSpec::linear(1.0, fin(0.8)).unwrap().with_gamma(0.1).unwrap();
        let n = 400;
        let mut best = f64::NEG_INFINITY;
        for iw in 0..=n {
            let w = -1.0 + 2.0 * iw as f64 / n as f64;
            for ib in 0..=n {
                let b = -0.8 + 1.6 * ib as f64 / n as f64;
                let (lo, _) = adversarial_extrema_linear(&LinearHypothesis::scalar(w, b), &[1.0], 0.1, spec.q());
                best = best.max(lo);
            }
        }
        assert!((best - 1.7).abs() < 1e-12);
    }

    #[test]
    fn magnitude_serde_round_trip() {
        let spec = HypothesisSpec::linear(1.0, Magnitude::Infinite).unwrap().with_p(Magnitude::Infinite).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"inf\""));
        let back: HypothesisSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert_eq!(conjugate(Magnitude::Infinite), fin(1.0));
        assert_eq!(conjugate(fin(1.0)), Magnitude::Infinite);
        assert_eq!(conjugate(fin(2.0)), fin(2.0));
    }

    #[test]
    fn validation() {
        assert!(HypothesisSpec::linear(-1.0, fin(1.0)).is_err());
        assert!(HypothesisSpec::all().with_gamma(1.0).is_err());
        assert!(HypothesisSpec::all().with_p(fin(0.5)).is_err());
        assert!(Magnitude::new(-0.1).is_err());
        assert!(!HypothesisSpec::linear(1.0, fin(0.0)).unwrap().is_sign_rich());
    }

    proptest! {
        #[test]
        fn range_is_symmetric(w in 0.0f64..5.0, b in 0.0f64..5.0, lambda in 0.0f64..3.0, x in 0.0f64..1.0) {
            for spec in [HypothesisSpec::linear(w, fin(b)).unwrap(), HypothesisSpec::relu(lambda, w, fin(b)).unwrap()] {
                let (lo, hi) = spec.score_range(x).unwrap();
                prop_assert_eq!(lo, -hi);
            }
        }

        #[test]
        fn extrema_bracket_ball(w in -3.0f64..3.0, b in -1.0f64..1.0, x in -1.0f64..1.0, gamma in 0.0f64..0.5) {
            let h = LinearHypothesis::scalar(w, b);
            let (lo, hi) = adversarial_extrema_linear(&h, &[x], gamma, fin(2.0));
            let mut glo = f64::INFINITY;
            let mut ghi = f64::NEG_INFINITY;
            for i in 0..=1000 {
                let v = h.eval(&[x - gamma + 2.0 * gamma * i as f64 / 1000.0]);
                glo = glo.min(v);
                ghi = ghi.max(v);
            }
            prop_assert!((lo - glo).abs() < 1e-9 && (hi - ghi).abs() < 1e-9);
        }

        #[test]
        fn sampled_lower_extrema_stay_below_reach(w in -1.0f64..1.0, b in -0.8f64..0.8, x in 0.0f64..1.0) {
            let spec = HypothesisSpec::linear(1.0, fin(0.8)).unwrap().with_gamma(0.1).unwrap();
            let (lo, _) = adversarial_extrema_linear(&LinearHypothesis::scalar(w, b), &[x], 0.1, spec.q());
            prop_assert!(lo <= spec.adversarial_reach(x).unwrap().upper + 1e-12);
        }
    }
}
