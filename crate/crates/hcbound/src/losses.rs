//! Margin-based surrogate losses, the zero-one loss, and their adversarial
//! (supremum over a perturbation ball) counterparts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Binary label, serialized as the integer `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.sign() as i8)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Label::from_sign(v).map_err(serde::de::Error::custom),
            Raw::Text(s) => match s.as_str() {
                "+1" | "1" | "positive" => Ok(Label::Positive),
                "-1" | "negative" => Ok(Label::Negative),
                other => Err(serde::de::Error::custom(format!("unknown label `{other}`"))),
            },
        }
    }
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn from_sign(value: f64) -> Result<Self> {
        if value == 1.0 {
            Ok(Label::Positive)
        } else if value == -1.0 {
            Ok(Label::Negative)
        } else {
            Err(invalid("label", format!("expected +1 or -1, got {value}")))
        }
    }
}

/// Predicted label of a real score; a zero score predicts the positive class.
pub fn predict(score: f64) -> Label {
    if score >= 0.0 {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// A margin-based surrogate loss `Φ`, evaluated at the margin `y h(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MarginLoss {
    Hinge,
    Logistic,
    Exponential,
    Quadratic,
    Sigmoid { k: f64 },
    RhoMargin { rho: f64 },
}

/// The six loss families without their parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossFamily {
    Hinge,
    Logistic,
    Exponential,
    Quadratic,
    Sigmoid,
    RhoMargin,
}

impl LossFamily {
    pub const ALL: [LossFamily; 6] = [
        LossFamily::Hinge,
        LossFamily::Logistic,
        LossFamily::Exponential,
        LossFamily::Quadratic,
        LossFamily::Sigmoid,
        LossFamily::RhoMargin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossFamily::Hinge => "hinge",
            LossFamily::Logistic => "logistic",
            LossFamily::Exponential => "exponential",
            LossFamily::Quadratic => "quadratic",
            LossFamily::Sigmoid => "sigmoid",
            LossFamily::RhoMargin => "rho-margin",
        }
    }
}

impl FromStr for LossFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hinge" => Ok(LossFamily::Hinge),
            "logistic" | "log" => Ok(LossFamily::Logistic),
            "exponential" | "exp" => Ok(LossFamily::Exponential),
            "quadratic" | "quad" => Ok(LossFamily::Quadratic),
            "sigmoid" | "sig" => Ok(LossFamily::Sigmoid),
            "rho-margin" | "rho" | "rho_margin" => Ok(LossFamily::RhoMargin),
            other => Err(invalid("loss", format!("unknown loss family `{other}`"))),
        }
    }
}

impl MarginLoss {
    pub fn sigmoid(k: f64) -> Result<Self> {
        MarginLoss::Sigmoid { k }.validated()
    }

    pub fn rho_margin(rho: f64) -> Result<Self> {
        MarginLoss::RhoMargin { rho }.validated()
    }

    /// Builds a loss from its family; `k` and `rho` are consulted only by the
    /// family that needs them.
    pub fn from_family(family: LossFamily, k: f64, rho: f64) -> Result<Self> {
        let loss = match family {
            LossFamily::Hinge => MarginLoss::Hinge,
            LossFamily::Logistic => MarginLoss::Logistic,
            LossFamily::Exponential => MarginLoss::Exponential,
            LossFamily::Quadratic => MarginLoss::Quadratic,
            LossFamily::Sigmoid => MarginLoss::Sigmoid { k },
            LossFamily::RhoMargin => MarginLoss::RhoMargin { rho },
        };
        loss.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            MarginLoss::Sigmoid { k } if !(k > 0.0 && k.is_finite()) => {
                Err(invalid("k", format!("must be positive and finite, got {k}")))
            }
            MarginLoss::RhoMargin { rho } if !(rho > 0.0 && rho.is_finite()) => {
                Err(invalid("rho", format!("must be positive and finite, got {rho}")))
            }
            loss => Ok(loss),
        }
    }

    pub fn family(&self) -> LossFamily {
        match self {
            MarginLoss::Hinge => LossFamily::Hinge,
            MarginLoss::Logistic => LossFamily::Logistic,
            MarginLoss::Exponential => LossFamily::Exponential,
            MarginLoss::Quadratic => LossFamily::Quadratic,
            MarginLoss::Sigmoid { .. } => LossFamily::Sigmoid,
            MarginLoss::RhoMargin { .. } => LossFamily::RhoMargin,
        }
    }

    pub fn name(&self) -> &'static str {
        self.family().name()
    }

    /// Hinge, logistic, exponential and quadratic are convex in the margin.
    pub fn is_convex(&self) -> bool {
        matches!(self, MarginLoss::Hinge | MarginLoss::Logistic | MarginLoss::Exponential | MarginLoss::Quadratic)
    }

    /// `Φ(alpha)`.
    pub fn eval(&self, alpha: f64) -> f64 {
        match *self {
            MarginLoss::Hinge => (1.0 - alpha).max(0.0),
            MarginLoss::Logistic => softplus(-alpha) / std::f64::consts::LN_2,
            MarginLoss::Exponential => (-alpha).exp(),
            MarginLoss::Quadratic => {
                if alpha <= 1.0 {
                    (1.0 - alpha) * (1.0 - alpha)
                } else {
                    0.0
                }
            }
            MarginLoss::Sigmoid { k } => 1.0 - (k * alpha).tanh(),
            MarginLoss::RhoMargin { rho } => (1.0 - alpha / rho).clamp(0.0, 1.0),
        }
    }
}

impl fmt::Display for MarginLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginLoss::Sigmoid { k } => write!(f, "sigmoid(k={k})"),
            MarginLoss::RhoMargin { rho } => write!(f, "rho-margin(rho={rho})"),
            other => f.write_str(other.name()),
        }
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Zero-one loss of score `h` against label `y`.
pub fn zero_one(h: f64, y: Label) -> f64 {
    if predict(h) == y {
        0.0
    } else {
        1.0
    }
}

fn check_extrema(h_lo: f64, h_hi: f64) -> Result<()> {
    if h_lo > h_hi || h_lo.is_nan() || h_hi.is_nan() {
        return Err(invalid("h_lo", format!("lower extremum {h_lo} exceeds upper extremum {h_hi}")));
    }
    Ok(())
}

/// Supremum of `Φ(y h(x'))` over the perturbation ball, given the exact
/// infimum `h_lo` and supremum `h_hi` of `h` over that ball.
pub fn sup_loss(loss: &MarginLoss, y: Label, h_lo: f64, h_hi: f64) -> Result<f64> {
    check_extrema(h_lo, h_hi)?;
    Ok(match y {
        Label::Positive => loss.eval(h_lo),
        Label::Negative => loss.eval(-h_hi),
    })
}

/// Adversarial zero-one loss: one iff some perturbation has margin `≤ 0`.
pub fn adversarial_zero_one(h_lo: f64, h_hi: f64, y: Label) -> Result<f64> {
    check_extrema(h_lo, h_hi)?;
    let flipped = match y {
        Label::Positive => h_lo <= 0.0,
        Label::Negative => h_hi >= 0.0,
    };
    Ok(if flipped { 1.0 } else { 0.0 })
}

/// Truncation level `eps ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TruncationEps(f64);

impl TruncationEps {
    pub const ZERO: TruncationEps = TruncationEps(0.0);

    pub fn new(eps: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&eps) {
            Ok(TruncationEps(eps))
        } else {
            Err(invalid("eps", format!("must lie in [0, 1], got {eps}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `t` if `t > eps`, else `0`.
    pub fn apply(self, t: f64) -> f64 {
        truncate(t, self)
    }
}

pub fn truncate(t: f64, eps: TruncationEps) -> f64 {
    if t > eps.0 {
        t
    } else {
        0.0
    }
}
