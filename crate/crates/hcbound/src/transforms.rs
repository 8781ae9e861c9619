//! Estimation-error transforms and their inverses, stored as explicit
//! breakpoints and closed-form segments.
//!
//! A forward transform `T` maps a target-loss conditional regret to a lower
//! bound on the surrogate conditional regret. Its inverse `Γ = T⁻¹` turns a
//! surrogate estimation error into a target estimation error bound.

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypotheses::{HypothesisClass, HypothesisSpec, Magnitude};
use crate::losses::{softplus, MarginLoss, TruncationEps};

/// One closed-form piece of a transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "coefficients", rename_all = "kebab-case")]
pub enum Segment {
    /// `slope · t + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// `scale · t^exponent`.
    Power { scale: f64, exponent: f64 },
    /// `((1 + t)/2) log₂(1 + t) + ((1 − t)/2) log₂(1 − t)`.
    Entropy,
    /// `1 − √(1 − t²)`.
    ExpBranch,
    /// `tanh(k · reach) · t`.
    TanhScaled { k: f64, reach: Magnitude },
}

fn xlog2(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

impl Segment {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Segment::Affine { slope, intercept } => slope * t + intercept,
            Segment::Power { scale, exponent } => scale * t.max(0.0).powf(exponent),
            Segment::Entropy => 0.5 * xlog2(1.0 + t) + 0.5 * xlog2(1.0 - t),
            Segment::ExpBranch => 1.0 - ((1.0 - t) * (1.0 + t)).max(0.0).sqrt(),
            Segment::TanhScaled { k, reach } => reach.tanh_scaled(k) * t,
        }
    }

    /// Derivative at `t`; infinite where the segment is vertical.
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Segment::Affine { slope, .. } => slope,
            Segment::Power { scale, exponent } => {
                if exponent == 1.0 {
                    scale
                } else if t <= 0.0 {
                    if exponent < 1.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    scale * exponent * t.powf(exponent - 1.0)
                }
            }
            Segment::Entropy => {
                if t >= 1.0 {
                    f64::INFINITY
                } else {
                    0.5 * ((1.0 + t) / (1.0 - t)).log2()
                }
            }
            Segment::ExpBranch => {
                if t >= 1.0 {
                    f64::INFINITY
                } else {
                    t / ((1.0 - t) * (1.0 + t)).sqrt()
                }
            }
            Segment::TanhScaled { k, reach } => reach.tanh_scaled(k),
        }
    }

    /// Closed-form inverse where one exists.
    fn inverse(&self) -> Option<Segment> {
        match *self {
            Segment::Affine { slope, intercept } if slope > 0.0 => {
                Some(Segment::Affine { slope: 1.0 / slope, intercept: -intercept / slope })
            }
            Segment::Power { scale, exponent } if scale > 0.0 && exponent > 0.0 => {
                Some(Segment::Power { scale: scale.powf(-1.0 / exponent), exponent: 1.0 / exponent })
            }
            Segment::TanhScaled { k, reach } if reach.tanh_scaled(k) > 0.0 => {
                Some(Segment::Affine { slope: 1.0 / reach.tanh_scaled(k), intercept: 0.0 })
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Inverse,
}

/// Which construction produced a transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum TransformVariant {
    Standard,
    Adversarial,
    Massart { beta: f64 },
    MassartAdversarial { beta: f64 },
}

/// Noise margin `β ∈ (0, 1/2]` with `|η(x) − 1/2| ≥ β` almost everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MassartParams(f64);

impl MassartParams {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta <= 0.5 {
            Ok(MassartParams(beta))
        } else {
            Err(invalid("massart-beta", format!("must lie in (0, 1/2], got {beta}")))
        }
    }

    pub fn beta(self) -> f64 {
        self.0
    }
}

/// A piecewise function on `[breakpoints[0], breakpoints[last]]`, extended
/// beyond the last breakpoint by its final segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseTransform {
    pub loss: MarginLoss,
    pub class_params: HypothesisSpec,
    #[serde(flatten)]
    pub variant: TransformVariant,
    pub direction: Direction,
    /// Set when an inverse is an upper bound on the true inverse rather than
    /// the inverse itself.
    pub relaxed: bool,
    pub eps: TruncationEps,
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl PiecewiseTransform {
    fn build(
        loss: MarginLoss,
        spec: HypothesisSpec,
        variant: TransformVariant,
        pieces: Vec<(f64, f64, Segment)>,
    ) -> Self {
        let pieces: Vec<_> = pieces.into_iter().filter(|(a, b, _)| b > a).collect();
        let mut breakpoints = vec![pieces[0].0];
        let mut segments = Vec::with_capacity(pieces.len());
        for (_, b, seg) in pieces {
            breakpoints.push(b);
            segments.push(seg);
        }
        PiecewiseTransform {
            loss,
            class_params: spec,
            variant,
            direction: Direction::Forward,
            relaxed: false,
            eps: TruncationEps::ZERO,
            breakpoints,
            segments,
        }
    }

    pub fn domain_end(&self) -> f64 {
        *self.breakpoints.last().expect("a transform has at least one segment")
    }

    fn segment_index(&self, t: f64) -> usize {
        let inner = &self.breakpoints[1..self.breakpoints.len() - 1];
        inner.partition_point(|&b| b <= t)
    }

    /// Value at `t`; non-positive arguments map to the value at zero.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(self.breakpoints[0]);
        self.segments[self.segment_index(t)].eval(t)
    }

    /// Derivative at `t`, taking the larger one-sided derivative at a
    /// breakpoint.
    pub fn derivative(&self, t: f64) -> f64 {
        let t = t.max(self.breakpoints[0]);
        let i = self.segment_index(t);
        let right = self.segments[i].derivative(t);
        if i > 0 && t == self.breakpoints[i] {
            right.max(self.segments[i - 1].derivative(t))
        } else {
            right
        }
    }

    /// `T(1)` for a forward transform.
    pub fn value_at_one(&self) -> f64 {
        self.eval(1.0)
    }

    /// Largest jump across an interior breakpoint.
    pub fn max_discontinuity(&self) -> f64 {
        (1..self.segments.len())
            .map(|i| {
                let b = self.breakpoints[i];
                (self.segments[i - 1].eval(b) - self.segments[i].eval(b)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Solves `T(t) = y` by bisection on a non-decreasing forward transform.
    pub fn invert_numerically(&self, y: f64) -> Result<f64> {
        let (mut lo, mut hi) = (self.breakpoints[0], self.domain_end());
        let top = self.eval(hi);
        if y < self.eval(lo) - 1e-15 || y > top + 1e-15 {
            return Err(Error::OutOfDomain { value: y, upper: top });
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Closed-form inverse on `[T(0), T(end)]`, available when every segment
    /// is affine, a power, or tanh-scaled.
    pub fn inverse(&self) -> Result<PiecewiseTransform> {
        if self.direction != Direction::Forward {
            return Err(Error::Unsupported("only forward transforms can be inverted".into()));
        }
        let mut breakpoints = Vec::with_capacity(self.breakpoints.len());
        let mut segments = Vec::with_capacity(self.segments.len());
        breakpoints.push(self.eval(self.breakpoints[0]));
        for (i, seg) in self.segments.iter().enumerate() {
            let inv = seg.inverse().ok_or_else(|| {
                Error::Unsupported(format!("{} transform is not invertible in closed form", self.loss))
            })?;
            segments.push(inv);
            breakpoints.push(seg.eval(self.breakpoints[i + 1]));
        }
        Ok(PiecewiseTransform { direction: Direction::Inverse, breakpoints, segments, ..self.clone() })
    }

    /// The same transform with the linear-below-`eps` modification.
    pub fn with_eps(&self, eps: TruncationEps) -> Result<PiecewiseTransform> {
        let e = eps.value();
        if e == 0.0 {
            return Ok(self.clone());
        }
        let at = self.eval(e);
        if at <= 0.0 {
            return Err(invalid(
                "eps",
                format!("the transform vanishes at eps = {e}; the modified slope is undefined"),
            ));
        }
        let mut pieces = vec![(0.0, e, Segment::Affine { slope: at / e, intercept: 0.0 })];
        for (i, seg) in self.segments.iter().enumerate() {
            let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
            if b > e {
                pieces.push((a.max(e), b, *seg));
            }
        }
        let mut out = PiecewiseTransform::build(self.loss, self.class_params, self.variant, pieces);
        out.eps = eps;
        Ok(out)
    }
}

fn reject_adversarial(spec: &HypothesisSpec) -> Result<()> {
    if spec.is_adversarial() {
        Err(Error::Unsupported(
            "the standard transform was requested for an adversarial class; use the adversarial transform".into(),
        ))
    } else {
        Ok(())
    }
}

/// The estimation-error transform of a margin loss over a standard class,
/// optionally with the linear-below-`eps` modification.
pub fn transform(loss: &MarginLoss, spec: &HypothesisSpec, eps: TruncationEps) -> Result<PiecewiseTransform> {
    let loss = loss.validated()?;
    reject_adversarial(spec)?;
    let reach = spec.floor_reach();
    let std = TransformVariant::Standard;
    let affine = |slope: f64, intercept: f64| Segment::Affine { slope, intercept };
    let pieces = match (loss, reach) {
        (MarginLoss::Hinge, r) => vec![(0.0, 1.0, affine(r.min_with(1.0), 0.0))],
        (MarginLoss::Sigmoid { k }, r) => vec![(0.0, 1.0, Segment::TanhScaled { k, reach: r })],
        (MarginLoss::RhoMargin { rho }, r) => vec![(0.0, 1.0, affine(r.min_with(rho) / rho, 0.0))],
        (MarginLoss::Quadratic, Magnitude::Finite(b)) if b < 1.0 => {
            vec![(0.0, b, Segment::Power { scale: 1.0, exponent: 2.0 }), (b, 1.0, affine(2.0 * b, -b * b))]
        }
        (MarginLoss::Quadratic, _) => vec![(0.0, 1.0, Segment::Power { scale: 1.0, exponent: 2.0 })],
        (MarginLoss::Logistic, Magnitude::Finite(b)) => {
            let knee = (0.5 * b).tanh();
            let intercept = 1.0 - 0.5 * (softplus(-b) + softplus(b)) / LN_2;
            vec![(0.0, knee, Segment::Entropy), (knee, 1.0, affine(b / (2.0 * LN_2), intercept))]
        }
        (MarginLoss::Logistic, Magnitude::Infinite) => vec![(0.0, 1.0, Segment::Entropy)],
        (MarginLoss::Exponential, Magnitude::Finite(b)) => {
            let knee = b.tanh();
            vec![(0.0, knee, Segment::ExpBranch), (knee, 1.0, affine(b.sinh(), 1.0 - b.cosh()))]
        }
        (MarginLoss::Exponential, Magnitude::Infinite) => vec![(0.0, 1.0, Segment::ExpBranch)],
    };
    PiecewiseTransform::build(loss, *spec, std, pieces).with_eps(eps)
}

/// Inverse of [`transform`] on `[0, T(1)]`. Hinge, quadratic, sigmoid and
/// rho-margin inverses are exact; logistic and exponential inverses are the
/// quadratic-then-linear upper bounds and are flagged `relaxed`.
pub fn transform_inverse(loss: &MarginLoss, spec: &HypothesisSpec) -> Result<PiecewiseTransform> {
    let forward = transform(loss, spec, TruncationEps::ZERO)?;
    let knee = match (forward.loss, spec.floor_reach()) {
        (MarginLoss::Logistic, Magnitude::Finite(b)) => (0.5 * b).tanh(),
        (MarginLoss::Exponential, Magnitude::Finite(b)) => b.tanh(),
        (MarginLoss::Logistic | MarginLoss::Exponential, Magnitude::Infinite) => 1.0,
        _ => {
            if forward.value_at_one() <= 0.0 {
                return Err(Error::Unsupported(format!("the {} transform is identically zero", forward.loss)));
            }
            return forward.inverse();
        }
    };
    if knee <= 0.0 {
        return Err(Error::Unsupported(format!("the {} transform is identically zero", forward.loss)));
    }
    let top = forward.value_at_one();
    let bend = 0.5 * knee * knee;
    let pieces = vec![
        (0.0, bend, Segment::Power { scale: SQRT_2, exponent: 0.5 }),
        (bend, top.max(bend), Segment::Affine { slope: 2.0 / knee, intercept: 0.0 }),
    ];
    let mut out = PiecewiseTransform::build(forward.loss, *spec, TransformVariant::Standard, pieces);
    out.direction = Direction::Inverse;
    out.relaxed = true;
    Ok(out)
}

fn require_adversarial(spec: &HypothesisSpec) -> Result<()> {
    if !spec.is_adversarial() {
        return Err(invalid("gamma", "adversarial transforms require gamma > 0"));
    }
    match spec.class {
        HypothesisClass::All => Err(Error::Unsupported("adversarial transforms need a linear or ReLU class".into())),
        _ => Ok(()),
    }
}

/// Adversarial transform of the supremum-based rho-margin loss. ReLU
/// classes use the `ΛB` relaxation of the class-level adversarial reach.
pub fn adversarial_transform(
    loss: &MarginLoss,
    spec: &HypothesisSpec,
    eps: TruncationEps,
) -> Result<PiecewiseTransform> {
    let loss = loss.validated()?;
    require_adversarial(spec)?;
    match loss {
        MarginLoss::RhoMargin { rho } => {
            let slope = spec.floor_reach().min_with(rho) / rho;
            let seg = Segment::Affine { slope, intercept: 0.0 };
            PiecewiseTransform::build(loss, *spec, TransformVariant::Adversarial, vec![(0.0, 1.0, seg)]).with_eps(eps)
        }
        MarginLoss::Hinge | MarginLoss::Sigmoid { .. } => Err(Error::ImpossibleBound(format!(
            "the supremum-based {loss} loss without a noise margin: on a point with eta = 1/2 the zero hypothesis has zero surrogate excess and target excess 1/2; supply a noise margin"
        ))),
        _ => Err(Error::ImpossibleBound(format!(
            "the supremum-based {loss} loss: on a point with eta = 1/2 the zero hypothesis has zero surrogate excess and target excess 1/2"
        ))),
    }
}

/// Noise-margin transform over all measurable functions: the standard
/// transform above `2β`, its chord from the origin below.
pub fn massart_transform(loss: &MarginLoss, spec: &HypothesisSpec, mp: MassartParams) -> Result<PiecewiseTransform> {
    let loss = loss.validated()?;
    if !matches!(loss, MarginLoss::Quadratic | MarginLoss::Logistic | MarginLoss::Exponential) {
        return Err(Error::Unsupported(format!("no noise-margin transform for the {loss} loss")));
    }
    if spec.class != HypothesisClass::All || spec.is_adversarial() {
        return Err(Error::Unsupported("noise-margin transforms are defined over all measurable functions".into()));
    }
    let base = transform(&loss, spec, TruncationEps::ZERO)?;
    let knee = 2.0 * mp.beta();
    let slope = base.eval(knee) / knee;
    let pieces = vec![(0.0, knee, Segment::Affine { slope, intercept: 0.0 }), (knee, 1.0, base.segments[0])];
    Ok(PiecewiseTransform::build(loss, *spec, TransformVariant::Massart { beta: mp.beta() }, pieces))
}

/// Lower bound on the noise-margin adversarial transform of the
/// supremum-based hinge and sigmoid losses.
pub fn massart_adversarial_transform(
    loss: &MarginLoss,
    spec: &HypothesisSpec,
    mp: MassartParams,
) -> Result<PiecewiseTransform> {
    let loss = loss.validated()?;
    require_adversarial(spec)?;
    let reach = spec.floor_reach();
    let scale = match loss {
        MarginLoss::Hinge => reach.min_with(1.0),
        MarginLoss::Sigmoid { k } => reach.tanh_scaled(k),
        _ => return Err(Error::Unsupported(format!("no noise-margin adversarial transform for the {loss} loss"))),
    };
    let beta = mp.beta();
    let knee = 0.5 + beta;
    let pieces = vec![
        (0.0, knee, Segment::Affine { slope: scale * 4.0 * beta / (1.0 + 2.0 * beta), intercept: 0.0 }),
        (knee, 1.0, Segment::Affine { slope: 2.0 * scale, intercept: -scale }),
    ];
    Ok(PiecewiseTransform::build(loss, *spec, TransformVariant::MassartAdversarial { beta }, pieces))
}

/// Slope of the chord below the noise-margin knee; its reciprocal multiplies
/// the surrogate excess in the linear-rate bound.
pub fn massart_slope(t: &PiecewiseTransform) -> f64 {
    match t.segments[0] {
        Segment::Affine { slope, .. } => slope,
        seg => seg.derivative(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditional_risk::{brute_force_inf, ConditionalPoint, Constraint};
    use proptest::prelude::*;

    fn lin(b: f64) -> HypothesisSpec {
        HypothesisSpec::linear(1.0, Magnitude::Finite(b)).unwrap()
    }

    fn z() -> TruncationEps {
        TruncationEps::ZERO
    }

    fn losses() -> Vec<MarginLoss> {
        vec![
            MarginLoss::Hinge,
            MarginLoss::Logistic,
            MarginLoss::Exponential,
            MarginLoss::Quadratic,
            MarginLoss::Sigmoid { k: 1.0 },
            MarginLoss::RhoMargin { rho: 1.0 },
            MarginLoss::RhoMargin { rho: 0.3 },
        ]
    }

    #[test]
    fn table_rows() {
        let t = transform(&MarginLoss::Hinge, &lin(0.8), z()).unwrap();
        assert_eq!(t.segments, vec![Segment::Affine { slope: 0.8, intercept: 0.0 }]);
        assert!((t.eval(0.5) - 0.4).abs() < 1e-15);
        let q = transform(&MarginLoss::Quadratic, &lin(0.5), z()).unwrap();
        assert!((q.eval(0.7) - 0.45).abs() < 1e-15);
        assert_eq!(q.breakpoints, vec![0.0, 0.5, 1.0]);
        let s = transform(&MarginLoss::Sigmoid { k: 1.0 }, &HypothesisSpec::all(), z()).unwrap();
        assert_eq!(s.eval(0.37), 0.37);
        for loss in losses() {
            for spec in [lin(0.3), lin(2.0), HypothesisSpec::all()] {
                assert_eq!(transform(&loss, &spec, z()).unwrap().eval(0.0), 0.0);
            }
        }
    }

    #[test]
    fn relu_replaces_b_by_lambda_b() {
        let relu = HypothesisSpec::relu(2.0, 1.0, Magnitude::Finite(0.3)).unwrap();
        for loss in losses() {
            let a = transform(&loss, &relu, z()).unwrap();
            let b = transform(&loss, &lin(0.6), z()).unwrap();
            assert_eq!(a.segments, b.segments);
            assert_eq!(a.breakpoints, b.breakpoints);
        }
    }

    #[test]
    fn inverse_examples() {
        let h = transform_inverse(&MarginLoss::Hinge, &lin(0.8)).unwrap();
        assert!((h.eval(0.4) - 0.5).abs() < 1e-15);
        let q = transform_inverse(&MarginLoss::Quadratic, &lin(1.0)).unwrap();
        assert!((q.eval(0.25) - 0.5).abs() < 1e-15);
        let l = transform_inverse(&MarginLoss::Logistic, &HypothesisSpec::all()).unwrap();
        assert!(l.relaxed);
        assert!((l.eval(0.02) - 0.2).abs() < 1e-15);
        assert!(transform_inverse(&MarginLoss::Hinge, &lin(0.0)).is_err());
        assert!(transform_inverse(&MarginLoss::Logistic, &lin(0.0)).is_err());
    }

    #[test]
    fn unbounded_limits_are_structural() {
        let all = HypothesisSpec::all();
        for loss in [MarginLoss::Logistic, MarginLoss::Exponential] {
            let inv = transform_inverse(&loss, &all).unwrap();
            assert_eq!(inv.segments[0], Segment::Power { scale: SQRT_2, exponent: 0.5 });
            assert_eq!(inv.breakpoints[1], 0.5);
        }
        for b in [1.0, 1.5, 40.0] {
            let h = transform_inverse(&MarginLoss::Hinge, &lin(b)).unwrap();
            assert_eq!(h.segments, vec![Segment::Affine { slope: 1.0, intercept: 0.0 }]);
            let q = transform_inverse(&MarginLoss::Quadratic, &lin(b)).unwrap();
            assert_eq!(q.segments, vec![Segment::Power { scale: 1.0, exponent: 0.5 }]);
        }
        let q = transform(&MarginLoss::Quadratic, &all, z()).unwrap();
        assert_eq!(q.segments, vec![Segment::Power { scale: 1.0, exponent: 2.0 }]);
    }

    #[test]
    fn adversarial_examples() {
        let rho = MarginLoss::RhoMargin { rho: 1.0 };
        let spec = lin(0.8).with_gamma(0.1).unwrap();
        let t = adversarial_transform(&rho, &spec, z()).unwrap();
        assert!((t.eval(0.5) - 0.4).abs() < 1e-15);
        let t = adversarial_transform(&rho, &lin(1.3).with_gamma(0.1).unwrap(), z()).unwrap();
        assert_eq!(t.eval(0.7), 0.7);
        let relu = HypothesisSpec::relu(2.0, 1.0, Magnitude::Finite(0.3)).unwrap().with_gamma(0.1).unwrap();
        let t = adversarial_transform(&rho, &relu, z()).unwrap();
        assert!((t.eval(1.0) - 0.6).abs() < 1e-15);
        for loss in [MarginLoss::Hinge, MarginLoss::Sigmoid { k: 1.0 }, MarginLoss::Logistic, MarginLoss::Quadratic] {
            assert!(matches!(adversarial_transform(&loss, &spec, z()), Err(Error::ImpossibleBound(_))));
        }
        assert!(adversarial_transform(&rho, &lin(0.8), z()).is_err());
    }

    #[test]
    fn massart_examples() {
        let all = HypothesisSpec::all();
        let half = MassartParams::new(0.5).unwrap();
        let q = massart_transform(&MarginLoss::Quadratic, &all, half).unwrap();
        assert_eq!(q.segments, vec![Segment::Affine { slope: 1.0, intercept: 0.0 }]);
        let e = massart_transform(&MarginLoss::Exponential, &all, half).unwrap();
        assert_eq!(massart_slope(&e), 1.0);
        let l = massart_transform(&MarginLoss::Logistic, &all, half).unwrap();
        assert!((massart_slope(&l) - 1.0).abs() < 1e-15);
        let q = massart_transform(&MarginLoss::Quadratic, &all, MassartParams::new(0.25).unwrap()).unwrap();
        assert_eq!(q.segments[0], Segment::Affine { slope: 0.5, intercept: 0.0 });
        assert_eq!(q.breakpoints, vec![0.0, 0.5, 1.0]);
        assert!(q.max_discontinuity() < 1e-15);
        assert!(MassartParams::new(0.7).is_err());
        assert!(MassartParams::new(0.0).is_err());
        assert!(massart_transform(&MarginLoss::Hinge, &all, half).is_err());
        assert!(massart_transform(&MarginLoss::Quadratic, &lin(1.0), half).is_err());
    }

    #[test]
    fn massart_adversarial_examples() {
        let spec = lin(1.0).with_gamma(0.1).unwrap();
        let t = massart_adversarial_transform(&MarginLoss::Hinge, &spec, MassartParams::new(0.5).unwrap()).unwrap();
        assert_eq!(t.segments, vec![Segment::Affine { slope: 1.0, intercept: 0.0 }]);
        assert_eq!(t.eval(0.0), 0.0);
        let sig = MarginLoss::Sigmoid { k: 1.0 };
        let t = massart_adversarial_transform(&sig, &spec, MassartParams::new(0.25).unwrap()).unwrap();
        assert!((massart_slope(&t) - 1f64.tanh() / 1.5).abs() < 1e-15);
        assert_eq!(t.breakpoints, vec![0.0, 0.75, 1.0]);
        assert!(t.max_discontinuity() < 1e-15);
        assert!(massart_adversarial_transform(&MarginLoss::Logistic, &spec, MassartParams::new(0.5).unwrap()).is_err());
    }

    #[test]
    fn eps_modification() {
        let q = transform(&MarginLoss::Quadratic, &lin(0.5), TruncationEps::new(0.2).unwrap()).unwrap();
        assert_eq!(q.breakpoints, vec![0.0, 0.2, 0.5, 1.0]);
        assert!((q.eval(0.1) - 0.02).abs() < 1e-15);
        assert!((q.eval(0.3) - 0.09).abs() < 1e-15);
        let e = TruncationEps::new(0.6).unwrap();
        let q = transform(&MarginLoss::Quadratic, &lin(0.5), e).unwrap();
        assert_eq!(q.breakpoints, vec![0.0, 0.6, 1.0]);
        assert!(transform(&MarginLoss::Hinge, &lin(0.0), TruncationEps::new(0.1).unwrap()).is_err());
    }

    #[test]
    fn json_shape() {
        let t = transform(&MarginLoss::Logistic, &lin(0.8), z()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&t).unwrap();
        assert_eq!(v["direction"], "forward");
        assert_eq!(v["segments"][0]["kind"], "entropy");
        assert_eq!(v["segments"][1]["kind"], "affine");
        assert!(v["segments"][1]["coefficients"]["slope"].is_number());
        let back: PiecewiseTransform = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn definitional_consistency_against_oracle() {
        for loss in losses() {
            for b in [0.3, 0.8, 1.7] {
                let spec = lin(b);
                let forward = transform(&loss, &spec, z()).unwrap();
                for i in 0..=10 {
                    let t = 0.5 + 0.05 * i as f64;
                    let oracle = [0.0, 0.25, 0.5, 1.0]
                        .iter()
                        .map(|&x| {
                            let p = ConditionalPoint::new(x, t).unwrap();
                            brute_force_inf(&loss, &spec, p, Constraint::ScoreNegative, 4001).unwrap()
                                - brute_force_inf(&loss, &spec, p, Constraint::None, 4001).unwrap()
                        })
                        .fold(f64::INFINITY, f64::min);
                    let closed = forward.eval(2.0 * t - 1.0);
                    assert!((closed - oracle).abs() <= 2e-3, "{loss} B={b} t={t}: {closed} vs {oracle}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn calculus(b in 0.05f64..3.0, k in 0.2f64..3.0, rho in 0.1f64..2.0, a in 0.0f64..1.0, c in 0.0f64..1.0) {
            let all = [
                MarginLoss::Hinge, MarginLoss::Logistic, MarginLoss::Exponential, MarginLoss::Quadratic,
                MarginLoss::Sigmoid { k }, MarginLoss::RhoMargin { rho },
            ];
            for loss in all {
                let t = transform(&loss, &lin(b), z()).unwrap();
                prop_assert!(t.max_discontinuity() < 1e-12);
                let (lo, hi) = (a.min(c), a.max(c));
                prop_assert!(t.eval(lo) <= t.eval(hi) + 1e-15);
                prop_assert!(t.eval(0.5 * (a + c)) <= 0.5 * (t.eval(a) + t.eval(c)) + 1e-12);
                let inv = transform_inverse(&loss, &lin(b)).unwrap();
                let y = a * t.value_at_one();
                if inv.relaxed {
                    prop_assert!(inv.eval(y) >= t.invert_numerically(y).unwrap() - 1e-12);
                } else {
                    prop_assert!((t.eval(inv.eval(y)) - y).abs() < 1e-9);
                }
            }
        }
    }
}
