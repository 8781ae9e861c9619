//! Labeled distributions on `[−1, 1]`: mixtures of atoms and truncated
//! normals, finite-support distributions given by `(x, weight, η)`, seeded
//! parallel sampling, and quadrature of expectations.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{invalid, Error, Result};
use crate::losses::Label;
use crate::quadrature;

/// Absolute tolerance used for every expectation.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// Samples are generated in chunks of this size, each from its own stream.
pub const SAMPLE_CHUNK: usize = 1 << 16;

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Marginal law of one mixture component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Law {
    Atom {
        x: f64,
    },
    /// Normal with pre-truncation `mean` and `std`, restricted to `[lo, hi]`.
    TruncNormal {
        lo: f64,
        hi: f64,
        mean: f64,
        std: f64,
    },
}

/// Normalized truncated normal with cached standardized bounds.
#[derive(Clone, Copy, Debug)]
struct TruncNormal {
    lo: f64,
    hi: f64,
    mean: f64,
    std: f64,
    /// Sampling runs on the side of the mean where both tail
    /// probabilities are small, then reflects back.
    reflect: bool,
    p_lo: f64,
    mass: f64,
}

impl TruncNormal {
    fn new(lo: f64, hi: f64, mean: f64, std: f64) -> Self {
        let (a, b) = ((lo - mean) / std, (hi - mean) / std);
        let reflect = a > -b;
        let (a, b) = if reflect { (-b, -a) } else { (a, b) };
        let (p_lo, p_hi) = (normal_cdf(a), normal_cdf(b));
        TruncNormal { lo, hi, mean, std, reflect, p_lo, mass: p_hi - p_lo }
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            normal_pdf((x - self.mean) / self.std) / (self.std * self.mass)
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        let z = normal_quantile(self.p_lo + u * self.mass);
        let z = if self.reflect { -z } else { z };
        (self.mean + self.std * z).clamp(self.lo, self.hi)
    }

    fn analytic_mean(&self) -> f64 {
        let (a, b) = ((self.lo - self.mean) / self.std, (self.hi - self.mean) / self.std);
        self.mean + self.std * (normal_pdf(a) - normal_pdf(b)) / self.mass
    }
}

/// One weighted, labeled mixture component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub label: Label,
    pub law: Law,
}

/// A labeled sample point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x: f64,
    pub y: Label,
}

/// Finite mixture of labeled atoms and truncated normals on `[−1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabeledDistribution {
    pub components: Vec<Component>,
    #[serde(skip)]
    normals: Vec<Option<TruncNormal>>,
}

impl PartialEq for TruncNormal {
    fn eq(&self, other: &Self) -> bool {
        (self.lo, self.hi, self.mean, self.std) == (other.lo, other.hi, other.mean, other.std)
    }
}

impl<'de> Deserialize<'de> for LabeledDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            components: Vec<Component>,
        }
        let raw = Raw::deserialize(deserializer)?;
        LabeledDistribution::new(raw.components).map_err(serde::de::Error::custom)
    }
}

/// Named distribution presets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    #[serde(rename = "sect7-nonadv")]
    NonAdversarial { sigma: f64 },
    #[serde(rename = "sect7-adv")]
    Adversarial {
        sigma: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
}

fn default_gamma() -> f64 {
    0.1
}

/// Either a preset or an explicit component list.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DistributionConfig {
    Preset(Preset),
    Explicit(LabeledDistribution),
    Finite(FiniteDistribution),
}

impl DistributionConfig {
    pub fn build(self) -> Result<LabeledDistribution> {
        match self {
            DistributionConfig::Preset(Preset::NonAdversarial { sigma }) => {
                LabeledDistribution::nonadversarial_example(sigma)
            }
            DistributionConfig::Preset(Preset::Adversarial { sigma, gamma }) => {
                LabeledDistribution::adversarial_example(sigma, gamma)
            }
            DistributionConfig::Explicit(d) => Ok(d),
            DistributionConfig::Finite(f) => Ok(f.to_labeled()),
        }
    }

    pub fn from_json(text: &str) -> Result<LabeledDistribution> {
        serde_json::from_str::<DistributionConfig>(text)
            .map_err(|e| Error::Config(format!("distribution: {e}")))?
            .build()
    }
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for w in weights {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(invalid("weight", format!("weights must be non-negative, got {w}")));
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid("weight", format!("weights must sum to 1, got {total}")));
    }
    Ok(())
}

impl LabeledDistribution {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("components", "a distribution needs at least one component"));
        }
        check_weights(components.iter().map(|c| c.weight))?;
        let mut normals = Vec::with_capacity(components.len());
        for c in &components {
            match c.law {
                Law::Atom { x } => {
                    if !(-1.0..=1.0).contains(&x) {
                        return Err(invalid("x", format!("atom at {x} lies outside [-1, 1]")));
                    }
                    normals.push(None);
                }
                Law::TruncNormal { lo, hi, mean, std } => {
                    if !(-1.0 <= lo && lo < hi && hi <= 1.0) {
                        return Err(invalid(
                            "lo",
                            format!("truncation interval [{lo}, {hi}] must satisfy -1 <= lo < hi <= 1"),
                        ));
                    }
                    if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
                        return Err(invalid(
                            "std",
                            format!("need a finite mean and positive std, got ({mean}, {std})"),
                        ));
                    }
                    let tn = TruncNormal::new(lo, hi, mean, std);
                    if !(tn.mass > 0.0) {
                        return Err(invalid("std", "the truncation interval carries no normal mass"));
                    }
                    normals.push(Some(tn));
                }
            }
        }
        Ok(LabeledDistribution { components, normals })
    }

    /// Atoms `(1, −1)` and `(−1, +1)` with weight `1/16` each; a positive
    /// normal on `[σ, 1]` with mean and standard deviation `σ`, weight
    /// `7/16`; and its negative mirror image on `[−1, −σ]`.
    pub fn nonadversarial_example(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(invalid("sigma", format!("must lie in (0, 1), got {sigma}")));
        }
        LabeledDistribution::new(vec![
            Component { weight: 1.0 / 16.0, label: Label::Negative, law: Law::Atom { x: 1.0 } },
            Component { weight: 1.0 / 16.0, label: Label::Positive, law: Law::Atom { x: -1.0 } },
            Component {
                weight: 7.0 / 16.0,
                label: Label::Positive,
                law: Law::TruncNormal { lo: sigma, hi: 1.0, mean: sigma, std: sigma },
            },
            Component {
                weight: 7.0 / 16.0,
                label: Label::Negative,
                law: Law::TruncNormal { lo: -1.0, hi: -sigma, mean: -sigma, std: sigma },
            },
        ])
    }

    /// Atoms `(1, −1)` and `(−1, +1)` with weight `1/16` each and a negative
    /// normal on `[−1, γ − σ]` with mean `γ − σ` and standard deviation `σ`,
    /// weight `7/8`.
    pub fn adversarial_example(sigma: f64, gamma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(invalid("sigma", format!("must be positive, got {sigma}")));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(invalid("gamma", format!("must lie in [0, 1), got {gamma}")));
        }
        let top = gamma - sigma;
        if !(top > -1.0 && top <= 1.0) {
            return Err(invalid("sigma", format!("gamma - sigma = {top} must lie in (-1, 1]")));
        }
        LabeledDistribution::new(vec![
            Component { weight: 1.0 / 16.0, label: Label::Negative, law: Law::Atom { x: 1.0 } },
            Component { weight: 1.0 / 16.0, label: Label::Positive, law: Law::Atom { x: -1.0 } },
            Component {
                weight: 7.0 / 8.0,
                label: Label::Negative,
                law: Law::TruncNormal { lo: -1.0, hi: top, mean: top, std: sigma },
            },
        ])
    }

    fn atoms_at(&self, x: f64) -> (f64, f64) {
        let mut pos = 0.0;
        let mut total = 0.0;
        for c in &self.components {
            if c.law == (Law::Atom { x }) {
                total += c.weight;
                if c.label == Label::Positive {
                    pos += c.weight;
                }
            }
        }
        (pos, total)
    }

    fn densities_at(&self, x: f64) -> (f64, f64) {
        let mut pos = 0.0;
        let mut total = 0.0;
        for (c, tn) in self.components.iter().zip(&self.normals) {
            if let Some(tn) = tn {
                let d = c.weight * tn.pdf(x);
                total += d;
                if c.label == Label::Positive {
                    pos += d;
                }
            }
        }
        (pos, total)
    }

    /// Marginal density of the continuous part at `x`.
    pub fn continuous_density(&self, x: f64) -> f64 {
        self.densities_at(x).1
    }

    /// Posterior probability of the positive label at `x`. An atom at `x`
    /// takes precedence over the continuous part; `None` where `x` carries
    /// neither an atom nor density.
    pub fn eta(&self, x: f64) -> Option<f64> {
        let (pos, total) = self.atoms_at(x);
        if total > 0.0 {
            return Some(pos / total);
        }
        self.eta_continuous(x)
    }

    fn eta_continuous(&self, x: f64) -> Option<f64> {
        let (pos, total) = self.densities_at(x);
        (total > 0.0).then(|| pos / total)
    }

    /// Distinct atom locations with their total weight and posterior.
    pub fn atom_support(&self) -> Vec<(f64, f64, f64)> {
        let mut xs: Vec<f64> = self
            .components
            .iter()
            .filter_map(|c| match c.law {
                Law::Atom { x } => Some(x),
                _ => None,
            })
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.into_iter()
            .map(|x| {
                let (pos, total) = self.atoms_at(x);
                (x, total, pos / total)
            })
            .collect()
    }

    /// Endpoints of every continuous component, where densities jump.
    pub fn component_breaks(&self) -> Vec<f64> {
        self.components
            .iter()
            .filter_map(|c| match c.law {
                Law::TruncNormal { lo, hi, .. } => Some([lo, hi]),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// Analytic mean of a truncated-normal component.
    pub fn component_mean(&self, index: usize) -> Option<f64> {
        self.normals.get(index).copied().flatten().map(|tn| tn.analytic_mean())
    }

    /// `E[f(x, y)]`: atoms summed exactly, continuous components integrated
    /// against their own label. `breaks` lists points where `f` may jump.
    pub fn integrate_labeled<F>(&self, f: F, breaks: &[f64]) -> Result<f64>
    where
        F: Fn(f64, Label) -> f64,
    {
        let mut total = 0.0;
        for (c, tn) in self.components.iter().zip(&self.normals) {
            total += match (c.law, tn) {
                (Law::Atom { x }, _) => c.weight * f(x, c.label),
                (_, Some(tn)) => {
                    c.weight
                        * quadrature::integrate(|x| f(x, c.label) * tn.pdf(x), tn.lo, tn.hi, breaks, QUADRATURE_TOL)?
                }
                _ => unreachable!(),
            };
        }
        Ok(total)
    }

    /// `E_X[f(x, η(x))]` with atoms summed exactly and the continuous part
    /// integrated by adaptive quadrature.
    pub fn expectation<F>(&self, f: F, breaks: &[f64]) -> Result<f64>
    where
        F: Fn(f64, f64) -> f64,
    {
        let mut total: f64 = self.atom_support().iter().map(|&(x, w, eta)| w * f(x, eta)).sum();
        let mut all_breaks = self.component_breaks();
        all_breaks.extend_from_slice(breaks);
        for (c, tn) in self.components.iter().zip(&self.normals) {
            if let Some(tn) = tn {
                let g = |x: f64| match self.eta_continuous(x) {
                    Some(eta) => f(x, eta) * tn.pdf(x),
                    None => 0.0,
                };
                total += c.weight * quadrature::integrate(g, tn.lo, tn.hi, &all_breaks, QUADRATURE_TOL)?;
            }
        }
        Ok(total)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> LabeledPoint {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let last = self.components.len() - 1;
        let index = self
            .components
            .iter()
            .position(|c| {
                acc += c.weight;
                u < acc
            })
            .unwrap_or(last);
        let c = &self.components[index];
        let x = match (c.law, &self.normals[index]) {
            (Law::Atom { x }, _) => x,
            (_, Some(tn)) => tn.quantile(rng.random()),
            _ => unreachable!(),
        };
        LabeledPoint { x, y: c.label }
    }

    /// `n` i.i.d. draws. Chunk `i` of [`SAMPLE_CHUNK`] draws comes from
    /// ChaCha8 stream `i` under `seed`, so the output is independent of the
    /// number of worker threads.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<LabeledPoint> {
        let chunks = n.div_ceil(SAMPLE_CHUNK);
        let parts: Vec<Vec<LabeledPoint>> = (0..chunks)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let len = SAMPLE_CHUNK.min(n - i * SAMPLE_CHUNK);
                (0..len).map(|_| self.draw(&mut rng)).collect()
            })
            .collect();
        parts.concat()
    }
}

/// One support point of a finite distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedAtom {
    pub x: f64,
    pub weight: f64,
    pub eta: f64,
}

/// Distribution with finite support, described by the marginal weight and
/// the positive-label posterior at each point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteDistribution {
    pub atoms: Vec<WeightedAtom>,
}

impl FiniteDistribution {
    pub fn new(atoms: Vec<WeightedAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("atoms", "a finite distribution needs at least one atom"));
        }
        check_weights(atoms.iter().map(|a| a.weight))?;
        for a in &atoms {
            if !(0.0..=1.0).contains(&a.eta) {
                return Err(invalid("eta", format!("posterior must lie in [0, 1], got {}", a.eta)));
            }
            if !(-1.0..=1.0).contains(&a.x) {
                return Err(invalid("x", format!("atom at {} lies outside [-1, 1]", a.x)));
            }
        }
        Ok(FiniteDistribution { atoms })
    }

    pub fn singleton(x: f64, eta: f64) -> Result<Self> {
        FiniteDistribution::new(vec![WeightedAtom { x, weight: 1.0, eta }])
    }

    /// Splits each atom into a positive and a negative component.
    pub fn to_labeled(&self) -> LabeledDistribution {
        let mut components = Vec::with_capacity(2 * self.atoms.len());
        for a in &self.atoms {
            for (label, p) in [(Label::Positive, a.eta), (Label::Negative, 1.0 - a.eta)] {
                if p > 0.0 {
                    components.push(Component { weight: a.weight * p, label, law: Law::Atom { x: a.x } });
                }
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        for c in &mut components {
            c.weight /= total;
        }
        LabeledDistribution::new(components).expect("finite distributions are valid mixtures")
    }

    pub fn expectation<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|a| a.weight * f(a.x, a.eta)).sum()
    }
}
