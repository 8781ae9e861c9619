//! Adaptive Gauss–Kronrod (7/15) quadrature with an absolute tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const MAX_INTERVALS: usize = 200_000;

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    (k * h, (k - g).abs() * h)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then(other.a.total_cmp(&self.a))
    }
}

/// `∫_a^b f` to absolute tolerance `tol`, splitting first at the supplied
/// interior `breaks` (points where `f` may jump or kink). The panel with the
/// largest error estimate is bisected until the summed estimate meets `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut heap: BinaryHeap<Panel> = cuts
        .windows(2)
        .map(|w| {
            let (value, err) = kronrod(&f, w[0], w[1]);
            Panel { a: w[0], b: w[1], value, err }
        })
        .collect();
    let mut err_total: f64 = heap.iter().map(|p| p.err).sum();
    while !(err_total <= tol) {
        if heap.len() >= MAX_INTERVALS || !err_total.is_finite() {
            return Err(Error::QuadratureNonConvergence { tolerance: tol, estimate: err_total });
        }
        let worst = heap.pop().expect("at least one panel");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(Error::QuadratureNonConvergence { tolerance: tol, estimate: err_total });
        }
        let (lv, le) = kronrod(&f, worst.a, m);
        let (rv, re) = kronrod(&f, m, worst.b);
        err_total += le + re - worst.err;
        heap.push(Panel { a: worst.a, b: m, value: lv, err: le });
        heap.push(Panel { a: m, b: worst.b, value: rv, err: re });
        if heap.len().is_multiple_of(1024) {
            err_total = heap.iter().map(|p| p.err).sum();
        }
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let total: f64 = panels.iter().map(|p| p.value).sum();
    if !total.is_finite() {
        return Err(Error::QuadratureNonConvergence { tolerance: tol, estimate: err_total });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        assert!((integrate(|x| x * x, 0.0, 3.0, &[], 1e-12).unwrap() - 9.0).abs() < 1e-12);
        assert!((integrate(f64::sin, 0.0, std::f64::consts::PI, &[], 1e-12).unwrap() - 2.0).abs() < 1e-12);
        let gauss = integrate(|x| (-x * x / 2.0).exp(), -8.0, 8.0, &[], 1e-10).unwrap();
        assert!((gauss - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn discontinuities_at_breaks() {
        let step = |x: f64| if x < 0.3 { 1.0 } else { 0.0 };
        assert!((integrate(step, 0.0, 1.0, &[0.3], 1e-12).unwrap() - 0.3).abs() < 1e-14);
        assert!((integrate(step, 0.0, 1.0, &[], 1e-8).unwrap() - 0.3).abs() < 1e-8);
    }

    #[test]
    fn sharp_peak() {
        let s = 1e-3;
        let v = integrate(|x| (-(x / s).powi(2) / 2.0).exp() / s, 0.0, 1.0, &[], 1e-10).unwrap();
        assert!((v - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn non_convergence_is_reported() {
        let wild = |x: f64| if x > 0.0 { 1.0 / x } else { 0.0 };
        assert!(matches!(integrate(wild, 0.0, 1.0, &[], 1e-8), Err(Error::QuadratureNonConvergence { .. })));
    }
}
