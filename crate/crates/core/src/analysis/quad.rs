//! Globally adaptive Gauss-Kronrod (7, 15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

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

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * hl, ((kron - gauss) * hl).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Integrates `f` over `[a, b]` split at `breaks`, bisecting the piece with the
/// largest error estimate until `error <= max(abs_tol, rel_tol |value|)`.
pub fn integrate(f: &dyn Fn(f64) -> f64, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    if breaks.len() < 2 {
        return Err(Error::Config("quadrature needs at least one interval".into()));
    }
    let mut heap = BinaryHeap::new();
    let (mut value, mut error) = (0.0, 0.0);
    let mut evals = 0;
    for w in breaks.windows(2) {
        let (v, e) = gk15(f, w[0], w[1]);
        evals += 15;
        value += v;
        error += e;
        heap.push(Piece { a: w[0], b: w[1], value: v, error: e });
    }
    for _ in 0..20_000 {
        if !value.is_finite() {
            return Err(Error::Divergent("non-finite integrand".into()));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature { value, error, evals });
        }
        let p = heap.pop().expect("nonempty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // the interval cannot be split further; accept what we have
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(f, p.a, m);
        let (v2, e2) = gk15(f, m, p.b);
        evals += 30;
        value += v1 + v2 - p.value;
        error += e1 + e2 - p.error;
        heap.push(Piece { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: p.b, value: v2, error: e2 });
    }
    // recompute the sums to shed accumulated cancellation
    let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    if error <= 1e3 * abs_tol.max(rel_tol * value.abs()) {
        Ok(Quadrature { value, error, evals })
    } else {
        Err(Error::Divergent(format!("quadrature did not converge: error estimate {error:e}")))
    }
}

/// Geometric break points `0, r0, 2 r0, 4 r0, ..., >= end`.
pub fn geometric_breaks(r0: f64, end: f64) -> Vec<f64> {
    let mut v = vec![0.0];
    let mut x = r0;
    while x < end {
        v.push(x);
        x *= 2.0;
    }
    v.push(end);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(&|x| x.powi(5) - 3.0 * x * x, &[0.0, 2.0], 1e-14, 1e-14).unwrap();
        assert!((q.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        let q = integrate(&|x: f64| 1.0 / x.sqrt(), &[0.0, 1.0], 1e-10, 1e-10).unwrap();
        assert!((q.value - 2.0).abs() < 1e-8, "{}", q.value);
    }

    #[test]
    fn lorentzian_on_geometric_breaks() {
        let q = integrate(&|x: f64| 1.0 / (1.0 + x * x).powi(2), &geometric_breaks(1.0, 1e6), 1e-14, 1e-13).unwrap();
        assert!((q.value - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }
}
