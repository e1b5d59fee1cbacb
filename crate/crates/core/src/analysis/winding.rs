//! Winding constants, their `v -> 1` asymptotics, and the closed-form
//! angular lengths of warped products.

use serde::{Deserialize, Serialize};

use super::quad::{geometric_breaks, integrate, Quadrature};
use crate::error::{Error, Result};
use crate::scaling::{order_of_minimum, ScalingFunction};

/// `C_v = int_0^inf dZ / (f^k sqrt(f^2k - v^2))`.
pub fn winding_constant(v: f64, sf: &ScalingFunction, k: u32) -> Result<Quadrature> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::Divergent(format!("C_v needs 0 <= v < 1, got {v}")));
    }
    winding_constant_1mv(1.0 - v, sf, k)
}

/// [`winding_constant`] parametrized by `1 - v`, which keeps full relative
/// precision as `v -> 1`.
pub fn winding_constant_1mv(one_minus_v: f64, sf: &ScalingFunction, k: u32) -> Result<Quadrature> {
    if !(one_minus_v > 0.0 && one_minus_v <= 1.0) {
        return Err(Error::Divergent(format!("C_v needs 0 < 1 - v <= 1, got 1 - v = {one_minus_v}")));
    }
    let two_k = 2.0 * k as f64;
    let gap = one_minus_v * (2.0 - one_minus_v); // 1 - v^2
    let integrand = |zc: f64| {
        let f = sf.f(zc).0;
        1.0 / (f.powi(k as i32) * (sf.f_pow_m1(zc, two_k) + gap).sqrt())
    };
    // f >= |Z| bounds the tail beyond Z_cut by Z_cut^(1-2k) / ((2k-1) sqrt(1 - v^2 Z_cut^-2k))
    let m = two_k - 1.0;
    let z_cut = (1e-13 * m).powf(-1.0 / m).max(10.0);
    let tail = z_cut.powf(-m) / m;
    let v = 1.0 - one_minus_v;
    let q = match order_of_minimum(sf) {
        Ok((l, c)) if v > 0.9 => {
            // Z = alpha U resolves the near-singular layer of width alpha at Z = 0
            let alpha = (gap / (two_k * c)).powf(1.0 / (2.0 * l as f64));
            let g = |u: f64| alpha * integrand(alpha * u);
            integrate(&g, &geometric_breaks(1.0, z_cut / alpha), 1e-15, 1e-13)?
        }
        _ => integrate(&integrand, &geometric_breaks(0.25, z_cut), 1e-15, 1e-13)?,
    };
    Ok(Quadrature { value: q.value + tail, error: q.error + 1e-13, evals: q.evals })
}

/// `C_(cos phi)`.
pub fn winding_constant_phi(phi: f64, sf: &ScalingFunction, k: u32) -> Result<Quadrature> {
    // 1 - cos phi = 2 sin^2(phi/2)
    let s = (0.5 * phi).sin();
    winding_constant_1mv(2.0 * s * s, sf, k)
}

/// Leading behaviour of `C_v` as `v -> 1` when `f = 1 + c Z^(2l) + ...`:
/// `C log(1/(1-v))` with `C = (2kc)^(-1/2) / 2` for `l = 1`, and
/// `C (1-v)^(-(l-1)/(2l))` with `C = 2^(-1/2) (kc)^(-1/(2l)) int_0^inf (U^(2l) + 1)^(-1/2) dU` for `l > 1`.
pub fn cv_asymptote(one_minus_v: f64, l: u32, c: f64, k: u32) -> f64 {
    let kc = k as f64 * c;
    if l == 1 {
        0.5 / (2.0 * kc).sqrt() * (1.0 / one_minus_v).ln()
    } else {
        let lf = l as f64;
        let big_c = (0.5f64).sqrt() * kc.powf(-1.0 / (2.0 * lf)) * layer_integral(l);
        big_c * one_minus_v.powf(-(lf - 1.0) / (2.0 * lf))
    }
}

/// `int_0^inf (U^(2l) + 1)^(-1/2) dU` for `l >= 2`, with `U = 1/t` on `[1, inf)`.
fn layer_integral(l: u32) -> f64 {
    let two_l = 2 * l as i32;
    let inner = integrate(&|u: f64| 1.0 / (u.powi(two_l) + 1.0).sqrt(), &[0.0, 0.5, 1.0], 1e-15, 1e-14);
    let outer =
        integrate(&|t: f64| t.powi(l as i32 - 2) / (t.powi(two_l) + 1.0).sqrt(), &[0.0, 0.5, 1.0], 1e-15, 1e-14);
    inner.expect("smooth integrand").value + outer.expect("smooth integrand").value
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trichotomy {
    /// `L < W_min`: passes through the neck.
    Pass,
    /// `L = W_min`: approaches the waist asymptotically.
    Asymptotic,
    /// `L > W_min`: turns back.
    TurnBack,
}

pub fn clairaut_classify(l: f64, w_min: f64) -> Trichotomy {
    if (l - w_min).abs() <= 1e-14 * w_min.max(1.0) {
        Trichotomy::Asymptotic
    } else if l < w_min {
        Trichotomy::Pass
    } else {
        Trichotomy::TurnBack
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrichotomyReport {
    pub l: f64,
    pub w_min: f64,
    pub classification: Trichotomy,
    /// Turning point `z0 < 0` with `W(z0) = L`, for geodesics coming from below.
    pub turning_point: Option<f64>,
    /// Angular length over `[-1, 1]`, for passing geodesics.
    pub angular_length: Option<f64>,
    /// What the integrated geodesic did.
    pub simulated: Option<Trichotomy>,
    pub simulated_turning_point: Option<f64>,
    /// `dz/dt` where the simulation stopped.
    pub final_zdot: Option<f64>,
    /// Whether the simulated geodesic reached `z > 0`.
    pub crossed_waist: Option<bool>,
}

/// The warping `W = w_p(eps, z)^k` of a warped product.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpProfile {
    pub p: f64,
    pub k: u32,
    pub eps: f64,
}

impl WarpProfile {
    pub fn w(&self, z: f64) -> f64 {
        (self.eps.powf(self.p) + z.abs().powf(self.p)).powf(self.k as f64 / self.p)
    }

    pub fn w_min(&self) -> f64 {
        self.eps.powi(self.k as i32)
    }

    /// `z < 0` with `W(z) = target`, if any.
    pub fn turning_point(&self, target: f64) -> Option<f64> {
        let wp = target.powf(self.p / self.k as f64) - self.eps.powf(self.p);
        (wp > 0.0).then(|| -wp.powf(1.0 / self.p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LengthForm {
    /// `int L / (W sqrt(W^2 - L^2)) dz`.
    ZIntegral,
    /// `int rho'(L / cos phi) dphi` with `rho` the inverse of `W` on each monotone half.
    PhiIntegral,
}

/// Angular length of the warped geodesic with angular momentum `l` over `z in [a, b]`.
pub fn warped_angular_length(prof: &WarpProfile, l: f64, a: f64, b: f64, form: LengthForm) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Config(format!("need a < b, got [{a}, {b}]")));
    }
    let w_lo = if a <= 0.0 && b >= 0.0 { prof.w_min() } else { prof.w(a).min(prof.w(b)) };
    if l >= w_lo {
        return Err(Error::Divergent(format!("L = {l} is not below min W = {w_lo}; the integrand is singular")));
    }
    if l == 0.0 {
        return Ok(0.0);
    }
    match form {
        LengthForm::ZIntegral => {
            let g = |z: f64| {
                let w = prof.w(z);
                l / (w * (w * w - l * l).sqrt())
            };
            let mut br = vec![a];
            if a < 0.0 && b > 0.0 {
                br.push(0.0);
            }
            br.push(b);
            Ok(integrate(&g, &br, 1e-15, 1e-13)?.value)
        }
        LengthForm::PhiIntegral => {
            let mut total = 0.0;
            let halves: Vec<(f64, f64)> = if a < 0.0 && b > 0.0 {
                vec![(0.0, -a), (0.0, b)]
            } else if b <= 0.0 {
                vec![(-b, -a)]
            } else {
                vec![(a, b)]
            };
            for (zin, zout) in halves {
                total += phi_half(prof, l, zin, zout)?;
            }
            Ok(total)
        }
    }
}

/// `int |d|z|/dW| dphi` between the angles at `|z| = zin < zout`.
fn phi_half(prof: &WarpProfile, l: f64, zin: f64, zout: f64) -> Result<f64> {
    let (p, kf, eps) = (prof.p, prof.k as f64, prof.eps);
    let c_in = l / prof.w(zin);
    let phi_in = c_in.acos();
    let phi_out = (l / prof.w(zout)).acos();
    let zin_p = zin.powf(p);
    // |z|^p = zin^p + w_in^p ((c_in / cos phi)^(p/k) - 1), w = w_p(eps, z)
    let w_in_p = eps.powf(p) + zin_p;
    // offsets `d = phi - phi_in` are carried separately so the t^8 substitution below keeps precision
    let zp_of = |d: f64| {
        let cp = (phi_in + d).cos();
        let num = 2.0 * (phi_in + 0.5 * d).sin() * (0.5 * d).sin();
        zin_p + w_in_p * ((p / kf) * (num / cp).ln_1p()).exp_m1()
    };
    // d|z|/dW = w^(p-1) |z|^(1-p) / (k W^(1 - 1/k))
    let rho_prime = |d: f64| {
        let big_w = l / (phi_in + d).cos();
        let w = big_w.powf(1.0 / kf);
        let zp = zp_of(d);
        if zp <= 0.0 {
            return 0.0;
        }
        w.powf(p - 1.0) * zp.powf(1.0 / p - 1.0) / (kf * big_w.powf(1.0 - 1.0 / kf))
    };
    let span = phi_out - phi_in;
    // d = span t^8 removes the d^(-1 + 1/p) singularity at the waist
    let g = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        // dy/dz = L / (W sqrt(W^2 - L^2)) and dz = rho'(W) W tan(phi) dphi collapse to rho'(W) dphi
        rho_prime(span * t.powi(8)) * 8.0 * span * t.powi(7)
    };
    Ok(integrate(&g, &[0.0, 0.25, 0.5, 0.75, 1.0], 1e-15, 1e-13)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn cv_at_zero() {
        let sf = ScalingFunction::power(2.0).unwrap();
        let q = winding_constant(0.0, &sf, 2).unwrap();
        assert!((q.value - FRAC_PI_4).abs() < 1e-12, "{}", q.value);
    }

    #[test]
    fn cv_frozen_values() {
        // independent 30-digit quadrature of the defining integral
        let sf2 = ScalingFunction::power(2.0).unwrap();
        let sf4 = ScalingFunction::power(4.0).unwrap();
        for (e, want) in [(2, 1.98753), (6, 5.22847), (10, 8.48482)] {
            let q = winding_constant_1mv(10f64.powi(-e), &sf2, 2).unwrap();
            assert!((q.value - want).abs() < 1e-5, "p=2, e={e}: {}", q.value);
        }
        for (e, want) in [(2, 4.10066), (6, 48.4554), (10, 492.179)] {
            let q = winding_constant_1mv(10f64.powi(-e), &sf4, 2).unwrap();
            assert!((q.value / want - 1.0).abs() < 1e-5, "p=4, e={e}: {}", q.value);
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(clairaut_classify(0.2, 0.25), Trichotomy::Pass);
        assert_eq!(clairaut_classify(0.25, 0.25), Trichotomy::Asymptotic);
        assert_eq!(clairaut_classify(0.3, 0.25), Trichotomy::TurnBack);
        let prof = WarpProfile { p: 4.0, k: 2, eps: 0.5 };
        assert!((prof.turning_point(0.3).unwrap() + 0.407_3).abs() < 1e-4);
    }

    #[test]
    fn two_length_forms_agree() {
        let prof = WarpProfile { p: 4.0, k: 2, eps: 0.5 };
        for l in [0.05, 0.2, 0.249] {
            let a = warped_angular_length(&prof, l, -1.0, 0.0, LengthForm::ZIntegral).unwrap();
            let b = warped_angular_length(&prof, l, -1.0, 0.0, LengthForm::PhiIntegral)
                .map_err(|e| format!("L={l}: {e}"))
                .unwrap();
            assert!((a - b).abs() < 1e-8, "L={l}: {a} vs {b}");
        }
        assert_eq!(warped_angular_length(&prof, 0.0, -1.0, 1.0, LengthForm::ZIntegral).unwrap(), 0.0);
        assert!(warped_angular_length(&prof, 0.25, -1.0, 1.0, LengthForm::ZIntegral).is_err());
    }
}
