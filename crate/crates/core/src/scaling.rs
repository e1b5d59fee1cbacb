//! The degeneration factor `w(eps, z)` and its profiles.
//!
//! `w` is positive and smooth away from `(0, 0)`, one-homogeneous, even in `z`,
//! with `w(eps, 0) = eps` and `w(0, z) = |z|`. In the projective charts
//! `Z = z / eps` and `E = eps / z` it becomes `w = eps f(Z) = z F(E)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Value and first two `z`-derivatives of `w` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingJet {
    pub w: f64,
    pub w_z: f64,
    pub w_zz: f64,
}

/// Which projective chart a profile is evaluated in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileChart {
    /// `f(Z) = w(1, Z)`.
    Z,
    /// `F(E) = w(E, 1)`, defined for `E >= 0`.
    E,
}

/// Extension point for one-homogeneous scaling functions beyond the power family.
pub trait ScalingProvider: Send + Sync + fmt::Debug {
    fn jet(&self, eps: f64, z: f64) -> Result<ScalingJet>;
    /// `(f, f', f'')` at `Z`.
    fn profile_z(&self, zc: f64) -> (f64, f64, f64);
    /// `(F, F', F'')` at `E >= 0`.
    fn profile_e(&self, e: f64) -> (f64, f64, f64);
    /// `(l, c)` with `f(Z) = 1 + c Z^(2l) + o(Z^(2l))`.
    fn order_of_minimum(&self) -> Result<(u32, f64)>;
    /// `f(Z)^m - 1`, accurate when the result is small.
    fn profile_pow_m1(&self, zc: f64, m: f64) -> f64 {
        self.profile_z(zc).0.powf(m) - 1.0
    }
}

#[derive(Clone, Debug)]
pub enum ScalingFunction {
    /// `w_p = (eps^p + |z|^p)^(1/p)`, `p >= 2`.
    Power {
        p: f64,
    },
    Custom(Arc<dyn ScalingProvider>),
}

impl ScalingFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 2.0) {
            return Err(Error::UnsupportedFamily(format!("power family needs p >= 2, got {p}")));
        }
        Ok(ScalingFunction::Power { p })
    }

    /// The exponent of the power family, if this is one.
    pub fn p(&self) -> Option<f64> {
        match self {
            ScalingFunction::Power { p } => Some(*p),
            ScalingFunction::Custom(_) => None,
        }
    }

    pub fn jet(&self, eps: f64, z: f64) -> Result<ScalingJet> {
        scaling_jet(self, eps, z)
    }

    pub fn w(&self, eps: f64, z: f64) -> Result<f64> {
        Ok(self.jet(eps, z)?.w)
    }

    pub fn f(&self, zc: f64) -> (f64, f64, f64) {
        match self {
            ScalingFunction::Power { p } => power_profile(*p, zc),
            ScalingFunction::Custom(c) => c.profile_z(zc),
        }
    }

    pub fn big_f(&self, e: f64) -> (f64, f64, f64) {
        match self {
            // F(E) = w(E, 1) has the same closed form as f with the roles swapped.
            ScalingFunction::Power { p } => power_profile(*p, e),
            ScalingFunction::Custom(c) => c.profile_e(e),
        }
    }

    pub fn f_pow_m1(&self, zc: f64, m: f64) -> f64 {
        match self {
            ScalingFunction::Power { p } => {
                let a = zc.abs().powf(*p);
                (m / p * a.ln_1p()).exp_m1()
            }
            ScalingFunction::Custom(c) => c.profile_pow_m1(zc, m),
        }
    }
}

/// `(g, g', g'')` for `g(x) = (1 + |x|^p)^(1/p)`.
fn power_profile(p: f64, x: f64) -> (f64, f64, f64) {
    let ax = x.abs();
    let a = ax.powf(p);
    let g = (a.ln_1p() / p).exp();
    // g' = sgn(x) |x|^(p-1) g^(1-p); g'' = (p-1) |x|^(p-2) g^(1-2p)
    let d1 = x.signum() * ax.powf(p - 1.0) * g.powf(1.0 - p);
    let d2 = if ax == 0.0 && p > 2.0 { 0.0 } else { (p - 1.0) * ax.powf(p - 2.0) * g.powf(1.0 - 2.0 * p) };
    let d1 = if x == 0.0 { 0.0 } else { d1 };
    (g, d1, d2)
}

pub fn scaling_jet(sf: &ScalingFunction, eps: f64, z: f64) -> Result<ScalingJet> {
    if !(eps.is_finite() && z.is_finite()) || eps < 0.0 {
        return Err(Error::Domain(format!("scaling jet needs finite eps >= 0, got ({eps}, {z})")));
    }
    if eps == 0.0 && z == 0.0 {
        return Err(Error::DegeneratePoint);
    }
    match sf {
        ScalingFunction::Power { p } => {
            let p = *p;
            let az = z.abs();
            let m = eps.max(az);
            let re = eps / m;
            let rz = az / m;
            let w = m * (re.powf(p) + rz.powf(p)).powf(1.0 / p);
            let (se, sz) = (eps / w, az / w);
            let w_z = if z == 0.0 { 0.0 } else { z.signum() * sz.powf(p - 1.0) };
            let w_zz = if az == 0.0 && p > 2.0 { 0.0 } else { (p - 1.0) / w * se.powf(p) * sz.powf(p - 2.0) };
            Ok(ScalingJet { w, w_z, w_zz })
        }
        ScalingFunction::Custom(c) => c.jet(eps, z),
    }
}

pub fn profile_jet(sf: &ScalingFunction, chart: ProfileChart, coord: f64) -> Result<(f64, f64)> {
    if !coord.is_finite() {
        return Err(Error::Domain(format!("profile coordinate must be finite, got {coord}")));
    }
    match chart {
        ProfileChart::Z => {
            let (f, df, _) = sf.f(coord);
            Ok((f, df))
        }
        ProfileChart::E => {
            if coord < 0.0 {
                return Err(Error::Domain(format!("E-chart coordinate must be >= 0, got {coord}")));
            }
            let (f, df, _) = sf.big_f(coord);
            Ok((f, df))
        }
    }
}

/// Order `2l` and leading coefficient `c` of the minimum of `f` at `Z = 0`.
pub fn order_of_minimum(sf: &ScalingFunction) -> Result<(u32, f64)> {
    match sf {
        ScalingFunction::Power { p } => {
            let p = *p;
            let even = p.fract() == 0.0 && (p as i64) % 2 == 0;
            if !even {
                return Err(Error::UnsupportedFamily(format!(
                    "f has a non-smooth |Z|^{p} term at Z = 0; only even p has a finite-order expansion"
                )));
            }
            Ok(((p / 2.0) as u32, 1.0 / p))
        }
        ScalingFunction::Custom(c) => c.order_of_minimum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn jet_examples() {
        let sf2 = ScalingFunction::power(2.0).unwrap();
        let j = scaling_jet(&sf2, 3.0, 4.0).unwrap();
        assert!(close(j.w, 5.0, 1e-15) && close(j.w_z, 0.8, 1e-15) && close(j.w_zz, 0.072, 1e-15));
        let j = scaling_jet(&sf2, 1.0, 0.0).unwrap();
        assert_eq!((j.w, j.w_z, j.w_zz), (1.0, 0.0, 1.0));
        let sf4 = ScalingFunction::power(4.0).unwrap();
        let j = scaling_jet(&sf4, 0.0, 2.0).unwrap();
        assert_eq!((j.w, j.w_z, j.w_zz), (2.0, 1.0, 0.0));
        assert_eq!(scaling_jet(&sf4, 0.0, 0.0), Err(Error::DegeneratePoint));
    }

    #[test]
    fn profile_examples() {
        let sf = ScalingFunction::power(2.0).unwrap();
        assert_eq!(profile_jet(&sf, ProfileChart::Z, 0.0).unwrap(), (1.0, 0.0));
        let (f, df) = profile_jet(&sf, ProfileChart::Z, 1.0).unwrap();
        assert!(close(f, 2f64.sqrt(), 1e-15) && close(df, 0.5f64.sqrt(), 1e-15));
        let (f2, _) = profile_jet(&sf, ProfileChart::Z, 2.0).unwrap();
        let (fe, _) = profile_jet(&sf, ProfileChart::E, 0.5).unwrap();
        assert!(close(f2, 5f64.sqrt(), 1e-15) && close(2.0 * fe, 5f64.sqrt(), 1e-15));
        assert!(profile_jet(&sf, ProfileChart::E, -0.1).is_err());
    }

    #[test]
    fn minimum_order() {
        assert_eq!(order_of_minimum(&ScalingFunction::power(2.0).unwrap()).unwrap(), (1, 0.5));
        assert_eq!(order_of_minimum(&ScalingFunction::power(4.0).unwrap()).unwrap(), (2, 0.25));
        assert!(order_of_minimum(&ScalingFunction::power(3.0).unwrap()).is_err());
        assert!(order_of_minimum(&ScalingFunction::power(2.5).unwrap()).is_err());
        assert!(ScalingFunction::power(1.5).is_err());
    }

    #[test]
    fn power_of_profile_minus_one_is_accurate_near_zero() {
        let sf = ScalingFunction::power(2.0).unwrap();
        // (1 + Z^2)^2 - 1 = 2 Z^2 + Z^4
        let zc = 1e-9;
        let got = sf.f_pow_m1(zc, 4.0);
        assert!(close(got, 2.0 * zc * zc, 1e-12));
    }
}
