//! Metric families on `I x S^1` degenerating at `(eps, z) = (0, 0)`.
//!
//! The general ansatz is
//! `g = (1 - w^kappa S) dz^2 + 2 w^(2k) b dz dy + w^(2k) h dy^2`
//! with coefficients that are smooth on the blown-up `(eps, z)` plane. The
//! embedded surfaces (the elliptic neck and the general ambient construction)
//! are kept in their original coordinates `(z, phi)` and handled through the
//! full 2x2 metric instead.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::scaling::ScalingFunction;

/// Chart threshold `|Z| <= Z_SWITCH` for choosing the `Z` chart.
pub const Z_SWITCH: f64 = 10.0;

/// A point of the blown-up `(eps, z)` plane in one of its projective charts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlowupPoint {
    /// `Z = z / eps`, valid for `eps > 0` and on the front face (`eps = 0`).
    Z { zc: f64, eps: f64 },
    /// `E = eps / z` with `z >= 0`.
    E { e: f64, z: f64 },
    /// `E = eps / |z|` with `z <= 0`; `z` is stored with its sign.
    Eminus { e: f64, z: f64 },
}

/// `w` and its homogeneous-of-degree-zero derivatives at a blow-up point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointScaling {
    pub w: f64,
    pub w_z: f64,
    /// `w * w_zz`, smooth on the blow-up.
    pub w_wzz: f64,
}

impl BlowupPoint {
    pub fn from_eps_z(eps: f64, z: f64) -> Self {
        if z.abs() <= Z_SWITCH * eps {
            BlowupPoint::Z { zc: z / eps, eps }
        } else if z > 0.0 {
            BlowupPoint::E { e: eps / z, z }
        } else {
            BlowupPoint::Eminus { e: eps / -z, z }
        }
    }

    pub fn eps(&self) -> f64 {
        match *self {
            BlowupPoint::Z { eps, .. } => eps,
            BlowupPoint::E { e, z } => e * z,
            BlowupPoint::Eminus { e, z } => -e * z,
        }
    }

    pub fn z(&self) -> f64 {
        match *self {
            BlowupPoint::Z { zc, eps } => zc * eps,
            BlowupPoint::E { z, .. } | BlowupPoint::Eminus { z, .. } => z,
        }
    }

    pub fn on_front_face(&self) -> bool {
        match *self {
            BlowupPoint::Z { eps, .. } => eps == 0.0,
            BlowupPoint::E { z, .. } | BlowupPoint::Eminus { z, .. } => z == 0.0,
        }
    }

    pub fn scaling(&self, sf: &ScalingFunction) -> PointScaling {
        match *self {
            BlowupPoint::Z { zc, eps } => {
                let (f, df, ddf) = sf.f(zc);
                PointScaling { w: eps * f, w_z: df, w_wzz: f * ddf }
            }
            BlowupPoint::E { e, z } => {
                let (f, df, ddf) = sf.big_f(e);
                PointScaling { w: z * f, w_z: f - e * df, w_wzz: e * e * f * ddf }
            }
            BlowupPoint::Eminus { e, z } => {
                let (f, df, ddf) = sf.big_f(e);
                PointScaling { w: -z * f, w_z: -(f - e * df), w_wzz: e * e * f * ddf }
            }
        }
    }
}

/// Coefficients of the ansatz at one point, with `y`-derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientJet {
    pub s: f64,
    pub s_y: f64,
    pub s_yy: f64,
    pub b: f64,
    pub b_y: f64,
    pub h: f64,
    pub h_y: f64,
    /// `w`-weighted `z`-derivatives, if the provider knows them.
    pub dz: Option<WeightedZDerivatives>,
}

/// `(w dS/dz, w db/dz, w dh/dz)`; these stay bounded on the blow-up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedZDerivatives {
    pub ws_z: f64,
    pub wb_z: f64,
    pub wh_z: f64,
}

/// Data passed to a coefficient provider besides the point itself.
#[derive(Clone, Copy, Debug)]
pub struct EvalContext {
    pub k: u32,
    pub kappa: i32,
    pub scaling: PointScaling,
}

/// Supplies `S`, `b`, `h` of the ansatz in blow-up coordinates.
pub trait AnsatzCoefficients: Send + Sync + fmt::Debug {
    fn eval(&self, ctx: &EvalContext, pt: &BlowupPoint, y: f64) -> CoefficientJet;
    fn name(&self) -> String;
}

/// `S_eff = S+(y) / (1 + w^kappa S+(y))`, `b = 0`, `h = dy^2` with
/// `S+(y) = k(k-1)(1 - delta^2 sin^2 y)`.
///
/// The `dz^2` coefficient is `1 - w^kappa S_eff = 1 / (1 + w^kappa S+)`, which
/// stays positive for every `w`, while the corner restriction is exactly `S+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MorseModel {
    pub k: u32,
    pub delta: f64,
}

impl MorseModel {
    /// `(S+, S+_y, S+_yy)`.
    pub fn s_plus(&self, y: f64) -> (f64, f64, f64) {
        let kk = (self.k * (self.k - 1)) as f64;
        let d2 = self.delta * self.delta;
        let s = y.sin();
        (kk * (1.0 - d2 * s * s), -kk * d2 * (2.0 * y).sin(), -2.0 * kk * d2 * (2.0 * y).cos())
    }
}

impl AnsatzCoefficients for MorseModel {
    fn eval(&self, ctx: &EvalContext, _pt: &BlowupPoint, y: f64) -> CoefficientJet {
        let (sp, sp_y, sp_yy) = self.s_plus(y);
        let w = ctx.scaling.w;
        let wk = w.powi(ctx.kappa);
        let u = 1.0 + wk * sp;
        let s = sp / u;
        let s_y = sp_y / (u * u);
        let s_yy = sp_yy / (u * u) - 2.0 * wk * sp_y * sp_y / (u * u * u);
        let ws_z = -(ctx.kappa as f64) * wk * ctx.scaling.w_z * sp * sp / (u * u);
        CoefficientJet {
            s,
            s_y,
            s_yy,
            b: 0.0,
            b_y: 0.0,
            h: 1.0,
            h_y: 0.0,
            dz: Some(WeightedZDerivatives { ws_z, wb_z: 0.0, wh_z: 0.0 }),
        }
    }

    fn name(&self) -> String {
        format!("morse_model(delta={})", self.delta)
    }
}

/// Metric on the circle cross-section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CircleMetric {
    Flat,
    /// `h = 1 + a cos y`, `|a| < 1`.
    Cosine {
        amplitude: f64,
    },
}

impl CircleMetric {
    pub fn jet(&self, y: f64) -> (f64, f64) {
        match *self {
            CircleMetric::Flat => (1.0, 0.0),
            CircleMetric::Cosine { amplitude } => (1.0 + amplitude * y.cos(), -amplitude * y.sin()),
        }
    }
}

/// `g = (1 - w^kappa S) dz^2 + w^(2k) h` with constant `S` and `z`-independent `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WarpedCoefficients {
    pub h: CircleMetric,
    pub s: f64,
}

impl AnsatzCoefficients for WarpedCoefficients {
    fn eval(&self, _ctx: &EvalContext, _pt: &BlowupPoint, y: f64) -> CoefficientJet {
        let (h, h_y) = self.h.jet(y);
        CoefficientJet {
            s: self.s,
            s_y: 0.0,
            s_yy: 0.0,
            b: 0.0,
            b_y: 0.0,
            h,
            h_y,
            dz: Some(WeightedZDerivatives { ws_z: 0.0, wb_z: 0.0, wh_z: 0.0 }),
        }
    }

    fn name(&self) -> String {
        format!("warped(s={})", self.s)
    }
}

/// Point, tangent and second derivative of a closed plane curve `y(phi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub p: [f64; 2],
    pub d1: [f64; 2],
    pub d2: [f64; 2],
}

/// Cross-section of an ambient surface `(z, y) -> (z, w^k y)`, parametrized on `[0, 2pi)`.
pub trait PlaneCurve: Send + Sync + fmt::Debug {
    fn eval(&self, phi: f64) -> CurvePoint;
    fn name(&self) -> String;
}

/// `y(phi) = (cos phi, sqrt(1 - delta^2) sin phi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub delta: f64,
}

impl PlaneCurve for Ellipse {
    fn eval(&self, phi: f64) -> CurvePoint {
        let q = (1.0 - self.delta * self.delta).sqrt();
        let (s, c) = phi.sin_cos();
        CurvePoint { p: [c, q * s], d1: [-s, q * c], d2: [-c, -q * s] }
    }

    fn name(&self) -> String {
        format!("ellipse(delta={})", self.delta)
    }
}

/// Star-shaped curve `r(phi) (cos phi, sin phi)` with
/// `r = a0 + sum_n (a_n cos n phi + b_n sin n phi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCurve {
    pub a0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierCurve {
    fn radius(&self, phi: f64) -> (f64, f64, f64) {
        let (mut r, mut r1, mut r2) = (self.a0, 0.0, 0.0);
        for (i, (&a, &b)) in self.cos.iter().zip(self.sin.iter().chain(std::iter::repeat(&0.0))).enumerate() {
            let n = (i + 1) as f64;
            let (s, c) = (n * phi).sin_cos();
            r += a * c + b * s;
            r1 += n * (-a * s + b * c);
            r2 += -n * n * (a * c + b * s);
        }
        for (i, &b) in self.sin.iter().enumerate().skip(self.cos.len()) {
            let n = (i + 1) as f64;
            let (s, c) = (n * phi).sin_cos();
            r += b * s;
            r1 += n * b * c;
            r2 += -n * n * b * s;
        }
        (r, r1, r2)
    }
}

impl PlaneCurve for FourierCurve {
    fn eval(&self, phi: f64) -> CurvePoint {
        let (r, r1, r2) = self.radius(phi);
        let (s, c) = phi.sin_cos();
        CurvePoint {
            p: [r * c, r * s],
            d1: [r1 * c - r * s, r1 * s + r * c],
            d2: [r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s],
        }
    }

    fn name(&self) -> String {
        "fourier_curve".to_string()
    }
}

#[derive(Clone, Debug)]
pub enum MetricVariant {
    GeneralAnsatz(Arc<dyn AnsatzCoefficients>),
    WarpedProduct(WarpedCoefficients),
    /// Ellipse `u^2 + v^2/(1 - delta^2) = w^(2k)`, in coordinates `(z, phi)`.
    EllipticSurface {
        delta: f64,
    },
    AmbientSurface {
        curve: Arc<dyn PlaneCurve>,
    },
}

#[derive(Clone, Debug)]
pub struct MetricFamily {
    pub k: u32,
    pub kappa: i32,
    pub sf: ScalingFunction,
    pub variant: MetricVariant,
}

/// Full metric at a point with its first derivatives, in `(z, y)` order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricJet {
    pub g: Matrix2<f64>,
    pub g_z: Matrix2<f64>,
    pub g_y: Matrix2<f64>,
}

/// Coefficients `A dz^2 + 2 B dz dphi + H dphi^2` of an ambient surface and their derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbientCoefficients {
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub a_z: f64,
    pub b_z: f64,
    pub h_z: f64,
    pub a_y: f64,
    pub b_y: f64,
    pub h_y: f64,
}

/// `W = w^k` with `W_z`, `W_zz`.
pub fn profile_power(sf: &ScalingFunction, k: u32, eps: f64, z: f64) -> Result<(f64, f64, f64)> {
    let j = sf.jet(eps, z)?;
    let kf = k as f64;
    let wk1 = j.w.powi(k as i32 - 1);
    let wk2 = if k >= 2 { j.w.powi(k as i32 - 2) } else { 1.0 / j.w };
    Ok((wk1 * j.w, kf * wk1 * j.w_z, kf * (kf - 1.0) * wk2 * j.w_z * j.w_z + kf * wk1 * j.w_zz))
}

/// Pullback of the Euclidean metric under `(z, phi) -> (z, W(z) y(phi))`.
pub fn ambient_coefficients(
    curve: &dyn PlaneCurve,
    sf: &ScalingFunction,
    k: u32,
    eps: f64,
    z: f64,
    phi: f64,
) -> Result<AmbientCoefficients> {
    let (w, wz, wzz) = profile_power(sf, k, eps, z)?;
    let c = curve.eval(phi);
    let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
    let yy = dot(c.p, c.p);
    let yy1 = dot(c.p, c.d1);
    let y1y1 = dot(c.d1, c.d1);
    let y1y2 = dot(c.d1, c.d2);
    let yy2 = dot(c.p, c.d2);
    Ok(AmbientCoefficients {
        a: 1.0 + wz * wz * yy,
        b: w * wz * yy1,
        h: w * w * y1y1,
        a_z: 2.0 * wz * wzz * yy,
        b_z: (wz * wz + w * wzz) * yy1,
        h_z: 2.0 * w * wz * y1y1,
        a_y: 2.0 * wz * wz * yy1,
        b_y: w * wz * (y1y1 + yy2),
        h_y: 2.0 * w * w * y1y2,
    })
}

/// `S` restricted to the front face for the ambient examples with `w = w_p`:
/// `k |y|^2 Z^(p-2) / f(Z)^(2p-2) ((k-1) Z^p + (p-1))`.
pub fn induced_s_frontface(p: f64, k: u32, zc: f64, y: &[f64]) -> Result<f64> {
    if zc < 0.0 || !zc.is_finite() {
        return Err(Error::Domain(format!("front-face S needs finite Z >= 0, got {zc}")));
    }
    let yy: f64 = y.iter().map(|v| v * v).sum();
    Ok(yy * frontface_profile_factor(p, k, zc))
}

/// The `y`-independent factor `a(Z)` of the front-face `S` for the ambient examples.
pub fn frontface_profile_factor(p: f64, k: u32, zc: f64) -> f64 {
    let kf = k as f64;
    let az = zc.abs();
    if az > 1e8 {
        // f(Z)^(2p-2) ~ Z^(2p-2) (1 + Z^-p)^((2p-2)/p); use the expanded form to avoid overflow
        let r = az.powf(-p);
        return kf * ((kf - 1.0) + (p - 1.0) * r) / (1.0 + r).powf((2.0 * p - 2.0) / p);
    }
    let zp = az.powf(p);
    let f2p2 = ((zp.ln_1p()) * (2.0 * p - 2.0) / p).exp();
    kf * az.powf(p - 2.0) / f2p2 * ((kf - 1.0) * zp + (p - 1.0))
}

impl MetricFamily {
    pub fn new(k: u32, kappa: i32, sf: ScalingFunction, variant: MetricVariant) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("cusp order k must be >= 2, got {k}")));
        }
        if kappa < k as i32 || kappa > 2 * k as i32 {
            return Err(Error::Config(format!("kappa must lie in [k, 2k] = [{k}, {}], got {kappa}", 2 * k)));
        }
        match &variant {
            MetricVariant::EllipticSurface { delta } if !(0.0..1.0).contains(delta) => {
                return Err(Error::Config(format!("eccentricity delta must lie in [0, 1), got {delta}")));
            }
            MetricVariant::WarpedProduct(WarpedCoefficients { h: CircleMetric::Cosine { amplitude }, .. })
                if amplitude.abs() >= 1.0 =>
            {
                return Err(Error::Config(format!("|h amplitude| must be < 1, got {amplitude}")));
            }
            _ => {}
        }
        Ok(MetricFamily { k, kappa, sf, variant })
    }

    /// The model metric with Morse corner potential `k(k-1)(1 - delta^2 sin^2 y)` and `kappa = 2k - 2`.
    pub fn morse_model(k: u32, delta: f64, sf: ScalingFunction) -> Result<Self> {
        let kappa = (2 * k - 2).max(k) as i32;
        Self::new(k, kappa, sf, MetricVariant::GeneralAnsatz(Arc::new(MorseModel { k, delta })))
    }

    pub fn warped(k: u32, sf: ScalingFunction, h: CircleMetric, s: f64) -> Result<Self> {
        let kappa = (2 * k - 2).max(k) as i32;
        Self::new(k, kappa, sf, MetricVariant::WarpedProduct(WarpedCoefficients { h, s }))
    }

    pub fn elliptic(k: u32, delta: f64, sf: ScalingFunction) -> Result<Self> {
        let kappa = (2 * k - 2).max(k) as i32;
        Self::new(k, kappa, sf, MetricVariant::EllipticSurface { delta })
    }

    pub fn ambient(k: u32, curve: Arc<dyn PlaneCurve>, sf: ScalingFunction) -> Result<Self> {
        let kappa = (2 * k - 2).max(k) as i32;
        Self::new(k, kappa, sf, MetricVariant::AmbientSurface { curve })
    }

    /// The ansatz coefficient provider, for variants given in ansatz form.
    pub fn ansatz(&self) -> Option<&dyn AnsatzCoefficients> {
        match &self.variant {
            MetricVariant::GeneralAnsatz(c) => Some(c.as_ref()),
            MetricVariant::WarpedProduct(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_warped(&self) -> bool {
        matches!(self.variant, MetricVariant::WarpedProduct(_))
    }

    pub fn describe(&self) -> String {
        match &self.variant {
            MetricVariant::GeneralAnsatz(c) => c.name(),
            MetricVariant::WarpedProduct(c) => c.name(),
            MetricVariant::EllipticSurface { delta } => format!("elliptic(delta={delta})"),
            MetricVariant::AmbientSurface { curve } => format!("ambient({})", curve.name()),
        }
    }

    pub(crate) fn curve(&self) -> Option<Arc<dyn PlaneCurve>> {
        match &self.variant {
            MetricVariant::EllipticSurface { delta } => Some(Arc::new(Ellipse { delta: *delta })),
            MetricVariant::AmbientSurface { curve } => Some(curve.clone()),
            _ => None,
        }
    }

    /// Evaluates the ansatz coefficients at a blow-up point.
    pub fn coefficients_at(&self, pt: &BlowupPoint, y: f64) -> Option<(PointScaling, CoefficientJet)> {
        let a = self.ansatz()?;
        let scaling = pt.scaling(&self.sf);
        let ctx = EvalContext { k: self.k, kappa: self.kappa, scaling };
        Some((scaling, a.eval(&ctx, pt, y)))
    }

    /// `(w S_z, w b_z, w h_z)` at a blow-up point, from the provider or by
    /// fourth-order differences in the chart coordinates.
    pub fn weighted_z_derivatives(&self, pt: &BlowupPoint, y: f64, jet: &CoefficientJet) -> WeightedZDerivatives {
        if let Some(d) = jet.dz {
            return d;
        }
        let eval = |p: BlowupPoint| -> [f64; 3] {
            let c = self.coefficients_at(&p, y).expect("ansatz variant").1;
            [c.s, c.b, c.h]
        };
        let fd = |f: &dyn Fn(f64) -> [f64; 3], x: f64, one_sided: bool| -> [f64; 3] {
            let h = 1e-4 * x.abs().max(1.0);
            let mut out = [0.0; 3];
            if one_sided {
                let (a, b, c) = (f(x), f(x + h), f(x + 2.0 * h));
                for i in 0..3 {
                    out[i] = (-3.0 * a[i] + 4.0 * b[i] - c[i]) / (2.0 * h);
                }
            } else {
                let (m2, m1, p1, p2) = (f(x - 2.0 * h), f(x - h), f(x + h), f(x + 2.0 * h));
                for i in 0..3 {
                    out[i] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h);
                }
            }
            out
        };
        let out = match *pt {
            BlowupPoint::Z { zc, eps } => {
                let d = fd(&|x| eval(BlowupPoint::Z { zc: x, eps }), zc, false);
                let (f, _, _) = self.sf.f(zc);
                [f * d[0], f * d[1], f * d[2]]
            }
            BlowupPoint::E { e, z } | BlowupPoint::Eminus { e, z } => {
                let minus = matches!(pt, BlowupPoint::Eminus { .. });
                let mk = |e: f64, z: f64| if minus { BlowupPoint::Eminus { e, z } } else { BlowupPoint::E { e, z } };
                let de = fd(&|x| eval(mk(x, z)), e, e < 1e-3);
                let dz = fd(&|x| eval(mk(e, x)), z, z.abs() < 1e-3);
                let (big_f, _, _) = self.sf.big_f(e);
                let sgn = if minus { -1.0 } else { 1.0 };
                let mut o = [0.0; 3];
                for i in 0..3 {
                    o[i] = sgn * big_f * (z * dz[i] - e * de[i]);
                }
                o
            }
        };
        WeightedZDerivatives { ws_z: out[0], wb_z: out[1], wh_z: out[2] }
    }

    /// The cross-section metric `h` at `(eps, z, y)`.
    pub fn cross_section_metric(&self, eps: f64, z: f64, y: f64) -> Result<f64> {
        match &self.variant {
            MetricVariant::GeneralAnsatz(_) | MetricVariant::WarpedProduct(_) => {
                let pt = self.point(eps, z)?;
                Ok(self.coefficients_at(&pt, y).expect("ansatz variant").1.h)
            }
            MetricVariant::EllipticSurface { delta } => Ok(1.0 - delta * delta * y.cos().powi(2)),
            MetricVariant::AmbientSurface { curve } => {
                let c = curve.eval(y);
                Ok(c.d1[0] * c.d1[0] + c.d1[1] * c.d1[1])
            }
        }
    }

    pub(crate) fn point(&self, eps: f64, z: f64) -> Result<BlowupPoint> {
        if !(eps.is_finite() && z.is_finite()) || eps < 0.0 {
            return Err(Error::Domain(format!("need finite eps >= 0, got ({eps}, {z})")));
        }
        if eps == 0.0 && z == 0.0 {
            return Err(Error::DegeneratePoint);
        }
        Ok(BlowupPoint::from_eps_z(eps, z))
    }

    /// Full metric and derivatives at `(eps, z, y)`.
    pub fn metric_jet(&self, eps: f64, z: f64, y: f64) -> Result<MetricJet> {
        match &self.variant {
            MetricVariant::GeneralAnsatz(_) | MetricVariant::WarpedProduct(_) => self.ansatz_metric_jet(eps, z, y),
            MetricVariant::EllipticSurface { .. } | MetricVariant::AmbientSurface { .. } => {
                let curve = self.curve().expect("embedded variant");
                let c = ambient_coefficients(curve.as_ref(), &self.sf, self.k, eps, z, y)?;
                Ok(MetricJet {
                    g: Matrix2::new(c.a, c.b, c.b, c.h),
                    g_z: Matrix2::new(c.a_z, c.b_z, c.b_z, c.h_z),
                    g_y: Matrix2::new(c.a_y, c.b_y, c.b_y, c.h_y),
                })
            }
        }
    }

    fn ansatz_metric_jet(&self, eps: f64, z: f64, y: f64) -> Result<MetricJet> {
        let pt = self.point(eps, z)?;
        let (ps, c) = self.coefficients_at(&pt, y).expect("ansatz variant");
        let k2 = 2 * self.k as i32;
        let w = ps.w;
        let wk2 = w.powi(k2);
        let wkap = w.powi(self.kappa);
        let g = Matrix2::new(1.0 - wkap * c.s, wk2 * c.b, wk2 * c.b, wk2 * c.h);
        let g_y = Matrix2::new(-wkap * c.s_y, wk2 * c.b_y, wk2 * c.b_y, wk2 * c.h_y);
        // d/dz (w^m X) = w^(m-1) (m w_z X + w X_z)
        let d = self.weighted_z_derivatives(&pt, y, &c);
        let kap = self.kappa as f64;
        let k2f = k2 as f64;
        let wkap1 = w.powi(self.kappa - 1);
        let wk21 = w.powi(k2 - 1);
        let gzz = -wkap1 * (kap * ps.w_z * c.s + d.ws_z);
        let gzy = wk21 * (k2f * ps.w_z * c.b + d.wb_z);
        let gyy = wk21 * (k2f * ps.w_z * c.h + d.wh_z);
        let g_z = Matrix2::new(gzz, gzy, gzy, gyy);
        Ok(MetricJet { g, g_z, g_y })
    }
}

/// The metric tensor in `(z, y)` coordinates.
pub fn metric_tensor(fam: &MetricFamily, eps: f64, z: f64, y: f64) -> Result<Matrix2<f64>> {
    let g = fam.metric_jet(eps, z, y)?.g;
    check_positive(&g, eps, z)?;
    Ok(g)
}

fn check_positive(g: &Matrix2<f64>, eps: f64, z: f64) -> Result<()> {
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    if !(g[(0, 0)] > 0.0 && det > 0.0) {
        return Err(Error::Domain(format!("metric is not positive definite at eps = {eps}, z = {z}")));
    }
    Ok(())
}

/// The dual metric. Ansatz variants use the block formula with
/// `D = 1 - w^kappa S - w^(2k) |b|^2`; the elliptic surface uses its closed form.
pub fn cometric(fam: &MetricFamily, eps: f64, z: f64, y: f64) -> Result<Matrix2<f64>> {
    match &fam.variant {
        MetricVariant::GeneralAnsatz(_) | MetricVariant::WarpedProduct(_) => {
            let pt = fam.point(eps, z)?;
            let (ps, c) = fam.coefficients_at(&pt, y).expect("ansatz variant");
            let wk2 = ps.w.powi(2 * fam.k as i32);
            let d = 1.0 - ps.w.powi(fam.kappa) * c.s - wk2 * c.b * c.b / c.h;
            if !(d > 0.0 && c.h > 0.0 && ps.w > 0.0) {
                return Err(Error::Domain(format!("D = {d} is not positive at eps = {eps}, z = {z}")));
            }
            let bs = c.b / c.h;
            Ok(Matrix2::new(1.0 / d, -bs / d, -bs / d, 1.0 / (wk2 * c.h) + bs * bs / d))
        }
        MetricVariant::EllipticSurface { delta } => elliptic_cometric(fam, *delta, eps, z, y),
        MetricVariant::AmbientSurface { .. } => {
            let g = metric_tensor(fam, eps, z, y)?;
            Ok(g.try_inverse().expect("positive definite"))
        }
    }
}

fn elliptic_cometric(fam: &MetricFamily, delta: f64, eps: f64, z: f64, phi: f64) -> Result<Matrix2<f64>> {
    let (w, wz, _) = profile_power(&fam.sf, fam.k, eps, z)?;
    if w <= 0.0 {
        return Err(Error::Domain("elliptic surface is singular at the cusp".into()));
    }
    let d2 = delta * delta;
    let (s, c) = phi.sin_cos();
    let e2 = 1.0 - d2 * c * c;
    let n = 1.0 + wz * wz * (1.0 - d2) / e2;
    let beta = d2 * (wz / w) * s * c / e2;
    Ok(Matrix2::new(1.0 / n, beta / n, beta / n, 1.0 / (w * w * e2) + beta * beta / n))
}

/// Elliptic-surface metric written out directly in `(z, phi)`.
pub fn elliptic_metric_closed_form(
    sf: &ScalingFunction,
    k: u32,
    delta: f64,
    eps: f64,
    z: f64,
    phi: f64,
) -> Result<Matrix2<f64>> {
    let (w, wz, _) = profile_power(sf, k, eps, z)?;
    let d2 = delta * delta;
    let (s, c) = phi.sin_cos();
    let gzz = 1.0 + wz * wz * (1.0 - d2 * s * s);
    let gzp = -d2 * w * wz * s * c;
    let gpp = w * w * (1.0 - d2 * c * c);
    Ok(Matrix2::new(gzz, gzp, gzp, gpp))
}

/// `H = 1/2 |chi|^2` in the dual metric, `chi = (xi, eta)`.
pub fn hamiltonian(fam: &MetricFamily, eps: f64, z: f64, y: f64, xi: f64, eta: f64) -> Result<f64> {
    let gs = cometric(fam, eps, z, y)?;
    let chi = Vector2::new(xi, eta);
    Ok(0.5 * chi.dot(&(gs * chi)))
}

/// Solves `2H = 1` for `xi` at given `(z, y, eta)`, choosing the root that moves
/// up (`dz/dt > 0`) or down.
pub fn unit_speed_xi(fam: &MetricFamily, eps: f64, z: f64, y: f64, eta: f64, upward: bool) -> Result<f64> {
    let gs = cometric(fam, eps, z, y)?;
    let (a, b, c) = (gs[(0, 0)], gs[(0, 1)] * eta, gs[(1, 1)] * eta * eta);
    let mut disc = b * b - a * (c - 1.0);
    // A tangential start may overshoot by rounding.
    if disc < 0.0 && c - b * b / a <= 1.0 + 1e-12 {
        disc = 0.0;
    }
    if disc < 0.0 {
        return Err(Error::NoSolution(format!("horizontal momentum already carries 2H = {} > 1", c - b * b / a)));
    }
    // dz/dt = a xi + b = +-sqrt(disc)
    let r = disc.sqrt();
    Ok(if upward { (r - b) / a } else { (-r - b) / a })
}

/// The angular momentum `|eta|_h`.
pub fn angular_momentum(fam: &MetricFamily, eps: f64, z: f64, y: f64, eta: f64) -> Result<f64> {
    let h = fam.cross_section_metric(eps, z, y)?;
    Ok(eta.abs() / h.sqrt())
}

/// Reduces an angle to `[0, 2pi)`.
pub fn reduce_angle(y: f64) -> f64 {
    let r = y.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf2() -> ScalingFunction {
        ScalingFunction::power(2.0).unwrap()
    }

    #[test]
    fn warped_waist_metric_is_identity() {
        let fam = MetricFamily::warped(2, sf2(), CircleMetric::Flat, 0.0).unwrap();
        let g = metric_tensor(&fam, 1.0, 0.0, 0.3).unwrap();
        assert_eq!(g, Matrix2::identity());
    }

    #[test]
    fn elliptic_round_is_surface_of_revolution() {
        let fam = MetricFamily::elliptic(2, 0.0, sf2()).unwrap();
        let (w, wz, _) = profile_power(&fam.sf, 2, 0.7, 0.4).unwrap();
        let g = metric_tensor(&fam, 0.7, 0.4, 1.1).unwrap();
        assert!((g[(0, 0)] - (1.0 + wz * wz)).abs() < 1e-14);
        assert!(g[(0, 1)].abs() < 1e-15);
        assert!((g[(1, 1)] - w * w).abs() < 1e-14);
    }

    #[test]
    fn ambient_matches_elliptic_closed_form() {
        let sf = sf2();
        for &(eps, z, phi) in &[(1.0, 1.0, PI / 4.0), (0.3, -0.2, 2.0), (0.05, 0.7, 5.0)] {
            let fam = MetricFamily::elliptic(2, 0.8, sf.clone()).unwrap();
            let g = metric_tensor(&fam, eps, z, phi).unwrap();
            let gc = elliptic_metric_closed_form(&sf, 2, 0.8, eps, z, phi).unwrap();
            assert!((g - gc).abs().max() < 1e-14, "{g} vs {gc}");
        }
    }

    #[test]
    fn fourier_circle_is_round() {
        let c = FourierCurve { a0: 1.0, cos: vec![], sin: vec![] };
        let p = c.eval(0.7);
        assert!((p.p[0] - 0.7f64.cos()).abs() < 1e-15);
        assert!((p.d1[0] + 0.7f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn frontface_factor_limit() {
        for &p in &[2.0, 4.0, 6.0] {
            let a = frontface_profile_factor(p, 2, 1e4);
            assert!((a - 2.0).abs() < 1e-6, "p = {p}: {a}");
            let b = frontface_profile_factor(p, 2, 1e12);
            assert!((b - 2.0).abs() < 1e-12);
        }
        assert_eq!(frontface_profile_factor(4.0, 2, 0.0), 0.0);
    }

    #[test]
    fn kappa_range_is_enforced() {
        assert!(MetricFamily::new(2, 1, sf2(), MetricVariant::EllipticSurface { delta: 0.5 }).is_err());
        assert!(MetricFamily::new(2, 5, sf2(), MetricVariant::EllipticSurface { delta: 0.5 }).is_err());
        assert!(MetricFamily::elliptic(2, 1.0, sf2()).is_err());
    }
}
