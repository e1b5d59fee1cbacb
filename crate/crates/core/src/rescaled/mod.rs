//! Blow-up charts, the rescaled momentum `theta = eta / w^(2k-1)` and the
//! rescaled vector field `w V` in rescaled time `d tau = dt / w`.
//!
//! The ansatz families use closed forms that stay finite at `w = 0`. The embedded
//! surfaces have no ansatz form, so their rescaled field is obtained by pushing
//! the exact field forward; that route needs `w > 0`.

mod critical;
mod frontface;
mod reform;

use crate::error::{Error, Result};
use crate::flow::{hamilton_rhs, PhasePoint};
use crate::metric::{BlowupPoint, MetricFamily, MetricVariant};

pub use critical::{
    critical_points, critical_points_of, critical_points_torus, critical_reference, eigenvalues_analytic,
    gamma_min_reference, linearization, linearization_fd, morse_report, CriticalPoint, CriticalSide, GammaReference,
    LinearizationSite, MorseEntry, MorseReport, PointKind, TorusJet,
};
pub use frontface::{
    front_face_rhs, integrate_front_face, FrontChart, FrontFace, FrontFaceOptions, FrontFaceResult, FrontFaceSample,
    FrontJet, FrontState,
};
pub use reform::{hamiltonian_reformulation_check, ReformulationReport};

/// A point of the rescaled phase space in one chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaledState {
    pub pt: BlowupPoint,
    pub y: f64,
    pub xi: f64,
    pub theta: f64,
}

/// `tau`-derivatives. `d_coord` is `Z'` or `E'`; `d_other` is `eps' = 0` in the
/// `Z` chart and `z'` in the `E` charts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaledTangent {
    pub d_coord: f64,
    pub d_other: f64,
    pub dy: f64,
    pub dxi: f64,
    pub dtheta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartKind {
    Z,
    E,
    Eminus,
}

impl RescaledState {
    pub fn chart(&self) -> ChartKind {
        match self.pt {
            BlowupPoint::Z { .. } => ChartKind::Z,
            BlowupPoint::E { .. } => ChartKind::E,
            BlowupPoint::Eminus { .. } => ChartKind::Eminus,
        }
    }

    /// The same geometric point in another chart.
    pub fn in_chart(&self, chart: ChartKind) -> Result<Self> {
        let (eps, z) = (self.pt.eps(), self.pt.z());
        let pt = match chart {
            ChartKind::Z => {
                if eps <= 0.0 {
                    // front-face points of the E charts
                    match self.pt {
                        BlowupPoint::E { e, .. } if e > 0.0 => BlowupPoint::Z { zc: 1.0 / e, eps: 0.0 },
                        BlowupPoint::Eminus { e, .. } if e > 0.0 => BlowupPoint::Z { zc: -1.0 / e, eps: 0.0 },
                        BlowupPoint::Z { .. } => self.pt,
                        _ => return Err(Error::Domain("point is not covered by the Z chart".into())),
                    }
                } else {
                    BlowupPoint::Z { zc: z / eps, eps }
                }
            }
            ChartKind::E | ChartKind::Eminus => {
                let zc = match self.pt {
                    BlowupPoint::Z { zc, .. } => Some(zc),
                    _ => None,
                };
                let e = match (zc, self.pt) {
                    (Some(zc), _) => 1.0 / zc.abs(),
                    (None, BlowupPoint::E { e, .. } | BlowupPoint::Eminus { e, .. }) => e,
                    _ => unreachable!(),
                };
                let positive = zc.map_or(z >= 0.0, |zc| zc > 0.0);
                if positive != (chart == ChartKind::E) || !e.is_finite() {
                    return Err(Error::Domain("point is not covered by the requested E chart".into()));
                }
                if chart == ChartKind::E {
                    BlowupPoint::E { e, z }
                } else {
                    BlowupPoint::Eminus { e, z }
                }
            }
        };
        Ok(RescaledState { pt, ..*self })
    }
}

fn check_kappa(fam: &MetricFamily) -> Result<()> {
    let need = 2 * fam.k as i32 - 2;
    if fam.kappa < need {
        return Err(Error::Config(format!(
            "rescaling with theta = eta / w^(2k-1) needs kappa >= 2k - 2 = {need}, got {}",
            fam.kappa
        )));
    }
    Ok(())
}

/// Rescales a cotangent state; the chart follows the `|Z| <= 10` rule.
pub fn to_rescaled(fam: &MetricFamily, eps: f64, st: &PhasePoint) -> Result<RescaledState> {
    let pt = fam.point(eps, st.z)?;
    let w = pt.scaling(&fam.sf).w;
    Ok(RescaledState { pt, y: st.y, xi: st.xi, theta: st.eta / w.powi(2 * fam.k as i32 - 1) })
}

/// Inverse of [`to_rescaled`]; returns `eps` and the cotangent state.
pub fn from_rescaled(fam: &MetricFamily, rs: &RescaledState) -> Result<(f64, PhasePoint)> {
    let w = rs.pt.scaling(&fam.sf).w;
    Ok((rs.pt.eps(), PhasePoint { z: rs.pt.z(), y: rs.y, xi: rs.xi, eta: rs.theta * w.powi(2 * fam.k as i32 - 1) }))
}

/// `2H` in rescaled variables, `w^(2k-2)|theta|^2 + (xi - w^(2k-1)<b, theta>)^2 / D`.
pub fn rescaled_energy(fam: &MetricFamily, rs: &RescaledState) -> Result<f64> {
    match fam.ansatz() {
        Some(_) => {
            let (ps, c) = fam.coefficients_at(&rs.pt, rs.y).expect("ansatz variant");
            let k = fam.k as i32;
            let w = ps.w;
            let d = 1.0 - w.powi(fam.kappa) * c.s - w.powi(2 * k) * c.b * c.b / c.h;
            let u = rs.xi - w.powi(2 * k - 1) * c.b * rs.theta / c.h;
            Ok(w.powi(2 * k - 2) * rs.theta * rs.theta / c.h + u * u / d)
        }
        None => {
            let (eps, st) = from_rescaled(fam, rs)?;
            Ok(2.0 * crate::metric::hamiltonian(fam, eps, st.z, st.y, st.xi, st.eta)?)
        }
    }
}

/// Chart derivative of the base point given `q = dz/dt` (which equals `z' / w`).
fn chart_velocity(fam: &MetricFamily, pt: &BlowupPoint, q: f64, w: f64) -> (f64, f64) {
    match *pt {
        BlowupPoint::Z { zc, .. } => (fam.sf.f(zc).0 * q, 0.0),
        BlowupPoint::E { e, .. } => (-e * fam.sf.big_f(e).0 * q, w * q),
        BlowupPoint::Eminus { e, .. } => (e * fam.sf.big_f(e).0 * q, w * q),
    }
}

/// The rescaled vector field `w V` in the chart of `rs`.
pub fn rescaled_rhs(fam: &MetricFamily, rs: &RescaledState) -> Result<RescaledTangent> {
    check_kappa(fam)?;
    match fam.variant {
        MetricVariant::GeneralAnsatz(_) | MetricVariant::WarpedProduct(_) => ansatz_rescaled(fam, rs),
        MetricVariant::EllipticSurface { .. } | MetricVariant::AmbientSurface { .. } => pushed_forward(fam, rs),
    }
}

fn ansatz_rescaled(fam: &MetricFamily, rs: &RescaledState) -> Result<RescaledTangent> {
    let (ps, c) = fam.coefficients_at(&rs.pt, rs.y).expect("ansatz variant");
    let dz = fam.weighted_z_derivatives(&rs.pt, rs.y, &c);
    let k = fam.k as i32;
    let kf = k as f64;
    let m = (2 * k - 1) as f64;
    let w = ps.w;
    let (wm, w2k, w2k2, wkap) = (w.powi(2 * k - 1), w.powi(2 * k), w.powi(2 * k - 2), w.powi(fam.kappa));
    let (b, h, th) = (c.b, c.h, rs.theta);
    let d = 1.0 - wkap * c.s - w2k * b * b / h;
    if !(d > 0.0 && h > 0.0) {
        return Err(Error::Domain(format!("D = {d} is not positive in the rescaled field")));
    }
    let bs = b / h;
    let q = (rs.xi - wm * bs * th) / d;
    let zp = w * q;
    let (d_coord, d_other) = chart_velocity(fam, &rs.pt, q, w);
    let dy = th / h - zp * bs;
    let db2_y = 2.0 * b * c.b_y / h - b * b * c.h_y / (h * h);
    let dtheta = th * th * c.h_y / (2.0 * h * h) + zp * th * (c.b_y / h - b * c.h_y / (h * h))
        - 0.5 * q * q * (w.powi(fam.kappa + 2 - 2 * k) * c.s_y + w * w * db2_y)
        - m * ps.w_z * q * th;
    let wdb2_z = 2.0 * b * dz.wb_z / h - b * b * dz.wh_z / (h * h);
    let wdd_z =
        -(fam.kappa as f64) * wkap * ps.w_z * c.s - wkap * dz.ws_z - 2.0 * kf * w2k * ps.w_z * b * b / h - w2k * wdb2_z;
    let dxi = w2k2 * th * th / (2.0 * h) * (2.0 * kf * ps.w_z + dz.wh_z / h)
        + q * wm * th * (dz.wb_z * h - b * dz.wh_z) / (h * h)
        + 0.5 * q * q * wdd_z;
    Ok(RescaledTangent { d_coord, d_other, dy, dxi, dtheta })
}

fn pushed_forward(fam: &MetricFamily, rs: &RescaledState) -> Result<RescaledTangent> {
    let ps = rs.pt.scaling(&fam.sf);
    if ps.w <= 0.0 {
        return Err(Error::Domain("embedded surfaces have no closed-form rescaled field on the front face".into()));
    }
    let (eps, st) = from_rescaled(fam, rs)?;
    let r = hamilton_rhs(fam, eps, &st)?;
    let k = fam.k as i32;
    let w = ps.w;
    let (d_coord, d_other) = chart_velocity(fam, &rs.pt, r.dz, w);
    Ok(RescaledTangent {
        d_coord,
        d_other,
        dy: w * r.dy,
        dxi: w * r.dxi,
        dtheta: r.deta / w.powi(2 * k - 2) - (2 * k - 1) as f64 * ps.w_z * r.dz * rs.theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::CircleMetric;
    use crate::scaling::ScalingFunction;

    fn sf() -> ScalingFunction {
        ScalingFunction::power(2.0).unwrap()
    }

    #[test]
    fn theta_at_waist() {
        let fam = MetricFamily::morse_model(2, 0.7, sf()).unwrap();
        let rs = to_rescaled(&fam, 0.1, &PhasePoint::new(0.0, 0.3, 1.0, 2e-3)).unwrap();
        assert!((rs.theta - 2.0).abs() < 1e-12);
        let (eps, back) = from_rescaled(&fam, &rs).unwrap();
        assert_eq!(eps, 0.1);
        assert!((back.eta - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn front_face_values() {
        let fam = MetricFamily::morse_model(2, 0.7, sf()).unwrap();
        let rs = RescaledState { pt: BlowupPoint::Z { zc: 0.8, eps: 0.0 }, y: 0.4, xi: 1.0, theta: 0.3 };
        let t = rescaled_rhs(&fam, &rs).unwrap();
        assert!((t.d_coord - fam.sf.f(0.8).0).abs() < 1e-15);
        assert_eq!(t.dxi, 0.0);
    }

    #[test]
    fn chain_rule_matches_exact_field() {
        let s = sf();
        let fams = [
            MetricFamily::morse_model(2, 0.7, s.clone()).unwrap(),
            MetricFamily::warped(2, s.clone(), CircleMetric::Cosine { amplitude: 0.4 }, 0.3).unwrap(),
        ];
        for fam in &fams {
            for &(eps, z) in &[(0.3, 0.2), (0.05, 1.2), (0.2, -0.9)] {
                let st = PhasePoint::new(z, 0.7, 0.6, 0.3 * fam.sf.w(eps, z).unwrap().powi(3));
                let rs = to_rescaled(fam, eps, &st).unwrap();
                let closed = ansatz_rescaled(fam, &rs).unwrap();
                let pushed = pushed_forward(fam, &rs).unwrap();
                for (a, b) in [
                    (closed.d_coord, pushed.d_coord),
                    (closed.d_other, pushed.d_other),
                    (closed.dy, pushed.dy),
                    (closed.dxi, pushed.dxi),
                    (closed.dtheta, pushed.dtheta),
                ] {
                    assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{a} vs {b} at eps={eps}, z={z}");
                }
            }
        }
    }

    #[test]
    fn kappa_precondition() {
        let fam = MetricFamily::new(
            3,
            3,
            sf(),
            MetricVariant::WarpedProduct(crate::metric::WarpedCoefficients { h: CircleMetric::Flat, s: 0.0 }),
        )
        .unwrap();
        let rs = RescaledState { pt: BlowupPoint::Z { zc: 0.0, eps: 0.1 }, y: 0.0, xi: 1.0, theta: 0.0 };
        assert!(matches!(rescaled_rhs(&fam, &rs), Err(Error::Config(_))));
    }
}
