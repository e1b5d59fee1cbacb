//! The exact geodesic flow in cotangent coordinates `(z, y, xi, eta)`.

mod integrate;
pub mod ode;
mod oracle;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metric::{cometric, hamiltonian, MetricFamily, MetricVariant};

pub use integrate::{
    angular_length, integrate, integrate_with, EventKind, FlowOptions, GeodesicTrace, StopCondition, TraceEnd,
    TraceEvent, TraceSample,
};
pub use oracle::{ambient_oracle_integrate, lagrangian_rhs, LagrangianState, OracleTrace};

/// A point of the cotangent bundle; `y` is unwrapped (lifted to the real line).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub z: f64,
    pub y: f64,
    pub xi: f64,
    pub eta: f64,
}

/// `(dz, dy, dxi, deta) / dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseTangent {
    pub dz: f64,
    pub dy: f64,
    pub dxi: f64,
    pub deta: f64,
}

impl PhasePoint {
    pub fn new(z: f64, y: f64, xi: f64, eta: f64) -> Self {
        PhasePoint { z, y, xi, eta }
    }

    /// The same point with reversed momentum, i.e. the geodesic run backwards.
    pub fn reversed(&self) -> Self {
        PhasePoint { xi: -self.xi, eta: -self.eta, ..*self }
    }
}

/// Hamilton's equations `(dH/dxi, dH/deta, -dH/dz, -dH/dy)`.
pub fn hamilton_rhs(fam: &MetricFamily, eps: f64, st: &PhasePoint) -> Result<PhaseTangent> {
    match fam.variant {
        MetricVariant::GeneralAnsatz(_) | MetricVariant::WarpedProduct(_) => ansatz_rhs(fam, eps, st),
        MetricVariant::EllipticSurface { .. } | MetricVariant::AmbientSurface { .. } => embedded_rhs(fam, eps, st),
    }
}

fn ansatz_rhs(fam: &MetricFamily, eps: f64, st: &PhasePoint) -> Result<PhaseTangent> {
    let pt = fam.point(eps, st.z)?;
    let (ps, c) = fam.coefficients_at(&pt, st.y).expect("ansatz variant");
    let k = fam.k as i32;
    let w = ps.w;
    let wk2 = w.powi(2 * k);
    let wkap = w.powi(fam.kappa);
    let (b, h, eta) = (c.b, c.h, st.eta);
    let d = 1.0 - wkap * c.s - wk2 * b * b / h;
    if !(d > 0.0 && w > 0.0 && h > 0.0) {
        return Err(crate::Error::Domain(format!("D = {d}, w = {w} at eps = {eps}, z = {}", st.z)));
    }
    let bs = b / h;
    let zdot = (st.xi - bs * eta) / d;
    let ydot = eta / (wk2 * h) - zdot * bs;
    // dD/dy and d<b, eta>/dy
    let db2_y = 2.0 * b * c.b_y / h - b * b * c.h_y / (h * h);
    let dd_y = -wkap * c.s_y - wk2 * db2_y;
    let dbeta_y = eta * (c.b_y / h - b * c.h_y / (h * h));
    let deta = eta * eta * c.h_y / (2.0 * wk2 * h * h) + zdot * dbeta_y + 0.5 * zdot * zdot * dd_y;
    let dxi = if let Some(dz) = c.dz {
        let kf = fam.k as f64;
        let kap = fam.kappa as f64;
        // w-weighted z-derivatives of D, <b, eta> and |eta|^2 / w^2k
        let wdb2_z = 2.0 * b * dz.wb_z / h - b * b * dz.wh_z / (h * h);
        let wdd_z = -kap * wkap * ps.w_z * c.s - wkap * dz.ws_z - 2.0 * kf * wk2 * ps.w_z * b * b / h - wk2 * wdb2_z;
        let wdbeta_z = eta * (dz.wb_z / h - b * dz.wh_z / (h * h));
        (eta * eta / (2.0 * wk2 * h) * (2.0 * kf * ps.w_z + dz.wh_z / h) + zdot * wdbeta_z + 0.5 * zdot * zdot * wdd_z)
            / w
    } else {
        let hstep = (1e-6 * st.z.abs()).max(1e-6);
        let ham = |dz: f64| hamiltonian(fam, eps, st.z + dz, st.y, st.xi, eta);
        -(ham(-2.0 * hstep)? - 8.0 * ham(-hstep)? + 8.0 * ham(hstep)? - ham(2.0 * hstep)?) / (12.0 * hstep)
    };
    Ok(PhaseTangent { dz: zdot, dy: ydot, dxi, deta })
}

fn embedded_rhs(fam: &MetricFamily, eps: f64, st: &PhasePoint) -> Result<PhaseTangent> {
    let gs = cometric(fam, eps, st.z, st.y)?;
    let jet = fam.metric_jet(eps, st.z, st.y)?;
    let v = gs * Vector2::new(st.xi, st.eta);
    Ok(PhaseTangent { dz: v[0], dy: v[1], dxi: 0.5 * v.dot(&(jet.g_z * v)), deta: 0.5 * v.dot(&(jet.g_y * v)) })
}

/// Unit-speed state at `(z, y)` with given `eta`, moving up or down.
pub fn unit_speed_state(fam: &MetricFamily, eps: f64, z: f64, y: f64, eta: f64, upward: bool) -> Result<PhasePoint> {
    let xi = crate::metric::unit_speed_xi(fam, eps, z, y, eta, upward)?;
    Ok(PhasePoint { z, y, xi, eta })
}

/// Unit-speed state at the waist with impact angle `phi`, i.e. `|eta|_h = w^k cos(phi)`.
pub fn waist_state_with_angle(fam: &MetricFamily, eps: f64, y: f64, phi: f64) -> Result<PhasePoint> {
    let h = fam.cross_section_metric(eps, 0.0, y)?;
    let w = fam.sf.w(eps, 0.0)?;
    let eta = w.powi(fam.k as i32) * phi.cos() * h.sqrt();
    unit_speed_state(fam, eps, 0.0, y, eta, true)
}

/// `2H - 1` at a state.
pub fn energy_defect(fam: &MetricFamily, eps: f64, st: &PhasePoint) -> Result<f64> {
    Ok(2.0 * hamiltonian(fam, eps, st.z, st.y, st.xi, st.eta)? - 1.0)
}

pub use crate::metric::angular_momentum;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{CircleMetric, MetricFamily};
    use crate::scaling::ScalingFunction;

    fn fd_gradient(fam: &MetricFamily, eps: f64, st: &PhasePoint) -> [f64; 4] {
        let h = 1e-6;
        let hm = |s: PhasePoint| hamiltonian(fam, eps, s.z, s.y, s.xi, s.eta).unwrap();
        let d = |f: &dyn Fn(f64) -> PhasePoint| (hm(f(h)) - hm(f(-h))) / (2.0 * h);
        [
            d(&|e| PhasePoint { z: st.z + e, ..*st }),
            d(&|e| PhasePoint { y: st.y + e, ..*st }),
            d(&|e| PhasePoint { xi: st.xi + e, ..*st }),
            d(&|e| PhasePoint { eta: st.eta + e, ..*st }),
        ]
    }

    fn check_symplectic(fam: &MetricFamily, eps: f64, st: PhasePoint) {
        let r = hamilton_rhs(fam, eps, &st).unwrap();
        let g = fd_gradient(fam, eps, &st);
        let pairs = [(r.dz, g[2]), (r.dy, g[3]), (r.dxi, -g[0]), (r.deta, -g[1])];
        for (a, b) in pairs {
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b} at {st:?}");
        }
    }

    #[test]
    fn rhs_is_symplectic_gradient() {
        let sf = ScalingFunction::power(2.0).unwrap();
        let fams = [
            MetricFamily::morse_model(2, 0.7, sf.clone()).unwrap(),
            MetricFamily::warped(2, sf.clone(), CircleMetric::Cosine { amplitude: 0.3 }, 0.2).unwrap(),
            MetricFamily::elliptic(2, 0.8, sf.clone()).unwrap(),
        ];
        for fam in &fams {
            for &(eps, z, y, xi, eta) in
                &[(0.5, 0.3, 0.4, 0.6, 0.05), (1.0, -0.7, 2.5, -0.3, 0.2), (0.2, 0.05, 5.0, 0.9, 0.001)]
            {
                check_symplectic(fam, eps, PhasePoint::new(z, y, xi, eta));
            }
        }
    }

    #[test]
    fn warped_rhs_closed_form() {
        let sf = ScalingFunction::power(2.0).unwrap();
        let fam = MetricFamily::warped(2, sf.clone(), CircleMetric::Flat, 0.0).unwrap();
        let st = PhasePoint::new(0.4, 1.0, 0.8, 0.03);
        let r = hamilton_rhs(&fam, 0.5, &st).unwrap();
        let w = sf.w(0.5, 0.4).unwrap();
        assert!((r.dz - 0.8).abs() < 1e-15);
        assert!((r.dy - 0.03 / w.powi(4)).abs() < 1e-12);
        assert_eq!(r.deta, 0.0);
    }

    #[test]
    fn impact_angle_sets_horizontal_speed() {
        let sf = ScalingFunction::power(2.0).unwrap();
        let fam = MetricFamily::warped(2, sf, CircleMetric::Flat, 0.0).unwrap();
        let st = waist_state_with_angle(&fam, 0.3, 0.0, 0.5).unwrap();
        let l = angular_momentum(&fam, 0.3, 0.0, 0.0, st.eta).unwrap();
        assert!((l / 0.09 - 0.5f64.cos()).abs() < 1e-14);
        assert!(energy_defect(&fam, 0.3, &st).unwrap().abs() < 1e-14);
    }
}
