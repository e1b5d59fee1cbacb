//! The rescaled field restricted to the front face `w = 0` at unit energy (`xi = 1`):
//!
//! `Z' = f(Z)`, `y' = theta / h`,
//! `theta' = theta^2 h_y / (2 h^2) - S_y / 2 - (2k - 1) f'(Z) theta`,
//!
//! and the same in the `E` charts near the corners with `M+` and `M-`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::critical::{critical_points, CriticalPoint, CriticalSide};
use super::{check_kappa, ChartKind};
use crate::error::{Error, Result};
use crate::flow::ode::{self, Control, OdeOptions, OdeSystem};
use crate::metric::{frontface_profile_factor, BlowupPoint, MetricFamily, PlaneCurve};

/// A point of the front face in one chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FrontChart {
    Z(f64),
    /// `E = 1 / Z`, `Z > 0`.
    E(f64),
    /// `E = -1 / Z`, `Z < 0`.
    Eminus(f64),
}

impl FrontChart {
    pub fn kind(&self) -> ChartKind {
        match self {
            FrontChart::Z(_) => ChartKind::Z,
            FrontChart::E(_) => ChartKind::E,
            FrontChart::Eminus(_) => ChartKind::Eminus,
        }
    }

    pub fn coord(&self) -> f64 {
        match *self {
            FrontChart::Z(c) | FrontChart::E(c) | FrontChart::Eminus(c) => c,
        }
    }

    fn with_coord(&self, c: f64) -> Self {
        match self {
            FrontChart::Z(_) => FrontChart::Z(c),
            FrontChart::E(_) => FrontChart::E(c),
            FrontChart::Eminus(_) => FrontChart::Eminus(c),
        }
    }

    /// `Z` as an extended real.
    pub fn zc(&self) -> f64 {
        match *self {
            FrontChart::Z(z) => z,
            FrontChart::E(e) => 1.0 / e,
            FrontChart::Eminus(e) => -1.0 / e,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontState {
    pub chart: FrontChart,
    pub y: f64,
    pub theta: f64,
}

impl FrontState {
    pub fn at_z(zc: f64, y: f64, theta: f64) -> Self {
        FrontState { chart: FrontChart::Z(zc), y, theta }
    }
}

/// `S` and `h` on the front face with `y`-derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontJet {
    pub s: f64,
    pub s_y: f64,
    pub s_yy: f64,
    pub h: f64,
    pub h_y: f64,
}

#[derive(Clone, Debug)]
enum Source {
    Ansatz,
    /// `S = a(Z) |y(phi)|^2`, `h = |y'(phi)|^2`.
    Embedded {
        p: f64,
        curve: Arc<dyn PlaneCurve>,
    },
}

/// Front-face data of a metric family.
#[derive(Clone, Debug)]
pub struct FrontFace {
    fam: MetricFamily,
    source: Source,
    /// `1` when `kappa = 2k - 2`; for larger `kappa` the potential drops out.
    s_weight: f64,
}

impl FrontFace {
    pub fn new(fam: &MetricFamily) -> Result<Self> {
        check_kappa(fam)?;
        let source = match fam.curve() {
            None => Source::Ansatz,
            Some(curve) => {
                let p = fam
                    .sf
                    .p()
                    .ok_or_else(|| Error::UnsupportedFamily("embedded front face needs the power family".into()))?;
                Source::Embedded { p, curve }
            }
        };
        let s_weight = if fam.kappa == 2 * fam.k as i32 - 2 { 1.0 } else { 0.0 };
        Ok(FrontFace { fam: fam.clone(), source, s_weight })
    }

    pub fn family(&self) -> &MetricFamily {
        &self.fam
    }

    /// `2k - 1`.
    pub fn m(&self) -> f64 {
        (2 * self.fam.k - 1) as f64
    }

    pub fn jet(&self, chart: &FrontChart, y: f64) -> FrontJet {
        match &self.source {
            Source::Ansatz => {
                let pt = match *chart {
                    FrontChart::Z(zc) => BlowupPoint::Z { zc, eps: 0.0 },
                    FrontChart::E(e) => BlowupPoint::E { e, z: 0.0 },
                    FrontChart::Eminus(e) => BlowupPoint::Eminus { e, z: -0.0 },
                };
                let c = self.fam.coefficients_at(&pt, y).expect("ansatz variant").1;
                FrontJet { s: c.s, s_y: c.s_y, s_yy: c.s_yy, h: c.h, h_y: c.h_y }
            }
            Source::Embedded { p, curve } => {
                let a = frontface_profile_factor(*p, self.fam.k, chart.zc());
                let c = curve.eval(y);
                let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
                FrontJet {
                    s: a * dot(c.p, c.p),
                    s_y: 2.0 * a * dot(c.p, c.d1),
                    s_yy: 2.0 * a * (dot(c.d1, c.d1) + dot(c.p, c.d2)),
                    h: dot(c.d1, c.d1),
                    h_y: 2.0 * dot(c.d1, c.d2),
                }
            }
        }
    }

    /// `S+` (at `E = 0`) or `S-` (at `E_- = 0`).
    pub fn corner(&self, side: CriticalSide, y: f64) -> FrontJet {
        match side {
            CriticalSide::Plus => self.jet(&FrontChart::E(0.0), y),
            CriticalSide::Minus => self.jet(&FrontChart::Eminus(0.0), y),
        }
    }

    /// `d/dz dS/dy` at the `M+` corner, by second-order differences in the `E` chart
    /// at `E = 0`. Zero for the embedded examples, whose `S` is only known on the front face.
    pub fn mixed_corner_derivative(&self, y: f64) -> f64 {
        match self.source {
            Source::Embedded { .. } => 0.0,
            Source::Ansatz => {
                let h = 1e-4;
                let sy = |z: f64| self.fam.coefficients_at(&BlowupPoint::E { e: 0.0, z }, y).expect("ansatz").1.s_y;
                // one-sided, since the E chart only covers z >= 0
                (-3.0 * sy(0.0) + 4.0 * sy(h) - sy(2.0 * h)) / (2.0 * h)
            }
        }
    }

    /// `b` at the `M+` corner.
    pub fn corner_b(&self, y: f64) -> f64 {
        match self.source {
            Source::Embedded { .. } => 0.0,
            Source::Ansatz => self.fam.coefficients_at(&BlowupPoint::E { e: 0.0, z: 0.0 }, y).expect("ansatz").1.b,
        }
    }

    /// `G = S + |theta|_h^2`.
    pub fn lyapunov(&self, st: &FrontState) -> f64 {
        let j = self.jet(&st.chart, st.y);
        self.s_weight * j.s + st.theta * st.theta / j.h
    }

    pub(crate) fn s_weight(&self) -> f64 {
        self.s_weight
    }
}

/// `(coord', y', theta')` of the front-face flow.
pub fn front_face_rhs(ff: &FrontFace, st: &FrontState) -> [f64; 3] {
    let sf = &ff.fam.sf;
    let (dc, w_z) = match st.chart {
        FrontChart::Z(zc) => {
            let (f, df, _) = sf.f(zc);
            (f, df)
        }
        FrontChart::E(e) => {
            let (f, df, _) = sf.big_f(e);
            (-e * f, f - e * df)
        }
        FrontChart::Eminus(e) => {
            let (f, df, _) = sf.big_f(e);
            (e * f, -(f - e * df))
        }
    };
    let j = ff.jet(&st.chart, st.y);
    let th = st.theta;
    let dtheta = th * th * j.h_y / (2.0 * j.h * j.h) - 0.5 * ff.s_weight * j.s_y - ff.m() * w_z * th;
    [dc, th / j.h, dtheta]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontFaceOptions {
    pub tau_max: f64,
    /// Declare convergence when `E + |theta| + dist(y, y_c) < tol_conv`.
    pub tol_conv: f64,
    pub stop_on_convergence: bool,
    pub ode_tol: f64,
    /// Also record samples on the uniform grid `tau = j * dt`.
    pub grid_dt: Option<f64>,
    /// Sampling density used to locate the critical points of `S+`.
    pub critical_samples: usize,
}

impl Default for FrontFaceOptions {
    fn default() -> Self {
        FrontFaceOptions {
            tau_max: 200.0,
            tol_conv: 1e-8,
            stop_on_convergence: true,
            ode_tol: 1e-12,
            grid_dt: None,
            critical_samples: 2048,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontFaceSample {
    pub tau: f64,
    pub chart: FrontChart,
    pub y: f64,
    pub theta: f64,
    /// `S + |theta|^2`.
    pub g: f64,
}

#[derive(Clone, Debug)]
pub struct FrontFaceResult {
    /// One sample per accepted step.
    pub samples: Vec<FrontFaceSample>,
    /// Samples on the `grid_dt` grid, if requested.
    pub grid: Vec<FrontFaceSample>,
    pub final_state: FrontState,
    pub final_tau: f64,
    pub limit: Option<CriticalPoint>,
}

impl FrontFaceResult {
    pub fn converged(&self) -> bool {
        self.limit.is_some()
    }

    pub fn require_limit(&self) -> Result<&CriticalPoint> {
        self.limit.as_ref().ok_or(Error::NoConvergence(self.final_tau))
    }
}

struct FrontSystem<'a> {
    ff: &'a FrontFace,
    chart: FrontChart,
}

impl OdeSystem for FrontSystem<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _s: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let st = FrontState { chart: self.chart.with_coord(x[0]), y: x[1], theta: x[2] };
        dx.copy_from_slice(&front_face_rhs(self.ff, &st));
        Ok(())
    }
}

const Z_EXIT: f64 = 12.0;
const Z_ENTER: f64 = 8.0;

fn switch_chart(c: &FrontChart) -> Option<FrontChart> {
    match *c {
        FrontChart::Z(z) if z > Z_EXIT => Some(FrontChart::E(1.0 / z)),
        FrontChart::Z(z) if z < -Z_EXIT => Some(FrontChart::Eminus(-1.0 / z)),
        FrontChart::E(e) if e > 1.0 / Z_ENTER => Some(FrontChart::Z(1.0 / e)),
        FrontChart::Eminus(e) if e > 1.0 / Z_ENTER => Some(FrontChart::Z(-1.0 / e)),
        _ => None,
    }
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Integrates the front-face flow with automatic chart changes until convergence
/// to a corner critical point or `tau_max`.
pub fn integrate_front_face(ff: &FrontFace, init: &FrontState, opts: &FrontFaceOptions) -> Result<FrontFaceResult> {
    let crit = critical_points(ff, CriticalSide::Plus, opts.critical_samples)?;
    let mut chart = init.chart;
    if let Some(c) = switch_chart(&chart) {
        chart = c;
    }
    let mut x = vec![chart.coord(), init.y, init.theta];
    let mut tau = 0.0;
    let sample = |chart: FrontChart, tau: f64, x: &[f64]| {
        let st = FrontState { chart: chart.with_coord(x[0]), y: x[1], theta: x[2] };
        FrontFaceSample { tau, chart: st.chart, y: x[1], theta: x[2], g: ff.lyapunov(&st) }
    };
    let mut samples = vec![sample(chart, 0.0, &x)];
    let mut grid = Vec::new();
    let mut next_grid = 0.0;
    if let Some(dt) = opts.grid_dt {
        grid.push(samples[0]);
        next_grid = dt;
    }
    let mut limit = None;
    loop {
        let sys = FrontSystem { ff, chart };
        let mut switched = None;
        let mut done = false;
        let ode_opts = OdeOptions::with_tol(opts.ode_tol);
        let (t_end, x_end, _) = ode::integrate(&sys, tau, &x, opts.tau_max, &ode_opts, |v| {
            if let Some(dt) = opts.grid_dt {
                while next_grid <= v.s {
                    grid.push(sample(chart, next_grid, &v.dense.eval_vec(next_grid)));
                    next_grid += dt;
                }
            }
            samples.push(sample(chart, v.s, v.x));
            let here = chart.with_coord(v.x[0]);
            if let FrontChart::E(e) = here {
                if let Some(cp) =
                    crit.iter().min_by(|a, b| angular_distance(a.y, v.x[1]).total_cmp(&angular_distance(b.y, v.x[1])))
                {
                    let r = e + v.x[2].abs() + angular_distance(cp.y, v.x[1]);
                    if r < opts.tol_conv {
                        limit = Some(cp.clone());
                        if opts.stop_on_convergence {
                            done = true;
                            return Ok(Control::Stop);
                        }
                    }
                }
            }
            switched = switch_chart(&here);
            Ok(if switched.is_some() { Control::Stop } else { Control::Continue })
        })?;
        tau = t_end;
        x = x_end;
        match switched {
            Some(c) if !done && tau < opts.tau_max => {
                chart = c;
                x[0] = c.coord();
            }
            _ => break,
        }
    }
    Ok(FrontFaceResult {
        samples,
        grid,
        final_state: FrontState { chart: chart.with_coord(x[0]), y: x[1], theta: x[2] },
        final_tau: tau,
        limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rescaled::{rescaled_rhs, RescaledState};
    use crate::scaling::ScalingFunction;

    fn model() -> FrontFace {
        FrontFace::new(&MetricFamily::morse_model(2, 0.7, ScalingFunction::power(2.0).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn matches_rescaled_field_on_front_face() {
        let ff = model();
        for &(zc, y, th) in &[(0.3, 0.4, 0.2), (-2.0, 2.0, -0.5), (5.0, 4.0, 1.5)] {
            let a = front_face_rhs(&ff, &FrontState::at_z(zc, y, th));
            let rs = RescaledState { pt: BlowupPoint::Z { zc, eps: 0.0 }, y, xi: 1.0, theta: th };
            let b = rescaled_rhs(ff.family(), &rs).unwrap();
            for (u, v) in a.iter().zip([b.d_coord, b.dy, b.dtheta]) {
                assert!((u - v).abs() < 1e-13, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn chart_switch_preserves_geometry() {
        let ff = model();
        let (zc, y, th) = (11.0, 1.0, 0.3);
        let a = front_face_rhs(&ff, &FrontState::at_z(zc, y, th));
        let b = front_face_rhs(&ff, &FrontState { chart: FrontChart::E(1.0 / zc), y, theta: th });
        // dE/dtau = -Z'/Z^2
        assert!((b[0] + a[0] / (zc * zc)).abs() < 1e-14);
        assert!((a[1] - b[1]).abs() < 1e-14 && (a[2] - b[2]).abs() < 1e-14);
    }

    #[test]
    fn converges_to_a_minimum() {
        let ff = model();
        let r = integrate_front_face(&ff, &FrontState::at_z(0.0, 0.3, 0.0), &FrontFaceOptions::default()).unwrap();
        let cp = r.require_limit().unwrap();
        assert!((cp.y - PI / 2.0).abs() < 1e-9, "{}", cp.y);
    }

    #[test]
    fn maximum_is_fixed() {
        let ff = model();
        let r = integrate_front_face(&ff, &FrontState::at_z(0.0, 0.0, 0.0), &FrontFaceOptions::default()).unwrap();
        assert_eq!(r.final_state.y, 0.0);
        assert!(r.require_limit().unwrap().y.abs() < 1e-12);
    }
}
