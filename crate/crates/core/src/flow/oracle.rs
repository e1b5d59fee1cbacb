//! Second-order geodesic equations of the elliptic neck, integrated directly in
//! `(z, phi)` as an independent check of the Hamiltonian flow.

use nalgebra::Vector2;

use super::ode::{self, Control, OdeOptions, OdeSystem};
use super::{PhasePoint, StopCondition};
use crate::error::{Error, Result};
use crate::metric::{cometric, elliptic_metric_closed_form, profile_power, MetricFamily};
use crate::scaling::ScalingFunction;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LagrangianState {
    pub z: f64,
    pub phi: f64,
    pub zdot: f64,
    pub phidot: f64,
}

impl LagrangianState {
    /// Velocity of a cotangent state, `(zdot, phidot) = G^-1 (xi, eta)`.
    pub fn from_phase(fam: &MetricFamily, eps: f64, st: &PhasePoint) -> Result<Self> {
        let v = cometric(fam, eps, st.z, st.y)? * Vector2::new(st.xi, st.eta);
        Ok(LagrangianState { z: st.z, phi: st.y, zdot: v[0], phidot: v[1] })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleTrace {
    /// `(t, z, phi)`.
    pub samples: Vec<(f64, f64, f64)>,
    pub final_state: LagrangianState,
    pub final_t: f64,
    /// `max |g(v, v) - 1|`.
    pub max_speed_error: f64,
}

/// Acceleration of the elliptic-neck geodesic equations, with `W = w^k` and
/// `e2 = 1 - delta^2 cos^2 phi`.
pub fn lagrangian_rhs(sf: &ScalingFunction, k: u32, delta: f64, eps: f64, s: &LagrangianState) -> Result<(f64, f64)> {
    let (w, wz, wzz) = profile_power(sf, k, eps, s.z)?;
    if w <= 0.0 {
        return Err(Error::Domain("elliptic surface is singular at the cusp".into()));
    }
    let d2 = delta * delta;
    let q = 1.0 - d2;
    let (sn, cs) = s.phi.sin_cos();
    let e2 = 1.0 - d2 * cs * cs;
    let den = e2 + wz * wz * q;
    let zdd = -q * wz / den * (wzz * s.zdot * s.zdot - w * s.phidot * s.phidot);
    let pdd =
        -(d2 * sn * cs / den * (s.phidot * s.phidot - wzz / w * s.zdot * s.zdot) + 2.0 * wz / w * s.zdot * s.phidot);
    Ok((zdd, pdd))
}

struct Lagrangian<'a> {
    sf: &'a ScalingFunction,
    k: u32,
    delta: f64,
    eps: f64,
}

impl OdeSystem for Lagrangian<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, _s: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let st = LagrangianState { z: x[0], phi: x[1], zdot: x[2], phidot: x[3] };
        let (zdd, pdd) = lagrangian_rhs(self.sf, self.k, self.delta, self.eps, &st)?;
        dx.copy_from_slice(&[x[2], x[3], zdd, pdd]);
        Ok(())
    }
}

fn speed2(sf: &ScalingFunction, k: u32, delta: f64, eps: f64, x: &[f64]) -> Result<f64> {
    let g = elliptic_metric_closed_form(sf, k, delta, eps, x[0], x[1])?;
    let v = Vector2::new(x[2], x[3]);
    Ok(v.dot(&(g * v)))
}

/// Integrates the Lagrangian equations until a `z` level or `t_max` is reached.
/// Turning-point and angular-length stops are not supported here.
#[allow(clippy::too_many_arguments)]
pub fn ambient_oracle_integrate(
    k: u32,
    delta: f64,
    sf: &ScalingFunction,
    eps: f64,
    state0: &LagrangianState,
    stop: &StopCondition,
    tol: f64,
) -> Result<OracleTrace> {
    if stop.levels.is_empty() && stop.t_max.is_none() {
        return Err(Error::Config("the oracle stops only at z levels or t_max".into()));
    }
    let sys = Lagrangian { sf, k, delta, eps };
    let x0 = [state0.z, state0.phi, state0.zdot, state0.phidot];
    let sp0 = speed2(sf, k, delta, eps, &x0)?;
    if (sp0 - 1.0).abs() > 1e-10 {
        return Err(Error::Config(format!("oracle start is not unit speed: |v|^2 = {sp0}")));
    }
    let opts = OdeOptions { max_steps: stop.max_steps, ..OdeOptions::with_tol(tol) };
    let mut samples = vec![(0.0, x0[0], x0[1])];
    let mut max_err = (sp0 - 1.0).abs();
    let mut prev = x0.to_vec();
    let mut hit: Option<(f64, Vec<f64>)> = None;
    let gfun = |s: f64, x: &[f64]| -> Vec<f64> {
        let mut g: Vec<f64> = stop.levels.iter().map(|l| x[0] - l).collect();
        if let Some(t) = stop.t_max {
            g.push(s - t);
        }
        g
    };
    let mut s_prev = 0.0;
    let res = ode::integrate(&sys, 0.0, &x0, 1e300, &opts, |v| {
        let g_old = gfun(s_prev, &prev);
        let g_new = gfun(v.s, v.x);
        let mut best: Option<f64> = None;
        for i in 0..g_old.len() {
            if g_old[i] != 0.0 && g_old[i].signum() != g_new[i].signum() {
                let (mut lo, mut hi) = (v.dense.s_old, v.s);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let gm = gfun(mid, &v.dense.eval_vec(mid))[i];
                    if gm.signum() == g_old[i].signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                best = Some(best.map_or(hi, |b: f64| b.min(hi)));
            }
        }
        if let Some(s) = best {
            hit = Some((s, v.dense.eval_vec(s)));
            return Ok(Control::Stop);
        }
        if let Ok(sp) = speed2(sf, k, delta, eps, v.x) {
            max_err = max_err.max((sp - 1.0).abs());
        }
        samples.push((v.s, v.x[0], v.x[1]));
        prev.copy_from_slice(v.x);
        s_prev = v.s;
        Ok(Control::Continue)
    });
    res?;
    let (t, x) =
        hit.ok_or_else(|| Error::StepFailure { at: s_prev, reason: "oracle ended without a stop event".into() })?;
    samples.push((t, x[0], x[1]));
    Ok(OracleTrace {
        samples,
        final_state: LagrangianState { z: x[0], phi: x[1], zdot: x[2], phidot: x[3] },
        final_t: t,
        max_speed_error: max_err,
    })
}
