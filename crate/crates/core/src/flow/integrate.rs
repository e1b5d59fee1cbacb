use serde::{Deserialize, Serialize};

use super::ode::{self, Control, DenseStep, OdeOptions, OdeSystem};
use super::{hamilton_rhs, PhasePoint};
use crate::error::{Error, Result};
use crate::metric::{hamiltonian, BlowupPoint, MetricFamily};
use crate::rescaled::{rescaled_rhs, RescaledState};

/// When to end a geodesic integration. Turning points are always recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopCondition {
    /// Stop at the first crossing of any of these `z` levels.
    pub levels: Vec<f64>,
    pub stop_at_turning_point: bool,
    pub t_max: Option<f64>,
    pub angular_length_max: Option<f64>,
    pub max_steps: usize,
}

impl StopCondition {
    pub fn reach_z(z1: f64) -> Self {
        StopCondition { levels: vec![z1], ..Self::empty() }
    }

    pub fn turning_point() -> Self {
        StopCondition { stop_at_turning_point: true, ..Self::empty() }
    }

    pub fn t_max(t: f64) -> Self {
        StopCondition { t_max: Some(t), ..Self::empty() }
    }

    pub fn angular_length_max(a: f64) -> Self {
        StopCondition { angular_length_max: Some(a), ..Self::empty() }
    }

    pub fn or_t_max(mut self, t: f64) -> Self {
        self.t_max = Some(t);
        self
    }

    pub fn or_level(mut self, z: f64) -> Self {
        self.levels.push(z);
        self
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    fn empty() -> Self {
        StopCondition {
            levels: vec![],
            stop_at_turning_point: false,
            t_max: None,
            angular_length_max: None,
            max_steps: 2_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty()
            && !self.stop_at_turning_point
            && self.t_max.is_none()
            && self.angular_length_max.is_none()
        {
            return Err(Error::Config("stop condition needs at least one bound".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Absolute and relative tolerance of the integrator.
    pub tol: f64,
    /// Hand off to the rescaled flow when `|z| < neck_enter * eps`.
    pub neck_enter: f64,
    /// Hand back to the exact flow when `|z| > neck_exit * eps`.
    pub neck_exit: f64,
    /// Extra samples recorded inside every accepted step.
    pub dense_samples: usize,
    pub record_samples: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol: 1e-10, neck_enter: 8.0, neck_exit: 12.0, dense_samples: 0, record_samples: true }
    }
}

impl FlowOptions {
    pub fn with_tol(tol: f64) -> Self {
        FlowOptions { tol, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    ZCrossing { level: f64 },
    TurningPoint,
    MaxTime,
    MaxAngularLength,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub kind: EventKind,
    pub t: f64,
    pub state: PhasePoint,
    pub angle: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub z: f64,
    pub y: f64,
    pub xi: f64,
    pub eta: f64,
    /// `2H`.
    pub energy: f64,
    /// Angular momentum `|eta|_h`.
    pub l: f64,
    /// Angular length so far.
    pub angle: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TraceEnd {
    Event(EventKind),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicTrace {
    pub eps: f64,
    pub samples: Vec<TraceSample>,
    pub events: Vec<TraceEvent>,
    pub end: TraceEnd,
    pub final_state: PhasePoint,
    pub final_t: f64,
    pub angular_length: f64,
    pub max_energy_error: f64,
    pub steps: usize,
    pub rejected: usize,
    pub neck_steps: usize,
}

impl GeodesicTrace {
    pub fn turning_points(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::TurningPoint)
    }

    pub fn crossing(&self, level: f64) -> Option<&TraceEvent> {
        self.events.iter().find(|e| e.kind == EventKind::ZCrossing { level })
    }
}

/// The angular length `int |dy/dt|_h dt` accumulated along the trace.
pub fn angular_length(trace: &GeodesicTrace) -> f64 {
    trace.angular_length
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    /// `[z, y, xi, eta, t, A]` in time `t`.
    Direct,
    /// `[Z, y, xi, theta, t, A]` in rescaled time `tau`, `Z = z / eps`.
    Neck,
}

struct FlowSystem<'a> {
    fam: &'a MetricFamily,
    eps: f64,
    mode: Mode,
}

impl FlowSystem<'_> {
    fn phase(&self, x: &[f64]) -> PhasePoint {
        match self.mode {
            Mode::Direct => PhasePoint { z: x[0], y: x[1], xi: x[2], eta: x[3] },
            Mode::Neck => {
                let w = self.eps * self.fam.sf.f(x[0]).0;
                PhasePoint { z: self.eps * x[0], y: x[1], xi: x[2], eta: x[3] * w.powi(2 * self.fam.k as i32 - 1) }
            }
        }
    }

    fn z(&self, x: &[f64]) -> f64 {
        match self.mode {
            Mode::Direct => x[0],
            Mode::Neck => self.eps * x[0],
        }
    }
}

impl OdeSystem for FlowSystem<'_> {
    fn dim(&self) -> usize {
        6
    }

    fn rhs(&self, _s: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        match self.mode {
            Mode::Direct => {
                let st = PhasePoint { z: x[0], y: x[1], xi: x[2], eta: x[3] };
                let r = hamilton_rhs(self.fam, self.eps, &st)?;
                let h = self.fam.cross_section_metric(self.eps, x[0], x[1])?;
                dx.copy_from_slice(&[r.dz, r.dy, r.dxi, r.deta, 1.0, r.dy.abs() * h.sqrt()]);
            }
            Mode::Neck => {
                let pt = BlowupPoint::Z { zc: x[0], eps: self.eps };
                let rs = RescaledState { pt, y: x[1], xi: x[2], theta: x[3] };
                let r = rescaled_rhs(self.fam, &rs)?;
                let w = self.eps * self.fam.sf.f(x[0]).0;
                let h = self.fam.cross_section_metric(self.eps, self.eps * x[0], x[1])?;
                dx.copy_from_slice(&[r.d_coord, r.dy, r.dxi, r.dtheta, w, r.dy.abs() * h.sqrt()]);
            }
        }
        Ok(())
    }
}

/// Integrates the unit-speed geodesic from `state0` until `stop` fires.
pub fn integrate(
    fam: &MetricFamily,
    eps: f64,
    state0: &PhasePoint,
    stop: &StopCondition,
    tol: f64,
) -> Result<GeodesicTrace> {
    integrate_with(fam, eps, state0, stop, &FlowOptions::with_tol(tol))
}

#[derive(Clone, Copy)]
enum Ev {
    Level(f64),
    Turning,
    TMax(f64),
    AMax(f64),
}

impl Ev {
    fn kind(&self) -> EventKind {
        match *self {
            Ev::Level(level) => EventKind::ZCrossing { level },
            Ev::Turning => EventKind::TurningPoint,
            Ev::TMax(_) => EventKind::MaxTime,
            Ev::AMax(_) => EventKind::MaxAngularLength,
        }
    }
}

pub fn integrate_with(
    fam: &MetricFamily,
    eps: f64,
    state0: &PhasePoint,
    stop: &StopCondition,
    opts: &FlowOptions,
) -> Result<GeodesicTrace> {
    stop.validate()?;
    let e0 = 2.0 * hamiltonian(fam, eps, state0.z, state0.y, state0.xi, state0.eta)?;
    // Restarts from integrated endpoints carry their accumulated drift.
    if (e0 - 1.0).abs() > 1e-8 {
        return Err(Error::Config(format!("initial state is not unit speed: 2H = {e0}")));
    }
    let mut events_spec: Vec<(Ev, bool)> = stop.levels.iter().map(|&l| (Ev::Level(l), true)).collect();
    events_spec.push((Ev::Turning, stop.stop_at_turning_point));
    if let Some(t) = stop.t_max {
        events_spec.push((Ev::TMax(t), true));
    }
    if let Some(a) = stop.angular_length_max {
        events_spec.push((Ev::AMax(a), true));
    }

    let can_neck = eps > 0.0 && fam.kappa >= 2 * fam.k as i32 - 2;
    let mut mode = if can_neck && state0.z.abs() < opts.neck_enter * eps { Mode::Neck } else { Mode::Direct };
    let mut x = vec![state0.z, state0.y, state0.xi, state0.eta, 0.0, 0.0];
    if mode == Mode::Neck {
        x = to_mode(fam, eps, &x, Mode::Direct, Mode::Neck);
    }
    let mut trace = GeodesicTrace {
        eps,
        samples: Vec::new(),
        events: Vec::new(),
        end: TraceEnd::Event(EventKind::MaxTime),
        final_state: *state0,
        final_t: 0.0,
        angular_length: 0.0,
        max_energy_error: (e0 - 1.0).abs(),
        steps: 0,
        rejected: 0,
        neck_steps: 0,
    };
    let sample = |sys: &FlowSystem, x: &[f64]| -> Result<TraceSample> {
        let p = sys.phase(x);
        let energy = 2.0 * hamiltonian(fam, eps, p.z, p.y, p.xi, p.eta)?;
        let l = crate::metric::angular_momentum(fam, eps, p.z, p.y, p.eta)?;
        Ok(TraceSample { t: x[4], z: p.z, y: p.y, xi: p.xi, eta: p.eta, energy, l, angle: x[5] })
    };
    if opts.record_samples {
        let sys = FlowSystem { fam, eps, mode };
        trace.samples.push(sample(&sys, &x)?);
    }

    loop {
        let sys = FlowSystem { fam, eps, mode };
        let mut dx_prev = vec![0.0; 6];
        sys.rhs(0.0, &x, &mut dx_prev)?;
        let mut x_prev = x.clone();
        let mut finished: Option<(Ev, f64, Vec<f64>)> = None;
        let mut switch = false;
        let s0 = if mode == Mode::Direct { x[4] } else { 0.0 };
        let remaining = stop.max_steps.saturating_sub(trace.steps);
        if remaining == 0 {
            return Err(Error::CapExceeded(stop.max_steps));
        }
        let ode_opts = OdeOptions { max_steps: remaining, ..OdeOptions::with_tol(opts.tol) };
        let mut local_err: Option<Error> = None;
        let res = ode::integrate(&sys, s0, &x, 1e300, &ode_opts, |v| {
            trace.steps += 1;
            if mode == Mode::Neck {
                trace.neck_steps += 1;
            }
            // events inside this step, in order of occurrence
            let mut found: Vec<(f64, Ev, bool)> = Vec::new();
            for &(ev, stops) in &events_spec {
                let g_old = event_value(&sys, ev, &x_prev, &dx_prev);
                let g_new = event_value(&sys, ev, v.x, v.dx);
                if g_old != 0.0 && g_old.signum() != g_new.signum() && g_new.is_finite() {
                    match locate(&sys, ev, v.dense, g_old) {
                        Ok(s) => found.push((s, ev, stops)),
                        Err(e) => {
                            local_err = Some(e);
                            return Ok(Control::Stop);
                        }
                    }
                }
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (s, ev, stops) in found {
                let xe = v.dense.eval_vec(s);
                let p = sys.phase(&xe);
                let p = match ev {
                    Ev::Level(l) => PhasePoint { z: l, ..p },
                    _ => p,
                };
                trace.events.push(TraceEvent { kind: ev.kind(), t: xe[4], state: p, angle: xe[5] });
                if stops {
                    finished = Some((ev, s, xe));
                    return Ok(Control::Stop);
                }
            }
            if opts.record_samples {
                for j in 1..=opts.dense_samples {
                    let s = v.dense.s_old + v.dense.h * j as f64 / (opts.dense_samples + 1) as f64;
                    match sample(&sys, &v.dense.eval_vec(s)) {
                        Ok(smp) => trace.samples.push(smp),
                        Err(e) => {
                            local_err = Some(e);
                            return Ok(Control::Stop);
                        }
                    }
                }
                match sample(&sys, v.x) {
                    Ok(smp) => {
                        trace.max_energy_error = trace.max_energy_error.max((smp.energy - 1.0).abs());
                        trace.samples.push(smp);
                    }
                    Err(e) => {
                        local_err = Some(e);
                        return Ok(Control::Stop);
                    }
                }
            } else if let Ok(smp) = sample(&sys, v.x) {
                trace.max_energy_error = trace.max_energy_error.max((smp.energy - 1.0).abs());
            }
            x_prev.copy_from_slice(v.x);
            dx_prev.copy_from_slice(v.dx);
            let z = sys.z(v.x);
            switch = match mode {
                Mode::Neck => z.abs() > opts.neck_exit * eps,
                Mode::Direct => can_neck && z.abs() < opts.neck_enter * eps,
            };
            Ok(if switch { Control::Stop } else { Control::Continue })
        });
        if let Some(e) = local_err {
            return Err(e);
        }
        let (_, x_end, st) = res?;
        trace.rejected += st.rejected;
        if let Some((ev, _, xe)) = finished {
            let mut p = sys.phase(&xe);
            if let Ev::Level(l) = ev {
                p.z = l;
            }
            trace.end = TraceEnd::Event(ev.kind());
            trace.final_state = p;
            trace.final_t = xe[4];
            trace.angular_length = xe[5];
            return Ok(trace);
        }
        if !switch {
            return Err(Error::StepFailure { at: x_end[4], reason: "integration ended without a stop event".into() });
        }
        let next = if mode == Mode::Neck { Mode::Direct } else { Mode::Neck };
        x = to_mode(fam, eps, &x_end, mode, next);
        mode = next;
    }
}

fn to_mode(fam: &MetricFamily, eps: f64, x: &[f64], from: Mode, to: Mode) -> Vec<f64> {
    let m = 2 * fam.k as i32 - 1;
    match (from, to) {
        (Mode::Direct, Mode::Neck) => {
            let w = eps * fam.sf.f(x[0] / eps).0;
            vec![x[0] / eps, x[1], x[2], x[3] / w.powi(m), x[4], x[5]]
        }
        (Mode::Neck, Mode::Direct) => {
            let w = eps * fam.sf.f(x[0]).0;
            vec![eps * x[0], x[1], x[2], x[3] * w.powi(m), x[4], x[5]]
        }
        _ => x.to_vec(),
    }
}

fn event_value(sys: &FlowSystem, ev: Ev, x: &[f64], dx: &[f64]) -> f64 {
    match ev {
        Ev::Level(l) => sys.z(x) - l,
        Ev::Turning => dx[0],
        Ev::TMax(t) => x[4] - t,
        Ev::AMax(a) => x[5] - a,
    }
}

/// Bisection on the dense output of one step.
fn locate(sys: &FlowSystem, ev: Ev, dense: &DenseStep, g_old: f64) -> Result<f64> {
    let (mut lo, mut hi) = (dense.s_old, dense.s_new());
    let mut dx = vec![0.0; 6];
    let mut g = |s: f64| -> Result<f64> {
        let x = dense.eval_vec(s);
        if let Ev::Turning = ev {
            sys.rhs(s, &x, &mut dx)?;
        }
        Ok(event_value(sys, ev, &x, &dx))
    };
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == g_old.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{unit_speed_state, waist_state_with_angle};
    use crate::metric::CircleMetric;
    use crate::scaling::ScalingFunction;

    fn warped() -> MetricFamily {
        MetricFamily::warped(2, ScalingFunction::power(4.0).unwrap(), CircleMetric::Flat, 0.0).unwrap()
    }

    #[test]
    fn passes_when_momentum_below_waist() {
        let fam = warped();
        let st = unit_speed_state(&fam, 0.5, -1.0, 0.0, 0.2, true).unwrap();
        let tr = integrate(&fam, 0.5, &st, &StopCondition::reach_z(1.0).or_t_max(100.0), 1e-10).unwrap();
        assert_eq!(tr.end, TraceEnd::Event(EventKind::ZCrossing { level: 1.0 }));
        assert!((tr.final_state.z - 1.0).abs() < 1e-12);
        assert!(tr.neck_steps > 0);
    }

    #[test]
    fn turns_back_when_momentum_above_waist() {
        let fam = warped();
        let st = unit_speed_state(&fam, 0.5, -1.0, 0.0, 0.3, true).unwrap();
        let tr = integrate(&fam, 0.5, &st, &StopCondition::turning_point().or_t_max(100.0), 1e-10).unwrap();
        let z0 = -(0.3f64 * 0.3 - 0.0625).powf(0.25);
        assert_eq!(tr.end, TraceEnd::Event(EventKind::TurningPoint));
        assert!((tr.final_state.z - z0).abs() < 1e-8, "{} vs {z0}", tr.final_state.z);
    }

    #[test]
    fn reversal_returns_to_start() {
        let fam = MetricFamily::morse_model(2, 0.7, ScalingFunction::power(2.0).unwrap()).unwrap();
        let st = waist_state_with_angle(&fam, 0.2, 0.4, 1.2).unwrap();
        let fw = integrate(&fam, 0.2, &st, &StopCondition::reach_z(0.8), 1e-12).unwrap();
        let back = integrate(&fam, 0.2, &fw.final_state.reversed(), &StopCondition::reach_z(0.0), 1e-12).unwrap();
        let end = back.final_state;
        assert!((end.y - st.y).abs() < 1e-7 && (end.eta + st.eta).abs() < 1e-7 && (end.xi + st.xi).abs() < 1e-7);
    }

    #[test]
    fn rejects_empty_stop() {
        let fam = warped();
        let st = unit_speed_state(&fam, 0.5, -1.0, 0.0, 0.2, true).unwrap();
        let stop = StopCondition { t_max: None, ..StopCondition::turning_point() };
        let stop = StopCondition { stop_at_turning_point: false, ..stop };
        assert!(integrate(&fam, 0.5, &st, &stop, 1e-10).is_err());
    }
}
