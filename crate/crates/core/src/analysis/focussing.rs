//! Poincare map from the waist to a level `z = z1`, focussing onto the
//! geodesics leaving the minima of `S+`, and the front-face limit.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_line, fit_power_law, LineFit};
use crate::error::{Error, Result};
use crate::flow::ode::{self, Control, DenseSolution, OdeOptions, OdeSystem};
use crate::flow::{integrate_with, unit_speed_state, FlowOptions, StopCondition};
use crate::metric::{BlowupPoint, MetricFamily};
use crate::rescaled::{
    critical_points, critical_reference, integrate_front_face, rescaled_rhs, CriticalPoint, CriticalSide, FrontFace,
    FrontFaceOptions, FrontFaceSample, FrontState, GammaReference, PointKind, RescaledState,
};

/// A point of the section `z = z1`: `E = eps / z1`, the cross-section angle
/// (not reduced) and `theta = eta / w^(2k-1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub e: f64,
    pub y: f64,
    pub xi: f64,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareEndpoint {
    pub y0: f64,
    pub theta0: f64,
    pub end: Option<SectionPoint>,
    pub error: Option<String>,
}

/// `y` reduced to the representative of `y - y_ref` nearest to zero.
pub fn wrapped_difference(y: f64, y_ref: f64) -> f64 {
    (y - y_ref + PI).rem_euclid(2.0 * PI) - PI
}

/// Follows the upward unit-speed geodesics from `(0, y0)` with `eta = theta0 w(eps, 0)^(2k-1)`
/// to their first crossing of `z = z1`.
pub fn poincare_map(
    fam: &MetricFamily,
    eps: f64,
    starts: &[(f64, f64)],
    z1: f64,
    tol: f64,
) -> Result<Vec<PoincareEndpoint>> {
    if !(eps > 0.0 && z1 > 0.0) {
        return Err(Error::Config(format!("need eps > 0 and z1 > 0, got eps = {eps}, z1 = {z1}")));
    }
    let m = 2 * fam.k as i32 - 1;
    let w0 = fam.sf.w(eps, 0.0)?;
    let w1 = fam.sf.w(eps, z1)?;
    let opts = FlowOptions { record_samples: false, ..FlowOptions::with_tol(tol) };
    Ok(starts
        .par_iter()
        .map(|&(y0, theta0)| {
            let run = || -> Result<SectionPoint> {
                let st = unit_speed_state(fam, eps, 0.0, y0, theta0 * w0.powi(m), true)?;
                let tr = integrate_with(fam, eps, &st, &StopCondition::reach_z(z1), &opts)?;
                let ev = tr
                    .crossing(z1)
                    .ok_or_else(|| Error::StepFailure { at: tr.final_t, reason: format!("did not reach z = {z1}") })?;
                Ok(SectionPoint { e: eps / z1, y: ev.state.y, xi: ev.state.xi, theta: ev.state.eta / w1.powi(m) })
            };
            match run() {
                Ok(end) => PoincareEndpoint { y0, theta0, end: Some(end), error: None },
                Err(e) => PoincareEndpoint { y0, theta0, end: None, error: Some(e.to_string()) },
            }
        })
        .collect())
}

/// `n` equidistributed angles `2 pi j / n` with a common `theta0`.
pub fn equidistributed_seeds(n: usize, theta0: f64) -> Vec<(f64, f64)> {
    (0..n).map(|j| (2.0 * PI * j as f64 / n as f64, theta0)).collect()
}

#[derive(Clone, Debug)]
pub struct FocussingConfig {
    pub fam: MetricFamily,
    pub epsilons: Vec<f64>,
    pub seeds: Vec<(f64, f64)>,
    pub z1: f64,
    pub tol: f64,
    /// Offset from the critical point at which the reference geodesics are seeded.
    pub delta0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocussingRow {
    pub epsilon: f64,
    pub seed: usize,
    pub y0: f64,
    pub theta0: f64,
    pub end: Option<SectionPoint>,
    /// Distance to the nearest minimum target.
    pub dist_to_min: Option<f64>,
    /// Index into the critical points of the nearest target.
    pub basin: Option<usize>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    /// Geometric mean of the distances of the seeds in minimum basins.
    pub mean_dist: Option<f64>,
    pub in_minimum_basins: usize,
    /// Seeds per critical point.
    pub histogram: Vec<usize>,
    /// Circular spread `1 - |mean e^(iy)|` of the endpoint angles.
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractorCount {
    pub y: f64,
    pub kind: PointKind,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocussingReport {
    pub family: String,
    pub z1: f64,
    /// No isolated critical points: `S+` is constant and nothing focusses.
    pub constant_mode: bool,
    pub critical_points: Vec<CriticalPoint>,
    /// Target point of every critical point on the section at `E = 0`.
    pub targets: Vec<SectionPoint>,
    /// The `eps = 0` geodesics behind the targets, for ansatz families.
    pub references: Vec<GammaReference>,
    pub rows: Vec<FocussingRow>,
    pub summaries: Vec<EpsilonSummary>,
    /// `log mean_dist` against `log eps`; the slope estimates the focussing rate.
    pub rho_fit: Option<LineFit>,
    /// Endpoint counts per critical point at the smallest `eps`, largest first.
    pub attractors: Vec<AttractorCount>,
    /// `(epsilon, seed)` of vertical seeds that ended in the basin of a maximum.
    pub maximum_basin_seeds: Vec<(f64, usize)>,
    pub warnings: Vec<String>,
}

fn distance(p: &SectionPoint, t: &SectionPoint) -> f64 {
    let dy = wrapped_difference(p.y, t.y);
    ((p.e - t.e).powi(2) + dy * dy + (p.theta - t.theta).powi(2)).sqrt()
}

pub fn focussing_experiment(cfg: &FocussingConfig) -> Result<FocussingReport> {
    let fam = &cfg.fam;
    let need = 2 * fam.k as i32 - 2;
    if fam.kappa != need {
        return Err(Error::Config(format!("focussing needs kappa = 2k - 2 = {need}, got {}", fam.kappa)));
    }
    if cfg.epsilons.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::Config("focussing needs epsilons and seeds".into()));
    }
    let ff = FrontFace::new(fam)?;
    let cps = critical_points(&ff, CriticalSide::Plus, 2048)?;
    let constant_mode = cps.is_empty();
    let mut warnings = Vec::new();
    let (targets, references) = if fam.ansatz().is_some() {
        let refs = cps.iter().map(|cp| critical_reference(fam, cp, cfg.z1, cfg.delta0)).collect::<Result<Vec<_>>>()?;
        for (cp, r) in cps.iter().zip(&refs) {
            if r.halving_shift > 1e-5 {
                warnings.push(format!(
                    "reference from y = {} moved by {:e} when its seed offset was halved",
                    cp.y, r.halving_shift
                ));
            }
        }
        let t = refs.iter().map(|r| SectionPoint { e: 0.0, y: r.y, xi: r.xi, theta: r.theta }).collect();
        (t, refs)
    } else {
        // embedded surfaces: the targets sit above the critical points with theta = 0
        (cps.iter().map(|cp| SectionPoint { e: 0.0, y: cp.y, xi: 1.0, theta: 0.0 }).collect(), Vec::new())
    };

    let mut rows = Vec::new();
    for &eps in &cfg.epsilons {
        let ends = poincare_map(fam, eps, &cfg.seeds, cfg.z1, cfg.tol)?;
        for (i, pe) in ends.into_iter().enumerate() {
            let mut row = FocussingRow {
                epsilon: eps,
                seed: i,
                y0: pe.y0,
                theta0: pe.theta0,
                end: pe.end,
                dist_to_min: None,
                basin: None,
                error: pe.error,
            };
            if let Some(end) = &pe.end {
                let nearest = |filter: &dyn Fn(&CriticalPoint) -> bool| {
                    cps.iter()
                        .zip(&targets)
                        .enumerate()
                        .filter(|(_, (cp, _))| filter(cp))
                        .map(|(j, (_, t))| (j, distance(end, t)))
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                };
                row.basin = nearest(&|_| true).map(|b| b.0);
                row.dist_to_min = nearest(&|cp| cp.kind == PointKind::Min).map(|b| b.1);
            }
            rows.push(row);
        }
    }

    let mut summaries = Vec::new();
    let mut maximum_basin_seeds = Vec::new();
    for &eps in &cfg.epsilons {
        let here: Vec<&FocussingRow> = rows.iter().filter(|r| r.epsilon == eps).collect();
        let mut histogram = vec![0; cps.len()];
        let mut logs = Vec::new();
        let (mut sc, mut ss) = (0.0, 0.0);
        for r in &here {
            if let Some(end) = &r.end {
                sc += end.y.cos();
                ss += end.y.sin();
            }
            let Some(b) = r.basin else { continue };
            histogram[b] += 1;
            match cps[b].kind {
                PointKind::Min => {
                    if let Some(d) = r.dist_to_min {
                        logs.push(d.ln());
                    }
                }
                PointKind::Max if r.theta0 == 0.0 => maximum_basin_seeds.push((eps, r.seed)),
                _ => {}
            }
        }
        let n_ok = here.iter().filter(|r| r.end.is_some()).count().max(1) as f64;
        let mean_dist = (!logs.is_empty()).then(|| (logs.iter().sum::<f64>() / logs.len() as f64).exp());
        summaries.push(EpsilonSummary {
            epsilon: eps,
            mean_dist,
            in_minimum_basins: logs.len(),
            histogram,
            spread: 1.0 - (sc * sc + ss * ss).sqrt() / n_ok,
        });
    }

    let fitted: Vec<(f64, f64)> = summaries.iter().filter_map(|s| s.mean_dist.map(|d| (s.epsilon, d))).collect();
    let rho_fit = if fitted.len() >= 2 && !constant_mode {
        let (x, y): (Vec<f64>, Vec<f64>) = fitted.into_iter().unzip();
        fit_power_law(&x, &y).ok()
    } else {
        None
    };
    if let Some(f) = &rho_fit {
        if f.r2 < 0.9 {
            warnings.push(format!("focussing-rate regression is poor: R^2 = {:.3}", f.r2));
        }
    }

    let attractors = {
        let smallest = cfg.epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
        let s = summaries.iter().find(|s| s.epsilon == smallest).expect("summary per epsilon");
        let mut a: Vec<AttractorCount> =
            cps.iter().zip(&s.histogram).map(|(cp, &count)| AttractorCount { y: cp.y, kind: cp.kind, count }).collect();
        a.sort_by(|p, q| q.count.cmp(&p.count).then(p.y.total_cmp(&q.y)));
        a
    };

    Ok(FocussingReport {
        family: fam.describe(),
        z1: cfg.z1,
        constant_mode,
        critical_points: cps,
        targets,
        references,
        rows,
        summaries,
        rho_fit,
        attractors,
        maximum_basin_seeds,
        warnings,
    })
}

/// An isometry `y -> s y + shift` (`s = -1` when `flip`) of the cross-section,
/// acting on seeds as `(y, theta) -> (s y + shift, s theta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionSymmetry {
    pub flip: bool,
    pub shift: f64,
}

impl CrossSectionSymmetry {
    pub fn apply(&self, y: f64) -> f64 {
        if self.flip {
            -y + self.shift
        } else {
            y + self.shift
        }
    }
}

/// Number of seed pairs related by `sym` whose basins are not related by `sym`.
/// Seeds whose image is not itself a seed are skipped.
pub fn basin_symmetry_violations(rep: &FocussingReport, sym: &CrossSectionSymmetry) -> usize {
    let s = if sym.flip { -1.0 } else { 1.0 };
    let mut bad = 0;
    for a in &rep.rows {
        let Some(ba) = a.basin else { continue };
        let image = rep.rows.iter().find(|b| {
            b.epsilon == a.epsilon
                && wrapped_difference(b.y0, sym.apply(a.y0)).abs() < 1e-9
                && (b.theta0 - s * a.theta0).abs() < 1e-12
        });
        let Some(b) = image else { continue };
        let Some(bb) = b.basin else { continue };
        let want = sym.apply(rep.critical_points[ba].y);
        if wrapped_difference(rep.critical_points[bb].y, want).abs() > 1e-6 {
            bad += 1;
        }
    }
    bad
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontFaceLimitReport {
    pub epsilons: Vec<f64>,
    /// `sup_tau` of the Euclidean distance in `(Z / f(Z), y, theta)`.
    pub deviations: Vec<f64>,
    /// Successive ratios `deviation(eps_{i+1}) / deviation(eps_i)`.
    pub ratios: Vec<f64>,
    pub tau_max: f64,
    /// The front-face solution on the comparison grid.
    pub front_face: Vec<FrontFaceSample>,
}

struct ZChartSystem<'a> {
    fam: &'a MetricFamily,
    eps: f64,
}

impl OdeSystem for ZChartSystem<'_> {
    fn dim(&self) -> usize {
        4
    }

    /// `[Z, y, xi, theta]` in rescaled time.
    fn rhs(&self, _s: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let rs = RescaledState { pt: BlowupPoint::Z { zc: x[0], eps: self.eps }, y: x[1], xi: x[2], theta: x[3] };
        let t = rescaled_rhs(self.fam, &rs)?;
        dx.copy_from_slice(&[t.d_coord, t.dy, t.dxi, t.dtheta]);
        Ok(())
    }
}

/// Compares the rescaled flow at each `eps` with the front-face flow on `tau in [0, tau_max]`,
/// all started at the waist from `(y0, theta0)` with unit speed.
pub fn front_face_limit_check(
    fam: &MetricFamily,
    epsilons: &[f64],
    y0: f64,
    theta0: f64,
    tau_max: f64,
    tol: f64,
) -> Result<FrontFaceLimitReport> {
    let ff = FrontFace::new(fam)?;
    let n = 400;
    let dt = tau_max / n as f64;
    let opts = FrontFaceOptions {
        tau_max,
        stop_on_convergence: false,
        ode_tol: tol,
        grid_dt: Some(dt),
        ..FrontFaceOptions::default()
    };
    let lim = integrate_front_face(&ff, &FrontState::at_z(0.0, y0, theta0), &opts)?;
    let rho = |zc: f64| zc / fam.sf.f(zc).0;
    let reference: Vec<[f64; 3]> = lim.grid.iter().map(|s| [rho(s.chart.zc()), s.y, s.theta]).collect();
    let m = 2 * fam.k as i32 - 1;
    let deviations = epsilons
        .par_iter()
        .map(|&eps| {
            let w0 = fam.sf.w(eps, 0.0)?;
            let st = unit_speed_state(fam, eps, 0.0, y0, theta0 * w0.powi(m), true)?;
            let sys = ZChartSystem { fam, eps };
            let mut dense = DenseSolution::default();
            ode::integrate(&sys, 0.0, &[0.0, y0, st.xi, theta0], tau_max, &OdeOptions::with_tol(tol), |v| {
                dense.push(v.dense);
                Ok(Control::Continue)
            })?;
            let mut sup = 0.0f64;
            for (j, r) in reference.iter().enumerate() {
                let tau = (j as f64 * dt).min(tau_max);
                let x = dense.eval(tau).ok_or(Error::NoConvergence(tau))?;
                let d = ((rho(x[0]) - r[0]).powi(2) + (x[1] - r[1]).powi(2) + (x[3] - r[2]).powi(2)).sqrt();
                sup = sup.max(d);
            }
            Ok(sup)
        })
        .collect::<Result<Vec<f64>>>()?;
    let ratios = deviations.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(FrontFaceLimitReport { epsilons: epsilons.to_vec(), deviations, ratios, tau_max, front_face: lim.grid })
}

/// Exponential decay rate of `|theta|` along the front-face flow from `(Z = 0, y0, theta0)`,
/// fitted on `tau in [t0, t1]`.
pub fn theta_decay_rate(ff: &FrontFace, y0: f64, theta0: f64, t0: f64, t1: f64, tol: f64) -> Result<LineFit> {
    let opts = FrontFaceOptions {
        tau_max: t1,
        stop_on_convergence: false,
        ode_tol: tol,
        grid_dt: Some((t1 - t0) / 50.0),
        ..FrontFaceOptions::default()
    };
    let r = integrate_front_face(ff, &FrontState::at_z(0.0, y0, theta0), &opts)?;
    let (x, y): (Vec<f64>, Vec<f64>) = r
        .grid
        .iter()
        .filter(|s| s.tau >= t0 - 1e-9 && s.tau <= t1 + 1e-9 && s.theta != 0.0)
        .map(|s| (s.tau, s.theta.abs().ln()))
        .unzip();
    let f = fit_line(&x, &y)?;
    Ok(LineFit { slope: -f.slope, ..f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::ScalingFunction;

    #[test]
    fn rotational_symmetry_commutes_with_the_map() {
        let fam = MetricFamily::morse_model(2, 0.0, ScalingFunction::power(2.0).unwrap()).unwrap();
        let starts = [(0.3, 0.2), (1.3, 0.2), (2.0, 0.0)];
        let e = poincare_map(&fam, 0.1, &starts, 1.0, 1e-11).unwrap();
        let (a, b) = (e[0].end.unwrap(), e[1].end.unwrap());
        assert!((b.y - a.y - 1.0).abs() < 1e-8 && (b.theta - a.theta).abs() < 1e-8);
        assert!((e[2].end.unwrap().y - 2.0).abs() < 1e-10);
    }

    #[test]
    fn wrapping() {
        assert!((wrapped_difference(0.1, 2.0 * PI - 0.1) - 0.2).abs() < 1e-15);
        assert!((wrapped_difference(3.0 * PI + 0.5, 0.0) + PI - 0.5).abs() < 1e-12);
    }
}
