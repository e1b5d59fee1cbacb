//! Experiment drivers for the winding law, the trichotomy of warped products
//! and the drift of angular momentum near the waist.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_line, fit_power_law, LineFit};
use super::winding::{
    clairaut_classify, warped_angular_length, winding_constant_phi, LengthForm, Trichotomy, TrichotomyReport,
    WarpProfile,
};
use crate::error::{Error, Result};
use crate::flow::{
    angular_momentum, hamilton_rhs, integrate_with, unit_speed_state, waist_state_with_angle, FlowOptions,
    GeodesicTrace, StopCondition,
};
use crate::metric::{CircleMetric, MetricFamily};
use crate::scaling::ScalingFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingCell {
    pub epsilon: f64,
    pub phi: f64,
    /// `cos phi`.
    pub v0: f64,
    pub angl_measured: Option<f64>,
    /// `C_phi cos(phi) / eps^(k-1)`.
    pub angl_predicted: f64,
    pub rel_error: Option<f64>,
    /// `R = angl eps^(k-1) - C_phi cos(phi)` for the first start angle.
    pub remainder: Option<f64>,
    /// `max |R|` over all start angles.
    pub remainder_envelope: Option<f64>,
    pub max_energy_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingConstantValue {
    pub phi: f64,
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderFit {
    pub phi: f64,
    /// `log max|R|` against `log eps`.
    pub power: Option<LineFit>,
    /// `log max|R| - log eps` against `log log(1/eps)`; slope 1 for `R ~ eps log(1/eps)`.
    pub log_corrected: Option<LineFit>,
    /// `max|R|` decreases along the sweep ordered by decreasing `eps`, so the
    /// measured-to-predicted ratio tends to 1 uniformly in the start angle.
    pub envelope_decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingReport {
    pub family: String,
    pub k: u32,
    pub z0: f64,
    pub constants: Vec<WindingConstantValue>,
    pub cells: Vec<WindingCell>,
    pub fits: Vec<RemainderFit>,
}

#[derive(Clone, Debug)]
pub struct WindingConfig {
    pub fam: MetricFamily,
    pub phis: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Cross-section positions at the waist; the first one supplies the per-cell
    /// measurement, all of them enter the remainder envelope.
    pub start_angles: Vec<f64>,
    pub z0: f64,
    pub tol: f64,
}

/// Angular length from the waist up to `z0`, for a geodesic leaving the waist at angle `phi`.
pub fn winding_angle(fam: &MetricFamily, eps: f64, y0: f64, phi: f64, z0: f64, tol: f64) -> Result<GeodesicTrace> {
    let st = waist_state_with_angle(fam, eps, y0, phi)?;
    let opts = FlowOptions { record_samples: false, ..FlowOptions::with_tol(tol) };
    let tr = integrate_with(fam, eps, &st, &StopCondition::reach_z(z0), &opts)?;
    if tr.crossing(z0).is_none() {
        return Err(Error::StepFailure { at: tr.final_t, reason: format!("did not reach z = {z0}") });
    }
    Ok(tr)
}

pub fn winding_experiment(cfg: &WindingConfig) -> Result<WindingReport> {
    if cfg.phis.iter().any(|p| !(*p > 0.0 && *p < std::f64::consts::FRAC_PI_2)) {
        return Err(Error::Config("impact angles must lie in (0, pi/2)".into()));
    }
    if cfg.epsilons.iter().any(|e| !(*e > 0.0 && *e < cfg.z0)) {
        return Err(Error::Config("epsilons must lie in (0, z0)".into()));
    }
    if cfg.start_angles.is_empty() {
        return Err(Error::Config("need at least one start angle".into()));
    }
    let k = cfg.fam.k;
    let km1 = k as i32 - 1;
    let constants = cfg
        .phis
        .iter()
        .map(|&phi| {
            let q = winding_constant_phi(phi, &cfg.fam.sf, k)?;
            Ok(WindingConstantValue { phi, value: q.value, error: q.error })
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, f64)> = (0..cfg.phis.len()).flat_map(|i| cfg.epsilons.iter().map(move |&e| (i, e))).collect();
    let cells: Vec<WindingCell> = jobs
        .par_iter()
        .map(|&(i, eps)| {
            let phi = cfg.phis[i];
            let c = constants[i].value;
            let v0 = phi.cos();
            let predicted = c * v0 / eps.powi(km1);
            let mut cell = WindingCell {
                epsilon: eps,
                phi,
                v0,
                angl_measured: None,
                angl_predicted: predicted,
                rel_error: None,
                remainder: None,
                remainder_envelope: None,
                max_energy_error: None,
                error: None,
            };
            let runs: Result<Vec<GeodesicTrace>> =
                cfg.start_angles.iter().map(|&y0| winding_angle(&cfg.fam, eps, y0, phi, cfg.z0, cfg.tol)).collect();
            match runs {
                Ok(trs) => {
                    let a = trs[0].angular_length;
                    cell.angl_measured = Some(a);
                    cell.rel_error = Some((a - predicted) / predicted);
                    cell.remainder = Some(a * eps.powi(km1) - c * v0);
                    cell.remainder_envelope =
                        Some(trs.iter().map(|t| (t.angular_length * eps.powi(km1) - c * v0).abs()).fold(0.0, f64::max));
                    cell.max_energy_error = Some(trs.iter().map(|t| t.max_energy_error).fold(0.0, f64::max));
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect();
    let fits = cfg
        .phis
        .iter()
        .map(|&phi| {
            let mut rows: Vec<&WindingCell> = cells.iter().filter(|c| c.phi == phi && c.remainder.is_some()).collect();
            rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
            let eps: Vec<f64> = rows.iter().map(|c| c.epsilon).collect();
            let r: Vec<f64> = rows.iter().map(|c| c.remainder_envelope.unwrap()).collect();
            let power = fit_power_law(&eps, &r).ok();
            let lx: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln().ln()).collect();
            let ly: Vec<f64> = eps.iter().zip(&r).map(|(e, r)| r.abs().ln() - e.ln()).collect();
            let log_corrected = fit_line(&lx, &ly).ok();
            let envelope_decreasing = r.windows(2).all(|w| w[1] < w[0]);
            RemainderFit { phi, power, log_corrected, envelope_decreasing }
        })
        .collect();
    Ok(WindingReport { family: cfg.fam.describe(), k, z0: cfg.z0, constants, cells, fits })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrichotomyConfig {
    pub p: f64,
    pub k: u32,
    pub eps: f64,
    pub angular_momenta: Vec<f64>,
    /// The geodesics start at `z = -1` moving up and stop at `z = 1`, at a
    /// turning point, or at this time.
    pub t_max: f64,
    pub tol: f64,
}

/// Warped product `dz^2 + W^2 dy^2` with `W = w_p(eps, z)^k`: predicted and simulated fate
/// of the geodesic with angular momentum `L` starting at `z = -1`.
pub fn trichotomy_experiment(cfg: &TrichotomyConfig) -> Result<Vec<TrichotomyReport>> {
    Ok(trichotomy_runs(cfg)?.into_iter().map(|(r, _)| r).collect())
}

/// As [`trichotomy_experiment`], keeping the integrated traces.
pub fn trichotomy_runs(cfg: &TrichotomyConfig) -> Result<Vec<(TrichotomyReport, GeodesicTrace)>> {
    let sf = ScalingFunction::power(cfg.p)?;
    let fam = MetricFamily::warped(cfg.k, sf, CircleMetric::Flat, 0.0)?;
    let prof = WarpProfile { p: cfg.p, k: cfg.k, eps: cfg.eps };
    if prof.w(-1.0) <= cfg.angular_momenta.iter().cloned().fold(0.0, f64::max) {
        return Err(Error::Config("every L must stay below W(-1) so the start is admissible".into()));
    }
    cfg.angular_momenta
        .par_iter()
        .map(|&l| {
            let w_min = prof.w_min();
            let classification = clairaut_classify(l, w_min);
            let turning_point = (classification == Trichotomy::TurnBack).then(|| prof.turning_point(l)).flatten();
            let angular_length = if classification == Trichotomy::Pass {
                Some(warped_angular_length(&prof, l, -1.0, 1.0, LengthForm::ZIntegral)?)
            } else {
                None
            };
            let st = unit_speed_state(&fam, cfg.eps, -1.0, 0.0, l, true)?;
            let stop = StopCondition { stop_at_turning_point: true, ..StopCondition::reach_z(1.0).or_t_max(cfg.t_max) };
            let tr = integrate_with(&fam, cfg.eps, &st, &stop, &FlowOptions::with_tol(cfg.tol))?;
            let tp = tr.turning_points().next().map(|e| e.state.z);
            let simulated = if tr.crossing(1.0).is_some() {
                Trichotomy::Pass
            } else if tp.is_some() {
                Trichotomy::TurnBack
            } else {
                Trichotomy::Asymptotic
            };
            let zdot = hamilton_rhs(&fam, cfg.eps, &tr.final_state)?.dz;
            let crossed = tr.samples.iter().any(|s| s.z > 0.0) || tr.final_state.z > 0.0;
            let rep = TrichotomyReport {
                l,
                w_min,
                classification,
                turning_point,
                angular_length,
                simulated: Some(simulated),
                simulated_turning_point: tp,
                final_zdot: Some(zdot),
                crossed_waist: Some(crossed),
            };
            Ok((rep, tr))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftCell {
    pub epsilon: f64,
    pub phi: f64,
    /// Angular momentum at the waist.
    pub l0: f64,
    pub radii: Vec<f64>,
    /// `sup_{|z| <= r} |L(z) - L0|` for each radius.
    pub drift: Vec<f64>,
    /// Least-squares slope of `drift` against `r` through the origin.
    pub linear_coefficient: f64,
    /// `max_r drift(r) / r`.
    pub max_ratio: f64,
}

/// Samples `L` along the geodesic through the waist at angle `phi`, on `|z| <= max(radii)`.
pub fn momentum_drift(fam: &MetricFamily, eps: f64, phi: f64, radii: &[f64], tol: f64) -> Result<DriftCell> {
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    if !(r_max > 0.0) {
        return Err(Error::Config("drift radii must be positive".into()));
    }
    let st = waist_state_with_angle(fam, eps, 0.0, phi)?;
    let l0 = angular_momentum(fam, eps, st.z, st.y, st.eta)?;
    let opts = FlowOptions { dense_samples: 50, ..FlowOptions::with_tol(tol) };
    let reach = 1.2 * r_max;
    let fwd = integrate_with(fam, eps, &st, &StopCondition::reach_z(reach), &opts)?;
    let bwd = integrate_with(fam, eps, &st.reversed(), &StopCondition::reach_z(-reach), &opts)?;
    let pts: Vec<(f64, f64)> = fwd.samples.iter().chain(&bwd.samples).map(|s| (s.z.abs(), (s.l - l0).abs())).collect();
    let drift: Vec<f64> =
        radii.iter().map(|&r| pts.iter().filter(|p| p.0 <= r).map(|p| p.1).fold(0.0, f64::max)).collect();
    let srd: f64 = radii.iter().zip(&drift).map(|(r, d)| r * d).sum();
    let srr: f64 = radii.iter().map(|r| r * r).sum();
    let max_ratio = radii.iter().zip(&drift).map(|(r, d)| d / r).fold(0.0, f64::max);
    Ok(DriftCell { epsilon: eps, phi, l0, radii: radii.to_vec(), drift, linear_coefficient: srd / srr, max_ratio })
}

pub fn momentum_drift_experiment(
    fam: &MetricFamily,
    epsilons: &[f64],
    phis: &[f64],
    radii: &[f64],
    tol: f64,
) -> Result<Vec<DriftCell>> {
    let jobs: Vec<(f64, f64)> = epsilons.iter().flat_map(|&e| phis.iter().map(move |&p| (e, p))).collect();
    jobs.par_iter().map(|&(e, p)| momentum_drift(fam, e, p, radii, tol)).collect()
}

/// `n` radii spaced geometrically over `[lo, hi]`.
pub fn geometric_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trichotomy_matches_prediction() {
        let cfg = TrichotomyConfig { p: 4.0, k: 2, eps: 0.5, angular_momenta: vec![0.2, 0.3], t_max: 50.0, tol: 1e-11 };
        let r = trichotomy_experiment(&cfg).unwrap();
        assert_eq!(r[0].simulated, Some(Trichotomy::Pass));
        assert_eq!(r[1].simulated, Some(Trichotomy::TurnBack));
        assert!((r[1].simulated_turning_point.unwrap() - r[1].turning_point.unwrap()).abs() < 1e-8);
    }

    #[test]
    fn warped_momentum_is_constant() {
        let fam = MetricFamily::warped(2, ScalingFunction::power(2.0).unwrap(), CircleMetric::Flat, 0.0).unwrap();
        let c = momentum_drift(&fam, 0.1, 0.7, &geometric_radii(1e-3, 1e-1, 5), 1e-11).unwrap();
        assert!(c.drift.iter().all(|d| *d < 1e-8), "{:?}", c.drift);
    }
}
