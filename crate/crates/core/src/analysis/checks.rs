//! Cross-checks: linearizations at the corner critical points against their
//! closed forms, and the Hamiltonian flow against the ambient geodesic equations.

use nalgebra::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{
    ambient_oracle_integrate, integrate_with, waist_state_with_angle, FlowOptions, LagrangianState, StopCondition,
};
use crate::metric::{MetricFamily, MetricVariant};
use crate::rescaled::{
    critical_points, eigenvalues_analytic, linearization_fd, CriticalPoint, CriticalSide, FrontFace, LinearizationSite,
    PointKind,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub y: f64,
    pub kind: PointKind,
    pub site: LinearizationSite,
    /// `[re, im]`, in the order matched to `numeric`.
    pub analytic: Vec<[f64; 2]>,
    pub numeric: Vec<[f64; 2]>,
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenCheckReport {
    pub family: String,
    pub critical_points: Vec<CriticalPoint>,
    pub rows: Vec<EigenRow>,
    /// `(y, S+(y))` on a uniform grid, for plotting.
    pub potential: Vec<[f64; 2]>,
}

fn match_eigenvalues(analytic: &[Complex<f64>], numeric: &[Complex<f64>]) -> (Vec<[f64; 2]>, f64) {
    let mut left: Vec<Complex<f64>> = analytic.to_vec();
    let mut ordered = Vec::new();
    let mut worst = 0.0f64;
    for n in numeric {
        let (i, d) = left
            .iter()
            .enumerate()
            .map(|(i, a)| (i, (a - n).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("same count");
        worst = worst.max(d);
        let a = left.remove(i);
        ordered.push([a.re, a.im]);
    }
    (ordered, worst)
}

/// Finite-difference Jacobian eigenvalues at every critical point of `S+`, matched to
/// `{-1, mu+, mu-}` on the front face and `{+1, mu+, mu-}` inside `M+` (ansatz families only).
pub fn eigen_check(fam: &MetricFamily) -> Result<EigenCheckReport> {
    let ff = FrontFace::new(fam)?;
    let cps = critical_points(&ff, CriticalSide::Plus, 2048)?;
    let sw = if fam.kappa == 2 * fam.k as i32 - 2 { 1.0 } else { 0.0 };
    let mut sites = vec![LinearizationSite::FrontFace];
    if fam.ansatz().is_some() {
        sites.push(LinearizationSite::MPlus);
    }
    let mut rows = Vec::new();
    for cp in &cps {
        let (mp, mm) = eigenvalues_analytic(sw * cp.hess_eigs[0], fam.k);
        for &site in &sites {
            let off = match site {
                LinearizationSite::FrontFace => -1.0,
                LinearizationSite::MPlus => 1.0,
            };
            let jac = linearization_fd(&ff, cp, site)?;
            let numeric: Vec<Complex<f64>> = jac.complex_eigenvalues().iter().cloned().collect();
            let (analytic, max_error) = match_eigenvalues(&[Complex::new(off, 0.0), mp, mm], &numeric);
            rows.push(EigenRow {
                y: cp.y,
                kind: cp.kind,
                site,
                analytic,
                numeric: numeric.iter().map(|c| [c.re, c.im]).collect(),
                max_error,
            });
        }
    }
    let n = 256;
    let potential = (0..=n)
        .map(|i| {
            let y = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [y, ff.corner(CriticalSide::Plus, y).s]
        })
        .collect();
    Ok(EigenCheckReport { family: fam.describe(), critical_points: cps, rows, potential })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub epsilon: f64,
    pub phi: f64,
    pub y0: f64,
    pub z_hamiltonian: f64,
    pub y_hamiltonian: f64,
    pub t_hamiltonian: f64,
    pub z_oracle: f64,
    pub phi_oracle: f64,
    pub t_oracle: f64,
    /// `max(|dz|, |dphi|)` at the endpoint.
    pub endpoint_error: f64,
}

/// Integrates the elliptic neck from the waist at angle `phi` to `z = z_end` with both the
/// Hamiltonian flow and the ambient second-order equations.
pub fn oracle_check(
    fam: &MetricFamily,
    epsilons: &[f64],
    phis: &[f64],
    start_angles: &[f64],
    z_end: f64,
    tol: f64,
) -> Result<Vec<OracleRow>> {
    let MetricVariant::EllipticSurface { delta } = fam.variant else {
        return Err(Error::UnsupportedFamily("the ambient oracle covers the elliptic surface".into()));
    };
    let jobs: Vec<(f64, f64, f64)> = epsilons
        .iter()
        .flat_map(|&e| phis.iter().flat_map(move |&p| start_angles.iter().map(move |&y| (e, p, y))))
        .collect();
    jobs.par_iter()
        .map(|&(eps, phi, y0)| {
            let st = waist_state_with_angle(fam, eps, y0, phi)?;
            let stop = StopCondition::reach_z(z_end);
            let opts = FlowOptions { record_samples: false, ..FlowOptions::with_tol(tol) };
            let h = integrate_with(fam, eps, &st, &stop, &opts)?;
            let ev = *h.crossing(z_end).ok_or(Error::NoConvergence(h.final_t))?;
            let l0 = LagrangianState::from_phase(fam, eps, &st)?;
            let o = ambient_oracle_integrate(fam.k, delta, &fam.sf, eps, &l0, &stop, tol)?;
            let (zh, yh) = (ev.state.z, ev.state.y);
            let (zo, po) = (o.final_state.z, o.final_state.phi);
            Ok(OracleRow {
                epsilon: eps,
                phi,
                y0,
                z_hamiltonian: zh,
                y_hamiltonian: yh,
                t_hamiltonian: ev.t,
                z_oracle: zo,
                phi_oracle: po,
                t_oracle: o.final_t,
                endpoint_error: (zh - zo).abs().max((yh - po).abs()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::ScalingFunction;

    #[test]
    fn morse_model_eigenvalues() {
        let fam = MetricFamily::morse_model(2, 0.7, ScalingFunction::power(2.0).unwrap()).unwrap();
        let r = eigen_check(&fam).unwrap();
        assert_eq!(r.rows.len(), 8);
        assert!(r.rows.iter().all(|row| row.max_error < 1e-5), "{:?}", r.rows);
    }
}
