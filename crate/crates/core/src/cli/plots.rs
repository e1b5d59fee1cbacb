//! Figures for each experiment report.

use std::f64::consts::PI;

use super::run::{Report, Summary};
use super::svg::{Figure, Series, Style, VLine, PALETTE};
use crate::analysis::{EigenCheckReport, FocussingReport, FrontFaceLimitReport, WindingReport};
use crate::analysis::{Trichotomy, WarpProfile};
use crate::rescaled::PointKind;

use super::run::{OracleOutput, TrichotomyOutput};

const CRITICAL_RED: &str = "#d62728";

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn g(v: f64) -> String {
    format!("{v:.4}")
}

/// `(file stem, figure)` in a fixed order.
pub fn figures(s: &Summary) -> Vec<(String, Figure)> {
    match &s.report {
        Report::Winding(r) => winding(r),
        Report::Focussing(r) => focussing(r),
        Report::Trichotomy(r) => trichotomy(r),
        Report::FrontfaceLimit(r) => frontface(r),
        Report::Eigencheck(r) => eigencheck(r),
        Report::OracleCheck(r) => oracle(r),
    }
}

fn distinct(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn winding(r: &WindingReport) -> Vec<(String, Figure)> {
    let phis = distinct(r.cells.iter().map(|c| c.phi));
    let mut angle = Figure {
        title: format!("Angular length to z = {} ({})", g(r.z0), r.family),
        xlabel: "eps".into(),
        ylabel: "angular length".into(),
        log_x: true,
        log_y: true,
        ..Default::default()
    };
    let mut rem = Figure {
        title: "Winding remainder, max over start angles".into(),
        xlabel: "eps".into(),
        ylabel: "max |angl eps^(k-1) - C cos phi|".into(),
        log_x: true,
        log_y: true,
        ..Default::default()
    };
    for (i, &phi) in phis.iter().enumerate() {
        let cells: Vec<_> = r.cells.iter().filter(|c| c.phi == phi).collect();
        angle.series.push(Series {
            label: format!("measured, phi={}", g(phi)),
            points: cells.iter().filter_map(|c| Some((c.epsilon, c.angl_measured?))).collect(),
            style: Style::Markers,
            color: color(i),
        });
        angle.series.push(Series {
            label: format!("law, phi={}", g(phi)),
            points: cells.iter().map(|c| (c.epsilon, c.angl_predicted)).collect(),
            style: Style::Dashed,
            color: color(i),
        });
        let pts: Vec<(f64, f64)> = cells.iter().filter_map(|c| Some((c.epsilon, c.remainder_envelope?))).collect();
        rem.series.push(Series {
            label: format!("phi={}", g(phi)),
            points: pts.clone(),
            style: Style::Markers,
            color: color(i),
        });
        if let Some(f) = r.fits.iter().find(|f| f.phi == phi).and_then(|f| f.power) {
            rem.series.push(Series {
                label: format!("slope {}", g(f.slope)),
                points: pts.iter().map(|&(e, _)| (e, (f.intercept + f.slope * e.ln()).exp())).collect(),
                style: Style::Line,
                color: color(i),
            });
            rem.notes.push(format!("phi={}: power fit slope {} (R^2 {})", g(phi), g(f.slope), g(f.r2)));
        }
    }
    vec![("winding_angle".into(), angle), ("winding_remainder".into(), rem)]
}

fn focussing(r: &FocussingReport) -> Vec<(String, Figure)> {
    let crit: Vec<VLine> = r
        .critical_points
        .iter()
        .map(|c| VLine { x: c.y, label: format!("{:?} y={}", c.kind, g(c.y)), color: CRITICAL_RED })
        .collect();
    let mut out = Vec::new();
    let eps = distinct(r.rows.iter().map(|row| row.epsilon));
    for (i, &e) in eps.iter().enumerate() {
        let pts: Vec<(f64, f64)> = r
            .rows
            .iter()
            .filter(|row| row.epsilon == e)
            .filter_map(|row| row.end.as_ref().map(|p| (p.y.rem_euclid(2.0 * PI), p.theta)))
            .collect();
        let fig = Figure {
            title: format!("Endpoints on z = {}, eps = {}", g(r.z1), g(e)),
            xlabel: "y (unrolled cross-section)".into(),
            ylabel: "theta".into(),
            series: vec![
                Series { label: "endpoints".into(), points: pts, style: Style::Markers, color: color(0) },
                // Pins the x range to one period.
                Series {
                    label: String::new(),
                    points: vec![(0.0, 0.0), (2.0 * PI, 0.0)],
                    style: Style::Dashed,
                    color: "#cccccc",
                },
            ],
            vlines: crit.clone(),
            notes: vec![format!("{}; dashed red: critical points", r.family)],
            ..Default::default()
        };
        out.push((format!("focussing_endpoints_{i}"), fig));
    }
    let pts: Vec<(f64, f64)> = r.summaries.iter().filter_map(|s| Some((s.epsilon, s.mean_dist?))).collect();
    let mut dist = Figure {
        title: "Distance to the attracting targets".into(),
        xlabel: "eps".into(),
        ylabel: "mean distance on the section".into(),
        log_x: true,
        log_y: true,
        series: vec![Series { label: "measured".into(), points: pts.clone(), style: Style::Markers, color: color(0) }],
        ..Default::default()
    };
    if let Some(f) = r.rho_fit {
        dist.series.push(Series {
            label: format!("rho = {}", g(f.slope)),
            points: pts.iter().map(|&(e, _)| (e, (f.intercept + f.slope * e.ln()).exp())).collect(),
            style: Style::Line,
            color: color(1),
        });
        dist.notes.push(format!("fitted rate {} (R^2 {})", g(f.slope), g(f.r2)));
    }
    out.push(("focussing_distance".into(), dist));
    out
}

fn trichotomy(r: &TrichotomyOutput) -> Vec<(String, Figure)> {
    let prof = WarpProfile { p: r.p, k: r.k, eps: r.epsilon };
    let mut fig = Figure {
        title: format!("Energy level sets, eps = {}", g(r.epsilon)),
        xlabel: "z".into(),
        ylabel: "dz/dt".into(),
        notes: vec!["dashed: dz/dt = +-sqrt(1 - L^2/W^2); dots: integrated geodesics".into()],
        ..Default::default()
    };
    for (i, run) in r.runs.iter().enumerate() {
        let n = 400;
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for j in 0..=n {
            let z = -1.0 + 2.0 * j as f64 / n as f64;
            let q = 1.0 - (run.l / prof.w(z)).powi(2);
            if q >= 0.0 {
                upper.push((z, q.sqrt()));
                lower.push((z, -q.sqrt()));
            }
        }
        let tag = match run.classification {
            Trichotomy::Pass => "passes",
            Trichotomy::Asymptotic => "asymptotic",
            Trichotomy::TurnBack => "turns back",
        };
        // Both branches share one polyline per connected piece.
        for (b, branch) in [upper, lower].into_iter().enumerate() {
            for piece in split_gaps(&branch, 2.0 / n as f64) {
                fig.series.push(Series {
                    label: if b == 0 && fig.series.iter().all(|s| s.color != color(i) || s.label.is_empty()) {
                        format!("L = {} ({tag})", g(run.l))
                    } else {
                        String::new()
                    },
                    points: piece,
                    style: Style::Dashed,
                    color: color(i),
                });
            }
        }
        if let Some(ph) = r.phase.get(i) {
            let stride = (ph.len() / 200).max(1);
            fig.series.push(Series {
                label: String::new(),
                points: ph.iter().step_by(stride).map(|p| (p[0], p[1])).collect(),
                style: Style::Markers,
                color: color(i),
            });
        }
    }
    vec![("trichotomy_phase".into(), fig)]
}

fn split_gaps(pts: &[(f64, f64)], dz: f64) -> Vec<Vec<(f64, f64)>> {
    let mut out: Vec<Vec<(f64, f64)>> = Vec::new();
    for &p in pts {
        match out.last_mut() {
            Some(last) if p.0 - last.last().unwrap().0 <= 1.5 * dz => last.push(p),
            _ => out.push(vec![p]),
        }
    }
    out
}

fn frontface(r: &FrontFaceLimitReport) -> Vec<(String, Figure)> {
    let dev = Figure {
        title: format!("Rescaled flow against the front face, tau in [0, {}]", g(r.tau_max)),
        xlabel: "eps".into(),
        ylabel: "sup distance".into(),
        log_x: true,
        log_y: true,
        series: vec![Series {
            label: "deviation".into(),
            points: r.epsilons.iter().cloned().zip(r.deviations.iter().cloned()).collect(),
            style: Style::Line,
            color: color(0),
        }],
        notes: vec![format!("successive ratios: {}", r.ratios.iter().map(|x| g(*x)).collect::<Vec<_>>().join(", "))],
        ..Default::default()
    };
    let traj = Figure {
        title: "Front-face solution".into(),
        xlabel: "tau".into(),
        ylabel: "y, theta".into(),
        series: vec![
            Series {
                label: "y".into(),
                points: r.front_face.iter().map(|s| (s.tau, s.y)).collect(),
                style: Style::Line,
                color: color(0),
            },
            Series {
                label: "theta".into(),
                points: r.front_face.iter().map(|s| (s.tau, s.theta)).collect(),
                style: Style::Line,
                color: color(1),
            },
        ],
        ..Default::default()
    };
    vec![("frontface_deviation".into(), dev), ("frontface_solution".into(), traj)]
}

fn eigencheck(r: &EigenCheckReport) -> Vec<(String, Figure)> {
    let fig = Figure {
        title: format!("Corner potential of {}", r.family),
        xlabel: "y".into(),
        ylabel: "S+".into(),
        series: vec![Series {
            label: "S+".into(),
            points: r.potential.iter().map(|p| (p[0], p[1])).collect(),
            style: Style::Line,
            color: color(0),
        }],
        vlines: r
            .critical_points
            .iter()
            .map(|c| VLine { x: c.y, label: format!("{:?}", c.kind), color: CRITICAL_RED })
            .collect(),
        notes: vec![format!(
            "worst eigenvalue mismatch {:.3e} over {} linearizations",
            r.rows.iter().map(|x| x.max_error).fold(0.0, f64::max),
            r.rows.len()
        )],
        ..Default::default()
    };
    let mut errs = Figure {
        title: "Finite-difference against closed-form eigenvalues".into(),
        xlabel: "y".into(),
        ylabel: "max error".into(),
        log_y: true,
        ..Default::default()
    };
    for (i, kind) in [PointKind::Min, PointKind::Max, PointKind::Saddle].iter().enumerate() {
        let pts: Vec<(f64, f64)> =
            r.rows.iter().filter(|x| x.kind == *kind).map(|x| (x.y, x.max_error.max(1e-17))).collect();
        if !pts.is_empty() {
            errs.series.push(Series {
                label: format!("{kind:?}"),
                points: pts,
                style: Style::Markers,
                color: color(i),
            });
        }
    }
    vec![("eigencheck_potential".into(), fig), ("eigencheck_errors".into(), errs)]
}

fn oracle(r: &OracleOutput) -> Vec<(String, Figure)> {
    let mut fig = Figure {
        title: format!("Hamiltonian flow against the ambient oracle at z = {}", g(r.z_end)),
        xlabel: "eps".into(),
        ylabel: "endpoint error".into(),
        log_x: true,
        log_y: true,
        ..Default::default()
    };
    for (i, phi) in distinct(r.rows.iter().map(|x| x.phi)).into_iter().enumerate() {
        fig.series.push(Series {
            label: format!("phi={}", g(phi)),
            points: r.rows.iter().filter(|x| x.phi == phi).map(|x| (x.epsilon, x.endpoint_error.max(1e-17))).collect(),
            style: Style::Markers,
            color: color(i),
        });
    }
    vec![("oracle_errors".into(), fig)]
}
