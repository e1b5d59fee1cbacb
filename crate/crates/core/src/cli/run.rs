//! Experiment dispatch and artifact emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::analysis::{
    eigen_check, focussing_experiment, front_face_limit_check, oracle_check, trichotomy_runs, winding_experiment,
    EigenCheckReport, FocussingConfig, FocussingReport, FrontFaceLimitReport, OracleRow, TrichotomyConfig,
    TrichotomyReport, WindingConfig, WindingReport,
};
use crate::error::{Error, Result};
use crate::flow::TraceSample;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Offset of the reference geodesics from their critical points.
const REFERENCE_OFFSET: f64 = 1e-3;
const DEFAULT_FRONT_START: (f64, f64) = (0.4, 0.5);
const DEFAULT_TAU_MAX: f64 = 3.0;
const DEFAULT_T_MAX: f64 = 50.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrichotomyOutput {
    pub p: f64,
    pub k: u32,
    pub epsilon: f64,
    pub runs: Vec<TrichotomyReport>,
    /// `(z, dz/dt)` along each simulated geodesic.
    pub phase: Vec<Vec<[f64; 2]>>,
    #[serde(skip)]
    pub traces: Vec<Vec<TraceSample>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub z_end: f64,
    pub rows: Vec<OracleRow>,
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Report {
    Winding(WindingReport),
    Focussing(FocussingReport),
    Trichotomy(TrichotomyOutput),
    FrontfaceLimit(FrontFaceLimitReport),
    Eigencheck(EigenCheckReport),
    OracleCheck(OracleOutput),
}

impl Report {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Report::Winding(_) => ExperimentKind::Winding,
            Report::Focussing(_) => ExperimentKind::Focussing,
            Report::Trichotomy(_) => ExperimentKind::Trichotomy,
            Report::FrontfaceLimit(_) => ExperimentKind::FrontfaceLimit,
            Report::Eigencheck(_) => ExperimentKind::Eigencheck,
            Report::OracleCheck(_) => ExperimentKind::OracleCheck,
        }
    }

    fn to_value(&self) -> serde_json::Value {
        let v = match self {
            Report::Winding(r) => serde_json::to_value(r),
            Report::Focussing(r) => serde_json::to_value(r),
            Report::Trichotomy(r) => serde_json::to_value(r),
            Report::FrontfaceLimit(r) => serde_json::to_value(r),
            Report::Eigencheck(r) => serde_json::to_value(r),
            Report::OracleCheck(r) => serde_json::to_value(r),
        };
        v.expect("reports serialize")
    }

    fn from_value(kind: ExperimentKind, v: serde_json::Value) -> Result<Self> {
        let bad = |e: serde_json::Error| Error::MalformedReport(e.to_string());
        Ok(match kind {
            ExperimentKind::Winding => Report::Winding(serde_json::from_value(v).map_err(bad)?),
            ExperimentKind::Focussing => Report::Focussing(serde_json::from_value(v).map_err(bad)?),
            ExperimentKind::Trichotomy => Report::Trichotomy(serde_json::from_value(v).map_err(bad)?),
            ExperimentKind::FrontfaceLimit => Report::FrontfaceLimit(serde_json::from_value(v).map_err(bad)?),
            ExperimentKind::Eigencheck => Report::Eigencheck(serde_json::from_value(v).map_err(bad)?),
            ExperimentKind::OracleCheck => Report::OracleCheck(serde_json::from_value(v).map_err(bad)?),
        })
    }

    /// Cells that failed inside an otherwise completed run, and the total.
    pub fn failures(&self) -> (usize, usize) {
        match self {
            Report::Winding(r) => (r.cells.iter().filter(|c| c.error.is_some()).count(), r.cells.len()),
            Report::Focussing(r) => (r.rows.iter().filter(|c| c.error.is_some()).count(), r.rows.len()),
            _ => (0, 0),
        }
    }
}

/// The `summary.json` document.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub version: String,
    pub config: ExperimentConfig,
    pub report: Report,
}

#[derive(Serialize, Deserialize)]
struct SummaryDoc {
    experiment: ExperimentKind,
    version: String,
    config: ExperimentConfig,
    report: serde_json::Value,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let doc = SummaryDoc {
            experiment: self.report.kind(),
            version: self.version.clone(),
            config: self.config.clone(),
            report: self.report.to_value(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SummaryDoc = serde_json::from_str(text).map_err(|e| Error::MalformedReport(e.to_string()))?;
        if doc.config.experiment != doc.experiment {
            return Err(Error::MalformedReport("experiment does not match the echoed config".into()));
        }
        Ok(Summary {
            version: doc.version,
            config: doc.config,
            report: Report::from_value(doc.experiment, doc.report)?,
        })
    }
}

fn front_start(cfg: &ExperimentConfig) -> (f64, f64) {
    match &cfg.seeds {
        Some(_) => cfg.seed_points()[0],
        None => DEFAULT_FRONT_START,
    }
}

/// Runs the experiment on the current rayon pool.
pub fn compute(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let tol = cfg.tolerances.ode;
    let fam = cfg.metric.build()?;
    Ok(match cfg.experiment {
        ExperimentKind::Winding => Report::Winding(winding_experiment(&WindingConfig {
            fam,
            phis: cfg.phis(),
            epsilons: cfg.epsilons.clone(),
            start_angles: cfg.start_angles(),
            z0: cfg.z1(),
            tol,
        })?),
        ExperimentKind::Focussing => Report::Focussing(focussing_experiment(&FocussingConfig {
            fam,
            epsilons: cfg.epsilons.clone(),
            seeds: cfg.seed_points(),
            z1: cfg.z1(),
            tol,
            delta0: REFERENCE_OFFSET,
        })?),
        ExperimentKind::Trichotomy => {
            let tc = TrichotomyConfig {
                p: cfg.metric.p,
                k: cfg.metric.k,
                eps: cfg.epsilons[0],
                angular_momenta: cfg.angular_momenta.clone().unwrap_or_default(),
                t_max: cfg.tau_max.unwrap_or(DEFAULT_T_MAX),
                tol,
            };
            let runs = trichotomy_runs(&tc)?;
            let phase = runs.iter().map(|(_, tr)| tr.samples.iter().map(|s| [s.z, s.xi]).collect()).collect();
            let traces = runs.iter().map(|(_, tr)| tr.samples.clone()).collect();
            Report::Trichotomy(TrichotomyOutput {
                p: tc.p,
                k: tc.k,
                epsilon: tc.eps,
                runs: runs.into_iter().map(|(r, _)| r).collect(),
                phase,
                traces,
            })
        }
        ExperimentKind::FrontfaceLimit => {
            let (y0, th0) = front_start(cfg);
            let tau = cfg.tau_max.unwrap_or(DEFAULT_TAU_MAX);
            Report::FrontfaceLimit(front_face_limit_check(&fam, &cfg.epsilons, y0, th0, tau, tol)?)
        }
        ExperimentKind::Eigencheck => Report::Eigencheck(eigen_check(&fam)?),
        ExperimentKind::OracleCheck => {
            let z_end = cfg.z1();
            let rows = oracle_check(&fam, &cfg.epsilons, &cfg.phis(), &cfg.start_angles(), z_end, tol)?;
            let max_error = rows.iter().map(|r| r.endpoint_error).fold(0.0, f64::max);
            Report::OracleCheck(OracleOutput { z_end, rows, max_error })
        }
    })
}

/// Runs on a dedicated pool of `workers` threads.
pub fn compute_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| compute(cfg))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_text(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

fn debug_name<T: std::fmt::Debug>(v: &T) -> String {
    format!("{v:?}")
}

/// CSV tables of a report, as `(file name, contents)`.
pub fn tables(report: &Report) -> Vec<(String, String)> {
    let mut out = Vec::new();
    match report {
        Report::Winding(r) => {
            let mut s = String::from(
                "epsilon,phi,v0,angl_measured,angl_predicted,rel_error,remainder,remainder_envelope,error\n",
            );
            for c in &r.cells {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    num(c.epsilon),
                    num(c.phi),
                    num(c.v0),
                    opt(c.angl_measured),
                    num(c.angl_predicted),
                    opt(c.rel_error),
                    opt(c.remainder),
                    opt(c.remainder_envelope),
                    csv_text(c.error.as_deref().unwrap_or(""))
                );
            }
            out.push(("winding.csv".into(), s));
        }
        Report::Focussing(r) => {
            let mut s = String::from("epsilon,seed,y0,theta0,y_end,theta_end,dist_to_min,basin,error\n");
            for row in &r.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    num(row.epsilon),
                    row.seed,
                    num(row.y0),
                    num(row.theta0),
                    opt(row.end.as_ref().map(|e| e.y)),
                    opt(row.end.as_ref().map(|e| e.theta)),
                    opt(row.dist_to_min),
                    row.basin.map(|b| b.to_string()).unwrap_or_default(),
                    csv_text(row.error.as_deref().unwrap_or(""))
                );
            }
            out.push(("focussing.csv".into(), s));
        }
        Report::Trichotomy(r) => {
            let mut s = String::from(
                "L,w_min,classification,turning_point,angular_length,simulated,simulated_turning_point,final_zdot,crossed_waist\n",
            );
            for run in &r.runs {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    num(run.l),
                    num(run.w_min),
                    debug_name(&run.classification),
                    opt(run.turning_point),
                    opt(run.angular_length),
                    run.simulated.map(|t| debug_name(&t)).unwrap_or_default(),
                    opt(run.simulated_turning_point),
                    opt(run.final_zdot),
                    run.crossed_waist.map(|b| b.to_string()).unwrap_or_default()
                );
            }
            out.push(("trichotomy.csv".into(), s));
            for (i, tr) in r.traces.iter().enumerate() {
                let mut s = String::from("t,z,y,xi,eta,energy,L\n");
                for p in tr {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{}",
                        num(p.t),
                        num(p.z),
                        num(p.y),
                        num(p.xi),
                        num(p.eta),
                        num(p.energy),
                        num(p.l)
                    );
                }
                out.push((format!("trace_{i}.csv"), s));
            }
        }
        Report::FrontfaceLimit(r) => {
            let mut s = String::from("tau,chart,coord,y,theta,G\n");
            for p in &r.front_face {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    num(p.tau),
                    debug_name(&p.chart.kind()),
                    num(p.chart.coord()),
                    num(p.y),
                    num(p.theta),
                    num(p.g)
                );
            }
            out.push(("frontface.csv".into(), s));
            let mut s = String::from("epsilon,deviation,ratio\n");
            for (i, (e, d)) in r.epsilons.iter().zip(&r.deviations).enumerate() {
                let ratio = i.checked_sub(1).and_then(|j| r.ratios.get(j)).copied();
                let _ = writeln!(s, "{},{},{}", num(*e), num(*d), opt(ratio));
            }
            out.push(("frontface_deviation.csv".into(), s));
        }
        Report::Eigencheck(r) => {
            let mut s = String::from("y,kind,site,analytic_re,analytic_im,numeric_re,numeric_im,max_error\n");
            for row in &r.rows {
                for (a, n) in row.analytic.iter().zip(&row.numeric) {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{}",
                        num(row.y),
                        debug_name(&row.kind),
                        debug_name(&row.site),
                        num(a[0]),
                        num(a[1]),
                        num(n[0]),
                        num(n[1]),
                        num(row.max_error)
                    );
                }
            }
            out.push(("eigencheck.csv".into(), s));
        }
        Report::OracleCheck(r) => {
            let mut s = String::from(
                "epsilon,phi,y0,z_hamiltonian,y_hamiltonian,t_hamiltonian,z_oracle,phi_oracle,t_oracle,endpoint_error\n",
            );
            for row in &r.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{}",
                    num(row.epsilon),
                    num(row.phi),
                    num(row.y0),
                    num(row.z_hamiltonian),
                    num(row.y_hamiltonian),
                    num(row.t_hamiltonian),
                    num(row.z_oracle),
                    num(row.phi_oracle),
                    num(row.t_oracle),
                    num(row.endpoint_error)
                );
            }
            out.push(("oracle_check.csv".into(), s));
        }
    }
    out
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    Ok(p)
}

/// Writes CSVs, `summary.json` and the SVG figures; returns the written paths in order.
pub fn write_artifacts(dir: &Path, summary: &Summary) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for (name, text) in tables(&summary.report) {
        paths.push(write(dir, &name, &text)?);
    }
    paths.push(write(dir, "summary.json", &summary.to_json())?);
    paths.extend(write_figures(dir, summary, None)?);
    Ok(paths)
}

/// Renders the figures of a summary, optionally only the one named `only`.
pub fn write_figures(dir: &Path, summary: &Summary, only: Option<&str>) -> Result<Vec<PathBuf>> {
    let figs = super::plots::figures(summary);
    if let Some(name) = only {
        if !figs.iter().any(|(n, _)| n == name) {
            let names: Vec<&str> = figs.iter().map(|(n, _)| n.as_str()).collect();
            return Err(Error::Config(format!("no figure named {name}; available: {}", names.join(", "))));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for (name, fig) in figs {
        if only.is_some_and(|o| o != name) {
            continue;
        }
        paths.push(write(dir, &format!("{name}.svg"), &fig.render())?);
    }
    Ok(paths)
}

/// Full run: compute, then write everything to `dir`. Partial failures still
/// write their artifacts before being reported.
pub fn run(cfg: &ExperimentConfig, dir: &Path, workers: usize) -> Result<Vec<PathBuf>> {
    let report = compute_with_workers(cfg, workers)?;
    let (failed, total) = report.failures();
    let summary = Summary { version: VERSION.into(), config: cfg.echo(), report };
    let paths = write_artifacts(dir, &summary)?;
    if failed > 0 {
        return Err(Error::ExperimentFailed(format!(
            "{failed} of {total} cells failed; details in {}",
            dir.join("summary.json").display()
        )));
    }
    Ok(paths)
}

/// Reads a summary and regenerates its figures next to it or in `out`.
pub fn plot(report_path: &Path, out: Option<&Path>, only: Option<&str>) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(report_path).map_err(|e| Error::Io(format!("{}: {e}", report_path.display())))?;
    let summary = Summary::from_json(&text)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => report_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    write_figures(&dir, &summary, only)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eig_cfg() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"experiment": "eigencheck", "metric": {"variant": "morse_model", "delta": 0.7}}"#,
        )
        .unwrap()
    }

    #[test]
    fn summary_round_trips() {
        let cfg = eig_cfg();
        let s = Summary { version: VERSION.into(), config: cfg.echo(), report: compute(&cfg).unwrap() };
        let back = Summary::from_json(&s.to_json()).unwrap();
        assert_eq!(back.to_json(), s.to_json());
        assert_eq!(back.config, cfg);
    }

    #[test]
    fn malformed_summary_is_reported() {
        let e = Summary::from_json(r#"{"experiment": "winding"}"#).unwrap_err();
        assert!(matches!(e, Error::MalformedReport(_)));
    }

    #[test]
    fn csv_numbers_carry_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(opt(None), "");
        assert_eq!(csv_text("a,b"), "\"a,b\"");
    }
}
