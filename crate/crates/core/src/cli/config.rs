//! Experiment configuration files.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{CircleMetric, MetricFamily, MetricVariant, MorseModel, WarpedCoefficients};
use crate::scaling::ScalingFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Winding,
    Focussing,
    Trichotomy,
    FrontfaceLimit,
    Eigencheck,
    OracleCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Winding,
        ExperimentKind::Focussing,
        ExperimentKind::Trichotomy,
        ExperimentKind::FrontfaceLimit,
        ExperimentKind::Eigencheck,
        ExperimentKind::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Winding => "winding",
            ExperimentKind::Focussing => "focussing",
            ExperimentKind::Trichotomy => "trichotomy",
            ExperimentKind::FrontfaceLimit => "frontface_limit",
            ExperimentKind::Eigencheck => "eigencheck",
            ExperimentKind::OracleCheck => "oracle_check",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            ExperimentKind::Winding => "angular length from the waist against the winding law, with remainder fits",
            ExperimentKind::Focussing => "Poincare map to z = z1, basins of the corner critical points, focussing rate",
            ExperimentKind::Trichotomy => {
                "pass / asymptotic / turn-back of warped-product geodesics by angular momentum"
            }
            ExperimentKind::FrontfaceLimit => "rescaled trajectories against the front-face flow as eps shrinks",
            ExperimentKind::Eigencheck => {
                "linearizations at the corner critical points against closed-form eigenvalues"
            }
            ExperimentKind::OracleCheck => {
                "Hamiltonian flow against the ambient geodesic equations of the elliptic neck"
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    MorseModel,
    Warped,
    Elliptic,
}

fn two() -> u32 {
    2
}
fn p_default() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub variant: VariantKind,
    #[serde(default = "two")]
    pub k: u32,
    /// Defaults to `2k - 2` (at least `k`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<i32>,
    /// Anisotropy of the Morse model or eccentricity of the ellipse.
    #[serde(default)]
    pub delta: f64,
    /// Exponent of the scaling function `w = (eps^p + |z|^p)^(1/p)`.
    #[serde(default = "p_default")]
    pub p: f64,
    /// Warped products: `h = 1 + h_amplitude cos y`.
    #[serde(default)]
    pub h_amplitude: f64,
    /// Warped products: constant potential `S`.
    #[serde(default)]
    pub s: f64,
}

impl MetricSpec {
    pub fn kappa(&self) -> i32 {
        self.kappa.unwrap_or((2 * self.k as i32 - 2).max(self.k as i32))
    }

    pub fn build(&self) -> Result<MetricFamily> {
        let sf = ScalingFunction::power(self.p)?;
        let variant = match self.variant {
            VariantKind::MorseModel => {
                MetricVariant::GeneralAnsatz(Arc::new(MorseModel { k: self.k, delta: self.delta }))
            }
            VariantKind::Warped => {
                let h = if self.h_amplitude == 0.0 {
                    CircleMetric::Flat
                } else {
                    CircleMetric::Cosine { amplitude: self.h_amplitude }
                };
                MetricVariant::WarpedProduct(WarpedCoefficients { h, s: self.s })
            }
            VariantKind::Elliptic => MetricVariant::EllipticSurface { delta: self.delta },
        };
        MetricFamily::new(self.k, self.kappa(), sf, variant)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    /// `count` angles `2 pi j / count`, all with `theta0`.
    Equidistributed {
        count: usize,
        #[serde(default)]
        theta0: f64,
    },
    /// Uniform angles and `theta0` uniform in `[-theta_max, theta_max]`, from the run seed.
    Random {
        count: usize,
        #[serde(default)]
        theta_max: f64,
    },
    /// Explicit `[y0, theta0]` pairs.
    Explicit { points: Vec<[f64; 2]> },
}

impl SeedSpec {
    pub fn points(&self, seed: u64) -> Vec<(f64, f64)> {
        match self {
            SeedSpec::Equidistributed { count, theta0 } => crate::analysis::equidistributed_seeds(*count, *theta0),
            SeedSpec::Random { count, theta_max } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..*count)
                    .map(|_| {
                        let y = rng.random::<f64>() * 2.0 * PI;
                        let t = (2.0 * rng.random::<f64>() - 1.0) * theta_max;
                        (y, t)
                    })
                    .collect()
            }
            SeedSpec::Explicit { points } => points.iter().map(|p| (p[0], p[1])).collect(),
        }
    }

    fn count(&self) -> usize {
        match self {
            SeedSpec::Equidistributed { count, .. } | SeedSpec::Random { count, .. } => *count,
            SeedSpec::Explicit { points } => points.len(),
        }
    }
}

fn ode_default() -> f64 {
    1e-11
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute and relative tolerance of every ODE integration.
    #[serde(default = "ode_default")]
    pub ode: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { ode: ode_default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub metric: MetricSpec,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<SeedSpec>,
    /// Impact angles at the waist.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phis: Option<Vec<f64>>,
    /// Cross-section positions of the waist starts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_angles: Option<Vec<f64>>,
    /// Target level of the winding and oracle runs, and the section of the focussing runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_momenta: Option<Vec<f64>>,
    /// Horizon in rescaled time (front-face limit) or time (trichotomy).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn z1(&self) -> f64 {
        self.z1.unwrap_or(1.0)
    }

    pub fn phis(&self) -> Vec<f64> {
        self.phis.clone().unwrap_or_else(|| vec![0.95f64.acos()])
    }

    pub fn start_angles(&self) -> Vec<f64> {
        self.start_angles.clone().unwrap_or_else(|| vec![0.0])
    }

    pub fn seed_points(&self) -> Vec<(f64, f64)> {
        self.seeds
            .clone()
            .unwrap_or(SeedSpec::Equidistributed { count: 10, theta0: 0.0 })
            .points(self.seed.unwrap_or(0))
    }

    /// The computation-defining part of the configuration: output location and
    /// worker count do not change results and are dropped.
    pub fn echo(&self) -> Self {
        ExperimentConfig { output_dir: None, workers: None, ..self.clone() }
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let m = &self.metric;
        if m.k < 2 {
            return bad(format!("metric.k must be >= 2, got {}", m.k));
        }
        if !(m.p >= 2.0 && m.p.is_finite()) {
            return bad(format!("metric.p must be a finite number >= 2, got {}", m.p));
        }
        let kappa = m.kappa();
        if kappa < m.k as i32 || kappa > 2 * m.k as i32 {
            return bad(format!("metric.kappa must lie in [k, 2k], got {kappa}"));
        }
        if !(0.0..1.0).contains(&m.delta) {
            return bad(format!("metric.delta must lie in [0, 1), got {}", m.delta));
        }
        if m.h_amplitude.abs() >= 1.0 {
            return bad(format!("metric.h_amplitude must satisfy |a| < 1, got {}", m.h_amplitude));
        }
        if m.variant != VariantKind::Warped && (m.h_amplitude != 0.0 || m.s != 0.0) {
            return bad("metric.h_amplitude and metric.s apply to warped products only".into());
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("epsilons must be positive and finite".into());
        }
        if !(self.tolerances.ode > 0.0 && self.tolerances.ode < 1e-3) {
            return bad(format!("tolerances.ode must lie in (0, 1e-3), got {}", self.tolerances.ode));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        if let Some(z1) = self.z1 {
            if !(z1 > 0.0 && z1.is_finite()) {
                return bad(format!("z1 must be positive, got {z1}"));
            }
        }
        if let Some(s) = &self.seeds {
            if s.count() == 0 {
                return bad("seeds must contain at least one start".into());
            }
        }
        let need_eps = |n: usize| -> Result<()> {
            if self.epsilons.len() < n {
                return Err(Error::Config(format!("{} needs at least {n} epsilons", self.experiment.name())));
            }
            Ok(())
        };
        let need_kappa = || -> Result<()> {
            let want = 2 * m.k as i32 - 2;
            if kappa != want {
                return Err(Error::Config(format!(
                    "{} needs kappa = 2k - 2 = {want}, got {kappa}",
                    self.experiment.name()
                )));
            }
            Ok(())
        };
        match self.experiment {
            ExperimentKind::Winding => {
                need_eps(2)?;
                if self.phis().iter().any(|p| !(*p > 0.0 && *p < FRAC_PI_2)) {
                    return bad("phis must lie in (0, pi/2)".into());
                }
                if self.epsilons.iter().any(|e| *e >= self.z1()) {
                    return bad("epsilons must be below z1".into());
                }
            }
            ExperimentKind::Focussing => {
                need_eps(1)?;
                need_kappa()?;
            }
            ExperimentKind::Trichotomy => {
                if m.variant != VariantKind::Warped || m.h_amplitude != 0.0 {
                    return bad("trichotomy runs on a warped product with flat cross-section".into());
                }
                if self.epsilons.len() != 1 {
                    return bad("trichotomy takes exactly one epsilon".into());
                }
                match &self.angular_momenta {
                    Some(l) if !l.is_empty() && l.iter().all(|v| *v >= 0.0 && v.is_finite()) => {}
                    _ => return bad("trichotomy needs non-negative angular_momenta".into()),
                }
            }
            ExperimentKind::FrontfaceLimit => {
                need_eps(2)?;
                need_kappa_or_more(kappa, m.k)?;
                if let Some(t) = self.tau_max {
                    if !(t > 0.0 && t.is_finite()) {
                        return bad(format!("tau_max must be positive, got {t}"));
                    }
                }
            }
            ExperimentKind::Eigencheck => need_kappa_or_more(kappa, m.k)?,
            ExperimentKind::OracleCheck => {
                need_eps(1)?;
                if m.variant != VariantKind::Elliptic {
                    return bad("oracle_check compares against the elliptic surface".into());
                }
                if self.phis().iter().any(|p| !(*p >= 0.0 && *p <= FRAC_PI_2)) {
                    return bad("phis must lie in [0, pi/2]".into());
                }
            }
        }
        Ok(())
    }
}

fn need_kappa_or_more(kappa: i32, k: u32) -> Result<()> {
    if kappa < 2 * k as i32 - 2 {
        return Err(Error::Config(format!("the rescaled flow needs kappa >= 2k - 2, got {kappa}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(exp: &str) -> String {
        format!(
            r#"{{"experiment": "{exp}", "metric": {{"variant": "morse_model", "delta": 0.7}}, "epsilons": [0.1, 0.05]}}"#
        )
    }

    #[test]
    fn parses_and_echoes() {
        let cfg = ExperimentConfig::from_json(&base("focussing")).unwrap();
        assert_eq!(cfg.metric.kappa(), 2);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg.echo()).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.seed_points().len(), 10);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_kappa() {
        let t = base("focussing").replace("\"delta\"", "\"colour\": 1, \"delta\"");
        assert!(matches!(ExperimentConfig::from_json(&t), Err(Error::Config(_))));
        let t = base("focussing").replace("\"delta\": 0.7", "\"delta\": 0.7, \"kappa\": 3");
        let e = ExperimentConfig::from_json(&t).unwrap_err();
        assert!(e.to_string().contains("kappa"), "{e}");
    }

    #[test]
    fn random_seeds_are_reproducible() {
        let s = SeedSpec::Random { count: 5, theta_max: 0.5 };
        assert_eq!(s.points(7), s.points(7));
        assert_ne!(s.points(7), s.points(8));
        assert!(s.points(7).iter().all(|p| p.0 >= 0.0 && p.0 < 2.0 * PI && p.1.abs() <= 0.5));
    }
}
