//! Critical points of the corner potentials, linearizations of the rescaled
//! field there, and the reference geodesics leaving the minima of `S+`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use super::frontface::{front_face_rhs, FrontChart, FrontFace, FrontState};
use super::{check_kappa, rescaled_rhs, RescaledState};
use crate::error::{Error, Result};
use crate::flow::ode::{self, OdeOptions, OdeSystem};
use crate::metric::{BlowupPoint, MetricFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalSide {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointKind {
    Min,
    Max,
    Saddle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    /// Position; one angle on the circle, two on the torus.
    pub y: f64,
    pub y2: Option<f64>,
    pub side: CriticalSide,
    pub value: f64,
    /// Eigenvalues `a_j` of `h^-1 S_yy`.
    pub hess_eigs: Vec<f64>,
    pub morse_index: usize,
    pub kind: PointKind,
}

impl CriticalPoint {
    fn classify(y: f64, y2: Option<f64>, side: CriticalSide, value: f64, eigs: Vec<f64>) -> Result<Self> {
        if eigs.iter().any(|a| a.abs() < 1e-8) {
            return Err(Error::NonMorse(y));
        }
        let idx = eigs.iter().filter(|a| **a < 0.0).count();
        let kind = if idx == 0 {
            PointKind::Min
        } else if idx == eigs.len() {
            PointKind::Max
        } else {
            PointKind::Saddle
        };
        Ok(CriticalPoint { y, y2, side, value, hess_eigs: eigs, morse_index: idx, kind })
    }
}

/// Critical points of `S+` or `S-` on the circle.
///
/// Returns an empty list when the potential is constant. Sign changes of `S_y`
/// are bracketed on `samples` equispaced points and refined by bisection.
pub fn critical_points(ff: &FrontFace, side: CriticalSide, samples: usize) -> Result<Vec<CriticalPoint>> {
    let jet = |y: f64| {
        let j = ff.corner(side, y);
        (j.s, j.s_y, j.s_yy, j.h)
    };
    critical_points_of(&jet, side, samples)
}

/// As [`critical_points`] for any potential `y -> (S, S_y, S_yy, h)` on the circle.
pub fn critical_points_of(
    jet: &dyn Fn(f64) -> (f64, f64, f64, f64),
    side: CriticalSide,
    samples: usize,
) -> Result<Vec<CriticalPoint>> {
    let n = samples.max(16);
    let grid: Vec<f64> = (0..=n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    let sy: Vec<f64> = grid.iter().map(|&y| jet(y).1).collect();
    let scale = sy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let vals: Vec<f64> = grid.iter().map(|&y| jet(y).0).collect();
    let vscale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if scale < 1e-12 * vscale {
        return Ok(Vec::new());
    }
    let mut out: Vec<CriticalPoint> = Vec::new();
    for i in 0..n {
        let (a, b) = (sy[i], sy[i + 1]);
        let root = if a == 0.0 {
            Some(grid[i])
        } else if b != 0.0 && a.signum() != b.signum() {
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi || hi - lo < 1e-15 {
                    break;
                }
                if jet(mid).1.signum() == a.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (fl, fh) = (jet(lo).1, jet(hi).1);
            Some(if fl.abs() < fh.abs() { lo } else { hi })
        } else {
            None
        };
        if let Some(y) = root {
            let y = if y >= 2.0 * PI - 1e-14 { 0.0 } else { y };
            if out.iter().any(|c| (c.y - y).abs() < 1e-9 || (2.0 * PI - (c.y - y).abs()) < 1e-9) {
                continue;
            }
            let (s, _, s_yy, h) = jet(y);
            out.push(CriticalPoint::classify(y, None, side, s, vec![s_yy / h])?);
        }
    }
    out.sort_by(|a, b| a.y.total_cmp(&b.y));
    Ok(out)
}

/// Value, gradient and Hessian of a potential on the flat torus.
pub type TorusJet = (f64, [f64; 2], [[f64; 2]; 2]);

/// Critical points of a potential on the flat torus `[0, 2pi)^2`, by Newton's
/// method from a `grid x grid` lattice of starts.
pub fn critical_points_torus(jet: &dyn Fn([f64; 2]) -> TorusJet, grid: usize) -> Result<Vec<CriticalPoint>> {
    let mut out: Vec<CriticalPoint> = Vec::new();
    let wrap = |y: f64| {
        let r = y.rem_euclid(2.0 * PI);
        if r > 2.0 * PI - 1e-12 {
            0.0
        } else {
            r
        }
    };
    for i in 0..grid {
        for j in 0..grid {
            let mut y = [2.0 * PI * (i as f64 + 0.5) / grid as f64, 2.0 * PI * (j as f64 + 0.5) / grid as f64];
            let mut ok = false;
            for _ in 0..60 {
                let (_, g, hs) = jet(y);
                let hm = Matrix2::new(hs[0][0], hs[0][1], hs[1][0], hs[1][1]);
                let Some(inv) = hm.try_inverse() else { break };
                let step = inv * Vector2::new(g[0], g[1]);
                if step.norm() > 1.0 {
                    break;
                }
                y = [y[0] - step[0], y[1] - step[1]];
                if step.norm() < 1e-14 {
                    ok = true;
                    break;
                }
            }
            let (s, g, hs) = jet(y);
            if !ok && (g[0].abs() + g[1].abs()) > 1e-10 {
                continue;
            }
            let y = [wrap(y[0]), wrap(y[1])];
            let close = |a: f64, b: f64| {
                let d = (a - b).abs();
                d.min(2.0 * PI - d) < 1e-8
            };
            if out.iter().any(|c| close(c.y, y[0]) && close(c.y2.unwrap_or(0.0), y[1])) {
                continue;
            }
            let eig = SymmetricEigen::new(Matrix2::new(hs[0][0], hs[0][1], hs[1][0], hs[1][1]));
            let mut eigs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            eigs.sort_by(f64::total_cmp);
            out.push(CriticalPoint::classify(y[0], Some(y[1]), CriticalSide::Plus, s, eigs)?);
        }
    }
    out.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.y2.unwrap_or(0.0).total_cmp(&b.y2.unwrap_or(0.0))));
    Ok(out)
}

/// Roots of `mu^2 + (2k - 1) mu + a / 2 = 0`.
pub fn eigenvalues_analytic(a: f64, k: u32) -> (Complex<f64>, Complex<f64>) {
    let m = (2 * k - 1) as f64;
    let disc = m * m - 2.0 * a;
    if disc >= 0.0 {
        let r = disc.sqrt();
        (Complex::new((-m + r) / 2.0, 0.0), Complex::new((-m - r) / 2.0, 0.0))
    } else {
        let r = (-disc).sqrt();
        (Complex::new(-m / 2.0, r / 2.0), Complex::new(-m / 2.0, -r / 2.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearizationSite {
    /// Inside the front face, coordinates `(E, y, theta)`.
    FrontFace,
    /// Inside `M+` at `eps = 0`, coordinates `(z, y, theta)`.
    MPlus,
}

/// Linearization of the rescaled field at a corner critical point, from the closed form.
pub fn linearization(ff: &FrontFace, cp: &CriticalPoint, site: LinearizationSite) -> Result<DMatrix<f64>> {
    if cp.hess_eigs.iter().any(|a| a.abs() < 1e-8) {
        return Err(Error::NonMorse(cp.y));
    }
    let j = ff.corner(cp.side, cp.y);
    let m = ff.m();
    let sw = ff.s_weight();
    // on the M- side the chart coordinate grows and w_z = -1
    let (chart_eig, mm) = match cp.side {
        CriticalSide::Plus => (-1.0, m),
        CriticalSide::Minus => (1.0, -m),
    };
    match site {
        LinearizationSite::FrontFace => {
            Ok(DMatrix::from_row_slice(3, 3, &[chart_eig, 0.0, 0.0, 0.0, 0.0, 1.0 / j.h, 0.0, -0.5 * sw * j.s_yy, -mm]))
        }
        LinearizationSite::MPlus => {
            if cp.side != CriticalSide::Plus {
                return Err(Error::Config("M+ linearization needs a critical point of S+".into()));
            }
            let b = ff.corner_b(cp.y);
            let q = 0.5 * ff.mixed_corner_derivative(cp.y);
            Ok(DMatrix::from_row_slice(
                3,
                3,
                &[1.0, 0.0, 0.0, -b / j.h, 0.0, 1.0 / j.h, -sw * q, -0.5 * sw * j.s_yy, -m],
            ))
        }
    }
}

/// The same matrix by central differences of the vector field.
pub fn linearization_fd(ff: &FrontFace, cp: &CriticalPoint, site: LinearizationSite) -> Result<DMatrix<f64>> {
    let h = 1e-6;
    let mut jac = DMatrix::zeros(3, 3);
    match site {
        LinearizationSite::FrontFace => {
            let chart = |e: f64| match cp.side {
                CriticalSide::Plus => FrontChart::E(e),
                CriticalSide::Minus => FrontChart::Eminus(e),
            };
            let base = [0.0, cp.y, 0.0];
            let f = |x: [f64; 3]| front_face_rhs(ff, &FrontState { chart: chart(x[0]), y: x[1], theta: x[2] });
            for c in 0..3 {
                let (mut xp, mut xm) = (base, base);
                xp[c] += h;
                xm[c] -= h;
                if c == 0 {
                    // E >= 0: one-sided second-order difference
                    let mut x2 = base;
                    x2[0] += 2.0 * h;
                    let (f0, f1, f2) = (f(base), f(xp), f(x2));
                    for r in 0..3 {
                        jac[(r, c)] = (-3.0 * f0[r] + 4.0 * f1[r] - f2[r]) / (2.0 * h);
                    }
                } else {
                    let (fp, fm) = (f(xp), f(xm));
                    for r in 0..3 {
                        jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
                    }
                }
            }
        }
        LinearizationSite::MPlus => {
            let fam = ff.family();
            let f = |x: [f64; 3]| -> Result<[f64; 3]> {
                let rs = RescaledState { pt: BlowupPoint::E { e: 0.0, z: x[0] }, y: x[1], xi: 1.0, theta: x[2] };
                let t = rescaled_rhs(fam, &rs)?;
                Ok([t.d_other, t.dy, t.dtheta])
            };
            let base = [0.0, cp.y, 0.0];
            for c in 0..3 {
                let mut xp = base;
                xp[c] += h;
                if c == 0 {
                    let mut x2 = base;
                    x2[0] += 2.0 * h;
                    let (f0, f1, f2) = (f(base)?, f(xp)?, f(x2)?);
                    for r in 0..3 {
                        jac[(r, c)] = (-3.0 * f0[r] + 4.0 * f1[r] - f2[r]) / (2.0 * h);
                    }
                } else {
                    let mut xm = base;
                    xm[c] -= h;
                    let (fp, fm) = (f(xp)?, f(xm)?);
                    for r in 0..3 {
                        jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
                    }
                }
            }
        }
    }
    Ok(jac)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseEntry {
    pub point: CriticalPoint,
    /// Codimension of the stable manifold inside the front face.
    pub stable_codim: usize,
    /// Unstable dimension at the corner seen from `M+`: the index plus the off-face direction.
    pub unstable_dim_mplus: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    pub entries: Vec<MorseEntry>,
    pub euler_sum: i64,
    /// The potential is constant; there are no isolated critical points.
    pub degenerate: bool,
    pub minima: usize,
    pub maxima: usize,
    pub saddles: usize,
}

/// Checks `sum (-1)^index = chi(Y)` and tabulates stable codimensions.
pub fn morse_report(points: &[CriticalPoint], euler_characteristic: i64) -> Result<MorseReport> {
    if points.is_empty() {
        return Ok(MorseReport { entries: vec![], euler_sum: 0, degenerate: true, minima: 0, maxima: 0, saddles: 0 });
    }
    let euler_sum: i64 = points.iter().map(|p| if p.morse_index % 2 == 0 { 1 } else { -1 }).sum();
    if euler_sum != euler_characteristic {
        return Err(Error::EulerMismatch { found: euler_sum, expected: euler_characteristic });
    }
    let count = |k: PointKind| points.iter().filter(|p| p.kind == k).count();
    Ok(MorseReport {
        entries: points
            .iter()
            .map(|p| MorseEntry {
                point: p.clone(),
                stable_codim: p.morse_index,
                unstable_dim_mplus: p.morse_index + 1,
            })
            .collect(),
        euler_sum,
        degenerate: false,
        minima: count(PointKind::Min),
        maxima: count(PointKind::Max),
        saddles: count(PointKind::Saddle),
    })
}

/// The `eps = 0` geodesic leaving a minimum of `S+`, reported where it crosses `z = z1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaReference {
    pub z1: f64,
    pub y: f64,
    pub xi: f64,
    pub theta: f64,
    pub delta0: f64,
    /// Change of the `z1` state when the seed offset is halved.
    pub halving_shift: f64,
}

impl GammaReference {
    pub fn state(&self) -> RescaledState {
        RescaledState { pt: BlowupPoint::E { e: 0.0, z: self.z1 }, y: self.y, xi: self.xi, theta: self.theta }
    }
}

struct MPlusSystem<'a> {
    fam: &'a MetricFamily,
}

impl OdeSystem for MPlusSystem<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, _s: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let rs = RescaledState { pt: BlowupPoint::E { e: 0.0, z: x[0] }, y: x[1], xi: x[2], theta: x[3] };
        let t = rescaled_rhs(self.fam, &rs)?;
        dx.copy_from_slice(&[t.d_other, t.dy, t.dxi, t.dtheta]);
        Ok(())
    }
}

fn unit_xi_mplus(fam: &MetricFamily, z: f64, y: f64, theta: f64) -> Result<f64> {
    let pt = BlowupPoint::E { e: 0.0, z };
    let (ps, c) =
        fam.coefficients_at(&pt, y).ok_or_else(|| Error::Config("reference geodesics need an ansatz family".into()))?;
    let k = fam.k as i32;
    let w = ps.w;
    let d = 1.0 - w.powi(fam.kappa) * c.s - w.powi(2 * k) * c.b * c.b / c.h;
    let horiz = w.powi(2 * k - 2) * theta * theta / c.h;
    if horiz >= 1.0 || d <= 0.0 {
        return Err(Error::NoSolution("seed has no unit-speed lift".into()));
    }
    Ok(w.powi(2 * k - 1) * c.b * theta / c.h + ((1.0 - horiz) * d).sqrt())
}

fn reference_at(fam: &MetricFamily, cp: &CriticalPoint, v: (f64, f64), z1: f64, delta0: f64) -> Result<[f64; 3]> {
    let (z, y, th) = (delta0, cp.y + delta0 * v.0, delta0 * v.1);
    let xi = unit_xi_mplus(fam, z, y, th)?;
    let sys = MPlusSystem { fam };
    let opts = OdeOptions::with_tol(1e-13);
    let hit = ode::integrate_until(&sys, 0.0, &[z, y, xi, th], 200.0, &opts, |_, x| x[0] - z1)?;
    let (_, x) = hit.ok_or(Error::NoConvergence(200.0))?;
    Ok([x[1], x[2], x[3]])
}

/// Integrates the `eps = 0` rescaled system on `M+` from a minimum of `S+`, seeded at
/// offset `delta0` along the unstable eigendirection, up to `z = z1`.
pub fn gamma_min_reference(fam: &MetricFamily, cp: &CriticalPoint, z1: f64, delta0: f64) -> Result<GammaReference> {
    if cp.kind != PointKind::Min {
        return Err(Error::Config("reference geodesics start at minima of S+".into()));
    }
    let r = critical_reference(fam, cp, z1, delta0)?;
    if r.halving_shift > 1e-5 {
        return Err(Error::SeedSensitivity(r.halving_shift));
    }
    Ok(r)
}

/// As [`gamma_min_reference`] for any critical point of `S+`. The seed sensitivity
/// is reported in `halving_shift` rather than checked.
pub fn critical_reference(fam: &MetricFamily, cp: &CriticalPoint, z1: f64, delta0: f64) -> Result<GammaReference> {
    check_kappa(fam)?;
    if fam.ansatz().is_none() {
        return Err(Error::Config("reference geodesics need an ansatz family".into()));
    }
    if cp.side != CriticalSide::Plus {
        return Err(Error::Config("reference geodesics start on the S+ corner".into()));
    }
    if !(z1 > delta0 && delta0 > 0.0) {
        return Err(Error::Config(format!("need 0 < delta0 < z1, got delta0 = {delta0}, z1 = {z1}")));
    }
    let ff = FrontFace::new(fam)?;
    let lin = linearization(&ff, cp, LinearizationSite::MPlus)?;
    // (L - 1) v = 0 with v = (1, v_y, v_theta)
    let a = Matrix2::new(lin[(1, 1)] - 1.0, lin[(1, 2)], lin[(2, 1)], lin[(2, 2)] - 1.0);
    let rhs = Vector2::new(-lin[(1, 0)], -lin[(2, 0)]);
    let v = a.try_inverse().ok_or(Error::NonMorse(cp.y))? * rhs;
    let full = reference_at(fam, cp, (v[0], v[1]), z1, delta0)?;
    let half = reference_at(fam, cp, (v[0], v[1]), z1, 0.5 * delta0)?;
    let shift = (0..3).map(|i| (full[i] - half[i]).abs()).fold(0.0, f64::max);
    Ok(GammaReference { z1, y: half[0], xi: half[1], theta: half[2], delta0, halving_shift: shift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::ScalingFunction;

    fn model(delta: f64) -> FrontFace {
        FrontFace::new(&MetricFamily::morse_model(2, delta, ScalingFunction::power(2.0).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn morse_model_points() {
        let cps = critical_points(&model(0.7), CriticalSide::Plus, 2048).unwrap();
        let ys: Vec<f64> = cps.iter().map(|c| c.y).collect();
        let want = [0.0, PI / 2.0, PI, 1.5 * PI];
        assert_eq!(ys.len(), 4);
        for (a, b) in ys.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        // a = -2 k(k-1) delta^2 cos 2y
        assert!((cps[1].hess_eigs[0] - 1.96).abs() < 1e-12);
        assert!((cps[0].hess_eigs[0] + 1.96).abs() < 1e-12);
        let rep = morse_report(&cps, 0).unwrap();
        assert_eq!((rep.minima, rep.maxima), (2, 2));
    }

    #[test]
    fn constant_potential_is_degenerate() {
        let cps = critical_points(&model(0.0), CriticalSide::Plus, 256).unwrap();
        assert!(cps.is_empty());
        assert!(morse_report(&cps, 0).unwrap().degenerate);
    }

    #[test]
    fn torus_indices() {
        let jet = |y: [f64; 2]| -> TorusJet {
            (
                y[0].cos() + 2.0 * y[1].cos(),
                [-y[0].sin(), -2.0 * y[1].sin()],
                [[-y[0].cos(), 0.0], [0.0, -2.0 * y[1].cos()]],
            )
        };
        let cps = critical_points_torus(&jet, 8).unwrap();
        let mut idx: Vec<usize> = cps.iter().map(|c| c.morse_index).collect();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 1, 2]);
        assert_eq!(morse_report(&cps, 0).unwrap().saddles, 2);
    }

    #[test]
    fn analytic_eigenvalues() {
        let (a, b) = eigenvalues_analytic(4.0, 2);
        assert_eq!((a.re, b.re), (-1.0, -2.0));
        let (a, b) = eigenvalues_analytic(-4.0, 2);
        assert!((a.re - (-3.0 + 17f64.sqrt()) / 2.0).abs() < 1e-15 && b.re < 0.0);
        let (a, _) = eigenvalues_analytic(8.0, 2);
        assert!(a.re == -1.5 && a.im != 0.0);
    }

    #[test]
    fn reference_from_minimum_stays_on_axis() {
        let fam = MetricFamily::morse_model(2, 0.7, ScalingFunction::power(2.0).unwrap()).unwrap();
        let ff = FrontFace::new(&fam).unwrap();
        let cps = critical_points(&ff, CriticalSide::Plus, 512).unwrap();
        let r = gamma_min_reference(&fam, &cps[1], 1.0, 1e-8).unwrap();
        assert!((r.y - PI / 2.0).abs() < 1e-12 && r.theta.abs() < 1e-12);
        let e = crate::rescaled::rescaled_energy(&fam, &r.state()).unwrap();
        assert!((e - 1.0).abs() < 1e-10);
    }
}
