//! Front-face flow rewritten as a time-dependent Hamiltonian system.
//!
//! With `e^psi = (f(Z) / f(Z0))^(2k-1)`, `Theta = e^psi theta` and `ds = e^-psi dtau`:
//! `dy/ds = Theta / h`, `dTheta/ds = -d_y |Theta|^2 / 2 - e^(2 psi) S_y / 2`,
//! `dZ/ds = e^psi f(Z)`, `dtau/ds = e^psi`.

use serde::{Deserialize, Serialize};

use super::frontface::{front_face_rhs, FrontChart, FrontFace, FrontState};
use crate::error::{Error, Result};
use crate::flow::ode::{self, Control, DenseSolution, OdeOptions, OdeSystem};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReformulationReport {
    /// Sup over the compared samples of `|dy| + |dtheta| + |dZ| / max(1, |Z|)`.
    pub max_deviation: f64,
    /// For `p = 2`: sup of the relative errors of `Z = sinh(tau + tau0)` and
    /// `e^psi = (cosh(tau + tau0) / cosh(tau0))^(2k-1)`.
    pub closed_form_deviation: Option<f64>,
    pub samples: usize,
}

struct ZOnly<'a> {
    ff: &'a FrontFace,
}

impl OdeSystem for ZOnly<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _s: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let st = FrontState { chart: FrontChart::Z(x[0]), y: x[1], theta: x[2] };
        dx.copy_from_slice(&front_face_rhs(self.ff, &st));
        Ok(())
    }
}

struct Reformulated<'a> {
    ff: &'a FrontFace,
    f0: f64,
}

impl Reformulated<'_> {
    fn psi_exp(&self, zc: f64) -> f64 {
        (self.ff.family().sf.f(zc).0 / self.f0).powf(self.ff.m())
    }
}

impl OdeSystem for Reformulated<'_> {
    fn dim(&self) -> usize {
        4
    }

    /// State `[y, Theta, Z, tau]` in time `s`.
    fn rhs(&self, _s: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let (y, big_th, zc) = (x[0], x[1], x[2]);
        let j = self.ff.jet(&FrontChart::Z(zc), y);
        let ep = self.psi_exp(zc);
        let f = self.ff.family().sf.f(zc).0;
        dx[0] = big_th / j.h;
        dx[1] = big_th * big_th * j.h_y / (2.0 * j.h * j.h) - 0.5 * ep * ep * self.ff.s_weight() * j.s_y;
        dx[2] = ep * f;
        dx[3] = ep;
        Ok(())
    }
}

/// Integrates both formulations from a `Z`-chart front-face state up to `tau_end`
/// and compares them at the accepted steps of the reformulated system.
pub fn hamiltonian_reformulation_check(
    ff: &FrontFace,
    init: &FrontState,
    tau_end: f64,
    tol: f64,
) -> Result<ReformulationReport> {
    let FrontChart::Z(z0) = init.chart else {
        return Err(Error::Config("the reformulation starts in the Z chart".into()));
    };
    let opts = OdeOptions::with_tol(tol);
    let direct = ZOnly { ff };
    let mut dense = DenseSolution::default();
    ode::integrate(&direct, 0.0, &[z0, init.y, init.theta], tau_end, &opts, |v| {
        dense.push(v.dense);
        Ok(Control::Continue)
    })?;

    let sf = &ff.family().sf;
    let f0 = sf.f(z0).0;
    let refo = Reformulated { ff, f0 };
    let tau0 = z0.asinh();
    let m = ff.m();
    let is_p2 = sf.p() == Some(2.0);
    let mut max_dev = 0.0f64;
    let mut max_cf = 0.0f64;
    let mut n = 0usize;
    let mut compare = |x: &[f64]| {
        let tau = x[3];
        if tau > tau_end {
            return;
        }
        let d = dense.eval(tau).expect("direct solution");
        let ep = refo.psi_exp(x[2]);
        let theta = x[1] / ep;
        let dev = (x[0] - d[1]).abs() + (theta - d[2]).abs() + (x[2] - d[0]).abs() / x[2].abs().max(1.0);
        max_dev = max_dev.max(dev);
        if is_p2 {
            let zc = (tau + tau0).sinh();
            let ec = ((tau + tau0).cosh() / tau0.cosh()).powf(m);
            max_cf = max_cf.max((x[2] - zc).abs() / zc.abs().max(1.0)).max((ep - ec).abs() / ec);
        }
        n += 1;
    };
    let x0 = [init.y, refo.psi_exp(z0) * init.theta, z0, 0.0];
    compare(&x0);
    // s is bounded by tau since ds/dtau = e^-psi <= 1 for Z0 = 0; stop on the tau component
    ode::integrate(&refo, 0.0, &x0, tau_end.max(1.0) * 10.0, &opts, |v| {
        if v.x[3] >= tau_end {
            return Ok(Control::Stop);
        }
        compare(v.x);
        Ok(Control::Continue)
    })?;
    Ok(ReformulationReport {
        max_deviation: max_dev,
        closed_form_deviation: if is_p2 { Some(max_cf) } else { None },
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricFamily;
    use crate::scaling::ScalingFunction;

    #[test]
    fn formulations_agree() {
        let fam = MetricFamily::morse_model(2, 0.7, ScalingFunction::power(2.0).unwrap()).unwrap();
        let ff = FrontFace::new(&fam).unwrap();
        let r = hamiltonian_reformulation_check(&ff, &FrontState::at_z(0.0, 0.4, 0.5), 4.0, 1e-12).unwrap();
        assert!(r.samples > 10);
        assert!(r.max_deviation < 1e-7, "{}", r.max_deviation);
        assert!(r.closed_form_deviation.unwrap() < 1e-9);
    }
}
