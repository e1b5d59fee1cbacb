//! Explicit Runge-Kutta 8(5,3) of Dormand and Prince with 7th-order dense output.

#![allow(clippy::excessive_precision, clippy::needless_range_loop, clippy::too_many_arguments)]

use crate::error::{Error, Result};

/// A first-order system `x' = F(s, x)` of fixed dimension.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, s: f64, x: &[f64], dx: &mut [f64]) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-10, h_init: None, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Interpolant over one accepted step `[s_old, s_old + h]`.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub s_old: f64,
    pub h: f64,
    cont: [Vec<f64>; 8],
}

impl DenseStep {
    fn new(n: usize) -> Self {
        DenseStep { s_old: 0.0, h: 0.0, cont: std::array::from_fn(|_| vec![0.0; n]) }
    }

    pub fn s_new(&self) -> f64 {
        self.s_old + self.h
    }

    pub fn eval_component(&self, s: f64, i: usize) -> f64 {
        let th = (s - self.s_old) / self.h;
        let th1 = 1.0 - th;
        let c = &self.cont;
        let conpar = c[4][i] + (c[5][i] + (c[6][i] + c[7][i] * th) * th1) * th;
        c[0][i] + (c[1][i] + (c[2][i] + (c[3][i] + conpar * th1) * th) * th1) * th
    }

    pub fn eval(&self, s: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.eval_component(s, i);
        }
    }

    pub fn eval_vec(&self, s: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.cont[0].len()];
        self.eval(s, &mut v);
        v
    }
}

/// What the observer sees after each accepted step.
pub struct StepView<'a> {
    pub s: f64,
    pub x: &'a [f64],
    pub dx: &'a [f64],
    pub dense: &'a DenseStep,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

/// A stored piecewise interpolant of a whole integration.
#[derive(Clone, Debug, Default)]
pub struct DenseSolution {
    steps: Vec<DenseStep>,
}

impl DenseSolution {
    pub fn push(&mut self, step: &DenseStep) {
        self.steps.push(step.clone());
    }

    pub fn s_range(&self) -> Option<(f64, f64)> {
        Some((self.steps.first()?.s_old, self.steps.last()?.s_new()))
    }

    /// Evaluates at `s`, clamped to the covered range.
    pub fn eval(&self, s: f64) -> Option<Vec<f64>> {
        let (a, b) = self.s_range()?;
        let s = s.clamp(a, b);
        let idx = self.steps.partition_point(|st| st.s_new() < s).min(self.steps.len() - 1);
        Some(self.steps[idx].eval_vec(s))
    }
}

/// Integrates from `s0` towards `s_end > s0`, calling `observer` after every accepted step.
/// Returns the final `(s, x)` and statistics.
pub fn integrate<S, O>(
    sys: &S,
    s0: f64,
    x0: &[f64],
    s_end: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(f64, Vec<f64>, OdeStats)>
where
    S: OdeSystem + ?Sized,
    O: FnMut(&StepView) -> Result<Control>,
{
    let n = sys.dim();
    if x0.len() != n {
        return Err(Error::Config(format!("state has length {}, system expects {n}", x0.len())));
    }
    if !(s_end > s0) {
        return Ok((s0, x0.to_vec(), OdeStats::default()));
    }
    let mut w = Work::new(n);
    let mut stats = OdeStats::default();
    let mut s = s0;
    let mut x = x0.to_vec();
    sys.rhs(s, &x, &mut w.k[0])?;
    stats.evals += 1;
    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            stats.evals += 1;
            initial_step(sys, s, &x, &w.k[0].clone(), opts, &mut w)?
        }
    }
    .min(opts.h_max)
    .min(s_end - s);
    let mut facold = 1e-4f64;
    let mut last_rejected = false;
    let expo1 = 1.0 / 8.0 - BETA * 0.2;
    let mut steps = 0usize;

    loop {
        if steps >= opts.max_steps {
            return Err(Error::CapExceeded(opts.max_steps));
        }
        steps += 1;
        let h_floor = 1e-14 * s.abs().max(1.0);
        if h < h_floor {
            return Err(Error::StepFailure { at: s, reason: format!("step size {h:e} underflow") });
        }
        let last = s + h >= s_end;
        let h_eff = if last { s_end - s } else { h };
        let err = match w.try_step(sys, s, &x, h_eff, opts.rtol, opts.atol, &mut stats) {
            Ok(e) if e.is_finite() => e,
            _ => {
                // right-hand side left its domain or produced non-finite values
                h = h_eff * 0.25;
                last_rejected = true;
                stats.rejected += 1;
                continue;
            }
        };
        let fac11 = err.powf(expo1);
        let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h_eff / fac;
        if err <= 1.0 {
            facold = err.max(1e-4);
            let s_new = if last { s_end } else { s + h_eff };
            if sys.rhs(s_new, &w.x_new, &mut w.k[12]).is_err() || w.k[12].iter().any(|v| !v.is_finite()) {
                h = h_eff * 0.25;
                last_rejected = true;
                stats.rejected += 1;
                continue;
            }
            stats.evals += 1;
            if w.build_dense(sys, s, &x, h_eff, &mut stats).is_err() {
                h = h_eff * 0.25;
                last_rejected = true;
                stats.rejected += 1;
                continue;
            }
            stats.accepted += 1;
            x.copy_from_slice(&w.x_new);
            let k13 = std::mem::take(&mut w.k[12]);
            w.k[0].copy_from_slice(&k13);
            w.k[12] = k13;
            s = s_new;
            if last_rejected {
                h_new = h_new.min(h_eff);
            }
            last_rejected = false;
            let ctrl = observer(&StepView { s, x: &x, dx: &w.k[0], dense: &w.dense })?;
            if ctrl == Control::Stop || last {
                return Ok((s, x, stats));
            }
            h = h_new.min(opts.h_max);
        } else {
            h = h_eff / (1.0 / FAC_MIN).min(fac11 / SAFE);
            last_rejected = true;
            stats.rejected += 1;
        }
    }
}

/// Integrates until `g(s, x)` changes sign and returns the crossing, located by
/// bisection on the dense output, or `None` if `s_end` comes first.
pub fn integrate_until<S, G>(
    sys: &S,
    s0: f64,
    x0: &[f64],
    s_end: f64,
    opts: &OdeOptions,
    g: G,
) -> Result<Option<(f64, Vec<f64>)>>
where
    S: OdeSystem + ?Sized,
    G: Fn(f64, &[f64]) -> f64,
{
    let mut g_old = g(s0, x0);
    let mut hit = None;
    integrate(sys, s0, x0, s_end, opts, |v| {
        let g_new = g(v.s, v.x);
        if g_old != 0.0 && g_new.signum() != g_old.signum() {
            let (mut lo, mut hi) = (v.dense.s_old, v.s);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if g(mid, &v.dense.eval_vec(mid)).signum() == g_old.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hit = Some((hi, v.dense.eval_vec(hi)));
            return Ok(Control::Stop);
        }
        g_old = g_new;
        Ok(Control::Continue)
    })?;
    Ok(hit)
}

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;
const BETA: f64 = 0.04;

fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    s: f64,
    x: &[f64],
    f0: &[f64],
    opts: &OdeOptions,
    w: &mut Work,
) -> Result<f64> {
    let n = x.len();
    let sk = |i: usize| opts.atol + opts.rtol * x[i].abs();
    let dnf: f64 = (0..n).map(|i| (f0[i] / sk(i)).powi(2)).sum();
    let dny: f64 = (0..n).map(|i| (x[i] / sk(i)).powi(2)).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * (dny / dnf).sqrt() };
    h = h.min(opts.h_max);
    for i in 0..n {
        w.tmp[i] = x[i] + h * f0[i];
    }
    let mut f1 = vec![0.0; n];
    if sys.rhs(s + h, &w.tmp, &mut f1).is_err() {
        return Ok(h * 1e-3);
    }
    let der2 = ((0..n).map(|i| ((f1[i] - f0[i]) / sk(i)).powi(2)).sum::<f64>()).sqrt() / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
    Ok((100.0 * h).min(h1).min(opts.h_max))
}

struct Work {
    k: [Vec<f64>; 16],
    tmp: Vec<f64>,
    x_new: Vec<f64>,
    dense: DenseStep,
}

impl Work {
    fn new(n: usize) -> Self {
        Work {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            x_new: vec![0.0; n],
            dense: DenseStep::new(n),
        }
    }

    /// `tmp = x + h * sum(coef_j * k_j)`, then `k[dst] = F(s + c h, tmp)`.
    fn stage<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        s: f64,
        x: &[f64],
        h: f64,
        c: f64,
        coefs: &[(usize, f64)],
        dst: usize,
    ) -> Result<()> {
        for i in 0..x.len() {
            let mut acc = 0.0;
            for &(j, a) in coefs {
                acc += a * self.k[j][i];
            }
            self.tmp[i] = x[i] + h * acc;
        }
        let mut out = std::mem::take(&mut self.k[dst]);
        let r = sys.rhs(s + c * h, &self.tmp, &mut out);
        self.k[dst] = out;
        r?;
        if self.k[dst].iter().any(|v| !v.is_finite()) {
            return Err(Error::StepFailure { at: s, reason: "non-finite derivative".into() });
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn try_step<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        s: f64,
        x: &[f64],
        h: f64,
        rtol: f64,
        atol: f64,
        stats: &mut OdeStats,
    ) -> Result<f64> {
        self.stage(sys, s, x, h, C2, &[(0, A21)], 1)?;
        self.stage(sys, s, x, h, C3, &[(0, A31), (1, A32)], 2)?;
        self.stage(sys, s, x, h, C4, &[(0, A41), (2, A43)], 3)?;
        self.stage(sys, s, x, h, C5, &[(0, A51), (2, A53), (3, A54)], 4)?;
        self.stage(sys, s, x, h, C6, &[(0, A61), (3, A64), (4, A65)], 5)?;
        self.stage(sys, s, x, h, C7, &[(0, A71), (3, A74), (4, A75), (5, A76)], 6)?;
        self.stage(sys, s, x, h, C8, &[(0, A81), (3, A84), (4, A85), (5, A86), (6, A87)], 7)?;
        self.stage(sys, s, x, h, C9, &[(0, A91), (3, A94), (4, A95), (5, A96), (6, A97), (7, A98)], 8)?;
        self.stage(
            sys,
            s,
            x,
            h,
            C10,
            &[(0, A101), (3, A104), (4, A105), (5, A106), (6, A107), (7, A108), (8, A109)],
            9,
        )?;
        self.stage(
            sys,
            s,
            x,
            h,
            C11,
            &[(0, A111), (3, A114), (4, A115), (5, A116), (6, A117), (7, A118), (8, A119), (9, A1110)],
            10,
        )?;
        self.stage(
            sys,
            s,
            x,
            h,
            1.0,
            &[(0, A121), (3, A124), (4, A125), (5, A126), (6, A127), (7, A128), (8, A129), (9, A1210), (10, A1211)],
            11,
        )?;
        stats.evals += 11;
        let n = x.len();
        let (mut err, mut err2) = (0.0, 0.0);
        for i in 0..n {
            let k = &self.k;
            let inc = B1 * k[0][i]
                + B6 * k[5][i]
                + B7 * k[6][i]
                + B8 * k[7][i]
                + B9 * k[8][i]
                + B10 * k[9][i]
                + B11 * k[10][i]
                + B12 * k[11][i];
            self.x_new[i] = x[i] + h * inc;
            let sk = atol + rtol * x[i].abs().max(self.x_new[i].abs());
            let e2 = inc - BHH1 * k[0][i] - BHH2 * k[8][i] - BHH3 * k[11][i];
            err2 += (e2 / sk).powi(2);
            let e = ER1 * k[0][i]
                + ER6 * k[5][i]
                + ER7 * k[6][i]
                + ER8 * k[7][i]
                + ER9 * k[8][i]
                + ER10 * k[9][i]
                + ER11 * k[10][i]
                + ER12 * k[11][i];
            err += (e / sk).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        Ok(h.abs() * err * (1.0 / (deno * n as f64)).sqrt())
    }

    /// Fills the dense-output coefficients for the step just accepted; `k[12]` holds `F` at the new point.
    fn build_dense<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        s: f64,
        x: &[f64],
        h: f64,
        stats: &mut OdeStats,
    ) -> Result<()> {
        self.stage(
            sys,
            s,
            x,
            h,
            C14,
            &[(0, A141), (6, A147), (7, A148), (8, A149), (9, A1410), (10, A1411), (11, A1412), (12, A1413)],
            13,
        )?;
        self.stage(
            sys,
            s,
            x,
            h,
            C15,
            &[(0, A151), (5, A156), (6, A157), (7, A158), (10, A1511), (11, A1512), (12, A1513), (13, A1514)],
            14,
        )?;
        self.stage(
            sys,
            s,
            x,
            h,
            C16,
            &[(0, A161), (5, A166), (6, A167), (7, A168), (8, A169), (12, A1613), (13, A1614), (14, A1615)],
            15,
        )?;
        stats.evals += 3;
        let k = &self.k;
        let d = &mut self.dense;
        d.s_old = s;
        d.h = h;
        for i in 0..x.len() {
            let ydiff = self.x_new[i] - x[i];
            let bspl = h * k[0][i] - ydiff;
            d.cont[0][i] = x[i];
            d.cont[1][i] = ydiff;
            d.cont[2][i] = bspl;
            d.cont[3][i] = ydiff - h * k[12][i] - bspl;
            let row = |dd: &[f64; 12]| -> f64 {
                let idx = [0usize, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];
                h * idx.iter().zip(dd.iter()).map(|(&j, &c)| c * k[j][i]).sum::<f64>()
            };
            d.cont[4][i] = row(&D4);
            d.cont[5][i] = row(&D5);
            d.cont[6][i] = row(&D6);
            d.cont[7][i] = row(&D7);
        }
        Ok(())
    }
}

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;
const C14: f64 = 0.1E+00;
const C15: f64 = 0.2E+00;
const C16: f64 = 0.777777777777777777777777777778E+00;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;
const A141: f64 = 5.61675022830479523392909219681E-2;
const A147: f64 = 2.53500210216624811088794765333E-1;
const A148: f64 = -2.46239037470802489917441475441E-1;
const A149: f64 = -1.24191423263816360469010140626E-1;
const A1410: f64 = 1.5329179827876569731206322685E-1;
const A1411: f64 = 8.20105229563468988491666602057E-3;
const A1412: f64 = 7.56789766054569976138603589584E-3;
const A1413: f64 = -8.298E-3;
const A151: f64 = 3.18346481635021405060768473261E-2;
const A156: f64 = 2.83009096723667755288322961402E-2;
const A157: f64 = 5.35419883074385676223797384372E-2;
const A158: f64 = -5.49237485713909884646569340306E-2;
const A1511: f64 = -1.08347328697249322858509316994E-4;
const A1512: f64 = 3.82571090835658412954920192323E-4;
const A1513: f64 = -3.40465008687404560802977114492E-4;
const A1514: f64 = 1.41312443674632500278074618366E-1;
const A161: f64 = -4.28896301583791923408573538692E-1;
const A166: f64 = -4.69762141536116384314449447206E0;
const A167: f64 = 7.68342119606259904184240953878E0;
const A168: f64 = 4.06898981839711007970213554331E0;
const A169: f64 = 3.56727187455281109270669543021E-1;
const A1613: f64 = -1.39902416515901462129418009734E-3;
const A1614: f64 = 2.9475147891527723389556272149E0;
const A1615: f64 = -9.15095847217987001081870187138E0;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

// Dense-output rows over stages [1, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16].
const D4: [f64; 12] = [
    -0.84289382761090128651353491142E+01,
    0.56671495351937776962531783590E+00,
    -0.30689499459498916912797304727E+01,
    0.23846676565120698287728149680E+01,
    0.21170345824450282767155149946E+01,
    -0.87139158377797299206789907490E+00,
    0.22404374302607882758541771650E+01,
    0.63157877876946881815570249290E+00,
    -0.88990336451333310820698117400E-01,
    0.18148505520854727256656404962E+02,
    -0.91946323924783554000451984436E+01,
    -0.44360363875948939664310572000E+01,
];
const D5: [f64; 12] = [
    0.10427508642579134603413151009E+02,
    0.24228349177525818288430175319E+03,
    0.16520045171727028198505394887E+03,
    -0.37454675472269020279518312152E+03,
    -0.22113666853125306036270938578E+02,
    0.77334326684722638389603898808E+01,
    -0.30674084731089398182061213626E+02,
    -0.93321305264302278729567221706E+01,
    0.15697238121770843886131091075E+02,
    -0.31139403219565177677282850411E+02,
    -0.93529243588444783865713862664E+01,
    0.35816841486394083752465898540E+02,
];
const D6: [f64; 12] = [
    0.19985053242002433820987653617E+02,
    -0.38703730874935176555105901742E+03,
    -0.18917813819516756882830838328E+03,
    0.52780815920542364900561016686E+03,
    -0.11573902539959630126141871134E+02,
    0.68812326946963000169666922661E+01,
    -0.10006050966910838403183860980E+01,
    0.77771377980534432092869265740E+00,
    -0.27782057523535084065932004339E+01,
    -0.60196695231264120758267380846E+02,
    0.84320405506677161018159903784E+02,
    0.11992291136182789328035130030E+02,
];
const D7: [f64; 12] = [
    -0.25693933462703749003312586129E+02,
    -0.15418974869023643374053993627E+03,
    -0.23152937917604549567536039109E+03,
    0.35763911791061412378285349910E+03,
    0.93405324183624310003907691704E+02,
    -0.37458323136451633156875139351E+02,
    0.10409964950896230045147246184E+03,
    0.29840293426660503123344363579E+02,
    -0.43533456590011143754432175058E+02,
    0.96324553959188282948394950600E+02,
    -0.39177261675615439165231486172E+02,
    -0.14972683625798562581422125276E+03,
];

#[cfg(test)]
mod tests {
    use super::*;

    struct Osc;
    impl OdeSystem for Osc {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _s: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
            dx[0] = x[1];
            dx[1] = -x[0];
            Ok(())
        }
    }

    #[test]
    fn harmonic_oscillator_to_high_accuracy() {
        let opts = OdeOptions::with_tol(1e-12);
        let (s, x, _) = integrate(&Osc, 0.0, &[1.0, 0.0], 20.0, &opts, |_| Ok(Control::Continue)).unwrap();
        assert_eq!(s, 20.0);
        assert!((x[0] - 20f64.cos()).abs() < 1e-10, "{}", x[0] - 20f64.cos());
        assert!((x[1] + 20f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn dense_output_is_accurate_inside_steps() {
        let opts = OdeOptions::with_tol(1e-11);
        let mut worst = 0.0f64;
        integrate(&Osc, 0.0, &[1.0, 0.0], 10.0, &opts, |v| {
            for j in 1..8 {
                let s = v.dense.s_old + v.dense.h * j as f64 / 8.0;
                worst = worst.max((v.dense.eval_component(s, 0) - s.cos()).abs());
            }
            Ok(Control::Continue)
        })
        .unwrap();
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn exponential_growth_order() {
        struct Exp;
        impl OdeSystem for Exp {
            fn dim(&self) -> usize {
                1
            }
            fn rhs(&self, _s: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
                dx[0] = x[0];
                Ok(())
            }
        }
        let opts = OdeOptions::with_tol(1e-13);
        let (_, x, st) = integrate(&Exp, 0.0, &[1.0], 5.0, &opts, |_| Ok(Control::Continue)).unwrap();
        assert!((x[0] / 5f64.exp() - 1.0).abs() < 1e-11);
        assert!(st.accepted < 200);
    }
}
