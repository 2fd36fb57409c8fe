//! Explicit Runge-Kutta pair of order 8(5,3) with step-size control and a
//! seventh-order continuous extension (Dormand-Prince / Hairer coefficients).
//!
//! The local error is measured in an unnormalized weighted 2-norm, so
//! components that stay identically zero never influence the step sequence.

use crate::error::{Error, Result};

/// Autonomous first-order system `dy/dτ = f(y)` on a flat real vector.
pub trait OdeSystem: Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &[f64], dy: &mut [f64]);
}

impl<T: OdeSystem + ?Sized> OdeSystem for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        (**self).rhs(y, dy)
    }
}

/// Step-size policy shared by every integration in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct StepController {
    /// First trial step; estimated from the initial derivative when `None`.
    pub initial_step: Option<f64>,
    pub min_step: f64,
    pub max_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Invariant monitors run after this many accepted steps.
    pub monitor_every: usize,
    pub max_steps: u64,
    /// Project the state back onto its initial rung norms and energy at
    /// every monitor check (long-horizon drivers only; off for plain
    /// integration).
    pub rung_projection: bool,
}

impl Default for StepController {
    fn default() -> Self {
        Self {
            initial_step: None,
            min_step: 1e-12,
            max_step: 10.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            monitor_every: 100,
            max_steps: 500_000_000,
            rung_projection: false,
        }
    }
}

impl StepController {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.min_step > 0.0 && self.min_step <= self.max_step) {
            return bad("step bounds must satisfy 0 < min_step <= max_step");
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0) {
                return bad("initial step must be positive");
            }
        }
        if self.monitor_every == 0 {
            return bad("monitor cadence must be at least one step");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub evals: u64,
}

const SAFE: f64 = 0.9;
const FACC1: f64 = 1.0 / 0.333;
const FACC2: f64 = 1.0 / 6.0;
const EXPO1: f64 = 1.0 / 8.0;

pub struct Dop853<S: OdeSystem> {
    sys: S,
    ctrl: StepController,
    t: f64,
    y: Vec<f64>,
    h: f64,
    facold: f64,
    last_rejected: bool,
    stop: Option<f64>,
    // stage derivatives; k[0] is f at the start of the current/last step
    k: Vec<Vec<f64>>,
    f_new: Vec<f64>,
    fsal_pending: bool,
    ytmp: Vec<f64>,
    // previous step, for dense output
    t_old: f64,
    h_old: f64,
    y_old: Vec<f64>,
    cont: Vec<Vec<f64>>,
    extra: [Vec<f64>; 3],
    dense_ready: bool,
    stats: StepStats,
}

impl<S: OdeSystem> Dop853<S> {
    pub fn new(sys: S, t0: f64, y0: &[f64], ctrl: &StepController) -> Result<Self> {
        ctrl.validate()?;
        let n = sys.dim();
        if y0.len() != n {
            return Err(Error::DimensionMismatch { left: y0.len(), right: n });
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { tau: t0 });
        }
        let mut s = Self {
            sys,
            ctrl: ctrl.clone(),
            t: t0,
            y: y0.to_vec(),
            h: 0.0,
            facold: 1e-4,
            last_rejected: false,
            stop: None,
            k: vec![vec![0.0; n]; 12],
            f_new: vec![0.0; n],
            fsal_pending: false,
            ytmp: vec![0.0; n],
            t_old: t0,
            h_old: 0.0,
            y_old: y0.to_vec(),
            cont: vec![vec![0.0; n]; 8],
            extra: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            dense_ready: false,
            stats: StepStats::default(),
        };
        s.sys.rhs(&s.y, &mut s.k[0]);
        s.stats.evals += 1;
        s.h = match ctrl.initial_step {
            Some(h) => h,
            None => s.initial_step(),
        }
        .clamp(ctrl.min_step, ctrl.max_step);
        Ok(s)
    }

    pub fn system(&self) -> &S {
        &self.sys
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn t_prev(&self) -> f64 {
        self.t_old
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    /// Steps will not pass `t_stop` until it is cleared or moved.
    pub fn set_stop(&mut self, t_stop: Option<f64>) {
        self.stop = t_stop;
    }

    /// Replaces the current state (e.g. after a renormalization) and
    /// refreshes the first-stage derivative. The step size is kept.
    pub fn reset_state(&mut self, y: &[f64]) {
        self.y.copy_from_slice(y);
        self.sys.rhs(&self.y, &mut self.k[0]);
        self.stats.evals += 1;
        self.fsal_pending = false;
        self.dense_ready = false;
        self.t_old = self.t;
        self.h_old = 0.0;
        self.y_old.copy_from_slice(y);
    }

    fn initial_step(&mut self) -> f64 {
        let (rtol, atol) = (self.ctrl.rel_tol, self.ctrl.abs_tol);
        let n = self.y.len();
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..n {
            let sk = atol + rtol * self.y[i].abs();
            dnf += (self.k[0][i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.ctrl.max_step);
        for i in 0..n {
            self.ytmp[i] = self.y[i] + h * self.k[0][i];
        }
        self.sys.rhs(&self.ytmp, &mut self.k[1]);
        self.stats.evals += 1;
        let mut der2 = 0.0;
        for i in 0..n {
            let sk = atol + rtol * self.y[i].abs();
            der2 += ((self.k[1][i] - self.k[0][i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.abs().max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(1.0 / 8.0)
        };
        (100.0 * h).min(h1).min(self.ctrl.max_step)
    }

    /// Takes one accepted step (retrying internally after rejections).
    pub fn step(&mut self) -> Result<()> {
        if self.fsal_pending {
            std::mem::swap(&mut self.k[0], &mut self.f_new);
            self.fsal_pending = false;
        }
        loop {
            if self.stats.accepted + self.stats.rejected >= self.ctrl.max_steps {
                return Err(Error::TooManySteps(self.ctrl.max_steps));
            }
            let mut h = self.h;
            let mut clamped = false;
            if let Some(ts) = self.stop {
                let room = ts - self.t;
                if room <= 0.0 {
                    return Ok(());
                }
                if h >= room * (1.0 - 1e-12) || self.t + 1.01 * h > ts {
                    h = room;
                    clamped = true;
                }
            }
            if h < self.ctrl.min_step && !clamped {
                return Err(Error::StepUnderflow { tau: self.t, h });
            }
            let err = self.attempt(h);
            if !err.is_finite() {
                self.stats.rejected += 1;
                self.last_rejected = true;
                self.h = h * 0.1;
                continue;
            }
            let fac11 = err.powf(EXPO1);
            let fac = FACC2.max(FACC1.min(fac11 / SAFE));
            let mut h_new = h / fac;
            if err <= 1.0 {
                self.facold = err.max(1e-4);
                self.stats.accepted += 1;
                self.sys.rhs(&self.k[2], &mut self.f_new);
                self.stats.evals += 1;
                std::mem::swap(&mut self.y_old, &mut self.y);
                self.y.copy_from_slice(&self.k[2]);
                if self.y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { tau: self.t + h });
                }
                self.t_old = self.t;
                self.h_old = h;
                self.t = if clamped { self.stop.unwrap_or(self.t + h) } else { self.t + h };
                self.fsal_pending = true;
                self.dense_ready = false;
                if self.last_rejected {
                    h_new = h_new.min(h);
                }
                self.last_rejected = false;
                if clamped {
                    // a forced short step says little about the natural scale
                    h_new = h_new.max(self.h);
                }
                self.h = h_new.min(self.ctrl.max_step);
                return Ok(());
            } else {
                h_new = h / FACC1.min(fac11 / SAFE);
                self.last_rejected = true;
                self.stats.rejected += 1;
                self.h = h_new;
                if self.h < self.ctrl.min_step {
                    return Err(Error::StepUnderflow { tau: self.t, h: self.h });
                }
            }
        }
    }

    /// One trial step of size `h` from (t, y). Leaves stage derivatives in
    /// `k`, the candidate solution in `k[2]`, and returns the scaled error.
    fn attempt(&mut self, h: f64) -> f64 {
        let n = self.y.len();
        let sys = &self.sys;
        let y = &self.y;
        let yt = &mut self.ytmp;
        let k = &mut self.k;

        macro_rules! stage {
            ($dst:expr, $($c:expr => $src:expr),+) => {{
                for i in 0..n {
                    yt[i] = y[i] + h * (0.0 $(+ $c * k[$src][i])+);
                }
                sys.rhs(yt, &mut k[$dst]);
            }};
        }

        stage!(1, A21 => 0);
        stage!(2, A31 => 0, A32 => 1);
        stage!(3, A41 => 0, A43 => 2);
        stage!(4, A51 => 0, A53 => 2, A54 => 3);
        stage!(5, A61 => 0, A64 => 3, A65 => 4);
        stage!(6, A71 => 0, A74 => 3, A75 => 4, A76 => 5);
        stage!(7, A81 => 0, A84 => 3, A85 => 4, A86 => 5, A87 => 6);
        stage!(8, A91 => 0, A94 => 3, A95 => 4, A96 => 5, A97 => 6, A98 => 7);
        stage!(9, A101 => 0, A104 => 3, A105 => 4, A106 => 5, A107 => 6, A108 => 7, A109 => 8);
        stage!(10, A111 => 0, A114 => 3, A115 => 4, A116 => 5, A117 => 6, A118 => 7, A119 => 8,
            A1110 => 9);
        stage!(11, A121 => 0, A124 => 3, A125 => 4, A126 => 5, A127 => 6, A128 => 7, A129 => 8,
            A1210 => 9, A1211 => 10);
        self.stats.evals += 11;

        // k[1] and k[2] (stages 2, 3) are dead past this point and are
        // reused for the 8th-order increment and the new state.
        let (rtol, atol) = (self.ctrl.rel_tol, self.ctrl.abs_tol);
        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..n {
            let incr = B1 * k[0][i]
                + B6 * k[5][i]
                + B7 * k[6][i]
                + B8 * k[7][i]
                + B9 * k[8][i]
                + B10 * k[9][i]
                + B11 * k[10][i]
                + B12 * k[11][i];
            let y_new = y[i] + h * incr;
            let sk = atol + rtol * y[i].abs().max(y_new.abs());
            let e2 = incr - BHH1 * k[0][i] - BHH2 * k[8][i] - BHH3 * k[11][i];
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
            k[1][i] = incr;
            yt[i] = y_new;
        }
        std::mem::swap(&mut self.ytmp, &mut self.k[2]);
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        h.abs() * err * (1.0 / deno).sqrt()
    }

    fn prepare_dense(&mut self) {
        if self.dense_ready {
            return;
        }
        let n = self.y.len();
        let h = self.h_old;
        let sys = &self.sys;
        {
            let k = &self.k;
            let f_new = &self.f_new;
            let (y0, y1) = (&self.y_old, &self.y);
            for i in 0..n {
                let ydiff = y1[i] - y0[i];
                let bspl = h * k[0][i] - ydiff;
                self.cont[0][i] = y0[i];
                self.cont[1][i] = ydiff;
                self.cont[2][i] = bspl;
                self.cont[3][i] = ydiff - h * f_new[i] - bspl;
                for (row, d) in DENSE.iter().enumerate() {
                    self.cont[4 + row][i] = d[0] * k[0][i]
                        + d[5] * k[5][i]
                        + d[6] * k[6][i]
                        + d[7] * k[7][i]
                        + d[8] * k[8][i]
                        + d[9] * k[9][i]
                        + d[10] * k[10][i]
                        + d[11] * k[11][i];
                }
            }
        }
        // three extra stages
        let [s14, s15, s16] = &mut self.extra;
        let k = &self.k;
        let f_new = &self.f_new;
        let y0 = &self.y_old;
        let yt = &mut self.ytmp;
        for i in 0..n {
            yt[i] = y0[i]
                + h * (A141 * k[0][i]
                    + A147 * k[6][i]
                    + A148 * k[7][i]
                    + A149 * k[8][i]
                    + A1410 * k[9][i]
                    + A1411 * k[10][i]
                    + A1412 * k[11][i]
                    + A1413 * f_new[i]);
        }
        sys.rhs(yt, s14);
        for i in 0..n {
            yt[i] = y0[i]
                + h * (A151 * k[0][i]
                    + A156 * k[5][i]
                    + A157 * k[6][i]
                    + A158 * k[7][i]
                    + A1511 * k[10][i]
                    + A1512 * k[11][i]
                    + A1513 * f_new[i]
                    + A1514 * s14[i]);
        }
        sys.rhs(yt, s15);
        for i in 0..n {
            yt[i] = y0[i]
                + h * (A161 * k[0][i]
                    + A166 * k[5][i]
                    + A167 * k[6][i]
                    + A168 * k[7][i]
                    + A169 * k[8][i]
                    + A1613 * f_new[i]
                    + A1614 * s14[i]
                    + A1615 * s15[i]);
        }
        sys.rhs(yt, s16);
        self.stats.evals += 3;
        for (row, d) in DENSE.iter().enumerate() {
            let c = &mut self.cont[4 + row];
            for i in 0..n {
                c[i] = h * (c[i] + d[12] * f_new[i] + d[13] * s14[i] + d[14] * s15[i] + d[15] * s16[i]);
            }
        }
        self.dense_ready = true;
    }

    /// Evaluates the continuous extension of the last accepted step at
    /// `t` in `[t_prev, t]`.
    pub fn interpolate(&mut self, t: f64, out: &mut [f64]) {
        if self.h_old == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        self.prepare_dense();
        let s = (t - self.t_old) / self.h_old;
        let s1 = 1.0 - s;
        let c = &self.cont;
        for i in 0..out.len() {
            let conpar = c[4][i] + s * (c[5][i] + s1 * (c[6][i] + s * c[7][i]));
            out[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * conpar)));
        }
    }
}

const A21: f64 = 5.26001519587677318785587544488e-2;
const A31: f64 = 1.97250569845378994544595329183e-2;
const A32: f64 = 5.91751709536136983633785987549e-2;
const A41: f64 = 2.95875854768068491816892993775e-2;
const A43: f64 = 8.87627564304205475450678981324e-2;
const A51: f64 = 2.41365134159266685502369798665e-1;
const A53: f64 = -8.84549479328286085344864962717e-1;
const A54: f64 = 9.24834003261792003115737966543e-1;
const A61: f64 = 3.7037037037037037037037037037e-2;
const A64: f64 = 1.70828608729473871279604482173e-1;
const A65: f64 = 1.25467687566822425016691814123e-1;
const A71: f64 = 3.7109375e-2;
const A74: f64 = 1.70252211019544039314978060272e-1;
const A75: f64 = 6.02165389804559606850219397283e-2;
const A76: f64 = -1.7578125e-2;
const A81: f64 = 3.70920001185047927108779319836e-2;
const A84: f64 = 1.70383925712239993810214054705e-1;
const A85: f64 = 1.07262030446373284651809199168e-1;
const A86: f64 = -1.53194377486244017527936158236e-2;
const A87: f64 = 8.27378916381402288758473766002e-3;
const A91: f64 = 6.24110958716075717114429577812e-1;
const A94: f64 = -3.36089262944694129406857109825;
const A95: f64 = -8.68219346841726006818189891453e-1;
const A96: f64 = 2.75920996994467083049415600797e1;
const A97: f64 = 2.01540675504778934086186788979e1;
const A98: f64 = -4.34898841810699588477366255144e1;
const A101: f64 = 4.77662536438264365890433908527e-1;
const A104: f64 = -2.48811461997166764192642586468;
const A105: f64 = -5.90290826836842996371446475743e-1;
const A106: f64 = 2.12300514481811942347288949897e1;
const A107: f64 = 1.52792336328824235832596922938e1;
const A108: f64 = -3.32882109689848629194453265587e1;
const A109: f64 = -2.03312017085086261358222928593e-2;
const A111: f64 = -9.3714243008598732571704021658e-1;
const A114: f64 = 5.18637242884406370830023853209;
const A115: f64 = 1.09143734899672957818500254654;
const A116: f64 = -8.14978701074692612513997267357;
const A117: f64 = -1.85200656599969598641566180701e1;
const A118: f64 = 2.27394870993505042818970056734e1;
const A119: f64 = 2.49360555267965238987089396762;
const A1110: f64 = -3.0467644718982195003823669022;
const A121: f64 = 2.27331014751653820792359768449;
const A124: f64 = -1.05344954667372501984066689879e1;
const A125: f64 = -2.00087205822486249909675718444;
const A126: f64 = -1.79589318631187989172765950534e1;
const A127: f64 = 2.79488845294199600508499808837e1;
const A128: f64 = -2.85899827713502369474065508674;
const A129: f64 = -8.87285693353062954433549289258;
const A1210: f64 = 1.23605671757943030647266201528e1;
const A1211: f64 = 6.43392746015763530355970484046e-1;

const B1: f64 = 5.42937341165687622380535766363e-2;
const B6: f64 = 4.45031289275240888144113950566;
const B7: f64 = 1.89151789931450038304281599044;
const B8: f64 = -5.8012039600105847814672114227;
const B9: f64 = 3.1116436695781989440891606237e-1;
const B10: f64 = -1.52160949662516078556178806805e-1;
const B11: f64 = 2.01365400804030348374776537501e-1;
const B12: f64 = 4.47106157277725905176885569043e-2;

const BHH1: f64 = 0.244094488188976377952755905512;
const BHH2: f64 = 0.733846688281611857341361741547;
const BHH3: f64 = 0.220588235294117647058823529412e-1;

const ER1: f64 = 0.1312004499419488073250102996e-1;
const ER6: f64 = -0.1225156446376204440720569753e1;
const ER7: f64 = -0.4957589496572501915214079952;
const ER8: f64 = 0.1664377182454986536961530415e1;
const ER9: f64 = -0.3503288487499736816886487290;
const ER10: f64 = 0.3341791187130174790297318841;
const ER11: f64 = 0.8192320648511571246570742613e-1;
const ER12: f64 = -0.2235530786388629525884427845e-1;

const A141: f64 = 5.61675022830479523392909219681e-2;
const A147: f64 = 2.53500210216624811088794765333e-1;
const A148: f64 = -2.46239037470802489917441475441e-1;
const A149: f64 = -1.24191423263816360469010140626e-1;
const A1410: f64 = 1.5329179827876569731206322685e-1;
const A1411: f64 = 8.20105229563468988491666602057e-3;
const A1412: f64 = 7.56789766054569976138603589584e-3;
const A1413: f64 = -8.298e-3;

const A151: f64 = 3.18346481635021405060768473261e-2;
const A156: f64 = 2.83009096723667755288322961402e-2;
const A157: f64 = 5.35419883074385676223797384372e-2;
const A158: f64 = -5.49237485713909884646569340306e-2;
const A1511: f64 = -1.08347328697249322858509316994e-4;
const A1512: f64 = 3.82571090835658412954920192323e-4;
const A1513: f64 = -3.40465008687404560802977114492e-4;
const A1514: f64 = 1.41312443674632500278074618366e-1;

const A161: f64 = -4.28896301583791923408573538692e-1;
const A166: f64 = -4.69762141536116384314449447206;
const A167: f64 = 7.68342119606259904184240953878;
const A168: f64 = 4.06898981839711007970213554331;
const A169: f64 = 3.56727187455281109270669543021e-1;
const A1613: f64 = -1.39902416515901462129418009734e-3;
const A1614: f64 = 2.9475147891527723389556272149;
const A1615: f64 = -9.15095847217987001081870187138;

// dense-output weights, indexed by stage (0-based, 12 = f(y_new), 13..15 extra)
const DENSE: [[f64; 16]; 4] = [
    [
        -0.84289382761090128651353491142e1, 0.0, 0.0, 0.0, 0.0,
        0.56671495351937776962531783590, -0.30689499459498916912797304727e1,
        0.23846676565120698287728149680e1, 0.21170345824450282767155149946e1,
        -0.87139158377797299206789907490, 0.22404374302607882758541771650e1,
        0.63157877876946881815570249290, -0.88990336451333310820698117400e-1,
        0.18148505520854727256656404962e2, -0.91946323924783554000451984436e1,
        -0.44360363875948939664310572000e1,
    ],
    [
        0.10427508642579134603413151009e2, 0.0, 0.0, 0.0, 0.0,
        0.24228349177525818288430175319e3, 0.16520045171727028198505394887e3,
        -0.37454675472269020279518312152e3, -0.22113666853125306036270938578e2,
        0.77334326684722638389603898808e1, -0.30674084731089398182061213626e2,
        -0.93321305264302278729567221706e1, 0.15697238121770843886131091075e2,
        -0.31139403219565177677282850411e2, -0.93529243588444783865713862664e1,
        0.35816841486394083752465898540e2,
    ],
    [
        0.19985053242002433820987653617e2, 0.0, 0.0, 0.0, 0.0,
        -0.38703730874935176555105901742e3, -0.18917813819516756882830838328e3,
        0.52780815920542364900561016686e3, -0.11573902539959630126141871134e2,
        0.68812326946963000169666922661e1, -0.10006050966910838403183860980e1,
        0.77771377980534432092869265740, -0.27782057523535084065932004339e1,
        -0.60196695231264120758267380846e2, 0.84320405506677161018159903784e2,
        0.11992291136182789328035130030e2,
    ],
    [
        -0.25693933462703749003312586129e2, 0.0, 0.0, 0.0, 0.0,
        -0.15418974869023643374053993627e3, -0.23152937917604549567536039109e3,
        0.35763911791061412378285349910e3, 0.93405324183624310003907691704e2,
        -0.37458323136451633156875139351e2, 0.10409964950896230045147246184e3,
        0.29840293426660503123344363579e2, -0.43533456590011143754432175058e2,
        0.96324553959188282948394950600e2, -0.39177261675615439165231486172e2,
        -0.14972683625798562581422125276e3,
    ],
];
