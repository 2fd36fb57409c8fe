//! Domain types, initial-state constructors and the change of variables
//! between probability amplitudes and Bloch variables.
//!
//! The ladder is organised in rungs: rung `k` spans `|2,k>` and `|1,k+1>`.
//! With truncation `N` the Fock levels `0..=N` are kept, i.e. rungs `0..N`
//! plus the isolated ground amplitude `b_0`.

use num_complex::Complex64 as C64;

use crate::dynamics::StepController;
use crate::error::{Error, Result};

/// Control parameters of one run. Frequencies are in units of the vacuum
/// Rabi frequency, momenta in photon-recoil units.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub omega_r: f64,
    pub delta: f64,
    pub n_trunc: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub leak_tol: f64,
}

impl SystemParams {
    pub const DEFAULT_REL_TOL: f64 = 1e-10;
    pub const DEFAULT_ABS_TOL: f64 = 1e-12;
    pub const DEFAULT_LEAK_TOL: f64 = 1e-10;

    pub fn new(omega_r: f64, delta: f64, n_trunc: usize) -> Self {
        Self {
            omega_r,
            delta,
            n_trunc,
            rel_tol: Self::DEFAULT_REL_TOL,
            abs_tol: Self::DEFAULT_ABS_TOL,
            leak_tol: Self::DEFAULT_LEAK_TOL,
        }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.omega_r > 0.0 && self.omega_r.is_finite()) {
            return bad("omega_r must be positive and finite");
        }
        if !self.delta.is_finite() {
            return bad("delta must be finite");
        }
        if self.n_trunc < 1 {
            return bad("n_trunc must be at least 1");
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.leak_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        Ok(())
    }

    /// Step controller carrying this run's tolerances.
    pub fn controller(&self) -> StepController {
        StepController::with_tolerances(self.rel_tol, self.abs_tol)
    }
}

/// Full dynamical state in amplitude form.
#[derive(Debug, Clone, PartialEq)]
pub struct QcState {
    pub tau: f64,
    pub x: f64,
    pub p: f64,
    pub b0: C64,
    /// `a[k]` is the amplitude of `|2,k>`.
    pub a: Vec<C64>,
    /// `b[k]` is the amplitude of `|1,k+1>`.
    pub b: Vec<C64>,
}

impl QcState {
    pub fn vacuum(n_trunc: usize, x: f64, p: f64) -> Self {
        Self {
            tau: 0.0,
            x,
            p,
            b0: C64::new(0.0, 0.0),
            a: vec![C64::new(0.0, 0.0); n_trunc],
            b: vec![C64::new(0.0, 0.0); n_trunc],
        }
    }

    pub fn n_rungs(&self) -> usize {
        self.a.len()
    }

    /// Amplitude of `|2,n>` (zero above the truncation).
    pub fn a_level(&self, n: usize) -> C64 {
        self.a.get(n).copied().unwrap_or_default()
    }

    /// Amplitude of `|1,n>`.
    pub fn b_level(&self, n: usize) -> C64 {
        if n == 0 {
            self.b0
        } else {
            self.b.get(n - 1).copied().unwrap_or_default()
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.b0.norm_sqr()
            + self
                .a
                .iter()
                .zip(&self.b)
                .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
                .sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.p.is_finite()
            && self.b0.is_finite()
            && self.a.iter().chain(&self.b).all(|c| c.is_finite())
    }

    /// Checks normalization and finiteness.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonFinite { tau: self.tau });
        }
        if self.a.len() != self.b.len() {
            return Err(Error::DimensionMismatch { left: self.a.len(), right: self.b.len() });
        }
        let dev = (self.norm_sqr() - 1.0).abs();
        if dev > tol {
            return Err(Error::NotNormalized(dev));
        }
        Ok(())
    }

    pub(crate) fn normalize(&mut self) {
        let s = self.norm_sqr().sqrt();
        if s > 0.0 {
            self.b0 /= s;
            for c in self.a.iter_mut().chain(self.b.iter_mut()) {
                *c /= s;
            }
        }
    }

    /// Image under time reversal: amplitudes conjugated, momentum negated.
    pub fn time_reversed(&self) -> Self {
        Self {
            tau: self.tau,
            x: self.x,
            p: -self.p,
            b0: self.b0.conj(),
            a: self.a.iter().map(|c| c.conj()).collect(),
            b: self.b.iter().map(|c| c.conj()).collect(),
        }
    }
}

/// Equivalent real representation: one Bloch vector per rung.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochState {
    pub tau: f64,
    pub x: f64,
    pub p: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    /// Conserved rung norms `R_k = |a_k|^2 + |b_{k+1}|^2`.
    pub r: Vec<f64>,
    pub b0_mag2: f64,
}

impl BlochState {
    pub fn n_rungs(&self) -> usize {
        self.u.len()
    }

    /// Radius of rung `k`'s Bloch vector as currently stored.
    pub fn radius(&self, k: usize) -> f64 {
        (self.u[k].powi(2) + self.v[k].powi(2) + self.z[k].powi(2)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.p.is_finite()
            && self.u.iter().chain(&self.v).chain(&self.z).all(|c| c.is_finite())
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonFinite { tau: self.tau });
        }
        let n = self.u.len();
        for len in [self.v.len(), self.z.len(), self.r.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { left: n, right: len });
            }
        }
        for k in 0..n {
            let dev = (self.radius(k) - self.r[k]).abs();
            if dev > tol {
                return Err(Error::NotNormalized(dev));
            }
        }
        let dev = (self.r.iter().sum::<f64>() + self.b0_mag2 - 1.0).abs();
        if dev > tol {
            return Err(Error::NotNormalized(dev));
        }
        Ok(())
    }

    fn is_populated(&self, k: usize) -> bool {
        self.r[k] != 0.0 || self.u[k] != 0.0 || self.v[k] != 0.0 || self.z[k] != 0.0
    }

    /// Photon number `n` of the Fock reduction when every populated rung
    /// lies in `{n-1, n}`; `None` otherwise.
    pub fn fock_index(&self) -> Option<usize> {
        let populated: Vec<usize> = (0..self.n_rungs()).filter(|&k| self.is_populated(k)).collect();
        match populated.as_slice() {
            [k] => Some(*k),
            [lo, hi] if hi == &(lo + 1) => Some(*hi),
            _ => None,
        }
    }

    /// Image under time reversal: `p -> -p`, `v -> -v`.
    pub fn time_reversed(&self) -> Self {
        Self {
            p: -self.p,
            v: self.v.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }
}

/// Internal atomic state at preparation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomInit {
    pub amp_excited: C64,
    pub amp_ground: C64,
}

impl AtomInit {
    pub fn new(amp_excited: C64, amp_ground: C64) -> Result<Self> {
        let norm = amp_excited.norm_sqr() + amp_ground.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized((norm - 1.0).abs()));
        }
        Ok(Self { amp_excited, amp_ground })
    }

    pub fn excited() -> Self {
        Self { amp_excited: C64::new(1.0, 0.0), amp_ground: C64::new(0.0, 0.0) }
    }

    pub fn ground() -> Self {
        Self { amp_excited: C64::new(0.0, 0.0), amp_ground: C64::new(1.0, 0.0) }
    }

    /// `(|1> + e^{i phase}|2>)/sqrt(2)`.
    pub fn superposition(phase: f64) -> Self {
        Self::from_inversion(0.0, phase)
    }

    /// Atom with inversion `z` and relative phase `phase` of the excited
    /// amplitude: `sqrt((1+z)/2) e^{i phase} |2> + sqrt((1-z)/2) |1>`.
    pub fn from_inversion(z: f64, phase: f64) -> Self {
        let z = z.clamp(-1.0, 1.0);
        Self {
            amp_excited: C64::from_polar(((1.0 + z) / 2.0).sqrt(), phase),
            amp_ground: C64::new(((1.0 - z) / 2.0).sqrt(), 0.0),
        }
    }

    pub fn inversion(&self) -> f64 {
        self.amp_excited.norm_sqr() - self.amp_ground.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldInit {
    Fock(usize),
    Coherent(C64),
}

/// Complete specification of an initial condition, independent of
/// truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    pub field: FieldInit,
    pub atom: AtomInit,
    pub x0: f64,
    pub p0: f64,
}

impl InitialCondition {
    pub fn build(&self, params: &SystemParams) -> Result<QcState> {
        match self.field {
            FieldInit::Fock(n) => fock_initial(n, self.atom, params, self.x0, self.p0),
            FieldInit::Coherent(alpha) => coherent_initial(alpha, self.atom, params, self.x0, self.p0),
        }
    }

    pub fn with_atom(&self, atom: AtomInit) -> Self {
        Self { atom, ..*self }
    }

    pub fn with_p0(&self, p0: f64) -> Self {
        Self { p0, ..*self }
    }
}

/// Product state `atom ⊗ |n>`.
pub fn fock_initial(n: usize, atom: AtomInit, params: &SystemParams, x0: f64, p0: f64) -> Result<QcState> {
    params.validate()?;
    if n + 1 > params.n_trunc {
        return Err(Error::FockOutOfRange { n, n_trunc: params.n_trunc });
    }
    let mut s = QcState::vacuum(params.n_trunc, x0, p0);
    s.a[n] = atom.amp_excited;
    if n == 0 {
        s.b0 = atom.amp_ground;
    } else {
        s.b[n - 1] = atom.amp_ground;
    }
    s.normalize();
    Ok(s)
}

/// Coherent-state coefficients `c_0..=c_{n_max}` and the probability mass
/// above `n_max`.
pub fn coherent_coefficients(alpha: C64, n_max: usize) -> (Vec<C64>, f64) {
    let mut c = Vec::with_capacity(n_max + 1);
    let mut cur = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    c.push(cur);
    for n in 1..=n_max {
        cur = cur * alpha / (n as f64).sqrt();
        c.push(cur);
    }
    // tail: keep extending the recurrence until terms stop mattering
    let mut tail = 0.0;
    let mut n = n_max + 1;
    let mut mag2 = cur.norm_sqr();
    let a2 = alpha.norm_sqr();
    loop {
        mag2 *= a2 / n as f64;
        tail += mag2;
        if (mag2 <= tail * 1e-17 && n as f64 > a2) || mag2 == 0.0 || n > n_max + 100_000 {
            break;
        }
        n += 1;
    }
    (c, tail)
}

/// `atom ⊗ |alpha>` truncated to the representable levels and renormalized.
///
/// The excited component of level `N` has no partner inside the
/// truncation, so the tail that must stay below `leak_tol` starts at `N`.
pub fn coherent_initial(alpha: C64, atom: AtomInit, params: &SystemParams, x0: f64, p0: f64) -> Result<QcState> {
    params.validate()?;
    let n_trunc = params.n_trunc;
    let (c, tail_above) = coherent_coefficients(alpha, n_trunc);
    let tail = tail_above + c[n_trunc].norm_sqr();
    if tail >= params.leak_tol {
        return Err(Error::TruncationTooSmall { tail, n_trunc, leak_tol: params.leak_tol });
    }
    let mut s = QcState::vacuum(n_trunc, x0, p0);
    s.b0 = atom.amp_ground * c[0];
    for k in 0..n_trunc {
        s.a[k] = atom.amp_excited * c[k];
        s.b[k] = atom.amp_ground * c[k + 1];
    }
    s.normalize();
    Ok(s)
}

/// Bloch variables of every rung:
/// `u = 2 Re(a b*)`, `v = -2 Im(a b*)`, `z = |a|^2 - |b|^2`.
pub fn bloch_from_amplitudes(s: &QcState) -> BlochState {
    let n = s.n_rungs();
    let mut out = BlochState {
        tau: s.tau,
        x: s.x,
        p: s.p,
        u: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
        b0_mag2: s.b0.norm_sqr(),
    };
    for (a, b) in s.a.iter().zip(&s.b) {
        let w = a * b.conj();
        out.u.push(2.0 * w.re);
        out.v.push(-2.0 * w.im);
        out.z.push(a.norm_sqr() - b.norm_sqr());
        out.r.push(a.norm_sqr() + b.norm_sqr());
    }
    out
}

/// Per-rung populations `(|a_k|^2, |b_{k+1}|^2)` recovered from `R_k ± z_k`.
pub fn amplitude_moduli_from_bloch(s: &BlochState) -> Vec<(f64, f64)> {
    s.r.iter().zip(&s.z).map(|(r, z)| ((r + z) / 2.0, (r - z) / 2.0)).collect()
}
