//! Right-hand sides of the Hamilton-Schrödinger equations in amplitude
//! form, Bloch form, and the two-rung Fock reduction.
//!
//! Flat layouts used by the integrator:
//! * amplitude: `[x, p, (Re a_k, Im a_k, Re b_{k+1}, Im b_{k+1}) for each rung]`
//! * Bloch:     `[x, p, (u_k, v_k, z_k) for each rung in the window]`
//!
//! Sums over rungs always run in increasing `k`, so results are
//! reproducible bit-for-bit for a given build.

use num_complex::Complex64 as C64;

use super::dop853::OdeSystem;
use crate::error::{Error, Result};
use crate::model::{BlochState, QcState, SystemParams};

/// `(sin x, cos x)` from one out-of-line call, so that every system sees
/// bit-identical values whichever way the optimizer would have lowered
/// the pair at each call site.
#[inline(never)]
fn trig(x: f64) -> (f64, f64) {
    x.sin_cos()
}

#[derive(Debug, Clone)]
pub struct AmplitudeSystem {
    pub omega_r: f64,
    pub delta: f64,
    sqrt_n1: Vec<f64>,
}

impl AmplitudeSystem {
    pub fn new(params: &SystemParams, n_rungs: usize) -> Self {
        Self {
            omega_r: params.omega_r,
            delta: params.delta,
            sqrt_n1: (0..n_rungs).map(|k| ((k + 1) as f64).sqrt()).collect(),
        }
    }

    pub fn n_rungs(&self) -> usize {
        self.sqrt_n1.len()
    }
}

impl OdeSystem for AmplitudeSystem {
    fn dim(&self) -> usize {
        2 + 4 * self.sqrt_n1.len()
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let (sx, cx) = trig(y[0]);
        let hd = 0.5 * self.delta;
        let mut force = 0.0;
        for (k, &g) in self.sqrt_n1.iter().enumerate() {
            let i = 2 + 4 * k;
            let (ar, ai, br, bi) = (y[i], y[i + 1], y[i + 2], y[i + 3]);
            let gc = g * cx;
            // da = i (delta/2 a + g cos x b)
            let (wr, wi) = (hd * ar + gc * br, hd * ai + gc * bi);
            dy[i] = -wi;
            dy[i + 1] = wr;
            // db = i (-delta/2 b + g cos x a)
            let (wr, wi) = (-hd * br + gc * ar, -hd * bi + gc * ai);
            dy[i + 2] = -wi;
            dy[i + 3] = wr;
            force += g * (ar * br + ai * bi);
        }
        dy[0] = self.omega_r * y[1];
        dy[1] = -2.0 * sx * force;
    }
}

/// Bloch-form equations on a contiguous window of rungs
/// `first_rung..first_rung + n_rungs`.
#[derive(Debug, Clone)]
pub struct BlochSystem {
    pub omega_r: f64,
    pub delta: f64,
    pub first_rung: usize,
    sqrt_n1: Vec<f64>,
}

impl BlochSystem {
    pub fn new(params: &SystemParams, first_rung: usize, n_rungs: usize) -> Self {
        Self {
            omega_r: params.omega_r,
            delta: params.delta,
            first_rung,
            sqrt_n1: (0..n_rungs).map(|k| ((first_rung + k + 1) as f64).sqrt()).collect(),
        }
    }

    pub fn n_rungs(&self) -> usize {
        self.sqrt_n1.len()
    }
}

impl OdeSystem for BlochSystem {
    fn dim(&self) -> usize {
        2 + 3 * self.sqrt_n1.len()
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let (sx, cx) = trig(y[0]);
        let d = self.delta;
        let mut force = 0.0;
        for (k, &g) in self.sqrt_n1.iter().enumerate() {
            let i = 2 + 3 * k;
            let (u, v, z) = (y[i], y[i + 1], y[i + 2]);
            dy[i] = d * v;
            dy[i + 1] = -d * u + 2.0 * g * z * cx;
            dy[i + 2] = -2.0 * g * v * cx;
            force += g * u;
        }
        dy[0] = self.omega_r * y[1];
        dy[1] = -sx * force;
    }
}

/// The closed set obtained for a field prepared in `|n>`: only rungs
/// `n-1` and `n` are ever populated. Layout
/// `[x, p, u_{n-1}, v_{n-1}, z_{n-1}, u_n, v_n, z_n]`, or
/// `[x, p, u_0, v_0, z_0]` when `n = 0`.
#[derive(Debug, Clone)]
pub struct FockSystem {
    pub omega_r: f64,
    pub delta: f64,
    pub n: usize,
}

impl FockSystem {
    pub fn new(params: &SystemParams, n: usize) -> Self {
        Self { omega_r: params.omega_r, delta: params.delta, n }
    }

    pub fn first_rung(&self) -> usize {
        self.n.saturating_sub(1)
    }

    pub fn n_rungs(&self) -> usize {
        if self.n == 0 {
            1
        } else {
            2
        }
    }
}

impl OdeSystem for FockSystem {
    fn dim(&self) -> usize {
        2 + 3 * self.n_rungs()
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let (sx, cx) = trig(y[0]);
        let d = self.delta;
        let g_n = (self.n as f64).sqrt();
        let g_n1 = ((self.n + 1) as f64).sqrt();
        dy[0] = self.omega_r * y[1];
        if self.n == 0 {
            let (u0, v0, z0) = (y[2], y[3], y[4]);
            dy[1] = -sx * (0.0 + g_n1 * u0);
            dy[2] = d * v0;
            dy[3] = -d * u0 + 2.0 * g_n1 * z0 * cx;
            dy[4] = -2.0 * g_n1 * v0 * cx;
            return;
        }
        let (um, vm, zm) = (y[2], y[3], y[4]);
        let (un, vn, zn) = (y[5], y[6], y[7]);
        dy[1] = -sx * (0.0 + g_n * um + g_n1 * un);
        dy[2] = d * vm;
        dy[5] = d * vn;
        dy[3] = -d * um + 2.0 * g_n * zm * cx;
        dy[6] = -d * un + 2.0 * g_n1 * zn * cx;
        dy[4] = -2.0 * g_n * vm * cx;
        dy[7] = -2.0 * g_n1 * vn * cx;
    }
}

/// Time derivative of an amplitude-form state.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeDerivative {
    pub x: f64,
    pub p: f64,
    pub b0: C64,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
}

/// Time derivative of a Bloch-form state (full ladder layout).
#[derive(Debug, Clone, PartialEq)]
pub struct BlochDerivative {
    pub x: f64,
    pub p: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
}

pub(crate) fn pack_amplitude(s: &QcState) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 + 4 * s.n_rungs());
    y.push(s.x);
    y.push(s.p);
    for (a, b) in s.a.iter().zip(&s.b) {
        y.extend_from_slice(&[a.re, a.im, b.re, b.im]);
    }
    y
}

pub(crate) fn unpack_amplitude_into(y: &[f64], s: &mut QcState) {
    s.x = y[0];
    s.p = y[1];
    for k in 0..s.a.len() {
        let i = 2 + 4 * k;
        s.a[k] = C64::new(y[i], y[i + 1]);
        s.b[k] = C64::new(y[i + 2], y[i + 3]);
    }
}

pub(crate) fn pack_bloch(s: &BlochState, first: usize, count: usize) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 + 3 * count);
    y.push(s.x);
    y.push(s.p);
    for k in first..first + count {
        y.extend_from_slice(&[s.u[k], s.v[k], s.z[k]]);
    }
    y
}

pub(crate) fn unpack_bloch_into(y: &[f64], first: usize, s: &mut BlochState) {
    s.x = y[0];
    s.p = y[1];
    let count = (y.len() - 2) / 3;
    for j in 0..count {
        let i = 2 + 3 * j;
        s.u[first + j] = y[i];
        s.v[first + j] = y[i + 1];
        s.z[first + j] = y[i + 2];
    }
}

/// Hamilton-Schrödinger equations in amplitude form. `b_0` only rotates
/// in phase.
pub fn rhs_amplitude(s: &QcState, params: &SystemParams) -> Result<AmplitudeDerivative> {
    if !s.is_finite() {
        return Err(Error::NonFinite { tau: s.tau });
    }
    let sys = AmplitudeSystem::new(params, s.n_rungs());
    let y = pack_amplitude(s);
    let mut dy = vec![0.0; y.len()];
    sys.rhs(&y, &mut dy);
    let mut out = QcState::vacuum(s.n_rungs(), 0.0, 0.0);
    unpack_amplitude_into(&dy, &mut out);
    Ok(AmplitudeDerivative {
        x: out.x,
        p: out.p,
        b0: C64::new(0.0, -0.5 * params.delta) * s.b0,
        a: out.a,
        b: out.b,
    })
}

fn bloch_derivative_from(dy: &[f64], first: usize, n: usize) -> BlochDerivative {
    let mut d = BlochDerivative {
        x: dy[0],
        p: dy[1],
        u: vec![0.0; n],
        v: vec![0.0; n],
        z: vec![0.0; n],
    };
    for j in 0..(dy.len() - 2) / 3 {
        let i = 2 + 3 * j;
        d.u[first + j] = dy[i];
        d.v[first + j] = dy[i + 1];
        d.z[first + j] = dy[i + 2];
    }
    d
}

/// Bloch-form equations over the whole ladder.
pub fn rhs_bloch(s: &BlochState, params: &SystemParams) -> Result<BlochDerivative> {
    if !s.is_finite() {
        return Err(Error::NonFinite { tau: s.tau });
    }
    let n = s.n_rungs();
    let sys = BlochSystem::new(params, 0, n);
    let y = pack_bloch(s, 0, n);
    let mut dy = vec![0.0; y.len()];
    sys.rhs(&y, &mut dy);
    Ok(bloch_derivative_from(&dy, 0, n))
}

/// Fock-reduced equations. The state must populate at most the two
/// adjacent rungs `n-1, n` (a single rung counts as `n`).
pub fn rhs_fock(s: &BlochState, params: &SystemParams) -> Result<BlochDerivative> {
    if !s.is_finite() {
        return Err(Error::NonFinite { tau: s.tau });
    }
    let n = s.fock_index().ok_or_else(|| Error::RungCount {
        expected: 2,
        found: (0..s.n_rungs()).filter(|&k| s.r[k] != 0.0 || s.u[k] != 0.0 || s.v[k] != 0.0 || s.z[k] != 0.0).count(),
    })?;
    let sys = FockSystem::new(params, n);
    let y = pack_bloch(s, sys.first_rung(), sys.n_rungs());
    let mut dy = vec![0.0; y.len()];
    sys.rhs(&y, &mut dy);
    Ok(bloch_derivative_from(&dy, sys.first_rung(), s.n_rungs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bloch_from_amplitudes, fock_initial, AtomInit};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn params(delta: f64) -> SystemParams {
        SystemParams::new(0.001, delta, 12)
    }

    #[test]
    fn antinode_excited_fock_has_no_force() {
        let s = fock_initial(10, AtomInit::excited(), &params(0.0), 0.0, 25.0).unwrap();
        let d = rhs_amplitude(&s, &params(0.0)).unwrap();
        assert_eq!(d.p, 0.0);
        assert_abs_diff_eq!(d.x, 0.025, epsilon = 1e-15);
        // db_{11} = i sqrt(11) a_10
        assert_abs_diff_eq!(d.b[10].im, 11f64.sqrt(), epsilon = 1e-14);
        assert_eq!(d.b[10].re, 0.0);
        assert_eq!(d.a[10], C64::new(0.0, 0.0));
    }

    #[test]
    fn node_decouples_field() {
        let mut s = fock_initial(10, AtomInit::excited(), &params(0.4), FRAC_PI_2, 25.0).unwrap();
        s.b[10] = C64::new(0.3, 0.1);
        s.normalize();
        let d = rhs_amplitude(&s, &params(0.4)).unwrap();
        let expect = C64::new(0.0, 0.2) * s.a[10];
        assert_abs_diff_eq!(d.a[10].re, expect.re, epsilon = 1e-15);
        assert_abs_diff_eq!(d.a[10].im, expect.im, epsilon = 1e-15);
    }

    #[test]
    fn force_on_entangled_rung_at_node() {
        let mut s = QcState::vacuum(12, FRAC_PI_2, 0.0);
        let h = 0.5f64.sqrt();
        s.a[10] = C64::new(h, 0.0);
        s.b[10] = C64::new(h, 0.0);
        let d = rhs_amplitude(&s, &params(0.0)).unwrap();
        assert_abs_diff_eq!(d.p, -(11f64.sqrt()), epsilon = 1e-12);
        let db = rhs_bloch(&bloch_from_amplitudes(&s), &params(0.0)).unwrap();
        assert_abs_diff_eq!(db.p, -(11f64.sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn resonance_freezes_u() {
        let s = fock_initial(3, AtomInit::superposition(0.7), &params(0.0), 0.3, 5.0).unwrap();
        let d = rhs_bloch(&bloch_from_amplitudes(&s), &params(0.0)).unwrap();
        assert!(d.u.iter().all(|&du| du == 0.0));
    }

    #[test]
    fn excited_pole_drives_v() {
        let s = fock_initial(10, AtomInit::excited(), &params(0.4), 0.0, 25.0).unwrap();
        let b = bloch_from_amplitudes(&s);
        let d = rhs_bloch(&b, &params(0.4)).unwrap();
        assert_abs_diff_eq!(d.v[10], 2.0 * 11f64.sqrt(), epsilon = 1e-14);
        let df = rhs_fock(&b, &params(0.4)).unwrap();
        assert_eq!(d, df);
    }

    #[test]
    fn fock_force_at_node() {
        let mut b = bloch_from_amplitudes(&QcState::vacuum(12, FRAC_PI_2, 0.0));
        b.u[10] = 1.0;
        b.r[10] = 1.0;
        let d = rhs_fock(&b, &params(0.4)).unwrap();
        assert_abs_diff_eq!(d.p, -(11f64.sqrt()), epsilon = 1e-14);
    }

    #[test]
    fn fock_rejects_spread_ladder() {
        let mut b = bloch_from_amplitudes(&QcState::vacuum(12, 0.0, 0.0));
        b.z[2] = 0.5;
        b.r[2] = 0.5;
        b.z[7] = 0.5;
        b.r[7] = 0.5;
        assert!(matches!(rhs_fock(&b, &params(0.4)), Err(Error::RungCount { found: 2, .. })));
    }

    #[test]
    fn b0_rotates() {
        let s = fock_initial(0, AtomInit::ground(), &params(0.4), 0.0, 0.0).unwrap();
        let d = rhs_amplitude(&s, &params(0.4)).unwrap();
        assert_abs_diff_eq!(d.b0.im, -0.2, epsilon = 1e-15);
    }
}
