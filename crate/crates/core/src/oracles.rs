//! Closed-form and asymptotic solutions used as independent checks on the
//! integrator.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{BlochState, SystemParams};

/// Minimum scale separation for the asymptotic solutions to be trusted.
pub const REGIME_RATIO: f64 = 10.0;

/// Initial data of one rung together with the control parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    pub n: usize,
    pub r_n: f64,
    pub u0: f64,
    pub v0: f64,
    pub z0: f64,
    pub x0: f64,
    pub p0: f64,
    pub omega_r: f64,
    pub delta: f64,
}

impl OracleParams {
    /// Rung `n` of `s` at its own time origin.
    pub fn from_bloch(s: &BlochState, n: usize, params: &SystemParams) -> Result<Self> {
        if n >= s.n_rungs() {
            return Err(Error::FockOutOfRange { n, n_trunc: s.n_rungs() });
        }
        Ok(Self {
            n,
            r_n: s.r[n],
            u0: s.u[n],
            v0: s.v[n],
            z0: s.z[n],
            x0: s.x,
            p0: s.p,
            omega_r: params.omega_r,
            delta: params.delta,
        })
    }

    fn coupling(&self) -> f64 {
        ((self.n + 1) as f64).sqrt()
    }
}

/// Which sign of `∓` the resonant solution takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Upper sign: `z = -S sin(θ + φ)`, `φ = -arcsin(z0/S)`.
    Upper,
    /// Lower sign: `z = +S sin(θ + φ)`, `φ = +arcsin(z0/S)`.
    Lower,
}

impl Branch {
    /// Matches `ż(0) = -2 sqrt(n+1) v0 cos x0`: upper for `v0 >= 0`.
    pub fn from_initial_velocity(v0: f64) -> Self {
        if v0 >= 0.0 {
            Branch::Upper
        } else {
            Branch::Lower
        }
    }

    fn sign(self) -> f64 {
        match self {
            Branch::Upper => -1.0,
            Branch::Lower => 1.0,
        }
    }
}

/// Resonant (`δ = 0`) inversion of rung `n` given `∫cos x dτ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantZn {
    pub value: f64,
    pub branch: Branch,
}

pub fn resonant_zn(op: &OracleParams, integral_of_cos_x: f64, branch: Option<Branch>) -> Result<ResonantZn> {
    let s2 = op.r_n * op.r_n - op.u0 * op.u0;
    if !(s2 > 0.0) {
        return Err(Error::OracleUndefined(format!("R_n^2 - u_n(0)^2 = {s2:e} leaves the phase undefined")));
    }
    let s = s2.sqrt();
    let branch = branch.unwrap_or_else(|| Branch::from_initial_velocity(op.v0));
    let sg = branch.sign();
    let phi = sg * (op.z0 / s).clamp(-1.0, 1.0).asin();
    let value = sg * s * (2.0 * op.coupling() * integral_of_cos_x + phi).sin();
    Ok(ResonantZn { value, branch })
}

/// `∫_0^τ cos x dτ'` along free flight `x = x0 + ω_r p0 τ'`.
pub fn free_flight_integral(x0: f64, omega_r: f64, p0: f64, tau: f64) -> f64 {
    let v = omega_r * p0;
    if v == 0.0 {
        x0.cos() * tau
    } else {
        ((x0 + v * tau).sin() - x0.sin()) / v
    }
}

/// Resonant rung amplitudes: rotation by `sqrt(n+1) ∫cos x dτ`.
pub fn resonant_amplitudes(a_n0: C64, b_np1_0: C64, n: usize, integral_of_cos_x: f64) -> (C64, C64) {
    let theta = ((n + 1) as f64).sqrt() * integral_of_cos_x;
    let (s, c) = theta.sin_cos();
    let i = C64::i();
    (a_n0 * c + i * b_np1_0 * s, b_np1_0 * c + i * a_n0 * s)
}

/// Asymptotic regime of the amplitude-modulated inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxRegime {
    /// `ω_r|p0| ≫ max(|δ|, 2 sqrt(n+1))`.
    FastAtom,
    /// `|δ| ≫ max(ω_r|p0|, 2 sqrt(n+1))`.
    LargeDetuning,
}

impl ApproxRegime {
    /// Scale-separation ratio of this regime for `op`.
    pub fn ratio(self, op: &OracleParams) -> f64 {
        let speed = op.omega_r * op.p0.abs();
        let rabi = 2.0 * op.coupling();
        match self {
            ApproxRegime::FastAtom => speed / op.delta.abs().max(rabi),
            ApproxRegime::LargeDetuning => op.delta.abs() / speed.max(rabi),
        }
    }

    /// The regime with the larger separation ratio.
    pub fn best(op: &OracleParams) -> Self {
        if ApproxRegime::FastAtom.ratio(op) >= ApproxRegime::LargeDetuning.ratio(op) {
            ApproxRegime::FastAtom
        } else {
            ApproxRegime::LargeDetuning
        }
    }
}

/// Asymptotic inversion with the regime diagnostics it was evaluated under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxZn {
    pub value: f64,
    pub regime: ApproxRegime,
    pub ratio: f64,
    /// `None` when `ratio >= REGIME_RATIO`; otherwise a warning carrying the
    /// ratio.
    pub warning: Option<RegimeWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeWarning {
    pub ratio: f64,
    pub required: f64,
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "scale separation {:.3} is below the required {}", self.ratio, self.required)
    }
}

/// Amplitude-modulated inversion of rung `n` at position `x` and time `τ`.
pub fn approx_zn_fast_or_detuned(
    op: &OracleParams,
    regime: Option<ApproxRegime>,
    x: f64,
    tau: f64,
) -> Result<ApproxZn> {
    let regime = regime.unwrap_or_else(|| ApproxRegime::best(op));
    let transverse2 = op.r_n * op.r_n - op.z0 * op.z0;
    if transverse2 < 0.0 {
        return Err(Error::OracleUndefined(format!("|z_n(0)| exceeds R_n by {:e}", -transverse2)));
    }
    let g = op.coupling();
    let depth = 2.0 * (transverse2 * (g * g)).sqrt();
    let phi = if transverse2 > 0.0 { (op.u0 / transverse2.sqrt()).clamp(-1.0, 1.0).asin() } else { 0.0 };
    let phase = op.delta * tau + phi;
    let value = match regime {
        ApproxRegime::FastAtom => {
            let speed = op.omega_r * op.p0;
            if speed == 0.0 {
                return Err(Error::OracleUndefined("fast-atom branch needs p0 != 0".into()));
            }
            op.z0 - depth / speed * phase.cos() * x.sin()
        }
        ApproxRegime::LargeDetuning => {
            if op.delta == 0.0 {
                return Err(Error::OracleUndefined("large-detuning branch needs delta != 0".into()));
            }
            op.z0 + 2.0 * g * op.u0 / op.delta - depth / op.delta * x.cos() * phase.sin()
        }
    };
    let ratio = regime.ratio(op);
    let warning = (ratio < REGIME_RATIO).then_some(RegimeWarning { ratio, required: REGIME_RATIO });
    if let Some(w) = warning {
        log::warn!("{regime:?} asymptotics: {w}");
    }
    Ok(ApproxZn { value, regime, ratio, warning })
}

/// Asymptotic fidelity between twins detuned by `Δδ`.
pub fn approx_fidelity(a0: f64, b0: f64, delta_delta: f64, tau: f64) -> f64 {
    a0 * a0 + b0 * b0 + 2.0 * a0 * b0 * (delta_delta * tau).cos()
}

/// Resonant purity for an initially excited (or de-excited) atom in Fock
/// state `n`.
pub fn resonant_purity(n: usize, omega_r: f64, p0: f64, tau: f64) -> Result<f64> {
    let v = omega_r * p0;
    if v == 0.0 {
        return Err(Error::OracleUndefined("resonant purity needs omega_r * p0 != 0".into()));
    }
    let arg = 2.0 * ((n + 1) as f64).sqrt() / v * (v * tau).sin();
    Ok(0.5 + 0.5 * arg.cos().powi(2))
}

/// Period `π/(ω_r p0)` of [`resonant_purity`].
pub fn resonant_period(omega_r: f64, p0: f64) -> f64 {
    std::f64::consts::PI / (omega_r * p0).abs()
}

/// Rabi frequency `Ω_n = sqrt((|δ| - ω_r|p0|)^2 + n + 1)` near the
/// Doppler-Rabi resonance.
pub fn doppler_rabi_frequency(n: usize, delta: f64, omega_r: f64, p0: f64) -> f64 {
    let mismatch = delta.abs() - omega_r * p0.abs();
    (mismatch * mismatch + (n + 1) as f64).sqrt()
}

/// Purity near the Doppler-Rabi resonance, in the published closed form:
/// `1/2 + 1/2 (m^2/Ω^2 + sqrt(n+1)/Ω^2 cos Ωτ)^2` with `m = |δ| - ω_r|p0|`.
/// The oscillatory coefficient is taken as printed; only the frequency
/// content of this expression is relied on.
pub fn doppler_rabi_purity(n: usize, delta: f64, omega_r: f64, p0: f64, tau: f64) -> f64 {
    let omega = doppler_rabi_frequency(n, delta, omega_r, p0);
    let mismatch = delta.abs() - omega_r * p0.abs();
    let o2 = omega * omega;
    let inner = mismatch * mismatch / o2 + ((n + 1) as f64).sqrt() / o2 * (omega * tau).cos();
    0.5 + 0.5 * inner * inner
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn op(u0: f64, v0: f64, z0: f64) -> OracleParams {
        OracleParams {
            n: 10,
            r_n: (u0 * u0 + v0 * v0 + z0 * z0).sqrt(),
            u0,
            v0,
            z0,
            x0: 0.0,
            p0: 25.0,
            omega_r: 0.001,
            delta: 0.0,
        }
    }

    #[test]
    fn resonant_zn_initial_instant() {
        let o = op(0.0, 1.0, 0.0);
        assert_eq!(resonant_zn(&o, 0.0, None).unwrap().value, 0.0);
        for (v0, z0) in [(0.3, 0.5), (-0.3, 0.5), (0.0, 1.0), (0.2, -0.9)] {
            let o = op(0.1, v0, z0);
            let r = resonant_zn(&o, 0.0, None).unwrap();
            assert_abs_diff_eq!(r.value, z0, epsilon = 1e-15);
            let expect = if v0 >= 0.0 { Branch::Upper } else { Branch::Lower };
            assert_eq!(r.branch, expect);
        }
    }

    #[test]
    fn resonant_zn_slope_matches_bloch_equation() {
        for (v0, z0) in [(0.3, 0.5), (-0.3, 0.5), (0.6, -0.2), (-0.8, 0.0)] {
            let o = op(0.2, v0, z0);
            let h = 1e-6;
            // dI/dτ = cos x0 = 1 at the initial instant
            let dz = (resonant_zn(&o, h, None).unwrap().value - resonant_zn(&o, -h, None).unwrap().value) / (2.0 * h);
            assert_abs_diff_eq!(dz, -2.0 * 11f64.sqrt() * v0, epsilon = 1e-7);
        }
    }

    #[test]
    fn resonant_zn_undefined_on_pure_u() {
        assert!(matches!(resonant_zn(&op(1.0, 0.0, 0.0), 0.3, None), Err(Error::OracleUndefined(_))));
    }

    #[test]
    fn raman_nath_form_is_free_flight_integral() {
        // excited atom: u0 = v0 = 0, z0 = R = 1
        let o = op(0.0, 0.0, 1.0);
        for tau in [0.0, 3.7, 50.0, 125.0, 333.3] {
            let w = 0.001 * 25.0;
            let rn = {
                let phi = -(1.0f64).asin();
                -(2.0 * 11f64.sqrt() / w * (w * tau).sin() + phi).sin()
            };
            let i = free_flight_integral(0.0, 0.001, 25.0, tau);
            assert_abs_diff_eq!(resonant_zn(&o, i, None).unwrap().value, rn, epsilon = 1e-12);
        }
    }

    #[test]
    fn resonant_rotation() {
        let (a, b) = resonant_amplitudes(C64::new(0.3, 0.4), C64::new(-0.5, 0.1), 4, 0.0);
        assert_eq!((a, b), (C64::new(0.3, 0.4), C64::new(-0.5, 0.1)));
        // angle π/2 with n = 0 means ∫cos x = π/2
        let (a, b) = resonant_amplitudes(C64::new(1.0, 0.0), C64::new(0.0, 0.0), 0, FRAC_PI_2);
        assert_abs_diff_eq!(a.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((b - C64::i()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn large_detuning_closed_form() {
        let o = OracleParams { n: 10, r_n: 1.0, u0: 1.0, v0: 0.0, z0: 0.0, x0: 0.0, p0: 25.0, omega_r: 0.001, delta: 32.0 };
        let eps = 2.0 * 11f64.sqrt() / 32.0;
        for (x, tau) in [(0.0, 0.0), (0.3, 1.7), (2.0, 40.0)] {
            let z = approx_zn_fast_or_detuned(&o, Some(ApproxRegime::LargeDetuning), x, tau).unwrap();
            assert_abs_diff_eq!(z.value, eps * (1.0 - f64::cos(x) * (32.0 * tau).cos()), epsilon = 1e-12);
            let w = z.warning.unwrap();
            assert_abs_diff_eq!(w.ratio, 32.0 / (2.0 * 11f64.sqrt()), epsilon = 1e-12);
        }
        assert_eq!(ApproxRegime::best(&o), ApproxRegime::LargeDetuning);
        let far = OracleParams { delta: 1e4, ..o };
        let z = approx_zn_fast_or_detuned(&far, None, 1.0, 2.0).unwrap();
        assert!(z.warning.is_none());
        assert!(z.value.abs() < 2e-3);
    }

    #[test]
    fn detuned_mean_is_initial_value_without_u() {
        let o = OracleParams { n: 3, r_n: 1.0, u0: 0.0, v0: 0.6, z0: 0.8, x0: 0.0, p0: 1.0, omega_r: 0.001, delta: 300.0 };
        let period = 2.0 * PI / 300.0;
        let m: f64 = (0..1000)
            .map(|i| approx_zn_fast_or_detuned(&o, None, 0.0, i as f64 * period / 1000.0).unwrap().value)
            .sum::<f64>()
            / 1000.0;
        assert_abs_diff_eq!(m, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn fast_atom_branch() {
        let o = OracleParams { n: 0, r_n: 1.0, u0: 0.0, v0: 1.0, z0: 0.0, x0: 0.0, p0: 1e5, omega_r: 0.001, delta: 0.5 };
        assert_eq!(ApproxRegime::best(&o), ApproxRegime::FastAtom);
        let z = approx_zn_fast_or_detuned(&o, None, FRAC_PI_2, 0.0).unwrap();
        assert!(z.warning.is_none());
        assert_abs_diff_eq!(z.value, -2.0 / 100.0, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_asymptotics() {
        assert_abs_diff_eq!(approx_fidelity(0.5, 0.5, 0.0, 17.0), 1.0, epsilon = 1e-15);
        assert_eq!(approx_fidelity(1.0, 0.0, 1e-3, 123.0), 1.0);
        assert_abs_diff_eq!(approx_fidelity(0.5, 0.5, 1e-4, PI / 1e-4), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(approx_fidelity(0.5, 0.5, 2.0, 0.3), 0.5 + 0.5 * (0.6f64).cos(), epsilon = 1e-15);
    }

    #[test]
    fn resonant_purity_period() {
        assert_eq!(resonant_purity(10, 0.001, 25.0, 0.0).unwrap(), 1.0);
        let t = resonant_period(0.001, 25.0);
        assert_abs_diff_eq!(t, 125.66370614359172, epsilon = 1e-10);
        assert_abs_diff_eq!(resonant_purity(10, 0.001, 25.0, t).unwrap(), 1.0, epsilon = 1e-12);
        for i in 0..500 {
            let p = resonant_purity(10, 0.001, 25.0, i as f64 * 0.7).unwrap();
            assert!((0.5..=1.0).contains(&p));
        }
        assert!(resonant_purity(10, 0.001, 0.0, 1.0).is_err());
    }

    #[test]
    fn doppler_rabi_line() {
        let om = doppler_rabi_frequency(10, 32.0, 0.001, 32000.0);
        assert_abs_diff_eq!(om, 11f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(2.0 * om / (2.0 * PI), 11f64.sqrt() / PI, epsilon = 1e-12);
        assert!((2.0 * om / (2.0 * PI) - 1.056).abs() < 1e-3);
        let p0 = doppler_rabi_purity(10, 32.0, 0.001, 32000.0, 0.0);
        for i in 1..100 {
            assert!(doppler_rabi_purity(10, 32.0, 0.001, 32000.0, i as f64 * 0.13) <= p0 + 1e-15);
        }
        // far from resonance the oscillating part is negligible
        let (lo, hi) = (0..200).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let p = doppler_rabi_purity(10, 32.0, 0.001, 25.0, i as f64 * 0.05);
            (lo.min(p), hi.max(p))
        });
        let om = doppler_rabi_frequency(10, 32.0, 0.001, 25.0);
        assert!(hi - lo <= 2.0 * 11f64.sqrt() / (om * om));
        assert_abs_diff_eq!(lo, 1.0, epsilon = 0.02);
    }
}
