//! Reduced atomic state diagnostics, fidelity, and time-series statistics.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{BlochState, QcState};

/// Above this, the eigenvalue radicand is reported as out of range instead
/// of being silently clamped.
pub const RADICAND_TOL: f64 = 1e-10;

/// Populations and coherence of the reduced atomic density matrix:
/// `A = Σ|a_n|^2`, `B = Σ|b_n|^2`, `C = Σ a_n b_n^*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSummary {
    pub a: f64,
    pub b: f64,
    /// From Bloch data only `|C|` is known; `C` is then real and
    /// non-negative.
    pub c: C64,
}

impl ReducedSummary {
    pub fn purity(&self) -> f64 {
        self.a * self.a + self.b * self.b + 2.0 * self.c.norm_sqr()
    }

    pub fn linear_entropy(&self) -> f64 {
        1.0 - self.purity()
    }

    /// Eigenvalues `1/2 ± sqrt(1/4 + |C|^2 - AB)`, largest first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let radicand = 0.25 + self.c.norm_sqr() - self.a * self.b;
        if !(-RADICAND_TOL..=0.25 + RADICAND_TOL).contains(&radicand) {
            log::warn!("reduced-state radicand {radicand:e} outside [0, 1/4]; clamping");
        }
        let root = radicand.clamp(0.0, 0.25).sqrt();
        (0.5 + root, 0.5 - root)
    }

    pub fn von_neumann_entropy(&self) -> f64 {
        let (l1, l2) = self.eigenvalues();
        let term = |l: f64| if l > 0.0 { -l * l.ln() } else { 0.0 };
        term(l1) + term(l2)
    }
}

/// States whose reduced atomic density matrix can be formed.
pub trait AtomicReduction {
    fn reduced(&self) -> Result<ReducedSummary>;
}

impl AtomicReduction for QcState {
    fn reduced(&self) -> Result<ReducedSummary> {
        let a: f64 = self.a.iter().map(|c| c.norm_sqr()).sum();
        let b: f64 = self.b0.norm_sqr() + self.b.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let c = self
            .a
            .iter()
            .enumerate()
            .map(|(n, an)| an * self.b_level(n).conj())
            .sum();
        Ok(ReducedSummary { a, b, c })
    }
}

impl AtomicReduction for BlochState {
    /// `C` couples rung `n` to rung `n-1` (with `b_0` acting as rung `-1`),
    /// so its modulus is recoverable only when at most one adjacent pair of
    /// rungs is populated.
    fn reduced(&self) -> Result<ReducedSummary> {
        let inv = inversion_bloch(self);
        let total = self.r.iter().sum::<f64>() + self.b0_mag2;
        let a = 0.5 * (total + inv);
        let b = 0.5 * (total - inv);
        // rung j of the extended list is rung j-1 of the ladder
        let radius = |j: usize| if j == 0 { self.b0_mag2 } else { self.r[j - 1] };
        let z = |j: usize| if j == 0 { -self.b0_mag2 } else { self.z[j - 1] };
        let populated = |j: usize| radius(j) != 0.0;
        let mut pair = None;
        for j in 1..=self.n_rungs() {
            if populated(j) && populated(j - 1) {
                if pair.is_some() {
                    return Err(Error::Unsupported(
                        "coherence of a multi-rung state needs the amplitude form".into(),
                    ));
                }
                pair = Some(j);
            }
        }
        let c_mag2 = pair.map_or(0.0, |j| 0.25 * (radius(j) + z(j)) * (radius(j - 1) - z(j - 1)));
        Ok(ReducedSummary { a, b, c: C64::new(c_mag2.max(0.0).sqrt(), 0.0) })
    }
}

/// Atomic inversion `Σ|a_n|^2 - Σ|b_n|^2`.
pub fn inversion(s: &QcState) -> f64 {
    let r = s.reduced().expect("amplitude form always reduces");
    r.a - r.b
}

/// Atomic inversion from Bloch data, `Σ z_n - |b_0|^2`.
pub fn inversion_bloch(s: &BlochState) -> f64 {
    s.z.iter().sum::<f64>() - s.b0_mag2
}

pub fn purity(s: &impl AtomicReduction) -> Result<f64> {
    Ok(s.reduced()?.purity())
}

pub fn linear_entropy(s: &impl AtomicReduction) -> Result<f64> {
    Ok(s.reduced()?.linear_entropy())
}

pub fn von_neumann_entropy(s: &impl AtomicReduction) -> Result<f64> {
    Ok(s.reduced()?.von_neumann_entropy())
}

/// Purity of a Fock-field state from its two active rungs `n-1`, `n`.
pub fn fock_purity(z_nm1: f64, z_n: f64, r_nm1: f64, r_n: f64) -> f64 {
    0.5 * (1.0 + (z_n + z_nm1).powi(2) + (r_n + z_n) * (r_nm1 - z_nm1))
}

/// Squared overlap `|<ψ1|ψ2>|^2` of the normalized states. Dividing by
/// both norms makes `fidelity(s, s)` exactly 1 and keeps the result in
/// `[0, 1]` under rounding.
pub fn fidelity(s1: &QcState, s2: &QcState) -> Result<f64> {
    let num = overlap(s1, s2)?.norm_sqr();
    // same summation order as the overlap itself
    let den = overlap(s1, s1)?.re * overlap(s2, s2)?.re;
    if !(den > 0.0) {
        return Err(Error::NotNormalized(1.0));
    }
    Ok((num / den).min(1.0))
}

/// `<ψ1|ψ2>` including the `b_0` component.
pub fn overlap(s1: &QcState, s2: &QcState) -> Result<C64> {
    if s1.n_rungs() != s2.n_rungs() {
        return Err(Error::DimensionMismatch { left: s1.n_rungs(), right: s2.n_rungs() });
    }
    let mut sum = s1.b0.conj() * s2.b0;
    for k in 0..s1.n_rungs() {
        sum += s1.a[k].conj() * s2.a[k] + s1.b[k].conj() * s2.b[k];
    }
    Ok(sum)
}

/// Uniformly sampled real series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("sampling step must be positive, got {dt}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { tau: t0 + i as f64 * dt });
        }
        Ok(Self { t0, dt, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Samples with `t_start <= τ <= t_end` (up to rounding of the grid).
    pub fn window(&self, t_start: f64, t_end: f64) -> TimeSeries {
        let eps = 1e-9 * self.dt;
        let lo = ((t_start - self.t0 - eps) / self.dt).ceil().max(0.0) as usize;
        let hi = (((t_end - self.t0 + eps) / self.dt).floor() + 1.0).max(0.0) as usize;
        let hi = hi.min(self.values.len());
        let lo = lo.min(hi);
        TimeSeries { t0: self.time(lo), dt: self.dt, values: self.values[lo..hi].to_vec() }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Root-mean-square deviation `sqrt(<P^2> - <P>^2)` over the whole series.
pub fn purity_variance(series: &TimeSeries) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort { needed: 2, have: series.len() });
    }
    // shifting by a sample keeps a constant series exactly at zero
    let shift = series.values[0];
    let n = series.len() as f64;
    let mean = series.values.iter().map(|v| v - shift).sum::<f64>() / n;
    let var = series.values.iter().map(|v| (v - shift - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect(),
        }
    }
}

/// Minimum series length accepted by [`power_spectrum`].
pub const MIN_SPECTRUM_LEN: usize = 64;

/// One-sided magnitude spectrum of the mean-subtracted, windowed series.
/// Frequencies are cycles per unit time (`ω/2π` for angular `ω`); a
/// sinusoid of amplitude `A` on a bin centre has magnitude `A`.
pub fn power_spectrum(series: &TimeSeries, window: Window) -> Result<Vec<(f64, f64)>> {
    let n = series.len();
    if n < MIN_SPECTRUM_LEN {
        return Err(Error::SeriesTooShort { needed: MIN_SPECTRUM_LEN, have: n });
    }
    let mean = series.mean();
    let w = window.weights(n);
    let gain: f64 = w.iter().sum();
    let mut buf: Vec<C64> = series.values.iter().zip(&w).map(|(v, wi)| C64::new((v - mean) * wi, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = 1.0 / (n as f64 * series.dt);
    Ok((0..=n / 2)
        .map(|k| {
            let one_sided = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
            (k as f64 * df, one_sided * buf[k].norm() / gain)
        })
        .collect())
}

/// Location and height of the largest non-DC spectral line.
pub fn dominant_peak(spectrum: &[(f64, f64)]) -> Option<(f64, f64)> {
    spectrum
        .iter()
        .skip(1)
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Spectral flatness (geometric over arithmetic mean of power) restricted to
/// `f_lo <= f <= f_hi`; 1 for white noise, near 0 for a line spectrum.
pub fn spectral_flatness(spectrum: &[(f64, f64)], f_lo: f64, f_hi: f64) -> f64 {
    let power: Vec<f64> = spectrum
        .iter()
        .filter(|(f, _)| *f >= f_lo && *f <= f_hi && *f > 0.0)
        .map(|(_, m)| m * m)
        .collect();
    if power.is_empty() {
        return 0.0;
    }
    let arith = power.iter().sum::<f64>() / power.len() as f64;
    if arith <= 0.0 {
        return 0.0;
    }
    let geo = (power.iter().map(|p| p.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / power.len() as f64).exp();
    geo / arith
}

/// Normalized autocorrelation of the mean-subtracted series for lags
/// `0..=max_lag` samples. The biased estimator (sum over the overlap divided
/// by the full length) is used, so `r(lag)` tapers and the fundamental
/// period wins over its multiples.
pub fn autocorrelation(series: &TimeSeries, max_lag: usize) -> Vec<f64> {
    let mean = series.mean();
    let d: Vec<f64> = series.values.iter().map(|v| v - mean).collect();
    let var: f64 = d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64;
    (0..=max_lag.min(d.len().saturating_sub(1)))
        .map(|lag| {
            let m = d.len() - lag;
            let c = d[..m].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / d.len() as f64;
            if var > 0.0 { c / var } else { 0.0 }
        })
        .collect()
}

/// Period of the series: the lag of the highest autocorrelation maximum
/// after the first zero crossing, refined by a parabola through the three
/// samples around it. `None` when the autocorrelation never crosses zero
/// within half the series.
pub fn autocorrelation_period(series: &TimeSeries) -> Option<f64> {
    let r = autocorrelation(series, series.len() / 2);
    let start = r.iter().position(|&v| v < 0.0)?;
    let (best, _) = r
        .iter()
        .enumerate()
        .skip(start)
        .take(r.len().saturating_sub(start + 1))
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let (ym, y0, yp) = (r[best - 1], r[best], r[best + 1]);
    let denom = ym - 2.0 * y0 + yp;
    let shift = if denom != 0.0 { 0.5 * (ym - yp) / denom } else { 0.0 };
    Some((best as f64 + shift) * series.dt)
}
