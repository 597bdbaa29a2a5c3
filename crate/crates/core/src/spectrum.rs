//! Outlet trace to transmission spectrum, band constraints, and the
//! frequency-side seed of the adjoint.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Reference pressure for sound pressure levels.
pub const P_REF: f64 = 20e-6;

/// Regularization of `|p̂|` in the magnitude derivative.
const MAG_EPS: f64 = 1e-30;

/// `(pressure dof, weight)` pairs realizing `∫_Γout p dΓ` for linear edges.
pub fn outlet_weights(mesh: &Mesh) -> Vec<(usize, f64)> {
    let mut w = vec![0.0; mesh.ny + 1];
    for j in 0..mesh.ny {
        w[j] += 0.5 * mesh.h;
        w[j + 1] += 0.5 * mesh.h;
    }
    (0..=mesh.ny)
        .map(|j| (Mesh::p_dof(mesh.node(mesh.nx, j)), w[j]))
        .collect()
}

pub fn integrate_outlet(weights: &[(usize, f64)], v: &[f64]) -> f64 {
    weights.iter().map(|&(d, w)| w * v[d]).sum()
}

/// `wₙ = ½(1 − cos(2πn/(N−1)))`.
pub fn hann(n: usize) -> Vec<f64> {
    assert!(n >= 2, "Hann window needs at least two samples");
    let d = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / d).cos()))
        .collect()
}

/// `X_m = Σₙ xₙ e^{−i2πmn/N}` (no normalization).
pub fn dft(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if !buf.is_empty() {
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    }
    buf
}

/// `xₙ = (1/N) Σ_m X_m e^{+i2πmn/N}`.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    if !buf.is_empty() {
        FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    }
    let n = buf.len() as f64;
    buf.iter_mut().for_each(|v| *v /= n);
    buf
}

/// Spectrum of the Hann-windowed trace.
pub fn windowed_spectrum(trace: &[f64]) -> Vec<Complex64> {
    let w = hann(trace.len());
    let x: Vec<f64> = trace.iter().zip(&w).map(|(a, b)| a * b).collect();
    dft(&x)
}

/// Transpose of `x ↦ (windowed DFT of x)` restricted to `bins`, mapping the
/// real and imaginary parts of `y` back to the time axis:
/// `wₙ Σ_m (Re y_m cos θ − Im y_m sin θ)`, `θ = 2πmn/N`.
pub fn windowed_dft_transpose(y: &[Complex64], bins: &[usize], n: usize) -> Vec<f64> {
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    for (&m, &v) in bins.iter().zip(y) {
        full[m] += v;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut full);
    let w = hann(n);
    full.iter().zip(&w).map(|(z, w)| w * z.re).collect()
}

/// Frequency interval with explicit end inclusion, mapped to DFT bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub lo_hz: f64,
    pub hi_hz: f64,
    #[serde(default = "yes")]
    pub include_lo: bool,
    #[serde(default = "yes")]
    pub include_hi: bool,
}

fn yes() -> bool {
    true
}

impl Band {
    pub fn closed(lo_hz: f64, hi_hz: f64) -> Self {
        Self {
            lo_hz,
            hi_hz,
            include_lo: true,
            include_hi: true,
        }
    }

    pub fn new(lo_hz: f64, hi_hz: f64, include_lo: bool, include_hi: bool) -> Self {
        Self {
            lo_hz,
            hi_hz,
            include_lo,
            include_hi,
        }
    }

    pub fn contains(&self, f: f64) -> bool {
        let lo = if self.include_lo { f >= self.lo_hz } else { f > self.lo_hz };
        let hi = if self.include_hi { f <= self.hi_hz } else { f < self.hi_hz };
        lo && hi
    }

    /// Bin indices for resolution `df` and trace length `n`; edges must sit
    /// exactly on bins and below the Nyquist bin.
    pub fn bins(&self, df: f64, n: usize) -> Result<Vec<usize>> {
        let to_bin = |f: f64| -> Result<usize> {
            let x = f / df;
            let r = x.round();
            if f < 0.0 || (x - r).abs() > 1e-9 * r.max(1.0) {
                return Err(Error::Config(format!(
                    "band edge {f} Hz is not a multiple of the {df} Hz bin spacing"
                )));
            }
            Ok(r as usize)
        };
        let (lo, hi) = (to_bin(self.lo_hz)?, to_bin(self.hi_hz)?);
        let first = if self.include_lo { lo } else { lo + 1 };
        let last = if self.include_hi { hi as isize } else { hi as isize - 1 };
        if last < first as isize {
            return Err(Error::Config(format!(
                "band {}..{} Hz contains no bins",
                self.lo_hz, self.hi_hz
            )));
        }
        let last = last as usize;
        if last > n / 2 {
            return Err(Error::Config(format!(
                "band edge {} Hz exceeds the Nyquist frequency {} Hz",
                self.hi_hz,
                df * (n / 2) as f64
            )));
        }
        Ok((first..=last).collect())
    }
}

/// Union of band bins, sorted and deduplicated.
pub fn band_bins(bands: &[Band], df: f64, n: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for b in bands {
        out.extend(b.bins(df, n)?);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// `S_m = |p̂_m| / |p̂₀_m|` for every bin.
pub fn transmission(p: &[Complex64], p0: &[Complex64]) -> Vec<f64> {
    p.iter().zip(p0).map(|(a, b)| a.norm() / b.norm()).collect()
}

/// Rejects baselines whose magnitude in an active bin is below `1e-3` of
/// the spectrum's peak.
pub fn check_excitation(p0: &[Complex64], bins: &[usize], df: f64) -> Result<()> {
    let half = &p0[..=p0.len() / 2];
    let peak = half.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let threshold = 1e-3 * peak;
    for &m in bins {
        let magnitude = p0[m].norm();
        if !(magnitude >= threshold) || magnitude == 0.0 {
            return Err(Error::WeakExcitation {
                bin: m,
                freq_hz: m as f64 * df,
                magnitude,
                threshold,
            });
        }
    }
    Ok(())
}

/// `Φ = Σ_{m∈bins} (S_m − τ)² / τ²`.
pub fn constraint_value(s: &[f64], bins: &[usize], tau: f64) -> f64 {
    bins.iter().map(|&m| ((s[m] - tau) / tau).powi(2)).sum()
}

/// `∂Φ/∂trace[n]` for `Φ` of [`constraint_value`], exact through the
/// window and the DFT.
pub fn seed(p: &[Complex64], p0: &[Complex64], bins: &[usize], tau: f64) -> Vec<f64> {
    let y: Vec<Complex64> = bins
        .iter()
        .map(|&m| {
            let mag = p[m].norm();
            let s = mag / p0[m].norm();
            let c = 2.0 * (s - tau) / (tau * tau * p0[m].norm());
            p[m] * (c / (mag + MAG_EPS))
        })
        .collect();
    windowed_dft_transpose(&y, bins, p.len())
}

pub fn spl(z: Complex64) -> f64 {
    20.0 * (z.norm() / P_REF).log10()
}
