//! Power spectral density estimation for deflection traces.
//!
//! Welch's method: split the trace into half-overlapping Hann-windowed
//! segments, periodogram each, average. The output is the one-sided
//! density against frequency in hertz, the convention a spectrum
//! analyzer displays, so a trace with variance σ² satisfies
//! ∫ G(f) df ≈ σ² and a white sequence sits at G = 2σ²·dt.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PsdError {
    #[error("invalid spectral request: {msg}")]
    Domain { msg: String },
}

fn domain(msg: impl Into<String>) -> PsdError {
    PsdError::Domain { msg: msg.into() }
}

/// One-sided spectral density estimate on the grid f_k = k/(L·dt).
#[derive(Debug, Clone)]
pub struct PowerSpectrum {
    /// Bin frequencies in Hz, from 0 to Nyquist inclusive.
    pub freq_hz: Vec<f64>,
    /// Density per bin in (signal units)²·Hz⁻¹.
    pub power: Vec<f64>,
    /// Bin spacing in Hz.
    pub resolution_hz: f64,
    /// Number of averaged segments.
    pub segments: usize,
}

impl PowerSpectrum {
    /// Mean density over the bins inside [f_lo, f_hi], with the bin count;
    /// `None` if the band is empty.
    pub fn band_mean(&self, f_lo: f64, f_hi: f64) -> Option<(f64, usize)> {
        self.band_mean_of(f_lo, f_hi, |i, _| self.power[i])
    }

    /// Mean of an arbitrary density over the same bin selection, so an
    /// analytic spectrum can be compared bin-for-bin against the estimate.
    pub fn band_mean_of(
        &self,
        f_lo: f64,
        f_hi: f64,
        density: impl Fn(usize, f64) -> f64,
    ) -> Option<(f64, usize)> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (i, &f) in self.freq_hz.iter().enumerate() {
            if f >= f_lo && f <= f_hi {
                sum += density(i, f);
                count += 1;
            }
        }
        (count > 0).then(|| (sum / count as f64, count))
    }

    /// ∫ G df by bin sum; approximately the trace variance.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.resolution_hz
    }
}

/// Welch estimate with Hann windows of `segment_len` samples at 50% overlap.
///
/// Each segment has its own mean removed before windowing, which empties
/// the DC bin and leaves the first couple of bins depressed; band queries
/// should start a few bins up. Tighter `segment_len` buys more averages
/// at coarser resolution.
pub fn welch_psd(samples: &[f64], dt: f64, segment_len: usize) -> Result<PowerSpectrum, PsdError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(domain(format!("sample interval must be positive, got {dt:.3e}")));
    }
    if segment_len < 8 || segment_len % 2 != 0 {
        return Err(domain(format!(
            "segment length must be even and at least 8, got {segment_len}"
        )));
    }
    if samples.len() < segment_len {
        return Err(domain(format!(
            "trace of {} samples is shorter than one {segment_len}-sample segment",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(domain("trace contains non-finite samples".to_string()));
    }

    let len = segment_len;
    let hop = len / 2;
    let segments = 1 + (samples.len() - len) / hop;

    let window: Vec<f64> = (0..len)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos()))
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();

    let fft = FftPlanner::new().plan_fft_forward(len);
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    let mut accum = vec![0.0f64; len / 2 + 1];

    for s in 0..segments {
        let seg = &samples[s * hop..s * hop + len];
        let mean = seg.iter().sum::<f64>() / len as f64;
        for (b, (&x, &w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in accum.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }

    // One-sided scaling: interior bins carry both ±f halves.
    let scale = dt / (window_power * segments as f64);
    let resolution_hz = 1.0 / (len as f64 * dt);
    let mut power = accum;
    for (k, p) in power.iter_mut().enumerate() {
        let fold = if k == 0 || k == len / 2 { 1.0 } else { 2.0 };
        *p *= fold * scale;
    }
    let freq_hz = (0..power.len()).map(|k| k as f64 * resolution_hz).collect();

    Ok(PowerSpectrum { freq_hz, power, resolution_hz, segments })
}
