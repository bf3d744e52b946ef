//! Vibration metrics and FFT diagnosis.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::format::{ser_sig, ser_sig_opt, Table};
use crate::{Error, Result};

/// Shortest trace accepted by [`spectrum`].
pub const MIN_SPECTRUM_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VibrationMetrics {
    #[serde(serialize_with = "ser_sig")]
    pub rms: f64,
    #[serde(serialize_with = "ser_sig")]
    pub peak: f64,
    /// `peak / rms`; absent for an all-zero signal.
    #[serde(serialize_with = "ser_sig_opt")]
    pub crest_factor: Option<f64>,
}

impl VibrationMetrics {
    pub const ZERO: VibrationMetrics = VibrationMetrics {
        rms: 0.0,
        peak: 0.0,
        crest_factor: None,
    };
}

/// Root mean square, `sqrt(Σ a_i² / n)`. Zero for an empty slice.
pub fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|a| a * a).sum::<f64>() / samples.len() as f64).sqrt()
}

pub fn metrics(samples: &[f64]) -> Result<VibrationMetrics> {
    if samples.is_empty() {
        return Err(Error::domain("samples", "metrics need at least one sample"));
    }
    let peak = samples.iter().map(|a| a.abs()).fold(0.0, f64::max);
    // Rounding can push rms an ulp above peak for constant signals.
    let rms = rms(samples).min(peak);
    let crest_factor = (rms > 0.0).then(|| peak / rms);
    Ok(VibrationMetrics {
        rms,
        peak,
        crest_factor,
    })
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (TAU * i as f64 / n as f64).cos()))
        .collect()
}

/// One-sided, amplitude-corrected magnitude spectrum: a sine of amplitude
/// `A` centred on a bin reads `A` in that bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    sample_rate: f64,
    fft_len: usize,
    magnitudes: Vec<f64>,
    /// N·Σw² / (Σw)², the window's equivalent noise bandwidth in bins.
    noise_bandwidth_bins: f64,
}

impl Spectrum {
    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    /// Hz per bin, `sample_rate / N`.
    pub fn frequency_resolution(&self) -> f64 {
        self.sample_rate / self.fft_len as f64
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.frequency_resolution()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.magnitudes.len())
            .map(|k| self.frequency(k))
            .collect()
    }

    /// Mean square of the signal estimated from the spectrum.
    ///
    /// Exact (Parseval) for the windowed signal; for stationary signals it
    /// estimates the raw mean square.
    pub fn mean_square(&self) -> f64 {
        let last = self.magnitudes.len() - 1;
        let has_nyquist = self.fft_len.is_multiple_of(2);
        let sum: f64 = self
            .magnitudes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                if k == 0 || (has_nyquist && k == last) {
                    m * m
                } else {
                    0.5 * m * m
                }
            })
            .sum();
        sum / self.noise_bandwidth_bins
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["frequency_hz", "magnitude"]);
        for (k, m) in self.magnitudes.iter().enumerate() {
            t.push(vec![self.frequency(k), *m]);
        }
        t
    }
}

/// Hann-windowed magnitude spectrum; no zero padding.
pub fn spectrum(samples: &[f64], sample_rate: f64) -> Result<Spectrum> {
    if samples.len() < MIN_SPECTRUM_LEN {
        return Err(Error::domain(
            "samples",
            format!(
                "spectrum needs at least {MIN_SPECTRUM_LEN} samples, got {}",
                samples.len()
            ),
        ));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::domain(
            "sample_rate",
            format!("must be finite and > 0 Hz, got {sample_rate}"),
        ));
    }
    let n = samples.len();
    let window = hann_window(n);
    let coherent: f64 = window.iter().sum();
    let power: f64 = window.iter().map(|w| w * w).sum();
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .zip(&window)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let half = n / 2;
    let magnitudes = buf[..=half]
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let one_sided = if k == 0 || (n.is_multiple_of(2) && k == half) {
                1.0
            } else {
                2.0
            };
            one_sided * c.norm() / coherent
        })
        .collect();
    Ok(Spectrum {
        sample_rate,
        fft_len: n,
        magnitudes,
        noise_bandwidth_bins: n as f64 * power / (coherent * coherent),
    })
}

/// Frequency of the strongest bin at or above `min_frequency`, refined by a
/// parabola through the peak bin and its two neighbours.
pub fn dominant_frequency(spec: &Spectrum, min_frequency: f64) -> Result<f64> {
    if !(min_frequency.is_finite() && min_frequency >= 0.0) {
        return Err(Error::domain(
            "min_frequency",
            format!("must be finite and >= 0, got {min_frequency}"),
        ));
    }
    let mags = &spec.magnitudes;
    let first = mags
        .iter()
        .enumerate()
        .position(|(k, _)| spec.frequency(k) >= min_frequency)
        .ok_or_else(|| {
            Error::domain(
                "min_frequency",
                format!(
                    "no bin at or above {min_frequency} Hz (Nyquist {} Hz)",
                    spec.sample_rate / 2.0
                ),
            )
        })?;
    let (peak, &peak_mag) = mags[first..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, m)| (i + first, m))
        .expect("range is non-empty");
    if peak_mag <= 0.0 {
        return Err(Error::domain(
            "spectrum",
            format!("no energy at or above {min_frequency} Hz"),
        ));
    }
    let offset = if peak > 0 && peak + 1 < mags.len() {
        let (a, b, c) = (mags[peak - 1], mags[peak], mags[peak + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok((peak as f64 + offset) * spec.frequency_resolution())
}

/// Whether two spectra share a dominant source: their dominant frequencies
/// (DC and its window leakage bin excluded) agree within `tolerance_hz`.
pub fn compare_signatures(a: &Spectrum, b: &Spectrum, tolerance_hz: f64) -> Result<bool> {
    if (a.sample_rate - b.sample_rate).abs() > 1e-9 * a.sample_rate.max(b.sample_rate) {
        return Err(Error::domain(
            "sample_rate",
            format!(
                "spectra must share a sample rate ({} vs {} Hz)",
                a.sample_rate, b.sample_rate
            ),
        ));
    }
    if !(tolerance_hz.is_finite() && tolerance_hz >= 0.0) {
        return Err(Error::domain("tolerance_hz", "must be finite and >= 0"));
    }
    let fa = dominant_frequency(a, 2.0 * a.frequency_resolution())?;
    let fb = dominant_frequency(b, 2.0 * b.frequency_resolution())?;
    Ok((fa - fb).abs() <= tolerance_hz)
}
