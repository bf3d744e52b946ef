//! Input-shaper design and robustness evaluation.
//!
//! An input shaper is a short train of positive impulses whose amplitudes sum
//! to one and whose first impulse sits at `t = 0`. Convolving a motion
//! command with it cancels (or bounds) the residual vibration of a lightly
//! damped mode with natural frequency `ωn` and damping ratio `ξ`.
//!
//! The residual vibration of a sequence is the amplitude of the mode's free
//! oscillation after the last impulse, normalised by the response to a single
//! unit impulse:
//!
//! ```text
//! V = exp(-ξ ωn t_N) * | Σ A_i exp(ξ ωn t_i) exp(j ωd t_i) |
//! ```

mod ei;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default tolerable vibration for EI shapers.
pub const DEFAULT_TOLERABLE_VIBRATION: f64 = 0.05;

/// Default frequency-ratio scan used for sensitivity curves.
pub const DEFAULT_RATIO_RANGE: (f64, f64) = (0.5, 1.5);
pub const DEFAULT_CURVE_POINTS: usize = 2001;

const AMPLITUDE_SUM_TOLERANCE: f64 = 1e-12;

/// Absolute slack when comparing a residual against a tolerance, so that
/// EI's design point (residual equal to the tolerance) counts as inside.
const TOLERANCE_SLACK: f64 = 1e-9;

/// A single dominant vibration mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    natural_frequency: f64,
    damping_ratio: f64,
}

impl PlantParams {
    /// `natural_frequency` in rad/s, `damping_ratio` in `[0, 1)`.
    pub fn new(natural_frequency: f64, damping_ratio: f64) -> Result<Self> {
        if !(natural_frequency.is_finite() && natural_frequency > 0.0) {
            return Err(Error::domain(
                "natural_frequency",
                format!("must be finite and > 0 rad/s, got {natural_frequency}"),
            ));
        }
        if !(damping_ratio.is_finite() && (0.0..1.0).contains(&damping_ratio)) {
            return Err(Error::domain(
                "damping_ratio",
                format!("must be in [0, 1), got {damping_ratio}"),
            ));
        }
        Ok(Self {
            natural_frequency,
            damping_ratio,
        })
    }

    pub fn from_hz(frequency_hz: f64, damping_ratio: f64) -> Result<Self> {
        Self::new(crate::units::hz_to_rad_s(frequency_hz), damping_ratio)
    }

    /// ωn in rad/s.
    pub fn natural_frequency(&self) -> f64 {
        self.natural_frequency
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping_ratio
    }

    /// ωd = ωn·sqrt(1 − ξ²), always derived.
    pub fn damped_frequency(&self) -> f64 {
        self.natural_frequency * (1.0 - self.damping_ratio * self.damping_ratio).sqrt()
    }

    /// Same damping, natural frequency scaled by `ratio`.
    pub fn scaled(&self, ratio: f64) -> Result<Self> {
        Self::new(self.natural_frequency * ratio, self.damping_ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impulse {
    pub amplitude: f64,
    #[serde(rename = "time_s")]
    pub time: f64,
}

/// Ordered impulse train: amplitudes positive and summing to one, first
/// impulse at exactly zero, strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSequence {
    impulses: Vec<Impulse>,
}

impl ImpulseSequence {
    pub fn new(impulses: Vec<Impulse>) -> Result<Self> {
        let first = impulses
            .first()
            .ok_or_else(|| Error::domain("impulses", "sequence must not be empty"))?;
        if first.time != 0.0 {
            return Err(Error::domain(
                "impulses",
                format!("first impulse must be at t = 0, got {}", first.time),
            ));
        }
        for (i, imp) in impulses.iter().enumerate() {
            if !(imp.amplitude.is_finite() && imp.amplitude > 0.0) {
                return Err(Error::domain(
                    "impulses",
                    format!(
                        "amplitude {i} must be finite and > 0, got {}",
                        imp.amplitude
                    ),
                ));
            }
            if !imp.time.is_finite() {
                return Err(Error::domain("impulses", format!("time {i} is not finite")));
            }
        }
        if let Some(w) = impulses.windows(2).find(|w| w[1].time <= w[0].time) {
            return Err(Error::domain(
                "impulses",
                format!(
                    "times must be strictly increasing ({} then {})",
                    w[0].time, w[1].time
                ),
            ));
        }
        let sum: f64 = impulses.iter().map(|i| i.amplitude).sum();
        if (sum - 1.0).abs() > AMPLITUDE_SUM_TOLERANCE {
            return Err(Error::domain(
                "impulses",
                format!("amplitudes must sum to 1, got {sum:.15}"),
            ));
        }
        Ok(Self { impulses })
    }

    /// The unshaped command: one unit impulse at t = 0.
    pub fn identity() -> Self {
        Self {
            impulses: vec![Impulse {
                amplitude: 1.0,
                time: 0.0,
            }],
        }
    }

    pub fn impulses(&self) -> &[Impulse] {
        &self.impulses
    }

    pub fn len(&self) -> usize {
        self.impulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.impulses.is_empty()
    }

    /// Time of the last impulse (the delay the shaper adds to a move).
    pub fn duration(&self) -> f64 {
        self.impulses.last().map_or(0.0, |i| i.time)
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.impulses.iter().map(|i| i.amplitude).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.impulses.iter().map(|i| i.time).collect()
    }

    fn from_parts(amplitudes: &[f64], times: &[f64]) -> Result<Self> {
        Self::new(
            amplitudes
                .iter()
                .zip(times)
                .map(|(&amplitude, &time)| Impulse { amplitude, time })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShaperKind {
    Zv,
    Zvd,
    Zvdd,
    /// Extra-insensitive: residual bounded by `tolerable_vibration` at the
    /// design frequency in exchange for a wider low-vibration band.
    Ei {
        tolerable_vibration: f64,
    },
}

impl ShaperKind {
    pub fn ei() -> Self {
        ShaperKind::Ei {
            tolerable_vibration: DEFAULT_TOLERABLE_VIBRATION,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ShaperKind::Zv => "zv",
            ShaperKind::Zvd => "zvd",
            ShaperKind::Zvdd => "zvdd",
            ShaperKind::Ei { .. } => "ei",
        }
    }

    fn validate(&self) -> Result<()> {
        if let ShaperKind::Ei {
            tolerable_vibration: v,
        } = *self
        {
            if !(v.is_finite() && v > 0.0 && v <= 0.2) {
                return Err(Error::domain(
                    "tolerable_vibration",
                    format!("must be in (0, 0.2], got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// Residual amplitude of an arbitrary impulse train, evaluated after its
/// latest impulse. Unlike [`residual_vibration`] the train need not start at
/// zero, which makes the time-shift invariance of the expression testable.
pub fn residual_amplitude(impulses: &[Impulse], plant: &PlantParams) -> f64 {
    let decay = plant.damping_ratio * plant.natural_frequency;
    let wd = plant.damped_frequency();
    let t_end = impulses
        .iter()
        .map(|i| i.time)
        .fold(f64::NEG_INFINITY, f64::max);
    // Weights taken relative to t_end keep the exponentials bounded by one.
    let (c, s) = impulses.iter().fold((0.0, 0.0), |(c, s), imp| {
        let w = imp.amplitude * (-decay * (t_end - imp.time)).exp();
        let phase = wd * imp.time;
        (c + w * phase.cos(), s + w * phase.sin())
    });
    c.hypot(s)
}

/// Residual vibration of `seq` on `plant`, as a fraction of the unshaped
/// single-impulse response. Zero means complete cancellation.
pub fn residual_vibration(seq: &ImpulseSequence, plant: &PlantParams) -> f64 {
    residual_amplitude(&seq.impulses, plant)
}

/// Designs the impulse sequence for `kind` on `plant`.
pub fn design_shaper(kind: ShaperKind, plant: &PlantParams) -> Result<ImpulseSequence> {
    kind.validate()?;
    let zeta = plant.damping_ratio;
    let half_period = PI / plant.damped_frequency();
    let k = (-zeta * PI / (1.0 - zeta * zeta).sqrt()).exp();
    let binomial = |coeffs: &[f64]| -> Result<ImpulseSequence> {
        let raw: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * k.powi(i as i32))
            .collect();
        let norm = (1.0 + k).powi(coeffs.len() as i32 - 1);
        let amps: Vec<f64> = raw.iter().map(|a| a / norm).collect();
        let times: Vec<f64> = (0..coeffs.len()).map(|i| i as f64 * half_period).collect();
        ImpulseSequence::from_parts(&amps, &times)
    };
    match kind {
        ShaperKind::Zv => binomial(&[1.0, 1.0]),
        ShaperKind::Zvd => binomial(&[1.0, 2.0, 1.0]),
        ShaperKind::Zvdd => binomial(&[1.0, 3.0, 3.0, 1.0]),
        ShaperKind::Ei {
            tolerable_vibration,
        } => {
            let design = ei::design(tolerable_vibration, zeta)?;
            let wn = plant.natural_frequency;
            let times: Vec<f64> = design.times.iter().map(|tau| tau / wn).collect();
            ImpulseSequence::from_parts(&design.amplitudes, &times)
        }
    }
}

/// Evenly spaced frequency ratios `lo..=hi`.
fn ratio_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::domain(
            "freq_ratio_range",
            format!("need 0 < lo < hi, got [{lo}, {hi}]"),
        ));
    }
    if points < 2 {
        return Err(Error::domain(
            "points",
            format!("need at least 2, got {points}"),
        ));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect())
}

/// Residual vibration of `seq` when the real natural frequency is
/// `ratio × design ωn` (same damping), over a monotone ratio grid.
pub fn sensitivity_curve(
    seq: &ImpulseSequence,
    design: &PlantParams,
    freq_ratio_range: (f64, f64),
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    ratio_grid(freq_ratio_range.0, freq_ratio_range.1, points)?
        .into_iter()
        .map(|r| Ok((r, residual_vibration(seq, &design.scaled(r)?))))
        .collect()
}

const WIDTH_SCAN_STEP: f64 = 5e-4;
const WIDTH_SCAN_MIN_RATIO: f64 = 1e-3;
const WIDTH_SCAN_MAX_RATIO: f64 = 5.0;

/// Width of the contiguous frequency-ratio interval around 1.0 on which the
/// residual stays at or below `v_tol`. Returns 0 when the design point itself
/// exceeds `v_tol`.
pub fn insensitivity_width(seq: &ImpulseSequence, design: &PlantParams, v_tol: f64) -> Result<f64> {
    if !(v_tol > 0.0 && v_tol < 1.0) {
        return Err(Error::domain(
            "v_tol",
            format!("must be in (0, 1), got {v_tol}"),
        ));
    }
    let wn = design.natural_frequency;
    let zeta = design.damping_ratio;
    let inside = |r: f64| {
        let p = PlantParams {
            natural_frequency: wn * r,
            damping_ratio: zeta,
        };
        residual_vibration(seq, &p) <= v_tol + TOLERANCE_SLACK
    };
    if !inside(1.0) {
        return Ok(0.0);
    }
    let edge = |direction: f64, limit: f64| -> f64 {
        let mut last_in = 1.0;
        loop {
            let next = last_in + direction * WIDTH_SCAN_STEP;
            if (direction < 0.0 && next <= limit) || (direction > 0.0 && next >= limit) {
                return if inside(limit) {
                    limit
                } else {
                    bisect(&inside, last_in, limit)
                };
            }
            if !inside(next) {
                return bisect(&inside, last_in, next);
            }
            last_in = next;
        }
    };
    let lower = edge(-1.0, WIDTH_SCAN_MIN_RATIO);
    let upper = edge(1.0, WIDTH_SCAN_MAX_RATIO);
    Ok(upper - lower)
}

/// Boundary between an inside point and an outside point.
fn bisect(inside: &impl Fn(f64) -> bool, mut a_in: f64, mut b_out: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (a_in + b_out);
        if inside(mid) {
            a_in = mid;
        } else {
            b_out = mid;
        }
        if (b_out - a_in).abs() < 1e-13 {
            break;
        }
    }
    0.5 * (a_in + b_out)
}

/// On-disk form of a designed shaper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShaperDocument {
    pub kind: String,
    pub natural_frequency_rad_s: f64,
    pub damping_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerable_vibration: Option<f64>,
    pub impulses: Vec<Impulse>,
}

impl ShaperDocument {
    pub fn new(kind: ShaperKind, plant: &PlantParams, seq: &ImpulseSequence) -> Self {
        Self {
            kind: kind.name().to_string(),
            natural_frequency_rad_s: plant.natural_frequency,
            damping_ratio: plant.damping_ratio,
            tolerable_vibration: match kind {
                ShaperKind::Ei {
                    tolerable_vibration,
                } => Some(tolerable_vibration),
                _ => None,
            },
            impulses: seq.impulses.clone(),
        }
    }

    /// Validates the stored design plant and impulse train.
    pub fn sequence(&self) -> Result<(PlantParams, ImpulseSequence)> {
        let plant = PlantParams::new(self.natural_frequency_rad_s, self.damping_ratio)?;
        let seq = ImpulseSequence::new(self.impulses.clone())?;
        Ok((plant, seq))
    }

    // Written at full round-trip precision: the amplitude-sum invariant is
    // tighter than the 9-digit report format.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests;
