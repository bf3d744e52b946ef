//! Streaming rolling-RMS vibration monitor with warning/alarm hysteresis.
//!
//! A [`Monitor`] consumes acceleration samples one at a time and keeps the RMS
//! of the last `window` samples. It escalates when the RMS reaches a
//! threshold and only steps down once the RMS falls below
//! `rearm_fraction × threshold`. Every state change is reported as a
//! [`MonitorEvent`], keyed by sample index.

use std::collections::VecDeque;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::format::{round_sig, ser_sig};
use crate::{Error, Result};

pub const DEFAULT_REARM_FRACTION: f64 = 0.8;
/// Samples between exact recomputations of the running sum of squares.
pub const RECOMPUTE_INTERVAL: u64 = 1 << 16;
const CANCELLATION_RATIO: f64 = 1e-4;
/// Relative timestamp jitter tolerated by [`replay`].
pub const RATE_TOLERANCE: f64 = 0.01;
pub const MIN_CALIBRATION_WINDOWS: usize = 10;
pub const TRACE_CSV_HEADER: &str = "time_s,accel_mps2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    /// Hz
    pub sample_rate: f64,
    /// Samples in the rolling window.
    pub window: usize,
    /// m/s² RMS
    pub warning_threshold: f64,
    /// m/s² RMS
    pub alarm_threshold: f64,
    #[serde(default = "default_rearm")]
    pub rearm_fraction: f64,
}

fn default_rearm() -> f64 {
    DEFAULT_REARM_FRACTION
}

impl MonitorConfig {
    pub fn new(sample_rate: f64, window: usize, warning: f64, alarm: f64) -> Result<Self> {
        let c = Self {
            sample_rate,
            window,
            warning_threshold: warning,
            alarm_threshold: alarm,
            rearm_fraction: DEFAULT_REARM_FRACTION,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_rearm_fraction(mut self, rearm_fraction: f64) -> Result<Self> {
        self.rearm_fraction = rearm_fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::domain("sample_rate", "must be finite and positive"));
        }
        if self.window == 0 {
            return Err(Error::domain("window", "must be at least 1 sample"));
        }
        if !(self.warning_threshold.is_finite() && self.warning_threshold > 0.0) {
            return Err(Error::domain(
                "warning_threshold",
                "must be finite and positive",
            ));
        }
        if !(self.alarm_threshold.is_finite() && self.alarm_threshold > self.warning_threshold) {
            return Err(Error::domain(
                "alarm_threshold",
                format!(
                    "must exceed the warning threshold {}, got {}",
                    self.warning_threshold, self.alarm_threshold
                ),
            ));
        }
        if !(self.rearm_fraction > 0.0 && self.rearm_fraction <= 1.0) {
            return Err(Error::domain("rearm_fraction", "must be in (0, 1]"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn with_thresholds(mut self, t: Thresholds) -> Result<Self> {
        self.warning_threshold = t.warning;
        self.alarm_threshold = t.alarm;
        self.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Level {
    Ok,
    Warning,
    Alarm,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Ok => "OK",
            Level::Warning => "WARNING",
            Level::Alarm => "ALARM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Transition,
    /// A non-finite sample was rejected; `from == to`.
    DataQuality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorEvent {
    pub sample_index: u64,
    #[serde(serialize_with = "ser_sig")]
    pub time_s: f64,
    pub from: Level,
    pub to: Level,
    #[serde(serialize_with = "ser_sig")]
    pub rms: f64,
    pub kind: EventKind,
}

impl MonitorEvent {
    pub fn is_escalation(&self) -> bool {
        self.kind == EventKind::Transition && self.to > self.from
    }
}

/// Snapshot of a monitor between feeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorState {
    pub level: Level,
    pub rms: f64,
    pub samples_consumed: u64,
}

#[derive(Debug, Clone)]
pub struct Monitor {
    config: MonitorConfig,
    squares: VecDeque<f64>,
    // Neumaier-compensated running sum of `squares`.
    sum: f64,
    compensation: f64,
    since_recompute: u64,
    // Largest running sum since the last exact recomputation.
    peak_sum: f64,
    level: Level,
    rms: f64,
    consumed: u64,
}

impl Monitor {
    pub fn new(config: MonitorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            squares: VecDeque::with_capacity(config.window),
            config,
            sum: 0.0,
            compensation: 0.0,
            since_recompute: 0,
            peak_sum: 0.0,
            level: Level::Ok,
            rms: 0.0,
            consumed: 0,
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    pub fn state(&self) -> MonitorState {
        MonitorState {
            level: self.level,
            rms: self.rms,
            samples_consumed: self.consumed,
        }
    }

    fn accumulate(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn recompute(&mut self) {
        self.sum = 0.0;
        self.compensation = 0.0;
        let squares = std::mem::take(&mut self.squares);
        for &s in &squares {
            self.accumulate(s);
        }
        self.squares = squares;
        self.since_recompute = 0;
        self.peak_sum = self.sum;
    }

    /// Consumes one sample in m/s².
    pub fn feed(&mut self, sample: f64) -> Option<MonitorEvent> {
        let index = self.consumed;
        self.consumed += 1;
        if !sample.is_finite() {
            return Some(self.event(index, self.level, EventKind::DataQuality));
        }

        let square = sample * sample;
        self.squares.push_back(square);
        self.accumulate(square);
        if self.squares.len() > self.config.window {
            let old = self.squares.pop_front().unwrap_or(0.0);
            self.accumulate(-old);
        }
        self.since_recompute += 1;
        self.peak_sum = self.peak_sum.max(self.sum);
        // Rounding error scales with the largest sum carried, so a sum that
        // has collapsed far below it is recomputed too. A collapse needs the
        // large values to leave the window, so this stays amortised O(1).
        if self.since_recompute >= RECOMPUTE_INTERVAL
            || self.sum < CANCELLATION_RATIO * self.peak_sum
        {
            self.recompute();
        }
        let mean_square = ((self.sum + self.compensation) / self.squares.len() as f64).max(0.0);
        self.rms = mean_square.sqrt();

        // No decisions until the window holds `window` samples.
        if self.squares.len() < self.config.window {
            return None;
        }
        let next = self.classify();
        if next == self.level {
            return None;
        }
        let from = self.level;
        self.level = next;
        let mut event = self.event(index, next, EventKind::Transition);
        event.from = from;
        Some(event)
    }

    fn classify(&self) -> Level {
        let c = &self.config;
        let r = self.rms;
        if r >= c.alarm_threshold
            || (self.level == Level::Alarm && r >= c.rearm_fraction * c.alarm_threshold)
        {
            Level::Alarm
        } else if r >= c.warning_threshold
            || (self.level >= Level::Warning && r >= c.rearm_fraction * c.warning_threshold)
        {
            Level::Warning
        } else {
            Level::Ok
        }
    }

    fn event(&self, index: u64, to: Level, kind: EventKind) -> MonitorEvent {
        MonitorEvent {
            sample_index: index,
            time_s: index as f64 / self.config.sample_rate,
            from: self.level,
            to,
            rms: self.rms,
            kind,
        }
    }
}

/// Per-state dwell times and the largest rolling RMS seen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplaySummary {
    pub samples: u64,
    #[serde(serialize_with = "ser_sig")]
    pub max_rms: f64,
    #[serde(serialize_with = "ser_sig")]
    pub time_ok_s: f64,
    #[serde(serialize_with = "ser_sig")]
    pub time_warning_s: f64,
    #[serde(serialize_with = "ser_sig")]
    pub time_alarm_s: f64,
    pub escalations: usize,
    pub data_quality_events: usize,
    pub final_level: Level,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub events: Vec<MonitorEvent>,
    pub summary: ReplaySummary,
}

impl ReplayOutcome {
    /// One JSON object per line.
    pub fn write_event_log<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn escalations_to(&self, level: Level) -> usize {
        self.events
            .iter()
            .filter(|e| e.is_escalation() && e.to == level)
            .count()
    }
}

/// Checks that `times` increase strictly at the configured rate (within 1%).
/// Row numbers in errors are 1-based data rows.
pub fn check_timestamps(times: &[f64], sample_rate: f64) -> Result<()> {
    let nominal = 1.0 / sample_rate;
    for (i, w) in times.windows(2).enumerate() {
        let row = i + 2;
        let dt = w[1] - w[0];
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::parse(
                Some(row),
                format!("timestamp {} does not increase past {}", w[1], w[0]),
            ));
        }
        if (dt - nominal).abs() > RATE_TOLERANCE * nominal {
            return Err(Error::parse(
                Some(row),
                format!("sample interval {dt} s departs from nominal {nominal} s by more than 1%"),
            ));
        }
    }
    if let Some(bad) = times.iter().position(|t| !t.is_finite()) {
        return Err(Error::parse(Some(bad + 1), "timestamp is not finite"));
    }
    Ok(())
}

/// Runs a monitor over a `(time_s, accel)` trace.
pub fn replay(trace: &[(f64, f64)], config: &MonitorConfig) -> Result<ReplayOutcome> {
    let times: Vec<f64> = trace.iter().map(|p| p.0).collect();
    check_timestamps(&times, config.sample_rate)?;
    let mut monitor = Monitor::new(config.clone())?;
    let mut events = Vec::new();
    let mut dwell = [0u64; 3];
    let mut max_rms = 0.0f64;
    for &(_, a) in trace {
        if let Some(e) = monitor.feed(a) {
            events.push(e);
        }
        let s = monitor.state();
        max_rms = max_rms.max(s.rms);
        dwell[s.level as usize] += 1;
    }
    let dt = 1.0 / config.sample_rate;
    let summary = ReplaySummary {
        samples: trace.len() as u64,
        max_rms,
        time_ok_s: round_sig(dwell[0] as f64 * dt),
        time_warning_s: round_sig(dwell[1] as f64 * dt),
        time_alarm_s: round_sig(dwell[2] as f64 * dt),
        escalations: events.iter().filter(|e| e.is_escalation()).count(),
        data_quality_events: events
            .iter()
            .filter(|e| e.kind == EventKind::DataQuality)
            .count(),
        final_level: monitor.state().level,
    };
    Ok(ReplayOutcome { events, summary })
}

/// Reads a `time_s,accel_mps2` trace. Non-finite accelerations are kept so the
/// monitor can flag them.
pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "time_s" {
        return Err(Error::parse(
            None,
            format!("expected header `{TRACE_CSV_HEADER}`"),
        ));
    }
    let mut trace = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let field = |j: usize| -> Result<f64> {
            record
                .get(j)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::parse(Some(i + 1), format!("column {} is not a number", j + 1))
                })
        };
        trace.push((field(0)?, field(1)?));
    }
    Ok(trace)
}

pub fn write_trace_csv<W: Write>(trace: &[(f64, f64)], mut out: W) -> Result<()> {
    writeln!(out, "{TRACE_CSV_HEADER}")?;
    for (t, a) in trace {
        writeln!(out, "{},{}", crate::format::sig(*t), crate::format::sig(*a))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub warning: f64,
    pub alarm: f64,
    /// Mean and population standard deviation of the per-window RMS.
    pub window_rms_mean: f64,
    pub window_rms_std: f64,
    pub windows: usize,
}

/// Thresholds at `mean + k·σ` of the RMS of consecutive non-overlapping
/// windows of a calibration signal. σ is the population standard deviation.
pub fn baseline_thresholds(
    calibration: &[f64],
    window: usize,
    warn_sigma: f64,
    alarm_sigma: f64,
) -> Result<Thresholds> {
    if window == 0 {
        return Err(Error::domain("window", "must be at least 1 sample"));
    }
    if !(warn_sigma.is_finite() && alarm_sigma.is_finite()) {
        return Err(Error::domain("sigma", "multipliers must be finite"));
    }
    if warn_sigma >= alarm_sigma {
        return Err(Error::domain(
            "warn_sigma",
            format!("must be below alarm_sigma ({warn_sigma} >= {alarm_sigma})"),
        ));
    }
    if let Some(i) = calibration.iter().position(|a| !a.is_finite()) {
        return Err(Error::domain(
            "calibration",
            format!("sample {i} is not finite"),
        ));
    }
    let windows = calibration.len() / window;
    if windows < MIN_CALIBRATION_WINDOWS {
        return Err(Error::domain(
            "calibration",
            format!(
                "need at least {MIN_CALIBRATION_WINDOWS} windows of {window} samples, got {windows}"
            ),
        ));
    }
    let rms: Vec<f64> = calibration
        .chunks_exact(window)
        .map(crate::analysis::rms)
        .collect();
    let n = rms.len() as f64;
    let mean = rms.iter().sum::<f64>() / n;
    let std = (rms.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Thresholds {
        warning: mean + warn_sigma * std,
        alarm: mean + alarm_sigma * std,
        window_rms_mean: mean,
        window_rms_std: std,
        windows: rms.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(window: usize, warn: f64, alarm: f64) -> MonitorConfig {
        MonitorConfig::new(1000.0, window, warn, alarm).unwrap()
    }

    fn feed_all(c: &MonitorConfig, xs: &[f64]) -> Vec<MonitorEvent> {
        let mut m = Monitor::new(c.clone()).unwrap();
        xs.iter().filter_map(|&x| m.feed(x)).collect()
    }

    fn trace(rate: f64, xs: &[f64]) -> Vec<(f64, f64)> {
        xs.iter()
            .enumerate()
            .map(|(i, &a)| (i as f64 / rate, a))
            .collect()
    }

    #[test]
    fn zeros_stay_ok() {
        let events = feed_all(&config(16, 0.5, 1.0), &[0.0; 1000]);
        assert!(events.is_empty());
    }

    #[test]
    fn step_into_alarm_by_hand() {
        let c = config(4, 0.5, 1.0);
        let mut m = Monitor::new(c).unwrap();
        let mut events = Vec::new();
        for (i, x) in [0.0, 0.0, 0.0, 0.0, 2.0, 2.0, 2.0, 2.0]
            .into_iter()
            .enumerate()
        {
            if let Some(e) = m.feed(x) {
                events.push(e);
            }
            if i == 4 {
                assert_eq!(m.state().rms, 1.0);
            }
        }
        assert_eq!(events.len(), 1);
        let e = &events[0];
        assert_eq!(
            (e.sample_index, e.from, e.to, e.rms),
            (4, Level::Ok, Level::Alarm, 1.0)
        );
        assert_eq!(e.time_s, 0.004);
        assert_eq!(m.state().samples_consumed, 8);
    }

    #[test]
    fn steady_sine_rms() {
        let amp = 3.0;
        let rate = 1000.0;
        // 50 Hz: 20 samples per period, window of 10 periods.
        let xs: Vec<f64> = (0..5000)
            .map(|i| amp * (2.0 * std::f64::consts::PI * 50.0 * i as f64 / rate).sin())
            .collect();
        let mut m = Monitor::new(config(200, 10.0, 20.0)).unwrap();
        for x in &xs {
            m.feed(*x);
        }
        let want = amp / 2f64.sqrt();
        assert!((m.state().rms - want).abs() <= 0.02 * want);
    }

    #[test]
    fn rolling_rms_matches_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let window = 137;
        let mut m = Monitor::new(config(window, 1.0, 2.0)).unwrap();
        let mut xs = Vec::new();
        // Bursts of very different scale, then silence, across a recompute boundary.
        for i in 0..(RECOMPUTE_INTERVAL as usize + 20_000) {
            let scale = match (i / 3000) % 4 {
                0 => 1e3,
                1 => 1e-3,
                2 => 0.0,
                _ => 1.0,
            };
            let x = scale * rng.random_range(-1.0..1.0);
            xs.push(x);
            m.feed(x);
            let lo = xs.len().saturating_sub(window);
            let want = crate::analysis::rms(&xs[lo..]);
            let got = m.state().rms;
            assert!(
                (got - want).abs() <= 1e-9 * want || got == want,
                "i={i}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn hysteresis_holds_alarm_until_rearm() {
        let c = config(1, 0.5, 1.0);
        let xs = [1.2, 0.9, 0.85, 0.79, 0.6, 0.45, 0.39, 0.3];
        let events = feed_all(&c, &xs);
        let transitions: Vec<_> = events.iter().map(|e| (e.sample_index, e.to)).collect();
        assert_eq!(
            transitions,
            [(0, Level::Alarm), (3, Level::Warning), (6, Level::Ok)]
        );
    }

    #[test]
    fn chatter_is_bounded() {
        // Alternate each window between just above the rearm level and just
        // above the threshold: one escalation, no de-escalation.
        let w = 50;
        let c = config(w, 0.5, 1.0);
        let eps = 1e-3;
        let mut xs = Vec::new();
        for k in 0..40 {
            let level = if k % 2 == 0 { 1.0 + eps } else { 0.8 + eps };
            xs.extend(std::iter::repeat_n(level, w));
        }
        let events = feed_all(&c, &xs);
        assert_eq!(events.len(), 1, "{events:?}");
        assert_eq!(events[0].to, Level::Alarm);
        // A sustained quiet spell ends the excursion: the RMS decays through
        // the warning band once, then to OK.
        xs.extend(std::iter::repeat_n(0.0, 3 * w));
        let events = feed_all(&c, &xs);
        let steps: Vec<_> = events[1..].iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(
            steps,
            [(Level::Alarm, Level::Warning), (Level::Warning, Level::Ok)]
        );
    }

    #[test]
    fn non_finite_sample_is_flagged_and_skipped() {
        let c = config(4, 0.5, 1.0);
        let mut m = Monitor::new(c).unwrap();
        for _ in 0..4 {
            m.feed(0.3);
        }
        let before = m.state();
        let e = m.feed(f64::NAN).unwrap();
        assert_eq!(e.kind, EventKind::DataQuality);
        assert_eq!((e.sample_index, e.from, e.to), (4, Level::Ok, Level::Ok));
        assert_eq!(m.state().rms, before.rms);
        assert!(m.feed(0.3).is_none());
        assert_eq!(m.state().rms, before.rms);
    }

    #[test]
    fn config_validation() {
        assert!(MonitorConfig::new(0.0, 4, 0.5, 1.0).is_err());
        assert!(MonitorConfig::new(100.0, 0, 0.5, 1.0).is_err());
        assert!(MonitorConfig::new(100.0, 4, 1.0, 1.0).is_err());
        assert!(MonitorConfig::new(100.0, 4, 0.0, 1.0).is_err());
        let c = MonitorConfig::new(100.0, 4, 0.5, 1.0).unwrap();
        assert!(c.clone().with_rearm_fraction(0.0).is_err());
        assert!(c.with_rearm_fraction(1.0).is_ok());
        let json = r#"{"sample_rate": 5000, "window": 250, "warning_threshold": 0.1, "alarm_threshold": 0.2}"#;
        let parsed = MonitorConfig::from_json(json).unwrap();
        assert_eq!(parsed.rearm_fraction, DEFAULT_REARM_FRACTION);
        assert!(MonitorConfig::from_json(r#"{"sample_rate": 5000}"#).is_err());
    }

    #[test]
    fn replay_empty_trace() {
        let out = replay(&[], &config(4, 0.5, 1.0)).unwrap();
        assert!(out.events.is_empty());
        assert_eq!(out.summary.samples, 0);
        assert_eq!(out.summary.max_rms, 0.0);
        assert_eq!(out.summary.time_ok_s + out.summary.time_alarm_s, 0.0);
    }

    #[test]
    fn replay_rejects_bad_timestamps() {
        let c = config(4, 0.5, 1.0);
        let mut t = trace(1000.0, &[0.0; 10]);
        t[6].0 = t[5].0;
        match replay(&t, &c) {
            Err(Error::Parse { row: Some(7), .. }) => {}
            other => panic!("{other:?}"),
        }
        let mut t = trace(1000.0, &[0.0; 10]);
        t[3].0 += 0.0005;
        assert!(matches!(
            replay(&t, &c),
            Err(Error::Parse { row: Some(4), .. })
        ));
        // Within 1% jitter is accepted.
        let mut t = trace(1000.0, &[0.0; 10]);
        t[3].0 += 0.000005;
        assert!(replay(&t, &c).is_ok());
    }

    #[test]
    fn replay_continues_past_non_finite_rows() {
        let mut xs = vec![0.0; 20];
        xs[3] = f64::INFINITY;
        xs.extend([2.0; 8]);
        let out = replay(&trace(1000.0, &xs), &config(4, 0.5, 1.0)).unwrap();
        assert_eq!(out.summary.data_quality_events, 1);
        assert_eq!(out.escalations_to(Level::Alarm), 1);
        assert_eq!(out.summary.final_level, Level::Alarm);
        let mut log = Vec::new();
        out.write_event_log(&mut log).unwrap();
        let text = String::from_utf8(log).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["kind"], "data_quality");
        assert_eq!(first["sample_index"], 3);
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn replay_summary_dwell_times() {
        let xs = [0.0, 0.0, 2.0, 2.0, 2.0, 0.0];
        let c = MonitorConfig::new(10.0, 1, 0.5, 1.0).unwrap();
        let out = replay(&trace(10.0, &xs), &c).unwrap();
        assert_eq!(out.summary.time_alarm_s, 0.3);
        assert_eq!(out.summary.time_ok_s, 0.3);
        assert_eq!(out.summary.max_rms, 2.0);
    }

    #[test]
    fn trace_csv_round_trip() {
        let t = vec![(0.0, 1.5), (0.001, -2.25), (0.002, f64::NAN)];
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let back = read_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(back[..2], t[..2]);
        assert!(back[2].1.is_nan());
        assert!(matches!(
            read_trace_csv("time_s,accel_mps2\n0,1\n0.1,x\n".as_bytes()),
            Err(Error::Parse { row: Some(2), .. })
        ));
    }

    #[test]
    fn baseline_constant_rms() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| if i % 2 == 0 { 0.7 } else { -0.7 })
            .collect();
        let t = baseline_thresholds(&xs, 100, 2.0, 4.0).unwrap();
        assert_eq!(t.window_rms_std, 0.0);
        assert!((t.warning - 0.7).abs() < 1e-15 && (t.alarm - 0.7).abs() < 1e-15);
    }

    #[test]
    fn baseline_by_hand() {
        // Ten windows of 4 with RMS 0.1 ×5, 0.3 ×5: mean 0.2, σ 0.1.
        let mut xs = Vec::new();
        for k in 0..10 {
            let v = if k % 2 == 0 { 0.1 } else { 0.3 };
            xs.extend([v, -v, v, -v]);
        }
        xs.extend([9.0; 3]); // trailing partial window is ignored
        let t = baseline_thresholds(&xs, 4, 1.0, 3.0).unwrap();
        assert!((t.window_rms_mean - 0.2).abs() < 1e-15);
        assert!((t.window_rms_std - 0.1).abs() < 1e-15);
        assert!((t.warning - 0.3).abs() < 1e-15);
        assert!((t.alarm - 0.5).abs() < 1e-15);
    }

    #[test]
    fn baseline_rejections() {
        assert!(baseline_thresholds(&[0.1; 39], 4, 1.0, 2.0).is_err());
        assert!(baseline_thresholds(&[0.1; 40], 4, 2.0, 2.0).is_err());
        assert!(baseline_thresholds(&[0.1; 40], 4, 3.0, 2.0).is_err());
        assert!(baseline_thresholds(&[0.1; 40], 0, 1.0, 2.0).is_err());
    }

    fn arb_signal() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            prop_oneof![
                8 => -3.0f64..3.0,
                1 => Just(f64::NAN),
                1 => Just(0.0),
            ],
            0..400,
        )
    }

    proptest! {
        #[test]
        fn replay_equals_streaming(xs in arb_signal(), window in 1usize..40, warn in 0.1f64..1.0) {
            let c = config(window, warn, warn * 2.0);
            let streamed = feed_all(&c, &xs);
            let replayed = replay(&trace(1000.0, &xs), &c).unwrap();
            prop_assert_eq!(&streamed, &replayed.events);
            for w in streamed.windows(2) {
                prop_assert!(w[0].sample_index < w[1].sample_index);
            }
        }

        #[test]
        fn raising_thresholds_never_adds_severity(
            xs in arb_signal(), window in 1usize..40, warn in 0.1f64..1.0, k in 1.0f64..3.0
        ) {
            let base = config(window, warn, warn * 2.0);
            let scaled = config(window, warn * k, warn * 2.0 * k);
            let (mut a, mut b) = (Monitor::new(base).unwrap(), Monitor::new(scaled).unwrap());
            for &x in &xs {
                a.feed(x);
                let e = b.feed(x);
                prop_assert!(b.state().level <= a.state().level);
                if let Some(e) = e.filter(MonitorEvent::is_escalation) {
                    prop_assert!(a.state().level >= e.to);
                }
            }
        }
    }
}
