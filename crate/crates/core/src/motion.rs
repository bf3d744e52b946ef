//! Point-to-point motion commands and command shaping.
//!
//! Samples sit on a uniform grid `t_k = k·dt`. Acceleration sample `k` is
//! held over `[t_k, t_k + dt)`, so velocity is the running rectangle sum of
//! acceleration and position the trapezoidal integral of velocity; both are
//! exact for a zero-order-held acceleration.

use std::io::{Read, Write};

use crate::format::sig;
use crate::shaper::{ImpulseSequence, PlantParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotionSample {
    /// m
    pub position: f64,
    /// m/s
    pub velocity: f64,
    /// m/s²
    pub acceleration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionProfile {
    sample_period: f64,
    samples: Vec<MotionSample>,
}

pub const PROFILE_CSV_HEADER: &str = "time_s,position_m,velocity_mps,acceleration_mps2";

impl MotionProfile {
    pub fn new(sample_period: f64, samples: Vec<MotionSample>) -> Result<Self> {
        check_period(sample_period)?;
        if samples.is_empty() {
            return Err(Error::domain(
                "samples",
                "profile must hold at least one sample",
            ));
        }
        if let Some(i) = samples.iter().position(|s| {
            !(s.position.is_finite() && s.velocity.is_finite() && s.acceleration.is_finite())
        }) {
            return Err(Error::domain(
                "samples",
                format!("sample {i} is not finite"),
            ));
        }
        Ok(Self {
            sample_period,
            samples,
        })
    }

    /// Integrates an acceleration command from rest at `start_position`.
    pub fn from_acceleration(
        sample_period: f64,
        start_position: f64,
        acceleration: &[f64],
    ) -> Result<Self> {
        check_period(sample_period)?;
        let mut samples = Vec::with_capacity(acceleration.len());
        let (mut p, mut v) = (start_position, 0.0);
        for &a in acceleration {
            samples.push(MotionSample {
                position: p,
                velocity: v,
                acceleration: a,
            });
            let v_next = v + a * sample_period;
            p += 0.5 * (v + v_next) * sample_period;
            v = v_next;
        }
        Self::new(sample_period, samples)
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn samples(&self) -> &[MotionSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of the last sample.
    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.sample_period
    }

    pub fn accelerations(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.acceleration).collect()
    }

    pub fn final_sample(&self) -> MotionSample {
        *self.samples.last().expect("profile is never empty")
    }

    pub fn peak_acceleration(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.acceleration.abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{PROFILE_CSV_HEADER}")?;
        for (k, s) in self.samples.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                sig(k as f64 * self.sample_period),
                sig(s.position),
                sig(s.velocity),
                sig(s.acceleration)
            )?;
        }
        Ok(())
    }

    /// Reads a profile written by [`MotionProfile::write_csv`]; the sample
    /// period is taken from the time column.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers()?.clone();
        let expected: Vec<&str> = PROFILE_CSV_HEADER.split(',').collect();
        for name in &expected {
            if !headers.iter().any(|h| h.trim() == *name) {
                return Err(Error::parse(None, format!("missing column `{name}`")));
            }
        }
        let col = |name: &str| headers.iter().position(|h| h.trim() == name).unwrap();
        let idx: Vec<usize> = expected.iter().map(|n| col(n)).collect();
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record
                    .get(idx[i])
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::parse(Some(row + 1), format!("bad `{}`", expected[i])))
            };
            times.push(field(0)?);
            samples.push(MotionSample {
                position: field(1)?,
                velocity: field(2)?,
                acceleration: field(3)?,
            });
        }
        let period = match times.as_slice() {
            [] => return Err(Error::parse(None, "profile has no rows")),
            [_] => 1.0,
            [t0, .., tn] => (tn - t0) / (times.len() - 1) as f64,
        };
        Self::new(period, samples)
    }
}

fn check_period(sample_period: f64) -> Result<()> {
    if sample_period.is_finite() && sample_period > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(
            "sample_period",
            format!("must be finite and > 0 s, got {sample_period}"),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidParams {
    /// Signed move length, m.
    pub distance: f64,
    /// m/s
    pub max_velocity: f64,
    /// m/s²
    pub max_acceleration: f64,
}

impl TrapezoidParams {
    pub fn new(distance: f64, max_velocity: f64, max_acceleration: f64) -> Result<Self> {
        if !distance.is_finite() {
            return Err(Error::domain("distance", "must be finite"));
        }
        if !(max_velocity.is_finite() && max_velocity > 0.0) {
            return Err(Error::domain(
                "max_velocity",
                format!("must be finite and > 0, got {max_velocity}"),
            ));
        }
        if !(max_acceleration.is_finite() && max_acceleration > 0.0) {
            return Err(Error::domain(
                "max_acceleration",
                format!("must be finite and > 0, got {max_acceleration}"),
            ));
        }
        Ok(Self {
            distance,
            max_velocity,
            max_acceleration,
        })
    }

    /// True when the move never reaches `max_velocity`.
    pub fn is_triangular(&self) -> bool {
        self.distance.abs() < self.max_velocity.powi(2) / self.max_acceleration
    }
}

/// Samples needed to cover `duration`; ratios within 1e-9 of an integer are not rounded up.
fn samples_for(duration: f64, sample_period: f64) -> usize {
    ((duration / sample_period) - 1e-9).ceil().max(0.0) as usize
}

/// Bang-coast-bang point-to-point command, degrading to a triangle for
/// short moves.
///
/// Phase lengths are rounded up to whole samples and the peak velocity and
/// acceleration are then scaled down so the sampled move covers exactly
/// `distance` and ends at rest. Limits are never exceeded.
pub fn trapezoid_profile(params: &TrapezoidParams, sample_period: f64) -> Result<MotionProfile> {
    check_period(sample_period)?;
    let TrapezoidParams {
        distance,
        max_velocity: v_max,
        max_acceleration: a_max,
    } = *params;
    let length = distance.abs();
    if length == 0.0 {
        return MotionProfile::new(sample_period, vec![MotionSample::default()]);
    }
    let (accel_time, coast_time) = if params.is_triangular() {
        ((length / a_max).sqrt(), 0.0)
    } else {
        (v_max / a_max, (length - v_max * v_max / a_max) / v_max)
    };
    let n_accel = samples_for(accel_time, sample_period).max(1);
    let n_coast = samples_for(coast_time, sample_period);
    let peak_velocity = length / (sample_period * (n_accel + n_coast) as f64);
    let accel = distance.signum() * peak_velocity / (n_accel as f64 * sample_period);

    let mut command = Vec::with_capacity(2 * n_accel + n_coast + 1);
    command.extend(std::iter::repeat_n(accel, n_accel));
    command.extend(std::iter::repeat_n(0.0, n_coast));
    command.extend(std::iter::repeat_n(-accel, n_accel));
    command.push(0.0);
    MotionProfile::from_acceleration(sample_period, 0.0, &command)
}

/// Largest sample period that keeps impulse-time rounding below 1/100 of a
/// damped period.
pub fn recommended_max_sample_period(plant: &PlantParams) -> f64 {
    std::f64::consts::TAU / (50.0 * plant.damped_frequency())
}

/// Convolves the command with the impulse train.
///
/// Impulse times are rounded to the nearest sample, which introduces up to
/// half a sample of timing error (see [`recommended_max_sample_period`]).
/// Before the profile starts the stage rests at the first position; after it
/// ends the last sample is held. The output is longer than the input by the
/// last impulse's offset.
pub fn shape_command(profile: &MotionProfile, seq: &ImpulseSequence) -> MotionProfile {
    let dt = profile.sample_period;
    let taps: Vec<(usize, f64)> = seq
        .impulses()
        .iter()
        .map(|i| ((i.time / dt).round() as usize, i.amplitude))
        .collect();
    let delay = taps.iter().map(|t| t.0).max().unwrap_or(0);
    let src = &profile.samples;
    let first = src[0];
    let last = *src.last().expect("profile is never empty");
    let at = |j: isize| -> MotionSample {
        if j < 0 {
            MotionSample {
                position: first.position,
                velocity: 0.0,
                acceleration: 0.0,
            }
        } else {
            src.get(j as usize).copied().unwrap_or(last)
        }
    };
    let samples = (0..src.len() + delay)
        .map(|k| {
            taps.iter()
                .fold(MotionSample::default(), |acc, &(offset, amp)| {
                    let s = at(k as isize - offset as isize);
                    MotionSample {
                        position: acc.position + amp * s.position,
                        velocity: acc.velocity + amp * s.velocity,
                        acceleration: acc.acceleration + amp * s.acceleration,
                    }
                })
        })
        .collect();
    MotionProfile {
        sample_period: dt,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::shaper::{design_shaper, Impulse, ShaperKind};

    /// Independent re-integration of the acceleration column.
    fn integration_error(p: &MotionProfile) -> (f64, f64) {
        let dt = p.sample_period();
        let s = p.samples();
        let mut dv: f64 = 0.0;
        let mut dp: f64 = 0.0;
        for w in s.windows(2) {
            dv = dv.max((w[1].velocity - w[0].velocity - w[0].acceleration * dt).abs());
            dp = dp.max(
                (w[1].position - w[0].position - 0.5 * (w[0].velocity + w[1].velocity) * dt).abs(),
            );
        }
        (dv, dp)
    }

    #[test]
    fn zero_distance_is_single_rest_sample() {
        let p = trapezoid_profile(&TrapezoidParams::new(0.0, 1.0, 10.0).unwrap(), 1e-3).unwrap();
        assert_eq!(p.samples(), &[MotionSample::default()]);
        assert_eq!(p.duration(), 0.0);
    }

    #[test]
    fn rejects_bad_limits() {
        assert!(TrapezoidParams::new(0.1, 0.0, 10.0).is_err());
        assert!(TrapezoidParams::new(0.1, 1.0, -1.0).is_err());
        assert!(TrapezoidParams::new(f64::INFINITY, 1.0, 1.0).is_err());
        let ok = TrapezoidParams::new(0.1, 1.0, 1.0).unwrap();
        assert!(trapezoid_profile(&ok, 0.0).is_err());
    }

    #[test]
    fn high_speed_move_has_coast_phase() {
        // 1 m/s at 20 g: v²/a ≈ 5.1 mm, far below 0.1 m.
        let params = TrapezoidParams::new(0.1, 1.0, 196.0).unwrap();
        assert!(!params.is_triangular());
        assert!((1.0f64 / 196.0 - 0.0051).abs() < 1e-4);
        let p = trapezoid_profile(&params, 1e-4).unwrap();
        let coasting = p
            .samples()
            .iter()
            .filter(|s| s.acceleration == 0.0 && s.velocity > 0.0)
            .count();
        assert!(coasting > 0);
        let peak_v = p.samples().iter().map(|s| s.velocity).fold(0.0, f64::max);
        assert!(peak_v <= 1.0 && peak_v > 0.99);
        assert!(p.peak_acceleration() <= 196.0);
        assert!((p.final_sample().position - 0.1).abs() < 1e-12);
    }

    #[test]
    fn short_move_is_triangular() {
        let params = TrapezoidParams::new(0.001, 1.0, 100.0).unwrap();
        assert!(params.is_triangular());
        let oracle = (100.0f64 * 0.001).sqrt();
        assert!((oracle - 0.3162).abs() < 1e-4);
        let p = trapezoid_profile(&params, 1e-6).unwrap();
        // Peak velocity recovered by integrating the emitted acceleration.
        let mut v: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for a in p.accelerations() {
            v += a * p.sample_period();
            peak = peak.max(v);
        }
        assert!(peak <= oracle + 1e-12);
        assert!((peak - oracle).abs() / oracle < 1e-3, "{peak}");
    }

    #[test]
    fn reference_move_is_on_grid() {
        let params = TrapezoidParams::new(0.05, 0.5, 50.0).unwrap();
        let p = trapezoid_profile(&params, 2e-4).unwrap();
        // 10 ms accel, 90 ms coast, 10 ms decel at 0.2 ms.
        assert_eq!(p.len(), 50 + 450 + 50 + 1);
        assert_eq!(p.peak_acceleration(), 50.0);
    }

    #[test]
    fn negative_distance_mirrors() {
        let fwd = trapezoid_profile(&TrapezoidParams::new(0.02, 0.3, 20.0).unwrap(), 1e-4).unwrap();
        let back =
            trapezoid_profile(&TrapezoidParams::new(-0.02, 0.3, 20.0).unwrap(), 1e-4).unwrap();
        assert_eq!(fwd.len(), back.len());
        for (a, b) in fwd.samples().iter().zip(back.samples()) {
            assert_eq!(a.acceleration, -b.acceleration);
            assert!((a.position + b.position).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_shaper_is_a_no_op() {
        let p = trapezoid_profile(&TrapezoidParams::new(0.05, 0.5, 50.0).unwrap(), 2e-4).unwrap();
        assert_eq!(shape_command(&p, &ImpulseSequence::identity()), p);
    }

    #[test]
    fn unit_step_through_zv_is_a_staircase() {
        let wn = 2.0 * PI * 25.0;
        let dt = 1e-4;
        let zv = design_shaper(ShaperKind::Zv, &PlantParams::new(wn, 0.0).unwrap()).unwrap();
        let step = MotionProfile::from_acceleration(dt, 0.0, &vec![1.0; 400]).unwrap();
        let shaped = shape_command(&step, &zv);
        let delay = (PI / wn / dt).round() as usize;
        assert_eq!(delay, 200);
        assert_eq!(shaped.len(), 400 + delay);
        for (k, s) in shaped.samples().iter().enumerate() {
            let want = if k < delay { 0.5 } else { 1.0 };
            assert_eq!(s.acceleration, want, "k={k}");
        }
    }

    #[test]
    fn shaped_moves_keep_displacement_and_limits() {
        let p = trapezoid_profile(&TrapezoidParams::new(0.05, 0.5, 50.0).unwrap(), 2e-4).unwrap();
        let plant = PlantParams::from_hz(30.0, 0.03).unwrap();
        for kind in [
            ShaperKind::Zv,
            ShaperKind::Zvd,
            ShaperKind::Zvdd,
            ShaperKind::ei(),
        ] {
            let s = shape_command(&p, &design_shaper(kind, &plant).unwrap());
            let end = s.final_sample();
            assert!((end.position - p.final_sample().position).abs() < 1e-9);
            assert!(end.velocity.abs() < 1e-12 && end.acceleration == 0.0);
            assert!(s.peak_acceleration() <= p.peak_acceleration() + 1e-12);
            let (dv, dp) = integration_error(&s);
            assert!(dv < 1e-9 && dp < 1e-9, "{kind:?}: {dv} {dp}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let p = trapezoid_profile(&TrapezoidParams::new(0.01, 0.2, 10.0).unwrap(), 1e-3).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_s,position_m,velocity_mps,acceleration_mps2\n"));
        let back = MotionProfile::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), p.len());
        assert!((back.sample_period() - 1e-3).abs() < 1e-12);
        assert!(MotionProfile::read_csv("time_s,position_m\n0,0\n".as_bytes()).is_err());
    }

    fn arb_profile() -> impl Strategy<Value = MotionProfile> {
        (
            -0.2f64..0.2,
            0.05f64..2.0,
            5.0f64..200.0,
            prop::sample::select(vec![1e-4, 2e-4, 5e-4]),
        )
            .prop_map(|(d, v, a, dt)| {
                trapezoid_profile(&TrapezoidParams::new(d, v, a).unwrap(), dt).unwrap()
            })
    }

    fn arb_shaper() -> impl Strategy<Value = ImpulseSequence> {
        (
            prop::collection::vec(0.05f64..1.0, 1..5),
            prop::collection::vec(1e-3f64..0.03, 4),
        )
            .prop_map(|(amps, gaps)| {
                let total: f64 = amps.iter().sum();
                let mut t = 0.0;
                let imps = amps
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        if i > 0 {
                            t += gaps[i - 1];
                        }
                        Impulse {
                            amplitude: a / total,
                            time: t,
                        }
                    })
                    .collect();
                ImpulseSequence::new(imps).unwrap_or_else(|_| ImpulseSequence::identity())
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn shaping_preserves_displacement(p in arb_profile(), s in arb_shaper()) {
            let out = shape_command(&p, &s);
            prop_assert!((out.final_sample().position - p.final_sample().position).abs() < 1e-9);
            prop_assert!(out.peak_acceleration() <= p.peak_acceleration() * (1.0 + 1e-12));
        }

        #[test]
        fn shaping_is_linear(
            a1 in prop::collection::vec(-5.0f64..5.0, 1..200),
            a2 in prop::collection::vec(-5.0f64..5.0, 1..200),
            ka in -3.0f64..3.0,
            kb in -3.0f64..3.0,
            s in arb_shaper(),
        ) {
            let n = a1.len().min(a2.len());
            let dt = 1e-3;
            let p1 = MotionProfile::from_acceleration(dt, 0.0, &a1[..n]).unwrap();
            let p2 = MotionProfile::from_acceleration(dt, 0.0, &a2[..n]).unwrap();
            let mixed: Vec<f64> = (0..n).map(|i| ka * a1[i] + kb * a2[i]).collect();
            let pm = MotionProfile::from_acceleration(dt, 0.0, &mixed).unwrap();
            let (o1, o2, om) = (shape_command(&p1, &s), shape_command(&p2, &s), shape_command(&pm, &s));
            for ((x, y), z) in o1.samples().iter().zip(o2.samples()).zip(om.samples()) {
                prop_assert!((ka * x.acceleration + kb * y.acceleration - z.acceleration).abs() < 1e-9);
                prop_assert!((ka * x.velocity + kb * y.velocity - z.velocity).abs() < 1e-9);
                prop_assert!((ka * x.position + kb * y.position - z.position).abs() < 1e-9);
            }
        }
    }
}
