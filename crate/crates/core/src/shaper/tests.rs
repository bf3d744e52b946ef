use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use super::*;

fn all_kinds() -> [ShaperKind; 4] {
    [
        ShaperKind::Zv,
        ShaperKind::Zvd,
        ShaperKind::Zvdd,
        ShaperKind::ei(),
    ]
}

fn plant_grid() -> Vec<PlantParams> {
    let mut out = Vec::new();
    for hz in (5..=100).step_by(5) {
        for zeta in [0.0, 0.01, 0.05, 0.1, 0.3] {
            out.push(PlantParams::new(TAU * hz as f64, zeta).unwrap());
        }
    }
    out
}

#[test]
fn plant_validation() {
    assert!(PlantParams::new(0.0, 0.1).is_err());
    assert!(PlantParams::new(-1.0, 0.1).is_err());
    assert!(PlantParams::new(10.0, 1.0).is_err());
    assert!(PlantParams::new(10.0, -0.1).is_err());
    assert!(PlantParams::new(f64::NAN, 0.1).is_err());
    let p = PlantParams::new(100.0, 0.3).unwrap();
    assert!((p.damped_frequency() - 100.0 * (1.0 - 0.09f64).sqrt()).abs() < 1e-12);
}

#[test]
fn sequence_validation() {
    let imp = |amplitude, time| Impulse { amplitude, time };
    assert!(ImpulseSequence::new(vec![]).is_err());
    assert!(ImpulseSequence::new(vec![imp(1.0, 0.1)]).is_err());
    assert!(ImpulseSequence::new(vec![imp(0.5, 0.0), imp(0.4, 0.1)]).is_err());
    assert!(ImpulseSequence::new(vec![imp(0.5, 0.0), imp(0.5, 0.0)]).is_err());
    assert!(ImpulseSequence::new(vec![imp(1.5, 0.0), imp(-0.5, 0.1)]).is_err());
    assert!(ImpulseSequence::new(vec![imp(0.5, 0.0), imp(0.5, 0.1)]).is_ok());
}

#[test]
fn single_impulse_has_unit_residual() {
    for p in plant_grid() {
        let v = residual_vibration(&ImpulseSequence::identity(), &p);
        assert!((v - 1.0).abs() < 1e-15);
    }
}

#[test]
fn zv_undamped_is_two_equal_impulses() {
    let p = PlantParams::new(40.0, 0.0).unwrap();
    let s = design_shaper(ShaperKind::Zv, &p).unwrap();
    assert_eq!(s.amplitudes(), vec![0.5, 0.5]);
    assert_eq!(s.times()[0], 0.0);
    assert!((s.times()[1] - PI / 40.0).abs() < 1e-15);
}

#[test]
fn zv_damped_example() {
    let p = PlantParams::new(62.832, 0.05).unwrap();
    let s = design_shaper(ShaperKind::Zv, &p).unwrap();
    let a = s.amplitudes();
    assert!((a[0] - 0.5392).abs() < 1e-4, "{a:?}");
    assert!((a[1] - 0.4608).abs() < 1e-4, "{a:?}");
    assert!((s.times()[1] - 0.05006).abs() < 1e-5);
    assert!(residual_vibration(&s, &p) <= 1e-9);
}

#[test]
fn ei_undamped_closed_form() {
    let p = PlantParams::new(TAU * 10.0, 0.0).unwrap();
    let s = design_shaper(ShaperKind::ei(), &p).unwrap();
    let a = s.amplitudes();
    for (got, want) in a.iter().zip([0.2625, 0.475, 0.2625]) {
        assert!((got - want).abs() < 1e-15);
    }
    let t = s.times();
    assert!((t[1] - PI / p.natural_frequency()).abs() < 1e-15);
    assert!((t[2] - 2.0 * PI / p.natural_frequency()).abs() < 1e-15);
    assert!((residual_vibration(&s, &p) - 0.05).abs() < 1e-3);
}

#[test]
fn ei_rejects_bad_tolerance() {
    let p = PlantParams::new(10.0, 0.0).unwrap();
    for v in [0.0, -0.01, 0.25, f64::NAN] {
        let kind = ShaperKind::Ei {
            tolerable_vibration: v,
        };
        assert!(matches!(
            design_shaper(kind, &p),
            Err(Error::Domain {
                param: "tolerable_vibration",
                ..
            })
        ));
    }
}

#[test]
fn designed_shapers_satisfy_constraints_on_grid() {
    for p in plant_grid() {
        for kind in all_kinds() {
            let s = design_shaper(kind, &p).unwrap();
            let sum: f64 = s.amplitudes().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "{kind:?} {p:?}");
            assert_eq!(s.times()[0], 0.0);
        }
    }
}

#[test]
fn zero_vibration_shapers_cancel_on_grid() {
    for p in plant_grid() {
        for kind in [ShaperKind::Zv, ShaperKind::Zvd, ShaperKind::Zvdd] {
            let s = design_shaper(kind, &p).unwrap();
            let v = residual_vibration(&s, &p);
            assert!(v <= 1e-9, "{kind:?} {p:?} -> {v}");
        }
    }
}

#[test]
fn damped_ei_hits_tolerance_with_flat_hump() {
    for zeta in [0.01, 0.05, 0.1, 0.3] {
        let p = PlantParams::new(TAU * 30.0, zeta).unwrap();
        let s = design_shaper(ShaperKind::ei(), &p).unwrap();
        assert!((residual_vibration(&s, &p) - 0.05).abs() < 1e-9);
        let h = 1e-4;
        let up = residual_vibration(&s, &p.scaled(1.0 + h).unwrap());
        let dn = residual_vibration(&s, &p.scaled(1.0 - h).unwrap());
        assert!(
            up < 0.05 && dn < 0.05,
            "design point is not a local maximum"
        );
    }
}

/// Brute-force scan: count near-zero local minima and locate the local maximum near 1.
fn scan_zeros_and_hump(seq: &ImpulseSequence, p: &PlantParams) -> (Vec<f64>, f64, f64) {
    let curve = sensitivity_curve(seq, p, (0.5, 1.5), 20001).unwrap();
    let mut zeros = Vec::new();
    let mut hump = (0.0, 0.0);
    for w in curve.windows(3) {
        let (r, v) = w[1];
        if v < w[0].1 && v < w[2].1 && v < 1e-3 {
            zeros.push(r);
        }
        if v > w[0].1 && v > w[2].1 && (r - 1.0).abs() < 0.05 {
            hump = (r, v);
        }
    }
    (zeros, hump.0, hump.1)
}

#[test]
fn ei_curve_has_twin_zeros_and_central_hump() {
    for zeta in [0.0, 0.05] {
        let p = PlantParams::new(TAU * 20.0, zeta).unwrap();
        let s = design_shaper(ShaperKind::ei(), &p).unwrap();
        let (zeros, hump_at, hump) = scan_zeros_and_hump(&s, &p);
        assert_eq!(zeros.len(), 2, "zeta={zeta}: {zeros:?}");
        assert!(zeros[0] < 1.0 && zeros[1] > 1.0);
        assert!((hump_at - 1.0).abs() < 1e-4, "hump at {hump_at}");
        assert!((hump - 0.05).abs() < 1e-6);
    }
}

#[test]
fn sensitivity_curve_basics() {
    let p = PlantParams::new(TAU * 15.0, 0.02).unwrap();
    let zv = design_shaper(ShaperKind::Zv, &p).unwrap();
    let curve = sensitivity_curve(&zv, &p, (0.5, 1.5), 2001).unwrap();
    assert_eq!(curve.len(), 2001);
    assert!(curve.windows(2).all(|w| w[1].0 > w[0].0));
    assert_eq!(curve[1000].0, 1.0);
    assert!(curve[1000].1 <= 1e-9);

    let flat = sensitivity_curve(&ImpulseSequence::identity(), &p, (0.2, 3.0), 50).unwrap();
    assert!(flat.iter().all(|(_, v)| (v - 1.0).abs() < 1e-15));

    assert!(sensitivity_curve(&zv, &p, (1.5, 0.5), 10).is_err());
    assert!(sensitivity_curve(&zv, &p, (0.0, 0.5), 10).is_err());
    assert!(sensitivity_curve(&zv, &p, (0.5, 1.5), 1).is_err());
}

#[test]
fn insensitivity_width_matches_closed_forms_undamped() {
    // Edges shift by the 1e-9 tolerance slack, hence 1e-8.
    // Undamped residual curves: ZV |cos(πr/2)|, ZVD cos², ZVDD |cos|³,
    // EI |(1-V)/2 + (1+V)/2 cos(πr)|.
    let v = 0.05;
    let p = PlantParams::new(TAU * 25.0, 0.0).unwrap();
    let width = |kind| insensitivity_width(&design_shaper(kind, &p).unwrap(), &p, v).unwrap();
    let cos_power = |n: f64| 2.0 - 4.0 * v.powf(1.0 / n).acos() / PI;
    let ei_oracle = 2.0 - 2.0 * (-1.0 + 4.0 * v / (1.0 + v)).acos() / PI;
    assert!((width(ShaperKind::Zv) - cos_power(1.0)).abs() < 1e-8);
    assert!((width(ShaperKind::Zvd) - cos_power(2.0)).abs() < 1e-8);
    assert!((width(ShaperKind::Zvdd) - cos_power(3.0)).abs() < 1e-8);
    assert!((width(ShaperKind::ei()) - ei_oracle).abs() < 1e-8);
}

#[test]
fn robustness_ordering() {
    for zeta in [0.0, 0.02, 0.1] {
        let p = PlantParams::new(TAU * 40.0, zeta).unwrap();
        let w = |kind| insensitivity_width(&design_shaper(kind, &p).unwrap(), &p, 0.05).unwrap();
        let (zv, zvd, zvdd, ei) = (
            w(ShaperKind::Zv),
            w(ShaperKind::Zvd),
            w(ShaperKind::Zvdd),
            w(ShaperKind::ei()),
        );
        assert!(zv < zvd && zvd < zvdd, "zeta={zeta}: {zv} {zvd} {zvdd}");
        assert!(ei > 2.0 * zv, "zeta={zeta}: ei {ei} zv {zv}");
        assert!(ei > zvd);
    }
}

#[test]
fn unshaped_width_is_zero() {
    let p = PlantParams::new(10.0, 0.0).unwrap();
    assert_eq!(
        insensitivity_width(&ImpulseSequence::identity(), &p, 0.05).unwrap(),
        0.0
    );
    assert!(insensitivity_width(&ImpulseSequence::identity(), &p, 1.0).is_err());
}

/// Residual as a complex vector, so its slope is defined through zero.
fn residual_vector(seq: &ImpulseSequence, p: &PlantParams) -> (f64, f64) {
    let decay = p.damping_ratio() * p.natural_frequency();
    let t_end = seq.duration();
    seq.impulses().iter().fold((0.0, 0.0), |(c, s), imp| {
        let w = imp.amplitude * (-decay * (t_end - imp.time)).exp();
        let ph = p.damped_frequency() * imp.time;
        (c + w * ph.cos(), s + w * ph.sin())
    })
}

fn central_slope(seq: &ImpulseSequence, p: &PlantParams) -> f64 {
    let h = 1e-4 * p.natural_frequency();
    let up = residual_vector(
        seq,
        &PlantParams::new(p.natural_frequency() + h, p.damping_ratio()).unwrap(),
    );
    let dn = residual_vector(
        seq,
        &PlantParams::new(p.natural_frequency() - h, p.damping_ratio()).unwrap(),
    );
    (up.0 - dn.0).hypot(up.1 - dn.1) / (2.0 * h)
}

#[test]
fn zvd_zeroes_the_frequency_derivative() {
    for p in plant_grid() {
        let zvd = design_shaper(ShaperKind::Zvd, &p).unwrap();
        let zv = design_shaper(ShaperKind::Zv, &p).unwrap();
        let reference = central_slope(&zv, &p);
        assert!(reference > 0.0);
        assert!(central_slope(&zvd, &p) <= 1e-4 * reference, "{p:?}");
    }
}

#[test]
fn shaper_document_round_trip() {
    let p = PlantParams::from_hz(33.0, 0.03).unwrap();
    let kind = ShaperKind::ei();
    let s = design_shaper(kind, &p).unwrap();
    let doc = ShaperDocument::new(kind, &p, &s);
    let text = doc.to_json().unwrap();
    assert!(text.contains("\"tolerable_vibration\": 0.05"));
    assert!(text.contains("\"time_s\""));
    let back = ShaperDocument::from_json(&text).unwrap();
    assert_eq!(back, doc);
    let (p2, s2) = back.sequence().unwrap();
    assert_eq!(p2, p);
    assert_eq!(s2, s);

    let zv = ShaperDocument::new(
        ShaperKind::Zv,
        &p,
        &design_shaper(ShaperKind::Zv, &p).unwrap(),
    );
    assert!(!zv.to_json().unwrap().contains("tolerable_vibration"));
}

proptest! {
    #[test]
    fn residual_invariant_under_time_shift(
        amps in prop::collection::vec(0.05f64..1.0, 1..6),
        gaps in prop::collection::vec(1e-3f64..0.05, 5),
        shift in 0.0f64..1.0,
        wn in 10.0f64..600.0,
        zeta in 0.0f64..0.5,
    ) {
        let total: f64 = amps.iter().sum();
        let mut t = 0.0;
        let imps: Vec<Impulse> = amps.iter().enumerate().map(|(i, a)| {
            if i > 0 { t += gaps[i - 1]; }
            Impulse { amplitude: a / total, time: t }
        }).collect();
        let shifted: Vec<Impulse> = imps.iter()
            .map(|i| Impulse { amplitude: i.amplitude, time: i.time + shift })
            .collect();
        let p = PlantParams::new(wn, zeta).unwrap();
        let a = residual_amplitude(&imps, &p);
        let b = residual_amplitude(&shifted, &p);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn designed_sequences_are_valid(hz in 1.0f64..200.0, zeta in 0.0f64..0.3, v in 0.005f64..0.2) {
        let p = PlantParams::from_hz(hz, zeta).unwrap();
        for kind in [ShaperKind::Zv, ShaperKind::Zvd, ShaperKind::Zvdd, ShaperKind::Ei { tolerable_vibration: v }] {
            let s = design_shaper(kind, &p).unwrap();
            prop_assert!(s.amplitudes().iter().all(|a| *a > 0.0));
            prop_assert!(s.times().windows(2).all(|w| w[1] > w[0]));
        }
    }
}
