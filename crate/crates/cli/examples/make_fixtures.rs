//! Regenerates the files under `fixtures/`.
//!
//! cargo run -p vibshape-cli --example make_fixtures

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use vibshape::format::round_sig;
use vibshape::monitor::{write_trace_csv, MonitorConfig};
use vibshape::plant::{compare_shaping, Scenario};
use vibshape::shaper::{design_shaper, ShaperKind};

/// `amplitude` sine at `freq` plus white noise at the given SNR.
fn noisy_tone(freq: f64, snr_db: f64, rate: f64, seconds: f64, seed: u64) -> Vec<(f64, f64)> {
    let amplitude = 1.0;
    let noise_power = amplitude * amplitude / 2.0 / 10f64.powf(snr_db / 10.0);
    let noise = Normal::new(0.0, noise_power.sqrt()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (rate * seconds).round() as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            (
                t,
                amplitude * (TAU * freq * t).sin() + noise.sample(&mut rng),
            )
        })
        .collect()
}

fn write_trace(dir: &Path, name: &str, trace: &[(f64, f64)]) {
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf).unwrap();
    fs::write(dir.join(name), buf).unwrap();
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    fs::create_dir_all(&dir).unwrap();

    write_trace(
        &dir,
        "tone_98hz.csv",
        &noisy_tone(98.0, 10.0, 2000.0, 2.0, 98),
    );
    write_trace(
        &dir,
        "tone_30hz.csv",
        &noisy_tone(30.0, 10.0, 2000.0, 2.0, 30),
    );

    let scenario = Scenario::reference();
    let plant = scenario.plant().unwrap();
    let seq = design_shaper(ShaperKind::ei(), &plant).unwrap();
    let cmp = compare_shaping(
        &plant,
        &scenario.command().unwrap(),
        &seq,
        scenario.settle_horizon,
    )
    .unwrap();
    write_trace(
        &dir,
        "reference_unshaped.csv",
        &cmp.unshaped.residual_trace(),
    );
    write_trace(&dir, "reference_shaped.csv", &cmp.shaped.residual_trace());

    // Alarm midway between the two residual RMS values, warning midway
    // between the shaped RMS and the alarm.
    let alarm = round_sig(0.5 * (cmp.unshaped_rms + cmp.shaped_rms));
    let warning = round_sig(0.5 * (cmp.shaped_rms + alarm));
    let config = MonitorConfig::new(1.0 / scenario.sample_period, 500, warning, alarm).unwrap();
    let mut json = serde_json::to_string_pretty(&config).unwrap();
    json.push('\n');
    fs::write(dir.join("monitor_reference.json"), json).unwrap();
}
