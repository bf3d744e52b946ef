use std::path::PathBuf;

use anyhow::{bail, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};
use vibshape::analysis::{self, VibrationMetrics};
use vibshape::format::{round_sig, sig, Table};
use vibshape::monitor::write_trace_csv;
use vibshape::motion::{
    recommended_max_sample_period, shape_command, trapezoid_profile, TrapezoidParams,
};
use vibshape::plant::{settling_time, simulate, Scenario, SimulationResult, DEFAULT_SETTLING_BAND};
use vibshape::shaper::{PlantParams, ShaperDocument};

use crate::output::Output;

#[derive(Debug, clap::Args)]
#[command(allow_negative_numbers = true)]
pub struct Args {
    /// Endpoint natural frequency, Hz.
    #[arg(long, default_value_t = Scenario::reference().frequency_hz)]
    freq_hz: f64,
    /// Endpoint damping ratio.
    #[arg(long, default_value_t = Scenario::reference().damping_ratio)]
    zeta: f64,
    /// Move distance, m.
    #[arg(long, default_value_t = Scenario::reference().move_params.distance)]
    distance: f64,
    /// Velocity limit, m/s.
    #[arg(long, default_value_t = Scenario::reference().move_params.max_velocity)]
    max_velocity: f64,
    /// Acceleration limit, m/s².
    #[arg(long, default_value_t = Scenario::reference().move_params.max_acceleration)]
    max_accel: f64,
    /// Sample period, s.
    #[arg(long, default_value_t = Scenario::reference().sample_period)]
    dt: f64,
    /// Time simulated after the command ends, s.
    #[arg(long, default_value_t = Scenario::reference().settle_horizon)]
    horizon: f64,
    /// Settling band on endpoint deflection, m.
    #[arg(long, default_value_t = DEFAULT_SETTLING_BAND)]
    settling_band: f64,
    /// Shaper JSON as written by `vibshape design`.
    #[arg(long)]
    shaper: Option<PathBuf>,
    /// Run both the unshaped and the shaped move and report the reduction.
    #[arg(long)]
    compare: bool,
    /// RMS of white sensor noise added to acceleration outputs, m/s².
    #[arg(long, default_value_t = 0.0)]
    noise_rms: f64,
}

struct Arm {
    name: &'static str,
    result: SimulationResult,
    acceleration: Vec<f64>,
}

impl Arm {
    fn residual(&self) -> &[f64] {
        &self.acceleration[self.result.command_end_index()..]
    }
}

fn arm_report(arm: &Arm, band: f64) -> Result<Value> {
    let residual = arm.residual();
    let m: VibrationMetrics = analysis::metrics(residual)?;
    let settling = settling_time(&arm.result, band)?;
    Ok(json!({
        "residual_rms": round_sig(m.rms),
        "residual_peak": round_sig(m.peak),
        "residual_crest_factor": m.crest_factor.map(round_sig),
        "command_end_time_s": round_sig(arm.result.command_end_time()),
        "settling_time_s": round_sig(settling.time),
        "settled": settling.settled,
    }))
}

pub fn run(args: Args, out: &mut Output) -> Result<()> {
    if args.compare && args.shaper.is_none() {
        bail!("--compare needs --shaper");
    }
    if !(args.noise_rms.is_finite() && args.noise_rms >= 0.0) {
        bail!("invalid noise_rms: must be finite and >= 0");
    }
    if !(args.freq_hz.is_finite() && args.freq_hz > 0.0) {
        bail!(
            "invalid freq_hz: must be finite and > 0, got {}",
            args.freq_hz
        );
    }
    let plant = PlantParams::from_hz(args.freq_hz, args.zeta)?;
    let params = TrapezoidParams::new(args.distance, args.max_velocity, args.max_accel)?;
    let command = trapezoid_profile(&params, args.dt)?;
    let shaper = match &args.shaper {
        Some(path) => {
            let text = out.read_input(path)?;
            let doc = ShaperDocument::from_json(&text)?;
            Some((doc.kind.clone(), doc.sequence()?.1))
        }
        None => None,
    };

    out.param_f64("freq_hz", args.freq_hz);
    out.param_f64("zeta", args.zeta);
    out.param_f64("distance", args.distance);
    out.param_f64("max_velocity", args.max_velocity);
    out.param_f64("max_accel", args.max_accel);
    out.param_f64("dt", args.dt);
    out.param_f64("horizon", args.horizon);
    out.param_f64("settling_band", args.settling_band);
    out.param("compare", args.compare);
    out.param_f64("noise_rms", args.noise_rms);

    let limit = recommended_max_sample_period(&plant);
    if args.dt > limit {
        eprintln!(
            "warning: dt {} s is coarser than the recommended {} s for this plant",
            sig(args.dt),
            sig(limit)
        );
    }

    let mut runs = Vec::new();
    if shaper.is_none() || args.compare {
        runs.push(("unshaped", command.clone()));
    }
    if let Some((_, seq)) = &shaper {
        runs.push(("shaped", shape_command(&command, seq)));
    }
    let noise = Normal::new(0.0, args.noise_rms)?;
    let mut arms = Vec::new();
    for (stream, (name, cmd)) in runs.into_iter().enumerate() {
        let result = simulate(&plant, &cmd, args.horizon)?;
        let mut acceleration = result.acceleration().to_vec();
        if args.noise_rms > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(out.seed());
            rng.set_stream(stream as u64);
            for a in &mut acceleration {
                *a += noise.sample(&mut rng);
            }
        }
        arms.push(Arm {
            name,
            result,
            acceleration,
        });
    }

    let mut report = serde_json::Map::new();
    for arm in &arms {
        let suffix = if arms.len() > 1 {
            format!("_{}", arm.name)
        } else {
            String::new()
        };
        let mut table = Table::new(["time_s", "displacement_m", "acceleration_mps2"]);
        let dt = arm.result.sample_period();
        for (k, (x, a)) in arm
            .result
            .displacement()
            .iter()
            .zip(&arm.acceleration)
            .enumerate()
        {
            table.push(vec![k as f64 * dt, *x, *a]);
        }
        out.write_table(&format!("response{suffix}"), &table)?;

        let trace: Vec<(f64, f64)> = arm
            .residual()
            .iter()
            .enumerate()
            .map(|(k, a)| (k as f64 * dt, *a))
            .collect();
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf)?;
        out.write(&format!("residual{suffix}.csv"), &buf)?;

        report.insert(arm.name.to_string(), arm_report(arm, args.settling_band)?);
    }
    if let Some((kind, _)) = &shaper {
        report.insert("shaper_kind".into(), Value::from(kind.as_str()));
    }
    if arms.len() == 2 {
        let before = analysis::rms(arms[0].residual());
        let after = analysis::rms(arms[1].residual());
        let reduction = if before > 0.0 {
            100.0 * (1.0 - after / before)
        } else {
            0.0
        };
        report.insert("reduction_percent".into(), round_sig(reduction).into());
        println!(
            "residual RMS {} -> {} m/s² ({}% reduction)",
            sig(before),
            sig(after),
            sig(reduction)
        );
    } else {
        println!(
            "{} residual RMS {} m/s²",
            arms[0].name,
            sig(analysis::rms(arms[0].residual()))
        );
    }
    out.write_json("metrics.json", &Value::Object(report))
}
