use std::path::PathBuf;

use anyhow::{bail, Result};
use vibshape::format::sig;
use vibshape::monitor::{baseline_thresholds, read_trace_csv, replay, MonitorConfig};

use crate::output::Output;

#[derive(Debug, clap::Args)]
#[command(allow_negative_numbers = true)]
pub struct Args {
    /// Trace CSV with columns `time_s,accel_mps2`.
    trace: PathBuf,
    /// Monitor configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Calibration trace; when given, thresholds are derived from it and
    /// replace those in the configuration.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Warning threshold in standard deviations above the calibration mean.
    #[arg(long, default_value_t = 3.0)]
    warn_sigma: f64,
    /// Alarm threshold in standard deviations above the calibration mean.
    #[arg(long, default_value_t = 6.0)]
    alarm_sigma: f64,
}

pub fn run(args: Args, out: &mut Output) -> Result<()> {
    let mut config = MonitorConfig::from_json(&out.read_input(&args.config)?)?;
    if let Some(path) = &args.calibration {
        let calibration = read_trace_csv(out.read_input(path)?.as_bytes())?;
        let samples: Vec<f64> = calibration.iter().map(|p| p.1).collect();
        if samples.is_empty() {
            bail!("{}: calibration trace is empty", path.display());
        }
        let thresholds =
            baseline_thresholds(&samples, config.window, args.warn_sigma, args.alarm_sigma)?;
        config = config.with_thresholds(thresholds)?;
        out.param_f64("warn_sigma", args.warn_sigma);
        out.param_f64("alarm_sigma", args.alarm_sigma);
    }
    let trace = read_trace_csv(out.read_input(&args.trace)?.as_bytes())?;
    let outcome = replay(&trace, &config)?;

    out.param_f64("sample_rate", config.sample_rate);
    out.param("window", config.window);
    out.param_f64("warning_threshold", config.warning_threshold);
    out.param_f64("alarm_threshold", config.alarm_threshold);
    out.param_f64("rearm_fraction", config.rearm_fraction);

    let mut log = Vec::new();
    outcome.write_event_log(&mut log)?;
    out.write("events.jsonl", &log)?;
    out.write_json("summary.json", &outcome.summary)?;

    let s = &outcome.summary;
    println!(
        "{} samples, {} events ({} escalations), max RMS {} m/s², final {}",
        s.samples,
        outcome.events.len(),
        s.escalations,
        sig(s.max_rms),
        s.final_level
    );
    Ok(())
}
