use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use serde_json::{json, Value};
use vibshape::analysis::{self, compare_signatures, dominant_frequency, spectrum, Spectrum};
use vibshape::format::{round_sig, sig};
use vibshape::monitor::{check_timestamps, read_trace_csv};

use crate::output::Output;

#[derive(Debug, clap::Args)]
#[command(allow_negative_numbers = true)]
pub struct Args {
    /// Trace CSV with columns `time_s,accel_mps2`.
    trace: PathBuf,
    /// Ignore spectral peaks below this frequency, Hz. Defaults to two
    /// frequency bins, which skips DC and its window leakage.
    #[arg(long)]
    min_freq: Option<f64>,
    /// Second trace whose dominant source is compared with this one.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Dominant frequencies closer than this are the same source, Hz.
    #[arg(long, default_value_t = 1.0)]
    tolerance_hz: f64,
}

/// Samples and inferred sample rate of a uniformly sampled trace.
fn load(out: &mut Output, path: &Path) -> Result<(Vec<f64>, f64)> {
    let text = out.read_input(path)?;
    let trace = read_trace_csv(text.as_bytes())?;
    if trace.len() < 2 {
        bail!("{}: need at least two samples", path.display());
    }
    let span = trace[trace.len() - 1].0 - trace[0].0;
    if span.is_nan() || span <= 0.0 {
        bail!("{}: timestamps do not increase", path.display());
    }
    let rate = (trace.len() - 1) as f64 / span;
    let times: Vec<f64> = trace.iter().map(|p| p.0).collect();
    check_timestamps(&times, rate)?;
    if let Some(i) = trace.iter().position(|p| !p.1.is_finite()) {
        bail!(
            "{}: row {}: acceleration is not finite",
            path.display(),
            i + 1
        );
    }
    Ok((trace.into_iter().map(|p| p.1).collect(), rate))
}

/// Dominant frequency, or `None` when nothing above `min_freq` carries energy.
fn dominant(spec: &Spectrum, min_freq: Option<f64>) -> Result<Option<f64>> {
    let min_freq = min_freq.unwrap_or(2.0 * spec.frequency_resolution());
    if !(min_freq.is_finite() && min_freq >= 0.0) {
        bail!("invalid min_freq: must be finite and >= 0");
    }
    if min_freq > spec.sample_rate() / 2.0 {
        bail!(
            "invalid min_freq: {} Hz is above the Nyquist frequency {} Hz",
            sig(min_freq),
            sig(spec.sample_rate() / 2.0)
        );
    }
    Ok(dominant_frequency(spec, min_freq).ok())
}

pub fn run(args: Args, out: &mut Output) -> Result<()> {
    let (samples, rate) = load(out, &args.trace)?;
    let metrics = analysis::metrics(&samples)?;
    let spec = spectrum(&samples, rate)?;
    let dominant_hz = dominant(&spec, args.min_freq)?;

    if let Some(f) = args.min_freq {
        out.param_f64("min_freq", f);
    }
    out.param_f64("tolerance_hz", args.tolerance_hz);

    let mut report = json!({
        "samples": samples.len(),
        "sample_rate_hz": round_sig(rate),
        "rms": round_sig(metrics.rms),
        "peak": round_sig(metrics.peak),
        "crest_factor": metrics.crest_factor.map(round_sig),
        "frequency_resolution_hz": round_sig(spec.frequency_resolution()),
        "dominant_frequency_hz": dominant_hz.map(round_sig),
    });
    if let Some(path) = &args.reference {
        let (other, other_rate) = load(out, path)?;
        let other_spec = spectrum(&other, other_rate)?;
        let same = compare_signatures(&spec, &other_spec, args.tolerance_hz)?;
        let other_hz = dominant(&other_spec, None)?;
        report["reference_dominant_frequency_hz"] = other_hz.map(round_sig).into();
        report["same_source"] = Value::from(same);
    }

    out.write_table("spectrum", &spec.to_table())?;
    out.write_json("metrics.json", &report)?;

    println!(
        "rms {} m/s², peak {} m/s², dominant {}",
        sig(metrics.rms),
        sig(metrics.peak),
        dominant_hz.map_or("none".to_string(), |f| format!("{} Hz", sig(f)))
    );
    if let Some(same) = report.get("same_source") {
        println!("same source as reference: {same}");
    }
    Ok(())
}
