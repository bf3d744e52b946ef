use anyhow::{bail, Result};
use clap::ValueEnum;
use vibshape::format::{sig, Table};
use vibshape::shaper::{
    design_shaper, sensitivity_curve, PlantParams, ShaperDocument, ShaperKind,
    DEFAULT_CURVE_POINTS, DEFAULT_RATIO_RANGE, DEFAULT_TOLERABLE_VIBRATION,
};

use crate::output::Output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Zv,
    Zvd,
    Zvdd,
    Ei,
}

#[derive(Debug, clap::Args)]
#[command(allow_negative_numbers = true)]
pub struct Args {
    #[arg(value_enum)]
    kind: Kind,
    /// Natural frequency of the mode to suppress, Hz.
    #[arg(long)]
    freq_hz: f64,
    /// Damping ratio of the mode.
    #[arg(long, default_value_t = 0.0)]
    zeta: f64,
    /// Tolerable residual vibration at the design frequency (EI only).
    #[arg(long)]
    vtol: Option<f64>,
    /// Lowest frequency ratio of the sensitivity curve.
    #[arg(long, default_value_t = DEFAULT_RATIO_RANGE.0)]
    ratio_min: f64,
    /// Highest frequency ratio of the sensitivity curve.
    #[arg(long, default_value_t = DEFAULT_RATIO_RANGE.1)]
    ratio_max: f64,
    /// Points on the sensitivity curve.
    #[arg(long, default_value_t = DEFAULT_CURVE_POINTS)]
    points: usize,
}

pub fn run(args: Args, out: &mut Output) -> Result<()> {
    let kind = match args.kind {
        Kind::Zv => ShaperKind::Zv,
        Kind::Zvd => ShaperKind::Zvd,
        Kind::Zvdd => ShaperKind::Zvdd,
        Kind::Ei => ShaperKind::Ei {
            tolerable_vibration: args.vtol.unwrap_or(DEFAULT_TOLERABLE_VIBRATION),
        },
    };
    if args.vtol.is_some() && args.kind != Kind::Ei {
        anyhow::bail!("--vtol only applies to the ei shaper");
    }
    if !(args.freq_hz.is_finite() && args.freq_hz > 0.0) {
        bail!(
            "invalid freq_hz: must be finite and > 0, got {}",
            args.freq_hz
        );
    }
    let plant = PlantParams::from_hz(args.freq_hz, args.zeta)?;
    let seq = design_shaper(kind, &plant)?;
    let curve = sensitivity_curve(&seq, &plant, (args.ratio_min, args.ratio_max), args.points)?;

    out.param("kind", kind.name());
    out.param_f64("freq_hz", args.freq_hz);
    out.param_f64("zeta", args.zeta);
    if let ShaperKind::Ei {
        tolerable_vibration,
    } = kind
    {
        out.param_f64("vtol", tolerable_vibration);
    }
    out.param_f64("ratio_min", args.ratio_min);
    out.param_f64("ratio_max", args.ratio_max);
    out.param("points", args.points);

    let doc = ShaperDocument::new(kind, &plant, &seq);
    let mut json = doc.to_json()?;
    json.push('\n');
    out.write("shaper.json", json.as_bytes())?;

    let mut table = Table::new(["frequency_ratio", "residual_vibration"]);
    for (ratio, v) in curve {
        table.push(vec![ratio, v]);
    }
    out.write_table("sensitivity", &table)?;

    println!("{} shaper, {} impulses", kind.name(), seq.len());
    for imp in seq.impulses() {
        println!("  A = {:<12} t = {} s", sig(imp.amplitude), sig(imp.time));
    }
    Ok(())
}
