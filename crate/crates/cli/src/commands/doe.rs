use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use serde_json::json;
use vibshape::doe::{
    effect_summary, fit_effects, significance_report, FactorialDesign, LevelCoding,
};
use vibshape::format::round_sig;

use crate::output::Output;
use crate::Format;

#[derive(Debug, clap::Args)]
#[command(allow_negative_numbers = true)]
pub struct Args {
    /// Design CSV: one column per factor plus `response`.
    design: PathBuf,
    /// 1 for main effects only, 2 to add pairwise interactions.
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// JSON mapping factor names to their {"low", "high"} level labels.
    #[arg(long)]
    levels: Option<PathBuf>,
    /// Significance level for flagging terms.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

pub fn run(args: Args, out: &mut Output) -> Result<()> {
    let coding = match &args.levels {
        Some(path) => LevelCoding::from_json(&out.read_input(path)?)?,
        None => LevelCoding::default(),
    };
    let text = out.read_input(&args.design)?;
    let design = FactorialDesign::read_csv(text.as_bytes(), &coding)?;
    let fit = fit_effects(&design, args.order)?;
    let significance = significance_report(&fit, args.alpha)?;
    let summary = effect_summary(&fit, &design);

    out.param("order", args.order);
    out.param_f64("alpha", args.alpha);

    let mut buf = Vec::new();
    fit.write_json(&mut buf)?;
    out.write("fit.json", &buf)?;
    let table = fit.to_text_table();
    out.write("fit.txt", table.as_bytes())?;
    out.write_json("significance.json", &significance)?;

    match out.format() {
        Format::Csv => {
            let mut buf = Vec::new();
            summary.write_main_effects_csv(&mut buf)?;
            out.write("main_effects.csv", &buf)?;
            let mut buf = Vec::new();
            summary.write_interactions_csv(&mut buf)?;
            out.write("interactions.csv", &buf)?;
        }
        Format::Json => {
            let main: Vec<_> = summary
                .main_effects
                .iter()
                .flat_map(|m| {
                    [
                        json!({"factor": m.factor, "level": -1, "mean": round_sig(m.low_mean)}),
                        json!({"factor": m.factor, "level": 1, "mean": round_sig(m.high_mean)}),
                    ]
                })
                .collect();
            out.write_json("main_effects.json", &main)?;
            let mut cells = Vec::new();
            for c in &summary.interactions {
                for (i, la) in [-1, 1].into_iter().enumerate() {
                    for (j, lb) in [-1, 1].into_iter().enumerate() {
                        cells.push(json!({
                            "factor_a": c.factor_a,
                            "factor_b": c.factor_b,
                            "level_a": la,
                            "level_b": lb,
                            "mean": round_sig(c.cells[i][j]),
                        }));
                    }
                }
            }
            out.write_json("interactions.json", &cells)?;
        }
    }

    let mut stdout = std::io::stdout().lock();
    stdout.write_all(table.as_bytes())?;
    Ok(())
}
