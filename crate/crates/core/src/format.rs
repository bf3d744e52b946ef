//! Fixed-precision numeric formatting and plot-ready table emission.
//!
//! Every numeric value written to CSV or report JSON goes through
//! [`round_sig`] so repeated runs produce byte-identical files.

use std::io::Write;

use serde::Serialize;

use crate::Result;

/// Significant digits used for all emitted numeric output.
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant digits. Non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Formats `x` with [`SIGNIFICANT_DIGITS`] significant digits, shortest form.
pub fn sig(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        return "0".to_string();
    }
    if !r.is_finite() {
        return if r.is_nan() {
            "NaN".into()
        } else if r > 0.0 {
            "Inf".into()
        } else {
            "-Inf".into()
        };
    }
    let exp = r.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Serde helper: rounds a float field on the way out.
pub fn ser_sig<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*x))
}

/// Serde helper for optional floats; non-finite values become `null`.
pub fn ser_sig_opt<S: serde::Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) if v.is_finite() => s.serialize_f64(round_sig(*v)),
        _ => s.serialize_none(),
    }
}

/// Output encoding for tabular data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Csv,
    Json,
}

/// A column-named numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| sig(*v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    /// JSON array of objects keyed by column name.
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a>(#[serde(serialize_with = "ser_row")] (&'a [String], &'a [f64]));

        fn ser_row<S: serde::Serializer>(
            row: &(&[String], &[f64]),
            s: S,
        ) -> Result<S::Ok, S::Error> {
            use serde::ser::SerializeMap;
            let mut map = s.serialize_map(Some(row.0.len()))?;
            for (k, v) in row.0.iter().zip(row.1) {
                if v.is_finite() {
                    map.serialize_entry(k, &round_sig(*v))?;
                } else {
                    map.serialize_entry(k, &Option::<f64>::None)?;
                }
            }
            map.end()
        }

        let rows: Vec<Row> = self
            .rows
            .iter()
            .map(|r| Row((&self.columns, r.as_slice())))
            .collect();
        serde_json::to_writer_pretty(&mut out, &rows)?;
        writeln!(out)?;
        Ok(())
    }

    pub fn write<W: Write>(&self, out: W, format: TableFormat) -> Result<()> {
        match format {
            TableFormat::Csv => self.write_csv(out),
            TableFormat::Json => self.write_json(out),
        }
    }
}
