//! Output directory handling and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use vibshape::format::{round_sig, Table, TableFormat};

use crate::Format;

/// Record of one invocation, written as `manifest.json` next to its outputs.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    inputs: &'a [String],
    /// File names relative to the output directory.
    outputs: &'a [String],
    parameters: &'a BTreeMap<String, Value>,
}

pub struct Output {
    subcommand: &'static str,
    dir: PathBuf,
    format: Format,
    seed: u64,
    inputs: Vec<String>,
    outputs: Vec<String>,
    parameters: BTreeMap<String, Value>,
}

impl Output {
    pub fn new(subcommand: &'static str, dir: PathBuf, format: Format, seed: u64) -> Self {
        Self {
            subcommand,
            dir,
            format,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn table_format(&self) -> TableFormat {
        match self.format {
            Format::Csv => TableFormat::Csv,
            Format::Json => TableFormat::Json,
        }
    }

    pub fn table_extension(&self) -> &'static str {
        match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// Reads an input file and records it in the manifest.
    pub fn read_input(&mut self, path: &Path) -> Result<String> {
        self.inputs.push(path.display().to_string());
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }

    pub fn param(&mut self, name: &str, value: impl Into<Value>) {
        self.parameters.insert(name.to_string(), value.into());
    }

    /// Records a float parameter at the report precision.
    pub fn param_f64(&mut self, name: &str, value: f64) {
        self.param(name, round_sig(value));
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes `table` as `<stem>.csv` or `<stem>.json` per `--format`.
    pub fn write_table(&mut self, stem: &str, table: &Table) -> Result<()> {
        let mut buf = Vec::new();
        table.write(&mut buf, self.table_format())?;
        let name = format!("{stem}.{}", self.table_extension());
        self.write(&name, &buf)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.write(name, &buf)
    }

    pub fn finish(mut self) -> Result<()> {
        self.param("format", self.table_extension());
        self.param("seed", self.seed);
        let manifest = RunManifest {
            subcommand: self.subcommand,
            version: env!("CARGO_PKG_VERSION"),
            inputs: &self.inputs,
            outputs: &self.outputs,
            parameters: &self.parameters,
        };
        let mut buf = serde_json::to_vec_pretty(&manifest)?;
        buf.push(b'\n');
        self.write("manifest.json", &buf)
    }
}
