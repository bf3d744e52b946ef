//! Two-level full factorial designs and coded regression with interactions.
//!
//! Factors are coded −1/+1. Runs are kept in standard order (first factor
//! alternating fastest); replicated observations of a run are grouped under
//! it. Model terms are the intercept, the main effects and, optionally, all
//! pairwise interactions, in that order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::format::{round_sig, ser_sig, ser_sig_opt, sig};
use crate::stats::t_two_sided_p;
use crate::{Error, Result};

pub const MAX_FACTORS: usize = 10;
pub const RESPONSE_COLUMN: &str = "response";

/// A factor and the meaning of its two coded levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    /// Label of the −1 level.
    pub low: String,
    /// Label of the +1 level.
    pub high: String,
}

impl Factor {
    pub fn coded(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            low: "-1".into(),
            high: "+1".into(),
        }
    }

    pub fn new(name: impl Into<String>, low: impl Into<String>, high: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            low: low.into(),
            high: high.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorialDesign {
    factors: Vec<Factor>,
    runs: Vec<Vec<i8>>,
    responses: Vec<Vec<f64>>,
}

/// Coded levels of all 2^k runs in standard order.
fn standard_order(k: usize) -> Vec<Vec<i8>> {
    (0..1usize << k)
        .map(|run| {
            (0..k)
                .map(|j| if run >> j & 1 == 1 { 1 } else { -1 })
                .collect()
        })
        .collect()
}

/// Index of a level combination in standard order.
fn run_index(levels: &[i8]) -> usize {
    levels
        .iter()
        .enumerate()
        .map(|(j, &l)| usize::from(l > 0) << j)
        .sum()
}

/// Builds the 2^k design for `factors` with no responses yet.
pub fn full_factorial(factors: Vec<Factor>) -> Result<FactorialDesign> {
    let k = factors.len();
    if !(1..=MAX_FACTORS).contains(&k) {
        return Err(Error::domain(
            "k",
            format!("factor count must be in 1..={MAX_FACTORS}, got {k}"),
        ));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = factors.iter().find(|f| !seen.insert(f.name.as_str())) {
        return Err(Error::domain(
            "factors",
            format!("duplicate factor `{}`", dup.name),
        ));
    }
    Ok(FactorialDesign {
        runs: standard_order(k),
        responses: vec![Vec::new(); 1 << k],
        factors,
    })
}

impl FactorialDesign {
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor_labels(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn runs(&self) -> &[Vec<i8>] {
        &self.runs
    }

    pub fn responses(&self) -> &[Vec<f64>] {
        &self.responses
    }

    /// Replicates per run, when every run has the same number.
    pub fn replicates(&self) -> Option<usize> {
        let n = self.responses.first()?.len();
        self.responses.iter().all(|r| r.len() == n).then_some(n)
    }

    pub fn observation_count(&self) -> usize {
        self.responses.iter().map(Vec::len).sum()
    }

    /// Records one observation for the run with the given coded levels.
    pub fn add_observation(&mut self, levels: &[i8], response: f64) -> Result<()> {
        if levels.len() != self.k() {
            return Err(Error::domain(
                "levels",
                format!("expected {} levels, got {}", self.k(), levels.len()),
            ));
        }
        if levels.iter().any(|l| *l != -1 && *l != 1) {
            return Err(Error::domain("levels", "coded levels must be -1 or +1"));
        }
        if !response.is_finite() {
            return Err(Error::domain("response", "must be finite"));
        }
        self.responses[run_index(levels)].push(response);
        Ok(())
    }

    /// Replaces all responses; `responses[i]` holds the replicates of run `i`
    /// in standard order.
    pub fn set_responses(&mut self, responses: Vec<Vec<f64>>) -> Result<()> {
        if responses.len() != self.runs.len() {
            return Err(Error::domain(
                "responses",
                format!("expected {} runs, got {}", self.runs.len(), responses.len()),
            ));
        }
        if responses.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::domain("responses", "must be finite"));
        }
        self.responses = responses;
        Ok(())
    }

    fn check_complete(&self) -> Result<usize> {
        match self.replicates() {
            Some(0) | None if self.responses.iter().any(Vec::is_empty) => {
                let missing = self.responses.iter().position(Vec::is_empty).unwrap();
                Err(Error::domain(
                    "responses",
                    format!(
                        "run {} ({}) has no response",
                        missing + 1,
                        self.describe_run(missing)
                    ),
                ))
            }
            Some(n) => Ok(n),
            None => Err(Error::domain(
                "responses",
                "every run must be replicated the same number of times",
            )),
        }
    }

    fn describe_run(&self, run: usize) -> String {
        self.factors
            .iter()
            .zip(&self.runs[run])
            .map(|(f, &l)| format!("{}={}", f.name, if l > 0 { &f.high } else { &f.low }))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Reads a design from CSV: one column per factor plus `response`.
    /// Rows with identical levels are replicates. Levels are coded through
    /// `coding`.
    pub fn read_csv<R: Read>(input: R, coding: &LevelCoding) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader.headers()?.clone();
        let response_col = headers
            .iter()
            .position(|h| h == RESPONSE_COLUMN)
            .ok_or_else(|| Error::parse(None, format!("missing column `{RESPONSE_COLUMN}`")))?;
        let factor_cols: Vec<(usize, &str)> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != response_col)
            .collect();
        if factor_cols.is_empty() {
            return Err(Error::parse(None, "no factor columns before `response`"));
        }
        for (_, name) in &factor_cols {
            if name.is_empty() {
                return Err(Error::parse(None, "empty factor column name"));
            }
        }
        let factors = factor_cols
            .iter()
            .map(|(_, name)| coding.factor(name))
            .collect();
        let mut design = full_factorial(factors)?;
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let row = row + 1;
            let mut levels = Vec::with_capacity(factor_cols.len());
            for (col, name) in &factor_cols {
                let text = record.get(*col).unwrap_or("");
                levels.push(coding.code(name, text).ok_or_else(|| {
                    Error::parse(
                        Some(row),
                        format!("unrecognised level `{text}` for `{name}`"),
                    )
                })?);
            }
            let response: f64 = record
                .get(response_col)
                .and_then(|s| s.parse().ok())
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::parse(Some(row), "response is not a finite number"))?;
            design.add_observation(&levels, response)?;
        }
        Ok(design)
    }
}

/// Maps textual factor levels onto −1/+1.
///
/// Factors without an entry accept `-1`, `1`, `+1`, `-` and `+`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelCoding {
    /// factor name → (low label, high label)
    pub levels: BTreeMap<String, LevelPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelPair {
    pub low: String,
    pub high: String,
}

impl LevelCoding {
    pub fn from_json(text: &str) -> Result<Self> {
        let levels: BTreeMap<String, LevelPair> = serde_json::from_str(text)?;
        for (name, pair) in &levels {
            if pair.low == pair.high {
                return Err(Error::parse(
                    None,
                    format!("factor `{name}` uses `{}` for both levels", pair.low),
                ));
            }
        }
        Ok(Self { levels })
    }

    pub fn insert(&mut self, factor: &str, low: &str, high: &str) {
        self.levels.insert(
            factor.to_string(),
            LevelPair {
                low: low.into(),
                high: high.into(),
            },
        );
    }

    fn factor(&self, name: &str) -> Factor {
        match self.levels.get(name) {
            Some(p) => Factor::new(name, &p.low, &p.high),
            None => Factor::coded(name),
        }
    }

    pub fn code(&self, factor: &str, text: &str) -> Option<i8> {
        match self.levels.get(factor) {
            Some(p) if text == p.low => Some(-1),
            Some(p) if text == p.high => Some(1),
            Some(_) => None,
            None => match text {
                "-1" | "-" | "-1.0" => Some(-1),
                "1" | "+1" | "+" | "1.0" | "+1.0" => Some(1),
                _ => None,
            },
        }
    }
}

/// A model term: the product of the listed factor columns. Empty is the intercept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub factors: Vec<usize>,
}

impl Term {
    pub fn name(&self, design: &FactorialDesign) -> String {
        if self.factors.is_empty() {
            "(Intercept)".to_string()
        } else {
            self.factors
                .iter()
                .map(|&j| design.factors[j].name.as_str())
                .collect::<Vec<_>>()
                .join(":")
        }
    }

    fn column(&self, levels: &[i8]) -> f64 {
        self.factors.iter().map(|&j| f64::from(levels[j])).product()
    }
}

/// Intercept, main effects and (for order 2) pairwise interactions in
/// lexicographic order.
pub fn model_terms(k: usize, max_interaction_order: usize) -> Result<Vec<Term>> {
    if !(1..=2).contains(&max_interaction_order) {
        return Err(Error::domain(
            "max_interaction_order",
            format!("must be 1 or 2, got {max_interaction_order}"),
        ));
    }
    let mut terms = vec![Term { factors: vec![] }];
    terms.extend((0..k).map(|j| Term { factors: vec![j] }));
    if max_interaction_order == 2 {
        for a in 0..k {
            for b in a + 1..k {
                terms.push(Term {
                    factors: vec![a, b],
                });
            }
        }
    }
    Ok(terms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub terms: Vec<Term>,
    pub term_names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Absent when `residual_df == 0`.
    pub standard_errors: Option<Vec<f64>>,
    pub t_values: Option<Vec<f64>>,
    pub p_values: Option<Vec<f64>>,
    pub residual_df: usize,
    pub residual_standard_error: Option<f64>,
    pub observations: usize,
}

/// Coefficients by contrast means: for each term, half the difference between
/// the mean response where its column is +1 and where it is −1; the
/// intercept is the grand mean.
pub fn contrast_coefficients(design: &FactorialDesign, terms: &[Term]) -> Vec<f64> {
    terms
        .iter()
        .map(|term| {
            let (mut hi, mut n_hi, mut lo, mut n_lo) = (0.0, 0usize, 0.0, 0usize);
            for (levels, ys) in design.runs.iter().zip(&design.responses) {
                for y in ys {
                    if term.column(levels) > 0.0 {
                        hi += y;
                        n_hi += 1;
                    } else {
                        lo += y;
                        n_lo += 1;
                    }
                }
            }
            if term.factors.is_empty() {
                hi / n_hi as f64
            } else {
                0.5 * (hi / n_hi as f64 - lo / n_lo as f64)
            }
        })
        .collect()
}

/// Least-squares fit of the coded model. Estimates come from contrast means
/// and are cross-checked against a direct least-squares solve.
pub fn fit_effects(
    design: &FactorialDesign,
    max_interaction_order: usize,
) -> Result<RegressionFit> {
    let terms = model_terms(design.k(), max_interaction_order)?;
    design.check_complete()?;
    let n = design.observation_count();
    let p = terms.len();
    if p > n {
        return Err(Error::domain(
            "model",
            format!("{p} terms cannot be estimated from {n} observations"),
        ));
    }

    let mut x = DMatrix::<f64>::zeros(n, p);
    let mut y = DVector::<f64>::zeros(n);
    let mut row = 0;
    for (levels, ys) in design.runs.iter().zip(&design.responses) {
        for &obs in ys {
            for (j, term) in terms.iter().enumerate() {
                x[(row, j)] = term.column(levels);
            }
            y[row] = obs;
            row += 1;
        }
    }
    let xtx = x.transpose() * &x;
    let chol = xtx
        .cholesky()
        .ok_or_else(|| Error::domain("model", "design matrix is singular"))?;
    let least_squares = chol.solve(&(x.transpose() * &y));

    // The design is orthogonal, so both routes must agree. The contrast means
    // are reported: they are exactly zero for effects that balance out.
    let scale = y
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let coefficients = contrast_coefficients(design, &terms);
    let disagreement = least_squares
        .iter()
        .zip(&coefficients)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if disagreement > 1e-9 * scale {
        return Err(Error::Convergence {
            what: "least-squares / contrast cross-check",
            residual: disagreement,
        });
    }

    let residual_df = n - p;
    let term_names = terms.iter().map(|t| t.name(design)).collect();
    if residual_df == 0 {
        return Ok(RegressionFit {
            terms,
            term_names,
            coefficients,
            standard_errors: None,
            t_values: None,
            p_values: None,
            residual_df,
            residual_standard_error: None,
            observations: n,
        });
    }

    let residuals = &y - &x * DVector::from_column_slice(&coefficients);
    let rss = residuals.norm_squared();
    let total = y.norm_squared();
    // Rounding noise in an exact fit is not an error estimate.
    let sigma2 = if rss <= 1e-24 * total {
        0.0
    } else {
        rss / residual_df as f64
    };
    let inverse = chol.inverse();
    let standard_errors: Vec<f64> = (0..p).map(|j| (sigma2 * inverse[(j, j)]).sqrt()).collect();
    let negligible = 1e-12 * scale;
    let t_values: Vec<f64> = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(&b, &se)| {
            if se > 0.0 {
                b / se
            } else if b.abs() <= negligible {
                0.0
            } else {
                b.signum() * f64::INFINITY
            }
        })
        .collect();
    let p_values = t_values
        .iter()
        .map(|&t| t_two_sided_p(t, residual_df as f64))
        .collect();
    Ok(RegressionFit {
        terms,
        term_names,
        coefficients,
        standard_errors: Some(standard_errors),
        t_values: Some(t_values),
        p_values: Some(p_values),
        residual_df,
        residual_standard_error: Some(sigma2.sqrt()),
        observations: n,
    })
}

#[derive(Debug, Clone, Serialize)]
struct TermRow<'a> {
    term: &'a str,
    #[serde(serialize_with = "ser_sig")]
    estimate: f64,
    #[serde(serialize_with = "ser_sig_opt")]
    std_error: Option<f64>,
    #[serde(serialize_with = "ser_sig_opt")]
    t_value: Option<f64>,
    #[serde(serialize_with = "ser_sig_opt")]
    p_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct FitReport<'a> {
    observations: usize,
    residual_df: usize,
    #[serde(serialize_with = "ser_sig_opt")]
    residual_standard_error: Option<f64>,
    coefficients: Vec<TermRow<'a>>,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.term_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }

    fn rows(&self) -> Vec<TermRow<'_>> {
        let at = |v: &Option<Vec<f64>>, i: usize| v.as_ref().map(|v| v[i]);
        self.term_names
            .iter()
            .enumerate()
            .map(|(i, name)| TermRow {
                term: name,
                estimate: self.coefficients[i],
                std_error: at(&self.standard_errors, i),
                t_value: at(&self.t_values, i),
                p_value: at(&self.p_values, i),
            })
            .collect()
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        let report = FitReport {
            observations: self.observations,
            residual_df: self.residual_df,
            residual_standard_error: self.residual_standard_error,
            coefficients: self.rows(),
        };
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
        Ok(())
    }

    /// Aligned coefficient table: Estimate, Std. Error, t value, Pr(>|t|).
    pub fn to_text_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("NA".to_string(), sig);
        let rows: Vec<[String; 5]> = self
            .rows()
            .into_iter()
            .map(|r| {
                [
                    r.term.to_string(),
                    sig(r.estimate),
                    fmt(r.std_error),
                    fmt(r.t_value),
                    fmt(r.p_value),
                ]
            })
            .collect();
        let header = ["", "Estimate", "Std. Error", "t value", "Pr(>|t|)"];
        let mut widths = header.map(str::len);
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::from("Coefficients:\n");
        let line = |cells: [&str; 5], out: &mut String| {
            let _ = write!(out, "{:<w$}", cells[0], w = widths[0]);
            for (cell, w) in cells.iter().zip(widths).skip(1) {
                let _ = write!(out, "  {cell:>w$}");
            }
            out.push('\n');
        };
        line(header, &mut out);
        for r in &rows {
            line([&r[0], &r[1], &r[2], &r[3], &r[4]], &mut out);
        }
        match self.residual_standard_error {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "\nResidual standard error: {} on {} degrees of freedom",
                    sig(s),
                    self.residual_df
                );
            }
            None => out.push_str("\nNo residual degrees of freedom: standard errors unestimable\n"),
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MainEffect {
    pub factor: String,
    #[serde(serialize_with = "ser_sig")]
    pub low_mean: f64,
    #[serde(serialize_with = "ser_sig")]
    pub high_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionCells {
    pub factor_a: String,
    pub factor_b: String,
    /// `cells[i][j]`: mean response with factor_a at level i and factor_b at
    /// level j, index 0 for −1 and 1 for +1.
    pub cells: [[f64; 2]; 2],
}

/// Data behind main-effect and interaction plots.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectSummary {
    pub main_effects: Vec<MainEffect>,
    pub interactions: Vec<InteractionCells>,
}

/// Per-factor level means and per-pair cell means. The fit fixes which
/// factor pairs are reported: every pair appearing as an interaction term,
/// or all pairs for a main-effects model.
pub fn effect_summary(fit: &RegressionFit, design: &FactorialDesign) -> EffectSummary {
    let mean_where = |pred: &dyn Fn(&[i8]) -> bool| {
        let (sum, n) = design
            .runs
            .iter()
            .zip(&design.responses)
            .filter(|(l, _)| pred(l))
            .flat_map(|(_, ys)| ys)
            .fold((0.0, 0usize), |(s, n), y| (s + y, n + 1));
        sum / n as f64
    };
    let main_effects = design
        .factors
        .iter()
        .enumerate()
        .map(|(j, f)| MainEffect {
            factor: f.name.clone(),
            low_mean: mean_where(&|l| l[j] < 0),
            high_mean: mean_where(&|l| l[j] > 0),
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = fit
        .terms
        .iter()
        .filter(|t| t.factors.len() == 2)
        .map(|t| (t.factors[0], t.factors[1]))
        .collect();
    if pairs.is_empty() {
        let k = design.k();
        pairs = (0..k)
            .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
            .collect();
    }
    let interactions = pairs
        .into_iter()
        .map(|(a, b)| {
            let mut cells = [[0.0; 2]; 2];
            for (i, la) in [-1i8, 1].into_iter().enumerate() {
                for (j, lb) in [-1i8, 1].into_iter().enumerate() {
                    cells[i][j] = mean_where(&|l| l[a] == la && l[b] == lb);
                }
            }
            InteractionCells {
                factor_a: design.factors[a].name.clone(),
                factor_b: design.factors[b].name.clone(),
                cells,
            }
        })
        .collect();
    EffectSummary {
        main_effects,
        interactions,
    }
}

impl EffectSummary {
    /// `factor,level,mean`
    pub fn write_main_effects_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "factor,level,mean")?;
        for m in &self.main_effects {
            writeln!(out, "{},-1,{}", m.factor, sig(m.low_mean))?;
            writeln!(out, "{},1,{}", m.factor, sig(m.high_mean))?;
        }
        Ok(())
    }

    /// `factor_a,factor_b,level_a,level_b,mean`
    pub fn write_interactions_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "factor_a,factor_b,level_a,level_b,mean")?;
        for c in &self.interactions {
            for (i, la) in [-1, 1].into_iter().enumerate() {
                for (j, lb) in [-1, 1].into_iter().enumerate() {
                    writeln!(
                        out,
                        "{},{},{la},{lb},{}",
                        c.factor_a,
                        c.factor_b,
                        sig(c.cells[i][j])
                    )?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermSignificance {
    pub term: String,
    #[serde(serialize_with = "ser_sig")]
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SignificanceReport {
    /// No residual degrees of freedom: nothing can be tested.
    Unestimable { residual_df: usize },
    Tested {
        alpha: f64,
        residual_df: usize,
        terms: Vec<TermSignificance>,
    },
}

impl SignificanceReport {
    pub fn is_significant(&self, term: &str) -> Option<bool> {
        match self {
            SignificanceReport::Unestimable { .. } => None,
            SignificanceReport::Tested { terms, .. } => {
                terms.iter().find(|t| t.term == term).map(|t| t.significant)
            }
        }
    }
}

/// Flags each term with `p < alpha`.
pub fn significance_report(fit: &RegressionFit, alpha: f64) -> Result<SignificanceReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(
            "alpha",
            format!("must be in (0, 1), got {alpha}"),
        ));
    }
    let Some(p_values) = &fit.p_values else {
        return Ok(SignificanceReport::Unestimable {
            residual_df: fit.residual_df,
        });
    };
    Ok(SignificanceReport::Tested {
        alpha: round_sig(alpha),
        residual_df: fit.residual_df,
        terms: fit
            .term_names
            .iter()
            .zip(p_values)
            .map(|(term, &p)| TermSignificance {
                term: term.clone(),
                p_value: p,
                significant: p < alpha,
            })
            .collect(),
    })
}
