//! Report files: a long-form delimited table and a JSON document.
//!
//! The table has the fixed header `section,key,vessel,target,field,value`.
//! Each `(section, key)` pair identifies one item (a record check, a vessel
//! response, a sweep cell ...) and each of its scalar fields is one row. List
//! items carry their position in `key`; nested lists join positions with `.`.
//! Missing optional values are written as an empty `value`. A report equal to
//! its default writes the header only.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::calibrate::{CalibrationReport, RecordCheck, TargetCheck};
use crate::equilibrium::{Allocation, EquilibriumSolution, TargetOutcome};
use crate::error::{PmpError, Result};
use crate::fleet::{FleetModel, TargetId};
use crate::scenarios::evaluation::{InputComparison, PredictionRow, TargetEvaluation};
use crate::scenarios::policy::{DistributionSummary, TargetResponse, VesselResponse};
use crate::scenarios::sensitivity::{CellCalibration, CellOutcome, SweepCell};
use crate::scenarios::stats::YearFit;
use crate::scenarios::{EvaluationReport, ScenarioReport, SweepTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = PmpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" | "table" | "delimited-table" => Ok(Self::Csv),
            "json" | "document" | "structured-document" => Ok(Self::Json),
            _ => Err(PmpError::UnknownFormat(s.to_string())),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TidyRow {
    pub section: String,
    pub key: String,
    pub vessel: String,
    pub target: String,
    pub field: String,
    pub value: String,
}

/// Conversion to and from long-form rows.
pub trait Tabular: Sized {
    fn to_rows(&self) -> Vec<TidyRow>;
    fn from_rows(rows: &[TidyRow]) -> Result<Self>;
}

struct Rows {
    out: Vec<TidyRow>,
    section: String,
    key: String,
    vessel: String,
    target: String,
}

impl Rows {
    fn new() -> Self {
        Self {
            out: Vec::new(),
            section: String::new(),
            key: String::new(),
            vessel: String::new(),
            target: String::new(),
        }
    }

    fn item(&mut self, section: &str, key: impl Display, vessel: &str, target: Option<&TargetId>) {
        self.section = section.to_string();
        self.key = key.to_string();
        self.vessel = vessel.to_string();
        self.target = target.map(|t| t.to_string()).unwrap_or_default();
    }

    fn put(&mut self, field: &str, value: impl Display) {
        self.out.push(TidyRow {
            section: self.section.clone(),
            key: self.key.clone(),
            vessel: self.vessel.clone(),
            target: self.target.clone(),
            field: field.to_string(),
            value: value.to_string(),
        });
    }

    fn opt(&mut self, field: &str, value: Option<impl Display>) {
        match value {
            Some(v) => self.put(field, v),
            None => self.put(field, ""),
        }
    }

    fn list(&mut self, field: &str, values: &[f64]) {
        self.put(&format!("{field}.len"), values.len());
        for (j, v) in values.iter().enumerate() {
            self.put(&format!("{field}.{j}"), v);
        }
    }

    fn distribution(&mut self, prefix: &str, d: &DistributionSummary) {
        self.put(&format!("{prefix}.n"), d.n);
        for (name, v) in [
            ("mean", d.mean),
            ("sd", d.sd),
            ("min", d.min),
            ("q05", d.q05),
            ("q25", d.q25),
            ("median", d.median),
            ("q75", d.q75),
            ("q95", d.q95),
            ("max", d.max),
        ] {
            self.put(&format!("{prefix}.{name}"), v);
        }
        self.opt(&format!("{prefix}.cv"), d.cv);
    }
}

/// Rows of one item, in file order.
struct Item<'a> {
    section: &'a str,
    key: &'a str,
    vessel: &'a str,
    target: &'a str,
    fields: BTreeMap<&'a str, &'a str>,
}

fn bad(message: impl Into<String>) -> PmpError {
    PmpError::Domain(message.into())
}

impl<'a> Item<'a> {
    fn raw(&self, field: &str) -> Result<&'a str> {
        self.fields.get(field).copied().ok_or_else(|| {
            bad(format!(
                "{} {}: missing field {field}",
                self.section, self.key
            ))
        })
    }

    fn parse<T: FromStr>(&self, field: &str) -> Result<T> {
        let raw = self.raw(field)?;
        raw.parse().map_err(|_| {
            bad(format!(
                "{} {}: cannot parse {field} = {raw:?}",
                self.section, self.key
            ))
        })
    }

    fn opt<T: FromStr>(&self, field: &str) -> Result<Option<T>> {
        if self.raw(field)?.is_empty() {
            Ok(None)
        } else {
            self.parse(field).map(Some)
        }
    }

    fn target(&self) -> Result<TargetId> {
        self.target.parse()
    }

    fn list(&self, field: &str) -> Result<Vec<f64>> {
        let n: usize = self.parse(&format!("{field}.len"))?;
        (0..n)
            .map(|j| self.parse(&format!("{field}.{j}")))
            .collect()
    }

    fn opt_list(&self, field: &str) -> Result<Option<Vec<f64>>> {
        if self.raw(&format!("{field}.len"))?.is_empty() {
            Ok(None)
        } else {
            self.list(field).map(Some)
        }
    }

    fn distribution(&self, prefix: &str) -> Result<DistributionSummary> {
        let f = |name: &str| self.parse::<f64>(&format!("{prefix}.{name}"));
        Ok(DistributionSummary {
            n: self.parse(&format!("{prefix}.n"))?,
            mean: f("mean")?,
            sd: f("sd")?,
            min: f("min")?,
            q05: f("q05")?,
            q25: f("q25")?,
            median: f("median")?,
            q75: f("q75")?,
            q95: f("q95")?,
            max: f("max")?,
            cv: self.opt(&format!("{prefix}.cv"))?,
        })
    }
}

/// Groups rows by `(section, key)` in order of first appearance.
fn items(rows: &[TidyRow]) -> Result<Vec<Item<'_>>> {
    let mut out: Vec<Item> = Vec::new();
    let mut index: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for row in rows {
        let at = *index.entry((&row.section, &row.key)).or_insert_with(|| {
            out.push(Item {
                section: &row.section,
                key: &row.key,
                vessel: &row.vessel,
                target: &row.target,
                fields: BTreeMap::new(),
            });
            out.len() - 1
        });
        if out[at].fields.insert(&row.field, &row.value).is_some() {
            return Err(bad(format!(
                "{} {}: field {} appears twice",
                row.section, row.key, row.field
            )));
        }
    }
    Ok(out)
}

fn section<'a, 'b>(
    items: &'b [Item<'a>],
    name: &'b str,
) -> impl Iterator<Item = &'b Item<'a>> + 'b {
    items.iter().filter(move |i| i.section == name)
}

fn single<'a, 'b>(items: &'b [Item<'a>], name: &str) -> Option<&'b Item<'a>> {
    items.iter().find(|i| i.section == name)
}

impl Tabular for CalibrationReport {
    fn to_rows(&self) -> Vec<TidyRow> {
        let mut w = Rows::new();
        if *self == Self::default() {
            return w.out;
        }
        w.item("summary", "", "", None);
        w.put("max_input_error_pct", self.max_input_error_pct);
        w.put("max_output_error_pct", self.max_output_error_pct);
        w.put("max_foc_residual", self.max_foc_residual);
        for (i, t) in self.targets.iter().enumerate() {
            w.item("target", i, "", Some(&t.target));
            w.put("lambda", t.lambda);
            w.put("multiplier", t.multiplier);
            w.put("mean_price", t.mean_price);
            w.put("base_acl", t.base_acl);
        }
        for (i, r) in self.records.iter().enumerate() {
            w.item("record", i, &r.vessel, Some(&r.target));
            w.put("input_error_pct", r.input_error_pct);
            w.put("output_error_pct", r.output_error_pct);
            w.put("mu", r.mu);
            w.put("foc_residual", r.foc_residual);
        }
        w.out
    }

    fn from_rows(rows: &[TidyRow]) -> Result<Self> {
        let items = items(rows)?;
        let mut report = Self::default();
        if let Some(s) = single(&items, "summary") {
            report.max_input_error_pct = s.parse("max_input_error_pct")?;
            report.max_output_error_pct = s.parse("max_output_error_pct")?;
            report.max_foc_residual = s.parse("max_foc_residual")?;
        }
        for t in section(&items, "target") {
            report.targets.push(TargetCheck {
                target: t.target()?,
                lambda: t.parse("lambda")?,
                multiplier: t.parse("multiplier")?,
                mean_price: t.parse("mean_price")?,
                base_acl: t.parse("base_acl")?,
            });
        }
        for r in section(&items, "record") {
            report.records.push(RecordCheck {
                vessel: r.vessel.to_string(),
                target: r.target()?,
                input_error_pct: r.parse("input_error_pct")?,
                output_error_pct: r.parse("output_error_pct")?,
                mu: r.parse("mu")?,
                foc_residual: r.parse("foc_residual")?,
            });
        }
        Ok(report)
    }
}

fn scenario_rows(w: &mut Rows, report: &ScenarioReport, prefix: &str, key: &str) {
    let join = |i: usize| {
        if key.is_empty() {
            i.to_string()
        } else {
            format!("{key}.{i}")
        }
    };
    w.item(&format!("{prefix}scenario"), key, "", None);
    w.put("name", &report.scenario);
    for (i, t) in report.targets.iter().enumerate() {
        w.item(&format!("{prefix}target"), join(i), "", Some(&t.target));
        w.put("base_acl", t.base_acl);
        w.put("acl", t.acl);
        w.put("aggregate_catch", t.aggregate_catch);
        w.put("aggregate_percent_change", t.aggregate_percent_change);
        w.put("multiplier", t.multiplier);
        w.put("binding", t.binding);
        w.distribution("distribution", &t.distribution);
    }
    for (i, r) in report.responses.iter().enumerate() {
        w.item(
            &format!("{prefix}response"),
            join(i),
            &r.vessel,
            Some(&r.target),
        );
        w.put("base_catch", r.base_catch);
        w.put("catch", r.catch);
        w.put("percent_change", r.percent_change);
    }
}

fn scenario_from_items(items: &[Item], prefix: &str, key: &str) -> Result<ScenarioReport> {
    let belongs = |i: &Item| {
        key.is_empty()
            || i.key
                .strip_prefix(key)
                .is_some_and(|rest| rest.starts_with('.'))
    };
    let mut report = ScenarioReport::default();
    let head = format!("{prefix}scenario");
    if let Some(s) = items.iter().find(|i| i.section == head && i.key == key) {
        report.scenario = s.raw("name")?.to_string();
    }
    for t in section(items, &format!("{prefix}target")).filter(|i| belongs(i)) {
        report.targets.push(TargetResponse {
            target: t.target()?,
            base_acl: t.parse("base_acl")?,
            acl: t.parse("acl")?,
            aggregate_catch: t.parse("aggregate_catch")?,
            aggregate_percent_change: t.parse("aggregate_percent_change")?,
            multiplier: t.parse("multiplier")?,
            binding: t.parse("binding")?,
            distribution: t.distribution("distribution")?,
        });
    }
    for r in section(items, &format!("{prefix}response")).filter(|i| belongs(i)) {
        report.responses.push(VesselResponse {
            vessel: r.vessel.to_string(),
            target: r.target()?,
            base_catch: r.parse("base_catch")?,
            catch: r.parse("catch")?,
            percent_change: r.parse("percent_change")?,
        });
    }
    Ok(report)
}

impl Tabular for ScenarioReport {
    fn to_rows(&self) -> Vec<TidyRow> {
        let mut w = Rows::new();
        if *self != Self::default() {
            scenario_rows(&mut w, self, "", "");
        }
        w.out
    }

    fn from_rows(rows: &[TidyRow]) -> Result<Self> {
        scenario_from_items(&items(rows)?, "", "")
    }
}

impl Tabular for SweepTable {
    fn to_rows(&self) -> Vec<TidyRow> {
        let mut w = Rows::new();
        if *self == Self::default() {
            return w.out;
        }
        w.item("sweep", "", "", None);
        w.put("scenario", &self.scenario);
        for (i, cell) in self.cells.iter().enumerate() {
            let key = i.to_string();
            w.item("cell", &key, "", None);
            w.put("eta", cell.eta);
            w.put("sigma", cell.sigma);
            match &cell.outcome {
                CellOutcome::Failed { message } => {
                    w.put("status", "failed");
                    w.put("message", message);
                }
                CellOutcome::Completed {
                    calibration,
                    report,
                } => {
                    w.put("status", "completed");
                    w.put("max_input_error_pct", calibration.max_input_error_pct);
                    w.put("max_output_error_pct", calibration.max_output_error_pct);
                    w.put("max_foc_residual", calibration.max_foc_residual);
                    for (target, lambda) in &calibration.lambda {
                        w.item("cell.lambda", format!("{i}.{target}"), "", Some(target));
                        w.put("lambda", lambda);
                    }
                    scenario_rows(&mut w, report, "cell.", &key);
                }
            }
        }
        w.out
    }

    fn from_rows(rows: &[TidyRow]) -> Result<Self> {
        let items = items(rows)?;
        let mut table = Self::default();
        if let Some(s) = single(&items, "sweep") {
            table.scenario = s.raw("scenario")?.to_string();
        }
        for c in section(&items, "cell") {
            let outcome = match c.raw("status")? {
                "failed" => CellOutcome::Failed {
                    message: c.raw("message")?.to_string(),
                },
                "completed" => {
                    let prefix = format!("{}.", c.key);
                    let mut lambda = BTreeMap::new();
                    for l in section(&items, "cell.lambda").filter(|l| l.key.starts_with(&prefix)) {
                        lambda.insert(l.target()?, l.parse("lambda")?);
                    }
                    CellOutcome::Completed {
                        calibration: CellCalibration {
                            max_input_error_pct: c.parse("max_input_error_pct")?,
                            max_output_error_pct: c.parse("max_output_error_pct")?,
                            max_foc_residual: c.parse("max_foc_residual")?,
                            lambda,
                        },
                        report: scenario_from_items(&items, "cell.", c.key)?,
                    }
                }
                other => return Err(bad(format!("cell {}: unknown status {other:?}", c.key))),
            };
            table.cells.push(SweepCell {
                eta: c.parse("eta")?,
                sigma: c.parse("sigma")?,
                outcome,
            });
        }
        Ok(table)
    }
}

impl Tabular for EvaluationReport {
    fn to_rows(&self) -> Vec<TidyRow> {
        let mut w = Rows::new();
        for (i, p) in self.predictions.iter().enumerate() {
            w.item("prediction", i, &p.vessel, Some(&p.target));
            w.put("year", p.year);
            w.put("observed_catch", p.observed_catch);
            w.put("predicted_catch", p.predicted_catch);
            match &p.observed_expenditure {
                Some(v) => w.list("observed_expenditure", v),
                None => w.put("observed_expenditure.len", ""),
            }
            w.list("predicted_expenditure", &p.predicted_expenditure);
        }
        for (i, f) in self.catch_fit.iter().enumerate() {
            w.item("catch_fit", i, "", Some(&f.target));
            w.put("n", f.n);
            w.opt("r_squared", f.r_squared);
            w.opt("pearson_r", f.pearson_r);
            for (k, y) in f.per_year.iter().enumerate() {
                w.item("catch_fit.year", format!("{i}.{k}"), "", Some(&f.target));
                w.put("year", y.year);
                w.put("n", y.n);
                w.opt("r_squared", y.r_squared);
                w.opt("pearson_r", y.pearson_r);
            }
        }
        for (i, t) in self.input_tests.iter().enumerate() {
            w.item("input_test", i, "", Some(&t.target));
            w.put("year", t.year);
            w.put("input", &t.input);
            w.put("n", t.n);
            w.put("mean_observed", t.mean_observed);
            w.put("median_difference", t.median_difference);
            w.opt("statistic", t.statistic);
            w.opt("p_value", t.p_value);
        }
        w.out
    }

    fn from_rows(rows: &[TidyRow]) -> Result<Self> {
        let items = items(rows)?;
        let mut report = Self::default();
        for p in section(&items, "prediction") {
            report.predictions.push(PredictionRow {
                year: p.parse("year")?,
                vessel: p.vessel.to_string(),
                target: p.target()?,
                observed_catch: p.parse("observed_catch")?,
                predicted_catch: p.parse("predicted_catch")?,
                observed_expenditure: p.opt_list("observed_expenditure")?,
                predicted_expenditure: p.list("predicted_expenditure")?,
            });
        }
        for f in section(&items, "catch_fit") {
            let prefix = format!("{}.", f.key);
            let per_year = section(&items, "catch_fit.year")
                .filter(|y| y.key.starts_with(&prefix))
                .map(|y| {
                    Ok(YearFit {
                        year: y.parse("year")?,
                        n: y.parse("n")?,
                        r_squared: y.opt("r_squared")?,
                        pearson_r: y.opt("pearson_r")?,
                    })
                })
                .collect::<Result<_>>()?;
            report.catch_fit.push(TargetEvaluation {
                target: f.target()?,
                n: f.parse("n")?,
                r_squared: f.opt("r_squared")?,
                pearson_r: f.opt("pearson_r")?,
                per_year,
            });
        }
        for t in section(&items, "input_test") {
            report.input_tests.push(InputComparison {
                year: t.parse("year")?,
                target: t.target()?,
                input: t.parse("input")?,
                n: t.parse("n")?,
                mean_observed: t.parse("mean_observed")?,
                median_difference: t.parse("median_difference")?,
                statistic: t.opt("statistic")?,
                p_value: t.opt("p_value")?,
            });
        }
        Ok(report)
    }
}

impl Tabular for EquilibriumSolution {
    fn to_rows(&self) -> Vec<TidyRow> {
        let mut w = Rows::new();
        for (target, t) in &self.targets {
            w.item("target", target, "", Some(target));
            w.put("acl", t.acl);
            w.put("multiplier", t.multiplier);
            w.put("aggregate", t.aggregate);
            w.put("binding", t.binding);
        }
        for (i, a) in self.allocations.iter().enumerate() {
            w.item("allocation", i, &a.vessel, Some(&a.target));
            w.put("catch", a.catch);
            w.list("input", &a.inputs);
        }
        w.out
    }

    fn from_rows(rows: &[TidyRow]) -> Result<Self> {
        let items = items(rows)?;
        let mut solution = Self::default();
        for t in section(&items, "target") {
            solution.targets.insert(
                t.target()?,
                TargetOutcome {
                    acl: t.parse("acl")?,
                    multiplier: t.parse("multiplier")?,
                    aggregate: t.parse("aggregate")?,
                    binding: t.parse("binding")?,
                },
            );
        }
        for a in section(&items, "allocation") {
            solution.allocations.push(Allocation {
                vessel: a.vessel.to_string(),
                target: a.target()?,
                inputs: a.list("input")?,
                catch: a.parse("catch")?,
            });
        }
        Ok(solution)
    }
}

const HEADER: [&str; 6] = ["section", "key", "vessel", "target", "field", "value"];

fn csv_error(path: &Path, e: impl Display) -> PmpError {
    PmpError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Writes `report` in the requested format, replacing `path` atomically.
pub fn save_results<T: Tabular + Serialize>(
    report: &T,
    path: &Path,
    format: OutputFormat,
) -> Result<()> {
    let bytes = match format {
        OutputFormat::Json => {
            let mut v = serde_json::to_vec_pretty(report).map_err(|e| csv_error(path, e))?;
            v.push(b'\n');
            v
        }
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(Vec::new());
            w.write_record(HEADER).map_err(|e| csv_error(path, e))?;
            for row in report.to_rows() {
                w.serialize(row).map_err(|e| csv_error(path, e))?;
            }
            w.into_inner().map_err(|e| csv_error(path, e))?
        }
    };
    write_atomic(path, &bytes)
}

pub fn load_results<T: Tabular + DeserializeOwned>(path: &Path, format: OutputFormat) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| PmpError::io(path, e))?;
    match format {
        OutputFormat::Json => serde_json::from_slice(&bytes).map_err(|e| csv_error(path, e)),
        OutputFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(bytes.as_slice());
            let header = rdr.headers().map_err(|e| csv_error(path, e))?;
            if header.iter().ne(HEADER) {
                return Err(PmpError::Schema {
                    path: path.to_path_buf(),
                    line: 1,
                    column: None,
                    message: format!("expected header {}", HEADER.join(",")),
                });
            }
            let rows: Vec<TidyRow> = rdr
                .deserialize()
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| csv_error(path, e))?;
            T::from_rows(&rows).map_err(|e| csv_error(path, e))
        }
    }
}

/// Writes a plain table with the given header, for plotting tools.
pub fn save_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| csv_error(path, e))?;
    write_atomic(path, &bytes)
}

pub fn save_model(model: &FleetModel, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(model).map_err(|e| csv_error(path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn load_model(path: &Path) -> Result<FleetModel> {
    let bytes = std::fs::read(path).map_err(|e| PmpError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| csv_error(path, e))
}
