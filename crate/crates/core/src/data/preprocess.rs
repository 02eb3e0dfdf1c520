//! Record transformations applied before calibration or simulation.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{PmpError, Result};
use crate::fleet::{InputId, VesselTargetRecord};

/// Scales every input down uniformly when expenditure exceeds revenue, so the
/// record earns exactly zero profit. Profitable records are returned unchanged.
pub fn zero_profit_rescale(record: &VesselTargetRecord) -> Result<VesselTargetRecord> {
    let revenue = record.price_base + record.price_premium + record.price_bycatch;
    let revenue = revenue * record.catch;
    let spent = record.expenditure();
    if spent <= revenue {
        return Ok(record.clone());
    }
    if !(revenue > 0.0) {
        return Err(PmpError::DegenerateRecord(format!(
            "revenue {revenue} cannot support expenditure {spent}"
        ))
        .for_record(&record.vessel_id, &record.target));
    }
    let factor = revenue / spent;
    let mut out = record.clone();
    for x in out.inputs.iter_mut() {
        *x *= factor;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HookScaling {
    pub levels: Vec<f64>,
    pub prices: Vec<f64>,
    /// False when the record had no usable hook count and passed through.
    pub scaled: bool,
}

/// Expresses inputs per hook deployed: `x_j = e_j / hooks` at price `c_j = hooks`,
/// so `c_j x_j` keeps the observed expenditure `e_j`.
pub fn scale_inputs_by_hooks(record: &VesselTargetRecord) -> HookScaling {
    match record.hooks {
        Some(h) if h > 0.0 && h.is_finite() => HookScaling {
            levels: record.expenditures().into_iter().map(|e| e / h).collect(),
            prices: vec![h; record.inputs.len()],
            scaled: true,
        },
        _ => HookScaling {
            levels: record.inputs.clone(),
            prices: record.input_prices.clone(),
            scaled: false,
        },
    }
}

/// Applies [`scale_inputs_by_hooks`] to a record; the flag reports whether it was scaled.
pub fn apply_hook_scaling(record: &VesselTargetRecord) -> (VesselTargetRecord, bool) {
    let scaling = scale_inputs_by_hooks(record);
    let mut out = record.clone();
    out.inputs = scaling.levels;
    out.input_prices = scaling.prices;
    (out, scaling.scaled)
}

/// Multiplicative input-cost adjustments by year. Categories without an entry
/// keep a factor of one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostIndexTable {
    pub base_year: i32,
    pub factors: BTreeMap<i32, BTreeMap<InputId, f64>>,
}

impl CostIndexTable {
    pub fn new(base_year: i32, factors: BTreeMap<i32, BTreeMap<InputId, f64>>) -> Result<Self> {
        let table = Self { base_year, factors };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        for (year, row) in &self.factors {
            for (input, f) in row {
                if !(f.is_finite() && *f > 0.0) {
                    return Err(PmpError::Domain(format!(
                        "cost factor for {input} in {year} must be positive, got {f}"
                    )));
                }
                if *year == self.base_year && *f != 1.0 {
                    return Err(PmpError::Domain(format!(
                        "base year {year} must have unit factors, {input} has {f}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Factors for `year`; the base year is always known.
    pub fn factors_for(&self, year: i32) -> Result<BTreeMap<InputId, f64>> {
        match self.factors.get(&year) {
            Some(row) => Ok(row.clone()),
            None if year == self.base_year => Ok(BTreeMap::new()),
            None => Err(PmpError::UnknownYear(year)),
        }
    }
}

/// Multiplies each input's price, and hence its expenditure, by the year's factor.
pub fn adjust_input_costs(
    records: &[VesselTargetRecord],
    input_ids: &[InputId],
    table: &CostIndexTable,
    year: i32,
) -> Result<Vec<VesselTargetRecord>> {
    let factors = table.factors_for(year)?;
    let per_input: Vec<f64> = input_ids
        .iter()
        .map(|id| factors.get(id).copied().unwrap_or(1.0))
        .collect();
    Ok(records
        .iter()
        .map(|r| {
            let mut out = r.clone();
            for (c, f) in out.input_prices.iter_mut().zip(&per_input) {
                *c *= f;
            }
            out
        })
        .collect())
}

/// Reads a cost-index table: columns `year`, `base` (1 on exactly one row)
/// and one column per input category.
pub fn load_cost_index(path: &Path) -> Result<CostIndexTable> {
    let schema = |line: u64, column: Option<&str>, message: String| PmpError::Schema {
        path: path.to_path_buf(),
        line,
        column: column.map(str::to_string),
        message,
    };
    let file = File::open(path).map_err(|e| PmpError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| schema(1, None, e.to_string()))?
        .clone();
    let year_col = headers
        .iter()
        .position(|h| h == "year")
        .ok_or_else(|| schema(1, Some("year"), "missing column".into()))?;
    let base_col = headers
        .iter()
        .position(|h| h == "base")
        .ok_or_else(|| schema(1, Some("base"), "missing column".into()))?;
    let inputs: Vec<(usize, InputId)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != year_col && *i != base_col)
        .map(|(i, h)| h.parse().map(|id| (i, id)))
        .collect::<Result<_>>()
        .map_err(|e| schema(1, None, e.to_string()))?;

    let mut base_year = None;
    let mut factors = BTreeMap::new();
    for row in rdr.records() {
        let row =
            row.map_err(|e| schema(e.position().map_or(0, |p| p.line()), None, e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let year: i32 = row[year_col].parse().map_err(|_| {
            schema(
                line,
                Some("year"),
                format!("not a year: {:?}", &row[year_col]),
            )
        })?;
        match &row[base_col] {
            "1" | "true" => {
                if base_year.replace(year).is_some() {
                    return Err(schema(line, Some("base"), "more than one base year".into()));
                }
            }
            "0" | "false" | "" => {}
            other => {
                return Err(schema(
                    line,
                    Some("base"),
                    format!("expected 0 or 1, got {other:?}"),
                ))
            }
        }
        let mut entry = BTreeMap::new();
        for (i, id) in &inputs {
            let raw = &row[*i];
            if raw.is_empty() {
                continue;
            }
            let f: f64 = raw.parse().map_err(|_| {
                schema(
                    line,
                    Some(&id.to_string()),
                    format!("not a number: {raw:?}"),
                )
            })?;
            entry.insert(id.clone(), f);
        }
        if factors.insert(year, entry).is_some() {
            return Err(schema(line, Some("year"), format!("duplicate year {year}")));
        }
    }
    let base_year =
        base_year.ok_or_else(|| schema(1, Some("base"), "no base year flagged".into()))?;
    CostIndexTable::new(base_year, factors).map_err(|e| schema(0, None, e.to_string()))
}

pub fn save_cost_index(table: &CostIndexTable, path: &Path) -> Result<()> {
    let mut inputs: Vec<InputId> = table
        .factors
        .values()
        .flat_map(|r| r.keys().cloned())
        .collect();
    inputs.sort();
    inputs.dedup();
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| PmpError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut header = vec!["year".to_string(), "base".to_string()];
    header.extend(inputs.iter().map(|i| i.to_string()));
    w.write_record(&header).map_err(to_err)?;
    let mut years: Vec<i32> = table.factors.keys().copied().collect();
    if !years.contains(&table.base_year) {
        years.push(table.base_year);
        years.sort();
    }
    for year in years {
        let row = table.factors.get(&year);
        let mut out = vec![
            year.to_string(),
            u8::from(year == table.base_year).to_string(),
        ];
        out.extend(inputs.iter().map(|i| {
            row.and_then(|r| r.get(i))
                .map(|f| f.to_string())
                .unwrap_or_default()
        }));
        w.write_record(&out).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| PmpError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_atomic(path, &bytes)
}
