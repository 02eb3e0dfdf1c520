use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::preprocess::CostIndexTable;
use super::write_atomic;
use crate::error::{PmpError, Result};
use crate::fleet::{compose_price, GlobalAssumptions, InputId, TargetId, VesselTargetRecord};

pub const SCHEMA_VERSION: u32 = 1;

const VESSEL: &str = "vessel_id";
const TARGET: &str = "target";
const CATCH: &str = "catch_lb";
const PRICE_BASE: &str = "price_base";
const PRICE_PREMIUM: &str = "price_premium";
const PRICE_BYCATCH: &str = "price_bycatch";
const HOOKS: &str = "hooks";
const FIXED: [&str; 7] = [
    VESSEL,
    TARGET,
    CATCH,
    PRICE_BASE,
    PRICE_PREMIUM,
    PRICE_BYCATCH,
    HOOKS,
];

/// One row per (vessel, target); every record carries the same input columns.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FleetDataset {
    pub input_ids: Vec<InputId>,
    pub records: Vec<VesselTargetRecord>,
}

impl FleetDataset {
    pub fn targets(&self) -> Vec<TargetId> {
        let mut t: Vec<TargetId> = self.records.iter().map(|r| r.target.clone()).collect();
        t.sort();
        t.dedup();
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadWarning {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedFleet {
    pub dataset: FleetDataset,
    /// Rows that were accepted with a caveat or dropped.
    pub warnings: Vec<LoadWarning>,
}

/// How a synthetic dataset was drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub seed: u64,
    pub n_vessels: usize,
    pub participation: BTreeMap<TargetId, f64>,
    /// Distribution family per generated quantity.
    pub distributions: BTreeMap<String, String>,
}

/// Sidecar document stored next to a dataset as `<stem>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub schema_version: u32,
    pub base_year: i32,
    pub assumptions: GlobalAssumptions,
    #[serde(default)]
    pub cost_index: Option<CostIndexTable>,
    #[serde(default)]
    pub generator: Option<GeneratorInfo>,
}

pub fn metadata_path(dataset: &Path) -> PathBuf {
    let stem = dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "fleet".into());
    dataset.with_file_name(format!("{stem}.meta.json"))
}

pub fn save_metadata(meta: &DatasetMetadata, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(meta).map_err(|e| PmpError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_atomic(path, format!("{text}\n").as_bytes())
}

pub fn load_metadata(path: &Path) -> Result<DatasetMetadata> {
    let text = std::fs::read_to_string(path).map_err(|e| PmpError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PmpError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_fleet(path: &Path) -> Result<LoadedFleet> {
    let file = File::open(path).map_err(|e| PmpError::io(path, e))?;
    read_fleet(file, path)
}

struct Columns {
    vessel: usize,
    target: usize,
    catch: usize,
    price_base: usize,
    price_premium: usize,
    price_bycatch: usize,
    hooks: Option<usize>,
    inputs: Vec<(usize, InputId)>,
}

/// Parses a fleet table. `path` is used only to label errors.
pub fn read_fleet<R: Read>(reader: R, path: &Path) -> Result<LoadedFleet> {
    let schema = |line: u64, column: Option<&str>, message: String| PmpError::Schema {
        path: path.to_path_buf(),
        line,
        column: column.map(str::to_string),
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| schema(1, None, format!("cannot read header: {e}")))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let require =
        |name: &str| find(name).ok_or_else(|| schema(1, Some(name), "missing column".into()));

    let mut inputs = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if FIXED.contains(&h) {
            continue;
        }
        let id: InputId = h
            .parse()
            .map_err(|_| schema(1, Some(h), "empty column name".into()))?;
        if inputs.iter().any(|(_, existing)| existing == &id) {
            return Err(schema(1, Some(h), "duplicate input column".into()));
        }
        inputs.push((i, id));
    }
    if inputs.is_empty() {
        return Err(schema(1, None, "no input expenditure columns".into()));
    }
    let cols = Columns {
        vessel: require(VESSEL)?,
        target: require(TARGET)?,
        catch: require(CATCH)?,
        price_base: require(PRICE_BASE)?,
        price_premium: require(PRICE_PREMIUM)?,
        price_bycatch: require(PRICE_BYCATCH)?,
        hooks: find(HOOKS),
        inputs,
    };

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut seen: HashMap<(String, TargetId), u64> = HashMap::new();

    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            schema(line, None, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let number = |i: usize, name: &str, allow_negative: bool| -> Result<f64> {
            let raw = field(i);
            let v: f64 = raw
                .parse()
                .map_err(|_| schema(line, Some(name), format!("not a number: {raw:?}")))?;
            if !v.is_finite() {
                return Err(schema(line, Some(name), format!("not finite: {raw}")));
            }
            if !allow_negative && v < 0.0 {
                return Err(schema(line, Some(name), format!("negative value {v}")));
            }
            Ok(v)
        };

        let vessel = field(cols.vessel).to_string();
        if vessel.is_empty() {
            return Err(schema(line, Some(VESSEL), "empty vessel id".into()));
        }
        let target: TargetId = field(cols.target)
            .parse()
            .map_err(|_| schema(line, Some(TARGET), "empty target".into()))?;
        if let Some(first) = seen.insert((vessel.clone(), target.clone()), line) {
            return Err(schema(
                line,
                None,
                format!(
                    "duplicate (vessel, target) = ({vessel}, {target}); first seen on line {first}"
                ),
            ));
        }

        let levels = cols
            .inputs
            .iter()
            .map(|(i, id)| number(*i, &id.to_string(), false))
            .collect::<Result<Vec<f64>>>()?;
        let catch = number(cols.catch, CATCH, false)?;
        let hooks = match cols.hooks {
            Some(i) if !field(i).is_empty() => Some(number(i, HOOKS, false)?),
            _ => None,
        };
        let mut record = VesselTargetRecord::new(
            vessel,
            target,
            levels,
            catch,
            number(cols.price_base, PRICE_BASE, false)?,
            number(cols.price_premium, PRICE_PREMIUM, true)?,
            number(cols.price_bycatch, PRICE_BYCATCH, false)?,
        );
        record.hooks = hooks;

        if catch == 0.0 {
            warnings.push(LoadWarning {
                line,
                message: format!(
                    "dropped ({}, {}): zero catch cannot be calibrated",
                    record.vessel_id, record.target
                ),
            });
            continue;
        }
        compose_price(&record).map_err(|e| schema(line, None, e.to_string()))?;
        if !record.inputs.iter().any(|x| *x > 0.0) {
            return Err(schema(line, None, "all input expenditures are zero".into()));
        }
        records.push(record);
    }

    Ok(LoadedFleet {
        dataset: FleetDataset {
            input_ids: cols.inputs.into_iter().map(|(_, id)| id).collect(),
            records,
        },
        warnings,
    })
}

/// Writes expenditures `c_j x_j`; reloading yields unit input prices.
pub fn write_fleet<W: Write>(dataset: &FleetDataset, writer: W) -> Result<()> {
    let to_err = |e: csv::Error| PmpError::Parse {
        path: PathBuf::from("<dataset>"),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![VESSEL.to_string(), TARGET.to_string()];
    header.extend(dataset.input_ids.iter().map(|i| i.to_string()));
    header.extend([CATCH, PRICE_BASE, PRICE_PREMIUM, PRICE_BYCATCH, HOOKS].map(String::from));
    w.write_record(&header).map_err(to_err)?;
    for r in &dataset.records {
        let mut row = vec![r.vessel_id.clone(), r.target.to_string()];
        row.extend(r.expenditures().iter().map(|v| v.to_string()));
        row.push(r.catch.to_string());
        row.push(r.price_base.to_string());
        row.push(r.price_premium.to_string());
        row.push(r.price_bycatch.to_string());
        row.push(r.hooks.map(|h| h.to_string()).unwrap_or_default());
        w.write_record(&row).map_err(to_err)?;
    }
    w.flush().map_err(|e| PmpError::io("<dataset>", e))?;
    Ok(())
}

pub fn save_fleet(dataset: &FleetDataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_fleet(dataset, &mut buf).map_err(|e| match e {
        PmpError::Parse { message, .. } => PmpError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })?;
    write_atomic(path, &buf)
}
