//! File schemas, preprocessing and the synthetic fleet generator.

mod dataset;
mod preprocess;
mod reports;
mod synthetic;

use std::io::Write;
use std::path::Path;

pub use dataset::{
    load_fleet, load_metadata, metadata_path, read_fleet, save_fleet, save_metadata, write_fleet,
    DatasetMetadata, FleetDataset, LoadWarning, LoadedFleet, SCHEMA_VERSION,
};
pub use preprocess::{
    adjust_input_costs, apply_hook_scaling, load_cost_index, save_cost_index,
    scale_inputs_by_hooks, zero_profit_rescale, CostIndexTable, HookScaling,
};
pub use reports::{
    load_model, load_results, save_model, save_results, save_table, OutputFormat, Tabular, TidyRow,
};
pub use synthetic::{generate_synthetic_fleet, SyntheticConfig, INPUT_MOMENTS};

use crate::error::{PmpError, Result};

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| PmpError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| PmpError::io(path, e))?;
    tmp.persist(path).map_err(|e| PmpError::io(path, e.error))?;
    Ok(())
}
