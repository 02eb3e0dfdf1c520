//! Sweeps over the assumed supply and substitution elasticities.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{calibrate_fleet, verify_calibration};
use crate::data::FleetDataset;
use crate::error::{PmpError, Result};
use crate::fleet::{GlobalAssumptions, TargetId};
use crate::scenarios::policy::{run_policy, PolicyScenario, ScenarioReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCalibration {
    pub max_input_error_pct: f64,
    pub max_output_error_pct: f64,
    pub max_foc_residual: f64,
    pub lambda: BTreeMap<TargetId, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CellOutcome {
    Completed {
        calibration: CellCalibration,
        report: ScenarioReport,
    },
    Failed {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub eta: f64,
    pub sigma: f64,
    pub outcome: CellOutcome,
}

impl SweepCell {
    pub fn report(&self) -> Option<&ScenarioReport> {
        match &self.outcome {
            CellOutcome::Completed { report, .. } => Some(report),
            CellOutcome::Failed { .. } => None,
        }
    }

    pub fn calibration(&self) -> Option<&CellCalibration> {
        match &self.outcome {
            CellOutcome::Completed { calibration, .. } => Some(calibration),
            CellOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepTable {
    pub scenario: String,
    /// Row-major over (eta, sigma).
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn cell(&self, eta: f64, sigma: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.eta == eta && c.sigma == sigma)
    }
}

fn run_cell(
    dataset: &FleetDataset,
    assumptions: GlobalAssumptions,
    scenario: &PolicyScenario,
) -> Result<(CellCalibration, ScenarioReport)> {
    let model = calibrate_fleet(&dataset.input_ids, &dataset.records, assumptions)?;
    let check = verify_calibration(&model)?;
    let report = run_policy(&model, scenario)?;
    Ok((
        CellCalibration {
            max_input_error_pct: check.max_input_error_pct,
            max_output_error_pct: check.max_output_error_pct,
            max_foc_residual: check.max_foc_residual,
            lambda: model.lambda.clone(),
        },
        report,
    ))
}

/// Recalibrates and re-simulates `scenario` for every (eta, sigma) pair.
/// A failing cell is recorded and the sweep continues.
pub fn sensitivity_sweep(
    dataset: &FleetDataset,
    etas: &[f64],
    sigmas: &[f64],
    scenario: &PolicyScenario,
) -> Result<SweepTable> {
    if etas.is_empty() || sigmas.is_empty() {
        return Err(PmpError::Domain("sweep grids must be nonempty".into()));
    }
    let pairs: Vec<(f64, f64)> = etas
        .iter()
        .flat_map(|e| sigmas.iter().map(move |s| (*e, *s)))
        .collect();
    for (eta, sigma) in &pairs {
        GlobalAssumptions::new(*eta, *sigma)?;
    }

    let cells = pairs
        .par_iter()
        .map(|&(eta, sigma)| {
            let outcome = match run_cell(dataset, GlobalAssumptions { eta, sigma }, scenario) {
                Ok((calibration, report)) => CellOutcome::Completed {
                    calibration,
                    report,
                },
                Err(e) => {
                    log::warn!("sweep cell eta={eta} sigma={sigma} failed: {e}");
                    CellOutcome::Failed {
                        message: e.to_string(),
                    }
                }
            };
            SweepCell {
                eta,
                sigma,
                outcome,
            }
        })
        .collect();

    Ok(SweepTable {
        scenario: scenario.name.clone(),
        cells,
    })
}
