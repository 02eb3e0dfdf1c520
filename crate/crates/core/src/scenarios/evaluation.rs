//! Out-of-sample prediction of later (or earlier) years.
//!
//! For each evaluated year the base-year fleet is shrunk to the vessels seen
//! that year, each target's limit is set to those vessels' observed total
//! catch, input prices are moved by the year's cost index, and the fleet is
//! re-solved. Predicted catch and input expenditures are then compared with
//! the year's observations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::data::{CostIndexTable, FleetDataset};
use crate::equilibrium::solve_equilibrium;
use crate::error::{PmpError, Result};
use crate::fleet::{FleetModel, InputId, TargetId};
use crate::scenarios::stats::{evaluate_predictions, wilcoxon_signed_rank, YearFit};

const SAME_VALUE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub year: i32,
    pub vessel: String,
    pub target: TargetId,
    /// Zero when the vessel was present that year but did not land this target.
    pub observed_catch: f64,
    pub predicted_catch: f64,
    /// Observed expenditure per input, when the year's data has this record.
    pub observed_expenditure: Option<Vec<f64>>,
    pub predicted_expenditure: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEvaluation {
    pub target: TargetId,
    pub n: usize,
    /// Pooled over all evaluated years; absent when undefined.
    pub r_squared: Option<f64>,
    pub pearson_r: Option<f64>,
    pub per_year: Vec<YearFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputComparison {
    pub year: i32,
    pub target: TargetId,
    pub input: InputId,
    pub n: usize,
    pub mean_observed: f64,
    /// Median of observed minus predicted expenditure.
    pub median_difference: f64,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub predictions: Vec<PredictionRow>,
    pub catch_fit: Vec<TargetEvaluation>,
    pub input_tests: Vec<InputComparison>,
}

/// Predicts one year from the calibrated model.
pub fn predict_year(
    model: &FleetModel,
    observed: &FleetDataset,
    cost_factors: &BTreeMap<InputId, f64>,
    year: i32,
) -> Result<Vec<PredictionRow>> {
    let column: Vec<Option<usize>> = model
        .input_ids
        .iter()
        .map(|id| observed.input_ids.iter().position(|o| o == id))
        .collect();

    let present: BTreeSet<String> = observed
        .records
        .iter()
        .map(|r| r.vessel_id.clone())
        .collect();
    let fleet = model
        .restrict_to_vessels(&present)
        .with_input_cost_factors(cost_factors)?;
    if fleet.records.is_empty() {
        return Err(PmpError::Domain(format!(
            "no base-year vessel is present in the {year} data"
        )));
    }

    let lookup: HashMap<(String, TargetId), usize> = observed
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.key(), i))
        .collect();

    let mut acls: BTreeMap<TargetId, f64> = fleet.targets().map(|t| (t.clone(), 0.0)).collect();
    for record in &fleet.records {
        if let Some(i) = lookup.get(&record.key()) {
            *acls.get_mut(&record.target).unwrap() += observed.records[*i].catch;
        }
    }
    // A zero limit is outside the solver's domain; targets nobody landed are dropped.
    acls.retain(|_, v| *v > 0.0);
    let fleet = fleet.retain_targets(&acls.keys().cloned().collect());

    let solution = solve_equilibrium(&fleet, &acls)?;
    let rows = fleet
        .records
        .iter()
        .zip(&solution.allocations)
        .map(|(record, alloc)| {
            let obs = lookup.get(&record.key()).map(|i| &observed.records[*i]);
            PredictionRow {
                year,
                vessel: record.vessel_id.clone(),
                target: record.target.clone(),
                observed_catch: obs.map_or(0.0, |o| o.catch),
                predicted_catch: alloc.catch,
                observed_expenditure: obs.map(|o| {
                    let spent = o.expenditures();
                    column.iter().map(|c| c.map_or(0.0, |j| spent[j])).collect()
                }),
                predicted_expenditure: alloc
                    .inputs
                    .iter()
                    .zip(&record.input_prices)
                    .map(|(x, c)| x * c)
                    .collect(),
            }
        })
        .collect();
    Ok(rows)
}

/// Treats a prediction within solver precision of the observation as exact,
/// so rounding noise is not ranked as a difference.
fn snap(observed: f64, predicted: f64) -> f64 {
    if (observed - predicted).abs() <= SAME_VALUE_TOLERANCE * observed.abs().max(predicted.abs()) {
        observed
    } else {
        predicted
    }
}

fn fit(rows: &[&PredictionRow]) -> (Option<f64>, Option<f64>) {
    let predicted: Vec<f64> = rows.iter().map(|r| r.predicted_catch).collect();
    let observed: Vec<f64> = rows.iter().map(|r| r.observed_catch).collect();
    match evaluate_predictions(&predicted, &observed) {
        Ok(e) => (Some(e.r_squared), Some(e.pearson_r)),
        Err(_) => (None, None),
    }
}

/// Runs the prediction protocol for each `(year, observed data)` pair.
///
/// Cost factors come from `cost_index` when given; a year missing from the
/// table is an error.
pub fn evaluate_years(
    model: &FleetModel,
    years: &[(i32, FleetDataset)],
    cost_index: Option<&CostIndexTable>,
) -> Result<EvaluationReport> {
    let mut predictions = Vec::new();
    for (year, observed) in years {
        let factors = match cost_index {
            Some(table) => table.factors_for(*year)?,
            None => BTreeMap::new(),
        };
        predictions.extend(predict_year(model, observed, &factors, *year)?);
    }

    let targets: BTreeSet<TargetId> = predictions.iter().map(|r| r.target.clone()).collect();
    let year_list: BTreeSet<i32> = predictions.iter().map(|r| r.year).collect();

    let mut catch_fit = Vec::new();
    let mut input_tests = Vec::new();
    for target in &targets {
        let rows: Vec<&PredictionRow> =
            predictions.iter().filter(|r| &r.target == target).collect();
        let (r_squared, pearson_r) = fit(&rows);
        let per_year = year_list
            .iter()
            .map(|year| {
                let subset: Vec<&PredictionRow> =
                    rows.iter().filter(|r| r.year == *year).cloned().collect();
                let (r_squared, pearson_r) = fit(&subset);
                YearFit {
                    year: *year,
                    n: subset.len(),
                    r_squared,
                    pearson_r,
                }
            })
            .filter(|y| y.n > 0)
            .collect();
        catch_fit.push(TargetEvaluation {
            target: target.clone(),
            n: rows.len(),
            r_squared,
            pearson_r,
            per_year,
        });

        for year in &year_list {
            let matched: Vec<&PredictionRow> = rows
                .iter()
                .filter(|r| r.year == *year && r.observed_expenditure.is_some())
                .cloned()
                .collect();
            if matched.is_empty() {
                continue;
            }
            for (j, input) in model.input_ids.iter().enumerate() {
                let pairs: Vec<(f64, f64)> = matched
                    .iter()
                    .map(|r| {
                        let obs = r.observed_expenditure.as_ref().unwrap()[j];
                        (obs, snap(obs, r.predicted_expenditure[j]))
                    })
                    .collect();
                let mean_observed = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
                let diffs: Vec<f64> = pairs.iter().map(|(o, p)| o - p).collect();
                let test = wilcoxon_signed_rank(&pairs).ok();
                input_tests.push(InputComparison {
                    year: *year,
                    target: target.clone(),
                    input: input.clone(),
                    n: pairs.len(),
                    mean_observed,
                    median_difference: crate::scenarios::stats::median(&diffs),
                    statistic: test.as_ref().map(|t| t.statistic),
                    p_value: test.map(|t| t.p_value),
                });
            }
        }
    }

    Ok(EvaluationReport {
        predictions,
        catch_fit,
        input_tests,
    })
}
