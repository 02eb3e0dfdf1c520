//! Catch-limit policy simulation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::equilibrium::solve_equilibrium;
use crate::error::{PmpError, Result};
use crate::fleet::{FleetModel, InputId, TargetId};
use crate::scenarios::stats::quantile;

/// Percent changes to base-year catch limits, plus optional input cost factors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolicyScenario {
    pub name: String,
    pub acl_changes_pct: BTreeMap<TargetId, f64>,
    pub cost_factors: BTreeMap<InputId, f64>,
}

impl PolicyScenario {
    /// Changes one target's limit by `pct` percent.
    pub fn acl_change(target: TargetId, pct: f64) -> Self {
        let name = format!("{target} {pct:+}%");
        Self {
            name,
            acl_changes_pct: BTreeMap::from([(target, pct)]),
            cost_factors: BTreeMap::new(),
        }
    }

    /// Same scenario with every limit change negated.
    pub fn mirrored(&self) -> Self {
        let acl_changes_pct: BTreeMap<_, _> = self
            .acl_changes_pct
            .iter()
            .map(|(t, p)| (t.clone(), -p))
            .collect();
        let name = acl_changes_pct
            .iter()
            .map(|(t, p)| format!("{t} {p:+}%"))
            .collect::<Vec<_>>()
            .join(", ");
        Self {
            name,
            acl_changes_pct,
            cost_factors: self.cost_factors.clone(),
        }
    }

    /// Limits implied by the scenario, starting from the model's base limits.
    pub fn limits(&self, model: &FleetModel) -> Result<BTreeMap<TargetId, f64>> {
        let mut acls = model.base_acl.clone();
        for (target, pct) in &self.acl_changes_pct {
            let Some(acl) = acls.get_mut(target) else {
                return Err(PmpError::Domain(format!(
                    "scenario names unknown target {target}"
                )));
            };
            *acl *= 1.0 + pct / 100.0;
            if !(*acl > 0.0) {
                return Err(PmpError::Domain(format!(
                    "a {pct}% change leaves a non-positive catch limit for {target}"
                )));
            }
        }
        Ok(acls)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub sd: f64,
    pub min: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub max: f64,
    /// `sd / |mean|`; absent when the mean is zero and the spread is not.
    pub cv: Option<f64>,
}

impl DistributionSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // Identical values get exactly zero spread, free of rounding in the mean.
        let mean = if min == max {
            min
        } else {
            values.iter().sum::<f64>() / n as f64
        };
        let sd = if n > 1 && min != max {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let cv = if sd == 0.0 {
            Some(0.0)
        } else if mean != 0.0 {
            Some(sd / mean.abs())
        } else {
            None
        };
        Self {
            n,
            mean,
            sd,
            min,
            q05: quantile(values, 0.05),
            q25: quantile(values, 0.25),
            median: quantile(values, 0.5),
            q75: quantile(values, 0.75),
            q95: quantile(values, 0.95),
            max,
            cv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselResponse {
    pub vessel: String,
    pub target: TargetId,
    pub base_catch: f64,
    pub catch: f64,
    /// Percent change from the base-year observed catch.
    pub percent_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResponse {
    pub target: TargetId,
    pub base_acl: f64,
    pub acl: f64,
    pub aggregate_catch: f64,
    pub aggregate_percent_change: f64,
    pub multiplier: f64,
    pub binding: bool,
    /// Distribution of per-vessel percent changes.
    pub distribution: DistributionSummary,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub responses: Vec<VesselResponse>,
    pub targets: Vec<TargetResponse>,
}

impl ScenarioReport {
    pub fn target(&self, target: &TargetId) -> Option<&TargetResponse> {
        self.targets.iter().find(|t| &t.target == target)
    }

    pub fn responses_for<'a>(
        &'a self,
        target: &'a TargetId,
    ) -> impl Iterator<Item = &'a VesselResponse> + 'a {
        self.responses.iter().filter(move |r| &r.target == target)
    }

    /// Vessels of `target` ordered by response magnitude, largest first.
    pub fn rank_order(&self, target: &TargetId) -> Vec<String> {
        let mut rows: Vec<&VesselResponse> = self.responses_for(target).collect();
        rows.sort_by(|a, b| {
            b.percent_change
                .abs()
                .total_cmp(&a.percent_change.abs())
                .then_with(|| a.vessel.cmp(&b.vessel))
        });
        rows.into_iter().map(|r| r.vessel.clone()).collect()
    }
}

/// Solves the fleet under the scenario's limits and reports per-vessel responses.
///
/// Responses are measured against base-year catch, so the model must
/// reproduce the base year: every shadow value has to be nonpositive.
pub fn run_policy(model: &FleetModel, scenario: &PolicyScenario) -> Result<ScenarioReport> {
    model.check_shadow_values()?;
    let acls = scenario.limits(model)?;
    let adjusted;
    let simulated = if scenario.cost_factors.is_empty() {
        model
    } else {
        adjusted = model.with_input_cost_factors(&scenario.cost_factors)?;
        &adjusted
    };
    let solution = solve_equilibrium(simulated, &acls)?;

    let responses: Vec<VesselResponse> = model
        .records
        .iter()
        .zip(&solution.allocations)
        .map(|(record, alloc)| VesselResponse {
            vessel: record.vessel_id.clone(),
            target: record.target.clone(),
            base_catch: record.catch,
            catch: alloc.catch,
            percent_change: 100.0 * (alloc.catch - record.catch) / record.catch,
        })
        .collect();

    let targets = solution
        .targets
        .iter()
        .map(|(target, outcome)| {
            let changes: Vec<f64> = responses
                .iter()
                .filter(|r| &r.target == target)
                .map(|r| r.percent_change)
                .collect();
            let base_acl = model.base_acl[target];
            TargetResponse {
                target: target.clone(),
                base_acl,
                acl: outcome.acl,
                aggregate_catch: outcome.aggregate,
                aggregate_percent_change: 100.0 * (outcome.aggregate - base_acl) / base_acl,
                multiplier: outcome.multiplier,
                binding: outcome.binding,
                distribution: DistributionSummary::from_values(&changes),
            }
        })
        .collect();

    Ok(ScenarioReport {
        scenario: scenario.name.clone(),
        responses,
        targets,
    })
}
