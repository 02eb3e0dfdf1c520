//! Fleet profit maximization under per-target catch limits.
//!
//! Targets share no constraint or input stock, so the fleet problem splits into
//! one problem per target. For a given multiplier `theta` on the catch limit
//! each vessel supplies in closed form, and fleet supply is continuous and
//! strictly decreasing in `theta` while positive. The multiplier is therefore a
//! one-dimensional root found by bisection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{PmpError, Result};
use crate::fleet::{
    optimal_output, supply_from_unit_cost, unit_cost, CesParams, FleetModel, TargetId,
    VesselTargetRecord,
};

/// Relative constraint gap accepted as converged.
pub const GAP_TOLERANCE: f64 = 1e-9;
/// Gap at which bisection stops early; below this only rounding remains.
const REFINE_TOLERANCE: f64 = 1e-15;
pub const MAX_ITERATIONS: usize = 200;

/// Output price faced by the vessel: `p + mu - theta`.
pub fn effective_price(record: &VesselTargetRecord, params: &CesParams, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(PmpError::Domain(format!(
            "multiplier must be nonnegative, got {theta}"
        )));
    }
    Ok(record.price()? + params.mu - theta)
}

/// Closed-form supply curve of one target's fleet.
struct TargetSupply {
    /// `(p + mu, unit cost)` per vessel.
    vessels: Vec<(f64, f64)>,
    delta: f64,
}

impl TargetSupply {
    fn new(model: &FleetModel, target: &TargetId) -> Result<Self> {
        let mut vessels = Vec::new();
        for (record, params) in model.entries_for(target) {
            let value = effective_price(record, params, 0.0)
                .map_err(|e| e.for_record(&record.vessel_id, target))?;
            let k = unit_cost(params, &record.input_prices)
                .map_err(|e| e.for_record(&record.vessel_id, target))?;
            vessels.push((value, k));
        }
        Ok(Self {
            vessels,
            delta: model.assumptions.delta(),
        })
    }

    fn at(&self, theta: f64) -> f64 {
        self.vessels
            .iter()
            .map(|(value, k)| supply_from_unit_cost(value - theta, *k, self.delta))
            .sum()
    }

    fn shutdown_multiplier(&self) -> f64 {
        self.vessels.iter().map(|(v, _)| *v).fold(0.0, f64::max)
    }
}

/// Fleet catch of `target` when its limit carries multiplier `theta`.
pub fn aggregate_supply(model: &FleetModel, target: &TargetId, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(PmpError::Domain(format!(
            "multiplier must be nonnegative, got {theta}"
        )));
    }
    Ok(TargetSupply::new(model, target)?.at(theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSolution {
    pub multiplier: f64,
    pub aggregate: f64,
    pub iterations: usize,
    pub binding: bool,
}

/// Multiplier on the catch limit of `target`, zero when the limit is slack.
pub fn solve_target_multiplier(
    model: &FleetModel,
    target: &TargetId,
    acl: f64,
) -> Result<MultiplierSolution> {
    if !(acl > 0.0) {
        return Err(PmpError::Domain(format!(
            "catch limit for {target} must be positive, got {acl}"
        )));
    }
    let supply = TargetSupply::new(model, target)?;
    let unconstrained = supply.at(0.0);
    if unconstrained <= acl {
        return Ok(MultiplierSolution {
            multiplier: 0.0,
            aggregate: unconstrained,
            iterations: 0,
            binding: false,
        });
    }

    let (mut lo, mut hi) = (0.0_f64, supply.shutdown_multiplier());
    let (mut s_lo, mut s_hi) = (unconstrained, supply.at(hi));
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let s = supply.at(mid);
        if s > acl {
            lo = mid;
            s_lo = s;
        } else {
            hi = mid;
            s_hi = s;
        }
        if ((s - acl) / acl).abs() <= REFINE_TOLERANCE {
            break;
        }
    }

    let (multiplier, aggregate) = if (s_lo - acl).abs() <= (s_hi - acl).abs() {
        (lo, s_lo)
    } else {
        (hi, s_hi)
    };
    let gap = ((aggregate - acl) / acl).abs();
    if gap >= GAP_TOLERANCE {
        return Err(PmpError::NonConvergence {
            target: target.clone(),
            lo,
            hi,
            gap,
            iterations,
        });
    }
    log::debug!("{target}: multiplier {multiplier} after {iterations} iterations");
    Ok(MultiplierSolution {
        multiplier,
        aggregate,
        iterations,
        binding: multiplier > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub vessel: String,
    pub target: TargetId,
    pub inputs: Vec<f64>,
    pub catch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub acl: f64,
    pub multiplier: f64,
    pub aggregate: f64,
    pub binding: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    /// Parallel to the model's records.
    pub allocations: Vec<Allocation>,
    pub targets: BTreeMap<TargetId, TargetOutcome>,
}

impl EquilibriumSolution {
    pub fn allocation(&self, vessel: &str, target: &TargetId) -> Option<&Allocation> {
        self.allocations
            .iter()
            .find(|a| a.vessel == vessel && &a.target == target)
    }
}

/// Solves every target of the model against its catch limit.
pub fn solve_equilibrium(
    model: &FleetModel,
    acls: &BTreeMap<TargetId, f64>,
) -> Result<EquilibriumSolution> {
    let mut targets = BTreeMap::new();
    for target in model.targets() {
        let acl = *acls
            .get(target)
            .ok_or_else(|| PmpError::MissingAcl(target.clone()))?;
        let m = solve_target_multiplier(model, target, acl)?;
        targets.insert(
            target.clone(),
            TargetOutcome {
                acl,
                multiplier: m.multiplier,
                aggregate: m.aggregate,
                binding: m.binding,
            },
        );
    }

    let mut allocations = Vec::with_capacity(model.records.len());
    for (record, params) in model.entries() {
        let theta = targets
            .get(&record.target)
            .map(|t| t.multiplier)
            .ok_or_else(|| PmpError::MissingAcl(record.target.clone()))?;
        let price = effective_price(record, params, theta)?;
        let (catch, inputs) = optimal_output(params, price, &record.input_prices)
            .map_err(|e| e.for_record(&record.vessel_id, &record.target))?;
        allocations.push(Allocation {
            vessel: record.vessel_id.clone(),
            target: record.target.clone(),
            inputs,
            catch,
        });
    }

    // Report the aggregate of the allocations actually returned.
    for (target, outcome) in targets.iter_mut() {
        outcome.aggregate = allocations
            .iter()
            .filter(|a| &a.target == target)
            .map(|a| a.catch)
            .sum();
    }
    Ok(EquilibriumSolution {
        allocations,
        targets,
    })
}

/// Fleet profit `sum (p + mu) y - c.x` of a solution, excluding the constraint term.
pub fn fleet_profit(model: &FleetModel, solution: &EquilibriumSolution) -> Result<f64> {
    let mut total = 0.0;
    for ((record, params), alloc) in model.entries().zip(&solution.allocations) {
        let value = record.price()? + params.mu;
        let cost: f64 = alloc
            .inputs
            .iter()
            .zip(&record.input_prices)
            .map(|(x, c)| x * c)
            .sum();
        total += value * alloc.catch - cost;
    }
    Ok(total)
}
