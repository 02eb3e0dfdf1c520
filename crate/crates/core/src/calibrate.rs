//! Base-year calibration.
//!
//! Every unknown is recovered in closed form so the fleet problem reproduces
//! the observed year exactly:
//!
//! 1. shares from the first-order ratio conditions, `beta_j ∝ c_j x_j^(1 - rho)`;
//! 2. scale from the observed catch;
//! 3. one shadow value per target by least squares on expenditures;
//! 4. the vessel-specific unobserved value of catch from the Euler identity
//!    `(p + lambda + mu) delta q = E`.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::equilibrium::solve_equilibrium;
use crate::error::{PmpError, Result};
use crate::fleet::{
    marginal_products, production, CesParams, FleetModel, GlobalAssumptions, InputId, TargetId,
    VesselTargetRecord,
};

/// Input shares reproducing the observed input mix as cost-minimizing.
/// Inputs with zero observed level get a zero share.
pub fn calibrate_shares(x_obs: &[f64], c: &[f64], rho: f64) -> Result<Vec<f64>> {
    if x_obs.len() != c.len() {
        return Err(PmpError::Domain(format!(
            "{} inputs but {} prices",
            x_obs.len(),
            c.len()
        )));
    }
    if x_obs.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(PmpError::InvalidRecord(
            "input levels must be nonnegative".into(),
        ));
    }
    let scale = x_obs.iter().cloned().fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Err(PmpError::DegenerateRecord(
            "all input levels are zero".into(),
        ));
    }
    let raw: Vec<f64> = x_obs
        .iter()
        .zip(c)
        .map(|(x, p)| {
            if *x > 0.0 {
                p * (x / scale).powf(1.0 - rho)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(PmpError::DegenerateRecord(format!(
            "share normalization is not finite ({total})"
        )));
    }
    Ok(raw.into_iter().map(|b| b / total).collect())
}

/// Scale so that production at the observed inputs equals the observed catch.
pub fn calibrate_scale(
    catch: f64,
    x_obs: &[f64],
    beta: &[f64],
    rho: f64,
    delta: f64,
) -> Result<f64> {
    if !(catch.is_finite() && catch > 0.0) {
        return Err(PmpError::DegenerateRecord(format!(
            "catch must be positive, got {catch}"
        )));
    }
    let unit = CesParams {
        alpha: 1.0,
        beta: beta.to_vec(),
        delta,
        rho,
        mu: 0.0,
    };
    let base = production(&unit, x_obs)?;
    if base <= 0.0 {
        return Err(PmpError::DegenerateRecord(
            "observed inputs produce no output".into(),
        ));
    }
    Ok(catch / base)
}

/// One record's contribution to the shadow-value fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuationObservation {
    pub price: f64,
    pub catch: f64,
    pub expenditure: f64,
}

impl ValuationObservation {
    pub fn from_record(record: &VesselTargetRecord) -> Result<Self> {
        Ok(Self {
            price: record.price()?,
            catch: record.catch,
            expenditure: record.expenditure(),
        })
    }
}

/// Sum of squared gaps between modeled and observed expenditure at shadow value `lambda`.
pub fn lambda_objective(obs: &[ValuationObservation], lambda: f64, delta: f64) -> f64 {
    obs.iter()
        .map(|o| {
            let r = (o.price + lambda) * o.catch * delta - o.expenditure;
            r * r
        })
        .sum()
}

/// Least-squares shadow value for one target.
pub fn calibrate_lambda(obs: &[ValuationObservation], delta: f64) -> Result<f64> {
    if obs.is_empty() {
        return Err(PmpError::Domain(
            "shadow value needs at least one record".into(),
        ));
    }
    if let Some(o) = obs.iter().find(|o| !(o.catch > 0.0)) {
        return Err(PmpError::DegenerateRecord(format!(
            "catch must be positive, got {}",
            o.catch
        )));
    }
    let (num, den) = obs.iter().fold((0.0, 0.0), |(n, d), o| {
        let w = delta * o.catch;
        (n + w * (o.expenditure - o.price * w), d + w * w)
    });
    Ok(num / den)
}

/// Unobserved value of catch closing the record's first-order conditions.
pub fn calibrate_mu(record: &VesselTargetRecord, lambda: f64, delta: f64) -> Result<f64> {
    if !(record.catch > 0.0) {
        return Err(PmpError::DegenerateRecord(format!(
            "catch must be positive, got {}",
            record.catch
        )));
    }
    let price = record.price()?;
    Ok(record.expenditure() / (delta * record.catch) - price - lambda)
}

/// Relative first-order residuals `(p + lambda + mu) MP_j / c_j - 1` at the
/// observed inputs. Dropped (zero-share) inputs report zero.
pub fn foc_residuals(
    record: &VesselTargetRecord,
    params: &CesParams,
    lambda: f64,
) -> Result<Vec<f64>> {
    let value = record.price()? + lambda + params.mu;
    let mp = marginal_products(params, &record.inputs)?;
    Ok(mp
        .iter()
        .zip(&record.input_prices)
        .zip(&params.beta)
        .map(|((m, c), b)| if *b > 0.0 { value * m / c - 1.0 } else { 0.0 })
        .collect())
}

/// Calibrates every record and the per-target shadow values.
pub fn calibrate_fleet(
    input_ids: &[InputId],
    records: &[VesselTargetRecord],
    assumptions: GlobalAssumptions,
) -> Result<FleetModel> {
    let assumptions = GlobalAssumptions::new(assumptions.eta, assumptions.sigma)?;
    let delta = assumptions.delta();
    let rho = assumptions.rho();

    let mut seen = HashSet::new();
    for record in records {
        if record.inputs.len() != input_ids.len() {
            return Err(PmpError::InvalidRecord(format!(
                "{} input levels, expected {}",
                record.inputs.len(),
                input_ids.len()
            ))
            .for_record(&record.vessel_id, &record.target));
        }
        record
            .validate()
            .map_err(|e| e.for_record(&record.vessel_id, &record.target))?;
        if !seen.insert(record.key()) {
            return Err(
                PmpError::InvalidRecord("duplicate (vessel, target) record".into())
                    .for_record(&record.vessel_id, &record.target),
            );
        }
    }

    let mut params = Vec::with_capacity(records.len());
    for record in records {
        let p = (|| {
            let beta = calibrate_shares(&record.inputs, &record.input_prices, rho)?;
            let alpha = calibrate_scale(record.catch, &record.inputs, &beta, rho, delta)?;
            Ok(CesParams {
                alpha,
                beta,
                delta,
                rho,
                mu: 0.0,
            })
        })()
        .map_err(|e: PmpError| e.for_record(&record.vessel_id, &record.target))?;
        params.push(p);
    }

    let mut by_target: BTreeMap<TargetId, Vec<ValuationObservation>> = BTreeMap::new();
    let mut base_acl: BTreeMap<TargetId, f64> = BTreeMap::new();
    for record in records {
        by_target
            .entry(record.target.clone())
            .or_default()
            .push(ValuationObservation::from_record(record)?);
        *base_acl.entry(record.target.clone()).or_default() += record.catch;
    }
    let mut lambda = BTreeMap::new();
    for (target, obs) in &by_target {
        lambda.insert(target.clone(), calibrate_lambda(obs, delta)?);
    }

    for (record, p) in records.iter().zip(params.iter_mut()) {
        p.mu = calibrate_mu(record, lambda[&record.target], delta)
            .map_err(|e| e.for_record(&record.vessel_id, &record.target))?;
    }

    Ok(FleetModel {
        input_ids: input_ids.to_vec(),
        records: records.to_vec(),
        params,
        lambda,
        assumptions,
        base_acl,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordCheck {
    pub vessel: String,
    pub target: TargetId,
    /// Largest relative input gap across inputs, percent.
    pub input_error_pct: f64,
    pub output_error_pct: f64,
    pub mu: f64,
    /// Largest absolute first-order residual.
    pub foc_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCheck {
    pub target: TargetId,
    pub lambda: f64,
    /// Multiplier found by the equilibrium solve at the base limit.
    pub multiplier: f64,
    /// Catch-weighted mean composed price, for comparison with `|lambda|`.
    pub mean_price: f64,
    pub base_acl: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub records: Vec<RecordCheck>,
    pub targets: Vec<TargetCheck>,
    pub max_input_error_pct: f64,
    pub max_output_error_pct: f64,
    pub max_foc_residual: f64,
}

impl CalibrationReport {
    pub(crate) fn recompute_maxima(&mut self) {
        let max = |f: fn(&RecordCheck) -> f64| self.records.iter().map(f).fold(0.0, f64::max);
        self.max_input_error_pct = max(|r| r.input_error_pct);
        self.max_output_error_pct = max(|r| r.output_error_pct);
        self.max_foc_residual = max(|r| r.foc_residual);
    }
}

/// Re-solves the fleet at the base-year limits and measures how closely the
/// optimal allocation reproduces the observed one.
pub fn verify_calibration(model: &FleetModel) -> Result<CalibrationReport> {
    model.check_shadow_values()?;
    let solution = solve_equilibrium(model, &model.base_acl)?;

    let mut records = Vec::with_capacity(model.records.len());
    for ((record, params), alloc) in model.entries().zip(&solution.allocations) {
        let level_scale = record.inputs.iter().cloned().fold(0.0, f64::max);
        let input_error = record
            .inputs
            .iter()
            .zip(&alloc.inputs)
            .map(|(obs, sim)| {
                let denom = if *obs > 0.0 { *obs } else { level_scale };
                (sim - obs).abs() / denom
            })
            .fold(0.0, f64::max);
        let output_error = (alloc.catch - record.catch).abs() / record.catch;
        let lambda = model.lambda[&record.target];
        let foc = foc_residuals(record, params, lambda)
            .map_err(|e| e.for_record(&record.vessel_id, &record.target))?
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max);
        records.push(RecordCheck {
            vessel: record.vessel_id.clone(),
            target: record.target.clone(),
            input_error_pct: 100.0 * input_error,
            output_error_pct: 100.0 * output_error,
            mu: params.mu,
            foc_residual: foc,
        });
    }

    let mut targets = Vec::new();
    for (target, acl) in &model.base_acl {
        let (value, weight) = model
            .entries_for(target)
            .map(|(r, _)| (r.price().unwrap_or(0.0) * r.catch, r.catch))
            .fold((0.0, 0.0), |(v, w), (a, b)| (v + a, w + b));
        targets.push(TargetCheck {
            target: target.clone(),
            lambda: model.lambda[target],
            multiplier: solution.targets[target].multiplier,
            mean_price: value / weight,
            base_acl: *acl,
        });
    }

    let mut report = CalibrationReport {
        records,
        targets,
        ..Default::default()
    };
    report.recompute_maxima();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_inputs_give_equal_shares() {
        let beta = calibrate_shares(&[5.0; 6], &[1.0; 6], -4.88).unwrap();
        for b in &beta {
            assert!((b - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_input_shares() {
        let beta = calibrate_shares(&[2.0, 1.0], &[1.0, 1.0], -1.0).unwrap();
        assert!((beta[0] - 0.8).abs() < 1e-15);
        assert!((beta[1] - 0.2).abs() < 1e-15);
        // Brute-force FOC: MP ratio equals price ratio at the observed point.
        let p = CesParams {
            alpha: 1.0,
            beta: beta.clone(),
            delta: 0.5,
            rho: -1.0,
            mu: 0.0,
        };
        let f = |x0: f64, x1: f64| production(&p, &[x0, x1]).unwrap();
        let h = 1e-6;
        let d0 = (f(2.0 + h, 1.0) - f(2.0 - h, 1.0)) / (2.0 * h);
        let d1 = (f(2.0, 1.0 + h) - f(2.0, 1.0 - h)) / (2.0 * h);
        assert!((d0 / d1 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn zero_inputs_get_zero_share_and_all_zero_is_degenerate() {
        let beta = calibrate_shares(&[3.0, 0.0, 1.0], &[1.0; 3], -4.88).unwrap();
        assert_eq!(beta[1], 0.0);
        assert!((beta.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(
            calibrate_shares(&[0.0, 0.0], &[1.0; 2], -1.0),
            Err(PmpError::DegenerateRecord(_))
        ));
    }

    #[test]
    fn scale_examples() {
        let alpha = calibrate_scale(2.0, &[8.0], &[1.0], -4.88, 1.0 / 3.0).unwrap();
        assert!((alpha - 1.0).abs() < 1e-14);
        assert!(calibrate_scale(0.0, &[8.0], &[1.0], -4.88, 1.0 / 3.0).is_err());
    }

    #[test]
    fn lambda_examples() {
        let one = ValuationObservation {
            price: 8.0,
            catch: 10_000.0,
            expenditure: 60_000.0,
        };
        let lambda = calibrate_lambda(&[one], 1.0 / 3.0).unwrap();
        assert!((lambda - 10.0).abs() < 1e-12);
        assert!(lambda_objective(&[one], lambda, 1.0 / 3.0) < 1e-12);
        let twice = calibrate_lambda(&[one, one], 1.0 / 3.0).unwrap();
        assert!((twice - lambda).abs() < 1e-12);
        assert!(calibrate_lambda(&[], 1.0 / 3.0).is_err());
    }

    #[test]
    fn mu_examples() {
        let r =
            VesselTargetRecord::new("v", TargetId::Wcpo, vec![60_000.0], 10_000.0, 8.0, 0.0, 0.0);
        let mu = calibrate_mu(&r, -7.70, 1.0 / 3.0).unwrap();
        assert!((mu - 17.70).abs() < 1e-12);

        let zero = VesselTargetRecord::new(
            "v",
            TargetId::Wcpo,
            vec![8.0 * 300.0 / 3.0],
            300.0,
            8.0,
            0.0,
            0.0,
        );
        assert!(calibrate_mu(&zero, 0.0, 1.0 / 3.0).unwrap().abs() < 1e-12);

        let mut bad = r.clone();
        bad.catch = 0.0;
        assert!(calibrate_mu(&bad, 0.0, 1.0 / 3.0).is_err());
    }

    #[test]
    fn calibrated_record_closes_foc_system() {
        let r = VesselTargetRecord::new(
            "v",
            TargetId::Wcpo,
            vec![150_000.0, 75_000.0, 47_000.0, 48_000.0, 31_000.0, 19_000.0],
            120_000.0,
            7.99,
            0.3,
            0.6,
        );
        let model = calibrate_fleet(
            &InputId::defaults(),
            std::slice::from_ref(&r),
            GlobalAssumptions::default(),
        )
        .unwrap();
        let p = &model.params[0];
        assert!((production(p, &r.inputs).unwrap() / r.catch - 1.0).abs() < 1e-12);
        for res in foc_residuals(&r, p, model.lambda[&TargetId::Wcpo]).unwrap() {
            assert!(res.abs() < 1e-10, "{res}");
        }
        // Single record: the expenditure fit is exact, so mu vanishes.
        assert!(p.mu.abs() < 1e-12);
    }

    #[test]
    fn fleet_errors_name_the_record() {
        let good =
            VesselTargetRecord::new("a", TargetId::Wcpo, vec![1.0, 2.0], 10.0, 8.0, 0.0, 0.0);
        let mut bad = good.clone();
        bad.vessel_id = "b".into();
        bad.catch = 0.0;
        let ids = vec![InputId::Fuel, InputId::Bait];
        let err =
            calibrate_fleet(&ids, &[good.clone(), bad], GlobalAssumptions::default()).unwrap_err();
        match err {
            PmpError::Record { vessel, target, .. } => {
                assert_eq!(vessel, "b");
                assert_eq!(target, TargetId::Wcpo);
            }
            other => panic!("unexpected {other}"),
        }
        let dup = calibrate_fleet(&ids, &[good.clone(), good], GlobalAssumptions::default());
        assert!(dup.is_err());
    }
}
