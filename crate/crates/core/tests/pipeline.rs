use std::collections::{BTreeMap, BTreeSet};

use pmp_core::data::{
    adjust_input_costs, generate_synthetic_fleet, zero_profit_rescale, CostIndexTable,
    FleetDataset, SyntheticConfig,
};
use pmp_core::scenarios::sensitivity::CellOutcome;
use pmp_core::scenarios::stats::wilcoxon_signed_rank;
use pmp_core::scenarios::{evaluate_years, run_policy, sensitivity_sweep, PolicyScenario};
use pmp_core::{
    calibrate_fleet, solve_equilibrium, verify_calibration, FleetModel, GlobalAssumptions, InputId,
    PmpError, TargetId,
};

fn dataset(seed: u64, n: usize) -> FleetDataset {
    let (mut data, _) = generate_synthetic_fleet(&SyntheticConfig::new(seed, n)).unwrap();
    data.records = data
        .records
        .iter()
        .map(|r| zero_profit_rescale(r).unwrap())
        .collect();
    data
}

fn model(data: &FleetDataset) -> FleetModel {
    calibrate_fleet(&data.input_ids, &data.records, GlobalAssumptions::default()).unwrap()
}

#[test]
fn shadow_values_are_negative_and_near_prices() {
    let m = model(&dataset(42, 128));
    let report = verify_calibration(&m).unwrap();
    for t in &report.targets {
        assert!(t.lambda < 0.0, "{}: {}", t.target, t.lambda);
        assert!((t.multiplier + t.lambda).abs() < 1e-6 * t.lambda.abs());
        assert!(t.mean_price > 0.0);
    }
}

#[test]
fn perturbed_scale_is_reported_on_that_record() {
    let mut m = model(&dataset(42, 128));
    let i = 17;
    m.params[i].alpha *= 1.01;
    let report = verify_calibration(&m).unwrap();
    assert!(report.max_output_error_pct > 1e-3);
    let worst = report
        .records
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.output_error_pct.total_cmp(&b.1.output_error_pct))
        .unwrap()
        .0;
    assert_eq!(worst, i);
    assert_eq!(report.records[i].vessel, m.records[i].vessel_id);
}

#[test]
fn single_vessel_fleet_is_reproduced_exactly() {
    let data = dataset(3, 1);
    let m = model(&data);
    let report = verify_calibration(&m).unwrap();
    assert!(report.max_input_error_pct < 1e-10);
    assert!(report.max_output_error_pct < 1e-10);
    assert!(report.max_foc_residual < 1e-10);
    let scenario = PolicyScenario::acl_change(data.records[0].target.clone(), -10.0);
    let out = run_policy(&m, &scenario).unwrap();
    assert!((out.responses[0].percent_change + 10.0).abs() < 1e-8);
}

#[test]
fn zero_catch_record_is_named() {
    let mut data = dataset(42, 10);
    data.records[4].catch = 0.0;
    let err =
        calibrate_fleet(&data.input_ids, &data.records, GlobalAssumptions::default()).unwrap_err();
    let text = err.to_string();
    assert!(text.contains(&data.records[4].vessel_id), "{text}");
}

#[test]
fn missing_limit_is_an_error() {
    let m = model(&dataset(42, 20));
    let mut acls = m.base_acl.clone();
    acls.remove(&TargetId::Epo);
    assert!(matches!(
        solve_equilibrium(&m, &acls),
        Err(PmpError::MissingAcl(TargetId::Epo))
    ));
}

#[test]
fn loose_limit_is_slack() {
    let m = model(&dataset(42, 40));
    let mut acls = m.base_acl.clone();
    *acls.get_mut(&TargetId::Wcpo).unwrap() *= 100.0;
    let s = solve_equilibrium(&m, &acls).unwrap();
    let w = &s.targets[&TargetId::Wcpo];
    assert!(!w.binding);
    assert_eq!(w.multiplier, 0.0);
    assert!(w.aggregate < w.acl);
}

#[test]
fn positive_shadow_value_blocks_policy_runs() {
    let mut m = model(&dataset(42, 60));
    *m.lambda.get_mut(&TargetId::Swordfish).unwrap() = 0.5;
    let err = run_policy(&m, &PolicyScenario::acl_change(TargetId::Wcpo, 10.0)).unwrap_err();
    assert!(matches!(err, PmpError::PositiveShadowValue { .. }));
    assert!(!err.is_solver_failure());
}

#[test]
fn other_targets_are_untouched_by_a_wcpo_change() {
    let m = model(&dataset(42, 128));
    let out = run_policy(&m, &PolicyScenario::acl_change(TargetId::Wcpo, -10.0)).unwrap();
    for r in out.responses.iter().filter(|r| r.target != TargetId::Wcpo) {
        assert!(
            r.percent_change.abs() < 1e-6,
            "{} {}: {}",
            r.vessel,
            r.target,
            r.percent_change
        );
    }
    assert!(out
        .responses_for(&TargetId::Wcpo)
        .all(|r| r.percent_change < 0.0));
}

#[test]
fn limit_cut_to_zero_is_rejected() {
    let m = model(&dataset(42, 20));
    assert!(run_policy(&m, &PolicyScenario::acl_change(TargetId::Wcpo, -100.0)).is_err());
    assert!(run_policy(
        &m,
        &PolicyScenario::acl_change(TargetId::Other("albacore".into()), 5.0)
    )
    .is_err());
}

#[test]
fn self_prediction_is_perfect() {
    let data = dataset(42, 128);
    let m = model(&data);
    let report = evaluate_years(&m, &[(2012, data.clone())], None).unwrap();
    for fit in &report.catch_fit {
        assert!((fit.pearson_r.unwrap() - 1.0).abs() < 1e-9);
        assert!((fit.r_squared.unwrap() - 1.0).abs() < 1e-9);
    }
    for p in &report.predictions {
        assert!((p.predicted_catch / p.observed_catch - 1.0).abs() < 1e-9);
    }
}

#[test]
fn perturbed_year_matches_statistics_module() {
    let data = dataset(42, 128);
    let m = model(&data);
    let present: BTreeSet<&str> = m.vessels().into_iter().step_by(2).collect();
    let mut observed = data.clone();
    observed
        .records
        .retain(|r| present.contains(r.vessel_id.as_str()));
    for (i, r) in observed.records.iter_mut().enumerate() {
        r.catch *= 1.0 + 0.05 * ((i % 7) as f64 - 3.0);
        r.inputs[0] *= 1.1;
    }
    let index = CostIndexTable::new(
        2012,
        BTreeMap::from([(2013, BTreeMap::from([(InputId::Fuel, 1.1)]))]),
    )
    .unwrap();
    let report = evaluate_years(&m, &[(2013, observed.clone())], Some(&index)).unwrap();

    let wcpo: Vec<_> = report
        .predictions
        .iter()
        .filter(|p| p.target == TargetId::Wcpo)
        .collect();
    let total_observed: f64 = wcpo.iter().map(|p| p.observed_catch).sum();
    let total_predicted: f64 = wcpo.iter().map(|p| p.predicted_catch).sum();
    assert!((total_predicted / total_observed - 1.0).abs() < 1e-9);

    let pairs: Vec<(f64, f64)> = wcpo
        .iter()
        .map(|p| {
            (
                p.observed_expenditure.as_ref().unwrap()[0],
                p.predicted_expenditure[0],
            )
        })
        .collect();
    let expected = wilcoxon_signed_rank(&pairs).unwrap();
    let test = report
        .input_tests
        .iter()
        .find(|t| t.target == TargetId::Wcpo && t.input == InputId::Fuel)
        .unwrap();
    assert_eq!(test.statistic, Some(expected.statistic));
    assert_eq!(test.p_value, Some(expected.p_value));
    assert_eq!(test.median_difference, expected.median_difference);

    // Fuel prices in the model rose by the index factor.
    let adjusted = adjust_input_costs(&m.records, &m.input_ids, &index, 2013).unwrap();
    assert_eq!(
        adjusted[0].input_prices[0],
        m.records[0].input_prices[0] * 1.1
    );

    assert!(matches!(
        evaluate_years(&m, &[(1999, observed)], Some(&index)),
        Err(PmpError::UnknownYear(1999))
    ));
}

#[test]
fn sweep_records_failed_cells() {
    let data = dataset(42, 30);
    let scenario = PolicyScenario::acl_change(TargetId::Wcpo, 10.0);
    // A nearly inelastic supply cannot rationalize observed spending with a
    // nonpositive shadow value.
    let table = sensitivity_sweep(&data, &[0.5, 0.02], &[0.17], &scenario).unwrap();
    assert_eq!(table.cells.len(), 2);
    assert!(table.cell(0.5, 0.17).unwrap().report().is_some());
    match &table.cell(0.02, 0.17).unwrap().outcome {
        CellOutcome::Failed { message } => assert!(!message.is_empty()),
        CellOutcome::Completed { .. } => panic!("expected a failed cell"),
    }
}

#[test]
fn identity_cell_matches_direct_run() {
    let data = dataset(42, 30);
    let scenario = PolicyScenario::acl_change(TargetId::Wcpo, 10.0);
    let table = sensitivity_sweep(&data, &[0.5], &[0.17], &scenario).unwrap();
    let direct = run_policy(&model(&data), &scenario).unwrap();
    assert_eq!(table.cells[0].report().unwrap(), &direct);
}
