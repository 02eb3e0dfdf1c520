use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use pmp_core::data::{
    apply_hook_scaling, generate_synthetic_fleet, load_cost_index, load_fleet, metadata_path,
    save_fleet, save_results, write_fleet, zero_profit_rescale, FleetDataset, OutputFormat,
    SyntheticConfig, INPUT_MOMENTS,
};
use pmp_core::{
    calibrate_fleet, verify_calibration, GlobalAssumptions, PmpError, TargetId, VesselTargetRecord,
};

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt(),
    )
}

#[test]
fn synthetic_moments_match_survey_table() {
    let (data, _) = generate_synthetic_fleet(&SyntheticConfig::new(42, 128)).unwrap();
    for (target, moments) in INPUT_MOMENTS.iter() {
        let records: Vec<&VesselTargetRecord> = data
            .records
            .iter()
            .filter(|r| &r.target == target)
            .collect();
        for (j, (mean, sd)) in moments.iter().enumerate() {
            let column: Vec<f64> = records.iter().map(|r| r.expenditures()[j]).collect();
            let (m, s) = mean_sd(&column);
            assert!(
                (m / mean - 1.0).abs() < 0.15,
                "{target} input {j}: mean {m} vs {mean}"
            );
            assert!(
                (s / sd - 1.0).abs() < 0.15,
                "{target} input {j}: sd {s} vs {sd}"
            );
        }
    }
    let wcpo_fuel: Vec<f64> = data
        .records
        .iter()
        .filter(|r| r.target == TargetId::Wcpo)
        .map(|r| r.inputs[0])
        .collect();
    assert!((mean_sd(&wcpo_fuel).0 / 154_045.0 - 1.0).abs() < 0.15);
}

#[test]
fn synthetic_fleet_is_mostly_profitable() {
    let (data, _) = generate_synthetic_fleet(&SyntheticConfig::new(42, 128)).unwrap();
    let mut revenue: BTreeMap<&str, f64> = BTreeMap::new();
    let mut spent: BTreeMap<&str, f64> = BTreeMap::new();
    for r in &data.records {
        *revenue.entry(&r.vessel_id).or_default() += r.price().unwrap() * r.catch;
        *spent.entry(&r.vessel_id).or_default() += r.expenditure();
    }
    let losing = revenue.iter().filter(|(v, rev)| **rev < spent[*v]).count();
    assert!((1..=15).contains(&losing), "{losing} vessels lose money");
}

#[test]
fn synthetic_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, seed| {
        let (data, _) = generate_synthetic_fleet(&SyntheticConfig::new(seed, 50)).unwrap();
        let path = dir.path().join(name);
        save_fleet(&data, &path).unwrap();
        std::fs::read(path).unwrap()
    };
    assert_eq!(write("a.csv", 9), write("b.csv", 9));
    assert_ne!(write("a.csv", 9), write("c.csv", 10));
}

#[test]
fn hook_scaled_fleet_calibrates() {
    let (data, _) = generate_synthetic_fleet(&SyntheticConfig::new(42, 128)).unwrap();
    let records: Vec<VesselTargetRecord> = data
        .records
        .iter()
        .map(|r| {
            let (scaled, ok) = apply_hook_scaling(&zero_profit_rescale(r).unwrap());
            assert!(ok);
            scaled
        })
        .collect();
    for (a, b) in records.iter().zip(&data.records) {
        let rescaled = zero_profit_rescale(b).unwrap();
        for (x, y) in a.expenditures().iter().zip(rescaled.expenditures()) {
            assert!((x / y - 1.0).abs() < 1e-14);
        }
    }
    let model = calibrate_fleet(&data.input_ids, &records, GlobalAssumptions::default()).unwrap();
    let report = verify_calibration(&model).unwrap();
    assert!(report.max_output_error_pct < 1e-6);
    assert!(report.max_input_error_pct < 1e-8);
}

#[test]
fn loader_reports_locations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fleet.csv");
    let header =
        "vessel_id,target,fuel,bait,catch_lb,price_base,price_premium,price_bycatch,hooks\n";
    std::fs::write(
        &path,
        format!("{header}A,WCPO,10,5,100,8,0,0.5,\nA,WCPO,11,5,100,8,0,0.5,\n"),
    )
    .unwrap();
    match load_fleet(&path) {
        Err(PmpError::Schema { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("duplicate"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }

    std::fs::write(&path, format!("{header}A,WCPO,10,5,-100,8,0,0.5,\n")).unwrap();
    match load_fleet(&path) {
        Err(PmpError::Schema { line, column, .. }) => {
            assert_eq!(line, 2);
            assert_eq!(column.as_deref(), Some("catch_lb"));
        }
        other => panic!("unexpected {other:?}"),
    }

    std::fs::write(
        &path,
        format!("{header}A,WCPO,10,5,100,8,-1.5,0.5,\nB,EPO,1,1,0,8,0,0,\n"),
    )
    .unwrap();
    let loaded = load_fleet(&path).unwrap();
    assert_eq!(loaded.dataset.records.len(), 1);
    assert_eq!(loaded.warnings.len(), 1);
    assert_eq!(loaded.warnings[0].line, 3);
}

#[test]
fn cost_index_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.csv");
    std::fs::write(&path, "year,base,fuel\n2012,1,1\n2013,0,1.25\n").unwrap();
    let table = load_cost_index(&path).unwrap();
    assert_eq!(table.base_year, 2012);
    assert_eq!(
        table.factors_for(2013).unwrap()[&pmp_core::InputId::Fuel],
        1.25
    );

    for bad in [
        "year,base,fuel\n2012,0,1\n",
        "year,base,fuel\n2012,1,1\n2013,1,1\n",
        "year,base,fuel\n2012,1,1.1\n",
        "year,base,fuel\n2012,1,1\n2013,0,-1\n",
        "year,fuel\n2012,1\n",
    ] {
        std::fs::write(&path, bad).unwrap();
        assert!(load_cost_index(&path).is_err(), "{bad:?}");
    }
}

#[test]
fn unknown_format_and_unwritable_path() {
    assert!("parquet".parse::<OutputFormat>().is_err());
    let report = pmp_core::CalibrationReport::default();
    let err = save_results(
        &report,
        std::path::Path::new("/nonexistent/dir/r.csv"),
        OutputFormat::Csv,
    )
    .unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir"), "{err}");
}

#[test]
fn metadata_sits_beside_dataset() {
    let p = metadata_path(std::path::Path::new("out/fleet.csv"));
    assert_eq!(p, std::path::Path::new("out/fleet.meta.json"));
}

fn record_strategy() -> impl Strategy<Value = VesselTargetRecord> {
    (
        0usize..40,
        prop::sample::select(vec![TargetId::Wcpo, TargetId::Epo, TargetId::Swordfish]),
        prop::collection::vec(0.0f64..1e6, 3),
        0.1f64..1e6,
        2.5f64..20.0,
        -2.0f64..2.0,
        0.0f64..2.0,
        prop::option::of(1.0f64..1e7),
    )
        .prop_map(
            |(v, target, inputs, catch, base, premium, bycatch, hooks)| {
                let mut r = VesselTargetRecord::new(
                    format!("V{v}"),
                    target,
                    inputs,
                    catch,
                    base,
                    premium,
                    bycatch,
                );
                r.hooks = hooks;
                r
            },
        )
}

proptest! {
    #[test]
    fn dataset_round_trip(records in prop::collection::vec(record_strategy(), 1..30)) {
        let mut seen = BTreeSet::new();
        let records: Vec<VesselTargetRecord> = records.into_iter().filter(|r| seen.insert(r.key())).collect();
        let data = FleetDataset { input_ids: pmp_core::InputId::defaults()[..3].to_vec(), records };
        let mut buf = Vec::new();
        write_fleet(&data, &mut buf).unwrap();
        let back = pmp_core::data::read_fleet(buf.as_slice(), std::path::Path::new("mem.csv")).unwrap();
        prop_assert_eq!(back.dataset, data);
        prop_assert!(back.warnings.is_empty());
    }
}
