use std::path::{Path, PathBuf};

use pmp_core::data::{
    apply_hook_scaling, generate_synthetic_fleet, load_cost_index, load_fleet, load_metadata,
    load_model, metadata_path, save_fleet, save_metadata, save_model, save_results, save_table,
    zero_profit_rescale, FleetDataset, OutputFormat, SyntheticConfig,
};
use pmp_core::scenarios::policy::DistributionSummary;
use pmp_core::scenarios::{
    evaluate_years, run_policy, sensitivity_sweep, PolicyScenario, ScenarioReport,
};
use pmp_core::{calibrate_fleet, verify_calibration, GlobalAssumptions, PmpError, TargetId};

use crate::CliError;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| PmpError::io(dir, e).into())
}

pub fn gen_data(seed: u64, vessels: usize, out: &Path) -> Result<(), CliError> {
    let (data, meta) = generate_synthetic_fleet(&SyntheticConfig::new(seed, vessels))?;
    save_fleet(&data, out)?;
    let meta_out = metadata_path(out);
    save_metadata(&meta, &meta_out)?;
    println!(
        "wrote {} records for {vessels} vessels to {} (metadata {})",
        data.records.len(),
        out.display(),
        meta_out.display()
    );
    Ok(())
}

/// Loads a dataset, rescales loss-making records to zero profit and
/// optionally applies hook scaling.
fn prepare(path: &Path, hook_scaling: bool) -> Result<FleetDataset, CliError> {
    let loaded = load_fleet(path)?;
    for w in &loaded.warnings {
        log::warn!("{}:{}: {}", path.display(), w.line, w.message);
    }
    let mut data = loaded.dataset;
    let mut rescaled = 0;
    let mut unscaled = 0;
    for r in data.records.iter_mut() {
        let adjusted = zero_profit_rescale(r).map_err(|e| e.for_record(&r.vessel_id, &r.target))?;
        if adjusted != *r {
            rescaled += 1;
        }
        *r = adjusted;
        if hook_scaling {
            let (scaled, ok) = apply_hook_scaling(r);
            if !ok {
                log::warn!(
                    "{} {}: no hook count, inputs left unscaled",
                    r.vessel_id,
                    r.target
                );
                unscaled += 1;
            }
            *r = scaled;
        }
    }
    println!(
        "{} records loaded, {rescaled} rescaled to zero profit{}",
        data.records.len(),
        if hook_scaling {
            format!(", {unscaled} without hook scaling")
        } else {
            String::new()
        }
    );
    Ok(data)
}

fn assumptions(
    data: &Path,
    eta: Option<f64>,
    sigma: Option<f64>,
) -> Result<GlobalAssumptions, CliError> {
    let sidecar = metadata_path(data);
    let base = if sidecar.exists() {
        load_metadata(&sidecar)?.assumptions
    } else {
        GlobalAssumptions::default()
    };
    Ok(GlobalAssumptions::new(
        eta.unwrap_or(base.eta),
        sigma.unwrap_or(base.sigma),
    )?)
}

pub fn calibrate(
    data_path: &Path,
    out: &Path,
    eta: Option<f64>,
    sigma: Option<f64>,
    hook_scaling: bool,
    report_path: Option<&Path>,
    format: OutputFormat,
) -> Result<(), CliError> {
    let assumptions = assumptions(data_path, eta, sigma)?;
    println!(
        "eta = {}, sigma = {}  =>  delta = {}, rho = {}",
        assumptions.eta,
        assumptions.sigma,
        assumptions.delta(),
        assumptions.rho()
    );
    let data = prepare(data_path, hook_scaling)?;
    let model = calibrate_fleet(&data.input_ids, &data.records, assumptions)?;
    let report = verify_calibration(&model)?;
    println!(
        "{:<8} {:>14} {:>14} {:>12} {:>16}",
        "target", "lambda", "multiplier", "mean price", "base limit"
    );
    for t in &report.targets {
        println!(
            "{:<8} {:>14.6} {:>14.6} {:>12.4} {:>16.1}",
            t.target.to_string(),
            t.lambda,
            t.multiplier,
            t.mean_price,
            t.base_acl
        );
    }
    println!(
        "max input error {:.3e}%, max output error {:.3e}%, max first-order residual {:.3e}",
        report.max_input_error_pct, report.max_output_error_pct, report.max_foc_residual
    );
    save_model(&model, out)?;
    println!("model written to {}", out.display());
    if let Some(path) = report_path {
        save_results(&report, path, format)?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn summary_header() -> Vec<String> {
    [
        "n", "mean", "sd", "min", "q05", "q25", "median", "q75", "q95", "max", "cv",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn summary_cells(d: &DistributionSummary) -> Vec<String> {
    let mut row = vec![d.n.to_string()];
    row.extend(
        [
            d.mean, d.sd, d.min, d.q05, d.q25, d.median, d.q75, d.q95, d.max,
        ]
        .iter()
        .map(f64::to_string),
    );
    row.push(d.cv.map(|v| v.to_string()).unwrap_or_default());
    row
}

fn print_scenario(report: &ScenarioReport, target: &TargetId) {
    if let Some(t) = report.target(target) {
        let d = &t.distribution;
        println!(
            "{}: aggregate {:+.6}% ({}), vessel responses mean {:+.3}% sd {:.3} min {:+.3}% max {:+.3}%",
            report.scenario,
            t.aggregate_percent_change,
            if t.binding { "binding" } else { "slack" },
            d.mean,
            d.sd,
            d.min,
            d.max
        );
    }
}

pub fn policy(
    model_path: &Path,
    target: TargetId,
    delta: f64,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<(), CliError> {
    if !(delta.is_finite() && delta != 0.0) {
        return Err(CliError::Usage(format!(
            "--delta must be a nonzero percentage, got {delta}"
        )));
    }
    if delta.abs() >= 100.0 {
        return Err(CliError::Usage(format!(
            "--delta {delta} would cut the {target} limit to zero or below in the mirrored run"
        )));
    }
    let model = load_model(model_path)?;
    if !model.base_acl.contains_key(&target) {
        return Err(CliError::Usage(format!("the model has no target {target}")));
    }
    let up = PolicyScenario::acl_change(target.clone(), delta.abs());
    let down = up.mirrored();
    let up_report = run_policy(&model, &up)?;
    let down_report = run_policy(&model, &down)?;

    create_dir(out_dir)?;
    let ext = format.extension();
    save_results(
        &up_report,
        &out_dir.join(format!("scenario-up.{ext}")),
        format,
    )?;
    save_results(
        &down_report,
        &out_dir.join(format!("scenario-down.{ext}")),
        format,
    )?;

    let header: Vec<String> = [
        "vessel",
        "target",
        "base_catch",
        "catch_up",
        "percent_change_up",
        "catch_down",
        "percent_change_down",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = up_report
        .responses
        .iter()
        .zip(&down_report.responses)
        .map(|(u, d)| {
            vec![
                u.vessel.clone(),
                u.target.to_string(),
                u.base_catch.to_string(),
                u.catch.to_string(),
                u.percent_change.to_string(),
                d.catch.to_string(),
                d.percent_change.to_string(),
            ]
        })
        .collect();
    save_table(&out_dir.join("responses.csv"), &header, &rows)?;

    let mut header = vec![
        "scenario".to_string(),
        "target".to_string(),
        "aggregate_percent_change".to_string(),
    ];
    header.extend(summary_header());
    let mut rows = Vec::new();
    for report in [&up_report, &down_report] {
        for t in &report.targets {
            let mut row = vec![
                report.scenario.clone(),
                t.target.to_string(),
                t.aggregate_percent_change.to_string(),
            ];
            row.extend(summary_cells(&t.distribution));
            rows.push(row);
        }
    }
    save_table(&out_dir.join("distribution.csv"), &header, &rows)?;

    print_scenario(&up_report, &target);
    print_scenario(&down_report, &target);
    let same = up_report.rank_order(&target) == down_report.rank_order(&target);
    println!(
        "vessel rank order by response size is {} between the two runs",
        if same { "identical" } else { "different" }
    );
    println!("results written to {}", out_dir.display());
    Ok(())
}

pub fn evaluate(
    model_path: &Path,
    observed: &[(i32, PathBuf)],
    cost_index: Option<&Path>,
    out: &Path,
    format: OutputFormat,
) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let table = cost_index.map(load_cost_index).transpose()?;
    let mut years = Vec::with_capacity(observed.len());
    for (year, path) in observed {
        let loaded = load_fleet(path)?;
        for w in &loaded.warnings {
            log::warn!("{}:{}: {}", path.display(), w.line, w.message);
        }
        years.push((*year, loaded.dataset));
    }
    let report = evaluate_years(&model, &years, table.as_ref())?;
    println!("{:<8} {:>6} {:>10} {:>10}", "target", "n", "r", "R^2");
    let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    for fit in &report.catch_fit {
        println!(
            "{:<8} {:>6} {:>10} {:>10}",
            fit.target.to_string(),
            fit.n,
            show(fit.pearson_r),
            show(fit.r_squared)
        );
    }
    println!(
        "{:<6} {:<8} {:<12} {:>5} {:>16} {:>10}",
        "year", "target", "input", "n", "median obs-pred", "p"
    );
    for t in &report.input_tests {
        println!(
            "{:<6} {:<8} {:<12} {:>5} {:>16.2} {:>10}",
            t.year,
            t.target.to_string(),
            t.input.to_string(),
            t.n,
            t.median_difference,
            show(t.p_value)
        );
    }
    save_results(&report, out, format)?;
    println!("evaluation written to {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn sensitivity(
    data_path: &Path,
    etas: &[f64],
    sigmas: &[f64],
    target: TargetId,
    delta: f64,
    hook_scaling: bool,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<(), CliError> {
    if etas.is_empty() || sigmas.is_empty() {
        return Err(CliError::Usage(
            "--etas and --sigmas need at least one value each".into(),
        ));
    }
    let data = prepare(data_path, hook_scaling)?;
    let scenario = PolicyScenario::acl_change(target.clone(), delta);
    let table = sensitivity_sweep(&data, etas, sigmas, &scenario)?;

    create_dir(out_dir)?;
    save_results(
        &table,
        &out_dir.join(format!("sweep.{}", format.extension())),
        format,
    )?;

    let mut header: Vec<String> = [
        "eta",
        "sigma",
        "status",
        "max_input_error_pct",
        "max_output_error_pct",
        "max_foc_residual",
        "aggregate_percent_change",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(summary_header());
    header.push("message".into());

    println!(
        "{:>6} {:>6} {:>10} {:>12} {:>10} {:>10} {:>8}",
        "eta", "sigma", "status", "output err%", "aggregate", "mean", "cv"
    );
    let mut rows = Vec::new();
    for cell in &table.cells {
        let mut row = vec![cell.eta.to_string(), cell.sigma.to_string()];
        match (
            cell.calibration(),
            cell.report().and_then(|r| r.target(&target)),
        ) {
            (Some(cal), Some(t)) => {
                row.push("completed".into());
                row.extend(
                    [
                        cal.max_input_error_pct,
                        cal.max_output_error_pct,
                        cal.max_foc_residual,
                        t.aggregate_percent_change,
                    ]
                    .iter()
                    .map(f64::to_string),
                );
                row.extend(summary_cells(&t.distribution));
                row.push(String::new());
                println!(
                    "{:>6} {:>6} {:>10} {:>12.3e} {:>+9.4}% {:>+9.3}% {:>8}",
                    cell.eta,
                    cell.sigma,
                    "completed",
                    cal.max_output_error_pct,
                    t.aggregate_percent_change,
                    t.distribution.mean,
                    t.distribution.cv.map_or("-".into(), |v| format!("{v:.3}"))
                );
            }
            _ => {
                let message = match &cell.outcome {
                    pmp_core::scenarios::sensitivity::CellOutcome::Failed { message } => {
                        message.clone()
                    }
                    _ => format!("no result for target {target}"),
                };
                row.push("failed".into());
                row.extend(std::iter::repeat_n(String::new(), header.len() - 4));
                row.push(message.clone());
                println!(
                    "{:>6} {:>6} {:>10} {message}",
                    cell.eta, cell.sigma, "failed"
                );
            }
        }
        rows.push(row);
    }
    save_table(&out_dir.join("sweep-summary.csv"), &header, &rows)?;
    println!("sweep written to {}", out_dir.display());
    Ok(())
}
