//! CSV emission. Floats are written with the shortest round-trip `Display`
//! form, so identical runs produce byte-identical files and every value
//! re-parses exactly.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, ExperimentKind};
use super::run::{bounds_table, run_experiment, BoundsRow, CheckpointRow, SummaryRow, Trace};
use super::HarnessResult;

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// `None` becomes an empty cell, distinguishing "not applicable" from `0`.
fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Per-step rows of every replicate:
/// `kind,algo,lambda,gamma,replicate,t,instant_regret,cum_regret,first_term,second_term,pseudo_regret,bound_overlay`.
pub fn write_trace_csv(path: &Path, kind: ExperimentKind, traces: &[Trace]) -> HarnessResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "kind",
        "algo",
        "lambda",
        "gamma",
        "replicate",
        "t",
        "instant_regret",
        "cum_regret",
        "first_term",
        "second_term",
        "pseudo_regret",
        "bound_overlay",
    ])?;
    for trace in traces {
        for row in &trace.rows {
            w.write_record([
                kind.label().to_string(),
                trace.algo.algo.label().to_string(),
                fmt_f64(trace.algo.lambda),
                trace.algo.gamma_label(),
                trace.replicate.to_string(),
                row.t.to_string(),
                fmt_f64(row.instant_regret),
                fmt_f64(row.cum_regret),
                fmt_opt(row.first_term),
                fmt_opt(row.second_term),
                fmt_opt(row.pseudo_regret),
                fmt_opt(row.bound_overlay),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Cross-replicate aggregates:
/// `kind,algo,lambda,gamma,t,mean_instant_regret,mean_first_term,mean_second_term,mean_cum_regret,std_cum_regret,q1_cum_regret,median_cum_regret,q3_cum_regret,bound_overlay`.
pub fn write_summary_csv(
    path: &Path,
    kind: ExperimentKind,
    rows: &[SummaryRow],
) -> HarnessResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "kind",
        "algo",
        "lambda",
        "gamma",
        "t",
        "mean_instant_regret",
        "mean_first_term",
        "mean_second_term",
        "mean_cum_regret",
        "std_cum_regret",
        "q1_cum_regret",
        "median_cum_regret",
        "q3_cum_regret",
        "bound_overlay",
    ])?;
    for row in rows {
        w.write_record([
            kind.label().to_string(),
            row.algo.algo.label().to_string(),
            fmt_f64(row.algo.lambda),
            row.algo.gamma_label(),
            row.t.to_string(),
            fmt_f64(row.mean_instant_regret),
            fmt_opt(row.mean_first_term),
            fmt_opt(row.mean_second_term),
            fmt_f64(row.mean_cum_regret),
            fmt_f64(row.std_cum_regret),
            fmt_f64(row.q1_cum_regret),
            fmt_f64(row.median_cum_regret),
            fmt_f64(row.q3_cum_regret),
            fmt_opt(row.bound_overlay),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Batch-regret checkpoints:
/// `kind,algo,lambda,gamma,replicate,t,batch_regret,oracle_regret`.
pub fn write_checkpoints_csv(
    path: &Path,
    kind: ExperimentKind,
    rows: &[CheckpointRow],
) -> HarnessResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "kind",
        "algo",
        "lambda",
        "gamma",
        "replicate",
        "t",
        "batch_regret",
        "oracle_regret",
    ])?;
    for row in rows {
        w.write_record([
            kind.label().to_string(),
            row.algo.algo.label().to_string(),
            fmt_f64(row.algo.lambda),
            row.algo.gamma_label(),
            row.replicate.to_string(),
            row.t.to_string(),
            fmt_f64(row.batch_regret),
            fmt_f64(row.oracle_regret),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Closed-form bound tables: `kind,algo,lambda,gamma,t,bound,value`.
pub fn write_bounds_csv(
    path: &Path,
    kind: ExperimentKind,
    rows: &[BoundsRow],
) -> HarnessResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["kind", "algo", "lambda", "gamma", "t", "bound", "value"])?;
    for row in rows {
        w.write_record([
            kind.label().to_string(),
            row.algo.algo.label().to_string(),
            fmt_f64(row.algo.lambda),
            row.algo.gamma_label(),
            row.t.to_string(),
            row.bound.to_string(),
            fmt_f64(row.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Run the configured experiment and write its artifacts into `out_dir`,
/// returning the paths written (in write order).
///
/// * Simulation kinds always emit `summary.csv` and `bounds.csv`; regression
///   runs add `checkpoints.csv`; `record_diagnostics` adds `trace.csv`.
/// * `bounds_table` configs emit `bounds.csv` alone — nothing is simulated.
pub fn execute(config: &ExperimentConfig, out_dir: &Path) -> HarnessResult<Vec<PathBuf>> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    if config.kind == ExperimentKind::BoundsTable {
        let rows = bounds_table(config)?;
        let path = out_dir.join("bounds.csv");
        write_bounds_csv(&path, config.kind, &rows)?;
        written.push(path);
        return Ok(written);
    }

    let result = run_experiment(config)?;
    let summary_path = out_dir.join("summary.csv");
    write_summary_csv(&summary_path, result.kind, &result.summary)?;
    written.push(summary_path);

    if config.record_diagnostics {
        let trace_path = out_dir.join("trace.csv");
        write_trace_csv(&trace_path, result.kind, &result.traces)?;
        written.push(trace_path);
    }
    if result.kind == ExperimentKind::Regression {
        let cp_path = out_dir.join("checkpoints.csv");
        write_checkpoints_csv(&cp_path, result.kind, &result.checkpoints)?;
        written.push(cp_path);
    }
    let bounds_path = out_dir.join("bounds.csv");
    write_bounds_csv(&bounds_path, config.kind, &bounds_table(config)?)?;
    written.push(bounds_path);
    Ok(written)
}
