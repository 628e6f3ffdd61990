//! Output-file writers.
//!
//! Every format is pinned: CSV columns are fixed and floats print in Rust's
//! shortest round-trip form, so identical runs produce byte-identical files
//! and golden-file tests stay stable.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use moneysim::engine::{BatchSummary, ReplicationManifest, RunResult, ScenarioConfig};
use moneysim::sensitivity::OfatTable;
use moneysim::stats::{self, Histogram};
use moneysim::{Money, Real};

use crate::error::{CliError, CliResult};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const HISTOGRAM_FILE: &str = "histogram.json";
pub const RESULT_FILE: &str = "result.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const BATCH_SUMMARY_FILE: &str = "batch_summary.csv";
pub const OFAT_FILE: &str = "ofat.csv";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<String> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(sha256_hex(contents.as_bytes()))
}

fn opt_u64(value: Option<u64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn timeseries_csv(result: &RunResult) -> String {
    let mut out = String::from("tick,mean,variance,top10_total,bottom50_total,gap,critical\n");
    for t in &result.series {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.tick, t.mean, t.variance, t.top10_total, t.bottom50_total, t.gap, t.critical
        )
        .unwrap();
    }
    out
}

#[derive(Serialize)]
struct HistogramJson {
    bin_width: Money,
    edges: Vec<Money>,
    counts: Vec<u64>,
    total: u64,
    tick: u64,
}

pub fn histogram_json(histogram: &Histogram, tick: u64) -> String {
    let doc = HistogramJson {
        bin_width: histogram.bin_width,
        edges: histogram.bins.iter().map(|b| b.0).collect(),
        counts: histogram.bins.iter().map(|b| b.1).collect(),
        total: histogram.total_count,
        tick,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("histogram serializes");
    text.push('\n');
    text
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

/// Write the full per-run file set (time series, terminal histogram, result
/// record, replication manifest) into `dir`.
pub fn write_run_outputs(
    dir: &Path,
    config: &ScenarioConfig,
    result: &RunResult,
    histogram_bin_width: Money,
) -> CliResult<ReplicationManifest> {
    let histogram = stats::histogram(&result.final_balances, histogram_bin_width)?;

    let mut digests = std::collections::BTreeMap::new();
    digests.insert(
        TIMESERIES_FILE.to_string(),
        write_file(dir, TIMESERIES_FILE, &timeseries_csv(result))?,
    );
    digests.insert(
        HISTOGRAM_FILE.to_string(),
        write_file(
            dir,
            HISTOGRAM_FILE,
            &histogram_json(&histogram, config.max_ticks),
        )?,
    );
    digests.insert(
        RESULT_FILE.to_string(),
        write_file(dir, RESULT_FILE, &pretty_json(result))?,
    );

    let manifest = ReplicationManifest {
        engine_version: result.engine_version.clone(),
        config: config.clone(),
        seed: result.seed,
        histogram_bin_width,
        digests,
    };
    write_file(dir, MANIFEST_FILE, &pretty_json(&manifest))?;
    Ok(manifest)
}

/// One row per run in seed order: run index, terminal mean/variance, decile
/// totals, gap and first critical tick.
pub fn batch_summary_csv(batch: &BatchSummary) -> String {
    let mut out =
        String::from("run,mean,variance,top10_total,bottom50_total,diff,first_critical_tick\n");
    for (index, row) in batch.rows.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            index + 1,
            row.mean,
            row.variance,
            row.top10_total,
            row.bottom50_total,
            row.gap,
            opt_u64(row.first_critical_tick)
        )
        .unwrap();
    }
    out
}

pub fn write_batch_summary(dir: &Path, batch: &BatchSummary) -> CliResult<()> {
    write_file(dir, BATCH_SUMMARY_FILE, &batch_summary_csv(batch))?;
    Ok(())
}

pub fn ofat_csv(table: &OfatTable) -> String {
    let mut out = String::from(
        "parameter,value,replicates,variance_mean,variance_min,variance_max,\
         fit_temperature_mean,fit_temperature_min,fit_temperature_max,\
         first_critical_tick_mean,first_critical_tick_min,first_critical_tick_max,\
         replicates_with_critical_stage,return_periods_mean,return_periods_min,return_periods_max\n",
    );
    for row in &table.rows {
        let critical = match &row.first_critical_tick {
            Some(a) => format!("{},{},{}", a.mean, a.min, a.max),
            None => ",,".to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            table.parameter,
            row.value,
            row.replicates,
            row.variance.mean,
            row.variance.min,
            row.variance.max,
            row.fit_temperature.mean,
            row.fit_temperature.min,
            row.fit_temperature.max,
            critical,
            row.replicates_with_critical_stage,
            row.return_period_count.mean,
            row.return_period_count.min,
            row.return_period_count.max
        )
        .unwrap();
    }
    out
}

pub fn write_ofat(dir: &Path, table: &OfatTable) -> CliResult<PathBuf> {
    write_file(dir, OFAT_FILE, &ofat_csv(table))?;
    Ok(dir.join(OFAT_FILE))
}

/// Per-strategy comparison rows for the report command.
pub struct ReportGroup {
    pub label: String,
    /// (seed, return periods, terminal variance) per run, sorted by seed.
    pub runs: Vec<(u64, u64, Real)>,
}

impl ReportGroup {
    pub fn mean_return_periods(&self) -> Real {
        self.runs.iter().map(|r| r.1 as Real).sum::<Real>() / self.runs.len() as Real
    }

    pub fn mean_variance(&self) -> Real {
        self.runs.iter().map(|r| r.2).sum::<Real>() / self.runs.len() as Real
    }
}

pub fn report_summary_csv(groups: &[ReportGroup]) -> String {
    let mut out = String::from(
        "label,runs,return_periods_mean,return_periods_min,return_periods_max,\
         variance_mean,variance_min,variance_max\n",
    );
    for g in groups {
        let returns: Vec<u64> = g.runs.iter().map(|r| r.1).collect();
        let variances: Vec<Real> = g.runs.iter().map(|r| r.2).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            g.label,
            g.runs.len(),
            g.mean_return_periods(),
            returns.iter().min().unwrap(),
            returns.iter().max().unwrap(),
            g.mean_variance(),
            variances.iter().copied().fold(Real::INFINITY, Real::min),
            variances.iter().copied().fold(Real::NEG_INFINITY, Real::max)
        )
        .unwrap();
    }
    out
}

pub fn report_runs_csv(groups: &[ReportGroup]) -> String {
    let mut out = String::from("label,run,seed,return_periods,terminal_variance\n");
    for g in groups {
        for (index, (seed, returns, variance)) in g.runs.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                g.label,
                index + 1,
                seed,
                returns,
                variance
            )
            .unwrap();
        }
    }
    out
}

pub fn write_report(dir: &Path, groups: &[ReportGroup]) -> CliResult<()> {
    write_file(dir, "report_summary.csv", &report_summary_csv(groups))?;
    write_file(dir, "report_runs.csv", &report_runs_csv(groups))?;
    Ok(())
}
