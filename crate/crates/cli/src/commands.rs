//! Subcommand implementations.

use std::path::{Path, PathBuf};

use moneysim::engine::{run, run_batch, ReplicationManifest, RunResult};
use moneysim::rng::run_rng;
use moneysim::sensitivity::{ofat_run, OfatPlan, SweepValue};
use moneysim::stats;
use moneysim::{environment, Real};

use crate::error::{CliError, CliResult};
use crate::output::{self, ReportGroup};
use crate::scenario::{load_scenario, LoadedScenario};

pub struct RunArgs {
    pub scenario: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub stats_every: Option<u64>,
}

pub struct BatchArgs {
    pub scenario: PathBuf,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub stats_every: Option<u64>,
}

pub struct OfatArgs {
    pub scenario: PathBuf,
    pub parameter: String,
    pub values: Vec<String>,
    pub replicates: u32,
    pub seed_base: u64,
    pub out: Option<PathBuf>,
    pub stats_every: Option<u64>,
}

pub struct ReportArgs {
    pub inputs: Vec<String>,
    pub out: Option<PathBuf>,
}

pub struct ReplayArgs {
    pub manifest: PathBuf,
    pub out: PathBuf,
}

pub struct GraphArgs {
    pub kind: String,
    pub n: usize,
    pub seed: u64,
    pub p: Option<f64>,
    pub k: Option<usize>,
    pub beta: Option<f64>,
    pub m0: Option<usize>,
    pub m: Option<usize>,
    pub out: Option<PathBuf>,
}

fn resolve<T>(flag: Option<T>, file: Option<T>, what: &str) -> CliResult<T> {
    flag.or(file)
        .ok_or_else(|| CliError::config(format!("{what} is required (flag or scenario file)")))
}

fn apply_stats_every(scenario: &mut LoadedScenario, flag: Option<u64>) -> CliResult<()> {
    if let Some(every) = flag {
        scenario.config.stats_every = every;
        scenario.config.validate()?;
    }
    Ok(())
}

pub fn cmd_run(args: RunArgs) -> CliResult<()> {
    let mut scenario = load_scenario(&args.scenario)?;
    apply_stats_every(&mut scenario, args.stats_every)?;
    let seed = resolve(args.seed, scenario.seed, "a seed")?;
    let out_dir = resolve(args.out, scenario.out_dir.clone(), "an output directory")?;

    let result = run(&scenario.config, seed)?;
    output::write_run_outputs(
        &out_dir,
        &scenario.config,
        &result,
        scenario.histogram_bin_width,
    )?;

    let row = result.summary_row()?;
    println!(
        "run seed={} ticks={} variance={} gap={} first_critical_tick={} return_periods={} -> {}",
        seed,
        scenario.config.max_ticks,
        row.variance,
        row.gap,
        row.first_critical_tick
            .map(|t| t.to_string())
            .unwrap_or_else(|| "-".into()),
        row.return_period_count,
        out_dir.display()
    );
    Ok(())
}

pub fn cmd_batch(args: BatchArgs) -> CliResult<()> {
    let mut scenario = load_scenario(&args.scenario)?;
    apply_stats_every(&mut scenario, args.stats_every)?;
    let seeds = resolve(args.seeds, scenario.seeds.clone(), "a seed list")?;
    let out_dir = resolve(args.out, scenario.out_dir.clone(), "an output directory")?;

    let batch = run_batch(&scenario.config, &seeds)?;
    for result in &batch.results {
        let run_dir = out_dir.join(format!("seed-{}", result.seed));
        output::write_run_outputs(
            &run_dir,
            &scenario.config,
            result,
            scenario.histogram_bin_width,
        )?;
    }
    output::write_batch_summary(&out_dir, &batch)?;

    println!(
        "batch runs={} variance mean={} min={} max={} -> {}",
        seeds.len(),
        batch.aggregates.variance.mean,
        batch.aggregates.variance.min,
        batch.aggregates.variance.max,
        out_dir.display()
    );
    Ok(())
}

pub fn cmd_ofat(args: OfatArgs) -> CliResult<()> {
    let mut scenario = load_scenario(&args.scenario)?;
    apply_stats_every(&mut scenario, args.stats_every)?;
    let out_dir = resolve(args.out, scenario.out_dir.clone(), "an output directory")?;
    if args.values.is_empty() {
        return Err(CliError::config("--values must list at least one value"));
    }

    let values = args
        .values
        .iter()
        .map(|v| match v.parse::<f64>() {
            Ok(x) => SweepValue::Number(x),
            Err(_) => SweepValue::Text(v.clone()),
        })
        .collect();
    let plan = OfatPlan {
        base: scenario.config,
        parameter: args.parameter,
        values,
        replicates: args.replicates,
        seed_base: args.seed_base,
    };
    let table = ofat_run(&plan)?;
    let path = output::write_ofat(&out_dir, &table)?;
    println!(
        "ofat parameter={} points={} replicates={} -> {}",
        table.parameter,
        table.rows.len(),
        plan.replicates,
        path.display()
    );
    Ok(())
}

/// Load every `result.json` beneath a report input: either the directory of
/// a single run or a batch directory with `seed-*/` children.
fn load_group(label: &str, dir: &Path) -> CliResult<ReportGroup> {
    let mut result_files: Vec<PathBuf> = Vec::new();
    let direct = dir.join(output::RESULT_FILE);
    if direct.is_file() {
        result_files.push(direct);
    }
    if dir.is_dir() {
        let mut children: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .collect();
        children.sort();
        for child in children {
            let nested = child.join(output::RESULT_FILE);
            if nested.is_file() {
                result_files.push(nested);
            }
        }
    }
    if result_files.is_empty() {
        return Err(CliError::config(format!(
            "no {} files under {}",
            output::RESULT_FILE,
            dir.display()
        )));
    }

    let mut runs: Vec<(u64, u64, Real)> = Vec::new();
    for path in result_files {
        let text = std::fs::read_to_string(&path)?;
        let result: RunResult = serde_json::from_str(&text)
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        let (_, variance) = stats::summarize::<Real>(&result.final_balances)?;
        runs.push((result.seed, result.return_period_count, variance));
    }
    runs.sort_by_key(|r| r.0);
    Ok(ReportGroup {
        label: label.to_string(),
        runs,
    })
}

pub fn cmd_report(args: ReportArgs) -> CliResult<()> {
    if args.inputs.is_empty() {
        return Err(CliError::config(
            "report needs at least one LABEL=DIR or DIR input",
        ));
    }
    let mut groups = Vec::new();
    for input in &args.inputs {
        let (label, dir) = match input.split_once('=') {
            Some((label, dir)) => (label.to_string(), PathBuf::from(dir)),
            None => {
                let dir = PathBuf::from(input);
                let label = dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| input.clone());
                (label, dir)
            }
        };
        groups.push(load_group(&label, &dir)?);
    }

    print!("{}", output::report_summary_csv(&groups));
    if let Some(out_dir) = &args.out {
        output::write_report(out_dir, &groups)?;
        println!("report -> {}", out_dir.display());
    }
    Ok(())
}

pub fn cmd_replay(args: ReplayArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.manifest)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", args.manifest.display())))?;
    let manifest: ReplicationManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", args.manifest.display())))?;
    manifest.config.validate()?;

    let result = run(&manifest.config, manifest.seed)?;
    let replayed = output::write_run_outputs(
        &args.out,
        &manifest.config,
        &result,
        manifest.histogram_bin_width,
    )?;

    for (file, want) in &manifest.digests {
        match replayed.digests.get(file) {
            Some(got) if got == want => {}
            Some(got) => {
                return Err(CliError::runtime(format!(
                    "replay mismatch for {file}: manifest {want}, replay {got}"
                )))
            }
            None => {
                return Err(CliError::runtime(format!(
                    "replay produced no {file} digest"
                )))
            }
        }
    }
    println!(
        "replay seed={} verified {} files -> {}",
        manifest.seed,
        manifest.digests.len(),
        args.out.display()
    );
    Ok(())
}

pub fn cmd_graph(args: GraphArgs) -> CliResult<()> {
    let need = |value: Option<f64>, name: &str| {
        value.ok_or_else(|| CliError::config(format!("--{name} is required for this graph kind")))
    };
    let need_count = |value: Option<usize>, name: &str| {
        value.ok_or_else(|| CliError::config(format!("--{name} is required for this graph kind")))
    };
    let mut rng = run_rng(args.seed);
    let graph = match args.kind.as_str() {
        "random" => environment::gen_random_graph(args.n, need(args.p, "p")?, &mut rng)?,
        "small-world" => environment::gen_small_world(
            args.n,
            need_count(args.k, "k")?,
            need(args.beta, "beta")?,
            &mut rng,
        )?,
        "scale-free" => environment::gen_scale_free(
            args.n,
            need_count(args.m0, "m0")?,
            need_count(args.m, "m")?,
            &mut rng,
        )?,
        other => {
            return Err(CliError::config(format!(
                "unknown graph kind {other:?} (expected random, small-world or scale-free)"
            )))
        }
    };
    let text = graph.to_adjacency_text();
    match &args.out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(path, &text)?;
            println!(
                "graph kind={} n={} edges={} -> {}",
                args.kind,
                args.n,
                graph.edge_count(),
                path.display()
            );
        }
        None => print!("{text}"),
    }
    Ok(())
}

