//! Scenario-file parsing.
//!
//! Scenarios are JSON documents with a fixed key set; unknown keys are
//! rejected and parse diagnostics carry the offending line and column.
//! Missing optional keys take documented defaults: `critical_threshold` 0,
//! `init_mode` "equal", `environment` well-mixed, `outputs.stats_every` 1,
//! `outputs.histogram_bin_width` 10.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use moneysim::charity::CharityStrategy;
use moneysim::engine::{Environment, GraphSpec, InitMode, ScenarioConfig};
use moneysim::Money;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    n_agents: u32,
    initial_money: Money,
    #[serde(default)]
    init_mode: Option<InitModeFile>,
    max_ticks: u64,
    #[serde(default)]
    critical_threshold: Money,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    charity: Option<CharityFile>,
    #[serde(default)]
    environment: Option<EnvironmentFile>,
    #[serde(default)]
    outputs: OutputsFile,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum InitModeFile {
    Equal,
    RandomPartition,
    ExplicitList(Vec<Money>),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "strategy", deny_unknown_fields)]
enum CharityFile {
    A,
    B {
        c_pct: f64,
        d_pct: f64,
    },
    C {
        k_pct: f64,
        p_pct: f64,
        v_pct: f64,
        x_pct: f64,
        y_pct: f64,
        z_pct: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum EnvironmentFile {
    WellMixed,
    Random { p: f64 },
    SmallWorld { k: u32, beta: f64 },
    ScaleFree { m0: u32, m: u32 },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputsFile {
    #[serde(default)]
    directory: Option<PathBuf>,
    #[serde(default)]
    stats_every: Option<u64>,
    #[serde(default)]
    histogram_bin_width: Option<Money>,
}

/// A parsed and validated scenario plus its file-level extras.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub config: ScenarioConfig,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub out_dir: Option<PathBuf>,
    pub histogram_bin_width: Money,
}

pub fn load_scenario(path: &Path) -> CliResult<LoadedScenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| {
        CliError::config(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;

    let config = ScenarioConfig {
        n_agents: file.n_agents,
        initial_money: file.initial_money,
        init_mode: match file.init_mode {
            None | Some(InitModeFile::Equal) => InitMode::Equal,
            Some(InitModeFile::RandomPartition) => InitMode::RandomPartition,
            Some(InitModeFile::ExplicitList(balances)) => InitMode::ExplicitList(balances),
        },
        max_ticks: file.max_ticks,
        critical_threshold: file.critical_threshold,
        charity: file.charity.map(|c| match c {
            CharityFile::A => CharityStrategy::A,
            CharityFile::B { c_pct, d_pct } => CharityStrategy::B { c_pct, d_pct },
            CharityFile::C {
                k_pct,
                p_pct,
                v_pct,
                x_pct,
                y_pct,
                z_pct,
            } => CharityStrategy::C {
                k_pct,
                p_pct,
                v_pct,
                x_pct,
                y_pct,
                z_pct,
            },
        }),
        environment: match file.environment {
            None | Some(EnvironmentFile::WellMixed) => Environment::WellMixed,
            Some(EnvironmentFile::Random { p }) => Environment::Graph(GraphSpec::Random { p }),
            Some(EnvironmentFile::SmallWorld { k, beta }) => {
                Environment::Graph(GraphSpec::SmallWorld { k, beta })
            }
            Some(EnvironmentFile::ScaleFree { m0, m }) => {
                Environment::Graph(GraphSpec::ScaleFree { m0, m })
            }
        },
        stats_every: file.outputs.stats_every.unwrap_or(1),
    };
    config.validate()?;

    if let Some(seeds) = &file.seeds {
        if seeds.is_empty() {
            return Err(CliError::config("`seeds` must not be empty"));
        }
    }

    Ok(LoadedScenario {
        config,
        seed: file.seed,
        seeds: file.seeds,
        out_dir: file.outputs.directory,
        histogram_bin_width: file.outputs.histogram_bin_width.unwrap_or(10),
    })
}
