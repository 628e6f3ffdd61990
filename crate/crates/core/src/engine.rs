//! Discrete-tick scheduler and run drivers.
//!
//! A run is fully described by a [`ScenarioConfig`] and a 64-bit seed. The
//! engine owns the run's random stream, advances the model one tick at a
//! time, records per-tick statistics, and checks conservation and
//! nonnegativity after every step. Batches execute runs independently and
//! in parallel, sharing nothing mutable, and merge results in seed order.
//!
//! Each tick proceeds as: exchange phase, criticality detection on the
//! post-exchange state, charity intervention if configured and critical,
//! then statistics over the final state, so a fired intervention is visible
//! in the same tick's recorded gap.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::charity::{self, CharityStrategy};
use crate::economy;
use crate::environment::{gen_random_graph, gen_scale_free, gen_small_world, NetworkGraph};
use crate::error::Error;
use crate::rng::{run_rng, RunRng};
use crate::stats;
use crate::{Money, Real, Result};

/// How initial balances are assigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Every agent starts with exactly `initial_money`.
    Equal,
    /// A uniformly random composition of the total into nonnegative parts.
    RandomPartition,
    /// Caller-provided balances; must sum to `n_agents * initial_money`.
    ExplicitList(Vec<Money>),
}

/// Generator parameters for a network-constrained run. The node count is
/// always the agent count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphSpec {
    Random { p: f64 },
    SmallWorld { k: u32, beta: f64 },
    ScaleFree { m0: u32, m: u32 },
}

/// Who an agent may exchange with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Environment {
    /// Any agent may give to any other agent.
    WellMixed,
    /// Exchange is restricted to neighbors in a generated graph.
    Graph(GraphSpec),
}

/// Complete description of a run, minus the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_agents: u32,
    /// Initial units per agent; the conserved total is `n_agents * initial_money`.
    pub initial_money: Money,
    pub init_mode: InitMode,
    pub max_ticks: u64,
    /// The economy is critical when the money gap is at or below this.
    pub critical_threshold: Money,
    pub charity: Option<CharityStrategy>,
    pub environment: Environment,
    /// Record statistics every this many ticks (the final tick is always
    /// recorded).
    pub stats_every: u64,
}

impl ScenarioConfig {
    /// A well-mixed, equal-start scenario with no charity.
    pub fn exchange_only(n_agents: u32, initial_money: Money, max_ticks: u64) -> Self {
        ScenarioConfig {
            n_agents,
            initial_money,
            init_mode: InitMode::Equal,
            max_ticks,
            critical_threshold: 0,
            charity: None,
            environment: Environment::WellMixed,
            stats_every: 1,
        }
    }

    /// Same scenario with a charity entity attached.
    pub fn with_charity(mut self, strategy: CharityStrategy) -> Self {
        self.charity = Some(strategy);
        self
    }

    pub fn total_money(&self) -> Money {
        self.n_agents as Money * self.initial_money
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 10 || !self.n_agents.is_multiple_of(10) {
            return Err(Error::config(format!(
                "n_agents must be at least 10 and divisible by 10 (got {})",
                self.n_agents
            )));
        }
        if self.initial_money < 1 {
            return Err(Error::config(format!(
                "initial_money must be at least 1 (got {})",
                self.initial_money
            )));
        }
        if self.max_ticks < 1 {
            return Err(Error::config(format!(
                "max_ticks must be at least 1 (got {})",
                self.max_ticks
            )));
        }
        if self.stats_every < 1 {
            return Err(Error::config(format!(
                "stats_every must be at least 1 (got {})",
                self.stats_every
            )));
        }
        (self.n_agents as Money)
            .checked_mul(self.initial_money)
            .ok_or_else(|| Error::config("n_agents * initial_money overflows"))?;
        if let InitMode::ExplicitList(balances) = &self.init_mode {
            if balances.len() != self.n_agents as usize {
                return Err(Error::config(format!(
                    "explicit balance list has {} entries for {} agents",
                    balances.len(),
                    self.n_agents
                )));
            }
            if balances.iter().any(|&b| b < 0) {
                return Err(Error::config("explicit balances must be nonnegative"));
            }
            let sum: Money = balances.iter().sum();
            if sum != self.total_money() {
                return Err(Error::config(format!(
                    "explicit balances sum to {} but the conserved total is {}",
                    sum,
                    self.total_money()
                )));
            }
        }
        if let Some(strategy) = &self.charity {
            strategy.validate()?;
        }
        if let Environment::Graph(spec) = self.environment {
            let n = self.n_agents as usize;
            match spec {
                GraphSpec::Random { p } => {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::config(format!(
                            "edge probability must be in [0, 1] (got {p})"
                        )));
                    }
                }
                GraphSpec::SmallWorld { k, beta } => {
                    if k < 2 || k % 2 != 0 || k as usize >= n {
                        return Err(Error::config(format!(
                            "small-world graph needs an even k with 2 <= k < n (got k = {k})"
                        )));
                    }
                    if !(0.0..=1.0).contains(&beta) {
                        return Err(Error::config(format!(
                            "rewiring probability must be in [0, 1] (got {beta})"
                        )));
                    }
                }
                GraphSpec::ScaleFree { m0, m } => {
                    if !(1 <= m && m <= m0 && (m0 as usize) <= n) {
                        return Err(Error::config(format!(
                            "scale-free graph needs n >= m0 >= m >= 1 (got m0 = {m0}, m = {m})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON encoding of the config.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Aggregate record for one tick, computed after all of the tick's
/// transfers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickStats {
    pub tick: u64,
    pub mean: Real,
    pub variance: Real,
    pub top10_total: Money,
    pub bottom50_total: Money,
    /// `bottom50_total - top10_total`; positive means the bottom half holds
    /// more.
    pub gap: Money,
    /// Whether the end-of-tick gap is at or below the critical threshold.
    pub critical: bool,
}

/// Everything a single run produced. Two runs of the same `(config, seed)`
/// compare equal and serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config_digest: String,
    pub seed: u64,
    pub engine_version: String,
    pub series: Vec<TickStats>,
    pub final_balances: Vec<Money>,
    /// First tick whose post-exchange state was critical, if any.
    pub first_critical_tick: Option<u64>,
    /// Number of ticks that entered the critical stage (the trigger count
    /// for charity runs).
    pub return_period_count: u64,
}

/// Echo of everything needed to reproduce a run's outputs, plus digests of
/// the files it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationManifest {
    pub engine_version: String,
    pub config: ScenarioConfig,
    pub seed: u64,
    pub histogram_bin_width: Money,
    /// file name -> SHA-256 of its contents
    pub digests: BTreeMap<String, String>,
}

/// In-flight simulation state for one run.
pub struct SimState {
    config: ScenarioConfig,
    seed: u64,
    rng: RunRng,
    graph: Option<NetworkGraph>,
    balances: Vec<Money>,
    total_money: Money,
    tick: u64,
    first_critical_tick: Option<u64>,
    return_period_count: u64,
    series: Vec<TickStats>,
}

impl SimState {
    /// Validate the config, build the environment, and set up initial
    /// balances. The random stream is derived from `seed` alone; draw order
    /// is fixed (graph first, then initial balances).
    pub fn new(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = run_rng(seed);
        let n = config.n_agents as usize;

        let graph = match config.environment {
            Environment::WellMixed => None,
            Environment::Graph(spec) => Some(match spec {
                GraphSpec::Random { p } => gen_random_graph(n, p, &mut rng)?,
                GraphSpec::SmallWorld { k, beta } => {
                    gen_small_world(n, k as usize, beta, &mut rng)?
                }
                GraphSpec::ScaleFree { m0, m } => {
                    gen_scale_free(n, m0 as usize, m as usize, &mut rng)?
                }
            }),
        };

        let balances = match &config.init_mode {
            InitMode::Equal => vec![config.initial_money; n],
            InitMode::RandomPartition => random_composition(config.total_money(), n, &mut rng),
            InitMode::ExplicitList(list) => list.clone(),
        };

        Ok(SimState {
            total_money: config.total_money(),
            config: config.clone(),
            seed,
            rng,
            graph,
            balances,
            tick: 0,
            first_critical_tick: None,
            return_period_count: 0,
            series: Vec::new(),
        })
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn balances(&self) -> &[Money] {
        &self.balances
    }

    pub fn graph(&self) -> Option<&NetworkGraph> {
        self.graph.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.config.max_ticks
    }

    /// Advance one tick and return its statistics (recorded into the series
    /// only on recording ticks).
    pub fn step(&mut self) -> Result<TickStats> {
        if self.is_finished() {
            return Err(Error::State(format!(
                "run already completed {} ticks",
                self.config.max_ticks
            )));
        }
        self.tick += 1;

        economy::exchange_tick(&mut self.balances, &mut self.rng, self.graph.as_ref())?;

        // Detection looks at the post-exchange state; the recorded stats
        // below look at the post-intervention state.
        let mut totals = stats::decile_totals(&self.balances)?;
        let critical_now = totals.gap() <= self.config.critical_threshold;
        if critical_now {
            self.return_period_count += 1;
            self.first_critical_tick.get_or_insert(self.tick);
            if let Some(strategy) = self.config.charity {
                let ledger = charity::apply_strategy(&mut self.balances, &strategy)?;
                assert_eq!(
                    ledger.charity_balance(),
                    0,
                    "charity entity kept money at tick {}",
                    self.tick
                );
                totals = stats::decile_totals(&self.balances)?;
            }
        }

        let (mean, variance) = stats::summarize::<Real>(&self.balances)?;
        let gap = totals.gap();
        let tick_stats = TickStats {
            tick: self.tick,
            mean,
            variance,
            top10_total: totals.top10_total,
            bottom50_total: totals.bottom50_total,
            gap,
            critical: gap <= self.config.critical_threshold,
        };

        self.check_invariants();

        if self.tick.is_multiple_of(self.config.stats_every) || self.tick == self.config.max_ticks {
            self.series.push(tick_stats);
        }
        Ok(tick_stats)
    }

    /// Conservation and nonnegativity, checked unconditionally every tick.
    fn check_invariants(&self) {
        let sum: Money = self.balances.iter().sum();
        assert_eq!(
            sum, self.total_money,
            "money conservation violated at tick {}",
            self.tick
        );
        assert!(
            self.balances.iter().all(|&b| b >= 0),
            "negative balance at tick {}",
            self.tick
        );
    }

    /// Consume a completed run into its result record.
    pub fn into_result(self) -> Result<RunResult> {
        if !self.is_finished() {
            return Err(Error::State(format!(
                "run stopped at tick {} of {}",
                self.tick, self.config.max_ticks
            )));
        }
        Ok(RunResult {
            config_digest: self.config.digest(),
            seed: self.seed,
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            series: self.series,
            final_balances: self.balances,
            first_critical_tick: self.first_critical_tick,
            return_period_count: self.return_period_count,
        })
    }
}

/// Run a scenario to completion.
pub fn run(config: &ScenarioConfig, seed: u64) -> Result<RunResult> {
    let mut state = SimState::new(config, seed)?;
    while !state.is_finished() {
        state.step()?;
    }
    state.into_result()
}

/// Terminal per-run metrics, the row shape of a batch summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummaryRow {
    pub seed: u64,
    pub mean: Real,
    pub variance: Real,
    pub top10_total: Money,
    pub bottom50_total: Money,
    pub gap: Money,
    pub first_critical_tick: Option<u64>,
    pub return_period_count: u64,
}

/// Mean, minimum and maximum of one metric across a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub mean: Real,
    pub min: Real,
    pub max: Real,
}

impl MetricAggregate {
    /// Aggregate a nonempty slice of values.
    pub fn of(values: &[Real]) -> Self {
        let n = values.len() as Real;
        MetricAggregate {
            mean: values.iter().sum::<Real>() / n,
            min: values.iter().copied().fold(Real::INFINITY, Real::min),
            max: values.iter().copied().fold(Real::NEG_INFINITY, Real::max),
        }
    }
}

/// Cross-run aggregates over the terminal metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchAggregates {
    pub variance: MetricAggregate,
    pub top10_total: MetricAggregate,
    pub bottom50_total: MetricAggregate,
    pub gap: MetricAggregate,
    /// Over the runs that reached a critical stage, if any did.
    pub first_critical_tick: Option<MetricAggregate>,
    pub runs_with_critical_stage: usize,
    pub return_period_count: MetricAggregate,
}

/// One run per seed plus order-insensitive aggregates. Rows keep the input
/// seed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub results: Vec<RunResult>,
    pub rows: Vec<RunSummaryRow>,
    pub aggregates: BatchAggregates,
}

impl RunResult {
    /// Terminal metrics of this run.
    pub fn summary_row(&self) -> Result<RunSummaryRow> {
        let (mean, variance) = stats::summarize::<Real>(&self.final_balances)?;
        let totals = stats::decile_totals(&self.final_balances)?;
        Ok(RunSummaryRow {
            seed: self.seed,
            mean,
            variance,
            top10_total: totals.top10_total,
            bottom50_total: totals.bottom50_total,
            gap: totals.gap(),
            first_critical_tick: self.first_critical_tick,
            return_period_count: self.return_period_count,
        })
    }
}

/// Run one scenario under several seeds. Seeds must be distinct; runs share
/// nothing and may execute concurrently, and the summary is independent of
/// execution order.
pub fn run_batch(config: &ScenarioConfig, seeds: &[u64]) -> Result<BatchSummary> {
    if seeds.is_empty() {
        return Err(Error::config("a batch needs at least one seed"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &s in seeds {
        if !seen.insert(s) {
            return Err(Error::config(format!("duplicate seed {s} in batch")));
        }
    }
    config.validate()?;

    let results: Result<Vec<RunResult>> =
        seeds.par_iter().map(|&seed| run(config, seed)).collect();
    let results = results?;

    let rows: Result<Vec<RunSummaryRow>> = results.iter().map(RunResult::summary_row).collect();
    let rows = rows?;

    let collect = |f: fn(&RunSummaryRow) -> Real| -> Vec<Real> { rows.iter().map(f).collect() };
    let critical_ticks: Vec<Real> = rows
        .iter()
        .filter_map(|r| r.first_critical_tick)
        .map(|t| t as Real)
        .collect();
    let aggregates = BatchAggregates {
        variance: MetricAggregate::of(&collect(|r| r.variance)),
        top10_total: MetricAggregate::of(&collect(|r| r.top10_total as Real)),
        bottom50_total: MetricAggregate::of(&collect(|r| r.bottom50_total as Real)),
        gap: MetricAggregate::of(&collect(|r| r.gap as Real)),
        first_critical_tick: if critical_ticks.is_empty() {
            None
        } else {
            Some(MetricAggregate::of(&critical_ticks))
        },
        runs_with_critical_stage: critical_ticks.len(),
        return_period_count: MetricAggregate::of(&collect(|r| r.return_period_count as Real)),
    };

    Ok(BatchSummary {
        results,
        rows,
        aggregates,
    })
}

/// Uniformly random composition of `total` into `parts` nonnegative integer
/// summands, by drawing the classic bars-between-stars positions: a uniform
/// `(parts-1)`-subset of `total + parts - 1` slots.
fn random_composition(total: Money, parts: usize, rng: &mut RunRng) -> Vec<Money> {
    use rand::Rng;
    if parts == 1 {
        return vec![total];
    }
    let slots = total as u64 + parts as u64 - 1;
    let mut bars = std::collections::BTreeSet::new();
    while bars.len() < parts - 1 {
        bars.insert(rng.gen_range(0..slots));
    }
    let mut out = Vec::with_capacity(parts);
    let mut prev = None;
    for &bar in &bars {
        out.push(match prev {
            None => bar as Money,
            Some(p) => (bar - p - 1) as Money,
        });
        prev = Some(bar);
    }
    out.push((slots - 1 - prev.unwrap()) as Money);
    out
}
