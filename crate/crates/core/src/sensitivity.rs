//! One-factor-at-a-time (OFAT) sensitivity analysis.
//!
//! A plan names one config field, a list of values for it, and a replicate
//! count. Every design point inherits the base scenario with only that field
//! changed, and each replicate gets a seed derived from
//! `(seed_base, value index, replicate index)`, so extending the value list
//! never perturbs the seeds of existing points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charity::CharityStrategy;
use crate::engine::{run, InitMode, MetricAggregate, ScenarioConfig};
use crate::error::Error;
use crate::rng::derive_seed;
use crate::stats;
use crate::{Money, Real, Result};

/// A value a swept parameter can take: numeric for counts/amounts/
/// percentages, text for enum-like fields such as `init_mode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Text(String),
}

impl std::fmt::Display for SweepValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepValue::Number(x) => write!(f, "{x}"),
            SweepValue::Text(s) => write!(f, "{s}"),
        }
    }
}

/// An OFAT sweep description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfatPlan {
    pub base: ScenarioConfig,
    /// Config field to vary: `n_agents`, `initial_money`, `max_ticks`,
    /// `critical_threshold`, `stats_every`, `init_mode`, or a charity
    /// percentage such as `charity.d_pct`.
    pub parameter: String,
    pub values: Vec<SweepValue>,
    pub replicates: u32,
    pub seed_base: u64,
}

impl OfatPlan {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("an OFAT plan needs at least one value"));
        }
        for (i, v) in self.values.iter().enumerate() {
            if self.values[..i].contains(v) {
                return Err(Error::config(format!("duplicate sweep value {v}")));
            }
        }
        if self.replicates < 1 {
            return Err(Error::config("replicates must be at least 1"));
        }
        Ok(())
    }
}

fn as_count(parameter: &str, value: &SweepValue, max: u64) -> Result<u64> {
    let SweepValue::Number(x) = value else {
        return Err(Error::config(format!(
            "parameter {parameter} takes a numeric value"
        )));
    };
    if x.fract() != 0.0 || *x < 0.0 || *x > max as f64 {
        return Err(Error::config(format!(
            "parameter {parameter} needs a nonnegative integer value (got {x})"
        )));
    }
    Ok(*x as u64)
}

/// The base config with one named field replaced. The result is validated,
/// so a sweep cannot smuggle in an invalid scenario.
pub fn apply_parameter(
    base: &ScenarioConfig,
    parameter: &str,
    value: &SweepValue,
) -> Result<ScenarioConfig> {
    let mut config = base.clone();
    match parameter {
        "n_agents" => config.n_agents = as_count(parameter, value, u32::MAX as u64)? as u32,
        "initial_money" => {
            config.initial_money = as_count(parameter, value, Money::MAX as u64)? as Money
        }
        "max_ticks" => config.max_ticks = as_count(parameter, value, u64::MAX)?,
        "stats_every" => config.stats_every = as_count(parameter, value, u64::MAX)?,
        "critical_threshold" => {
            let SweepValue::Number(x) = value else {
                return Err(Error::config("parameter critical_threshold takes a number"));
            };
            if x.fract() != 0.0 {
                return Err(Error::config(format!(
                    "parameter critical_threshold needs an integer value (got {x})"
                )));
            }
            config.critical_threshold = *x as Money;
        }
        "init_mode" => {
            let SweepValue::Text(s) = value else {
                return Err(Error::config(
                    "parameter init_mode takes \"equal\" or \"random-partition\"",
                ));
            };
            config.init_mode = match s.as_str() {
                "equal" => InitMode::Equal,
                "random-partition" => InitMode::RandomPartition,
                other => {
                    return Err(Error::config(format!(
                        "unknown init_mode value {other:?} (expected \"equal\" or \"random-partition\")"
                    )))
                }
            };
        }
        name if name.starts_with("charity.") => {
            let SweepValue::Number(pct) = value else {
                return Err(Error::config(format!("parameter {name} takes a number")));
            };
            set_charity_pct(&mut config, name, *pct)?;
        }
        unknown => {
            return Err(Error::config(format!(
                "unknown sweep parameter {unknown:?}"
            )))
        }
    }
    config.validate()?;
    Ok(config)
}

fn set_charity_pct(config: &mut ScenarioConfig, name: &str, value: f64) -> Result<()> {
    let Some(strategy) = &mut config.charity else {
        return Err(Error::config(format!(
            "parameter {name} requires the base scenario to configure charity"
        )));
    };
    let field = &name["charity.".len()..];
    let slot = match (strategy, field) {
        (CharityStrategy::B { c_pct, .. }, "c_pct") => c_pct,
        (CharityStrategy::B { d_pct, .. }, "d_pct") => d_pct,
        (CharityStrategy::C { k_pct, .. }, "k_pct") => k_pct,
        (CharityStrategy::C { p_pct, .. }, "p_pct") => p_pct,
        (CharityStrategy::C { v_pct, .. }, "v_pct") => v_pct,
        (CharityStrategy::C { x_pct, .. }, "x_pct") => x_pct,
        (CharityStrategy::C { y_pct, .. }, "y_pct") => y_pct,
        (CharityStrategy::C { z_pct, .. }, "z_pct") => z_pct,
        _ => {
            return Err(Error::config(format!(
                "parameter {name} does not exist on the configured charity strategy"
            )))
        }
    };
    *slot = value;
    Ok(())
}

/// Expand a plan into `(config, seed)` pairs, ordered by value index then
/// replicate index.
pub fn ofat_expand(plan: &OfatPlan) -> Result<Vec<(ScenarioConfig, u64)>> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.values.len() * plan.replicates as usize);
    for (value_idx, value) in plan.values.iter().enumerate() {
        let config = apply_parameter(&plan.base, &plan.parameter, value)?;
        for replicate in 0..plan.replicates {
            out.push((
                config.clone(),
                derive_seed(plan.seed_base, value_idx as u64, replicate as u64),
            ));
        }
    }
    Ok(out)
}

/// Replicate-aggregated metrics for one design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfatRow {
    pub value: SweepValue,
    pub replicates: u32,
    /// Terminal population variance.
    pub variance: MetricAggregate,
    /// Fitted exponential temperature of the terminal distribution.
    pub fit_temperature: MetricAggregate,
    /// Over the replicates that reached a critical stage, if any did.
    pub first_critical_tick: Option<MetricAggregate>,
    pub replicates_with_critical_stage: u32,
    pub return_period_count: MetricAggregate,
}

/// Sweep output, one row per design point in value order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfatTable {
    pub parameter: String,
    pub seed_base: u64,
    pub rows: Vec<OfatRow>,
}

/// Execute a plan. Design points are independent and run concurrently; a
/// failing point aborts the sweep with the point named.
pub fn ofat_run(plan: &OfatPlan) -> Result<OfatTable> {
    plan.validate()?;
    let replicates = plan.replicates;
    let rows: Result<Vec<OfatRow>> = plan
        .values
        .par_iter()
        .enumerate()
        .map(|(value_idx, value)| {
            let point = |e: Error| {
                Error::Config(format!(
                    "design point {value_idx} ({} = {value}): {e}",
                    plan.parameter
                ))
            };
            let config = apply_parameter(&plan.base, &plan.parameter, value).map_err(point)?;
            let mut variances = Vec::new();
            let mut temperatures = Vec::new();
            let mut critical_ticks = Vec::new();
            let mut returns = Vec::new();
            for replicate in 0..replicates {
                let seed = derive_seed(plan.seed_base, value_idx as u64, replicate as u64);
                let result = run(&config, seed).map_err(point)?;
                let row = result.summary_row().map_err(point)?;
                let fit =
                    stats::fit_boltzmann_gibbs::<Real>(&result.final_balances).map_err(point)?;
                variances.push(row.variance);
                temperatures.push(fit.temperature);
                if let Some(t) = row.first_critical_tick {
                    critical_ticks.push(t as Real);
                }
                returns.push(row.return_period_count as Real);
            }
            Ok(OfatRow {
                value: value.clone(),
                replicates,
                variance: MetricAggregate::of(&variances),
                fit_temperature: MetricAggregate::of(&temperatures),
                first_critical_tick: if critical_ticks.is_empty() {
                    None
                } else {
                    Some(MetricAggregate::of(&critical_ticks))
                },
                replicates_with_critical_stage: critical_ticks.len() as u32,
                return_period_count: MetricAggregate::of(&returns),
            })
        })
        .collect();
    Ok(OfatTable {
        parameter: plan.parameter.clone(),
        seed_base: plan.seed_base,
        rows: rows?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ScenarioConfig {
        ScenarioConfig::exchange_only(50, 10, 40)
    }

    fn number_plan(parameter: &str, values: &[f64]) -> OfatPlan {
        OfatPlan {
            base: base(),
            parameter: parameter.to_string(),
            values: values.iter().copied().map(SweepValue::Number).collect(),
            replicates: 2,
            seed_base: 11,
        }
    }

    #[test]
    fn expand_counts_and_distinct_seeds() {
        let expanded = ofat_expand(&number_plan("initial_money", &[5.0, 10.0, 20.0])).unwrap();
        assert_eq!(expanded.len(), 6);
        let seeds: std::collections::BTreeSet<u64> =
            expanded.iter().map(|(_, s)| *s).collect();
        assert_eq!(seeds.len(), 6);
        assert!(expanded[..2].iter().all(|(c, _)| c.initial_money == 5));
        assert!(expanded[4..].iter().all(|(c, _)| c.initial_money == 20));
    }

    #[test]
    fn expansion_is_deterministic() {
        let plan = number_plan("n_agents", &[20.0, 50.0]);
        assert_eq!(ofat_expand(&plan).unwrap(), ofat_expand(&plan).unwrap());
    }

    #[test]
    fn single_base_value_reproduces_the_base_run() {
        let plan = OfatPlan {
            base: base(),
            parameter: "initial_money".into(),
            values: vec![SweepValue::Number(10.0)],
            replicates: 1,
            seed_base: 7,
        };
        let expanded = ofat_expand(&plan).unwrap();
        assert_eq!(expanded.len(), 1);
        assert_eq!(expanded[0].0, base());
        let standalone = run(&base(), expanded[0].1).unwrap();
        let table = ofat_run(&plan).unwrap();
        let (_, var) = (standalone.seed, standalone.summary_row().unwrap().variance);
        assert_eq!(table.rows[0].variance.mean, var);
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let err = ofat_expand(&number_plan("no_such_field", &[1.0])).unwrap_err();
        assert!(err.to_string().contains("no_such_field"));
    }

    #[test]
    fn invalid_swept_value_is_rejected() {
        // 55 agents violates divisibility; the sweep must not run it.
        assert!(ofat_expand(&number_plan("n_agents", &[55.0])).is_err());
        assert!(ofat_expand(&number_plan("initial_money", &[10.5])).is_err());
    }

    #[test]
    fn duplicate_values_are_rejected() {
        assert!(ofat_expand(&number_plan("initial_money", &[5.0, 5.0])).is_err());
    }

    #[test]
    fn charity_parameter_requires_charity() {
        let err = ofat_expand(&number_plan("charity.d_pct", &[10.0])).unwrap_err();
        assert!(err.to_string().contains("charity"));

        let mut plan = number_plan("charity.d_pct", &[10.0, 40.0]);
        plan.base = plan.base.with_charity(CharityStrategy::B {
            c_pct: 100.0,
            d_pct: 20.0,
        });
        let expanded = ofat_expand(&plan).unwrap();
        assert!(matches!(
            expanded[0].0.charity,
            Some(CharityStrategy::B { d_pct, .. }) if d_pct == 10.0
        ));
        assert!(matches!(
            expanded[2].0.charity,
            Some(CharityStrategy::B { d_pct, .. }) if d_pct == 40.0
        ));
    }

    #[test]
    fn init_mode_sweeps_as_text() {
        let plan = OfatPlan {
            base: base(),
            parameter: "init_mode".into(),
            values: vec![
                SweepValue::Text("equal".into()),
                SweepValue::Text("random-partition".into()),
            ],
            replicates: 1,
            seed_base: 3,
        };
        let expanded = ofat_expand(&plan).unwrap();
        assert_eq!(expanded[0].0.init_mode, InitMode::Equal);
        assert_eq!(expanded[1].0.init_mode, InitMode::RandomPartition);

        let bad = OfatPlan {
            values: vec![SweepValue::Text("explicit".into())],
            ..plan
        };
        assert!(ofat_expand(&bad).is_err());
    }

    #[test]
    fn temperature_tracks_swept_initial_money() {
        let plan = number_plan("initial_money", &[5.0, 10.0, 20.0]);
        let table = ofat_run(&plan).unwrap();
        for (row, want) in table.rows.iter().zip([5.0, 10.0, 20.0]) {
            assert_eq!(row.fit_temperature.mean, want, "conserved mean is exact");
            assert_eq!(row.fit_temperature.min, want);
            assert_eq!(row.fit_temperature.max, want);
        }
    }

    #[test]
    fn totals_scale_linearly_with_population() {
        let plan = number_plan("n_agents", &[20.0, 40.0]);
        let expanded = ofat_expand(&plan).unwrap();
        let small = run(&expanded[0].0, expanded[0].1).unwrap();
        let large = run(&expanded[2].0, expanded[2].1).unwrap();
        let total = |r: &crate::engine::RunResult| r.final_balances.iter().sum::<Money>();
        assert_eq!(total(&small) * 2, total(&large));
    }

    #[test]
    fn replaying_a_plan_reproduces_the_table() {
        let plan = number_plan("initial_money", &[5.0, 20.0]);
        let a = ofat_run(&plan).unwrap();
        let b = ofat_run(&plan).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
