//! Deterministic agent-based simulator of a closed exchange economy.
//!
//! The model is a society of `N` agents holding integer money. Each discrete
//! tick, every agent with a positive balance donates one unit to a randomly
//! chosen peer ([`economy`]). Optionally, a pass-through charity entity
//! watches the gap between the bottom five deciles and the top decile and
//! redistributes money whenever the situation turns critical ([`charity`]).
//!
//! Everything downstream of a `(ScenarioConfig, seed)` pair is reproducible
//! bit for bit: the per-run random stream is a ChaCha8 generator keyed from
//! the 64-bit seed and nothing else ([`rng`]).
//!
//! Money never leaves the system, so total money is conserved exactly at
//! every tick and all balances stay nonnegative. Both invariants are checked
//! by the engine on every step.
//!
//! - [`engine`]: tick scheduler, run/batch drivers, result records
//! - [`economy`]: the per-tick random unit-exchange rule
//! - [`charity`]: critical-stage detection and allocation strategies
//! - [`stats`]: moments, decile totals, histograms, distribution fits
//! - [`environment`]: lattice topologies and random-graph generators
//! - [`sensitivity`]: one-factor-at-a-time parameter sweeps

pub mod charity;
pub mod economy;
pub mod engine;
pub mod environment;
pub mod error;
pub mod rng;
pub mod sensitivity;
pub mod stats;

pub use charity::CharityStrategy;
pub use engine::{BatchSummary, RunResult, ScenarioConfig, SimState, TickStats};
pub use error::Error;

/// Agent identifier; agents are stored densely so this doubles as an index.
pub type AgentId = u32;

/// Money in exact integer units. All balances, transfers and totals use this
/// type so conservation can be asserted with `==`.
pub type Money = i64;

/// Default floating-point scalar for statistics. The analysis functions in
/// [`stats`] are generic over `num_traits::Float`; this alias is the
/// concrete type the engine records.
pub type Real = f64;

pub type Result<T> = std::result::Result<T, Error>;
