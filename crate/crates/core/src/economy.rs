//! The per-tick exchange rule.
//!
//! Each tick, every agent holding at least one unit commits exactly one unit
//! to a recipient drawn uniformly at random from the other agents (or from
//! its graph neighbors when the exchange is network-constrained). All
//! commitments are collected first and applied afterwards, so the update is
//! simultaneous: eligibility is judged against the start-of-tick balances
//! and no agent can transiently go negative.

use serde::{Deserialize, Serialize};

use crate::environment::NetworkGraph;
use crate::error::Error;
use crate::rng::RunRng;
use crate::{AgentId, Money, Result};
use rand::Rng;

/// One side of a transfer: a person, or the pass-through charity entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Agent(AgentId),
    Charity,
}

/// A single money movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transfer {
    pub from: Party,
    pub to: Party,
    pub amount: Money,
}

/// Audit trail of one tick's transfers, used by conservation checks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferLedger {
    pub transfers: Vec<Transfer>,
}

impl TransferLedger {
    pub fn is_empty(&self) -> bool {
        self.transfers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.transfers.len()
    }

    /// Total units moved (each transfer counted once).
    pub fn total_moved(&self) -> Money {
        self.transfers.iter().map(|t| t.amount).sum()
    }

    /// Units received minus units given away by the charity entity. Zero
    /// means the charity passed everything through.
    pub fn charity_balance(&self) -> Money {
        self.transfers
            .iter()
            .map(|t| match (t.from, t.to) {
                (_, Party::Charity) => t.amount,
                (Party::Charity, _) => -t.amount,
                _ => 0,
            })
            .sum()
    }

    /// Net balance change per agent implied by the ledger.
    pub fn net_agent_deltas(&self, n_agents: usize) -> Vec<Money> {
        let mut deltas = vec![0; n_agents];
        for t in &self.transfers {
            if let Party::Agent(id) = t.from {
                deltas[id as usize] -= t.amount;
            }
            if let Party::Agent(id) = t.to {
                deltas[id as usize] += t.amount;
            }
        }
        deltas
    }
}

/// Run one exchange tick over `balances`, mutating it in place and returning
/// the ledger of applied transfers.
///
/// Two phases: (1) every agent with `money >= 1` commits one unit to a
/// uniformly random other agent (or uniformly random graph neighbor when
/// `graph` is given; agents with no neighbors commit nothing), then (2) all
/// commitments are applied at once. Donors are visited in ascending id
/// order, which together with the run-owned RNG makes the tick fully
/// deterministic.
pub fn exchange_tick(
    balances: &mut [Money],
    rng: &mut RunRng,
    graph: Option<&NetworkGraph>,
) -> Result<TransferLedger> {
    if balances.is_empty() {
        return Err(Error::config("exchange requires at least one agent"));
    }
    if let Some(g) = graph {
        if g.node_count() != balances.len() {
            return Err(Error::config(format!(
                "graph has {} nodes but the population has {} agents",
                g.node_count(),
                balances.len()
            )));
        }
    }

    let n = balances.len();
    let mut ledger = TransferLedger::default();

    for (donor, &money) in balances.iter().enumerate() {
        if money < 1 {
            continue;
        }
        let recipient = match graph {
            None => {
                if n == 1 {
                    continue; // nobody else to give to
                }
                // Uniform over the n-1 other agents with a single draw.
                let r = rng.gen_range(0..n - 1);
                if r >= donor {
                    r + 1
                } else {
                    r
                }
            }
            Some(g) => {
                let neighbors = g.neighbors(donor as AgentId);
                if neighbors.is_empty() {
                    continue;
                }
                neighbors[rng.gen_range(0..neighbors.len())] as usize
            }
        };
        ledger.transfers.push(Transfer {
            from: Party::Agent(donor as AgentId),
            to: Party::Agent(recipient as AgentId),
            amount: 1,
        });
    }

    for t in &ledger.transfers {
        if let (Party::Agent(from), Party::Agent(to)) = (t.from, t.to) {
            balances[from as usize] -= t.amount;
            balances[to as usize] += t.amount;
        }
    }

    Ok(ledger)
}
