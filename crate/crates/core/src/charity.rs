//! Critical-stage detection and charity allocation strategies.
//!
//! The economy is *critical* when the money gap (bottom-50% total minus
//! top-10% total) drops to the configured threshold or below. A charity
//! entity can then intervene with one of three strategies:
//!
//! - **A**: the richest agent gives one unit to the poorest agent.
//! - **B**: `c`% of the top decile each give one unit into a pool; the pool
//!   is split among `d`% of each of the five bottom deciles.
//! - **C**: three independent channels pairing donor and recipient deciles
//!   (10 to 1, 9 to 2, 8 to 3), each pooling and distributing like B.
//!
//! The charity is a pure pass-through: every pooled unit is paid out in the
//! same tick, so its balance returns to zero after every intervention.
//!
//! All selection is deterministic: ties in money are broken by ascending
//! agent id, and remainders go to the poorest recipients first.

use serde::{Deserialize, Serialize};

use crate::economy::{Party, Transfer, TransferLedger};
use crate::engine::RunResult;
use crate::error::Error;
use crate::stats;
use crate::{AgentId, Money, Result};

/// Allocation strategy, fixed for a whole run. Percentages are in `(0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CharityStrategy {
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

impl CharityStrategy {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, pct: f64| {
            if pct > 0.0 && pct <= 100.0 {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "charity percentage {name} must be in (0, 100] (got {pct})"
                )))
            }
        };
        match *self {
            CharityStrategy::A => Ok(()),
            CharityStrategy::B { c_pct, d_pct } => {
                check("c_pct", c_pct)?;
                check("d_pct", d_pct)
            }
            CharityStrategy::C {
                k_pct,
                p_pct,
                v_pct,
                x_pct,
                y_pct,
                z_pct,
            } => {
                check("k_pct", k_pct)?;
                check("p_pct", p_pct)?;
                check("v_pct", v_pct)?;
                check("x_pct", x_pct)?;
                check("y_pct", y_pct)?;
                check("z_pct", z_pct)
            }
        }
    }
}

/// Agent ids grouped into ten equal deciles by money. Decile 1 is the
/// poorest tenth, decile 10 the richest; within the underlying sort, ties in
/// money are ordered by ascending id.
#[derive(Debug, Clone)]
pub struct DecilePartition {
    sorted_ids: Vec<AgentId>,
    decile_size: usize,
}

impl DecilePartition {
    pub fn new(balances: &[Money]) -> Result<Self> {
        if balances.len() < 10 || !balances.len().is_multiple_of(10) {
            return Err(Error::config(format!(
                "decile partition requires a population of at least 10 divisible by 10 (got {})",
                balances.len()
            )));
        }
        let mut sorted_ids: Vec<AgentId> = (0..balances.len() as AgentId).collect();
        sorted_ids.sort_unstable_by_key(|&id| (balances[id as usize], id));
        Ok(Self {
            decile_size: balances.len() / 10,
            sorted_ids,
        })
    }

    pub fn decile_size(&self) -> usize {
        self.decile_size
    }

    /// Members of decile `index` (1 = poorest … 10 = richest), sorted by
    /// ascending money then ascending id.
    pub fn decile(&self, index: usize) -> &[AgentId] {
        assert!((1..=10).contains(&index), "decile index must be 1..=10");
        let start = (index - 1) * self.decile_size;
        &self.sorted_ids[start..start + self.decile_size]
    }
}

/// Which end of a decile to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionOrder {
    RichestFirst,
    PoorestFirst,
}

/// Gap and criticality of the current balances: `gap = bottom50 - top10`,
/// critical when `gap <= threshold`.
pub fn detect_critical(balances: &[Money], threshold: Money) -> Result<(Money, bool)> {
    let totals = stats::decile_totals(balances)?;
    let gap = totals.gap();
    Ok((gap, gap <= threshold))
}

/// Pick `round_half_up(pct/100 × decile_size)` members (at least one) from a
/// decile, from the requested end.
pub fn decile_select(
    partition: &DecilePartition,
    balances: &[Money],
    decile_index: usize,
    pct: f64,
    order: SelectionOrder,
) -> Vec<AgentId> {
    let size = partition.decile_size();
    let count = ((pct / 100.0 * size as f64 + 0.5).floor() as usize).clamp(1, size);
    let mut members = partition.decile(decile_index).to_vec();
    if order == SelectionOrder::RichestFirst {
        members.sort_unstable_by(|&a, &b| {
            balances[b as usize]
                .cmp(&balances[a as usize])
                .then(a.cmp(&b))
        });
    }
    members.truncate(count);
    members
}

/// Apply one charity intervention to `balances`. Must only be called on a
/// state that [`detect_critical`] judged critical; the caller (the engine)
/// guarantees that.
///
/// Donors holding no money are skipped silently, shrinking the pool. A
/// strategy that finds no eligible donors is a no-op with an empty ledger.
/// Whatever happens, donor debits equal recipient credits, so total money is
/// untouched and the charity ends the tick with balance zero.
pub fn apply_strategy(balances: &mut [Money], strategy: &CharityStrategy) -> Result<TransferLedger> {
    let mut ledger = TransferLedger::default();
    match *strategy {
        CharityStrategy::A => {
            apply_richest_to_poorest(balances, &mut ledger);
        }
        CharityStrategy::B { c_pct, d_pct } => {
            let partition = DecilePartition::new(balances)?;
            let donors = decile_select(&partition, balances, 10, c_pct, SelectionOrder::RichestFirst);
            let mut recipients = Vec::new();
            for decile in 1..=5 {
                recipients.extend(decile_select(
                    &partition,
                    balances,
                    decile,
                    d_pct,
                    SelectionOrder::PoorestFirst,
                ));
            }
            pool_and_distribute(balances, &donors, &recipients, &mut ledger);
        }
        CharityStrategy::C {
            k_pct,
            p_pct,
            v_pct,
            x_pct,
            y_pct,
            z_pct,
        } => {
            // Three paired channels with independent pools; decile
            // membership is frozen before any channel moves money.
            let partition = DecilePartition::new(balances)?;
            for (donor_decile, donor_pct, recipient_decile, recipient_pct) in
                [(10, k_pct, 1, x_pct), (9, p_pct, 2, y_pct), (8, v_pct, 3, z_pct)]
            {
                let donors = decile_select(
                    &partition,
                    balances,
                    donor_decile,
                    donor_pct,
                    SelectionOrder::RichestFirst,
                );
                let recipients = decile_select(
                    &partition,
                    balances,
                    recipient_decile,
                    recipient_pct,
                    SelectionOrder::PoorestFirst,
                );
                pool_and_distribute(balances, &donors, &recipients, &mut ledger);
            }
        }
    }
    debug_assert_eq!(ledger.charity_balance(), 0);
    Ok(ledger)
}

/// Strategy A: one unit from the richest agent to the poorest (ties to the
/// lowest id on both ends). Degenerate cases (richest equals poorest, or a
/// richest agent somehow without money) produce an empty ledger.
fn apply_richest_to_poorest(balances: &mut [Money], ledger: &mut TransferLedger) {
    let mut richest = 0usize;
    let mut poorest = 0usize;
    for (id, &money) in balances.iter().enumerate() {
        if money > balances[richest] {
            richest = id;
        }
        if money < balances[poorest] {
            poorest = id;
        }
    }
    if richest == poorest || balances[richest] < 1 {
        return;
    }
    balances[richest] -= 1;
    balances[poorest] += 1;
    ledger.transfers.push(Transfer {
        from: Party::Agent(richest as AgentId),
        to: Party::Agent(poorest as AgentId),
        amount: 1,
    });
}

/// Collect one unit from each donor that has one, then split the pool into
/// equal integer shares over the recipients; the remainder goes one unit
/// each to the earliest (poorest) recipients.
fn pool_and_distribute(
    balances: &mut [Money],
    donors: &[AgentId],
    recipients: &[AgentId],
    ledger: &mut TransferLedger,
) {
    if recipients.is_empty() {
        return;
    }
    let mut pool: Money = 0;
    for &donor in donors {
        if balances[donor as usize] < 1 {
            continue;
        }
        balances[donor as usize] -= 1;
        pool += 1;
        ledger.transfers.push(Transfer {
            from: Party::Agent(donor),
            to: Party::Charity,
            amount: 1,
        });
    }
    if pool == 0 {
        return;
    }
    let share = pool / recipients.len() as Money;
    let remainder = pool % recipients.len() as Money;
    for (i, &recipient) in recipients.iter().enumerate() {
        let amount = share + if (i as Money) < remainder { 1 } else { 0 };
        if amount == 0 {
            continue;
        }
        balances[recipient as usize] += amount;
        ledger.transfers.push(Transfer {
            from: Party::Charity,
            to: Party::Agent(recipient),
            amount,
        });
    }
}

/// Number of ticks at which the run re-entered the critical stage (the
/// first entry counts too). The engine accumulates this while the run
/// executes, because recorded per-tick statistics reflect the state *after*
/// an intervention and cannot recover the trigger count.
pub fn count_return_periods(run: &RunResult) -> u64 {
    run.return_period_count
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 500 agents in a clearly critical state: bottom half at 10, middle at
    /// 20, top decile at 200 each (top10 = 10000 > bottom50 = 2500).
    fn critical_population() -> Vec<Money> {
        let mut b = vec![10; 250];
        b.extend(vec![20; 200]);
        b.extend(vec![200; 50]);
        b
    }

    #[test]
    fn equal_start_is_not_critical() {
        let balances = vec![100; 500];
        let (gap, critical) = detect_critical(&balances, 0).unwrap();
        assert_eq!(gap, 20000);
        assert!(!critical);
    }

    #[test]
    fn concentration_grants_negative_gap() {
        // Nine paupers and one agent holding everything.
        let mut balances = vec![0; 10];
        balances[9] = 1000;
        let (gap, critical) = detect_critical(&balances, 0).unwrap();
        assert_eq!(gap, -1000);
        assert!(critical);
    }

    #[test]
    fn gap_matches_hand_built_decile_sums() {
        // 250 poor agents totalling 9134, 200 mid at 50, 50 rich totalling
        // 13052: gap must come out at -3918.
        let mut balances = vec![37; 134];
        balances.extend(vec![36; 116]);
        balances.extend(vec![50; 200]);
        balances.extend(vec![261; 48]);
        balances.extend(vec![262; 2]);
        assert_eq!(balances.len(), 500);
        let (gap, critical) = detect_critical(&balances, 0).unwrap();
        assert_eq!(gap, 9134 - 13052);
        assert_eq!(gap, -3918);
        assert!(critical);
    }

    #[test]
    fn decile_select_counts() {
        let balances: Vec<Money> = (0..500).collect();
        let partition = DecilePartition::new(&balances).unwrap();
        for (pct, want) in [(100.0, 50), (20.0, 10), (1.0, 1)] {
            let picked = decile_select(&partition, &balances, 10, pct, SelectionOrder::RichestFirst);
            assert_eq!(picked.len(), want, "pct = {pct}");
        }
    }

    #[test]
    fn decile_select_orders_and_breaks_ties_by_id() {
        // Agents 7 and 11 tie for the top; the global sort places both in
        // decile 10 (size 2), and richest-first must pick the lower id.
        let mut balances = vec![1; 20];
        balances[7] = 9;
        balances[11] = 9;
        let partition = DecilePartition::new(&balances).unwrap();
        assert_eq!(partition.decile(10), &[7, 11]);
        let picked = decile_select(&partition, &balances, 10, 50.0, SelectionOrder::RichestFirst);
        assert_eq!(picked, vec![7]);

        let poorest = decile_select(&partition, &balances, 1, 50.0, SelectionOrder::PoorestFirst);
        assert_eq!(poorest, vec![0]);
    }

    #[test]
    fn strategy_a_moves_one_unit_between_extremes() {
        let mut balances = vec![50; 10];
        balances[2] = 200; // richest
        balances[8] = 3; // poorest
        let ledger = apply_strategy(&mut balances, &CharityStrategy::A).unwrap();
        assert_eq!(balances[2], 199);
        assert_eq!(balances[8], 4);
        assert_eq!(ledger.total_moved(), 1);
        assert!(balances.iter().filter(|&&b| b == 50).count() == 8);
    }

    #[test]
    fn strategy_a_all_equal_is_noop() {
        let mut balances = vec![5; 10];
        let ledger = apply_strategy(&mut balances, &CharityStrategy::A).unwrap();
        assert!(ledger.is_empty());
        assert_eq!(balances, vec![5; 10]);
    }

    #[test]
    fn strategy_b_full_top_decile_to_fifth_of_bottom() {
        let mut balances = critical_population();
        let before = balances.clone();
        let strategy = CharityStrategy::B {
            c_pct: 100.0,
            d_pct: 20.0,
        };
        let ledger = apply_strategy(&mut balances, &strategy).unwrap();

        // 50 donors × 1 unit in, 50 recipients × 1 unit out.
        let donations: Vec<_> = ledger
            .transfers
            .iter()
            .filter(|t| t.to == Party::Charity)
            .collect();
        let payouts: Vec<_> = ledger
            .transfers
            .iter()
            .filter(|t| t.from == Party::Charity)
            .collect();
        assert_eq!(donations.len(), 50);
        assert_eq!(payouts.len(), 50);
        assert!(payouts.iter().all(|t| t.amount == 1));
        assert_eq!(ledger.charity_balance(), 0);
        assert_eq!(
            balances.iter().sum::<Money>(),
            before.iter().sum::<Money>()
        );
    }

    #[test]
    fn strategy_c_paired_channels_move_one_unit_each() {
        let mut balances = critical_population();
        let strategy = CharityStrategy::C {
            k_pct: 100.0,
            p_pct: 60.0,
            v_pct: 40.0,
            x_pct: 100.0,
            y_pct: 60.0,
            z_pct: 40.0,
        };
        let ledger = apply_strategy(&mut balances, &strategy).unwrap();
        let pooled: Money = ledger
            .transfers
            .iter()
            .filter(|t| t.to == Party::Charity)
            .map(|t| t.amount)
            .sum();
        let payouts: Vec<_> = ledger
            .transfers
            .iter()
            .filter(|t| t.from == Party::Charity)
            .collect();
        // 50 + 30 + 20 donors, 50 + 30 + 20 recipients, one unit per head.
        assert_eq!(pooled, 100);
        assert_eq!(payouts.len(), 100);
        assert!(payouts.iter().all(|t| t.amount == 1));
        assert_eq!(ledger.charity_balance(), 0);
    }

    #[test]
    fn remainder_units_go_to_the_poorest_first() {
        let mut balances = vec![2, 5, 9, 100, 100, 100, 100, 100, 100, 100];
        let mut ledger = TransferLedger::default();
        // Pool of 7 over recipients (0, 1, 2): shares 2 each, remainder 1
        // to the first (poorest) recipient.
        let donors: Vec<AgentId> = vec![3, 4, 5, 6, 7, 8, 9];
        let recipients: Vec<AgentId> = vec![0, 1, 2];
        pool_and_distribute(&mut balances, &donors, &recipients, &mut ledger);
        assert_eq!(balances[0], 2 + 3);
        assert_eq!(balances[1], 5 + 2);
        assert_eq!(balances[2], 9 + 2);
        assert_eq!(ledger.charity_balance(), 0);
    }

    #[test]
    fn recipient_percentage_spreads_the_pool_without_changing_it() {
        // The pool is fixed by the donor side; d only controls how many of
        // the bottom half share it.
        let mut recipient_counts = Vec::new();
        for d_pct in [10.0, 20.0, 40.0] {
            let mut balances = critical_population();
            let ledger = apply_strategy(
                &mut balances,
                &CharityStrategy::B { c_pct: 100.0, d_pct },
            )
            .unwrap();
            let pooled: Money = ledger
                .transfers
                .iter()
                .filter(|t| t.to == Party::Charity)
                .map(|t| t.amount)
                .sum();
            assert_eq!(pooled, 50, "d = {d_pct} must not change the pool");
            recipient_counts.push(
                ledger
                    .transfers
                    .iter()
                    .filter(|t| t.from == Party::Charity)
                    .count(),
            );
        }
        // d = 10/20/40% of each 50-member decile, five deciles; at d = 40
        // only the 50 poorest of the 100 selected get a remainder unit.
        assert_eq!(recipient_counts, vec![25, 50, 50]);
    }

    #[test]
    fn moneyless_donors_shrink_the_pool() {
        let mut balances = vec![0; 10];
        // Everyone is broke: the intervention fires but moves nothing.
        let strategy = CharityStrategy::B {
            c_pct: 100.0,
            d_pct: 100.0,
        };
        let ledger = apply_strategy(&mut balances, &strategy).unwrap();
        assert!(ledger.is_empty());
        assert_eq!(balances, vec![0; 10]);
    }

    #[test]
    fn strategy_percentages_are_validated() {
        assert!(CharityStrategy::B {
            c_pct: 0.0,
            d_pct: 20.0
        }
        .validate()
        .is_err());
        assert!(CharityStrategy::B {
            c_pct: 100.0,
            d_pct: 100.1
        }
        .validate()
        .is_err());
        assert!(CharityStrategy::A.validate().is_ok());
    }

    fn arbitrary_strategy() -> impl Strategy<Value = CharityStrategy> {
        let pct = 1.0f64..=100.0;
        prop_oneof![
            Just(CharityStrategy::A),
            (pct.clone(), pct.clone()).prop_map(|(c_pct, d_pct)| CharityStrategy::B {
                c_pct,
                d_pct
            }),
            (
                pct.clone(),
                pct.clone(),
                pct.clone(),
                pct.clone(),
                pct.clone(),
                pct
            )
                .prop_map(|(k_pct, p_pct, v_pct, x_pct, y_pct, z_pct)| {
                    CharityStrategy::C {
                        k_pct,
                        p_pct,
                        v_pct,
                        x_pct,
                        y_pct,
                        z_pct,
                    }
                }),
        ]
    }

    proptest! {
        #[test]
        fn every_strategy_conserves_money(
            balances in (1usize..=5)
                .prop_flat_map(|d| proptest::collection::vec(0i64..300, d * 10)),
            strategy in arbitrary_strategy(),
        ) {
            let mut state = balances.clone();
            let ledger = apply_strategy(&mut state, &strategy)?;
            prop_assert_eq!(state.iter().sum::<Money>(), balances.iter().sum::<Money>());
            prop_assert!(state.iter().all(|&b| b >= 0));
            prop_assert_eq!(ledger.charity_balance(), 0);

            // Donors never gain, recipients never lose, and the ledger
            // replays to the same end state.
            let deltas = ledger.net_agent_deltas(balances.len());
            for t in &ledger.transfers {
                if let Party::Agent(id) = t.from {
                    prop_assert!(deltas[id as usize] <= 0);
                }
                if let Party::Agent(id) = t.to {
                    prop_assert!(deltas[id as usize] >= 0);
                }
            }
            for (i, d) in deltas.iter().enumerate() {
                prop_assert_eq!(balances[i] + d, state[i]);
            }
        }
    }
}
