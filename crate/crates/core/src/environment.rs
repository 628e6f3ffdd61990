//! Spatial and networked environments.
//!
//! Lattice worlds differ only in their boundary rule: toroidal worlds wrap,
//! bounded worlds block, infinite worlds just keep going. Networked worlds
//! come from one of three generators (Erdős–Rényi `G(n, p)`,
//! Watts–Strogatz small-world rewiring, and Barabási–Albert preferential
//! attachment) and can be attached to a run to constrain who may exchange
//! with whom.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::RunRng;
use crate::{AgentId, Result};
use rand::Rng;

/// Lattice extent and boundary behavior. Width and height are at least 1;
/// the infinite plane has no extent at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeSpec {
    Toroidal { width: i64, height: i64 },
    Bounded { width: i64, height: i64 },
    Infinite,
}

impl LatticeSpec {
    pub fn toroidal(width: i64, height: i64) -> Result<Self> {
        Self::check_extent(width, height)?;
        Ok(LatticeSpec::Toroidal { width, height })
    }

    pub fn bounded(width: i64, height: i64) -> Result<Self> {
        Self::check_extent(width, height)?;
        Ok(LatticeSpec::Bounded { width, height })
    }

    pub fn infinite() -> Self {
        LatticeSpec::Infinite
    }

    fn check_extent(width: i64, height: i64) -> Result<()> {
        if width >= 1 && height >= 1 {
            Ok(())
        } else {
            Err(Error::config(format!(
                "lattice extent must be at least 1x1 (got {width}x{height})"
            )))
        }
    }
}

/// Move `pos` by `delta` under the lattice's boundary rule. A bounded world
/// returns `None` when the move would leave the lattice; that is a value,
/// not an error.
pub fn wrap_coordinate(
    pos: (i64, i64),
    delta: (i64, i64),
    spec: &LatticeSpec,
) -> Option<(i64, i64)> {
    let (x, y) = (pos.0 + delta.0, pos.1 + delta.1);
    match *spec {
        LatticeSpec::Toroidal { width, height } => {
            Some((x.rem_euclid(width), y.rem_euclid(height)))
        }
        LatticeSpec::Bounded { width, height } => {
            if (0..width).contains(&x) && (0..height).contains(&y) {
                Some((x, y))
            } else {
                None
            }
        }
        LatticeSpec::Infinite => Some((x, y)),
    }
}

/// How a graph was made, kept for manifests and debugging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorMeta {
    Random { p: f64 },
    SmallWorld { k: u32, beta: f64 },
    ScaleFree { m0: u32, m: u32 },
}

/// Undirected simple graph over nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    n: usize,
    /// Unordered pairs `(u, v)` with `u < v`, in canonical order.
    edges: Vec<(AgentId, AgentId)>,
    /// Per-node sorted neighbor lists.
    adjacency: Vec<Vec<AgentId>>,
    meta: GeneratorMeta,
}

impl NetworkGraph {
    fn from_adjacency_sets(
        sets: Vec<std::collections::BTreeSet<AgentId>>,
        meta: GeneratorMeta,
    ) -> Self {
        let n = sets.len();
        let adjacency: Vec<Vec<AgentId>> =
            sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut edges = Vec::new();
        for (u, neighbors) in adjacency.iter().enumerate() {
            for &v in neighbors {
                if (u as AgentId) < v {
                    edges.push((u as AgentId, v));
                }
            }
        }
        NetworkGraph {
            n,
            edges,
            adjacency,
            meta,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(AgentId, AgentId)] {
        &self.edges
    }

    pub fn neighbors(&self, node: AgentId) -> &[AgentId] {
        &self.adjacency[node as usize]
    }

    pub fn degree(&self, node: AgentId) -> usize {
        self.adjacency[node as usize].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn meta(&self) -> GeneratorMeta {
        self.meta
    }

    /// Adjacency-list text, one line per node: `<id>: <space-separated ids>`.
    pub fn to_adjacency_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for (id, neighbors) in self.adjacency.iter().enumerate() {
            write!(out, "{id}:").unwrap();
            for v in neighbors {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Erdős–Rényi `G(n, p)`: every one of the `n(n-1)/2` pairs becomes an edge
/// independently with probability `p`.
pub fn gen_random_graph(n: usize, p: f64, rng: &mut RunRng) -> Result<NetworkGraph> {
    if n < 1 {
        return Err(Error::config("random graph needs at least one node"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config(format!(
            "edge probability must be in [0, 1] (got {p})"
        )));
    }
    let mut sets = vec![std::collections::BTreeSet::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                sets[u].insert(v as AgentId);
                sets[v].insert(u as AgentId);
            }
        }
    }
    Ok(NetworkGraph::from_adjacency_sets(
        sets,
        GeneratorMeta::Random { p },
    ))
}

/// Watts–Strogatz small world: a ring lattice joining each node to `k/2`
/// neighbors per side, then each original edge's far endpoint is redrawn
/// uniformly with probability `beta`, avoiding self-loops and duplicates.
/// Rewiring preserves the edge count `n*k/2` exactly; an edge is left in
/// place when no valid new endpoint exists.
pub fn gen_small_world(n: usize, k: usize, beta: f64, rng: &mut RunRng) -> Result<NetworkGraph> {
    if k < 2 || !k.is_multiple_of(2) || k >= n {
        return Err(Error::config(format!(
            "small-world graph needs an even k with 2 <= k < n (got n = {n}, k = {k})"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::config(format!(
            "rewiring probability must be in [0, 1] (got {beta})"
        )));
    }

    let mut sets = vec![std::collections::BTreeSet::new(); n];
    let mut ring = Vec::with_capacity(n * k / 2);
    for offset in 1..=(k / 2) {
        for u in 0..n {
            let v = (u + offset) % n;
            sets[u].insert(v as AgentId);
            sets[v].insert(u as AgentId);
            ring.push((u, v));
        }
    }

    for (u, v) in ring {
        if !rng.gen_bool(beta) {
            continue;
        }
        if sets[u].len() >= n - 1 {
            continue; // u already adjacent to everyone; nothing to rewire to
        }
        // Redraw the far endpoint until it lands on a non-neighbor.
        let w = loop {
            let candidate = rng.gen_range(0..n);
            if candidate != u && !sets[u].contains(&(candidate as AgentId)) {
                break candidate;
            }
        };
        sets[u].remove(&(v as AgentId));
        sets[v].remove(&(u as AgentId));
        sets[u].insert(w as AgentId);
        sets[w].insert(u as AgentId);
    }

    Ok(NetworkGraph::from_adjacency_sets(
        sets,
        GeneratorMeta::SmallWorld {
            k: k as u32,
            beta,
        },
    ))
}

/// Barabási–Albert preferential attachment: start from an `m0`-clique, then
/// each arriving node attaches `m` edges to distinct existing nodes chosen
/// proportionally to current degree.
///
/// Degree-proportional choice samples a uniformly random endpoint from the
/// running edge-endpoint list (each edge contributes both ends), which is
/// exact and needs no floating-point cumulative sums. While the graph has no
/// edges yet (an `m0 = 1` seed), attachment falls back to a uniform choice
/// among existing nodes.
pub fn gen_scale_free(n: usize, m0: usize, m: usize, rng: &mut RunRng) -> Result<NetworkGraph> {
    if !(1 <= m && m <= m0 && m0 <= n) {
        return Err(Error::config(format!(
            "scale-free graph needs n >= m0 >= m >= 1 (got n = {n}, m0 = {m0}, m = {m})"
        )));
    }

    let mut sets = vec![std::collections::BTreeSet::new(); n];
    let mut endpoints: Vec<AgentId> = Vec::with_capacity(2 * (m0 * (m0 - 1) / 2 + (n - m0) * m));
    for u in 0..m0 {
        for v in (u + 1)..m0 {
            sets[u].insert(v as AgentId);
            sets[v].insert(u as AgentId);
            endpoints.push(u as AgentId);
            endpoints.push(v as AgentId);
        }
    }

    for arrival in m0..n {
        let mut targets = std::collections::BTreeSet::new();
        while targets.len() < m {
            let t = if endpoints.is_empty() {
                rng.gen_range(0..arrival) as AgentId
            } else {
                endpoints[rng.gen_range(0..endpoints.len())]
            };
            targets.insert(t);
        }
        for &t in &targets {
            sets[arrival].insert(t);
            sets[t as usize].insert(arrival as AgentId);
            endpoints.push(arrival as AgentId);
            endpoints.push(t);
        }
    }

    Ok(NetworkGraph::from_adjacency_sets(
        sets,
        GeneratorMeta::ScaleFree {
            m0: m0 as u32,
            m: m as u32,
        },
    ))
}
