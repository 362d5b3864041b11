//! Ground truth by exhaustive enumeration of the phase space, plus the graph
//! transforms and instance generators used to exercise the predictions.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cycles::CyclePolynomial;
use crate::graph::{condensation_poset, scc_decompose, SccDecomposition};
use crate::network::{BooleanNetwork, NetworkError, OpKind, PackedStep, State};

/// Default largest network the simulator will enumerate.
pub const DEFAULT_STATE_CAP: usize = 26;
/// Hard ceiling regardless of configuration (state indices are `u32`-sized).
pub const MAX_STATE_CAP: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("network has {n} nodes, above the simulation cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("dependency graph is not strongly connected")]
    NotStronglyConnected,
    #[error("dependency graph is a single vertex without a self-loop")]
    TrivialComponent,
    #[error("{k} does not divide the loop number {loop_number}")]
    NotADivisor { k: u64, loop_number: u64 },
    #[error("networks use different operators")]
    MixedOperators,
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Aggregate view of a phase space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseSpaceSummary {
    pub cycle_structure: CyclePolynomial,
    /// Least positive `s` such that `f^s(u)` is periodic for every `u`.
    pub height: u64,
    /// lcm of the limit-cycle lengths.
    pub period: u64,
    /// Weakly connected components, one per limit cycle.
    pub component_count: u64,
    pub fixed_point_count: u64,
}

/// A limit cycle as a sequence of encoded states in orbit order, rotated so
/// the smallest encoding comes first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LimitCycle {
    pub states: Vec<u64>,
}

impl LimitCycle {
    fn normalized(mut states: Vec<u64>) -> Self {
        let pos = states
            .iter()
            .enumerate()
            .min_by_key(|(_, &s)| s)
            .map_or(0, |(i, _)| i);
        states.rotate_left(pos);
        LimitCycle { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state_set(&self) -> BTreeSet<u64> {
        self.states.iter().copied().collect()
    }
}

/// Full result of an exhaustive run: the summary and every limit cycle.
#[derive(Debug, Clone)]
pub struct PhaseSpace {
    pub node_count: usize,
    pub summary: PhaseSpaceSummary,
    /// Sorted by their first (smallest) state.
    pub cycles: Vec<LimitCycle>,
}

impl PhaseSpace {
    /// Limit cycles as state sets, sorted.
    pub fn cycle_sets(&self) -> Vec<BTreeSet<u64>> {
        self.cycles.iter().map(LimitCycle::state_set).collect()
    }
}

/// Bytes of working memory an enumeration of `n` nodes needs.
pub fn memory_estimate(n: usize) -> u64 {
    (1u64 << n) * std::mem::size_of::<u16>() as u64
}

pub fn enumerate_phase_space(net: &BooleanNetwork) -> Result<PhaseSpace, OracleError> {
    enumerate_phase_space_capped(net, DEFAULT_STATE_CAP)
}

/// Walks the functional graph `u -> f(u)` over all `2^n` states.
///
/// Each state is unvisited, on the current path, or finished with a known
/// distance to its limit cycle. A walk stops at the first non-unvisited
/// state: hitting the current path closes a new cycle, hitting a finished
/// state extends its distance back along the path.
pub fn enumerate_phase_space_capped(
    net: &BooleanNetwork,
    cap: usize,
) -> Result<PhaseSpace, OracleError> {
    const UNSEEN: u16 = u16::MAX;
    const ON_PATH: u16 = u16::MAX - 1;

    let n = net.node_count();
    let cap = cap.min(MAX_STATE_CAP);
    if n > cap {
        return Err(OracleError::TooLarge { n, cap });
    }
    let step = PackedStep::new(net);
    let total = 1u64 << n;
    let mut dist = vec![UNSEEN; total as usize];
    let mut path: Vec<u64> = Vec::new();
    let mut cycles = Vec::new();
    let mut max_transient = 0u16;

    for start in 0..total {
        if dist[start as usize] != UNSEEN {
            continue;
        }
        path.clear();
        let mut x = start;
        while dist[x as usize] == UNSEEN {
            dist[x as usize] = ON_PATH;
            path.push(x);
            x = step.step(x);
        }
        let (tail_len, base) = if dist[x as usize] == ON_PATH {
            let pos = path
                .iter()
                .rposition(|&s| s == x)
                .expect("state is on the path");
            for &s in &path[pos..] {
                dist[s as usize] = 0;
            }
            cycles.push(LimitCycle::normalized(path[pos..].to_vec()));
            (pos, 0u16)
        } else {
            (path.len(), dist[x as usize])
        };
        for (offset, &s) in path[..tail_len].iter().rev().enumerate() {
            let d = base + offset as u16 + 1;
            dist[s as usize] = d;
            max_transient = max_transient.max(d);
        }
    }

    cycles.sort();
    let mut structure = CyclePolynomial::zero();
    for c in &cycles {
        structure.add_term(c.len() as u64, BigInt::one());
    }
    let period = cycles
        .iter()
        .fold(1u64, |acc, c| acc.lcm(&(c.len() as u64)));
    let fixed = cycles.iter().filter(|c| c.len() == 1).count() as u64;
    let summary = PhaseSpaceSummary {
        cycle_structure: structure,
        height: u64::from(max_transient).max(1),
        period,
        component_count: cycles.len() as u64,
        fixed_point_count: fixed,
    };
    Ok(PhaseSpace {
        node_count: n,
        summary,
        cycles,
    })
}

/// Phase space in DOT: one node per state labelled with its bit string
/// (`x1` first), one edge per transition, limit-cycle states drawn doubled.
pub fn phase_space_dot(net: &BooleanNetwork, cap: usize) -> Result<String, OracleError> {
    let space = enumerate_phase_space_capped(net, cap)?;
    let n = net.node_count();
    let periodic: BTreeSet<u64> = space
        .cycles
        .iter()
        .flat_map(|c| c.states.iter().copied())
        .collect();
    let step = PackedStep::new(net);
    let mut out = String::from("digraph phase_space {\n");
    for u in 0..1u64 << n {
        let label = State::from_index(u, n);
        let shape = if periodic.contains(&u) {
            ", shape=doublecircle"
        } else {
            ""
        };
        writeln!(out, "  s{u} [label=\"{label}\"{shape}];").expect("string write");
    }
    for u in 0..1u64 << n {
        writeln!(out, "  s{u} -> s{};", step.step(u)).expect("string write");
    }
    out.push_str("}\n");
    Ok(out)
}

/// `D(k)` for a strongly connected network: every state constant on each
/// class of the `k`-cyclic partition. Sorted by encoding.
pub fn periodic_points_phi(net: &BooleanNetwork, k: u64) -> Result<Vec<State>, OracleError> {
    let a = net.dependency_graph();
    let d = scc_decompose(&a);
    if !d.is_strongly_connected() {
        return Err(OracleError::NotStronglyConnected);
    }
    let c = d.loop_numbers[0];
    if c == 0 {
        return Err(OracleError::TrivialComponent);
    }
    if k == 0 || !c.is_multiple_of(k) {
        return Err(OracleError::NotADivisor { k, loop_number: c });
    }
    if k >= 63 {
        return Err(OracleError::InvalidParameters(format!(
            "2^{k} states is too many to list"
        )));
    }
    let partition = d
        .cyclic_partition(&a, 0, k)
        .map_err(|_| OracleError::NotADivisor { k, loop_number: c })?;
    let n = net.node_count();
    let mut out: Vec<State> = (0..1u64 << k)
        .map(|values| {
            let mut bits = vec![false; n];
            for (class, members) in partition.classes.iter().enumerate() {
                for &v in members {
                    bits[v] = (values >> class) & 1 == 1;
                }
            }
            State::new(bits)
        })
        .collect();
    out.sort_by_key(State::index);
    Ok(out)
}

fn rebuild(
    net: &BooleanNetwork,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<BooleanNetwork, NetworkError> {
    let inputs = (0..net.node_count())
        .map(|i| {
            net.inputs(i)
                .iter()
                .copied()
                .filter(|&j| keep(j, i))
                .collect()
        })
        .collect();
    BooleanNetwork::new(net.op_kind(), inputs)
}

/// Keeps only the lexicographically smallest `(source, target)` edge for each
/// ordered pair of distinct components; edges inside components are kept.
pub fn reduce_inter_component_edges(net: &BooleanNetwork) -> BooleanNetwork {
    let d = scc_decompose(&net.dependency_graph());
    let mut kept = BTreeSet::new();
    let mut seen_pairs = BTreeSet::new();
    for (s, t) in net.edges() {
        let pair = (d.component_of[s], d.component_of[t]);
        if pair.0 == pair.1 || seen_pairs.insert(pair) {
            kept.insert((s, t));
        }
    }
    rebuild(net, |s, t| kept.contains(&(s, t))).expect("every node keeps at least one input")
}

/// Removes every edge between distinct components, giving the disjoint union
/// of the components. Fails if some component is trivial.
pub fn disconnect_components(net: &BooleanNetwork) -> Result<BooleanNetwork, OracleError> {
    let d = scc_decompose(&net.dependency_graph());
    if !d.trivial_components().is_empty() {
        return Err(OracleError::TrivialComponent);
    }
    Ok(rebuild(net, |s, t| d.component_of[s] == d.component_of[t])?)
}

/// Adds an edge from every vertex of `G_i` to every vertex of `G_j`
/// whenever `G_i ≺ G_j`.
pub fn saturate_comparable_components(net: &BooleanNetwork) -> BooleanNetwork {
    let a = net.dependency_graph();
    let d = scc_decompose(&a);
    let poset = condensation_poset(&d, &a);
    let inputs = (0..net.node_count())
        .map(|i| {
            let ci = d.component_of[i];
            let mut row: BTreeSet<usize> = net.inputs(i).iter().copied().collect();
            for (cj, members) in d.components.iter().enumerate() {
                if poset.lt(cj, ci) {
                    row.extend(members.iter().copied());
                }
            }
            row.into_iter().collect()
        })
        .collect();
    BooleanNetwork::new(net.op_kind(), inputs).expect("adding inputs keeps the network valid")
}

/// Network whose dependency graph is the disjoint union of the two inputs;
/// `b`'s nodes are renumbered after `a`'s.
pub fn disjoint_union(
    a: &BooleanNetwork,
    b: &BooleanNetwork,
) -> Result<BooleanNetwork, OracleError> {
    if a.op_kind() != b.op_kind() {
        return Err(OracleError::MixedOperators);
    }
    let shift = a.node_count();
    let inputs = a
        .all_inputs()
        .iter()
        .cloned()
        .chain(
            b.all_inputs()
                .iter()
                .map(|row| row.iter().map(|j| j + shift).collect()),
        )
        .collect();
    Ok(BooleanNetwork::new(a.op_kind(), inputs)?)
}

/// Seeded random conjunctive network.
///
/// With `scc_sizes`, vertices are shuffled into blocks, each block gets a
/// planted directed Hamiltonian cycle (a self-loop for size 1), and every
/// other pair `(u, v)` with `u`'s block not after `v`'s in a random block
/// order becomes an edge with probability `density`. Without it, every
/// ordered pair is an edge with probability `density` and nodes left
/// without inputs are redrawn.
pub fn random_network(
    n: usize,
    scc_sizes: Option<&[usize]>,
    density: f64,
    seed: u64,
) -> Result<BooleanNetwork, OracleError> {
    if n == 0 {
        return Err(OracleError::InvalidParameters(
            "node count must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(OracleError::InvalidParameters(format!(
            "density {density} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];

    match scc_sizes {
        Some(sizes) => {
            let sum: usize = sizes.iter().sum();
            if sizes.is_empty() || sizes.contains(&0) {
                return Err(OracleError::InvalidParameters(
                    "component sizes must be positive".into(),
                ));
            }
            if sum != n {
                return Err(OracleError::InvalidParameters(format!(
                    "component sizes sum to {sum} but the network has {n} nodes"
                )));
            }
            let mut vertices: Vec<usize> = (0..n).collect();
            vertices.shuffle(&mut rng);
            let mut order: Vec<usize> = (0..sizes.len()).collect();
            order.shuffle(&mut rng);
            let mut rank = vec![0usize; n];
            let mut offset = 0;
            for (block, &size) in sizes.iter().enumerate() {
                let members = &vertices[offset..offset + size];
                offset += size;
                for (i, &v) in members.iter().enumerate() {
                    let next = members[(i + 1) % size];
                    inputs[next].insert(v);
                    rank[v] = order[block];
                }
            }
            for u in 0..n {
                for v in 0..n {
                    if rank[u] <= rank[v] && !inputs[v].contains(&u) && rng.gen_bool(density) {
                        inputs[v].insert(u);
                    }
                }
            }
        }
        None => {
            for row in inputs.iter_mut() {
                for u in 0..n {
                    if rng.gen_bool(density) {
                        row.insert(u);
                    }
                }
            }
            for row in inputs.iter_mut() {
                for _ in 0..32 {
                    if !row.is_empty() {
                        break;
                    }
                    for u in 0..n {
                        if rng.gen_bool(density) {
                            row.insert(u);
                        }
                    }
                }
                if row.is_empty() {
                    row.insert(rng.gen_range(0..n));
                }
            }
        }
    }
    Ok(BooleanNetwork::new(
        OpKind::Conjunctive,
        inputs
            .into_iter()
            .map(|r| r.into_iter().collect())
            .collect(),
    )?)
}

/// Runs both networks and their disjoint union through the simulator and
/// checks the product rules: structure multiplies, heights take the max,
/// periods take the lcm.
pub fn cross_product_check(
    a: &BooleanNetwork,
    b: &BooleanNetwork,
    cap: usize,
) -> Result<bool, OracleError> {
    if a.node_count() + b.node_count() > cap.min(MAX_STATE_CAP) {
        return Err(OracleError::TooLarge {
            n: a.node_count() + b.node_count(),
            cap,
        });
    }
    let union = disjoint_union(a, b)?;
    let sa = enumerate_phase_space_capped(a, cap)?.summary;
    let sb = enumerate_phase_space_capped(b, cap)?.summary;
    let su = enumerate_phase_space_capped(&union, cap)?.summary;
    Ok(
        su.cycle_structure == &sa.cycle_structure * &sb.cycle_structure
            && su.height == sa.height.max(sb.height)
            && su.period == sa.period.lcm(&sb.period),
    )
}

/// Decomposition of a network's dependency graph; shorthand used by callers
/// that only hold the network.
pub fn decompose(net: &BooleanNetwork) -> SccDecomposition {
    scc_decompose(&net.dependency_graph())
}
