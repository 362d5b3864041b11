//! Strongly connected components of a dependency graph, their loop numbers,
//! the condensation poset and cyclic partitions of single components.
//!
//! The graph is read off a [`BoolMatrix`] `A` where `A[i][j] = 1` means
//! `x_j` feeds `f_i`, i.e. the edge `j -> i`.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::matrix::BoolMatrix;

pub const DEFAULT_ANTICHAIN_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("too many components: {t} exceeds the cap of {cap}")]
    TooManyComponents { t: usize, cap: usize },
    #[error("component {component} is trivial (single vertex without a self-loop)")]
    TrivialComponent { component: usize },
    #[error("{k} does not divide the loop number {loop_number}")]
    NotADivisor { k: u64, loop_number: u64 },
    #[error("component index {0} out of range")]
    NoSuchComponent(usize),
}

/// Successor lists, edge `j -> i` whenever `A[i][j]`.
fn successors(a: &BoolMatrix) -> Vec<Vec<usize>> {
    let n = a.dim();
    let mut succ = vec![Vec::new(); n];
    for i in 0..n {
        for j in a.row_entries(i) {
            succ[j].push(i);
        }
    }
    succ
}

/// Tarjan's algorithm, iterative. Returns a component id per vertex.
fn tarjan(succ: &[Vec<usize>]) -> (usize, Vec<usize>) {
    const UNSEEN: usize = usize::MAX;
    let n = succ.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; n];
    let mut next_index = 0;
    let mut count = 0;
    // (vertex, next successor position)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = succ[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp[w] = count;
                    if w == v {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    (count, comp)
}

/// BFS distances from `root` restricted to `members`.
fn depths(
    succ: &[Vec<usize>],
    members: &[usize],
    in_comp: &[bool],
    root: usize,
) -> Vec<Option<u64>> {
    let mut depth = vec![None; succ.len()];
    depth[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let du = depth[u].expect("queued vertices have a depth");
        for &v in &succ[u] {
            if in_comp[v] && depth[v].is_none() {
                depth[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    debug_assert!(members.iter().all(|&v| depth[v].is_some()));
    depth
}

fn membership(n: usize, members: &[usize]) -> Vec<bool> {
    let mut in_comp = vec![false; n];
    for &v in members {
        in_comp[v] = true;
    }
    in_comp
}

/// Loop number (index of imprimitivity) of the strongly connected subgraph
/// induced by `component`: the gcd of `depth(u) + 1 - depth(v)` over the
/// edges `u -> v` inside it. Zero for a single vertex without a self-loop.
pub fn loop_number_scc(a: &BoolMatrix, component: &[usize]) -> u64 {
    let succ = successors(a);
    loop_number_with(&succ, component)
}

fn loop_number_with(succ: &[Vec<usize>], component: &[usize]) -> u64 {
    let Some(&root) = component.iter().min() else {
        return 0;
    };
    let in_comp = membership(succ.len(), component);
    let depth = depths(succ, component, &in_comp, root);
    let mut g = 0u64;
    for &u in component {
        let du = depth[u].expect("strongly connected") as i64;
        for &v in &succ[u] {
            if in_comp[v] {
                let dv = depth[v].expect("strongly connected") as i64;
                g = g.gcd(&(du + 1 - dv).unsigned_abs());
            }
        }
    }
    g
}

/// Strongly connected components in a topological order of the condensation:
/// if an edge runs from component `i` to component `j != i` then `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SccDecomposition {
    /// 0-based vertex lists, each sorted.
    pub components: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
    pub loop_numbers: Vec<u64>,
    /// lcm of the non-zero loop numbers (0 if every component is trivial).
    pub graph_loop_number: u64,
}

pub fn scc_decompose(a: &BoolMatrix) -> SccDecomposition {
    let n = a.dim();
    let succ = successors(a);
    let (count, raw) = tarjan(&succ);

    let mut members = vec![Vec::new(); count];
    for v in 0..n {
        members[raw[v]].push(v);
    }
    // Kahn's algorithm on the condensation, ties broken by smallest vertex.
    let mut indegree = vec![0usize; count];
    let mut out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); count];
    for u in 0..n {
        for &v in &succ[u] {
            let (cu, cv) = (raw[u], raw[v]);
            if cu != cv && out[cu].insert(cv) {
                indegree[cv] += 1;
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..count)
        .filter(|&c| indegree[c] == 0)
        .map(|c| Reverse((members[c][0], c)))
        .collect();
    let mut order = Vec::with_capacity(count);
    while let Some(Reverse((_, c))) = ready.pop() {
        order.push(c);
        for &d in &out[c] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.push(Reverse((members[d][0], d)));
            }
        }
    }

    let components: Vec<Vec<usize>> = order.iter().map(|&c| members[c].clone()).collect();
    let mut component_of = vec![0; n];
    for (idx, comp) in components.iter().enumerate() {
        for &v in comp {
            component_of[v] = idx;
        }
    }
    let loop_numbers: Vec<u64> = components
        .iter()
        .map(|c| loop_number_with(&succ, c))
        .collect();
    let graph_loop_number = loop_numbers
        .iter()
        .filter(|&&l| l > 0)
        .fold(0u64, |acc, &l| if acc == 0 { l } else { acc.lcm(&l) });
    SccDecomposition {
        components,
        component_of,
        loop_numbers,
        graph_loop_number,
    }
}

impl SccDecomposition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.components.len() == 1
    }

    /// Indices of components with loop number 0.
    pub fn trivial_components(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.loop_numbers[i] == 0)
            .collect()
    }

    /// Partition of component `component` into `k` classes such that every
    /// internal edge goes from class `i` to class `i + 1 mod k`.
    pub fn cyclic_partition(
        &self,
        a: &BoolMatrix,
        component: usize,
        k: u64,
    ) -> Result<CyclicPartition, GraphError> {
        let members = self
            .components
            .get(component)
            .ok_or(GraphError::NoSuchComponent(component))?;
        let c = self.loop_numbers[component];
        if c == 0 {
            return Err(GraphError::TrivialComponent { component });
        }
        if k == 0 || !c.is_multiple_of(k) {
            return Err(GraphError::NotADivisor { k, loop_number: c });
        }
        let succ = successors(a);
        let in_comp = membership(a.dim(), members);
        let depth = depths(&succ, members, &in_comp, members[0]);
        let mut classes = vec![Vec::new(); k as usize];
        for &v in members {
            classes[(depth[v].expect("strongly connected") % k) as usize].push(v);
        }
        Ok(CyclicPartition {
            component,
            k,
            classes,
        })
    }
}

/// Classes `W_1, ..., W_k` (0-based here) of a cyclic partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CyclicPartition {
    pub component: usize,
    pub k: u64,
    pub classes: Vec<Vec<usize>>,
}

impl CyclicPartition {
    /// Class index of every vertex of the component, `None` outside it.
    pub fn class_of(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (i, class) in self.classes.iter().enumerate() {
            for &v in class {
                out[v] = Some(i);
            }
        }
        out
    }
}

/// Components ordered by reachability: `i ⪯ j` when there is a path from
/// component `i` to component `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensationPoset {
    size: usize,
    /// `leq[i][j]` iff `i ⪯ j` (reflexive, transitive).
    leq: Vec<Vec<bool>>,
    /// Direct edges between distinct components.
    covers: Vec<(usize, usize)>,
}

pub fn condensation_poset(d: &SccDecomposition, a: &BoolMatrix) -> CondensationPoset {
    let t = d.len();
    let mut direct = BTreeSet::new();
    for i in 0..a.dim() {
        for j in a.row_entries(i) {
            let (from, to) = (d.component_of[j], d.component_of[i]);
            if from != to {
                direct.insert((from, to));
            }
        }
    }
    CondensationPoset::from_edges(t, direct.into_iter().collect())
}

impl CondensationPoset {
    /// Builds the poset generated by `edges`, which must respect `i < j`
    /// (a topological numbering).
    pub fn from_edges(size: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut leq = vec![vec![false; size]; size];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(i, j) in &edges {
            assert!(i < j, "edges must follow the topological numbering");
        }
        // Process targets in reverse topological order so every successor's
        // row is already complete.
        for i in (0..size).rev() {
            for &(from, to) in &edges {
                if from == i {
                    let above = leq[to].clone();
                    for (x, &b) in above.iter().enumerate() {
                        if b {
                            leq[i][x] = true;
                        }
                    }
                }
            }
        }
        CondensationPoset {
            size,
            leq,
            covers: edges,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i][j]
    }

    pub fn lt(&self, i: usize, j: usize) -> bool {
        i != j && self.leq[i][j]
    }

    pub fn comparable(&self, i: usize, j: usize) -> bool {
        self.leq[i][j] || self.leq[j][i]
    }

    /// Direct inter-component edges, sorted.
    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    /// `J^⪯` (or `J^≺` when `strict`): components above some member of `j`.
    pub fn up_closure(&self, j: &BTreeSet<usize>, strict: bool) -> BTreeSet<usize> {
        (0..self.size)
            .filter(|&k| {
                j.iter().any(|&x| {
                    if strict {
                        self.lt(x, k)
                    } else {
                        self.leq(x, k)
                    }
                })
            })
            .collect()
    }

    /// `J^⪰` (or `J^≻` when `strict`): components below some member of `j`.
    pub fn down_closure(&self, j: &BTreeSet<usize>, strict: bool) -> BTreeSet<usize> {
        (0..self.size)
            .filter(|&k| {
                j.iter().any(|&x| {
                    if strict {
                        self.lt(k, x)
                    } else {
                        self.leq(k, x)
                    }
                })
            })
            .collect()
    }

    pub fn is_antichain(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(a, &x)| set[a + 1..].iter().all(|&y| !self.comparable(x, y)))
    }

    /// All inclusion-maximal antichains, each sorted, in lexicographic order.
    pub fn maximal_antichains(&self, cap: usize) -> Result<Vec<Vec<usize>>, GraphError> {
        if self.size > cap {
            return Err(GraphError::TooManyComponents { t: self.size, cap });
        }
        let mut out = Vec::new();
        let mut chosen = Vec::new();
        self.extend_antichain(0, &mut chosen, &mut out);
        out.sort();
        Ok(out)
    }

    fn extend_antichain(&self, i: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == self.size {
            let maximal = (0..self.size)
                .all(|k| chosen.contains(&k) || chosen.iter().any(|&c| self.comparable(c, k)));
            if maximal && !chosen.is_empty() {
                out.push(chosen.clone());
            }
            return;
        }
        if chosen.iter().all(|&c| !self.comparable(c, i)) {
            chosen.push(i);
            self.extend_antichain(i + 1, chosen, out);
            chosen.pop();
            // Leaving `i` out only helps when something later can block it.
            if !((i + 1)..self.size).any(|k| self.comparable(i, k)) {
                return;
            }
        }
        self.extend_antichain(i + 1, chosen, out);
    }
}
