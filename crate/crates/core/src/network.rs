//! Conjunctive and disjunctive Boolean networks: representation, the text
//! file format, evaluation and the AND/OR duality.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::Serialize;
use thiserror::Error;

use crate::matrix::BoolMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("line {line}: malformed header: {reason}")]
    Header { line: usize, reason: String },
    #[error("line {line}: unsupported operator `{op}` (expected AND or OR)")]
    UnsupportedOperator { line: usize, op: String },
    #[error("line {line}: malformed node line: {reason}")]
    NodeLine { line: usize, reason: String },
    #[error("line {line}: node index {index} out of range 1..={n}")]
    IndexOutOfRange { line: usize, index: usize, n: usize },
    #[error("node {node} has an empty input list (constant function)")]
    ConstantFunction { node: usize },
    #[error("line {line}: node {node} defined twice")]
    DuplicateNode { line: usize, node: usize },
    #[error("missing line for node {node}")]
    MissingNode { node: usize },
    #[error("network must have at least one node")]
    Empty,
    #[error("state has {got} bits but the network has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("network is already conjunctive")]
    AlreadyConjunctive,
}

/// Which Boolean operator combines the inputs of every node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OpKind {
    #[serde(rename = "AND")]
    Conjunctive,
    #[serde(rename = "OR")]
    Disjunctive,
}

impl OpKind {
    pub fn keyword(self) -> &'static str {
        match self {
            OpKind::Conjunctive => "AND",
            OpKind::Disjunctive => "OR",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A point of the phase space, `bits[i]` is the value of `x_{i+1}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(Vec<bool>);

impl State {
    pub fn new(bits: Vec<bool>) -> Self {
        State(bits)
    }

    pub fn zeros(n: usize) -> Self {
        State(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        State(vec![true; n])
    }

    /// Decodes the integer encoding used by the simulator: bit `i` holds `x_{i+1}`.
    pub fn from_index(index: u64, n: usize) -> Self {
        State((0..n).map(|i| (index >> i) & 1 == 1).collect())
    }

    pub fn index(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Flips every coordinate.
    pub fn complement(&self) -> State {
        State(self.0.iter().map(|b| !b).collect())
    }

    /// Bitwise partial order `self <= other`.
    pub fn le(&self, other: &State) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for State {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .filter(|c| !matches!(c, ',' | ' ' | '(' | ')'))
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid state character `{other}`")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(State)
    }
}

/// A Boolean network in which every coordinate function is the AND (or
/// every one is the OR) of a non-empty set of variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BooleanNetwork {
    op: OpKind,
    /// 0-based, sorted, de-duplicated.
    inputs: Vec<Vec<usize>>,
}

impl BooleanNetwork {
    /// Builds a network from 0-based input lists. Duplicates are removed.
    pub fn new(op: OpKind, inputs: Vec<Vec<usize>>) -> Result<Self, NetworkError> {
        let n = inputs.len();
        if n == 0 {
            return Err(NetworkError::Empty);
        }
        let mut canonical = Vec::with_capacity(n);
        for (i, list) in inputs.into_iter().enumerate() {
            if list.is_empty() {
                return Err(NetworkError::ConstantFunction { node: i + 1 });
            }
            let set: BTreeSet<usize> = list.iter().copied().collect();
            if let Some(&bad) = set.iter().find(|&&j| j >= n) {
                return Err(NetworkError::IndexOutOfRange {
                    line: 0,
                    index: bad + 1,
                    n,
                });
            }
            if set.len() != list.len() {
                warn!("node {}: duplicate inputs removed", i + 1);
            }
            canonical.push(set.into_iter().collect());
        }
        Ok(BooleanNetwork {
            op,
            inputs: canonical,
        })
    }

    /// Convenience constructor taking 1-based input lists as written in the file format.
    pub fn from_one_based(op: OpKind, inputs: &[&[usize]]) -> Result<Self, NetworkError> {
        let n = inputs.len();
        let mut zero_based = Vec::with_capacity(n);
        for list in inputs {
            let mut row = Vec::with_capacity(list.len());
            for &j in *list {
                if j == 0 || j > n {
                    return Err(NetworkError::IndexOutOfRange {
                        line: 0,
                        index: j,
                        n,
                    });
                }
                row.push(j - 1);
            }
            zero_based.push(row);
        }
        Self::new(op, zero_based)
    }

    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or(NetworkError::Header {
            line: 1,
            reason: "missing header".into(),
        })?;
        let mut fields = header.split_whitespace();
        let n: usize =
            fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| NetworkError::Header {
                    line: hline,
                    reason: format!("expected `<n> <AND|OR>`, got `{header}`"),
                })?;
        let op = match fields.next() {
            Some(w) if w.eq_ignore_ascii_case("AND") => OpKind::Conjunctive,
            Some(w) if w.eq_ignore_ascii_case("OR") => OpKind::Disjunctive,
            Some(w) => {
                return Err(NetworkError::UnsupportedOperator {
                    line: hline,
                    op: w.to_string(),
                })
            }
            None => {
                return Err(NetworkError::Header {
                    line: hline,
                    reason: "missing operator".into(),
                })
            }
        };
        if let Some(extra) = fields.next() {
            return Err(NetworkError::Header {
                line: hline,
                reason: format!("unexpected token `{extra}`"),
            });
        }
        if n == 0 {
            return Err(NetworkError::Empty);
        }

        let mut inputs: Vec<Option<Vec<usize>>> = vec![None; n];
        for (line, body) in lines {
            let (lhs, rhs) = body.split_once(':').ok_or_else(|| NetworkError::NodeLine {
                line,
                reason: format!("expected `<i>: <j1> <j2> ...`, got `{body}`"),
            })?;
            let node: usize = lhs.trim().parse().map_err(|_| NetworkError::NodeLine {
                line,
                reason: format!("bad node index `{}`", lhs.trim()),
            })?;
            if node == 0 || node > n {
                return Err(NetworkError::IndexOutOfRange {
                    line,
                    index: node,
                    n,
                });
            }
            if inputs[node - 1].is_some() {
                return Err(NetworkError::DuplicateNode { line, node });
            }
            let mut row = Vec::new();
            for tok in rhs.split_whitespace() {
                let j: usize = tok.parse().map_err(|_| NetworkError::NodeLine {
                    line,
                    reason: format!("bad input index `{tok}`"),
                })?;
                if j == 0 || j > n {
                    return Err(NetworkError::IndexOutOfRange { line, index: j, n });
                }
                row.push(j - 1);
            }
            if row.is_empty() {
                return Err(NetworkError::ConstantFunction { node });
            }
            inputs[node - 1] = Some(row);
        }
        let inputs = inputs
            .into_iter()
            .enumerate()
            .map(|(i, row)| row.ok_or(NetworkError::MissingNode { node: i + 1 }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(op, inputs)
    }

    pub fn node_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn op_kind(&self) -> OpKind {
        self.op
    }

    /// 0-based inputs of node `i` (0-based), sorted ascending.
    pub fn inputs(&self, i: usize) -> &[usize] {
        &self.inputs[i]
    }

    pub fn all_inputs(&self) -> &[Vec<usize>] {
        &self.inputs
    }

    /// Same dependency lists, different operator.
    pub fn with_op(&self, op: OpKind) -> BooleanNetwork {
        BooleanNetwork {
            op,
            inputs: self.inputs.clone(),
        }
    }

    pub fn evaluate(&self, s: &State) -> Result<State, NetworkError> {
        if s.len() != self.node_count() {
            return Err(NetworkError::LengthMismatch {
                expected: self.node_count(),
                got: s.len(),
            });
        }
        let bits = s.bits();
        let out = self
            .inputs
            .iter()
            .map(|row| match self.op {
                OpKind::Conjunctive => row.iter().all(|&j| bits[j]),
                OpKind::Disjunctive => row.iter().any(|&j| bits[j]),
            })
            .collect();
        Ok(State(out))
    }

    /// The conjunctive network on the same graph. Errors on a conjunctive input.
    pub fn to_conjunctive(&self) -> Result<BooleanNetwork, NetworkError> {
        match self.op {
            OpKind::Conjunctive => Err(NetworkError::AlreadyConjunctive),
            OpKind::Disjunctive => Ok(self.with_op(OpKind::Conjunctive)),
        }
    }

    /// Like [`to_conjunctive`](Self::to_conjunctive) but passes conjunctive networks through.
    pub fn conjunctive_image(&self) -> BooleanNetwork {
        self.with_op(OpKind::Conjunctive)
    }

    /// `A[i][j] = 1` iff `x_j` is an input of `f_i`.
    pub fn dependency_graph(&self) -> BoolMatrix {
        let n = self.node_count();
        let mut m = BoolMatrix::zeros(n);
        for (i, row) in self.inputs.iter().enumerate() {
            for &j in row {
                m.set(i, j, true);
            }
        }
        m
    }

    /// Edges `(source, target)` of the dependency graph, 0-based, in
    /// lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .inputs
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&j| (j, i)))
            .collect();
        e.sort_unstable();
        e
    }

    /// The network whose coordinate functions are `f ∘ g`, computed by
    /// substituting the input sets of `inner` into those of `self`.
    ///
    /// Only meaningful when both share the operator; the result keeps `self`'s.
    pub fn compose(&self, inner: &BooleanNetwork) -> BooleanNetwork {
        assert_eq!(self.node_count(), inner.node_count(), "dimension mismatch");
        let inputs = self
            .inputs
            .iter()
            .map(|row| {
                row.iter()
                    .flat_map(|&j| inner.inputs[j].iter().copied())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect()
            })
            .collect();
        BooleanNetwork {
            op: self.op,
            inputs,
        }
    }

    /// Input sets as bit masks, for the word-level fast path.
    pub(crate) fn input_masks(&self) -> Vec<u64> {
        assert!(
            self.node_count() <= 64,
            "bit-packed evaluation needs n <= 64"
        );
        self.inputs
            .iter()
            .map(|row| row.iter().fold(0u64, |m, &j| m | (1u64 << j)))
            .collect()
    }

    /// Dependency graph in Graphviz DOT, nodes `x1..xn`, edges in lexicographic order.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dependency {\n");
        for i in 1..=self.node_count() {
            out.push_str(&format!("  x{i} [label=\"x{i}\"];\n"));
        }
        for (s, t) in self.edges() {
            out.push_str(&format!("  x{} -> x{};\n", s + 1, t + 1));
        }
        out.push_str("}\n");
        out
    }
}

/// Word-level evaluator: states are integers, bit `i` is `x_{i+1}`.
#[derive(Debug, Clone)]
pub(crate) struct PackedStep {
    op: OpKind,
    masks: Vec<u64>,
}

impl PackedStep {
    pub(crate) fn new(net: &BooleanNetwork) -> Self {
        PackedStep {
            op: net.op_kind(),
            masks: net.input_masks(),
        }
    }

    #[inline]
    pub(crate) fn step(&self, s: u64) -> u64 {
        let mut out = 0u64;
        match self.op {
            OpKind::Conjunctive => {
                for (i, &m) in self.masks.iter().enumerate() {
                    out |= ((s & m == m) as u64) << i;
                }
            }
            OpKind::Disjunctive => {
                for (i, &m) in self.masks.iter().enumerate() {
                    out |= ((s & m != 0) as u64) << i;
                }
            }
        }
        out
    }
}

impl fmt::Display for BooleanNetwork {
    /// Canonical file form: sorted input lists, one line per node.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.node_count(), self.op)?;
        for (i, row) in self.inputs.iter().enumerate() {
            write!(f, "{}:", i + 1)?;
            for &j in row {
                write!(f, " {}", j + 1)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for BooleanNetwork {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BooleanNetwork::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_COMPONENTS: &str = "6 AND\n1: 2 3\n2: 1\n3: 2\n4: 3 4\n5: 1 6\n6: 3 4 5\n";

    fn st(s: &str) -> State {
        s.parse().unwrap()
    }

    #[test]
    fn parses_three_components() {
        let net = BooleanNetwork::parse(THREE_COMPONENTS).unwrap();
        assert_eq!(net.node_count(), 6);
        assert_eq!(net.op_kind(), OpKind::Conjunctive);
        assert_eq!(net.inputs(0), &[1, 2]);
        assert_eq!(net.inputs(5), &[2, 3, 4]);
        assert_eq!(net.to_string(), THREE_COMPONENTS);
    }

    #[test]
    fn parses_self_loop() {
        let net = BooleanNetwork::parse("1 AND\n1: 1").unwrap();
        assert_eq!(net.inputs(0), &[0]);
    }

    #[test]
    fn rejects_constant_function() {
        assert_eq!(
            BooleanNetwork::parse("2 AND\n1: 2\n2:"),
            Err(NetworkError::ConstantFunction { node: 2 })
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            BooleanNetwork::parse("x AND\n1: 1"),
            Err(NetworkError::Header { .. })
        ));
        assert!(matches!(
            BooleanNetwork::parse("2 XOR\n1: 2\n2: 1"),
            Err(NetworkError::UnsupportedOperator { .. })
        ));
        assert!(matches!(
            BooleanNetwork::parse("2 AND\n1: 3\n2: 1"),
            Err(NetworkError::IndexOutOfRange { index: 3, .. })
        ));
        assert_eq!(
            BooleanNetwork::parse("2 AND\n1: 2"),
            Err(NetworkError::MissingNode { node: 2 })
        );
        assert!(matches!(
            BooleanNetwork::parse("2 AND\n1: 2\n1: 1"),
            Err(NetworkError::DuplicateNode { node: 1, .. })
        ));
        assert!(matches!(
            BooleanNetwork::parse(""),
            Err(NetworkError::Header { .. })
        ));
    }

    #[test]
    fn comments_blank_lines_and_duplicates() {
        let net = BooleanNetwork::parse("# demo\n\n2 OR\n2: 1 1\n# x\n1: 2 2 1\n").unwrap();
        assert_eq!(net.op_kind(), OpKind::Disjunctive);
        assert_eq!(net.inputs(0), &[0, 1]);
        assert_eq!(net.inputs(1), &[0]);
        assert_eq!(net.to_string(), "2 OR\n1: 1 2\n2: 1\n");
    }

    #[test]
    fn evaluate_three_components() {
        let net = BooleanNetwork::parse(THREE_COMPONENTS).unwrap();
        assert_eq!(net.evaluate(&st("111111")).unwrap(), st("111111"));
        assert_eq!(net.evaluate(&st("000000")).unwrap(), st("000000"));
        // f = (x2x3, x1, x2, x3x4, x1x6, x3x4x5) at (1,1,1,1,1,0)
        assert_eq!(net.evaluate(&st("111110")).unwrap(), st("111101"));
        assert_eq!(
            net.evaluate(&st("101")),
            Err(NetworkError::LengthMismatch {
                expected: 6,
                got: 3
            })
        );
    }

    #[test]
    fn packed_step_matches_evaluate() {
        let net = BooleanNetwork::parse(THREE_COMPONENTS).unwrap();
        for op in [OpKind::Conjunctive, OpKind::Disjunctive] {
            let net = net.with_op(op);
            let step = PackedStep::new(&net);
            for u in 0..64u64 {
                let s = State::from_index(u, 6);
                assert_eq!(step.step(u), net.evaluate(&s).unwrap().index());
            }
        }
    }

    #[test]
    fn complement_examples() {
        assert_eq!(st("000000").complement(), st("111111"));
        assert_eq!(st("101").complement(), st("010"));
        let s = st("11010");
        assert_eq!(s.complement().complement(), s);
    }

    #[test]
    fn to_conjunctive_flags_conjunctive_input() {
        let or = BooleanNetwork::parse("2 OR\n1: 2\n2: 1").unwrap();
        let and = or.to_conjunctive().unwrap();
        assert_eq!(and.op_kind(), OpKind::Conjunctive);
        assert_eq!(and.all_inputs(), or.all_inputs());
        assert_eq!(and.to_conjunctive(), Err(NetworkError::AlreadyConjunctive));
        assert_eq!(and.conjunctive_image(), and);
    }

    #[test]
    fn dependency_graph_examples() {
        let net = BooleanNetwork::parse(THREE_COMPONENTS).unwrap();
        let edges: Vec<(usize, usize)> = net
            .edges()
            .into_iter()
            .map(|(s, t)| (s + 1, t + 1))
            .collect();
        let mut expected = vec![
            (2, 1),
            (3, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 4),
            (1, 5),
            (6, 5),
            (3, 6),
            (4, 6),
            (5, 6),
        ];
        expected.sort();
        assert_eq!(edges, expected);
        let a = net.dependency_graph();
        assert!(a.get(0, 1) && a.get(0, 2) && a.get(1, 0) && !a.get(0, 0));

        let single = BooleanNetwork::parse("1 AND\n1: 1").unwrap();
        assert_eq!(single.dependency_graph().to_string(), "1\n");
        let swap = BooleanNetwork::parse("2 AND\n1: 2\n2: 1").unwrap();
        assert_eq!(swap.dependency_graph().to_string(), "01\n10\n");
    }

    #[test]
    fn dot_export_is_deterministic() {
        let net = BooleanNetwork::parse("2 AND\n1: 2\n2: 1 2").unwrap();
        assert_eq!(
            net.to_dot(),
            "digraph dependency {\n  x1 [label=\"x1\"];\n  x2 [label=\"x2\"];\n  x1 -> x2;\n  x2 -> x1;\n  x2 -> x2;\n}\n"
        );
    }

    #[test]
    fn compose_substitutes_inputs() {
        let net = BooleanNetwork::parse(THREE_COMPONENTS).unwrap();
        let sq = net.compose(&net);
        // f^2 = (x1x2, x2x3, x1, x2x3x4, x2x3x4x5, x1x2x3x4x6)
        let expected = BooleanNetwork::from_one_based(
            OpKind::Conjunctive,
            &[
                &[1, 2],
                &[2, 3],
                &[1],
                &[2, 3, 4],
                &[2, 3, 4, 5],
                &[1, 2, 3, 4, 6],
            ],
        )
        .unwrap();
        assert_eq!(sq, expected);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        pub(super) fn arb_network(max_n: usize) -> impl Strategy<Value = BooleanNetwork> {
            (1..=max_n, any::<bool>()).prop_flat_map(|(n, and)| {
                let op = if and {
                    OpKind::Conjunctive
                } else {
                    OpKind::Disjunctive
                };
                proptest::collection::vec(proptest::collection::vec(0..n, 1..=n + 1), n)
                    .prop_map(move |rows| BooleanNetwork::new(op, rows).unwrap())
            })
        }

        proptest! {
            #[test]
            fn text_round_trip(net in arb_network(8)) {
                let text = net.to_string();
                let back = BooleanNetwork::parse(&text).unwrap();
                prop_assert_eq!(&back, &net);
                prop_assert_eq!(back.to_string(), text);
            }

            #[test]
            fn evaluate_is_monotone(net in arb_network(8), a in any::<u64>(), b in any::<u64>()) {
                let n = net.node_count();
                let lo = State::from_index(a & b, n);
                let hi = State::from_index(a | b, n);
                prop_assert!(lo.le(&hi));
                prop_assert!(net.evaluate(&lo).unwrap().le(&net.evaluate(&hi).unwrap()));
            }
        }
    }

    #[test]
    fn disjunctive_is_conjugate_of_conjunctive() {
        // Exhaustive over all states for a handful of networks up to n = 12.
        let texts = [
            "2 OR\n1: 2\n2: 1",
            THREE_COMPONENTS,
            "12 OR\n1: 12\n2: 1\n3: 2\n4: 3\n5: 4\n6: 5\n7: 6\n8: 7\n9: 8\n10: 9\n11: 10 3\n12: 11 1",
        ];
        for text in texts {
            let d = BooleanNetwork::parse(text)
                .unwrap()
                .with_op(OpKind::Disjunctive);
            let c = d.to_conjunctive().unwrap();
            let n = d.node_count();
            for u in 0..(1u64 << n) {
                let s = State::from_index(u, n);
                let lhs = d.evaluate(&s).unwrap();
                let rhs = c.evaluate(&s.complement()).unwrap().complement();
                assert_eq!(lhs, rhs);
            }
        }
    }
}
