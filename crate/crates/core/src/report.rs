//! Topology-only analysis of a network, optionally followed by a simulation
//! run and a table of checks comparing the two.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};

use crate::cycles::{
    disjoint_union_structure, fixed_point_count_with, height_upper_bound, lower_bound_with,
    scc_cycle_structure, upper_bound_with, BoundCaps, CyclePolynomial,
};
use crate::graph::{condensation_poset, scc_decompose};
use crate::network::{BooleanNetwork, OpKind};
use crate::oracle::{enumerate_phase_space_capped, OracleError, PhaseSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentReport {
    /// 1-based position in the topological order.
    pub id: usize,
    /// 1-based node indices.
    pub nodes: Vec<usize>,
    pub loop_number: u64,
    /// Exact cycle structure of the component run in isolation; absent for
    /// trivial components.
    pub structure: Option<CyclePolynomial>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeightBounds {
    pub general: u64,
    pub strongly_connected: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleSection {
    pub cycle_structure: CyclePolynomial,
    pub height: u64,
    pub period: u64,
    pub component_count: u64,
    pub fixed_point_count: u64,
    pub matrix_transient: u64,
    pub matrix_period: u64,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub source: Option<String>,
    pub nodes: usize,
    pub operator: OpKind,
    pub components: Vec<ComponentReport>,
    pub graph_loop_number: u64,
    /// Direct edges between components, as 1-based `(from, to)` ids.
    pub cover_edges: Vec<(usize, usize)>,
    pub maximal_antichains: Option<Vec<Vec<usize>>>,
    pub union_structure: Option<CyclePolynomial>,
    pub lower_bound: Option<CyclePolynomial>,
    pub upper_bound: Option<CyclePolynomial>,
    #[serde(serialize_with = "number_or_string")]
    pub fixed_points: Option<BigUint>,
    pub height_bounds: HeightBounds,
    /// Strongly connected and non-trivial: both bounds equal the exact
    /// structure.
    pub exact: bool,
    pub diagnostics: Vec<String>,
    pub oracle: Option<OracleSection>,
}

fn number_or_string<S: Serializer>(value: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
    match value {
        None => s.serialize_none(),
        Some(v) => match v.to_u64() {
            Some(x) => s.serialize_u64(x),
            None => s.serialize_str(&v.to_string()),
        },
    }
}

impl AnalysisReport {
    /// Every check passed or was skipped. `true` when no simulation ran.
    pub fn all_passed(&self) -> bool {
        self.oracle
            .as_ref()
            .is_none_or(|o| o.checks.iter().all(|c| c.verdict != Verdict::Fail))
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.oracle
            .as_ref()
            .map(|o| {
                o.checks
                    .iter()
                    .filter(|c| c.verdict == Verdict::Fail)
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Topology-only analysis; never enumerates states. Bound computations that
/// cannot run (trivial components, caps) leave their fields empty and add a
/// diagnostic.
pub fn analyze(net: &BooleanNetwork, source: Option<&str>, caps: BoundCaps) -> AnalysisReport {
    let n = net.node_count();
    let a = net.dependency_graph();
    let d = scc_decompose(&a);
    let poset = condensation_poset(&d, &a);
    let mut diagnostics = Vec::new();

    let components: Vec<ComponentReport> = d
        .components
        .iter()
        .enumerate()
        .map(|(i, members)| ComponentReport {
            id: i + 1,
            nodes: members.iter().map(|v| v + 1).collect(),
            loop_number: d.loop_numbers[i],
            structure: scc_cycle_structure(d.loop_numbers[i]).ok(),
        })
        .collect();

    let trivial = d.trivial_components();
    let structures: Option<Vec<CyclePolynomial>> = if trivial.is_empty() {
        Some(
            components
                .iter()
                .map(|c| c.structure.clone().expect("non-trivial"))
                .collect(),
        )
    } else {
        for &i in &trivial {
            diagnostics.push(format!(
                "component G{} (x{}) is a single node without a self-loop; cycle-structure bounds skipped",
                i + 1,
                d.components[i][0] + 1
            ));
        }
        None
    };

    let maximal_antichains = match poset.maximal_antichains(caps.antichain_components) {
        Ok(list) => Some(
            list.into_iter()
                .map(|ac| ac.into_iter().map(|i| i + 1).collect())
                .collect(),
        ),
        Err(e) => {
            diagnostics.push(format!("maximal antichains not listed: {e}"));
            None
        }
    };

    let mut union_structure = None;
    let mut lower = None;
    let mut upper = None;
    let mut fixed_points = None;
    if let Some(structures) = &structures {
        union_structure = Some(disjoint_union_structure(structures));
        if maximal_antichains.is_some() {
            match lower_bound_with(&poset, structures, caps) {
                Ok(l) => lower = Some(l),
                Err(e) => diagnostics.push(format!("lower bound not computed: {e}")),
            }
            match fixed_point_count_with(&poset, caps) {
                Ok(f) => fixed_points = Some(f),
                Err(e) => diagnostics.push(format!("fixed-point count not computed: {e}")),
            }
        }
        match upper_bound_with(&poset, structures, caps) {
            Ok(u) => upper = Some(u),
            Err(e) => diagnostics.push(format!("upper bound not computed: {e}")),
        }
    }

    let exact = d.is_strongly_connected() && d.loop_numbers[0] > 0;
    let height_bounds = HeightBounds {
        general: height_upper_bound(n as u64, d.graph_loop_number, false),
        strongly_connected: exact.then(|| height_upper_bound(n as u64, d.loop_numbers[0], true)),
    };

    AnalysisReport {
        source: source.map(str::to_owned),
        nodes: n,
        operator: net.op_kind(),
        components,
        graph_loop_number: d.graph_loop_number,
        cover_edges: poset
            .covers()
            .iter()
            .map(|&(i, j)| (i + 1, j + 1))
            .collect(),
        maximal_antichains,
        union_structure,
        lower_bound: lower,
        upper_bound: upper,
        fixed_points,
        height_bounds,
        exact,
        diagnostics,
        oracle: None,
    }
}

/// Simulates the network and attaches the oracle section with every check.
/// `expected`, when given, is compared against the simulated structure.
pub fn simulate_and_check(
    report: &mut AnalysisReport,
    net: &BooleanNetwork,
    cap: usize,
    expected: Option<&CyclePolynomial>,
) -> Result<(), OracleError> {
    let space = enumerate_phase_space_capped(net, cap)?;
    let dual = match net.op_kind() {
        OpKind::Disjunctive => Some(enumerate_phase_space_capped(&net.conjunctive_image(), cap)?),
        OpKind::Conjunctive => None,
    };
    let trajectory = net.dependency_graph().power_trajectory();
    let checks = run_checks(
        report,
        &space,
        dual.as_ref(),
        trajectory.transient,
        trajectory.period,
        expected,
    );
    let s = &space.summary;
    report.oracle = Some(OracleSection {
        cycle_structure: s.cycle_structure.clone(),
        height: s.height,
        period: s.period,
        component_count: s.component_count,
        fixed_point_count: s.fixed_point_count,
        matrix_transient: trajectory.transient,
        matrix_period: trajectory.period,
        checks,
    });
    Ok(())
}

fn optional_check(name: &'static str, input: Option<(bool, String)>, missing: &str) -> Check {
    match input {
        Some((ok, detail)) => Check {
            name,
            verdict: Verdict::from_bool(ok),
            detail,
        },
        None => Check {
            name,
            verdict: Verdict::Skipped,
            detail: missing.to_owned(),
        },
    }
}

fn run_checks(
    report: &AnalysisReport,
    space: &PhaseSpace,
    dual: Option<&PhaseSpace>,
    matrix_transient: u64,
    matrix_period: u64,
    expected: Option<&CyclePolynomial>,
) -> Vec<Check> {
    let s = &space.summary;
    let cf = &s.cycle_structure;
    let c = report.graph_loop_number;
    let mut checks = Vec::new();

    checks.push(optional_check(
        "lower bound <= C(f)",
        report
            .lower_bound
            .as_ref()
            .map(|l| (l.dominated_by(cf), format!("{l} <= {cf}"))),
        "lower bound unavailable",
    ));
    checks.push(optional_check(
        "C(f) <= upper bound",
        report
            .upper_bound
            .as_ref()
            .map(|u| (cf.dominated_by(u), format!("{cf} <= {u}"))),
        "upper bound unavailable",
    ));
    checks.push(optional_check(
        "C(f) <= C(h)",
        report
            .union_structure
            .as_ref()
            .map(|h| (cf.dominated_by(h), format!("{cf} <= {h}"))),
        "disjoint-union structure unavailable",
    ));
    checks.push(optional_check(
        "fixed points exact",
        report.fixed_points.as_ref().map(|fp| {
            (
                *fp == BigUint::from(s.fixed_point_count),
                format!("formula {fp}, simulated {}", s.fixed_point_count),
            )
        }),
        "fixed-point formula unavailable",
    ));

    let bad_lengths: Vec<u64> = cf
        .terms()
        .map(|(m, _)| m)
        .filter(|m| c == 0 || !c.is_multiple_of(*m))
        .collect();
    checks.push(Check {
        name: "cycle lengths divide loop number",
        verdict: Verdict::from_bool(bad_lengths.is_empty()),
        detail: if bad_lengths.is_empty() {
            format!("all divide {c}")
        } else {
            format!("lengths {bad_lengths:?} do not divide {c}")
        },
    });
    checks.push(Check {
        name: "period divides loop number",
        verdict: Verdict::from_bool(c != 0 && c.is_multiple_of(s.period)),
        detail: format!("period {}, loop number {c}", s.period),
    });
    checks.push(Check {
        name: "height equals matrix transient",
        verdict: Verdict::from_bool(s.height == matrix_transient),
        detail: format!("height {}, transient {matrix_transient}", s.height),
    });
    checks.push(Check {
        name: "period equals matrix period",
        verdict: Verdict::from_bool(s.period == matrix_period),
        detail: format!("period {}, matrix period {matrix_period}", s.period),
    });
    let general = report.height_bounds.general;
    checks.push(Check {
        name: "height within general bound",
        verdict: Verdict::from_bool(s.height <= general),
        detail: format!("{} <= {general}", s.height),
    });
    checks.push(optional_check(
        "height within strongly connected bound",
        report
            .height_bounds
            .strongly_connected
            .map(|b| (s.height <= b, format!("{} <= {b}", s.height))),
        "not strongly connected",
    ));
    checks.push(optional_check(
        "strongly connected structure exact",
        report.exact.then(|| {
            let predicted = report.components[0]
                .structure
                .as_ref()
                .expect("exact implies non-trivial");
            (
                predicted == cf,
                format!("predicted {predicted}, simulated {cf}"),
            )
        }),
        "not strongly connected",
    ));
    checks.push(optional_check(
        "duality",
        dual.map(|d| duality(space, d)),
        "conjunctive input",
    ));
    checks.push(optional_check(
        "expected structure",
        expected.map(|e| (e == cf, format!("expected {e}, simulated {cf}"))),
        "no expectation given",
    ));
    checks
}

/// Summaries agree, and complementing every state of every limit cycle of
/// the disjunctive network gives exactly the limit cycles of its image.
fn duality(or_space: &PhaseSpace, and_space: &PhaseSpace) -> (bool, String) {
    if or_space.summary != and_space.summary {
        return (
            false,
            format!(
                "summaries differ: {} vs {}",
                or_space.summary.cycle_structure, and_space.summary.cycle_structure
            ),
        );
    }
    let mask = if or_space.node_count == 64 {
        u64::MAX
    } else {
        (1u64 << or_space.node_count) - 1
    };
    let complemented: BTreeSet<BTreeSet<u64>> = or_space
        .cycles
        .iter()
        .map(|cy| cy.states.iter().map(|s| !s & mask).collect())
        .collect();
    let image: BTreeSet<BTreeSet<u64>> = and_space.cycle_sets().into_iter().collect();
    let states: usize = or_space.cycles.iter().map(|c| c.len()).sum();
    if complemented == image {
        (
            true,
            format!("{states} limit-cycle states map onto the conjunctive image"),
        )
    } else {
        (
            false,
            "complemented limit cycles differ from those of the conjunctive image".into(),
        )
    }
}

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_owned(), T::to_string)
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.source.as_deref().unwrap_or("<input>");
        writeln!(
            f,
            "network: {name} ({} nodes, {})",
            self.nodes,
            self.operator.keyword()
        )?;
        writeln!(f, "components:")?;
        for c in &self.components {
            let nodes: Vec<String> = c.nodes.iter().map(|v| format!("x{v}")).collect();
            writeln!(
                f,
                "  G{} {{{}}}  loop number {}  structure {}",
                c.id,
                nodes.join(", "),
                c.loop_number,
                opt(&c.structure)
            )?;
        }
        writeln!(f, "graph loop number: {}", self.graph_loop_number)?;
        let covers: Vec<String> = self
            .cover_edges
            .iter()
            .map(|(i, j)| format!("G{i} -> G{j}"))
            .collect();
        writeln!(
            f,
            "cover edges: {}",
            if covers.is_empty() {
                "none".into()
            } else {
                covers.join(", ")
            }
        )?;
        match &self.maximal_antichains {
            Some(list) => {
                let sets: Vec<String> = list
                    .iter()
                    .map(|ac| {
                        let ids: Vec<String> = ac.iter().map(|i| format!("G{i}")).collect();
                        format!("{{{}}}", ids.join(", "))
                    })
                    .collect();
                writeln!(f, "maximal antichains: {}", sets.join(", "))?;
            }
            None => writeln!(f, "maximal antichains: -")?,
        }
        writeln!(
            f,
            "disjoint-union structure C(h): {}",
            opt(&self.union_structure)
        )?;
        writeln!(f, "lower bound: {}", opt(&self.lower_bound))?;
        writeln!(f, "upper bound: {}", opt(&self.upper_bound))?;
        writeln!(f, "fixed points: {}", opt(&self.fixed_points))?;
        writeln!(
            f,
            "height bounds: general {}, strongly connected {}",
            self.height_bounds.general,
            opt(&self.height_bounds.strongly_connected)
        )?;
        if self.exact {
            writeln!(f, "exact (strongly connected)")?;
        }
        for d in &self.diagnostics {
            writeln!(f, "note: {d}")?;
        }
        if let Some(o) = &self.oracle {
            writeln!(f, "simulation:")?;
            writeln!(f, "  cycle structure C(f): {}", o.cycle_structure)?;
            writeln!(
                f,
                "  limit cycles: {}  fixed points: {}",
                o.component_count, o.fixed_point_count
            )?;
            writeln!(f, "  height: {}  period: {}", o.height, o.period)?;
            writeln!(
                f,
                "  matrix transient: {}  matrix period: {}",
                o.matrix_transient, o.matrix_period
            )?;
            if let Some(u) = &self.upper_bound {
                let gaps: Vec<String> = u
                    .terms()
                    .filter(|&(m, coeff)| *coeff > o.cycle_structure.coefficient(m))
                    .map(|(m, coeff)| {
                        format!("C{m} ({} > {})", coeff, o.cycle_structure.coefficient(m))
                    })
                    .collect();
                if !gaps.is_empty() {
                    writeln!(f, "  upper bound strict at: {}", gaps.join(", "))?;
                }
            }
            writeln!(f, "checks:")?;
            for c in &o.checks {
                writeln!(f, "  [{}] {}: {}", c.verdict, c.name, c.detail)?;
            }
        }
        Ok(())
    }
}

/// Simulated structure minus the lower bound, for reports on sharpness.
pub fn lower_bound_gap(report: &AnalysisReport) -> Option<CyclePolynomial> {
    let o = report.oracle.as_ref()?;
    let l = report.lower_bound.as_ref()?;
    Some(&o.cycle_structure - l)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_COMPONENTS: &str = "6 AND\n1: 2 3\n2: 1\n3: 2\n4: 3 4\n5: 1 6\n6: 3 4 5";
    const TWO_INTO_THREE: &str = "5 AND\n1: 2\n2: 1\n3: 2 5\n4: 3\n5: 4";

    fn checked(text: &str) -> AnalysisReport {
        let net = BooleanNetwork::parse(text).unwrap();
        let mut r = analyze(&net, Some("test"), BoundCaps::default());
        simulate_and_check(&mut r, &net, 26, None).unwrap();
        r
    }

    fn p(s: &str) -> CyclePolynomial {
        s.parse().unwrap()
    }

    #[test]
    fn three_component_report() {
        let r = checked(THREE_COMPONENTS);
        let loops: Vec<u64> = r.components.iter().map(|c| c.loop_number).collect();
        assert_eq!(loops, vec![1, 1, 2]);
        assert_eq!(r.graph_loop_number, 2);
        assert_eq!(r.lower_bound, Some(p("4C1 + C2")));
        assert_eq!(r.fixed_points, Some(BigUint::from(4u32)));
        assert!(!r.exact);
        assert!(r.all_passed(), "{r}");
        let text = r.to_string();
        assert!(text.contains("G1 {x1, x2, x3}  loop number 1"));
        assert!(text.contains("[skipped] duality"));
    }

    #[test]
    fn two_three_report() {
        let r = checked(TWO_INTO_THREE);
        assert_eq!(r.lower_bound, Some(p("3C1 + C2 + 2C3")));
        assert_eq!(r.upper_bound, Some(p("3C1 + C2 + 2C3 + 2C6")));
        assert!(r.all_passed());
        assert!(r.to_string().contains("upper bound strict at: C6 (2 > 0)"));
    }

    #[test]
    fn six_cycle_is_exact() {
        let r = checked("6 AND\n1: 6\n2: 1\n3: 2\n4: 3\n5: 4\n6: 5");
        assert!(r.exact);
        assert_eq!(r.components[0].structure, Some(p("2C1 + C2 + 2C3 + 9C6")));
        assert!(r.to_string().contains("exact (strongly connected)"));
        let o = r.oracle.as_ref().unwrap();
        let exact = o
            .checks
            .iter()
            .find(|c| c.name == "strongly connected structure exact")
            .unwrap();
        assert_eq!(exact.verdict, Verdict::Pass);
    }

    #[test]
    fn disjunctive_input_runs_duality() {
        let r = checked(&THREE_COMPONENTS.replace("AND", "OR"));
        let o = r.oracle.as_ref().unwrap();
        let d = o.checks.iter().find(|c| c.name == "duality").unwrap();
        assert_eq!(d.verdict, Verdict::Pass);
        assert!(r.all_passed());
    }

    #[test]
    fn wrong_expectation_fails() {
        let net = BooleanNetwork::parse(THREE_COMPONENTS).unwrap();
        let mut r = analyze(&net, None, BoundCaps::default());
        simulate_and_check(&mut r, &net, 26, Some(&p("5C1 + C2"))).unwrap();
        assert!(!r.all_passed());
        assert_eq!(r.failures()[0].name, "expected structure");
        assert_eq!(lower_bound_gap(&r), Some(CyclePolynomial::zero()));
    }

    #[test]
    fn trivial_component_is_diagnosed() {
        let r = checked("3 AND\n1: 2\n2: 1\n3: 1");
        assert!(r.lower_bound.is_none() && r.upper_bound.is_none());
        assert!(r.diagnostics[0].contains("G2 (x3)"));
        let o = r.oracle.as_ref().unwrap();
        assert_eq!(o.checks[0].verdict, Verdict::Skipped);
        assert!(r.all_passed());
    }

    #[test]
    fn json_field_names() {
        let r = checked(THREE_COMPONENTS);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["operator"], "AND");
        assert_eq!(v["lower_bound"]["1"], 4);
        assert_eq!(v["fixed_points"], 4);
        assert_eq!(v["components"][2]["nodes"], serde_json::json!([5, 6]));
        assert_eq!(v["oracle"]["checks"][0]["verdict"], "pass");
    }
}
