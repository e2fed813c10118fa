//! Static binding spaces, instrumentation points and plans.

use crate::cftl::{CftlFormula, Domain, QuantifierDecl, Step};
use crate::lang::ast::Program;
use crate::scfg::{reachability_map, reachable_from, Element, ReachabilityMap, Scfg};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstrumentError {
    #[error("dependent quantifier over `{0}` needs a bound element")]
    MissingDependency(String),
    #[error("atom {atom} selects nothing from binding {binding}")]
    UnrealizableAtom { binding: usize, atom: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    CallOf(String),
    ChangeOf(String),
}

impl Target {
    pub fn matches(&self, g: &Scfg, e: Element) -> bool {
        match (self, e) {
            (Target::CallOf(f), Element::Edge(i)) => g.is_call_of(i, f),
            (Target::ChangeOf(x), Element::Vertex(v)) => g.is_change_of(v, x),
            _ => false,
        }
    }
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn domain_target(d: &Domain) -> Target {
    match d {
        Domain::Changes(x) | Domain::FutureChanges { x, .. } => Target::ChangeOf(x.clone()),
        Domain::Calls(f) | Domain::FutureCalls { f, .. } => Target::CallOf(f.clone()),
    }
}

fn all_elements(g: &Scfg) -> impl Iterator<Item = Element> + '_ {
    (0..g.vertices.len()).map(Element::Vertex).chain((0..g.edges.len()).map(Element::Edge))
}

pub fn static_domain(g: &Scfg, q: &QuantifierDecl, dep: Option<Element>) -> Result<BTreeSet<Element>, InstrumentError> {
    let target = domain_target(&q.domain);
    match (q.domain.dep(), dep) {
        (None, _) => Ok(all_elements(g).filter(|e| target.matches(g, *e)).collect()),
        (Some(_), Some(from)) => Ok(static_future(g, from, &target)),
        (Some(_), None) => Err(InstrumentError::MissingDependency(q.var.clone())),
    }
}

/// Every matching element reachable from `from` by a nonempty path.
pub fn static_future(g: &Scfg, from: Element, target: &Target) -> BTreeSet<Element> {
    reachable_from(g, from).into_iter().filter(|e| target.matches(g, *e)).collect()
}

/// First matching occurrences along every path leaving `from`.
///
/// A loop head is also reached by revisits that change nothing, so the search
/// continues past a matching loop head.
pub fn static_next(g: &Scfg, from: Element, target: &Target) -> BTreeSet<Element> {
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<Element> = g.element_successors(from).into();
    while let Some(x) = queue.pop_front() {
        if !seen.insert(x) {
            continue;
        }
        let matched = target.matches(g, x);
        if matched {
            out.insert(x);
        }
        if !matched || matches!(x, Element::Vertex(v) if g.loop_heads.contains(&v)) {
            queue.extend(g.element_successors(x));
        }
    }
    out
}

/// Critical vertices that can be the last recorded state before `edge` is taken.
pub fn static_sources(g: &Scfg, edge: usize, critical: &[bool]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut stack = vec![g.edges[edge].src];
    while let Some(v) = stack.pop() {
        if !seen.insert(v) {
            continue;
        }
        if critical[v] {
            out.insert(v);
        }
        if !critical[v] || g.loop_heads.contains(&v) {
            stack.extend(g.in_edges(v).map(|e| e.src));
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BindingSpace {
    /// Full tuples, one component per quantifier.
    pub bindings: Vec<Vec<Element>>,
    /// Prefixes whose next dependent domain is statically empty.
    pub partial: Vec<Vec<Element>>,
    pub formula_digest: String,
    pub program_digest: String,
}

pub fn compute_binding_space(f: &CftlFormula, g: &Scfg, r: &ReachabilityMap) -> BindingSpace {
    fn rec(f: &CftlFormula, g: &Scfg, r: &ReachabilityMap, prefix: &mut Vec<Element>, out: &mut BindingSpace) {
        let k = prefix.len();
        if k == f.quantifiers.len() {
            out.bindings.push(prefix.clone());
            return;
        }
        let q = &f.quantifiers[k];
        let target = domain_target(&q.domain);
        let domain: Vec<Element> = match f.dep_index(k) {
            None => all_elements(g).filter(|e| target.matches(g, *e)).collect(),
            Some(d) => r.from(prefix[d]).iter().copied().filter(|e| target.matches(g, *e)).collect(),
        };
        if domain.is_empty() && k > 0 {
            out.partial.push(prefix.clone());
            return;
        }
        for e in domain {
            prefix.push(e);
            rec(f, g, r, prefix, out);
            prefix.pop();
        }
    }
    let mut out = BindingSpace::default();
    rec(f, g, r, &mut Vec::new(), &mut out);
    out.formula_digest = digest(&f.to_text());
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capture {
    StateValue(String),
    TransitionDuration,
    Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstrumentationPoint {
    pub id: usize,
    pub binding: usize,
    pub atom: Option<usize>,
    pub location: Element,
    pub capture: Capture,
    pub derived_from: usize,
    pub minimal: bool,
}

/// Applies a selector chain statically, starting from `start`.
pub fn apply_chain(g: &Scfg, chain: &[Step], start: Element, critical: &[bool]) -> BTreeSet<Element> {
    let mut cur = BTreeSet::from([start]);
    for step in chain {
        let mut next = BTreeSet::new();
        for e in &cur {
            match (step, *e) {
                (Step::Source, Element::Edge(i)) => next.extend(static_sources(g, i, critical).into_iter().map(Element::Vertex)),
                (Step::Dest, Element::Edge(i)) => {
                    next.insert(Element::Vertex(g.edges[i].dst));
                }
                (Step::Incident, Element::Vertex(v)) => next.extend(g.in_edges(v).map(|e| Element::Edge(e.index))),
                (Step::NextCall(f), from) => next.extend(static_next(g, from, &Target::CallOf(f.clone()))),
                (Step::NextChange(x), from) => next.extend(static_next(g, from, &Target::ChangeOf(x.clone()))),
                _ => {}
            }
        }
        cur = next;
    }
    cur
}

pub fn is_look_back(chain: &[Step]) -> bool {
    chain.iter().any(|s| matches!(s, Step::Source | Step::Incident))
}

/// Points for one (possibly partial) static binding, plus atoms that select nothing.
pub fn instrumentation_points(
    f: &CftlFormula,
    b: &[Element],
    g: &Scfg,
    binding_id: usize,
) -> (Vec<InstrumentationPoint>, Vec<InstrumentError>) {
    let critical = g.critical_vertices(&f.critical);
    let mut points = Vec::new();
    let mut unrealizable = Vec::new();
    for (i, atom) in f.atoms.iter().enumerate() {
        let j = f.atom_var(i);
        if j >= b.len() {
            continue;
        }
        let capture = match atom {
            crate::cftl::Atom::StateEq { x, .. } | crate::cftl::Atom::StateIn { x, .. } => Capture::StateValue(x.clone()),
            crate::cftl::Atom::DurationIn { .. } => Capture::TransitionDuration,
        };
        let locations = apply_chain(g, &atom.selector().chain, b[j], &critical);
        if locations.is_empty() {
            unrealizable.push(InstrumentError::UnrealizableAtom { binding: binding_id, atom: i });
        }
        for location in locations {
            points.push(InstrumentationPoint {
                id: 0,
                binding: binding_id,
                atom: Some(i),
                location,
                capture: capture.clone(),
                derived_from: j,
                minimal: false,
            });
        }
    }
    for (j, loc) in b.iter().enumerate() {
        let covered = points.iter().any(|p: &InstrumentationPoint| {
            p.derived_from == j
                && p.location == *loc
                && !p.atom.is_some_and(|a| is_look_back(&f.atoms[a].selector().chain))
        });
        if !covered {
            points.push(InstrumentationPoint {
                id: 0,
                binding: binding_id,
                atom: None,
                location: *loc,
                capture: Capture::Timestamp,
                derived_from: j,
                minimal: false,
            });
        }
    }
    points.sort_by_key(|p| (p.derived_from, p.atom, p.location));
    (points, unrealizable)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub binding: usize,
    pub var: usize,
    pub points: Vec<usize>,
    pub minimal: Vec<usize>,
}

/// Groups points by (binding, originating variable) and finds the before-minimal members.
pub fn partition_and_minimals(points: &[InstrumentationPoint], f: &CftlFormula, g: &Scfg) -> Vec<Partition> {
    let r = reachability_map(g);
    let look_back = |p: &InstrumentationPoint| p.atom.is_some_and(|a| is_look_back(&f.atoms[a].selector().chain));
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        groups.entry((p.binding, p.derived_from)).or_default().push(i);
    }
    groups
        .into_iter()
        .map(|((binding, var), members)| {
            let minimal = members
                .iter()
                .copied()
                .filter(|&i| {
                    let p = &points[i];
                    !look_back(p)
                        && !members.iter().any(|&k| {
                            let q = &points[k];
                            !look_back(q)
                                && q.location != p.location
                                && r.before(q.location, p.location)
                                && !r.before(p.location, q.location)
                        })
                })
                .map(|i| points[i].id)
                .collect();
            Partition { binding, var, points: members.iter().map(|&i| points[i].id).collect(), minimal }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanBinding {
    pub id: usize,
    pub components: Vec<Element>,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unrealizable {
    pub binding: usize,
    pub atom: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstrumentationPlan {
    pub program_digest: String,
    pub formula_digest: String,
    pub critical: Vec<String>,
    pub bindings: Vec<PlanBinding>,
    pub points: Vec<InstrumentationPoint>,
    pub partitions: Vec<Partition>,
    pub unrealizable: Vec<Unrealizable>,
}

impl InstrumentationPlan {
    /// A plan with no points for `p`.
    pub fn empty(p: &Program) -> InstrumentationPlan {
        InstrumentationPlan {
            program_digest: digest(&p.to_text()),
            formula_digest: String::new(),
            critical: Vec::new(),
            bindings: Vec::new(),
            points: Vec::new(),
            partitions: Vec::new(),
            unrealizable: Vec::new(),
        }
    }

    pub fn full_bindings(&self) -> impl Iterator<Item = &PlanBinding> {
        self.bindings.iter().filter(|b| b.complete)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

pub fn emit_plan(f: &CftlFormula, g: &Scfg, p: &Program) -> InstrumentationPlan {
    let r = reachability_map(g);
    let space = compute_binding_space(f, g, &r);
    let mut plan = InstrumentationPlan::empty(p);
    plan.formula_digest = digest(&f.to_text());
    plan.critical = f.critical.iter().cloned().collect();
    let tuples = space.bindings.iter().map(|b| (b, true)).chain(space.partial.iter().map(|b| (b, false)));
    for (id, (components, complete)) in tuples.enumerate() {
        plan.bindings.push(PlanBinding { id, components: components.clone(), complete });
        let (points, unrealizable) = instrumentation_points(f, components, g, id);
        plan.points.extend(points);
        for u in unrealizable {
            if let InstrumentError::UnrealizableAtom { binding, atom } = u {
                plan.unrealizable.push(Unrealizable { binding, atom });
            }
        }
    }
    for (i, point) in plan.points.iter_mut().enumerate() {
        point.id = i;
    }
    plan.partitions = partition_and_minimals(&plan.points, f, g);
    let minimal: BTreeSet<usize> = plan.partitions.iter().flat_map(|p| p.minimal.iter().copied()).collect();
    for point in &mut plan.points {
        point.minimal = minimal.contains(&point.id);
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cftl::parse_formula;
    use crate::lang::parse_program;
    use crate::scfg::build_scfg;

    const EX1: &str = "database = 1\ndatabase_operation(database)\nclose_connection(database)\n";
    const EX2: &str = "database = 1\ndata = [1.1, 1.3, 1.6]\nfor datum in data:\n    operation(datum)\n";

    fn plan(src: &str, spec: &str) -> InstrumentationPlan {
        let p = parse_program(src).unwrap();
        emit_plan(&parse_formula(spec).unwrap(), &build_scfg(&p), &p)
    }

    #[test]
    fn single_binding_three_points() {
        let pl = plan(
            EX1,
            "forall q in changes(database) . ( q(database) = 1 => (duration(next_call(q, database_operation)) in [0, 2] and duration(next_call(q, close_connection)) in [0, 1]) )",
        );
        assert_eq!(pl.bindings.len(), 1);
        assert_eq!(pl.bindings[0].components, vec![Element::Vertex(1)]);
        assert_eq!(pl.points.len(), 3);
        let minimal: Vec<_> = pl.points.iter().filter(|p| p.minimal).map(|p| p.location).collect();
        assert_eq!(minimal, vec![Element::Vertex(1)]);
        assert!(pl.unrealizable.is_empty());
    }

    #[test]
    fn nested_binding_two_points() {
        let pl = plan(EX2, "forall q in changes(database) . forall t in future_calls(q, operation) . ( q(database) = 1 => duration(t) in [0, 1] )");
        assert_eq!(pl.bindings.len(), 1);
        assert_eq!(pl.points.len(), 2);
        assert_ne!(pl.points[0].derived_from, pl.points[1].derived_from);
        assert!(pl.points.iter().all(|p| p.minimal));
    }

    #[test]
    fn unmatched_formula_gives_empty_plan() {
        let pl = plan(EX1, "forall q in changes(nothing) . ( q(nothing) = 1 )");
        assert!(pl.bindings.is_empty() && pl.points.is_empty());
        assert_eq!(pl.program_digest, digest(&parse_program(EX1).unwrap().to_text()));
    }

    #[test]
    fn next_is_within_future() {
        let g = build_scfg(&parse_program("a = 1\nfor i in range(3):\n    f(1)\n    a = 2\nf(2)\n").unwrap());
        for from in (0..g.vertices.len()).map(Element::Vertex) {
            for t in [Target::CallOf("f".into()), Target::ChangeOf("a".into())] {
                let next = static_next(&g, from, &t);
                assert!(next.is_subset(&static_future(&g, from, &t)));
            }
        }
    }

    #[test]
    fn next_continues_past_a_matching_loop_head() {
        let g = build_scfg(&parse_program("a = 0\nfor i in range(2):\n    f(1)\na = 1\n").unwrap());
        let head = *g.loop_heads.iter().next().unwrap();
        let next = static_next(&g, Element::Vertex(head), &Target::ChangeOf("a".into()));
        assert!(next.contains(&Element::Vertex(head)));
        assert_eq!(next.len(), 2);
    }

    #[test]
    fn sources_skip_non_critical_vertices() {
        let p = parse_program("a = 1\nb = 2\nf(1)\n").unwrap();
        let g = build_scfg(&p);
        let critical = g.critical_vertices(&["a".to_string(), "f".to_string()].into());
        let call = g.edges.iter().find(|e| g.is_call_of(e.index, "f")).unwrap().index;
        assert_eq!(static_sources(&g, call, &critical), BTreeSet::from([1]));
    }

    #[test]
    fn look_back_points_are_not_minimal() {
        let pl = plan("a = 1\nf(1)\n", "forall t in calls(f) . ( source(t)(a) = 1 )");
        let look_back: Vec<_> = pl.points.iter().filter(|p| p.atom == Some(0)).collect();
        assert_eq!(look_back.len(), 1);
        assert_eq!(look_back[0].location, Element::Vertex(1));
        assert!(!look_back[0].minimal);
        assert!(pl.points.iter().any(|p| p.capture == Capture::Timestamp && p.minimal));
    }

    #[test]
    fn plan_round_trips_through_json() {
        let pl = plan(EX2, "forall q in changes(database) . forall t in future_calls(q, operation) . ( duration(t) in [0, 1] )");
        let back: InstrumentationPlan = serde_json::from_str(&pl.to_json()).unwrap();
        assert_eq!(back, pl);
    }
}
