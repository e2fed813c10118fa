//! Symbolic control flow graphs.

mod build;
mod dot;
mod reach;

pub use build::build_scfg;
pub use dot::to_dot;
pub use reach::{is_before, reachability_map, reachable_from, ReachabilityMap};

use crate::lang::ast::{expr_text, Expr};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymVal {
    Changed,
    Unchanged,
    Undefined,
    Called,
}

impl fmt::Display for SymVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymVal::Changed => "changed",
            SymVal::Unchanged => "unchanged",
            SymVal::Undefined => "undefined",
            SymVal::Called => "called",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicState {
    pub index: usize,
    pub assignment: BTreeMap<String, SymVal>,
}

impl SymbolicState {
    pub fn get(&self, symbol: &str) -> SymVal {
        self.assignment.get(symbol).copied().unwrap_or(SymVal::Undefined)
    }

    pub fn marks(&self, symbol: &str) -> bool {
        matches!(self.get(symbol), SymVal::Changed | SymVal::Called)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeType {
    Call,
    Assignment,
    ControlFlow,
}

impl EdgeType {
    pub fn name(self) -> &'static str {
        match self {
            EdgeType::Call => "call",
            EdgeType::Assignment => "assignment",
            EdgeType::ControlFlow => "control_flow",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Guard {
    Test(Expr),
    ForIn(String, Expr),
}

/// Branch condition attached to an edge; `True` is the unconditional edge.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    True,
    Guard(Guard),
    Not(Box<Condition>),
    And(Vec<Condition>),
    Or(Vec<Condition>),
}

impl Condition {
    pub fn and(self, other: Condition) -> Condition {
        match (self, other) {
            (Condition::True, c) | (c, Condition::True) => c,
            (Condition::And(mut a), Condition::And(b)) => {
                a.extend(b);
                Condition::And(a)
            }
            (Condition::And(mut a), c) => {
                a.push(c);
                Condition::And(a)
            }
            (c, Condition::And(b)) => {
                let mut v = vec![c];
                v.extend(b);
                Condition::And(v)
            }
            (a, b) => Condition::And(vec![a, b]),
        }
    }

    pub fn or(self, other: Condition) -> Condition {
        match (self, other) {
            (Condition::True, _) | (_, Condition::True) => Condition::True,
            (a, b) if a == b => a,
            (Condition::Or(mut a), c) => {
                a.push(c);
                Condition::Or(a)
            }
            (a, b) => Condition::Or(vec![a, b]),
        }
    }

    pub fn negate(self) -> Condition {
        match self {
            Condition::Not(inner) => *inner,
            c => Condition::Not(Box::new(c)),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atomic(c: &Condition) -> bool {
            matches!(c, Condition::True | Condition::Guard(_))
        }
        match self {
            Condition::True => f.write_str("true"),
            Condition::Guard(Guard::Test(e)) => f.write_str(&expr_text(e)),
            Condition::Guard(Guard::ForIn(v, e)) => write!(f, "{v} in {}", expr_text(e)),
            Condition::Not(inner) => write!(f, "not ({inner})"),
            Condition::And(parts) | Condition::Or(parts) => {
                let sep = if matches!(self, Condition::And(_)) { " and " } else { " or " };
                let text: Vec<String> = parts
                    .iter()
                    .map(|p| if atomic(p) || matches!(p, Condition::Not(_)) { p.to_string() } else { format!("({p})") })
                    .collect();
                f.write_str(&text.join(sep))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScfgEdge {
    pub index: usize,
    pub src: usize,
    pub condition: Condition,
    pub types: BTreeSet<EdgeType>,
    pub dst: usize,
}

/// Which statement induced a vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Start,
    Assign { target: String },
    Call { callee: String },
    AssignCall { target: String, callee: String },
    Exit,
}

impl Origin {
    pub fn assigns(&self, x: &str) -> bool {
        matches!(self, Origin::Assign { target } | Origin::AssignCall { target, .. } if target == x)
    }

    pub fn callee(&self) -> Option<&str> {
        match self {
            Origin::Call { callee } | Origin::AssignCall { callee, .. } => Some(callee),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "lowercase")]
pub enum Element {
    Vertex(usize),
    Edge(usize),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Vertex(v) => write!(f, "v{v}"),
            Element::Edge(e) => write!(f, "e{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScfgError {
    #[error("unknown element {0}")]
    UnknownElement(Element),
}

#[derive(Debug, Clone)]
pub struct Scfg {
    pub vertices: Vec<SymbolicState>,
    pub origins: Vec<Origin>,
    pub lines: Vec<Option<usize>>,
    pub edges: Vec<ScfgEdge>,
    pub start: usize,
    pub ends: BTreeSet<usize>,
    pub variables: BTreeSet<String>,
    pub functions: BTreeSet<String>,
    /// Statement id to the vertex it induced.
    pub stmt_vertex: BTreeMap<usize, usize>,
    /// Vertices that are targets of loop back-edges.
    pub loop_heads: BTreeSet<usize>,
}

impl Scfg {
    pub fn symbols(&self) -> impl Iterator<Item = &String> {
        self.variables.iter().chain(self.functions.iter())
    }

    pub fn contains(&self, e: Element) -> bool {
        match e {
            Element::Vertex(v) => v < self.vertices.len(),
            Element::Edge(i) => i < self.edges.len(),
        }
    }

    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = &ScfgEdge> {
        self.edges.iter().filter(move |e| e.src == v)
    }

    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = &ScfgEdge> {
        self.edges.iter().filter(move |e| e.dst == v)
    }

    pub fn find_edge(&self, src: usize, dst: usize) -> Option<usize> {
        self.edges.iter().find(|e| e.src == src && e.dst == dst).map(|e| e.index)
    }

    /// Edge is a call to `f`.
    pub fn is_call_of(&self, edge: usize, f: &str) -> bool {
        let e = &self.edges[edge];
        e.types.contains(&EdgeType::Call) && self.vertices[e.dst].get(f) == SymVal::Called
    }

    /// Vertex was induced by an assignment to `x`.
    pub fn is_change_of(&self, v: usize, x: &str) -> bool {
        self.origins[v].assigns(x) && self.vertices[v].get(x) == SymVal::Changed
    }

    /// Vertices whose state marks some critical symbol changed or called.
    pub fn critical_vertices(&self, critical: &BTreeSet<String>) -> Vec<bool> {
        self.vertices
            .iter()
            .map(|s| critical.iter().any(|c| s.marks(c)))
            .collect()
    }

    /// Successor elements in the bipartite vertex/edge graph.
    pub fn element_successors(&self, e: Element) -> Vec<Element> {
        match e {
            Element::Vertex(v) => self.out_edges(v).map(|e| Element::Edge(e.index)).collect(),
            Element::Edge(i) => vec![Element::Vertex(self.edges[i].dst)],
        }
    }
}

impl Scfg {
    /// Vertices with their symbolic states and edges with rendered conditions.
    pub fn to_json(&self) -> serde_json::Value {
        let vertices: Vec<_> = self
            .vertices
            .iter()
            .map(|v| {
                let state: serde_json::Map<_, _> =
                    v.assignment.iter().map(|(k, s)| (k.clone(), serde_json::json!(s.to_string()))).collect();
                serde_json::json!({ "index": v.index, "line": self.lines[v.index], "state": state })
            })
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|e| {
                serde_json::json!({
                    "index": e.index,
                    "src": e.src,
                    "dst": e.dst,
                    "condition": e.condition.to_string(),
                    "types": e.types.iter().map(|t| t.name()).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "start": self.start,
            "ends": self.ends,
            "loop_heads": self.loop_heads,
            "vertices": vertices,
            "edges": edges,
        })
    }
}
