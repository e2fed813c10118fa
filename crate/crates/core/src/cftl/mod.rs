//! CFTL formulas: quantifier sequence, normalized body, atoms and closures.

mod closure;
mod parser;

pub use closure::{cl, l_cl, l_cl_m, unicode};
pub use parser::{parse_formula, FormulaError};

use crate::rational::{self, Rat};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Psi<A> {
    True,
    False,
    Atom(A),
    Not(Box<Psi<A>>),
    Or(Vec<Psi<A>>),
    And(Vec<Psi<A>>),
}

impl<A: Clone> Psi<A> {
    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Psi<A>) -> Psi<A> {
        Psi::Not(Box::new(p))
    }

    pub fn is_literal(&self) -> bool {
        match self {
            Psi::Atom(_) => true,
            Psi::Not(inner) => matches!(inner.as_ref(), Psi::Atom(_)),
            _ => false,
        }
    }

    /// Atoms in first-occurrence order.
    pub fn atoms(&self) -> Vec<A>
    where
        A: PartialEq,
    {
        fn walk<A: Clone + PartialEq>(p: &Psi<A>, out: &mut Vec<A>) {
            match p {
                Psi::Atom(a) => {
                    if !out.contains(a) {
                        out.push(a.clone());
                    }
                }
                Psi::Not(q) => walk(q, out),
                Psi::Or(v) | Psi::And(v) => v.iter().for_each(|q| walk(q, out)),
                Psi::True | Psi::False => {}
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Kleene evaluation under a partial valuation.
    pub fn eval3(&self, val: &mut impl FnMut(&A) -> Option<bool>) -> Option<bool> {
        match self {
            Psi::True => Some(true),
            Psi::False => Some(false),
            Psi::Atom(a) => val(a),
            Psi::Not(q) => q.eval3(val).map(|b| !b),
            Psi::Or(v) => {
                let mut unknown = false;
                for q in v {
                    match q.eval3(val) {
                        Some(true) => return Some(true),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                if unknown { None } else { Some(false) }
            }
            Psi::And(v) => {
                let mut unknown = false;
                for q in v {
                    match q.eval3(val) {
                        Some(false) => return Some(false),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                if unknown { None } else { Some(true) }
            }
        }
    }
}

/// Negation normal form with constant folding.
pub fn normalize<A: Clone>(p: &Psi<A>) -> Psi<A> {
    fn nnf<A: Clone>(p: &Psi<A>, neg: bool) -> Psi<A> {
        match p {
            Psi::True => if neg { Psi::False } else { Psi::True },
            Psi::False => if neg { Psi::True } else { Psi::False },
            Psi::Atom(a) => {
                let atom = Psi::Atom(a.clone());
                if neg { Psi::not(atom) } else { atom }
            }
            Psi::Not(q) => nnf(q, !neg),
            Psi::Or(v) | Psi::And(v) => {
                let is_or = matches!(p, Psi::Or(_)) != neg;
                let children: Vec<Psi<A>> = v.iter().map(|q| nnf(q, neg)).collect();
                fold(is_or, children)
            }
        }
    }
    fn fold<A: Clone>(is_or: bool, children: Vec<Psi<A>>) -> Psi<A> {
        let (absorbing, neutral) = if is_or { (Psi::True, Psi::False) } else { (Psi::False, Psi::True) };
        let mut kept = Vec::new();
        for c in children {
            if std::mem::discriminant(&c) == std::mem::discriminant(&absorbing) {
                return absorbing;
            }
            if std::mem::discriminant(&c) != std::mem::discriminant(&neutral) {
                kept.push(c);
            }
        }
        match kept.len() {
            0 => neutral,
            1 => kept.pop().unwrap(),
            _ => if is_or { Psi::Or(kept) } else { Psi::And(kept) },
        }
    }
    nnf(p, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    State,
    Transition,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Domain {
    Changes(String),
    Calls(String),
    FutureCalls { dep: String, f: String },
    FutureChanges { dep: String, x: String },
}

impl Domain {
    pub fn sort(&self) -> Sort {
        match self {
            Domain::Changes(_) | Domain::FutureChanges { .. } => Sort::State,
            Domain::Calls(_) | Domain::FutureCalls { .. } => Sort::Transition,
        }
    }

    pub fn dep(&self) -> Option<&str> {
        match self {
            Domain::FutureCalls { dep, .. } | Domain::FutureChanges { dep, .. } => Some(dep),
            _ => None,
        }
    }

    pub fn symbol(&self) -> &str {
        match self {
            Domain::Changes(s) | Domain::Calls(s) => s,
            Domain::FutureCalls { f, .. } => f,
            Domain::FutureChanges { x, .. } => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantifierDecl {
    pub var: String,
    pub domain: Domain,
}

impl fmt::Display for QuantifierDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match &self.domain {
            Domain::Changes(x) => format!("changes({x})"),
            Domain::Calls(g) => format!("calls({g})"),
            Domain::FutureCalls { dep, f } => format!("future_calls({dep}, {f})"),
            Domain::FutureChanges { dep, x } => format!("future_changes({dep}, {x})"),
        };
        write!(f, "forall {} in {d}", self.var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Step {
    Source,
    Dest,
    Incident,
    NextCall(String),
    NextChange(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selector {
    pub root: String,
    pub chain: Vec<Step>,
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = self.root.clone();
        for step in &self.chain {
            s = match step {
                Step::Source => format!("source({s})"),
                Step::Dest => format!("dest({s})"),
                Step::Incident => format!("incident({s})"),
                Step::NextCall(g) => format!("next_call({s}, {g})"),
                Step::NextChange(x) => format!("next_change({s}, {x})"),
            };
        }
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Rat,
    pub closed: bool,
}

impl Interval {
    pub fn contains(&self, v: &Rat) -> bool {
        if self.closed {
            &self.lo <= v && v <= &self.hi
        } else {
            &self.lo < v && v < &self.hi
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (l, r) = if self.closed { ('[', ']') } else { ('(', ')') };
        write!(f, "{l}{}, {}{r}", rational::format(&self.lo), rational::format(&self.hi))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    StateEq { sel: Selector, x: String, n: Rat },
    StateIn { sel: Selector, x: String, iv: Interval },
    DurationIn { sel: Selector, iv: Interval },
}

impl Atom {
    pub fn selector(&self) -> &Selector {
        match self {
            Atom::StateEq { sel, .. } | Atom::StateIn { sel, .. } | Atom::DurationIn { sel, .. } => sel,
        }
    }

    pub fn composition_sequence(&self) -> CompositionSequence {
        let predicate = match self {
            Atom::StateEq { x, n, .. } => format!("·({x}) = {}", rational::format(n)),
            Atom::StateIn { x, iv, .. } => format!("·({x}) ∈ {iv}"),
            Atom::DurationIn { iv, .. } => format!("d(·) ∈ {iv}"),
        };
        CompositionSequence { maps: self.selector().chain.clone(), predicate }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::StateEq { sel, x, n } => write!(f, "{sel}({x}) = {}", rational::format(n)),
            Atom::StateIn { sel, x, iv } => write!(f, "{sel}({x}) in {iv}"),
            Atom::DurationIn { sel, iv } => write!(f, "duration({sel}) in {iv}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionSequence {
    pub maps: Vec<Step>,
    pub predicate: String,
}

impl CompositionSequence {
    pub fn render(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .maps
            .iter()
            .map(|s| match s {
                Step::Source => "source".to_string(),
                Step::Dest => "dest".to_string(),
                Step::Incident => "incident".to_string(),
                Step::NextCall(g) => format!("next_call(·, {g})"),
                Step::NextChange(x) => format!("next_change(·, {x})"),
            })
            .collect();
        out.push(self.predicate.clone());
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CftlFormula {
    pub quantifiers: Vec<QuantifierDecl>,
    pub body: Psi<Atom>,
    pub critical: BTreeSet<String>,
    pub atoms: Vec<Atom>,
}

impl CftlFormula {
    pub fn var_index(&self, var: &str) -> Option<usize> {
        self.quantifiers.iter().position(|q| q.var == var)
    }

    /// Index of the bind variable an atom's selector starts from.
    pub fn atom_var(&self, atom: usize) -> usize {
        self.var_index(&self.atoms[atom].selector().root).expect("atom root is bound")
    }

    /// Index of the quantifier variable a dependent quantifier depends on.
    pub fn dep_index(&self, k: usize) -> Option<usize> {
        self.quantifiers[k].domain.dep().and_then(|d| self.var_index(d))
    }

    pub fn atom_index(&self, a: &Atom) -> Option<usize> {
        self.atoms.iter().position(|b| b == a)
    }

    pub fn to_text(&self) -> String {
        let qs: Vec<String> = self.quantifiers.iter().map(|q| q.to_string()).collect();
        format!("{} . ( {} )", qs.join(" . "), body_text(&self.body))
    }
}

impl fmt::Display for CftlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// ASCII body text, fully parenthesizing compound operands.
pub fn body_text<A: fmt::Display>(p: &Psi<A>) -> String {
    fn operand<A: fmt::Display>(p: &Psi<A>) -> String {
        match p {
            Psi::Or(_) | Psi::And(_) => format!("({})", body_text(p)),
            _ => body_text(p),
        }
    }
    match p {
        Psi::True => "true".into(),
        Psi::False => "false".into(),
        Psi::Atom(a) => a.to_string(),
        Psi::Not(q) => match q.as_ref() {
            Psi::Atom(_) | Psi::True | Psi::False => format!("not {}", body_text(q)),
            _ => format!("not ({})", body_text(q)),
        },
        Psi::Or(v) => v.iter().map(operand).collect::<Vec<_>>().join(" or "),
        Psi::And(v) => v.iter().map(operand).collect::<Vec<_>>().join(" and "),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Psi<String> {
        Psi::Atom(s.to_string())
    }

    #[test]
    fn de_morgan() {
        let f = Psi::not(Psi::And(vec![p("p"), p("q")]));
        assert_eq!(unicode(&normalize(&f)), "¬p∨¬q");
    }

    #[test]
    fn double_negation() {
        assert_eq!(normalize(&Psi::not(Psi::not(p("p")))), p("p"));
    }

    #[test]
    fn nested_rewrite() {
        let f = Psi::And(vec![Psi::Or(vec![p("p"), p("q")]), Psi::not(Psi::Or(vec![p("r"), p("s")]))]);
        assert_eq!(unicode(&normalize(&f)), "(p∨q)∧(¬r∧¬s)");
    }

    #[test]
    fn constants_fold() {
        assert_eq!(normalize(&Psi::Or(vec![p("p"), Psi::True])), Psi::True);
        assert_eq!(normalize(&Psi::And(vec![p("p"), Psi::True])), p("p"));
        assert_eq!(normalize(&Psi::not(Psi::<String>::True)), Psi::False);
    }
}
