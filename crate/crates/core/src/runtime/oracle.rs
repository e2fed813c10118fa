//! Direct evaluation of a formula over an observation sequence, independent of the monitors.

use super::model::{ConcreteState, Payload, RtElem, TransitionRecord};
use crate::cftl::{Atom, CftlFormula, Domain, Step};
use crate::monitor::Verdict;
use std::collections::{BTreeMap, BTreeSet};

struct Known {
    states: BTreeMap<usize, ConcreteState>,
    transitions: BTreeMap<usize, TransitionRecord>,
    /// Elements observed directly; states embedded in transitions only serve lookups.
    observed: BTreeSet<RtElem>,
}

impl Known {
    fn new(obs: &[Payload]) -> Known {
        let mut k = Known { states: BTreeMap::new(), transitions: BTreeMap::new(), observed: BTreeSet::new() };
        for p in obs {
            k.observed.insert(p.elem());
            match p {
                Payload::State(s) => {
                    k.states.insert(s.index, s.clone());
                }
                Payload::Transition(t) => {
                    k.states.entry(t.source.index).or_insert_with(|| t.source.clone());
                    k.states.entry(t.dest.index).or_insert_with(|| t.dest.clone());
                    k.transitions.insert(t.index, t.clone());
                }
            }
        }
        k
    }

    fn elements(&self) -> Vec<RtElem> {
        self.observed.iter().copied().collect()
    }

    fn member(&self, d: &Domain, e: RtElem) -> bool {
        match d {
            Domain::Changes(x) | Domain::FutureChanges { x, .. } => {
                e.pos.is_multiple_of(2) && self.states.get(&e.index()).is_some_and(|s| s.changed.contains(x))
            }
            Domain::Calls(f) | Domain::FutureCalls { f, .. } => {
                e.pos % 2 == 1 && self.transitions.get(&e.index()).is_some_and(|t| t.callee.as_deref() == Some(f))
            }
        }
    }
}

fn bindings(k: &Known, f: &CftlFormula) -> Vec<Vec<RtElem>> {
    fn rec(k: &Known, f: &CftlFormula, elems: &[RtElem], prefix: &mut Vec<RtElem>, out: &mut Vec<Vec<RtElem>>) {
        let j = prefix.len();
        if j == f.quantifiers.len() {
            out.push(prefix.clone());
            return;
        }
        let q = &f.quantifiers[j];
        let after = f.dep_index(j).map(|d| prefix[d]);
        let domain: Vec<RtElem> = elems
            .iter()
            .copied()
            .filter(|e| k.member(&q.domain, *e) && after.is_none_or(|a| e.pos > a.pos))
            .collect();
        if domain.is_empty() && j > 0 {
            out.push(prefix.clone());
            return;
        }
        for e in domain {
            prefix.push(e);
            rec(k, f, elems, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, f, &k.elements(), &mut Vec::new(), &mut out);
    out
}

/// Full bindings and maximal partial bindings generated by `obs`.
pub fn generated_bindings(obs: &[Payload], f: &CftlFormula) -> Vec<Vec<RtElem>> {
    bindings(&Known::new(obs), f)
}

fn select(k: &Known, f: &CftlFormula, atom: &Atom, b: &[RtElem]) -> Option<RtElem> {
    let sel = atom.selector();
    let mut cur = *b.get(f.var_index(&sel.root)?)?;
    for step in &sel.chain {
        cur = match step {
            Step::Source => RtElem::state(cur.index()),
            Step::Dest => RtElem::state(cur.index() + 1),
            Step::Incident => RtElem::transition(cur.index().checked_sub(1)?),
            Step::NextCall(g) => *k
                .transitions
                .values()
                .map(|t| RtElem::transition(t.index))
                .filter(|e| e.pos > cur.pos)
                .find(|e| k.transitions[&e.index()].callee.as_deref() == Some(g))
                .as_ref()?,
            Step::NextChange(x) => *k
                .states
                .values()
                .filter(|s| RtElem::state(s.index).pos > cur.pos && s.changed.contains(x))
                .map(|s| RtElem::state(s.index))
                .collect::<Vec<_>>()
                .first()?,
        };
    }
    Some(cur)
}

fn atom_value(k: &Known, f: &CftlFormula, atom: &Atom, b: &[RtElem]) -> Option<bool> {
    let e = select(k, f, atom, b)?;
    match atom {
        Atom::StateEq { x, n, .. } => {
            let s = k.states.get(&e.index())?;
            Some(s.values.get(x).and_then(|v| v.number()) == Some(n))
        }
        Atom::StateIn { x, iv, .. } => {
            let s = k.states.get(&e.index())?;
            Some(s.values.get(x).and_then(|v| v.number()).is_some_and(|v| iv.contains(v)))
        }
        Atom::DurationIn { iv, .. } => Some(iv.contains(&k.transitions.get(&e.index())?.duration)),
    }
}

/// Truth value of the body under one binding.
pub fn evaluate_binding(obs: &[Payload], f: &CftlFormula, b: &[RtElem]) -> Verdict {
    let k = Known::new(obs);
    Verdict::from_option(f.body.eval3(&mut |a: &Atom| atom_value(&k, f, a, b)))
}

/// Three-valued verdict; `complete` says no further observations can follow.
pub fn evaluate_observations(obs: &[Payload], f: &CftlFormula, complete: bool) -> Verdict {
    let k = Known::new(obs);
    let bs = bindings(&k, f);
    let mut all_true = true;
    for b in &bs {
        match Verdict::from_option(f.body.eval3(&mut |a: &Atom| atom_value(&k, f, a, b))) {
            Verdict::False => return Verdict::False,
            Verdict::Unknown => all_true = false,
            Verdict::True => {}
        }
        if b.len() < f.quantifiers.len() {
            all_true = false;
        }
    }
    if complete && all_true { Verdict::True } else { Verdict::Unknown }
}

pub fn oracle_evaluate(trace: &[Payload], f: &CftlFormula) -> Verdict {
    evaluate_observations(trace, f, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cftl::parse_formula;
    use crate::instrument::emit_plan;
    use crate::lang::{execute, parse_program, SimClock};
    use crate::scfg::build_scfg;

    fn trace(src: &str, spec: &str) -> Vec<Payload> {
        let p = parse_program(src).unwrap();
        let plan = emit_plan(&parse_formula(spec).unwrap(), &build_scfg(&p), &p);
        execute(&p, &plan, &mut Vec::new(), SimClock::default()).unwrap().observations()
    }

    #[test]
    fn empty_observations_generate_nothing() {
        let f = parse_formula("forall q in changes(a) . ( q(a) = 1 )").unwrap();
        assert!(generated_bindings(&[], &f).is_empty());
        assert_eq!(evaluate_observations(&[], &f, true), Verdict::True);
        assert_eq!(evaluate_observations(&[], &f, false), Verdict::Unknown);
    }

    #[test]
    fn trivial_body_holds() {
        let spec = "forall q in changes(a) . ( true )";
        let f = parse_formula(spec).unwrap();
        assert_eq!(oracle_evaluate(&trace("a = 1\nf(1)\na = 2\n", spec), &f), Verdict::True);
    }

    #[test]
    fn next_call_scans_forward_in_time() {
        let spec = "forall q in changes(a) . ( q(a) = 10 => duration(next_call(q, f)) in [0, 1] )";
        let f = parse_formula(spec).unwrap();
        let obs = trace("a = 10\nfor i in range(4):\n\tif i < 3:\n\t\tf(0.1)\n\telse:\n\t\tf(1.1)\n", spec);
        assert_eq!(generated_bindings(&obs, &f), vec![vec![RtElem::state(0)]]);
        assert_eq!(oracle_evaluate(&obs, &f), Verdict::True);
        let late = parse_formula("forall q in changes(a) . ( duration(next_call(q, f)) in [1, 2] )").unwrap();
        assert_eq!(oracle_evaluate(&obs, &late), Verdict::False);
    }

    #[test]
    fn future_domains_only_reach_forward() {
        let spec = "forall q in changes(a) . forall t in future_calls(q, f) . ( duration(t) in [0, 1] )";
        let f = parse_formula(spec).unwrap();
        let obs = trace("f(2)\na = 1\nf(0.5)\na = 2\n", spec);
        let b = generated_bindings(&obs, &f);
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].len(), 2);
        assert_eq!(b[1].len(), 1);
        assert_eq!(evaluate_observations(&obs, &f, true), Verdict::Unknown);
    }
}
