use super::Psi;
use std::fmt;

/// All subformulas, pre-order, without repeats.
pub fn cl<A: Clone + PartialEq>(p: &Psi<A>) -> Vec<Psi<A>> {
    fn walk<A: Clone + PartialEq>(p: &Psi<A>, out: &mut Vec<Psi<A>>) {
        if !out.contains(p) {
            out.push(p.clone());
        }
        match p {
            Psi::Not(q) => walk(q, out),
            Psi::Or(v) | Psi::And(v) => v.iter().for_each(|q| walk(q, out)),
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(p, &mut out);
    out
}

/// Direct operands as a multiset; literals have none.
pub fn l_cl_m<A: Clone>(p: &Psi<A>) -> Vec<Psi<A>> {
    match p {
        Psi::Or(v) | Psi::And(v) => v.clone(),
        Psi::Not(q) if !p.is_literal() => vec![q.as_ref().clone()],
        _ => Vec::new(),
    }
}

/// Direct operands as a set.
pub fn l_cl<A: Clone + PartialEq>(p: &Psi<A>) -> Vec<Psi<A>> {
    let mut out: Vec<Psi<A>> = Vec::new();
    for q in l_cl_m(p) {
        if !out.contains(&q) {
            out.push(q);
        }
    }
    out
}

/// Compact logical notation, e.g. `(p∧q)∨r`.
pub fn unicode<A: fmt::Display>(p: &Psi<A>) -> String {
    fn operand<A: fmt::Display>(p: &Psi<A>) -> String {
        match p {
            Psi::Or(_) | Psi::And(_) => format!("({})", unicode(p)),
            _ => unicode(p),
        }
    }
    match p {
        Psi::True => "⊤".into(),
        Psi::False => "⊥".into(),
        Psi::Atom(a) => a.to_string(),
        Psi::Not(q) => format!("¬{}", operand(q)),
        Psi::Or(v) => v.iter().map(operand).collect::<Vec<_>>().join("∨"),
        Psi::And(v) => v.iter().map(operand).collect::<Vec<_>>().join("∧"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Psi<String> {
        Psi::Atom(s.to_string())
    }

    #[test]
    fn closure_of_small_formula() {
        let f = Psi::Or(vec![Psi::And(vec![p("p"), p("q")]), p("r")]);
        let names: Vec<String> = cl(&f).iter().map(unicode).collect();
        assert_eq!(names, ["(p∧q)∨r", "p∧q", "p", "q", "r"]);
    }

    #[test]
    fn limited_closures() {
        assert!(l_cl(&p("p")).is_empty());
        assert!(l_cl(&Psi::not(p("p"))).is_empty());
        let f = Psi::Or(vec![p("p"), p("p")]);
        assert_eq!(l_cl_m(&f).len(), 2);
        assert_eq!(l_cl(&f).len(), 1);
        assert_eq!(cl(&Psi::not(p("p"))).len(), 2);
    }
}
