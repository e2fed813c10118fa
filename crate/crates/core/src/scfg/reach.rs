use super::*;
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityMap {
    pub from_vertex: Vec<BTreeSet<Element>>,
    pub from_edge: Vec<BTreeSet<Element>>,
}

impl ReachabilityMap {
    pub fn from(&self, e: Element) -> &BTreeSet<Element> {
        match e {
            Element::Vertex(v) => &self.from_vertex[v],
            Element::Edge(i) => &self.from_edge[i],
        }
    }

    pub fn before(&self, a: Element, b: Element) -> bool {
        self.from(a).contains(&b)
    }
}

/// Elements reachable from `a` by a nonempty path.
pub fn reachable_from(g: &Scfg, a: Element) -> BTreeSet<Element> {
    let mut seen = BTreeSet::new();
    let mut stack = g.element_successors(a);
    while let Some(x) = stack.pop() {
        if seen.insert(x) {
            stack.extend(g.element_successors(x));
        }
    }
    seen
}

pub fn reachability_map(g: &Scfg) -> ReachabilityMap {
    ReachabilityMap {
        from_vertex: (0..g.vertices.len()).map(|v| reachable_from(g, Element::Vertex(v))).collect(),
        from_edge: (0..g.edges.len()).map(|i| reachable_from(g, Element::Edge(i))).collect(),
    }
}

pub fn is_before(g: &Scfg, a: Element, b: Element) -> Result<bool, ScfgError> {
    for x in [a, b] {
        if !g.contains(x) {
            return Err(ScfgError::UnknownElement(x));
        }
    }
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<Element> = g.element_successors(a).into();
    while let Some(x) = queue.pop_front() {
        if x == b {
            return Ok(true);
        }
        if seen.insert(x) {
            queue.extend(g.element_successors(x));
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::scfg::build_scfg;

    #[test]
    fn chain() {
        let g = build_scfg(&parse_program("a = 1\nb = 2\n").unwrap());
        let r = reachability_map(&g);
        let from = r.from(Element::Vertex(0));
        for e in [Element::Vertex(1), Element::Vertex(2), Element::Edge(0), Element::Edge(1)] {
            assert!(from.contains(&e));
        }
        assert!(!is_before(&g, Element::Vertex(1), Element::Vertex(1)).unwrap());
        assert!(is_before(&g, Element::Vertex(1), Element::Edge(1)).unwrap());
        assert!(!is_before(&g, Element::Edge(1), Element::Vertex(1)).unwrap());
        assert_eq!(
            is_before(&g, Element::Vertex(9), Element::Vertex(0)),
            Err(ScfgError::UnknownElement(Element::Vertex(9)))
        );
    }

    #[test]
    fn loop_body_before_itself() {
        let g = build_scfg(&parse_program("a = 10\nfor i in range(4):\n  if i < 3:\n    f(0.1)\n  else:\n    f(1.1)\n").unwrap());
        assert!(is_before(&g, Element::Vertex(2), Element::Vertex(2)).unwrap());
        assert!(is_before(&g, Element::Vertex(1), Element::Vertex(1)).unwrap());
        assert!(!is_before(&g, Element::Vertex(0), Element::Vertex(0)).unwrap());
    }
}
