use super::Verdict;
use crate::cftl::{normalize, unicode, Psi};
use std::fmt::Display;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    And,
    Or,
    Lit { atom: usize, positive: bool },
    Const(bool),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    pub alive: bool,
    pub label: String,
    trues: usize,
    falses: usize,
}

/// An observed atom together with the truth value it was observed to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signed {
    pub atom: usize,
    pub value: bool,
}

#[derive(Debug, Clone)]
pub struct FormulaTree {
    pub nodes: Vec<Node>,
    pub root: usize,
    pub atom_count: usize,
}

pub fn build_tree<A: Clone + PartialEq + Display>(body: &Psi<A>, atoms: &[A]) -> FormulaTree {
    let body = normalize(body);
    let mut t = FormulaTree { nodes: Vec::new(), root: 0, atom_count: atoms.len() };
    t.root = t.add(&body, atoms, None);
    t
}

impl FormulaTree {
    fn add<A: Clone + PartialEq + Display>(&mut self, p: &Psi<A>, atoms: &[A], parent: Option<usize>) -> usize {
        let id = self.nodes.len();
        let lookup = |a: &A| atoms.iter().position(|b| b == a).expect("atom listed");
        let kind = match p {
            Psi::True => NodeKind::Const(true),
            Psi::False => NodeKind::Const(false),
            Psi::Atom(a) => NodeKind::Lit { atom: lookup(a), positive: true },
            Psi::Not(inner) => match inner.as_ref() {
                Psi::Atom(a) => NodeKind::Lit { atom: lookup(a), positive: false },
                _ => unreachable!("normalized formulas negate atoms only"),
            },
            Psi::And(_) => NodeKind::And,
            Psi::Or(_) => NodeKind::Or,
        };
        self.nodes.push(Node { kind, children: Vec::new(), parent, alive: true, label: unicode(p), trues: 0, falses: 0 });
        if let Psi::And(v) | Psi::Or(v) = p {
            for q in v {
                let c = self.add(q, atoms, Some(id));
                self.nodes[id].children.push(c);
                if let NodeKind::Const(b) = self.nodes[c].kind {
                    if b { self.nodes[id].trues += 1 } else { self.nodes[id].falses += 1 }
                }
            }
        }
        id
    }

    pub fn vertex_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn verdict(&self) -> Verdict {
        match self.nodes[self.root].kind {
            NodeKind::Const(true) => Verdict::True,
            NodeKind::Const(false) => Verdict::False,
            _ => Verdict::Unknown,
        }
    }

    /// Live parent→child pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.alive)
            .flat_map(|(i, n)| n.children.iter().map(move |c| (i, *c)))
            .collect()
    }

    fn decided(&self, n: usize) -> Option<bool> {
        let node = &self.nodes[n];
        let len = node.children.len();
        match node.kind {
            NodeKind::Const(b) => Some(b),
            NodeKind::And if node.falses > 0 => Some(false),
            NodeKind::And if node.trues == len => Some(true),
            NodeKind::Or if node.trues > 0 => Some(true),
            NodeKind::Or if node.falses == len => Some(false),
            _ => None,
        }
    }

    fn kill(&mut self, n: usize) {
        let children = std::mem::take(&mut self.nodes[n].children);
        for c in children {
            self.nodes[c].alive = false;
            self.kill(c);
        }
    }

    /// Replaces the subtree at `n` by a constant.
    fn collapse(&mut self, n: usize, value: bool) {
        if matches!(self.nodes[n].kind, NodeKind::Const(_)) {
            return;
        }
        self.kill(n);
        self.nodes[n].kind = NodeKind::Const(value);
        if let Some(p) = self.nodes[n].parent {
            if value { self.nodes[p].trues += 1 } else { self.nodes[p].falses += 1 }
        }
    }

    /// Recursive traversal: substitute at matching leaves, collapse bottom-up.
    pub fn check(&mut self, obs: Signed) -> Verdict {
        self.check_node(self.root, obs);
        self.verdict()
    }

    fn check_node(&mut self, n: usize, obs: Signed) -> Option<bool> {
        match self.nodes[n].kind {
            NodeKind::Const(b) => Some(b),
            NodeKind::Lit { atom, positive } => {
                if atom != obs.atom {
                    return None;
                }
                let v = positive == obs.value;
                self.collapse(n, v);
                Some(v)
            }
            NodeKind::And | NodeKind::Or => {
                for c in self.nodes[n].children.clone() {
                    if !matches!(self.nodes[c].kind, NodeKind::Const(_)) {
                        self.check_node(c, obs);
                    }
                }
                let d = self.decided(n);
                if let Some(v) = d {
                    self.collapse(n, v);
                }
                d
            }
        }
    }

    /// Closure-map driven check: direct lookup, then upward collapse.
    pub fn optimised_check(&mut self, cm: &ClosureMap, obs: Signed) -> Result<Verdict, super::MonitorError> {
        if obs.atom >= self.atom_count {
            return Err(super::MonitorError::UnknownAtom(obs.atom));
        }
        for phi in cm.lookup(obs.atom) {
            if !self.nodes[phi].alive {
                continue;
            }
            if let NodeKind::Lit { atom, positive } = self.nodes[phi].kind {
                if atom == obs.atom {
                    self.collapse(phi, positive == obs.value);
                }
                continue;
            }
            if matches!(self.nodes[phi].kind, NodeKind::Const(_)) {
                continue;
            }
            for c in self.nodes[phi].children.clone() {
                if let NodeKind::Lit { atom, positive } = self.nodes[c].kind {
                    if atom == obs.atom {
                        self.collapse(c, positive == obs.value);
                    }
                }
            }
            let mut cur = phi;
            while let Some(v) = self.decided(cur) {
                if matches!(self.nodes[cur].kind, NodeKind::Const(_)) {
                    break;
                }
                self.collapse(cur, v);
                match self.nodes[cur].parent {
                    Some(p) if self.nodes[p].alive => cur = p,
                    _ => break,
                }
            }
        }
        Ok(self.verdict())
    }
}

/// Signed atom to the immediate parent subformulas holding that literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureMap {
    pub entries: std::collections::BTreeMap<(usize, bool), Vec<usize>>,
}

pub fn closure_map(tree: &FormulaTree) -> ClosureMap {
    let mut entries = std::collections::BTreeMap::new();
    for a in 0..tree.atom_count {
        entries.insert((a, true), Vec::new());
        entries.insert((a, false), Vec::new());
    }
    fn walk(t: &FormulaTree, n: usize, entries: &mut std::collections::BTreeMap<(usize, bool), Vec<usize>>) {
        for &c in &t.nodes[n].children {
            match t.nodes[c].kind {
                NodeKind::Lit { atom, positive } => {
                    let e = entries.entry((atom, positive)).or_default();
                    if !e.contains(&n) {
                        e.push(n);
                    }
                }
                NodeKind::And | NodeKind::Or => walk(t, c, entries),
                NodeKind::Const(_) => {}
            }
        }
    }
    match tree.nodes[tree.root].kind {
        NodeKind::Lit { atom, positive } => {
            entries.insert((atom, positive), vec![tree.root]);
        }
        _ => walk(tree, tree.root, &mut entries),
    }
    ClosureMap { entries }
}

impl ClosureMap {
    /// Union of the positive and negative entries, in node order.
    pub fn lookup(&self, atom: usize) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for key in [(atom, true), (atom, false)] {
            for &n in self.entries.get(&key).map(Vec::as_slice).unwrap_or(&[]) {
                if !out.contains(&n) {
                    out.push(n);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn render(&self, tree: &FormulaTree, atom: usize, positive: bool, name: &str) -> String {
        let key = if positive { name.to_string() } else { format!("¬{name}") };
        let set = self.entries.get(&(atom, positive)).map(Vec::as_slice).unwrap_or(&[]);
        if set.is_empty() {
            return format!("M({key}) = ∅");
        }
        let labels: Vec<&str> = set.iter().map(|&n| tree.nodes[n].label.as_str()).collect();
        format!("M({key}) = {{{}}}", labels.join(", "))
    }
}
