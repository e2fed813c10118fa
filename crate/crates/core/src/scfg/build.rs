use super::*;
use crate::lang::ast::{LoopKind, Program, Stmt, StmtKind};

#[derive(Debug, Clone)]
struct End {
    v: usize,
    cond: Condition,
    skip: bool,
}

struct Builder {
    g: Scfg,
}

pub fn build_scfg(p: &Program) -> Scfg {
    let (variables, functions) = collect_symbols(&p.body);
    let start_state = SymbolicState {
        index: 0,
        assignment: variables.iter().chain(functions.iter()).map(|s| (s.clone(), SymVal::Undefined)).collect(),
    };
    let mut b = Builder {
        g: Scfg {
            vertices: vec![start_state],
            origins: vec![Origin::Start],
            lines: vec![None],
            edges: Vec::new(),
            start: 0,
            ends: BTreeSet::new(),
            variables,
            functions,
            stmt_vertex: BTreeMap::new(),
            loop_heads: BTreeSet::new(),
        },
    };
    let ends = b.block(&p.body, vec![End { v: 0, cond: Condition::True, skip: false }]);
    let end_set: BTreeSet<usize> = ends.iter().map(|e| e.v).collect();
    let linked = b.g.edges.iter().any(|e| end_set.contains(&e.src) && end_set.contains(&e.dst));
    if linked {
        let v = b.push_vertex(&ends, Origin::Exit, None);
        for end in &ends {
            b.push_edge(end.v, end.cond.clone(), BTreeSet::from([EdgeType::ControlFlow]), v);
        }
        b.g.ends = BTreeSet::from([v]);
    } else {
        b.g.ends = end_set;
    }
    b.g
}

fn collect_symbols(body: &[Stmt]) -> (BTreeSet<String>, BTreeSet<String>) {
    fn walk(stmts: &[Stmt], vars: &mut BTreeSet<String>, funcs: &mut BTreeSet<String>) {
        let mut refs = Vec::new();
        for s in stmts {
            match &s.kind {
                StmtKind::Assign { target, expr } => {
                    vars.insert(target.clone());
                    expr.variables(&mut refs);
                }
                StmtKind::Call { callee, args } => {
                    funcs.insert(callee.clone());
                    args.iter().for_each(|a| a.variables(&mut refs));
                }
                StmtKind::AssignCall { target, callee, args } => {
                    vars.insert(target.clone());
                    funcs.insert(callee.clone());
                    args.iter().for_each(|a| a.variables(&mut refs));
                }
                StmtKind::If { branches, else_block } => {
                    for (c, b) in branches {
                        c.variables(&mut refs);
                        walk(b, vars, funcs);
                    }
                    if let Some(b) = else_block {
                        walk(b, vars, funcs);
                    }
                }
                StmtKind::Loop { var, cond, block, .. } => {
                    if let Some(v) = var {
                        vars.insert(v.clone());
                    }
                    cond.variables(&mut refs);
                    walk(block, vars, funcs);
                }
                StmtKind::Pass => {}
            }
        }
        vars.extend(refs);
    }
    let mut vars = BTreeSet::new();
    let mut funcs = BTreeSet::new();
    walk(body, &mut vars, &mut funcs);
    funcs.retain(|f| !vars.contains(f));
    (vars, funcs)
}

fn merge(ends: Vec<End>) -> Vec<End> {
    let mut out: Vec<End> = Vec::new();
    for e in ends {
        if let Some(existing) = out.iter_mut().find(|o| o.v == e.v) {
            existing.cond = std::mem::replace(&mut existing.cond, Condition::True).or(e.cond);
            existing.skip |= e.skip;
        } else {
            out.push(e);
        }
    }
    out
}

fn with_cond(ends: &[End], c: &Condition) -> Vec<End> {
    ends.iter()
        .map(|e| End { v: e.v, cond: e.cond.clone().and(c.clone()), skip: e.skip })
        .collect()
}

impl Builder {
    fn push_vertex(&mut self, preds: &[End], origin: Origin, line: Option<usize>) -> usize {
        let index = self.g.vertices.len();
        let mut assignment = BTreeMap::new();
        for s in self.g.variables.iter().chain(self.g.functions.iter()) {
            let all_undefined = preds.iter().all(|p| self.g.vertices[p.v].get(s) == SymVal::Undefined);
            assignment.insert(s.clone(), if all_undefined { SymVal::Undefined } else { SymVal::Unchanged });
        }
        let callee = origin.callee().map(str::to_string);
        if let Some(callee) = &callee {
            for v in &self.g.variables {
                assignment.insert(v.clone(), SymVal::Changed);
            }
            assignment.insert(callee.clone(), SymVal::Called);
        }
        if let Origin::Assign { target } | Origin::AssignCall { target, .. } = &origin {
            assignment.insert(target.clone(), SymVal::Changed);
        }
        self.g.vertices.push(SymbolicState { index, assignment });
        self.g.origins.push(origin);
        self.g.lines.push(line);
        index
    }

    fn push_edge(&mut self, src: usize, condition: Condition, types: BTreeSet<EdgeType>, dst: usize) {
        let index = self.g.edges.len();
        self.g.edges.push(ScfgEdge { index, src, condition, types, dst });
    }

    fn block(&mut self, stmts: &[Stmt], mut ends: Vec<End>) -> Vec<End> {
        for s in stmts {
            ends = self.stmt(s, ends);
        }
        ends
    }

    fn stmt(&mut self, s: &Stmt, ends: Vec<End>) -> Vec<End> {
        let (origin, types) = match &s.kind {
            StmtKind::Pass => return ends,
            StmtKind::Assign { target, .. } => {
                (Origin::Assign { target: target.clone() }, BTreeSet::from([EdgeType::Assignment]))
            }
            StmtKind::Call { callee, .. } => (Origin::Call { callee: callee.clone() }, BTreeSet::from([EdgeType::Call])),
            StmtKind::AssignCall { target, callee, .. } => (
                Origin::AssignCall { target: target.clone(), callee: callee.clone() },
                BTreeSet::from([EdgeType::Call, EdgeType::Assignment]),
            ),
            StmtKind::If { branches, else_block } => return self.conditional(branches, else_block.as_deref(), ends),
            StmtKind::Loop { kind, var, cond, block } => {
                let guard = match (kind, var) {
                    (LoopKind::For, Some(v)) => Guard::ForIn(v.clone(), cond.clone()),
                    _ => Guard::Test(cond.clone()),
                };
                return self.looping(Condition::Guard(guard), block, ends);
            }
        };
        let v = self.push_vertex(&ends, origin, Some(s.line));
        for e in &ends {
            let mut t = types.clone();
            if e.skip {
                t.insert(EdgeType::ControlFlow);
            }
            self.push_edge(e.v, e.cond.clone(), t, v);
        }
        self.g.stmt_vertex.insert(s.id, v);
        vec![End { v, cond: Condition::True, skip: false }]
    }

    fn branch(&mut self, block: &[Stmt], incoming: Vec<End>) -> Vec<End> {
        let before: BTreeSet<usize> = incoming.iter().map(|e| e.v).collect();
        let mut out = self.block(block, incoming);
        for e in &mut out {
            if before.contains(&e.v) {
                e.skip = true;
            }
        }
        out
    }

    fn conditional(&mut self, branches: &[(Expr, Vec<Stmt>)], else_block: Option<&[Stmt]>, ends: Vec<End>) -> Vec<End> {
        let mut out = Vec::new();
        let mut negated = Condition::True;
        for (test, block) in branches {
            let guard = Condition::Guard(Guard::Test(test.clone()));
            let c = negated.clone().and(guard.clone());
            out.extend(self.branch(block, with_cond(&ends, &c)));
            negated = negated.and(guard.negate());
        }
        out.extend(self.branch(else_block.unwrap_or(&[]), with_cond(&ends, &negated)));
        merge(out)
    }

    fn looping(&mut self, guard: Condition, body: &[Stmt], ends: Vec<End>) -> Vec<End> {
        let before = self.g.vertices.len();
        let body_ends = self.block(body, with_cond(&ends, &guard));
        if self.g.vertices.len() == before {
            return ends;
        }
        let heads: BTreeSet<usize> = ends.iter().map(|e| e.v).collect();
        for b in &body_ends {
            if heads.contains(&b.v) {
                continue;
            }
            for h in &heads {
                self.push_edge(b.v, b.cond.clone(), BTreeSet::from([EdgeType::ControlFlow]), *h);
                self.g.loop_heads.insert(*h);
            }
        }
        let exit = guard.negate();
        ends.into_iter()
            .map(|e| End { v: e.v, cond: e.cond.and(exit.clone()), skip: true })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    fn build(src: &str) -> Scfg {
        build_scfg(&parse_program(src).unwrap())
    }

    #[test]
    fn empty_program() {
        let g = build("");
        assert_eq!(g.vertices.len(), 1);
        assert!(g.edges.is_empty());
        assert_eq!(g.start, 0);
        assert_eq!(g.ends, BTreeSet::from([0]));
    }

    #[test]
    fn branch_example() {
        let g = build("a = 10\ni = 10\nj = 20\nif i == j:\n  c = 10\n  f(0.1)\nelse:\n  c = 20\n  f(1.1)\n");
        assert_eq!(g.vertices.len(), 8);
        let out: Vec<&ScfgEdge> = g.out_edges(3).collect();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].condition.to_string(), "i == j");
        assert_eq!(out[1].condition.to_string(), "not (i == j)");
        let calls: Vec<&ScfgEdge> = g.edges.iter().filter(|e| e.types.contains(&EdgeType::Call)).collect();
        assert_eq!(calls.len(), 2);
        for e in calls {
            assert_eq!(g.vertices[e.dst].get("f"), SymVal::Called);
            assert_eq!(g.vertices[e.dst].get("a"), SymVal::Changed);
        }
        assert_eq!(g.ends.len(), 2);
    }

    #[test]
    fn unchanged_after_next_mark() {
        let g = build("a = 1\nb = 2\n");
        assert_eq!(g.vertices[1].get("a"), SymVal::Changed);
        assert_eq!(g.vertices[1].get("b"), SymVal::Undefined);
        assert_eq!(g.vertices[2].get("a"), SymVal::Unchanged);
        assert_eq!(g.vertices[2].get("b"), SymVal::Changed);
    }

    #[test]
    fn loop_back_edge() {
        let g = build("a = 10\nfor i in range(4):\n  if i < 3:\n    f(0.1)\n  else:\n    f(1.1)\n");
        let back: Vec<&ScfgEdge> = g
            .edges
            .iter()
            .filter(|e| e.types == BTreeSet::from([EdgeType::ControlFlow]) && e.dst == 1)
            .collect();
        assert_eq!(back.len(), 2);
        assert_eq!(g.loop_heads, BTreeSet::from([1]));
        assert_eq!(g.ends, BTreeSet::from([1]));
    }

    #[test]
    fn pass_branch_has_no_vertex() {
        let src = "authenticated = 1\nif authenticated:\n  existing_locks = query(\"get locks\", [])\n  if len(existing_locks) > 0:\n    print(\"LOCKS EXIST\")\n    pass\n  else:\n    print(\"NO LOCKS EXIST\")\n    lock = new_lock()\n    query(\"write\", [lock])\nelse:\n  pass\n";
        let g = build(src);
        assert_eq!(g.vertices.len(), 7);
        assert_eq!(g.ends, BTreeSet::from([1, 3, 6]));
        let skip = g.edges.iter().filter(|e| e.types.contains(&EdgeType::ControlFlow)).count();
        assert_eq!(skip, 0);
    }

    #[test]
    fn end_to_end_edge_gets_exit_vertex() {
        let g = build("x = 1\nif x > 0:\n  y = 2\n");
        assert_eq!(g.ends.len(), 1);
        let exit = *g.ends.iter().next().unwrap();
        assert_eq!(g.origins[exit], Origin::Exit);
        for e in &g.edges {
            assert!(!(g.ends.contains(&e.src) && g.ends.contains(&e.dst)));
        }
    }
}
