use super::ast::{BinOp, Expr, LoopKind, Program, Stmt, StmtKind};
use super::value::Value;
use crate::instrument::{digest, InstrumentationPlan};
use crate::rational::{self, Rat};
use crate::runtime::{ConcreteState, EventSink, ObservationEvent, Payload, SymbolValue, TransitionRecord};
use crate::scfg::{build_scfg, Element, Scfg};
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

const STEP_LIMIT: usize = 100_000;
const RANGE_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("runtime error at line {line}: {msg}")]
    RuntimeError { line: usize, msg: String },
    #[error("plan was built for a different program (expected digest {expected}, found {found})")]
    PlanMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimClock {
    pub now: Rat,
    pub statement_cost: Rat,
    pub default_call: Rat,
}

impl Default for SimClock {
    fn default() -> SimClock {
        SimClock { now: Rat::zero(), statement_cost: rational::ratio(1, 1000), default_call: rational::ratio(1, 10) }
    }
}

impl SimClock {
    /// A call lasts as long as its first argument says, if that is a positive number.
    pub fn call_cost(&self, args: &[Value]) -> Rat {
        match args.first() {
            Some(Value::Num(n)) if n.is_positive() => n.clone(),
            _ => self.default_call.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExitReport {
    pub env: BTreeMap<String, Value>,
    pub total_time: Rat,
    pub events: usize,
    /// Every critical state and the transitions between them.
    pub states: Vec<ConcreteState>,
    pub transitions: Vec<TransitionRecord>,
}

impl ExitReport {
    /// The full run as an observation sequence, states and transitions interleaved.
    pub fn observations(&self) -> Vec<Payload> {
        let mut out = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            out.push(Payload::State(s.clone()));
            if let Some(t) = self.transitions.get(i) {
                out.push(Payload::Transition(t.clone()));
            }
        }
        out
    }
}

pub fn execute(p: &Program, plan: &InstrumentationPlan, sink: &mut dyn EventSink, clock: SimClock) -> Result<ExitReport, ExecError> {
    execute_with_scfg(p, &build_scfg(p), plan, sink, clock)
}

pub fn execute_with_scfg(
    p: &Program,
    g: &Scfg,
    plan: &InstrumentationPlan,
    sink: &mut dyn EventSink,
    clock: SimClock,
) -> Result<ExitReport, ExecError> {
    let found = digest(&p.to_text());
    if plan.program_digest != found {
        return Err(ExecError::PlanMismatch { expected: plan.program_digest.clone(), found });
    }
    let critical: BTreeSet<String> = plan.critical.iter().cloned().collect();
    let mut instrumented: BTreeMap<Element, (usize, usize)> = BTreeMap::new();
    for pt in &plan.points {
        instrumented.entry(pt.location).or_insert((pt.id, pt.binding));
    }
    let mut m = Machine {
        g,
        critical_vertex: g.critical_vertices(&critical),
        critical,
        instrumented,
        clock,
        env: BTreeMap::new(),
        cur: g.start,
        path: Vec::new(),
        last: None,
        states: Vec::new(),
        transitions: Vec::new(),
        seq: 0,
        tokens: 0,
        steps: 0,
        sink,
    };
    m.block(&p.body)?;
    Ok(ExitReport {
        env: m.env,
        total_time: m.clock.now,
        events: m.seq,
        states: m.states,
        transitions: m.transitions,
    })
}

struct Machine<'a> {
    g: &'a Scfg,
    critical: BTreeSet<String>,
    critical_vertex: Vec<bool>,
    instrumented: BTreeMap<Element, (usize, usize)>,
    clock: SimClock,
    env: BTreeMap<String, Value>,
    cur: usize,
    path: Vec<usize>,
    last: Option<ConcreteState>,
    states: Vec<ConcreteState>,
    transitions: Vec<TransitionRecord>,
    seq: usize,
    tokens: u64,
    steps: usize,
    sink: &'a mut dyn EventSink,
}

fn fail<T>(line: usize, msg: impl Into<String>) -> Result<T, ExecError> {
    Err(ExecError::RuntimeError { line, msg: msg.into() })
}

impl Machine<'_> {
    fn block(&mut self, stmts: &[Stmt]) -> Result<(), ExecError> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn tick(&mut self, line: usize) -> Result<(), ExecError> {
        self.steps += 1;
        if self.steps > STEP_LIMIT {
            return fail(line, "step limit exceeded");
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), ExecError> {
        self.tick(s.line)?;
        match &s.kind {
            StmtKind::Pass => {
                self.clock.now += &self.clock.statement_cost;
            }
            StmtKind::Assign { target, expr } => {
                let v = self.eval(expr, s.line)?;
                self.clock.now += &self.clock.statement_cost;
                let changed = self.assign(target, v);
                self.arrive(s, None, changed)?;
            }
            StmtKind::Call { callee, args } => {
                let args = self.eval_all(args, s.line)?;
                self.clock.now += self.clock.call_cost(&args);
                let ret = self.builtin(callee);
                self.arrive(s, Some((callee.clone(), ret)), None)?;
            }
            StmtKind::AssignCall { target, callee, args } => {
                let args = self.eval_all(args, s.line)?;
                self.clock.now += self.clock.call_cost(&args);
                let ret = self.builtin(callee);
                let changed = self.assign(target, ret.clone());
                self.arrive(s, Some((callee.clone(), ret)), changed)?;
            }
            StmtKind::If { branches, else_block } => {
                for (cond, block) in branches {
                    if self.eval(cond, s.line)?.truthy() {
                        return self.block(block);
                    }
                }
                if let Some(block) = else_block {
                    self.block(block)?;
                }
            }
            StmtKind::Loop { kind: LoopKind::For, var, cond, block } => {
                let items = match self.eval(cond, s.line)? {
                    Value::List(items) => items,
                    other => return fail(s.line, format!("cannot iterate over a {}", other.type_name())),
                };
                let head = self.cur;
                let var = var.as_deref().unwrap_or("_");
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        self.tick(s.line)?;
                        self.revisit(head, s.line)?;
                    }
                    self.env.insert(var.to_string(), item.clone());
                    self.block(block)?;
                }
                self.leave(head, s.line)?;
            }
            StmtKind::Loop { kind: LoopKind::While, cond, block, .. } => {
                let head = self.cur;
                let mut first = true;
                loop {
                    if !first {
                        self.tick(s.line)?;
                    }
                    if !self.eval(cond, s.line)?.truthy() {
                        break;
                    }
                    if !first {
                        self.revisit(head, s.line)?;
                    }
                    first = false;
                    self.block(block)?;
                }
                self.leave(head, s.line)?;
            }
        }
        Ok(())
    }

    /// Any assignment changes its target, even to an equal value.
    fn assign(&mut self, target: &str, v: Value) -> Option<String> {
        self.env.insert(target.to_string(), v);
        Some(target.to_string())
    }

    fn builtin(&mut self, callee: &str) -> Value {
        match callee {
            "query" => Value::List(Vec::new()),
            "new_lock" => {
                self.tokens += 1;
                Value::Token(self.tokens)
            }
            _ => Value::None,
        }
    }

    fn step_to(&mut self, dst: usize, line: usize) -> Result<(), ExecError> {
        let Some(e) = self.g.find_edge(self.cur, dst) else {
            return fail(line, format!("no control flow edge from v{} to v{dst}", self.cur));
        };
        self.path.push(e);
        self.cur = dst;
        Ok(())
    }

    /// Takes the back-edge to the loop head and records the head again.
    fn revisit(&mut self, head: usize, line: usize) -> Result<(), ExecError> {
        if self.cur == head {
            return Ok(());
        }
        self.step_to(head, line)?;
        self.clock.now += &self.clock.statement_cost;
        self.record(None, None);
        Ok(())
    }

    fn leave(&mut self, head: usize, line: usize) -> Result<(), ExecError> {
        if self.cur != head {
            self.step_to(head, line)?;
        }
        Ok(())
    }

    fn arrive(&mut self, s: &Stmt, called: Option<(String, Value)>, changed: Option<String>) -> Result<(), ExecError> {
        let Some(&v) = self.g.stmt_vertex.get(&s.id) else {
            return fail(s.line, "statement has no graph vertex");
        };
        self.step_to(v, s.line)?;
        self.record(called, changed);
        Ok(())
    }

    fn emit(&mut self, time: Rat, loc: Element, payload: Payload) {
        if let Some(&(point, binding)) = self.instrumented.get(&loc) {
            let ev = ObservationEvent { seq: self.seq, time, point, binding, payload };
            self.seq += 1;
            self.sink.emit(ev);
        }
    }

    fn record(&mut self, called: Option<(String, Value)>, changed: Option<String>) {
        let v = self.cur;
        if !self.critical_vertex[v] {
            return;
        }
        let mut values = BTreeMap::new();
        for sym in &self.critical {
            let val = if self.g.functions.contains(sym) {
                match &called {
                    Some((name, ret)) if name == sym => SymbolValue::Called(ret.clone()),
                    _ => SymbolValue::NotCalled,
                }
            } else {
                self.env.get(sym).cloned().map_or(SymbolValue::Undefined, SymbolValue::Val)
            };
            values.insert(sym.clone(), val);
        }
        let state = ConcreteState {
            index: self.states.len(),
            time: self.clock.now.clone(),
            support: v,
            values,
            changed: changed.into_iter().collect(),
        };
        let path = std::mem::take(&mut self.path);
        if let Some(prev) = self.last.take() {
            let support = *path.last().expect("a path links consecutive states");
            let edge = &self.g.edges[support];
            let tr = TransitionRecord {
                index: prev.index,
                start: prev.time.clone(),
                duration: &state.time - &prev.time,
                support,
                callee: called.as_ref().map(|(name, _)| name.clone()),
                types: edge.types.clone(),
                path,
                source: prev.clone(),
                dest: state.clone(),
            };
            let stamp = (&prev.time + &state.time) / rational::int(2);
            self.emit(stamp, Element::Edge(support), Payload::Transition(tr.clone()));
            self.transitions.push(tr);
        }
        self.emit(state.time.clone(), Element::Vertex(v), Payload::State(state.clone()));
        self.states.push(state.clone());
        self.last = Some(state);
    }

    fn eval_all(&mut self, args: &[Expr], line: usize) -> Result<Vec<Value>, ExecError> {
        args.iter().map(|a| self.eval(a, line)).collect()
    }

    fn eval(&mut self, e: &Expr, line: usize) -> Result<Value, ExecError> {
        Ok(match e {
            Expr::Num(n) => Value::Num(n.clone()),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::List(items) => Value::List(self.eval_all(items, line)?),
            Expr::Var(v) => match self.env.get(v) {
                Some(val) => val.clone(),
                None => return fail(line, format!("unknown identifier `{v}`")),
            },
            Expr::Neg(inner) => match self.eval(inner, line)? {
                Value::Num(n) => Value::Num(-n),
                other => return fail(line, format!("cannot negate a {}", other.type_name())),
            },
            Expr::Len(inner) => match self.eval(inner, line)? {
                Value::List(v) => Value::Num(rational::int(v.len() as i64)),
                Value::Str(s) => Value::Num(rational::int(s.chars().count() as i64)),
                other => return fail(line, format!("a {} has no length", other.type_name())),
            },
            Expr::Range(inner) => {
                let n = match self.eval(inner, line)? {
                    Value::Num(n) if n.is_integer() => n.to_integer().to_i64().unwrap_or(i64::MAX),
                    other => return fail(line, format!("range needs an integer, got {other}")),
                };
                if n > RANGE_LIMIT as i64 {
                    return fail(line, "range too large");
                }
                Value::List((0..n.max(0)).map(|i| Value::Num(rational::int(i))).collect())
            }
            Expr::Bin(op, l, r) => {
                let l = self.eval(l, line)?;
                let r = self.eval(r, line)?;
                binary(*op, l, r).or_else(|msg| fail(line, msg))?
            }
        })
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> Result<Value, String> {
    use std::cmp::Ordering;
    let mismatch = |l: &Value, r: &Value| format!("`{}` is not defined for {} and {}", op.symbol(), l.type_name(), r.type_name());
    match op {
        BinOp::Eq => Ok(Value::Bool(l == r)),
        BinOp::Ne => Ok(Value::Bool(l != r)),
        BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => {
            let ord: Ordering = match (&l, &r) {
                (Value::Num(a), Value::Num(b)) => a.cmp(b),
                (Value::Str(a), Value::Str(b)) => a.cmp(b),
                _ => return Err(mismatch(&l, &r)),
            };
            Ok(Value::Bool(match op {
                BinOp::Lt => ord == Ordering::Less,
                BinOp::Gt => ord == Ordering::Greater,
                BinOp::Le => ord != Ordering::Greater,
                _ => ord != Ordering::Less,
            }))
        }
        BinOp::Add => match (l, r) {
            (Value::Num(a), Value::Num(b)) => Ok(Value::Num(a + b)),
            (Value::Str(a), Value::Str(b)) => Ok(Value::Str(a + &b)),
            (Value::List(mut a), Value::List(b)) => {
                a.extend(b);
                Ok(Value::List(a))
            }
            (l, r) => Err(mismatch(&l, &r)),
        },
        BinOp::Sub => match (l, r) {
            (Value::Num(a), Value::Num(b)) => Ok(Value::Num(a - b)),
            (l, r) => Err(mismatch(&l, &r)),
        },
        BinOp::Mul => match (l, r) {
            (Value::Num(a), Value::Num(b)) => Ok(Value::Num(a * b)),
            (l, r) => Err(mismatch(&l, &r)),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cftl::parse_formula;
    use crate::instrument::emit_plan;
    use crate::lang::parse_program;

    const DDS: &str = "a = 10\nfor i in range(4):\n\tif i < 3:\n\t\tf(0.1)\n\telse:\n\t\tf(1.1)\n";

    fn exec(src: &str, spec: &str) -> Result<ExitReport, ExecError> {
        let p = parse_program(src).unwrap();
        let plan = emit_plan(&parse_formula(spec).unwrap(), &build_scfg(&p), &p);
        execute(&p, &plan, &mut Vec::new(), SimClock::default())
    }

    #[test]
    fn loop_run_state_sequence() {
        let r = exec(DDS, "forall q in changes(a) . ( duration(next_call(q, f)) in [0, 1] )").unwrap();
        assert_eq!(r.states.len(), 8);
        for (i, s) in r.states.iter().enumerate() {
            assert_eq!(s.values["a"], SymbolValue::Val(Value::Num(rational::int(10))));
            assert_eq!(matches!(s.values["f"], SymbolValue::Called(_)), i % 2 == 1, "state {i}");
        }
        let calls: Vec<String> =
            r.transitions.iter().filter(|t| t.callee.is_some()).map(|t| rational::format(&t.duration)).collect();
        assert_eq!(calls, ["0.1", "0.1", "0.1", "1.1"]);
        assert!(r.transitions.iter().all(|t| t.start == r.states[t.index].time && t.source == r.states[t.index]));
        assert!(r.states.windows(2).all(|w| w[0].time < w[1].time));
    }

    #[test]
    fn events_only_at_instrumented_locations() {
        let p = parse_program(DDS).unwrap();
        let g = build_scfg(&p);
        let plan = emit_plan(&parse_formula("forall q in changes(a) . ( q(a) = 10 )").unwrap(), &g, &p);
        let mut events = Vec::new();
        let r = execute_with_scfg(&p, &g, &plan, &mut events, SimClock::default()).unwrap();
        assert_eq!(r.events, events.len());
        assert!(events.iter().all(|e| e.payload.location() == Element::Vertex(1)));
        let changes: Vec<bool> =
            events.iter().map(|e| matches!(&e.payload, Payload::State(s) if s.changed.contains("a"))).collect();
        assert_eq!(changes, [true, false, false, false]);
    }

    #[test]
    fn runtime_errors_carry_lines() {
        let err = exec("a = 1\nb = a + c\n", "forall q in changes(a) . ( true )").unwrap_err();
        assert!(matches!(err, ExecError::RuntimeError { line: 2, .. }), "{err}");
    }

    #[test]
    fn plan_for_other_program_is_refused() {
        let p = parse_program("a = 1\n").unwrap();
        let other = parse_program("a = 2\n").unwrap();
        let plan = emit_plan(&parse_formula("forall q in changes(a) . ( true )").unwrap(), &build_scfg(&other), &other);
        let err = execute(&p, &plan, &mut Vec::new(), SimClock::default()).unwrap_err();
        assert!(matches!(err, ExecError::PlanMismatch { .. }));
    }

    #[test]
    fn runaway_loops_stop() {
        let err = exec("a = 1\nwhile a > 0:\n    a = a + 1\n", "forall q in changes(a) . ( true )").unwrap_err();
        assert!(matches!(err, ExecError::RuntimeError { .. }));
    }

    #[test]
    fn call_cost_reads_first_argument() {
        let c = SimClock::default();
        assert_eq!(c.call_cost(&[Value::Num(rational::ratio(3, 2))]), rational::ratio(3, 2));
        assert_eq!(c.call_cost(&[Value::Str("write".into())]), rational::ratio(1, 10));
        assert_eq!(c.call_cost(&[Value::Num(rational::int(0))]), rational::ratio(1, 10));
        assert_eq!(c.call_cost(&[]), rational::ratio(1, 10));
    }
}
