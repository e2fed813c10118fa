use super::model::{ConcreteState, EventSink, Kind, ObservationEvent, Payload, RtElem, TransitionRecord};
use crate::cftl::{Atom, CftlFormula, Domain, Step};
use crate::instrument::InstrumentationPlan;
use crate::lang::{execute_with_scfg, ExecError, ExitReport, Program, SimClock};
use crate::monitor::{instantiate_excluding, snapshot_configuration, Configuration, ConfigurationMap, Monitor, Signed, Verdict};
use crate::rational::{self, Rat};
use crate::scfg::{Element, Scfg};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::mpsc;
use std::thread;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("event {seq} at time {time} arrived out of order")]
    OutOfOrderEvent { seq: usize, time: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingClass {
    ScfgBuilt,
    BindingInstrumented,
    ProgramStart,
    StateChange,
    MonitorInstantiated,
    MonitorUpdated,
    VerdictReached,
}

impl TimingClass {
    pub fn name(self) -> &'static str {
        match self {
            TimingClass::ScfgBuilt => "scfg_built",
            TimingClass::BindingInstrumented => "binding_instrumented",
            TimingClass::ProgramStart => "program_start",
            TimingClass::StateChange => "state_change",
            TimingClass::MonitorInstantiated => "monitor_instantiated",
            TimingClass::MonitorUpdated => "monitor_updated",
            TimingClass::VerdictReached => "verdict_reached",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingPoint {
    #[serde(with = "rational::serde_rat")]
    pub time: Rat,
    pub class: TimingClass,
    pub description: String,
}

#[derive(Debug, Clone)]
pub struct LiveMonitor {
    pub id: usize,
    pub monitor: Monitor,
    /// Bound runtime elements, a prefix of the quantifier sequence.
    pub binding: Vec<RtElem>,
    pub static_binding: Vec<Element>,
    pub undecidable: BTreeSet<usize>,
    pub collapsed_at: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct MonitorPool {
    pub live: Vec<LiveMonitor>,
    pub retired: Vec<LiveMonitor>,
}

#[derive(Debug, Clone)]
struct BindSite {
    prefix: Vec<Element>,
    var: usize,
    minimal: bool,
}

#[derive(Debug, Clone)]
struct PrefixInfo {
    static_binding: Vec<Element>,
    extended: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingVerdict {
    pub monitor: usize,
    pub binding: String,
    pub static_binding: Vec<Element>,
    pub verdict: Verdict,
    pub seq: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub global: Verdict,
    pub per_binding: Vec<BindingVerdict>,
    pub partial_bindings: Vec<String>,
    pub monitors_instantiated: usize,
    pub first_violation_seq: Option<usize>,
    pub timing_points: Vec<TimingPoint>,
}

impl VerdictReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("time,class,description\n");
        for tp in &self.timing_points {
            let d = tp.description.replace('"', "\"\"");
            out.push_str(&format!("{},{},\"{}\"\n", rational::format(&tp.time), tp.class.name(), d));
        }
        out
    }
}

#[derive(Default)]
struct History {
    states: BTreeMap<usize, ConcreteState>,
    transitions: BTreeMap<usize, TransitionRecord>,
}

enum Resolution {
    Value(bool),
    Undecidable,
    Pending,
}

/// Online monitoring of one formula against an ordered event stream.
pub struct Engine {
    f: CftlFormula,
    plan: InstrumentationPlan,
    template: Monitor,
    atom_var: Vec<usize>,
    bind_sites: BTreeMap<Element, Vec<BindSite>>,
    pub pool: MonitorPool,
    pub cmap: ConfigurationMap,
    prefixes: BTreeMap<Vec<RtElem>, PrefixInfo>,
    prefix_order: Vec<Vec<RtElem>>,
    history: History,
    timing: Vec<TimingPoint>,
    last: Option<(usize, Rat)>,
    next_id: usize,
    instantiated: usize,
    first_violation: Option<usize>,
}

impl Engine {
    pub fn new(f: &CftlFormula, plan: &InstrumentationPlan) -> Engine {
        let mut bind_sites: BTreeMap<Element, Vec<BindSite>> = BTreeMap::new();
        for b in &plan.bindings {
            for (j, loc) in b.components.iter().enumerate() {
                let prefix = b.components[..=j].to_vec();
                let minimal = plan
                    .points
                    .iter()
                    .any(|p| p.binding == b.id && p.derived_from == j && p.location == *loc && p.minimal);
                let sites = bind_sites.entry(*loc).or_default();
                match sites.iter_mut().find(|s| s.prefix == prefix) {
                    Some(s) => s.minimal |= minimal,
                    None => sites.push(BindSite { prefix, var: j, minimal }),
                }
            }
        }
        Engine {
            template: Monitor::for_formula(f),
            atom_var: (0..f.atoms.len()).map(|i| f.atom_var(i)).collect(),
            f: f.clone(),
            plan: plan.clone(),
            bind_sites,
            pool: MonitorPool::default(),
            cmap: ConfigurationMap::default(),
            prefixes: BTreeMap::new(),
            prefix_order: Vec::new(),
            history: History::default(),
            timing: vec![TimingPoint { time: Rat::from_integer(0.into()), class: TimingClass::ProgramStart, description: "starting instrumented code".into() }],
            last: None,
            next_id: 0,
            instantiated: 0,
            first_violation: None,
        }
    }

    pub fn monitors_instantiated(&self) -> usize {
        self.instantiated
    }

    fn member(&self, d: &Domain, p: &Payload) -> bool {
        match (d, p) {
            (Domain::Changes(x) | Domain::FutureChanges { x, .. }, Payload::State(s)) => s.changed.contains(x),
            (Domain::Calls(f) | Domain::FutureCalls { f, .. }, Payload::Transition(t)) => t.callee.as_deref() == Some(f),
            _ => false,
        }
    }

    fn binding_text(b: &[RtElem]) -> String {
        format!("({})", b.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", "))
    }

    fn register(&mut self, key: Vec<RtElem>, static_binding: Vec<Element>) {
        self.prefix_order.push(key.clone());
        self.prefixes.insert(key, PrefixInfo { static_binding, extended: false });
    }

    fn spawn(&mut self, monitor: Monitor, binding: Vec<RtElem>, static_binding: Vec<Element>, time: &Rat, rule: &str) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        self.instantiated += 1;
        self.timing.push(TimingPoint {
            time: time.clone(),
            class: TimingClass::MonitorInstantiated,
            description: format!("monitor {id} for {} ({rule})", Self::binding_text(&binding)),
        });
        self.pool.live.push(LiveMonitor { id, monitor, binding, static_binding, undecidable: BTreeSet::new(), collapsed_at: None });
        id
    }

    /// Seed valuation for a new monitor extending runtime prefix `p`.
    fn seed(&self, p: &[RtElem]) -> Configuration {
        let j = p.len();
        let keep = |c: &Configuration| -> Configuration {
            c.iter().map(|(&a, &v)| (a, if self.atom_var[a] < j { v } else { Verdict::Unknown })).collect()
        };
        let from = self
            .pool
            .retired
            .iter()
            .chain(self.pool.live.iter())
            .find(|m| m.binding.starts_with(p));
        from.map(|m| keep(&m.monitor.observed)).unwrap_or_default()
    }

    pub fn dispatch(&mut self, e: &ObservationEvent) -> Result<Vec<TimingPoint>, RuntimeError> {
        if let Some((seq, time)) = &self.last {
            if e.seq <= *seq || e.time <= *time {
                return Err(RuntimeError::OutOfOrderEvent { seq: e.seq, time: rational::format(&e.time) });
            }
        }
        self.last = Some((e.seq, e.time.clone()));
        let start = self.timing.len();
        match &e.payload {
            Payload::State(s) => {
                self.history.states.insert(s.index, s.clone());
            }
            Payload::Transition(t) => {
                self.history.states.entry(t.source.index).or_insert_with(|| t.source.clone());
                self.history.states.entry(t.dest.index).or_insert_with(|| t.dest.clone());
                self.history.transitions.insert(t.index, t.clone());
            }
        }
        let elem = e.payload.elem();
        let loc = e.payload.location();
        let what = match &e.payload {
            Payload::State(s) => format!("state τ{} at v{}", s.index, s.support),
            Payload::Transition(t) => match &t.callee {
                Some(c) => format!("transition Δτ{} ({c}) on e{}", t.index, t.support),
                None => format!("transition Δτ{} on e{}", t.index, t.support),
            },
        };
        self.timing.push(TimingPoint { time: e.time.clone(), class: TimingClass::StateChange, description: what });

        let mut touched: BTreeSet<usize> = BTreeSet::new();
        let sites = self.bind_sites.get(&loc).cloned().unwrap_or_default();
        for site in sites {
            let j = site.var;
            if !site.minimal || !self.member(&self.f.quantifiers[j].domain, &e.payload) {
                continue;
            }
            if j == 0 {
                let key = vec![elem];
                if self.prefixes.contains_key(&key) {
                    continue;
                }
                self.register(key.clone(), site.prefix.clone());
                let rule = if self.pool.live.is_empty() { "first variable, no monitors" } else { "first variable, monitors exist" };
                let id = self.spawn(self.template.clone(), key, site.prefix.clone(), &e.time, rule);
                touched.insert(id);
                continue;
            }
            let dep = self.f.dep_index(j).expect("later quantifiers are dependent");
            let candidates: Vec<Vec<RtElem>> = self
                .prefix_order
                .iter()
                .filter(|p| {
                    p.len() == j && self.prefixes[*p].static_binding == site.prefix[..j] && p[dep].pos < elem.pos
                })
                .cloned()
                .collect();
            for p in candidates {
                self.prefixes.get_mut(&p).expect("registered").extended = true;
                let mut key = p.clone();
                key.push(elem);
                if self.prefixes.contains_key(&key) {
                    continue;
                }
                self.register(key.clone(), site.prefix.clone());
                if let Some(m) = self.pool.live.iter_mut().find(|m| m.binding == p) {
                    m.binding = key.clone();
                    m.static_binding = site.prefix.clone();
                    let id = m.id;
                    self.timing.push(TimingPoint {
                        time: e.time.clone(),
                        class: TimingClass::MonitorUpdated,
                        description: format!("monitor {id} bound to {}", Self::binding_text(&key)),
                    });
                    touched.insert(id);
                } else {
                    let seed = self.seed(&p);
                    let exclude: BTreeSet<usize> = (0..self.f.atoms.len()).filter(|&a| self.atom_var[a] >= j).collect();
                    let m = instantiate_excluding(self.template.clone(), &seed, &exclude);
                    let id = self.spawn(m, key, site.prefix.clone(), &e.time, "stored configuration");
                    touched.insert(id);
                }
            }
        }

        touched.extend(self.pool.live.iter().map(|m| m.id));

        for id in touched {
            self.refresh(id, e.seq, &e.time);
        }
        Ok(self.timing[start..].to_vec())
    }

    fn refresh(&mut self, id: usize, seq: usize, time: &Rat) {
        let Some(idx) = self.pool.live.iter().position(|m| m.id == id) else { return };
        let mut applied = Vec::new();
        {
            let m = &self.pool.live[idx];
            for a in 0..self.f.atoms.len() {
                if m.monitor.observed[&a] != Verdict::Unknown || m.undecidable.contains(&a) {
                    continue;
                }
                match self.resolve(a, &m.binding) {
                    Resolution::Value(v) => applied.push((a, Some(v))),
                    Resolution::Undecidable => applied.push((a, None)),
                    Resolution::Pending => {}
                }
            }
        }
        let m = &mut self.pool.live[idx];
        let mut changed = false;
        for (a, v) in applied {
            match v {
                Some(value) => {
                    if m.monitor.verdict() == Verdict::Unknown {
                        m.monitor.observe(Signed { atom: a, value }).expect("atom in range");
                        changed = true;
                    }
                }
                None => {
                    m.undecidable.insert(a);
                }
            }
        }
        if changed {
            self.timing.push(TimingPoint {
                time: time.clone(),
                class: TimingClass::MonitorUpdated,
                description: format!("monitor {id} observed new atom values"),
            });
        }
        let verdict = self.pool.live[idx].monitor.verdict();
        if verdict != Verdict::Unknown {
            let mut m = self.pool.live.remove(idx);
            m.collapsed_at = Some(seq);
            if verdict == Verdict::False && self.first_violation.is_none() {
                self.first_violation = Some(seq);
            }
            self.timing.push(TimingPoint {
                time: time.clone(),
                class: TimingClass::VerdictReached,
                description: format!("monitor {id} for {} reached {}", Self::binding_text(&m.binding), verdict),
            });
            let c = snapshot_configuration(&m.monitor).expect("collapsed");
            self.cmap.store(&m.static_binding, c);
            self.pool.retired.push(m);
        }
    }

    fn resolve(&self, atom: usize, binding: &[RtElem]) -> Resolution {
        let a: &Atom = &self.f.atoms[atom];
        let sel = a.selector();
        let Some(mut cur) = binding.get(self.atom_var[atom]).copied() else { return Resolution::Pending };
        for step in &sel.chain {
            cur = match (step, cur.kind()) {
                (Step::Source, Kind::Transition) => RtElem::state(cur.index()),
                (Step::Dest, Kind::Transition) => RtElem::state(cur.index() + 1),
                (Step::Incident, Kind::State) => {
                    if cur.index() == 0 {
                        return Resolution::Undecidable;
                    }
                    RtElem::transition(cur.index() - 1)
                }
                (Step::NextCall(g), _) => {
                    let found = self
                        .history
                        .transitions
                        .values()
                        .find(|t| RtElem::transition(t.index).pos > cur.pos && t.callee.as_deref() == Some(g.as_str()));
                    match found {
                        Some(t) => RtElem::transition(t.index),
                        None => return Resolution::Pending,
                    }
                }
                (Step::NextChange(x), _) => {
                    let found = self
                        .history
                        .states
                        .values()
                        .find(|s| RtElem::state(s.index).pos > cur.pos && s.changed.contains(x));
                    match found {
                        Some(s) => RtElem::state(s.index),
                        None => return Resolution::Pending,
                    }
                }
                _ => return Resolution::Undecidable,
            };
        }
        match a {
            Atom::StateEq { x, n, .. } => match self.history.states.get(&cur.index()) {
                Some(s) => Resolution::Value(s.values.get(x).and_then(|v| v.number()) == Some(n)),
                None => Resolution::Pending,
            },
            Atom::StateIn { x, iv, .. } => match self.history.states.get(&cur.index()) {
                Some(s) => Resolution::Value(s.values.get(x).and_then(|v| v.number()).is_some_and(|v| iv.contains(v))),
                None => Resolution::Pending,
            },
            Atom::DurationIn { iv, .. } => match self.history.transitions.get(&cur.index()) {
                Some(t) => Resolution::Value(iv.contains(&t.duration)),
                None => Resolution::Pending,
            },
        }
    }

    /// Verdict for the run so far; `complete` once the program has terminated.
    pub fn verdict(&self, complete: bool) -> Verdict {
        let all = self.pool.live.iter().chain(self.pool.retired.iter());
        let mut decided = true;
        for m in all {
            match m.monitor.verdict() {
                Verdict::False => return Verdict::False,
                Verdict::Unknown => decided = false,
                Verdict::True => {}
            }
        }
        let partial = self
            .prefixes
            .iter()
            .any(|(p, info)| p.len() < self.f.quantifiers.len() && !info.extended);
        if complete && decided && !partial { Verdict::True } else { Verdict::Unknown }
    }

    pub fn finalize(self) -> VerdictReport {
        let global = self.verdict(true);
        let n = self.f.quantifiers.len();
        let mut per_binding: Vec<BindingVerdict> = self
            .pool
            .retired
            .iter()
            .chain(self.pool.live.iter())
            .map(|m| BindingVerdict {
                monitor: m.id,
                binding: Self::binding_text(&m.binding),
                static_binding: m.static_binding.clone(),
                verdict: m.monitor.verdict(),
                seq: m.collapsed_at,
            })
            .collect();
        per_binding.sort_by_key(|b| b.monitor);
        let partial_bindings = self
            .prefix_order
            .iter()
            .filter(|p| p.len() < n && !self.prefixes[*p].extended)
            .map(|p| Self::binding_text(p))
            .collect();
        VerdictReport {
            global,
            per_binding,
            partial_bindings,
            monitors_instantiated: self.instantiated,
            first_violation_seq: self.first_violation,
            timing_points: self.timing,
        }
    }
}

impl Engine {
    /// Records the static phase ahead of program start.
    pub fn note_setup(&mut self, g: &Scfg) {
        let zero = Rat::from_integer(0.into());
        let mut setup = vec![TimingPoint {
            time: zero.clone(),
            class: TimingClass::ScfgBuilt,
            description: format!("scfg with {} vertices and {} edges", g.vertices.len(), g.edges.len()),
        }];
        for b in &self.plan.bindings {
            let n = self.plan.points.iter().filter(|p| p.binding == b.id).count();
            setup.push(TimingPoint {
                time: zero.clone(),
                class: TimingClass::BindingInstrumented,
                description: format!("binding {} with {n} points", b.id),
            });
        }
        self.timing.splice(0..0, setup);
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

/// Outcome of monitoring one program run.
#[derive(Debug, Clone)]
pub struct Run {
    pub report: VerdictReport,
    pub events: Vec<ObservationEvent>,
    pub exit: ExitReport,
}

struct Inline<'a> {
    engine: &'a mut Engine,
    events: Vec<ObservationEvent>,
    error: Option<RuntimeError>,
}

impl EventSink for Inline<'_> {
    fn emit(&mut self, event: ObservationEvent) {
        if self.error.is_none() {
            if let Err(e) = self.engine.dispatch(&event) {
                self.error = Some(e);
            }
        }
        self.events.push(event);
    }
}

/// Runs `p` with the engine dispatching inline on every event.
pub fn run_sync(p: &Program, g: &Scfg, f: &CftlFormula, plan: &InstrumentationPlan) -> Result<Run, RunError> {
    let mut engine = Engine::new(f, plan);
    engine.note_setup(g);
    let mut sink = Inline { engine: &mut engine, events: Vec::new(), error: None };
    let exit = execute_with_scfg(p, g, plan, &mut sink, SimClock::default())?;
    let Inline { events, error, .. } = sink;
    if let Some(e) = error {
        return Err(e.into());
    }
    Ok(Run { report: engine.finalize(), events, exit })
}

/// Runs `p` with the engine on its own thread, fed through a channel.
pub fn run_async(p: &Program, g: &Scfg, f: &CftlFormula, plan: &InstrumentationPlan) -> Result<Run, RunError> {
    let (tx, rx) = mpsc::channel::<ObservationEvent>();
    let mut engine = Engine::new(f, plan);
    engine.note_setup(g);
    let worker = thread::spawn(move || -> Result<(VerdictReport, Vec<ObservationEvent>), RuntimeError> {
        let mut events = Vec::new();
        for e in rx {
            engine.dispatch(&e)?;
            events.push(e);
        }
        Ok((engine.finalize(), events))
    });
    let mut sink = tx;
    let exit = execute_with_scfg(p, g, plan, &mut sink, SimClock::default());
    drop(sink);
    let joined = worker.join().expect("monitor thread panicked");
    let exit = exit?;
    let (report, events) = joined?;
    Ok(Run { report, events, exit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cftl::parse_formula;
    use crate::instrument::emit_plan;
    use crate::lang::parse_program;
    use crate::runtime::oracle::{evaluate_observations, oracle_evaluate};
    use crate::scfg::build_scfg;

    fn run(src: &str, spec: &str) -> (Run, CftlFormula, InstrumentationPlan) {
        let p = parse_program(src).unwrap();
        let f = parse_formula(spec).unwrap();
        let g = build_scfg(&p);
        let plan = emit_plan(&f, &g, &p);
        (run_sync(&p, &g, &f, &plan).unwrap(), f, plan)
    }

    const EX1: &str = "database = 1\ndatabase_operation(database)\nclose_connection(database)\n";
    const EX1_SPEC: &str = "forall q in changes(database) . ( q(database) = 1 => (duration(next_call(q, database_operation)) in [0, 2] and duration(next_call(q, close_connection)) in [0, 1]) )";
    const EX2: &str = "database = 1\ndata = [1.1, 1.3, 1.6]\nfor datum in data:\n    operation(datum)\n";
    const EX2_SPEC: &str = "forall q in changes(database) . forall t in future_calls(q, operation) . ( q(database) = 1 => duration(t) in [0, 1] )";

    #[test]
    fn out_of_order_events_are_rejected() {
        let (r, f, plan) = run(EX1, EX1_SPEC);
        let mut e = Engine::new(&f, &plan);
        e.dispatch(&r.events[1]).unwrap();
        assert!(matches!(e.dispatch(&r.events[0]), Err(RuntimeError::OutOfOrderEvent { .. })));
        let mut e = Engine::new(&f, &plan);
        e.dispatch(&r.events[0]).unwrap();
        assert!(e.dispatch(&r.events[0]).is_err());
    }

    #[test]
    fn non_minimal_first_event_does_nothing() {
        let (r, f, plan) = run(EX1, EX1_SPEC);
        let first_transition = r.events.iter().find(|e| matches!(e.payload, Payload::Transition(_))).unwrap();
        assert!(!plan.points[first_transition.point].minimal);
        let mut e = Engine::new(&f, &plan);
        let tps = e.dispatch(first_transition).unwrap();
        assert_eq!(tps.len(), 1);
        assert_eq!(tps[0].class, TimingClass::StateChange);
        assert_eq!(e.monitors_instantiated(), 0);
    }

    #[test]
    fn sample_durations() {
        let (r, _, _) = run(EX1, EX1_SPEC);
        let d: Vec<String> = r.exit.transitions.iter().map(|t| rational::format(&t.duration)).collect();
        assert_eq!(d, ["1", "1"]);
        assert_eq!(r.report.global, Verdict::True);
        assert_eq!(r.report.monitors_instantiated, 1);

        let (r, _, _) = run(EX2, EX2_SPEC);
        let calls: Vec<String> = r
            .exit
            .transitions
            .iter()
            .filter(|t| t.callee.as_deref() == Some("operation"))
            .map(|t| rational::format(&t.duration))
            .collect();
        assert_eq!(calls, ["1.101", "1.301", "1.601"]);
        assert_eq!(r.report.global, Verdict::False);
        assert_eq!(r.report.monitors_instantiated, 3);
    }

    #[test]
    fn loop_story_instantiates_six_monitors() {
        let (r, f, _) = run(
            "a = 20\nfor i in range(6):\n    g(i)\n",
            "forall q in changes(a) . forall t in future_calls(q, g) . ( q(a) = 20 => duration(t) in [0, 10] )",
        );
        assert_eq!(r.report.monitors_instantiated, 6);
        assert_eq!(r.report.global, Verdict::True);
        assert_eq!(oracle_evaluate(&r.exit.observations(), &f), Verdict::True);
    }

    #[test]
    fn one_violation_dominates() {
        let (r, f, _) = run(
            "a = 1\nf(0.5)\nf(2)\nf(0.5)\n",
            "forall q in changes(a) . forall t in future_calls(q, f) . ( duration(t) in [0, 1] )",
        );
        let verdicts: Vec<Verdict> = r.report.per_binding.iter().map(|b| b.verdict).collect();
        assert_eq!(verdicts, [Verdict::True, Verdict::False, Verdict::True]);
        assert_eq!(r.report.global, Verdict::False);
        assert_eq!(oracle_evaluate(&r.exit.observations(), &f), Verdict::False);
    }

    #[test]
    fn violation_reported_at_earliest_event() {
        let (r, f, _) = run(EX2, EX2_SPEC);
        let payloads: Vec<Payload> = r.events.iter().map(|e| e.payload.clone()).collect();
        let earliest = (1..=payloads.len()).find(|&k| evaluate_observations(&payloads[..k], &f, false) == Verdict::False);
        assert_eq!(r.report.first_violation_seq, earliest.map(|k| r.events[k - 1].seq));
    }

    #[test]
    fn pending_next_call_leaves_unknown() {
        let (r, f, _) = run("a = 1\nb = 2\n", "forall q in changes(a) . ( duration(next_call(q, f)) in [0, 1] )");
        assert_eq!(r.report.global, Verdict::Unknown);
        assert_eq!(oracle_evaluate(&r.exit.observations(), &f), Verdict::Unknown);
    }

    #[test]
    fn incident_on_first_state_is_undecidable() {
        let (r, f, _) = run("a = 1\nf(1)\n", "forall q in changes(a) . ( duration(incident(q)) in [0, 1] )");
        assert_eq!(r.report.global, Verdict::Unknown);
        assert_eq!(oracle_evaluate(&r.exit.observations(), &f), Verdict::Unknown);
    }

    #[test]
    fn async_matches_sync() {
        for (src, spec) in [(EX1, EX1_SPEC), (EX2, EX2_SPEC)] {
            let p = parse_program(src).unwrap();
            let f = parse_formula(spec).unwrap();
            let g = build_scfg(&p);
            let plan = emit_plan(&f, &g, &p);
            let a = run_sync(&p, &g, &f, &plan).unwrap();
            let b = run_async(&p, &g, &f, &plan).unwrap();
            assert_eq!(a.report, b.report);
            assert_eq!(a.events, b.events);
        }
    }

    #[test]
    fn timing_classes_follow_causal_order() {
        let (r, _, _) = run(EX2, EX2_SPEC);
        let classes: Vec<TimingClass> = r.report.timing_points.iter().map(|t| t.class).collect();
        let start = classes.iter().position(|c| *c == TimingClass::ProgramStart).unwrap();
        assert!(classes[..start].iter().all(|c| matches!(c, TimingClass::ScfgBuilt | TimingClass::BindingInstrumented)));
        assert_eq!(classes[0], TimingClass::ScfgBuilt);
        let times: Vec<&Rat> = r.report.timing_points.iter().map(|t| &t.time).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.report.timing_csv().starts_with("time,class,description\n0,scfg_built,"));
    }
}
