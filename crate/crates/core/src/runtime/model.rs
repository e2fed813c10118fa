use crate::lang::Value;
use crate::rational::{self, Rat};
use crate::scfg::{EdgeType, Element};
use serde_json::{json, Map, Value as Json};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::mpsc::Sender;

/// What a critical symbol holds in a concrete state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolValue {
    Undefined,
    NotCalled,
    Called(Value),
    Val(Value),
}

impl SymbolValue {
    pub fn number(&self) -> Option<&Rat> {
        match self {
            SymbolValue::Val(v) | SymbolValue::Called(v) => v.as_num(),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            SymbolValue::Undefined => json!("undefined"),
            SymbolValue::NotCalled => json!("not called"),
            SymbolValue::Called(v) => json!({ "called": v.to_json() }),
            SymbolValue::Val(v) => v.to_json(),
        }
    }

    pub fn from_json(j: &Json) -> Option<SymbolValue> {
        match j.as_str() {
            Some("undefined") => return Some(SymbolValue::Undefined),
            Some("not called") => return Some(SymbolValue::NotCalled),
            _ => {}
        }
        if let Some(inner) = j.as_object().and_then(|o| o.get("called")) {
            return Some(SymbolValue::Called(Value::from_json(inner)?));
        }
        Some(SymbolValue::Val(Value::from_json(j)?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteState {
    pub index: usize,
    pub time: Rat,
    pub support: usize,
    pub values: BTreeMap<String, SymbolValue>,
    /// Variables whose value differs from the previous one at this state.
    pub changed: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionRecord {
    pub index: usize,
    pub start: Rat,
    pub duration: Rat,
    pub path: Vec<usize>,
    pub support: usize,
    pub callee: Option<String>,
    pub types: BTreeSet<EdgeType>,
    pub source: ConcreteState,
    pub dest: ConcreteState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    State,
    Transition,
}

/// A state or transition identified by its index in the run; ordered by position in the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RtElem {
    pub pos: usize,
}

impl RtElem {
    pub fn state(i: usize) -> RtElem {
        RtElem { pos: 2 * i }
    }

    pub fn transition(i: usize) -> RtElem {
        RtElem { pos: 2 * i + 1 }
    }

    pub fn kind(self) -> Kind {
        if self.pos.is_multiple_of(2) { Kind::State } else { Kind::Transition }
    }

    pub fn index(self) -> usize {
        self.pos / 2
    }
}

impl std::fmt::Display for RtElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind() {
            Kind::State => write!(f, "τ{}", self.index()),
            Kind::Transition => write!(f, "Δτ{}", self.index()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Payload {
    State(ConcreteState),
    Transition(TransitionRecord),
}

impl Payload {
    pub fn elem(&self) -> RtElem {
        match self {
            Payload::State(s) => RtElem::state(s.index),
            Payload::Transition(t) => RtElem::transition(t.index),
        }
    }

    pub fn location(&self) -> Element {
        match self {
            Payload::State(s) => Element::Vertex(s.support),
            Payload::Transition(t) => Element::Edge(t.support),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationEvent {
    pub seq: usize,
    pub time: Rat,
    pub point: usize,
    pub binding: usize,
    pub payload: Payload,
}

pub trait EventSink {
    fn emit(&mut self, event: ObservationEvent);
}

impl EventSink for Vec<ObservationEvent> {
    fn emit(&mut self, event: ObservationEvent) {
        self.push(event);
    }
}

impl EventSink for Sender<ObservationEvent> {
    fn emit(&mut self, event: ObservationEvent) {
        let _ = self.send(event);
    }
}

/// Forwards to several sinks in order.
pub struct Tee<'a>(pub Vec<&'a mut dyn EventSink>);

impl EventSink for Tee<'_> {
    fn emit(&mut self, event: ObservationEvent) {
        for s in self.0.iter_mut() {
            s.emit(event.clone());
        }
    }
}

fn state_json(s: &ConcreteState) -> Json {
    let values: Map<String, Json> = s.values.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
    json!({
        "index": s.index,
        "time": rational::to_exact(&s.time),
        "support": s.support,
        "values": values,
        "changed": s.changed.iter().collect::<Vec<_>>(),
    })
}

fn state_from_json(j: &Json) -> Result<ConcreteState, String> {
    let o = j.as_object().ok_or("state must be an object")?;
    let index = o.get("index").and_then(Json::as_u64).ok_or("missing state index")? as usize;
    let time = o.get("time").and_then(Json::as_str).and_then(rational::parse).ok_or("bad state time")?;
    let support = o.get("support").and_then(Json::as_u64).ok_or("missing support")? as usize;
    let mut values = BTreeMap::new();
    for (k, v) in o.get("values").and_then(Json::as_object).ok_or("missing values")? {
        values.insert(k.clone(), SymbolValue::from_json(v).ok_or_else(|| format!("bad value for `{k}`"))?);
    }
    let changed = o
        .get("changed")
        .and_then(Json::as_array)
        .ok_or("missing changed")?
        .iter()
        .map(|c| c.as_str().map(str::to_string).ok_or("bad changed entry"))
        .collect::<Result<_, _>>()?;
    Ok(ConcreteState { index, time, support, values, changed })
}

impl ObservationEvent {
    /// One trace line.
    pub fn to_json_line(&self) -> String {
        let mut o = Map::new();
        o.insert("seq".into(), json!(self.seq));
        o.insert("t".into(), json!(rational::to_exact(&self.time)));
        match &self.payload {
            Payload::State(s) => {
                o.insert("kind".into(), json!("state"));
                o.insert("point".into(), json!(self.point));
                o.insert("binding".into(), json!(self.binding));
                let full = state_json(s);
                for (k, v) in full.as_object().unwrap() {
                    o.insert(k.clone(), v.clone());
                }
            }
            Payload::Transition(t) => {
                o.insert("kind".into(), json!("transition"));
                o.insert("point".into(), json!(self.point));
                o.insert("binding".into(), json!(self.binding));
                o.insert(
                    "values".into(),
                    json!({ "duration": rational::to_exact(&t.duration), "callee": t.callee }),
                );
                o.insert("index".into(), json!(t.index));
                o.insert("support".into(), json!(t.support));
                o.insert("start".into(), json!(rational::to_exact(&t.start)));
                o.insert("path".into(), json!(t.path));
                o.insert("types".into(), json!(t.types.iter().map(|e| e.name()).collect::<Vec<_>>()));
                o.insert("source".into(), state_json(&t.source));
                o.insert("dest".into(), state_json(&t.dest));
            }
        }
        Json::Object(o).to_string()
    }

    pub fn from_json_line(line: &str) -> Result<ObservationEvent, String> {
        let j: Json = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let o = j.as_object().ok_or("event must be an object")?;
        let get_u = |k: &str| o.get(k).and_then(Json::as_u64).map(|n| n as usize).ok_or(format!("missing `{k}`"));
        let seq = get_u("seq")?;
        let time = o.get("t").and_then(Json::as_str).and_then(rational::parse).ok_or("bad `t`")?;
        let point = get_u("point")?;
        let binding = get_u("binding")?;
        let payload = match o.get("kind").and_then(Json::as_str) {
            Some("state") => Payload::State(state_from_json(&j)?),
            Some("transition") => {
                let values = o.get("values").and_then(Json::as_object).ok_or("missing values")?;
                let duration = values.get("duration").and_then(Json::as_str).and_then(rational::parse).ok_or("bad duration")?;
                let callee = match values.get("callee") {
                    Some(Json::String(s)) => Some(s.clone()),
                    Some(Json::Null) | None => None,
                    _ => return Err("bad callee".into()),
                };
                let start = o.get("start").and_then(Json::as_str).and_then(rational::parse).ok_or("bad start")?;
                let path = o
                    .get("path")
                    .and_then(Json::as_array)
                    .ok_or("missing path")?
                    .iter()
                    .map(|p| p.as_u64().map(|n| n as usize).ok_or("bad path entry"))
                    .collect::<Result<_, _>>()?;
                let types = o
                    .get("types")
                    .and_then(Json::as_array)
                    .ok_or("missing types")?
                    .iter()
                    .map(|t| match t.as_str() {
                        Some("call") => Ok(EdgeType::Call),
                        Some("assignment") => Ok(EdgeType::Assignment),
                        Some("control_flow") => Ok(EdgeType::ControlFlow),
                        _ => Err("bad edge type"),
                    })
                    .collect::<Result<_, _>>()?;
                Payload::Transition(TransitionRecord {
                    index: get_u("index")?,
                    start,
                    duration,
                    path,
                    support: get_u("support")?,
                    callee,
                    types,
                    source: state_from_json(o.get("source").ok_or("missing source")?)?,
                    dest: state_from_json(o.get("dest").ok_or("missing dest")?)?,
                })
            }
            _ => return Err("`kind` must be `state` or `transition`".into()),
        };
        Ok(ObservationEvent { seq, time, point, binding, payload })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cftl::parse_formula;
    use crate::instrument::emit_plan;
    use crate::lang::{execute, parse_program, SimClock};
    use crate::scfg::build_scfg;

    #[test]
    fn events_round_trip_through_json_lines() {
        let p = parse_program("a = 1\ndata = [1.5, \"x\"]\nr = f(0.25)\nlock = new_lock()\n").unwrap();
        let f = parse_formula("forall q in changes(a) . forall t in future_calls(q, f) . ( dest(t)(a) = 1 )").unwrap();
        let plan = emit_plan(&f, &build_scfg(&p), &p);
        let mut events: Vec<ObservationEvent> = Vec::new();
        execute(&p, &plan, &mut events, SimClock::default()).unwrap();
        assert!(events.len() >= 2);
        for e in &events {
            let line = e.to_json_line();
            assert!(!line.contains('\n'));
            assert_eq!(&ObservationEvent::from_json_line(&line).unwrap(), e);
        }
    }

    #[test]
    fn interleaved_positions() {
        assert_eq!(RtElem::state(3).pos, 6);
        assert_eq!(RtElem::transition(3).pos, 7);
        assert!(RtElem::state(3) < RtElem::transition(3) && RtElem::transition(3) < RtElem::state(4));
        assert_eq!(RtElem::transition(2).to_string(), "Δτ2");
        assert_eq!(RtElem::state(0).kind(), Kind::State);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(ObservationEvent::from_json_line("{").is_err());
        assert!(ObservationEvent::from_json_line(r#"{"seq":0,"t":"1","kind":"state","point":0,"binding":0}"#).is_err());
        assert!(ObservationEvent::from_json_line(r#"{"seq":0,"t":"x","kind":"state","point":0,"binding":0}"#).is_err());
    }
}
