use crate::rational::{self, Rat};
use num_traits::Zero;
use serde_json::{json, Value as Json};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Num(Rat),
    Str(String),
    List(Vec<Value>),
    Bool(bool),
    Token(u64),
    None,
}

impl Value {
    pub fn truthy(&self) -> bool {
        match self {
            Value::Num(n) => !n.is_zero(),
            Value::Str(s) => !s.is_empty(),
            Value::List(v) => !v.is_empty(),
            Value::Bool(b) => *b,
            Value::Token(_) => true,
            Value::None => false,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Str(_) => "string",
            Value::List(_) => "list",
            Value::Bool(_) => "bool",
            Value::Token(_) => "token",
            Value::None => "none",
        }
    }

    pub fn as_num(&self) -> Option<&Rat> {
        match self {
            Value::Num(n) => Some(n),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Num(n) => json!({ "num": rational::to_exact(n) }),
            Value::Str(s) => json!({ "str": s }),
            Value::List(v) => json!({ "list": v.iter().map(Value::to_json).collect::<Vec<_>>() }),
            Value::Bool(b) => json!({ "bool": b }),
            Value::Token(t) => json!({ "token": t }),
            Value::None => json!("none"),
        }
    }

    pub fn from_json(j: &Json) -> Option<Value> {
        if j.as_str() == Some("none") {
            return Some(Value::None);
        }
        let obj = j.as_object()?;
        if obj.len() != 1 {
            return None;
        }
        let (k, v) = obj.iter().next()?;
        Some(match k.as_str() {
            "num" => Value::Num(rational::parse(v.as_str()?)?),
            "str" => Value::Str(v.as_str()?.to_string()),
            "list" => Value::List(v.as_array()?.iter().map(Value::from_json).collect::<Option<_>>()?),
            "bool" => Value::Bool(v.as_bool()?),
            "token" => Value::Token(v.as_u64()?),
            _ => return None,
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => f.write_str(&rational::format(n)),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::List(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "[{}]", items.join(", "))
            }
            Value::Bool(b) => write!(f, "{b}"),
            Value::Token(t) => write!(f, "<lock {t}>"),
            Value::None => f.write_str("none"),
        }
    }
}
