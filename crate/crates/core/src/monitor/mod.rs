//! Formula-tree monitors, the closure-map optimisation and stored configurations.

mod tree;

pub use tree::{build_tree, closure_map, ClosureMap, FormulaTree, Node, NodeKind, Signed};

use crate::cftl::CftlFormula;
use crate::scfg::Element;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    pub fn from_option(b: Option<bool>) -> Verdict {
        match b {
            Some(true) => Verdict::True,
            Some(false) => Verdict::False,
            None => Verdict::Unknown,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Verdict::True => "⊤",
            Verdict::False => "⊥",
            Verdict::Unknown => "?",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("atom {0} is not part of the formula")]
    UnknownAtom(usize),
    #[error("monitor has not collapsed to a verdict")]
    NotCollapsed,
}

#[derive(Debug, Clone)]
pub struct Monitor {
    pub tree: FormulaTree,
    pub closure: ClosureMap,
    pub observed: BTreeMap<usize, Verdict>,
}

impl Monitor {
    pub fn new(tree: FormulaTree) -> Monitor {
        let closure = closure_map(&tree);
        let observed = (0..tree.atom_count).map(|a| (a, Verdict::Unknown)).collect();
        Monitor { tree, closure, observed }
    }

    pub fn for_formula(f: &CftlFormula) -> Monitor {
        Monitor::new(build_tree(&f.body, &f.atoms))
    }

    pub fn verdict(&self) -> Verdict {
        self.tree.verdict()
    }

    pub fn observe(&mut self, obs: Signed) -> Result<Verdict, MonitorError> {
        let v = self.tree.optimised_check(&self.closure, obs)?;
        self.observed.insert(obs.atom, Verdict::from_option(Some(obs.value)));
        Ok(v)
    }
}

pub type Configuration = BTreeMap<usize, Verdict>;

pub fn snapshot_configuration(m: &Monitor) -> Result<Configuration, MonitorError> {
    if m.verdict() == Verdict::Unknown {
        return Err(MonitorError::NotCollapsed);
    }
    Ok(m.observed.clone())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigurationMap {
    pub map: BTreeMap<Vec<Element>, BTreeSet<Configuration>>,
}

impl ConfigurationMap {
    pub fn store(&mut self, b: &[Element], c: Configuration) {
        self.map.entry(b.to_vec()).or_default().insert(c);
    }

    pub fn lookup(&self, b: &[Element]) -> BTreeSet<Configuration> {
        self.map.get(b).cloned().unwrap_or_default()
    }
}

/// Fresh monitor replaying every decided atom of `c` except `exclude`.
pub fn instantiate_from(c: &Configuration, exclude: usize, f: &CftlFormula) -> Monitor {
    instantiate_excluding(Monitor::for_formula(f), c, &BTreeSet::from([exclude]))
}

pub fn instantiate_excluding(mut m: Monitor, c: &Configuration, exclude: &BTreeSet<usize>) -> Monitor {
    for (&atom, &v) in c {
        if exclude.contains(&atom) || v == Verdict::Unknown || atom >= m.tree.atom_count {
            continue;
        }
        m.observe(Signed { atom, value: v == Verdict::True }).expect("atom in range");
    }
    m
}
