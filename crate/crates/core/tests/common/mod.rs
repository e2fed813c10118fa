#![allow(dead_code)]

use cftl_core::cftl::Psi;
use rand::seq::SliceRandom;
use rand::Rng;

const VARS: [&str; 3] = ["a", "b", "c"];
const FUNS: [&str; 2] = ["f", "g"];
const ARGS: [&str; 6] = ["0.1", "0.5", "1", "1.5", "2", "0"];

pub fn sample_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

pub fn sample(name: &str) -> String {
    std::fs::read_to_string(sample_dir().join(name)).unwrap()
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    budget: usize,
    loop_depth: usize,
    out: Vec<String>,
}

impl<R: Rng> Gen<'_, R> {
    fn simple(&mut self, indent: &str) {
        let line = match self.rng.gen_range(0..6) {
            0 | 1 => format!("{} = {}", VARS.choose(self.rng).unwrap(), self.rng.gen_range(0..4)),
            2 => {
                let x = VARS.choose(self.rng).unwrap();
                format!("{x} = {x} + 1")
            }
            3 | 4 => {
                let arg = if self.rng.gen_bool(0.2) { VARS.choose(self.rng).unwrap() } else { ARGS.choose(self.rng).unwrap() };
                format!("{}({arg})", FUNS.choose(self.rng).unwrap())
            }
            _ => format!("r = {}({})", FUNS.choose(self.rng).unwrap(), ARGS.choose(self.rng).unwrap()),
        };
        self.out.push(format!("{indent}{line}"));
    }

    fn block(&mut self, indent: &str, max: usize) {
        let n = self.rng.gen_range(1..=max);
        for _ in 0..n {
            if self.budget == 0 {
                break;
            }
            self.budget -= 1;
            let inner = format!("{indent}    ");
            let room = self.budget >= 4;
            match self.rng.gen_range(0..10) {
                0 if room && indent.len() < 8 => {
                    let x = VARS.choose(self.rng).unwrap();
                    let op = ["<", "==", ">"].choose(self.rng).unwrap();
                    self.out.push(format!("{indent}if {x} {op} {}:", self.rng.gen_range(0..3)));
                    self.block(&inner, 3);
                    if self.budget > 0 && self.rng.gen_bool(0.5) {
                        self.out.push(format!("{indent}else:"));
                        self.block(&inner, 3);
                    }
                }
                1 if room && self.loop_depth == 0 && indent.len() < 8 => {
                    self.loop_depth += 1;
                    if self.rng.gen_bool(0.5) {
                        self.out.push(format!("{indent}for i in range({}):", self.rng.gen_range(0..=5)));
                    } else {
                        let n = self.rng.gen_range(1..=4);
                        let items: Vec<&str> = (0..n).map(|_| *ARGS.choose(self.rng).unwrap()).collect();
                        self.out.push(format!("{indent}for d in [{}]:", items.join(", ")));
                    }
                    self.block(&inner, 3);
                    self.loop_depth -= 1;
                }
                _ => self.simple(indent),
            }
        }
    }
}

/// A random program of at most 30 statements with loops of at most 5 iterations.
pub fn random_program<R: Rng>(rng: &mut R) -> String {
    let mut g = Gen { rng, budget: 30, loop_depth: 0, out: Vec::new() };
    let vars = VARS;
    for v in vars {
        g.budget -= 1;
        g.out.push(format!("{v} = {}", g.rng.gen_range(0..3)));
    }
    g.block("", 8);
    g.out.join("\n") + "\n"
}

fn bound(rng: &mut impl Rng) -> String {
    let lo = ["0", "0.1", "0.5", "1"].choose(rng).unwrap().to_string();
    let hi = ["1", "1.5", "2", "3"].choose(rng).unwrap().to_string();
    if rng.gen_bool(0.5) { format!("[{lo}, {hi}]") } else { format!("({lo}, {hi})") }
}

fn state_atom(rng: &mut impl Rng, sel: &str) -> String {
    let x = VARS.choose(rng).unwrap();
    if rng.gen_bool(0.5) {
        format!("{sel}({x}) = {}", rng.gen_range(0..3))
    } else {
        format!("{sel}({x}) in [{}, {}]", rng.gen_range(0..2), rng.gen_range(1..4))
    }
}

fn atom_for(rng: &mut impl Rng, var: &str, is_state: bool) -> String {
    let f = FUNS.choose(rng).unwrap();
    let x = VARS.choose(rng).unwrap();
    match (is_state, rng.gen_range(0..5)) {
        (true, 0 | 1) => state_atom(rng, var),
        (true, 2) => format!("duration(incident({var})) in {}", bound(rng)),
        (false, 0 | 1) => format!("duration({var}) in {}", bound(rng)),
        (false, 2) => {
            let side = if rng.gen_bool(0.5) { "dest" } else { "source" };
            state_atom(rng, &format!("{side}({var})"))
        }
        (_, 3) => format!("duration(next_call({var}, {f})) in {}", bound(rng)),
        _ => state_atom(rng, &format!("next_change({var}, {x})")),
    }
}

fn body(rng: &mut impl Rng, atoms: &[String], depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        return format!("({})", atoms.choose(rng).unwrap());
    }
    let l = body(rng, atoms, depth - 1);
    let r = body(rng, atoms, depth - 1);
    match rng.gen_range(0..4) {
        0 => format!("({l} and {r})"),
        1 => format!("({l} or {r})"),
        2 => format!("({l} => {r})"),
        _ => format!("not {l}"),
    }
}

/// A random property with at most 2 quantifiers and at most 6 atoms.
pub fn random_formula<R: Rng>(rng: &mut R) -> String {
    let mut vars: Vec<(&str, bool)> = Vec::new();
    let mut prefix = String::new();
    if rng.gen_bool(0.6) {
        prefix.push_str(&format!("forall q in changes({}) . ", VARS.choose(rng).unwrap()));
        vars.push(("q", true));
    } else {
        prefix.push_str(&format!("forall q in calls({}) . ", FUNS.choose(rng).unwrap()));
        vars.push(("q", false));
    }
    if rng.gen_bool(0.5) {
        if rng.gen_bool(0.5) {
            prefix.push_str(&format!("forall t in future_calls(q, {}) . ", FUNS.choose(rng).unwrap()));
            vars.push(("t", false));
        } else {
            prefix.push_str(&format!("forall t in future_changes(q, {}) . ", VARS.choose(rng).unwrap()));
            vars.push(("t", true));
        }
    }
    let n = rng.gen_range(1..=6);
    let atoms: Vec<String> = (0..n)
        .map(|_| {
            let (v, s) = *vars.choose(rng).unwrap();
            atom_for(rng, v, s)
        })
        .collect();
    format!("{prefix}( {} )", body(rng, &atoms, 3))
}

/// A random propositional body over atoms `0..atoms`.
pub fn random_psi<R: Rng>(rng: &mut R, atoms: usize, depth: usize) -> Psi<usize> {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..12) {
            0 => Psi::True,
            1 => Psi::False,
            _ => Psi::Atom(rng.gen_range(0..atoms)),
        };
    }
    match rng.gen_range(0..5) {
        0 => Psi::not(random_psi(rng, atoms, depth - 1)),
        1 | 2 => Psi::Or((0..rng.gen_range(2..=3)).map(|_| random_psi(rng, atoms, depth - 1)).collect()),
        _ => Psi::And((0..rng.gen_range(2..=3)).map(|_| random_psi(rng, atoms, depth - 1)).collect()),
    }
}
