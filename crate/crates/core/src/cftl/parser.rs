use super::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at {line}:{col}: {msg}")]
    SyntaxError { line: usize, col: usize, msg: String },
    #[error("type error: {0}")]
    TypeError(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(Rat),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Eq,
    Implies,
    End,
}

const RESERVED: &[&str] = &[
    "forall", "in", "and", "or", "not", "true", "false", "duration", "source", "dest", "incident", "next_call",
    "next_change", "changes", "calls", "future_calls", "future_changes",
];

fn lex(text: &str) -> Result<Vec<(Tok, usize, usize)>, FormulaError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let here = |msg: String| FormulaError::SyntaxError { line: ln + 1, col, msg };
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let starts_number = c.is_ascii_digit()
                || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()));
            if starts_number {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == '/') {
                    if chars[i] == '.' && !chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                        break;
                    }
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let n = rational::parse(&s).ok_or_else(|| here(format!("bad number `{s}`")))?;
                out.push((Tok::Num(n), ln + 1, col));
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), ln + 1, col));
                continue;
            }
            let (tok, w) = match c {
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '[' => (Tok::LBrack, 1),
                ']' => (Tok::RBrack, 1),
                ',' => (Tok::Comma, 1),
                '.' => (Tok::Dot, 1),
                '=' if chars.get(i + 1) == Some(&'>') => (Tok::Implies, 2),
                '=' => (Tok::Eq, 1),
                _ => return Err(here(format!("unexpected character `{c}`"))),
            };
            out.push((tok, ln + 1, col));
            i += w;
        }
    }
    let (line, col) = out.last().map_or((1, 1), |t| (t.1, t.2 + 1));
    out.push((Tok::End, line, col));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    quantifiers: Vec<QuantifierDecl>,
}

pub fn parse_formula(text: &str) -> Result<CftlFormula, FormulaError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, quantifiers: Vec::new() };
    p.quantifier_prefix()?;
    p.expect(Tok::LParen)?;
    let raw = p.implication()?;
    p.expect(Tok::RParen)?;
    if p.peek() != &Tok::End {
        return p.fail("unexpected trailing input");
    }
    let body = normalize(&raw);
    let atoms = body.atoms();
    let mut critical = BTreeSet::new();
    for q in &p.quantifiers {
        critical.insert(q.domain.symbol().to_string());
    }
    for a in &atoms {
        match a {
            Atom::StateEq { x, .. } | Atom::StateIn { x, .. } => {
                critical.insert(x.clone());
            }
            Atom::DurationIn { .. } => {}
        }
        for step in &a.selector().chain {
            match step {
                Step::NextCall(s) | Step::NextChange(s) => {
                    critical.insert(s.clone());
                }
                _ => {}
            }
        }
    }
    Ok(CftlFormula { quantifiers: p.quantifiers, body, critical, atoms })
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        let (_, line, col) = &self.toks[self.pos];
        Err(FormulaError::SyntaxError { line: *line, col: *col, msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), FormulaError> {
        if *self.peek() == tok {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected {tok:?}, found {:?}", self.peek()))
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(s) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> Result<String, FormulaError> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            other => self.fail(format!("expected a name, found {other:?}")),
        }
    }

    fn bound(&self, v: &str) -> Result<Sort, FormulaError> {
        self.quantifiers
            .iter()
            .find(|q| q.var == v)
            .map(|q| q.domain.sort())
            .ok_or_else(|| FormulaError::UnboundVariable(v.to_string()))
    }

    fn quantifier_prefix(&mut self) -> Result<(), FormulaError> {
        if !self.keyword("forall") {
            return self.fail("expected `forall`");
        }
        loop {
            let var = self.name()?;
            if self.quantifiers.iter().any(|q| q.var == var) {
                return Err(FormulaError::TypeError(format!("`{var}` is bound twice")));
            }
            if !self.keyword("in") {
                return self.fail("expected `in`");
            }
            let kind = match self.peek().clone() {
                Tok::Ident(s) => s,
                other => return self.fail(format!("expected a domain, found {other:?}")),
            };
            self.pos += 1;
            self.expect(Tok::LParen)?;
            let domain = match kind.as_str() {
                "changes" => Domain::Changes(self.name()?),
                "calls" => Domain::Calls(self.name()?),
                "future_calls" | "future_changes" => {
                    let dep = self.name()?;
                    self.bound(&dep)?;
                    self.expect(Tok::Comma)?;
                    let s = self.name()?;
                    if kind == "future_calls" {
                        Domain::FutureCalls { dep, f: s }
                    } else {
                        Domain::FutureChanges { dep, x: s }
                    }
                }
                _ => return self.fail(format!("unknown domain `{kind}`")),
            };
            self.expect(Tok::RParen)?;
            let first = self.quantifiers.is_empty();
            if first && domain.dep().is_some() {
                return Err(FormulaError::TypeError("the first quantifier must be independent".into()));
            }
            if !first && domain.dep().is_none() {
                return Err(FormulaError::TypeError(format!("quantifier over `{var}` must depend on an earlier variable")));
            }
            self.quantifiers.push(QuantifierDecl { var, domain });
            self.expect(Tok::Dot)?;
            if !self.keyword("forall") {
                return Ok(());
            }
        }
    }

    fn implication(&mut self) -> Result<Psi<Atom>, FormulaError> {
        let left = self.disjunction()?;
        if *self.peek() == Tok::Implies {
            self.pos += 1;
            let right = self.implication()?;
            return Ok(Psi::Or(vec![Psi::not(left), right]));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> Result<Psi<Atom>, FormulaError> {
        let mut parts = vec![self.conjunction()?];
        while self.keyword("or") {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Psi::Or(parts) })
    }

    fn conjunction(&mut self) -> Result<Psi<Atom>, FormulaError> {
        let mut parts = vec![self.negation()?];
        while self.keyword("and") {
            parts.push(self.negation()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Psi::And(parts) })
    }

    fn negation(&mut self) -> Result<Psi<Atom>, FormulaError> {
        if self.keyword("not") {
            return Ok(Psi::not(self.negation()?));
        }
        if self.keyword("true") {
            return Ok(Psi::True);
        }
        if self.keyword("false") {
            return Ok(Psi::False);
        }
        if *self.peek() == Tok::LParen {
            self.pos += 1;
            let inner = self.implication()?;
            self.expect(Tok::RParen)?;
            return Ok(inner);
        }
        Ok(Psi::Atom(self.atom()?))
    }

    fn atom(&mut self) -> Result<Atom, FormulaError> {
        if self.keyword("duration") {
            self.expect(Tok::LParen)?;
            let (sel, sort) = self.selector()?;
            self.expect(Tok::RParen)?;
            if sort != Sort::Transition {
                return Err(FormulaError::TypeError(format!("duration of `{sel}`, which is a state")));
            }
            if !self.keyword("in") {
                return self.fail("expected `in`");
            }
            let iv = self.interval()?;
            return Ok(Atom::DurationIn { sel, iv });
        }
        let (sel, sort) = self.selector()?;
        self.expect(Tok::LParen)?;
        let x = self.name()?;
        self.expect(Tok::RParen)?;
        if sort != Sort::State {
            return Err(FormulaError::TypeError(format!("value of `{x}` read from `{sel}`, which is a transition")));
        }
        if *self.peek() == Tok::Eq {
            self.pos += 1;
            let n = self.number()?;
            return Ok(Atom::StateEq { sel, x, n });
        }
        if self.keyword("in") {
            let iv = self.interval()?;
            return Ok(Atom::StateIn { sel, x, iv });
        }
        self.fail("expected `=` or `in`")
    }

    fn number(&mut self) -> Result<Rat, FormulaError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.pos += 1;
                Ok(n)
            }
            other => self.fail(format!("expected a number, found {other:?}")),
        }
    }

    fn interval(&mut self) -> Result<Interval, FormulaError> {
        let closed = match self.peek() {
            Tok::LBrack => true,
            Tok::LParen => false,
            _ => return self.fail("expected `[` or `(`"),
        };
        self.pos += 1;
        let lo = self.number()?;
        self.expect(Tok::Comma)?;
        let hi = self.number()?;
        self.expect(if closed { Tok::RBrack } else { Tok::RParen })?;
        if lo > hi {
            return Err(FormulaError::TypeError("interval lower bound exceeds upper bound".into()));
        }
        Ok(Interval { lo, hi, closed })
    }

    fn selector(&mut self) -> Result<(Selector, Sort), FormulaError> {
        let head = match self.peek().clone() {
            Tok::Ident(s) => s,
            other => return self.fail(format!("expected a selector, found {other:?}")),
        };
        let step_kind = ["source", "dest", "incident", "next_call", "next_change"].contains(&head.as_str());
        if !step_kind {
            let var = self.name()?;
            let sort = self.bound(&var)?;
            return Ok((Selector { root: var, chain: Vec::new() }, sort));
        }
        self.pos += 1;
        self.expect(Tok::LParen)?;
        let (mut sel, sort) = self.selector()?;
        let (step, out) = match head.as_str() {
            "source" | "dest" => {
                if sort != Sort::Transition {
                    return Err(FormulaError::TypeError(format!("`{head}` applied to state `{sel}`")));
                }
                (if head == "source" { Step::Source } else { Step::Dest }, Sort::State)
            }
            "incident" => {
                if sort != Sort::State {
                    return Err(FormulaError::TypeError(format!("`incident` applied to transition `{sel}`")));
                }
                (Step::Incident, Sort::Transition)
            }
            _ => {
                self.expect(Tok::Comma)?;
                let s = self.name()?;
                if head == "next_call" {
                    (Step::NextCall(s), Sort::Transition)
                } else {
                    (Step::NextChange(s), Sort::State)
                }
            }
        };
        self.expect(Tok::RParen)?;
        sel.chain.push(step);
        Ok((sel, out))
    }
}
