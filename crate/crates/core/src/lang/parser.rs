use super::ast::*;
use crate::rational::{self, Rat};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{col}: {msg}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

fn err<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, SyntaxError> {
    Err(SyntaxError { line, col, msg: msg.into() })
}

struct Line {
    number: usize,
    indent: usize,
    col: usize,
    text: String,
}

pub fn parse_program(text: &str) -> Result<Program, SyntaxError> {
    parse_named("main", text)
}

pub fn parse_named(name: &str, text: &str) -> Result<Program, SyntaxError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let code = strip_comment(raw);
        if code.trim().is_empty() {
            continue;
        }
        let mut indent = 0;
        let mut col = 1;
        for c in code.chars() {
            match c {
                ' ' => indent += 1,
                '\t' => indent = (indent / 8 + 1) * 8,
                _ => break,
            }
            col += 1;
        }
        lines.push(Line { number, indent, col, text: code.trim().to_string() });
    }
    let mut pos = 0;
    let body = if lines.is_empty() {
        Vec::new()
    } else {
        if lines[0].indent != 0 {
            return err(lines[0].number, 1, "unexpected indent");
        }
        parse_block(&lines, &mut pos, 0)?
    };
    if pos < lines.len() {
        return err(lines[pos].number, 1, "unexpected indent");
    }
    Ok(Program::new(name, body))
}

fn strip_comment(raw: &str) -> &str {
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in raw.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
        } else if c == '"' || c == '\'' {
            quote = Some(c);
        } else if c == '#' {
            return &raw[..i];
        }
    }
    raw
}

fn parse_block(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Vec<Stmt>, SyntaxError> {
    let mut out = Vec::new();
    while *pos < lines.len() {
        let line = &lines[*pos];
        if line.indent < indent {
            break;
        }
        if line.indent > indent {
            return err(line.number, 1, "unexpected indent");
        }
        out.push(parse_stmt(lines, pos, indent)?);
    }
    Ok(out)
}

fn child_block(lines: &[Line], pos: &mut usize, indent: usize, header: &Line) -> Result<Vec<Stmt>, SyntaxError> {
    match lines.get(*pos) {
        Some(next) if next.indent > indent => {
            let inner = next.indent;
            parse_block(lines, pos, inner)
        }
        _ => err(header.number, header.col + header.text.len(), "expected an indented block"),
    }
}

fn header_expr(line: &Line, keyword: &str) -> Result<Expr, SyntaxError> {
    let Some(body) = line.text.strip_suffix(':') else {
        return err(line.number, line.col + line.text.len(), "expected `:`");
    };
    let offset = line.col + keyword.len();
    parse_expr_at(&body[keyword.len()..], line.number, offset)
}

fn starts_with_keyword(text: &str, kw: &str) -> bool {
    text.strip_prefix(kw)
        .map(|rest| rest.is_empty() || rest.starts_with(|c: char| c.is_whitespace() || c == ':' || c == '('))
        .unwrap_or(false)
}

fn parse_stmt(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Stmt, SyntaxError> {
    let line = &lines[*pos];
    *pos += 1;
    let n = line.number;
    let text = line.text.as_str();
    let kind = if text == "pass" {
        StmtKind::Pass
    } else if starts_with_keyword(text, "if") {
        let cond = header_expr(line, "if")?;
        let block = child_block(lines, pos, indent, line)?;
        let mut branches = vec![(cond, block)];
        let mut else_block = None;
        while let Some(next) = lines.get(*pos) {
            if next.indent != indent {
                break;
            }
            if starts_with_keyword(&next.text, "elif") {
                *pos += 1;
                let cond = header_expr(next, "elif")?;
                let block = child_block(lines, pos, indent, next)?;
                branches.push((cond, block));
            } else if starts_with_keyword(&next.text, "else") {
                *pos += 1;
                if next.text.replace(' ', "") != "else:" {
                    return err(next.number, next.col, "expected `else:`");
                }
                else_block = Some(child_block(lines, pos, indent, next)?);
                break;
            } else {
                break;
            }
        }
        StmtKind::If { branches, else_block }
    } else if starts_with_keyword(text, "elif") || starts_with_keyword(text, "else") {
        return err(n, line.col, "`elif`/`else` without matching `if`");
    } else if starts_with_keyword(text, "while") {
        let cond = header_expr(line, "while")?;
        let block = child_block(lines, pos, indent, line)?;
        StmtKind::Loop { kind: LoopKind::While, var: None, cond, block }
    } else if starts_with_keyword(text, "for") {
        let Some(body) = text.strip_suffix(':') else {
            return err(n, line.col + text.len(), "expected `:`");
        };
        let rest = body[3..].trim_start();
        let name_len = rest.find(|c: char| !(c.is_alphanumeric() || c == '_')).unwrap_or(rest.len());
        let var = &rest[..name_len];
        if !is_ident(var) {
            return err(n, line.col + 4, "expected loop variable");
        }
        let after = rest[name_len..].trim_start();
        let Some(iter) = after.strip_prefix("in").filter(|r| r.starts_with(char::is_whitespace)) else {
            return err(n, line.col + 4 + name_len, "expected `in`");
        };
        let offset = line.col + (text.len() - iter.len());
        let cond = parse_expr_at(iter, n, offset)?;
        let block = child_block(lines, pos, indent, line)?;
        StmtKind::Loop { kind: LoopKind::For, var: Some(var.to_string()), cond, block }
    } else {
        simple_stmt(line)?
    };
    Ok(Stmt { id: 0, line: n, kind })
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&s)
}

const KEYWORDS: &[&str] = &["if", "elif", "else", "for", "while", "in", "pass", "and", "or", "not"];

fn simple_stmt(line: &Line) -> Result<StmtKind, SyntaxError> {
    let toks = lex(&line.text, line.number, line.col)?;
    let mut p = ExprParser { toks, pos: 0, line: line.number, end_col: line.col + line.text.len() };
    let kind = match (p.toks.first().map(|t| &t.tok), p.toks.get(1).map(|t| &t.tok)) {
        (Some(Tok::Ident(name)), Some(Tok::Assign)) => {
            let target = name.clone();
            p.pos = 2;
            if let (Some(Tok::Ident(callee)), Some(Tok::LParen)) =
                (p.toks.get(2).map(|t| &t.tok), p.toks.get(3).map(|t| &t.tok))
            {
                if callee != "len" && callee != "range" {
                    let callee = callee.clone();
                    p.pos = 4;
                    let args = p.args(Tok::RParen)?;
                    p.finish()?;
                    return Ok(StmtKind::AssignCall { target, callee, args });
                }
            }
            let expr = p.expr()?;
            p.finish()?;
            StmtKind::Assign { target, expr }
        }
        (Some(Tok::Ident(name)), Some(Tok::LParen)) if name != "len" && name != "range" => {
            let callee = name.clone();
            p.pos = 2;
            let args = p.args(Tok::RParen)?;
            p.finish()?;
            StmtKind::Call { callee, args }
        }
        _ => return err(line.number, line.col, "expected an assignment, a call, or a compound statement"),
    };
    Ok(kind)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rat),
    Str(String),
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Assign,
    Op(BinOp),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn lex(text: &str, line: usize, base_col: usize) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = base_col + i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let Some(n) = rational::parse(&s) else {
                return err(line, col, format!("bad number `{s}`"));
            };
            out.push(Spanned { tok: Tok::Num(n), col });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Spanned { tok: Tok::Ident(chars[start..i].iter().collect()), col });
            continue;
        }
        if c == '"' || c == '\'' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return err(line, col, "unterminated string"),
                    Some(&q) if q == c => break,
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some('n') => s.push('\n'),
                            Some(&e) => s.push(e),
                            None => return err(line, col, "unterminated string"),
                        }
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            out.push(Spanned { tok: Tok::Str(s), col });
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, width) = match two.as_str() {
            "==" => (Tok::Op(BinOp::Eq), 2),
            "!=" => (Tok::Op(BinOp::Ne), 2),
            "<=" => (Tok::Op(BinOp::Le), 2),
            ">=" => (Tok::Op(BinOp::Ge), 2),
            _ => match c {
                '<' => (Tok::Op(BinOp::Lt), 1),
                '>' => (Tok::Op(BinOp::Gt), 1),
                '+' => (Tok::Op(BinOp::Add), 1),
                '-' => (Tok::Op(BinOp::Sub), 1),
                '*' => (Tok::Op(BinOp::Mul), 1),
                '=' => (Tok::Assign, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '[' => (Tok::LBrack, 1),
                ']' => (Tok::RBrack, 1),
                ',' => (Tok::Comma, 1),
                _ => return err(line, col, format!("unexpected character `{c}`")),
            },
        };
        out.push(Spanned { tok, col });
        i += width;
    }
    Ok(out)
}

fn parse_expr_at(text: &str, line: usize, col: usize) -> Result<Expr, SyntaxError> {
    let lead = text.len() - text.trim_start().len();
    let toks = lex(text, line, col)?;
    if toks.is_empty() {
        return err(line, col + lead, "expected an expression");
    }
    let mut p = ExprParser { toks, pos: 0, line, end_col: col + text.len() };
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

struct ExprParser {
    toks: Vec<Spanned>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn finish(&self) -> Result<(), SyntaxError> {
        if self.pos < self.toks.len() {
            return err(self.line, self.col(), "unexpected trailing tokens");
        }
        Ok(())
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SyntaxError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            err(self.line, self.col(), format!("expected {tok:?}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let left = self.additive()?;
        if let Some(Tok::Op(op)) = self.peek() {
            let op = *op;
            if op.symbol().len() == 2 || matches!(op, BinOp::Lt | BinOp::Gt) {
                self.pos += 1;
                let right = self.additive()?;
                return Ok(Expr::Bin(op, Box::new(left), Box::new(right)));
            }
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.term()?;
        while let Some(Tok::Op(op @ (BinOp::Add | BinOp::Sub))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let right = self.term()?;
            left = Expr::Bin(op, Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.unary()?;
        while let Some(Tok::Op(BinOp::Mul)) = self.peek() {
            self.pos += 1;
            let right = self.unary()?;
            left = Expr::Bin(BinOp::Mul, Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if let Some(Tok::Op(BinOp::Sub)) = self.peek() {
            self.pos += 1;
            return Ok(match self.unary()? {
                Expr::Num(n) => Expr::Num(-n),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.primary()
    }

    fn args(&mut self, close: Tok) -> Result<Vec<Expr>, SyntaxError> {
        let mut items = Vec::new();
        if self.peek() == Some(&close) {
            self.pos += 1;
            return Ok(items);
        }
        loop {
            items.push(self.expr()?);
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                Some(t) if *t == close => {
                    self.pos += 1;
                    return Ok(items);
                }
                _ => return err(self.line, self.col(), format!("expected `,` or {close:?}")),
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let col = self.col();
        let Some(tok) = self.peek().cloned() else {
            return err(self.line, col, "unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            Tok::Num(n) => Ok(Expr::Num(n)),
            Tok::Str(s) => Ok(Expr::Str(s)),
            Tok::LBrack => Ok(Expr::List(self.args(Tok::RBrack)?)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let mut args = self.args(Tok::RParen)?;
                    let wrap = match name.as_str() {
                        "len" => Expr::Len,
                        "range" => Expr::Range,
                        _ => return err(self.line, col, format!("call to `{name}` is only allowed as a statement")),
                    };
                    if args.len() != 1 {
                        return err(self.line, col, format!("`{name}` takes exactly one argument"));
                    }
                    Ok(wrap(Box::new(args.remove(0))))
                } else if KEYWORDS.contains(&name.as_str()) {
                    err(self.line, col, format!("unexpected keyword `{name}`"))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            other => err(self.line, col, format!("unexpected token {other:?}")),
        }
    }
}
