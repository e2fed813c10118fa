use crate::rational::{self, Rat};

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub name: String,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    /// Pre-order position among all statements, assigned by [`Program::renumber`].
    pub id: usize,
    pub line: usize,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign { target: String, expr: Expr },
    Call { callee: String, args: Vec<Expr> },
    AssignCall { target: String, callee: String, args: Vec<Expr> },
    If { branches: Vec<(Expr, Vec<Stmt>)>, else_block: Option<Vec<Stmt>> },
    Loop { kind: LoopKind, var: Option<String>, cond: Expr, block: Vec<Stmt> },
    Pass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    For,
    While,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Mul => 3,
            BinOp::Add | BinOp::Sub => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Rat),
    Str(String),
    List(Vec<Expr>),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Len(Box<Expr>),
    Range(Box<Expr>),
}

pub const BUILTINS: &[&str] = &[
    "f",
    "g",
    "database_operation",
    "close_connection",
    "query",
    "new_lock",
    "print",
    "range",
    "len",
];

impl Program {
    pub fn new(name: impl Into<String>, body: Vec<Stmt>) -> Program {
        let mut p = Program { name: name.into(), body };
        p.renumber();
        p
    }

    pub fn renumber(&mut self) {
        fn walk(stmts: &mut [Stmt], next: &mut usize) {
            for s in stmts {
                s.id = *next;
                *next += 1;
                match &mut s.kind {
                    StmtKind::If { branches, else_block } => {
                        for (_, b) in branches.iter_mut() {
                            walk(b, next);
                        }
                        if let Some(b) = else_block {
                            walk(b, next);
                        }
                    }
                    StmtKind::Loop { block, .. } => walk(block, next),
                    _ => {}
                }
            }
        }
        let mut next = 0;
        walk(&mut self.body, &mut next);
    }

    pub fn statement_count(&self) -> usize {
        fn count(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| {
                    1 + match &s.kind {
                        StmtKind::If { branches, else_block } => {
                            branches.iter().map(|(_, b)| count(b)).sum::<usize>()
                                + else_block.as_deref().map_or(0, count)
                        }
                        StmtKind::Loop { block, .. } => count(block),
                        _ => 0,
                    }
                })
                .sum()
        }
        count(&self.body)
    }

    /// Canonical text: two-space indentation, minimal parentheses.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        write_block(&self.body, 0, &mut out);
        out
    }
}

fn write_block(stmts: &[Stmt], depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    for s in stmts {
        match &s.kind {
            StmtKind::Assign { target, expr } => out.push_str(&format!("{pad}{target} = {}\n", expr_text(expr))),
            StmtKind::Call { callee, args } => out.push_str(&format!("{pad}{callee}({})\n", args_text(args))),
            StmtKind::AssignCall { target, callee, args } => {
                out.push_str(&format!("{pad}{target} = {callee}({})\n", args_text(args)))
            }
            StmtKind::Pass => out.push_str(&format!("{pad}pass\n")),
            StmtKind::If { branches, else_block } => {
                for (i, (cond, block)) in branches.iter().enumerate() {
                    let kw = if i == 0 { "if" } else { "elif" };
                    out.push_str(&format!("{pad}{kw} {}:\n", expr_text(cond)));
                    write_block(block, depth + 1, out);
                }
                if let Some(block) = else_block {
                    out.push_str(&format!("{pad}else:\n"));
                    write_block(block, depth + 1, out);
                }
            }
            StmtKind::Loop { kind, var, cond, block } => {
                match (kind, var) {
                    (LoopKind::For, Some(v)) => out.push_str(&format!("{pad}for {v} in {}:\n", expr_text(cond))),
                    _ => out.push_str(&format!("{pad}while {}:\n", expr_text(cond))),
                }
                write_block(block, depth + 1, out);
            }
        }
    }
}

fn args_text(args: &[Expr]) -> String {
    args.iter().map(expr_text).collect::<Vec<_>>().join(", ")
}

pub fn expr_text(e: &Expr) -> String {
    match e {
        Expr::Num(n) => {
            let s = rational::format(n);
            if s.contains('/') {
                format!("({s})")
            } else {
                s
            }
        }
        Expr::Str(s) => {
            let mut out = String::from("\"");
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    c => out.push(c),
                }
            }
            out.push('"');
            out
        }
        Expr::List(items) => format!("[{}]", args_text(items)),
        Expr::Var(v) => v.clone(),
        Expr::Neg(inner) => match inner.as_ref() {
            Expr::Bin(..) | Expr::Neg(_) | Expr::Num(_) => format!("-({})", expr_text(inner)),
            _ => format!("-{}", expr_text(inner)),
        },
        Expr::Bin(op, l, r) => {
            let p = op.precedence();
            let left = match l.as_ref() {
                Expr::Bin(lop, ..) if lop.precedence() < p || (p == 1 && lop.precedence() == 1) => {
                    format!("({})", expr_text(l))
                }
                _ => expr_text(l),
            };
            let right = match r.as_ref() {
                Expr::Bin(rop, ..) if rop.precedence() <= p => format!("({})", expr_text(r)),
                _ => expr_text(r),
            };
            format!("{left} {} {right}", op.symbol())
        }
        Expr::Len(inner) => format!("len({})", expr_text(inner)),
        Expr::Range(inner) => format!("range({})", expr_text(inner)),
    }
}

impl Expr {
    pub fn variables(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(v) => out.push(v.clone()),
            Expr::List(items) => items.iter().for_each(|e| e.variables(out)),
            Expr::Neg(e) | Expr::Len(e) | Expr::Range(e) => e.variables(out),
            Expr::Bin(_, l, r) => {
                l.variables(out);
                r.variables(out);
            }
            Expr::Num(_) | Expr::Str(_) => {}
        }
    }
}
