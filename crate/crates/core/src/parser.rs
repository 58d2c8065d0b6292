//! Textual modeling language (`.stcsp` files).
//!
//! ```text
//! var x, y with alphabet [1..3];
//! first x == 1;
//! goal == (x eq 3 and y eq 3) or (0 fby goal);
//! 1 until (goal eq 1);
//! ```
//!
//! Relational *expressions* use the keywords `lt le eq ge gt ne` and yield
//! pseudo-Boolean streams; *constraints* use the symbols `< <= == >= > !=`,
//! `->` and `until`. Statements end with `;`, comments start with `//`.
//!
//! Precedence, loosest first: `fby` (right associative), `if then else`,
//! `or`, `and`, `not`, relational keywords, `+ -`, `* / %`, prefix
//! `- abs first next`, postfix `@ <int>`.

use std::collections::HashMap;
use std::fmt;

use crate::model::{Alphabet, BinOp, Constraint, Expr, RelOp, StCsp, UnOp, VarId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSource {
    pub text: String,
    /// File path, or `None` for inline text.
    pub origin: Option<String>,
}

impl ModelSource {
    pub fn inline(text: impl Into<String>) -> Self {
        ModelSource {
            text: text.into(),
            origin: None,
        }
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> std::io::Result<Self> {
        let path = path.as_ref();
        Ok(ModelSource {
            text: std::fs::read_to_string(path)?,
            origin: Some(path.display().to_string()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.column, sev, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(v) => write!(f, "integer `{v}`"),
            Tok::Kw(k) => write!(f, "keyword `{k}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "var", "with", "alphabet", "first", "next", "fby", "if", "then", "else", "and", "or", "not",
    "abs", "until", "lt", "le", "eq", "ge", "gt", "ne",
];

// Longest symbols first so that `<=` wins over `<`.
const SYMBOLS: &[&str] = &[
    "..", "->", "<=", ">=", "==", "!=", "<", ">", "+", "-", "*", "/", "%", "(", ")", "[", "]",
    ",", ";", "@",
];

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseDiagnostic> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let lit: String = chars[s..i].iter().collect();
            col += i - s;
            let v = lit.parse::<i64>().map_err(|_| ParseDiagnostic {
                severity: Severity::Error,
                message: format!("integer literal `{lit}` out of range"),
                line: start_line,
                column: start_col,
            })?;
            out.push(Spanned {
                tok: Tok::Int(v),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[s..i].iter().collect();
            col += i - s;
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            };
            out.push(Spanned {
                tok,
                line: start_line,
                column: start_col,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Spanned {
                    tok: Tok::Sym(s),
                    line: start_line,
                    column: start_col,
                });
            }
            None => {
                return Err(ParseDiagnostic {
                    severity: Severity::Error,
                    message: format!("unexpected character `{c}`"),
                    line: start_line,
                    column: start_col,
                })
            }
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    csp: StCsp,
    names: HashMap<String, VarId>,
    diags: Vec<ParseDiagnostic>,
}

type PResult<T> = Result<T, ParseDiagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseDiagnostic {
        let s = &self.toks[self.pos];
        ParseDiagnostic {
            severity: Severity::Error,
            message: message.into(),
            line: s.line,
            column: s.column,
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == k)
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{s}`, found {}", self.peek())))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{k}`, found {}", self.peek())))
        }
    }

    fn signed_int(&mut self) -> PResult<i64> {
        let neg = if self.is_sym("-") {
            self.bump();
            true
        } else {
            false
        };
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            ref t => Err(self.error_here(format!("expected integer, found {t}"))),
        }
    }

    /// Skips to just past the next `;` after an error.
    fn recover(&mut self) {
        while !matches!(self.peek(), Tok::Eof) {
            if self.is_sym(";") {
                self.bump();
                return;
            }
            self.bump();
        }
    }

    fn model(&mut self) {
        while !matches!(self.peek(), Tok::Eof) {
            let r = if self.is_kw("var") {
                self.decl()
            } else {
                self.constraint().map(|c| self.csp.add(c))
            };
            if let Err(d) = r {
                self.diags.push(d);
                self.recover();
            }
        }
    }

    fn decl(&mut self) -> PResult<()> {
        self.expect_kw("var")?;
        let mut names = Vec::new();
        loop {
            let line = self.toks[self.pos].line;
            let column = self.toks[self.pos].column;
            match self.peek().clone() {
                Tok::Ident(n) => {
                    self.bump();
                    names.push((n, line, column));
                }
                t => return Err(self.error_here(format!("expected variable name, found {t}"))),
            }
            if self.is_sym(",") {
                self.bump();
            } else {
                break;
            }
        }
        self.expect_kw("with")?;
        self.expect_kw("alphabet")?;
        let open = self.toks[self.pos].clone();
        self.expect_sym("[")?;
        let lo = self.signed_int()?;
        self.expect_sym("..")?;
        let hi = self.signed_int()?;
        self.expect_sym("]")?;
        self.expect_sym(";")?;
        let alphabet = Alphabet::new(lo, hi).map_err(|e| ParseDiagnostic {
            severity: Severity::Error,
            message: e.to_string(),
            line: open.line,
            column: open.column,
        })?;
        for (n, line, column) in names {
            if self.names.contains_key(&n) {
                return Err(ParseDiagnostic {
                    severity: Severity::Error,
                    message: format!("duplicate declaration of `{n}`"),
                    line,
                    column,
                });
            }
            let id = self.csp.add_var(n.clone(), alphabet);
            self.names.insert(n, id);
        }
        Ok(())
    }

    fn constraint(&mut self) -> PResult<Constraint> {
        let lhs = self.expr()?;
        let c = match self.peek().clone() {
            Tok::Sym("->") => {
                self.bump();
                Constraint::Implies(lhs, self.expr()?)
            }
            Tok::Kw("until") => {
                self.bump();
                Constraint::Until(lhs, self.expr()?)
            }
            Tok::Sym(s) => {
                let op = match s {
                    "<" => RelOp::Lt,
                    "<=" => RelOp::Le,
                    "==" => RelOp::Eq,
                    ">=" => RelOp::Ge,
                    ">" => RelOp::Gt,
                    "!=" => RelOp::Ne,
                    _ => {
                        return Err(
                            self.error_here(format!("expected constraint relation, found `{s}`"))
                        )
                    }
                };
                self.bump();
                Constraint::Rel(lhs, op, self.expr()?)
            }
            t => return Err(self.error_here(format!("expected constraint relation, found {t}"))),
        };
        self.expect_sym(";")?;
        Ok(c)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.fby()
    }

    fn fby(&mut self) -> PResult<Expr> {
        let lhs = self.ite()?;
        if self.is_kw("fby") {
            self.bump();
            let rhs = self.fby()?;
            return Ok(Expr::fby(lhs, rhs));
        }
        Ok(lhs)
    }

    fn ite(&mut self) -> PResult<Expr> {
        if self.is_kw("if") {
            self.bump();
            let c = self.expr()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.ite()?;
            return Ok(Expr::ite(c, a, b));
        }
        self.binary(0)
    }

    /// Left-associative binary levels: or, and, (not), relational, additive,
    /// multiplicative.
    fn binary(&mut self, level: usize) -> PResult<Expr> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("or", BinOp::Or)],
            &[("and", BinOp::And)],
            &[],
            &[
                ("lt", BinOp::Lt),
                ("le", BinOp::Le),
                ("eq", BinOp::Eq),
                ("ge", BinOp::Ge),
                ("gt", BinOp::Gt),
                ("ne", BinOp::Ne),
            ],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Mod)],
        ];
        if level == LEVELS.len() {
            return self.prefix();
        }
        if level == 2 {
            if self.is_kw("not") {
                self.bump();
                let e = self.binary(2)?;
                return Ok(Expr::unary(UnOp::Not, e));
            }
            return self.binary(3);
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = match self.peek() {
                Tok::Kw(k) | Tok::Sym(k) => LEVELS[level]
                    .iter()
                    .find(|(s, _)| s == k)
                    .map(|(_, op)| *op),
                _ => None,
            };
            match op {
                Some(op) => {
                    self.bump();
                    let rhs = self.binary(level + 1)?;
                    lhs = Expr::bin(op, lhs, rhs);
                }
                None => return Ok(lhs),
            }
        }
    }

    fn prefix(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Sym("-") => {
                self.bump();
                if let Tok::Int(v) = *self.peek() {
                    self.bump();
                    return self.postfix(Expr::Const(-v));
                }
                Ok(Expr::unary(UnOp::Neg, self.prefix()?))
            }
            Tok::Kw("abs") => {
                self.bump();
                Ok(Expr::unary(UnOp::Abs, self.prefix()?))
            }
            Tok::Kw("first") => {
                self.bump();
                Ok(Expr::first(self.prefix()?))
            }
            Tok::Kw("next") => {
                self.bump();
                Ok(Expr::next(self.prefix()?))
            }
            _ => {
                let a = self.atom()?;
                self.postfix(a)
            }
        }
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        while self.is_sym("@") {
            self.bump();
            match self.peek().clone() {
                Tok::Int(t) => {
                    if t < 1 || t > u32::MAX as i64 {
                        return Err(self.error_here(format!(
                            "`@` requires a time offset t >= 1, found {t}"
                        )));
                    }
                    self.bump();
                    e = Expr::at(e, t as u32);
                }
                Tok::Sym("-") if matches!(self.peek_at(1), Tok::Int(_)) => {
                    return Err(self.error_here("`@` requires a time offset t >= 1"));
                }
                t => {
                    return Err(self.error_here(format!(
                        "`@` requires an integer literal, found {t}"
                    )))
                }
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Ident(n) => match self.names.get(&n).copied() {
                Some(id) => {
                    self.bump();
                    Ok(Expr::Var(id))
                }
                None => Err(self.error_here(format!("unknown identifier `{n}`"))),
            },
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            t => Err(self.error_here(format!("expected expression, found {t}"))),
        }
    }
}

/// Parses a model. On any error returns every diagnostic found and no model.
pub fn parse(src: &ModelSource) -> Result<StCsp, Vec<ParseDiagnostic>> {
    let toks = lex(&src.text).map_err(|d| vec![d])?;
    let mut p = Parser {
        toks,
        pos: 0,
        csp: StCsp::new(),
        names: HashMap::new(),
        diags: Vec::new(),
    };
    p.model();
    if p.diags.is_empty() {
        Ok(p.csp)
    } else {
        Err(p.diags)
    }
}

pub fn parse_str(text: &str) -> Result<StCsp, Vec<ParseDiagnostic>> {
    parse(&ModelSource::inline(text))
}

// Precedence levels used by the printer; higher binds tighter.
const P_FBY: u8 = 1;
const P_ITE: u8 = 2;
const P_OR: u8 = 3;
const P_AND: u8 = 4;
const P_NOT: u8 = 5;
const P_REL: u8 = 6;
const P_ADD: u8 = 7;
const P_MUL: u8 = 8;
const P_PREFIX: u8 = 9;
const P_POSTFIX: u8 = 10;
const P_ATOM: u8 = 11;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Const(v) if *v < 0 => P_PREFIX,
        Expr::Const(_) | Expr::Var(_) => P_ATOM,
        Expr::Fby(..) => P_FBY,
        Expr::Ite(..) => P_ITE,
        Expr::Unary(UnOp::Not, _) => P_NOT,
        Expr::Unary(..) | Expr::First(_) | Expr::Next(_) => P_PREFIX,
        Expr::At(..) => P_POSTFIX,
        Expr::Binary(op, ..) => match op {
            BinOp::Or => P_OR,
            BinOp::And => P_AND,
            BinOp::Add | BinOp::Sub => P_ADD,
            BinOp::Mul | BinOp::Div | BinOp::Mod => P_MUL,
            _ => P_REL,
        },
    }
}

/// Renders expressions and constraints using the variable names of a table.
pub struct Printer<'a> {
    names: &'a dyn Fn(VarId) -> String,
}

impl<'a> Printer<'a> {
    pub fn new(names: &'a dyn Fn(VarId) -> String) -> Self {
        Printer { names }
    }

    pub fn expr(&self, e: &Expr) -> String {
        let mut s = String::new();
        self.write(e, 0, &mut s);
        s
    }

    pub fn constraint(&self, c: &Constraint) -> String {
        match c {
            Constraint::Rel(a, op, b) => {
                format!("{} {} {}", self.expr(a), op.symbol(), self.expr(b))
            }
            Constraint::Implies(a, b) => format!("{} -> {}", self.expr(a), self.expr(b)),
            Constraint::Until(a, b) => format!("{} until {}", self.expr(a), self.expr(b)),
        }
    }

    fn child(&self, e: &Expr, min: u8, out: &mut String) {
        if prec(e) < min {
            out.push('(');
            self.write(e, 0, out);
            out.push(')');
        } else {
            self.write(e, min, out);
        }
    }

    fn write(&self, e: &Expr, _min: u8, out: &mut String) {
        match e {
            Expr::Const(v) => out.push_str(&v.to_string()),
            Expr::Var(v) => out.push_str(&(self.names)(*v)),
            Expr::Fby(a, b) => {
                self.child(a, P_FBY + 1, out);
                out.push_str(" fby ");
                self.child(b, P_FBY, out);
            }
            Expr::Ite(c, a, b) => {
                out.push_str("if ");
                self.child(c, 0, out);
                out.push_str(" then ");
                self.child(a, 0, out);
                out.push_str(" else ");
                self.child(b, P_ITE, out);
            }
            Expr::Unary(UnOp::Not, a) => {
                out.push_str("not ");
                self.child(a, P_NOT, out);
            }
            Expr::Unary(op, a) => {
                out.push_str(match op {
                    UnOp::Neg => "-",
                    UnOp::Abs => "abs ",
                    UnOp::Not => unreachable!(),
                });
                // `-3` and `-3 @ 1` would read back with the sign folded into
                // the literal.
                let mut inner = String::new();
                self.child(a, P_PREFIX, &mut inner);
                if *op == UnOp::Neg && inner.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
                    out.push('(');
                    out.push_str(&inner);
                    out.push(')');
                } else {
                    out.push_str(&inner);
                }
            }
            Expr::First(a) => {
                out.push_str("first ");
                self.child(a, P_PREFIX, out);
            }
            Expr::Next(a) => {
                out.push_str("next ");
                self.child(a, P_PREFIX, out);
            }
            Expr::At(a, t) => {
                self.child(a, P_POSTFIX, out);
                out.push_str(&format!(" @ {t}"));
            }
            Expr::Binary(op, a, b) => {
                let p = prec(e);
                self.child(a, p, out);
                out.push(' ');
                out.push_str(op.keyword());
                out.push(' ');
                self.child(b, p + 1, out);
            }
        }
    }
}

/// Renders a model in the concrete syntax accepted by [`parse`].
pub fn unparse(p: &StCsp) -> ModelSource {
    let mut out = String::new();
    for d in &p.vars {
        out.push_str(&format!("var {} with alphabet {};\n", d.name, d.alphabet));
    }
    if !p.vars.is_empty() && !p.constraints.is_empty() {
        out.push('\n');
    }
    let names = |v: VarId| p.vars[v.index()].name.clone();
    let printer = Printer::new(&names);
    for c in &p.constraints {
        out.push_str(&printer.constraint(c));
        out.push_str(";\n");
    }
    ModelSource::inline(out)
}
