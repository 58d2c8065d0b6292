//! Abstract syntax of stream expressions and constraints, plus evaluation on
//! finite prefixes.
//!
//! A stream is an infinite sequence of integers. A finite [`StreamPrefix`]
//! determines the value of an expression at some time points and leaves the
//! rest undetermined; evaluation reports which case applies.

use std::fmt;

use thiserror::Error;

/// Inclusive integer interval `[lo..hi]` a stream variable ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alphabet {
    lo: i64,
    hi: i64,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed alphabet [{lo}..{hi}]: lower bound exceeds upper bound")]
pub struct AlphabetError {
    pub lo: i64,
    pub hi: i64,
}

impl Alphabet {
    pub fn new(lo: i64, hi: i64) -> Result<Self, AlphabetError> {
        if lo > hi {
            return Err(AlphabetError { lo, hi });
        }
        Ok(Alphabet { lo, hi })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn size(&self) -> u64 {
        (self.hi as i128 - self.lo as i128 + 1) as u64
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn values(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]", self.lo, self.hi)
    }
}

/// Ordinal of a variable in an [`StCsp`] variable table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarOrigin {
    User,
    /// Introduced by normalization; carries the creation sequence number.
    Aux(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarDecl {
    pub name: String,
    pub alphabet: Alphabet,
    pub origin: VarOrigin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn keyword(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "lt",
            BinOp::Le => "le",
            BinOp::Eq => "eq",
            BinOp::Ge => "ge",
            BinOp::Gt => "gt",
            BinOp::Ne => "ne",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn is_relational(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Eq | BinOp::Ge | BinOp::Gt | BinOp::Ne
        )
    }

    pub fn is_boolean(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    /// Applies the operator; `None` on division or mod by zero and on overflow.
    pub fn apply(self, a: i64, b: i64) -> Option<i64> {
        match self {
            BinOp::Add => a.checked_add(b),
            BinOp::Sub => a.checked_sub(b),
            BinOp::Mul => a.checked_mul(b),
            // Rust's `/` and `%` truncate toward zero.
            BinOp::Div => a.checked_div(b),
            BinOp::Mod => a.checked_rem(b),
            BinOp::Lt => Some((a < b) as i64),
            BinOp::Le => Some((a <= b) as i64),
            BinOp::Eq => Some((a == b) as i64),
            BinOp::Ge => Some((a >= b) as i64),
            BinOp::Gt => Some((a > b) as i64),
            BinOp::Ne => Some((a != b) as i64),
            BinOp::And => Some((a != 0 && b != 0) as i64),
            BinOp::Or => Some((a != 0 || b != 0) as i64),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Neg,
    Abs,
    Not,
}

impl UnOp {
    pub fn apply(self, a: i64) -> Option<i64> {
        match self {
            UnOp::Neg => a.checked_neg(),
            UnOp::Abs => a.checked_abs(),
            UnOp::Not => Some((a == 0) as i64),
        }
    }
}

/// Stream expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(i64),
    Var(VarId),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    First(Box<Expr>),
    Next(Box<Expr>),
    Fby(Box<Expr>, Box<Expr>),
    /// `e @ t`: the constant stream of `e`'s value at time `t >= 1`.
    At(Box<Expr>, u32),
}

impl Expr {
    pub fn var(v: VarId) -> Expr {
        Expr::Var(v)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn unary(op: UnOp, a: Expr) -> Expr {
        Expr::Unary(op, Box::new(a))
    }

    pub fn ite(c: Expr, a: Expr, b: Expr) -> Expr {
        Expr::Ite(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn first(e: Expr) -> Expr {
        Expr::First(Box::new(e))
    }

    pub fn next(e: Expr) -> Expr {
        Expr::Next(Box::new(e))
    }

    pub fn fby(a: Expr, b: Expr) -> Expr {
        Expr::Fby(Box::new(a), Box::new(b))
    }

    pub fn at(e: Expr, t: u32) -> Expr {
        Expr::At(Box::new(e), t)
    }

    /// Immediate subexpressions, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) => vec![],
            Expr::Unary(_, a) | Expr::First(a) | Expr::Next(a) | Expr::At(a, _) => vec![a],
            Expr::Binary(_, a, b) | Expr::Fby(a, b) => vec![a, b],
            Expr::Ite(c, a, b) => vec![c, a, b],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) => vec![],
            Expr::Unary(_, a) | Expr::First(a) | Expr::Next(a) | Expr::At(a, _) => vec![a],
            Expr::Binary(_, a, b) | Expr::Fby(a, b) => vec![a, b],
            Expr::Ite(c, a, b) => vec![c, a, b],
        }
    }

    pub fn is_temporal(&self) -> bool {
        matches!(self, Expr::Next(_) | Expr::Fby(..) | Expr::At(..))
    }

    /// Calls `f` on every variable occurrence.
    pub fn for_each_var(&self, f: &mut impl FnMut(VarId)) {
        match self {
            Expr::Var(v) => f(*v),
            _ => {
                for c in self.children() {
                    c.for_each_var(f);
                }
            }
        }
    }

    pub fn mentions(&self, v: VarId) -> bool {
        let mut found = false;
        self.for_each_var(&mut |x| found |= x == v);
        found
    }

    pub fn contains_first(&self) -> bool {
        match self {
            Expr::First(_) => true,
            _ => self.children().iter().any(|c| c.contains_first()),
        }
    }

    /// Number of `next`, `fby` and `@` nodes.
    pub fn temporal_count(&self) -> usize {
        let own = self.is_temporal() as usize;
        own + self.children().iter().map(|c| c.temporal_count()).sum::<usize>()
    }

    /// Remaps every variable through `f`.
    pub fn rename(&self, f: &impl Fn(VarId) -> VarId) -> Expr {
        let mut out = self.clone();
        out.rename_in_place(f);
        out
    }

    fn rename_in_place(&mut self, f: &impl Fn(VarId) -> VarId) {
        if let Expr::Var(v) = self {
            *v = f(*v);
            return;
        }
        for c in self.children_mut() {
            c.rename_in_place(f);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
    Ne,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Eq => "==",
            RelOp::Ge => ">=",
            RelOp::Gt => ">",
            RelOp::Ne => "!=",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Eq => a == b,
            RelOp::Ge => a >= b,
            RelOp::Gt => a > b,
            RelOp::Ne => a != b,
        }
    }
}

/// Stream constraint. `Rel` and `Implies` are pointwise; `Until` is not.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    Rel(Expr, RelOp, Expr),
    Implies(Expr, Expr),
    Until(Expr, Expr),
}

impl Constraint {
    pub fn eq(a: Expr, b: Expr) -> Constraint {
        Constraint::Rel(a, RelOp::Eq, b)
    }

    pub fn sides(&self) -> (&Expr, &Expr) {
        match self {
            Constraint::Rel(a, _, b) | Constraint::Implies(a, b) | Constraint::Until(a, b) => {
                (a, b)
            }
        }
    }

    pub fn sides_mut(&mut self) -> (&mut Expr, &mut Expr) {
        match self {
            Constraint::Rel(a, _, b) | Constraint::Implies(a, b) | Constraint::Until(a, b) => {
                (a, b)
            }
        }
    }

    pub fn for_each_var(&self, f: &mut impl FnMut(VarId)) {
        let (a, b) = self.sides();
        a.for_each_var(f);
        b.for_each_var(f);
    }

    /// Number of `next`, `fby`, `@` and `until` keywords.
    pub fn temporal_count(&self) -> usize {
        let (a, b) = self.sides();
        matches!(self, Constraint::Until(..)) as usize + a.temporal_count() + b.temporal_count()
    }

    pub fn rename(&self, f: &impl Fn(VarId) -> VarId) -> Constraint {
        match self {
            Constraint::Rel(a, op, b) => Constraint::Rel(a.rename(f), *op, b.rename(f)),
            Constraint::Implies(a, b) => Constraint::Implies(a.rename(f), b.rename(f)),
            Constraint::Until(a, b) => Constraint::Until(a.rename(f), b.rename(f)),
        }
    }

    /// Truth of a pointwise constraint given both side values.
    pub fn pointwise_holds(&self, a: i64, b: i64) -> bool {
        match self {
            Constraint::Rel(_, op, _) => op.holds(a, b),
            Constraint::Implies(..) => a == 0 || b != 0,
            Constraint::Until(..) => panic!("until is not a pointwise constraint"),
        }
    }
}

/// Stream constraint satisfaction problem: variables with alphabets and an
/// ordered list of constraints.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StCsp {
    pub vars: Vec<VarDecl>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate variable `{0}`")]
    DuplicateVar(String),
    #[error("constraint {constraint} references undeclared variable #{var}")]
    UnknownVar { constraint: usize, var: u32 },
    #[error("`@` offset must be at least 1")]
    AtOffset,
}

impl StCsp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, alphabet: Alphabet) -> VarId {
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VarDecl {
            name: name.into(),
            alphabet,
            origin: VarOrigin::User,
        });
        id
    }

    pub fn add(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars
            .iter()
            .position(|d| d.name == name)
            .map(|i| VarId(i as u32))
    }

    pub fn alphabet(&self, v: VarId) -> Alphabet {
        self.vars[v.index()].alphabet
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.vars[v.index()].name
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = std::collections::HashSet::new();
        for d in &self.vars {
            if !seen.insert(d.name.as_str()) {
                return Err(ModelError::DuplicateVar(d.name.clone()));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let mut bad = None;
            c.for_each_var(&mut |v| {
                if v.index() >= self.vars.len() {
                    bad = Some(v.0);
                }
            });
            if let Some(var) = bad {
                return Err(ModelError::UnknownVar { constraint: i, var });
            }
            let (a, b) = c.sides();
            if has_zero_at(a) || has_zero_at(b) {
                return Err(ModelError::AtOffset);
            }
        }
        Ok(())
    }
}

fn has_zero_at(e: &Expr) -> bool {
    match e {
        Expr::At(_, 0) => true,
        _ => e.children().iter().any(|c| has_zero_at(c)),
    }
}

/// One value per variable at a single time point, indexed by [`VarId`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub Vec<i64>);

impl Assignment {
    pub fn get(&self, v: VarId) -> i64 {
        self.0[v.index()]
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    pub fn project(&self, vars: &[VarId]) -> Assignment {
        Assignment(vars.iter().map(|v| self.get(*v)).collect())
    }

    pub fn is_within(&self, vars: &[VarDecl]) -> bool {
        self.0.len() == vars.len()
            && self
                .0
                .iter()
                .zip(vars)
                .all(|(v, d)| d.alphabet.contains(*v))
    }
}

/// Finite sequence of instantaneous assignments starting at time 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamPrefix {
    pub steps: Vec<Assignment>,
}

impl StreamPrefix {
    pub fn new(steps: Vec<Assignment>) -> Self {
        StreamPrefix { steps }
    }

    /// Builds a prefix from rows of raw values.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        StreamPrefix {
            steps: rows.iter().map(|r| Assignment(r.as_ref().to_vec())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn value(&self, v: VarId, t: usize) -> Option<i64> {
        self.steps.get(t).map(|a| a.get(v))
    }

    pub fn project(&self, vars: &[VarId]) -> StreamPrefix {
        StreamPrefix {
            steps: self.steps.iter().map(|a| a.project(vars)).collect(),
        }
    }

    pub fn truncate(&self, len: usize) -> StreamPrefix {
        StreamPrefix {
            steps: self.steps[..len.min(self.steps.len())].to_vec(),
        }
    }

    /// Compact rendering, e.g. `01;10` for two steps over two variables.
    pub fn compact(&self) -> String {
        let single_digit = self
            .steps
            .iter()
            .flat_map(|s| s.0.iter())
            .all(|v| (0..10).contains(v));
        self.steps
            .iter()
            .map(|s| {
                let parts: Vec<String> = s.0.iter().map(|v| v.to_string()).collect();
                if single_digit {
                    parts.concat()
                } else {
                    parts.join(",")
                }
            })
            .collect::<Vec<_>>()
            .join(if single_digit && self.steps.iter().all(|s| s.0.len() == 1) {
                ""
            } else {
                ";"
            })
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("evaluation error at time {time}: {kind} in {expr:?}")]
pub struct EvalError {
    pub expr: Expr,
    pub time: usize,
    pub kind: EvalErrorKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    Overflow,
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalErrorKind::DivisionByZero => f.write_str("division by zero"),
            EvalErrorKind::Overflow => f.write_str("arithmetic overflow"),
        }
    }
}

/// `Ok(None)` means the prefix is too short to determine the value.
pub type EvalResult = Result<Option<i64>, EvalError>;

/// Value of `e` at time `t` on `prefix`.
///
/// Binary operators are strict: an error in either operand is an error even
/// when the other operand is undetermined. `if` evaluates only the branch its
/// condition selects.
pub fn eval_ground(e: &Expr, prefix: &StreamPrefix, t: usize) -> EvalResult {
    match e {
        Expr::Const(c) => Ok(Some(*c)),
        Expr::Var(v) => Ok(prefix.value(*v, t)),
        Expr::Unary(op, a) => match eval_ground(a, prefix, t)? {
            None => Ok(None),
            Some(x) => op.apply(x).map(Some).ok_or_else(|| EvalError {
                expr: e.clone(),
                time: t,
                kind: EvalErrorKind::Overflow,
            }),
        },
        Expr::Binary(op, a, b) => {
            let x = eval_ground(a, prefix, t)?;
            let y = eval_ground(b, prefix, t)?;
            match (x, y) {
                (Some(x), Some(y)) => op.apply(x, y).map(Some).ok_or_else(|| EvalError {
                    expr: e.clone(),
                    time: t,
                    kind: if matches!(op, BinOp::Div | BinOp::Mod) && y == 0 {
                        EvalErrorKind::DivisionByZero
                    } else {
                        EvalErrorKind::Overflow
                    },
                }),
                _ => Ok(None),
            }
        }
        Expr::Ite(c, a, b) => match eval_ground(c, prefix, t)? {
            None => Ok(None),
            Some(0) => eval_ground(b, prefix, t),
            Some(_) => eval_ground(a, prefix, t),
        },
        Expr::First(a) => eval_ground(a, prefix, 0),
        Expr::Next(a) => eval_ground(a, prefix, t + 1),
        Expr::Fby(a, b) => {
            if t == 0 {
                eval_ground(a, prefix, 0)
            } else {
                eval_ground(b, prefix, t - 1)
            }
        }
        Expr::At(a, k) => eval_ground(a, prefix, *k as usize),
    }
}

/// Value of a pointwise expression at the current instant, reading variables
/// from `tau`. `first e` reads `e` at the current instant, which is time 0 of
/// the shifted view. `None` signals an evaluation error.
///
/// Panics on `next`, `fby` or `@`, which never occur in normalized pointwise
/// constraints.
pub fn eval_instant(e: &Expr, tau: &[i64]) -> Option<i64> {
    match e {
        Expr::Const(c) => Some(*c),
        Expr::Var(v) => Some(tau[v.index()]),
        Expr::Unary(op, a) => op.apply(eval_instant(a, tau)?),
        Expr::Binary(op, a, b) => {
            let x = eval_instant(a, tau)?;
            let y = eval_instant(b, tau)?;
            op.apply(x, y)
        }
        Expr::Ite(c, a, b) => {
            if eval_instant(c, tau)? != 0 {
                eval_instant(a, tau)
            } else {
                eval_instant(b, tau)
            }
        }
        Expr::First(a) => eval_instant(a, tau),
        Expr::Next(_) | Expr::Fby(..) | Expr::At(..) => {
            panic!("temporal operator in instant evaluation: {e:?}")
        }
    }
}

/// Whether a pointwise constraint holds at the current instant; evaluation
/// errors count as violation.
pub fn holds_instant(c: &Constraint, tau: &[i64]) -> bool {
    let (a, b) = c.sides();
    match (eval_instant(a, tau), eval_instant(b, tau)) {
        (Some(x), Some(y)) => c.pointwise_holds(x, y),
        _ => false,
    }
}

/// Status of a constraint on a finite prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrefixStatus {
    Violated,
    ConsistentSoFar,
    /// An until constraint whose right side first held at this time, with the
    /// left side nonzero at every earlier time.
    FinallySatisfied(usize),
}

/// Largest nesting of `fby` along any path; past this time every `fby`
/// reads its right operand.
pub fn fby_depth(e: &Expr) -> usize {
    let own = matches!(e, Expr::Fby(..)) as usize;
    own + e.children().iter().map(|c| fby_depth(c)).max().unwrap_or(0)
}

fn constraint_fby_depth(c: &Constraint) -> usize {
    let (a, b) = c.sides();
    fby_depth(a).max(fby_depth(b))
}

/// Status of `c` on `prefix`.
///
/// Time points past the end of the prefix are still examined while any value
/// can be determined there (constant subexpressions); after `len + fby depth`
/// determined values repeat, so the scan stops.
pub fn check_prefix(c: &Constraint, prefix: &StreamPrefix) -> PrefixStatus {
    let horizon = prefix.len() + constraint_fby_depth(c) + 1;
    let (a, b) = c.sides();
    match c {
        Constraint::Until(..) => {
            for i in 0..horizon {
                match eval_ground(b, prefix, i) {
                    Err(_) => return PrefixStatus::Violated,
                    Ok(None) => return PrefixStatus::ConsistentSoFar,
                    Ok(Some(v)) if v != 0 => return PrefixStatus::FinallySatisfied(i),
                    Ok(Some(_)) => {}
                }
                match eval_ground(a, prefix, i) {
                    Err(_) => return PrefixStatus::Violated,
                    Ok(None) => return PrefixStatus::ConsistentSoFar,
                    Ok(Some(0)) => return PrefixStatus::Violated,
                    Ok(Some(_)) => {}
                }
            }
            PrefixStatus::ConsistentSoFar
        }
        _ => {
            for t in 0..horizon {
                let x = eval_ground(a, prefix, t);
                let y = eval_ground(b, prefix, t);
                match (x, y) {
                    (Err(_), _) | (_, Err(_)) => return PrefixStatus::Violated,
                    (Ok(Some(x)), Ok(Some(y)))
                        if !c.pointwise_holds(x, y) => {
                            return PrefixStatus::Violated;
                        }
                    _ => {}
                }
            }
            PrefixStatus::ConsistentSoFar
        }
    }
}
