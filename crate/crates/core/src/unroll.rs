//! Horizon unrolling baseline: a model is instantiated over time points
//! `0..T` as a finite-domain CSP, solved by chronological backtracking, and
//! `T` is increased until a solution appears.

use std::collections::HashSet;

use thiserror::Error;

use crate::model::{
    Alphabet, Assignment, BinOp, Constraint, Expr, RelOp, StCsp, StreamPrefix, UnOp, VarId,
};

/// Expression over unrolled variables; `Var(k)` is variable `k % N` at time
/// `k / N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GExpr {
    Const(i64),
    Var(usize),
    Unary(UnOp, Box<GExpr>),
    Binary(BinOp, Box<GExpr>, Box<GExpr>),
    Ite(Box<GExpr>, Box<GExpr>, Box<GExpr>),
}

impl GExpr {
    fn eval(&self, vals: &[i64]) -> Option<i64> {
        match self {
            GExpr::Const(c) => Some(*c),
            GExpr::Var(k) => Some(vals[*k]),
            GExpr::Unary(op, a) => op.apply(a.eval(vals)?),
            GExpr::Binary(op, a, b) => op.apply(a.eval(vals)?, b.eval(vals)?),
            GExpr::Ite(c, a, b) => {
                if c.eval(vals)? != 0 {
                    a.eval(vals)
                } else {
                    b.eval(vals)
                }
            }
        }
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            GExpr::Const(_) => {}
            GExpr::Var(k) => out.push(*k),
            GExpr::Unary(_, a) => a.collect_vars(out),
            GExpr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            GExpr::Ite(c, a, b) => {
                c.collect_vars(out);
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// Ground constraint; evaluation errors count as violation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FdConstraint {
    Rel(GExpr, RelOp, GExpr),
    Implies(GExpr, GExpr),
    /// Some `(b, as)` has `b` and every element of `as` nonzero.
    Exists(Vec<(GExpr, Vec<GExpr>)>),
}

impl FdConstraint {
    pub fn holds(&self, vals: &[i64]) -> bool {
        match self {
            FdConstraint::Rel(a, op, b) => match (a.eval(vals), b.eval(vals)) {
                (Some(x), Some(y)) => op.holds(x, y),
                _ => false,
            },
            FdConstraint::Implies(a, b) => match (a.eval(vals), b.eval(vals)) {
                (Some(x), Some(y)) => x == 0 || y != 0,
                _ => false,
            },
            FdConstraint::Exists(ds) => ds.iter().any(|(b, as_)| {
                let nz = |e: &GExpr| matches!(e.eval(vals), Some(v) if v != 0);
                nz(b) && as_.iter().all(nz)
            }),
        }
    }

    fn scope(&self) -> Vec<usize> {
        let mut out = Vec::new();
        match self {
            FdConstraint::Rel(a, _, b) | FdConstraint::Implies(a, b) => {
                a.collect_vars(&mut out);
                b.collect_vars(&mut out);
            }
            FdConstraint::Exists(ds) => {
                for (b, as_) in ds {
                    b.collect_vars(&mut out);
                    for a in as_ {
                        a.collect_vars(&mut out);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Finite-domain CSP over the time points `0..horizon` of every stream
/// variable.
#[derive(Clone, Debug)]
pub struct FdCsp {
    pub horizon: usize,
    /// Alphabets of the stream variables; unrolled variable `k` ranges over
    /// `alphabets[k % N]`.
    pub alphabets: Vec<Alphabet>,
    pub constraints: Vec<FdConstraint>,
    /// Some constraint reads a fixed time (`@`, `first`) at or past the
    /// horizon.
    pub unsat_by_construction: bool,
}

impl FdCsp {
    pub fn width(&self) -> usize {
        self.alphabets.len()
    }

    pub fn num_vars(&self) -> usize {
        self.horizon * self.width()
    }

    pub fn index(&self, v: VarId, t: usize) -> usize {
        t * self.width() + v.index()
    }

    /// Solution values as a prefix of length `horizon`.
    pub fn to_prefix(&self, vals: &[i64]) -> StreamPrefix {
        StreamPrefix::new(vals.chunks(self.width().max(1)).map(|r| Assignment(r.to_vec())).collect())
    }
}

enum Miss {
    /// A relative read past the horizon: skip this instance.
    Boundary,
    /// A fixed-time read past the horizon.
    Fixed,
}

struct Grounder {
    width: usize,
    horizon: usize,
}

impl Grounder {
    /// `e` at time `t`; `fixed` is set once evaluation time no longer
    /// depends on the constraint's own time.
    fn ground(&self, e: &Expr, t: usize, fixed: bool) -> Result<GExpr, Miss> {
        Ok(match e {
            Expr::Const(c) => GExpr::Const(*c),
            Expr::Var(v) => {
                if t >= self.horizon {
                    return Err(if fixed { Miss::Fixed } else { Miss::Boundary });
                }
                GExpr::Var(t * self.width + v.index())
            }
            Expr::Unary(op, a) => GExpr::Unary(*op, Box::new(self.ground(a, t, fixed)?)),
            Expr::Binary(op, a, b) => GExpr::Binary(
                *op,
                Box::new(self.ground(a, t, fixed)?),
                Box::new(self.ground(b, t, fixed)?),
            ),
            Expr::Ite(c, a, b) => GExpr::Ite(
                Box::new(self.ground(c, t, fixed)?),
                Box::new(self.ground(a, t, fixed)?),
                Box::new(self.ground(b, t, fixed)?),
            ),
            Expr::First(a) => self.ground(a, 0, true)?,
            Expr::Next(a) => self.ground(a, t + 1, fixed)?,
            Expr::Fby(a, b) => {
                if t == 0 {
                    self.ground(a, 0, fixed)?
                } else {
                    self.ground(b, t - 1, fixed)?
                }
            }
            Expr::At(a, k) => self.ground(a, *k as usize, true)?,
        })
    }
}

/// Unrolls `p` over time points `0..horizon`.
///
/// Pointwise constraints are instantiated at every time whose reads all fall
/// inside the horizon; instances that read past it through `next` are
/// dropped, so the last steps are under-constrained. `a until b` becomes a
/// disjunction over `i < horizon` of `b` at `i` and `a` at every `j < i`,
/// where the same boundary rule leaves out instances of `a` or `b` that read
/// past the horizon. Reads of a fixed time at or past the horizon (`x @ t`,
/// `first next x`) make the problem unsatisfiable by construction.
pub fn unroll(p: &StCsp, horizon: usize) -> FdCsp {
    assert!(horizon >= 1, "horizon must be positive");
    let g = Grounder { width: p.vars.len(), horizon };
    let mut out = FdCsp {
        horizon,
        alphabets: p.vars.iter().map(|d| d.alphabet).collect(),
        constraints: Vec::new(),
        unsat_by_construction: false,
    };
    let mut seen = HashSet::new();
    let mut push = |out: &mut FdCsp, c: FdConstraint| {
        if seen.insert(format!("{c:?}")) {
            out.constraints.push(c);
        }
    };
    for c in &p.constraints {
        match c {
            Constraint::Rel(..) | Constraint::Implies(..) => {
                let (a, b) = c.sides();
                for t in 0..horizon {
                    match (g.ground(a, t, false), g.ground(b, t, false)) {
                        (Ok(x), Ok(y)) => {
                            let gc = match c {
                                Constraint::Rel(_, op, _) => FdConstraint::Rel(x, *op, y),
                                _ => FdConstraint::Implies(x, y),
                            };
                            push(&mut out, gc);
                        }
                        (Err(Miss::Fixed), _) | (_, Err(Miss::Fixed)) => {
                            out.unsat_by_construction = true;
                        }
                        _ => {}
                    }
                }
            }
            Constraint::Until(a, b) => {
                // instances reading past the horizon are left out of their
                // conjunction, as for pointwise constraints
                let mut disjuncts = Vec::new();
                let mut before = Vec::new();
                for i in 0..horizon {
                    match g.ground(b, i, false) {
                        Ok(bi) => disjuncts.push((bi, before.clone())),
                        Err(Miss::Boundary) => disjuncts.push((GExpr::Const(1), before.clone())),
                        Err(Miss::Fixed) => out.unsat_by_construction = true,
                    }
                    match g.ground(a, i, false) {
                        Ok(ai) => before.push(ai),
                        Err(Miss::Fixed) => out.unsat_by_construction = true,
                        Err(Miss::Boundary) => {}
                    }
                }
                push(&mut out, FdConstraint::Exists(disjuncts));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    First,
    All,
    Count,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Sat(StreamPrefix),
    Unsat,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HorizonResult {
    pub horizon: usize,
    pub outcome: Outcome,
    /// Solutions found; all of them in `Mode::All` and `Mode::Count`.
    pub count: u128,
    /// Every solution, in `Mode::All` only.
    pub solutions: Vec<StreamPrefix>,
    pub nodes: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("node budget of {0} exceeded")]
pub struct BudgetExceeded(pub u64);

struct Search<'a> {
    csp: &'a FdCsp,
    /// Constraints per variable.
    watch: Vec<Vec<usize>>,
    scopes: Vec<Vec<usize>>,
    /// Candidate values per variable; removed values are recorded on the
    /// trail.
    doms: Vec<Vec<i64>>,
    vals: Vec<i64>,
    assigned: Vec<bool>,
    nodes: u64,
    budget: Option<u64>,
    mode: Mode,
    count: u128,
    solutions: Vec<StreamPrefix>,
    first: Option<StreamPrefix>,
}

impl Search<'_> {
    fn run(&mut self, k: usize) -> Result<bool, BudgetExceeded> {
        if k == self.vals.len() {
            self.count += 1;
            let pre = self.csp.to_prefix(&self.vals);
            if self.first.is_none() {
                self.first = Some(pre.clone());
            }
            match self.mode {
                Mode::First => return Ok(true),
                Mode::All => self.solutions.push(pre),
                Mode::Count => {}
            }
            return Ok(false);
        }
        let dom = self.doms[k].clone();
        for v in dom {
            self.nodes += 1;
            if let Some(b) = self.budget {
                if self.nodes > b {
                    return Err(BudgetExceeded(b));
                }
            }
            self.vals[k] = v;
            self.assigned[k] = true;
            let mut trail: Vec<(usize, Vec<i64>)> = Vec::new();
            if self.propagate(k, &mut trail) && self.run(k + 1)? {
                return Ok(true);
            }
            for (j, d) in trail.into_iter().rev() {
                self.doms[j] = d;
            }
            self.assigned[k] = false;
        }
        Ok(false)
    }

    /// Checks constraints whose scope is now fully assigned, and filters the
    /// domain of the single unassigned variable of the others.
    fn propagate(&mut self, k: usize, trail: &mut Vec<(usize, Vec<i64>)>) -> bool {
        for &ci in &self.watch[k] {
            let c = &self.csp.constraints[ci];
            let free: Vec<usize> = self.scopes[ci].iter().copied().filter(|&j| !self.assigned[j]).collect();
            match free.as_slice() {
                [] => {
                    if !c.holds(&self.vals) {
                        return false;
                    }
                }
                [j] => {
                    let j = *j;
                    let before = self.doms[j].clone();
                    let mut kept = Vec::with_capacity(before.len());
                    for &v in &before {
                        self.vals[j] = v;
                        if c.holds(&self.vals) {
                            kept.push(v);
                        }
                    }
                    if kept.len() != before.len() {
                        trail.push((j, before));
                        self.doms[j] = kept;
                    }
                    if self.doms[j].is_empty() {
                        return false;
                    }
                }
                _ => {}
            }
        }
        true
    }
}

/// Solves `csp` by chronological backtracking over variables ordered by
/// time then declaration, smallest values first, with forward checking on
/// constraints left with one unassigned variable. `budget` bounds the number
/// of value assignments tried.
pub fn fd_solve(csp: &FdCsp, mode: Mode, budget: Option<u64>) -> HorizonResult {
    let n = csp.num_vars();
    let mut res = HorizonResult {
        horizon: csp.horizon,
        outcome: Outcome::Unsat,
        count: 0,
        solutions: Vec::new(),
        nodes: 0,
    };
    if csp.unsat_by_construction {
        return res;
    }
    let scopes: Vec<Vec<usize>> = csp.constraints.iter().map(|c| c.scope()).collect();
    let mut watch = vec![Vec::new(); n];
    let mut ground = Vec::new();
    for (ci, s) in scopes.iter().enumerate() {
        if s.is_empty() {
            ground.push(ci);
        }
        for &j in s {
            watch[j].push(ci);
        }
    }
    if ground.iter().any(|&ci| !csp.constraints[ci].holds(&[])) {
        return res;
    }
    let w = csp.width();
    let mut s = Search {
        csp,
        watch,
        scopes,
        doms: (0..n).map(|k| csp.alphabets[k % w].values().collect()).collect(),
        vals: vec![0; n],
        assigned: vec![false; n],
        nodes: 0,
        budget,
        mode,
        count: 0,
        solutions: Vec::new(),
        first: None,
    };
    // unary constraints filter domains up front
    for (ci, sc) in s.scopes.clone().iter().enumerate() {
        if let [j] = sc.as_slice() {
            let c = &csp.constraints[ci];
            let mut vals = vec![0; n];
            s.doms[*j].retain(|&v| {
                vals[*j] = v;
                c.holds(&vals)
            });
        }
    }
    let outcome = if s.doms.iter().any(|d| d.is_empty()) {
        Ok(false)
    } else {
        s.run(0)
    };
    res.nodes = s.nodes;
    res.count = s.count;
    res.outcome = match outcome {
        Err(_) => Outcome::BudgetExceeded,
        Ok(_) => match s.first.take() {
            Some(pre) => Outcome::Sat(pre),
            None => Outcome::Unsat,
        },
    };
    res.solutions = s.solutions;
    res
}

/// Tries horizons `1..=tmax` in turn and returns the first satisfiable one,
/// or `Unsat` at horizon `tmax` when there is none. A budget overrun at some
/// horizon ends the search with `BudgetExceeded`.
pub fn increment_until_sat(p: &StCsp, tmax: usize, budget: Option<u64>) -> HorizonResult {
    assert!(tmax >= 1, "tmax must be positive");
    let mut nodes = 0;
    for t in 1..=tmax {
        let mut r = fd_solve(&unroll(p, t), Mode::First, budget);
        nodes += r.nodes;
        r.nodes = nodes;
        if r.outcome != Outcome::Unsat || t == tmax {
            return r;
        }
    }
    unreachable!()
}

/// Default horizon cap for missionaries and cannibals: `n (b + 1)` steps.
pub fn mc_cap(n: u32, b: u32) -> usize {
    (n * (b + 1)) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_prefix, PrefixStatus};
    use crate::parser::parse_str;

    const X: &str = "var x with alphabet [0..1];";

    fn model(body: &str) -> StCsp {
        parse_str(&format!("{X} {body}")).unwrap()
    }

    #[test]
    fn unroll_pointwise() {
        let c = unroll(&model("x == 0;"), 2);
        assert_eq!(c.num_vars(), 2);
        assert_eq!(
            c.constraints,
            vec![
                FdConstraint::Rel(GExpr::Var(0), RelOp::Eq, GExpr::Const(0)),
                FdConstraint::Rel(GExpr::Var(1), RelOp::Eq, GExpr::Const(0)),
            ]
        );
    }

    #[test]
    fn unroll_until_is_a_disjunction() {
        let c = unroll(&model("1 until (x eq 1);"), 2);
        let b = |k| GExpr::Binary(BinOp::Eq, Box::new(GExpr::Var(k)), Box::new(GExpr::Const(1)));
        assert_eq!(
            c.constraints,
            vec![FdConstraint::Exists(vec![(b(0), vec![]), (b(1), vec![GExpr::Const(1)])])]
        );
    }

    #[test]
    fn out_of_horizon_pin_is_unsat() {
        assert!(unroll(&model("x @ 3 == 1;"), 2).unsat_by_construction);
        assert!(!unroll(&model("x @ 3 == 1;"), 4).unsat_by_construction);
        assert!(unroll(&model("first next next x == 1;"), 2).unsat_by_construction);
    }

    #[test]
    fn next_past_horizon_is_dropped() {
        let c = unroll(&model("x != next x;"), 3);
        assert_eq!(c.constraints.len(), 2);
        // the last disjunct cannot read `next x` and is left unconstrained
        let c = unroll(&model("1 until (next x eq 1);"), 2);
        let FdConstraint::Exists(ds) = &c.constraints[0] else { panic!() };
        assert_eq!(ds[1].0, GExpr::Const(1));
        // so is the whole right side here, even though x at 0 is known
        let r = increment_until_sat(&model("first x == 0; 1 until (next x eq 1 and x eq 1);"), 5, None);
        assert_eq!(r.horizon, 1);
    }

    #[test]
    fn fd_solve_examples() {
        let r = fd_solve(&unroll(&model("x == 0;"), 2), Mode::First, None);
        assert_eq!(r.outcome, Outcome::Sat(StreamPrefix::from_rows(&[[0], [0]])));
        let r = fd_solve(&unroll(&model("1 until (x eq 1); x <= 0;"), 3), Mode::First, None);
        assert_eq!(r.outcome, Outcome::Unsat);
        let r = fd_solve(&unroll(&model("first x == 0; 1 until (x eq 1);"), 2), Mode::First, None);
        assert_eq!(r.outcome, Outcome::Sat(StreamPrefix::from_rows(&[[0], [1]])));
    }

    #[test]
    fn count_and_all_agree() {
        let c = unroll(&model("1 until (x eq 1);"), 3);
        let all = fd_solve(&c, Mode::All, None);
        let count = fd_solve(&c, Mode::Count, None);
        assert_eq!(all.solutions.len(), 7);
        assert_eq!(count.count, 7);
        assert_eq!(all.outcome, count.outcome);
    }

    #[test]
    fn increment_examples() {
        let r = increment_until_sat(&model("first x == 0; 1 until (x eq 1);"), 10, None);
        assert_eq!(r.horizon, 2);
        let r = increment_until_sat(&model("1 until (x eq 1);"), 10, None);
        assert_eq!(r.horizon, 1);
        let r = increment_until_sat(&model("x <= 0; 1 until (x eq 1);"), 5, None);
        assert_eq!((r.horizon, r.outcome), (5, Outcome::Unsat));
    }

    #[test]
    fn budget_is_reported() {
        // the until can only be refuted once every variable is assigned
        let p = parse_str("var x with alphabet [0..3]; 1 until (x eq 9);").unwrap();
        let r = fd_solve(&unroll(&p, 6), Mode::First, Some(50));
        assert_eq!(r.outcome, Outcome::BudgetExceeded);
    }

    #[test]
    fn solutions_have_no_violated_constraint() {
        let p = parse_str(
            "var x, y with alphabet [0..2]; next x == if x lt 2 then x + 1 else 0;
             y == 0 fby x; (y ne 2) until (x eq 2 and y eq 1);",
        )
        .unwrap();
        for t in 1..6 {
            for s in fd_solve(&unroll(&p, t), Mode::All, None).solutions {
                for c in &p.constraints {
                    let st = check_prefix(c, &s);
                    assert_ne!(st, PrefixStatus::Violated, "{c:?} on {s:?}");
                    if matches!(c, Constraint::Until(..)) {
                        assert!(matches!(st, PrefixStatus::FinallySatisfied(_)));
                    }
                }
            }
        }
    }
}
