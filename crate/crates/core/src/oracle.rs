//! Brute-force ground truth over finite prefixes.
//!
//! Works on any model, normalized or not, and only uses the prefix semantics
//! of [`check_prefix`]; nothing here shares code with the solver.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::model::{check_prefix, Assignment, Constraint, Expr, PrefixStatus, StCsp, StreamPrefix, VarId};

/// Default bound on the number of prefixes (and graph nodes) visited.
pub const DEFAULT_CAP: u128 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("search space of {size} exceeds the cap of {cap}")]
    CapExceeded { size: u128, cap: u128 },
    #[error("no verdict within horizon {0}")]
    Inconclusive(usize),
}

/// A prefix with the status of every constraint of the model on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixClass {
    pub prefix: StreamPrefix,
    pub status: Vec<PrefixStatus>,
}

impl PrefixClass {
    pub fn violated(&self) -> bool {
        self.status.contains(&PrefixStatus::Violated)
    }
}

pub fn classify(p: &StCsp, prefix: &StreamPrefix) -> PrefixClass {
    PrefixClass {
        prefix: prefix.clone(),
        status: p.constraints.iter().map(|c| check_prefix(c, prefix)).collect(),
    }
}

fn violated(p: &StCsp, prefix: &StreamPrefix) -> bool {
    p.constraints
        .iter()
        .any(|c| check_prefix(c, prefix) == PrefixStatus::Violated)
}

/// All instantaneous assignments, in lexicographic order.
fn rows(p: &StCsp) -> Vec<Assignment> {
    let mut out = vec![Vec::new()];
    for d in &p.vars {
        out = out
            .into_iter()
            .flat_map(|r: Vec<i64>| {
                d.alphabet.values().map(move |v| {
                    let mut r = r.clone();
                    r.push(v);
                    r
                })
            })
            .collect();
    }
    out.into_iter().map(Assignment).collect()
}

fn tree_size(p: &StCsp, len: usize) -> u128 {
    let width = p
        .vars
        .iter()
        .fold(1u128, |acc, d| acc.saturating_mul(d.alphabet.size() as u128));
    (0..len).fold(1u128, |acc, _| acc.saturating_mul(width))
}

/// Non-violated prefixes of length `len` over all variables.
fn consistent(p: &StCsp, len: usize, cap: u128) -> Result<Vec<StreamPrefix>, OracleError> {
    let size = tree_size(p, len);
    if size > cap {
        return Err(OracleError::CapExceeded { size, cap });
    }
    let rows = rows(p);
    let mut level = vec![StreamPrefix::default()];
    if violated(p, &level[0]) {
        return Ok(Vec::new());
    }
    for _ in 0..len {
        let mut next = Vec::new();
        for pre in &level {
            for r in &rows {
                let ext = extend(pre, r);
                if !violated(p, &ext) {
                    next.push(ext);
                }
            }
        }
        level = next;
    }
    Ok(level)
}

fn extend(pre: &StreamPrefix, row: &Assignment) -> StreamPrefix {
    let mut steps = pre.steps.clone();
    steps.push(row.clone());
    StreamPrefix::new(steps)
}

fn project_all(
    set: impl IntoIterator<Item = StreamPrefix>,
    project: Option<&[VarId]>,
) -> BTreeSet<StreamPrefix> {
    set.into_iter()
        .map(|pr| match project {
            Some(vs) => pr.project(vs),
            None => pr,
        })
        .collect()
}

/// Prefixes of length `len` that violate no constraint, projected to
/// `project` (all variables when `None`). A consistent prefix need not
/// extend to a solution.
pub fn enumerate(
    p: &StCsp,
    len: usize,
    project: Option<&[VarId]>,
    cap: u128,
) -> Result<BTreeSet<StreamPrefix>, OracleError> {
    Ok(project_all(consistent(p, len, cap)?, project))
}

#[derive(Clone, Copy)]
enum Ctx {
    /// Evaluated at the constraint's time plus an offset.
    Rel(i64),
    Abs(usize),
}

/// Times read by a constraint evaluated at time `t`: `t + [lo, hi]` plus a
/// fixed set of absolute times.
#[derive(Default)]
struct Reads {
    lo: i64,
    hi: i64,
    abs: BTreeSet<usize>,
}

impl Reads {
    fn collect(&mut self, e: &Expr, ctx: Ctx) {
        match (e, ctx) {
            (Expr::Var(_), Ctx::Rel(o)) => {
                self.lo = self.lo.min(o);
                self.hi = self.hi.max(o);
            }
            (Expr::Var(_), Ctx::Abs(t)) => {
                self.abs.insert(t);
            }
            (Expr::Next(a), Ctx::Rel(o)) => self.collect(a, Ctx::Rel(o + 1)),
            (Expr::Next(a), Ctx::Abs(t)) => self.collect(a, Ctx::Abs(t + 1)),
            (Expr::Fby(a, b), Ctx::Rel(o)) => {
                self.collect(a, Ctx::Abs(0));
                self.collect(b, Ctx::Rel(o - 1));
            }
            (Expr::Fby(a, _), Ctx::Abs(0)) => self.collect(a, Ctx::Abs(0)),
            (Expr::Fby(_, b), Ctx::Abs(t)) => self.collect(b, Ctx::Abs(t - 1)),
            (Expr::First(a), _) => self.collect(a, Ctx::Abs(0)),
            (Expr::At(a, k), _) => self.collect(a, Ctx::Abs(*k as usize)),
            _ => {
                for c in e.children() {
                    self.collect(c, ctx);
                }
            }
        }
    }
}

/// Abstraction of a prefix that determines its set of valid continuations.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Key {
    /// Length, kept while absolute reads may still fall after the prefix.
    len: Option<usize>,
    discharged: Vec<bool>,
    abs_rows: Vec<Assignment>,
    window: Vec<Assignment>,
}

struct Graph<'a> {
    p: &'a StCsp,
    abs: Vec<usize>,
    max_abs: Option<usize>,
    width: usize,
    prefixes: Vec<StreamPrefix>,
    discharged: Vec<Vec<bool>>,
    succ: Vec<Vec<usize>>,
    ids: HashMap<Key, usize>,
}

impl<'a> Graph<'a> {
    fn new(p: &'a StCsp) -> Self {
        let mut r = Reads::default();
        for c in &p.constraints {
            let (a, b) = c.sides();
            r.collect(a, Ctx::Rel(0));
            r.collect(b, Ctx::Rel(0));
        }
        let abs: Vec<usize> = r.abs.into_iter().collect();
        Graph {
            p,
            max_abs: abs.last().copied(),
            abs,
            // reads at times newly determined by the next row reach back
            // this far from the end of the prefix
            width: (r.hi - r.lo + 2) as usize,
            prefixes: Vec::new(),
            discharged: Vec::new(),
            succ: Vec::new(),
            ids: HashMap::new(),
        }
    }

    fn statuses(&self, pre: &StreamPrefix) -> Vec<bool> {
        self.p
            .constraints
            .iter()
            .filter(|c| matches!(c, Constraint::Until(..)))
            .map(|c| matches!(check_prefix(c, pre), PrefixStatus::FinallySatisfied(_)))
            .collect()
    }

    fn key(&self, pre: &StreamPrefix, discharged: Vec<bool>) -> Key {
        let k = pre.len();
        // until every absolute time is read, instances at all earlier times
        // may still be waiting on it, so the whole prefix matters
        let pending = matches!(self.max_abs, Some(m) if k <= m);
        let from = if pending { 0 } else { k.saturating_sub(self.width) };
        Key {
            len: pending.then_some(k),
            discharged,
            abs_rows: self.abs.iter().filter(|&&t| t < k).map(|&t| pre.steps[t].clone()).collect(),
            window: pre.steps[from..].to_vec(),
        }
    }

    fn add(&mut self, pre: StreamPrefix, discharged: Vec<bool>) -> usize {
        self.prefixes.push(pre);
        self.discharged.push(discharged);
        self.succ.push(Vec::new());
        self.prefixes.len() - 1
    }

    /// Node for a prefix, merging prefixes with equal keys.
    fn intern(&mut self, pre: StreamPrefix) -> (usize, bool) {
        let d = self.statuses(&pre);
        let key = self.key(&pre, d.clone());
        if let Some(&id) = self.ids.get(&key) {
            return (id, false);
        }
        let id = self.add(pre, d);
        self.ids.insert(key, id);
        (id, true)
    }

    /// Nodes from which some infinite path discharges every until.
    fn good(&self) -> Vec<bool> {
        let n = self.prefixes.len();
        let done: Vec<bool> = self.discharged.iter().map(|d| d.iter().all(|&x| x)).collect();
        // Discharged nodes only have discharged successors; strip those
        // without successors until the rest all have infinite paths.
        let mut out_deg: Vec<usize> = self.succ.iter().map(|s| s.len()).collect();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (u, ss) in self.succ.iter().enumerate() {
            for &v in ss {
                preds[v].push(u);
            }
        }
        let mut alive = done.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&u| done[u] && out_deg[u] == 0).collect();
        while let Some(v) = queue.pop_front() {
            if !alive[v] {
                continue;
            }
            alive[v] = false;
            for &u in &preds[v] {
                if alive[u] {
                    out_deg[u] -= 1;
                    if out_deg[u] == 0 {
                        queue.push_back(u);
                    }
                }
            }
        }
        let mut good = alive.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&u| alive[u]).collect();
        while let Some(v) = queue.pop_front() {
            for &u in &preds[v] {
                if !good[u] {
                    good[u] = true;
                    queue.push_back(u);
                }
            }
        }
        good
    }
}

/// Prefixes of length `len` that extend to a solution, projected to
/// `project`.
///
/// Non-violated prefixes longer than `len` are merged when they agree on
/// until statuses, on the rows at every absolute time the constraints read
/// (`first`, `@`, heads of `fby`) and on a window of trailing rows covering
/// all relative reads; prefixes that do not yet reach the last absolute time
/// are only merged when equal. Merged prefixes have the same continuations, so the
/// resulting graph is finite and a prefix extends to a solution iff it
/// reaches a cycle of nodes with every until discharged. The search gives up
/// with [`OracleError::Inconclusive`] if it needs prefixes longer than
/// `horizon`, and with [`OracleError::CapExceeded`] past `cap` nodes.
pub fn solution_prefixes(
    p: &StCsp,
    len: usize,
    horizon: usize,
    project: Option<&[VarId]>,
    cap: u128,
) -> Result<BTreeSet<StreamPrefix>, OracleError> {
    let starts = consistent(p, len, cap)?;
    let rows = rows(p);
    let mut g = Graph::new(p);
    let mut queue = VecDeque::new();
    let mut roots = Vec::with_capacity(starts.len());
    for pre in starts {
        let d = g.statuses(&pre);
        let id = g.add(pre, d);
        roots.push(id);
        queue.push_back(id);
    }
    while let Some(u) = queue.pop_front() {
        let pre = g.prefixes[u].clone();
        if pre.len() >= horizon {
            return Err(OracleError::Inconclusive(horizon));
        }
        for r in &rows {
            let ext = extend(&pre, r);
            if violated(p, &ext) {
                continue;
            }
            let (v, fresh) = g.intern(ext);
            g.succ[u].push(v);
            if fresh {
                if g.prefixes.len() as u128 > cap {
                    return Err(OracleError::CapExceeded { size: g.prefixes.len() as u128, cap });
                }
                queue.push_back(v);
            }
        }
    }
    let good = g.good();
    let keep = roots
        .into_iter()
        .filter(|&u| good[u])
        .map(|u| g.prefixes[u].clone());
    Ok(project_all(keep.collect::<Vec<_>>(), project))
}
