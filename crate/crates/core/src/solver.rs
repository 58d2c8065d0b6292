//! Depth-first search with syntactic dominance detection, producing the
//! solution automaton of a normalized St-CSP.
//!
//! A search node is a constraint set plus the historic values of every
//! `next` target. Constraints that never change from node to node (first-free
//! pointwise constraints and the primitive next pairs) are kept once in the
//! [`Solver`]; nodes carry only the remaining, *dynamic* part, interned so
//! that equal sets share one id.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::automaton::{BuchiAutomaton, StateId};
use crate::model::{
    eval_instant, holds_instant, Assignment, BinOp, Constraint, Expr, RelOp, StCsp, VarId,
};
use crate::normalize::NormalForm;

/// A constraint of a search node that may change along the search.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DynItem {
    /// Pointwise constraint mentioning `first`, or without variables.
    Pointwise(Constraint),
    Until(VarId, VarId),
    /// `xi == xj @ t`.
    At(VarId, VarId, u32),
}

#[derive(Debug)]
pub struct DynSet {
    pub id: u32,
    /// Sorted and deduplicated.
    pub items: Vec<DynItem>,
    plan: Plan,
}

impl DynSet {
    pub fn has_until(&self) -> bool {
        self.items.iter().any(|i| matches!(i, DynItem::Until(..)))
    }
}

/// Shifted view of the problem at some point of the search.
#[derive(Clone, Debug)]
pub struct SearchNode {
    pub set: Arc<DynSet>,
    /// Values of the `next` targets, in next-pair order; `None` at the root.
    pub historic: Option<Arc<[i64]>>,
}

impl SearchNode {
    pub fn constraints(&self) -> &[DynItem] {
        &self.set.items
    }

    /// A node is accepting when no until constraint is pending.
    pub fn is_accepting(&self) -> bool {
        !self.set.has_until()
    }
}

/// Syntactic equality of two nodes of the same solver.
pub fn are_equal(a: &SearchNode, b: &SearchNode) -> bool {
    a.set.id == b.set.id && a.historic == b.historic
}

/// 128-bit fingerprint of a node: two independently keyed hashes of the set
/// id and historic values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeKey(pub u128);

impl NodeKey {
    pub fn of(n: &SearchNode) -> NodeKey {
        let half = |salt: u64| {
            let mut h = DefaultHasher::new();
            salt.hash(&mut h);
            n.set.id.hash(&mut h);
            n.historic.as_deref().hash(&mut h);
            h.finish()
        };
        NodeKey(((half(0x5a17) as u128) << 64) | half(0xc0ffee) as u128)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Maximum number of search nodes constructed, root included.
    pub node_budget: Option<u64>,
    /// Maximum depth of the search stack.
    pub depth_budget: Option<usize>,
    pub deadline: Option<Instant>,
    /// Disable the constraints derived by shifting static constraints one
    /// step forward (see [`Solver::derived`]). For testing.
    pub no_derived: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats {
    /// Search nodes constructed, including dominated ones.
    pub nodes_expanded: u64,
    /// Nodes found equal to an earlier node.
    pub dominance_hits: u64,
    /// Nodes without any feasible instantaneous assignment.
    pub failures: u64,
    pub states_emitted: u64,
    #[serde(serialize_with = "seconds")]
    pub wall_time: Duration,
}

fn seconds<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("node budget of {0} exceeded")]
    NodeBudget(u64),
    #[error("depth budget of {0} exceeded")]
    DepthBudget(usize),
    #[error("deadline exceeded")]
    Deadline,
}

#[derive(Clone, Debug)]
enum Check {
    Pointwise(Constraint),
    Until(usize, usize),
}

/// How to enumerate instantaneous assignments for one constraint set.
#[derive(Debug, Default)]
struct Plan {
    /// Constraints without variables, checked once.
    ground: Vec<Constraint>,
    /// `definer[v]`: expression over earlier variables that `v` must equal.
    definer: Vec<Option<Expr>>,
    /// Checks to run once variable `v` (the last one they read) is assigned.
    checks: Vec<Vec<Check>>,
    /// Equalities used to narrow domains before enumeration.
    eqs: Vec<(usize, EqRhs)>,
}

#[derive(Clone, Copy, Debug)]
enum EqRhs {
    Const(i64),
    Var(usize),
}

/// `Var(v)` or `first Var(v)`; at the current instant both read `v`.
fn instant_var(e: &Expr) -> Option<VarId> {
    match e {
        Expr::Var(v) => Some(*v),
        Expr::First(a) => match &**a {
            Expr::Var(v) => Some(*v),
            _ => None,
        },
        _ => None,
    }
}

fn vars_of(c: &Constraint) -> Vec<VarId> {
    let mut vs = Vec::new();
    c.for_each_var(&mut |v| vs.push(v));
    vs.sort();
    vs.dedup();
    vs
}

/// Folds constant subexpressions. Operations that fail (division by zero,
/// overflow) are left in place so that they still fail when evaluated.
pub fn fold(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Unary(op, a) => {
            let a = fold(a);
            if let Expr::Const(x) = a {
                if let Some(v) = op.apply(x) {
                    return Expr::Const(v);
                }
            }
            Expr::unary(*op, a)
        }
        Expr::Binary(op, a, b) => {
            let (a, b) = (fold(a), fold(b));
            if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
                if let Some(v) = op.apply(*x, *y) {
                    return Expr::Const(v);
                }
            }
            Expr::bin(*op, a, b)
        }
        Expr::Ite(c, a, b) => match fold(c) {
            Expr::Const(0) => fold(b),
            Expr::Const(_) => fold(a),
            c => Expr::ite(c, fold(a), fold(b)),
        },
        Expr::First(a) => Expr::first(fold(a)),
        Expr::Next(a) => Expr::next(fold(a)),
        Expr::Fby(a, b) => Expr::fby(fold(a), fold(b)),
        Expr::At(a, t) => Expr::at(fold(a), *t),
    }
}

fn fold_constraint(c: &Constraint) -> Constraint {
    let (a, b) = c.sides();
    match c {
        Constraint::Rel(_, op, _) => Constraint::Rel(fold(a), *op, fold(b)),
        Constraint::Implies(..) => Constraint::Implies(fold(a), fold(b)),
        Constraint::Until(..) => Constraint::Until(fold(a), fold(b)),
    }
}

/// An expression that fails whenever it is evaluated.
fn error_term() -> Expr {
    Expr::bin(BinOp::Div, Expr::Const(1), Expr::Const(0))
}

/// Replaces every `first e` by the value of `e` under `tau`.
fn subst_first(e: &Expr, tau: &[i64]) -> Expr {
    match e {
        Expr::First(a) => match eval_instant(a, tau) {
            Some(v) => Expr::Const(v),
            None => error_term(),
        },
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        _ => {
            let mut out = e.clone();
            for (dst, src) in out.children_mut().into_iter().zip(e.children()) {
                *dst = subst_first(src, tau);
            }
            out
        }
    }
}

fn is_static(c: &Constraint) -> bool {
    let (a, b) = c.sides();
    !a.contains_first() && !b.contains_first() && !vars_of(c).is_empty()
}

/// Search context for one normal form.
pub struct Solver {
    nf: NormalForm,
    /// First-free pointwise constraints with variables, folded.
    statics: Vec<Constraint>,
    static_set: HashSet<Constraint>,
    /// Consequences of the static constraints one step ahead.
    derived: Vec<Constraint>,
    /// `next` target of each next pair, in pair order.
    targets: Vec<usize>,
    sets: HashMap<Vec<DynItem>, Arc<DynSet>>,
    use_derived: bool,
}

impl Solver {
    pub fn new(nf: &NormalForm) -> Self {
        Self::with_options(nf, &SolveOptions::default())
    }

    pub fn with_options(nf: &NormalForm, opts: &SolveOptions) -> Self {
        let statics: Vec<Constraint> = nf
            .pointwise
            .iter()
            .filter(|c| is_static(c))
            .map(fold_constraint)
            .collect();
        let mut seen = HashSet::new();
        let statics: Vec<Constraint> =
            statics.into_iter().filter(|c| seen.insert(c.clone())).collect();
        let static_set: HashSet<Constraint> = statics.iter().cloned().collect();
        let targets = nf.next_pairs.iter().map(|(_, j)| j.index()).collect();
        let derived = if opts.no_derived {
            Vec::new()
        } else {
            derive_shifted(&statics, &nf.next_pairs, &static_set)
        };
        Solver {
            nf: nf.clone(),
            statics,
            static_set,
            derived,
            targets,
            sets: HashMap::new(),
            use_derived: !opts.no_derived,
        }
    }

    pub fn normal_form(&self) -> &NormalForm {
        &self.nf
    }

    /// Constraints implied by shifting static constraints one step: for a
    /// static constraint whose every variable `v` has a variable `s(v)`
    /// known to equal `next v`, the constraint with `v` replaced by `s(v)`
    /// holds at every instant. They prune assignments whose successor node
    /// would fail immediately; the set of live nodes is unchanged.
    pub fn derived(&self) -> &[Constraint] {
        &self.derived
    }

    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    fn intern(&mut self, mut items: Vec<DynItem>) -> Arc<DynSet> {
        items.sort();
        items.dedup();
        if let Some(s) = self.sets.get(&items) {
            return s.clone();
        }
        let plan = self.plan(&items);
        let set = Arc::new(DynSet {
            id: self.sets.len() as u32,
            items: items.clone(),
            plan,
        });
        self.sets.insert(items, set.clone());
        set
    }

    /// Node with the given dynamic constraints and historic values, in any
    /// order; the set is canonicalized.
    pub fn node(&mut self, items: Vec<DynItem>, historic: Option<Vec<i64>>) -> SearchNode {
        SearchNode {
            set: self.intern(items),
            // without next pairs there is nothing to remember
            historic: historic.filter(|h| !h.is_empty()).map(Arc::from),
        }
    }

    pub fn root(&mut self) -> SearchNode {
        let mut items: Vec<DynItem> = self
            .nf
            .pointwise
            .iter()
            .filter(|c| !is_static(c))
            .map(|c| DynItem::Pointwise(fold_constraint(c)))
            .collect();
        items.extend(self.nf.until_pairs.iter().map(|&(a, b)| DynItem::Until(a, b)));
        items.extend(self.nf.at_triples.iter().map(|&(a, b, t)| DynItem::At(a, b, t)));
        self.node(items, None)
    }

    fn plan(&self, items: &[DynItem]) -> Plan {
        let n = self.nf.vars.len();
        let mut plan = Plan {
            ground: Vec::new(),
            definer: vec![None; n],
            checks: vec![Vec::new(); n],
            eqs: Vec::new(),
        };
        let dynamic = items.iter().filter_map(|i| match i {
            DynItem::Pointwise(c) => Some(c),
            _ => None,
        });
        let derived = self.derived.iter().filter(|_| self.use_derived);
        for c in self.statics.iter().chain(derived).chain(dynamic) {
            let vs = vars_of(c);
            let Some(last) = vs.last().map(|v| v.index()) else {
                plan.ground.push(c.clone());
                continue;
            };
            if let Constraint::Rel(a, RelOp::Eq, b) = c {
                match (instant_var(a), instant_var(b)) {
                    (Some(x), Some(y)) => plan.eqs.push((x.index(), EqRhs::Var(y.index()))),
                    (Some(x), None) | (None, Some(x)) => {
                        let other = if instant_var(a).is_some() { b } else { a };
                        if let Expr::Const(k) = other {
                            plan.eqs.push((x.index(), EqRhs::Const(*k)));
                        }
                    }
                    _ => {}
                }
                // `v == e` with `v` the last variable and absent from `e`
                // computes `v` instead of enumerating it.
                let mut def = None;
                for (side, other) in [(a, b), (b, a)] {
                    if let Some(v) = instant_var(side) {
                        if v.index() == last && !other.mentions(v) {
                            def = Some(other.clone());
                            break;
                        }
                    }
                }
                if let Some(e) = def {
                    if plan.definer[last].is_none() {
                        plan.definer[last] = Some(e);
                        continue;
                    }
                }
            }
            plan.checks[last].push(Check::Pointwise(c.clone()));
        }
        for it in items {
            if let DynItem::Until(a, b) = it {
                let last = a.index().max(b.index());
                plan.checks[last].push(Check::Until(a.index(), b.index()));
            }
        }
        plan
    }

    /// Instantaneous assignments consistent with the node, in lexicographic
    /// order of (variable order, ascending values): historic values are
    /// respected, every pointwise constraint holds at the current instant
    /// with `first e` read as `e`, and no pending until constraint fails
    /// (left and right side both zero).
    pub fn feasible_assignments(&self, node: &SearchNode) -> Vec<Vec<i64>> {
        let plan = &node.set.plan;
        let mut out = Vec::new();
        if !plan.ground.iter().all(|c| holds_instant(c, &[])) {
            return out;
        }
        let n = self.nf.vars.len();
        let mut doms: Vec<(i64, i64)> =
            self.nf.vars.iter().map(|d| (d.alphabet.lo(), d.alphabet.hi())).collect();
        if let Some(h) = &node.historic {
            for (k, &j) in self.targets.iter().enumerate() {
                let v = h[k];
                doms[j] = (doms[j].0.max(v), doms[j].1.min(v));
            }
        }
        loop {
            let mut changed = false;
            for &(x, rhs) in &plan.eqs {
                let r = match rhs {
                    EqRhs::Const(k) => (k, k),
                    EqRhs::Var(y) => doms[y],
                };
                let nx = (doms[x].0.max(r.0), doms[x].1.min(r.1));
                if nx != doms[x] {
                    doms[x] = nx;
                    changed = true;
                }
                if let EqRhs::Var(y) = rhs {
                    let ny = (doms[y].0.max(nx.0), doms[y].1.min(nx.1));
                    if ny != doms[y] {
                        doms[y] = ny;
                        changed = true;
                    }
                }
            }
            if doms.iter().any(|(lo, hi)| lo > hi) {
                return out;
            }
            if !changed {
                break;
            }
        }
        let mut tau = vec![0i64; n];
        enumerate(0, &mut tau, &doms, plan, &mut out);
        out
    }

    /// Child of `node` under `tau`.
    pub fn construct(&mut self, node: &SearchNode, tau: &[i64]) -> SearchNode {
        let historic: Vec<i64> =
            self.nf.next_pairs.iter().map(|(i, _)| tau[i.index()]).collect();
        let mut items = Vec::with_capacity(node.set.items.len());
        for it in &node.set.items {
            match it {
                DynItem::Until(_, b) => {
                    if tau[b.index()] == 0 {
                        items.push(it.clone());
                    }
                }
                DynItem::At(a, b, t) => {
                    if *t > 1 {
                        items.push(DynItem::At(*a, *b, t - 1));
                    } else {
                        items.push(DynItem::Pointwise(Constraint::eq(
                            Expr::Var(*a),
                            Expr::first(Expr::Var(*b)),
                        )));
                    }
                    // `a` is a constant stream.
                    let pin = Constraint::eq(Expr::Var(*a), Expr::Const(tau[a.index()]));
                    if !self.static_set.contains(&pin) {
                        items.push(DynItem::Pointwise(pin));
                    }
                }
                DynItem::Pointwise(c) => {
                    let (a, b) = c.sides();
                    let (a, b) = (fold(&subst_first(a, tau)), fold(&subst_first(b, tau)));
                    let c2 = match c {
                        Constraint::Rel(_, op, _) => Constraint::Rel(a, *op, b),
                        _ => Constraint::Implies(a, b),
                    };
                    if vars_of(&c2).is_empty() && holds_instant(&c2, &[]) {
                        continue;
                    }
                    if is_static(&c2) && self.static_set.contains(&c2) {
                        continue;
                    }
                    items.push(DynItem::Pointwise(c2));
                }
            }
        }
        self.node(items, Some(historic))
    }

    /// The shifted view represented by `node`, as a model over all
    /// variables of the normal form.
    pub fn node_as_stcsp(&self, node: &SearchNode) -> StCsp {
        let mut p = StCsp {
            vars: self.nf.vars.clone(),
            constraints: self.statics.clone(),
        };
        for &(a, b) in &self.nf.next_pairs {
            p.add(Constraint::eq(Expr::Var(a), Expr::next(Expr::Var(b))));
        }
        for it in &node.set.items {
            p.add(match it {
                DynItem::Pointwise(c) => c.clone(),
                DynItem::Until(a, b) => Constraint::Until(Expr::Var(*a), Expr::Var(*b)),
                DynItem::At(a, b, t) => {
                    Constraint::eq(Expr::Var(*a), Expr::at(Expr::Var(*b), *t))
                }
            });
        }
        if let Some(h) = &node.historic {
            for (k, &j) in self.targets.iter().enumerate() {
                p.add(Constraint::eq(
                    Expr::first(Expr::Var(VarId(j as u32))),
                    Expr::Const(h[k]),
                ));
            }
        }
        p
    }
}

fn enumerate(k: usize, tau: &mut Vec<i64>, doms: &[(i64, i64)], plan: &Plan, out: &mut Vec<Vec<i64>>) {
    if k == tau.len() {
        out.push(tau.clone());
        return;
    }
    let ok = |tau: &[i64]| {
        plan.checks[k].iter().all(|c| match c {
            Check::Pointwise(c) => holds_instant(c, tau),
            Check::Until(a, b) => tau[*a] != 0 || tau[*b] != 0,
        })
    };
    let (lo, hi) = doms[k];
    if let Some(e) = &plan.definer[k] {
        if let Some(v) = eval_instant(e, tau) {
            if lo <= v && v <= hi {
                tau[k] = v;
                if ok(tau) {
                    enumerate(k + 1, tau, doms, plan, out);
                }
            }
        }
        return;
    }
    for v in lo..=hi {
        tau[k] = v;
        if ok(tau) {
            enumerate(k + 1, tau, doms, plan, out);
        }
    }
}

/// See [`Solver::derived`].
fn derive_shifted(
    statics: &[Constraint],
    next_pairs: &[(VarId, VarId)],
    static_set: &HashSet<Constraint>,
) -> Vec<Constraint> {
    // succ[v] = a variable equal to `next v` everywhere.
    let mut succ: HashMap<VarId, VarId> = HashMap::new();
    for &(i, j) in next_pairs {
        succ.entry(j).or_insert(i);
    }
    loop {
        let mut changed = false;
        for c in statics {
            if let Constraint::Rel(Expr::Var(a), RelOp::Eq, Expr::Var(b)) = c {
                for (x, y) in [(a, b), (b, a)] {
                    if let Some(&s) = succ.get(x) {
                        if !succ.contains_key(y) {
                            succ.insert(*y, s);
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = Vec::new();
    let mut seen: HashSet<Constraint> = HashSet::new();
    for c in statics {
        let vs = vars_of(c);
        if !vs.iter().all(|v| succ.contains_key(v)) {
            continue;
        }
        let d = c.rename(&|v| succ[&v]);
        let (a, b) = d.sides();
        if matches!(d, Constraint::Rel(_, RelOp::Eq, _)) && a == b {
            continue;
        }
        if static_set.contains(&d) || !seen.insert(d.clone()) {
            continue;
        }
        out.push(d);
    }
    out
}

/// Builds the (unpruned) solution automaton of `nf` by depth-first search.
/// States are numbered in discovery order; a state is accepting when its
/// node has no pending until constraint.
pub fn solve(
    nf: &NormalForm,
    opts: &SolveOptions,
) -> Result<(BuchiAutomaton, SolveStats), SolveError> {
    let start = Instant::now();
    let mut solver = Solver::with_options(nf, opts);
    let mut stats = SolveStats::default();
    let mut aut = BuchiAutomaton::empty(nf.vars.clone());
    let mut seen: HashMap<NodeKey, StateId> = HashMap::new();

    struct Frame {
        state: StateId,
        node: SearchNode,
        taus: Vec<Vec<i64>>,
        next: usize,
    }

    let root = solver.root();
    let s0 = aut.add_state(root.is_accepting());
    aut.initial = Some(s0);
    seen.insert(NodeKey::of(&root), s0);
    stats.nodes_expanded = 1;
    stats.states_emitted = 1;
    let taus = solver.feasible_assignments(&root);
    if taus.is_empty() {
        stats.failures += 1;
    }
    let mut stack = vec![Frame {
        state: s0,
        node: root,
        taus,
        next: 0,
    }];
    while let Some(top) = stack.last_mut() {
        if top.next == top.taus.len() {
            stack.pop();
            continue;
        }
        let tau = std::mem::take(&mut top.taus[top.next]);
        top.next += 1;
        let from = top.state;
        let child = solver.construct(&top.node, &tau);
        stats.nodes_expanded += 1;
        if let Some(b) = opts.node_budget {
            if stats.nodes_expanded > b {
                return Err(SolveError::NodeBudget(b));
            }
        }
        if stats.nodes_expanded % 4096 == 0 {
            if let Some(d) = opts.deadline {
                if Instant::now() > d {
                    return Err(SolveError::Deadline);
                }
            }
        }
        let key = NodeKey::of(&child);
        if let Some(&to) = seen.get(&key) {
            stats.dominance_hits += 1;
            aut.add_transition(from, &tau, to);
            continue;
        }
        let to = aut.add_state(child.is_accepting());
        stats.states_emitted += 1;
        seen.insert(key, to);
        aut.add_transition(from, &tau, to);
        let taus = solver.feasible_assignments(&child);
        if taus.is_empty() {
            stats.failures += 1;
            continue;
        }
        if let Some(d) = opts.depth_budget {
            if stack.len() >= d {
                return Err(SolveError::DepthBudget(d));
            }
        }
        stack.push(Frame {
            state: to,
            node: child,
            taus,
            next: 0,
        });
    }
    stats.wall_time = start.elapsed();
    Ok((aut, stats))
}

/// Labels of `a` restricted to the user variables, as assignments.
pub fn user_label(a: &BuchiAutomaton, label: u32) -> Assignment {
    Assignment(a.user_vars().iter().map(|v| a.labels.value(label, v.index())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::{normalize, Strategy};
    use crate::parser::parse_str;
    use std::collections::BTreeSet;

    fn nf(src: &str) -> NormalForm {
        normalize(&parse_str(src).unwrap(), Strategy::InnermostLeftmost).0
    }

    fn solved(src: &str) -> (BuchiAutomaton, SolveStats) {
        solve(&nf(src), &SolveOptions::default()).unwrap()
    }

    fn user_prefixes(a: &BuchiAutomaton, len: usize) -> BTreeSet<String> {
        let users = a.user_vars();
        a.enumerate_prefixes(len, Some(&users), 1 << 24)
            .unwrap()
            .iter()
            .map(|p| p.compact())
            .collect()
    }

    #[test]
    fn feasible_with_pointwise_pin() {
        let f = nf("var x with alphabet [0..1]; x == 0;");
        let mut s = Solver::new(&f);
        let root = s.root();
        assert_eq!(s.feasible_assignments(&root), vec![vec![0]]);
    }

    #[test]
    fn feasible_with_historic_pin() {
        let f = nf("var x with alphabet [0..1]; x == next x;");
        let mut s = Solver::new(&f);
        // vars: x, _aux1 (== next _aux2), _aux2 (== x)
        let n = s.node(Vec::new(), Some(vec![1]));
        assert_eq!(s.feasible_assignments(&n), vec![vec![1, 1, 1]]);
    }

    /// Brute force over the full product of alphabets against the filter
    /// conditions.
    #[test]
    fn feasible_matches_brute_force_on_until_root() {
        let f = nf("var x with alphabet [0..1]; 1 until (x eq 1);");
        let mut s = Solver::new(&f);
        let root = s.root();
        let got = s.feasible_assignments(&root);
        let mut want = Vec::new();
        for x in 0..=1 {
            for a1 in 1..=1 {
                for a2 in 0..=1 {
                    let tau = vec![x, a1, a2];
                    let ok = f.pointwise.iter().all(|c| holds_instant(c, &tau))
                        && (a1 != 0 || a2 != 0);
                    if ok {
                        want.push(tau);
                    }
                }
            }
        }
        assert_eq!(got, want);
        assert_eq!(got, vec![vec![0, 1, 0], vec![1, 1, 1]]);
    }

    #[test]
    fn construct_drops_discharged_until() {
        let f = nf("var x with alphabet [0..1]; 1 until (x eq 1);");
        let mut s = Solver::new(&f);
        let root = s.root();
        assert!(!root.is_accepting());
        let kept = s.construct(&root, &[0, 1, 0]);
        assert!(are_equal(&kept, &root));
        let done = s.construct(&root, &[1, 1, 1]);
        assert!(done.is_accepting());
    }

    #[test]
    fn construct_counts_down_at_triples() {
        let f = nf("var x with alphabet [0..1]; x @ 3 == 1;");
        let mut s = Solver::new(&f);
        let root = s.root();
        let (a1, a2) = (VarId(1), VarId(2));
        assert_eq!(root.constraints(), &[DynItem::At(a1, a2, 3)]);
        let c = s.construct(&root, &[0, 1, 0]);
        // the pin `a1 == 1` is already a static constraint
        assert_eq!(c.constraints(), &[DynItem::At(a1, a2, 2)]);
        let c = s.construct(&c, &[0, 1, 0]);
        let c = s.construct(&c, &[0, 1, 0]);
        assert_eq!(
            c.constraints(),
            &[DynItem::Pointwise(Constraint::eq(Expr::Var(a1), Expr::first(Expr::Var(a2))))]
        );
    }

    #[test]
    fn construct_pins_at_target_between_steps() {
        let f = nf("var x, y with alphabet [0..1]; y == x @ 2;");
        let mut s = Solver::new(&f);
        let root = s.root();
        // vars: x, y, _aux1 (== x@2), _aux2 (== x)
        let c = s.construct(&root, &[0, 1, 1, 0]);
        assert!(c
            .constraints()
            .contains(&DynItem::Pointwise(Constraint::eq(Expr::Var(VarId(2)), Expr::Const(1)))));
    }

    #[test]
    fn construct_drops_first_tautology() {
        let f = nf("var x with alphabet [0..1]; first x == 0;");
        let mut s = Solver::new(&f);
        let root = s.root();
        assert_eq!(root.constraints().len(), 1);
        let c = s.construct(&root, &[0]);
        assert!(c.constraints().is_empty());
    }

    #[test]
    fn are_equal_cases() {
        let f = nf("var x with alphabet [0..1]; x == next x; first x == 0; 1 until x eq 1;");
        let mut s = Solver::new(&f);
        let root = s.root();
        assert!(are_equal(&root, &root));
        let a = s.node(Vec::new(), Some(vec![0]));
        let b = s.node(Vec::new(), Some(vec![1]));
        assert!(!are_equal(&a, &b));
        let items = root.constraints().to_vec();
        let mut rev = items.clone();
        rev.reverse();
        assert!(items.len() > 1);
        let p = s.node(items, Some(vec![0]));
        let q = s.node(rev, Some(vec![0]));
        assert!(are_equal(&p, &q));
        assert_eq!(NodeKey::of(&p), NodeKey::of(&q));
    }

    #[test]
    fn until_example_has_two_states() {
        let (a, stats) = solved("var x with alphabet [0..1]; 1 until (x eq 1);");
        let p = a.prune();
        assert_eq!(p.num_states(), 2);
        assert_eq!(p.accepting_count(), 1);
        assert_eq!(stats.states_emitted, 2);
        assert!(!p.accepting[p.initial.unwrap() as usize]);
        assert_eq!(user_prefixes(&p, 2), ["00", "01", "10", "11"].map(String::from).into());
        let x = |v| Assignment(vec![v, 1, v]);
        assert_eq!(p.accepts_lasso(&[x(1)], &[x(0)]), Ok(true));
        assert_eq!(p.accepts_lasso(&[], &[x(0)]), Ok(false));
    }

    #[test]
    fn constant_streams_example() {
        let (a, _) = solved("var x with alphabet [0..1]; x == next x;");
        let p = a.prune();
        assert_eq!(p.num_states(), 3);
        assert_eq!(p.accepting_count(), 3);
        assert_eq!(user_prefixes(&p, 4), ["0000", "1111"].map(String::from).into());
    }

    #[test]
    fn contradiction_prunes_to_empty() {
        let (a, _) = solved("var x with alphabet [0..1]; x <= 0; 1 until (x eq 1);");
        assert!(a.prune().is_empty());
    }

    #[test]
    fn pointwise_model_is_single_state() {
        let (a, _) = solved("var x with alphabet [0..1]; x == 0;");
        let p = a.prune();
        assert_eq!(p.num_states(), 1);
        assert_eq!(user_prefixes(&p, 3), ["000"].map(String::from).into());
        let x0 = Assignment(vec![0]);
        assert_eq!(p.accepts_lasso(&[], &[x0]), Ok(true));
    }

    #[test]
    fn successors_of_accepting_states_are_accepting() {
        let (a, _) = solved(
            "var x, y with alphabet [0..2];
             next x == if x lt 2 then x + 1 else 0;
             (x eq 2) until (y eq 1);
             1 until y eq 2;",
        );
        for (s, es) in a.edges.iter().enumerate() {
            if a.accepting[s] {
                assert!(es.iter().all(|&(_, t)| a.accepting[t as usize]));
            }
        }
        assert!(a.is_deterministic());
    }

    #[test]
    fn derived_constraints_keep_the_language() {
        let src = "var x with alphabet [0..2]; var y with alphabet [0..1];
                   abs(x - next x) + y <= 1; y == next y fby 0; (next x) until (x eq 2);";
        let f = nf(src);
        let with = solve(&f, &SolveOptions::default()).unwrap();
        let without = solve(&f, &SolveOptions { no_derived: true, ..Default::default() }).unwrap();
        assert!(with.1.nodes_expanded <= without.1.nodes_expanded);
        let (p, q) = (with.0.prune(), without.0.prune());
        for len in 0..=5 {
            assert_eq!(user_prefixes(&p, len), user_prefixes(&q, len));
        }
    }

    #[test]
    fn budgets_are_hard_errors() {
        let f = nf("var x with alphabet [0..3]; next x == if x lt 3 then x + 1 else 0;");
        let err = solve(&f, &SolveOptions { node_budget: Some(2), ..Default::default() });
        assert_eq!(err.unwrap_err(), SolveError::NodeBudget(2));
        let err = solve(&f, &SolveOptions { depth_budget: Some(1), ..Default::default() });
        assert_eq!(err.unwrap_err(), SolveError::DepthBudget(1));
    }

    #[test]
    fn fold_leaves_failing_operations() {
        let e = Expr::bin(BinOp::Add, Expr::Const(1), error_term());
        assert_eq!(fold(&e), e);
        let e = Expr::ite(Expr::Const(0), error_term(), Expr::bin(BinOp::Mul, Expr::Const(2), Expr::Const(3)));
        assert_eq!(fold(&e), Expr::Const(6));
    }
}
