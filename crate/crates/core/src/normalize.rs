//! Rewriting into normal form.
//!
//! Four rules remove one temporal keyword each, introducing fresh auxiliary
//! variables `_aux<k>`:
//!
//! * `c[next e]` becomes `c[x1]`, `x2 == e` and the primitive `x1 == next x2`;
//! * `c[e1 fby e2]` becomes `c[x1]`, `x2 == e1`, `x3 == e2`, the pointwise
//!   `first x1 == first x2` and the primitive `x3 == next x1`;
//! * `e1 until e2` becomes `x1 == e1`, `x2 == e2` and the primitive
//!   `x1 until x2`;
//! * `c[e @ t]` becomes `c[x1]`, `x2 == e` and the primitive `x1 == x2 @ t`.
//!
//! What remains are pointwise constraints whose only temporal operator is
//! `first`.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::model::{
    Alphabet, BinOp, Constraint, Expr, StCsp, UnOp, VarDecl, VarId, VarOrigin,
};
use crate::parser::Printer;
use crate::rng::SplitMix64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    /// User variables first, in declaration order, then auxiliaries in
    /// creation order.
    pub vars: Vec<VarDecl>,
    pub n_user: usize,
    /// `(xi, xj)`: `xi == next xj`.
    pub next_pairs: Vec<(VarId, VarId)>,
    /// `(xi, xj)`: `xi until xj`.
    pub until_pairs: Vec<(VarId, VarId)>,
    /// `(xi, xj, t)`: `xi == xj @ t`.
    pub at_triples: Vec<(VarId, VarId, u32)>,
    pub pointwise: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Next,
    Fby,
    Until,
    At,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Next => "next",
            Rule::Fby => "fby",
            Rule::Until => "until",
            Rule::At => "at",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormalItem {
    Next(VarId, VarId),
    Until(VarId, VarId),
    At(VarId, VarId, u32),
    Pointwise(Constraint),
}

impl NormalItem {
    fn rename(&self, f: &impl Fn(VarId) -> VarId) -> NormalItem {
        match self {
            NormalItem::Next(a, b) => NormalItem::Next(f(*a), f(*b)),
            NormalItem::Until(a, b) => NormalItem::Until(f(*a), f(*b)),
            NormalItem::At(a, b, t) => NormalItem::At(f(*a), f(*b), *t),
            NormalItem::Pointwise(c) => NormalItem::Pointwise(c.rename(f)),
        }
    }

    fn for_each_var(&self, f: &mut impl FnMut(VarId)) {
        match self {
            NormalItem::Next(a, b) | NormalItem::Until(a, b) | NormalItem::At(a, b, _) => {
                f(*a);
                f(*b);
            }
            NormalItem::Pointwise(c) => c.for_each_var(f),
        }
    }
}

/// One rule application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteStep {
    pub rule: Rule,
    /// Position of the rewritten constraint in the active list.
    pub index: usize,
    pub consumed: Constraint,
    /// Constraint written back at `index`; `None` when it is removed.
    pub replaced_by: Option<Constraint>,
    /// Definitions appended to the active list.
    pub produced: Vec<Constraint>,
    /// Items moved to the normal set.
    pub moved: Vec<NormalItem>,
    pub fresh: Vec<VarDecl>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RewriteTrace {
    pub steps: Vec<RewriteStep>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    /// Rewrite the first constraint that is not yet normal, at its innermost
    /// leftmost temporal subterm.
    #[default]
    InnermostLeftmost,
    /// Pick uniformly among every applicable redex.
    Random(u64),
}

/// Number of `next`, `fby`, `until` and `@` keywords.
pub fn count_temporal_keywords(cs: &[Constraint]) -> usize {
    cs.iter().map(Constraint::temporal_count).sum()
}

/// Exact value range of `e` by interval arithmetic, as `(lo, hi)`.
/// Relational and Boolean operators yield `[0..1]`.
pub fn expr_range(e: &Expr, alphabet: &dyn Fn(VarId) -> Alphabet) -> (i64, i64) {
    let (lo, hi) = range128(e, alphabet);
    let clamp = |v: i128| v.clamp(i64::MIN as i128, i64::MAX as i128) as i64;
    (clamp(lo), clamp(hi))
}

fn range128(e: &Expr, alph: &dyn Fn(VarId) -> Alphabet) -> (i128, i128) {
    let hull = |a: (i128, i128), b: (i128, i128)| (a.0.min(b.0), a.1.max(b.1));
    match e {
        Expr::Const(c) => (*c as i128, *c as i128),
        Expr::Var(v) => {
            let a = alph(*v);
            (a.lo() as i128, a.hi() as i128)
        }
        Expr::Unary(op, a) => {
            let (lo, hi) = range128(a, alph);
            match op {
                UnOp::Neg => (-hi, -lo),
                UnOp::Abs if lo >= 0 => (lo, hi),
                UnOp::Abs if hi <= 0 => (-hi, -lo),
                UnOp::Abs => (0, hi.max(-lo)),
                UnOp::Not if lo > 0 || hi < 0 => (0, 0),
                UnOp::Not if lo == 0 && hi == 0 => (1, 1),
                UnOp::Not => (0, 1),
            }
        }
        Expr::Binary(op, a, b) => {
            let (al, ah) = range128(a, alph);
            let (bl, bh) = range128(b, alph);
            match op {
                BinOp::Add => (al + bl, ah + bh),
                BinOp::Sub => (al - bh, ah - bl),
                BinOp::Mul => {
                    let c = [al * bl, al * bh, ah * bl, ah * bh];
                    (*c.iter().min().unwrap(), *c.iter().max().unwrap())
                }
                BinOp::Div => {
                    // Truncated division is monotone in each operand within
                    // one divisor sign, so the extremes sit at corners.
                    let mut out: Option<(i128, i128)> = None;
                    for (pl, ph) in nonzero_parts(bl, bh) {
                        let c = [al / pl, al / ph, ah / pl, ah / ph];
                        let r = (*c.iter().min().unwrap(), *c.iter().max().unwrap());
                        out = Some(out.map_or(r, |o| hull(o, r)));
                    }
                    out.unwrap_or((0, 0))
                }
                BinOp::Mod => {
                    let m = nonzero_parts(bl, bh)
                        .iter()
                        .map(|(l, h)| l.abs().max(h.abs()))
                        .max();
                    match m {
                        None => (0, 0),
                        Some(m) => {
                            let lo = if al >= 0 { 0 } else { al.max(-(m - 1)) };
                            let hi = if ah <= 0 { 0 } else { ah.min(m - 1) };
                            (lo, hi)
                        }
                    }
                }
                _ => (0, 1),
            }
        }
        Expr::Ite(_, a, b) | Expr::Fby(a, b) => hull(range128(a, alph), range128(b, alph)),
        Expr::First(a) | Expr::Next(a) | Expr::At(a, _) => range128(a, alph),
    }
}

/// Splits `[lo..hi]` into its negative and positive parts.
fn nonzero_parts(lo: i128, hi: i128) -> Vec<(i128, i128)> {
    let mut parts = Vec::new();
    if lo <= -1 {
        parts.push((lo, hi.min(-1)));
    }
    if hi >= 1 {
        parts.push((lo.max(1), hi));
    }
    parts
}

/// Position of a rewritable subterm: constraint index, side, child path.
/// An empty path on an until constraint with `side == 2` is the until itself.
#[derive(Clone, Debug)]
struct Redex {
    index: usize,
    side: usize,
    path: Vec<usize>,
}

fn collect_redexes(e: &Expr, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    for (i, c) in e.children().into_iter().enumerate() {
        path.push(i);
        collect_redexes(c, path, out);
        path.pop();
    }
    if e.is_temporal() {
        out.push(path.clone());
    }
}

fn constraint_redexes(index: usize, c: &Constraint) -> Vec<Redex> {
    let (a, b) = c.sides();
    let mut out = Vec::new();
    for (side, e) in [a, b].into_iter().enumerate() {
        let mut paths = Vec::new();
        collect_redexes(e, &mut Vec::new(), &mut paths);
        out.extend(paths.into_iter().map(|path| Redex { index, side, path }));
    }
    if matches!(c, Constraint::Until(..)) {
        out.push(Redex {
            index,
            side: 2,
            path: Vec::new(),
        });
    }
    out
}

fn subterm_mut<'a>(e: &'a mut Expr, path: &[usize]) -> &'a mut Expr {
    match path.split_first() {
        None => e,
        Some((i, rest)) => subterm_mut(e.children_mut().swap_remove(*i), rest),
    }
}

struct Rewriter {
    vars: Vec<VarDecl>,
    n_user: usize,
    aux_counter: u32,
    active: Vec<Constraint>,
    next_pairs: Vec<(VarId, VarId)>,
    until_pairs: Vec<(VarId, VarId)>,
    at_triples: Vec<(VarId, VarId, u32)>,
    moved_pointwise: Vec<Constraint>,
}

impl Rewriter {
    fn new(p: &StCsp) -> Self {
        Rewriter {
            vars: p.vars.clone(),
            n_user: p.vars.len(),
            aux_counter: 0,
            active: p.constraints.clone(),
            next_pairs: Vec::new(),
            until_pairs: Vec::new(),
            at_triples: Vec::new(),
            moved_pointwise: Vec::new(),
        }
    }

    fn range(&self, e: &Expr) -> Alphabet {
        let vars = &self.vars;
        let (lo, hi) = expr_range(e, &|v| vars[v.index()].alphabet);
        Alphabet::new(lo, hi).expect("interval arithmetic yields lo <= hi")
    }

    fn fresh(&mut self, alphabet: Alphabet, fresh: &mut Vec<VarDecl>) -> VarId {
        let name = loop {
            self.aux_counter += 1;
            let name = format!("_aux{}", self.aux_counter);
            if !self.vars.iter().any(|d| d.name == name) {
                break name;
            }
        };
        let decl = VarDecl {
            name,
            alphabet,
            origin: VarOrigin::Aux(self.aux_counter),
        };
        let id = VarId(self.vars.len() as u32);
        self.vars.push(decl.clone());
        fresh.push(decl);
        id
    }

    fn apply(&mut self, r: &Redex) -> RewriteStep {
        let consumed = self.active[r.index].clone();
        let mut fresh = Vec::new();
        let mut produced = Vec::new();
        let mut moved = Vec::new();
        if r.side == 2 {
            let (a, b) = consumed.sides();
            let (ra, rb) = (self.range(a), self.range(b));
            let x1 = self.fresh(ra, &mut fresh);
            let x2 = self.fresh(rb, &mut fresh);
            produced.push(Constraint::eq(Expr::Var(x1), a.clone()));
            produced.push(Constraint::eq(Expr::Var(x2), b.clone()));
            moved.push(NormalItem::Until(x1, x2));
            self.active.remove(r.index);
            self.active.extend(produced.iter().cloned());
            self.until_pairs.push((x1, x2));
            return RewriteStep {
                rule: Rule::Until,
                index: r.index,
                consumed,
                replaced_by: None,
                produced,
                moved,
                fresh,
            };
        }
        let mut c = consumed.clone();
        let target = {
            let (a, b) = c.sides();
            let side = if r.side == 0 { a } else { b };
            let mut e = side;
            for i in &r.path {
                e = e.children()[*i];
            }
            e.clone()
        };
        let (rule, x1) = match &target {
            Expr::Next(e) => {
                let x1 = self.fresh(self.range(&target), &mut fresh);
                let x2 = self.fresh(self.range(e), &mut fresh);
                produced.push(Constraint::eq(Expr::Var(x2), (**e).clone()));
                moved.push(NormalItem::Next(x1, x2));
                self.next_pairs.push((x1, x2));
                (Rule::Next, x1)
            }
            Expr::Fby(e1, e2) => {
                let x1 = self.fresh(self.range(&target), &mut fresh);
                let x2 = self.fresh(self.range(e1), &mut fresh);
                let x3 = self.fresh(self.range(e2), &mut fresh);
                produced.push(Constraint::eq(Expr::Var(x2), (**e1).clone()));
                produced.push(Constraint::eq(Expr::Var(x3), (**e2).clone()));
                let head = Constraint::eq(
                    Expr::first(Expr::Var(x1)),
                    Expr::first(Expr::Var(x2)),
                );
                moved.push(NormalItem::Pointwise(head.clone()));
                moved.push(NormalItem::Next(x3, x1));
                self.moved_pointwise.push(head);
                self.next_pairs.push((x3, x1));
                (Rule::Fby, x1)
            }
            Expr::At(e, t) => {
                let x1 = self.fresh(self.range(&target), &mut fresh);
                let x2 = self.fresh(self.range(e), &mut fresh);
                produced.push(Constraint::eq(Expr::Var(x2), (**e).clone()));
                moved.push(NormalItem::At(x1, x2, *t));
                self.at_triples.push((x1, x2, *t));
                (Rule::At, x1)
            }
            _ => unreachable!("redex is not temporal"),
        };
        {
            let (a, b) = c.sides_mut();
            let side = if r.side == 0 { a } else { b };
            *subterm_mut(side, &r.path) = Expr::Var(x1);
        }
        self.active[r.index] = c.clone();
        self.active.extend(produced.iter().cloned());
        RewriteStep {
            rule,
            index: r.index,
            consumed,
            replaced_by: Some(c),
            produced,
            moved,
            fresh,
        }
    }

    fn pick(&self, rng: &mut Option<SplitMix64>) -> Option<Redex> {
        match rng {
            None => self
                .active
                .iter()
                .enumerate()
                .find(|(_, c)| c.temporal_count() > 0)
                .map(|(i, c)| constraint_redexes(i, c).swap_remove(0)),
            Some(rng) => {
                let mut all: Vec<Redex> = self
                    .active
                    .iter()
                    .enumerate()
                    .flat_map(|(i, c)| constraint_redexes(i, c))
                    .collect();
                if all.is_empty() {
                    None
                } else {
                    let k = rng.below(all.len() as u64) as usize;
                    Some(all.swap_remove(k))
                }
            }
        }
    }

    fn finish(self) -> NormalForm {
        let mut pointwise = self.active;
        pointwise.extend(self.moved_pointwise);
        NormalForm {
            vars: self.vars,
            n_user: self.n_user,
            next_pairs: self.next_pairs,
            until_pairs: self.until_pairs,
            at_triples: self.at_triples,
            pointwise,
        }
    }
}

/// Rewrites `p` until no rule applies.
pub fn normalize(p: &StCsp, strategy: Strategy) -> (NormalForm, RewriteTrace) {
    let mut rw = Rewriter::new(p);
    let mut rng = match strategy {
        Strategy::InnermostLeftmost => None,
        Strategy::Random(seed) => Some(SplitMix64::new(seed)),
    };
    let mut trace = RewriteTrace::default();
    while let Some(r) = rw.pick(&mut rng) {
        trace.steps.push(rw.apply(&r));
    }
    (rw.finish(), trace)
}

/// Rebuilds the normal form by replaying `trace` on `p`.
pub fn replay(p: &StCsp, trace: &RewriteTrace) -> NormalForm {
    let mut rw = Rewriter::new(p);
    for s in &trace.steps {
        assert_eq!(rw.active[s.index], s.consumed, "trace does not match input");
        match &s.replaced_by {
            Some(c) => rw.active[s.index] = c.clone(),
            None => {
                rw.active.remove(s.index);
            }
        }
        rw.active.extend(s.produced.iter().cloned());
        rw.vars.extend(s.fresh.iter().cloned());
        for m in &s.moved {
            match m {
                NormalItem::Next(a, b) => rw.next_pairs.push((*a, *b)),
                NormalItem::Until(a, b) => rw.until_pairs.push((*a, *b)),
                NormalItem::At(a, b, t) => rw.at_triples.push((*a, *b, *t)),
                NormalItem::Pointwise(c) => rw.moved_pointwise.push(c.clone()),
            }
        }
    }
    rw.finish()
}

impl NormalForm {
    pub fn alphabet(&self, v: VarId) -> Alphabet {
        self.vars[v.index()].alphabet
    }

    pub fn user_vars(&self) -> Vec<VarId> {
        (0..self.n_user as u32).map(VarId).collect()
    }

    pub fn items(&self) -> Vec<NormalItem> {
        let mut out: Vec<NormalItem> = Vec::new();
        out.extend(self.next_pairs.iter().map(|&(a, b)| NormalItem::Next(a, b)));
        out.extend(self.until_pairs.iter().map(|&(a, b)| NormalItem::Until(a, b)));
        out.extend(self.at_triples.iter().map(|&(a, b, t)| NormalItem::At(a, b, t)));
        out.extend(self.pointwise.iter().cloned().map(NormalItem::Pointwise));
        out
    }

    /// Number of temporal keywords left in pointwise constraints; zero for
    /// every output of [`normalize`].
    pub fn residual_keywords(&self) -> usize {
        count_temporal_keywords(&self.pointwise)
    }

    /// The normal form as an ordinary model over all variables.
    pub fn to_stcsp(&self) -> StCsp {
        let mut p = StCsp {
            vars: self.vars.clone(),
            constraints: self.pointwise.clone(),
        };
        for &(a, b) in &self.next_pairs {
            p.add(Constraint::eq(Expr::Var(a), Expr::next(Expr::Var(b))));
        }
        for &(a, b) in &self.until_pairs {
            p.add(Constraint::Until(Expr::Var(a), Expr::Var(b)));
        }
        for &(a, b, t) in &self.at_triples {
            p.add(Constraint::eq(Expr::Var(a), Expr::at(Expr::Var(b), t)));
        }
        p
    }

    /// Concrete syntax, with primitives grouped after the pointwise part.
    pub fn render(&self) -> String {
        let names = |v: VarId| self.vars[v.index()].name.clone();
        let pr = Printer::new(&names);
        let mut out = String::new();
        for d in &self.vars {
            out.push_str(&format!("var {} with alphabet {};\n", d.name, d.alphabet));
        }
        out.push_str("\n// pointwise\n");
        for c in &self.pointwise {
            out.push_str(&format!("{};\n", pr.constraint(c)));
        }
        out.push_str("// primitive next\n");
        for &(a, b) in &self.next_pairs {
            out.push_str(&format!("{} == next {};\n", names(a), names(b)));
        }
        out.push_str("// primitive until\n");
        for &(a, b) in &self.until_pairs {
            out.push_str(&format!("{} until {};\n", names(a), names(b)));
        }
        out.push_str("// primitive @\n");
        for &(a, b, t) in &self.at_triples {
            out.push_str(&format!("{} == {} @ {};\n", names(a), names(b), t));
        }
        out
    }
}

fn hash_of(x: impl Hash) -> u64 {
    let mut h = DefaultHasher::new();
    x.hash(&mut h);
    h.finish()
}

/// Hash of an expression with variables replaced by colors; `mark` gets a
/// distinguished color.
fn hash_expr(e: &Expr, colors: &[u64], mark: Option<VarId>, h: &mut DefaultHasher) {
    std::mem::discriminant(e).hash(h);
    match e {
        Expr::Const(c) => c.hash(h),
        Expr::Var(v) => {
            if Some(*v) == mark {
                u64::MAX.hash(h)
            } else {
                colors[v.index()].hash(h)
            }
        }
        Expr::Unary(op, _) => op.hash(h),
        Expr::Binary(op, ..) => op.hash(h),
        Expr::At(_, t) => t.hash(h),
        _ => {}
    }
    for c in e.children() {
        hash_expr(c, colors, mark, h);
    }
}

fn hash_item(item: &NormalItem, colors: &[u64], mark: Option<VarId>) -> u64 {
    let mut h = DefaultHasher::new();
    let var = |v: VarId, h: &mut DefaultHasher| {
        if Some(v) == mark {
            u64::MAX.hash(h)
        } else {
            colors[v.index()].hash(h)
        }
    };
    match item {
        NormalItem::Next(a, b) | NormalItem::Until(a, b) => {
            std::mem::discriminant(item).hash(&mut h);
            var(*a, &mut h);
            var(*b, &mut h);
        }
        NormalItem::At(a, b, t) => {
            std::mem::discriminant(item).hash(&mut h);
            var(*a, &mut h);
            var(*b, &mut h);
            t.hash(&mut h);
        }
        NormalItem::Pointwise(c) => {
            std::mem::discriminant(item).hash(&mut h);
            std::mem::discriminant(c).hash(&mut h);
            if let Constraint::Rel(_, op, _) = c {
                op.hash(&mut h);
            }
            let (a, b) = c.sides();
            hash_expr(a, colors, mark, &mut h);
            hash_expr(b, colors, mark, &mut h);
        }
    }
    h.finish()
}

/// One round of color refinement.
fn refine(items: &[NormalItem], colors: &[u64]) -> Vec<u64> {
    let mut occ: Vec<Vec<u64>> = vec![Vec::new(); colors.len()];
    for it in items {
        let mut vs = Vec::new();
        it.for_each_var(&mut |v| vs.push(v));
        vs.sort();
        vs.dedup();
        for v in vs {
            occ[v.index()].push(hash_item(it, colors, Some(v)));
        }
    }
    colors
        .iter()
        .zip(occ.iter_mut())
        .map(|(c, o)| {
            o.sort_unstable();
            hash_of((c, &*o))
        })
        .collect()
}

fn distinct(colors: &[u64]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn sorted(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v
}

/// Whether a bijective renaming of auxiliary variables maps `a` onto `b`.
/// Constraint order is irrelevant; user variables must match exactly.
pub fn alpha_equivalent(a: &NormalForm, b: &NormalForm) -> bool {
    if a.n_user != b.n_user
        || a.vars.len() != b.vars.len()
        || a.vars[..a.n_user] != b.vars[..b.n_user]
    {
        return false;
    }
    let (ia, ib) = (a.items(), b.items());
    if ia.len() != ib.len() {
        return false;
    }
    let initial = |nf: &NormalForm| -> Vec<u64> {
        nf.vars
            .iter()
            .enumerate()
            .map(|(i, d)| match d.origin {
                VarOrigin::User => hash_of(("user", i)),
                VarOrigin::Aux(_) => hash_of(("aux", d.alphabet)),
            })
            .collect()
    };
    let (mut ca, mut cb) = (initial(a), initial(b));
    loop {
        if sorted(ca.clone()) != sorted(cb.clone()) {
            return false;
        }
        let (na, nb) = (refine(&ia, &ca), refine(&ib, &cb));
        let grew = distinct(&na) > distinct(&ca);
        ca = na;
        cb = nb;
        if !grew {
            break;
        }
    }
    if sorted(ca.clone()) != sorted(cb.clone()) {
        return false;
    }

    let target: BTreeMap<NormalItem, usize> = ib.iter().fold(BTreeMap::new(), |mut m, it| {
        *m.entry(it.clone()).or_insert(0) += 1;
        m
    });
    let n_user = a.n_user;
    let mut by_color: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, c) in cb.iter().enumerate().skip(n_user) {
        by_color.entry(*c).or_default().push(i);
    }
    // Smallest color classes first.
    let mut order: Vec<usize> = (n_user..a.vars.len()).collect();
    order.sort_by_key(|&i| (by_color.get(&ca[i]).map_or(0, Vec::len), i));

    // Items of `a` become checkable once their last aux variable is mapped.
    let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut ready: Vec<Vec<&NormalItem>> = vec![Vec::new(); order.len() + 1];
    for it in &ia {
        let mut last = 0;
        it.for_each_var(&mut |v| {
            if v.index() >= n_user {
                last = last.max(pos[&v.index()] + 1);
            }
        });
        ready[last].push(it);
    }
    let mut map: Vec<Option<u32>> = (0..a.vars.len())
        .map(|i| (i < n_user).then_some(i as u32))
        .collect();
    let mut used = vec![false; b.vars.len()];
    let ok_ready = |k: usize, map: &[Option<u32>]| {
        ready[k].iter().all(|it| {
            let r = it.rename(&|v| VarId(map[v.index()].unwrap()));
            target.contains_key(&r)
        })
    };
    if !ok_ready(0, &map) {
        return false;
    }

    fn search(
        k: usize,
        order: &[usize],
        ca: &[u64],
        by_color: &HashMap<u64, Vec<usize>>,
        map: &mut Vec<Option<u32>>,
        used: &mut Vec<bool>,
        ok_ready: &dyn Fn(usize, &[Option<u32>]) -> bool,
        full: &dyn Fn(&[Option<u32>]) -> bool,
    ) -> bool {
        if k == order.len() {
            return full(map);
        }
        let v = order[k];
        let Some(cands) = by_color.get(&ca[v]) else {
            return false;
        };
        for &w in cands {
            if used[w] {
                continue;
            }
            used[w] = true;
            map[v] = Some(w as u32);
            if ok_ready(k + 1, map)
                && search(k + 1, order, ca, by_color, map, used, ok_ready, full)
            {
                return true;
            }
            used[w] = false;
            map[v] = None;
        }
        false
    }

    let full = |map: &[Option<u32>]| {
        let mut renamed: Vec<NormalItem> = ia
            .iter()
            .map(|it| it.rename(&|v| VarId(map[v.index()].unwrap())))
            .collect();
        renamed.sort();
        let mut expect = ib.clone();
        expect.sort();
        renamed == expect
    };
    search(0, &order, &ca, &by_color, &mut map, &mut used, &ok_ready, &full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::Strategy;
    use crate::parser::parse_str;
    use proptest::prelude::*;
    use proptest::strategy::Strategy as Gen;

    fn v(i: u32) -> Expr {
        Expr::Var(VarId(i))
    }

    #[test]
    fn next_rule() {
        let p = parse_str("var x, y with alphabet [0..3]; next x == y + 1;").unwrap();
        let (nf, trace) = normalize(&p, Strategy::InnermostLeftmost);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].rule, Rule::Next);
        // x1 = _aux1 (VarId 2), x2 = _aux2 (VarId 3)
        assert_eq!(nf.next_pairs, vec![(VarId(2), VarId(3))]);
        assert_eq!(
            nf.pointwise,
            vec![
                Constraint::eq(v(2), Expr::bin(BinOp::Add, v(1), Expr::Const(1))),
                Constraint::eq(v(3), v(0)),
            ]
        );
        assert_eq!(nf.vars[2].name, "_aux1");
        assert_eq!(nf.vars[3].alphabet, Alphabet::new(0, 3).unwrap());
    }

    #[test]
    fn until_rule() {
        let p = parse_str("var g with alphabet [0..1]; 1 until (g eq 1);").unwrap();
        let (nf, _) = normalize(&p, Strategy::InnermostLeftmost);
        assert_eq!(nf.until_pairs, vec![(VarId(1), VarId(2))]);
        assert_eq!(
            nf.pointwise,
            vec![
                Constraint::eq(v(1), Expr::Const(1)),
                Constraint::eq(v(2), Expr::bin(BinOp::Eq, v(0), Expr::Const(1))),
            ]
        );
        assert_eq!(nf.vars[1].alphabet, Alphabet::new(1, 1).unwrap());
        assert_eq!(nf.vars[2].alphabet, Alphabet::new(0, 1).unwrap());
    }

    #[test]
    fn already_normal_is_unchanged() {
        let p = parse_str("var x with alphabet [0..1]; x == 0;").unwrap();
        let (nf, trace) = normalize(&p, Strategy::InnermostLeftmost);
        assert!(trace.steps.is_empty());
        assert_eq!(nf.pointwise, p.constraints);
        assert_eq!(nf.vars, p.vars);
    }

    #[test]
    fn at_rule() {
        let p = parse_str("var x with alphabet [0..1]; x @ 3 == 1;").unwrap();
        let (nf, _) = normalize(&p, Strategy::InnermostLeftmost);
        assert_eq!(nf.at_triples, vec![(VarId(1), VarId(2), 3)]);
        assert_eq!(
            nf.pointwise,
            vec![Constraint::eq(v(1), Expr::Const(1)), Constraint::eq(v(2), v(0))]
        );
    }

    #[test]
    fn fby_rule() {
        let p = parse_str("var x with alphabet [0..3]; x == 0 fby x + 1;").unwrap();
        let (nf, _) = normalize(&p, Strategy::InnermostLeftmost);
        let (x1, x2, x3) = (VarId(1), VarId(2), VarId(3));
        assert_eq!(nf.next_pairs, vec![(x3, x1)]);
        assert_eq!(
            nf.pointwise,
            vec![
                Constraint::eq(v(0), Expr::Var(x1)),
                Constraint::eq(Expr::Var(x2), Expr::Const(0)),
                Constraint::eq(Expr::Var(x3), Expr::bin(BinOp::Add, v(0), Expr::Const(1))),
                Constraint::eq(Expr::first(Expr::Var(x1)), Expr::first(Expr::Var(x2))),
            ]
        );
        assert_eq!(nf.vars[1].alphabet, Alphabet::new(0, 4).unwrap());
    }

    #[test]
    fn keyword_counts() {
        let p = parse_str("var x, y, z with alphabet [0..1]; next x == y; x fby (next y) == z;")
            .unwrap();
        assert_eq!(count_temporal_keywords(&p.constraints[..1]), 1);
        assert_eq!(count_temporal_keywords(&p.constraints[1..]), 2);
        let (nf, _) = normalize(&p, Strategy::InnermostLeftmost);
        assert_eq!(nf.residual_keywords(), 0);
    }

    #[test]
    fn ranges() {
        let alph = |v: VarId| match v.0 {
            0 => Alphabet::new(-3, 5).unwrap(),
            _ => Alphabet::new(-2, 2).unwrap(),
        };
        let r = |e: Expr| expr_range(&e, &alph);
        assert_eq!(r(Expr::bin(BinOp::Mul, v(0), v(1))), (-10, 10));
        assert_eq!(r(Expr::bin(BinOp::Div, v(0), v(1))), (-5, 5));
        assert_eq!(r(Expr::bin(BinOp::Mod, v(0), v(1))), (-1, 1));
        assert_eq!(r(Expr::unary(UnOp::Abs, v(0))), (0, 5));
        assert_eq!(r(Expr::unary(UnOp::Neg, v(0))), (-5, 3));
        assert_eq!(r(Expr::bin(BinOp::Lt, v(0), v(1))), (0, 1));
        assert_eq!(r(Expr::bin(BinOp::Div, v(0), Expr::Const(0))), (0, 0));
    }

    /// Brute-force check of interval arithmetic over small operand ranges.
    #[test]
    fn ranges_match_exhaustive_evaluation() {
        let ops = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Mod];
        for (al, ah, bl, bh) in [(-3, 4, -2, 3), (0, 5, 1, 3), (-4, -1, -3, -1), (2, 2, -5, 5)] {
            let alph = move |v: VarId| match v.0 {
                0 => Alphabet::new(al, ah).unwrap(),
                _ => Alphabet::new(bl, bh).unwrap(),
            };
            for op in ops {
                let vals: Vec<i64> = (al..=ah)
                    .flat_map(|a| (bl..=bh).filter_map(move |b| op.apply(a, b)))
                    .collect();
                let exact = (*vals.iter().min().unwrap(), *vals.iter().max().unwrap());
                assert_eq!(expr_range(&Expr::bin(op, v(0), v(1)), &alph), exact, "{op:?}");
            }
        }
    }

    #[test]
    fn alpha_equivalence_basics() {
        let p = parse_str("var x with alphabet [0..2]; next next x == 1 fby x;").unwrap();
        let (a, _) = normalize(&p, Strategy::InnermostLeftmost);
        assert!(alpha_equivalent(&a, &a));
        let q = parse_str("var x with alphabet [0..2]; next next x == 2 fby x;").unwrap();
        let (b, _) = normalize(&q, Strategy::InnermostLeftmost);
        assert!(!alpha_equivalent(&a, &b));
        for seed in 0..20 {
            let (c, _) = normalize(&p, Strategy::Random(seed));
            assert!(alpha_equivalent(&a, &c), "seed {seed}\n{}\n{}", a.render(), c.render());
        }
    }

    #[test]
    fn replay_reproduces_output() {
        let p = parse_str(
            "var x, y with alphabet [0..2];
             (x @ 2) + next y == 0 fby y;
             (next x) until (y eq 1 fby 0);",
        )
        .unwrap();
        for strategy in [Strategy::InnermostLeftmost, Strategy::Random(3)] {
            let (nf, trace) = normalize(&p, strategy);
            assert_eq!(replay(&p, &trace), nf);
        }
    }

    #[test]
    fn to_stcsp_round_trips_through_parser() {
        let p = parse_str("var x with alphabet [0..2]; x @ 2 == next x; 1 until x eq 2;").unwrap();
        let (nf, _) = normalize(&p, Strategy::InnermostLeftmost);
        let q = nf.to_stcsp();
        assert!(q.validate().is_ok());
        let back = crate::parser::parse(&crate::parser::unparse(&q)).unwrap();
        assert_eq!(back.constraints, q.constraints);
        let shape = |p: &StCsp| -> Vec<(String, Alphabet)> {
            p.vars.iter().map(|d| (d.name.clone(), d.alphabet)).collect()
        };
        assert_eq!(shape(&back), shape(&q));
    }

    fn arb_expr() -> impl Gen<Value = Expr> {
        let leaf = prop_oneof![(0i64..3).prop_map(Expr::Const), (0u32..2).prop_map(v)];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Add, a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Eq, a, b)),
                (inner.clone(), inner.clone(), inner.clone())
                    .prop_map(|(c, a, b)| Expr::ite(c, a, b)),
                inner.clone().prop_map(Expr::first),
                inner.clone().prop_map(Expr::next),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::fby(a, b)),
                (inner, 1u32..3).prop_map(|(a, t)| Expr::at(a, t)),
            ]
        })
    }

    fn arb_model() -> impl Gen<Value = StCsp> {
        let c = prop_oneof![
            (arb_expr(), arb_expr()).prop_map(|(a, b)| Constraint::eq(a, b)),
            (arb_expr(), arb_expr()).prop_map(|(a, b)| Constraint::Implies(a, b)),
            (arb_expr(), arb_expr()).prop_map(|(a, b)| Constraint::Until(a, b)),
        ];
        proptest::collection::vec(c, 1..4).prop_map(|cs| {
            let mut p = StCsp::new();
            p.add_var("x", Alphabet::new(0, 2).unwrap());
            p.add_var("y", Alphabet::new(0, 1).unwrap());
            for c in cs {
                p.add(c);
            }
            p
        })
    }

    proptest! {
        #[test]
        fn each_step_removes_one_keyword(p in arb_model()) {
            let (nf, trace) = normalize(&p, Strategy::Random(11));
            let mut before = count_temporal_keywords(&p.constraints);
            prop_assert_eq!(trace.steps.len(), before);
            for s in &trace.steps {
                let mut after = before - s.consumed.temporal_count();
                after += s.replaced_by.as_ref().map_or(0, |c| c.temporal_count());
                after += count_temporal_keywords(&s.produced);
                prop_assert_eq!(after + 1, before);
                before = after;
            }
            prop_assert_eq!(nf.residual_keywords(), 0);
        }

        #[test]
        fn rule_orders_are_confluent(p in arb_model(), seed in 0u64..1000) {
            let (a, _) = normalize(&p, Strategy::InnermostLeftmost);
            let (b, _) = normalize(&p, Strategy::Random(seed));
            prop_assert!(alpha_equivalent(&a, &b), "{}\n{}", a.render(), b.render());
        }
    }
}
