//! Instance generators: missionaries and cannibals, grid path planning, and
//! small random models used as a test corpus.

use std::fmt::Write as _;

use crate::model::{Alphabet, BinOp, Constraint, Expr, RelOp, StCsp, UnOp, VarId};
use crate::parser::{unparse, ModelSource};
use crate::rng::SplitMix64;

/// How the goal of a planning model is stated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// `1 until goal`.
    Until,
    /// `goal @ t == 1`.
    At(u32),
    /// `first next ... next goal == 1` with `t` nexts; same meaning as `At`.
    FirstNext(u32),
}

impl Variant {
    fn goal_constraint(self, goal: &str) -> String {
        match self {
            Variant::Until => format!("1 until {goal};\n"),
            Variant::At(t) => format!("{goal} @ {t} == 1;\n"),
            Variant::FirstNext(t) => {
                format!("first {}{goal} == 1;\n", "next ".repeat(t as usize))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McParams {
    /// Missionaries, and cannibals.
    pub n: u32,
    /// Boat capacity.
    pub b: u32,
    pub variant: Variant,
}

/// Missionaries and cannibals. Everyone starts on the left bank with the
/// boat; `succ` holds once everyone is on the right bank, after which
/// nobody moves.
pub fn gen_mc(params: &McParams) -> ModelSource {
    let McParams { n, b, variant } = *params;
    assert!(n >= 1 && b >= 2, "need n >= 1 and b >= 2");
    let (lm, rm, lc, rc) = ("leftmissionaries", "rightmissionaries", "leftcannibals", "rightcannibals");
    let mut s = String::new();
    let _ = writeln!(s, "// missionaries and cannibals, n = {n}, b = {b}");
    for v in [lm, rm, lc, rc] {
        let _ = writeln!(s, "var {v} with alphabet [0..{n}];");
    }
    s.push_str("var boat with alphabet [0..1]; // 0: boat on the left bank\n");
    s.push_str("var succ with alphabet [0..1];\n\n");

    let _ = writeln!(s, "first {lm} == {n};");
    let _ = writeln!(s, "first {lc} == {n};");
    let _ = writeln!(s, "first {rm} == 0;");
    let _ = writeln!(s, "first {rc} == 0;");
    s.push_str("first boat == 0;\n\n");

    s.push_str("// missionaries are never outnumbered on a bank they occupy\n");
    let _ = writeln!(s, "{lc} <= if {lm} eq 0 then {n} else {lm};");
    let _ = writeln!(s, "{rc} <= if {rm} eq 0 then {n} else {rm};\n");

    let load = format!("abs({lm} - next {lm}) + abs({lc} - next {lc})");
    s.push_str("// between 1 and b people cross, until done\n");
    let _ = writeln!(s, "{load} >= if succ then 0 else 1;");
    let _ = writeln!(s, "{load} <= {b};\n");

    let _ = writeln!(s, "{lm} - next {lm} == next {rm} - {rm};");
    let _ = writeln!(s, "{lc} - next {lc} == next {rc} - {rc};\n");

    s.push_str("// people only leave the bank the boat is on\n");
    for v in [lm, lc] {
        let _ = writeln!(s, "boat eq 1 <= ({v} - next {v}) le 0;");
    }
    for v in [lm, lc] {
        let _ = writeln!(s, "boat eq 0 <= ({v} - next {v}) ge 0;");
    }
    s.push_str("next boat == if succ then boat else if boat eq 1 then 0 else 1;\n\n");

    let _ = writeln!(s, "succ == {rm} eq {n} and {rc} eq {n};");
    let _ = writeln!(s, "succ <= (next {lm}) eq {lm};");
    let _ = writeln!(s, "succ <= (next {lc}) eq {lc};\n");
    s.push_str(&variant.goal_constraint("succ"));
    ModelSource::inline(s)
}

/// A cell `(x, y)` with both coordinates in `1..=n`.
pub type Cell = (u32, u32);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridParams {
    pub n: u32,
    /// Probability of each directed edge between adjacent cells.
    pub p: f64,
    pub seed: u64,
    pub start: Cell,
    pub end: Cell,
    pub variant: Variant,
}

impl GridParams {
    /// Start in the corner `(1, 1)`, goal in the opposite corner.
    pub fn corners(n: u32, p: f64, seed: u64, variant: Variant) -> Self {
        GridParams { n, p, seed, start: (1, 1), end: (n, n), variant }
    }
}

const DIRECTIONS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Directed edges of the sampled grid, `(from, to)`. Source cells are
/// visited with `x` major, `y` minor, and for each the neighbors at
/// `x-1, x+1, y-1, y+1` in that order; every existing neighbor draws one
/// uniform number and the edge is kept when it is below `p`.
pub fn grid_edges(n: u32, p: f64, seed: u64) -> Vec<(Cell, Cell)> {
    let mut rng = SplitMix64::new(seed);
    let mut edges = Vec::new();
    for x in 1..=n {
        for y in 1..=n {
            for (dx, dy) in DIRECTIONS {
                let (tx, ty) = (x as i64 + dx, y as i64 + dy);
                if tx < 1 || ty < 1 || tx > n as i64 || ty > n as i64 {
                    continue;
                }
                if rng.next_f64() < p {
                    edges.push(((x, y), (tx as u32, ty as u32)));
                }
            }
        }
    }
    edges
}

/// Path planning on a random directed grid graph. A step either stays put
/// or follows an edge; `goal` latches once the end cell is visited, and the
/// path stops there.
pub fn gen_grid(params: &GridParams) -> ModelSource {
    let GridParams { n, p, seed, start, end, variant } = *params;
    assert!(n >= 1, "need n >= 1");
    assert!((0.0..=1.0).contains(&p), "edge probability outside [0, 1]");
    for (x, y) in [start, end] {
        assert!((1..=n).contains(&x) && (1..=n).contains(&y), "cell outside the grid");
    }
    let edges = grid_edges(n, p, seed);
    let mut s = String::new();
    let _ = writeln!(s, "// grid path planning, n = {n}, p = {p}, seed = {seed}");
    let _ = writeln!(s, "var x, y with alphabet [1..{n}];");
    s.push_str("var goal with alphabet [0..1];\n\n");
    let _ = writeln!(s, "first x == {};", start.0);
    let _ = writeln!(s, "first y == {};\n", start.1);
    for i in 1..=n {
        for j in 1..=n {
            let mut from = vec![format!("(x eq {i} and y eq {j})")];
            for &((fi, fj), to) in &edges {
                if to == (i, j) {
                    from.push(format!("(x eq {fi} and y eq {fj})"));
                }
            }
            let _ = writeln!(
                s,
                "((next x eq {i}) and (next y eq {j})) -> ({});",
                from.join(" or ")
            );
        }
    }
    let _ = writeln!(s, "\ngoal == (x eq {} and y eq {}) or (0 fby goal);", end.0, end.1);
    s.push_str("goal eq 1 -> ((x eq next x) and (y eq next y));\n");
    s.push_str(&variant.goal_constraint("(goal eq 1)"));
    ModelSource::inline(s)
}

/// Small random model: one or two variables over `[0..1]` or `[0..2]` and
/// one to three constraints drawn from pointwise, `next`, `fby`, `until`,
/// `@` and `first` templates. Division is never generated.
pub fn gen_random(seed: u64) -> StCsp {
    let mut g = RandomModel { rng: SplitMix64::new(seed), vars: Vec::new() };
    let mut p = StCsp::new();
    let nvars = 1 + g.rng.below(2) as usize;
    for (k, name) in ["x", "y"].into_iter().take(nvars).enumerate() {
        let hi = 1 + g.rng.below(2) as i64;
        let v = p.add_var(name, Alphabet::new(0, hi).unwrap());
        debug_assert_eq!(v.index(), k);
        g.vars.push((v, hi));
    }
    let ncons = 1 + g.rng.below(3);
    for _ in 0..ncons {
        let c = g.constraint();
        p.add(c);
    }
    p
}

struct RandomModel {
    rng: SplitMix64,
    vars: Vec<(VarId, i64)>,
}

impl RandomModel {
    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        xs[self.rng.below(xs.len() as u64) as usize]
    }

    fn var(&mut self) -> (VarId, i64) {
        let vs = self.vars.clone();
        self.pick(&vs)
    }

    fn small_const(&mut self) -> Expr {
        Expr::Const(self.rng.below(3) as i64)
    }

    fn atom(&mut self) -> Expr {
        if self.rng.below(3) == 0 {
            self.small_const()
        } else {
            Expr::Var(self.var().0)
        }
    }

    fn expr(&mut self, depth: u32) -> Expr {
        if depth == 0 || self.rng.below(2) == 0 {
            return self.atom();
        }
        let d = depth - 1;
        match self.rng.below(7) {
            0 => Expr::bin(BinOp::Add, self.expr(d), self.expr(d)),
            1 => Expr::bin(BinOp::Sub, self.expr(d), self.expr(d)),
            2 => {
                let op = self.pick(&[BinOp::Eq, BinOp::Lt, BinOp::Ge, BinOp::Ne]);
                Expr::bin(op, self.expr(d), self.expr(d))
            }
            3 => Expr::unary(UnOp::Abs, Expr::bin(BinOp::Sub, self.expr(d), self.expr(d))),
            4 => Expr::ite(self.expr(d), self.expr(d), self.expr(d)),
            5 => {
                let op = self.pick(&[BinOp::And, BinOp::Or]);
                Expr::bin(op, self.expr(d), self.expr(d))
            }
            _ => Expr::unary(UnOp::Not, self.expr(d)),
        }
    }

    fn relop(&mut self) -> RelOp {
        self.pick(&[RelOp::Eq, RelOp::Le, RelOp::Ge, RelOp::Ne, RelOp::Lt])
    }

    /// Condition for an until side.
    fn cond(&mut self) -> Expr {
        let (v, hi) = self.var();
        match self.rng.below(5) {
            0 => Expr::Const(1),
            1 => Expr::Var(v),
            2 => Expr::bin(BinOp::Eq, Expr::Var(v), Expr::Const(self.rng.below(hi as u64 + 1) as i64)),
            3 => Expr::bin(BinOp::Ge, Expr::next(Expr::Var(v)), self.atom()),
            _ => Expr::bin(BinOp::Ne, Expr::Var(v), self.atom()),
        }
    }

    fn constraint(&mut self) -> Constraint {
        match self.rng.below(6) {
            0 => {
                if self.rng.below(4) == 0 {
                    Constraint::Implies(self.expr(2), self.expr(2))
                } else {
                    let op = self.relop();
                    Constraint::Rel(self.expr(2), op, self.expr(2))
                }
            }
            1 => {
                let (v, _) = self.var();
                let lhs = if self.rng.below(3) == 0 {
                    Expr::next(self.expr(1))
                } else {
                    Expr::next(Expr::Var(v))
                };
                let op = self.relop();
                Constraint::Rel(lhs, op, self.expr(1))
            }
            2 => {
                let (v, hi) = self.var();
                let head = Expr::Const(self.rng.below(hi as u64 + 1) as i64);
                let op = self.pick(&[RelOp::Eq, RelOp::Le, RelOp::Ge]);
                Constraint::Rel(Expr::Var(v), op, Expr::fby(head, self.expr(1)))
            }
            3 => Constraint::Until(self.cond(), self.cond()),
            4 => {
                let (v, _) = self.var();
                let t = 1 + self.rng.below(3) as u32;
                let op = self.pick(&[RelOp::Eq, RelOp::Le, RelOp::Ge]);
                Constraint::Rel(Expr::at(Expr::Var(v), t), op, self.atom())
            }
            _ => {
                let (v, hi) = self.var();
                let k = self.rng.below(hi as u64 + 1) as i64;
                Constraint::eq(Expr::first(Expr::Var(v)), Expr::Const(k))
            }
        }
    }
}

/// Source text of [`gen_random`].
pub fn gen_random_source(seed: u64) -> ModelSource {
    unparse(&gen_random(seed))
}
