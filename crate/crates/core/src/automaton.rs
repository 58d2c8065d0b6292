//! Deterministic Büchi automata over instantaneous assignments.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Alphabet, Assignment, StreamPrefix, VarDecl, VarId, VarOrigin};

pub type StateId = u32;

/// Transition labels packed into one arena. Values are stored as offsets
/// from the variable's lower bound in a byte when every alphabet has at most
/// 256 values, which keeps large automata compact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labels {
    width: usize,
    los: Vec<i64>,
    data: LabelData,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum LabelData {
    Small(Vec<u8>),
    Wide(Vec<i64>),
}

impl Labels {
    pub fn new(vars: &[VarDecl]) -> Self {
        let small = vars.iter().all(|d| d.alphabet.size() <= 256);
        Labels {
            width: vars.len(),
            los: vars.iter().map(|d| d.alphabet.lo()).collect(),
            data: if small {
                LabelData::Small(Vec::new())
            } else {
                LabelData::Wide(Vec::new())
            },
        }
    }

    pub fn len(&self) -> usize {
        if self.width == 0 {
            return 0;
        }
        match &self.data {
            LabelData::Small(d) => d.len() / self.width,
            LabelData::Wide(d) => d.len() / self.width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, values: &[i64]) -> u32 {
        debug_assert_eq!(values.len(), self.width);
        let id = self.len() as u32;
        match &mut self.data {
            LabelData::Small(d) => {
                d.extend(values.iter().zip(&self.los).map(|(v, lo)| (v - lo) as u8))
            }
            LabelData::Wide(d) => d.extend_from_slice(values),
        }
        id
    }

    pub fn value(&self, label: u32, var: usize) -> i64 {
        let i = label as usize * self.width + var;
        match &self.data {
            LabelData::Small(d) => self.los[var] + d[i] as i64,
            LabelData::Wide(d) => d[i],
        }
    }

    pub fn get(&self, label: u32) -> Vec<i64> {
        (0..self.width).map(|v| self.value(label, v)).collect()
    }

    pub fn matches(&self, label: u32, values: &[i64]) -> bool {
        values.iter().enumerate().all(|(v, x)| self.value(label, v) == *x)
    }
}

/// Solution automaton. Labels carry the full variable tuple, auxiliaries
/// included; projection happens only for display and enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuchiAutomaton {
    pub vars: Vec<VarDecl>,
    /// `None` for the empty automaton.
    pub initial: Option<StateId>,
    pub accepting: Vec<bool>,
    /// Per state: `(label, target)` pairs in creation order.
    pub edges: Vec<Vec<(u32, StateId)>>,
    pub labels: Labels,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("prefix count {bound} exceeds the cap of {cap}")]
    CapExceeded { bound: u128, cap: u128 },
    #[error("no transition for label {label:?} at step {step}")]
    InvalidRun { step: usize, label: Vec<i64> },
    #[error("label {label:?} at step {step} matches several transitions")]
    AmbiguousLabel { step: usize, label: Vec<i64> },
    #[error("empty lasso cycle")]
    EmptyCycle,
    #[error("malformed automaton: {0}")]
    Malformed(String),
}

/// A finite run: `visited.len() == labels.len() + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub start: StateId,
    pub labels: Vec<Assignment>,
    pub visited: Vec<StateId>,
}

#[derive(Serialize, Deserialize)]
struct JsonVar {
    name: String,
    lo: i64,
    hi: i64,
}

#[derive(Serialize, Deserialize)]
struct JsonTransition {
    from: StateId,
    label: Vec<i64>,
    to: StateId,
}

#[derive(Serialize, Deserialize)]
struct JsonAutomaton {
    vars: Vec<JsonVar>,
    initial: Option<StateId>,
    accepting: Vec<StateId>,
    transitions: Vec<JsonTransition>,
}

impl BuchiAutomaton {
    pub fn empty(vars: Vec<VarDecl>) -> Self {
        BuchiAutomaton {
            labels: Labels::new(&vars),
            vars,
            initial: None,
            accepting: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_none()
    }

    pub fn add_state(&mut self, accepting: bool) -> StateId {
        self.accepting.push(accepting);
        self.edges.push(Vec::new());
        (self.accepting.len() - 1) as StateId
    }

    pub fn add_transition(&mut self, from: StateId, label: &[i64], to: StateId) {
        let l = self.labels.push(label);
        self.edges[from as usize].push((l, to));
    }

    pub fn accepting_count(&self) -> usize {
        self.accepting.iter().filter(|a| **a).count()
    }

    pub fn user_vars(&self) -> Vec<VarId> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, d)| d.origin == VarOrigin::User)
            .map(|(i, _)| VarId(i as u32))
            .collect()
    }

    pub fn label(&self, l: u32) -> Assignment {
        Assignment(self.labels.get(l))
    }

    /// Whether no state has two outgoing transitions with the same label.
    pub fn is_deterministic(&self) -> bool {
        self.edges.iter().all(|es| {
            let mut seen = BTreeSet::new();
            es.iter().all(|(l, _)| seen.insert(self.labels.get(*l)))
        })
    }

    /// States lying on a cycle: members of a nontrivial strongly connected
    /// component, or carrying a self-loop.
    fn on_cycle(&self) -> Vec<bool> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.num_states(), self.num_transitions());
        let nodes: Vec<_> = (0..self.num_states()).map(|_| g.add_node(())).collect();
        for (s, es) in self.edges.iter().enumerate() {
            for &(_, t) in es {
                g.add_edge(nodes[s], nodes[t as usize], ());
            }
        }
        let mut out = vec![false; self.num_states()];
        for scc in tarjan_scc(&g) {
            if scc.len() > 1 {
                for n in scc {
                    out[n.index()] = true;
                }
            }
        }
        for (s, es) in self.edges.iter().enumerate() {
            if es.iter().any(|&(_, t)| t as usize == s) {
                out[s] = true;
            }
        }
        out
    }

    /// Removes every state that cannot reach an accepting state lying on a
    /// cycle, then every state unreachable from the initial state. Surviving
    /// states keep their relative order. The result accepts the same
    /// language, and every finite run of it extends to an accepting run.
    pub fn prune(&self) -> BuchiAutomaton {
        let n = self.num_states();
        let Some(init) = self.initial else {
            return BuchiAutomaton::empty(self.vars.clone());
        };
        let cyc = self.on_cycle();
        let mut rev: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for (s, es) in self.edges.iter().enumerate() {
            for &(_, t) in es {
                rev[t as usize].push(s as StateId);
            }
        }
        let mut live = vec![false; n];
        let mut queue: VecDeque<StateId> = VecDeque::new();
        for s in 0..n {
            if self.accepting[s] && cyc[s] {
                live[s] = true;
                queue.push_back(s as StateId);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &p in &rev[s as usize] {
                if !live[p as usize] {
                    live[p as usize] = true;
                    queue.push_back(p);
                }
            }
        }
        if !live[init as usize] {
            return BuchiAutomaton::empty(self.vars.clone());
        }
        let mut reach = vec![false; n];
        reach[init as usize] = true;
        let mut queue = VecDeque::from([init]);
        while let Some(s) = queue.pop_front() {
            for &(_, t) in &self.edges[s as usize] {
                if live[t as usize] && !reach[t as usize] {
                    reach[t as usize] = true;
                    queue.push_back(t);
                }
            }
        }
        let mut map = vec![u32::MAX; n];
        let mut out = BuchiAutomaton::empty(self.vars.clone());
        for s in 0..n {
            if reach[s] {
                map[s] = out.add_state(self.accepting[s]);
            }
        }
        for s in 0..n {
            if !reach[s] {
                continue;
            }
            for &(l, t) in &self.edges[s] {
                if reach[t as usize] {
                    let label = self.labels.get(l);
                    out.add_transition(map[s], &label, map[t as usize]);
                }
            }
        }
        out.initial = Some(map[init as usize]);
        out
    }

    /// Number of length-`len` paths from the initial state (saturating).
    pub fn count_paths(&self, len: usize) -> u128 {
        let Some(init) = self.initial else { return 0 };
        let n = self.num_states();
        let mut ways = vec![1u128; n];
        for _ in 0..len {
            ways = (0..n)
                .map(|s| {
                    self.edges[s]
                        .iter()
                        .fold(0u128, |acc, &(_, t)| acc.saturating_add(ways[t as usize]))
                })
                .collect();
        }
        ways[init as usize]
    }

    /// Label sequences of all length-`len` runs from the initial state,
    /// projected to `project` (all variables when `None`).
    pub fn enumerate_prefixes(
        &self,
        len: usize,
        project: Option<&[VarId]>,
        cap: u128,
    ) -> Result<BTreeSet<StreamPrefix>, AutomatonError> {
        let mut out = BTreeSet::new();
        let Some(init) = self.initial else {
            return Ok(out);
        };
        let bound = self.count_paths(len);
        if bound > cap {
            return Err(AutomatonError::CapExceeded { bound, cap });
        }
        let all: Vec<VarId> = (0..self.vars.len() as u32).map(VarId).collect();
        let vars = project.unwrap_or(&all);
        // Distinct projected prefixes reachable at each state, level by
        // level; merging equal (state, prefix) pairs keeps this small when
        // projection hides auxiliaries.
        let mut frontier: BTreeSet<(StateId, Vec<Assignment>)> = BTreeSet::new();
        frontier.insert((init, Vec::new()));
        for _ in 0..len {
            let mut next = BTreeSet::new();
            for (s, steps) in &frontier {
                for &(l, t) in &self.edges[*s as usize] {
                    let mut steps = steps.clone();
                    steps.push(Assignment(
                        vars.iter().map(|v| self.labels.value(l, v.index())).collect(),
                    ));
                    next.insert((t, steps));
                }
            }
            frontier = next;
        }
        out.extend(frontier.into_iter().map(|(_, steps)| StreamPrefix::new(steps)));
        Ok(out)
    }

    /// A projected prefix that labels a run of exactly one of `self` and
    /// `other`, looking at prefixes up to `depth` (all when `None`); `None`
    /// when the projected prefix languages agree. Projections are given per
    /// automaton and must have the same length.
    pub fn prefix_difference(
        &self,
        other: &BuchiAutomaton,
        project: &[VarId],
        other_project: &[VarId],
        depth: Option<usize>,
    ) -> Option<StreamPrefix> {
        assert_eq!(project.len(), other_project.len(), "projections differ in width");
        type Set = BTreeSet<StateId>;
        let (a0, b0) = match (self.initial, other.initial) {
            (None, None) => return None,
            (Some(a), Some(b)) => (Set::from([a]), Set::from([b])),
            _ => return Some(StreamPrefix::default()),
        };
        let moves = |aut: &BuchiAutomaton, set: &Set, vars: &[VarId]| {
            let mut m: HashMap<Vec<i64>, Set> = HashMap::new();
            for &s in set {
                for &(l, t) in &aut.edges[s as usize] {
                    let key = vars.iter().map(|v| aut.labels.value(l, v.index())).collect();
                    m.entry(key).or_default().insert(t);
                }
            }
            m
        };
        let mut seen: HashMap<(Set, Set), ()> = HashMap::new();
        seen.insert((a0.clone(), b0.clone()), ());
        let mut queue = VecDeque::from([(a0, b0, Vec::<Assignment>::new())]);
        while let Some((a, b, path)) = queue.pop_front() {
            if depth.is_some_and(|d| path.len() >= d) {
                continue;
            }
            let (ma, mb) = (moves(self, &a, project), moves(other, &b, other_project));
            let mut keys: BTreeSet<&Vec<i64>> = ma.keys().collect();
            keys.extend(mb.keys());
            for k in keys {
                let mut p = path.clone();
                p.push(Assignment(k.clone()));
                match (ma.get(k), mb.get(k)) {
                    (Some(x), Some(y)) => {
                        let pair = (x.clone(), y.clone());
                        if seen.insert(pair, ()).is_none() {
                            queue.push_back((x.clone(), y.clone(), p));
                        }
                    }
                    _ => return Some(StreamPrefix::new(p)),
                }
            }
        }
        None
    }

    fn step(
        &self,
        s: StateId,
        label: &[i64],
        vars: Option<&[VarId]>,
        step: usize,
    ) -> Result<StateId, AutomatonError> {
        let mut found = None;
        for &(l, t) in &self.edges[s as usize] {
            let hit = match vars {
                None => self.labels.matches(l, label),
                Some(vs) => vs
                    .iter()
                    .zip(label)
                    .all(|(v, x)| self.labels.value(l, v.index()) == *x),
            };
            if hit {
                if found.is_some() {
                    return Err(AutomatonError::AmbiguousLabel {
                        step,
                        label: label.to_vec(),
                    });
                }
                found = Some(t);
                if vars.is_none() {
                    break;
                }
            }
        }
        found.ok_or(AutomatonError::InvalidRun {
            step,
            label: label.to_vec(),
        })
    }

    /// Runs `labels` from the initial state.
    pub fn run(&self, labels: &[Assignment]) -> Result<Run, AutomatonError> {
        let start = self.initial.ok_or(AutomatonError::InvalidRun {
            step: 0,
            label: labels.first().map(|a| a.0.clone()).unwrap_or_default(),
        })?;
        let mut visited = vec![start];
        let mut s = start;
        for (i, a) in labels.iter().enumerate() {
            s = self.step(s, &a.0, None, i)?;
            visited.push(s);
        }
        Ok(Run {
            start,
            labels: labels.to_vec(),
            visited,
        })
    }

    /// Whether `stem` followed by `cycle` repeated forever is accepted.
    /// Labels are full assignments.
    pub fn accepts_lasso(
        &self,
        stem: &[Assignment],
        cycle: &[Assignment],
    ) -> Result<bool, AutomatonError> {
        self.lasso(stem, cycle, None)
    }

    /// As [`accepts_lasso`](Self::accepts_lasso), with labels giving values
    /// of `vars` only; each must match exactly one transition.
    pub fn accepts_lasso_projected(
        &self,
        stem: &[Assignment],
        cycle: &[Assignment],
        vars: &[VarId],
    ) -> Result<bool, AutomatonError> {
        self.lasso(stem, cycle, Some(vars))
    }

    fn lasso(
        &self,
        stem: &[Assignment],
        cycle: &[Assignment],
        vars: Option<&[VarId]>,
    ) -> Result<bool, AutomatonError> {
        if cycle.is_empty() {
            return Err(AutomatonError::EmptyCycle);
        }
        let mut s = self.initial.ok_or(AutomatonError::InvalidRun {
            step: 0,
            label: stem.first().or(cycle.first()).unwrap().0.clone(),
        })?;
        let mut step = 0;
        for a in stem {
            s = self.step(s, &a.0, vars, step)?;
            step += 1;
        }
        // Iterate the cycle until its start state repeats; the iterations
        // from the first occurrence on repeat forever.
        let mut starts: HashMap<StateId, usize> = HashMap::new();
        let mut hits: Vec<bool> = Vec::new();
        loop {
            if let Some(&k) = starts.get(&s) {
                return Ok(hits[k..].iter().any(|h| *h));
            }
            starts.insert(s, hits.len());
            let mut hit = false;
            for a in cycle {
                s = self.step(s, &a.0, vars, step)?;
                step += 1;
                hit |= self.accepting[s as usize];
            }
            hits.push(hit);
        }
    }

    /// Length of a shortest run from the initial state to an accepting
    /// state, or `None` when there is none.
    pub fn shortest_accepting_distance(&self) -> Option<usize> {
        let init = self.initial?;
        let mut dist = vec![usize::MAX; self.num_states()];
        dist[init as usize] = 0;
        let mut queue = VecDeque::from([init]);
        while let Some(s) = queue.pop_front() {
            if self.accepting[s as usize] {
                return Some(dist[s as usize]);
            }
            for &(_, t) in &self.edges[s as usize] {
                if dist[t as usize] == usize::MAX {
                    dist[t as usize] = dist[s as usize] + 1;
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Earliest time at which a run can have discharged every until
    /// constraint: one less than the distance to an accepting state, and 0
    /// when the initial state is accepting. Meaningful on pruned automata.
    pub fn discharge_time(&self) -> Option<usize> {
        self.shortest_accepting_distance().map(|d| d.saturating_sub(1))
    }

    /// A shortest run reaching an accepting state.
    pub fn shortest_accepting_run(&self) -> Option<Run> {
        let init = self.initial?;
        let mut parent: Vec<Option<(StateId, u32)>> = vec![None; self.num_states()];
        let mut seen = vec![false; self.num_states()];
        seen[init as usize] = true;
        let mut queue = VecDeque::from([init]);
        while let Some(s) = queue.pop_front() {
            if self.accepting[s as usize] {
                let mut labels = Vec::new();
                let mut visited = vec![s];
                let mut cur = s;
                while let Some((p, l)) = parent[cur as usize] {
                    labels.push(self.label(l));
                    visited.push(p);
                    cur = p;
                }
                labels.reverse();
                visited.reverse();
                return Some(Run {
                    start: init,
                    labels,
                    visited,
                });
            }
            for &(l, t) in &self.edges[s as usize] {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    parent[t as usize] = Some((s, l));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    fn project_label(&self, l: u32, vars: &[VarId]) -> String {
        vars.iter()
            .map(|v| format!("{}={}", self.vars[v.index()].name, self.labels.value(l, v.index())))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Graphviz rendering; accepting states are double circles and edge
    /// labels show the `project` variables (all when `None`).
    pub fn to_dot(&self, project: Option<&[VarId]>) -> String {
        let all: Vec<VarId> = (0..self.vars.len() as u32).map(VarId).collect();
        let vars = project.unwrap_or(&all);
        let mut out = String::from("digraph solution {\n  rankdir=LR;\n");
        if let Some(init) = self.initial {
            out.push_str("  start [shape=point];\n");
            let _ = writeln!(out, "  start -> s{init};");
        }
        for (s, acc) in self.accepting.iter().enumerate() {
            let shape = if *acc { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  s{s} [shape={shape}];");
        }
        for (s, es) in self.edges.iter().enumerate() {
            for &(l, t) in es {
                let _ = writeln!(out, "  s{s} -> s{t} [label=\"{}\"];", self.project_label(l, vars));
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        let j = JsonAutomaton {
            vars: self
                .vars
                .iter()
                .map(|d| JsonVar {
                    name: d.name.clone(),
                    lo: d.alphabet.lo(),
                    hi: d.alphabet.hi(),
                })
                .collect(),
            initial: self.initial,
            accepting: (0..self.num_states() as StateId)
                .filter(|s| self.accepting[*s as usize])
                .collect(),
            transitions: self
                .edges
                .iter()
                .enumerate()
                .flat_map(|(s, es)| {
                    es.iter().map(move |&(l, t)| JsonTransition {
                        from: s as StateId,
                        label: self.labels.get(l),
                        to: t,
                    })
                })
                .collect(),
        };
        serde_json::to_string_pretty(&j).expect("serializable") + "\n"
    }

    /// Reads the JSON produced by [`to_json`](Self::to_json). Variables whose
    /// names start with `_aux` are marked auxiliary.
    pub fn from_json(text: &str) -> Result<Self, AutomatonError> {
        let j: JsonAutomaton =
            serde_json::from_str(text).map_err(|e| AutomatonError::Malformed(e.to_string()))?;
        let mut aux = 0;
        let vars = j
            .vars
            .iter()
            .map(|v| {
                let alphabet = Alphabet::new(v.lo, v.hi)
                    .map_err(|e| AutomatonError::Malformed(e.to_string()))?;
                let origin = if v.name.starts_with("_aux") {
                    aux += 1;
                    VarOrigin::Aux(aux)
                } else {
                    VarOrigin::User
                };
                Ok(VarDecl {
                    name: v.name.clone(),
                    alphabet,
                    origin,
                })
            })
            .collect::<Result<Vec<_>, AutomatonError>>()?;
        let mut a = BuchiAutomaton::empty(vars);
        let n = j
            .transitions
            .iter()
            .map(|t| t.from.max(t.to) as usize + 1)
            .chain(j.accepting.iter().map(|s| *s as usize + 1))
            .chain(j.initial.map(|s| s as usize + 1))
            .max()
            .unwrap_or(0);
        for _ in 0..n {
            a.add_state(false);
        }
        for s in &j.accepting {
            a.accepting[*s as usize] = true;
        }
        for t in &j.transitions {
            if t.label.len() != a.vars.len() {
                return Err(AutomatonError::Malformed(format!(
                    "label of width {} for {} variables",
                    t.label.len(),
                    a.vars.len()
                )));
            }
            for (d, v) in a.vars.iter().zip(&t.label) {
                if !d.alphabet.contains(*v) {
                    return Err(AutomatonError::Malformed(format!(
                        "value {v} outside the alphabet of `{}`",
                        d.name
                    )));
                }
            }
            a.add_transition(t.from, &t.label, t.to);
        }
        a.initial = j.initial;
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(lo: i64, hi: i64) -> Vec<VarDecl> {
        vec![VarDecl {
            name: "x".into(),
            alphabet: Alphabet::new(lo, hi).unwrap(),
            origin: VarOrigin::User,
        }]
    }

    /// pending --0--> pending, pending --1--> done, done --0,1--> done.
    fn until_automaton() -> BuchiAutomaton {
        let mut a = BuchiAutomaton::empty(one_var(0, 1));
        let p = a.add_state(false);
        let d = a.add_state(true);
        a.add_transition(p, &[0], p);
        a.add_transition(p, &[1], d);
        a.add_transition(d, &[0], d);
        a.add_transition(d, &[1], d);
        a.initial = Some(p);
        a
    }

    fn prefixes(a: &BuchiAutomaton, len: usize) -> Vec<String> {
        a.enumerate_prefixes(len, None, 1 << 20)
            .unwrap()
            .iter()
            .map(|p| p.compact())
            .collect()
    }

    fn asg(v: i64) -> Assignment {
        Assignment(vec![v])
    }

    #[test]
    fn prune_removes_dead_end_branch() {
        let mut a = BuchiAutomaton::empty(one_var(0, 2));
        let p = a.add_state(false);
        let d = a.add_state(true);
        let dead = a.add_state(false);
        a.add_transition(p, &[0], p);
        a.add_transition(p, &[1], d);
        a.add_transition(p, &[2], dead);
        for v in 0..=2 {
            a.add_transition(d, &[v], d);
        }
        a.initial = Some(p);
        let pruned = a.prune();
        assert_eq!(pruned.num_states(), 2);
        // Accepted streams: a 1 occurs, and no 2 occurs before it.
        let extendable: Vec<String> = prefixes(&a, 5)
            .into_iter()
            .filter(|p| !p.split('1').next().unwrap().contains('2'))
            .collect();
        assert_eq!(prefixes(&pruned, 5), extendable);
        assert_eq!(pruned.prune(), pruned);
    }

    #[test]
    fn prune_keeps_fully_accepting_automaton() {
        let mut a = BuchiAutomaton::empty(one_var(0, 1));
        let s = a.add_state(true);
        a.add_transition(s, &[0], s);
        a.initial = Some(s);
        assert_eq!(a.prune(), a);
    }

    #[test]
    fn prune_without_accepting_states_is_empty() {
        let mut a = until_automaton();
        a.accepting = vec![false, false];
        assert!(a.prune().is_empty());
        assert!(prefixes(&a.prune(), 3).is_empty());
    }

    #[test]
    fn accepting_state_without_cycle_is_pruned() {
        let mut a = BuchiAutomaton::empty(one_var(0, 1));
        let s = a.add_state(false);
        let t = a.add_state(true);
        a.add_transition(s, &[0], s);
        a.add_transition(s, &[1], t);
        a.initial = Some(s);
        assert!(a.prune().is_empty());
    }

    #[test]
    fn until_prefixes_of_length_two() {
        assert_eq!(prefixes(&until_automaton(), 2), vec!["00", "01", "10", "11"]);
    }

    #[test]
    fn lasso_acceptance() {
        let a = until_automaton();
        assert_eq!(a.accepts_lasso(&[asg(1)], &[asg(0)]), Ok(true));
        assert_eq!(a.accepts_lasso(&[], &[asg(0)]), Ok(false));
        assert_eq!(a.accepts_lasso(&[asg(0)], &[asg(0), asg(1)]), Ok(true));
        assert_eq!(a.accepts_lasso(&[], &[]), Err(AutomatonError::EmptyCycle));
        assert!(matches!(
            a.accepts_lasso(&[asg(2)], &[asg(0)]),
            Err(AutomatonError::InvalidRun { step: 0, .. })
        ));
    }

    #[test]
    fn json_round_trip_and_empty() {
        let a = until_automaton();
        let j = a.to_json();
        assert_eq!(BuchiAutomaton::from_json(&j).unwrap(), a);
        let e = BuchiAutomaton::empty(one_var(0, 1));
        let j = e.to_json();
        assert!(j.contains("\"initial\": null"));
        assert!(j.contains("\"accepting\": []"));
        assert!(j.contains("\"transitions\": []"));
    }

    #[test]
    fn dot_marks_accepting_states() {
        let d = until_automaton().to_dot(None);
        assert_eq!(d.matches("doublecircle").count(), 1);
        assert!(d.contains("s0 -> s1 [label=\"x=1\"]"));
    }

    #[test]
    fn wide_labels() {
        let mut a = BuchiAutomaton::empty(one_var(-1000, 1000));
        let s = a.add_state(true);
        a.add_transition(s, &[-1000], s);
        a.add_transition(s, &[999], s);
        assert_eq!(a.label(0).0, vec![-1000]);
        assert_eq!(a.label(1).0, vec![999]);
        let mut b = BuchiAutomaton::empty(one_var(-3, 3));
        let s = b.add_state(true);
        b.add_transition(s, &[-3], s);
        assert_eq!(b.label(0).0, vec![-3]);
    }

    #[test]
    fn path_count_cap() {
        let a = until_automaton();
        assert_eq!(a.count_paths(3), 8);
        assert_eq!(
            a.enumerate_prefixes(3, None, 4),
            Err(AutomatonError::CapExceeded { bound: 8, cap: 4 })
        );
    }

    #[test]
    fn discharge_time_of_until_automaton() {
        let a = until_automaton();
        assert_eq!(a.shortest_accepting_distance(), Some(1));
        assert_eq!(a.discharge_time(), Some(0));
        let run = a.shortest_accepting_run().unwrap();
        assert_eq!(run.labels, vec![asg(1)]);
        assert_eq!(run.visited, vec![0, 1]);
    }

    #[test]
    fn prefix_difference_finds_witness() {
        let a = until_automaton();
        let x = [VarId(0)];
        assert_eq!(a.prefix_difference(&a, &x, &x, None), None);
        // same prefix language, different states: the all-accepting flower
        let mut b = BuchiAutomaton::empty(one_var(0, 1));
        let s = b.add_state(true);
        b.add_transition(s, &[0], s);
        b.add_transition(s, &[1], s);
        b.initial = Some(s);
        assert_eq!(a.prefix_difference(&b, &x, &x, None), None);
        let mut c = BuchiAutomaton::empty(one_var(0, 1));
        let s0 = c.add_state(false);
        let s1 = c.add_state(true);
        c.add_transition(s0, &[0], s1);
        c.add_transition(s1, &[0], s1);
        c.add_transition(s1, &[1], s1);
        c.initial = Some(s0);
        let w = a.prefix_difference(&c, &x, &x, None).unwrap();
        assert_eq!(w.compact(), "1");
        assert_eq!(a.prefix_difference(&c, &x, &x, Some(0)), None);
        assert_eq!(a.prefix_difference(&BuchiAutomaton::empty(one_var(0, 1)), &x, &x, None), Some(StreamPrefix::default()));
    }
}
