//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use stcsp::benchgen::Cell;
use stcsp::{Assignment, BuchiAutomaton, StreamPrefix, VarId};

/// Fewest crossings for missionaries and cannibals, by breadth-first search
/// over (missionaries left, cannibals left, boat on the right).
pub fn mc_bfs(n: i64, b: i64) -> Option<usize> {
    let safe = |m: i64, c: i64| (m == 0 || c <= m) && (n - m == 0 || n - c <= n - m);
    let start = (n, n, false);
    let mut dist = HashMap::from([(start, 0usize)]);
    let mut queue = VecDeque::from([start]);
    while let Some((m, c, right)) = queue.pop_front() {
        let d = dist[&(m, c, right)];
        if (m, c) == (0, 0) {
            return Some(d);
        }
        for dm in 0..=b {
            for dc in 0..=b - dm {
                if dm + dc == 0 {
                    continue;
                }
                let (nm, nc) = if right { (m + dm, c + dc) } else { (m - dm, c - dc) };
                if !(0..=n).contains(&nm) || !(0..=n).contains(&nc) || !safe(nm, nc) {
                    continue;
                }
                let s = (nm, nc, !right);
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(s) {
                    e.insert(d + 1);
                    queue.push_back(s);
                }
            }
        }
    }
    None
}

/// Number of (m, c, boat) configurations reachable from the start.
pub fn mc_reachable(n: i64, b: i64) -> usize {
    let safe = |m: i64, c: i64| (m == 0 || c <= m) && (n - m == 0 || n - c <= n - m);
    let start = (n, n, false);
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some((m, c, right)) = queue.pop_front() {
        if (m, c) == (0, 0) {
            continue;
        }
        for dm in 0..=b {
            for dc in 0..=b - dm {
                if dm + dc == 0 {
                    continue;
                }
                let (nm, nc) = if right { (m + dm, c + dc) } else { (m - dm, c - dc) };
                if (0..=n).contains(&nm) && (0..=n).contains(&nc) && safe(nm, nc) {
                    let s = (nm, nc, !right);
                    if seen.insert(s) {
                        queue.push_back(s);
                    }
                }
            }
        }
    }
    seen.len()
}

/// Shortest path length on a directed grid graph.
pub fn grid_bfs(edges: &[(Cell, Cell)], start: Cell, end: Cell) -> Option<usize> {
    let mut dist = HashMap::from([(start, 0usize)]);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        if u == end {
            return Some(dist[&u]);
        }
        for &(a, b) in edges {
            if a == u && !dist.contains_key(&b) {
                dist.insert(b, dist[&u] + 1);
                queue.push_back(b);
            }
        }
    }
    None
}

/// States with an accepting run: greatest fixpoint over Z of the states
/// that can reach, in one or more steps, an accepting state in Z.
pub fn live_states(a: &BuchiAutomaton) -> Vec<bool> {
    let n = a.num_states();
    let mut z = vec![true; n];
    loop {
        // y: states with a nonempty path to an accepting state of z
        let mut y = vec![false; n];
        loop {
            let mut changed = false;
            for s in 0..n {
                if y[s] {
                    continue;
                }
                let hit = a.edges[s]
                    .iter()
                    .any(|&(_, t)| (a.accepting[t as usize] && z[t as usize]) || y[t as usize]);
                if hit {
                    y[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let nz: Vec<bool> = (0..n).map(|s| z[s] && y[s]).collect();
        if nz == z {
            // states that can reach the fixpoint set
            let mut live: Vec<bool> = (0..n).map(|s| z[s]).collect();
            loop {
                let mut changed = false;
                for s in 0..n {
                    if !live[s] && a.edges[s].iter().any(|&(_, t)| live[t as usize]) {
                        live[s] = true;
                        changed = true;
                    }
                }
                if !changed {
                    return live;
                }
            }
        }
        z = nz;
    }
}

/// Label sequences of length `len` of runs that stay within live states.
pub fn live_prefixes(a: &BuchiAutomaton, len: usize, project: Option<&[VarId]>) -> BTreeSet<StreamPrefix> {
    let live = live_states(a);
    let mut out = BTreeSet::new();
    let Some(init) = a.initial else { return out };
    if !live[init as usize] {
        return out;
    }
    let all: Vec<VarId> = (0..a.vars.len() as u32).map(VarId).collect();
    let vars = project.unwrap_or(&all);
    let mut level: BTreeSet<(u32, Vec<Assignment>)> = BTreeSet::from([(init, Vec::new())]);
    for _ in 0..len {
        let mut next = BTreeSet::new();
        for (s, steps) in &level {
            for &(l, t) in &a.edges[*s as usize] {
                if live[t as usize] {
                    let mut steps = steps.clone();
                    steps.push(Assignment(vars.iter().map(|v| a.labels.value(l, v.index())).collect()));
                    next.insert((t, steps));
                }
            }
        }
        level = next;
    }
    out.extend(level.into_iter().map(|(_, s)| StreamPrefix::new(s)));
    out
}

pub fn manhattan(a: Cell, b: Cell) -> usize {
    (a.0.abs_diff(b.0) + a.1.abs_diff(b.1)) as usize
}
