//! Brute-force oracles and random instance generators shared by the
//! integration tests. Everything here is deliberately independent of the
//! search and compilation code under test: plans are enumerated by trying
//! action sequences, optimal costs come from explicit Dijkstra over the
//! state graph, and subsequence matching tries every strictly increasing
//! index map.

#![allow(dead_code)]

use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use planrec::cost::Cost;
use planrec::library::{validate_library, LibraryNode, NodeKind, PlanLibrary};
use planrec::obs::{ObsToken, ObservationSequence};
use planrec::strips::{Action, ProblemBuilder, State, StripsProblem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Exhaustive observation matching

/// Tries every strictly increasing map from observation indices into plan
/// indices; exponential, used only to cross-check the greedy matcher.
pub fn satisfies_exhaustive(plan: &[String], obs: &ObservationSequence) -> bool {
    fn rec(plan: &[String], toks: &[ObsToken], from: usize) -> bool {
        let Some(tok) = toks.first() else { return true };
        (from..plan.len()).any(|i| tok.matches(&plan[i]) && rec(plan, &toks[1..], i + 1))
    }
    rec(plan, &obs.tokens, 0)
}

// ---------------------------------------------------------------------------
// Explicit state-space search

fn apply_unchecked(_p: &StripsProblem, s: &State, a: &Action) -> Option<State> {
    if !s.contains_all(&a.pre) || !s.disjoint_from(&a.pre_neg) {
        return None;
    }
    let mut t = s.clone();
    for &f in &a.del {
        t.remove(f);
    }
    for &f in &a.add {
        t.insert(f);
    }
    Some(t)
}

fn goal_reached(p: &StripsProblem, s: &State) -> bool {
    p.goal.as_ref().is_some_and(|g| s.contains_all(g))
}

/// Optimal plan cost by Dijkstra over the explicit state graph. `None`
/// means the goal is unreachable.
pub fn dijkstra_optimal_cost(p: &StripsProblem) -> Option<Cost> {
    let init = p.initial_state();
    let mut dist: HashMap<State, Cost> = HashMap::new();
    let mut stored: Vec<State> = vec![init.clone()];
    let mut heap: BinaryHeap<std::cmp::Reverse<(Cost, usize)>> = BinaryHeap::new();
    dist.insert(init, Cost::ZERO);
    heap.push(std::cmp::Reverse((Cost::ZERO, 0)));
    while let Some(std::cmp::Reverse((d, idx))) = heap.pop() {
        let s = stored[idx].clone();
        if dist.get(&s) != Some(&d) {
            continue;
        }
        if goal_reached(p, &s) {
            return Some(d);
        }
        for a in &p.actions {
            if let Some(t) = apply_unchecked(p, &s, a) {
                let nd = d + a.cost;
                if dist.get(&t).is_none_or(|&old| nd < old) {
                    dist.insert(t.clone(), nd);
                    stored.push(t);
                    heap.push(std::cmp::Reverse((nd, stored.len() - 1)));
                }
            }
        }
    }
    None
}

/// All goal-achieving action sequences with length at most `max_len`,
/// enumerated by depth-first search over sequences.
pub fn enumerate_plans(p: &StripsProblem, max_len: usize) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    let mut prefix = Vec::new();
    fn rec(
        p: &StripsProblem,
        s: &State,
        prefix: &mut Vec<String>,
        max_len: usize,
        out: &mut BTreeSet<Vec<String>>,
    ) {
        if goal_reached(p, s) {
            out.insert(prefix.clone());
        }
        if prefix.len() == max_len {
            return;
        }
        for a in &p.actions {
            if let Some(t) = apply_unchecked(p, s, a) {
                prefix.push(a.name.clone());
                rec(p, &t, prefix, max_len, out);
                prefix.pop();
            }
        }
    }
    rec(p, &p.initial_state(), &mut prefix, max_len, &mut out);
    out
}

/// All cost-optimal plans, assuming strictly positive action costs (so
/// optimal plans have bounded length). Returns the empty set when the goal
/// is unreachable.
pub fn enumerate_optimal_plans(p: &StripsProblem) -> BTreeSet<Vec<String>> {
    let Some(best) = dijkstra_optimal_cost(p) else {
        return BTreeSet::new();
    };
    let min_step = p
        .actions
        .iter()
        .map(|a| a.cost)
        .filter(|c| !c.is_zero())
        .min()
        .unwrap_or(Cost::ONE);
    let mut out = BTreeSet::new();
    let mut prefix = Vec::new();
    fn rec(
        p: &StripsProblem,
        s: &State,
        spent: Cost,
        best: Cost,
        min_step: Cost,
        prefix: &mut Vec<String>,
        out: &mut BTreeSet<Vec<String>>,
    ) {
        if spent == best && goal_reached(p, s) {
            out.insert(prefix.clone());
        }
        for a in &p.actions {
            let after = spent + a.cost;
            if after > best || (a.cost.is_zero() && prefix.len() > 64) {
                continue;
            }
            if let Some(t) = apply_unchecked(p, s, a) {
                prefix.push(a.name.clone());
                rec(p, &t, after, best, min_step, prefix, out);
                prefix.pop();
            }
        }
    }
    rec(
        p,
        &p.initial_state(),
        Cost::ZERO,
        best,
        min_step,
        &mut prefix,
        &mut out,
    );
    out
}

/// The set of terminal strings (through `emitters`) of goal-achieving plans
/// whose yield is at most `max_yield` long. Explores the product graph of
/// states and emitted strings with memoized pairs, so cyclic zero-cost
/// domains terminate.
pub fn enumerate_yields(
    p: &StripsProblem,
    emitters: &HashMap<String, String>,
    max_yield: usize,
) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    let mut seen: HashSet<(State, Vec<String>)> = HashSet::new();
    let mut stack = vec![(p.initial_state(), Vec::<String>::new())];
    while let Some((s, y)) = stack.pop() {
        if !seen.insert((s.clone(), y.clone())) {
            continue;
        }
        if goal_reached(p, &s) {
            out.insert(y.clone());
        }
        for a in &p.actions {
            if let Some(t) = apply_unchecked(p, &s, a) {
                let mut ny = y.clone();
                if let Some(sym) = emitters.get(&a.name) {
                    if ny.len() == max_yield {
                        continue;
                    }
                    ny.push(sym.clone());
                }
                stack.push((t, ny));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Random instance generators

/// A random STRIPS problem with up to `max_fluents` fluents and
/// `max_actions` unit-cost actions; the goal is reachable roughly half of
/// the time.
pub fn random_problem(rng: &mut ChaCha8Rng, max_fluents: usize, max_actions: usize) -> StripsProblem {
    let nf = rng.gen_range(2..=max_fluents);
    let na = rng.gen_range(2..=max_actions);
    let mut b = ProblemBuilder::new();
    let fluents: Vec<_> = (0..nf).map(|i| b.fluent(&format!("f{i}"))).collect();
    let pick = |rng: &mut ChaCha8Rng, n: usize| -> Vec<u32> {
        let mut v: Vec<u32> = fluents.clone();
        v.shuffle(rng);
        v.truncate(n);
        v.sort_unstable();
        v
    };
    for i in 0..na {
        let n_pre = rng.gen_range(0..=2.min(nf));
        let pre = pick(rng, n_pre);
        let pre_neg = if rng.gen_bool(0.3) {
            pick(rng, 1)
                .into_iter()
                .filter(|f| !pre.contains(f))
                .collect()
        } else {
            Vec::new()
        };
        let n_add = rng.gen_range(1..=2.min(nf));
        let add = pick(rng, n_add);
        let n_del = rng.gen_range(0..=1);
        let del = pick(rng, n_del)
            .into_iter()
            .filter(|f| !add.contains(f))
            .collect();
        b.add_action(Action {
            name: format!("a{i}"),
            pre,
            pre_neg,
            add,
            del,
            cost: Cost::ONE,
        });
    }
    let n_init = rng.gen_range(0..=nf / 2);
    b.set_init(pick(rng, n_init));
    let n_goal = rng.gen_range(1..=2.min(nf));
    let goal = pick(rng, n_goal);
    b.set_goal(goal);
    b.finish()
}

/// A random observation sequence over the problem's action names.
pub fn random_observations(
    rng: &mut ChaCha8Rng,
    p: &StripsProblem,
    max_len: usize,
) -> ObservationSequence {
    let len = rng.gen_range(0..=max_len);
    let names: Vec<String> = (0..len)
        .map(|_| p.actions.choose(rng).unwrap().name.clone())
        .collect();
    ObservationSequence::from_actions(names)
}

/// A random well-formed library with at most `max_nodes` nodes. Mixes
/// acyclic and cyclic shapes and sprinkles partial orders over AND
/// children. Always validates.
pub fn random_library(rng: &mut ChaCha8Rng, max_nodes: usize) -> PlanLibrary {
    loop {
        let lib = try_random_library(rng, max_nodes);
        if lib.nodes.len() <= max_nodes && validate_library(&lib).is_empty() {
            return lib;
        }
    }
}

fn try_random_library(rng: &mut ChaCha8Rng, _max_nodes: usize) -> PlanLibrary {
    let n_terminals = rng.gen_range(1..=3usize);
    let terminals: Vec<String> = (0..n_terminals).map(|i| format!("t{i}")).collect();
    let n_ors = rng.gen_range(1..=3usize);
    let or_ids: Vec<String> = (0..n_ors).map(|i| format!("or{i}")).collect();

    let mut nodes: Vec<LibraryNode> = terminals
        .iter()
        .map(|t| LibraryNode::leaf(t, t))
        .collect();
    let mut and_count = 0usize;
    let mut or_children: Vec<Vec<String>> = vec![Vec::new(); n_ors];

    for (oi, _) in or_ids.iter().enumerate() {
        let n_alts = rng.gen_range(1..=2usize);
        for _ in 0..n_alts {
            // Alternative: either a direct leaf child or an AND method.
            if rng.gen_bool(0.3) {
                let leaf = terminals.choose(rng).unwrap().clone();
                if !or_children[oi].contains(&leaf) {
                    or_children[oi].push(leaf);
                }
                continue;
            }
            let and_id = format!("m{and_count}");
            and_count += 1;
            let n_children = rng.gen_range(1..=3usize);
            let mut children: Vec<String> = Vec::new();
            for _ in 0..n_children {
                // AND children are leaves or OR tasks; allowing any OR id
                // (including ancestors) makes some libraries cyclic.
                let child = if rng.gen_bool(0.5) {
                    terminals.choose(rng).unwrap().clone()
                } else {
                    or_ids.choose(rng).unwrap().clone()
                };
                if !children.contains(&child) {
                    children.push(child);
                }
            }
            let mut order = Vec::new();
            for pair in children.windows(2) {
                if rng.gen_bool(0.6) {
                    order.push((pair[0].clone(), pair[1].clone()));
                }
            }
            nodes.push(LibraryNode {
                id: and_id.clone(),
                kind: NodeKind::And,
                children,
                order,
                symbol: None,
            });
            or_children[oi].push(and_id);
        }
    }
    for (oi, id) in or_ids.iter().enumerate() {
        nodes.push(LibraryNode {
            id: id.clone(),
            kind: NodeKind::Or,
            children: or_children[oi].clone(),
            order: Vec::new(),
            symbol: None,
        });
    }
    PlanLibrary {
        root: "or0".into(),
        nodes,
    }
}

/// Subsequence test used by the library-mode recognition oracle.
pub fn is_subsequence(needle: &[String], haystack: &[String]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}
