//! Forward state-space search: optimal A* over (cost, length), satisficing
//! greedy best-first, and FF-style enforced hill-climbing with helpful
//! actions and a complete best-first fallback.
//!
//! Zero-cost actions are fully supported: A* orders nodes by (g, h, length)
//! and duplicate detection guarantees termination on zero-cost plateaus.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cost::{Cost, ExtCost};
use crate::heuristics::HeuristicContext;
use crate::strips::{Plan, State, StripsProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    AStar,
    Gbfs,
    Ehc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicKind {
    HMax,
    HAdd,
    Ff,
}

#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub algorithm: Algorithm,
    pub heuristic: HeuristicKind,
    /// Inclusive admissible pruning threshold for A*.
    pub cost_bound: Option<Cost>,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
}

impl Default for PlannerConfig {
    fn default() -> PlannerConfig {
        PlannerConfig {
            algorithm: Algorithm::AStar,
            heuristic: HeuristicKind::HMax,
            cost_bound: None,
            node_limit: None,
            time_limit: None,
        }
    }
}

impl PlannerConfig {
    pub fn optimal() -> PlannerConfig {
        PlannerConfig::default()
    }

    pub fn satisficing() -> PlannerConfig {
        PlannerConfig {
            algorithm: Algorithm::Ehc,
            heuristic: HeuristicKind::Ff,
            ..PlannerConfig::default()
        }
    }
}

/// Which search procedure actually produced the result (EHC falls back to
/// complete best-first search, reported as `bfs`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmUsed {
    AStar,
    Ehc,
    Bfs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchStats {
    pub expanded: u64,
    pub generated: u64,
    pub time_ms: u64,
    pub algorithm: AlgorithmUsed,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub plan: Plan,
    pub cost: Cost,
    pub stats: SearchStats,
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Solved(Solution),
    Unsolvable(SearchStats),
    BoundExceeded(SearchStats),
    ResourceLimit(SearchStats),
}

impl SearchOutcome {
    pub fn stats(&self) -> &SearchStats {
        match self {
            SearchOutcome::Solved(s) => &s.stats,
            SearchOutcome::Unsolvable(s)
            | SearchOutcome::BoundExceeded(s)
            | SearchOutcome::ResourceLimit(s) => s,
        }
    }

    pub fn solution(&self) -> Option<&Solution> {
        match self {
            SearchOutcome::Solved(s) => Some(s),
            _ => None,
        }
    }
}

struct Limits {
    node_limit: Option<u64>,
    deadline: Option<Instant>,
}

impl Limits {
    fn hit(&self, expanded: u64) -> bool {
        if let Some(n) = self.node_limit {
            if expanded >= n {
                return true;
            }
        }
        if let Some(d) = self.deadline {
            // Checking the clock on every expansion is cheap enough here.
            if Instant::now() >= d {
                return true;
            }
        }
        false
    }
}

/// Successor generation shared by all algorithms. The problem must be
/// negation-free.
struct Space<'p> {
    problem: &'p StripsProblem,
    ctx: HeuristicContext<'p>,
}

impl<'p> Space<'p> {
    fn new(problem: &'p StripsProblem) -> Space<'p> {
        Space {
            problem,
            ctx: HeuristicContext::new(problem),
        }
    }

    fn applicable(&self, state: &State) -> Vec<usize> {
        self.problem
            .actions
            .iter()
            .enumerate()
            .filter(|(_, a)| state.contains_all(&a.pre))
            .map(|(i, _)| i)
            .collect()
    }

    fn successor(&self, state: &State, action: usize) -> State {
        let a = &self.problem.actions[action];
        let mut next = state.clone();
        for &f in &a.del {
            next.remove(f);
        }
        for &f in &a.add {
            next.insert(f);
        }
        next
    }

    fn estimate(&self, kind: HeuristicKind, state: &State) -> ExtCost {
        match kind {
            HeuristicKind::HMax => self.ctx.h_max(state),
            HeuristicKind::HAdd => self.ctx.h_add(state),
            HeuristicKind::Ff => match self.ctx.h_ff(state).estimate {
                Some(n) => ExtCost::Finite(Cost::from_int(n as i64)),
                None => ExtCost::Infinite,
            },
        }
    }
}

/// Runs the configured search. A* returns a minimum-cost plan with ties
/// broken by fewer steps; gbfs and ehc return some valid plan or exhaust.
pub fn search(problem: &StripsProblem, config: &PlannerConfig) -> SearchOutcome {
    assert!(problem.goal.is_some(), "search needs a goal");
    let start = Instant::now();
    let limits = Limits {
        node_limit: config.node_limit,
        deadline: config.time_limit.map(|t| start + t),
    };
    let space = Space::new(problem);
    match config.algorithm {
        Algorithm::AStar => astar(&space, config, &limits, start),
        Algorithm::Gbfs => {
            best_first(&space, config.heuristic, &limits, start, AlgorithmUsed::Bfs, 0, 0)
        }
        Algorithm::Ehc => ehc(&space, &limits, start),
    }
}

/// Exact optimal cost via A*+h_max, honoring an optional inclusive bound.
pub fn optimal_cost(problem: &StripsProblem, bound: Option<Cost>) -> SearchOutcome {
    let config = PlannerConfig {
        algorithm: Algorithm::AStar,
        heuristic: HeuristicKind::HMax,
        cost_bound: bound,
        ..PlannerConfig::default()
    };
    search(problem, &config)
}

struct Arena {
    states: Vec<State>,
    parent: Vec<Option<(u32, u32)>>, // (parent node, action index)
}

impl Arena {
    fn new() -> Arena {
        Arena {
            states: Vec::new(),
            parent: Vec::new(),
        }
    }

    fn push(&mut self, state: State, parent: Option<(u32, u32)>) -> u32 {
        self.states.push(state);
        self.parent.push(parent);
        (self.states.len() - 1) as u32
    }

    fn extract_plan(&self, problem: &StripsProblem, mut node: u32) -> Plan {
        let mut steps = Vec::new();
        while let Some((p, a)) = self.parent[node as usize] {
            steps.push(problem.actions[a as usize].name.clone());
            node = p;
        }
        steps.reverse();
        Plan::new(steps)
    }
}

fn stats(
    expanded: u64,
    generated: u64,
    start: Instant,
    algorithm: AlgorithmUsed,
) -> SearchStats {
    SearchStats {
        expanded,
        generated,
        time_ms: start.elapsed().as_millis() as u64,
        algorithm,
    }
}

// Open-list key for A*: (f-cost, path length + 0, h, insertion order). The
// second component makes the order lexicographic in (cost, steps), so the
// returned optimum also has the fewest steps among minimum-cost plans; h
// then FIFO break remaining ties deterministically.
type AStarKey = (Cost, u32, Cost, u64);

fn astar(
    space: &Space<'_>,
    config: &PlannerConfig,
    limits: &Limits,
    start: Instant,
) -> SearchOutcome {
    let problem = space.problem;
    let mut arena = Arena::new();
    let mut best: HashMap<State, (Cost, u32)> = HashMap::new();
    let mut open: BinaryHeap<Reverse<(AStarKey, u32, Cost)>> = BinaryHeap::new();
    let mut expanded = 0u64;
    let mut generated = 0u64;
    let mut pruned_by_bound = false;
    let mut seq = 0u64;

    let init = problem.initial_state();
    let h0 = match space.estimate(config.heuristic, &init) {
        ExtCost::Finite(h) => h,
        ExtCost::Infinite => {
            return SearchOutcome::Unsolvable(stats(0, 0, start, AlgorithmUsed::AStar))
        }
    };
    if let Some(bound) = config.cost_bound {
        if h0 > bound {
            return SearchOutcome::BoundExceeded(stats(0, 0, start, AlgorithmUsed::AStar));
        }
    }
    best.insert(init.clone(), (Cost::ZERO, 0));
    let root = arena.push(init, None);
    open.push(Reverse(((h0, 0, h0, seq), root, Cost::ZERO)));

    while let Some(Reverse(((_f, len, _h, _seq), node, g))) = open.pop() {
        let state = arena.states[node as usize].clone();
        if best.get(&state) != Some(&(g, len)) {
            continue; // stale entry
        }
        if limits.hit(expanded) {
            return SearchOutcome::ResourceLimit(stats(
                expanded,
                generated,
                start,
                AlgorithmUsed::AStar,
            ));
        }
        if problem.goal_reached(&state) {
            let plan = arena.extract_plan(problem, node);
            return SearchOutcome::Solved(Solution {
                plan,
                cost: g,
                stats: stats(expanded, generated, start, AlgorithmUsed::AStar),
            });
        }
        expanded += 1;
        for action in space.applicable(&state) {
            let next = space.successor(&state, action);
            let g2 = g + problem.actions[action].cost;
            let len2 = len + 1;
            match best.entry(next.clone()) {
                Entry::Occupied(mut e) => {
                    let &(old_g, old_len) = e.get();
                    if (g2, len2) < (old_g, old_len) {
                        e.insert((g2, len2));
                    } else {
                        continue;
                    }
                }
                Entry::Vacant(e) => {
                    e.insert((g2, len2));
                }
            }
            let h = match space.estimate(config.heuristic, &next) {
                ExtCost::Finite(h) => h,
                ExtCost::Infinite => continue,
            };
            let f2 = g2 + h;
            if let Some(bound) = config.cost_bound {
                if f2 > bound {
                    pruned_by_bound = true;
                    continue;
                }
            }
            generated += 1;
            seq += 1;
            let id = arena.push(next, Some((node, action as u32)));
            open.push(Reverse(((f2, len2, h, seq), id, g2)));
        }
    }

    let s = stats(expanded, generated, start, AlgorithmUsed::AStar);
    if pruned_by_bound {
        SearchOutcome::BoundExceeded(s)
    } else {
        SearchOutcome::Unsolvable(s)
    }
}

/// Complete greedy best-first search ordered by (h, FIFO). Used directly for
/// gbfs and as the fallback stage of ehc; `expanded0`/`generated0` carry the
/// counts accumulated before a fallback.
fn best_first(
    space: &Space<'_>,
    heuristic: HeuristicKind,
    limits: &Limits,
    start: Instant,
    label: AlgorithmUsed,
    expanded0: u64,
    generated0: u64,
) -> SearchOutcome {
    let problem = space.problem;
    let mut arena = Arena::new();
    let mut best: HashMap<State, Cost> = HashMap::new();
    let mut open: BinaryHeap<Reverse<((Cost, u64), u32)>> = BinaryHeap::new();
    let mut expanded = expanded0;
    let mut generated = generated0;
    let mut seq = 0u64;

    let init = problem.initial_state();
    let h0 = match space.estimate(heuristic, &init) {
        ExtCost::Finite(h) => h,
        ExtCost::Infinite => {
            return SearchOutcome::Unsolvable(stats(expanded, generated, start, label))
        }
    };
    best.insert(init.clone(), Cost::ZERO);
    let root = arena.push(init, None);
    open.push(Reverse(((h0, seq), root)));

    while let Some(Reverse((_, node))) = open.pop() {
        let state = arena.states[node as usize].clone();
        if limits.hit(expanded) {
            return SearchOutcome::ResourceLimit(stats(expanded, generated, start, label));
        }
        if problem.goal_reached(&state) {
            let plan = arena.extract_plan(problem, node);
            let cost = best[&state];
            return SearchOutcome::Solved(Solution {
                plan,
                cost,
                stats: stats(expanded, generated, start, label),
            });
        }
        expanded += 1;
        let g = best[&state];
        for action in space.applicable(&state) {
            let next = space.successor(&state, action);
            if best.contains_key(&next) {
                continue; // keep first arrival; completeness is unaffected
            }
            let h = match space.estimate(heuristic, &next) {
                ExtCost::Finite(h) => h,
                ExtCost::Infinite => continue,
            };
            best.insert(next.clone(), g + problem.actions[action].cost);
            generated += 1;
            seq += 1;
            let id = arena.push(next, Some((node, action as u32)));
            open.push(Reverse(((h, seq), id)));
        }
    }
    SearchOutcome::Unsolvable(stats(expanded, generated, start, label))
}

/// Enforced hill-climbing: breadth-first search for a strictly better
/// relaxed-plan estimate, restricted to helpful actions, iterated from the
/// improved state; on failure a complete greedy best-first search takes
/// over from scratch.
fn ehc(space: &Space<'_>, limits: &Limits, start: Instant) -> SearchOutcome {
    let problem = space.problem;
    let mut expanded = 0u64;
    let mut generated = 0u64;

    let mut current = problem.initial_state();
    let mut plan: Vec<String> = Vec::new();
    let mut cost = Cost::ZERO;
    let mut current_h = match space.ctx.h_ff(&current).estimate {
        Some(h) => h,
        None => return SearchOutcome::Unsolvable(stats(0, 0, start, AlgorithmUsed::Ehc)),
    };

    'outer: loop {
        if problem.goal_reached(&current) {
            return SearchOutcome::Solved(Solution {
                plan: Plan::new(plan),
                cost,
                stats: stats(expanded, generated, start, AlgorithmUsed::Ehc),
            });
        }
        // Breadth-first escape over helpful actions.
        let mut visited: HashMap<State, ()> = HashMap::new();
        let mut queue: VecDeque<(State, Vec<(usize, usize)>)> = VecDeque::new(); // (state, path of (action, _))
        visited.insert(current.clone(), ());
        queue.push_back((current.clone(), Vec::new()));
        while let Some((state, path)) = queue.pop_front() {
            if limits.hit(expanded) {
                return SearchOutcome::ResourceLimit(stats(
                    expanded,
                    generated,
                    start,
                    AlgorithmUsed::Ehc,
                ));
            }
            expanded += 1;
            let ff = space.ctx.h_ff(&state);
            let helpful = match ff.estimate {
                Some(_) => ff.helpful,
                None => continue, // relaxed dead end
            };
            for action in helpful {
                if !state.contains_all(&problem.actions[action].pre) {
                    continue;
                }
                let next = space.successor(&state, action);
                if visited.contains_key(&next) {
                    continue;
                }
                visited.insert(next.clone(), ());
                generated += 1;
                let mut path2 = path.clone();
                path2.push((action, 0));
                let h = space.ctx.h_ff(&next).estimate;
                let better = match h {
                    Some(h) => h < current_h || problem.goal_reached(&next),
                    None => false,
                };
                if better {
                    for &(a, _) in &path2 {
                        plan.push(problem.actions[a].name.clone());
                        cost = cost + problem.actions[a].cost;
                    }
                    current = next.clone();
                    current_h = h.unwrap_or(0);
                    continue 'outer;
                }
                queue.push_back((next, path2));
            }
        }
        // EHC got stuck: complete best-first fallback, restarted from the
        // initial state so incompleteness cannot hide a solution.
        return best_first(
            space,
            HeuristicKind::Ff,
            limits,
            start,
            AlgorithmUsed::Bfs,
            expanded,
            generated,
        );
    }
}
