//! Delete-relaxation heuristics: h_max, h_add, and FF-style relaxed plans.
//!
//! All three work on negation-free problems. h_max is admissible and
//! consistent; h_add and the relaxed-plan estimate are not admissible. The
//! relaxed-plan estimate counts actions (it stays informative on zero-cost
//! problems, where the cost-based estimates collapse to zero) and also
//! yields the helpful-action set used by enforced hill-climbing.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::cost::{Cost, ExtCost};
use crate::strips::{FluentId, State, StripsProblem};

/// Preprocessed achiever/consumer tables for one problem, reused across all
/// state evaluations of a search.
pub struct HeuristicContext<'p> {
    problem: &'p StripsProblem,
    /// fluent -> actions having it as a positive precondition
    consumers: Vec<Vec<u32>>,
    /// actions with an empty precondition list
    no_pre: Vec<u32>,
    goal: Vec<FluentId>,
}

/// Relaxed-plan evaluation: unit-count estimate plus the helpful actions
/// (applicable actions adding a first-layer subgoal of the relaxed plan).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FfResult {
    /// `None` when the goal is unreachable in the delete relaxation.
    pub estimate: Option<usize>,
    /// Indices into `problem.actions`.
    pub helpful: Vec<usize>,
}

impl<'p> HeuristicContext<'p> {
    /// The problem must have a goal and no negative preconditions.
    pub fn new(problem: &'p StripsProblem) -> HeuristicContext<'p> {
        assert!(
            !problem.has_negative_preconditions(),
            "heuristics require negation to be compiled away"
        );
        let goal = problem.goal.clone().expect("problem has no goal");
        let mut consumers = vec![Vec::new(); problem.num_fluents()];
        let mut no_pre = Vec::new();
        for (i, a) in problem.actions.iter().enumerate() {
            if a.pre.is_empty() {
                no_pre.push(i as u32);
            }
            for &f in &a.pre {
                consumers[f as usize].push(i as u32);
            }
        }
        HeuristicContext {
            problem,
            consumers,
            no_pre,
            goal,
        }
    }

    pub fn goal_fluents(&self) -> &[FluentId] {
        &self.goal
    }

    /// Shared generalized-Dijkstra sweep over relaxed fluent costs.
    /// `combine` folds precondition costs (max for h_max, sum for h_add).
    fn relaxed_costs(&self, state: &State, additive: bool) -> Vec<ExtCost> {
        let p = self.problem;
        let mut value = vec![ExtCost::Infinite; p.num_fluents()];
        // Per-action: number of unprocessed preconditions and the folded
        // cost of those already processed.
        let mut remaining: Vec<u32> = p.actions.iter().map(|a| a.pre.len() as u32).collect();
        let mut pre_cost: Vec<Cost> = vec![Cost::ZERO; p.actions.len()];
        let mut heap: BinaryHeap<Reverse<(Cost, FluentId)>> = BinaryHeap::new();

        for f in state.iter() {
            value[f as usize] = ExtCost::ZERO;
            heap.push(Reverse((Cost::ZERO, f)));
        }
        let trigger = |ai: u32,
                           value: &mut Vec<ExtCost>,
                           heap: &mut BinaryHeap<Reverse<(Cost, FluentId)>>,
                           pre_cost: &Cost| {
            let a = &p.actions[ai as usize];
            let reached = *pre_cost + a.cost;
            for &g in &a.add {
                if ExtCost::Finite(reached) < value[g as usize] {
                    value[g as usize] = ExtCost::Finite(reached);
                    heap.push(Reverse((reached, g)));
                }
            }
        };
        for &ai in &self.no_pre {
            let c = pre_cost[ai as usize];
            trigger(ai, &mut value, &mut heap, &c);
        }
        while let Some(Reverse((c, f))) = heap.pop() {
            if value[f as usize] != ExtCost::Finite(c) {
                continue; // stale entry
            }
            for &ai in &self.consumers[f as usize] {
                let r = &mut remaining[ai as usize];
                if *r == 0 {
                    continue;
                }
                if additive {
                    pre_cost[ai as usize] = pre_cost[ai as usize] + c;
                } else if c > pre_cost[ai as usize] {
                    pre_cost[ai as usize] = c;
                }
                *r -= 1;
                if *r == 0 {
                    let pc = pre_cost[ai as usize];
                    trigger(ai, &mut value, &mut heap, &pc);
                }
            }
        }
        value
    }

    /// Admissible delete-relaxation bound: max over goal fluents of their
    /// relaxed cost.
    pub fn h_max(&self, state: &State) -> ExtCost {
        let value = self.relaxed_costs(state, false);
        let mut best = ExtCost::ZERO;
        for &g in &self.goal {
            match value[g as usize] {
                ExtCost::Infinite => return ExtCost::Infinite,
                v if v > best => best = v,
                _ => {}
            }
        }
        best
    }

    /// Inadmissible additive variant: sum over goal fluents.
    pub fn h_add(&self, state: &State) -> ExtCost {
        let value = self.relaxed_costs(state, true);
        let mut total = Cost::ZERO;
        for &g in &self.goal {
            match value[g as usize] {
                ExtCost::Infinite => return ExtCost::Infinite,
                ExtCost::Finite(v) => total = total + v,
            }
        }
        ExtCost::Finite(total)
    }

    /// FF-style relaxed plan extracted by a backward sweep over the layered
    /// relaxed planning graph.
    pub fn h_ff(&self, state: &State) -> FfResult {
        let p = self.problem;
        const UNREACHED: u32 = u32::MAX;
        // Forward pass: first layer at which each fluent/action appears.
        let mut fluent_layer = vec![UNREACHED; p.num_fluents()];
        let mut action_layer = vec![UNREACHED; p.actions.len()];
        let mut remaining: Vec<u32> = p.actions.iter().map(|a| a.pre.len() as u32).collect();
        let mut frontier: Vec<FluentId> = Vec::new();
        for f in state.iter() {
            fluent_layer[f as usize] = 0;
            frontier.push(f);
        }
        let mut ready: Vec<u32> = self.no_pre.clone();
        let mut layer = 0u32;
        loop {
            if self.goal.iter().all(|&g| fluent_layer[g as usize] <= layer) {
                break;
            }
            let mut next_frontier = Vec::new();
            for &f in &frontier {
                for &ai in &self.consumers[f as usize] {
                    let r = &mut remaining[ai as usize];
                    *r -= 1;
                    if *r == 0 {
                        ready.push(ai);
                    }
                }
            }
            for ai in ready.drain(..) {
                if action_layer[ai as usize] != UNREACHED {
                    continue;
                }
                action_layer[ai as usize] = layer;
                for &g in &p.actions[ai as usize].add {
                    if fluent_layer[g as usize] == UNREACHED {
                        fluent_layer[g as usize] = layer + 1;
                        next_frontier.push(g);
                    }
                }
            }
            if next_frontier.is_empty() {
                // Fixpoint without the goal: unreachable in the relaxation.
                if !self.goal.iter().all(|&g| fluent_layer[g as usize] != UNREACHED) {
                    return FfResult {
                        estimate: None,
                        helpful: Vec::new(),
                    };
                }
                break;
            }
            frontier = next_frontier;
            layer += 1;
        }

        let max_layer = self
            .goal
            .iter()
            .map(|&g| fluent_layer[g as usize])
            .max()
            .unwrap_or(0);
        if max_layer == 0 {
            return FfResult {
                estimate: Some(0),
                helpful: Vec::new(),
            };
        }

        // Backward extraction: subgoals per layer, first achiever wins.
        let mut subgoals: Vec<Vec<FluentId>> = vec![Vec::new(); max_layer as usize + 1];
        let mut marked = vec![false; p.num_fluents()];
        for &g in &self.goal {
            let l = fluent_layer[g as usize];
            if l > 0 && !marked[g as usize] {
                marked[g as usize] = true;
                subgoals[l as usize].push(g);
            }
        }
        let mut selected: Vec<(u32, u32)> = Vec::new(); // (layer, action)
        for l in (1..=max_layer).rev() {
            let goals_here = std::mem::take(&mut subgoals[l as usize]);
            for g in goals_here {
                // Deterministic: the lowest-index achiever available at l-1.
                let achiever = p
                    .actions
                    .iter()
                    .enumerate()
                    .position(|(ai, a)| {
                        action_layer[ai] < l && a.add.contains(&g)
                    })
                    .expect("reached fluent must have an achiever");
                selected.push((l - 1, achiever as u32));
                for &f in &p.actions[achiever].pre {
                    let fl = fluent_layer[f as usize];
                    if fl > 0 && !marked[f as usize] {
                        marked[f as usize] = true;
                        subgoals[fl.min(l - 1) as usize].push(f);
                    }
                }
            }
        }
        selected.sort_unstable();
        selected.dedup();

        // Helpful actions: applicable actions adding some first-layer
        // subgoal of the relaxed plan.
        let mut first_layer_goals = vec![false; p.num_fluents()];
        for &(l, ai) in &selected {
            if l == 0 {
                for &g in &p.actions[ai as usize].add {
                    first_layer_goals[g as usize] = true;
                }
            }
        }
        let mut helpful: Vec<usize> = Vec::new();
        for (ai, a) in p.actions.iter().enumerate() {
            if action_layer[ai] == 0
                && a.add.iter().any(|&g| first_layer_goals[g as usize])
            {
                helpful.push(ai);
            }
        }
        FfResult {
            estimate: Some(selected.len()),
            helpful,
        }
    }
}

/// One-shot h_max; builds the context internally.
pub fn h_max(state: &State, problem: &StripsProblem) -> ExtCost {
    HeuristicContext::new(problem).h_max(state)
}

/// One-shot h_add; builds the context internally.
pub fn h_add(state: &State, problem: &StripsProblem) -> ExtCost {
    HeuristicContext::new(problem).h_add(state)
}

/// One-shot relaxed-plan evaluation; builds the context internally.
pub fn h_ff(state: &State, problem: &StripsProblem) -> FfResult {
    HeuristicContext::new(problem).h_ff(state)
}
