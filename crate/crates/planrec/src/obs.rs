//! Observation sequences and their compilation into planning goals.
//!
//! An observation is the name of one action of the domain, or a match-set of
//! action names when several ground actions can discharge the same observed
//! token (the library setting, where many start actions emit one terminal).
//! The compilation turns each observation into a marker fluent added by a
//! dedicated copy of the observed action, chains the copies in observation
//! order through their preconditions, and extends every candidate goal with
//! all markers. Plans of the transformed problem restore to exactly the
//! plans of the original problem that embed the observations as a
//! subsequence.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strips::{Action, FluentId, Plan, ProblemBuilder, ProblemFile, StripsProblem};

/// One observed token: a single action or a match-set of action names, any
/// of which may discharge the observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObsToken {
    Action(String),
    MatchSet(Vec<String>),
}

impl ObsToken {
    pub fn matches(&self, step: &str) -> bool {
        match self {
            ObsToken::Action(a) => a == step,
            ObsToken::MatchSet(set) => set.iter().any(|a| a == step),
        }
    }

    pub fn action_names(&self) -> &[String] {
        match self {
            ObsToken::Action(a) => std::slice::from_ref(a),
            ObsToken::MatchSet(set) => set,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObservationSequence {
    pub tokens: Vec<ObsToken>,
}

impl ObservationSequence {
    pub fn from_actions<S: Into<String>>(names: Vec<S>) -> ObservationSequence {
        ObservationSequence {
            tokens: names.into_iter().map(|n| ObsToken::Action(n.into())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// True iff there is a strictly increasing map from observation indices into
/// plan indices matching every observation; equivalently, the observations
/// are a subsequence of the plan. Decided by one greedy scan.
pub fn satisfies(plan: &[String], obs: &ObservationSequence) -> bool {
    let mut next = obs.tokens.iter();
    let mut current = next.next();
    for step in plan {
        match current {
            None => return true,
            Some(tok) if tok.matches(step) => current = next.next(),
            Some(_) => {}
        }
    }
    current.is_none()
}

/// A plan recognition theory: goal-free domain, candidate goal set, and an
/// observation sequence.
#[derive(Debug, Clone)]
pub struct Theory {
    pub domain: StripsProblem,
    /// Candidate goals, each a set of fluents of the domain.
    pub goals: Vec<Vec<FluentId>>,
    pub obs: ObservationSequence,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ObsError {
    #[error("observation {index} refers to unknown action `{action}`")]
    UnknownObservedAction { index: usize, action: String },
    #[error("observation {index} has an empty match-set")]
    EmptyMatchSet { index: usize },
    #[error("goal {index} references unknown fluent `{fluent}`")]
    UnknownGoalFluent { index: usize, fluent: String },
}

impl Theory {
    pub fn validate(&self) -> Result<(), ObsError> {
        for (index, tok) in self.obs.tokens.iter().enumerate() {
            let names = tok.action_names();
            if names.is_empty() {
                return Err(ObsError::EmptyMatchSet { index });
            }
            for name in names {
                if self.domain.action_id(name).is_none() {
                    return Err(ObsError::UnknownObservedAction {
                        index,
                        action: name.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Ensures no two single-action observations refer to the same action: every
/// extra reference is redirected to a fresh copy of the action with
/// identical precondition, effects, and cost.
pub fn dedupe_observations(theory: &Theory) -> Theory {
    let mut seen: HashSet<String> = HashSet::new();
    let mut copies_of: HashMap<String, u32> = HashMap::new();
    let mut domain = theory.domain.clone();
    let mut tokens = Vec::with_capacity(theory.obs.tokens.len());

    for tok in &theory.obs.tokens {
        match tok {
            ObsToken::Action(name) if seen.contains(name) => {
                let counter = copies_of.entry(name.clone()).or_insert(0);
                *counter += 1;
                let mut copy_name = format!("{name}__copy{counter}");
                while domain.action_id(&copy_name).is_some() {
                    copy_name.push('_');
                }
                if let Some(original) = domain.action(name).cloned() {
                    domain.actions.push(Action {
                        name: copy_name.clone(),
                        ..original
                    });
                }
                seen.insert(copy_name.clone());
                tokens.push(ObsToken::Action(copy_name));
            }
            ObsToken::Action(name) => {
                seen.insert(name.clone());
                tokens.push(tok.clone());
            }
            // Match-sets get per-observation action variants during
            // compilation, so repeated tokens never collide.
            ObsToken::MatchSet(_) => tokens.push(tok.clone()),
        }
    }
    if !copies_of.is_empty() {
        domain = rebuild(domain);
    }
    Theory {
        domain,
        goals: theory.goals.clone(),
        obs: ObservationSequence { tokens },
    }
}

fn rebuild(p: StripsProblem) -> StripsProblem {
    // Round-trip through the builder to refresh the action index.
    let mut b = ProblemBuilder::new();
    for name in p.fluent_names() {
        b.fluent(name);
    }
    b.set_init(p.init.clone());
    if let Some(g) = &p.goal {
        b.set_goal(g.clone());
    }
    for a in &p.actions {
        b.add_action(a.clone());
    }
    b.finish()
}

/// The observation-free theory produced by [`compile_observations`].
#[derive(Debug, Clone)]
pub struct TransformedTheory {
    /// P' = <F u F_o, I, A u A_o>, goal-free.
    pub domain: StripsProblem,
    /// For each original goal G, the extended goal G' = G u F_o.
    pub goals: Vec<Vec<FluentId>>,
    /// The original goals, as fluents of P' (F is a subset of F').
    pub base_goals: Vec<Vec<FluentId>>,
    /// Marker fluents p_a, one per observation, in observation order.
    pub marker_fluents: Vec<FluentId>,
    /// Maps observed-action and copy names back to original action names.
    rename: HashMap<String, String>,
}

impl TransformedTheory {
    /// The planning problem P'(G') for the i-th candidate goal.
    pub fn problem_for_goal(&self, i: usize) -> StripsProblem {
        let mut p = self.domain.clone();
        p.goal = Some(self.goals[i].clone());
        p
    }

    /// The planning problem P'(G) for the i-th candidate goal without the
    /// observation markers.
    pub fn problem_for_base_goal(&self, i: usize) -> StripsProblem {
        let mut p = self.domain.clone();
        p.goal = Some(self.base_goals[i].clone());
        p
    }

    /// Replaces every observed-action step o_a by a, and renames action
    /// copies back to their originals. Length and cost are preserved.
    pub fn restore_plan(&self, plan: &Plan) -> Plan {
        Plan::new(
            plan.steps
                .iter()
                .map(|s| self.rename.get(s).cloned().unwrap_or_else(|| s.clone()))
                .collect(),
        )
    }
}

/// The observation-compiling transformation. Expects a deduplicated theory;
/// every observation becomes a marker fluent, an observed copy of each
/// matching action (chained to the previous marker), and an extra goal.
pub fn compile_observations(theory: &Theory) -> Result<TransformedTheory, ObsError> {
    theory.validate()?;
    let src = &theory.domain;

    let mut b = ProblemBuilder::new();
    for name in src.fluent_names() {
        b.fluent(name);
    }
    b.set_init(src.init.clone());
    for a in &src.actions {
        b.add_action(a.clone());
    }

    // Dedupe copies restore to the name before the `__copy` suffix.
    let mut rename: HashMap<String, String> = HashMap::new();
    for a in &src.actions {
        if let Some(pos) = a.name.find("__copy") {
            rename.insert(a.name.clone(), a.name[..pos].to_string());
        }
    }

    let mut markers = Vec::with_capacity(theory.obs.len());
    for (j, tok) in theory.obs.tokens.iter().enumerate() {
        let marker_name = match tok {
            ObsToken::Action(a) => format!("p__{a}"),
            ObsToken::MatchSet(_) => format!("p__obs{j}"),
        };
        let mut marker_name = marker_name;
        while b.has_fluent(&marker_name) {
            marker_name.push('_');
        }
        let marker = b.fluent(&marker_name);

        for base_name in tok.action_names() {
            let base = src
                .action(base_name)
                .ok_or_else(|| ObsError::UnknownObservedAction {
                    index: j,
                    action: base_name.clone(),
                })?
                .clone();
            let obs_name = match tok {
                ObsToken::Action(_) => format!("o__{base_name}"),
                ObsToken::MatchSet(_) => format!("o__obs{j}__{base_name}"),
            };
            let mut pre = base.pre.clone();
            if let Some(&prev) = markers.last() {
                pre.push(prev);
            }
            let mut add = base.add.clone();
            add.push(marker);
            let restored = rename.get(base_name).cloned().unwrap_or_else(|| base_name.clone());
            rename.insert(obs_name.clone(), restored);
            b.add_action(Action {
                name: obs_name,
                pre,
                pre_neg: base.pre_neg.clone(),
                add,
                del: base.del.clone(),
                cost: base.cost,
            });
        }
        markers.push(marker);
    }

    let domain = b.finish();
    let base_goals: Vec<Vec<FluentId>> = theory.goals.clone();
    let goals = base_goals
        .iter()
        .map(|g| {
            let mut g2 = g.clone();
            g2.extend_from_slice(&markers);
            g2.sort_unstable();
            g2.dedup();
            g2
        })
        .collect();

    Ok(TransformedTheory {
        domain,
        goals,
        base_goals,
        marker_fluents: markers,
        rename,
    })
}

// ---------------------------------------------------------------------------
// Wire format

/// JSON theory file: `{"problem": <problem without goal>, "goals": [[str]],
/// "observations": [str | [str]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryFile {
    pub problem: ProblemFile,
    pub goals: Vec<Vec<String>>,
    #[serde(default)]
    pub observations: Vec<ObsToken>,
}

impl Theory {
    pub fn from_file(file: &TheoryFile) -> Result<Theory, ObsError> {
        let domain = StripsProblem::from_file(&file.problem);
        let mut goals = Vec::with_capacity(file.goals.len());
        for (index, g) in file.goals.iter().enumerate() {
            let mut ids = Vec::with_capacity(g.len());
            for name in g {
                let id = domain
                    .fluent_id(name)
                    .ok_or_else(|| ObsError::UnknownGoalFluent {
                        index,
                        fluent: name.clone(),
                    })?;
                ids.push(id);
            }
            ids.sort_unstable();
            ids.dedup();
            goals.push(ids);
        }
        let theory = Theory {
            domain,
            goals,
            obs: ObservationSequence {
                tokens: file.observations.clone(),
            },
        };
        theory.validate()?;
        Ok(theory)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::Cost;
    use crate::strips::validate_plan;

    fn seq(names: &[&str]) -> ObservationSequence {
        ObservationSequence::from_actions(names.to_vec())
    }

    fn steps(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn satisfies_worked_cases() {
        let plan = steps(&["a", "b", "c", "d", "e", "a"]);
        assert!(satisfies(&plan, &seq(&["b", "d", "a"])));
        assert!(satisfies(&plan, &seq(&["a", "c", "a"])));
        assert!(!satisfies(&plan, &seq(&["b", "d", "c"])));
        assert!(satisfies(&plan, &seq(&[])));
    }

    #[test]
    fn satisfies_requires_distinct_occurrences() {
        // One `a` in the plan cannot witness two observations of `a`.
        assert!(!satisfies(&steps(&["a"]), &seq(&["a", "a"])));
        assert!(satisfies(&steps(&["a", "a"]), &seq(&["a", "a"])));
    }

    fn two_action_theory(obs: &[&str]) -> Theory {
        let mut b = ProblemBuilder::new();
        let p = b.fluent("p");
        b.add_action(Action {
            name: "a".into(),
            pre: vec![],
            pre_neg: vec![],
            add: vec![p],
            del: vec![],
            cost: Cost::ONE,
        });
        b.add_action(Action {
            name: "c".into(),
            pre: vec![],
            pre_neg: vec![],
            add: vec![],
            del: vec![],
            cost: Cost::ONE,
        });
        Theory {
            domain: b.finish(),
            goals: vec![vec![p]],
            obs: seq(obs),
        }
    }

    #[test]
    fn dedupe_creates_one_copy_per_repeat() {
        let t = dedupe_observations(&two_action_theory(&["a", "c", "a"]));
        assert_eq!(
            t.obs,
            ObservationSequence::from_actions(vec!["a", "c", "a__copy1"])
        );
        let copy = t.domain.action("a__copy1").unwrap();
        let orig = t.domain.action("a").unwrap();
        assert_eq!(copy.add, orig.add);
        assert_eq!(copy.cost, orig.cost);
    }

    #[test]
    fn dedupe_noop_on_distinct_observations() {
        let t0 = two_action_theory(&["a", "c"]);
        let t = dedupe_observations(&t0);
        assert_eq!(t.obs, t0.obs);
        assert_eq!(t.domain.actions.len(), t0.domain.actions.len());
    }

    #[test]
    fn dedupe_triple_repeat_yields_two_copies() {
        let t = dedupe_observations(&two_action_theory(&["a", "a", "a"]));
        let names: Vec<&str> = t
            .obs
            .tokens
            .iter()
            .flat_map(|t| t.action_names())
            .map(|s| s.as_str())
            .collect();
        assert_eq!(names, ["a", "a__copy1", "a__copy2"]);
        assert_eq!(t.domain.actions.len(), 4);
    }

    #[test]
    fn compile_builds_marker_chain() {
        let t = two_action_theory(&["a", "c"]);
        let tt = compile_observations(&t).unwrap();
        assert_eq!(tt.marker_fluents.len(), 2);
        let o_a = tt.domain.action("o__a").unwrap();
        let o_c = tt.domain.action("o__c").unwrap();
        let p_a = tt.domain.fluent_id("p__a").unwrap();
        let p_c = tt.domain.fluent_id("p__c").unwrap();
        assert!(o_a.add.contains(&p_a));
        assert!(!o_a.pre.contains(&p_c));
        assert!(o_c.pre.contains(&p_a));
        assert!(o_c.add.contains(&p_c));
        // Originals are retained alongside the observed copies.
        assert!(tt.domain.action("a").is_some());
        // G' = G u F_o.
        assert!(tt.goals[0].contains(&p_a) && tt.goals[0].contains(&p_c));
    }

    #[test]
    fn compile_empty_observations_is_identity() {
        let t = two_action_theory(&[]);
        let tt = compile_observations(&t).unwrap();
        assert_eq!(tt.domain.actions.len(), t.domain.actions.len());
        assert_eq!(tt.goals, t.goals);
        assert!(tt.marker_fluents.is_empty());
    }

    #[test]
    fn compile_rejects_unknown_observed_action() {
        let t = two_action_theory(&["nope"]);
        assert!(matches!(
            compile_observations(&t),
            Err(ObsError::UnknownObservedAction { .. })
        ));
    }

    #[test]
    fn restore_substitutes_observed_steps() {
        let t = two_action_theory(&["a", "c"]);
        let tt = compile_observations(&t).unwrap();
        let restored = tt.restore_plan(&Plan::new(steps(&["o__a", "c", "o__c"])));
        assert_eq!(restored.steps, steps(&["a", "c", "c"]));
    }

    #[test]
    fn restore_undoes_dedupe_copies() {
        let t = dedupe_observations(&two_action_theory(&["a", "c", "a"]));
        let tt = compile_observations(&t).unwrap();
        let restored = tt.restore_plan(&Plan::new(steps(&["o__a", "o__c", "o__a__copy1"])));
        assert_eq!(restored.steps, steps(&["a", "c", "a"]));
    }

    #[test]
    fn observed_plan_valid_and_cost_preserving() {
        let t = two_action_theory(&["a", "c"]);
        let tt = compile_observations(&t).unwrap();
        let p = tt.problem_for_goal(0);
        let plan = Plan::new(steps(&["o__a", "o__c"]));
        let cost = validate_plan(&p, &plan).unwrap();
        assert_eq!(cost, Cost::from_int(2));
        let restored = tt.restore_plan(&plan);
        let mut orig = t.domain.clone();
        orig.goal = Some(t.goals[0].clone());
        assert_eq!(validate_plan(&orig, &restored).unwrap(), cost);
        assert!(satisfies(&restored.steps, &t.obs));
    }
}
