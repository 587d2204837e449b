//! Grounded STRIPS data model with negation support, plan validation, and
//! cost accounting.
//!
//! A problem is a fluent universe, a closed-world initial state, and a set of
//! cost-bearing grounded actions, optionally with a goal. Negative
//! preconditions are a surface feature: [`compile_negation`] rewrites them
//! into complement fluents so the search core only ever sees positive STRIPS.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::Cost;

/// Index into a problem's fluent universe.
pub type FluentId = u32;

/// A set of fluents, packed as a bitset over the owning problem's universe.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct State {
    words: Box<[u64]>,
}

impl State {
    pub fn empty(num_fluents: usize) -> State {
        State {
            words: vec![0u64; num_fluents.div_ceil(64)].into_boxed_slice(),
        }
    }

    pub fn from_fluents(num_fluents: usize, fluents: &[FluentId]) -> State {
        let mut s = State::empty(num_fluents);
        for &f in fluents {
            s.insert(f);
        }
        s
    }

    #[inline]
    pub fn contains(&self, f: FluentId) -> bool {
        self.words[(f / 64) as usize] & (1u64 << (f % 64)) != 0
    }

    #[inline]
    pub fn insert(&mut self, f: FluentId) {
        self.words[(f / 64) as usize] |= 1u64 << (f % 64);
    }

    #[inline]
    pub fn remove(&mut self, f: FluentId) {
        self.words[(f / 64) as usize] &= !(1u64 << (f % 64));
    }

    pub fn contains_all(&self, fluents: &[FluentId]) -> bool {
        fluents.iter().all(|&f| self.contains(f))
    }

    pub fn disjoint_from(&self, fluents: &[FluentId]) -> bool {
        !fluents.iter().any(|&f| self.contains(f))
    }

    pub fn iter(&self) -> impl Iterator<Item = FluentId> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64)
                .filter(move |b| bits & (1u64 << b) != 0)
                .map(move |b| (w * 64 + b) as FluentId)
        })
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A grounded action: positive/negative precondition literals, add and
/// delete effects, and a non-negative cost.
#[derive(Debug, Clone)]
pub struct Action {
    pub name: String,
    pub pre: Vec<FluentId>,
    pub pre_neg: Vec<FluentId>,
    pub add: Vec<FluentId>,
    pub del: Vec<FluentId>,
    pub cost: Cost,
}

impl Action {
    fn normalize(&mut self) {
        for list in [
            &mut self.pre,
            &mut self.pre_neg,
            &mut self.add,
            &mut self.del,
        ] {
            list.sort_unstable();
            list.dedup();
        }
    }
}

/// A sequential plan, referencing actions of the owning problem by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<String>,
}

impl Plan {
    pub fn new(steps: Vec<String>) -> Plan {
        Plan { steps }
    }

    pub fn empty() -> Plan {
        Plan { steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// The grounded planning problem `P = <F, I, A>`, optionally with a goal.
#[derive(Debug, Clone)]
pub struct StripsProblem {
    fluents: Vec<String>,
    fluent_index: HashMap<String, FluentId>,
    pub init: Vec<FluentId>,
    pub goal: Option<Vec<FluentId>>,
    pub actions: Vec<Action>,
    action_index: HashMap<String, usize>,
    /// Fluent names referenced by the wire format without being declared in
    /// the universe. Kept so validation can report them.
    undeclared: Vec<(String, String)>,
}

impl StripsProblem {
    pub fn num_fluents(&self) -> usize {
        self.fluents.len()
    }

    pub fn fluent_name(&self, f: FluentId) -> &str {
        &self.fluents[f as usize]
    }

    pub fn fluent_names(&self) -> &[String] {
        &self.fluents
    }

    pub fn fluent_id(&self, name: &str) -> Option<FluentId> {
        self.fluent_index.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<usize> {
        self.action_index.get(name).copied()
    }

    pub fn action(&self, name: &str) -> Option<&Action> {
        self.action_id(name).map(|i| &self.actions[i])
    }

    pub fn initial_state(&self) -> State {
        State::from_fluents(self.num_fluents(), &self.init)
    }

    pub fn has_negative_preconditions(&self) -> bool {
        self.actions.iter().any(|a| !a.pre_neg.is_empty())
    }

    pub fn goal_reached(&self, state: &State) -> bool {
        match &self.goal {
            Some(g) => state.contains_all(g),
            None => false,
        }
    }

    /// Re-derives the name->index maps; called after actions are added or
    /// renamed by a compiler.
    fn reindex(&mut self) {
        self.action_index = self
            .actions
            .iter()
            .enumerate()
            .map(|(i, a)| (a.name.clone(), i))
            .collect();
    }
}

/// Incremental constructor used by the compilers; interns fluents on demand.
#[derive(Debug, Default)]
pub struct ProblemBuilder {
    fluents: Vec<String>,
    fluent_index: HashMap<String, FluentId>,
    init: Vec<FluentId>,
    goal: Option<Vec<FluentId>>,
    actions: Vec<Action>,
}

impl ProblemBuilder {
    pub fn new() -> ProblemBuilder {
        ProblemBuilder::default()
    }

    pub fn fluent(&mut self, name: &str) -> FluentId {
        if let Some(&id) = self.fluent_index.get(name) {
            return id;
        }
        let id = self.fluents.len() as FluentId;
        self.fluents.push(name.to_string());
        self.fluent_index.insert(name.to_string(), id);
        id
    }

    pub fn has_fluent(&self, name: &str) -> bool {
        self.fluent_index.contains_key(name)
    }

    pub fn set_init(&mut self, init: Vec<FluentId>) {
        self.init = init;
    }

    pub fn add_init(&mut self, f: FluentId) {
        self.init.push(f);
    }

    pub fn set_goal(&mut self, goal: Vec<FluentId>) {
        self.goal = Some(goal);
    }

    pub fn add_action(&mut self, mut action: Action) {
        action.normalize();
        self.actions.push(action);
    }

    pub fn finish(mut self) -> StripsProblem {
        self.init.sort_unstable();
        self.init.dedup();
        if let Some(g) = &mut self.goal {
            g.sort_unstable();
            g.dedup();
        }
        let mut p = StripsProblem {
            fluents: self.fluents,
            fluent_index: self.fluent_index,
            init: self.init,
            goal: self.goal,
            actions: self.actions,
            action_index: HashMap::new(),
            undeclared: Vec::new(),
        };
        p.reindex();
        p
    }
}

/// One violation found by [`validate_problem`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    UnknownFluent { context: String, fluent: String },
    DuplicateFluent { fluent: String },
    DuplicateActionName { action: String },
    AddDelOverlap { action: String, fluent: String },
    NegativeCost { action: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnknownFluent { context, fluent } => {
                write!(f, "{context} references undeclared fluent `{fluent}`")
            }
            Diagnostic::DuplicateFluent { fluent } => {
                write!(f, "fluent `{fluent}` declared more than once")
            }
            Diagnostic::DuplicateActionName { action } => {
                write!(f, "action name `{action}` is not unique")
            }
            Diagnostic::AddDelOverlap { action, fluent } => {
                write!(f, "action `{action}` both adds and deletes `{fluent}`")
            }
            Diagnostic::NegativeCost { action } => {
                write!(f, "action `{action}` has a negative cost")
            }
        }
    }
}

/// Checks every problem invariant; returns one diagnostic per violation.
pub fn validate_problem(p: &StripsProblem) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (context, fluent) in &p.undeclared {
        out.push(Diagnostic::UnknownFluent {
            context: context.clone(),
            fluent: fluent.clone(),
        });
    }
    let mut seen = HashSet::new();
    for a in &p.actions {
        if !seen.insert(a.name.as_str()) {
            out.push(Diagnostic::DuplicateActionName {
                action: a.name.clone(),
            });
        }
        if a.cost.is_negative() {
            out.push(Diagnostic::NegativeCost {
                action: a.name.clone(),
            });
        }
        let dels: HashSet<FluentId> = a.del.iter().copied().collect();
        for &f in &a.add {
            if dels.contains(&f) {
                out.push(Diagnostic::AddDelOverlap {
                    action: a.name.clone(),
                    fluent: p.fluent_name(f).to_string(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StripsError {
    #[error("action `{action}` not applicable: precondition `{literal}` violated")]
    NotApplicable { action: String, literal: String },
    #[error("plan step {index} (`{action}`) not applicable: `{literal}`")]
    StepNotApplicable {
        index: usize,
        action: String,
        literal: String,
    },
    #[error("plan reaches a final state that does not satisfy the goal")]
    GoalNotSatisfied,
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("problem has no goal")]
    NoGoal,
}

/// Progresses `state` through `a`; fails naming the first violated
/// precondition literal.
pub fn apply(p: &StripsProblem, state: &State, a: &Action) -> Result<State, StripsError> {
    for &f in &a.pre {
        if !state.contains(f) {
            return Err(StripsError::NotApplicable {
                action: a.name.clone(),
                literal: p.fluent_name(f).to_string(),
            });
        }
    }
    for &f in &a.pre_neg {
        if state.contains(f) {
            return Err(StripsError::NotApplicable {
                action: a.name.clone(),
                literal: format!("!{}", p.fluent_name(f)),
            });
        }
    }
    let mut next = state.clone();
    for &f in &a.del {
        next.remove(f);
    }
    for &f in &a.add {
        next.insert(f);
    }
    Ok(next)
}

/// Runs the plan from the initial state and checks goal achievement.
/// Returns the exact plan cost when valid.
pub fn validate_plan(p: &StripsProblem, plan: &Plan) -> Result<Cost, StripsError> {
    let goal = p.goal.as_ref().ok_or(StripsError::NoGoal)?;
    let mut state = p.initial_state();
    let mut cost = Cost::ZERO;
    for (index, step) in plan.steps.iter().enumerate() {
        let a = p
            .action(step)
            .ok_or_else(|| StripsError::UnknownAction(step.clone()))?;
        state = apply(p, &state, a).map_err(|e| match e {
            StripsError::NotApplicable { action, literal } => StripsError::StepNotApplicable {
                index,
                action,
                literal,
            },
            other => other,
        })?;
        cost = cost + a.cost;
    }
    if state.contains_all(goal) {
        Ok(cost)
    } else {
        Err(StripsError::GoalNotSatisfied)
    }
}

/// Compiles negative preconditions away by introducing a complement fluent
/// `not_f` for every fluent `f` that appears negated anywhere. In every
/// reachable state of the result, `not_f` holds iff `f` does not.
pub fn compile_negation(p: &StripsProblem) -> StripsProblem {
    let negated: HashSet<FluentId> = p
        .actions
        .iter()
        .flat_map(|a| a.pre_neg.iter().copied())
        .collect();
    if negated.is_empty() {
        return p.clone();
    }

    let mut b = ProblemBuilder::new();
    for name in &p.fluents {
        b.fluent(name);
    }
    let mut complement: HashMap<FluentId, FluentId> = HashMap::new();
    let mut sorted: Vec<FluentId> = negated.into_iter().collect();
    sorted.sort_unstable();
    for f in sorted {
        let mut name = format!("not_{}", p.fluent_name(f));
        while b.has_fluent(&name) {
            name.push('_');
        }
        complement.insert(f, b.fluent(&name));
    }

    let init_set: HashSet<FluentId> = p.init.iter().copied().collect();
    let mut init = p.init.clone();
    for (&f, &nf) in &complement {
        if !init_set.contains(&f) {
            init.push(nf);
        }
    }
    b.set_init(init);
    if let Some(g) = &p.goal {
        b.set_goal(g.clone());
    }

    for a in &p.actions {
        let mut pre = a.pre.clone();
        for &f in &a.pre_neg {
            pre.push(complement[&f]);
        }
        let mut add = a.add.clone();
        let mut del = a.del.clone();
        for &f in &a.add {
            if let Some(&nf) = complement.get(&f) {
                del.push(nf);
            }
        }
        for &f in &a.del {
            if let Some(&nf) = complement.get(&f) {
                add.push(nf);
            }
        }
        b.add_action(Action {
            name: a.name.clone(),
            pre,
            pre_neg: Vec::new(),
            add,
            del,
            cost: a.cost,
        });
    }
    b.finish()
}

// ---------------------------------------------------------------------------
// Wire format

/// JSON problem file: `{"fluents":[..], "init":[..], "goal":[..]?,
/// "actions":[{"name","pre","add","del","cost"?}]}`. A `!` prefix in `pre`
/// marks a negative precondition. Cost defaults to 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub fluents: Vec<String>,
    #[serde(default)]
    pub init: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Vec<String>>,
    pub actions: Vec<ActionFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionFile {
    pub name: String,
    #[serde(default)]
    pub pre: Vec<String>,
    #[serde(default)]
    pub add: Vec<String>,
    #[serde(default)]
    pub del: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Cost>,
}

impl StripsProblem {
    /// Builds a problem from its wire form. References to undeclared fluents
    /// are interned anyway and surfaced through [`validate_problem`].
    pub fn from_file(file: &ProblemFile) -> StripsProblem {
        let mut b = ProblemBuilder::new();
        let mut duplicates = Vec::new();
        for name in &file.fluents {
            if b.has_fluent(name) {
                duplicates.push(name.clone());
            }
            b.fluent(name);
        }
        let mut undeclared = Vec::new();
        let mut resolve = |b: &mut ProblemBuilder, context: &str, name: &str| -> FluentId {
            if !b.has_fluent(name) {
                undeclared.push((context.to_string(), name.to_string()));
            }
            b.fluent(name)
        };

        let init = file
            .init
            .iter()
            .map(|n| resolve(&mut b, "init", n))
            .collect();
        b.set_init(init);
        if let Some(goal) = &file.goal {
            let goal = goal.iter().map(|n| resolve(&mut b, "goal", n)).collect();
            b.set_goal(goal);
        }
        for a in &file.actions {
            let context = format!("action `{}`", a.name);
            let mut pre = Vec::new();
            let mut pre_neg = Vec::new();
            for lit in &a.pre {
                match lit.strip_prefix('!') {
                    Some(name) => pre_neg.push(resolve(&mut b, &context, name)),
                    None => pre.push(resolve(&mut b, &context, lit)),
                }
            }
            let add = a.add.iter().map(|n| resolve(&mut b, &context, n)).collect();
            let del = a.del.iter().map(|n| resolve(&mut b, &context, n)).collect();
            b.add_action(Action {
                name: a.name.clone(),
                pre,
                pre_neg,
                add,
                del,
                cost: a.cost.unwrap_or(Cost::ONE),
            });
        }
        let mut p = b.finish();
        p.undeclared = undeclared;
        for fluent in duplicates {
            p.undeclared.push(("fluents".to_string(), fluent));
        }
        p
    }

    pub fn to_file(&self) -> ProblemFile {
        let name = |f: &FluentId| self.fluent_name(*f).to_string();
        ProblemFile {
            fluents: self.fluents.clone(),
            init: self.init.iter().map(|f| name(f)).collect(),
            goal: self
                .goal
                .as_ref()
                .map(|g| g.iter().map(|f| name(f)).collect()),
            actions: self
                .actions
                .iter()
                .map(|a| ActionFile {
                    name: a.name.clone(),
                    pre: a
                        .pre
                        .iter()
                        .map(|f| name(f))
                        .chain(a.pre_neg.iter().map(|f| format!("!{}", name(f))))
                        .collect(),
                    add: a.add.iter().map(|f| name(f)).collect(),
                    del: a.del.iter().map(|f| name(f)).collect(),
                    cost: Some(a.cost),
                })
                .collect(),
        }
    }
}
