//! Goal recognition over compiled observations.
//!
//! Theory mode decides, per candidate goal G, whether some optimal plan for
//! G embeds the observations, by comparing the optimal cost of the
//! transformed problem under G with the cost under G extended by the
//! observation markers: equal finite costs mean recognized. The first cost
//! doubles as an inclusive pruning bound for the second search. Library
//! mode compiles each library at a depth bound and asks for plain
//! solvability, since every plan of a zero-cost problem is optimal.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cost::Cost;
use crate::library::{
    compile, extract_primitive_sequence, CompilationConfig, LibraryError, PlanLibrary,
};
use crate::obs::{
    compile_observations, dedupe_observations, ObsError, ObsToken, ObservationSequence, Theory,
};
use crate::search::{
    search, Algorithm, AlgorithmUsed, HeuristicKind, PlannerConfig, SearchOutcome, SearchStats,
};
use crate::strips::{compile_negation, Plan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Recognized,
    Rejected,
    Undecided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoalRecord {
    pub name: String,
    /// Optimal cost of P'(G); absent when G is unreachable or undecided.
    pub cost_g: Option<Cost>,
    /// Optimal cost of P'(G'); absent when unreachable, pruned by the
    /// bound, or undecided.
    pub cost_gprime: Option<Cost>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecognitionResult {
    pub goals: Vec<GoalRecord>,
}

impl RecognitionResult {
    /// Names of the recognized goals, in report order.
    pub fn recognized(&self) -> Vec<&str> {
        self.goals
            .iter()
            .filter(|g| g.verdict == Verdict::Recognized)
            .map(|g| g.name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RecognizerOptions {
    /// Per-goal expansion budget (each goal runs up to two searches).
    pub node_limit: Option<u64>,
    /// Per-goal wall-clock budget.
    pub time_limit: Option<Duration>,
    /// Reuse the optimal cost of P'(G) as an inclusive upper bound when
    /// searching P'(G'). Never changes verdicts, only search effort.
    pub reuse_bound: bool,
    /// Worker threads for goal-level parallelism.
    pub jobs: usize,
}

impl Default for RecognizerOptions {
    fn default() -> RecognizerOptions {
        RecognizerOptions {
            node_limit: None,
            time_limit: None,
            reuse_bound: true,
            jobs: 1,
        }
    }
}

fn combine(a: &SearchStats, b: &SearchStats) -> SearchStats {
    SearchStats {
        expanded: a.expanded + b.expanded,
        generated: a.generated + b.generated,
        time_ms: a.time_ms + b.time_ms,
        algorithm: b.algorithm,
    }
}

/// Computes the set of candidate goals having at least one optimal plan
/// consistent with the observations. Goals whose searches exhaust their
/// limits are reported undecided, never dropped.
pub fn optimal_goal_set(
    theory: &Theory,
    opts: &RecognizerOptions,
) -> Result<RecognitionResult, ObsError> {
    let deduped = dedupe_observations(theory);
    let tt = compile_observations(&deduped)?;

    let goal_names: Vec<String> = theory
        .goals
        .iter()
        .map(|g| {
            g.iter()
                .map(|&f| theory.domain.fluent_name(f).to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();

    let indices: Vec<usize> = (0..theory.goals.len()).collect();
    let records = run_parallel(&indices, opts.jobs, |&i| {
        let optimal = PlannerConfig {
            algorithm: Algorithm::AStar,
            heuristic: HeuristicKind::HMax,
            cost_bound: None,
            node_limit: opts.node_limit,
            time_limit: opts.time_limit,
        };
        let base = compile_negation(&tt.problem_for_base_goal(i));
        let base_outcome = search(&base, &optimal);
        let mut stats = base_outcome.stats().clone();
        let cost_g = match &base_outcome {
            SearchOutcome::Solved(sol) => sol.cost,
            SearchOutcome::ResourceLimit(_) => {
                return GoalRecord {
                    name: goal_names[i].clone(),
                    cost_g: None,
                    cost_gprime: None,
                    verdict: Verdict::Undecided,
                    witness: None,
                    stats,
                };
            }
            _ => {
                // G itself is unreachable: it cannot be anyone's goal.
                return GoalRecord {
                    name: goal_names[i].clone(),
                    cost_g: None,
                    cost_gprime: None,
                    verdict: Verdict::Rejected,
                    witness: None,
                    stats,
                };
            }
        };

        let constrained_cfg = PlannerConfig {
            cost_bound: if opts.reuse_bound { Some(cost_g) } else { None },
            ..optimal
        };
        let obs_problem = compile_negation(&tt.problem_for_goal(i));
        let obs_outcome = search(&obs_problem, &constrained_cfg);
        stats = combine(&stats, obs_outcome.stats());
        match obs_outcome {
            SearchOutcome::Solved(sol) => {
                // An optimal plan for G' at strictly greater cost than G
                // means no optimal plan for G embeds the observations.
                let verdict = if sol.cost == cost_g {
                    Verdict::Recognized
                } else {
                    Verdict::Rejected
                };
                let witness = (verdict == Verdict::Recognized)
                    .then(|| tt.restore_plan(&sol.plan).steps);
                GoalRecord {
                    name: goal_names[i].clone(),
                    cost_g: Some(cost_g),
                    cost_gprime: Some(sol.cost),
                    verdict,
                    witness,
                    stats,
                }
            }
            SearchOutcome::Unsolvable(_) | SearchOutcome::BoundExceeded(_) => GoalRecord {
                name: goal_names[i].clone(),
                cost_g: Some(cost_g),
                cost_gprime: None,
                verdict: Verdict::Rejected,
                witness: None,
                stats,
            },
            SearchOutcome::ResourceLimit(_) => GoalRecord {
                name: goal_names[i].clone(),
                cost_g: Some(cost_g),
                cost_gprime: None,
                verdict: Verdict::Undecided,
                witness: None,
                stats,
            },
        }
    });
    Ok(RecognitionResult { goals: records })
}

/// Library-mode recognition: a goal name is recognized iff its library can
/// derive, within the depth bound, a terminal string containing the
/// observed terminals as a subsequence. Decided by solvability of the
/// zero-cost compiled problem; satisficing search first, with a complete
/// fallback built into the EHC procedure. The witness is the derived
/// terminal string.
pub fn recognize_library(
    libraries: &BTreeMap<String, PlanLibrary>,
    observed: &[String],
    depth: u32,
    opts: &RecognizerOptions,
) -> Result<RecognitionResult, LibraryError> {
    let entries: Vec<(&String, &PlanLibrary)> = libraries.iter().collect();
    let mut compiled = Vec::with_capacity(entries.len());
    for (_, lib) in &entries {
        compiled.push(compile(lib, &CompilationConfig { depth })?);
    }

    let indices: Vec<usize> = (0..entries.len()).collect();
    let records = run_parallel(&indices, opts.jobs, |&i| {
        let name = entries[i].0.clone();
        let comp = &compiled[i];
        let empty_stats = SearchStats {
            expanded: 0,
            generated: 0,
            time_ms: 0,
            algorithm: AlgorithmUsed::Ehc,
        };
        // A terminal this library never emits makes its marker unreachable.
        let mut tokens = Vec::with_capacity(observed.len());
        for t in observed {
            let members = comp.emitters_for(t);
            if members.is_empty() {
                return GoalRecord {
                    name,
                    cost_g: None,
                    cost_gprime: None,
                    verdict: Verdict::Rejected,
                    witness: None,
                    stats: empty_stats,
                };
            }
            tokens.push(ObsToken::MatchSet(members));
        }
        let goal = comp.problem.goal.clone().expect("compiled goal");
        let theory = Theory {
            domain: comp.problem.clone(),
            goals: vec![goal],
            obs: ObservationSequence { tokens },
        };
        let tt = compile_observations(&theory).expect("emitters exist");
        let problem = tt.problem_for_goal(0);
        let cfg = PlannerConfig {
            node_limit: opts.node_limit,
            time_limit: opts.time_limit,
            ..PlannerConfig::satisficing()
        };
        let outcome = search(&problem, &cfg);
        let stats = outcome.stats().clone();
        match outcome {
            SearchOutcome::Solved(sol) => {
                let restored = tt.restore_plan(&sol.plan);
                let witness = extract_primitive_sequence(comp, &Plan::new(restored.steps));
                GoalRecord {
                    name,
                    cost_g: Some(Cost::ZERO),
                    cost_gprime: Some(Cost::ZERO),
                    verdict: Verdict::Recognized,
                    witness: Some(witness),
                    stats,
                }
            }
            SearchOutcome::Unsolvable(_) | SearchOutcome::BoundExceeded(_) => GoalRecord {
                name,
                cost_g: None,
                cost_gprime: None,
                verdict: Verdict::Rejected,
                witness: None,
                stats,
            },
            SearchOutcome::ResourceLimit(_) => GoalRecord {
                name,
                cost_g: None,
                cost_gprime: None,
                verdict: Verdict::Undecided,
                witness: None,
                stats,
            },
        }
    });
    Ok(RecognitionResult { goals: records })
}

/// Maps `f` over `items`, splitting the work across up to `jobs` scoped
/// threads; output order matches input order.
fn run_parallel<T: Sync, R: Send, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, chunk) in slots.chunks_mut(items.len().div_ceil(jobs)).enumerate() {
            let f = &f;
            let start = w * items.len().div_ceil(jobs);
            let items = &items[start..start + chunk.len()];
            scope.spawn(move || {
                for (slot, item) in chunk.iter_mut().zip(items) {
                    *slot = Some(f(item));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.unwrap()).collect()
}
