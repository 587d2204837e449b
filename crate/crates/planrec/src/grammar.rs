//! Context-free grammars as plan libraries.
//!
//! A grammar is read from a plain text format (`LHS -> A B | C` per line)
//! and converted into an AND/OR library: one OR node per nonterminal, one
//! AND node per production with its right-hand side totally ordered, and one
//! shared leaf per terminal symbol. Parsing a token sequence is then plan
//! recognition over the compiled library: each token is a match-set over
//! the start actions emitting that terminal. An exact-membership mode caps
//! the yield length with emission-count fluents; without the cap the
//! planner may interpolate missing tokens, turning a partial sentence into
//! a complete one.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::library::{
    compile, CompilationConfig, CompiledLibrary, LibraryError, LibraryNode, NodeKind, PlanLibrary,
};
use crate::obs::{compile_observations, ObsToken, ObservationSequence, Theory};
use crate::search::{search, AlgorithmUsed, PlannerConfig, SearchOutcome, SearchStats};
use crate::strips::{Action, ProblemBuilder, StripsProblem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    pub start: String,
    pub productions: Vec<(String, Vec<String>)>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("grammar has no productions")]
    Empty,
    #[error("line {line}: expected `LHS -> RHS1 RHS2 | RHS3`")]
    MalformedRule { line: usize },
    #[error("line {line}: empty production for `{lhs}` (epsilon rules are not supported)")]
    EmptyRhs { line: usize, lhs: String },
    #[error("start symbol `{start}` has no production")]
    StartNotDefined { start: String },
}

impl Grammar {
    /// Parses the text format: one nonterminal per line, alternatives
    /// separated by `|`, whitespace-separated case-sensitive symbols.
    /// Blank lines and `#` comments are skipped; the first left-hand side
    /// is the start symbol.
    pub fn from_text(text: &str) -> Result<Grammar, GrammarError> {
        let mut productions = Vec::new();
        let mut start: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (lhs, rest) = content
                .split_once("->")
                .ok_or(GrammarError::MalformedRule { line })?;
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.split_whitespace().count() != 1 {
                return Err(GrammarError::MalformedRule { line });
            }
            start.get_or_insert_with(|| lhs.to_string());
            for alt in rest.split('|') {
                let rhs: Vec<String> = alt.split_whitespace().map(String::from).collect();
                if rhs.is_empty() {
                    return Err(GrammarError::EmptyRhs {
                        line,
                        lhs: lhs.to_string(),
                    });
                }
                productions.push((lhs.to_string(), rhs));
            }
        }
        let start = start.ok_or(GrammarError::Empty)?;
        let g = Grammar { start, productions };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GrammarError> {
        if self.productions.is_empty() {
            return Err(GrammarError::Empty);
        }
        if !self.productions.iter().any(|(lhs, _)| *lhs == self.start) {
            return Err(GrammarError::StartNotDefined {
                start: self.start.clone(),
            });
        }
        Ok(())
    }

    /// A symbol is a nonterminal iff it appears as some left-hand side.
    pub fn nonterminals(&self) -> BTreeSet<&str> {
        self.productions.iter().map(|(lhs, _)| lhs.as_str()).collect()
    }

    pub fn is_terminal(&self, sym: &str) -> bool {
        !self.productions.iter().any(|(lhs, _)| lhs == sym)
    }

    pub fn terminals(&self) -> BTreeSet<&str> {
        let nts = self.nonterminals();
        self.productions
            .iter()
            .flat_map(|(_, rhs)| rhs.iter())
            .map(String::as_str)
            .filter(|s| !nts.contains(s))
            .collect()
    }
}

/// OR node per nonterminal, AND node per production (children in right-hand
/// side order), shared leaf per terminal. Symbols repeated within one
/// right-hand side get per-occurrence aliases, since library children are
/// sets.
pub fn cfg_to_library(g: &Grammar) -> PlanLibrary {
    let nts = g.nonterminals();
    let mut nodes: Vec<LibraryNode> = Vec::new();
    let mut or_children: HashMap<String, Vec<String>> = HashMap::new();
    let mut leaves: HashSet<String> = HashSet::new();
    let mut rule_ids: Vec<String> = Vec::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();

    for (lhs, _) in &g.productions {
        let k = counts.entry(lhs.as_str()).or_insert(0);
        *k += 1;
        rule_ids.push(format!("{lhs}__{k}"));
    }

    // Aliases for repeated nonterminal occurrences share the original's
    // AND children, so only the OR node itself is duplicated.
    let mut aliases: HashSet<String> = HashSet::new();

    for ((lhs, rhs), rule_id) in g.productions.iter().zip(&rule_ids) {
        let mut children = Vec::with_capacity(rhs.len());
        let mut occ: HashMap<&str, usize> = HashMap::new();
        for sym in rhs {
            let k = occ.entry(sym.as_str()).or_insert(0);
            *k += 1;
            let child_id = if *k == 1 {
                sym.clone()
            } else {
                format!("{sym}__occ{k}")
            };
            if nts.contains(sym.as_str()) {
                if *k > 1 {
                    aliases.insert(child_id.clone());
                    or_children.entry(child_id.clone()).or_default();
                }
            } else if leaves.insert(child_id.clone()) {
                nodes.push(LibraryNode {
                    id: child_id.clone(),
                    kind: NodeKind::Leaf,
                    children: Vec::new(),
                    order: Vec::new(),
                    symbol: Some(sym.clone()),
                });
            }
            children.push(child_id);
        }
        let order = children
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        or_children
            .entry(lhs.clone())
            .or_default()
            .push(rule_id.clone());
        nodes.push(LibraryNode {
            id: rule_id.clone(),
            kind: NodeKind::And,
            children,
            order,
            symbol: None,
        });
    }

    for alias in aliases {
        let base = alias.split("__occ").next().unwrap().to_string();
        let children = or_children.get(&base).cloned().unwrap_or_default();
        or_children.insert(alias, children);
    }
    for nt in g.productions.iter().map(|(lhs, _)| lhs).collect::<BTreeSet<_>>() {
        nodes.push(LibraryNode {
            id: nt.clone(),
            kind: NodeKind::Or,
            children: or_children.remove(nt).unwrap_or_default(),
            order: Vec::new(),
            symbol: None,
        });
    }
    let mut remaining: Vec<(String, Vec<String>)> = or_children.into_iter().collect();
    remaining.sort();
    for (id, children) in remaining {
        nodes.push(LibraryNode {
            id,
            kind: NodeKind::Or,
            children,
            order: Vec::new(),
            symbol: None,
        });
    }

    PlanLibrary {
        root: g.start.clone(),
        nodes,
    }
}

/// Independent CFG membership oracle (standard Earley algorithm, unbounded
/// derivation depth). Assumes no epsilon productions, which `Grammar`
/// guarantees.
pub fn earley_accepts(g: &Grammar, tokens: &[String]) -> bool {
    let nts = g.nonterminals();
    if tokens.iter().any(|t| nts.contains(t.as_str())) {
        return false;
    }
    // Item: (production index, dot position, origin chart index).
    type Item = (usize, usize, usize);
    let n = tokens.len();
    let mut chart: Vec<Vec<Item>> = vec![Vec::new(); n + 1];
    let mut seen: Vec<HashSet<Item>> = vec![HashSet::new(); n + 1];

    let push = |chart: &mut Vec<Vec<Item>>, seen: &mut Vec<HashSet<Item>>, k: usize, it: Item| {
        if seen[k].insert(it) {
            chart[k].push(it);
        }
    };
    for (p, (lhs, _)) in g.productions.iter().enumerate() {
        if *lhs == g.start {
            push(&mut chart, &mut seen, 0, (p, 0, 0));
        }
    }
    for k in 0..=n {
        let mut cursor = 0;
        while cursor < chart[k].len() {
            let (p, dot, origin) = chart[k][cursor];
            cursor += 1;
            let rhs = &g.productions[p].1;
            if dot < rhs.len() {
                let sym = &rhs[dot];
                if nts.contains(sym.as_str()) {
                    // Predict.
                    for (q, (lhs, _)) in g.productions.iter().enumerate() {
                        if lhs == sym {
                            push(&mut chart, &mut seen, k, (q, 0, k));
                        }
                    }
                } else if k < n && tokens[k] == *sym {
                    // Scan.
                    push(&mut chart, &mut seen, k + 1, (p, dot + 1, origin));
                }
            } else {
                // Complete: advance every item waiting on this lhs.
                let lhs = g.productions[p].0.clone();
                let waiting: Vec<Item> = chart[origin]
                    .iter()
                    .copied()
                    .filter(|&(q, d, _)| {
                        let rhs = &g.productions[q].1;
                        d < rhs.len() && rhs[d] == lhs
                    })
                    .collect();
                for (q, d, o) in waiting {
                    push(&mut chart, &mut seen, k, (q, d + 1, o));
                }
            }
        }
    }
    chart[n].iter().any(|&(p, dot, origin)| {
        origin == 0 && dot == g.productions[p].1.len() && g.productions[p].0 == g.start
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseVerdict {
    #[serde(rename = "accepted")]
    Accepted,
    #[serde(rename = "accepted-with-interpolation")]
    AcceptedWithInterpolation,
    #[serde(rename = "rejected")]
    Rejected,
    #[serde(rename = "resource-limit")]
    ResourceLimit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InsertedToken {
    /// Index into the yield.
    pub position: usize,
    pub symbol: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub verdict: ParseVerdict,
    /// Terminal string produced by the witness plan; equals the input
    /// exactly when the verdict is `accepted`.
    #[serde(rename = "yield")]
    pub yield_: Vec<String>,
    pub inserted: Vec<InsertedToken>,
    pub stats: SearchStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error(transparent)]
    Library(#[from] LibraryError),
}

/// How many extra yield positions the interpolating mode tries before
/// falling back to an uncapped search. Iterating the cap upward makes the
/// first solution one with the fewest inserted tokens.
const INTERPOLATION_SLACK: usize = 4;

/// Decides membership of `tokens` in the depth-`depth` language of the
/// grammar by planning. With `allow_missing` the planner may insert
/// terminals, accepting any complete sentence that contains the input as a
/// subsequence.
pub fn parse(
    g: &Grammar,
    tokens: &[String],
    depth: u32,
    allow_missing: bool,
    config: &PlannerConfig,
) -> Result<ParseOutcome, ParseError> {
    let zero_stats = |alg| SearchStats {
        expanded: 0,
        generated: 0,
        time_ms: 0,
        algorithm: alg,
    };
    let known_terminals: HashSet<&str> = g.terminals().into_iter().collect();
    let bad: Vec<String> = tokens
        .iter()
        .filter(|t| !known_terminals.contains(t.as_str()))
        .cloned()
        .collect();
    if !bad.is_empty() {
        return Ok(ParseOutcome {
            verdict: ParseVerdict::Rejected,
            yield_: Vec::new(),
            inserted: Vec::new(),
            stats: zero_stats(AlgorithmUsed::Bfs),
            diagnostic: Some(format!("unknown tokens: {}", bad.join(", "))),
        });
    }

    let lib = cfg_to_library(g);
    let compiled = compile(&lib, &CompilationConfig { depth })?;
    let m = tokens.len();
    let started = Instant::now();
    let mut budget = Budget::new(config, started);
    let mut total = zero_stats(AlgorithmUsed::Bfs);

    let caps: Vec<usize> = if allow_missing {
        (m..=m + INTERPOLATION_SLACK).collect()
    } else {
        vec![m]
    };
    for cap in caps {
        let attempt = solve_capped(&compiled, tokens, cap, !allow_missing, config, &mut budget);
        accumulate(&mut total, attempt.stats());
        match attempt {
            CappedOutcome::Solved(yield_, _) => {
                return Ok(finish_outcome(tokens, yield_, total));
            }
            CappedOutcome::Unsolvable(_) => {}
            CappedOutcome::ResourceLimit(_) => {
                return Ok(ParseOutcome {
                    verdict: ParseVerdict::ResourceLimit,
                    yield_: Vec::new(),
                    inserted: Vec::new(),
                    stats: total,
                    diagnostic: Some("search limits exhausted".into()),
                });
            }
        }
    }
    if allow_missing {
        // No bounded-length completion; fall back to the pure subsequence
        // encoding with unconstrained yield length.
        let attempt = solve_uncapped(&compiled, tokens, config, &mut budget);
        accumulate(&mut total, attempt.stats());
        match attempt {
            CappedOutcome::Solved(yield_, _) => return Ok(finish_outcome(tokens, yield_, total)),
            CappedOutcome::Unsolvable(_) => {}
            CappedOutcome::ResourceLimit(_) => {
                return Ok(ParseOutcome {
                    verdict: ParseVerdict::ResourceLimit,
                    yield_: Vec::new(),
                    inserted: Vec::new(),
                    stats: total,
                    diagnostic: Some("search limits exhausted".into()),
                });
            }
        }
    }
    Ok(ParseOutcome {
        verdict: ParseVerdict::Rejected,
        yield_: Vec::new(),
        inserted: Vec::new(),
        stats: total,
        diagnostic: None,
    })
}

fn finish_outcome(tokens: &[String], yield_: Vec<String>, stats: SearchStats) -> ParseOutcome {
    let inserted = inserted_tokens(tokens, &yield_);
    let verdict = if yield_ == tokens {
        ParseVerdict::Accepted
    } else {
        ParseVerdict::AcceptedWithInterpolation
    };
    ParseOutcome {
        verdict,
        yield_,
        inserted,
        stats,
        diagnostic: None,
    }
}

/// Greedy leftmost embedding of the input into the yield; every yield
/// position not used by the embedding is an insertion.
fn inserted_tokens(tokens: &[String], yield_: &[String]) -> Vec<InsertedToken> {
    let mut out = Vec::new();
    let mut next = 0usize;
    for (position, sym) in yield_.iter().enumerate() {
        if next < tokens.len() && tokens[next] == *sym {
            next += 1;
        } else {
            out.push(InsertedToken {
                position,
                symbol: sym.clone(),
            });
        }
    }
    out
}

fn accumulate(total: &mut SearchStats, s: &SearchStats) {
    total.expanded += s.expanded;
    total.generated += s.generated;
    total.time_ms += s.time_ms;
    total.algorithm = s.algorithm;
}

/// Remaining node and wall-clock budget shared across cap iterations.
struct Budget {
    nodes_left: Option<u64>,
    deadline: Option<Instant>,
}

impl Budget {
    fn new(config: &PlannerConfig, started: Instant) -> Budget {
        Budget {
            nodes_left: config.node_limit,
            deadline: config.time_limit.map(|d| started + d),
        }
    }

    fn config_for(&self, base: &PlannerConfig) -> Option<PlannerConfig> {
        let time_limit = match self.deadline {
            None => None,
            Some(d) => {
                let left = d.saturating_duration_since(Instant::now());
                if left == Duration::ZERO {
                    return None;
                }
                Some(left)
            }
        };
        if self.nodes_left == Some(0) {
            return None;
        }
        Some(PlannerConfig {
            node_limit: self.nodes_left,
            time_limit,
            ..base.clone()
        })
    }

    fn charge(&mut self, stats: &SearchStats) {
        if let Some(n) = self.nodes_left.as_mut() {
            *n = n.saturating_sub(stats.expanded);
        }
    }
}

enum CappedOutcome {
    Solved(Vec<String>, SearchStats),
    Unsolvable(SearchStats),
    ResourceLimit(SearchStats),
}

impl CappedOutcome {
    fn stats(&self) -> &SearchStats {
        match self {
            CappedOutcome::Solved(_, s)
            | CappedOutcome::Unsolvable(s)
            | CappedOutcome::ResourceLimit(s) => s,
        }
    }
}

/// Builds the yield-capped problem, compiles the token observations away,
/// and searches it. With `exact` the token at input position j may only be
/// emitted at yield position j, forcing yield = input.
fn solve_capped(
    compiled: &CompiledLibrary,
    tokens: &[String],
    cap: usize,
    exact: bool,
    config: &PlannerConfig,
    budget: &mut Budget,
) -> CappedOutcome {
    let (capped, emitters) = cap_yield(compiled, cap);
    let m = tokens.len();
    let obs_tokens: Vec<ObsToken> = tokens
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let positions: Vec<usize> = if exact {
                vec![j]
            } else {
                // Position j needs j tokens before it and m-1-j after it.
                (j..=cap - (m - j)).collect()
            };
            let mut members = Vec::new();
            for base in compiled.emitters_for(t) {
                for &k in &positions {
                    members.push(format!("{base}__at{k}"));
                }
            }
            ObsToken::MatchSet(members)
        })
        .collect();
    run_recognition(capped, &emitters, obs_tokens, config, budget)
}

/// The pure subsequence encoding: no yield-length constraint at all.
fn solve_uncapped(
    compiled: &CompiledLibrary,
    tokens: &[String],
    config: &PlannerConfig,
    budget: &mut Budget,
) -> CappedOutcome {
    let obs_tokens: Vec<ObsToken> = tokens
        .iter()
        .map(|t| ObsToken::MatchSet(compiled.emitters_for(t)))
        .collect();
    run_recognition(
        compiled.problem.clone(),
        &compiled.emitters,
        obs_tokens,
        config,
        budget,
    )
}

fn run_recognition(
    domain: StripsProblem,
    emitters: &HashMap<String, String>,
    obs_tokens: Vec<ObsToken>,
    config: &PlannerConfig,
    budget: &mut Budget,
) -> CappedOutcome {
    let goal = domain.goal.clone().expect("compiled problems have a goal");
    let theory = Theory {
        domain,
        goals: vec![goal],
        obs: ObservationSequence { tokens: obs_tokens },
    };
    let tt = compile_observations(&theory).expect("members name existing actions");
    let problem = tt.problem_for_goal(0);
    let Some(cfg) = budget.config_for(config) else {
        return CappedOutcome::ResourceLimit(SearchStats {
            expanded: 0,
            generated: 0,
            time_ms: 0,
            algorithm: AlgorithmUsed::Bfs,
        });
    };
    let outcome = search(&problem, &cfg);
    budget.charge(outcome.stats());
    match outcome {
        SearchOutcome::Solved(sol) => {
            let restored = tt.restore_plan(&sol.plan);
            let yield_ = restored
                .steps
                .iter()
                .filter_map(|s| emitters.get(s).cloned())
                .collect();
            CappedOutcome::Solved(yield_, sol.stats)
        }
        SearchOutcome::Unsolvable(s) | SearchOutcome::BoundExceeded(s) => {
            CappedOutcome::Unsolvable(s)
        }
        SearchOutcome::ResourceLimit(s) => CappedOutcome::ResourceLimit(s),
    }
}

/// Replaces every terminal-emitting action by `cap` position copies
/// (`{name}__at{k}`) threading an emission counter `emitted__k`, so no plan
/// can produce more than `cap` terminals. Returns the capped problem and
/// its emitter map.
fn cap_yield(compiled: &CompiledLibrary, cap: usize) -> (StripsProblem, HashMap<String, String>) {
    let src = &compiled.problem;
    let mut b = ProblemBuilder::new();
    for name in src.fluent_names() {
        b.fluent(name);
    }
    let counters: Vec<_> = (0..=cap).map(|k| b.fluent(&format!("emitted__{k}"))).collect();
    let mut init = src.init.clone();
    init.push(counters[0]);
    b.set_init(init);
    if let Some(g) = &src.goal {
        b.set_goal(g.clone());
    }
    let mut emitters = HashMap::new();
    for a in &src.actions {
        match compiled.emitters.get(&a.name) {
            None => b.add_action(a.clone()),
            Some(sym) => {
                for k in 0..cap {
                    let name = format!("{}__at{}", a.name, k);
                    emitters.insert(name.clone(), sym.clone());
                    let mut pre = a.pre.clone();
                    pre.push(counters[k]);
                    let mut add = a.add.clone();
                    add.push(counters[k + 1]);
                    let mut del = a.del.clone();
                    del.push(counters[k]);
                    b.add_action(Action {
                        name,
                        pre,
                        pre_neg: a.pre_neg.clone(),
                        add,
                        del,
                        cost: a.cost,
                    });
                }
            }
        }
    }
    (b.finish(), emitters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{derive_strings, validate_library};

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    const TINY: &str = "S -> a | a S\n";

    #[test]
    fn text_format_round_trip() {
        let g = Grammar::from_text("S -> NP VP\nNP -> n\nVP -> v | v NP\n").unwrap();
        assert_eq!(g.start, "S");
        assert_eq!(g.productions.len(), 4);
        assert_eq!(
            g.nonterminals().into_iter().collect::<Vec<_>>(),
            ["NP", "S", "VP"]
        );
        assert_eq!(g.terminals().into_iter().collect::<Vec<_>>(), ["n", "v"]);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let g = Grammar::from_text("# a grammar\n\nS -> a # trailing\n").unwrap();
        assert_eq!(g.productions, vec![("S".into(), vec!["a".into()])]);
    }

    #[test]
    fn epsilon_rule_is_rejected() {
        assert!(matches!(
            Grammar::from_text("S -> a |\n"),
            Err(GrammarError::EmptyRhs { .. })
        ));
        assert!(matches!(
            Grammar::from_text("S ->\n"),
            Err(GrammarError::EmptyRhs { .. })
        ));
    }

    #[test]
    fn malformed_line_is_rejected() {
        assert!(matches!(
            Grammar::from_text("S a b\n"),
            Err(GrammarError::MalformedRule { line: 1 })
        ));
    }

    #[test]
    fn single_production_gives_three_nodes() {
        let g = Grammar::from_text("S -> a\n").unwrap();
        let lib = cfg_to_library(&g);
        assert!(validate_library(&lib).is_empty());
        assert_eq!(lib.nodes.len(), 3);
        assert_eq!(lib.root, "S");
    }

    #[test]
    fn rhs_order_becomes_child_chain() {
        let g = Grammar::from_text("A -> B C\nB -> b\nC -> c\n").unwrap();
        let lib = cfg_to_library(&g);
        let rule = lib.node("A__1").unwrap();
        assert_eq!(rule.children, vec!["B", "C"]);
        assert_eq!(rule.order, vec![("B".to_string(), "C".to_string())]);
    }

    #[test]
    fn repeated_symbols_get_occurrence_aliases() {
        let g = Grammar::from_text("S -> a a | S S\n").unwrap();
        let lib = cfg_to_library(&g);
        assert!(validate_library(&lib).is_empty());
        let dup_or = lib.node("S__occ2").unwrap();
        assert_eq!(dup_or.kind, NodeKind::Or);
        assert_eq!(dup_or.children, lib.node("S").unwrap().children);
        let dup_leaf = lib.node("a__occ2").unwrap();
        assert_eq!(dup_leaf.symbol.as_deref(), Some("a"));
        // Both derivations survive the aliasing.
        let strings = derive_strings(&lib, 6, 4);
        assert!(strings.contains(&toks("a a")));
        assert!(strings.contains(&toks("a a a a")));
    }

    #[test]
    fn earley_accepts_matches_language() {
        let g = Grammar::from_text(TINY).unwrap();
        assert!(earley_accepts(&g, &toks("a")));
        assert!(earley_accepts(&g, &toks("a a a")));
        assert!(!earley_accepts(&g, &toks("")));
        assert!(!earley_accepts(&g, &toks("b")));
        assert!(!earley_accepts(&g, &toks("a b")));
    }

    #[test]
    fn earley_handles_ambiguity_and_recursion() {
        let g = Grammar::from_text("E -> E plus E | n\n").unwrap();
        assert!(earley_accepts(&g, &toks("n plus n plus n")));
        assert!(!earley_accepts(&g, &toks("n plus")));
    }

    #[test]
    fn earley_agrees_with_derive_strings() {
        let g = Grammar::from_text("S -> a S b | a b\n").unwrap();
        let lib = cfg_to_library(&g);
        let strings = derive_strings(&lib, 8, 6);
        for s in &strings {
            assert!(earley_accepts(&g, s), "derived string {s:?} rejected");
        }
        assert!(strings.contains(&toks("a b")));
        assert!(strings.contains(&toks("a a b b")));
        assert!(!earley_accepts(&g, &toks("a a b")));
    }

    #[test]
    fn parse_exact_accepts_member() {
        let g = Grammar::from_text(TINY).unwrap();
        let out = parse(&g, &toks("a a"), 6, false, &PlannerConfig::satisficing()).unwrap();
        assert_eq!(out.verdict, ParseVerdict::Accepted);
        assert_eq!(out.yield_, toks("a a"));
        assert!(out.inserted.is_empty());
    }

    #[test]
    fn parse_exact_rejects_non_member() {
        let g = Grammar::from_text("S -> a b\n").unwrap();
        let out = parse(&g, &toks("a"), 4, false, &PlannerConfig::satisficing()).unwrap();
        assert_eq!(out.verdict, ParseVerdict::Rejected);
        let out = parse(&g, &toks("b a"), 4, false, &PlannerConfig::satisficing()).unwrap();
        assert_eq!(out.verdict, ParseVerdict::Rejected);
    }

    #[test]
    fn parse_interpolates_missing_token() {
        let g = Grammar::from_text("S -> a b c\n").unwrap();
        let out = parse(&g, &toks("a c"), 4, true, &PlannerConfig::satisficing()).unwrap();
        assert_eq!(out.verdict, ParseVerdict::AcceptedWithInterpolation);
        assert_eq!(out.yield_, toks("a b c"));
        assert_eq!(out.inserted.len(), 1);
        assert_eq!(out.inserted[0].symbol, "b");
        assert_eq!(out.inserted[0].position, 1);
    }

    #[test]
    fn parse_interpolation_reports_exact_match_as_accepted() {
        let g = Grammar::from_text("S -> a b\n").unwrap();
        let out = parse(&g, &toks("a b"), 4, true, &PlannerConfig::satisficing()).unwrap();
        assert_eq!(out.verdict, ParseVerdict::Accepted);
    }

    #[test]
    fn parse_rejects_unknown_token_with_diagnostic() {
        let g = Grammar::from_text("S -> a\n").unwrap();
        let out = parse(&g, &toks("a zz"), 4, false, &PlannerConfig::satisficing()).unwrap();
        assert_eq!(out.verdict, ParseVerdict::Rejected);
        assert!(out.diagnostic.unwrap().contains("zz"));
    }

    #[test]
    fn parse_respects_node_limit() {
        let g = Grammar::from_text(TINY).unwrap();
        let cfg = PlannerConfig {
            node_limit: Some(1),
            ..PlannerConfig::satisficing()
        };
        let out = parse(&g, &toks("a a a a"), 10, false, &cfg).unwrap();
        assert_eq!(out.verdict, ParseVerdict::ResourceLimit);
    }

    #[test]
    fn input_embeds_in_interpolated_yield() {
        let g = Grammar::from_text("S -> x a y b z\n").unwrap();
        let input = toks("a b");
        let out = parse(&g, &input, 4, true, &PlannerConfig::satisficing()).unwrap();
        assert_eq!(out.verdict, ParseVerdict::AcceptedWithInterpolation);
        let mut it = out.yield_.iter();
        assert!(input.iter().all(|t| it.any(|y| y == t)));
        assert!(earley_accepts(&g, &out.yield_));
    }
}
