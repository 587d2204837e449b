//! AND/OR plan libraries and their compilation into STRIPS problems.
//!
//! A library is a rooted ordered AND/OR graph: leaves are primitive tasks,
//! OR nodes are non-primitive tasks, AND nodes are decomposition methods
//! whose children may be partially ordered. Graphs may be cyclic, which
//! makes context-free grammars a special case. The compilation emulates a
//! derivation stack with `started(n,i)`, `finished(n,i)` and `top(i)`
//! fluents for levels `i = 0..N`: start actions push a child one level up,
//! end actions pop and record completion one level down. All action costs
//! are zero, so every plan of a compiled problem is optimal and satisficing
//! search decides compatibility.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::Cost;
use crate::strips::{compile_negation, Action, Plan, ProblemBuilder, StripsProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    And,
    Or,
    Leaf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LibraryNode {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<String>,
    /// Pairs (a, b) meaning child a must come before child b (AND only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub order: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
}

impl LibraryNode {
    pub fn leaf(id: &str, symbol: &str) -> LibraryNode {
        LibraryNode {
            id: id.to_string(),
            kind: NodeKind::Leaf,
            children: Vec::new(),
            order: Vec::new(),
            symbol: Some(symbol.to_string()),
        }
    }

    pub fn or_node(id: &str, children: Vec<&str>) -> LibraryNode {
        LibraryNode {
            id: id.to_string(),
            kind: NodeKind::Or,
            children: children.into_iter().map(String::from).collect(),
            order: Vec::new(),
            symbol: None,
        }
    }

    pub fn and_node(id: &str, children: Vec<&str>, order: Vec<(&str, &str)>) -> LibraryNode {
        LibraryNode {
            id: id.to_string(),
            kind: NodeKind::And,
            children: children.into_iter().map(String::from).collect(),
            order: order
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            symbol: None,
        }
    }
}

/// Rooted AND/OR graph; the root is an OR node naming the goal task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanLibrary {
    pub root: String,
    pub nodes: Vec<LibraryNode>,
}

impl PlanLibrary {
    pub fn node(&self, id: &str) -> Option<&LibraryNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Terminal symbols of all leaves.
    pub fn terminals(&self) -> BTreeSet<String> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Leaf)
            .filter_map(|n| n.symbol.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LibraryDiagnostic {
    MissingRoot { root: String },
    RootNotOr { root: String },
    DuplicateNodeId { id: String },
    UnknownChild { node: String, child: String },
    DuplicateChild { node: String, child: String },
    BadChildKind { node: String, child: String },
    LeafWithChildren { node: String },
    LeafWithoutSymbol { node: String },
    SymbolOnInnerNode { node: String },
    OrderOnNonAndNode { node: String },
    OrderNamesNonChild { node: String, name: String },
    OrderCycle { node: String },
}

impl fmt::Display for LibraryDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use LibraryDiagnostic::*;
        match self {
            MissingRoot { root } => write!(f, "root node `{root}` does not exist"),
            RootNotOr { root } => write!(f, "root node `{root}` is not an OR node"),
            DuplicateNodeId { id } => write!(f, "node id `{id}` declared more than once"),
            UnknownChild { node, child } => {
                write!(f, "node `{node}` references unknown child `{child}`")
            }
            DuplicateChild { node, child } => {
                write!(f, "node `{node}` lists child `{child}` more than once")
            }
            BadChildKind { node, child } => write!(
                f,
                "node `{node}` has child `{child}` of a kind its own kind does not allow"
            ),
            LeafWithChildren { node } => write!(f, "leaf `{node}` has children"),
            LeafWithoutSymbol { node } => write!(f, "leaf `{node}` has no terminal symbol"),
            SymbolOnInnerNode { node } => write!(f, "non-leaf `{node}` carries a terminal symbol"),
            OrderOnNonAndNode { node } => write!(f, "non-AND node `{node}` has an order"),
            OrderNamesNonChild { node, name } => {
                write!(f, "order of `{node}` names `{name}` which is not a child")
            }
            OrderCycle { node } => write!(f, "order of `{node}` is cyclic"),
        }
    }
}

/// Checks every structural invariant; empty iff the library is well-formed.
pub fn validate_library(lib: &PlanLibrary) -> Vec<LibraryDiagnostic> {
    use LibraryDiagnostic::*;
    let mut out = Vec::new();
    let mut by_id: HashMap<&str, &LibraryNode> = HashMap::new();
    for n in &lib.nodes {
        if by_id.insert(n.id.as_str(), n).is_some() {
            out.push(DuplicateNodeId { id: n.id.clone() });
        }
    }
    match by_id.get(lib.root.as_str()) {
        None => out.push(MissingRoot {
            root: lib.root.clone(),
        }),
        Some(r) if r.kind != NodeKind::Or => out.push(RootNotOr {
            root: lib.root.clone(),
        }),
        _ => {}
    }
    for n in &lib.nodes {
        if n.kind == NodeKind::Leaf {
            if !n.children.is_empty() {
                out.push(LeafWithChildren { node: n.id.clone() });
            }
            if n.symbol.is_none() {
                out.push(LeafWithoutSymbol { node: n.id.clone() });
            }
        } else if n.symbol.is_some() {
            out.push(SymbolOnInnerNode { node: n.id.clone() });
        }
        let mut seen = HashSet::new();
        for c in &n.children {
            if !seen.insert(c.as_str()) {
                out.push(DuplicateChild {
                    node: n.id.clone(),
                    child: c.clone(),
                });
            }
            match by_id.get(c.as_str()) {
                None => out.push(UnknownChild {
                    node: n.id.clone(),
                    child: c.clone(),
                }),
                Some(child) => {
                    let ok = match n.kind {
                        NodeKind::And => matches!(child.kind, NodeKind::Or | NodeKind::Leaf),
                        NodeKind::Or => matches!(child.kind, NodeKind::And | NodeKind::Leaf),
                        NodeKind::Leaf => false,
                    };
                    if !ok && n.kind != NodeKind::Leaf {
                        out.push(BadChildKind {
                            node: n.id.clone(),
                            child: c.clone(),
                        });
                    }
                }
            }
        }
        if !n.order.is_empty() {
            if n.kind != NodeKind::And {
                out.push(OrderOnNonAndNode { node: n.id.clone() });
            }
            for (a, b) in &n.order {
                for name in [a, b] {
                    if !n.children.contains(name) {
                        out.push(OrderNamesNonChild {
                            node: n.id.clone(),
                            name: name.clone(),
                        });
                    }
                }
            }
            if order_has_cycle(&n.children, &n.order) {
                out.push(OrderCycle { node: n.id.clone() });
            }
        }
    }
    out
}

fn order_has_cycle(children: &[String], order: &[(String, String)]) -> bool {
    // Kahn's algorithm over the child precedence graph.
    let idx: HashMap<&str, usize> = children.iter().map(|c| c.as_str()).zip(0..).collect();
    let mut indeg = vec![0usize; children.len()];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); children.len()];
    for (a, b) in order {
        if let (Some(&i), Some(&j)) = (idx.get(a.as_str()), idx.get(b.as_str())) {
            succ[i].push(j);
            indeg[j] += 1;
        }
    }
    let mut queue: Vec<usize> = (0..children.len()).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = queue.pop() {
        seen += 1;
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                queue.push(j);
            }
        }
    }
    seen != children.len()
}

/// Compilation parameters: N bounds the maximum stack level, i.e. the
/// recursion depth of the derivation. For acyclic libraries the graph depth
/// suffices; a too-small N is not an error, it just excludes derivations.
#[derive(Debug, Clone, Copy)]
pub struct CompilationConfig {
    pub depth: u32,
}

#[derive(Debug, Clone, Error)]
pub enum LibraryError {
    #[error("invalid library: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidLibrary(Vec<LibraryDiagnostic>),
    #[error("depth bound must be at least 1")]
    BadDepth,
}

/// A compiled library problem plus the bookkeeping needed to read plans
/// back as terminal strings.
#[derive(Debug, Clone)]
pub struct CompiledLibrary {
    /// Negation-free STRIPS problem with goal `finished(root, 0)` and all
    /// action costs zero.
    pub problem: StripsProblem,
    /// Action name -> terminal symbol, for every terminal-emitting start.
    pub emitters: HashMap<String, String>,
    pub depth: u32,
    pub library_nodes: usize,
}

impl CompiledLibrary {
    /// All emitting actions for one terminal symbol, in a stable order.
    /// These are the observation match-sets of library-mode recognition.
    pub fn emitters_for(&self, terminal: &str) -> Vec<String> {
        let mut v: Vec<String> = self
            .emitters
            .iter()
            .filter(|(_, sym)| sym.as_str() == terminal)
            .map(|(name, _)| name.clone())
            .collect();
        v.sort();
        v
    }
}

fn started(n: &str, i: u32) -> String {
    format!("started__{n}__{i}")
}
fn finished(n: &str, i: u32) -> String {
    format!("finished__{n}__{i}")
}
fn top(i: u32) -> String {
    format!("top__{i}")
}

/// Compiles the library into the depth-bounded STRIPS problem. Negative
/// preconditions of the encoding are compiled away before returning.
pub fn compile(lib: &PlanLibrary, cfg: &CompilationConfig) -> Result<CompiledLibrary, LibraryError> {
    let diags = validate_library(lib);
    if !diags.is_empty() {
        return Err(LibraryError::InvalidLibrary(diags));
    }
    if cfg.depth == 0 {
        return Err(LibraryError::BadDepth);
    }
    let n_levels = cfg.depth; // levels run 0..=depth
    let by_id: HashMap<&str, &LibraryNode> = lib.nodes.iter().map(|n| (n.id.as_str(), n)).collect();

    let mut b = ProblemBuilder::new();
    // The full fluent universe, declared up front for every node and level.
    for i in 0..=n_levels {
        b.fluent(&top(i));
    }
    for node in &lib.nodes {
        for i in 0..=n_levels {
            b.fluent(&started(&node.id, i));
            b.fluent(&finished(&node.id, i));
        }
    }

    // Stack starts empty at level 0 with the root task activated.
    let init = vec![b.fluent(&top(0)), b.fluent(&started(&lib.root, 0))];
    b.set_init(init);
    let goal = vec![b.fluent(&finished(&lib.root, 0))];
    b.set_goal(goal);

    let mut emitters: HashMap<String, String> = HashMap::new();
    let zero = Cost::ZERO;

    for node in &lib.nodes {
        match node.kind {
            NodeKind::Leaf => {}
            NodeKind::And => {
                for child_id in &node.children {
                    let child = by_id[child_id.as_str()];
                    let predecessors: Vec<&String> = node
                        .order
                        .iter()
                        .filter(|(_, b)| b == child_id)
                        .map(|(a, _)| a)
                        .collect();
                    let leaf_child = child.kind == NodeKind::Leaf;
                    let max_i = if leaf_child { n_levels } else { n_levels - 1 };
                    for i in 0..=max_i {
                        let name = format!("start__{}__{}__{}", node.id, child_id, i);
                        let mut pre = vec![b.fluent(&top(i)), b.fluent(&started(&node.id, i))];
                        // Child not already completed within this activation.
                        let mut pre_neg = vec![b.fluent(&finished(child_id, i))];
                        for d in &predecessors {
                            pre.push(b.fluent(&finished(d, i)));
                        }
                        if i < n_levels {
                            for d in &node.children {
                                pre_neg.push(b.fluent(&started(d, i + 1)));
                            }
                        }
                        let (add, del) = if leaf_child {
                            // Terminal children execute in place.
                            emitters.insert(name.clone(), child.symbol.clone().unwrap());
                            (vec![b.fluent(&finished(child_id, i))], vec![])
                        } else {
                            let add = vec![
                                b.fluent(&top(i + 1)),
                                b.fluent(&started(child_id, i + 1)),
                            ];
                            (add, vec![b.fluent(&top(i))])
                        };
                        b.add_action(Action {
                            name,
                            pre,
                            pre_neg,
                            add,
                            del,
                            cost: zero,
                        });
                    }
                }
                // AND end: all children finished at this level; the frame is
                // wiped (Del = Pre) and completion recorded one level down.
                for i in 1..=n_levels {
                    let mut pre = vec![b.fluent(&top(i)), b.fluent(&started(&node.id, i))];
                    for c in &node.children {
                        pre.push(b.fluent(&finished(c, i)));
                    }
                    let add = vec![b.fluent(&finished(&node.id, i - 1)), b.fluent(&top(i - 1))];
                    b.add_action(Action {
                        name: format!("end__{}__{}", node.id, i),
                        pre: pre.clone(),
                        pre_neg: vec![],
                        add,
                        del: pre,
                        cost: zero,
                    });
                }
            }
            NodeKind::Or => {
                let is_root = node.id == lib.root;
                for child_id in &node.children {
                    let child = by_id[child_id.as_str()];
                    if child.kind == NodeKind::Leaf {
                        // Leaf child of an OR completes the task in place:
                        // start and end are fused into one emitting action.
                        for i in 1..=n_levels {
                            let name = format!("start__{}__{}__{}", node.id, child_id, i);
                            emitters.insert(name.clone(), child.symbol.clone().unwrap());
                            let pre =
                                vec![b.fluent(&top(i)), b.fluent(&started(&node.id, i))];
                            let pre_neg = node
                                .children
                                .iter()
                                .map(|d| finished(d, i))
                                .map(|f| b.fluent(&f))
                                .collect();
                            let add = vec![
                                b.fluent(&finished(&node.id, i - 1)),
                                b.fluent(&top(i - 1)),
                            ];
                            b.add_action(Action {
                                name,
                                pre: pre.clone(),
                                pre_neg,
                                add,
                                del: pre,
                                cost: zero,
                            });
                        }
                        if is_root {
                            let name = format!("start__{}__{}__0", node.id, child_id);
                            emitters.insert(name.clone(), child.symbol.clone().unwrap());
                            let pre_neg = node
                                .children
                                .iter()
                                .map(|d| finished(d, 0))
                                .map(|f| b.fluent(&f))
                                .collect();
                            let pre = vec![b.fluent(&top(0)), b.fluent(&started(&node.id, 0))];
                            let add = vec![b.fluent(&finished(&node.id, 0))];
                            let del = vec![b.fluent(&started(&node.id, 0))];
                            b.add_action(Action {
                                name,
                                pre,
                                pre_neg,
                                add,
                                del,
                                cost: zero,
                            });
                        }
                        continue;
                    }
                    // Non-terminal (AND) child: push one level.
                    for i in 0..n_levels {
                        let mut pre_neg = Vec::new();
                        for d in &node.children {
                            // One alternative per activation.
                            pre_neg.push(b.fluent(&finished(d, i)));
                            pre_neg.push(b.fluent(&finished(d, i + 1)));
                            pre_neg.push(b.fluent(&started(d, i + 1)));
                        }
                        let pre = vec![b.fluent(&top(i)), b.fluent(&started(&node.id, i))];
                        let add =
                            vec![b.fluent(&top(i + 1)), b.fluent(&started(child_id, i + 1))];
                        let del = vec![b.fluent(&top(i))];
                        b.add_action(Action {
                            name: format!("start__{}__{}__{}", node.id, child_id, i),
                            pre,
                            pre_neg,
                            add,
                            del,
                            cost: zero,
                        });
                    }
                    // OR end, one per (node, child, level).
                    for i in 1..=n_levels {
                        let pre = vec![
                            b.fluent(&top(i)),
                            b.fluent(&started(&node.id, i)),
                            b.fluent(&finished(child_id, i)),
                        ];
                        let add = vec![
                            b.fluent(&finished(&node.id, i - 1)),
                            b.fluent(&top(i - 1)),
                        ];
                        b.add_action(Action {
                            name: format!("end__{}__{}__{}", node.id, child_id, i),
                            pre: pre.clone(),
                            pre_neg: vec![],
                            add,
                            del: pre,
                            cost: zero,
                        });
                    }
                    if is_root {
                        // Root end at level 0 records finished(root, 0); the
                        // stack stays at level 0.
                        let pre = vec![
                            b.fluent(&top(0)),
                            b.fluent(&started(&node.id, 0)),
                            b.fluent(&finished(child_id, 0)),
                        ];
                        let add = vec![b.fluent(&finished(&node.id, 0))];
                        let del = vec![
                            b.fluent(&started(&node.id, 0)),
                            b.fluent(&finished(child_id, 0)),
                        ];
                        b.add_action(Action {
                            name: format!("end__{}__{}__0", node.id, child_id),
                            pre,
                            pre_neg: vec![],
                            add,
                            del,
                            cost: zero,
                        });
                    }
                }
            }
        }
    }

    let problem = compile_negation(&b.finish());
    Ok(CompiledLibrary {
        problem,
        emitters,
        depth: cfg.depth,
        library_nodes: lib.nodes.len(),
    })
}

/// The f_L projection: keeps, in plan order, the start actions whose child
/// is a leaf and maps each to the leaf's terminal symbol.
pub fn extract_primitive_sequence(compiled: &CompiledLibrary, plan: &Plan) -> Vec<String> {
    plan.steps
        .iter()
        .filter_map(|s| compiled.emitters.get(s).cloned())
        .collect()
}

/// Exhaustively enumerates the strings derivable from the root with stack
/// depth at most `depth` (the same metric the compilation uses) and yield
/// length at most `max_len`. Partially ordered AND children expand into all
/// linearizations compatible with the order.
pub fn derive_strings(lib: &PlanLibrary, depth: u32, max_len: usize) -> BTreeSet<Vec<String>> {
    assert!(
        validate_library(lib).is_empty(),
        "derive_strings needs a valid library"
    );
    let by_id: HashMap<&str, &LibraryNode> = lib.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let mut memo: HashMap<(String, u32, usize), BTreeSet<Vec<String>>> = HashMap::new();
    yields(&by_id, &lib.root, 0, depth, max_len, &mut memo)
}

fn yields(
    by_id: &HashMap<&str, &LibraryNode>,
    id: &str,
    level: u32,
    depth: u32,
    budget: usize,
    memo: &mut HashMap<(String, u32, usize), BTreeSet<Vec<String>>>,
) -> BTreeSet<Vec<String>> {
    let key = (id.to_string(), level, budget);
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    let node = by_id[id];
    let result: BTreeSet<Vec<String>> = match node.kind {
        NodeKind::Leaf => {
            if budget >= 1 {
                BTreeSet::from([vec![node.symbol.clone().unwrap()]])
            } else {
                BTreeSet::new()
            }
        }
        NodeKind::Or => {
            let mut out = BTreeSet::new();
            for child_id in &node.children {
                let child = by_id[child_id.as_str()];
                if child.kind == NodeKind::Leaf {
                    if budget >= 1 {
                        out.insert(vec![child.symbol.clone().unwrap()]);
                    }
                } else if level + 1 <= depth {
                    out.extend(yields(by_id, child_id, level + 1, depth, budget, memo));
                }
            }
            out
        }
        NodeKind::And => {
            let mut out = BTreeSet::new();
            for perm in linearizations(&node.children, &node.order) {
                let mut acc: BTreeSet<Vec<String>> = BTreeSet::from([vec![]]);
                for child_id in perm {
                    let mut next_acc = BTreeSet::new();
                    for prefix in &acc {
                        let remaining = budget - prefix.len();
                        let child = by_id[child_id.as_str()];
                        let options: BTreeSet<Vec<String>> = if child.kind == NodeKind::Leaf {
                            if remaining >= 1 {
                                BTreeSet::from([vec![child.symbol.clone().unwrap()]])
                            } else {
                                BTreeSet::new()
                            }
                        } else if level + 1 <= depth {
                            yields(by_id, child_id, level + 1, depth, remaining, memo)
                        } else {
                            BTreeSet::new()
                        };
                        for opt in options {
                            let mut combined = prefix.clone();
                            combined.extend(opt);
                            next_acc.insert(combined);
                        }
                    }
                    acc = next_acc;
                    if acc.is_empty() {
                        break;
                    }
                }
                out.extend(acc);
            }
            out
        }
    };
    memo.insert(key, result.clone());
    result
}

/// All total orders of `children` compatible with the given partial order.
fn linearizations<'a>(
    children: &'a [String],
    order: &[(String, String)],
) -> Vec<Vec<&'a String>> {
    if order.is_empty() && children.len() <= 1 {
        return vec![children.iter().collect()];
    }
    let mut out = Vec::new();
    let mut used = vec![false; children.len()];
    let mut current: Vec<&String> = Vec::with_capacity(children.len());
    fn rec<'a>(
        children: &'a [String],
        order: &[(String, String)],
        used: &mut Vec<bool>,
        current: &mut Vec<&'a String>,
        out: &mut Vec<Vec<&'a String>>,
    ) {
        if current.len() == children.len() {
            out.push(current.clone());
            return;
        }
        for (i, c) in children.iter().enumerate() {
            if used[i] {
                continue;
            }
            // All predecessors of c must already be placed.
            let ok = order
                .iter()
                .filter(|(_, b)| b == c)
                .all(|(a, _)| current.iter().any(|p| *p == a));
            if !ok {
                continue;
            }
            used[i] = true;
            current.push(c);
            rec(children, order, used, current, out);
            current.pop();
            used[i] = false;
        }
    }
    rec(children, order, &mut used, &mut current, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Wire format

/// JSON library file: `{"root": id, "nodes": [{"id", "kind":
/// "and"|"or"|"leaf", "children"?, "order"?, "symbol"?}]}`.
pub type LibraryFile = PlanLibrary;
