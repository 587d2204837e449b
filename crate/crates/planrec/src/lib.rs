//! Plan recognition by compilation to classical planning.
//!
//! The toolkit turns observation sequences into planning goals, decides goal
//! compatibility by optimal-cost equality, and compiles AND/OR plan
//! libraries (context-free grammars included) into STRIPS problems whose
//! plans correspond to library derivations. A forward heuristic-search
//! planner (A*/h_max for optimal search, greedy best-first and enforced
//! hill-climbing with relaxed-plan heuristics for satisficing search) drives
//! both recognition modes.

pub mod cost;
pub mod grammar;
pub mod heuristics;
pub mod library;
pub mod obs;
pub mod recognizer;
pub mod search;
pub mod strips;

pub use cost::{Cost, ExtCost};
pub use obs::{satisfies, ObservationSequence, Theory};
pub use search::{search, Algorithm, HeuristicKind, PlannerConfig, SearchOutcome};
pub use strips::{Plan, StripsProblem};
