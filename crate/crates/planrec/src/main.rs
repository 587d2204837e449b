//! Command-line interface: plan, recognize, parse, compile.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use planrec::grammar::{cfg_to_library, parse as parse_tokens, Grammar, ParseVerdict};
use planrec::library::{compile as compile_library, CompilationConfig, PlanLibrary};
use planrec::obs::{Theory, TheoryFile};
use planrec::recognizer::{optimal_goal_set, recognize_library, RecognizerOptions};
use planrec::search::{search, Algorithm, HeuristicKind, PlannerConfig, SearchOutcome};
use planrec::strips::{compile_negation, validate_plan, validate_problem, Plan, ProblemFile, StripsProblem};

const EXIT_OK: u8 = 0;
const EXIT_NO_SOLUTION: u8 = 1;
const EXIT_RESOURCE_LIMIT: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_BAD_INPUT: u8 = 65;

#[derive(Parser)]
#[command(name = "planrec", about = "Plan recognition as classical planning", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SearchFlags {
    /// Search algorithm.
    #[arg(long, value_enum, default_value = "astar")]
    algorithm: CliAlgorithm,
    /// Heuristic estimator.
    #[arg(long, value_enum, default_value = "hmax")]
    heuristic: CliHeuristic,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// Expansion budget.
    #[arg(long)]
    node_limit: Option<u64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CliAlgorithm {
    Astar,
    Gbfs,
    Ehc,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CliHeuristic {
    Hmax,
    Hadd,
    Ff,
}

impl SearchFlags {
    fn config(&self) -> PlannerConfig {
        PlannerConfig {
            algorithm: match self.algorithm {
                CliAlgorithm::Astar => Algorithm::AStar,
                CliAlgorithm::Gbfs => Algorithm::Gbfs,
                CliAlgorithm::Ehc => Algorithm::Ehc,
            },
            heuristic: match self.heuristic {
                CliHeuristic::Hmax => HeuristicKind::HMax,
                CliHeuristic::Hadd => HeuristicKind::HAdd,
                CliHeuristic::Ff => HeuristicKind::Ff,
            },
            cost_bound: None,
            node_limit: self.node_limit,
            time_limit: Some(Duration::from_secs_f64(self.timeout)),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve a STRIPS problem, or validate a plan against it with --check.
    Plan {
        /// Problem JSON file.
        problem: PathBuf,
        /// Plan JSON file to validate instead of searching.
        #[arg(long)]
        check: Option<PathBuf>,
        #[command(flatten)]
        flags: SearchFlags,
        /// Write the result JSON to this file as well as stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Goal recognition: a theory file, or a library directory plus an
    /// observation file.
    Recognize {
        /// Theory JSON file (mutually exclusive with --libraries).
        theory: Option<PathBuf>,
        /// Directory of *.library.json goal candidates.
        #[arg(long, conflicts_with = "theory", requires = "obs")]
        libraries: Option<PathBuf>,
        /// JSON array of observed terminal symbols.
        #[arg(long, requires = "libraries")]
        obs: Option<PathBuf>,
        /// Derivation depth bound for library compilation.
        #[arg(long, default_value_t = 10)]
        depth: u32,
        /// Worker threads for goal-level parallelism.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        flags: SearchFlags,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Parse a token sequence against a grammar by planning.
    Parse {
        /// Grammar text file.
        grammar: PathBuf,
        /// Input tokens (a single quoted sentence is split on whitespace).
        tokens: Vec<String>,
        /// Derivation depth bound.
        #[arg(long, default_value_t = 10)]
        depth: u32,
        /// Allow the planner to insert missing tokens.
        #[arg(long)]
        allow_missing: bool,
        #[command(flatten)]
        flags: SearchFlags,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compile a plan library or grammar into a STRIPS problem.
    Compile {
        /// Library JSON file or grammar text file.
        input: PathBuf,
        /// Derivation depth bound.
        #[arg(long, default_value_t = 10)]
        depth: u32,
        /// Write the problem JSON here; the summary always goes to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Plan {
            problem,
            check,
            flags,
            output,
        } => cmd_plan(&problem, check.as_deref(), &flags, output.as_deref()),
        Command::Recognize {
            theory,
            libraries,
            obs,
            depth,
            jobs,
            flags,
            output,
        } => cmd_recognize(
            theory.as_deref(),
            libraries.as_deref(),
            obs.as_deref(),
            depth,
            jobs,
            &flags,
            output.as_deref(),
        ),
        Command::Parse {
            grammar,
            tokens,
            depth,
            allow_missing,
            flags,
            output,
        } => cmd_parse(&grammar, &tokens, depth, allow_missing, &flags, output.as_deref()),
        Command::Compile {
            input,
            depth,
            output,
        } => cmd_compile(&input, depth, output.as_deref()),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_BAD_INPUT)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_problem(path: &Path) -> Result<StripsProblem, String> {
    let file: ProblemFile = read_json(path)?;
    let problem = StripsProblem::from_file(&file);
    let diags = validate_problem(&problem);
    if !diags.is_empty() {
        let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(format!("{}: {}", path.display(), lines.join("; ")));
    }
    Ok(problem)
}

/// Prints without panicking when stdout is a closed pipe.
fn print_line(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    print_line(&text);
    if let Some(path) = output {
        std::fs::write(path, format!("{text}\n"))
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

fn cmd_plan(
    problem_path: &Path,
    check: Option<&Path>,
    flags: &SearchFlags,
    output: Option<&Path>,
) -> Result<u8, String> {
    let problem = load_problem(problem_path)?;
    if problem.goal.is_none() {
        return Err(format!("{}: problem has no goal", problem_path.display()));
    }

    if let Some(plan_path) = check {
        let value: serde_json::Value = read_json(plan_path)?;
        let steps = value
            .get("plan")
            .cloned()
            .unwrap_or(value);
        let steps: Vec<String> = serde_json::from_value(steps)
            .map_err(|e| format!("{}: expected a plan array: {e}", plan_path.display()))?;
        let plan = Plan::new(steps);
        return match validate_plan(&problem, &plan) {
            Ok(cost) => {
                emit(&json!({ "valid": true, "cost": cost, "length": plan.steps.len() }), output)?;
                Ok(EXIT_OK)
            }
            Err(e) => {
                emit(&json!({ "valid": false, "reason": e.to_string() }), output)?;
                Ok(EXIT_NO_SOLUTION)
            }
        };
    }

    let searchable = compile_negation(&problem);
    match search(&searchable, &flags.config()) {
        SearchOutcome::Solved(sol) => {
            emit(
                &json!({ "plan": sol.plan.steps, "cost": sol.cost, "stats": sol.stats }),
                output,
            )?;
            Ok(EXIT_OK)
        }
        SearchOutcome::Unsolvable(stats) | SearchOutcome::BoundExceeded(stats) => {
            emit(&json!({ "plan": null, "reason": "unsolvable", "stats": stats }), output)?;
            Ok(EXIT_NO_SOLUTION)
        }
        SearchOutcome::ResourceLimit(stats) => {
            emit(&json!({ "plan": null, "reason": "resource-limit", "stats": stats }), output)?;
            Ok(EXIT_RESOURCE_LIMIT)
        }
    }
}

fn cmd_recognize(
    theory: Option<&Path>,
    libraries: Option<&Path>,
    obs: Option<&Path>,
    depth: u32,
    jobs: usize,
    flags: &SearchFlags,
    output: Option<&Path>,
) -> Result<u8, String> {
    let opts = RecognizerOptions {
        node_limit: flags.node_limit,
        time_limit: Some(Duration::from_secs_f64(flags.timeout)),
        reuse_bound: true,
        jobs,
    };
    let result = match (theory, libraries) {
        (Some(path), None) => {
            let file: TheoryFile = read_json(path)?;
            let theory = Theory::from_file(&file).map_err(|e| format!("{}: {e}", path.display()))?;
            optimal_goal_set(&theory, &opts).map_err(|e| e.to_string())?
        }
        (None, Some(dir)) => {
            let obs_path = obs.expect("clap enforces --obs with --libraries");
            let observed: Vec<String> = read_json(obs_path)?;
            let mut libs = BTreeMap::new();
            let entries = std::fs::read_dir(dir)
                .map_err(|e| format!("cannot read {}: {e}", dir.display()))?;
            for entry in entries {
                let path = entry.map_err(|e| e.to_string())?.path();
                let name = match path.file_name().and_then(|n| n.to_str()) {
                    Some(n) if n.ends_with(".library.json") => {
                        n.trim_end_matches(".library.json").to_string()
                    }
                    _ => continue,
                };
                let lib: PlanLibrary = read_json(&path)?;
                libs.insert(name, lib);
            }
            if libs.is_empty() {
                return Err(format!("{}: no *.library.json files", dir.display()));
            }
            recognize_library(&libs, &observed, depth, &opts).map_err(|e| e.to_string())?
        }
        _ => return Err("provide a theory file, or --libraries with --obs".into()),
    };
    emit(&result, output)?;
    Ok(EXIT_OK)
}

fn cmd_parse(
    grammar_path: &Path,
    tokens: &[String],
    depth: u32,
    allow_missing: bool,
    flags: &SearchFlags,
    output: Option<&Path>,
) -> Result<u8, String> {
    let text = std::fs::read_to_string(grammar_path)
        .map_err(|e| format!("cannot read {}: {e}", grammar_path.display()))?;
    let grammar = Grammar::from_text(&text)
        .map_err(|e| format!("{}: {e}", grammar_path.display()))?;
    let tokens: Vec<String> = tokens
        .iter()
        .flat_map(|t| t.split_whitespace())
        .map(String::from)
        .collect();
    let mut config = flags.config();
    if matches!(flags.algorithm, CliAlgorithm::Astar) && matches!(flags.heuristic, CliHeuristic::Hmax)
    {
        // The compiled problems are zero-cost; the satisficing default is
        // the useful one unless the user asked for something specific.
        config.algorithm = Algorithm::Ehc;
        config.heuristic = HeuristicKind::Ff;
    }
    let outcome = parse_tokens(&grammar, &tokens, depth, allow_missing, &config)
        .map_err(|e| e.to_string())?;
    let code = match outcome.verdict {
        ParseVerdict::Accepted | ParseVerdict::AcceptedWithInterpolation => EXIT_OK,
        ParseVerdict::Rejected => EXIT_NO_SOLUTION,
        ParseVerdict::ResourceLimit => EXIT_RESOURCE_LIMIT,
    };
    emit(&outcome, output)?;
    Ok(code)
}

fn cmd_compile(input: &Path, depth: u32, output: Option<&Path>) -> Result<u8, String> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| format!("cannot read {}: {e}", input.display()))?;
    let library: PlanLibrary = if input.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", input.display()))?
    } else {
        let grammar =
            Grammar::from_text(&text).map_err(|e| format!("{}: {e}", input.display()))?;
        cfg_to_library(&grammar)
    };
    let compiled = compile_library(&library, &CompilationConfig { depth })
        .map_err(|e| format!("{}: {e}", input.display()))?;
    let problem_file = compiled.problem.to_file();
    let summary = json!({
        "nodes": compiled.library_nodes,
        "fluents": compiled.problem.fluent_names().len(),
        "actions": compiled.problem.actions.len(),
        "depth": depth,
    });
    if let Some(path) = output {
        let text = serde_json::to_string_pretty(&problem_file).expect("serializable problem");
        std::fs::write(path, format!("{text}\n"))
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        print_line(&serde_json::to_string_pretty(&summary).unwrap());
    } else {
        let combined = json!({ "summary": summary, "problem": problem_file });
        print_line(&serde_json::to_string_pretty(&combined).unwrap());
    }
    Ok(EXIT_OK)
}
