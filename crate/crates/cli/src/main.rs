//! `chrn`: run, trace and analyse CHR programs over λ-tree syntax, and type
//! check expressions with higher-rank annotations.
//!
//! Exit codes:
//!
//! | code | meaning                                                          |
//! |------|------------------------------------------------------------------|
//! | 0    | final state / locally confluent / no violations / well typed     |
//! | 1    | failed state / counterexample / ranking violation / type error   |
//! | 2    | out of fuel (or exploration cut off)                             |
//! | 3    | confluence inconclusive                                          |
//! | 64   | usage error                                                      |
//! | 65   | input does not parse or validate                                 |
//! | 66   | input file cannot be read                                        |
//! | 70   | the engine stopped on a non-pattern equation or unifier fuel     |

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chr_nabla::analysis::confluence::{check_local_confluence, Verdict};
use chr_nabla::analysis::ranking::{check_ranking_with, LevelMapping, RankingConfig, BUILTIN_NORMS};
use chr_nabla::analysis::variant::is_variant;
use chr_nabla::engine::{explore, run, ExecutionState, ExploreLimits, RunResult, Strategy, TraceEvent};
use chr_nabla::records;
use chr_nabla::rules::Program;
use chr_nabla::syntax::{parse_goals_for, parse_program};
use chr_nabla::term::Constraint;
use chr_nabla::typeinfer::{default_env, generate, hr_rules, infer_with, parse_expr, Expr};
use clap::{Parser, Subcommand, ValueEnum};

/// Prints a line to standard output; a closed pipe is not an error.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_NO_INPUT: u8 = 66;
const EXIT_ENGINE: u8 = 70;

#[derive(Parser, Debug)]
#[command(name = "chrn", version, about = "Constraint Handling Rules over λ-tree syntax with nominal constants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Deterministic,
    Random,
    /// Explore every order of rule applications (`run` only).
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Records,
}

#[derive(clap::Args, Debug)]
struct ExecOpts {
    #[arg(long, value_enum, default_value = "deterministic")]
    strategy: StrategyArg,
    /// Seed for the random strategy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of transitions.
    #[arg(long, env = "CHRN_FUEL", default_value_t = 10_000)]
    fuel: usize,
    /// Maximum number of rule applications along a branch (exhaustive strategy).
    #[arg(long, default_value_t = 64)]
    depth: usize,
    #[arg(long, value_enum, default_value = "text")]
    output: Output,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a goal to a final state and print it.
    Run {
        rules: PathBuf,
        goals: PathBuf,
        #[command(flatten)]
        opts: ExecOpts,
    },
    /// Like `run`, printing every transition. With `--output records` there is
    /// exactly one line per transition.
    Trace {
        rules: PathBuf,
        goals: PathBuf,
        #[command(flatten)]
        opts: ExecOpts,
    },
    /// Enumerate critical pairs and check each for joinability.
    Confluence {
        rules: PathBuf,
        /// Rule applications explored from each side of a critical pair.
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// Check the ranking condition on seeded random runs.
    Termination {
        rules: PathBuf,
        goals: PathBuf,
        /// One of forall-count, size, nominal-count.
        #[arg(long, default_value = "forall-count")]
        norm: String,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "CHRN_FUEL", default_value_t = 2_000)]
        fuel: usize,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// Infer the type of an expression (`id` and `const` are predefined).
    Typecheck {
        /// The expression; omit it when using --file.
        expr: Option<String>,
        #[arg(long, conflicts_with = "expr")]
        file: Option<PathBuf>,
        /// Print the solver transitions.
        #[arg(long)]
        trace: bool,
        #[arg(long, env = "CHRN_FUEL", default_value_t = 10_000)]
        fuel: usize,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
}

/// An early exit with a message for standard error.
struct Fail(u8, String);

type Outcome = Result<u8, Fail>;

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail(EXIT_NO_INPUT, format!("{}: {e}", path.display())))
}

fn load(rules: &Path, goals: Option<&Path>) -> Result<(Program, Vec<Constraint>), Fail> {
    let program =
        parse_program(&read(rules)?).map_err(|e| Fail(EXIT_DATA, format!("{}: {e}", rules.display())))?;
    let goal = match goals {
        Some(g) => parse_goals_for(&read(g)?, &program).map_err(|e| Fail(EXIT_DATA, format!("{}: {e}", g.display())))?,
        None => Vec::new(),
    };
    Ok((program, goal))
}

fn result_code(r: RunResult) -> u8 {
    match r {
        RunResult::Final => 0,
        RunResult::Failed => 1,
        RunResult::OutOfFuel => 2,
    }
}

fn result_name(r: RunResult) -> &'static str {
    match r {
        RunResult::Final => "final",
        RunResult::Failed => "failed",
        RunResult::OutOfFuel => "out_of_fuel",
    }
}

fn print_trace(trace: &[TraceEvent], output: Output) {
    match output {
        Output::Records => trace_records(trace),
        Output::Text => {
            for (i, ev) in trace.iter().enumerate() {
                out!("{i:>4}  {ev}");
            }
        }
    }
}

fn trace_records(trace: &[TraceEvent]) {
    for line in records::trace_lines(trace) {
        out!("{line}");
    }
}

fn exec(rules: &Path, goals: &Path, opts: &ExecOpts, tracing: bool) -> Outcome {
    let (program, goal) = load(rules, Some(goals))?;
    let initial = ExecutionState::initial(goal);
    let strategy = match opts.strategy {
        StrategyArg::Deterministic => Strategy::Deterministic,
        StrategyArg::Random => Strategy::Random { seed: opts.seed },
        StrategyArg::Exhaustive if tracing => {
            return Err(Fail(EXIT_USAGE, "the exhaustive strategy has no single trace; use `run`".into()))
        }
        StrategyArg::Exhaustive => return exhaustive(initial, &program, opts),
    };
    let out = match run(initial, &program, strategy, opts.fuel) {
        Ok(out) => out,
        Err(e) => {
            if tracing {
                print_trace(&e.trace, opts.output);
            }
            return Err(Fail(EXIT_ENGINE, e.to_string()));
        }
    };
    if tracing {
        print_trace(&out.trace, opts.output);
        if opts.output == Output::Records {
            return Ok(result_code(out.result));
        }
    }
    match opts.output {
        Output::Records => out!("{}", records::state_record(result_name(out.result), &out.state)),
        Output::Text => {
            out!("result:   {} after {} transitions", result_name(out.result), out.trace.len());
            out!("{}", out.state);
        }
    }
    Ok(result_code(out.result))
}

fn exhaustive(initial: ExecutionState, program: &Program, opts: &ExecOpts) -> Outcome {
    let limits = ExploreLimits { depth: opts.depth, max_nodes: opts.fuel.max(1) };
    let ex = explore(initial, program, limits);
    if let Some(e) = ex.errors.first() {
        return Err(Fail(EXIT_ENGINE, e.to_string()));
    }
    // one representative per variance class
    let mut leaves: Vec<&ExecutionState> = Vec::new();
    for n in ex.leaves() {
        if !leaves.iter().any(|l| is_variant(l, &n.state).is_variant()) {
            leaves.push(&n.state);
        }
    }
    let failed = leaves.iter().any(|l| !l.is_consistent());
    let code = if ex.truncated {
        2
    } else {
        u8::from(failed)
    };
    for (i, l) in leaves.iter().enumerate() {
        let result = if l.is_consistent() { "final" } else { "failed" };
        match opts.output {
            Output::Records => out!("{}", records::state_record(result, l)),
            Output::Text => out!("leaf {i} ({result}):\n{l}\n"),
        }
    }
    if opts.output == Output::Text {
        out!(
            "{} states explored, {} distinct leaves{}",
            ex.nodes.len(),
            leaves.len(),
            if ex.truncated { ", search cut off" } else { "" }
        );
    }
    Ok(code)
}

fn confluence(rules: &Path, depth: usize, output: Output) -> Outcome {
    let (program, _) = load(rules, None)?;
    let report = check_local_confluence(&program, depth);
    match output {
        Output::Records => records::confluence_records(&report).iter().for_each(|r| out!("{r}")),
        Output::Text => out!("{report}"),
    }
    Ok(match report.verdict {
        Verdict::LocallyConfluent => 0,
        Verdict::Counterexample => 1,
        Verdict::Inconclusive => 3,
    })
}

struct TerminationArgs<'a> {
    rules: &'a Path,
    goals: &'a Path,
    norm: &'a str,
    cfg: RankingConfig,
    output: Output,
}

fn termination(a: TerminationArgs<'_>) -> Outcome {
    let lm = LevelMapping::builtin(a.norm).ok_or_else(|| {
        Fail(EXIT_USAGE, format!("unknown norm `{}`; available: {}", a.norm, BUILTIN_NORMS.join(", ")))
    })?;
    let (program, goal) = load(a.rules, Some(a.goals))?;
    let report = check_ranking_with(&program, &goal, lm, &a.cfg);
    match a.output {
        Output::Records => records::ranking_records(lm.name, &report).iter().for_each(|r| out!("{r}")),
        Output::Text => out!("norm {}: {report}", lm.name),
    }
    Ok(u8::from(!report.is_ok()))
}

fn typecheck(expr: Option<&str>, file: Option<&Path>, tracing: bool, fuel: usize, output: Output) -> Outcome {
    let src = match (expr, file) {
        (Some(e), _) => e.to_string(),
        (None, Some(f)) => read(f)?,
        (None, None) => return Err(Fail(EXIT_USAGE, "give an expression or --file".into())),
    };
    let e: Expr = parse_expr(&src).map_err(|err| Fail(EXIT_DATA, err.to_string()))?;
    let env = default_env();
    let rules = hr_rules();
    if tracing {
        if let Ok(g) = generate(&env, &e) {
            let trace = match run(ExecutionState::initial(g.constraints), &rules, Strategy::Deterministic, fuel) {
                Ok(out) => out.trace,
                Err(err) => err.trace,
            };
            print_trace(&trace, output);
        }
    }
    let result = infer_with(&env, &e, &rules, fuel);
    match output {
        Output::Records => out!("{}", records::typing_record(&e, &result)),
        Output::Text => match &result {
            Ok(t) => out!("{}", t.ty),
            Err(err) => out!("type error: {err}"),
        },
    }
    Ok(u8::from(result.is_err()))
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Run { rules, goals, opts } => exec(&rules, &goals, &opts, false),
        Command::Trace { rules, goals, opts } => exec(&rules, &goals, &opts, true),
        Command::Confluence { rules, depth, output } => confluence(&rules, depth, output),
        Command::Termination { rules, goals, norm, runs, seed, fuel, output } => termination(TerminationArgs {
            rules: &rules,
            goals: &goals,
            norm: &norm,
            cfg: RankingConfig { runs, seed, fuel, ..RankingConfig::default() },
            output,
        }),
        Command::Typecheck { expr, file, trace, fuel, output } => {
            typecheck(expr.as_deref(), file.as_deref(), trace, fuel, output)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("chrn: {msg}");
            ExitCode::from(code)
        }
    }
}
