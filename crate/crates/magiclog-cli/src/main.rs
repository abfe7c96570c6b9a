//! The `magiclog` binary: evaluate queries, emit rewrites, generate
//! benchmark databases, and run CSV-reporting scenarios.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use magiclog::engine::{evaluate, EvalMode, EvalOptions, EvaluationReport, Strategy};
use magiclog::model::{Database, Program, Query};
use magiclog::parse::{parse_database, parse_goal, parse_program, parse_query, render_model};
use magiclog::rewrite::disj_magic;

use magiclog_cli::bench::{
    load_program_text, load_scenario, render_answer, run_scenario, summary_table, write_csv,
};
use magiclog_cli::gen::{gen_chain, gen_lattice, gen_two_components, ComponentSpec, LatticeSpec};
use magiclog_cli::{builtins, render_bundle, CliResult, Failure};

#[derive(Parser)]
#[command(name = "magiclog", version, about = "Disjunctive Datalog with goal-directed rewriting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a query against a program and database.
    Eval(EvalArgs),
    /// Write the goal-directed rewrite of a program.
    Rewrite(RewriteArgs),
    /// Generate a benchmark database.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run a scenario file and write a CSV report.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Naive,
    MagicPartial,
    MagicTotal,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Naive => Strategy::Naive,
            StrategyArg::MagicPartial => Strategy::MagicPartial,
            StrategyArg::MagicTotal => Strategy::MagicTotal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Brave,
    Cautious,
    Models,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> EvalMode {
        match m {
            ModeArg::Brave => EvalMode::Brave,
            ModeArg::Cautious => EvalMode::Cautious,
            ModeArg::Models => EvalMode::Models,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Built-in program name (p1, p2, coloring, 3ds) or path to a program file.
    #[arg(long)]
    program: String,
    /// Path to a database of ground facts; omitted means an empty database.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Goal atom (`p(1)`) or path to a query file (`?- p(1).`); built-in
    /// programs default to their usual goal.
    #[arg(long)]
    query: Option<String>,
    /// Evaluation strategy.
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    /// What to report.
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Also write the rewrite bundle used by the magic strategies here.
    #[arg(long)]
    emit_rewritten: Option<PathBuf>,
    /// Print the report as JSON instead of plain text.
    #[arg(long)]
    json: bool,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    timeout_s: Option<u64>,
    /// Cap on ground rule instances.
    #[arg(long)]
    ground_limit: Option<usize>,
}

#[derive(Args)]
struct RewriteArgs {
    /// Built-in program name or path to a program file.
    #[arg(long)]
    program: String,
    /// Goal atom or path to a query file.
    #[arg(long)]
    query: Option<String>,
    /// Where to write the rewritten program.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GenCommand {
    /// The chain database a(1,2), ..., a(k,k+1).
    Chain {
        /// Number of arcs.
        #[arg(long)]
        k: u32,
        /// Output file; omitted means stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A layered lattice graph as node/edge facts.
    Lattice {
        /// Nodes per layer.
        #[arg(long)]
        base: u32,
        /// Number of layers.
        #[arg(long)]
        height: u32,
        /// Arcs leaving each off-spine, non-top node.
        #[arg(long)]
        grade: u32,
        /// Emit each edge in both directions.
        #[arg(long)]
        symmetric: bool,
        /// Output file; omitted means stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two disconnected graph components, component 1 numbered first.
    TwoComp {
        /// First component: none, triangle, k4, cycle:N, or lattice:B,H,G.
        #[arg(long)]
        c1: String,
        /// Second component, same syntax.
        #[arg(long)]
        c2: String,
        /// Emit each edge in both directions.
        #[arg(long)]
        symmetric: bool,
        /// Output file; omitted means stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Path to a scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Where to write the CSV report.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct JsonReport {
    strategy: String,
    mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    answer: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tuples: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    models: Option<Vec<String>>,
    wall_ms: f64,
    rewrite_ms: f64,
    ground_rules: usize,
    model_count: usize,
    unstratified_fallback: bool,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(failure) = run(cli) {
        eprintln!("error: {failure}");
        std::process::exit(failure.kind.code());
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Eval(args) => cmd_eval(args),
        Command::Rewrite(args) => cmd_rewrite(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

/// Loads `--program` and `--query` together: the query may be inline, a
/// file, or defaulted from a built-in program name.
fn load_inputs(program: &str, query: Option<&str>) -> CliResult<(Program, Query)> {
    let text = load_program_text(program)?;
    let parsed = parse_program(&text)?;
    let query = match query {
        Some(q) if Path::new(q).is_file() => {
            let contents = std::fs::read_to_string(q)
                .map_err(|e| Failure::usage(format!("cannot read query `{q}`: {e}")))?;
            parse_query(contents.trim()).or_else(|_| parse_goal(contents.trim()))?
        }
        Some(q) => parse_goal(q)?,
        None => {
            let fallback = builtins::default_query(program).ok_or_else(|| {
                Failure::usage(format!("--query is required for program `{program}`"))
            })?;
            parse_goal(fallback)?
        }
    };
    Ok((parsed, query))
}

fn load_db(path: Option<&Path>) -> CliResult<Database> {
    let Some(path) = path else {
        return Ok(Database::empty());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read database `{}`: {e}", path.display())))?;
    Ok(parse_database(&text)?)
}

fn write_out(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::usage(format!("cannot write `{}`: {e}", path.display())))
}

fn print_report(report: &EvaluationReport, json: bool) {
    if json {
        let answer = report
            .answers
            .as_ref()
            .filter(|a| a.vars.is_empty())
            .map(|a| a.holds());
        let tuples = report.answers.as_ref().filter(|a| !a.vars.is_empty()).map(|a| {
            a.tuples
                .iter()
                .map(|t| t.iter().map(|c| c.to_string()).collect())
                .collect()
        });
        let models = report
            .models
            .as_ref()
            .map(|ms| ms.models.iter().map(render_model).collect());
        let out = JsonReport {
            strategy: report.strategy.to_string(),
            mode: report.mode.to_string(),
            answer,
            tuples,
            models,
            wall_ms: report.stats.wall_ms,
            rewrite_ms: report.stats.rewrite_ms,
            ground_rules: report.stats.ground_rules,
            model_count: report.stats.model_count,
            unstratified_fallback: report.stats.unstratified_fallback,
        };
        println!("{}", serde_json::to_string_pretty(&out).expect("report serializes"));
        return;
    }
    println!("strategy: {}", report.strategy);
    println!("mode: {}", report.mode);
    if report.answers.is_some() {
        println!("answer: {}", render_answer(report));
    }
    if let Some(models) = &report.models {
        for m in &models.models {
            println!("model: {}", render_model(m));
        }
    }
    println!("models: {}", report.stats.model_count);
    println!("wall_ms: {:.3}", report.stats.wall_ms);
    println!("rewrite_ms: {:.3}", report.stats.rewrite_ms);
    println!("ground_rules: {}", report.stats.ground_rules);
    if report.stats.unstratified_fallback {
        println!("unstratified_fallback: true");
    }
}

fn cmd_eval(args: EvalArgs) -> CliResult<()> {
    let (program, query) = load_inputs(&args.program, args.query.as_deref())?;
    let db = load_db(args.db.as_deref())?;

    if let Some(path) = &args.emit_rewritten {
        let bundle = disj_magic(&query.goal, &program)?;
        write_out(path, &render_bundle(&bundle))?;
    }

    let mut opts = EvalOptions::default();
    if let Some(secs) = args.timeout_s {
        let deadline = Instant::now() + Duration::from_secs(secs);
        opts.solve.deadline = Some(deadline);
        opts.solve.ground.deadline = Some(deadline);
    }
    if let Some(limit) = args.ground_limit {
        opts.solve.ground.limit = limit;
    }

    let report =
        evaluate(&query, &program, &db, args.strategy.into(), args.mode.into(), &opts)?;
    print_report(&report, args.json);
    Ok(())
}

fn cmd_rewrite(args: RewriteArgs) -> CliResult<()> {
    let (program, query) = load_inputs(&args.program, args.query.as_deref())?;
    let bundle = disj_magic(&query.goal, &program)?;
    write_out(&args.out, &render_bundle(&bundle))?;
    println!(
        "wrote {}: {} restricted, {} constraints, {} magic, {} collecting",
        args.out.display(),
        bundle.restricted.len(),
        bundle.constraints.len(),
        bundle.magic.len(),
        bundle.collecting.len()
    );
    Ok(())
}

fn cmd_gen(args: GenCommand) -> CliResult<()> {
    let (db, out) = match args {
        GenCommand::Chain { k, out } => (gen_chain(k)?, out),
        GenCommand::Lattice { base, height, grade, symmetric, out } => {
            (gen_lattice(&LatticeSpec::new(base, height, grade)?, symmetric), out)
        }
        GenCommand::TwoComp { c1, c2, symmetric, out } => {
            let c1 = ComponentSpec::parse(&c1)?;
            let c2 = ComponentSpec::parse(&c2)?;
            (gen_two_components(&c1, &c2, symmetric), out)
        }
    };
    let text = magiclog::parse::render_database(&db);
    match out {
        Some(path) => write_out(&path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    let scenario = load_scenario(&args.scenario)?;
    let rows = run_scenario(&scenario)?;
    let file = std::fs::File::create(&args.out)
        .map_err(|e| Failure::usage(format!("cannot write `{}`: {e}", args.out.display())))?;
    write_csv(&rows, file)?;
    print!("{}", summary_table(&rows));
    Ok(())
}
