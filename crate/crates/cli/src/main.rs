use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use cutgraph::graph::{build, BuildConfig, BuildError, TerminationGraph};
use cutgraph::harness::{check_entry, run_suite, seed_from_env, CheckConfig, Corpus, Entry};
use cutgraph::interpreter::{run, RunResult};
use cutgraph::parser::{parse_goal, parse_query, parse_source, QuerySpec, SourceFile};
use cutgraph::synth::synthesize;

/// Exit codes.
const PARSE_ERROR: u8 = 1;
const BUDGET_EXCEEDED: u8 = 2;
const STUCK: u8 = 3;
const BUDGET_EXHAUSTED: u8 = 4;
const VIOLATIONS: u8 = 5;
const NOT_PROPER: u8 = 6;

#[derive(Parser)]
#[command(name = "cutgraph", version, about = "Termination graphs for logic programs with cut")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a concrete query and print the derivation.
    Run {
        file: PathBuf,
        /// Goal such as `div(0, 0, Z)`.
        query: String,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
    },
    /// Build a termination graph.
    Graph {
        #[command(flatten)]
        common: GraphArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Build, validate and synthesize the cut-free program.
    Transform {
        #[command(flatten)]
        common: GraphArgs,
    },
    /// Build and validate a termination graph.
    Validate {
        #[command(flatten)]
        common: GraphArgs,
    },
    /// Run the simulation and soundness checks on a file or a corpus directory.
    Check {
        #[command(flatten)]
        common: GraphArgs,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Step budget for the transformed program.
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
    },
}

#[derive(Args)]
struct GraphArgs {
    file: PathBuf,
    /// Moded query such as `div(g,g,v)`; overrides the file's `%query:`.
    #[arg(long)]
    query: Option<String>,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_nodes: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Dot,
    Json,
}

/// An error that ends the process with a given exit code.
struct Exit {
    code: u8,
    message: String,
}

fn exit(code: u8, message: impl Into<String>) -> Exit {
    Exit { code, message: message.into() }
}

impl From<anyhow::Error> for Exit {
    fn from(e: anyhow::Error) -> Exit {
        exit(PARSE_ERROR, format!("{e:#}"))
    }
}

fn main() -> ExitCode {
    // Usage errors share the parse-error code; clap's own 2 means a blown budget here.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { PARSE_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8, Exit> {
    match cmd {
        Command::Run { file, query, budget } => cmd_run(&file, &query, budget as usize),
        Command::Graph { common, format } => cmd_graph(&common, format),
        Command::Transform { common } => cmd_transform(&common),
        Command::Validate { common } => cmd_validate(&common),
        Command::Check { common, samples, budget } => cmd_check(&common, samples, budget as usize),
    }
}

fn load(file: &Path) -> Result<SourceFile, Exit> {
    let src = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    parse_source(&src, &file.display().to_string()).map_err(|e| exit(PARSE_ERROR, e.to_string()))
}

fn query_for(args: &GraphArgs, src: &SourceFile) -> Result<QuerySpec, Exit> {
    match (&args.query, &src.query) {
        (Some(q), _) => parse_query(q).map_err(|e| exit(PARSE_ERROR, e.to_string())),
        (None, Some(q)) => Ok(q.clone()),
        (None, None) => Err(exit(PARSE_ERROR, "no query: pass --query or add a %query: directive")),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Exit> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_run(file: &Path, query: &str, budget: usize) -> Result<u8, Exit> {
    let src = load(file)?;
    let goal = parse_goal(query).map_err(|e| exit(PARSE_ERROR, e.to_string()))?;
    let result = run(&goal, &src.program, budget);
    let d = result.derivation();
    print!("{d}");
    for a in &d.answers {
        println!("answer {a}");
    }
    match result {
        RunResult::Terminated(_) => {
            println!("terminated after {} steps, {} answers", d.length, d.answers.len());
            Ok(0)
        }
        RunResult::BudgetExceeded(_) => Err(exit(BUDGET_EXCEEDED, format!("budget of {budget} steps exceeded"))),
        RunResult::StuckOnVariable { state, .. } => {
            Err(exit(STUCK, format!("first goal is a variable in `{state}`")))
        }
    }
}

fn build_graph(args: &GraphArgs) -> Result<(SourceFile, QuerySpec, TerminationGraph), Exit> {
    let src = load(&args.file)?;
    let q = query_for(args, &src)?;
    let cfg = BuildConfig { max_nodes: args.max_nodes as usize, ..BuildConfig::default() };
    let g = build(&src.program, &q, &cfg).map_err(|e| match e {
        BuildError::BudgetExhausted(_) => exit(BUDGET_EXHAUSTED, e.to_string()),
        BuildError::ZeroBudget => exit(PARSE_ERROR, e.to_string()),
    })?;
    Ok((src, q, g))
}

fn validated(args: &GraphArgs) -> Result<(SourceFile, QuerySpec, TerminationGraph), Exit> {
    let (src, q, g) = build_graph(args)?;
    let violations = g.validate(&src.program);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(exit(VIOLATIONS, lines.join("\n")));
    }
    Ok((src, q, g))
}

fn text_listing(g: &TerminationGraph) -> String {
    let mut s = String::new();
    for n in &g.nodes {
        s.push_str(&format!("{}: {}\n", n.label, n.state));
        for e in g.out_edges(n.id) {
            let sub = e.subst.as_ref().map(|x| format!(" {x}")).unwrap_or_default();
            s.push_str(&format!("  {} -> {}{}\n", e.rule, g.node(e.to).label, sub));
        }
    }
    s.push_str(&format!("{} nodes, proper: {}\n", g.nodes.len(), g.proper));
    s
}

fn cmd_graph(args: &GraphArgs, format: Format) -> Result<u8, Exit> {
    let (_, _, g) = validated(args)?;
    let text = match format {
        Format::Text => text_listing(&g),
        Format::Dot => g.to_dot(),
        Format::Json => g.to_json(),
    };
    emit(&args.out, &text)?;
    Ok(0)
}

fn cmd_transform(args: &GraphArgs) -> Result<u8, Exit> {
    let (_, _, g) = validated(args)?;
    let p = synthesize(&g).map_err(|e| exit(NOT_PROPER, e.to_string()))?;
    emit(&args.out, &p.to_string())?;
    Ok(0)
}

fn cmd_validate(args: &GraphArgs) -> Result<u8, Exit> {
    let (_, _, g) = validated(args)?;
    emit(&args.out, &format!("valid: {} nodes, proper: {}\n", g.nodes.len(), g.proper))?;
    Ok(0)
}

fn cmd_check(args: &GraphArgs, samples: usize, budget: usize) -> Result<u8, Exit> {
    let cfg = CheckConfig {
        build: BuildConfig { max_nodes: args.max_nodes as usize, ..BuildConfig::default() },
        samples,
        seed: seed_from_env(),
        synth_budget: budget,
        orig_budget: budget.saturating_mul(10),
        ..CheckConfig::default()
    };
    if samples == 0 {
        eprintln!("warning: --samples 0, property checks are vacuous");
    }
    let report = if args.file.is_dir() {
        let corpus = Corpus::load(&args.file).map_err(|e| exit(PARSE_ERROR, e.to_string()))?;
        run_suite(&corpus, &cfg)
    } else {
        let src = load(&args.file)?;
        let query = query_for(args, &src)?;
        let name = args.file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let entry = Entry { name, program: src.program, query, golden_graph: None, golden_program: None };
        cutgraph::harness::Report { entries: vec![check_entry(&entry, &cfg)] }
    };
    emit(&args.out, &report.to_string())?;
    if report.passed() {
        Ok(0)
    } else {
        Err(exit(VIOLATIONS, ""))
    }
}
