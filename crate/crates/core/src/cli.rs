//! The `bach` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::explorer::{Explorer, SearchResult, SearchStatus};
use crate::interpreter::{execute, trace_line, RunStatus, StepRecord, TraceStep};
use crate::logic::BslFormula;
use crate::model::Model;
use crate::ns_model::{build_ns_model, exchange_projection, expected_attack_summary};
use crate::parser::parse_program;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_LOAD: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "bach",
    version,
    about = "Constrained execution and search for Bach programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a model once, choosing among constrained steps at random.
    Run {
        model: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Search a model exhaustively for a run that satisfies the formula.
    Search {
        model: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Search the built-in Needham-Schroeder model for Lowe's attack.
    NsAttack {
        #[command(flatten)]
        opts: Options,
    },
}

#[derive(Args, Debug)]
struct Options {
    /// Formula to constrain the run with; defaults to the model's `run ... with` goal.
    #[arg(long, value_name = "NAME")]
    formula: Option<String>,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "N", default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    #[arg(long, value_name = "N", default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: u64,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
    /// Report every witness instead of the first one.
    #[arg(long)]
    all: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Output {
    Text,
    Structured,
}

#[derive(Serialize)]
struct NumberedRecord {
    witness: usize,
    #[serde(flatten)]
    step: StepRecord,
}

/// Runs the command line `args` (including the program name) and returns the
/// process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_LOAD } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run { model, opts } => load(model).and_then(|m| cmd_run(&m, opts, out)),
        Command::Search { model, opts } => load(model).and_then(|m| cmd_search(&m, opts, out)),
        Command::NsAttack { opts } => cmd_ns_attack(opts, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Load(message)) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_LOAD
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILED
        }
    }
}

enum Failure {
    Load(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<crate::error::Error> for Failure {
    fn from(e: crate::error::Error) -> Self {
        Failure::Load(e.to_string())
    }
}

fn load(path: &PathBuf) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Load(format!("{}: {e}", path.display())))?;
    parse_program(&text).map_err(|e| Failure::Load(format!("{}:{e}", path.display())))
}

fn goal(model: &Model, opts: &Options) -> Result<BslFormula, Failure> {
    model
        .goal_formula(opts.formula.as_deref())?
        .ok_or_else(|| Failure::Load("no formula given; use --formula or `run ... with`".into()))
}

fn write_steps(steps: &[TraceStep], opts: &Options, out: &mut dyn Write) -> std::io::Result<()> {
    for (i, step) in steps.iter().enumerate() {
        match opts.output {
            Output::Text => writeln!(out, "{}", trace_line(i + 1, &step.label))?,
            Output::Structured => writeln!(out, "{}", json(&step.record(i + 1)))?,
        }
    }
    Ok(())
}

fn json(value: &impl Serialize) -> String {
    serde_json::to_string(value).expect("records serialize")
}

fn cmd_run(model: &Model, opts: &Options, out: &mut dyn Write) -> Result<i32, Failure> {
    let agent = model.entry_agent()?;
    let formula = goal(model, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let max_steps = usize::try_from(opts.max_steps).unwrap_or(usize::MAX);
    let outcome = execute(
        &agent,
        &formula,
        model.procs(),
        model.formulas(),
        &mut rng,
        max_steps,
    )?;
    write_steps(&outcome.steps, opts, out)?;
    if opts.output == Output::Text {
        writeln!(out, "store: {}", outcome.config.store)?;
        writeln!(out, "status: {}", outcome.status)?;
    }
    Ok(match outcome.status {
        RunStatus::FormulaSatisfied => EXIT_OK,
        _ => EXIT_FAILED,
    })
}

fn search_model(
    model: &Model,
    formula: &BslFormula,
    opts: &Options,
) -> Result<SearchResult, Failure> {
    let agent = model.entry_agent()?;
    let depth = usize::try_from(opts.max_depth).unwrap_or(usize::MAX);
    Ok(Explorer::new(model.procs(), model.formulas(), depth)
        .all_witnesses(opts.all)
        .search(&agent, formula)?)
}

fn write_search(result: &SearchResult, opts: &Options, out: &mut dyn Write) -> std::io::Result<()> {
    match (opts.output, opts.all) {
        (Output::Text, false) => {
            if let Some(w) = result.witness() {
                write_steps(&w.steps, opts, out)?;
                writeln!(out, "store: {}", w.last.store)?;
            }
        }
        (Output::Text, true) => {
            for (n, w) in result.witnesses.iter().enumerate() {
                writeln!(out, "witness {} ({} steps)", n + 1, w.len())?;
                write_steps(&w.steps, opts, out)?;
                writeln!(out, "store: {}", w.last.store)?;
                writeln!(out)?;
            }
        }
        (Output::Structured, false) => {
            if let Some(w) = result.witness() {
                write_steps(&w.steps, opts, out)?;
            }
        }
        (Output::Structured, true) => {
            for (n, w) in result.witnesses.iter().enumerate() {
                for (i, step) in w.steps.iter().enumerate() {
                    let record = NumberedRecord {
                        witness: n + 1,
                        step: step.record(i + 1),
                    };
                    writeln!(out, "{}", json(&record))?;
                }
            }
        }
    }
    if opts.output == Output::Text {
        if opts.all {
            writeln!(out, "witnesses: {}", result.witnesses.len())?;
        }
        writeln!(out, "states explored: {}", result.stats.states_explored)?;
        writeln!(out, "status: {}", result.status)?;
    }
    Ok(())
}

fn cmd_search(model: &Model, opts: &Options, out: &mut dyn Write) -> Result<i32, Failure> {
    let formula = goal(model, opts)?;
    let result = search_model(model, &formula, opts)?;
    write_search(&result, opts, out)?;
    Ok(match result.status {
        SearchStatus::Witness => EXIT_OK,
        _ => EXIT_FAILED,
    })
}

fn cmd_ns_attack(opts: &Options, out: &mut dyn Write) -> Result<i32, Failure> {
    let model = build_ns_model();
    let formula = goal(&model, opts)?;
    let result = search_model(&model, &formula, opts)?;
    write_search(&result, opts, out)?;
    let expected = expected_attack_summary();
    let projections: Vec<_> = result
        .witnesses
        .iter()
        .map(|w| exchange_projection(w.trace()))
        .collect();
    let matches = !projections.is_empty() && projections.iter().all(|p| *p == expected);
    if opts.output == Output::Text {
        if let Some(first) = projections.first() {
            writeln!(out, "exchanges:")?;
            write!(out, "{first}")?;
        }
        let verdict = if matches { "matches" } else { "does not match" };
        writeln!(out, "attack summary: {verdict}")?;
    }
    Ok(if matches { EXIT_OK } else { EXIT_FAILED })
}
