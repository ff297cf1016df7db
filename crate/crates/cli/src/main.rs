use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use aml::engine::{
    run_stable, Allocator, EvalError, FreshAllocator, MemoTableOracle, NullOracle, Oracle, RecyclingAllocator,
    DEFAULT_FUEL,
};
use aml::harness::{invariant_violations, run_fuzz, run_incremental, CheckKind, FuzzConfig, GenConfig, IncrementalError};
use aml::pure::pure_eval_s;
use aml::store::{fmt_locset, Store};
use aml::syntax::{parse, parse_edits, parse_store, Program};
use aml::trace::trace_to_json;
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_FAILURE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_EVAL: u8 = 3;
const EXIT_AUDIT: u8 = 4;

#[derive(Parser)]
#[command(name = "aml", version, about = "Evaluate, propagate and fuzz adaptive ML programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a program with the self-adjusting engine.
    Run {
        program: PathBuf,
        /// Initial store: `lN = <value>` lines.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, env = "AML_FUEL", default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        #[arg(long, value_enum, default_value_t = OracleKind::Null)]
        oracle: OracleKind,
        /// `fresh` or `recycle:SEED`.
        #[arg(long, default_value = "fresh", value_parser = parse_alloc)]
        alloc: AllocKind,
        /// Write the trace of the last run as JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Check validity and the evaluation invariants after each run.
        #[arg(long)]
        audit: bool,
        /// Evaluate this many times from the same initial store, keeping the
        /// memo table and allocator between runs.
        #[arg(long, default_value_t = 1)]
        repeat: u32,
    },
    /// Evaluate a location-free program with the pure semantics.
    Pure {
        program: PathBuf,
        #[arg(long, env = "AML_FUEL", default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Evaluate, apply edits, propagate, and compare with a from-scratch run.
    Incr {
        program: PathBuf,
        /// Edits: `lN = <location-free value>` lines.
        edits: PathBuf,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, env = "AML_FUEL", default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Check generated programs against the metatheory.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        /// Comma-separated: correctness, consistency, memo_freedom, invariants, incremental.
        #[arg(long, value_delimiter = ',', default_value = "correctness,consistency,memo_freedom,invariants,incremental")]
        checks: Vec<CheckKind>,
        #[arg(long, env = "AML_FUEL", default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        /// Input cells available to programs in the incremental check.
        #[arg(long, default_value_t = 2)]
        input_cells: u32,
        /// Let generated programs store functions in modifiables.
        #[arg(long)]
        functions_in_stores: bool,
        /// Write one JSON outcome per program.
        #[arg(long)]
        jsonl: Option<PathBuf>,
        /// Omit the elapsed-time footer.
        #[arg(long)]
        no_timing: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Null,
    Memo,
}

#[derive(Clone, Copy)]
enum AllocKind {
    Fresh,
    Recycle(u64),
}

fn parse_alloc(s: &str) -> Result<AllocKind, String> {
    match s {
        "fresh" => Ok(AllocKind::Fresh),
        _ => s
            .strip_prefix("recycle:")
            .and_then(|n| n.parse().ok())
            .map(AllocKind::Recycle)
            .ok_or_else(|| format!("expected `fresh` or `recycle:SEED`, got `{s}`")),
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

fn eval_failure(e: EvalError) -> Failure {
    Failure::new(EXIT_EVAL, e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parse(&read(path)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{}:{e}", path.display())))
}

fn load_store(path: Option<&Path>) -> Result<Store, Failure> {
    match path {
        None => Ok(Store::new()),
        Some(p) => parse_store(&read(p)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{}:{e}", p.display()))),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    program: &Path,
    store: Option<&Path>,
    fuel: u64,
    oracle: OracleKind,
    alloc: AllocKind,
    trace_out: Option<&Path>,
    audit: bool,
    repeat: u32,
) -> Result<(), Failure> {
    let p = load_program(program)?;
    let initial = load_store(store)?;
    let mut null = NullOracle;
    let mut table = MemoTableOracle::new();
    let mut fresh = FreshAllocator::new();
    let mut recycling = match alloc {
        AllocKind::Recycle(seed) => Some(RecyclingAllocator::new(seed)),
        AllocKind::Fresh => None,
    };
    let repeat = repeat.max(1);
    for i in 1..=repeat {
        let oracle: &mut dyn Oracle = match oracle {
            OracleKind::Null => &mut null,
            OracleKind::Memo => &mut table,
        };
        let allocator: &mut dyn Allocator = match &mut recycling {
            Some(r) => r,
            None => &mut fresh,
        };
        let report = run_stable(&initial, &p.root, oracle, allocator, fuel).map_err(eval_failure)?;
        table.commit();
        if repeat > 1 {
            println!("run {i}");
        }
        println!("{}", report.value().expect("stable run"));
        print!("{}", report.final_store);
        println!("memo: {} hits, {} misses", report.stats.memo_hits, report.stats.memo_misses);
        if audit {
            let problems = invariant_violations(&report);
            if !problems.is_empty() {
                return Err(Failure::new(EXIT_AUDIT, format!("audit failed: {}", problems.join("; "))));
            }
            println!("audit: ok");
        }
        if i == repeat {
            if let Some(path) = trace_out {
                let json = serde_json::to_string_pretty(&trace_to_json(&report.trace)).expect("trace serializes");
                write_file(path, &(json + "\n"))?;
            }
        }
    }
    Ok(())
}

fn cmd_pure(program: &Path, fuel: u64) -> Result<(), Failure> {
    let p = load_program(program)?;
    let v = pure_eval_s(&p.root, fuel).map_err(eval_failure)?;
    println!("{v}");
    Ok(())
}

fn cmd_incr(program: &Path, edits: &Path, store: Option<&Path>, fuel: u64) -> Result<(), Failure> {
    let p = load_program(program)?;
    let initial = load_store(store)?;
    let edits: Store = parse_edits(&read(edits)?)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("{}:{e}", edits.display())))?
        .into_iter()
        .collect();
    let r = run_incremental(&p.root, &initial, &edits, fuel).map_err(|e| match e {
        IncrementalError::Eval(..) => Failure::new(EXIT_EVAL, e.to_string()),
        IncrementalError::Audit(..) | IncrementalError::Lift(_) => Failure::new(EXIT_AUDIT, e.to_string()),
    })?;
    let trace_changed = r.original.stable_trace() != Some(&r.propagated.trace);
    println!("{}", r.original.value().expect("stable run"));
    print!("{}", r.propagated.final_store);
    println!("from scratch: {}", r.scratch.value().expect("stable run"));
    println!("verdict: {}", if r.equal { "EQUAL" } else { "DIFFERENT" });
    let reexecuted = r.propagated.stats.reads_reexecuted.iter().copied().collect();
    if r.propagated.stats.reads_reexecuted.is_empty() {
        println!("re-executed reads: none");
    } else {
        println!("re-executed reads: {}", fmt_locset(&reexecuted));
    }
    println!("reused reads: {}", r.propagated.stats.reads_reused);
    println!("trace: {}", if trace_changed { "changed" } else { "unchanged" });
    if r.equal {
        Ok(())
    } else {
        Err(Failure::new(EXIT_AUDIT, "propagated result differs from the from-scratch result"))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_fuzz(
    n: u64,
    seed: u64,
    depth: u32,
    checks: Vec<CheckKind>,
    fuel: u64,
    input_cells: u32,
    functions_in_stores: bool,
    jsonl: Option<&Path>,
    no_timing: bool,
) -> Result<(), Failure> {
    let start = Instant::now();
    let gen = GenConfig { max_depth: depth, fuel, input_cells, functions_in_stores, ..GenConfig::default() };
    let summary = run_fuzz(&FuzzConfig { n, seed, gen, checks });
    if let Some(path) = jsonl {
        let mut out = String::new();
        for o in &summary.outcomes {
            out.push_str(&serde_json::to_string(o).expect("outcome serializes"));
            out.push('\n');
        }
        write_file(path, &out)?;
    }
    println!("programs: {n}, seeds {seed}..{}", seed.wrapping_add(n));
    print!("{}", summary.table());
    let failing = summary.failing_seeds();
    if !failing.is_empty() {
        let seeds: Vec<String> = failing.iter().map(u64::to_string).collect();
        println!("failing seeds: {}", seeds.join(" "));
    }
    if !no_timing {
        println!("elapsed: {:.2}s", start.elapsed().as_secs_f64());
    }
    if failing.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_FAILURE, format!("{} failing checks", summary.failures())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { program, store, fuel, oracle, alloc, trace_out, audit, repeat } => {
            cmd_run(&program, store.as_deref(), fuel, oracle, alloc, trace_out.as_deref(), audit, repeat)
        }
        Command::Pure { program, fuel } => cmd_pure(&program, fuel),
        Command::Incr { program, edits, store, fuel } => cmd_incr(&program, &edits, store.as_deref(), fuel),
        Command::Fuzz { n, seed, depth, checks, fuel, input_cells, functions_in_stores, jsonl, no_timing } => {
            cmd_fuzz(n, seed, depth, checks, fuel, input_cells, functions_in_stores, jsonl.as_deref(), no_timing)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
