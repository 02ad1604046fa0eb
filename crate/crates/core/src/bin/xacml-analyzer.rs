//! Command-line front end: request evaluation, the three analyses, logic
//! program emission and a standalone solver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use xacml_analyzer::analyzer::{
    check_completeness, check_conflicts, check_reachability, lp_evaluate, AnalysisError, Engine,
};
use xacml_analyzer::emit::{emit_analysis, transform_store, AnalysisTask};
use xacml_analyzer::engine::{check_acyclic, enumerate_models, ground, solve_unique};
use xacml_analyzer::eval::evaluate_trace;
use xacml_analyzer::ids::ComponentIds;
use xacml_analyzer::lp::{parse_program, serialize_program};
use xacml_analyzer::model::{build_store, AttributeDomains, Decision, PolicyStore, Request};
use xacml_analyzer::parser::{parse_domains, parse_policy_file, parse_request};

const EXIT_PERMIT: u8 = 0;
const EXIT_DENY: u8 = 1;
const EXIT_NOT_APPLICABLE: u8 = 2;
const EXIT_WITNESSES: u8 = 3;
const EXIT_PARSE: u8 = 64;
const EXIT_BUDGET: u8 = 65;
const EXIT_IO: u8 = 66;

#[derive(Parser)]
#[command(name = "xacml-analyzer", version, about = "Policy evaluation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Native,
    Lp,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Args)]
struct StoreArgs {
    /// Policy definitions, one component per line
    #[arg(long)]
    policies: PathBuf,
    /// Attribute domains and relations
    #[arg(long)]
    domains: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one request against the store
    Evaluate {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        request: PathBuf,
        #[arg(long, value_enum, default_value = "native")]
        engine: EngineArg,
        /// Print the decision of every component
        #[arg(long)]
        verbose: bool,
    },
    /// Run one of the store analyses
    Analyze {
        #[command(subcommand)]
        task: AnalyzeTask,
    },
    /// Print the logic program for evaluation or an analysis
    EmitLp {
        #[command(subcommand)]
        task: EmitTask,
    },
    /// Compute the answer sets of a program file
    Solve {
        /// Program in the emitted text format
        program: PathBuf,
        /// Maximum number of models to print
        #[arg(long, default_value_t = 64)]
        max_models: usize,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    store: StoreArgs,
    #[arg(long, value_enum, default_value = "lp")]
    engine: EngineArg,
    #[arg(long, default_value_t = 100)]
    max_witnesses: usize,
    /// Largest request space the analysis may sweep
    #[arg(long, env = "XACML_ANALYZER_BUDGET", default_value_t = 1_000_000)]
    budget: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalyzeTask {
    /// Requests no rule decides
    Gap(AnalyzeArgs),
    /// Requests where rules permit and deny at once
    Conflict(AnalyzeArgs),
    /// Rules that never influence the decision
    Reachability(AnalyzeArgs),
}

#[derive(Args)]
struct EmitArgs {
    #[command(flatten)]
    store: StoreArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EmitTask {
    /// The store program alone
    Eval(EmitArgs),
    Gap(EmitArgs),
    Conflict(EmitArgs),
    Reachability(EmitArgs),
}

fn read(path: &Path) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })
}

fn load_store(args: &StoreArgs) -> Result<(PolicyStore, AttributeDomains), u8> {
    let dom_text = read(&args.domains)?;
    let dom = parse_domains(&dom_text, &args.domains.display().to_string()).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_PARSE
    })?;
    let pol_text = read(&args.policies)?;
    let parsed = parse_policy_file(&pol_text, &args.policies.display().to_string())
        .map_err(|e| {
            eprintln!("error: {e}");
            EXIT_PARSE
        })?;
    let store = build_store(parsed.into_iter().map(|p| p.component).collect(), &dom)
        .map_err(|e| {
            eprintln!("error: {e}");
            EXIT_PARSE
        })?;
    Ok((store, dom))
}

fn decision_exit(d: Decision) -> u8 {
    match d {
        Decision::Permit => EXIT_PERMIT,
        Decision::Deny => EXIT_DENY,
        Decision::NotApplicable => EXIT_NOT_APPLICABLE,
    }
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), u8> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            EXIT_IO
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_evaluate(
    store: &PolicyStore,
    dom: &AttributeDomains,
    q: &Request,
    engine: EngineArg,
    verbose: bool,
) -> Result<Decision, u8> {
    let native = || xacml_analyzer::eval::evaluate(store, q, dom);
    let lp = || {
        lp_evaluate(store, dom, q).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_IO
        })
    };
    let decision = match engine {
        EngineArg::Native => native(),
        EngineArg::Lp => lp()?,
        EngineArg::Both => {
            let n = native();
            let l = lp()?;
            println!("native: {}", n.long_name());
            println!("lp: {}", l.long_name());
            if n != l {
                eprintln!(
                    "error: engines disagree: native={} lp={}",
                    n.token(),
                    l.token()
                );
                return Err(EXIT_IO);
            }
            n
        }
    };
    if verbose {
        let ids = ComponentIds::assign(store);
        for (id, value) in evaluate_trace(store, &ids, q, dom) {
            println!("{id} = {value}");
        }
    }
    println!("{}", decision.long_name());
    Ok(decision)
}

fn run_analyze(task: AnalysisTask, args: &AnalyzeArgs) -> Result<u8, u8> {
    let (store, dom) = load_store(&args.store)?;
    let run = |engine: Engine| match task {
        AnalysisTask::Gap => {
            check_completeness(&store, &dom, engine, args.max_witnesses, args.budget)
        }
        AnalysisTask::Conflict => {
            check_conflicts(&store, &dom, engine, args.max_witnesses, args.budget)
        }
        AnalysisTask::Reachability => check_reachability(&store, &dom, engine, args.budget),
    };
    let map_err = |e: AnalysisError| match e {
        AnalysisError::BudgetExceeded { .. } => {
            eprintln!("error: {e}");
            EXIT_BUDGET
        }
        other => {
            eprintln!("error: {other}");
            EXIT_IO
        }
    };
    let report = match args.engine {
        EngineArg::Native => run(Engine::Native).map_err(map_err)?,
        EngineArg::Lp => run(Engine::Lp).map_err(map_err)?,
        EngineArg::Both => {
            let native = run(Engine::Native).map_err(map_err)?;
            let lp = run(Engine::Lp).map_err(map_err)?;
            if native.witnesses != lp.witnesses || native.total != lp.total {
                eprintln!("error: engines disagree on {} analysis", task.name());
                return Err(EXIT_IO);
            }
            lp
        }
    };
    let text = match args.format {
        FormatArg::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
        FormatArg::Text => {
            let mut s = format!(
                "{}: {} witnesses ({} total{})\n",
                report.task,
                report.witnesses.len(),
                report.total,
                if report.truncated { ", truncated" } else { "" }
            );
            for w in &report.witnesses {
                let req = w
                    .request
                    .as_ref()
                    .map(|m| {
                        m.iter()
                            .map(|(k, v)| format!("{k}({v})"))
                            .collect::<Vec<_>>()
                            .join(", ")
                    })
                    .unwrap_or_default();
                s.push_str(&format!("  {} [{}] {}\n", w.kind, w.components.join(", "), req));
            }
            s
        }
    };
    write_out(&args.out, &text)?;
    Ok(if report.total > 0 { EXIT_WITNESSES } else { 0 })
}

fn run_emit(task: Option<AnalysisTask>, args: &EmitArgs) -> Result<u8, u8> {
    let (store, dom) = load_store(&args.store)?;
    let program = match task {
        None => transform_store(&store, &dom),
        Some(t) => emit_analysis(t, &store, &dom).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_IO
        })?,
    };
    write_out(&args.out, &serialize_program(&program))?;
    Ok(0)
}

fn run_solve(path: &Path, max_models: usize) -> Result<u8, u8> {
    let text = read(path)?;
    let mut program = parse_program(&text).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_PARSE
    })?;
    program.close_universe();
    let g = ground(&program).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_IO
    })?;
    if let Err(cycle) = check_acyclic(&g) {
        eprintln!("error: program is not acyclic; cycle through {}", cycle.join(", "));
        return Err(EXIT_IO);
    }
    let models = if g.choices.is_empty() && !g.rules.iter().any(|r| r.head.is_none()) {
        vec![solve_unique(&g).expect("acyclic plain program")]
    } else {
        enumerate_models(&g, max_models).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_IO
        })?
    };
    for (i, m) in models.iter().enumerate() {
        let atoms: Vec<String> = m.atoms.iter().map(|a| a.to_string()).collect();
        println!("model {}: {}", i + 1, atoms.join(" "));
    }
    println!("{} model(s)", models.len());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Evaluate {
            store,
            request,
            engine,
            verbose,
        } => (|| {
            let (st, dom) = load_store(store)?;
            let text = read(request)?;
            let q = parse_request(&text, &request.display().to_string(), &dom).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_PARSE
            })?;
            run_evaluate(&st, &dom, &q, *engine, *verbose).map(decision_exit)
        })()
        .unwrap_or_else(|c| c),
        Command::Analyze { task } => {
            let (t, args) = match task {
                AnalyzeTask::Gap(a) => (AnalysisTask::Gap, a),
                AnalyzeTask::Conflict(a) => (AnalysisTask::Conflict, a),
                AnalyzeTask::Reachability(a) => (AnalysisTask::Reachability, a),
            };
            run_analyze(t, args).unwrap_or_else(|c| c)
        }
        Command::EmitLp { task } => {
            let (t, args) = match task {
                EmitTask::Eval(a) => (None, a),
                EmitTask::Gap(a) => (Some(AnalysisTask::Gap), a),
                EmitTask::Conflict(a) => (Some(AnalysisTask::Conflict), a),
                EmitTask::Reachability(a) => (Some(AnalysisTask::Reachability), a),
            };
            run_emit(t, args).unwrap_or_else(|c| c)
        }
        Command::Solve {
            program,
            max_models,
        } => run_solve(program, *max_models).unwrap_or_else(|c| c),
    };
    ExitCode::from(code)
}
