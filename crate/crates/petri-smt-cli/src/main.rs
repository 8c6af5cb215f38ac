//! Command-line front end tying the toolkit together: reachability and
//! concurrency analysis of safe Petri nets, SMT-LIB encodings in six
//! logic fragments, external solver runs, model-driven NUPN
//! decomposition, minimal unit search, and benchmark family curation.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};

use petri_smt::bench::{
    classify, partition_families, read_records_csv, select_family, selection_csv, summary_line,
    DEFAULT_FAMILY_TARGET,
};
use petri_smt::decomp::{
    assignment_from_model, emit_nupn, ffd_repair, find_min_units, Decision, FindMinError,
};
use petri_smt::model::parse_model;
use petri_smt::net::{numbering, parse_net, PetriNet, PlaceNumbering};
use petri_smt::reach::{
    concurrency_relation, explore_reachable, parse_conc, print_conc, ConcurrencyRelation,
};
use petri_smt::smt::{
    encode, oracle_sat, print_smtlib, read_script, script_file_name, stats_from_script,
    Cardinality, EncodingConfig, Fragment, DEFAULT_ORACLE_BUDGET,
};
use petri_smt::solver::{load_solver_config, run_many, run_solver, SolveStatus, SolverSpec};

#[derive(Parser)]
#[command(
    name = "petri-smt",
    version,
    about = "Concurrency analysis and SMT-based unit decomposition for safe Petri nets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the concurrency relation of a safe net by reachability.
    Relation(RelationArgs),
    /// Emit an SMT-LIB script asking for a partition into conflict-free units.
    Encode(EncodeArgs),
    /// Summarize SMT-LIB scripts: variables, domain sizes, asserts, ops.
    Stats(StatsArgs),
    /// Run configured solvers over scripts and print timing records as CSV.
    Solve(SolveArgs),
    /// Turn a solver model into a validated unit-safe NUPN.
    Decompose(DecomposeArgs),
    /// Find the smallest unit count admitting a conflict-free partition.
    MinUnits(MinUnitsArgs),
    /// Curate benchmark families from solver timing records.
    Select(SelectArgs),
    /// Decide satisfiability of an encoding without an external solver.
    Oracle(OracleArgs),
}

/// Arguments shared by every subcommand that reads a net.
#[derive(Args)]
struct NetInput {
    /// Petri net description file.
    net: PathBuf,
    /// Abort exploration beyond this many reachable markings.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    state_limit: u64,
}

#[derive(Args)]
struct RelationArgs {
    #[command(flatten)]
    input: NetInput,
    /// Write <net>.conc into this directory instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("unit_count").required(true).args(["units", "min_units"])))]
struct EncodeArgs {
    #[command(flatten)]
    input: NetInput,
    /// Logic fragment: qf_bv, qf_dt, qf_idl, qf_ufbv, qf_ufdt, or qf_ufidl.
    #[arg(long)]
    fragment: Fragment,
    /// Number of units to partition into.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    units: Option<u32>,
    /// Search for the minimal unit count and encode at it.
    #[arg(long)]
    min_units: bool,
    /// Reuse a precomputed concurrency relation instead of exploring.
    #[arg(long)]
    relation: Option<PathBuf>,
    /// Record the expected satisfiability as a status hint.
    #[arg(long)]
    status_hint: bool,
    /// Directory receiving the .smt2 file.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// SMT-LIB script files to summarize.
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// SMT-LIB script files to run.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Solver configuration file (TOML).
    #[arg(long)]
    solvers: PathBuf,
    /// Concurrent solver processes.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
    /// Save captured models as <script>.<solver>.model in this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: NetInput,
    /// Solver model text for the matching encoding.
    #[arg(long)]
    model: PathBuf,
    /// Fragment the model was produced under.
    #[arg(long)]
    fragment: Fragment,
    /// Unit count the model was produced under.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    units: u32,
    /// Write <net>.nupn into this directory instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MinUnitsArgs {
    #[command(flatten)]
    input: NetInput,
    /// Fragment for candidate encodings.
    #[arg(long, default_value_t = Fragment::QfIdl)]
    fragment: Fragment,
    /// Decide candidates with the first solver from this configuration
    /// instead of the built-in search.
    #[arg(long)]
    solvers: Option<PathBuf>,
    /// Keep candidate scripts in this directory (solver mode).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    /// Timing records CSV (formula,fragment,status,solver,time_s,file_size).
    records: PathBuf,
    /// Directory receiving per-family selection CSVs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: NetInput,
    /// Number of units to partition into.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    units: u32,
    /// Fragment whose encoding semantics to decide.
    #[arg(long, default_value_t = Fragment::QfIdl)]
    fragment: Fragment,
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Relation(args) => cmd_relation(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::MinUnits(args) => cmd_min_units(args),
        Command::Select(args) => cmd_select(args),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

fn cmd_relation(args: RelationArgs) -> Result<()> {
    let net = load_net(&args.input.net)?;
    let num = numbering(&net);
    let rel = explore(&net, &args.input)?;
    let text = print_conc(&rel, &num);
    emit(args.out.as_deref(), &format!("{}.conc", net.name), &text)
}

fn cmd_encode(args: EncodeArgs) -> Result<()> {
    let net = load_net(&args.input.net)?;
    let num = numbering(&net);
    let rel = relation_for(&net, &num, &args.input, args.relation.as_deref())?;
    let n = match args.units {
        Some(n) => n,
        None => minimal_units_by_oracle(&num, &rel, args.fragment)?,
    };
    let mut cfg = EncodingConfig::new(args.fragment, n);
    if args.status_hint {
        cfg = cfg.with_status_hint();
    }
    let script = encode(&num, &rel, &cfg)?;
    let path = args.out.join(script_file_name(&net.name, args.fragment, n));
    write_file(&path, &print_smtlib(&script))?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    println!("file\tfragment\tvariables\tcard\tcard_in\tcard_out\tasserts\tops");
    for path in &args.files {
        let text = read_text(path)?;
        let script =
            read_script(&text).with_context(|| format!("parsing {}", path.display()))?;
        let stats =
            stats_from_script(&script).with_context(|| format!("analyzing {}", path.display()))?;
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            path.display(),
            script.logic,
            opt_count(stats.num_variables),
            opt_card(stats.card),
            opt_card(stats.card_in),
            opt_card(stats.card_out),
            stats.num_asserts,
            stats.num_ops,
        );
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let specs = load_solver_config(&read_text(&args.solvers)?)
        .with_context(|| format!("parsing {}", args.solvers.display()))?;
    // Gather per-file metadata up front so bad inputs fail before any run.
    let mut meta: Vec<(PathBuf, Fragment, u64)> = Vec::new();
    for path in &args.files {
        let script = read_script(&read_text(path)?)
            .with_context(|| format!("parsing {}", path.display()))?;
        let fragment: Fragment = script
            .logic
            .parse()
            .map_err(|_| anyhow!("{}: unsupported logic `{}`", path.display(), script.logic))?;
        let size = fs::metadata(path)
            .with_context(|| format!("inspecting {}", path.display()))?
            .len();
        meta.push((path.clone(), fragment, size));
    }
    let jobs: Vec<(SolverSpec, PathBuf)> = meta
        .iter()
        .flat_map(|(path, _, _)| specs.iter().map(|spec| (spec.clone(), path.clone())))
        .collect();
    let results = run_many(&jobs, args.jobs as usize);

    let mut writer = csv::Writer::from_writer(io::stdout());
    writer.write_record(["formula", "fragment", "status", "solver", "time_s", "file_size"])?;
    for (index, result) in results.into_iter().enumerate() {
        let run = result?;
        let (path, fragment, size) = &meta[index / specs.len()];
        let time = match run.status {
            SolveStatus::Sat | SolveStatus::Unsat => {
                format!("{:.3}", run.wall_time.as_secs_f64())
            }
            _ => String::new(),
        };
        writer.write_record([
            file_name_of(path).as_str(),
            fragment.lowercase(),
            &run.status.to_string(),
            &run.solver,
            &time,
            &size.to_string(),
        ])?;
        if let (Some(dir), Some(model)) = (&args.out, &run.raw_model) {
            let name = format!("{}.{}.model", file_name_of(path), run.solver);
            write_file(&dir.join(name), model)?;
        }
    }
    writer.flush()?;
    Ok(())
}

fn cmd_decompose(args: DecomposeArgs) -> Result<()> {
    let net = load_net(&args.input.net)?;
    let num = numbering(&net);
    let rel = explore(&net, &args.input)?;
    let cfg = EncodingConfig::new(args.fragment, args.units);
    // The script the model answers is reproducible from the same inputs;
    // model parsing needs it to recover function argument spellings.
    let script = encode(&num, &rel, &cfg)?;
    let raw = read_text(&args.model)?;
    let model = parse_model(&raw, &cfg, &script)
        .with_context(|| format!("parsing {}", args.model.display()))?;
    let assign = assignment_from_model(&model, &cfg, &num)?;
    let part = ffd_repair(&assign, &rel, &num)?;
    let nupn = emit_nupn(&part, &net, &rel)?;
    emit(args.out.as_deref(), &format!("{}.nupn", net.name), &nupn.to_text())
}

fn cmd_min_units(args: MinUnitsArgs) -> Result<()> {
    let net = load_net(&args.input.net)?;
    let num = numbering(&net);
    let rel = explore(&net, &args.input)?;
    let n = match &args.solvers {
        None => minimal_units_by_oracle(&num, &rel, args.fragment)?,
        Some(config) => {
            let specs = load_solver_config(&read_text(config)?)
                .with_context(|| format!("parsing {}", config.display()))?;
            let spec = specs.first().expect("configurations hold at least one solver");
            let (dir, _scratch) = match &args.out {
                Some(dir) => (dir.clone(), None),
                None => {
                    let scratch = tempfile::tempdir().context("creating a scratch directory")?;
                    (scratch.path().to_path_buf(), Some(scratch))
                }
            };
            find_min_units(num.count(), &rel, |n| -> Result<Decision> {
                let cfg = EncodingConfig::new(args.fragment, n);
                let script = encode(&num, &rel, &cfg)?;
                let path = dir.join(script_file_name(&net.name, args.fragment, n));
                write_file(&path, &print_smtlib(&script))?;
                Ok(Decision::from(run_solver(spec, &path)?.status))
            })
            .map_err(flatten_min_err)?
        }
    };
    println!("{n}");
    Ok(())
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let loaded = read_records_csv(&read_text(&args.records)?)
        .with_context(|| format!("parsing {}", args.records.display()))?;
    for rejection in &loaded.rejected {
        eprintln!("note: dropped {}: {}", rejection.formula, rejection.reason);
    }
    for ((fragment, status), records) in partition_families(loaded.records) {
        let selection = select_family(fragment, status, classify(records), DEFAULT_FAMILY_TARGET);
        let name = format!("{}_{}_selection.csv", fragment.lowercase(), status);
        write_file(&args.out.join(name), &selection_csv(&selection))?;
        println!("{}", summary_line(&selection));
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let net = load_net(&args.input.net)?;
    let num = numbering(&net);
    let rel = explore(&net, &args.input)?;
    let cfg = EncodingConfig::new(args.fragment, args.units);
    let status = oracle_sat(num.count(), &rel, &cfg, DEFAULT_ORACLE_BUDGET)?;
    println!("{status}");
    Ok(())
}

fn load_net(path: &Path) -> Result<PetriNet> {
    parse_net(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn explore(net: &PetriNet, input: &NetInput) -> Result<ConcurrencyRelation> {
    let markings = explore_reachable(net, input.state_limit as usize)?;
    Ok(concurrency_relation(&markings))
}

fn relation_for(
    net: &PetriNet,
    num: &PlaceNumbering,
    input: &NetInput,
    precomputed: Option<&Path>,
) -> Result<ConcurrencyRelation> {
    match precomputed {
        Some(path) => parse_conc(&read_text(path)?, num)
            .with_context(|| format!("parsing {}", path.display())),
        None => explore(net, input),
    }
}

fn minimal_units_by_oracle(
    num: &PlaceNumbering,
    rel: &ConcurrencyRelation,
    fragment: Fragment,
) -> Result<u32> {
    let count = num.count();
    find_min_units(count, rel, |n| {
        oracle_sat(count, rel, &EncodingConfig::new(fragment, n), DEFAULT_ORACLE_BUDGET)
            .map(Decision::from)
    })
    .map_err(flatten_min_err)
}

fn flatten_min_err<E: Into<anyhow::Error>>(err: FindMinError<E>) -> anyhow::Error {
    match err {
        FindMinError::SolverInconclusive { units } => {
            anyhow!("no verdict at {units} units; cannot narrow the search")
        }
        FindMinError::Backend(e) => e.into(),
    }
}

/// Prints `text` to stdout, or writes it as `name` under `dir` and prints
/// the path instead.
fn emit(dir: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match dir {
        Some(dir) => {
            let path = dir.join(name);
            write_file(&path, text)?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn file_name_of(path: &Path) -> String {
    path.file_name()
        .map(|name| name.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn opt_count(value: Option<u64>) -> String {
    value.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn opt_card(value: Option<Cardinality>) -> String {
    value.map_or_else(|| "-".to_string(), |c| c.to_string())
}
