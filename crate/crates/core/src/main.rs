use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use approxsym::afp::{afp_solve, AfpOptions};
use approxsym::brain::{binarize_density, load_matrix, lr_from_file, lr_halves};
use approxsym::harness::{
    compare_methods, comparison_to_csv, fmt_sig10, read_csv, records_to_csv,
    run_experiment_with_workers, Cell, ExperimentConfig, Method, ModelSpec, ParamValue,
};
use approxsym::init::InitExpr;
use approxsym::metrics::symmetry_coefficient;
use approxsym::qsa::{qsa_solve, InitSpec, QsaOptions, DEFAULT_BLEND};
use approxsym::{Graph, PenaltyVector, Permutation, SolverReport};

#[derive(Parser)]
#[command(name = "approxsym", version, about = "Approximate symmetries of undirected graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random graph
    Gen(GenArgs),
    /// Run AFP or QSA on a graph file
    Solve(SolveArgs),
    /// Run a configured parameter sweep and write records as CSV
    Experiment(ExperimentArgs),
    /// Binarise a connectivity matrix and compare solver output to the left-right map
    Brain(BrainArgs),
    /// Paired statistics between two methods of an experiment CSV
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    /// grid, er, ba, sbm, lrm, lrm-rewired or lrm-distorted
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Attachment count (ba)
    #[arg(long)]
    m: Option<i64>,
    /// Rewired edges (lrm-rewired)
    #[arg(long)]
    k: Option<i64>,
    /// Anchor count (lrm-distorted)
    #[arg(long)]
    r: Option<i64>,
    /// Twins per side (lrm-distorted)
    #[arg(long)]
    t: Option<i64>,
    /// Grid side lengths, e.g. 5,10
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<i64>>,
    /// Block sizes (sbm), e.g. 50,50,50
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<i64>>,
    #[arg(long)]
    p_in: Option<f64>,
    #[arg(long)]
    p_out: Option<f64>,
    /// Block probability matrix (sbm), rows separated by `;`, e.g. "0.5,0.1;0.1,0.5"
    #[arg(long)]
    probs: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// AFP: cap on fixed points (default n/2)
    #[arg(long)]
    max_fp: Option<usize>,
    /// AFP: number of proposals (default 100·n²)
    #[arg(long)]
    budget: Option<u64>,
    /// AFP: cooling numerator (default calibrated)
    #[arg(long)]
    sched_c: Option<f64>,
    /// AFP: cooling offset
    #[arg(long, default_value_t = 2.0)]
    sched_d: f64,
    /// QSA: iteration cap
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// QSA: relative-decrease stopping tolerance
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    /// QSA: weight of the flat matrix mixed into the start
    #[arg(long, default_value_t = DEFAULT_BLEND)]
    blend: f64,
    /// QSA: uniform fixed-point penalty (default 2·d_max + 1)
    #[arg(long)]
    penalty: Option<f64>,
    /// Record wall-clock time in reports
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    method: Method,
    #[arg(long)]
    graph: PathBuf,
    /// identity, random, lr, lr-file:<path>, reshuffle:<inner>:ℓ=<k>:seed=<s>
    #[arg(long, default_value = "random")]
    init: String,
    /// Reference permutation for `--init lr` (default <graph>.lr)
    #[arg(long)]
    lr: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file (JSON)
    #[arg(long)]
    out: PathBuf,
    /// Permutation file (default <out>.perm)
    #[arg(long)]
    perm_out: Option<PathBuf>,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment description
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct BrainArgs {
    /// Square weight matrix, comma- or whitespace-delimited
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    density: f64,
    /// `halves` (left regions first) or `file:<path>`
    #[arg(long, default_value = "halves")]
    lr_map: String,
    /// Solver(s) to run
    #[arg(long = "method", default_values = ["afp", "qsa"])]
    methods: Vec<Method>,
    /// random, lr or any init expression (`lr` is the left-right map)
    #[arg(long, default_value = "random")]
    init: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Summary file (JSON); stdout only when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the binarised graph
    #[arg(long)]
    graph_out: Option<PathBuf>,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value = "afp")]
    x: Method,
    #[arg(long, default_value = "qsa")]
    y: Method,
    /// Family-wise significance level before Bonferroni correction
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Output CSV (default stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Op(String),
}

impl From<approxsym::Error> for Failure {
    fn from(e: approxsym::Error) -> Self {
        Failure::Op(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Op(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Brain(a) => cmd_brain(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Op(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Op(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure::Op(format!("{}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_graph(path: &Path) -> CliResult<Graph> {
    Graph::parse_text(&read_text(path)?).map_err(|e| Failure::Op(format!("{}: {e}", path.display())))
}

fn parse_probs(text: &str) -> CliResult<Vec<Vec<f64>>> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Failure::Usage(format!("bad probability {v:?} in --probs")))
                })
                .collect()
        })
        .collect()
}

fn cmd_gen(a: GenArgs) -> CliResult<()> {
    let mut cell = Cell::default();
    let mut put = |k: &str, v: ParamValue| {
        cell.0.insert(k.to_string(), v);
    };
    for (k, v) in [("n", a.n), ("m", a.m), ("k", a.k), ("r", a.r), ("t", a.t)] {
        if let Some(v) = v {
            put(k, ParamValue::Int(v));
        }
    }
    for (k, v) in [("p", a.p), ("q", a.q), ("p_in", a.p_in), ("p_out", a.p_out)] {
        if let Some(v) = v {
            put(k, ParamValue::Float(v));
        }
    }
    if let Some(d) = a.dims {
        put("dims", ParamValue::IntList(d));
    }
    if let Some(s) = a.sizes {
        put("sizes", ParamValue::IntList(s));
    }
    if let Some(p) = &a.probs {
        put("probs", ParamValue::Matrix(parse_probs(p)?));
    }
    let spec = ModelSpec::from_params(&a.model, &cell).map_err(|e| Failure::Usage(e.to_string()))?;
    let generated = spec.generate(a.seed)?;
    let g = &generated.graph;
    write_text(&a.out, &g.to_text())?;
    if let Some(lr) = &generated.reference {
        write_text(&with_suffix(&a.out, ".lr"), &lr.to_text())?;
    }
    eprintln!(
        "{}: n={} m={} connected={}",
        spec.name(),
        g.n(),
        g.m(),
        g.is_connected()
    );
    Ok(())
}

fn qsa_options(flags: &SolverFlags, g: &Graph, init: InitSpec) -> CliResult<QsaOptions> {
    Ok(QsaOptions {
        max_iters: flags.max_iters,
        rel_tol: flags.rel_tol,
        init: InitSpec::blend(init, flags.blend),
        penalty: flags
            .penalty
            .map(|v| PenaltyVector::uniform(g.n(), v))
            .transpose()?,
    })
}

fn afp_options(flags: &SolverFlags, seed: u64, init: InitSpec) -> AfpOptions {
    AfpOptions {
        max_fp: flags.max_fp,
        budget: flags.budget,
        sched_c: flags.sched_c,
        sched_d: flags.sched_d,
        seed,
        init,
    }
}

fn run_solver(
    method: Method,
    g: &Graph,
    init: &InitExpr,
    reference: Option<&Permutation>,
    flags: &SolverFlags,
    seed: u64,
) -> CliResult<SolverReport> {
    let spec = init.to_spec(g.n(), reference)?;
    let mut report = match method {
        Method::Afp => afp_solve(g, &afp_options(flags, seed, spec))?,
        Method::Qsa => qsa_solve(g, &qsa_options(flags, g, spec)?, seed)?,
    };
    if !flags.timing {
        report.wall_ms = 0;
    }
    Ok(report)
}

fn summary_line(method: Method, r: &SolverReport) -> String {
    format!(
        "{} {} {} {}",
        method.name(),
        fmt_sig10(r.s),
        r.epsilon,
        r.fixed_point_count
    )
}

fn cmd_solve(a: SolveArgs) -> CliResult<()> {
    let init: InitExpr = a.init.parse().map_err(|e: approxsym::Error| Failure::Usage(e.to_string()))?;
    let g = load_graph(&a.graph)?;
    let reference = if init.uses_reference() {
        let path = a.lr.clone().unwrap_or_else(|| with_suffix(&a.graph, ".lr"));
        Some(lr_from_file(&path, g.n()).map_err(|e| Failure::Op(format!("{}: {e}", path.display())))?)
    } else {
        None
    };
    let report = run_solver(a.method, &g, &init, reference.as_ref(), &a.flags, a.seed)?;
    write_text(&a.out, &report.to_json())?;
    let perm_out = a.perm_out.clone().unwrap_or_else(|| with_suffix(&a.out, ".perm"));
    write_text(&perm_out, &report.final_perm.to_text())?;
    println!("{}", summary_line(a.method, &report));
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> CliResult<()> {
    let text = read_text(&a.config)?;
    let cfg = ExperimentConfig::from_toml(&text).map_err(|e| Failure::Usage(e.to_string()))?;
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let records = run_experiment_with_workers(&cfg, workers)?;
    write_text(&a.out, &records_to_csv(&records))?;
    let failed = records.iter().filter(|r| r.is_error()).count();
    eprintln!("{} records written, {failed} failed", records.len());
    Ok(())
}

#[derive(Serialize)]
struct BrainRun {
    method: &'static str,
    #[serde(rename = "S_final")]
    s_final: f64,
    #[serde(rename = "S_lr")]
    s_lr: f64,
    #[serde(rename = "S_diff")]
    s_diff: f64,
    hd_to_lr: usize,
    fixed_points: usize,
    report: SolverReport,
}

#[derive(Serialize)]
struct BrainSummary {
    n: usize,
    density: f64,
    edges: usize,
    init: String,
    seed: u64,
    runs: Vec<BrainRun>,
}

fn cmd_brain(a: BrainArgs) -> CliResult<()> {
    let init: InitExpr = a.init.parse().map_err(|e: approxsym::Error| Failure::Usage(e.to_string()))?;
    let wm = load_matrix(&a.matrix).map_err(|e| Failure::Op(format!("{}: {e}", a.matrix.display())))?;
    let g = binarize_density(&wm, a.density)?;
    let n = g.n();
    let lr = match a.lr_map.as_str() {
        "halves" => lr_halves(n)?,
        other => match other.strip_prefix("file:") {
            Some(path) => lr_from_file(path, n)?,
            None => return Err(Failure::Usage(format!("unknown --lr-map {other:?}"))),
        },
    };
    if let Some(path) = &a.graph_out {
        write_text(path, &g.to_text())?;
    }
    eprintln!("n={n} edges={} connected={}", g.m(), g.is_connected());
    let s_lr = symmetry_coefficient(&g, &lr)?;
    let mut runs = Vec::new();
    for &method in &a.methods {
        let report = run_solver(method, &g, &init, Some(&lr), &a.flags, a.seed)?;
        let hd = report.final_perm.hamming(&lr)?;
        println!(
            "{} S_final={} S_lr={} diff={} hd={hd}",
            method.name(),
            fmt_sig10(report.s),
            fmt_sig10(s_lr),
            fmt_sig10(report.s - s_lr)
        );
        runs.push(BrainRun {
            method: method.name(),
            s_final: report.s,
            s_lr,
            s_diff: report.s - s_lr,
            hd_to_lr: hd,
            fixed_points: report.fixed_point_count,
            report,
        });
    }
    if let Some(path) = &a.out {
        let summary = BrainSummary {
            n,
            density: a.density,
            edges: g.m(),
            init: init.to_string(),
            seed: a.seed,
            runs,
        };
        let mut text = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Op(e.to_string()))?;
        text.push('\n');
        write_text(path, &text)?;
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> CliResult<()> {
    if a.x == a.y {
        return Err(Failure::Usage("--x and --y must name different methods".into()));
    }
    let text = read_text(&a.csv)?;
    let records = read_csv(text.as_bytes())?;
    let rows = compare_methods(&records, a.x, a.y, a.alpha)?;
    let out = comparison_to_csv(&rows);
    match &a.out {
        Some(path) => write_text(path, &out)?,
        None => print!("{out}"),
    }
    Ok(())
}
