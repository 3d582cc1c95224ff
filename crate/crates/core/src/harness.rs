//! Paired AFP/QSA experiments over parameter sweeps of a graph model.
//!
//! Each `(cell, repetition)` unit generates one graph from a seed derived
//! from `(base_seed, model, cell, repetition)` and runs every requested
//! method on that graph from the same initial permutation. Units may run
//! concurrently; records are returned in `(cell, repetition, method)` order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::afp::{afp_solve, AfpOptions};
use crate::error::{invalid, Error, Result};
use crate::generators::{distort_lrm, gen_ba, gen_er, gen_grid, gen_lrm, gen_sbm, rewire_k};
use crate::graph::Graph;
use crate::init::InitExpr;
use crate::metrics::PenaltyVector;
use crate::perm::Permutation;
use crate::qsa::{qsa_solve, InitSpec, QsaOptions, DEFAULT_BLEND};
use crate::report::SolverReport;
use crate::stats::{bonferroni, cohens_d_paired, paired_t_test};

pub const CSV_HEADER: [&str; 12] = [
    "model",
    "params",
    "method",
    "seed",
    "run_index",
    "S",
    "epsilon",
    "fixed_points",
    "hd_to_reference",
    "is_identity",
    "iterations",
    "wall_ms",
];

pub const MODEL_NAMES: [&str; 7] = [
    "grid",
    "er",
    "ba",
    "sbm",
    "lrm",
    "lrm-rewired",
    "lrm-distorted",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Afp,
    Qsa,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Afp => "afp",
            Method::Qsa => "qsa",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "afp" => Ok(Method::Afp),
            "qsa" => Ok(Method::Qsa),
            _ => Err(invalid(format!("unknown method {s:?} (expected afp or qsa)"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Seeds

/// FNV-1a over the parts followed by a SplitMix64 finaliser. Stable across
/// platforms and releases.
pub fn derive_seed(base: u64, parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    feed(&base.to_le_bytes());
    for part in parts {
        feed(part.as_bytes());
        feed(&[0xff]);
    }
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// Models

/// One concrete parameterisation of a graph model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Grid { dims: Vec<usize> },
    Er { n: usize, p: f64 },
    Ba { n: usize, m: usize },
    Sbm { sizes: Vec<usize>, probs: Vec<Vec<f64>> },
    Lrm { n: usize, p: f64, q: f64 },
    LrmRewired { n: usize, p: f64, q: f64, k: usize },
    LrmDistorted { n: usize, p: f64, q: f64, r: usize, t: usize },
}

/// A generated graph plus its reference symmetry, when the model has one.
#[derive(Debug, Clone)]
pub struct Generated {
    pub graph: Graph,
    pub reference: Option<Permutation>,
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Grid { .. } => "grid",
            ModelSpec::Er { .. } => "er",
            ModelSpec::Ba { .. } => "ba",
            ModelSpec::Sbm { .. } => "sbm",
            ModelSpec::Lrm { .. } => "lrm",
            ModelSpec::LrmRewired { .. } => "lrm-rewired",
            ModelSpec::LrmDistorted { .. } => "lrm-distorted",
        }
    }

    /// Builds a model from named parameters (see [`Cell`]).
    pub fn from_params(model: &str, params: &Cell) -> Result<ModelSpec> {
        let int = |k: &str| params.int(k);
        let float = |k: &str| params.float(k);
        let spec = match model {
            "grid" => ModelSpec::Grid {
                dims: params.int_list("dims")?,
            },
            "er" => ModelSpec::Er {
                n: int("n")?,
                p: float("p")?,
            },
            "ba" => ModelSpec::Ba {
                n: int("n")?,
                m: int("m")?,
            },
            "sbm" => {
                let sizes = params.int_list("sizes")?;
                let probs = match params.get("probs") {
                    Some(ParamValue::Matrix(m)) => m.clone(),
                    Some(_) => return Err(invalid("sbm `probs` must be a matrix")),
                    None => {
                        let (pin, pout) = (float("p_in")?, float("p_out")?);
                        let r = sizes.len();
                        (0..r)
                            .map(|a| (0..r).map(|b| if a == b { pin } else { pout }).collect())
                            .collect()
                    }
                };
                ModelSpec::Sbm { sizes, probs }
            }
            "lrm" => ModelSpec::Lrm {
                n: int("n")?,
                p: float("p")?,
                q: float("q")?,
            },
            "lrm-rewired" => ModelSpec::LrmRewired {
                n: int("n")?,
                p: float("p")?,
                q: float("q")?,
                k: int("k")?,
            },
            "lrm-distorted" => ModelSpec::LrmDistorted {
                n: int("n")?,
                p: float("p")?,
                q: float("q")?,
                r: int("r")?,
                t: int("t")?,
            },
            other => {
                return Err(invalid(format!(
                    "unknown model {other:?} (expected one of {})",
                    MODEL_NAMES.join(", ")
                )))
            }
        };
        Ok(spec)
    }

    pub fn generate(&self, seed: u64) -> Result<Generated> {
        let plain = |graph| Generated {
            graph,
            reference: None,
        };
        Ok(match self {
            ModelSpec::Grid { dims } => plain(gen_grid(dims)?),
            ModelSpec::Er { n, p } => plain(gen_er(*n, *p, seed)?),
            ModelSpec::Ba { n, m } => plain(gen_ba(*n, *m, seed)?),
            ModelSpec::Sbm { sizes, probs } => plain(gen_sbm(sizes, probs, seed)?),
            ModelSpec::Lrm { n, p, q } => {
                let inst = gen_lrm(*n, *p, *q, seed)?;
                Generated {
                    graph: inst.graph,
                    reference: Some(inst.lr),
                }
            }
            ModelSpec::LrmRewired { n, p, q, k } => {
                let inst = gen_lrm(*n, *p, *q, seed)?;
                Generated {
                    graph: rewire_k(&inst.graph, *k, derive_seed(seed, &["rewire"]))?,
                    reference: Some(inst.lr),
                }
            }
            ModelSpec::LrmDistorted { n, p, q, r, t } => {
                let inst = gen_lrm(*n, *p, *q, seed)?;
                let d = distort_lrm(&inst, *r, *t, derive_seed(seed, &["distort"]))?;
                Generated {
                    graph: d.graph,
                    reference: Some(d.lr),
                }
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Parameter sweeps

/// Value of one model parameter within a cell.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    IntList(Vec<i64>),
    Matrix(Vec<Vec<f64>>),
}

impl ParamValue {
    fn render(&self) -> String {
        match self {
            ParamValue::Int(v) => v.to_string(),
            ParamValue::Float(v) => fmt_sig10(*v),
            ParamValue::IntList(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x"),
            ParamValue::Matrix(m) => m
                .iter()
                .map(|row| row.iter().map(|v| fmt_sig10(*v)).collect::<Vec<_>>().join("/"))
                .collect::<Vec<_>>()
                .join("|"),
        }
    }
}

/// One point of a parameter sweep: named values in key order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cell(pub BTreeMap<String, ParamValue>);

impl Cell {
    pub fn get(&self, key: &str) -> Option<&ParamValue> {
        self.0.get(key)
    }

    fn missing(key: &str) -> Error {
        invalid(format!("missing model parameter `{key}`"))
    }

    pub fn int(&self, key: &str) -> Result<usize> {
        match self.get(key) {
            Some(ParamValue::Int(v)) if *v >= 0 => Ok(*v as usize),
            Some(other) => Err(invalid(format!(
                "parameter `{key}` must be a non-negative integer, got {other:?}"
            ))),
            None => Err(Self::missing(key)),
        }
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        match self.get(key) {
            Some(ParamValue::Float(v)) => Ok(*v),
            Some(ParamValue::Int(v)) => Ok(*v as f64),
            Some(other) => Err(invalid(format!("parameter `{key}` must be a number, got {other:?}"))),
            None => Err(Self::missing(key)),
        }
    }

    pub fn int_list(&self, key: &str) -> Result<Vec<usize>> {
        match self.get(key) {
            Some(ParamValue::IntList(v)) if v.iter().all(|&x| x >= 0) => {
                Ok(v.iter().map(|&x| x as usize).collect())
            }
            Some(other) => Err(invalid(format!(
                "parameter `{key}` must be a list of non-negative integers, got {other:?}"
            ))),
            None => Err(Self::missing(key)),
        }
    }

    /// `key=value` pairs joined by `;`, keys sorted.
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| format!("{k}={}", v.render()))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Parameters whose single value is itself a list.
const LIST_PARAMS: [&str; 2] = ["dims", "sizes"];
const MATRIX_PARAMS: [&str; 1] = ["probs"];

fn scalar_value(key: &str, v: &toml::Value) -> Result<ParamValue> {
    match v {
        toml::Value::Integer(i) => Ok(ParamValue::Int(*i)),
        toml::Value::Float(f) => Ok(ParamValue::Float(*f)),
        other => Err(invalid(format!("parameter `{key}`: unsupported value {other}"))),
    }
}

fn int_list_value(key: &str, v: &toml::Value) -> Result<ParamValue> {
    let arr = v
        .as_array()
        .ok_or_else(|| invalid(format!("parameter `{key}` must be a list of integers")))?;
    arr.iter()
        .map(|x| {
            x.as_integer()
                .ok_or_else(|| invalid(format!("parameter `{key}` must be a list of integers")))
        })
        .collect::<Result<Vec<_>>>()
        .map(ParamValue::IntList)
}

fn matrix_value(key: &str, v: &toml::Value) -> Result<ParamValue> {
    let bad = || invalid(format!("parameter `{key}` must be a matrix of numbers"));
    let rows = v.as_array().ok_or_else(bad)?;
    rows.iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)).ok_or_else(bad))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()
        .map(ParamValue::Matrix)
}

/// Values a parameter sweeps over. Scalars may be given as a list; list
/// parameters (`dims`, `sizes`) sweep when given as a list of lists.
fn sweep_values(key: &str, v: &toml::Value) -> Result<Vec<ParamValue>> {
    if MATRIX_PARAMS.contains(&key) {
        return Ok(vec![matrix_value(key, v)?]);
    }
    if LIST_PARAMS.contains(&key) {
        let arr = v
            .as_array()
            .ok_or_else(|| invalid(format!("parameter `{key}` must be a list")))?;
        if arr.first().is_some_and(|x| x.is_array()) {
            return arr.iter().map(|x| int_list_value(key, x)).collect();
        }
        return Ok(vec![int_list_value(key, v)?]);
    }
    match v {
        toml::Value::Array(arr) => {
            if arr.is_empty() {
                return Err(invalid(format!("parameter `{key}` sweeps over no values")));
            }
            arr.iter().map(|x| scalar_value(key, x)).collect()
        }
        other => Ok(vec![scalar_value(key, other)?]),
    }
}

/// Cross product of all parameter sweeps, last key varying fastest.
pub fn expand_cells(params: &BTreeMap<String, toml::Value>) -> Result<Vec<Cell>> {
    let mut cells = vec![Cell::default()];
    for (key, value) in params {
        let values = sweep_values(key, value)?;
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                values.iter().map(move |v| {
                    let mut c = cell.clone();
                    c.0.insert(key.clone(), v.clone());
                    c
                })
            })
            .collect();
    }
    Ok(cells)
}

// ---------------------------------------------------------------------------
// Configuration

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfpConfig {
    pub max_fp: Option<usize>,
    pub budget: Option<u64>,
    pub sched_c: Option<f64>,
    pub sched_d: Option<f64>,
}

impl AfpConfig {
    pub fn options(&self, seed: u64, init: InitSpec) -> AfpOptions {
        AfpOptions {
            max_fp: self.max_fp,
            budget: self.budget,
            sched_c: self.sched_c,
            sched_d: self.sched_d.unwrap_or(2.0),
            seed,
            init,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QsaConfig {
    pub max_iters: Option<usize>,
    pub rel_tol: Option<f64>,
    /// Weight of the flat matrix mixed into the initial permutation.
    pub blend: Option<f64>,
    /// Uniform penalty value; defaults to `2·d_max + 1`.
    pub penalty: Option<f64>,
}

impl QsaConfig {
    pub fn options(&self, n: usize, init: Permutation) -> Result<QsaOptions> {
        let defaults = QsaOptions::default();
        Ok(QsaOptions {
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            rel_tol: self.rel_tol.unwrap_or(defaults.rel_tol),
            init: InitSpec::blend(InitSpec::Given(init), self.blend.unwrap_or(DEFAULT_BLEND)),
            penalty: self.penalty.map(|v| PenaltyVector::uniform(n, v)).transpose()?,
        })
    }
}

/// Experiment description, usually read from TOML.
///
/// ```toml
/// model = "er"
/// methods = ["afp", "qsa"]
/// repetitions = 30
/// base_seed = 1
/// init = "random"          # any init expression; `lr` = model reference
///
/// [params]                 # scalars or lists (swept as a cross product)
/// n = 100
/// p = [0.2, 0.3]
///
/// [afp]                    # optional: max_fp, budget, sched_c, sched_d
/// [qsa]                    # optional: max_iters, rel_tol, blend, penalty
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    #[serde(default)]
    pub params: BTreeMap<String, toml::Value>,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    pub base_seed: u64,
    #[serde(default = "default_init")]
    pub init: String,
    /// Record wall-clock times; off keeps outputs byte-reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub afp: AfpConfig,
    #[serde(default)]
    pub qsa: QsaConfig,
}

fn default_init() -> String {
    "random".into()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| invalid(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !MODEL_NAMES.contains(&self.model.as_str()) {
            return Err(invalid(format!("unknown model {:?}", self.model)));
        }
        if self.repetitions == 0 {
            return Err(invalid("repetitions must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(invalid("at least one method is required"));
        }
        self.init_expr()?;
        expand_cells(&self.params)?;
        Ok(())
    }

    pub fn init_expr(&self) -> Result<InitExpr> {
        self.init.parse()
    }
}

// ---------------------------------------------------------------------------
// Records

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub model: String,
    pub params: String,
    pub method: Method,
    pub seed: u64,
    pub run_index: usize,
    /// NaN marks a failed unit.
    pub s: f64,
    /// −1 marks a failed unit.
    pub epsilon: i64,
    pub fixed_points: i64,
    /// −1 when there is no reference permutation.
    pub hd_to_reference: i64,
    pub is_identity: bool,
    pub iterations: u64,
    pub wall_ms: u64,
}

impl ExperimentRecord {
    pub fn is_error(&self) -> bool {
        self.s.is_nan()
    }
}

/// Seeds and starting permutation shared by all methods of one unit.
#[derive(Debug, Clone)]
pub struct PlannedUnit {
    pub cell: Cell,
    pub run_index: usize,
    pub graph_seed: u64,
    pub generated: Generated,
    pub init: Permutation,
}

/// Generates the graph and shared initial permutation for one unit.
pub fn plan_unit(cfg: &ExperimentConfig, cell: &Cell, run_index: usize) -> Result<PlannedUnit> {
    let label = cell.label();
    let graph_seed = derive_seed(cfg.base_seed, &[&cfg.model, &label, &run_index.to_string()]);
    let spec = ModelSpec::from_params(&cfg.model, cell)?;
    let generated = spec.generate(graph_seed)?;
    let n = generated.graph.n();
    let max_fp = if cfg.methods.contains(&Method::Afp) {
        cfg.afp.options(0, InitSpec::Random).max_fp_for(n)
    } else {
        n
    };
    let init = cfg.init_expr()?.resolve(
        n,
        generated.reference.as_ref(),
        max_fp,
        derive_seed(graph_seed, &["init"]),
    )?;
    Ok(PlannedUnit {
        cell: cell.clone(),
        run_index,
        graph_seed,
        generated,
        init,
    })
}

fn run_method(cfg: &ExperimentConfig, unit: &PlannedUnit, method: Method) -> Result<SolverReport> {
    let g = &unit.generated.graph;
    match method {
        Method::Afp => {
            let seed = derive_seed(unit.graph_seed, &["afp"]);
            afp_solve(g, &cfg.afp.options(seed, InitSpec::Given(unit.init.clone())))
        }
        Method::Qsa => {
            let opts = cfg.qsa.options(g.n(), unit.init.clone())?;
            qsa_solve(g, &opts, derive_seed(unit.graph_seed, &["qsa"]))
        }
    }
}

fn run_unit(cfg: &ExperimentConfig, cell: &Cell, run_index: usize) -> Vec<ExperimentRecord> {
    let label = cell.label();
    let failed = |method: Method, seed: u64, err: &Error| {
        eprintln!(
            "error: {} [{}] run {run_index} {}: {err}",
            cfg.model,
            label,
            method.name()
        );
        ExperimentRecord {
            model: cfg.model.clone(),
            params: label.clone(),
            method,
            seed,
            run_index,
            s: f64::NAN,
            epsilon: -1,
            fixed_points: -1,
            hd_to_reference: -1,
            is_identity: false,
            iterations: 0,
            wall_ms: 0,
        }
    };
    let unit = match plan_unit(cfg, cell, run_index) {
        Ok(u) => u,
        Err(e) => {
            let seed = derive_seed(cfg.base_seed, &[&cfg.model, &label, &run_index.to_string()]);
            return cfg.methods.iter().map(|&m| failed(m, seed, &e)).collect();
        }
    };
    cfg.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            match run_method(cfg, &unit, method) {
                Ok(rep) => ExperimentRecord {
                    model: cfg.model.clone(),
                    params: label.clone(),
                    method,
                    seed: unit.graph_seed,
                    run_index,
                    s: rep.s,
                    epsilon: rep.epsilon as i64,
                    fixed_points: rep.fixed_point_count as i64,
                    hd_to_reference: unit
                        .generated
                        .reference
                        .as_ref()
                        .map_or(-1, |r| r.hamming(&rep.final_perm).unwrap_or(0) as i64),
                    is_identity: rep.is_identity,
                    iterations: rep.iters as u64,
                    wall_ms: if cfg.timing {
                        start.elapsed().as_millis() as u64
                    } else {
                        0
                    },
                },
                Err(e) => failed(method, unit.graph_seed, &e),
            }
        })
        .collect()
}

/// Runs every `(cell, repetition, method)` of the experiment on the current
/// rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let cells = expand_cells(&cfg.params)?;
    let units: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.repetitions).map(move |r| (c, r)))
        .collect();
    let chunks: Vec<Vec<ExperimentRecord>> = units
        .par_iter()
        .map(|&(c, r)| run_unit(cfg, &cells[c], r))
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// As [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    cfg: &ExperimentConfig,
    workers: usize,
) -> Result<Vec<ExperimentRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(cfg))
}

// ---------------------------------------------------------------------------
// CSV

/// Formats with 10 significant digits, `%g` style.
pub fn fmt_sig10(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let csv_err = |e: csv::Error| invalid(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.model.clone(),
            r.params.clone(),
            r.method.name().to_string(),
            r.seed.to_string(),
            r.run_index.to_string(),
            fmt_sig10(r.s),
            r.epsilon.to_string(),
            r.fixed_points.to_string(),
            r.hd_to_reference.to_string(),
            r.is_identity.to_string(),
            r.iterations.to_string(),
            r.wall_ms.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 csv")
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr
        .headers()
        .map_err(|e| invalid(format!("csv: {e}")))?
        .clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(invalid(format!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let field = |k: usize| row.get(k).unwrap_or("");
        fn num<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> Result<T> {
            s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad {name} value {s:?}"),
            })
        }
        out.push(ExperimentRecord {
            model: field(0).to_string(),
            params: field(1).to_string(),
            method: field(2).parse()?,
            seed: num(field(3), "seed", line)?,
            run_index: num(field(4), "run_index", line)?,
            s: num(field(5), "S", line)?,
            epsilon: num(field(6), "epsilon", line)?,
            fixed_points: num(field(7), "fixed_points", line)?,
            hd_to_reference: num(field(8), "hd_to_reference", line)?,
            is_identity: num(field(9), "is_identity", line)?,
            iterations: num(field(10), "iterations", line)?,
            wall_ms: num(field(11), "wall_ms", line)?,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Aggregation

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Model,
    Params,
    Method,
    Seed,
    RunIndex,
}

impl std::str::FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "model" => GroupKey::Model,
            "params" => GroupKey::Params,
            "method" => GroupKey::Method,
            "seed" => GroupKey::Seed,
            "run_index" => GroupKey::RunIndex,
            _ => return Err(invalid(format!("unknown group key {s:?}"))),
        })
    }
}

fn group_key(r: &ExperimentRecord, keys: &[GroupKey]) -> Vec<String> {
    keys.iter()
        .map(|k| match k {
            GroupKey::Model => r.model.clone(),
            GroupKey::Params => r.params.clone(),
            GroupKey::Method => r.method.name().to_string(),
            GroupKey::Seed => r.seed.to_string(),
            GroupKey::RunIndex => r.run_index.to_string(),
        })
        .collect()
}

/// Per group, the record with the smallest `S` (ties: smallest seed; failed
/// runs lose to any successful one). Groups appear in first-seen order.
pub fn best_of(records: &[ExperimentRecord], keys: &[GroupKey]) -> Result<Vec<ExperimentRecord>> {
    if records.is_empty() {
        return Err(invalid("best_of needs at least one record"));
    }
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut best: BTreeMap<Vec<String>, &ExperimentRecord> = BTreeMap::new();
    let rank = |r: &ExperimentRecord| (if r.s.is_nan() { f64::INFINITY } else { r.s }, r.seed);
    for r in records {
        let key = group_key(r, keys);
        match best.get(&key) {
            None => {
                order.push(key.clone());
                best.insert(key, r);
            }
            Some(cur) => {
                let (a, b) = (rank(r), rank(cur));
                if a.0 < b.0 || (a.0 == b.0 && a.1 < b.1) {
                    best.insert(key, r);
                }
            }
        }
    }
    Ok(order.iter().map(|k| best[k].clone()).collect())
}

/// Paired statistics for one parameter cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub params: String,
    pub n_pairs: usize,
    pub mean_x: f64,
    pub mean_y: f64,
    pub t: f64,
    pub p: f64,
    pub df: usize,
    pub alpha_bonferroni: f64,
    pub significant: bool,
    pub cohens_d: f64,
}

pub const COMPARE_HEADER: [&str; 11] = [
    "model",
    "params",
    "n_pairs",
    "mean_x",
    "mean_y",
    "t",
    "p",
    "df",
    "alpha_bonferroni",
    "significant",
    "cohens_d",
];

/// Paired t-test and Cohen's d of `S(x) − S(y)` per `(model, params)` cell,
/// pairing records by `(seed, run_index)`. Bonferroni-corrects `alpha` over
/// the number of cells.
pub fn compare_methods(
    records: &[ExperimentRecord],
    x: Method,
    y: Method,
    alpha: f64,
) -> Result<Vec<ComparisonRow>> {
    type Runs = BTreeMap<(u64, usize), f64>;
    let mut order: Vec<(String, String)> = Vec::new();
    let mut cells: BTreeMap<(String, String), (Runs, Runs)> = BTreeMap::new();
    for r in records {
        if r.method != x && r.method != y {
            continue;
        }
        let key = (r.model.clone(), r.params.clone());
        let entry = cells.entry(key.clone()).or_insert_with(|| {
            order.push(key.clone());
            Default::default()
        });
        let side = if r.method == x { &mut entry.0 } else { &mut entry.1 };
        if side.insert((r.seed, r.run_index), r.s).is_some() {
            return Err(invalid(format!(
                "duplicate {} record for [{}] run {}",
                r.method.name(),
                r.params,
                r.run_index
            )));
        }
    }
    if order.is_empty() {
        return Err(invalid("no records for the compared methods"));
    }
    let alpha_b = bonferroni(alpha, order.len())?;
    let mut rows = Vec::with_capacity(order.len());
    for key in order {
        let (xs, ys) = &cells[&key];
        if xs.keys().ne(ys.keys()) {
            return Err(invalid(format!(
                "unpaired records in [{}]: {} has {} runs, {} has {}",
                key.1,
                x.name(),
                xs.len(),
                y.name(),
                ys.len()
            )));
        }
        let xv: Vec<f64> = xs.values().copied().collect();
        let yv: Vec<f64> = ys.values().copied().collect();
        if xv.iter().chain(&yv).any(|v| v.is_nan()) {
            return Err(invalid(format!("failed runs present in [{}]", key.1)));
        }
        let tt = paired_t_test(&xv, &yv)?;
        let n = xv.len() as f64;
        rows.push(ComparisonRow {
            model: key.0,
            params: key.1,
            n_pairs: xv.len(),
            mean_x: xv.iter().sum::<f64>() / n,
            mean_y: yv.iter().sum::<f64>() / n,
            t: tt.t,
            p: tt.p,
            df: tt.df,
            alpha_bonferroni: alpha_b,
            significant: tt.p < alpha_b,
            cohens_d: cohens_d_paired(&xv, &yv)?,
        });
    }
    Ok(rows)
}

pub fn comparison_to_csv(rows: &[ComparisonRow]) -> String {
    let mut s = COMPARE_HEADER.join(",");
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.model),
            csv_field(&r.params),
            r.n_pairs,
            fmt_sig10(r.mean_x),
            fmt_sig10(r.mean_y),
            fmt_sig10(r.t),
            fmt_sig10(r.p),
            r.df,
            fmt_sig10(r.alpha_bonferroni),
            r.significant,
            fmt_sig10(r.cohens_d)
        )
        .unwrap();
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
