//! Command-line front end. Each subcommand resolves its configuration from
//! built-in defaults, then an optional JSON config, then explicit flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use specgw::barycenter::{
    betweenness_centrality, bootstrap_runs, bootstrap_subgraphs, centered_variance, BarycenterOptions,
    BootstrapRepresentation,
};
use specgw::graph::Graph;
use specgw::gw::{minimize_gw, RepresentationKind, RepresentationPair, SolverOptions};
use specgw::interpolate::{frame_svg, interpolation_frames, FrameSet};
use specgw::io::{self, CouplingRecord, Metadata, SolveRecord};
use specgw::landscape::{landscape_experiment, LandscapeOptions};
use specgw::matching::{matching_benchmark, node_correctness_matrix, MatchingOptions};
use specgw::measures::{node_distribution, Coupling, NodeDistribution};
use specgw::metrics::{adjusted_mutual_information, modularity};
use specgw::partition::{partition_graph, tune_partition, PartitionRepresentation, TuneOptions, STAGE_ONE_T};
use specgw::sampler::sample_couplings;
use specgw::spectral::{graph_heat_kernel, LaplacianKind};
use specgw::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "specgw", version, about = "Spectral Gromov-Wasserstein graph matching, partitioning and averaging")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON config file; a metadata.json from an earlier run is accepted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Heat kernel of a graph as CSV.
    Kernel(KernelArgs),
    /// Match two graphs, or a graph against a random relabeling of itself.
    Match(MatchArgs),
    /// Partition a graph into k clusters.
    Partition(PartitionArgs),
    /// Choose k and t by modularity.
    Tune(TuneArgs),
    /// Sample couplings uniformly by hit-and-run.
    Sample(SampleArgs),
    /// Local-minimum statistics of the adjacency and spectral losses.
    Landscape(LandscapeArgs),
    /// Barycenters of input graphs or of bootstrap subgraphs of a base graph.
    Barycenter(BarycenterArgs),
    /// Interpolation frames between two matched graphs.
    Interpolate(InterpolateArgs),
    /// Matching or partitioning sweep over a directory of edge lists.
    Benchmark(BenchmarkArgs),
}

fn parse_serde<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossChoice {
    Adjacency,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepChoice {
    Adjacency,
    HeatKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkMode {
    Matching,
    Partition,
}

macro_rules! flags {
    ($(#[$m:meta])* $name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Default, Args, Serialize)]
        pub struct $name {
            $(
                $(#[$fm])*
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

flags!(KernelArgs {
    #[arg(long)] graph: String,
    #[arg(long)] t: f64,
    #[arg(long, value_parser = parse_serde::<LaplacianKind>)] laplacian: LaplacianKind,
    #[arg(long)] seed: u64,
    #[arg(long)] out: String,
});

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub graph: String,
    pub t: f64,
    /// `None` picks normalized for undirected and Chung for directed graphs.
    pub laplacian: Option<LaplacianKind>,
    pub seed: u64,
    pub out: String,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            graph: String::new(),
            t: 1.0,
            laplacian: None,
            seed: 0,
            out: "out".into(),
        }
    }
}

flags!(MatchArgs {
    #[arg(long)] graph_a: String,
    /// Omit to match against a seeded relabeling of graph A.
    #[arg(long)] graph_b: String,
    /// "node_in_a node_in_b" lines giving the true correspondence.
    #[arg(long)] truth: String,
    #[arg(long, value_parser = parse_serde::<LossChoice>)] loss: LossChoice,
    #[arg(long)] t: f64,
    #[arg(long, value_parser = parse_serde::<LaplacianKind>)] laplacian: LaplacianKind,
    #[arg(long, allow_negative_numbers = true)] a: f64,
    #[arg(long, allow_negative_numbers = true)] b: f64,
    #[arg(long)] vertex_snap: bool,
    #[arg(long)] max_iters: usize,
    #[arg(long)] rel_tol: f64,
    #[arg(long)] epsilon: f64,
    #[arg(long)] seed: u64,
    #[arg(long)] out: String,
});

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    pub graph_a: String,
    pub graph_b: Option<String>,
    pub truth: Option<String>,
    pub loss: LossChoice,
    pub t: f64,
    pub laplacian: Option<LaplacianKind>,
    pub a: f64,
    pub b: f64,
    pub vertex_snap: bool,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub out: String,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            graph_a: String::new(),
            graph_b: None,
            truth: None,
            loss: LossChoice::Spectral,
            t: 10.0,
            laplacian: None,
            a: 0.0,
            b: 0.0,
            vertex_snap: false,
            max_iters: 1000,
            rel_tol: 1e-9,
            epsilon: None,
            seed: 0,
            out: "out".into(),
        }
    }
}

flags!(PartitionArgs {
    #[arg(long)] graph: String,
    #[arg(long)] k: usize,
    #[arg(long)] t: f64,
    #[arg(long, value_parser = parse_serde::<RepChoice>)] representation: RepChoice,
    #[arg(long, value_parser = parse_serde::<LaplacianKind>)] laplacian: LaplacianKind,
    #[arg(long, allow_negative_numbers = true)] a: f64,
    #[arg(long, allow_negative_numbers = true)] b: f64,
    #[arg(long)] max_iters: usize,
    #[arg(long)] rel_tol: f64,
    #[arg(long)] seed: u64,
    #[arg(long)] out: String,
});

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub graph: String,
    pub k: usize,
    pub t: f64,
    pub representation: RepChoice,
    pub laplacian: Option<LaplacianKind>,
    pub a: f64,
    pub b: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub out: String,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            graph: String::new(),
            k: 2,
            t: STAGE_ONE_T,
            representation: RepChoice::HeatKernel,
            laplacian: None,
            a: 0.0,
            b: 0.0,
            max_iters: 1000,
            rel_tol: 1e-9,
            seed: 0,
            out: "out".into(),
        }
    }
}

flags!(TuneArgs {
    #[arg(long)] graph: String,
    #[arg(long, value_delimiter = ',')] k_values: Vec<usize>,
    #[arg(long, value_delimiter = ',')] t_values: Vec<f64>,
    #[arg(long)] stage_one_t: f64,
    #[arg(long, value_parser = parse_serde::<RepChoice>)] representation: RepChoice,
    #[arg(long, value_parser = parse_serde::<LaplacianKind>)] laplacian: LaplacianKind,
    #[arg(long, allow_negative_numbers = true)] a: f64,
    #[arg(long, allow_negative_numbers = true)] b: f64,
    /// Ground-truth labels; adds the AMI of the chosen partition.
    #[arg(long)] labels: String,
    #[arg(long)] max_iters: usize,
    #[arg(long)] rel_tol: f64,
    #[arg(long)] seed: u64,
    #[arg(long)] out: String,
});

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub graph: String,
    pub k_values: Vec<usize>,
    pub t_values: Vec<f64>,
    pub stage_one_t: f64,
    pub representation: RepChoice,
    pub laplacian: Option<LaplacianKind>,
    pub a: f64,
    pub b: f64,
    pub labels: Option<String>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub out: String,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            graph: String::new(),
            k_values: (2..=10).collect(),
            t_values: vec![1.0, 5.0, 10.0, 20.0, 50.0],
            stage_one_t: STAGE_ONE_T,
            representation: RepChoice::HeatKernel,
            laplacian: None,
            a: 0.0,
            b: 0.0,
            labels: None,
            max_iters: 1000,
            rel_tol: 1e-9,
            seed: 0,
            out: "out".into(),
        }
    }
}

flags!(SampleArgs {
    #[arg(long)] graph_a: String,
    #[arg(long)] graph_b: String,
    #[arg(long, allow_negative_numbers = true)] a: f64,
    #[arg(long, allow_negative_numbers = true)] b: f64,
    #[arg(long)] n_samples: usize,
    #[arg(long)] steps_between: usize,
    #[arg(long)] seed: u64,
    #[arg(long)] out: String,
});

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub graph_a: String,
    pub graph_b: String,
    pub a: f64,
    pub b: f64,
    pub n_samples: usize,
    pub steps_between: usize,
    pub seed: u64,
    pub out: String,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            graph_a: String::new(),
            graph_b: String::new(),
            a: 0.0,
            b: 0.0,
            n_samples: 10,
            steps_between: 1000,
            seed: 0,
            out: "out".into(),
        }
    }
}

flags!(LandscapeArgs {
    #[arg(long)] graph_a: String,
    #[arg(long)] graph_b: String,
    #[arg(long, value_delimiter = ',')] t_values: Vec<f64>,
    #[arg(long)] n_inits: usize,
    #[arg(long)] steps_between: usize,
    #[arg(long, value_parser = parse_serde::<LaplacianKind>)] laplacian: LaplacianKind,
    #[arg(long, allow_negative_numbers = true)] a: f64,
    #[arg(long, allow_negative_numbers = true)] b: f64,
    #[arg(long)] max_iters: usize,
    #[arg(long)] rel_tol: f64,
    #[arg(long)] seed: u64,
    #[arg(long)] out: String,
});

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeConfig {
    pub graph_a: String,
    pub graph_b: String,
    pub t_values: Vec<f64>,
    pub n_inits: usize,
    pub steps_between: usize,
    pub laplacian: Option<LaplacianKind>,
    pub a: f64,
    pub b: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub out: String,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            graph_a: String::new(),
            graph_b: String::new(),
            t_values: vec![5.0, 10.0, 20.0],
            n_inits: 50,
            steps_between: 1000,
            laplacian: None,
            a: 0.0,
            b: 0.0,
            max_iters: 1000,
            rel_tol: 1e-9,
            seed: 0,
            out: "out".into(),
        }
    }
}

flags!(BarycenterArgs {
    /// Input graphs; ignored when --base is given.
    #[arg(long, value_delimiter = ',')] graphs: Vec<String>,
    /// Base graph for the betweenness bootstrap.
    #[arg(long)] base: String,
    #[arg(long)] n_samples: usize,
    #[arg(long)] sample_size: usize,
    #[arg(long)] pool_size: usize,
    #[arg(long)] target_size: usize,
    /// Heat-kernel times; the adjacency representation always runs too.
    #[arg(long, value_delimiter = ',')] t_values: Vec<f64>,
    #[arg(long)] n_inits: usize,
    #[arg(long, value_parser = parse_serde::<LaplacianKind>)] laplacian: LaplacianKind,
    #[arg(long)] max_iters: usize,
    #[arg(long)] rel_tol: f64,
    #[arg(long)] seed: u64,
    #[arg(long)] out: String,
});

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarycenterConfig {
    pub graphs: Vec<String>,
    pub base: Option<String>,
    pub n_samples: usize,
    pub sample_size: usize,
    pub pool_size: usize,
    pub target_size: usize,
    pub t_values: Vec<f64>,
    pub n_inits: usize,
    pub laplacian: LaplacianKind,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub out: String,
}

impl Default for BarycenterConfig {
    fn default() -> Self {
        Self {
            graphs: Vec::new(),
            base: None,
            n_samples: 10,
            sample_size: 30,
            pool_size: 40,
            target_size: 30,
            t_values: vec![7.0],
            n_inits: 10,
            laplacian: LaplacianKind::Standard,
            max_iters: 100,
            rel_tol: 1e-9,
            seed: 0,
            out: "out".into(),
        }
    }
}

flags!(InterpolateArgs {
    #[arg(long)] graph_a: String,
    #[arg(long)] graph_b: String,
    /// Dense coupling CSV; omit to solve the spectral matching.
    #[arg(long)] coupling: String,
    #[arg(long)] t: f64,
    #[arg(long, value_parser = parse_serde::<LaplacianKind>)] laplacian: LaplacianKind,
    #[arg(long, allow_negative_numbers = true)] a: f64,
    #[arg(long, allow_negative_numbers = true)] b: f64,
    #[arg(long)] n_frames: usize,
    #[arg(long)] svg: bool,
    #[arg(long)] seed: u64,
    #[arg(long)] out: String,
});

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolateConfig {
    pub graph_a: String,
    pub graph_b: String,
    pub coupling: Option<String>,
    pub t: f64,
    pub laplacian: Option<LaplacianKind>,
    pub a: f64,
    pub b: f64,
    pub n_frames: usize,
    pub svg: bool,
    pub seed: u64,
    pub out: String,
}

impl Default for InterpolateConfig {
    fn default() -> Self {
        Self {
            graph_a: String::new(),
            graph_b: String::new(),
            coupling: None,
            t: 10.0,
            laplacian: None,
            a: 0.0,
            b: 0.0,
            n_frames: 10,
            svg: false,
            seed: 0,
            out: "out".into(),
        }
    }
}

flags!(BenchmarkArgs {
    /// Directory of `*.edges` files, processed in file-name order.
    #[arg(long)] dir: String,
    #[arg(long, value_parser = parse_serde::<BenchmarkMode>)] mode: BenchmarkMode,
    /// Spectral times (matching) or the tuning t grid (partition).
    #[arg(long, value_delimiter = ',')] t_values: Vec<f64>,
    #[arg(long, value_delimiter = ',')] k_values: Vec<usize>,
    #[arg(long, value_parser = parse_serde::<LaplacianKind>)] laplacian: LaplacianKind,
    #[arg(long, allow_negative_numbers = true)] a: f64,
    #[arg(long, allow_negative_numbers = true)] b: f64,
    #[arg(long)] seed: u64,
    #[arg(long)] out: String,
});

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub dir: String,
    pub mode: BenchmarkMode,
    pub t_values: Vec<f64>,
    pub k_values: Vec<usize>,
    /// `None` picks normalized for undirected and Chung for directed graphs.
    pub laplacian: Option<LaplacianKind>,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
    pub out: String,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            dir: String::new(),
            mode: BenchmarkMode::Matching,
            t_values: vec![10.0],
            k_values: (2..=10).collect(),
            laplacian: None,
            a: 0.0,
            b: 0.0,
            seed: 0,
            out: "out".into(),
        }
    }
}

/// Overlays the config file and then the explicit flags on the defaults.
fn resolve<C, A>(command: &str, config_path: Option<&Path>, flags: &A) -> Result<C>
where
    C: Default + Serialize + DeserializeOwned,
    A: Serialize,
{
    let mut merged = serde_json::to_value(C::default())?;
    if let Some(path) = config_path {
        let mut file: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
        // metadata files wrap the resolved config
        if let (Some(cmd), Some(inner)) = (file.get("command"), file.get("config")) {
            if cmd.as_str() != Some(command) {
                return Err(Error::InvalidParameter(format!(
                    "config was written by `{}`, not `{command}`",
                    cmd.as_str().unwrap_or("?")
                )));
            }
            file = inner.clone();
        }
        overlay(&mut merged, file)?;
    }
    overlay(&mut merged, serde_json::to_value(flags)?)?;
    Ok(serde_json::from_value(merged)?)
}

fn overlay(base: &mut Value, top: Value) -> Result<()> {
    let (Value::Object(base), Value::Object(top)) = (base, top) else {
        return Err(Error::InvalidParameter("config must be a JSON object".into()));
    };
    for (k, v) in top {
        base.insert(k, v);
    }
    Ok(())
}

fn require(path: &str, what: &str) -> Result<PathBuf> {
    if path.is_empty() {
        return Err(Error::InvalidParameter(format!("--{what} is required")));
    }
    let p = PathBuf::from(path);
    if !p.exists() {
        return Err(Error::InvalidParameter(format!("{what} file {path} does not exist")));
    }
    Ok(p)
}

fn solver(max_iters: usize, rel_tol: f64) -> SolverOptions {
    SolverOptions {
        max_iters,
        rel_tol,
        ..Default::default()
    }
}

struct Run {
    command: &'static str,
    config: Value,
    seed: u64,
    out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be >= 1".into()));
        }
        // fails only if a pool already exists, which keeps the earlier cap
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let start = Instant::now();
    let cfg = cli.config.as_deref();
    let run = match &cli.command {
        Command::Kernel(a) => kernel(resolve("kernel", cfg, a)?)?,
        Command::Match(a) => match_cmd(resolve("match", cfg, a)?)?,
        Command::Partition(a) => partition(resolve("partition", cfg, a)?)?,
        Command::Tune(a) => tune(resolve("tune", cfg, a)?)?,
        Command::Sample(a) => sample(resolve("sample", cfg, a)?)?,
        Command::Landscape(a) => landscape(resolve("landscape", cfg, a)?)?,
        Command::Barycenter(a) => barycenter(resolve("barycenter", cfg, a)?)?,
        Command::Interpolate(a) => interpolate(resolve("interpolate", cfg, a)?)?,
        Command::Benchmark(a) => benchmark(resolve("benchmark", cfg, a)?)?,
    };
    let meta = Metadata::new(run.command, run.config, run.seed, start.elapsed().as_secs_f64());
    io::write_json(&run.out.join("metadata.json"), &meta)
}

fn finish<C: Serialize>(command: &'static str, config: &C, seed: u64, out: &str) -> Result<Run> {
    Ok(Run {
        command,
        config: serde_json::to_value(config)?,
        seed,
        out: PathBuf::from(out),
    })
}

fn kernel(c: KernelConfig) -> Result<Run> {
    let g = io::read_edge_list(&require(&c.graph, "graph")?)?;
    let kind = c.laplacian.unwrap_or_else(|| LaplacianKind::default_for(&g));
    let k = graph_heat_kernel(&g, kind, c.t)?;
    let out = Path::new(&c.out);
    io::write_text(&out.join("kernel.csv"), &io::matrix_csv(k.matrix(), g.node_ids()))?;
    finish("kernel", &c, c.seed, &c.out)
}

/// "node_in_a node_in_b" lines as a permutation of indices.
fn read_truth(path: &Path, g: &Graph, h: &Graph) -> Result<Vec<usize>> {
    let pos = |ids: &[String], id: &str, line: usize| {
        ids.iter().position(|x| x == id).ok_or_else(|| Error::Parse {
            line,
            msg: format!("unknown node {id}"),
        })
    };
    let mut perm = vec![usize::MAX; g.n()];
    for (idx, raw) in fs::read_to_string(path)?.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "expected two node ids".into(),
            });
        }
        perm[pos(g.node_ids(), parts[0], idx + 1)?] = pos(h.node_ids(), parts[1], idx + 1)?;
    }
    if perm.contains(&usize::MAX) {
        return Err(Error::InvalidParameter("truth file does not cover every node".into()));
    }
    Ok(perm)
}

fn match_cmd(c: MatchConfig) -> Result<Run> {
    let g = io::read_edge_list(&require(&c.graph_a, "graph-a")?)?;
    let out = PathBuf::from(&c.out);
    let (h, truth) = match &c.graph_b {
        Some(path) => {
            let h = io::read_edge_list(&require(path, "graph-b")?)?;
            let truth = match &c.truth {
                Some(t) => Some(read_truth(&require(t, "truth")?, &g, &h)?),
                None => None,
            };
            (h, truth)
        }
        None => {
            let pair = specgw::matching::permute_graph(&g, c.seed)?;
            io::write_text(&out.join("permuted.edges"), &io::format_edge_list(&pair.permuted))?;
            let h = pair.permuted.with_node_ids(g.node_ids().to_vec())?;
            (h, Some(pair.permutation))
        }
    };
    let rep = match c.loss {
        LossChoice::Adjacency => RepresentationPair::adjacency(&g, &h)?,
        LossChoice::Spectral => {
            let kind = c.laplacian.unwrap_or_else(|| LaplacianKind::default_for(&g));
            RepresentationPair::spectral(&g, &h, kind, c.t)?
        }
    };
    let p = node_distribution(&g, c.a, c.b)?;
    let q = node_distribution(&h, c.a, c.b)?;
    let mut opts = solver(c.max_iters, c.rel_tol);
    opts.vertex_snap = c.vertex_snap;
    let res = minimize_gw(&rep, &p, &q, &opts)?;
    io::write_text(
        &out.join("coupling.csv"),
        &io::matrix_csv(res.coupling.matrix(), h.node_ids()),
    )?;
    io::write_json(&out.join("coupling.json"), &CouplingRecord::from(&res.coupling))?;
    io::write_json(&out.join("solve.json"), &SolveRecord::new(&res, "coupling.csv"))?;
    if let Some(perm) = truth {
        let score = node_correctness_matrix(res.coupling.matrix(), &perm, c.epsilon)?;
        io::write_json(&out.join("score.json"), &score)?;
    }
    finish("match", &c, c.seed, &c.out)
}

fn partition(c: PartitionConfig) -> Result<Run> {
    let g = io::read_edge_list(&require(&c.graph, "graph")?)?;
    let p = node_distribution(&g, c.a, c.b)?;
    let rep = match c.representation {
        RepChoice::Adjacency => g.adjacency(),
        RepChoice::HeatKernel => {
            let kind = c.laplacian.unwrap_or_else(|| LaplacianKind::default_for(&g));
            graph_heat_kernel(&g, kind, c.t)?.into_matrix()
        }
    };
    let (labels, _) = partition_graph(&rep, &p, c.k, &solver(c.max_iters, c.rel_tol))?;
    let q = modularity(&g, &labels)?;
    let out = Path::new(&c.out);
    io::write_text(&out.join("labels.txt"), &io::format_labels(&g, &labels))?;
    io::write_json(&out.join("partition.json"), &json!({ "k": c.k, "modularity": q }))?;
    finish("partition", &c, c.seed, &c.out)
}

fn tune_options(
    representation: RepChoice,
    laplacian: LaplacianKind,
    a: f64,
    b: f64,
    stage_one_t: f64,
    solver: SolverOptions,
) -> TuneOptions {
    TuneOptions {
        representation: match representation {
            RepChoice::Adjacency => PartitionRepresentation::Adjacency,
            RepChoice::HeatKernel => PartitionRepresentation::HeatKernel { laplacian },
        },
        distribution: (a, b),
        solver,
        stage_one_t,
    }
}

fn tune(c: TuneConfig) -> Result<Run> {
    let g = io::read_edge_list(&require(&c.graph, "graph")?)?;
    let kind = c.laplacian.unwrap_or_else(|| LaplacianKind::default_for(&g));
    let opts = tune_options(
        c.representation,
        kind,
        c.a,
        c.b,
        c.stage_one_t,
        solver(c.max_iters, c.rel_tol),
    );
    let res = tune_partition(&g, &c.k_values, &c.t_values, &opts)?;
    let ami = match &c.labels {
        Some(path) => Some(adjusted_mutual_information(
            &io::read_labels(&require(path, "labels")?, &g)?,
            &res.labels,
        )?),
        None => None,
    };
    let out = Path::new(&c.out);
    io::write_text(&out.join("grid.csv"), &io::tune_grid_csv(&res.grid))?;
    io::write_text(&out.join("labels.txt"), &io::format_labels(&g, &res.labels))?;
    io::write_json(
        &out.join("tune.json"),
        &json!({ "k": res.k, "t": res.t, "modularity": res.modularity, "ami": ami }),
    )?;
    finish("tune", &c, c.seed, &c.out)
}

fn sample(c: SampleConfig) -> Result<Run> {
    let g = io::read_edge_list(&require(&c.graph_a, "graph-a")?)?;
    let h = io::read_edge_list(&require(&c.graph_b, "graph-b")?)?;
    let p = node_distribution(&g, c.a, c.b)?;
    let q = node_distribution(&h, c.a, c.b)?;
    let samples = sample_couplings(&p, &q, c.n_samples, c.steps_between, c.seed)?;
    let mut text = String::from("sample,i,j,value\n");
    for (s, cpl) in samples.iter().enumerate() {
        let m = cpl.matrix();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                text.push_str(&format!("{s},{i},{j},{}\n", io::num(m[(i, j)])));
            }
        }
    }
    io::write_text(&Path::new(&c.out).join("samples.csv"), &text)?;
    finish("sample", &c, c.seed, &c.out)
}

fn landscape(c: LandscapeConfig) -> Result<Run> {
    let g = io::read_edge_list(&require(&c.graph_a, "graph-a")?)?;
    let h = io::read_edge_list(&require(&c.graph_b, "graph-b")?)?;
    let opts = LandscapeOptions {
        laplacian: c.laplacian.unwrap_or_else(|| LaplacianKind::default_for(&g)),
        distribution: (c.a, c.b),
        steps_between: c.steps_between,
        solver: solver(c.max_iters, c.rel_tol),
    };
    let stats = landscape_experiment(&g, &h, &c.t_values, c.n_inits, c.seed, &opts)?;
    io::write_text(&Path::new(&c.out).join("landscape.csv"), &io::landscape_csv(&stats))?;
    finish("landscape", &c, c.seed, &c.out)
}

fn barycenter(c: BarycenterConfig) -> Result<Run> {
    let graphs = match &c.base {
        Some(base) => {
            let g = io::read_edge_list(&require(base, "base")?)?;
            bootstrap_subgraphs(
                &g,
                c.n_samples,
                c.sample_size,
                c.pool_size,
                &betweenness_centrality,
                c.seed,
            )?
        }
        None => {
            if c.graphs.is_empty() {
                return Err(Error::InvalidParameter("--graphs or --base is required".into()));
            }
            c.graphs
                .iter()
                .map(|p| io::read_edge_list(&require(p, "graph")?))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut reps = vec![BootstrapRepresentation::Adjacency];
    reps.extend(c.t_values.iter().map(|&t| BootstrapRepresentation::HeatKernel { t }));
    let opts = BarycenterOptions {
        max_iters: c.max_iters,
        rel_tol: c.rel_tol,
        solver: SolverOptions::default(),
    };
    let runs = bootstrap_runs(&graphs, &reps, c.laplacian, c.target_size, c.n_inits, c.seed, &opts)?;
    let out = Path::new(&c.out);
    let records: Vec<_> = runs.iter().map(|(r, _)| r.clone()).collect();
    io::write_text(&out.join("bootstrap.csv"), &io::bootstrap_csv(&records))?;
    let mut summary = BTreeMap::new();
    for rep in &reps {
        let mine: Vec<_> = runs.iter().filter(|(r, _)| r.representation == *rep).collect();
        let losses: Vec<f64> = mine.iter().map(|(r, _)| r.final_loss).collect();
        let mean = losses.iter().sum::<f64>() / losses.len() as f64;
        summary.insert(
            rep.to_string(),
            json!({ "mean_loss": mean, "centered_variance": centered_variance(&losses) }),
        );
        if let Some((_, first)) = mine.first() {
            let names = io::index_names(first.matrix.ncols());
            io::write_text(&out.join(format!("barycenter_{rep}.csv")), &io::matrix_csv(&first.matrix, &names))?;
            io::write_text(&out.join(format!("trace_{rep}.csv")), &io::loss_trace_csv(&first.loss_trace))?;
        }
    }
    io::write_json(&out.join("summary.json"), &summary)?;
    finish("barycenter", &c, c.seed, &c.out)
}

fn interpolate(c: InterpolateConfig) -> Result<Run> {
    let g = io::read_edge_list(&require(&c.graph_a, "graph-a")?)?;
    let h = io::read_edge_list(&require(&c.graph_b, "graph-b")?)?;
    let coupling = match &c.coupling {
        Some(path) => {
            let m: DMatrix<f64> = io::parse_matrix_csv(&fs::read_to_string(require(path, "coupling")?)?)?;
            let p: Vec<f64> = m.row_iter().map(|r| r.sum()).collect();
            let q: Vec<f64> = m.column_iter().map(|col| col.sum()).collect();
            Coupling::new(m, NodeDistribution::from_slice(&p)?, NodeDistribution::from_slice(&q)?)?
        }
        None => {
            let kind = c.laplacian.unwrap_or_else(|| LaplacianKind::default_for(&g));
            let rep = RepresentationPair::spectral(&g, &h, kind, c.t)?;
            let p = node_distribution(&g, c.a, c.b)?;
            let q = node_distribution(&h, c.a, c.b)?;
            let opts = SolverOptions {
                vertex_snap: true,
                ..Default::default()
            };
            minimize_gw(&rep, &p, &q, &opts)?.coupling
        }
    };
    let frames = interpolation_frames(&g, &h, &coupling, c.n_frames, c.seed)?;
    let out = Path::new(&c.out);
    if c.svg {
        for (k, f) in frames.iter().enumerate() {
            io::write_text(&out.join("svg").join(format!("frame_{k:03}.svg")), &frame_svg(f, 400.0))?;
        }
    }
    io::write_json(&out.join("frames.json"), &FrameSet { frames })?;
    finish("interpolate", &c, c.seed, &c.out)
}

fn benchmark(c: BenchmarkConfig) -> Result<Run> {
    let dir = require(&c.dir, "dir")?;
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "edges"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidParameter(format!("no .edges files in {}", dir.display())));
    }
    let graphs = files.iter().map(|p| io::read_edge_list(p)).collect::<Result<Vec<_>>>()?;
    let out = Path::new(&c.out);
    match c.mode {
        BenchmarkMode::Matching => {
            let mut records = Vec::new();
            let losses = std::iter::once(RepresentationKind::Adjacency)
                .chain(c.t_values.iter().map(|&t| RepresentationKind::Spectral { t }));
            for loss in losses {
                let laplacian = c.laplacian.unwrap_or_else(|| LaplacianKind::default_for(&graphs[0]));
                let opts = MatchingOptions {
                    laplacian,
                    distribution: (c.a, c.b),
                    solver: SolverOptions::default(),
                };
                records.extend(matching_benchmark(&graphs, loss, c.seed, &opts)?.records);
            }
            io::write_text(&out.join("benchmark.csv"), &io::benchmark_csv(&records))?;
        }
        BenchmarkMode::Partition => {
            let mut text = String::from("graph_index,n,m_edges,representation,k,t,modularity,ami,wall_time_s\n");
            for (idx, (g, path)) in graphs.iter().zip(&files).enumerate() {
                let truth = io::read_labels(&require(&path.with_extension("labels").to_string_lossy(), "labels")?, g)?;
                for rep in [RepChoice::Adjacency, RepChoice::HeatKernel] {
                    let t0 = Instant::now();
                    let kind = c.laplacian.unwrap_or_else(|| LaplacianKind::default_for(g));
                    let opts = tune_options(rep, kind, c.a, c.b, STAGE_ONE_T, SolverOptions::default());
                    let res = tune_partition(g, &c.k_values, &c.t_values, &opts)?;
                    let ami = adjusted_mutual_information(&truth, &res.labels)?;
                    let name = serde_json::to_value(rep)?;
                    text.push_str(&format!(
                        "{idx},{},{},{},{},{},{},{},{}\n",
                        g.n(),
                        g.edge_count(),
                        name.as_str().unwrap_or_default(),
                        res.k,
                        res.t.map(io::num).unwrap_or_default(),
                        io::num(res.modularity),
                        io::num(ami),
                        io::num(t0.elapsed().as_secs_f64())
                    ));
                }
            }
            io::write_text(&out.join("partition_benchmark.csv"), &text)?;
        }
    }
    finish("benchmark", &c, c.seed, &c.out)
}
