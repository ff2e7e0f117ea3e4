//! `plap` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    dual_edge_pair, fd_grad_inv_lambda, fd_grad_lambda1_p2, fd_second_derivative_identity,
    morse_index, p2_homogeneity_error, residual, tangent_projection, EigenReport,
};
use crate::error::{Error, Result};
use crate::flow::{run_flow, FlowConfig, FlowTrace, Init};
use crate::graph::Graph;
use crate::operators::WeightPair;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Residual below which `verify` succeeds.
pub const VERIFY_TOL: f64 = 1e-6;
/// Relative error below which an `fdcheck` suite passes.
pub const FDCHECK_TOL: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "plap", version, about = "Graph p-Laplacian eigenpairs via a saddle-point gradient flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a rows x cols grid graph with a Dirichlet perimeter
    Gridgen {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the flow for one spectral index
    Solve {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run independent flows for k = 1..=kmax
    Sweep {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        kmax: usize,
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a stored eigenfunction: residual, indices, duality
    Verify {
        #[arg(long)]
        graph: PathBuf,
        /// CSV with header node_id,value over the interior nodes
        #[arg(long)]
        eigenfunction: PathBuf,
        /// Eigenvalue of the p-Laplacian
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        p: f64,
    },
    /// Compare analytic derivative formulas with finite differences
    Fdcheck {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        p: f64,
        /// Spectral index for the 1/lambda gradient suite
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Weights for the 1/lambda gradient suite; `ones` keeps graph
        /// symmetries and so can produce repeated eigenvalues. The [p,2]
        /// suites always use random node weights.
        #[arg(long, value_enum, default_value_t = WeightsArg::Random)]
        weights: WeightsArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Ones,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightsArg {
    Ones,
    Random,
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub delta: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    /// Seed for random initial weights; implies --init random
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    /// Keep every n-th step in trace.csv
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
}

impl FlowArgs {
    pub fn config(&self, k: usize) -> FlowConfig {
        let init = match (self.init, self.seed) {
            (Some(InitArg::Ones), _) | (None, None) => Init::Ones,
            (_, seed) => Init::Random {
                seed: seed.unwrap_or(0),
            },
        };
        FlowConfig {
            tau: self.tau,
            delta: self.delta,
            tol: self.tol,
            max_iter: self.max_iter,
            init,
            record_every: self.record_every,
            ..FlowConfig::new(self.p, k)
        }
    }
}

/// Record of one invocation, written as `manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub graph: String,
    pub config: Option<FlowConfig>,
    pub kmax: Option<usize>,
    pub version: &'static str,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
}

/// Serialized form of an [`EigenReport`].
#[derive(Debug, Serialize)]
pub struct ReportFile {
    pub lambda_p: f64,
    pub lambda_lin: f64,
    pub residual: f64,
    pub linear_index: Option<usize>,
    pub multiplicity: Option<usize>,
    #[serde(rename = "morse_R")]
    pub morse_r: Option<usize>,
    #[serde(rename = "morse_negR")]
    pub morse_neg_r: Option<usize>,
    pub converged: bool,
    pub iters: usize,
    pub p: f64,
    pub k: usize,
    pub tau: f64,
    pub delta: f64,
    pub simple: bool,
    pub oscillations: usize,
}

impl From<&EigenReport> for ReportFile {
    fn from(r: &EigenReport) -> Self {
        ReportFile {
            lambda_p: r.lambda_p,
            lambda_lin: r.lambda_lin,
            residual: r.residual,
            linear_index: r.linear_index,
            multiplicity: r.multiplicity,
            morse_r: r.morse_r,
            morse_neg_r: r.morse_neg_r,
            converged: r.converged,
            iters: r.iters,
            p: r.p,
            k: r.k,
            tau: r.tau,
            delta: r.delta,
            simple: r.simple,
            oscillations: r.oscillations,
        }
    }
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(std::env::args_os())
}

/// Entry point with explicit arguments (the first item is the program name).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::GridTooSmall { .. }
        | Error::SelfLoop { .. }
        | Error::DuplicateEdge { .. }
        | Error::BadEdgeWeight { .. }
        | Error::NodeOutOfRange { .. }
        | Error::Json(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidParameter { .. }
        | Error::Io(_)
        | Error::Csv(_) => EXIT_USAGE,
        _ => EXIT_VERIFY_FAILED,
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Gridgen { rows, cols, out } => cmd_gridgen(rows, cols, &out),
        Command::Solve { graph, k, flow, out } => cmd_solve(&graph, &flow.config(k), &out),
        Command::Sweep {
            graph,
            kmax,
            flow,
            out,
            jobs,
        } => cmd_sweep(&graph, &flow, kmax, &out, jobs),
        Command::Verify {
            graph,
            eigenfunction,
            lambda,
            p,
        } => cmd_verify(&graph, &eigenfunction, lambda, p),
        Command::Fdcheck {
            graph,
            p,
            k,
            seed,
            weights,
        } => cmd_fdcheck(&graph, p, k, seed, weights),
    }
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    Graph::from_json(&fs::read_to_string(path)?)
}

pub fn cmd_gridgen(rows: usize, cols: usize, out: &Path) -> Result<i32> {
    let graph = Graph::grid(rows, cols)?;
    fs::write(out, graph.to_json())?;
    println!(
        "wrote {} ({} nodes, {} interior, {} edges)",
        out.display(),
        graph.num_nodes(),
        graph.num_interior(),
        graph.num_edges()
    );
    Ok(EXIT_OK)
}

pub fn cmd_solve(graph_path: &Path, cfg: &FlowConfig, out: &Path) -> Result<i32> {
    let start = Instant::now();
    let graph = load_graph(graph_path)?;
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let (report, trace) = run_flow(&graph, cfg)?;
    let mut outputs = write_run(&graph, &report, &trace, out)?;
    outputs.push(out.join("manifest.json"));
    write_manifest(
        out,
        RunManifest {
            command: "solve".into(),
            graph: graph_path.display().to_string(),
            config: Some(cfg.clone()),
            kmax: None,
            version: env!("CARGO_PKG_VERSION"),
            wall_seconds: start.elapsed().as_secs_f64(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        },
    )?;
    print_report(&report);
    Ok(if report.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    k: usize,
    lambda_p: Option<f64>,
    residual: Option<f64>,
    iters: Option<usize>,
    converged: bool,
    oscillating: bool,
    error: String,
}

pub fn cmd_sweep(
    graph_path: &Path,
    flow: &FlowArgs,
    kmax: usize,
    out: &Path,
    jobs: Option<usize>,
) -> Result<i32> {
    let start = Instant::now();
    let graph = load_graph(graph_path)?;
    if kmax == 0 || kmax > graph.num_interior() {
        return Err(Error::param(
            "kmax",
            kmax as f64,
            "must lie in 1..=number of interior nodes",
        ));
    }
    flow.config(1).validate()?;
    fs::create_dir_all(out)?;

    let solve_one = |k: usize| -> (usize, Result<(EigenReport, Vec<PathBuf>)>) {
        let dir = out.join(format!("k{k}"));
        let result = fs::create_dir_all(&dir)
            .map_err(Error::from)
            .and_then(|_| run_flow(&graph, &flow.config(k)))
            .and_then(|(report, trace)| {
                let files = write_run(&graph, &report, &trace, &dir)?;
                Ok((report, files))
            });
        (k, result)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::EigenSolve(e.to_string()))?;
    let results: Vec<_> = pool.install(|| (1..=kmax).into_par_iter().map(solve_one).collect());

    let mut outputs = Vec::new();
    let mut any_error = false;
    let mut any_unconverged = false;
    let summary_path = out.join("summary.csv");
    let mut writer = csv::Writer::from_path(&summary_path)?;
    for (k, result) in results {
        let row = match result {
            Ok((report, files)) => {
                outputs.extend(files);
                any_unconverged |= !report.converged;
                println!(
                    "k={k} lambda_p={} residual={:e} iters={} converged={}",
                    report.lambda_p, report.residual, report.iters, report.converged
                );
                SummaryRow {
                    k,
                    lambda_p: Some(report.lambda_p),
                    residual: Some(report.residual),
                    iters: Some(report.iters),
                    converged: report.converged,
                    oscillating: report.oscillations > 0,
                    error: String::new(),
                }
            }
            Err(e) => {
                any_error = true;
                eprintln!("k={k} failed: {e}");
                SummaryRow {
                    k,
                    lambda_p: None,
                    residual: None,
                    iters: None,
                    converged: false,
                    oscillating: false,
                    error: e.to_string(),
                }
            }
        };
        writer.serialize(row)?;
    }
    writer.flush()?;
    outputs.push(summary_path);
    outputs.push(out.join("manifest.json"));
    write_manifest(
        out,
        RunManifest {
            command: "sweep".into(),
            graph: graph_path.display().to_string(),
            config: Some(flow.config(1)),
            kmax: Some(kmax),
            version: env!("CARGO_PKG_VERSION"),
            wall_seconds: start.elapsed().as_secs_f64(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        },
    )?;
    Ok(if any_error {
        EXIT_VERIFY_FAILED
    } else if any_unconverged {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    })
}

pub fn cmd_verify(graph_path: &Path, eigenfunction: &Path, lambda: f64, p: f64) -> Result<i32> {
    let graph = load_graph(graph_path)?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", p, "must exceed 1"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", lambda, "must be positive"));
    }
    let f = read_eigenfunction(&graph, eigenfunction)?;
    let res = residual(&graph, &f, lambda.powf(2.0 / p), p)?;
    println!("residual: {res:e}");
    if p > 2.0 {
        match morse_index(&graph, &f, lambda, p, VERIFY_TOL) {
            Ok(m) => {
                println!("linear_index: {}", m.linear_index);
                println!("multiplicity: {}", m.multiplicity);
                println!("morse_R: {}", m.morse_r);
                println!("morse_negR: {}", m.morse_neg_r);
            }
            Err(e) => println!("morse: n/a ({e})"),
        }
    }
    match dual_edge_pair(&graph, &f, lambda, p) {
        Ok(d) => println!("duality_edge_residual: {:e}", d.edge_residual),
        Err(e) => println!("duality: n/a ({e})"),
    }
    Ok(if res < VERIFY_TOL {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn random_weights(graph: &Graph, seed: u64) -> WeightPair {
    FlowConfig {
        init: Init::Random { seed },
        ..FlowConfig::new(3.0, 1)
    }
    .initial_weights(graph)
}

pub fn cmd_fdcheck(graph_path: &Path, p: f64, k: usize, seed: u64, weights: WeightsArg) -> Result<i32> {
    let graph = load_graph(graph_path)?;
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::param("p", p, "must exceed 2"));
    }
    if k == 0 || k > graph.num_interior() {
        return Err(Error::param("k", k as f64, "must lie in 1..=number of interior nodes"));
    }
    let suites = run_fd_suites(&graph, p, k, seed, weights);
    let mut pass = true;
    for (name, outcome) in suites.entries() {
        match outcome {
            Ok(e) => {
                let ok = *e < FDCHECK_TOL;
                pass &= ok;
                println!("{name}: max_rel_err={e:e} {}", if ok { "PASS" } else { "FAIL" });
            }
            Err(e @ Error::NonSimpleEigenvalue { .. }) => println!("{name}: SKIPPED ({e})"),
            Err(e) => {
                pass = false;
                println!("{name}: FAIL ({e})");
            }
        }
    }
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// Outcomes of the finite-difference suites run by `fdcheck`: the largest
/// relative error of each, or the error that stopped it.
#[derive(Debug)]
pub struct FdSuites {
    pub grad_inv_lambda: Result<f64>,
    pub grad_lambda1_p2: Result<f64>,
    pub p2_homogeneity: Result<f64>,
    pub second_derivative_identity: Result<f64>,
}

impl FdSuites {
    pub fn entries(&self) -> [(&'static str, &Result<f64>); 4] {
        [
            ("grad_inv_lambda", &self.grad_inv_lambda),
            ("grad_lambda1_p2", &self.grad_lambda1_p2),
            ("p2_homogeneity", &self.p2_homogeneity),
            ("second_derivative_identity", &self.second_derivative_identity),
        ]
    }
}

/// Runs every suite of `fdcheck`. `weights` selects the weights of the
/// `1/λ_k` gradient suite; the `[p,2]` suites use random node weights drawn
/// from `seed`.
pub fn run_fd_suites(graph: &Graph, p: f64, k: usize, seed: u64, weights: WeightsArg) -> FdSuites {
    let random = random_weights(graph, seed);
    let w = match weights {
        WeightsArg::Ones => WeightPair::ones(graph),
        WeightsArg::Random => random.clone(),
    };
    FdSuites {
        grad_inv_lambda: fd_grad_inv_lambda(graph, &w, p, k, 1e-8, 1e-6).map(|c| c.max_rel_err()),
        grad_lambda1_p2: fd_grad_lambda1_p2(graph, &random.nu, p, 1e-4).map(|c| c.max_rel_err),
        p2_homogeneity: p2_homogeneity_error(graph, &random.nu, p, 2.0),
        second_derivative_identity: second_derivative_suite(graph, p, seed),
    }
}

/// Step for the second differences. Where `∇f` vanishes on an edge the
/// `|∇f|^p` term contributes an `O(h^(p-2))` error while round-off grows
/// like `ε/h²`; `1e-5` balances the two at `p = 3`.
pub const SECOND_DIFFERENCE_STEP: f64 = 1e-5;

/// Runs the flow for the first eigenpair and checks the second-derivative
/// identity along five random tangent directions. The flow result is
/// accepted on its residual, which the identity check tests itself.
fn second_derivative_suite(graph: &Graph, p: f64, seed: u64) -> Result<f64> {
    let cfg = FlowConfig {
        delta: 1e-12,
        max_iter: 100_000,
        ..FlowConfig::new(p, 1)
    };
    let (eig, _) = run_flow(graph, &cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let xi: Vec<f64> = (0..graph.num_interior())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let (xi, _) = tangent_projection(&eig.f, p, &xi);
        let check = fd_second_derivative_identity(graph, &eig.f, p, &xi, SECOND_DIFFERENCE_STEP)?;
        worst = worst.max(check.rel_err);
    }
    Ok(worst)
}

fn print_report(r: &EigenReport) {
    println!("lambda_p: {}", r.lambda_p);
    println!("lambda_lin: {}", r.lambda_lin);
    println!("residual: {:e}", r.residual);
    println!("iters: {}", r.iters);
    println!("converged: {}", r.converged);
    if let (Some(i), Some(m)) = (r.linear_index, r.multiplicity) {
        println!("linear_index: {i}");
        println!("multiplicity: {m}");
    }
}

/// Writes `report.json`, `trace.csv` and `eigenfunction.csv` into `dir`.
pub fn write_run(graph: &Graph, report: &EigenReport, trace: &FlowTrace, dir: &Path) -> Result<Vec<PathBuf>> {
    let report_path = dir.join("report.json");
    let json = serde_json::to_string_pretty(&ReportFile::from(report))?;
    fs::write(&report_path, json + "\n")?;

    let trace_path = dir.join("trace.csv");
    let mut w = csv::Writer::from_path(&trace_path)?;
    w.write_record(["iter", "lambda", "err_mu", "err_nu", "err", "residual"])?;
    for r in &trace.records {
        w.write_record([
            r.iter.to_string(),
            r.lambda.to_string(),
            r.err_mu.to_string(),
            r.err_nu.to_string(),
            r.err.to_string(),
            r.residual.to_string(),
        ])?;
    }
    w.flush()?;

    let f_path = dir.join("eigenfunction.csv");
    write_eigenfunction(graph, &report.f, &f_path)?;
    Ok(vec![report_path, trace_path, f_path])
}

pub fn write_eigenfunction(graph: &Graph, f: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node_id", "value"])?;
    for (node, value) in graph.interior().iter().zip(f) {
        w.write_record([node.to_string(), value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `node_id,value` CSV into interior order. Every interior node must
/// appear exactly once.
pub fn read_eigenfunction(graph: &Graph, path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut f = vec![f64::NAN; graph.num_interior()];
    let mut rows = 0;
    for record in reader.deserialize() {
        let (node, value): (usize, f64) = record?;
        let pos = graph.interior_index(node).ok_or(Error::NodeOutOfRange {
            what: "interior node",
            id: node,
            nodes: graph.num_nodes(),
        })?;
        f[pos] = value;
        rows += 1;
    }
    if rows != graph.num_interior() || f.iter().any(|x| x.is_nan()) {
        return Err(Error::DimensionMismatch {
            what: "eigenfunction",
            expected: graph.num_interior(),
            found: rows,
        });
    }
    Ok(f)
}

fn write_manifest(dir: &Path, manifest: RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(())
}
