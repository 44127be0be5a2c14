use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use catgraph::connectivity::{
    connect_det, connect_rand, connect_revertible, det_layout, rand_layout, revertible_layout,
    ConnectivityAnswer, RandomizedConfig, RegisterLayout, Verdict, DEFAULT_KAPPA,
};
use catgraph::graph::{loop_sinks, AdjacencyGraph, GraphOracle, Vertex};
use catgraph::oracles::{
    bfs_reach, dag_reach_probabilities, mixing_error, stationary_exact, topological_order,
    walk_distribution,
};
use catgraph::random_walk::{
    dag_tape_bits, estimate_dag, estimate_general, estimate_stationary, general_tape_bits,
    stationary_tape_bits, VisitCounters,
};
use catgraph::{CatalyticTape, RunMetrics, TapeProfile};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

const SCHEMA: u32 = 1;

const EXIT_MISMATCH: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_ABORT: u8 = 3;

/// Catalytic-space graph connectivity and random-walk estimation.
#[derive(Debug, Parser)]
#[command(name = "catgraph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether the graph has a path from S to T.
    Connect(ConnectArgs),
    /// Estimate the probability that a random walk from S ends at T.
    Walk(WalkArgs),
    /// Estimate the stationary probability of a vertex.
    Stationary(StationaryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Det,
    Rand,
    Revertible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    Zeros,
    Ones,
    Random,
}

#[derive(Debug, Args)]
struct Common {
    /// Fallback for --tape-seed and --rng-seed.
    #[arg(long, env = "CATGRAPH_SEED", default_value_t = 0)]
    seed: u64,
    /// Seed for the catalytic tape contents (random profile only).
    #[arg(long)]
    tape_seed: Option<u64>,
    /// Initial catalytic tape contents.
    #[arg(long, value_enum, default_value_t = Profile::Random)]
    tape_profile: Profile,
    /// Print a JSON report instead of text.
    #[arg(long)]
    json: bool,
    /// Leave wall time out of the report so identical runs print identical output.
    #[arg(long)]
    no_wall_time: bool,
}

impl Common {
    fn tape_seed(&self) -> u64 {
        self.tape_seed.unwrap_or(self.seed)
    }

    fn tape(&self, bits: usize, offset: u64) -> CatalyticTape {
        let profile = match self.tape_profile {
            Profile::Zeros => TapeProfile::Zeros,
            Profile::Ones => TapeProfile::Ones,
            Profile::Random => TapeProfile::Random(self.tape_seed().wrapping_add(offset)),
        };
        CatalyticTape::with_profile(bits.max(1), profile)
    }

    fn scrub(&self, metrics: &mut RunMetrics) {
        if self.no_wall_time {
            metrics.wall_time_ms = None;
        }
    }
}

#[derive(Debug, Args)]
struct ConnectArgs {
    graph: PathBuf,
    s: Vertex,
    t: Vertex,
    #[arg(long, value_enum, default_value_t = Algo::Det)]
    algo: Algo,
    /// Seed for the algorithm's random choices; independent of the tape seed.
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Randomized iterations are ⌈kappa · log₂ n⌉.
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
    /// Check the verdict against breadth-first search.
    #[arg(long)]
    verify: bool,
    /// Run this many independently seeded trials and report totals.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Run trials on all cores.
    #[arg(long)]
    parallel: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct WalkArgs {
    graph: PathBuf,
    s: Vertex,
    t: Vertex,
    /// Walk length; required unless --dag.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Walk until a sink on an acyclic graph; T must be a sink.
    #[arg(long)]
    dag: bool,
    /// Check the estimate against the exact probability.
    #[arg(long)]
    verify: bool,
    /// Include per-vertex and per-edge counters in the report.
    #[arg(long)]
    counters: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct StationaryArgs {
    graph: PathBuf,
    v_star: Vertex,
    /// Steps after which the walk is assumed mixed.
    #[arg(long)]
    mix_time: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Check the estimate against power iteration and the measured mixing error.
    #[arg(long)]
    verify: bool,
    #[command(flatten)]
    common: Common,
}

/// A finished command: its report and exit status.
struct Report {
    json: serde_json::Value,
    text: String,
    exit: u8,
}

fn load_graph(path: &Path) -> Result<AdjacencyGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    AdjacencyGraph::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn check_vertices(g: &AdjacencyGraph, vertices: &[Vertex]) -> Result<()> {
    let n = g.vertex_count();
    for &v in vertices {
        if v >= n {
            bail!("vertex {v} out of range for a graph on {n} vertices");
        }
    }
    Ok(())
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Path => "path",
        Verdict::NoPath => "no-path",
        Verdict::Abort => "abort",
    }
}

fn metrics_text(m: &RunMetrics) -> String {
    let mut out = format!(
        "steps: {}\nworkspace peak bits: {}\ncatalytic bits: {}\ntape restored: {}\n",
        m.elapsed_steps, m.workspace_peak_bits, m.catalytic_bits, m.tape_restored
    );
    if let Some(ms) = m.wall_time_ms {
        out.push_str(&format!("wall time: {ms:.3} ms\n"));
    }
    for note in &m.normalizations {
        out.push_str(&format!("normalization: {note}\n"));
    }
    out
}

fn run_connect_once(
    args: &ConnectArgs,
    g: &AdjacencyGraph,
    layout: &RegisterLayout,
    trial: u64,
) -> Result<(ConnectivityAnswer, String)> {
    let mut tape = args.common.tape(layout.tape_bits(), trial);
    let digest = tape.digest().to_string();
    let rng_seed = args
        .rng_seed
        .unwrap_or(args.common.seed ^ 0x5851_f42d_4c95_7f2d)
        .wrapping_add(trial);
    let config = RandomizedConfig {
        kappa: args.kappa,
        seed: rng_seed,
    };
    let mut ans = match args.algo {
        Algo::Det => connect_det(g, args.s, args.t, &mut tape)?,
        Algo::Rand => connect_rand(g, args.s, args.t, &mut tape, config)?,
        Algo::Revertible => connect_revertible(g, args.s, args.t, &mut tape, config, None)?,
    };
    args.common.scrub(&mut ans.metrics);
    Ok((ans, digest))
}

fn cmd_connect(args: &ConnectArgs) -> Result<Report> {
    let g = load_graph(&args.graph)?;
    check_vertices(&g, &[args.s, args.t])?;
    if !(args.kappa.is_finite() && args.kappa > 0.0) {
        bail!("--kappa must be positive");
    }
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let layout = match args.algo {
        Algo::Det => det_layout(&g, args.t),
        Algo::Rand => rand_layout(&g, args.t),
        Algo::Revertible => revertible_layout(&g),
    };
    let truth = args.verify.then(|| bfs_reach(&g).reaches(args.s, args.t));
    let algo = format!("{:?}", args.algo).to_lowercase();

    if args.trials == 1 {
        let (ans, digest) = run_connect_once(args, &g, &layout, 0)?;
        let mismatch = matches!(truth, Some(reach) if ans.verdict != Verdict::Abort
            && (ans.verdict == Verdict::Path) != reach);
        let exit = if mismatch {
            EXIT_MISMATCH
        } else if ans.verdict == Verdict::Abort {
            EXIT_ABORT
        } else {
            0
        };
        let json = json!({
            "schema": SCHEMA,
            "command": "connect",
            "algo": algo,
            "s": args.s,
            "t": args.t,
            "verdict": ans.verdict,
            "iterations": ans.iterations,
            "layout": layout,
            "tape_digest": digest,
            "verified": truth.map(|_| !mismatch),
            "metrics": ans.metrics,
        });
        let mut text = format!(
            "verdict: {}\nalgorithm: {algo}\niterations: {}\n",
            verdict_name(ans.verdict),
            ans.iterations
        );
        text.push_str(&metrics_text(&ans.metrics));
        if let Some(reach) = truth {
            text.push_str(&format!(
                "bfs: {}\nverified: {}\n",
                if reach { "path" } else { "no-path" },
                !mismatch
            ));
        }
        return Ok(Report { json, text, exit });
    }

    let run = |trial: u64| run_connect_once(args, &g, &layout, trial).map(|(ans, _)| ans);
    let answers: Vec<ConnectivityAnswer> = if args.parallel {
        (0..args.trials).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..args.trials).map(run).collect::<Result<_>>()?
    };
    let count = |v: Verdict| answers.iter().filter(|a| a.verdict == v).count();
    let mismatches = match truth {
        Some(reach) => answers
            .iter()
            .filter(|a| a.verdict != Verdict::Abort && (a.verdict == Verdict::Path) != reach)
            .count(),
        None => 0,
    };
    let all_restored = answers.iter().all(|a| a.metrics.tape_restored);
    let steps: u64 = answers.iter().map(|a| a.metrics.elapsed_steps).sum();
    let peak = answers.iter().map(|a| a.metrics.workspace_peak_bits).max().unwrap_or(0);
    let json = json!({
        "schema": SCHEMA,
        "command": "connect",
        "algo": algo,
        "s": args.s,
        "t": args.t,
        "trials": args.trials,
        "verdicts": {
            "path": count(Verdict::Path),
            "no-path": count(Verdict::NoPath),
            "abort": count(Verdict::Abort),
        },
        "mismatches": truth.map(|_| mismatches),
        "all_tapes_restored": all_restored,
        "total_steps": steps,
        "workspace_peak_bits": peak,
    });
    let text = format!(
        "trials: {}\npath: {}\nno-path: {}\nabort: {}\nall tapes restored: {all_restored}\ntotal steps: {steps}\n{}",
        args.trials,
        count(Verdict::Path),
        count(Verdict::NoPath),
        count(Verdict::Abort),
        truth.map_or(String::new(), |_| format!("mismatches: {mismatches}\n")),
    );
    Ok(Report {
        json,
        text,
        exit: if mismatches > 0 { EXIT_MISMATCH } else { 0 },
    })
}

#[derive(Serialize)]
struct WalkJson<'a> {
    schema: u32,
    command: &'static str,
    mode: &'static str,
    s: Vertex,
    t: Vertex,
    steps: Option<usize>,
    eps: f64,
    rho: f64,
    walks: u64,
    register_bits: u32,
    tape_digest: String,
    exact: Option<f64>,
    verified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counters: Option<&'a VisitCounters>,
    metrics: &'a RunMetrics,
}

fn cmd_walk(args: &WalkArgs) -> Result<Report> {
    let g = load_graph(&args.graph)?;
    check_vertices(&g, &[args.s, args.t])?;
    if !(args.eps.is_finite() && args.eps > 0.0) {
        bail!("--eps must be positive");
    }
    let (mode, estimate, tape_digest, exact) = if args.dag {
        if topological_order(&g).is_none() {
            bail!("--dag given but the graph has a cycle");
        }
        if g.outdeg(args.t) != 0 {
            bail!("target {} is not a sink", args.t);
        }
        let mut tape = args.common.tape(dag_tape_bits(&g, args.eps)?, 0);
        let digest = tape.digest().to_string();
        let estimate = estimate_dag(&g, args.s, args.t, args.eps, &mut tape)?;
        let exact = args.verify.then(|| {
            dag_reach_probabilities(&g, args.s).expect("acyclic")[args.t]
                .to_f64()
                .unwrap_or(f64::NAN)
        });
        ("dag", estimate, digest, exact)
    } else {
        let steps = args
            .steps
            .context("--steps is required unless --dag is given")?;
        let mut tape = args.common.tape(general_tape_bits(&g, steps, args.eps)?, 0);
        let digest = tape.digest().to_string();
        let estimate = estimate_general(&g, args.s, args.t, steps, args.eps, &mut tape)?;
        let exact = args.verify.then(|| {
            walk_distribution(&loop_sinks(&g), args.s, steps)
                .expect("sinks are looped")
                .values[args.t]
        });
        ("general", estimate, digest, exact)
    };
    let mut metrics = estimate.metrics.clone();
    args.common.scrub(&mut metrics);
    let verified = exact.map(|p| (estimate.rho - p).abs() <= args.eps);
    let body = WalkJson {
        schema: SCHEMA,
        command: "walk",
        mode,
        s: args.s,
        t: args.t,
        steps: if args.dag { None } else { args.steps },
        eps: args.eps,
        rho: estimate.rho,
        walks: estimate.walks,
        register_bits: estimate.register_bits,
        tape_digest,
        exact,
        verified,
        counters: args.counters.then_some(&estimate.counters),
        metrics: &metrics,
    };
    let mut text = format!(
        "rho: {}\nmode: {mode}\nwalks: {}\nregister bits: {}\n",
        estimate.rho, estimate.walks, estimate.register_bits
    );
    text.push_str(&metrics_text(&metrics));
    if let (Some(p), Some(ok)) = (exact, verified) {
        text.push_str(&format!("exact: {p}\nverified: {ok}\n"));
    }
    if args.counters {
        for (v, c) in estimate.counters.visits.iter().enumerate() {
            text.push_str(&format!("N[{v}] = {c}\n"));
        }
    }
    Ok(Report {
        json: serde_json::to_value(&body)?,
        text,
        exit: if verified == Some(false) { EXIT_MISMATCH } else { 0 },
    })
}

fn cmd_stationary(args: &StationaryArgs) -> Result<Report> {
    let g = load_graph(&args.graph)?;
    check_vertices(&g, &[args.v_star])?;
    if let Some(sink) = (0..g.vertex_count()).find(|&v| g.outdeg(v) == 0) {
        bail!("vertex {sink} has no out-edges; the stationary walk needs every out-degree >= 1");
    }
    let mut tape = args.common.tape(stationary_tape_bits(&g), 0);
    let digest = tape.digest().to_string();
    let mut estimate = estimate_stationary(&g, args.v_star, args.mix_time, args.delta, &mut tape)?;
    args.common.scrub(&mut estimate.metrics);
    let check = if args.verify {
        let pi = stationary_exact(&g, 1e-12)?.values;
        let eps = mixing_error(&g, &pi, args.mix_time);
        let ok = (estimate.rho - pi[args.v_star]).abs() <= eps + args.delta;
        Some((pi[args.v_star], eps, ok))
    } else {
        None
    };
    let json = json!({
        "schema": SCHEMA,
        "command": "stationary",
        "v_star": args.v_star,
        "mix_time": args.mix_time,
        "delta": args.delta,
        "walk_length": estimate.config.walk_length,
        "rho": estimate.rho,
        "in_band_reversible": estimate.in_band_reversible,
        "tape_digest": digest,
        "pi": check.map(|c| c.0),
        "mixing_error": check.map(|c| c.1),
        "verified": check.map(|c| c.2),
        "metrics": estimate.metrics,
    });
    let mut text = format!(
        "rho: {}\nwalk length: {}\nin-band reversible: {}\n",
        estimate.rho, estimate.config.walk_length, estimate.in_band_reversible
    );
    text.push_str(&metrics_text(&estimate.metrics));
    if let Some((pi, eps, ok)) = check {
        text.push_str(&format!("pi: {pi}\nmixing error: {eps}\nverified: {ok}\n"));
    }
    Ok(Report {
        json,
        text,
        exit: if check.is_some_and(|c| !c.2) { EXIT_MISMATCH } else { 0 },
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, json) = match &cli.command {
        Command::Connect(args) => (cmd_connect(args), args.common.json),
        Command::Walk(args) => (cmd_walk(args), args.common.json),
        Command::Stationary(args) => (cmd_stationary(args), args.common.json),
    };
    match result {
        Ok(report) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&report.json).expect("report serializes"));
            } else {
                print!("{}", report.text);
            }
            ExitCode::from(report.exit)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
