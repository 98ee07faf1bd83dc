//! `ldp-core`: run the private core decomposition protocols from the shell.
//!
//! Exit codes: 0 success, 1 an audit ran and failed, 2 invalid input,
//! 3 divergence or counter overflow, 4 I/O.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ldp_core::audit::{
    audit_alpha, audit_counter_sensitivity, audit_protocol_stream_discrepancy, AuditReport,
};
use ldp_core::densest::ratio_to_f64;
use ldp_core::experiment::{run_sweep, write_sweep_csv, ExperimentSpec, Family, Protocol};
use ldp_core::{
    brute_force_densest, exact_coreness, gen_gnp, gen_path, gen_query_graph, gen_regular,
    read_edge_list, run_approx_core, run_densest, run_exact_core, write_edge_list, CounterConfig,
    CounterKind, DensestMode, Graph, MemoryMode, NoiseMode, QueryGraphSpec, RunConfig, Transcript,
};
use serde_json::json;

/// Largest graph for which brute-force `rho*` is computed.
const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Parser)]
#[command(
    name = "ldp-core",
    version,
    about = "Locally edge-private core decomposition and densest subgraph"
)]
#[command(
    after_help = "Exit codes: 0 ok, 1 audit failed, 2 invalid input, 3 divergence/overflow, 4 I/O.\n\
                        LDP_CORE_THREADS caps the worker threads used by sweeps."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated graph as an edge list.
    Generate {
        #[command(subcommand)]
        family: GenFamily,
        /// Output file (default stdout).
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
    /// Exact coreness, k* and (for n <= 20) the densest subgraph.
    Oracle {
        /// Edge list file.
        graph: PathBuf,
    },
    /// Exact protocol; CSV `vertex,k_true,k_est,round`.
    RunExact(RunArgs),
    /// (2+eta)-approximate protocol; CSV with an extra `phase` column.
    RunApprox(RunArgs),
    /// Densest subgraph from protocol estimates; JSON.
    RunDensest {
        #[arg(long, default_value = "exact", value_parser = ["exact", "approx"])]
        mode: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Privacy and accuracy audits; JSON report.
    Audit {
        #[command(subcommand)]
        kind: AuditKind,
    },
    /// Error and round-count sweep; CSV
    /// `family,n,eps,eta,counter,memory,trial,protocol,max_err,rounds,alpha_obs,ms`.
    Sweep(SweepArgs),
}

#[derive(Subcommand)]
enum GenFamily {
    /// Erdos-Renyi G(n, p).
    Gnp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random d-regular graph (n*d must be even).
    Regular {
        #[arg(long)]
        n: usize,
        #[arg(long, short)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Path on n vertices.
    Path {
        #[arg(long)]
        n: usize,
    },
    /// Query graph G_X(Q) with x = 0, A = 1..=n, B = n+1..=2n.
    QueryGraph {
        /// Secret vector X as a 0/1 string.
        #[arg(long = "secret", short = 'x')]
        secret: String,
        /// Query vector Q as a 0/1 string.
        #[arg(long = "query", short = 'q')]
        query: String,
    },
}

#[derive(Args, Clone)]
struct ProtocolArgs {
    /// Total privacy budget.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Approximation slack of the approximate protocol.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// binary-tree, sparse-vector or exact-debug.
    #[arg(long, default_value = "binary-tree")]
    counter: CounterKind,
    /// memoryful or memoryless.
    #[arg(long, default_value = "memoryful")]
    memory: MemoryMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// laplace, or disabled for noise-free debugging.
    #[arg(long, default_value = "laplace")]
    noise: NoiseMode,
    /// Refuse any configuration that is not private.
    #[arg(long)]
    assert_private: bool,
    /// Rounds per phase of the approximate protocol.
    #[arg(long)]
    phase_rounds: Option<usize>,
    /// Round cap (default: the protocol's own bound).
    #[arg(long)]
    max_rounds: Option<usize>,
}

impl ProtocolArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            epsilon: self.epsilon,
            memory: self.memory,
            counter: self.counter,
            eta: self.eta,
            seed: self.seed,
            noise: self.noise,
            max_rounds: self.max_rounds,
            phase_rounds: self.phase_rounds,
            assert_private: self.assert_private,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Edge list file.
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Also write the transcript as JSON lines.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Output file (default stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AuditKind {
    /// Neighboring-stream check of the binary tree's node values.
    CounterSensitivity {
        /// Counter horizon T.
        #[arg(long, default_value_t = 1024)]
        horizon: usize,
        /// Stream length (default T).
        #[arg(long)]
        stream_len: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Coupled runs on G and G with one edge toggled.
    StreamDiscrepancy {
        #[arg(long)]
        graph: PathBuf,
        /// Edge to toggle, as `u,v`.
        #[arg(long, value_parser = parse_edge)]
        edge: (usize, usize),
        #[command(flatten)]
        protocol: ProtocolArgs,
    },
    /// Measured alpha_obs against its high-probability bound.
    Alpha {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[command(flatten)]
        protocol: ProtocolArgs,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated graph sizes.
    #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
    sizes: Vec<usize>,
    /// gnp:<avg-degree>, regular:<d> or path.
    #[arg(long, default_value = "gnp:8")]
    family: Family,
    /// Comma-separated privacy budgets.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    epsilons: Vec<f64>,
    /// Comma-separated protocols: exact, approx.
    #[arg(long, value_delimiter = ',', default_value = "exact")]
    protocols: Vec<Protocol>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value = "binary-tree")]
    counter: CounterKind,
    #[arg(long, default_value = "memoryful")]
    memory: MemoryMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "laplace")]
    noise: NoiseMode,
    #[arg(long)]
    assert_private: bool,
    /// Record wall time in the `ms` column (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_edge(s: &str) -> Result<(usize, usize), String> {
    let (u, v) = s.split_once(',').ok_or("expected u,v")?;
    let id = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((id(u)?, id(v)?))
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<ldp_core::Error> for Failure {
    fn from(e: ldp_core::Error) -> Self {
        use ldp_core::Error as E;
        let code = match e {
            E::Divergence { .. } | E::StreamOverflow { .. } => 3,
            E::Io(_) | E::Json(_) => 4,
            _ => 2,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: 4,
        msg: format!("{}: {e}", path.display()),
    }
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    let file = File::open(path).map_err(|e| io_failure(path, e))?;
    read_edge_list(BufReader::new(file)).map_err(|e| {
        let mut f = Failure::from(e);
        f.msg = format!("{}: {}", path.display(), f.msg);
        f
    })
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| io_failure(path, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io_failure(Path::new("<stdout>"), e)),
    }
}

fn save_transcript(path: Option<&Path>, tr: &Transcript) -> Result<(), Failure> {
    let Some(path) = path else { return Ok(()) };
    let file = File::create(path).map_err(|e| io_failure(path, e))?;
    let mut out = io::BufWriter::new(file);
    tr.write_jsonl(&mut out)?;
    out.flush().map_err(|e| io_failure(path, e))
}

fn validated(args: &ProtocolArgs) -> Result<RunConfig, Failure> {
    let cfg = args.config();
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("LDP_CORE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure {
            code: 2,
            msg: format!("LDP_CORE_THREADS must be a positive integer, got {raw:?}"),
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure {
            code: 2,
            msg: e.to_string(),
        })
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn generate(family: GenFamily) -> Result<Graph, Failure> {
    Ok(match family {
        GenFamily::Gnp { n, p, seed } => gen_gnp(n, p, seed)?,
        GenFamily::Regular { n, d, seed } => gen_regular(n, d, seed)?,
        GenFamily::Path { n } => gen_path(n)?,
        GenFamily::QueryGraph { secret, query } => {
            gen_query_graph(&QueryGraphSpec::from_bit_strings(&secret, &query)?)?
        }
    })
}

fn oracle(g: &Graph) -> Result<String, Failure> {
    let k = exact_coreness(g);
    let k_star = k.iter().copied().max().unwrap_or(0);
    let mut out = format!("k={}; k*={k_star}", join(&k));
    if g.vertex_count() <= BRUTE_FORCE_LIMIT && g.vertex_count() > 0 {
        let (witness, rho) = brute_force_densest(g)?;
        out.push_str(&format!(
            "; rho*={}\nwitness={}",
            ratio_to_f64(&rho),
            join(witness)
        ));
    }
    out.push('\n');
    Ok(out)
}

fn report(r: &AuditReport) -> (String, u8) {
    (r.to_json() + "\n", if r.pass { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Generate { family, output } => {
            let g = generate(family)?;
            emit(output.as_deref(), &write_edge_list(&g))?;
        }
        Command::Oracle { graph } => {
            let g = load_graph(&graph)?;
            emit(None, &oracle(&g)?)?;
        }
        Command::RunExact(args) => {
            let g = load_graph(&args.graph)?;
            let run = run_exact_core(&g, &validated(&args.protocol)?)?;
            save_transcript(args.transcript.as_deref(), &run.transcript)?;
            emit(
                args.output.as_deref(),
                &run.estimates.to_csv(&exact_coreness(&g)),
            )?;
        }
        Command::RunApprox(args) => {
            let g = load_graph(&args.graph)?;
            let run = run_approx_core(&g, &validated(&args.protocol)?)?;
            save_transcript(args.transcript.as_deref(), &run.transcript)?;
            emit(
                args.output.as_deref(),
                &run.estimates.to_csv(&exact_coreness(&g)),
            )?;
        }
        Command::RunDensest { mode, run } => {
            let g = load_graph(&run.graph)?;
            let mode: DensestMode = mode.parse()?;
            let res = run_densest(&g, &validated(&run.protocol)?, mode)?;
            let rho_star = if g.vertex_count() <= BRUTE_FORCE_LIMIT {
                Some(ratio_to_f64(&brute_force_densest(&g)?.1))
            } else {
                None
            };
            let body = json!({
                "subset": res.subset,
                "density": ratio_to_f64(&res.achieved_density),
                "rho_star": rho_star,
                "k_tilde_star": res.k_tilde_star,
            });
            emit(run.output.as_deref(), &format!("{body}\n"))?;
        }
        Command::Audit { kind } => {
            let (text, code) = match kind {
                AuditKind::CounterSensitivity {
                    horizon,
                    stream_len,
                    trials,
                    seed,
                } => {
                    let cfg = CounterConfig::new(CounterKind::BinaryTree, horizon, 1.0)?;
                    report(&audit_counter_sensitivity(
                        &cfg,
                        stream_len.unwrap_or(horizon),
                        trials,
                        seed,
                    )?)
                }
                AuditKind::StreamDiscrepancy {
                    graph,
                    edge,
                    protocol,
                } => {
                    let g = load_graph(&graph)?;
                    report(&audit_protocol_stream_discrepancy(
                        &g,
                        edge,
                        &validated(&protocol)?,
                    )?)
                }
                AuditKind::Alpha {
                    graph,
                    trials,
                    protocol,
                } => {
                    let g = load_graph(&graph)?;
                    report(&audit_alpha(&g, &validated(&protocol)?, trials)?)
                }
            };
            emit(None, &text)?;
            return Ok(code);
        }
        Command::Sweep(args) => {
            RunConfig {
                counter: args.counter,
                memory: args.memory,
                noise: args.noise,
                assert_private: args.assert_private,
                ..RunConfig::default()
            }
            .validate()?;
            let spec = ExperimentSpec {
                sizes: args.sizes,
                family: args.family,
                epsilons: args.epsilons,
                eta: args.eta,
                counter: args.counter,
                memory: args.memory,
                protocols: args.protocols,
                trials: args.trials,
                seed: args.seed,
                noise: args.noise,
                timing: args.timing,
            };
            let rows = run_sweep(&spec)?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            emit(args.output.as_deref(), &String::from_utf8_lossy(&buf))?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
