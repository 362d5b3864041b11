use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use conjnet::cycles::{BoundCaps, CyclePolynomial, DEFAULT_UPPER_BOUND_CAP};
use conjnet::graph::DEFAULT_ANTICHAIN_CAP;
use conjnet::network::{BooleanNetwork, OpKind, State};
use conjnet::oracle::{
    enumerate_phase_space_capped, memory_estimate, phase_space_dot, random_network, OracleError,
    DEFAULT_STATE_CAP,
};
use conjnet::report::{analyze, simulate_and_check};
use serde::Serialize;

/// Predict and verify the limit cycles of AND/OR Boolean networks.
#[derive(Parser)]
#[command(name = "conjnet", version)]
struct Cli {
    /// Output format for reports and summaries.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DotKind {
    /// Dependency graph.
    Dep,
    /// Full phase space.
    Phase,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OpArg {
    And,
    Or,
}

#[derive(Subcommand)]
enum Command {
    /// Topology-only report: components, poset, bounds. Never simulates.
    Analyze {
        /// Network file, or `-` for standard input.
        file: PathBuf,
        #[command(flatten)]
        caps: CapArgs,
    },
    /// Enumerate the phase space and summarise its limit cycles.
    Simulate {
        file: PathBuf,
        #[command(flatten)]
        caps: CapArgs,
        /// Emit DOT instead of the summary.
        #[arg(long, value_enum)]
        dot: Option<DotKind>,
        /// Write DOT here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        /// List every limit cycle as bit strings (x1 first).
        #[arg(long)]
        list_cycles: bool,
    },
    /// Analyze, simulate and compare; exits 1 if any check fails.
    Check {
        file: PathBuf,
        #[command(flatten)]
        caps: CapArgs,
        /// Expected cycle structure, e.g. "4C1 + C2".
        #[arg(long)]
        expect: Option<String>,
    },
    /// Print a seeded random network.
    Random {
        #[arg(long)]
        nodes: usize,
        /// Planted strongly connected component sizes, e.g. 3,3,2.
        #[arg(long, value_delimiter = ',')]
        scc: Option<Vec<usize>>,
        /// Probability of each extra edge.
        #[arg(long, default_value_t = 0.2)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OpArg::And)]
        op: OpArg,
    },
    /// Write the dependency graph or phase space as DOT.
    ExportDot {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = DotKind::Dep)]
        dot: DotKind,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        cap: usize,
    },
}

#[derive(Args)]
struct CapArgs {
    /// Largest node count the simulator will enumerate.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    cap: usize,
    /// Largest poset for which maximal antichains are listed.
    #[arg(long, default_value_t = DEFAULT_ANTICHAIN_CAP)]
    antichain_cap: usize,
    /// Largest poset for which the upper bound is evaluated.
    #[arg(long, default_value_t = DEFAULT_UPPER_BOUND_CAP)]
    upper_cap: usize,
}

impl CapArgs {
    fn bounds(&self) -> BoundCaps {
        BoundCaps {
            antichain_components: self.antichain_cap,
            upper_bound_components: self.upper_cap,
        }
    }
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Checks,
    Usage(anyhow::Error),
    Resource(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let too_large = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<OracleError>(),
                Some(OracleError::TooLarge { .. })
            )
        });
        if too_large {
            Failure::Resource(e)
        } else {
            Failure::Usage(e)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Resource(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn read_network(path: &Path) -> Result<(BooleanNetwork, String)> {
    let (text, name) = if path.as_os_str() == "-" {
        let mut buf = String::new();
        io::stdin()
            .read_to_string(&mut buf)
            .context("reading standard input")?;
        (buf, "<stdin>".to_owned())
    } else {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        (text, path.display().to_string())
    };
    let net = BooleanNetwork::parse(&text).with_context(|| format!("parsing {name}"))?;
    Ok((net, name))
}

fn announce_enumeration(n: usize, cap: usize) {
    if n >= 20 && n <= cap {
        let mib = memory_estimate(n) as f64 / (1024.0 * 1024.0);
        eprintln!("enumerating 2^{n} states, about {mib:.0} MiB of working memory");
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn dot_text(net: &BooleanNetwork, kind: DotKind, cap: usize) -> Result<String> {
    Ok(match kind {
        DotKind::Dep => net.to_dot(),
        DotKind::Phase => {
            announce_enumeration(net.node_count(), cap);
            phase_space_dot(net, cap)?
        }
    })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Analyze { file, caps } => {
            let (net, name) = read_network(file)?;
            let report = analyze(&net, Some(&name), caps.bounds());
            let out = match cli.format {
                Format::Text => report.to_string(),
                Format::Json => to_json(&report)?,
            };
            emit(&out, None)?;
        }
        Command::Simulate {
            file,
            caps,
            dot,
            output,
            list_cycles,
        } => {
            let (net, _) = read_network(file)?;
            if let Some(kind) = dot {
                emit(&dot_text(&net, *kind, caps.cap)?, output.as_deref())?;
                return Ok(());
            }
            announce_enumeration(net.node_count(), caps.cap);
            let space = enumerate_phase_space_capped(&net, caps.cap).map_err(anyhow::Error::new)?;
            let n = net.node_count();
            let cycles: Vec<Vec<String>> = space
                .cycles
                .iter()
                .map(|c| {
                    c.states
                        .iter()
                        .map(|&s| State::from_index(s, n).to_string())
                        .collect()
                })
                .collect();
            let out = match cli.format {
                Format::Json => {
                    let mut v = serde_json::to_value(&space.summary).map_err(anyhow::Error::new)?;
                    if *list_cycles {
                        v["cycles"] = serde_json::json!(cycles);
                    }
                    to_json(&v)?
                }
                Format::Text => {
                    let s = &space.summary;
                    let mut out = format!(
                        "cycle structure: {}\nlimit cycles: {}\nfixed points: {}\nheight: {}\nperiod: {}\n",
                        s.cycle_structure, s.component_count, s.fixed_point_count, s.height, s.period
                    );
                    if *list_cycles {
                        for c in &cycles {
                            out.push_str(&format!("  {}\n", c.join(" -> ")));
                        }
                    }
                    out
                }
            };
            emit(&out, output.as_deref())?;
        }
        Command::Check { file, caps, expect } => {
            let expected: Option<CyclePolynomial> =
                expect
                    .as_deref()
                    .map(str::parse)
                    .transpose()
                    .map_err(|e| anyhow::anyhow!("--expect: {e}"))?;
            let (net, name) = read_network(file)?;
            let mut report = analyze(&net, Some(&name), caps.bounds());
            announce_enumeration(net.node_count(), caps.cap);
            simulate_and_check(&mut report, &net, caps.cap, expected.as_ref())
                .map_err(anyhow::Error::new)?;
            let out = match cli.format {
                Format::Text => report.to_string(),
                Format::Json => to_json(&report)?,
            };
            emit(&out, None)?;
            let failures = report.failures();
            if !failures.is_empty() {
                eprintln!("{} check(s) failed", failures.len());
                return Err(Failure::Checks);
            }
        }
        Command::Random {
            nodes,
            scc,
            density,
            seed,
            op,
        } => {
            let net = random_network(*nodes, scc.as_deref(), *density, *seed)
                .map_err(anyhow::Error::new)?;
            let net = match op {
                OpArg::And => net,
                OpArg::Or => net.with_op(OpKind::Disjunctive),
            };
            emit(&net.to_string(), None)?;
        }
        Command::ExportDot {
            file,
            dot,
            output,
            cap,
        } => {
            let (net, _) = read_network(file)?;
            emit(&dot_text(&net, *dot, *cap)?, output.as_deref())?;
        }
    }
    Ok(())
}
