//! Command-line harness: quorum search/verification, cycle routing and
//! direction dumps, experiment runs, and report regeneration.
//!
//! Exit codes: 0 success, 1 usage, 2 infeasible (quorum or routing), 3 I/O
//! or malformed input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qcp::direction;
use qcp::experiment::{self, ExperimentError};
use qcp::quorum::{self, QuorumError, SearchStrategy};
use qcp::routing;
use qcp::topology;

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qcp",
    version,
    about = "Quorum-cycle planning and single-link fault simulation for mesh networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quorum base search and verification.
    #[command(subcommand)]
    Quorum(QuorumCmd),
    /// Route every quorum cycle on a topology and dump the walks.
    Route {
        topo: PathBuf,
        basefile: PathBuf,
        /// Redundancy of the base to pick from the base file.
        #[arg(long, default_value_t = 1)]
        redundancy: usize,
    },
    /// Assign cycle directions and dump the assignment plus missing pairs.
    Direct {
        topo: PathBuf,
        basefile: PathBuf,
        #[arg(long, value_enum)]
        strategy: DirectStrategy,
        #[arg(long, default_value_t = 1)]
        redundancy: usize,
        /// Seed for the random strategy.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the experiment described by a key=value config file.
    Simulate { config: PathBuf },
    /// Recompute aggregates from an output directory and print the
    /// strategy comparison.
    Report { dir: PathBuf },
}

#[derive(Subcommand)]
enum QuorumCmd {
    /// Search for a minimal verified base and print its file line.
    Find {
        n: usize,
        r: usize,
        #[arg(long, default_value = "exhaustive")]
        strategy: SearchArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scored-candidate cap for the randomized strategy.
        #[arg(long, default_value_t = experiment::DEFAULT_SEARCH_BUDGET)]
        budget: u64,
    },
    /// Re-verify every base in a base-set file.
    Verify { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchArg {
    Exhaustive,
    Randomized,
}

impl From<SearchArg> for SearchStrategy {
    fn from(value: SearchArg) -> Self {
        match value {
            SearchArg::Exhaustive => Self::Exhaustive,
            SearchArg::Randomized => Self::Randomized,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectStrategy {
    Forward,
    Random,
    Greedy,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn quorum_failure(e: QuorumError) -> Failure {
    let code = match e {
        QuorumError::Infeasible { .. } | QuorumError::BudgetExhausted { .. } => EXIT_INFEASIBLE,
        _ => EXIT_IO,
    };
    Failure::new(code, e.to_string())
}

fn experiment_failure(e: ExperimentError) -> Failure {
    match e {
        ExperimentError::Quorum(q) => quorum_failure(q),
        other => Failure::new(EXIT_IO, other.to_string()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
}

fn load_topology(path: &Path) -> Result<topology::Topology, Failure> {
    let text = read(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    topology::load_topology(&text)
        .map(|t| t.with_name(name))
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
}

fn load_base(path: &Path, n: usize, r: usize) -> Result<quorum::QuorumBase, Failure> {
    let bases = quorum::load_bases(&read(path)?)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?;
    quorum::find_base(&bases, n, r).cloned().ok_or_else(|| {
        Failure::new(
            EXIT_INFEASIBLE,
            format!("no base for N={n}, R={r} in {}", path.display()),
        )
    })
}

fn routed_cycles(
    topo_path: &Path,
    base_path: &Path,
    redundancy: usize,
) -> Result<(topology::Topology, Vec<routing::CycleRoute>), Failure> {
    let topo = load_topology(topo_path)?;
    let base = load_base(base_path, topo.node_count(), redundancy)?;
    let qs = quorum::QuorumSet::generate(base);
    let cycles = routing::route_all(&topo, &qs)
        .map_err(|e| Failure::new(EXIT_INFEASIBLE, e.to_string()))?;
    Ok((topo, cycles))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Quorum(QuorumCmd::Find {
            n,
            r,
            strategy,
            seed,
            budget,
        }) => {
            let base = quorum::find_min_redundant_base(n, r, strategy.into(), seed, budget)
                .map_err(quorum_failure)?;
            println!("{}", base.to_line());
            Ok(())
        }
        Command::Quorum(QuorumCmd::Verify { file }) => {
            let bases = quorum::load_bases(&read(&file)?)
                .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", file.display())))?;
            println!("ok: {} verified bases", bases.len());
            Ok(())
        }
        Command::Route {
            topo,
            basefile,
            redundancy,
        } => {
            let (_, cycles) = routed_cycles(&topo, &basefile, redundancy)?;
            print!("{}", routing::dump_cycles(&cycles));
            Ok(())
        }
        Command::Direct {
            topo,
            basefile,
            strategy,
            redundancy,
            seed,
        } => {
            let (t, cycles) = routed_cycles(&topo, &basefile, redundancy)?;
            let n = t.node_count();
            let assignment = match strategy {
                DirectStrategy::Forward => direction::assign_forward(n, &cycles),
                DirectStrategy::Random => direction::assign_random(n, &cycles, seed),
                DirectStrategy::Greedy => direction::initial_cycle_direction(n, &cycles)
                    .and_then(|(initial, pc)| {
                        direction::greedy_update_cycle_direction(&cycles, &initial, pc)
                    })
                    .map(|(updated, _)| updated),
            }
            .map_err(|e| Failure::new(EXIT_INFEASIBLE, e.to_string()))?;
            print!("{}", direction::dump_directions(&assignment));
            println!("# missing pairs");
            print!("{}", direction::dump_missing(&assignment.missing));
            Ok(())
        }
        Command::Simulate { config } => {
            let cfg = experiment::parse_config(&read(&config)?)
                .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", config.display())))?;
            let agg = experiment::run_experiment(&cfg).map_err(experiment_failure)?;
            print!("{}", experiment::summary_csv(&agg));
            println!("# artifacts in {}", cfg.output_dir.display());
            Ok(())
        }
        Command::Report { dir } => {
            let agg = experiment::report_from_dir(&dir).map_err(experiment_failure)?;
            print!("{}", experiment::summary_csv(&agg));
            match experiment::compare_strategies(&agg) {
                Ok(rows) => {
                    println!("# metric forward greedy reduction_pct");
                    for row in rows {
                        println!(
                            "{} {} {} {}",
                            row.metric,
                            row.forward,
                            row.greedy,
                            row.formatted()
                        );
                    }
                }
                Err(e) => eprintln!("note: no comparison: {e}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
