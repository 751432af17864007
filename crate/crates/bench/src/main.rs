use std::path::{Path, PathBuf};
use std::process::ExitCode;

use allgather_bench::config::{parse_algorithms, SweepSpec, TopologyChoice};
use allgather_bench::ranges::{parse_procs, parse_sizes};
use allgather_bench::sweep::read_rows;
use allgather_bench::{build_heatmap, run_sweep, verify_all, with_pool, BenchError, Result};
use allgather_core::netmodel::HockneyParams;
use clap::{Args, Parser, Subcommand};

/// Allgather schedule laboratory: modeled sweeps, best-algorithm heatmaps and executor checks.
#[derive(Parser)]
#[command(name = "allgather-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Model every (p, block size, algorithm) cell and write sweep.csv and skips.csv.
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "lab-out")]
        out: PathBuf,
        /// Also time the threaded executor this many times per cell (timings.csv).
        /// Wall-clock numbers say nothing about a real network.
        #[arg(long, value_name = "REPS")]
        time_concurrent: Option<usize>,
    },
    /// Build heatmap.csv and heatmap.svg from a sweep CSV, or from a fresh sweep.
    Heatmap {
        /// A sweep.csv to read; without it a sweep runs first.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "lab-out")]
        out: PathBuf,
    },
    /// Run both executors over the spec and check them against the oracle.
    Verify {
        #[command(flatten)]
        spec: SpecArgs,
    },
}

#[derive(Args)]
struct SpecArgs {
    /// JSON file with sweep fields; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `uniform`, `yahoo`, `cervino` or a JSON topology file.
    #[arg(long)]
    topology: Option<String>,
    /// sequential or cyclic.
    #[arg(long)]
    mapping: Option<String>,
    /// Process counts, e.g. `8..256:8,5..253:8`.
    #[arg(long)]
    procs: Option<String>,
    /// Block sizes in bytes, e.g. `1..1MiB*2` or `64K,1M`.
    #[arg(long)]
    sizes: Option<String>,
    /// Comma-separated algorithm names or `all`.
    #[arg(long)]
    algos: Option<String>,
    /// Seed of the payload generator.
    #[arg(long)]
    seed: Option<u64>,
    /// Build Sparbit without its ignore steps (debugging; causes duplicate deliveries).
    #[arg(long)]
    force_no_ignore: bool,
    /// Latency of the uniform topology.
    #[arg(long)]
    alpha: Option<f64>,
    /// Time per byte of the uniform topology.
    #[arg(long)]
    beta: Option<f64>,
    /// Skip the executor check in sweeps.
    #[arg(long)]
    no_check: bool,
}

impl SpecArgs {
    fn resolve(&self) -> Result<SweepSpec> {
        let mut spec = match &self.config {
            Some(path) => SweepSpec::from_config_file(path)?,
            None => SweepSpec::default(),
        };
        if let Some(t) = &self.topology {
            spec.topology = TopologyChoice::from_arg(t)?;
        }
        if self.alpha.is_some() || self.beta.is_some() {
            let TopologyChoice::Uniform(current) = spec.topology else {
                return Err(BenchError::Config(
                    "--alpha/--beta only apply to the uniform topology".into(),
                ));
            };
            spec.topology = TopologyChoice::Uniform(HockneyParams::new(
                self.alpha.unwrap_or(current.alpha),
                self.beta.unwrap_or(current.beta),
            )?);
        }
        if let Some(m) = &self.mapping {
            spec.mapping = m.parse()?;
        }
        if let Some(p) = &self.procs {
            spec.procs = parse_procs(p)?;
        }
        if let Some(s) = &self.sizes {
            spec.sizes = parse_sizes(s)?;
        }
        if let Some(a) = &self.algos {
            spec.algorithms = parse_algorithms(a)?;
        }
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        spec.force_no_ignore |= self.force_no_ignore;
        if self.no_check {
            spec.check_correctness = false;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if let BenchError::IncompleteGrid(missing) = &e {
                for cell in missing {
                    eprintln!("  missing {cell}");
                }
            }
            ExitCode::from(2)
        }
    }
}

/// Returns whether every correctness check passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep {
            spec,
            out,
            time_concurrent,
        } => {
            let mut spec = spec.resolve()?;
            spec.repetitions = time_concurrent.unwrap_or(spec.repetitions);
            sweep(&spec, &out)
        }
        Command::Heatmap { input, spec, out } => {
            let (rows, correct) = match input {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|source| BenchError::Io { path, source })?;
                    let rows = read_rows(&text)?;
                    let correct = rows.iter().all(|r| r.correct);
                    (rows, correct)
                }
                None => {
                    let spec = spec.resolve()?;
                    let output = with_pool(|| run_sweep(&spec))??;
                    output.write(&out)?;
                    let correct = output.all_correct();
                    (output.rows, correct)
                }
            };
            let map = build_heatmap(&rows)?;
            map.write(&out)?;
            println!(
                "{} cells written to {}",
                map.cells.len(),
                out.join("heatmap.csv").display()
            );
            Ok(correct)
        }
        Command::Verify { spec } => {
            let spec = spec.resolve()?;
            let report = with_pool(|| verify_all(&spec))??;
            print!("{report}");
            Ok(report.passed())
        }
    }
}

fn sweep(spec: &SweepSpec, out: &Path) -> Result<bool> {
    let output = with_pool(|| run_sweep(spec))??;
    output.write(out)?;
    let wrong = output.rows.iter().filter(|r| !r.correct).count();
    println!(
        "{} rows, {} skipped pairs, {} incorrect; topology {}, mapping {}; written to {}",
        output.rows.len(),
        output.skips.len(),
        wrong,
        spec.topology.name(),
        spec.mapping,
        out.display()
    );
    Ok(wrong == 0)
}
