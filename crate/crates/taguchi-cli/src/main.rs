use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use taguchi_cli::commands::{
    cmd_analyze, cmd_arrays_dump, cmd_bench, cmd_confirm, cmd_plan, cmd_run, BenchArgs,
};
use taguchi_cli::config::ProjectConfig;
use taguchi_cli::CliError;

#[derive(Parser)]
#[command(
    name = "taguchi",
    about = "Multi-objective hyperparameter search via orthogonal experiment design",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Realize the orthogonal array against the design space.
    Plan {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Evaluate plan rows into run records.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Re-run rows that already have records.
        #[arg(long)]
        force: bool,
        /// Maximum concurrently running evaluations.
        #[arg(long, default_value_t = 1)]
        max_in_flight: usize,
    },
    /// Compute group means, the suggested optimum and importance ranks.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Compare a confirmation run at H* against every orthogonal run.
    Confirm {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Use this record file instead of running/replaying a confirmation.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Benchmark orthogonal selection against random and exhaustive search.
    Bench {
        /// Design space JSON document.
        #[arg(long)]
        space: PathBuf,
        /// Synthetic function id (additive_sum, random_additive, cnn_surrogate).
        #[arg(long, default_value = "cnn_surrogate")]
        function: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative noise level applied to synthetic measurements.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Random-search budgets (defaults to the orthogonal run count).
        #[arg(long, value_delimiter = ',')]
        budgets: Vec<usize>,
        /// Objective preset for the scalar index.
        #[arg(long, default_value = "single_error")]
        preset: String,
        #[arg(long)]
        alpha_error: Option<f64>,
        /// Refuse exhaustive enumeration beyond this many grid points.
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
        /// Output CSV path.
        #[arg(long, default_value = "bench.csv")]
        out: PathBuf,
    },
    /// Inspect the embedded array catalog.
    Arrays {
        #[command(subcommand)]
        action: ArraysAction,
    },
}

#[derive(Subcommand)]
enum ArraysAction {
    /// Print catalog arrays.
    Dump {
        /// Catalog name, e.g. "L16(4^5)"; all entries when omitted.
        #[arg(long)]
        name: Option<String>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan { config, output_dir } => {
            let config = ProjectConfig::load(&config, output_dir.as_deref())?;
            let summary = cmd_plan(&config)?;
            println!("{summary}");
            println!("plan written to {}", config.output_dir.display());
        }
        Command::Run {
            config,
            output_dir,
            force,
            max_in_flight,
        } => {
            let config = ProjectConfig::load(&config, output_dir.as_deref())?;
            let summary = cmd_run(&config, force, max_in_flight)?;
            println!(
                "executed {} runs, skipped {} already recorded, {} confirmation rows",
                summary.executed, summary.skipped, summary.confirmations
            );
        }
        Command::Analyze { config, output_dir } => {
            let config = ProjectConfig::load(&config, output_dir.as_deref())?;
            for (name, report) in cmd_analyze(&config)? {
                let hstar = report
                    .optimum
                    .iter()
                    .map(|o| format!("{}={}", o.factor, o.level))
                    .collect::<Vec<_>>()
                    .join(" ");
                let ranks = report
                    .ranges
                    .iter()
                    .map(|r| format!("{}#{}", r.factor, r.rank))
                    .collect::<Vec<_>>()
                    .join(" ");
                println!("{name}: H* {{{hstar}}}");
                println!("{name}: importance {ranks}");
            }
        }
        Command::Confirm {
            config,
            output_dir,
            record,
        } => {
            let config = ProjectConfig::load(&config, output_dir.as_deref())?;
            for (name, report) in cmd_confirm(&config, record.as_deref())? {
                let confirmation = report.confirmation.expect("confirm stage ran");
                for (metric_set, j) in &confirmation.j {
                    let verdict = if confirmation.beats_all[metric_set] {
                        "beats all orthogonal runs"
                    } else if !confirmation.tied_runs[metric_set].is_empty() {
                        "ties an orthogonal run"
                    } else {
                        "does not beat every orthogonal run"
                    };
                    println!(
                        "{name}: J[{metric_set}] = {} ({verdict})",
                        taguchi::format_significant(*j, 6)
                    );
                }
            }
        }
        Command::Bench {
            space,
            function,
            trials,
            seed,
            noise,
            budgets,
            preset,
            alpha_error,
            cap,
            out,
        } => {
            let args = BenchArgs {
                space,
                function,
                trials,
                seed,
                noise,
                budgets,
                preset,
                alpha_error,
                exhaustive_cap: cap,
                out,
            };
            let (_, summary) = cmd_bench(&args)?;
            print!("{summary}");
            println!("per-trial rows written to {}", args.out.display());
        }
        Command::Arrays { action } => match action {
            ArraysAction::Dump { name } => print!("{}", cmd_arrays_dump(name.as_deref())?),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
