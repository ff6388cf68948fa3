use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kspde::harness::{self, ExperimentConfig};

/// Experiments for degenerate parabolic-hyperbolic SPDEs on the torus.
#[derive(Parser)]
#[command(name = "kspde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a canned experiment; exits 0 iff every verdict passes.
    Run {
        experiment: String,
        /// JSON run configuration overlaid on the experiment's canonical one.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        members: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the file's `output_dir`, else kspde-out/<experiment>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the canned experiments.
    List,
    /// Fit the nondegeneracy exponents of the configured model.
    FitExponents {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "kspde-out/fit-exponents")]
        out: PathBuf,
    },
}

fn load(path: Option<&PathBuf>) -> kspde::Result<ExperimentConfig> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
}

fn run(command: Command) -> kspde::Result<bool> {
    match command {
        Command::List => {
            for e in harness::list_experiments() {
                println!("{:<28} {}", e.name, e.doc);
            }
            Ok(true)
        }
        Command::Run { experiment, config, members, seed, out } => {
            let mut file = load(config.as_ref())?;
            file.members = members.or(file.members);
            file.seed = seed.or(file.seed);
            let record = harness::run_experiment(&experiment, &file, out.as_deref())?;
            for c in &record.report.checks {
                println!(
                    "{:<4} {:<36} measured {:.6e}  bound {:.6e}  stderr {:.3e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.bound,
                    c.stderr
                );
            }
            println!(
                "{} {} in {:.2}s (config {})",
                record.experiment,
                if record.pass() { "passed" } else { "failed" },
                record.wall_clock_seconds,
                &record.config_hash[..12]
            );
            Ok(record.pass())
        }
        Command::FitExponents { config, out } => {
            let file = load(config.as_ref())?;
            let outcome = harness::fit_exponents_from_config(&file, &out)?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
            eprintln!("closed form: alpha {} beta {}", outcome.closed_form.0, outcome.closed_form.1);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("kspde: {e}");
            ExitCode::from(2)
        }
    }
}
