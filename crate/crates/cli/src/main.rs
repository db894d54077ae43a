use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dante_cli::{cmd_compare, cmd_plot, cmd_train, cmd_verify_slqc, Metric};

#[derive(Parser)]
#[command(
    name = "dante",
    version,
    about = "DANTE and backprop training runs, quasi-convexity certification, plots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network from a JSON experiment config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Certify a quasi-convexity theorem on seeded random instances.
    VerifySlqc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Plot a metric against weights updated, one line per metrics CSV.
    Plot {
        #[arg(required = true)]
        csvs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
        #[arg(long, value_enum, default_value_t = Metric::TestLoss)]
        metric: Metric,
    },
    /// Tabulate final metrics of finished runs.
    Compare {
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DANTE_LOG", "warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Train {
            config,
            out,
            force,
            seed,
        } => cmd_train(&config, out.as_deref(), force, seed).map(|m| {
            println!(
                "{}: {} steps, {} weights updated, final test loss {}",
                m.name, m.summary.steps, m.summary.weights_updated, m.summary.final_test_loss
            )
        }),
        Command::VerifySlqc {
            config,
            out,
            force,
            seed,
        } => cmd_verify_slqc(&config, out.as_deref(), force, seed).map(|_| ()),
        Command::Plot {
            csvs,
            out,
            force,
            metric,
        } => cmd_plot(&csvs, &out, force, metric),
        Command::Compare { dirs, out, force } => {
            cmd_compare(&dirs, out.as_deref(), force).map(|_| ())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
