use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use amnesia_cli::commands::{self, parse_param, Format, HistoryPreset, ReproduceOptions, SimulateOptions};
use amnesia_cli::report::AnalyzeOptions;
use amnesia_cli::CliError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "amnesia",
    version,
    about = "Oscillation criterion for delay equations with amnesia operators"
)]
struct Cli {
    /// Console output format.
    #[arg(long, global = true, default_value = "text", value_parser = ["json", "csv", "text"])]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate w and report the criterion verdict for an equation spec.
    Analyze {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t_start: f64,
        #[arg(long, default_value_t = 200.0)]
        t_end: f64,
        #[arg(long, default_value_t = amnesia_core::criterion::DEFAULT_GRID_POINTS)]
        grid_points: usize,
        #[arg(long, default_value_t = amnesia_core::criterion::DEFAULT_PANELS)]
        panels: usize,
        /// Where to write the report JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the equation from a history preset and classify the solution.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// constant:c, exponential:lambda or random:seed
        #[arg(long, default_value = "random:1", allow_hyphen_values = true)]
        history: String,
        /// Shorthand for --history random:SEED.
        #[arg(long, conflicts_with = "history")]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 50.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Where to write the trajectory CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterate the power tower x^x^...^x.
    Tower {
        #[arg(long, allow_negative_numbers = true)]
        base: f64,
        #[arg(long, default_value_t = amnesia_core::special_functions::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long, default_value_t = amnesia_core::special_functions::DEFAULT_TOL)]
        tol: f64,
    },
    /// Rebuild one of the worked examples and run a concordance experiment.
    Reproduce {
        #[arg(long)]
        app: u8,
        /// Parameter override, repeatable.
        #[arg(long = "param", value_name = "NAME=VALUE", allow_hyphen_values = true)]
        params: Vec<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        histories: usize,
        /// Simulation horizon (per-application default when omitted).
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Bundle directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let format: Format = cli.format.parse()?;
    match cli.command {
        Command::Analyze {
            spec,
            t_start,
            t_end,
            grid_points,
            panels,
            out,
        } => {
            let opts = AnalyzeOptions {
                t_start,
                t_end,
                grid_points,
                panels,
                ..AnalyzeOptions::default()
            };
            commands::analyze(&spec, &opts, out.as_deref(), format, stdout)?;
        }
        Command::Simulate {
            spec,
            history,
            seed,
            amplitude,
            t_end,
            step,
            out,
        } => {
            let preset = match seed {
                Some(s) => HistoryPreset::Random(s),
                None => history.parse()?,
            };
            let opts = SimulateOptions {
                preset,
                t_end,
                step,
                amplitude,
            };
            commands::simulate(&spec, &opts, out.as_deref(), format, stdout)?.check_overflow()?;
        }
        Command::Tower { base, max_iter, tol } => {
            commands::tower(base, tol, max_iter, format, stdout)?;
        }
        Command::Reproduce {
            app,
            params,
            seed,
            histories,
            t_end,
            step,
            out,
        } => {
            let mut opts =
                ReproduceOptions::new(app, out.unwrap_or_else(|| PathBuf::from(format!("amnesia-app{app}"))));
            opts.params = params.iter().map(|p| parse_param(p)).collect::<Result<_, _>>()?;
            opts.seed = seed;
            opts.histories = histories;
            opts.t_end = t_end;
            opts.step = step;
            commands::reproduce(&opts, format, stdout)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let result = run(cli, &mut stdout);
    let _ = stdout.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
