//! `affloop`: simulate, calibrate, analyze, run the closed loop, serve live
//! streams and query the pattern catalog.

mod commands;
mod config;
mod error;
mod plot;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use affloop_core::catalog::ArousalEffect;
use affloop_core::signal::Phase;
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::commands::{AnalyzeArgs, LoopArgs, SimulateArgs};
use crate::config::{defaults_toml, load_catalog_arg, read_baseline, RunConfig};
use crate::error::CliResult;

const EXIT_CODES: &str = "Exit codes: 0 success, 1 usage, 2 invalid data or configuration, 3 I/O.";

#[derive(Parser)]
#[command(name = "affloop", version, about = "Affective-loop engine: physiological arousal estimation, pattern correlation and adaptive control")]
struct Cli {
    /// TOML run configuration; see the end of `--help` for every key and its default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for the player model, protocol schedule and permutation test (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the calibration, gaming and strong-stimulus protocol into a session file.
    Simulate {
        /// Output session file.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated phases to run [default: from config, all three].
        #[arg(long, value_delimiter = ',')]
        phases: Option<Vec<Phase>>,
        /// Session length in seconds [default: the schedule's length].
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value = "sim")]
        subject: String,
        /// Pattern catalog file [default: built-in seed catalog].
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Compute a baseline from a session's calibration phase.
    Calibrate {
        session: PathBuf,
        /// Output baseline file (TOML).
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlate pattern events with phasic responses and write the affect trace.
    Analyze {
        session: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        /// Pattern catalog file [default: built-in seed catalog].
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Directory for report.txt, affect.txt and optional outputs.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write one SVG per channel and arousal.svg.
        #[arg(long)]
        plot: bool,
        /// Also write reaction templates per pattern and stimulus class to templates.txt.
        #[arg(long)]
        templates: bool,
    },
    /// Run the simulated player under the controller.
    Loop {
        /// Seconds to run, at least 60.
        #[arg(long, default_value_t = 300.0)]
        duration: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Pattern catalog file [default: built-in seed catalog].
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Log directives without applying them to the player.
        #[arg(long)]
        no_inject: bool,
    },
    /// Accept sample streams over TCP and print affect states and directives.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[arg(long)]
        baseline: PathBuf,
        /// Pattern catalog file [default: built-in seed catalog].
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Print affect states only, no directives.
        #[arg(long)]
        no_control: bool,
    },
    /// Stream a session's samples to a running server.
    Replay {
        session: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: String,
        /// Session seconds per wall-clock second; 0 sends as fast as possible.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        /// Comma-separated device ids to send [default: all].
        #[arg(long, value_delimiter = ',')]
        devices: Vec<String>,
    },
    /// Pattern catalog tools.
    Catalog {
        #[command(subcommand)]
        action: CatalogCommand,
    },
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// Print `ok <n>` or one violation per line.
    Validate {
        /// Catalog file [default: built-in seed catalog].
        path: Option<PathBuf>,
    },
    /// Rank patterns to add to a selection, one id per line.
    Recommend {
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Comma-separated selected pattern ids.
        #[arg(long, value_delimiter = ',')]
        selected: Vec<String>,
        /// raise, lower or neutral.
        #[arg(long, default_value = "raise")]
        goal: ArousalEffect,
        #[arg(short, long, default_value_t = 5)]
        k: usize,
    },
    /// Print the closure of a selection and its conflicting pairs.
    Effective {
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        selected: Vec<String>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?.with_seed(cli.seed);
    let text = match cli.command {
        Command::Simulate { out, phases, duration, subject, catalog } => {
            commands::simulate(&cfg, SimulateArgs { out, phases, duration, subject, catalog })?
        }
        Command::Calibrate { session, out } => commands::calibrate_cmd(&cfg, &session, &out)?,
        Command::Analyze { session, baseline, catalog, out_dir, plot, templates } => {
            commands::analyze(&cfg, AnalyzeArgs { session, baseline, catalog, out_dir, plot, templates })?
        }
        Command::Loop { duration, out_dir, catalog, no_inject } => {
            commands::run_loop(&cfg, LoopArgs { duration, out_dir, catalog, no_inject })?
        }
        Command::Serve { port, bind, baseline, catalog, no_control } => {
            let args = serve::ServeArgs {
                bind: &bind,
                port,
                baseline: read_baseline(&baseline)?,
                catalog: load_catalog_arg(catalog.as_deref())?,
                control: !no_control,
            };
            serve::serve(&cfg, args)?;
            String::new()
        }
        Command::Replay { session, addr, speed, devices } => {
            let replies = serve::replay(serve::ReplayArgs { session: &session, addr: &addr, speed, devices: &devices })?;
            eprint!("{replies}");
            String::new()
        }
        Command::Catalog { action } => match action {
            CatalogCommand::Validate { path } => commands::catalog_validate(path.as_deref())?,
            CatalogCommand::Recommend { catalog, selected, goal, k } => {
                commands::catalog_recommend(catalog.as_deref(), &selected, goal, k)?
            }
            CatalogCommand::Effective { catalog, selected } => commands::catalog_effective(catalog.as_deref(), &selected)?,
        },
    };
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let help = format!("{EXIT_CODES}\n\nConfiguration file keys and defaults:\n\n{}", defaults_toml());
    let matches = match Cli::command().after_long_help(help).after_help(EXIT_CODES).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
