use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use ibob_cli::{cmd_compare, cmd_fom, cmd_simulate, CliResult, FomArgs, RunConfig, SimulateOptions};
use ibob_core::FomReport;

/// In-body to out-of-body channel simulation and figure-of-merit reports.
///
/// Log verbosity is read from IBOB_LOG (error, warn, info, debug).
#[derive(Parser)]
#[command(name = "ibob", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate body and free-space path-loss curves for every configured band.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides output_dir in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Allow a band to run on the other channel model than its own.
        #[arg(long)]
        allow_model_override: bool,
        /// Also report FoM with the torso radius scaled by 0.7 and 1.3.
        #[arg(long)]
        torso_sensitivity: bool,
    },
    /// Figure of merit from a body/air curve pair.
    Fom {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        air: PathBuf,
        /// Eavesdropper distance X in meters.
        #[arg(long = "x")]
        x_m: f64,
        #[arg(long, default_value_t = 1.0)]
        w_ll: f64,
        #[arg(long, default_value_t = 1.0)]
        w_dpl: f64,
        /// Treat the loss columns as signal levels (negative dB) and negate them.
        #[arg(long)]
        negate: bool,
        /// Band of both files when their names do not start with <band_hz>_.
        #[arg(long)]
        band_hz: Option<f64>,
        /// Report file; <band_hz>_fom.csv beside the body file by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank FoM reports and write SVG charts.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        svg: PathBuf,
        /// Curve files to plot; by default <band_hz>_<scenario>.csv files
        /// beside the reports.
        #[arg(long, num_args = 1..)]
        curves: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            allow_model_override,
            torso_sensitivity,
        } => {
            let cfg = RunConfig::load(&config)?;
            let opts = SimulateOptions {
                out_dir: out,
                allow_model_override,
                torso_sensitivity,
            };
            let result = cmd_simulate(&cfg, &opts)?;
            for f in &result.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Fom {
            body,
            air,
            x_m,
            w_ll,
            w_dpl,
            negate,
            band_hz,
            out,
        } => {
            let args = FomArgs {
                body,
                air,
                x_m,
                w_ll,
                w_dpl,
                negate,
                band_hz,
                out,
            };
            let (report, path) = cmd_fom(&args)?;
            print!("{}", FomReport::to_csv(&[report]));
            eprintln!("wrote {}", path.display());
        }
        Command::Compare { reports, svg, curves } => {
            let result = cmd_compare(&reports, &svg, &curves)?;
            print!("{}", result.table);
            eprintln!("wrote {}", result.bar_svg.display());
            eprintln!("wrote {}", result.line_svg.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IBOB_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("argument: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.one_line());
            ExitCode::FAILURE
        }
    }
}
