use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qumem_cli::commands::{self, Output, SwapMode};
use qumem_cli::config::load_config;
use qumem_cli::units::{parse_quantity, Dimension};
use qumem_cli::{CliError, SEED_CONFIG};

#[derive(Parser)]
#[command(name = "qumem", version, about = "Voltage-tunable quantum memory cell simulator")]
struct Cli {
    /// Print the example configuration and exit.
    #[arg(long)]
    seed_config: bool,
    /// Write the data product here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Write the JSON run report here instead of stderr.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the cell geometry and print the calibrated configuration.
    Calibrate { config: PathBuf },
    /// Transmission of a single cell.
    Spectrum {
        config: PathBuf,
        /// `off`, `on` or `on:<inductance>`, e.g. `on:220pH`.
        #[arg(long, default_value = "on")]
        state: String,
        /// `lo,hi`, e.g. `6GHz,7GHz`.
        #[arg(long)]
        band: Option<String>,
    },
    /// Mode frequencies against junction inductance, with the crossing fit.
    Modemap {
        config: PathBuf,
        /// `lo,hi,n`, e.g. `10pH,500pH,64`.
        #[arg(long)]
        l_grid: Option<String>,
    },
    /// Excitation transfer from the TCR into the SC.
    Swap {
        config: PathBuf,
        /// Constant coupling of a lossless resonant pair, e.g. `300MHz`.
        #[arg(long, conflicts_with = "from_fit", required_unless_present = "from_fit")]
        g: Option<String>,
        /// Use the reduced model extracted from the configured cell.
        #[arg(long)]
        from_fit: bool,
    },
    /// Run a write/read schedule on the array.
    Protocol {
        config: PathBuf,
        schedule: PathBuf,
        /// Write the crosstalk table here.
        #[arg(long)]
        crosstalk: Option<PathBuf>,
    },
    /// Transmission of the whole array.
    ArraySpectrum {
        config: PathBuf,
        /// `on`, `off`, or one comma-separated entry per cell.
        #[arg(long, default_value = "on")]
        states: String,
        #[arg(long)]
        band: Option<String>,
    },
}

fn write_to(path: Option<&Path>, text: &str, fallback: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => fallback
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.seed_config {
        return write_to(cli.output.as_deref(), SEED_CONFIG, &mut std::io::stdout());
    }
    let Some(command) = cli.command else {
        return Err(CliError::invalid("no command given (try --help)"));
    };
    let mut crosstalk_path = None;
    let out: Output = match command {
        Command::Calibrate { config } => {
            let (cfg, bytes) = load_config(&config)?;
            commands::calibrate(&cfg, &bytes)?
        }
        Command::Spectrum { config, state, band } => {
            let (cfg, bytes) = load_config(&config)?;
            let state = commands::parse_state(&state, &cfg)?;
            let band = band.as_deref().map(commands::parse_band).transpose()?;
            commands::spectrum(&cfg, &bytes, state, band)?
        }
        Command::Modemap { config, l_grid } => {
            let (cfg, bytes) = load_config(&config)?;
            let grid = l_grid.as_deref().map(commands::parse_l_grid).transpose()?;
            commands::modemap(&cfg, &bytes, grid)?
        }
        Command::Swap { config, g, from_fit } => {
            let (cfg, bytes) = load_config(&config)?;
            let mode = match (g, from_fit) {
                (Some(g), false) => SwapMode::Constant {
                    g_hz: parse_quantity(&g, Dimension::Frequency).map_err(|e| CliError::invalid(format!("--g: {e}")))?,
                },
                _ => SwapMode::FromFit,
            };
            commands::swap(&cfg, &bytes, mode)?
        }
        Command::Protocol {
            config,
            schedule,
            crosstalk,
        } => {
            let (cfg, bytes) = load_config(&config)?;
            let text = fs::read_to_string(&schedule).map_err(|e| CliError::Io(format!("{}: {e}", schedule.display())))?;
            crosstalk_path = crosstalk;
            commands::protocol(&cfg, &bytes, &text)?
        }
        Command::ArraySpectrum { config, states, band } => {
            let (cfg, bytes) = load_config(&config)?;
            let band = band.as_deref().map(commands::parse_band).transpose()?;
            commands::array_spectrum(&cfg, &bytes, &states, band)?
        }
    };
    write_to(cli.output.as_deref(), &out.data, &mut std::io::stdout())?;
    if let (Some(p), Some(extra)) = (crosstalk_path, &out.extra) {
        write_to(Some(&p), extra, &mut std::io::sink())?;
    }
    write_to(cli.report.as_deref(), &out.report.to_json(), &mut std::io::stderr())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
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
