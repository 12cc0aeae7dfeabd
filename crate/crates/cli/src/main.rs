mod commands;
mod config;
mod error;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{OracleOptions, Requirement, SweepRange};
use config::ScenarioConfig;
use error::CliError;
use table::resolve_output;

const LOOP_GAIN_HELP: &str = "\
Loop-gain conventions:
  Noise levels (--classical-db) are spectral: 10*log10 of a power ratio,
  so 60 dB of classical noise means V_in = 1e6.
  Loop gains are amplitudes: 20*log10|L|. The classical term falls as
  1/|L|^2, so burying V_in = 1e6 a factor 100 below the floor of a matched
  cavity needs |L|^2 = 1e8, i.e. |L| = 1e4: 80 dB as 20*log10|L| and
  40 dB as 10*log10|L|. required_loop_gain prints both.";

const ENV_HELP: &str = "\
Outputs written without --output go to $RPSQUASH_OUTPUT_DIR (default: the
current directory).

Exit status: 0 success, 1 invalid input, 2 numerical or stability failure,
3 oracle comparison failure.";

#[derive(Debug, Parser)]
#[command(name = "rpsquash", version, about = "Amplitude-noise spectra of a laser-driven cavity with intensity feedback", after_help = ENV_HELP)]
struct Cli {
    /// Print the scenario with every default filled in, then exit.
    #[arg(long, global = true)]
    dump_config: bool,

    /// Report frequencies as omega/kappa and amplitude spectra times kappa.
    #[arg(long, global = true)]
    kappa_normalized: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Amplitude-noise budget on the config grid, plus the reflected phase
    /// when a [mechanical] section is present.
    Spectrum {
        config: PathBuf,
        /// Close the loop with the [filter] section.
        #[arg(long)]
        feedback: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// DC noise and suppression over one parameter.
    Sweep {
        config: PathBuf,
        /// eta, kappa_out, kappa_loss or filter.gain
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Space the values logarithmically.
        #[arg(long)]
        log: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Closed-loop stability and margins. Exits 2 when unstable.
    #[command(after_help = LOOP_GAIN_HELP)]
    Stability {
        config: PathBuf,
        /// Classical input noise above vacuum, 10*log10 V_in; prints the
        /// loop gain needed to bury it.
        #[arg(long)]
        classical_db: Option<f64>,
        /// Allowed classical residual as a fraction of the feedback floor.
        #[arg(long, default_value_t = 0.01)]
        residual: f64,
    },
    /// Time-domain simulation checked against the closed forms. Exits 3
    /// when the RMS deviation exceeds the tolerance.
    Oracle {
        config: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
        /// Lower edge of the compared band, rad/s.
        #[arg(long)]
        band_min: Option<f64>,
        /// Upper edge of the compared band, rad/s (default kappa/2).
        #[arg(long)]
        band_max: Option<f64>,
        /// Negative control: compare against the closed form for this
        /// detector efficiency instead of the simulated one.
        #[arg(long)]
        analytic_eta: Option<f64>,
        /// Negative control: feed the detector an independent copy of the
        /// output-mirror vacuum.
        #[arg(long)]
        break_correlation: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reflected phase with the loop closed versus an amplitude-squeezed
    /// drive with V_in = squeeze.
    Compare {
        config: PathBuf,
        #[arg(long)]
        squeeze: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

impl Command {
    fn config(&self) -> &Path {
        match self {
            Command::Spectrum { config, .. }
            | Command::Sweep { config, .. }
            | Command::Stability { config, .. }
            | Command::Oracle { config, .. }
            | Command::Compare { config, .. } => config,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = ScenarioConfig::load(cli.command.config())?;
    if cli.dump_config {
        print!("{}", cfg.resolved().to_toml());
        return Ok(());
    }
    let norm = cli.kappa_normalized;
    match &cli.command {
        Command::Spectrum {
            feedback, output, ..
        } => {
            let s = cfg.build()?;
            commands::spectrum(&s, *feedback, &resolve_output(output.as_deref(), "spectrum.csv"), norm)
        }
        Command::Sweep {
            param,
            from,
            to,
            points,
            log,
            output,
            ..
        } => {
            let range = SweepRange {
                from: *from,
                to: *to,
                points: *points,
                log: *log,
            };
            let path = resolve_output(output.as_deref(), "sweep.csv");
            commands::sweep(&cfg, param, &range, &path, norm)
        }
        Command::Stability {
            classical_db,
            residual,
            ..
        } => {
            let s = cfg.build()?;
            let req = classical_db.map(|db| Requirement {
                classical_db: db,
                residual: *residual,
            });
            commands::stability(&s, req)
        }
        Command::Oracle {
            tolerance,
            band_min,
            band_max,
            analytic_eta,
            break_correlation,
            output,
            ..
        } => {
            let s = cfg.build()?;
            let opts = OracleOptions {
                tolerance: *tolerance,
                band: (*band_min, *band_max),
                analytic_eta: *analytic_eta,
                break_correlation: *break_correlation,
            };
            commands::oracle(&s, &opts, &resolve_output(output.as_deref(), "oracle.csv"), norm)
        }
        Command::Compare {
            squeeze, output, ..
        } => {
            let s = cfg.build()?;
            commands::compare(&s, *squeeze, &resolve_output(output.as_deref(), "compare.csv"), norm)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors share the invalid-input status
            let code = if e.use_stderr() { error::EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
