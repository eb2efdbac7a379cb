//! `lagmmse`: one subcommand per computation, plus manifests that chain them.
//!
//! Units throughout: time for lookahead and horizons, SNR as intensity per unit
//! time, variances in squared signal units.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use lagmmse_core::io::{format_number, OutputFormat};
use lagmmse_core::model::{linspace, Lookahead};
use serde_json::Value;

pub mod commands;
pub mod manifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, files or parameters.
    #[error("input error: {0}")]
    Input(String),
    /// A computation failed on valid input.
    #[error("computation failed: {0}")]
    Failure(String),
    /// A manifest assertion did not hold.
    #[error("{0}")]
    AssertionFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Failure(_) | CliError::AssertionFailed(_) => EXIT_ASSERTION,
        }
    }
}

impl From<lagmmse_core::Error> for CliError {
    fn from(e: lagmmse_core::Error) -> Self {
        use lagmmse_core::Error as E;
        match e {
            E::InvalidParameter { .. } | E::Reducible(_) => CliError::Input(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// A list of lookaheads: `lo:hi:count` or comma-separated values (`inf` and `-inf` allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 {
            let lo: f64 = parts[0].trim().parse().map_err(|_| format!("bad range start {:?}", parts[0]))?;
            let hi: f64 = parts[1].trim().parse().map_err(|_| format!("bad range end {:?}", parts[1]))?;
            let n: usize = parts[2].trim().parse().map_err(|_| format!("bad point count {:?}", parts[2]))?;
            if !(lo.is_finite() && hi.is_finite()) || hi < lo {
                return Err(format!("range {s:?} needs finite lo <= hi"));
            }
            return Ok(Grid(linspace(lo, hi, n)));
        }
        if s.trim().is_empty() {
            return Ok(Grid(Vec::new()));
        }
        s.split(',')
            .map(|v| v.trim().parse::<Lookahead>().map(|l| l.0).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()
            .map(Grid)
    }
}

/// Comma-separated positive reals.
#[derive(Debug, Clone, PartialEq)]
pub struct List(pub Vec<f64>);

impl FromStr for List {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad number {v:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lagmmse",
    version,
    about = "Minimum mean-squared error with finite lookahead in additive white Gaussian noise",
    long_about = "Minimum mean-squared error with finite lookahead in additive white Gaussian noise.\n\n\
        Channel: dY = sqrt(snr) X dt + dW. Units: lookahead d and horizons in time units; \
        snr in signal power per unit time; errors in squared signal units.\n\n\
        Set LAGMMSE_THREADS to cap worker threads. Exit codes: 0 success, 1 failed assertion \
        or computation, 2 input error."
)]
pub struct Cli {
    /// Output format: csv (tables) or json.
    #[arg(long, global = true, default_value = "json")]
    pub format: OutputFormat,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct OuArgs {
    /// Mean-reversion rate alpha (1/time).
    #[arg(long)]
    pub alpha: f64,
    /// Diffusion coefficient beta (signal units per sqrt(time)).
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

#[derive(Debug, Args, Clone)]
pub struct McArgs {
    /// Seed; equal seeds give identical output for any thread count.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent paths in the first batch.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Simulation step (time units).
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Averaging window per path (time units).
    #[arg(long, default_value_t = 20.0)]
    pub window: f64,
    /// Keep doubling the path count until the standard error (squared signal units) is below this.
    #[arg(long)]
    pub target_stderr: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lookahead error curve of an OU process (d in time, snr per unit time, errors in variance units).
    OuCurve {
        #[command(flatten)]
        ou: OuArgs,
        /// Signal-to-noise ratio (per unit time).
        #[arg(long)]
        snr: f64,
        /// Lookaheads (time): lo:hi:count or a comma list; inf and -inf allowed.
        #[arg(long, default_value = "-5:5:101", allow_hyphen_values = true)]
        d_grid: Grid,
    },
    /// SNR needed at lookahead d to match the zero-lookahead error at snr (d in time, SNR per unit time).
    Tradeoff {
        #[command(flatten)]
        ou: OuArgs,
        /// Reference SNR (per unit time).
        #[arg(long)]
        snr: f64,
        /// Lookaheads (time).
        #[arg(long, default_value = "-0.9,-0.5,0,0.5,1,2,inf", allow_hyphen_values = true)]
        d_grid: Grid,
    },
    /// Lower and upper bounds on the error of the Gaussian process sharing an OU mixture's
    /// spectrum (d in time, SNR per unit time, errors in variance units).
    MixtureBounds {
        /// Mixture rates (1/time), comma separated.
        #[arg(long)]
        alphas: List,
        /// Mixture weights summing to 1, comma separated.
        #[arg(long)]
        weights: List,
        /// Signal-to-noise ratio (per unit time).
        #[arg(long)]
        snr: f64,
        /// Lookaheads (time); the simulated upper bound needs d >= 0.
        #[arg(long, default_value = "0,0.25,0.5,1,2,inf", allow_hyphen_values = true)]
        d_grid: Grid,
        /// Candidate smoother rates (1/time) for the upper bound.
        #[arg(long)]
        beta_grid: Option<List>,
        /// Skip the simulated upper bound.
        #[arg(long)]
        no_upper: bool,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Wiener-Hopf lookahead curve for a spectrum given as JSON config or tabulated CSV
    /// (angular frequency in rad/time, d in time, SNR per unit time).
    Spectral {
        /// Process config (JSON) with a "variant" field: Ou, OuMixture, RationalGaussian or TabulatedGaussian.
        #[arg(long, conflicts_with = "csv")]
        spec: Option<PathBuf>,
        /// Two-column CSV (omega, s_value) of a tabulated spectrum.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Signal-to-noise ratio (per unit time); overrides the config's snr.
        #[arg(long)]
        snr: Option<f64>,
        /// Lookaheads (time).
        #[arg(long, default_value = "-3:3:61", allow_hyphen_values = true)]
        d_grid: Grid,
        /// FFT size for tabulated spectra (power of two).
        #[arg(long, default_value_t = 1 << 16)]
        grid_points: usize,
        /// Frequency range for tabulated spectra (rad/time).
        #[arg(long, default_value_t = 64.0)]
        omega_max: f64,
    },
    /// Information gained from lookahead for an OU process (tau in time, utility in nats).
    Utility {
        #[command(flatten)]
        ou: OuArgs,
        /// Signal-to-noise ratio (per unit time).
        #[arg(long)]
        snr: f64,
        /// Lookaheads (time), all >= 0.
        #[arg(long, default_value = "0:5:51")]
        tau_grid: Grid,
    },
    /// Averages the jump-channel error over SNR and horizon and compares it with the
    /// causal error (T in time, SNR per unit time, errors in variance units).
    JumpIdentity {
        #[command(flatten)]
        ou: OuArgs,
        /// Signal-to-noise ratio (per unit time).
        #[arg(long)]
        snr: f64,
        /// Horizon T (time).
        #[arg(long = "T", alias = "horizon")]
        horizon: f64,
        /// Initial Gauss-Legendre nodes per axis; doubles until converged.
        #[arg(long, default_value_t = 16)]
        nodes: usize,
    },
    /// Piecewise-constant Markov process versus its time reversal (d in time, unit symbol
    /// duration, SNR per unit time, errors in variance units).
    Counterexample {
        /// Chain JSON with "values" and "transition"; defaults to the built-in three-state example.
        #[arg(long)]
        chain: Option<PathBuf>,
        /// Signal-to-noise ratio (per unit time).
        #[arg(long, default_value_t = 1.0)]
        snr: f64,
        /// Lookaheads (time) in [-1, 1].
        #[arg(long, default_value = "-1:1:9", allow_hyphen_values = true)]
        d_grid: Grid,
        /// Fully observed symbols before the window.
        #[arg(long, default_value_t = 50)]
        hist_len: usize,
        /// Only the closed-form quantities, no simulation.
        #[arg(long)]
        analytic_only: bool,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Monte Carlo fixed-lag smoother for an OU process against the closed form
    /// (d in time, SNR per unit time, errors in variance units).
    Simulate {
        #[command(flatten)]
        ou: OuArgs,
        /// Signal-to-noise ratio (per unit time).
        #[arg(long)]
        snr: f64,
        /// Lookahead (time); inf allowed.
        #[arg(long, allow_hyphen_values = true)]
        d: Lookahead,
        /// SNR after time 0 (per unit time); switches to the jump channel.
        #[arg(long)]
        gamma_future: Option<f64>,
        /// Observation beyond d on the jump channel (time).
        #[arg(long, default_value_t = 0.0)]
        l: f64,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Runs a manifest (built-in name or JSON path) and checks its expected values.
    RunManifest {
        /// fig2-caption, sec3a, sec7b, or a path to a manifest file.
        manifest: String,
    },
}

/// What a subcommand produced: always JSON, sometimes a CSV table as well.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub json: Value,
    pub csv: Option<String>,
    /// Set when the command checked assertions and some failed.
    pub failed: bool,
}

impl Output {
    pub fn json(json: Value) -> Self {
        Self {
            json,
            csv: None,
            failed: false,
        }
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match (format, &self.csv) {
            (OutputFormat::Csv, Some(csv)) => csv.clone(),
            _ => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("values always serialize");
                s.push('\n');
                s
            }
        }
    }
}

/// Builds a CSV from a header and rows of numbers.
pub(crate) fn csv_table(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(format_number).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn execute(command: &Command) -> Result<Output, CliError> {
    commands::dispatch(command)
}

/// Applies `LAGMMSE_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("LAGMMSE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Input(format!("LAGMMSE_THREADS must be a positive integer, got {v:?}")))?;
        // a pool already set up by an earlier call in the same process is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Full command-line entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("lagmmse: {e}");
            e.exit_code()
        }
    }
}

fn run_cli(cli: &Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let out = execute(&cli.command)?;
    let text = out.render(cli.format);
    match &cli.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(if out.failed { EXIT_ASSERTION } else { EXIT_OK })
}
