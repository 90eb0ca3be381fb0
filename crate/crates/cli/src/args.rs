use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Spectra, metrics and canonical pairs of non-Hermitian Hamiltonians.
#[derive(Debug, Parser)]
#[command(name = "pseudoherm", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest eigenvalues with realness classification.
    Spectrum(Options),
    /// Hermiticity table, commutator and metric checks for a similarity map.
    Verify(Options),
    /// Eigenvalues over a range of the Bender exponent, as CSV.
    Sweep(Options),
    /// Spectral time evolution of a two-mode state, as CSV.
    Evolve(Options),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Verify(_) => "verify",
            Command::Sweep(_) => "sweep",
            Command::Evolve(_) => "evolve",
        }
    }

    pub fn options(&self) -> &Options {
        match self {
            Command::Spectrum(o) | Command::Verify(o) | Command::Sweep(o) | Command::Evolve(o) => o,
        }
    }
}

/// Every option can also be given in the config file; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// INI file with [model], [representation], [task] and [output] sections.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Built-in model: paper-example, harmonic or bender.
    #[arg(long)]
    pub model: Option<String>,
    /// Hamiltonian as text, e.g. "p^2 + (2i/x)*p - 2/x^2 + x^2".
    #[arg(long, value_name = "TEXT", allow_hyphen_values = true)]
    pub expr: Option<String>,
    /// Oscillator frequency of the built-in models
    #[arg(long)]
    pub omega: Option<f64>,
    /// Bender exponent; `start:stop:step` for sweep.
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<String>,

    /// Grid half-width and points per half-line.
    #[arg(long, value_name = "L:N")]
    pub grid: Option<String>,
    /// Oscillator basis size.
    #[arg(long, value_name = "M")]
    pub basis: Option<usize>,
    /// Quadrature points for basis matrix elements.
    #[arg(long, value_name = "Q")]
    pub quad: Option<usize>,

    /// Number of eigenvalues to report.
    #[arg(long)]
    pub count: Option<usize>,
    /// Similarity map T(x) for verify.
    #[arg(long, value_name = "EXPR", allow_hyphen_values = true)]
    pub transform: Option<String>,
    /// stencil or algebraic.
    #[arg(long)]
    pub assembly: Option<String>,
    /// Final time of evolve
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Number of time steps of evolve
    #[arg(long)]
    pub steps: Option<usize>,
    /// auto, flat, or a weight expression w(x).
    #[arg(long, allow_hyphen_values = true)]
    pub metric: Option<String>,

    /// json or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Write the main output here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Significant digits of printed numbers.
    #[arg(long)]
    pub digits: Option<usize>,
    /// Write the evolve summary JSON here.
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
}
