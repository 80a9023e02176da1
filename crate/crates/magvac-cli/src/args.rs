//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "magvac", version, about = "Vacuum energies of Pauli operators in magnetic fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Regulator masses m0 < m1 < m2, in units of the electron mass.
    #[arg(long, global = true, value_delimiter = ',', default_value = "1,2,3")]
    pub masses: Vec<f64>,
    /// Bare charge.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub e: f64,
    /// Relative tolerance of the proper-time quadratures.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub rel_tol: f64,
    /// Output format; tables default to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    pub out: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Run the subcommand's built-in exact checks instead of the computation.
    #[arg(long, global = true)]
    pub self_test: bool,
    /// Report all wall-clock timings as zero, for byte-identical reruns.
    #[arg(long, global = true)]
    pub no_timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldProfile {
    Zero,
    Vortex,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StripeKind {
    Zero,
    Constant,
    Cosine,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Dense,
    Blocks,
}

/// Field source shared by the grid subcommands.
#[derive(Debug, Clone, Args)]
pub struct FieldSource {
    /// Built-in profile sampled on an n^3 grid.
    #[arg(long, value_enum, default_value = "vortex", conflicts_with = "grid")]
    pub profile: FieldProfile,
    /// Grid file in the magvac-grid format.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Side of the periodic box.
    #[arg(long, default_value_t = 8.0)]
    pub length: f64,
    /// Peak field of the built-in profile.
    #[arg(long, default_value_t = 1.5)]
    pub amplitude: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the renormalized Euler-Heisenberg density and its asymptotic ratios.
    TabulateEh {
        #[arg(long, default_value = "1e-3:1e3:log:25")]
        x_grid: String,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
    },
    /// Tabulate the regulated density f_pv and its asymptotic ratios.
    TabulateFpv {
        #[arg(long, default_value = "1e-3:1e3:log:25")]
        b_grid: String,
    },
    /// Check the decomposition of f_pv into Euler-Heisenberg terms.
    RelationCheck {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,10")]
        b: Vec<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Compare regulated and physical energies after charge renormalization.
    RenormCheck {
        #[arg(long, value_delimiter = ',', default_value = "1")]
        b: Vec<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Landau-level sum against the closed-form heat density.
    LandauCheck {
        #[arg(long, default_value = "0.05:20:log:20")]
        s_grid: String,
        #[arg(long, default_value = "0.05:20:log:20")]
        b_grid: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Pointwise bounds on the constant-field resolvent kernel at random pairs.
    KernelCheck {
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 5.0)]
        box_side: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Localized heat trace for several localizer widths.
    HeatTrace {
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,4")]
        rho: Vec<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Spectral vector potential of a periodic field.
    BiotSavart {
        #[command(flatten)]
        source: FieldSource,
        /// Also write the potential as a grid file.
        #[arg(long)]
        write_potential: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Local-density energy of a field grid.
    Lda {
        #[command(flatten)]
        source: FieldSource,
        /// Also write a |B| histogram as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Lattice PV energy of a constant field, extrapolated in the spacing.
    LatticeDensity {
        /// Sites per dimension at each level; the box side is fixed.
        #[arg(long, value_delimiter = ',', default_value = "6,8,10")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        dims: usize,
        #[arg(long, default_value_t = 1)]
        flux: i64,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 12)]
        twists: usize,
        #[arg(long, value_enum, default_value = "blocks")]
        route: RouteArg,
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
    /// Lattice energy of scaled stripe fields against the local-density value.
    Sweep {
        #[arg(long, value_enum, default_value = "cosine")]
        profile: StripeKind,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        /// Gaussian width as a fraction of the period.
        #[arg(long, default_value_t = 0.15)]
        width: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.25,0.125")]
        eps: Vec<f64>,
        /// Sites per period at the coarsest spacing.
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long)]
        k2: Option<usize>,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, default_value_t = 2.0)]
        length: f64,
        #[arg(long, default_value_t = 4)]
        flux: i64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::TabulateEh { .. } => "tabulate-eh",
            Command::TabulateFpv { .. } => "tabulate-fpv",
            Command::RelationCheck { .. } => "relation-check",
            Command::RenormCheck { .. } => "renorm-check",
            Command::LandauCheck { .. } => "landau-check",
            Command::KernelCheck { .. } => "kernel-check",
            Command::HeatTrace { .. } => "heat-trace",
            Command::BiotSavart { .. } => "biot-savart",
            Command::Lda { .. } => "lda",
            Command::LatticeDensity { .. } => "lattice-density",
            Command::Sweep { .. } => "sweep",
        }
    }

    /// Tables default to CSV.
    pub fn default_format(&self) -> Format {
        match self {
            Command::TabulateEh { .. } | Command::TabulateFpv { .. } | Command::Sweep { .. } => Format::Csv,
            _ => Format::Json,
        }
    }
}
