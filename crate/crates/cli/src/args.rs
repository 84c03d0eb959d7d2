use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fblmimo_core::mc::DEFAULT_TRIALS;
use fblmimo_core::Functional;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "fblmimo",
    version,
    about = "Finite-blocklength rate bounds and channel-dispersion statistics for Rayleigh MIMO links"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inverse Gaussian tail function Q⁻¹(ε).
    QInv(QInvArgs),
    /// Mean or variance of the channel dispersion V(H).
    Dispersion(DispersionArgs),
    /// Average maximal achievable rate bound.
    Rate(RateArgs),
    /// Minimum blocklength reaching a target rate at high SNR.
    Blocklength(BlocklengthArgs),
    /// Monte-Carlo estimate of one per-draw functional.
    Mc(McArgs),
    /// Parameter sweep written as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct QInvArgs {
    #[arg(long)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Antennas {
    /// Transmit antennas.
    #[arg(long = "M", value_name = "M")]
    pub tx: usize,
    /// Receive antennas.
    #[arg(long = "N", value_name = "N")]
    pub rx: usize,
}

#[derive(Debug, Clone, Copy, Args)]
#[group(required = true, multiple = false)]
pub struct Snr {
    /// SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// Linear SNR ρ.
    #[arg(long)]
    pub snr_linear: Option<f64>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct MonteCarlo {
    #[arg(long, env = "FBLMIMO_TRIALS", default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, env = "FBLMIMO_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; defaults to the available parallelism. Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stat {
    Mean,
    Var,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Closed,
    HighSnr,
    Mc,
    Both,
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    #[command(flatten)]
    pub antennas: Antennas,
    #[command(flatten)]
    pub snr: Snr,
    #[arg(long, value_enum, default_value_t = Stat::Mean)]
    pub stat: Stat,
    #[arg(long, value_enum, default_value_t = MethodArg::Closed)]
    pub method: MethodArg,
    /// Emendation parameter ψ for G2 (defaults exist at 5 dB and 7 dB only).
    #[arg(long, requires = "xi")]
    pub psi: Option<f64>,
    /// Emendation parameter ξ for G4.
    #[arg(long, requires = "psi")]
    pub xi: Option<f64>,
    /// For M = N, approximate E Σ1/λ by M − 1 (one extra transmit antenna).
    #[arg(long)]
    pub square_convention: bool,
    #[command(flatten)]
    pub mc: MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateMethodArg {
    Normal,
    HighSnr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Closed,
    Mc,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub antennas: Antennas,
    #[command(flatten)]
    pub snr: Snr,
    #[arg(long)]
    pub epsilon: f64,
    /// Blocklength in channel uses.
    #[arg(long)]
    pub n: u64,
    #[arg(long, value_enum, default_value_t = RateMethodArg::Normal)]
    pub method: RateMethodArg,
    /// Where E[V] comes from for the normal-approximation bound. E[C] is always Monte-Carlo.
    #[arg(long, value_enum, default_value_t = Source::Closed)]
    pub dispersion: Source,
    #[arg(long)]
    pub square_convention: bool,
    #[command(flatten)]
    pub mc: MonteCarlo,
}

#[derive(Debug, Clone, Copy, Args)]
#[group(required = true, multiple = false)]
pub struct Target {
    /// Target rate as a fraction of m·log₂(1+ρ).
    #[arg(long)]
    pub rate_fraction: Option<f64>,
    /// Target rate R̄ in bits per channel use.
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BlocklengthArgs {
    /// Spatial degrees of freedom.
    #[arg(long)]
    pub m: usize,
    #[command(flatten)]
    pub snr: Snr,
    #[arg(long)]
    pub epsilon: f64,
    #[command(flatten)]
    pub target: Target,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// One of: capacity, dispersion, sqrt-dispersion, inv-eigen-sum, shifted-inv-sum,
    /// inv-eigen-sq-sum, inv-eigen-cross-sum, dispersion-second-moment.
    #[arg(long)]
    pub target: Functional,
    #[command(flatten)]
    pub antennas: Antennas,
    #[command(flatten)]
    pub snr: Snr,
    #[command(flatten)]
    pub mc: MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    #[value(name = "M")]
    Tx,
    #[value(name = "N")]
    Rx,
    #[value(name = "m")]
    Dof,
    #[value(name = "rho_db")]
    RhoDb,
    #[value(name = "n")]
    Blocklength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    ShiftedInvSum,
    InvEigenSum,
    DispersionMean,
    DispersionMeanFirstOrder,
    DispersionVar,
    Capacity,
    RateBound,
    Blocklength,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Figure preset (1 to 7).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=7), conflicts_with_all = ["var", "quantity", "from", "to", "step", "tx", "rx", "snr_db", "snr_linear"])]
    pub figure: Option<u8>,
    #[arg(long, value_enum, required_unless_present = "figure", requires_all = ["from", "to", "step", "quantity"])]
    pub var: Option<SweepVar>,
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub step: Option<f64>,
    #[arg(long, value_enum)]
    pub quantity: Option<Quantity>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long = "M", value_name = "M")]
    pub tx: Option<usize>,
    #[arg(long = "N", value_name = "N")]
    pub rx: Option<usize>,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "snr_linear")]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub snr_linear: Option<f64>,
    #[arg(long, default_value_t = 1e-7)]
    pub epsilon: f64,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 0.8)]
    pub rate_fraction: f64,
    #[arg(long, requires = "xi")]
    pub psi: Option<f64>,
    #[arg(long, requires = "psi")]
    pub xi: Option<f64>,
    #[arg(long)]
    pub square_convention: bool,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub mc: MonteCarlo,
}
