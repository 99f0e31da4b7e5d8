//! Command-line and config-file schema. Config keys are the long flag names in snake_case.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "spp", version, about = "Graphene surface plasmon simulator", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sheet conductivity over a frequency range.
    Sigma(SigmaArgs),
    /// TM/TE wavenumbers, decay constants, group velocity and propagation length.
    Dispersion(DispersionArgs),
    /// Prism (Otto) coupling.
    #[command(subcommand)]
    Prism(PrismCommand),
    /// Fidelity of an excited cat versus propagation loss.
    Propagate(PropagateArgs),
    /// Parity-check protected propagation by quantum-jump Monte Carlo.
    Qec(QecArgs),
}

#[derive(Debug, Subcommand)]
pub enum PrismCommand {
    /// Reflectance on a frequency x angle grid.
    ReflectanceMap(ReflectanceMapArgs),
    /// Transmission coefficient versus prism-sheet spacing.
    BetaSweep(BetaSweepArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Flat TOML file of parameters; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output CSV path (defaults to `<command>.csv`).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Worker threads (else SPP_THREADS, else all cores).
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Auto,
    Full,
    Lowt,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MaterialArgs {
    /// Chemical potential (eV).
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub mu_c: f64,
    /// Temperature (K).
    #[arg(long, default_value_t = 300.0)]
    pub temperature: f64,
    /// Intraband relaxation time (s); default 0.35 ps, or 5 ps at T = 0.
    #[arg(long)]
    pub tau_intra: Option<f64>,
    /// Interband relaxation time (s).
    #[arg(long, default_value_t = spp_core::material::TAU_INTER)]
    pub tau_inter: f64,
    /// Background relative permittivity.
    #[arg(long, default_value_t = 1.0)]
    pub eps_r: f64,
    #[arg(long, default_value_t = 1)]
    pub layers: u32,
    #[arg(long, value_enum, default_value_t = ModelArg::Auto)]
    pub model: ModelArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FrequencyGrid {
    /// Lowest frequency (Hz).
    #[arg(long, default_value_t = 1e11)]
    pub f_min: f64,
    /// Highest frequency (Hz).
    #[arg(long, default_value_t = 1e15)]
    pub f_max: f64,
    #[arg(long, default_value_t = 400)]
    pub points: usize,
    /// Evenly spaced instead of logarithmic.
    #[arg(long)]
    pub linear: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SigmaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub material: MaterialArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: FrequencyGrid,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolChoice {
    Tm,
    Te,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolArg {
    Tm,
    Te,
}

impl From<PolArg> for spp_core::Polarization {
    fn from(p: PolArg) -> Self {
        match p {
            PolArg::Tm => spp_core::Polarization::TM,
            PolArg::Te => spp_core::Polarization::TE,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DispersionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub material: MaterialArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: FrequencyGrid,
    #[arg(long, value_enum, default_value_t = PolChoice::Both)]
    pub pol: PolChoice,
    /// Extra rows at these vacuum wavelengths (m), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub wavelengths: Vec<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReflectanceMapArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub material: MaterialArgs,
    #[arg(long, value_enum, default_value_t = PolArg::Te)]
    pub pol: PolArg,
    /// Prism permittivity.
    #[arg(long, default_value_t = 1.5)]
    pub eps1: f64,
    /// Prism-sheet spacing (m).
    #[arg(long, default_value_t = 620e-9)]
    pub d: f64,
    #[arg(long, default_value_t = 40.0)]
    pub theta_min_deg: f64,
    #[arg(long, default_value_t = 80.0)]
    pub theta_max_deg: f64,
    #[arg(long, default_value_t = 81)]
    pub theta_points: usize,
    #[arg(long, default_value_t = 5e14)]
    pub f_min: f64,
    #[arg(long, default_value_t = 7e14)]
    pub f_max: f64,
    #[arg(long, default_value_t = 201)]
    pub f_points: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tune {
    /// Evaluate at `f_hz` for every spacing.
    Fixed,
    /// Re-tune to the surface-mode reflectance minimum at every spacing.
    Matched,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BetaSweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub material: MaterialArgs,
    #[arg(long, value_enum, default_value_t = PolArg::Te)]
    pub pol: PolArg,
    #[arg(long, default_value_t = 1.5)]
    pub eps1: f64,
    /// Incidence angle (degrees).
    #[arg(long, default_value_t = 54.74)]
    pub theta_deg: f64,
    /// Drive frequency (Hz) for `--tune fixed`.
    #[arg(long, default_value_t = 6e14)]
    pub f_hz: f64,
    #[arg(long, value_enum, default_value_t = Tune::Fixed)]
    pub tune: Tune,
    /// Search window for `--tune matched` (Hz); defaults around the resonance.
    #[arg(long)]
    pub window_min_hz: Option<f64>,
    #[arg(long)]
    pub window_max_hz: Option<f64>,
    /// Smallest spacing (m).
    #[arg(long, default_value_t = 1e-7)]
    pub d_min: f64,
    /// Largest spacing (m).
    #[arg(long, default_value_t = 5e-5)]
    pub d_max: f64,
    #[arg(long, default_value_t = 120)]
    pub d_points: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PropagateArgs {
    /// Photonic cat amplitude.
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Transmission amplitudes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.98, 0.95, 0.9, 0.8])]
    pub beta: Vec<f64>,
    /// Largest k0 kappa'' x.
    #[arg(long, default_value_t = 3.0)]
    pub loss_max: f64,
    #[arg(long, default_value_t = 301)]
    pub points: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QecArgs {
    /// Random seed; required on the command line.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Coupling angle in units of pi/2.
    #[arg(long, default_value_t = 1.0)]
    pub g_factor: f64,
    /// Parity-check probabilities, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = spp_core::qec::DEFAULT_TRAJECTORIES)]
    pub trajectories: usize,
    /// `six` (Pauli eigenstates) or `haar:M`.
    #[arg(long, default_value = "six")]
    pub inputs: String,
    /// Largest k0 kappa'' x.
    #[arg(long, default_value_t = 0.2)]
    pub loss_max: f64,
    #[arg(long, default_value_t = 10)]
    pub checkpoints: usize,
    /// Initial jump probability per micro-step.
    #[arg(long, default_value_t = spp_core::qec::TARGET_STEP_PROBABILITY)]
    pub step_probability: f64,
    /// Fock truncation; default from the amplitude.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Surface mode that sets the distance scale.
    #[arg(long, value_enum, default_value_t = PolArg::Tm)]
    pub pol: PolArg,
    /// Vacuum wavelength of the carrier (m).
    #[arg(long, default_value_t = 1550e-9)]
    pub wavelength: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub material: MaterialArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}
