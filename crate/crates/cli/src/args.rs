use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lunar_polar::dynamics::FrameKind;
use serde::Serialize;

pub const MOON_EARTH_MU: f64 = 0.01215;

#[derive(Parser, Debug)]
#[command(name = "lunar-polar", version, about = "Polar periodic orbits of the lunar problem")]
pub struct Cli {
    /// Absolute and relative tolerance of the Taylor integrator.
    #[arg(long, global = true, default_value_t = 1e-14)]
    pub integrator_tol: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Continue the family in energy at fixed mass ratio.
    Family(FamilyArgs),
    /// Dense trajectory of one orbit over a full period.
    Orbit(OrbitArgs),
    /// Continue the family in mass ratio at fixed moon-centred energy.
    Bridge(BridgeArgs),
    /// Locate bifurcations along the family in energy.
    Bifurcations(BifurcationArgs),
    /// Periapsis and apoapsis in kilometres along the Moon-Earth family.
    MoonEarth(MoonEarthArgs),
}

/// Chart in which energies are given or states are written.
#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chart {
    Hill,
    MoonCentered,
    Barycentric,
}

impl From<Chart> for FrameKind {
    fn from(c: Chart) -> Self {
        match c {
            Chart::Hill => FrameKind::HillRescaled,
            Chart::MoonCentered => FrameKind::MoonCentered,
            Chart::Barycentric => FrameKind::Barycentric,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct FamilyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub h_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub h_max: f64,
    /// Largest continuation step in energy; steps adapt below it.
    #[arg(long, default_value_t = 0.1)]
    pub h_step: f64,
    /// Chart whose Hamiltonian measures the energy.
    #[arg(long, value_enum, default_value_t = Chart::Hill)]
    pub energy: Chart,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct OrbitArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub h: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Chart of the written states.
    #[arg(long, value_enum, default_value_t = Chart::Hill)]
    pub frame: Chart,
    /// Chart whose Hamiltonian measures the energy.
    #[arg(long, value_enum, default_value_t = Chart::Hill)]
    pub energy: Chart,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct BridgeArgs {
    /// Moon-centred energy, held fixed.
    #[arg(long, allow_hyphen_values = true)]
    pub h_unrescaled: f64,
    #[arg(long)]
    pub mu_start: f64,
    #[arg(long)]
    pub mu_end: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct BifurcationArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub h_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub h_max: f64,
    /// Width to which event brackets are narrowed.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Chart::Hill)]
    pub energy: Chart,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct MoonEarthArgs {
    /// Barycentric energy range.
    #[arg(long, allow_hyphen_values = true)]
    pub h_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub h_max: f64,
    /// Largest continuation step in energy; steps adapt below it.
    #[arg(long, default_value_t = 0.1)]
    pub h_step: f64,
    #[arg(long, default_value_t = MOON_EARTH_MU)]
    pub mu: f64,
    #[arg(long, default_value_t = lunar_polar::dynamics::EARTH_MOON_DISTANCE_KM)]
    pub distance_km: f64,
    #[arg(long, default_value_t = lunar_polar::dynamics::MOON_RADIUS_KM)]
    pub moon_radius_km: f64,
    #[arg(long)]
    pub out: PathBuf,
}
