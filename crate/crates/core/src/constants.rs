//! SI physical constants (CODATA 2018 exact and recommended values).

/// Elementary charge (C).
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Vacuum light speed (m/s).
pub const C0: f64 = 299_792_458.0;
/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity (F/m), derived so that `C0^2 * EPS0 * MU0 == 1`.
pub const EPS0: f64 = 1.0 / (MU0 * C0 * C0);
/// Vacuum wave impedance (Ohm).
pub const ETA0: f64 = MU0 * C0;

/// One electron-volt in joules.
pub const EV: f64 = E_CHARGE;

/// The constant set as a value, for callers that want to pass it around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub e: f64,
    pub hbar: f64,
    pub k_b: f64,
    pub eps0: f64,
    pub mu0: f64,
    pub c0: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants =
        PhysicalConstants { e: E_CHARGE, hbar: HBAR, k_b: K_B, eps0: EPS0, mu0: MU0, c0: C0 };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::SI
    }
}

/// Converts an energy in eV to the radian frequency `E / hbar`.
pub fn ev_to_omega(energy_ev: f64) -> f64 {
    energy_ev * EV / HBAR
}

/// Radian frequency of light with vacuum wavelength `lambda0` (m).
pub fn wavelength_to_omega(lambda0: f64) -> f64 {
    2.0 * std::f64::consts::PI * C0 / lambda0
}

pub fn hz_to_omega(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f
}
