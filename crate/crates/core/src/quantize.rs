//! Surface-mode functions and the quantization length `N` obtained from the
//! single-mode field Hamiltonian.

use num_complex::Complex64;

use crate::constants::{C0, EPS0, HBAR, MU0};
use crate::dispersion::{self, SppMode};
use crate::error::{Error, Result};
use crate::material::Conductivity;
use crate::quadrature::PanelGrid;
use crate::Polarization;

pub type Vec3 = [Complex64; 3];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default number of Gauss panels per half-space.
pub const PANELS_PER_SIDE: usize = 128;
/// Gauss order inside each panel; `2 * 128 * 8 = 2048` samples in total.
pub const PANEL_ORDER: usize = 8;
const PANEL_RATIO: f64 = 1.02;
/// Integration cut-off in units of the decay length `1 / Re q0`.
pub const Z_MAX_DECAY_LENGTHS: f64 = 40.0;

/// Transverse beam width used to turn per-area quantities into a mode amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationGeometry {
    width: f64,
}

impl QuantizationGeometry {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid("W", "beam width must be positive and finite"));
        }
        Ok(Self { width })
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}

/// Mode function sampled on a z-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProfile {
    pub polarization: Polarization,
    pub z: Vec<f64>,
    pub phi: Vec<Vec3>,
    pub q0: Complex64,
}

impl ModeProfile {
    pub fn sample(mode: &SppMode, z: &[f64]) -> Self {
        Self {
            polarization: mode.polarization,
            z: z.to_vec(),
            phi: z.iter().map(|&z| mode_function(mode, z)).collect(),
            q0: mode.q0,
        }
    }
}

/// Tangential amplitude of the TM x-component, `2 i k / (2 q0 - i sigma mu0 omega)`.
fn tm_x_amplitude(mode: &SppMode) -> Complex64 {
    let i = Complex64::i();
    2.0 * i * mode.k / (2.0 * mode.q0 - i * mode.sigma.value * MU0 * mode.omega)
}

/// Mode function and its z-derivative. At `z = 0` the `z > 0` limit is used.
pub fn mode_function_with_derivative(mode: &SppMode, z: f64) -> (Vec3, Vec3) {
    let q = mode.q0;
    let s = if z >= 0.0 { 1.0 } else { -1.0 };
    let e = (-q * s * z).exp();
    let de = -q * s * e;
    match mode.polarization {
        Polarization::TE => ([ZERO, e, ZERO], [ZERO, de, ZERO]),
        Polarization::TM => {
            let x = tm_x_amplitude(mode);
            ([-x * e, ZERO, s * e], [-x * de, ZERO, s * de])
        }
    }
}

/// `phi(z)`: TE is `y e^{-q0|z|}`; TM is `-(X x -/+ z) e^{-q0|z|}` with the z-part odd.
pub fn mode_function(mode: &SppMode, z: f64) -> Vec3 {
    mode_function_with_derivative(mode, z).0
}

/// Curl of `phi(z) e^{ikx}` with the plane-wave factor removed.
pub fn curl(k: Complex64, phi: &Vec3, dphi: &Vec3) -> Vec3 {
    let ik = Complex64::i() * k;
    [-dphi[1], dphi[0] - ik * phi[2], ik * phi[1]]
}

fn norm_sqr(v: &Vec3) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Hamiltonian length for a field profile:
/// `(1/(2 omega^2)) ∫ [eps omega^2 |phi|^2 + c^2 |curl|^2] dz + sheet / (2 omega eps0)`,
/// where `sheet = |sigma''| |phi_par(0)|^2`.
pub fn energy_length<F, E>(omega: f64, k: Complex64, grid: &PanelGrid, field: F, eps_r: E, sheet: f64) -> f64
where
    F: Fn(f64) -> (Vec3, Vec3),
    E: Fn(f64) -> f64,
{
    let density = grid.integrate(|z| {
        let (phi, dphi) = field(z);
        let c = curl(k, &phi, &dphi);
        eps_r(z) * omega * omega * norm_sqr(&phi) + C0 * C0 * norm_sqr(&c)
    });
    density / (2.0 * omega * omega) + sheet / (2.0 * omega * EPS0)
}

/// Two-sided geometric grid on `[-z_max, z_max]`, refined at the sheet.
pub fn normalization_grid(q0_re: f64) -> PanelGrid {
    let z_max = Z_MAX_DECAY_LENGTHS / q0_re;
    PanelGrid::geometric(0.0, -z_max, PANELS_PER_SIDE, PANEL_ORDER, PANEL_RATIO).join(PanelGrid::geometric(
        0.0,
        z_max,
        PANELS_PER_SIDE,
        PANEL_ORDER,
        PANEL_RATIO,
    ))
}

/// The same mode with the sheet made purely reactive, `sigma -> i sigma''`.
pub fn lossless_twin(mode: &SppMode) -> Result<SppMode> {
    let sigma = Complex64::new(0.0, mode.sigma.im());
    let k = dispersion::wavenumber_from_sigma(mode.polarization, sigma, mode.omega, mode.eps_r)?;
    let (q0, supported) = dispersion::transverse_q0(mode.polarization, sigma, mode.omega, mode.eps_r)?;
    Ok(SppMode {
        k,
        kappa: k / mode.k0(),
        q0,
        supported,
        sigma: Conductivity { value: sigma, omega: mode.omega },
        norm_n: None,
        ..*mode
    })
}

/// Quantization length `N` (m) of a bound mode, evaluated for the lossless sheet.
pub fn mode_normalization(mode: &SppMode) -> Result<f64> {
    let twin = lossless_twin(mode)?;
    if !twin.supported {
        return Err(Error::UnsupportedMode(format!(
            "{} is not bound for Im sigma = {:e}",
            mode.polarization,
            mode.sigma.im()
        )));
    }
    let grid = normalization_grid(twin.q0.re);
    let phi0 = mode_function(&twin, 0.0);
    let sheet = twin.sigma.im().abs() * (phi0[0].norm_sqr() + phi0[1].norm_sqr());
    let eps = twin.eps_r;
    Ok(energy_length(
        twin.omega,
        twin.k,
        &grid,
        |z| mode_function_with_derivative(&twin, z),
        |_| eps,
        sheet,
    ))
}

/// Stores `N` on the mode.
pub fn attach_normalization(mode: &mut SppMode) -> Result<()> {
    mode.norm_n = Some(mode_normalization(mode)?);
    Ok(())
}

/// Single-photon vector-potential prefactor `sqrt(hbar / (2 eps0 W v_g omega N))`.
pub fn vector_potential_amplitude(mode: &SppMode, geom: &QuantizationGeometry, omega: f64) -> Result<f64> {
    let v_g = mode
        .v_g
        .ok_or_else(|| Error::UnsupportedMode("group velocity unavailable for this mode".into()))?;
    if v_g <= 0.0 {
        return Err(Error::invalid("v_g", "group velocity must be positive"));
    }
    let n = match mode.norm_n {
        Some(n) => n,
        None => mode_normalization(mode)?,
    };
    Ok((HBAR / (2.0 * EPS0 * geom.width() * v_g * omega * n)).sqrt())
}
