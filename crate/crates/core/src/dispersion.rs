//! TM/TE surface-wave dispersion on a conducting sheet in a symmetric
//! dielectric background.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::{C0, ETA0};
use crate::error::{Error, Result};
use crate::material::{self, Conductivity, ConductivityModel, GrapheneParams};
use crate::Polarization;

/// One solved surface mode at a single frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SppMode {
    pub polarization: Polarization,
    pub omega: f64,
    /// Complex propagation constant `k_x` (1/m).
    pub k: Complex64,
    /// `k_x / k_0`.
    pub kappa: Complex64,
    /// Transverse decay constant with `Re q0 > 0` (1/m).
    pub q0: Complex64,
    /// Group velocity (m/s); `None` when the finite-difference stencil failed.
    pub v_g: Option<f64>,
    /// Whether the boundary condition admits this polarization as a bound, decaying mode.
    pub supported: bool,
    /// Quantization length (m), filled in by [`crate::quantize::attach_normalization`].
    pub norm_n: Option<f64>,
    /// The conductivity the mode was solved with.
    pub sigma: Conductivity,
    pub eps_r: f64,
}

impl SppMode {
    pub fn k0(&self) -> f64 {
        self.omega / C0
    }

    /// Surface wavelength `2 pi / (k0 kappa')`.
    pub fn lambda_eff(&self) -> f64 {
        2.0 * PI / self.k.re
    }

    /// Attenuation factor `k0 kappa''` (1/m).
    pub fn attenuation(&self) -> f64 {
        self.k.im
    }
}

/// Background wave impedance `sqrt(mu0 / (eps0 eps_r))`.
pub fn background_impedance(eps_r: f64) -> f64 {
    ETA0 / eps_r.sqrt()
}

/// Principal square root, conjugated when it would grow along +x.
fn forward_root(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        r.conj()
    } else {
        r
    }
}

/// Closed-form wavenumber for a given sheet conductivity.
pub fn wavenumber_from_sigma(pol: Polarization, sigma: Complex64, omega: f64, eps_r: f64) -> Result<Complex64> {
    let s_eta = sigma * background_impedance(eps_r);
    let k0 = omega / C0;
    let factor = match pol {
        Polarization::TM => {
            if s_eta.norm() == 0.0 {
                return Err(Error::NoConductivity);
            }
            let t = 2.0 / s_eta;
            1.0 - t * t
        }
        Polarization::TE => {
            let t = s_eta / 2.0;
            1.0 - t * t
        }
    };
    Ok(k0 * forward_root(factor * eps_r))
}

fn sigma_at(params: &GrapheneParams, omega: f64, model: ConductivityModel) -> Result<Conductivity> {
    material::conductivity(params, omega, model)
}

/// TM wavenumber `k0 sqrt(eps_r (1 - (2/(sigma eta))^2))`.
pub fn tm_wavenumber(params: &GrapheneParams, omega: f64, model: ConductivityModel) -> Result<Complex64> {
    let s = sigma_at(params, omega, model)?;
    wavenumber_from_sigma(Polarization::TM, s.value, omega, params.eps_r())
}

/// TE wavenumber `k0 sqrt(eps_r (1 - (sigma eta / 2)^2))`.
pub fn te_wavenumber(params: &GrapheneParams, omega: f64, model: ConductivityModel) -> Result<Complex64> {
    let s = sigma_at(params, omega, model)?;
    wavenumber_from_sigma(Polarization::TE, s.value, omega, params.eps_r())
}

/// The single polarization a sheet with this reactance guides: TM for an
/// inductive sheet (`Im sigma > 0`), TE for a capacitive one.
pub fn supported_polarization(sigma: &Conductivity) -> Option<Polarization> {
    if sigma.im() > 0.0 {
        Some(Polarization::TM)
    } else if sigma.im() < 0.0 {
        Some(Polarization::TE)
    } else {
        None
    }
}

/// Transverse decay constant. The boundary condition fixes
/// `q0 = +i (omega/c) (2/(sigma eta))` (TM) and `q0 = +i (omega/c)(sigma eta/2)`
/// (TE); `supported` reports whether that root decays away from the sheet.
/// The returned value always has `Re q0 >= 0` (sign flipped for improper modes).
pub fn transverse_q0(pol: Polarization, sigma: Complex64, omega: f64, eps_r: f64) -> Result<(Complex64, bool)> {
    let s_eta = sigma * background_impedance(eps_r);
    let w_c = omega * eps_r.sqrt() / C0;
    let physical = match pol {
        Polarization::TM => {
            if s_eta.norm() == 0.0 {
                return Err(Error::NoConductivity);
            }
            Complex64::i() * w_c * (2.0 / s_eta)
        }
        Polarization::TE => Complex64::i() * w_c * (s_eta / 2.0),
    };
    if physical.re > 0.0 {
        Ok((physical, true))
    } else {
        Ok((-physical, false))
    }
}

/// Group velocity `1 / (d Re k / d omega)` from a once-Richardson-extrapolated
/// central difference with step `1e-5 omega`.
pub fn group_velocity(params: &GrapheneParams, omega: f64, pol: Polarization, model: ConductivityModel) -> Result<f64> {
    group_velocity_with_step(params, omega, pol, model, 1e-5)
}

pub(crate) fn group_velocity_with_step(
    params: &GrapheneParams,
    omega: f64,
    pol: Polarization,
    model: ConductivityModel,
    rel_step: f64,
) -> Result<f64> {
    // Pin the backend so the stencil never straddles a model switch.
    let model = material::select_model(params, omega, model);
    let re_k = |w: f64| -> Result<f64> {
        let s = material::conductivity_precise(params, w, model)?;
        Ok(wavenumber_from_sigma(pol, s.value, w, params.eps_r())?.re)
    };
    let h = rel_step * omega;
    let samples = [
        re_k(omega - h)?,
        re_k(omega - 0.5 * h)?,
        re_k(omega)?,
        re_k(omega + 0.5 * h)?,
        re_k(omega + h)?,
    ];
    let increasing = samples.windows(2).all(|w| w[1] > w[0]);
    let decreasing = samples.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::NonMonotonicDispersion { omega });
    }
    let coarse = (samples[4] - samples[0]) / (2.0 * h);
    let fine = (samples[3] - samples[1]) / h;
    let slope = (4.0 * fine - coarse) / 3.0;
    Ok(1.0 / slope)
}

/// `1 / (2 k0 kappa'')`; infinite for a lossless mode.
pub fn propagation_length(mode: &SppMode) -> f64 {
    let a = mode.attenuation();
    if a <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / (2.0 * a)
    }
}

/// Solves one polarization at `omega`, including `q0`, support flag and group velocity.
pub fn solve_mode(params: &GrapheneParams, omega: f64, pol: Polarization, model: ConductivityModel) -> Result<SppMode> {
    let sigma = sigma_at(params, omega, model)?;
    let mut mode = mode_from_sigma(pol, sigma, params.eps_r())?;
    mode.v_g = group_velocity(params, omega, pol, model).ok();
    Ok(mode)
}

/// Builds a mode directly from a conductivity value; `v_g` is left unset.
pub fn mode_from_sigma(pol: Polarization, sigma: Conductivity, eps_r: f64) -> Result<SppMode> {
    let omega = sigma.omega;
    let k = wavenumber_from_sigma(pol, sigma.value, omega, eps_r)?;
    let (q0, supported) = transverse_q0(pol, sigma.value, omega, eps_r)?;
    Ok(SppMode { polarization: pol, omega, k, kappa: k / (omega / C0), q0, v_g: None, supported, norm_n: None, sigma, eps_r })
}

/// Solves whichever polarization the sheet supports at `omega`.
pub fn solve_supported(params: &GrapheneParams, omega: f64, model: ConductivityModel) -> Result<SppMode> {
    let sigma = sigma_at(params, omega, model)?;
    let pol = supported_polarization(&sigma)
        .ok_or_else(|| Error::UnsupportedMode("Im sigma = 0: neither TM nor TE is bound".into()))?;
    solve_mode(params, omega, pol, model)
}
