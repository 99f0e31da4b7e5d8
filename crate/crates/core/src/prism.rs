//! Otto-configuration attenuated total reflection: prism above an air gap
//! above the graphene sheet, and the photon-to-surface-mode overlap.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::{C0, EPS0, MU0};
use crate::dispersion;
use crate::error::{Error, Result};
use crate::material::{self, ConductivityModel, GrapheneParams};
use crate::quadrature::PanelGrid;
use crate::quantize::{self, Vec3};
use crate::Polarization;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Reflectance above which a scan is considered to have no coupling dip.
pub const RESONANCE_THRESHOLD: f64 = 0.99;
/// Condition number above which the boundary system is rejected.
pub const MAX_CONDITION: f64 = 1e13;
/// Prism-to-lower-region energy ratio that triggers the validity warning.
pub const PRISM_ENERGY_WARNING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrismGeometry {
    eps1: f64,
    d: f64,
    theta_i: f64,
    polarization: Polarization,
}

impl PrismGeometry {
    pub fn new(eps1: f64, d: f64, theta_i: f64, polarization: Polarization) -> Result<Self> {
        if !(eps1 > 1.0 && eps1.is_finite()) {
            return Err(Error::invalid("eps1", "prism permittivity must exceed 1"));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::invalid("d", "spacing must be positive"));
        }
        if !(theta_i > 0.0 && theta_i < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("theta_i", "incidence angle must lie in (0, pi/2)"));
        }
        Ok(Self { eps1, d, theta_i, polarization })
    }

    pub fn eps1(&self) -> f64 {
        self.eps1
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn theta_i(&self) -> f64 {
        self.theta_i
    }
    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    pub fn with_d(self, d: f64) -> Result<Self> {
        Self::new(self.eps1, d, self.theta_i, self.polarization)
    }
    pub fn with_theta(self, theta_i: f64) -> Result<Self> {
        Self::new(self.eps1, self.d, theta_i, self.polarization)
    }
}

/// Field amplitudes for unit incident amplitude (E_y for TE, H_y for TM).
///
/// Prism: `e^{-i k1z (z-d)} + r e^{i k1z (z-d)}`; gap: `m1 e^{i kz z} + m2 e^{-i kz (z-d)}`;
/// below the sheet: `t e^{-i kz z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtrSolution {
    pub polarization: Polarization,
    pub omega: f64,
    pub r: Complex64,
    pub tau: Complex64,
    pub m1: Complex64,
    pub m2: Complex64,
    pub t: Complex64,
    pub kx: f64,
    pub kz_prism: f64,
    pub kz_gap: Complex64,
    pub eps1: f64,
    pub eps_r: f64,
    pub d: f64,
    pub sigma: Complex64,
    pub condition: f64,
}

impl AtrSolution {
    pub fn reflectance(&self) -> f64 {
        self.r.norm_sqr()
    }

    /// Potential amplitude `H_y` (TM) or `E_y` (TE) and its z-derivative.
    fn scalar(&self, z: f64) -> (Complex64, Complex64) {
        let kz = self.kz_gap;
        if z >= self.d {
            let k1 = self.kz_prism;
            let down = (-I * k1 * (z - self.d)).exp();
            let up = self.r * (I * k1 * (z - self.d)).exp();
            (down + up, I * k1 * (up - down))
        } else if z >= 0.0 {
            let a = self.m1 * (I * kz * z).exp();
            let b = self.m2 * (-I * kz * (z - self.d)).exp();
            (a + b, I * kz * (a - b))
        } else {
            let a = self.t * (-I * kz * z).exp();
            (a, -I * kz * a)
        }
    }

    fn eps_at(&self, z: f64) -> f64 {
        if z >= self.d {
            self.eps1
        } else {
            self.eps_r
        }
    }

    /// Electric field profile and its z-derivative (V/m per unit incident amplitude).
    pub fn electric_field(&self, z: f64) -> (Vec3, Vec3) {
        let (f, df) = self.scalar(z);
        match self.polarization {
            Polarization::TE => ([ZERO, f, ZERO], [ZERO, df, ZERO]),
            Polarization::TM => {
                let s = 1.0 / (self.omega * self.eps_at(z) * EPS0);
                let kz = if z >= self.d { Complex64::new(self.kz_prism, 0.0) } else { self.kz_gap };
                let d2f = -kz * kz * f;
                ([-I * df * s, ZERO, -self.kx * f * s], [-I * d2f * s, ZERO, -self.kx * df * s])
            }
        }
    }

    /// Magnetic field profile (A/m per unit incident amplitude).
    pub fn magnetic_field(&self, z: f64) -> Vec3 {
        let (f, df) = self.scalar(z);
        match self.polarization {
            Polarization::TE => {
                let s = 1.0 / (self.omega * MU0);
                [I * df * s, ZERO, self.kx * f * s]
            }
            Polarization::TM => [ZERO, f, ZERO],
        }
    }

    /// `eps eps0 |E|^2 + mu0 |H|^2` at `z`.
    pub fn energy_density(&self, z: f64) -> f64 {
        let e = self.electric_field(z).0;
        let h = self.magnetic_field(z);
        let e2: f64 = e.iter().map(|c| c.norm_sqr()).sum();
        let h2: f64 = h.iter().map(|c| c.norm_sqr()).sum();
        self.eps_at(z) * EPS0 * e2 + MU0 * h2
    }

    /// Decay constant of the evanescent field below the prism.
    pub fn gap_decay(&self) -> f64 {
        self.kz_gap.im
    }
}

/// `asin(1/sqrt(eps1))`; `pi/2` for `eps1 <= 1`.
pub fn critical_angle(eps1: f64) -> f64 {
    if eps1 <= 1.0 {
        std::f64::consts::FRAC_PI_2
    } else {
        (1.0 / eps1.sqrt()).asin()
    }
}

fn decaying_sqrt(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

fn condition_number(m: &Matrix4<Complex64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Boundary-value solve for a prescribed sheet conductivity.
pub fn atr_solve_sigma(geom: &PrismGeometry, sigma: Complex64, eps_r: f64, omega: f64) -> Result<AtrSolution> {
    let k0 = omega / C0;
    let k1 = geom.eps1.sqrt() * k0;
    let kx = k1 * geom.theta_i.sin();
    let k1z = k1 * geom.theta_i.cos();
    let kz = decaying_sqrt(Complex64::new(eps_r * k0 * k0 - kx * kx, 0.0));
    let e = (I * kz * geom.d).exp();
    let one = Complex64::new(1.0, 0.0);
    let kscale = k1z + kz.norm();
    let (a, b) = match geom.polarization {
        Polarization::TE => {
            let s = 1.0 / kscale;
            let a = Matrix4::new(
                one, -e, -one, ZERO,
                k1z * s * one, -kz * e * s, kz * s, ZERO,
                ZERO, one, e, -one,
                ZERO, kz * s, -kz * e * s, (kz + omega * MU0 * sigma) * s,
            );
            (a, Vector4::new(-one, k1z * s * one, ZERO, ZERO))
        }
        Polarization::TM => {
            let s = geom.eps1 / kscale;
            let g = kz / eps_r * s;
            let p = k1z / geom.eps1 * s;
            let a = Matrix4::new(
                one, -e, -one, ZERO,
                p * one, -g * e, g, ZERO,
                ZERO, one, -e, one,
                ZERO, -one, -e, one + sigma * kz / (omega * eps_r * EPS0),
            );
            (a, Vector4::new(-one, p * one, ZERO, ZERO))
        }
    };
    let condition = condition_number(&a);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::SingularSystem { condition });
    }
    let x = a.lu().solve(&b).ok_or(Error::SingularSystem { condition })?;
    let (r, m1, m2, t) = (x[0], x[1], x[2], x[3]);
    let tau = match geom.polarization {
        Polarization::TE => t,
        // Ratio of tangential-E-carrying amplitudes E = eta H across media.
        Polarization::TM => (kz / k1z).sqrt() * t * (geom.eps1 / eps_r).sqrt(),
    };
    Ok(AtrSolution {
        polarization: geom.polarization,
        omega,
        r,
        tau,
        m1,
        m2,
        t,
        kx,
        kz_prism: k1z,
        kz_gap: kz,
        eps1: geom.eps1,
        eps_r,
        d: geom.d,
        sigma,
        condition,
    })
}

/// Solves the ATR problem with the graphene conductivity at `omega`.
pub fn atr_solve(geom: &PrismGeometry, params: &GrapheneParams, omega: f64) -> Result<AtrSolution> {
    let s = material::conductivity(params, omega, ConductivityModel::Auto)?;
    atr_solve_sigma(geom, s.value, params.eps_r(), omega)
}

/// Reflectance sampled on an (omega, theta) grid, row-major in omega.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectanceMap {
    pub omegas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
}

impl ReflectanceMap {
    pub fn get(&self, i_omega: usize, i_theta: usize) -> f64 {
        self.values[i_omega * self.thetas.len() + i_theta]
    }
}

pub fn reflectance_map(
    base: &PrismGeometry,
    params: &GrapheneParams,
    omegas: &[f64],
    thetas: &[f64],
) -> Result<ReflectanceMap> {
    let geoms = thetas.iter().map(|&t| base.with_theta(t)).collect::<Result<Vec<_>>>()?;
    let rows = omegas
        .par_iter()
        .map(|&w| {
            let s = material::conductivity(params, w, ConductivityModel::Auto)?;
            geoms
                .iter()
                .map(|g| Ok(atr_solve_sigma(g, s.value, params.eps_r(), w)?.reflectance()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReflectanceMap { omegas: omegas.to_vec(), thetas: thetas.to_vec(), values: rows.concat() })
}

/// A reasonable scan window for the matching frequency.
pub fn default_window(pol: Polarization, params: &GrapheneParams) -> (f64, f64) {
    let w_mu = 2.0 * params.mu_c_joule().abs() / crate::constants::HBAR;
    match pol {
        Polarization::TE => (0.6 * w_mu, 1.2 * w_mu),
        Polarization::TM => (2.0 * std::f64::consts::PI * 0.05e12, 0.5 * w_mu),
    }
}

const SCAN_POINTS: usize = 400;
const ZOOM_POINTS: usize = 2001;
const ZOOM_HALF_WIDTH: f64 = 5e-2;

/// Reflectance with a relative nudge off the exact low-temperature log point.
fn reflectance_at(geom: &PrismGeometry, params: &GrapheneParams, w: f64) -> Result<f64> {
    match atr_solve(geom, params, w) {
        Err(Error::LogSingularity { .. }) => Ok(atr_solve(geom, params, w * (1.0 + 1e-9))?.reflectance()),
        other => other.map(|s| s.reflectance()),
    }
}

/// Repeated grid refinement around the best sample of `[lo, hi]`.
fn zoom_minimum(geom: &PrismGeometry, params: &GrapheneParams, lo: f64, hi: f64, points: usize) -> Result<(f64, f64)> {
    let (mut lo, mut hi, mut n) = (lo, hi, points);
    let mut best = (f64::NAN, f64::INFINITY);
    loop {
        let step = (hi - lo) / (n - 1) as f64;
        for i in 0..n {
            let w = lo + step * i as f64;
            let r = reflectance_at(geom, params, w)?;
            if r < best.1 {
                best = (w, r);
            }
        }
        if step < 1e-13 * best.0 {
            return Ok(best);
        }
        lo = (best.0 - 2.0 * step).max(lo);
        hi = (best.0 + 2.0 * step).min(hi);
        n = 41;
    }
}

fn check_incidence(geom: &PrismGeometry, params: &GrapheneParams) -> Result<()> {
    if geom.theta_i <= critical_angle(geom.eps1 / params.eps_r()) {
        return Err(Error::NotResonant { threshold: RESONANCE_THRESHOLD, best: f64::NAN });
    }
    Ok(())
}

/// Reflectance minimum of the bound surface-mode branch: refinement around
/// the lossless matching root inside `window`.
pub fn resonance_frequency(geom: &PrismGeometry, params: &GrapheneParams, window: (f64, f64)) -> Result<f64> {
    check_incidence(geom, params)?;
    let seed = lossless_matching_frequency(geom, params, window)?;
    let lo = (seed * (1.0 - ZOOM_HALF_WIDTH)).max(window.0);
    let hi = (seed * (1.0 + ZOOM_HALF_WIDTH)).min(window.1);
    let (w, r) = zoom_minimum(geom, params, lo, hi, ZOOM_POINTS)?;
    if r >= RESONANCE_THRESHOLD {
        return Err(Error::NotResonant { threshold: RESONANCE_THRESHOLD, best: r });
    }
    Ok(w)
}

/// Frequency of minimal reflectance in `window`: refined log scan, compared
/// against the refined surface-mode resonance when a lossless root exists.
pub fn matching_frequency(geom: &PrismGeometry, params: &GrapheneParams, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("window", "need 0 < omega_lo < omega_hi"));
    }
    check_incidence(geom, params)?;
    let ratio = (hi / lo).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| lo * ratio.powi(i as i32)).collect();
    let values: Vec<f64> = grid.iter().map(|&w| reflectance_at(geom, params, w)).collect::<Result<_>>()?;
    let imin = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("non-empty scan");
    let a = grid[imin.saturating_sub(1)];
    let b = grid[(imin + 1).min(SCAN_POINTS - 1)];
    let mut best = zoom_minimum(geom, params, a, b, 41)?;
    if let Ok(w) = resonance_frequency(geom, params, window) {
        let r = reflectance_at(geom, params, w)?;
        if r < best.1 {
            best = (w, r);
        }
    }
    if best.1 >= RESONANCE_THRESHOLD {
        return Err(Error::NotResonant { threshold: RESONANCE_THRESHOLD, best: best.1 });
    }
    Ok(best.0)
}

/// Lossless matching condition `sigma'' eta = target(theta)`.
pub fn lossless_target(geom: &PrismGeometry, eps_r: f64) -> Result<f64> {
    let s2 = geom.eps1 * geom.theta_i.sin().powi(2) / eps_r - 1.0;
    if s2 <= 0.0 {
        return Err(Error::NonEvanescentGap);
    }
    Ok(match geom.polarization {
        Polarization::TE => -2.0 * s2.sqrt(),
        Polarization::TM => 2.0 / s2.sqrt(),
    })
}

/// Root of the lossless matching condition in `window` (bisection on a log scan).
pub fn lossless_matching_frequency(geom: &PrismGeometry, params: &GrapheneParams, window: (f64, f64)) -> Result<f64> {
    let target = lossless_target(geom, params.eps_r())?;
    let eta = dispersion::background_impedance(params.eps_r());
    let f = |w: f64| -> Result<f64> {
        Ok(material::conductivity(params, w, ConductivityModel::Auto)?.im() * eta - target)
    };
    let (lo, hi) = window;
    let ratio = (hi / lo).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let mut prev_w = lo;
    let mut prev = f(lo)?;
    for i in 1..SCAN_POINTS {
        let w = lo * ratio.powi(i as i32);
        let v = f(w)?;
        if prev == 0.0 {
            return Ok(prev_w);
        }
        if prev.signum() != v.signum() {
            let (mut a, mut b, mut fa) = (prev_w, w, prev);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m)?;
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
                if b - a < 1e-14 * b {
                    break;
                }
            }
            return Ok(0.5 * (a + b));
        }
        prev_w = w;
        prev = v;
    }
    Err(Error::NotResonant { threshold: RESONANCE_THRESHOLD, best: f64::NAN })
}

/// Overlap transmission coefficient and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaResult {
    pub beta: Complex64,
    pub r_abs: f64,
    /// `|<Psi|phi>| / (||Psi|| ||phi||)` without the `sqrt(1-|r|^2)` factor.
    pub shape_overlap: f64,
    /// Prism-region energy over one standing-wave period relative to the lower-region energy.
    pub prism_energy_ratio: f64,
    pub validity_warning: bool,
}

impl BetaResult {
    pub fn g(&self) -> Complex64 {
        coupling_from_beta(self.beta)
    }
}

const OVERLAP_PANELS: usize = 96;

/// Grid over `[-z_max, d]` refined at the sheet and at the prism face.
fn lower_grid(d: f64, decay: f64) -> PanelGrid {
    let z_max = quantize::Z_MAX_DECAY_LENGTHS / decay;
    let below = PanelGrid::geometric(0.0, -z_max, OVERLAP_PANELS, quantize::PANEL_ORDER, 1.03);
    let half = 0.5 * d;
    let gap_a = PanelGrid::geometric(0.0, half, OVERLAP_PANELS, quantize::PANEL_ORDER, 1.03);
    let gap_b = PanelGrid::geometric(d, half, OVERLAP_PANELS, quantize::PANEL_ORDER, 1.03);
    below.join(gap_a).join(gap_b)
}

fn spp_shape(pol: Polarization, sigma: Complex64, eps_r: f64, omega: f64) -> Result<dispersion::SppMode> {
    let mode = dispersion::mode_from_sigma(pol, material::Conductivity { value: sigma, omega }, eps_r)?;
    let twin = quantize::lossless_twin(&mode)?;
    if !twin.supported {
        return Err(Error::UnsupportedMode(format!("{pol} surface mode is not bound at this frequency")));
    }
    Ok(twin)
}

/// `beta* = sqrt(1-|r|^2) ∫ Psi . phi* dz / (||Psi|| ||phi||)` over `[-z_max, d]`.
pub fn overlap_beta(geom: &PrismGeometry, params: &GrapheneParams, omega: f64) -> Result<BetaResult> {
    let s = material::conductivity(params, omega, ConductivityModel::Auto)?;
    overlap_beta_sigma(geom, s.value, params.eps_r(), omega)
}

/// [`overlap_beta`] for a prescribed sheet conductivity.
pub fn overlap_beta_sigma(geom: &PrismGeometry, sigma: Complex64, eps_r: f64, omega: f64) -> Result<BetaResult> {
    let sol = atr_solve_sigma(geom, sigma, eps_r, omega)?;
    if sol.gap_decay() <= 0.0 {
        return Err(Error::NonEvanescentGap);
    }
    let spp = spp_shape(geom.polarization, sigma, eps_r, omega)?;
    let decay = sol.gap_decay().min(spp.q0.re);
    let grid = lower_grid(geom.d, decay);
    let dot = grid.integrate_complex(|z| {
        let psi = sol.electric_field(z).0;
        let phi = quantize::mode_function(&spp, z);
        psi.iter().zip(&phi).map(|(a, b)| a * b.conj()).sum()
    });
    let n_psi = grid.integrate(|z| sol.electric_field(z).0.iter().map(|c| c.norm_sqr()).sum());
    let n_phi = grid.integrate(|z| quantize::mode_function(&spp, z).iter().map(|c| c.norm_sqr()).sum());
    let shape = dot / (n_psi * n_phi).sqrt();
    let r_abs = sol.r.norm();
    let beta_conj = (1.0 - r_abs * r_abs).max(0.0).sqrt() * shape;

    let lower_energy = grid.integrate(|z| sol.energy_density(z));
    let period = 2.0 * std::f64::consts::PI / sol.kz_prism;
    let prism = PanelGrid::geometric(geom.d, geom.d + period, 16, quantize::PANEL_ORDER, 1.0);
    let prism_energy = prism.integrate(|z| sol.energy_density(z));
    let ratio = prism_energy / lower_energy;
    Ok(BetaResult {
        beta: beta_conj.conj(),
        r_abs,
        shape_overlap: shape.norm(),
        prism_energy_ratio: ratio,
        validity_warning: ratio > PRISM_ENERGY_WARNING,
    })
}

/// Hamiltonian length of the lower-region ATR mode, scaled to unit field at the sheet.
pub fn prism_mode_normalization(geom: &PrismGeometry, params: &GrapheneParams, omega: f64) -> Result<f64> {
    prism_mode_normalization_with(geom, params, omega, 1)
}

fn prism_mode_normalization_with(geom: &PrismGeometry, params: &GrapheneParams, omega: f64, refine: usize) -> Result<f64> {
    let sol = atr_solve(geom, params, omega)?;
    if sol.gap_decay() <= 0.0 {
        return Err(Error::NonEvanescentGap);
    }
    let z_max = quantize::Z_MAX_DECAY_LENGTHS / sol.gap_decay();
    let n = OVERLAP_PANELS * refine;
    let grid = PanelGrid::geometric(0.0, -z_max, n, quantize::PANEL_ORDER, 1.03f64.powf(1.0 / refine as f64))
        .join(PanelGrid::geometric(0.0, 0.5 * geom.d, n, quantize::PANEL_ORDER, 1.03f64.powf(1.0 / refine as f64)))
        .join(PanelGrid::geometric(geom.d, 0.5 * geom.d, n, quantize::PANEL_ORDER, 1.03f64.powf(1.0 / refine as f64)));
    let e0 = sol.electric_field(0.0).0;
    let scale2: f64 = e0.iter().map(|c| c.norm_sqr()).sum();
    let s = 1.0 / scale2.sqrt();
    let field = |z: f64| {
        let (e, de) = sol.electric_field(z);
        (e.map(|c| c * s), de.map(|c| c * s))
    };
    let sheet = sol.sigma.im.abs() * (e0[0].norm_sqr() + e0[1].norm_sqr()) / scale2;
    let eps = params.eps_r();
    Ok(quantize::energy_length(omega, Complex64::new(sol.kx, 0.0), &grid, field, |_| eps, sheet))
}

/// `g = e^{i arg beta} asin|beta|`.
pub fn coupling_from_beta(beta: Complex64) -> Complex64 {
    let m = beta.norm().min(1.0);
    if m == 0.0 {
        return ZERO;
    }
    Complex64::from_polar(m.asin(), beta.arg())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ev_to_omega, hz_to_omega, HBAR};
    use std::f64::consts::PI;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn critical_angles() {
        assert!((critical_angle(1.5).to_degrees() - 54.735_610_317).abs() < 1e-6);
        assert_eq!(critical_angle(1.0), PI / 2.0);
        assert!((critical_angle(4.0) - PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn bare_interface_matches_fresnel() {
        let omega = hz_to_omega(500e12);
        for theta in [deg(10.0), deg(30.0), deg(50.0)] {
            let n1 = 1.5f64.sqrt();
            let ct = theta.cos();
            let st_t = n1 * theta.sin();
            let ct_t = (1.0 - st_t * st_t).sqrt();
            let rs = (n1 * ct - ct_t) / (n1 * ct + ct_t);
            let rp = (ct - n1 * ct_t) / (ct + n1 * ct_t);
            for (pol, fres) in [(Polarization::TE, rs), (Polarization::TM, rp)] {
                let g = PrismGeometry::new(1.5, 300e-9, theta, pol).unwrap();
                let s = atr_solve_sigma(&g, ZERO, 1.0, omega).unwrap();
                assert!((s.r.norm() - fres.abs()).abs() < 1e-12, "{pol} {theta}: {} vs {fres}", s.r.norm());
            }
        }
    }

    /// Independent transfer-matrix result for (E_t, H_t) across gap and sheet.
    fn transfer_matrix_r(pol: Polarization, eps1: f64, d: f64, theta: f64, sigma: Complex64, omega: f64) -> Complex64 {
        let k0 = omega / C0;
        let kx = eps1.sqrt() * k0 * theta.sin();
        let k1z = eps1.sqrt() * k0 * theta.cos();
        let kz = {
            let r = Complex64::new(k0 * k0 - kx * kx, 0.0).sqrt();
            if r.im < 0.0 { -r } else { r }
        };
        // Admittance Y = (tangential H) / (tangential E) for a downward wave.
        let (y1, yg) = match pol {
            Polarization::TE => (k1z / (omega * MU0), kz / (omega * MU0)),
            Polarization::TM => (omega * eps1 * EPS0 / k1z, omega * EPS0 / kz),
        };
        // Below the sheet only a downward wave: Y_load = Yg + sigma.
        let y_load = yg * Complex64::new(1.0, 0.0) + sigma;
        // Gap layer characteristic matrix.
        let delta = kz * d;
        let (c, s) = (delta.cos(), delta.sin());
        let b = c - I * s * y_load / yg;
        let cc = -I * s * yg + c * y_load;
        let y_in = cc / b;
        (y1 - y_in) / (y1 + y_in)
    }

    #[test]
    fn sheet_case_matches_transfer_matrix() {
        let omega = hz_to_omega(30e12);
        for pol in [Polarization::TE, Polarization::TM] {
            for (theta, d, sigma) in [
                (deg(40.0), 2e-6, Complex64::new(3e-5, 2e-4)),
                (deg(65.0), 1e-6, Complex64::new(1e-5, -4e-5)),
                (deg(70.0), 5e-6, Complex64::new(2e-4, 1e-3)),
            ] {
                let g = PrismGeometry::new(1.5, d, theta, pol).unwrap();
                let s = atr_solve_sigma(&g, sigma, 1.0, omega).unwrap();
                let want = transfer_matrix_r(pol, 1.5, d, theta, sigma, omega);
                assert!((s.r.norm() - want.norm()).abs() < 1e-9, "{pol}: {} vs {}", s.r.norm(), want.norm());
            }
        }
    }

    #[test]
    fn lossless_sheet_reflects_totally() {
        let omega = hz_to_omega(10e12);
        for (pol, s) in [(Polarization::TM, 3e-4), (Polarization::TE, -3e-4)] {
            let g = PrismGeometry::new(1.5, 5e-6, deg(60.0), pol).unwrap();
            let sol = atr_solve_sigma(&g, Complex64::new(0.0, s), 1.0, omega).unwrap();
            assert!((sol.r.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_gap_decouples() {
        let p = GrapheneParams::room_temperature(0.5).unwrap();
        let omega = hz_to_omega(10e12);
        let g = PrismGeometry::new(1.5, 1e-3, deg(65.0), Polarization::TM).unwrap();
        let s = atr_solve(&g, &p, omega).unwrap();
        assert!((s.reflectance() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn boundary_conditions_hold() {
        let p = GrapheneParams::room_temperature(0.5).unwrap();
        let omega = hz_to_omega(20e12);
        for pol in [Polarization::TE, Polarization::TM] {
            let g = PrismGeometry::new(3.9, 3e-6, deg(50.0), pol).unwrap();
            let s = atr_solve(&g, &p, omega).unwrap();
            let eps = 1e-15;
            // Tangential E continuous at both interfaces, tangential H jumps by sigma E at the sheet.
            for z in [0.0, g.d()] {
                let (lo, hi) = (s.electric_field(z - eps * g.d()).0, s.electric_field(z + eps * g.d()).0);
                let j = if pol == Polarization::TE { 1 } else { 0 };
                assert!((lo[j] - hi[j]).norm() < 1e-9 * hi[j].norm().max(1e-30), "{pol} E at {z}");
            }
            let (hl, hh) = (s.magnetic_field(-1e-18), s.magnetic_field(1e-18));
            let et = s.electric_field(0.0).0;
            match pol {
                Polarization::TE => assert!(((hh[0] - hl[0]) - s.sigma * et[1]).norm() < 1e-9 * hh[0].norm()),
                Polarization::TM => assert!(((hl[1] - hh[1]) - s.sigma * et[0]).norm() < 1e-9 * hh[1].norm()),
            }
        }
    }

    #[test]
    fn map_entries_match_direct_solves() {
        let p = GrapheneParams::room_temperature(0.5).unwrap();
        let base = PrismGeometry::new(1.5, 200e-6, deg(60.0), Polarization::TM).unwrap();
        let omegas: Vec<f64> = (1..=5).map(|i| hz_to_omega(0.3e12 * i as f64)).collect();
        let thetas: Vec<f64> = (0..4).map(|i| deg(56.0 + 5.0 * i as f64)).collect();
        let map = reflectance_map(&base, &p, &omegas, &thetas).unwrap();
        assert!(map.values.iter().all(|r| (0.0..=1.0).contains(r)));
        let direct = atr_solve(&base.with_theta(thetas[2]).unwrap(), &p, omegas[3]).unwrap().reflectance();
        assert_eq!(map.get(3, 2), direct);
    }

    fn te_fig4() -> (PrismGeometry, GrapheneParams) {
        (
            PrismGeometry::new(1.5, 620e-9, deg(54.74), Polarization::TE).unwrap(),
            GrapheneParams::low_temperature(1.24).unwrap(),
        )
    }

    #[test]
    fn te_dip_near_interband_edge() {
        let (g, p) = te_fig4();
        let w = matching_frequency(&g, &p, default_window(Polarization::TE, &p)).unwrap();
        let edge = 2.0 * p.mu_c_joule() / HBAR;
        assert!((w / edge - 1.0).abs() < 0.05, "hbar omega = {} eV", HBAR * w / crate::constants::EV);
        assert!(atr_solve(&g, &p, w).unwrap().reflectance() < RESONANCE_THRESHOLD);
        // The bound-mode branch sits just below the interband edge.
        let g = g.with_d(25e-6).unwrap();
        let res = resonance_frequency(&g, &p, default_window(Polarization::TE, &p)).unwrap();
        assert!(res < edge && res > 0.95 * edge);
        assert!(overlap_beta(&g, &p, res).unwrap().beta.norm() > 0.9);
    }

    #[test]
    fn below_critical_angle_not_resonant() {
        let (g, p) = te_fig4();
        let g = g.with_theta(deg(40.0)).unwrap();
        assert!(matches!(
            matching_frequency(&g, &p, default_window(Polarization::TE, &p)),
            Err(Error::NotResonant { .. })
        ));
        assert_eq!(overlap_beta(&g, &p, ev_to_omega(2.4)).unwrap_err(), Error::NonEvanescentGap);
    }

    #[test]
    fn lossless_root_agrees_with_low_loss_dip() {
        let p = GrapheneParams::room_temperature(0.5).unwrap();
        let slow = p.with_rates(p.gamma_intra() / 100.0, p.gamma_inter() / 100.0).unwrap();
        let g = PrismGeometry::new(1.5, 200e-6, deg(64.0), Polarization::TM).unwrap();
        let window = (hz_to_omega(0.2e12), hz_to_omega(5e12));
        let root = lossless_matching_frequency(&g, &slow, window).unwrap();
        let dip = matching_frequency(&g, &slow, window).unwrap();
        assert!((dip / root - 1.0).abs() < 0.01, "{dip} vs {root}");
    }

    #[test]
    fn beta_bounds() {
        let p = GrapheneParams::room_temperature(0.5).unwrap();
        let omega = hz_to_omega(0.81e12);
        for d in [20e-6, 60e-6, 120e-6, 300e-6] {
            let g = PrismGeometry::new(1.5, d, deg(64.0), Polarization::TM).unwrap();
            let b = overlap_beta(&g, &p, omega).unwrap();
            assert!(b.beta.norm() <= (1.0 - b.r_abs * b.r_abs).sqrt() + 1e-12);
            assert!(b.shape_overlap <= 1.0 + 1e-12);
        }
        // A lossless sheet returns all power: beta = 0.
        let g = PrismGeometry::new(1.5, 60e-6, deg(64.0), Polarization::TM).unwrap();
        let lossless = p.with_rates(1e-30, 1e-30).unwrap().with_temperature(0.0).unwrap();
        let b = overlap_beta(&g, &lossless, omega).unwrap();
        assert!(b.beta.norm() < 1e-6, "{}", b.beta);
    }

    #[test]
    fn prism_normalization_positive_smooth_converged() {
        let p = GrapheneParams::room_temperature(0.5).unwrap();
        let omega = hz_to_omega(0.81e12);
        let mut prev: Option<f64> = None;
        for i in 0..6 {
            let d = 50e-6 + 2e-6 * i as f64;
            let g = PrismGeometry::new(1.5, d, deg(64.0), Polarization::TM).unwrap();
            let n = prism_mode_normalization(&g, &p, omega).unwrap();
            assert!(n > 0.0);
            if let Some(q) = prev {
                assert!((n / q - 1.0).abs() < 0.2);
            }
            prev = Some(n);
            let fine = prism_mode_normalization_with(&g, &p, omega, 2).unwrap();
            assert!((fine / n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn coupling_angle() {
        assert!((coupling_from_beta(Complex64::new(1.0, 0.0)).re - PI / 2.0).abs() < 1e-15);
        assert_eq!(coupling_from_beta(ZERO), ZERO);
        let g = coupling_from_beta(Complex64::from_polar(0.7, 0.3));
        assert!((g.norm() - 0.775_397_496_610_753).abs() < 1e-12);
        assert!((g.arg() - 0.3).abs() < 1e-12);
    }
}
