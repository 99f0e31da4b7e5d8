//! Graphene sheet conductivity.
//!
//! The sheet is a local, two-sided conducting surface. Two evaluation routes
//! are provided: the finite-temperature Kubo form (closed-form intraband term
//! plus an interband integral over the Fermi–Dirac occupation difference) and
//! its zero-temperature closed form with a Heaviside step and logarithm.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::{E_CHARGE, EV, HBAR, K_B};
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Room-temperature intraband relaxation time (s).
pub const TAU_INTRA_300K: f64 = 0.35e-12;
/// Low-temperature intraband relaxation time (s).
pub const TAU_INTRA_0K: f64 = 5.0e-12;
/// Interband relaxation time `1/gamma` (s).
pub const TAU_INTER: f64 = 0.0658e-12;

/// Material state of the graphene sheet. Energies are in eV, rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrapheneParams {
    mu_c_ev: f64,
    temperature: f64,
    gamma_intra: f64,
    gamma_inter: f64,
    eps_r: f64,
    n_layers: u32,
}

impl GrapheneParams {
    pub fn new(
        mu_c_ev: f64,
        temperature: f64,
        gamma_intra: f64,
        gamma_inter: f64,
        eps_r: f64,
        n_layers: u32,
    ) -> Result<Self> {
        if !mu_c_ev.is_finite() {
            return Err(Error::invalid("mu_c", "must be finite"));
        }
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(Error::invalid("temperature", format!("must be >= 0 K, got {temperature}")));
        }
        if !(gamma_intra > 0.0 && gamma_intra.is_finite()) {
            return Err(Error::invalid("gamma_intra", format!("must be > 0, got {gamma_intra}")));
        }
        if !(gamma_inter > 0.0 && gamma_inter.is_finite()) {
            return Err(Error::invalid("gamma_inter", format!("must be > 0, got {gamma_inter}")));
        }
        if !(eps_r >= 1.0 && eps_r.is_finite()) {
            return Err(Error::invalid("eps_r", format!("must be >= 1, got {eps_r}")));
        }
        if n_layers < 1 {
            return Err(Error::invalid("n_layers", "must be >= 1"));
        }
        Ok(GrapheneParams { mu_c_ev, temperature, gamma_intra, gamma_inter, eps_r, n_layers })
    }

    /// T = 300 K with tau = 0.35 ps, free-standing monolayer.
    pub fn room_temperature(mu_c_ev: f64) -> Result<Self> {
        Self::new(mu_c_ev, 300.0, 1.0 / TAU_INTRA_300K, 1.0 / TAU_INTER, 1.0, 1)
    }

    /// T = 0 K with tau = 5 ps, free-standing monolayer.
    pub fn low_temperature(mu_c_ev: f64) -> Result<Self> {
        Self::new(mu_c_ev, 0.0, 1.0 / TAU_INTRA_0K, 1.0 / TAU_INTER, 1.0, 1)
    }

    pub fn mu_c_ev(&self) -> f64 {
        self.mu_c_ev
    }
    pub fn mu_c_joule(&self) -> f64 {
        self.mu_c_ev * EV
    }
    pub fn temperature(&self) -> f64 {
        self.temperature
    }
    pub fn gamma_intra(&self) -> f64 {
        self.gamma_intra
    }
    pub fn gamma_inter(&self) -> f64 {
        self.gamma_inter
    }
    pub fn eps_r(&self) -> f64 {
        self.eps_r
    }
    pub fn n_layers(&self) -> u32 {
        self.n_layers
    }

    pub fn with_mu_c(self, mu_c_ev: f64) -> Result<Self> {
        Self::new(mu_c_ev, self.temperature, self.gamma_intra, self.gamma_inter, self.eps_r, self.n_layers)
    }
    pub fn with_temperature(self, temperature: f64) -> Result<Self> {
        Self::new(self.mu_c_ev, temperature, self.gamma_intra, self.gamma_inter, self.eps_r, self.n_layers)
    }
    pub fn with_rates(self, gamma_intra: f64, gamma_inter: f64) -> Result<Self> {
        Self::new(self.mu_c_ev, self.temperature, gamma_intra, gamma_inter, self.eps_r, self.n_layers)
    }
    pub fn with_eps_r(self, eps_r: f64) -> Result<Self> {
        Self::new(self.mu_c_ev, self.temperature, self.gamma_intra, self.gamma_inter, eps_r, self.n_layers)
    }
    pub fn with_layers(self, n_layers: u32) -> Result<Self> {
        Self::new(self.mu_c_ev, self.temperature, self.gamma_intra, self.gamma_inter, self.eps_r, n_layers)
    }
}

/// Complex sheet conductivity (S) at radian frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conductivity {
    pub value: Complex64,
    pub omega: f64,
}

impl Conductivity {
    pub fn re(&self) -> f64 {
        self.value.re
    }
    pub fn im(&self) -> f64 {
        self.value.im
    }
}

/// Which conductivity form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConductivityModel {
    /// Low-temperature form when `k_B T < 0.01 min(|mu_c|, hbar omega)` (or T = 0), else full.
    Auto,
    FullT,
    LowT,
}

/// Universal optical conductivity `pi e^2 / 2h = e^2 / 4 hbar` (S).
pub fn sigma_min() -> f64 {
    E_CHARGE * E_CHARGE / (4.0 * HBAR)
}

const QUAD_TOL: Tolerance = Tolerance::new(1e-9, 1e-9);
/// Tolerance used where conductivities are finite-differenced.
pub(crate) const PRECISE_TOL: Tolerance = Tolerance::new(1e-15, 1e-14);

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("omega", format!("must be > 0, got {omega}")))
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Logistic occupation `1 / (e^t + 1)` without overflow.
fn fermi(t: f64) -> f64 {
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// Effective Drude weight energy `k_B T (mu/k_B T + 2 ln(e^{-mu/k_B T} + 1))` in joules.
fn drude_energy(params: &GrapheneParams) -> f64 {
    let mu = params.mu_c_joule();
    if params.temperature == 0.0 {
        return mu.abs();
    }
    let kt = K_B * params.temperature;
    mu + 2.0 * kt * softplus(-mu / kt)
}

fn intraband(params: &GrapheneParams, omega: f64, drude_energy: f64) -> Complex64 {
    let denom = Complex64::new(omega, params.gamma_intra) * (PI * HBAR * HBAR);
    Complex64::i() * (E_CHARGE * E_CHARGE * drude_energy) / denom
}

/// Interband term of the finite-temperature form.
///
/// With `eps = hbar omega u / 2` and `a = 1 + i gamma/omega` the integral is
/// `i e^2 a / (2 pi hbar) * Int_0^inf G(u) / (a^2 - u^2) du`, where
/// `G = f(-eps) - f(eps)` tends to 1 exponentially. The constant part
/// integrates in closed form to `-i pi / (2a)` (giving `sigma_min`); only the
/// exponentially localised remainder `G - 1` is integrated numerically.
fn interband_full(params: &GrapheneParams, omega: f64, tol: Tolerance) -> Result<Complex64> {
    let a = Complex64::new(1.0, params.gamma_inter / omega);
    let hw = HBAR * omega;
    let mu = params.mu_c_joule();
    let prefactor = Complex64::i() * a * (E_CHARGE * E_CHARGE / (2.0 * PI * HBAR));

    let remainder = if params.temperature == 0.0 {
        // G - 1 = -Theta(|mu| - eps): closed form on [0, 2|mu|/hbar omega].
        let b = 2.0 * mu.abs() / hw;
        if b == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            -((a + b).ln() - (a - b).ln()) / (2.0 * a)
        }
    } else {
        let kt = K_B * params.temperature;
        let u_mu = 2.0 * mu.abs() / hw;
        let u_kt = 2.0 * kt / hw;
        let u_end = u_mu + 50.0 * u_kt;
        let a2 = a * a;
        let integrand = |u: f64| {
            let eps = 0.5 * hw * u;
            let g_minus_one = -(fermi((eps - mu) / kt) + fermi((eps + mu) / kt));
            g_minus_one / (a2 - u * u)
        };
        let mut breaks = vec![1.0, u_mu];
        for k in [-5.0, -1.0, 1.0, 5.0] {
            breaks.push(u_mu + k * u_kt);
        }
        quadrature::integrate(integrand, 0.0, u_end, &breaks, tol)?.value
    };

    Ok(Complex64::new(sigma_min(), 0.0) + prefactor * remainder)
}

pub(crate) fn conductivity_full_with(params: &GrapheneParams, omega: f64, tol: Tolerance) -> Result<Conductivity> {
    check_omega(omega)?;
    let intra = intraband(params, omega, drude_energy(params));
    let inter = interband_full(params, omega, tol)?;
    Ok(Conductivity { value: (intra + inter) * params.n_layers as f64, omega })
}

/// Finite-temperature conductivity (intraband closed form plus interband
/// integral, quadrature tolerance 1e-9 absolute and relative).
pub fn conductivity_full(params: &GrapheneParams, omega: f64) -> Result<Conductivity> {
    conductivity_full_with(params, omega, QUAD_TOL)
}

/// Zero-temperature closed form. Errors exactly at `hbar omega = 2|mu_c|`.
pub fn conductivity_low_t(params: &GrapheneParams, omega: f64) -> Result<Conductivity> {
    check_omega(omega)?;
    let mu = params.mu_c_joule().abs();
    let hw = HBAR * omega;
    let intra = intraband(params, omega, mu);
    let inter = if mu == 0.0 {
        Complex64::new(sigma_min(), 0.0)
    } else {
        let detuning = hw - 2.0 * mu;
        if detuning.abs() <= 1e-12 * hw {
            return Err(Error::LogSingularity { min_offset_ev: 1e-12 * hw / EV });
        }
        let step = if detuning > 0.0 { 1.0 } else { 0.0 };
        let log = (detuning / (hw + 2.0 * mu)).abs().ln();
        Complex64::new(step, log / PI) * sigma_min()
    };
    Ok(Conductivity { value: (intra + inter) * params.n_layers as f64, omega })
}

/// Resolves [`ConductivityModel::Auto`] to a concrete backend.
pub fn select_model(params: &GrapheneParams, omega: f64, model: ConductivityModel) -> ConductivityModel {
    match model {
        ConductivityModel::Auto => {
            if params.temperature == 0.0 {
                return ConductivityModel::LowT;
            }
            let scale = params.mu_c_joule().abs().min(HBAR * omega);
            if K_B * params.temperature < 0.01 * scale {
                ConductivityModel::LowT
            } else {
                ConductivityModel::FullT
            }
        }
        concrete => concrete,
    }
}

/// Conductivity through the requested (or automatically selected) backend.
pub fn conductivity(params: &GrapheneParams, omega: f64, model: ConductivityModel) -> Result<Conductivity> {
    match select_model(params, omega, model) {
        ConductivityModel::LowT => conductivity_low_t(params, omega),
        _ => conductivity_full(params, omega),
    }
}

pub(crate) fn conductivity_precise(params: &GrapheneParams, omega: f64, model: ConductivityModel) -> Result<Conductivity> {
    match select_model(params, omega, model) {
        ConductivityModel::LowT => conductivity_low_t(params, omega),
        _ => conductivity_full_with(params, omega, PRECISE_TOL),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ev_to_omega, hz_to_omega, PLANCK};
    use proptest::prelude::*;

    fn fig2_room() -> GrapheneParams {
        GrapheneParams::room_temperature(0.5).unwrap()
    }

    /// Brute-force oracle: the original interband integral in energy, on a
    /// fine composite Simpson grid over a long finite range plus the
    /// analytic 1/eps^2 tail. Shares nothing with the production path.
    fn interband_oracle(p: &GrapheneParams, omega: f64) -> Complex64 {
        let kt = K_B * p.temperature;
        let mu = p.mu_c_joule();
        let w = Complex64::new(omega, p.gamma_inter);
        let f = |e: f64| 1.0 / (((e - mu) / kt).exp() + 1.0);
        let integrand = |e: f64| (f(-e) - f(e)) / (w * w - 4.0 * (e / HBAR).powi(2));
        let e_max = 400.0 * HBAR * omega;
        let n = 4_000_000;
        let h = e_max / n as f64;
        let mut s = integrand(0.0) + integrand(e_max);
        for i in 1..n {
            let c = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += integrand(i as f64 * h) * c;
        }
        let mut integral = s * h / 3.0;
        // Tail where f(-e) - f(e) = 1: Int_{E}^{inf} de / (w^2 - 4 e^2/hbar^2) ~ -hbar^2 / (4 E).
        integral += -HBAR * HBAR / (4.0 * e_max) * (1.0 + (w * HBAR / (2.0 * e_max)).powi(2) / 3.0);
        Complex64::i() * E_CHARGE * E_CHARGE * w / (PI * HBAR * HBAR) * integral
    }

    #[test]
    fn sigma_min_value() {
        let s = sigma_min();
        assert!((s - 6.0853e-5).abs() < 1e-8, "{s}");
        let via_h = PI * E_CHARGE * E_CHARGE / (2.0 * PLANCK);
        assert!((s / via_h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_matches_brute_force_at_10_thz() {
        let p = fig2_room();
        let omega = hz_to_omega(10e12);
        let full = conductivity_full(&p, omega).unwrap().value;
        let intra = intraband(&p, omega, drude_energy(&p));
        let oracle = intra + interband_oracle(&p, omega);
        assert!((full - oracle).norm() / oracle.norm() < 1e-6, "{full} vs {oracle}");
        // The interband part alone is also checked, so the Drude term cannot mask it.
        let inter = interband_full(&p, omega, QUAD_TOL).unwrap();
        let inter_oracle = interband_oracle(&p, omega);
        assert!((inter - inter_oracle).norm() / inter_oracle.norm() < 1e-6, "{inter} vs {inter_oracle}");
    }

    #[test]
    fn universal_limit() {
        let p = GrapheneParams::low_temperature(0.0).unwrap();
        for f in [1e12, 100e12, 800e12] {
            let s = conductivity_low_t(&p, hz_to_omega(f)).unwrap();
            assert!((s.value - Complex64::new(sigma_min(), 0.0)).norm() / sigma_min() < 1e-10);
            let full = conductivity_full(&p, hz_to_omega(f)).unwrap();
            assert!((full.value.re / sigma_min() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn low_t_step_above_threshold() {
        let p = GrapheneParams::low_temperature(0.5).unwrap();
        let s = conductivity_low_t(&p, ev_to_omega(2.0)).unwrap();
        assert!((s.re() / sigma_min() - 1.0).abs() < 1e-3);
        let below = conductivity_low_t(&p, ev_to_omega(0.5)).unwrap();
        assert!(below.re() / sigma_min() < 1e-3);
    }

    #[test]
    fn low_t_log_singularity_is_an_error_and_neighbours_are_finite() {
        let p = GrapheneParams::low_temperature(0.5).unwrap();
        assert!(matches!(conductivity_low_t(&p, ev_to_omega(1.0)), Err(Error::LogSingularity { .. })));
        let lo = conductivity_low_t(&p, ev_to_omega(1.0 - 1e-6)).unwrap();
        let hi = conductivity_low_t(&p, ev_to_omega(1.0 + 1e-6)).unwrap();
        assert!(lo.value.is_finite() && hi.value.is_finite());
        // Log argument |d| / (hbar w + 2 mu) is nearly equal on both sides; the step differs by sigma_min.
        let log_lo = (1e-6_f64 / (2.0 - 1e-6)).ln();
        let log_hi = (1e-6_f64 / (2.0 + 1e-6)).ln();
        assert!((log_lo - log_hi).abs() < 1e-5);
        assert!(((hi.re() - lo.re()) / sigma_min() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn auto_dispatch() {
        let cold = GrapheneParams::low_temperature(0.5).unwrap();
        assert_eq!(select_model(&cold, hz_to_omega(1e12), ConductivityModel::Auto), ConductivityModel::LowT);
        let warm = fig2_room();
        assert_eq!(select_model(&warm, hz_to_omega(1e12), ConductivityModel::Auto), ConductivityModel::FullT);
        let omega = hz_to_omega(1e12);
        let auto = conductivity(&warm, omega, ConductivityModel::Auto).unwrap();
        assert_eq!(auto, conductivity_full(&warm, omega).unwrap());
    }

    #[test]
    fn near_threshold_backends_agree() {
        // k_B T = 0.005 min(|mu|, hbar w), with gamma small enough that the
        // interband broadening does not dominate the comparison.
        let mu = 0.5;
        let hw = 1.6;
        let t = 0.005 * mu * EV / K_B;
        let p = GrapheneParams::new(mu, t, 1.0 / TAU_INTRA_0K, 1e9, 1.0, 1).unwrap();
        assert_eq!(select_model(&p, ev_to_omega(hw), ConductivityModel::Auto), ConductivityModel::LowT);
        let full = conductivity_full(&p, ev_to_omega(hw)).unwrap().value;
        let low = conductivity_low_t(&p, ev_to_omega(hw)).unwrap().value;
        assert!((full - low).norm() / low.norm() < 0.01, "{full} {low}");
    }

    #[test]
    fn drude_scaling() {
        let p = fig2_room();
        let (w1, w2) = (hz_to_omega(1e12), hz_to_omega(3e12));
        let e = drude_energy(&p);
        let ratio = intraband(&p, w1, e) / intraband(&p, w2, e);
        let expected = Complex64::new(w2, p.gamma_intra) / Complex64::new(w1, p.gamma_intra);
        assert!((ratio - expected).norm() < 1e-14);
    }

    #[test]
    fn fig2a_shape() {
        let p = fig2_room();
        let at = |hw: f64| conductivity_full(&p, ev_to_omega(hw)).unwrap().value / sigma_min();
        // Drude roll-off at low frequency.
        assert!(at(0.001).norm() > at(0.01).norm());
        assert!(at(0.01).norm() > at(0.1).norm());
        // Interband step: Re sigma crosses sigma_min/2 near hbar w = 2 mu.
        assert!(at(0.8).re < 0.5);
        assert!(at(1.2).re > 0.5);
        assert!((at(3.0).re - 1.0).abs() < 0.02);
    }

    #[test]
    fn invalid_inputs() {
        assert!(GrapheneParams::new(0.5, -1.0, 1e12, 1e12, 1.0, 1).is_err());
        assert!(GrapheneParams::new(0.5, 300.0, 0.0, 1e12, 1.0, 1).is_err());
        assert!(GrapheneParams::new(0.5, 300.0, 1e12, 1e12, 0.5, 1).is_err());
        assert!(GrapheneParams::new(0.5, 300.0, 1e12, 1e12, 1.0, 0).is_err());
        assert!(conductivity_full(&fig2_room(), 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn passivity(mu in -1.5f64..1.5, t in 0.0f64..400.0, log_f in 11.0f64..15.5,
                     tau in 0.05e-12f64..5e-12) {
            let p = GrapheneParams::new(mu, t, 1.0 / tau, 1.0 / TAU_INTER, 1.0, 1).unwrap();
            let omega = hz_to_omega(10f64.powf(log_f));
            let s = conductivity_full(&p, omega).unwrap();
            prop_assert!(s.re() >= 0.0);
        }

        #[test]
        fn layer_linearity(n in 1u32..10, mu in 0.0f64..1.0, log_f in 11.0f64..15.0) {
            let p = fig2_room().with_mu_c(mu).unwrap();
            let omega = hz_to_omega(10f64.powf(log_f));
            let one = conductivity_full(&p, omega).unwrap().value;
            let many = conductivity_full(&p.with_layers(n).unwrap(), omega).unwrap().value;
            prop_assert_eq!(many, one * n as f64);
        }

        #[test]
        fn low_temperature_agreement(mu in 0.1f64..1.5, hw in 0.005f64..3.0) {
            prop_assume!((hw - 2.0 * mu).abs() > 0.01);
            // Interband broadening well below the 10 meV exclusion window.
            let p = GrapheneParams::new(mu, 1.0, 1.0 / TAU_INTRA_0K, 1e10, 1.0, 1).unwrap();
            let omega = ev_to_omega(hw);
            let full = conductivity_full(&p, omega).unwrap().value;
            let low = conductivity_low_t(&p, omega).unwrap().value;
            prop_assert!((full - low).norm() / low.norm() <= 1e-3, "{} vs {}", full, low);
        }
    }
}
