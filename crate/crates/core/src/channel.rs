//! Pure-loss propagation of surface-mode states.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::coupling::{even_cat, CoherentMixture, CouplerSpec};
use crate::dispersion::SppMode;
use crate::error::{Error, Result};
use crate::qstate::{coherent_overlap, DensityMatrix};

/// Propagation along the sheet with amplitude attenuation `k0 kappa''` (1/m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    k0_kappa2: f64,
    v_g: f64,
    x: f64,
}

impl ChannelSpec {
    pub fn new(k0_kappa2: f64, v_g: f64, x: f64) -> Result<Self> {
        if !(k0_kappa2 >= 0.0) || !k0_kappa2.is_finite() {
            return Err(Error::invalid("k0_kappa2", "must be finite and non-negative"));
        }
        if !(v_g > 0.0) || !v_g.is_finite() {
            return Err(Error::invalid("v_g", "must be positive"));
        }
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::invalid("x", "must be finite and non-negative"));
        }
        Ok(Self { k0_kappa2, v_g, x })
    }

    /// Channel for a solved mode; `v_g` falls back to the phase velocity when absent.
    pub fn from_mode(mode: &SppMode, x: f64) -> Result<Self> {
        let v_g = mode.v_g.unwrap_or(mode.omega / mode.k.re);
        Self::new(mode.attenuation().max(0.0), v_g, x)
    }

    /// Dimensionless channel with `k0 kappa'' x = y` (unit attenuation and speed).
    pub fn from_loss(y: f64) -> Result<Self> {
        Self::new(1.0, 1.0, y)
    }

    pub fn k0_kappa2(&self) -> f64 {
        self.k0_kappa2
    }

    pub fn v_g(&self) -> f64 {
        self.v_g
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn with_x(self, x: f64) -> Result<Self> {
        Self::new(self.k0_kappa2, self.v_g, x)
    }

    /// `k0 kappa'' x`.
    pub fn loss(&self) -> f64 {
        self.k0_kappa2 * self.x
    }

    /// Energy transmissivity `e^{-2 k0 kappa'' x}`.
    pub fn eta(&self) -> f64 {
        (-2.0 * self.loss()).exp()
    }

    /// Energy decay rate `2 k0 kappa'' v_g` (1/s).
    pub fn gamma(&self) -> f64 {
        2.0 * self.k0_kappa2 * self.v_g
    }

    pub fn travel_time(&self) -> f64 {
        self.x / self.v_g
    }
}

pub fn flux_damping(spec: &ChannelSpec) -> f64 {
    spec.eta()
}

/// Loss applied to each `|a><b|`: amplitudes shrink by `sqrt(eta)` and the weight
/// picks up the bath overlap `<sqrt(1-eta) b | sqrt(1-eta) a>`.
pub fn propagate_cat(rho: &CoherentMixture, spec: &ChannelSpec) -> CoherentMixture {
    propagate_eta(rho, spec.eta())
}

pub(crate) fn propagate_eta(rho: &CoherentMixture, eta: f64) -> CoherentMixture {
    let (t, r) = (eta.sqrt(), (1.0 - eta).max(0.0).sqrt());
    let terms = rho
        .terms
        .iter()
        .map(|&(w, a, b)| (w * coherent_overlap(b * r, a * r), a * t, b * t))
        .collect();
    CoherentMixture { terms }
}

fn log_factorials(n: usize) -> Vec<f64> {
    let mut lf = vec![0.0; n.max(1)];
    for k in 1..n {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    lf
}

/// Pure-loss channel of transmissivity `eta` in Kraus form.
pub fn damp_fock(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("eta", "transmissivity must lie in [0, 1]"));
    }
    let d = rho.dim();
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let lf = log_factorials(d);
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for l in 0..d {
        let mut k = DMatrix::<Complex64>::zeros(d, d);
        for n in l..d {
            let log_c = 0.5 * (lf[n] - lf[l] - lf[n - l]);
            let amp = if eta == 0.0 {
                if n == l { 1.0 } else { 0.0 }
            } else {
                (log_c + 0.5 * (n - l) as f64 * eta.ln() + 0.5 * l as f64 * (1.0 - eta).ln()).exp()
            };
            k[(n - l, n)] = Complex64::new(amp, 0.0);
        }
        out += &k * rho.matrix() * k.adjoint();
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Reference state for fidelity curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// The photonic cat at its launch amplitude `alpha`.
    Initial,
    /// A cat at the transferred, decayed amplitude `alpha sin g e^{-k0 kappa'' x}`.
    AmplitudeMatched,
}

/// Fidelity of the excited and propagated cat at each loss value `y = k0 kappa'' x`.
pub fn fidelity_vs_distance(alpha: Complex64, coupler: &CouplerSpec, losses: &[f64], reference: Reference) -> Result<Vec<f64>> {
    let rho0 = crate::coupling::excite_cat(alpha, coupler);
    let amp = -coupler.beta_amp().conj() * alpha;
    losses
        .iter()
        .map(|&y| {
            let rho = propagate_cat(&rho0, &ChannelSpec::from_loss(y)?);
            let target = match reference {
                Reference::Initial => even_cat(alpha),
                Reference::AmplitudeMatched => {
                    let a = amp * (-y).exp();
                    if a.norm() == 0.0 {
                        crate::coupling::CoherentSuperposition::new(vec![(Complex64::new(1.0, 0.0), a)])
                    } else {
                        even_cat(a)
                    }
                }
            };
            Ok(rho.fidelity(&target))
        })
        .collect()
}

/// Loss at which the amplitude-matched curve for transmission amplitude `beta` turns.
pub fn matched_turning_point(beta: f64) -> f64 {
    (std::f64::consts::SQRT_2 * beta).ln()
}
