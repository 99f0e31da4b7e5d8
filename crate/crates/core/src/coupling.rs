//! Photon-to-surface-mode beamsplitter acting on superpositions of coherent states.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::{coherent_amplitudes, coherent_overlap, DensityMatrix, StateVector};

/// Beamsplitter with `gamma = cos|g|` and `beta = e^{i arg g} sin|g|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerSpec {
    g: Complex64,
}

impl CouplerSpec {
    pub fn new(g: Complex64) -> Result<Self> {
        if !(g.norm() <= std::f64::consts::FRAC_PI_2 + 1e-12) || !g.norm().is_finite() {
            return Err(Error::invalid("g", "|g| must lie in [0, pi/2]"));
        }
        Ok(Self { g })
    }

    pub fn real(g: f64) -> Result<Self> {
        Self::new(Complex64::new(g, 0.0))
    }

    /// Coupler for a transmission amplitude `beta` (`g = e^{i arg beta} asin|beta|`).
    pub fn from_beta(beta: Complex64) -> Result<Self> {
        if beta.norm() > 1.0 + 1e-12 {
            return Err(Error::invalid("beta", "|beta| must not exceed 1"));
        }
        Self::new(crate::prism::coupling_from_beta(beta))
    }

    pub fn g(&self) -> Complex64 {
        self.g
    }

    pub fn gamma_amp(&self) -> Complex64 {
        Complex64::new(self.g.norm().cos(), 0.0)
    }

    pub fn beta_amp(&self) -> Complex64 {
        if self.g.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.g.norm().sin(), self.g.arg())
    }
}

/// Heisenberg-picture matrix `[[gamma, beta], [-beta*, gamma*]]` acting on `(a, b)`.
pub fn heisenberg_transform(c: &CouplerSpec) -> Matrix2<Complex64> {
    let (g, b) = (c.gamma_amp(), c.beta_amp());
    Matrix2::new(g, b, -b.conj(), g.conj())
}

/// Pure state `sum_j c_j |alpha_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentSuperposition {
    pub terms: Vec<(Complex64, Complex64)>,
}

impl CoherentSuperposition {
    pub fn new(terms: Vec<(Complex64, Complex64)>) -> Self {
        Self { terms }
    }

    /// `<self|other>` from analytic overlaps.
    pub fn inner(&self, other: &CoherentSuperposition) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for &(ci, ai) in &self.terms {
            for &(cj, aj) in &other.terms {
                s += ci.conj() * cj * coherent_overlap(ai, aj);
            }
        }
        s
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).re
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self { terms: self.terms.iter().map(|&(c, a)| (c / n, a)).collect() }
    }

    /// Fock-space rendering with truncated (not renormalized) coherent vectors.
    pub fn to_state(&self, dim: usize) -> StateVector {
        let mut v = DVector::zeros(dim);
        for &(c, a) in &self.terms {
            v += coherent_amplitudes(a, dim) * c;
        }
        StateVector::from_amplitudes(v)
    }

    /// Every amplitude multiplied by `s`.
    pub fn scaled(&self, s: Complex64) -> Self {
        Self { terms: self.terms.iter().map(|&(c, a)| (c, a * s)).collect() }
    }
}

/// `rho = sum_t w_t |ket_t><bra_t|` over coherent states.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentMixture {
    pub terms: Vec<(Complex64, Complex64, Complex64)>,
}

impl CoherentMixture {
    pub fn pure(psi: &CoherentSuperposition) -> Self {
        let mut terms = Vec::with_capacity(psi.terms.len().pow(2));
        for &(cj, aj) in &psi.terms {
            for &(ck, ak) in &psi.terms {
                terms.push((cj * ck.conj(), aj, ak));
            }
        }
        Self { terms }
    }

    pub fn trace(&self) -> Complex64 {
        self.terms.iter().map(|&(w, a, b)| w * coherent_overlap(b, a)).sum()
    }

    /// `<psi|rho|psi>` from analytic overlaps.
    pub fn expectation(&self, psi: &CoherentSuperposition) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for &(w, a, b) in &self.terms {
            let left: Complex64 = psi.terms.iter().map(|&(c, x)| c.conj() * coherent_overlap(x, a)).sum();
            let right: Complex64 = psi.terms.iter().map(|&(c, x)| c * coherent_overlap(b, x)).sum();
            s += w * left * right;
        }
        s
    }

    /// Fidelity against a normalized pure reference, clamped to `[0, 1]`.
    pub fn fidelity(&self, psi: &CoherentSuperposition) -> f64 {
        self.expectation(psi).re.clamp(0.0, 1.0)
    }

    /// `Tr(rho a^dag a)`.
    pub fn mean_photon_number(&self) -> f64 {
        self.terms.iter().map(|&(w, a, b)| (w * b.conj() * a * coherent_overlap(b, a)).re).sum()
    }

    pub fn purity(&self) -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for &(w1, a1, b1) in &self.terms {
            for &(w2, a2, b2) in &self.terms {
                s += w1 * w2 * coherent_overlap(b1, a2) * coherent_overlap(b2, a1);
            }
        }
        s.re
    }

    pub fn to_density(&self, dim: usize) -> DensityMatrix {
        let mut m = DMatrix::zeros(dim, dim);
        for &(w, a, b) in &self.terms {
            let ka = coherent_amplitudes(a, dim);
            let kb = coherent_amplitudes(b, dim);
            m += (ka * kb.adjoint()) * w;
        }
        DensityMatrix::from_matrix_unchecked(m)
    }
}

/// Output state of mode b for input `|psi>_a |0>_b`: component `|beta_j>` maps to
/// `|-beta* beta_j>` with cross weights `<gamma beta_k | gamma beta_j>` from the traced photon.
pub fn excite(psi: &CoherentSuperposition, c: &CouplerSpec) -> CoherentMixture {
    let (g, b) = (c.gamma_amp(), c.beta_amp());
    let mut terms = Vec::with_capacity(psi.terms.len().pow(2));
    for &(cj, aj) in &psi.terms {
        for &(ck, ak) in &psi.terms {
            let w = cj * ck.conj() * coherent_overlap(g * ak, g * aj);
            terms.push((w, -b.conj() * aj, -b.conj() * ak));
        }
    }
    CoherentMixture { terms }
}

/// Even cat `N(|alpha> + |-alpha>)`.
pub fn even_cat(alpha: Complex64) -> CoherentSuperposition {
    let one = Complex64::new(1.0, 0.0);
    CoherentSuperposition::new(vec![(one, alpha), (one, -alpha)]).normalized()
}

/// Cat input excited into the surface mode.
pub fn excite_cat(alpha: Complex64, c: &CouplerSpec) -> CoherentMixture {
    excite(&even_cat(alpha), c)
}

/// `c0 |0+> + c1 |1+>` on the four-component code `{+-alpha, +-i alpha}`,
/// normalized by its exact norm.
pub fn code_superposition(c0: Complex64, c1: Complex64, alpha: Complex64) -> Result<CoherentSuperposition> {
    let n = c0.norm_sqr() + c1.norm_sqr();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("c0, c1", format!("|c0|^2 + |c1|^2 = {n} differs from 1")));
    }
    let i_alpha = Complex64::i() * alpha;
    Ok(CoherentSuperposition::new(vec![(c0, alpha), (c0, -alpha), (c1, i_alpha), (c1, -i_alpha)]).normalized())
}

pub fn excite_code(c0: Complex64, c1: Complex64, alpha: Complex64, c: &CouplerSpec) -> Result<CoherentMixture> {
    Ok(excite(&code_superposition(c0, c1, alpha)?, c))
}

/// Two-mode Fock simulation: `a^dag -> gamma a^dag - beta* b^dag` on `|psi>_a |0>_b`,
/// then the partial trace over mode a.
pub fn excite_fock(psi: &StateVector, c: &CouplerSpec) -> DensityMatrix {
    let d = psi.dim();
    let (g, b) = (c.gamma_amp(), -c.beta_amp().conj());
    // log C(n, k) via log-factorials keeps large n finite.
    let lf: Vec<f64> = std::iter::once(0.0)
        .chain((1..d).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for (n, &cn) in psi.amplitudes().iter().enumerate() {
        if cn == Complex64::new(0.0, 0.0) {
            continue;
        }
        for k in 0..=n {
            let binom = (0.5 * (lf[n] - lf[k] - lf[n - k])).exp();
            out[(k, n - k)] += cn * binom * g.powu(k as u32) * b.powu((n - k) as u32);
        }
    }
    DensityMatrix::from_matrix_unchecked(out.transpose() * out.conjugate())
}
