//! Truncated Fock-space states and operators for a single bosonic mode.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Operator = DMatrix<Complex64>;

/// Coherent-state tail mass allowed by [`minimal_truncation_dimension`].
pub const TAIL_MASS: f64 = 1e-10;
/// Minimum retained norm accepted by [`coherent_state`].
pub const MIN_RETAINED_NORM: f64 = 1.0 - 1e-8;

/// Pure state in a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(amps: DVector<Complex64>) -> Self {
        Self { amps }
    }

    /// Number state `|n>` in dimension `dim`.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::DimensionMismatch { expected: n + 1, found: dim });
        }
        let mut amps = DVector::zeros(dim);
        amps[n] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::fock(0, dim.max(1)).expect("dim >= 1")
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Returns the normalized state and the norm it had.
    pub fn normalized(&self) -> (Self, f64) {
        let n = self.norm();
        (Self { amps: self.amps.unscale(n) }, n)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn apply(&self, op: &Operator) -> Result<StateVector> {
        check_dim(op.ncols(), self.dim())?;
        Ok(Self { amps: op * &self.amps })
    }

    pub fn scale(&self, c: Complex64) -> StateVector {
        Self { amps: self.amps.map(|a| a * c) }
    }

    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { amps: &self.amps + &other.amps })
    }

    /// `<psi|O|psi>`.
    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        let o = self.apply(op)?;
        self.inner(&o)
    }

    /// Mean photon number `sum n |c_n|^2`.
    pub fn mean_photon_number(&self) -> f64 {
        self.amps.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
    }
}

/// Density matrix in a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: Operator,
}

/// Tolerances checked by [`DensityMatrix::validate`].
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = -1e-9;

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity, unit trace and positivity.
    pub fn new(m: Operator) -> Result<Self> {
        let rho = Self { m };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix without checks (intermediate maps).
    pub fn from_matrix_unchecked(m: Operator) -> Self {
        Self { m }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        Self { m: psi.amps.clone() * psi.amps.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Operator {
        &self.m
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = hermitian_part(&self.m);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Eigen-decomposition `(weights, states)` of the Hermitian part.
    pub fn eigen(&self) -> (Vec<f64>, Vec<StateVector>) {
        let e = hermitian_part(&self.m).symmetric_eigen();
        let states = e
            .eigenvectors
            .column_iter()
            .map(|c| StateVector::from_amplitudes(c.into_owned()))
            .collect();
        (e.eigenvalues.iter().copied().collect(), states)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.nrows() != self.m.ncols() {
            return Err(Error::DimensionMismatch { expected: self.m.nrows(), found: self.m.ncols() });
        }
        let scale = self.m.norm().max(1.0);
        let herm = (&self.m - self.m.adjoint()).norm();
        if herm > HERMITIAN_TOL * scale {
            return Err(Error::invalid("rho", format!("not Hermitian (residual {herm:.3e})")));
        }
        let t = self.trace();
        if (t - 1.0).norm() > TRACE_TOL {
            return Err(Error::invalid("rho", format!("trace {t} differs from 1")));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < PSD_TOL {
            return Err(Error::invalid("rho", format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// `<psi|rho|psi>`; returned unclamped.
    pub fn expectation(&self, psi: &StateVector) -> Result<Complex64> {
        check_dim(self.dim(), psi.dim())?;
        Ok(psi.amps.dotc(&(&self.m * &psi.amps)))
    }

    pub fn expectation_op(&self, op: &Operator) -> Result<Complex64> {
        check_dim(self.dim(), op.nrows())?;
        Ok((&self.m * op).trace())
    }
}

fn hermitian_part(m: &Operator) -> Operator {
    (m + m.adjoint()).scale(0.5)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// Heuristic dimension `ceil(|alpha|^2 + 8|alpha| + 12)`.
pub fn truncation_dimension(alpha: Complex64) -> usize {
    let a = alpha.norm();
    (a * a + 8.0 * a + 12.0).ceil() as usize
}

/// Poisson mass of level `n` and above for mean `|alpha|^2`.
pub fn coherent_tail_mass(alpha: Complex64, n: usize) -> f64 {
    let lam = alpha.norm_sqr();
    if lam == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    // log p_n = -lam + n ln lam - ln n!
    let mut log_p = -lam;
    for j in 1..=n {
        log_p += lam.ln() - (j as f64).ln();
    }
    let mut p = log_p.exp();
    let mut sum = 0.0;
    let mut j = n;
    loop {
        sum += p;
        j += 1;
        p *= lam / j as f64;
        if p < 1e-18 * sum.max(1e-300) && j as f64 > lam {
            break;
        }
    }
    sum
}

/// Smallest `D` with coherent tail mass below [`TAIL_MASS`].
pub fn minimal_truncation_dimension(alpha: Complex64) -> usize {
    let mut d = 1;
    while coherent_tail_mass(alpha, d) >= TAIL_MASS {
        d += 1;
    }
    d
}

/// First `dim` Fock amplitudes of `|alpha>`, not renormalized.
pub fn coherent_amplitudes(alpha: Complex64, dim: usize) -> DVector<Complex64> {
    let mut amps = DVector::zeros(dim);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        amps[n] = c;
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    amps
}

/// `|alpha>` truncated to `dim` levels and renormalized.
pub fn coherent_state(alpha: Complex64, dim: usize) -> Result<StateVector> {
    if dim == 0 {
        return Err(Error::TruncationTooSmall { dim, norm: 0.0 });
    }
    let amps = coherent_amplitudes(alpha, dim);
    let norm = amps.norm();
    if norm * norm < MIN_RETAINED_NORM {
        return Err(Error::TruncationTooSmall { dim, norm: norm * norm });
    }
    Ok(StateVector { amps: amps.unscale(norm) })
}

/// Analytic `<alpha|beta> = exp(-|alpha|^2/2 - |beta|^2/2 + conj(alpha) beta)`.
pub fn coherent_overlap(alpha: Complex64, beta: Complex64) -> Complex64 {
    (-0.5 * alpha.norm_sqr() - 0.5 * beta.norm_sqr() + alpha.conj() * beta).exp()
}

pub fn annihilation(dim: usize) -> Operator {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn creation(dim: usize) -> Operator {
    annihilation(dim).adjoint()
}

pub fn number(dim: usize) -> Operator {
    DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| Complex64::new(n as f64, 0.0)))
}

/// `exp(i pi n) = sum (-1)^n |n><n|`.
pub fn parity(dim: usize) -> Operator {
    DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| {
        Complex64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
    }))
}

/// `F = Re <psi|rho|psi>`, clamped to `[0, 1]`.
pub fn fidelity(psi: &StateVector, rho: &DensityMatrix) -> Result<f64> {
    let f = rho.expectation(psi)?.re;
    if !(-1e-9..=1.0 + 1e-9).contains(&f) {
        return Err(Error::invalid("fidelity", format!("value {f} outside [0, 1]")));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// `(1/2) ||rho - sigma||_1`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dim(rho.dim(), sigma.dim())?;
    let diff = hermitian_part(&(&rho.m - &sigma.m));
    Ok(0.5 * diff.symmetric_eigenvalues().iter().map(|v| v.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_and_self_overlap() {
        let v = coherent_state(c(0.0, 0.0), 8).unwrap();
        assert_eq!(v, StateVector::vacuum(8));
        let a = coherent_state(c(1.3, -0.7), 40).unwrap();
        assert!((a.inner(&a).unwrap() - 1.0).norm() < 1e-14);
        assert!((coherent_overlap(c(1.3, -0.7), c(1.3, -0.7)) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn opposite_cat_components_overlap() {
        let d = truncation_dimension(c(3.0, 0.0));
        let p = coherent_state(c(3.0, 0.0), d).unwrap();
        let m = coherent_state(c(-3.0, 0.0), d).unwrap();
        let fock = p.inner(&m).unwrap();
        let analytic = coherent_overlap(c(3.0, 0.0), c(-3.0, 0.0));
        assert!((analytic.re - (-18.0f64).exp()).abs() < 1e-22);
        assert!((fock - analytic).norm() < 1e-10);
    }

    #[test]
    fn truncation_rules() {
        assert_eq!(truncation_dimension(c(3.0, 0.0)), 45);
        assert!(truncation_dimension(c(0.0, 0.0)) <= 12);
        assert!(minimal_truncation_dimension(c(3.0, 0.0)) <= 45);
        for i in 0..=50 {
            let a = c(0.1 * i as f64, 0.0);
            assert!(truncation_dimension(a) >= minimal_truncation_dimension(a), "alpha = {a}");
        }
        // Independent tail: one minus the retained Poisson sum.
        let lam: f64 = 9.0;
        let mut p = (-lam).exp();
        let mut head = 0.0;
        for n in 0..20 {
            head += p;
            p *= lam / (n + 1) as f64;
        }
        assert!((coherent_tail_mass(c(3.0, 0.0), 20) - (1.0 - head)).abs() < 1e-14);
        assert!(matches!(coherent_state(c(3.0, 0.0), 10), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn ladder_operators() {
        let d = 12;
        let a = annihilation(d);
        let v = StateVector::vacuum(d).apply(&a).unwrap();
        assert!(v.norm() == 0.0);
        let comm = &a * creation(d) - creation(d) * &a;
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((comm[(i, j)] - want).norm() < 1e-14);
            }
        }
        assert!((creation(d) * &a - number(d)).norm() < 1e-13);
        let p = parity(d);
        assert_eq!(&p * &p, Operator::identity(d, d));
    }

    #[test]
    fn parity_flips_coherent_sign() {
        let d = 64;
        let a = coherent_state(c(3.0, 0.0), d).unwrap();
        let pa = a.apply(&parity(d)).unwrap();
        let m = coherent_state(c(-3.0, 0.0), d).unwrap();
        assert!((pa.amplitudes() - m.amplitudes()).norm() < 1e-8);
    }

    #[test]
    fn fidelity_cases() {
        let d = 45;
        let a = coherent_state(c(3.0, 0.0), d).unwrap();
        assert!((fidelity(&a, &DensityMatrix::from_pure(&a)).unwrap() - 1.0).abs() < 1e-14);
        let one = StateVector::fock(1, d).unwrap();
        assert_eq!(fidelity(&one, &DensityMatrix::from_pure(&StateVector::vacuum(d))).unwrap(), 0.0);
        // Even cat against vacuum: 4 N+^2 e^{-9}, N+ = 1/sqrt(2(1+e^{-18})).
        let cat = a.add(&coherent_state(c(-3.0, 0.0), d).unwrap()).unwrap().normalized().0;
        let n_plus_sq = 1.0 / (2.0 * (1.0 + (-18.0f64).exp()));
        let f = fidelity(&cat, &DensityMatrix::from_pure(&StateVector::vacuum(d))).unwrap();
        assert!((f - 4.0 * n_plus_sq * (-9.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn density_validation_and_trace_distance() {
        let d = 6;
        let a = DensityMatrix::from_pure(&StateVector::fock(1, d).unwrap());
        let b = DensityMatrix::from_pure(&StateVector::fock(2, d).unwrap());
        assert!(a.validate().is_ok());
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
        let mut bad = a.matrix().clone();
        bad[(0, 0)] = c(-0.5, 0.0);
        bad[(1, 1)] = c(1.5, 0.0);
        assert!(DensityMatrix::new(bad).is_err());
    }

    proptest! {
        #[test]
        fn fock_overlap_matches_analytic(ar in -4.0f64..4.0, ai in -4.0f64..4.0, br in -4.0f64..4.0, bi in -4.0f64..4.0) {
            let (a, b) = (c(ar, ai), c(br, bi));
            prop_assume!(a.norm() <= 4.0 && b.norm() <= 4.0);
            let d = truncation_dimension(c(4.0, 0.0));
            let fa = coherent_state(a, d).unwrap();
            let fb = coherent_state(b, d).unwrap();
            prop_assert!((fa.inner(&fb).unwrap() - coherent_overlap(a, b)).norm() < 1e-10);
        }
    }
}
