//! Graphene surface plasmon polaritons from the sheet conductivity up to
//! cat-code protected quantum state transfer.
//!
//! The crate is organised by stage of the chain:
//!
//! - [`material`]: sheet conductivity (finite-temperature and low-temperature forms)
//! - [`dispersion`]: TM/TE surface-wave wavenumbers, decay constants, group velocity
//! - [`quantize`]: mode functions and the Hamiltonian normalisation length
//! - [`prism`]: attenuated-total-reflection (Otto) coupling, reflectance and overlap
//! - [`qstate`]: truncated Fock-space states, operators and fidelity
//! - [`coupling`]: photon to plasmon beamsplitter acting on coherent mixtures
//! - [`channel`]: lossy propagation, analytic and Kraus-sum
//! - [`qec`]: parity-check protected propagation via quantum-jump Monte Carlo
//!
//! All computation is in SI units; chemical potentials are given in eV.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod constants;
pub mod coupling;
pub mod dispersion;
pub mod error;
pub mod material;
pub mod prism;
pub mod qec;
pub mod qstate;
pub mod quadrature;
pub mod quantize;

pub use error::{Error, Result};
pub use material::{Conductivity, ConductivityModel, GrapheneParams};
pub use num_complex::Complex64;

/// Field polarization of a surface or incident wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    TM,
    TE,
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Polarization::TM => "TM",
            Polarization::TE => "TE",
        })
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TM" => Ok(Polarization::TM),
            "TE" => Ok(Polarization::TE),
            _ => Err(Error::invalid("polarization", format!("expected TM or TE, got `{s}`"))),
        }
    }
}
