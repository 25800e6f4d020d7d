//! Sparse elliptic random matrices and the elliptic law.
//!
//! The crate is organised around the pipeline used to study the spectra of
//! normalized sparse elliptic matrices `M_n = (n p_n)^{-1/2} (X_n + F_n)`:
//!
//! * [`ensemble`] builds `X_n`, the perturbation `F_n`, `M_n` and the
//!   truncated/centered/rescaled comparison matrix.
//! * [`spectral`] computes eigenvalues, singular values, Hermitizations,
//!   empirical measures and empirical logarithmic potentials.
//! * [`law`] describes the limiting uniform law on a rotated ellipse.
//! * [`stieltjes`] solves the 2x2 self-consistent resolvent equation and
//!   recovers the singular value laws `nu_z` from it.
//! * [`stats`] holds the comparison metrics (Lévy, KS, containment, moments).

pub mod ensemble;
pub mod error;
pub mod io;
pub mod law;
pub mod quadrature;
pub mod rng;
pub mod sparse;
pub mod spectral;
pub mod stats;
pub mod stieltjes;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use ensemble::{
    AtomFamily, AtomSpec, BernoulliPairPmf, DiagLaw, EnsembleConfig, PerturbationSpec, Schedule,
    SparsitySpec,
};
pub use law::EllipticLawParams;
pub use sparse::TripletMatrix;
pub use spectral::{EmpiricalMeasure, SpectralSample};
pub use stats::MetricsReport;
pub use stieltjes::{QMatrix, StieltjesState};

/// Dense complex matrix type used throughout the crate.
pub type DenseMatrix = faer::Mat<Complex64>;
