use std::f64::consts::TAU;

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomFamily {
    ComplexGaussian,
    RealGaussian,
    Custom,
}

/// Law of the diagonal entries `x_ii` (masked by independent Bernoulli(p_n)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagLaw {
    #[default]
    Zero,
    StandardGaussian,
    SameAsOffdiag,
}

/// Covariance of the real vector `(Re xi_1, Im xi_1, Re xi_2, Im xi_2)`.
pub type Covariance4 = [[f64; 4]; 4];

/// Atom variable `(xi_1, xi_2)` feeding mirrored off-diagonal entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub family: AtomFamily,
    pub rho1: f64,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<Covariance4>,
    #[serde(default)]
    pub diag_law: DiagLaw,
}

impl AtomSpec {
    pub fn new(family: AtomFamily, rho1: f64, theta: f64) -> Self {
        Self { family, rho1, theta, cov: None, diag_law: DiagLaw::Zero }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rho1) {
            return Err(Error::InvalidConfig(format!("rho1 = {} outside [0, 1)", self.rho1)));
        }
        if !(0.0..TAU).contains(&self.theta) {
            return Err(Error::InvalidConfig(format!("theta = {} outside [0, 2pi)", self.theta)));
        }
        atom_covariance(self).map(|_| ())
    }

    pub fn mixed_moment(&self) -> Complex64 {
        Complex64::from_polar(self.rho1, self.theta)
    }
}

const RELATION_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Real covariance of the unrotated atom. The sampler multiplies both
/// coordinates by `e^{i theta/2}` afterwards.
pub fn atom_covariance(spec: &AtomSpec) -> Result<Covariance4> {
    let r = spec.rho1;
    let cov = match (&spec.cov, spec.family) {
        (Some(c), _) => *c,
        (None, AtomFamily::ComplexGaussian) => [
            [0.5, 0.0, r / 2.0, 0.0],
            [0.0, 0.5, 0.0, -r / 2.0],
            [r / 2.0, 0.0, 0.5, 0.0],
            [0.0, -r / 2.0, 0.0, 0.5],
        ],
        (None, AtomFamily::RealGaussian) => [
            [1.0, 0.0, r, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [r, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ],
        (None, AtomFamily::Custom) => {
            return Err(Error::InvalidCovariance("custom family requires `cov`".into()));
        }
    };
    check_covariance(&cov, r)?;
    Ok(cov)
}

fn check_covariance(c: &Covariance4, rho1: f64) -> Result<()> {
    for i in 0..4 {
        for j in 0..4 {
            if !c[i][j].is_finite() {
                return Err(Error::InvalidCovariance("non-finite entry".into()));
            }
            if (c[i][j] - c[j][i]).abs() > RELATION_TOL {
                return Err(Error::InvalidCovariance(format!("not symmetric at ({i}, {j})")));
            }
        }
    }
    let checks = [
        (c[0][0] + c[1][1] - 1.0, "c11 + c22 = 1"),
        (c[2][2] + c[3][3] - 1.0, "c33 + c44 = 1"),
        (c[0][2] - c[1][3] - rho1, "c13 - c24 = rho1"),
        (c[0][3] + c[1][2], "c14 + c23 = 0"),
    ];
    for (defect, relation) in checks {
        if defect.abs() > RELATION_TOL {
            return Err(Error::InvalidCovariance(format!("{relation} fails by {defect:e}")));
        }
    }
    let min_eig = covariance_eigenvalues(c)?.into_iter().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOL {
        return Err(Error::InvalidCovariance(format!("not PSD (eigenvalue {min_eig:e})")));
    }
    Ok(())
}

fn as_mat(c: &Covariance4) -> Mat<f64> {
    Mat::from_fn(4, 4, |i, j| c[i][j])
}

pub fn covariance_eigenvalues(c: &Covariance4) -> Result<Vec<f64>> {
    as_mat(c)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence { routine: "covariance eigendecomposition" })
}

/// Draws atom pairs with a square-root factor of the covariance, then rotates.
#[derive(Debug, Clone)]
pub struct AtomSampler {
    factor: [[f64; 4]; 4],
    rotation: Complex64,
}

impl AtomSampler {
    pub fn new(spec: &AtomSpec) -> Result<Self> {
        let cov = atom_covariance(spec)?;
        let evd = as_mat(&cov)
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::NoConvergence { routine: "covariance eigendecomposition" })?;
        let u = evd.U();
        let s = evd.S().column_vector();
        let mut factor = [[0.0; 4]; 4];
        for (i, row) in factor.iter_mut().enumerate() {
            for (k, f) in row.iter_mut().enumerate() {
                *f = u[(i, k)] * s[k].max(0.0).sqrt();
            }
        }
        Ok(Self { factor, rotation: Complex64::from_polar(1.0, spec.theta / 2.0) })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Complex64, Complex64) {
        let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let v: [f64; 4] = std::array::from_fn(|i| (0..4).map(|k| self.factor[i][k] * g[k]).sum());
        (
            Complex64::new(v[0], v[1]) * self.rotation,
            Complex64::new(v[2], v[3]) * self.rotation,
        )
    }

    /// One coordinate of the atom, for `DiagLaw::SameAsOffdiag`.
    pub fn sample_first<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        self.sample(rng).0
    }
}

/// Convenience wrapper building a sampler for a single draw.
pub fn sample_atom_pair<R: Rng + ?Sized>(spec: &AtomSpec, rng: &mut R) -> Result<(Complex64, Complex64)> {
    Ok(AtomSampler::new(spec)?.sample(rng))
}
