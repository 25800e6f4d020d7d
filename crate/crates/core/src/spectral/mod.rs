//! Eigenvalues, singular values, Hermitization and empirical measures.
//!
//! Dense decompositions are delegated to `faer`; its complex eigensolver runs a
//! Hessenberg reduction followed by shifted QR with deflation. The tests in
//! this module check the backward-error contract (trace identity, Schur
//! inequality, Frobenius identity) rather than the algorithm.

mod matching;
mod measure;

pub use matching::{bottleneck_distance, multisets_match};
pub use measure::EmpiricalMeasure;

use faer::Side;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{DenseMatrix, Error, Result};

fn check_square_finite(a: &DenseMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument(format!("matrix is {}x{}, not square", a.nrows(), a.ncols())));
    }
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite entry at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Eigenvalues with algebraic multiplicity, in no particular order.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<Complex64>> {
    check_square_finite(a)?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.eigenvalues().map_err(|_| Error::NoConvergence { routine: "eigenvalues" })
}

/// Singular values in nonincreasing order.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    check_square_finite(a)?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut s = a.singular_values().map_err(|_| Error::NoConvergence { routine: "singular values" })?;
    // faer already sorts; keep the contract explicit
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Eigenvalues of a Hermitian matrix in nondecreasing order.
pub fn hermitian_eigenvalues(h: &DenseMatrix) -> Result<Vec<f64>> {
    check_square_finite(h)?;
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence { routine: "hermitian eigenvalues" })
}

/// `A - z I`.
pub fn shift(a: &DenseMatrix, z: Complex64) -> DenseMatrix {
    let mut out = a.clone();
    for i in 0..a.nrows().min(a.ncols()) {
        out[(i, i)] -= z;
    }
    out
}

/// `[[0, A], [A*, 0]]`.
pub fn hermitize(a: &DenseMatrix) -> DenseMatrix {
    let n = a.nrows();
    let mut h = DenseMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            h[(i, n + j)] = a[(i, j)];
            h[(n + j, i)] = a[(i, j)].conj();
        }
    }
    h
}

pub fn trace(a: &DenseMatrix) -> Complex64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn frobenius_norm_sqr(a: &DenseMatrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc
}

pub fn max_abs_entry(a: &DenseMatrix) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// `-(1/n) sum_i log sigma_i(A - z I)`.
pub fn log_potential_empirical(a: &DenseMatrix, z: Complex64) -> Result<f64> {
    log_potential_from_singular_values(&singular_values(&shift(a, z))?, max_abs_entry(a))
}

/// Same as [`log_potential_empirical`] for precomputed singular values of `A - zI`.
pub fn log_potential_from_singular_values(sigma: &[f64], scale: f64) -> Result<f64> {
    let smallest = sigma.last().copied().ok_or(Error::EmptySample)?;
    let floor = 1e-14 * scale.max(sigma[0]);
    if smallest <= floor {
        return Err(Error::SingularShift { sigma_min: smallest });
    }
    Ok(-sigma.iter().map(|s| s.ln()).sum::<f64>() / sigma.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedSingularValues {
    pub z: Complex64,
    pub values: Vec<f64>,
}

/// Spectrum of one realized matrix together with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub n: usize,
    pub eigenvalues: Vec<Complex64>,
    pub singular_values: Vec<ShiftedSingularValues>,
    pub config_hash: String,
    pub seed: u64,
}

impl SpectralSample {
    pub fn compute(a: &DenseMatrix, shifts: &[Complex64], config_hash: String, seed: u64) -> Result<Self> {
        let eigenvalues = eigenvalues(a)?;
        let singular_values = shifts
            .iter()
            .map(|&z| Ok(ShiftedSingularValues { z, values: singular_values(&shift(a, z))? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n: a.nrows(), eigenvalues, singular_values, config_hash, seed })
    }

    pub fn singular_values_at(&self, z: Complex64) -> Option<&[f64]> {
        self.singular_values.iter().find(|s| s.z == z).map(|s| s.values.as_slice())
    }

    /// `(1/n) sum_i lambda_i^2`.
    pub fn second_moment(&self) -> Complex64 {
        self.eigenvalues.iter().map(|l| l * l).sum::<Complex64>() / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use faer::Mat;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = stream(seed);
        Mat::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
    }

    fn sorted_by_re_im(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn diagonal_and_rotation_spectra() {
        let d = Mat::from_fn(3, 3, |i, j| if i == j { c(i as f64 + 1.0, 0.0) } else { c(0.0, 0.0) });
        let ev = eigenvalues(&d).unwrap();
        assert!(multisets_match(&ev, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], 1e-12));
        let r = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(1.0, 0.0),
            (1, 0) => c(-1.0, 0.0),
            _ => c(0.0, 0.0),
        });
        let ev = sorted_by_re_im(eigenvalues(&r).unwrap());
        assert!(multisets_match(&ev, &[c(0.0, 1.0), c(0.0, -1.0)], 1e-12));
    }

    #[test]
    fn trace_identity_and_schur_inequality() {
        for seed in 0..5 {
            let a = random_matrix(50, seed);
            let ev = eigenvalues(&a).unwrap();
            let sum: Complex64 = ev.iter().sum();
            assert!((sum - trace(&a)).norm() <= 1e-8 * 50.0 * max_abs_entry(&a));
            let sq: f64 = ev.iter().map(|l| l.norm_sqr()).sum();
            assert!(sq <= frobenius_norm_sqr(&a) + 1e-8);
        }
    }

    #[test]
    fn singular_value_identities() {
        let d = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(3.0, 0.0),
            (1, 1) => c(-4.0, 0.0),
            _ => c(0.0, 0.0),
        });
        let s = singular_values(&d).unwrap();
        assert!((s[0] - 4.0).abs() < 1e-14 && (s[1] - 3.0).abs() < 1e-14);

        // unitary from a QR factorization
        let q = random_matrix(10, 3).qr().compute_Q();
        assert!(singular_values(&q).unwrap().iter().all(|s| (s - 1.0).abs() < 1e-12));

        let a = random_matrix(50, 4);
        let s = singular_values(&a).unwrap();
        let hs = frobenius_norm_sqr(&a);
        assert!((s.iter().map(|x| x * x).sum::<f64>() - hs).abs() <= 1e-8 * hs);
        assert!(s.windows(2).all(|w| w[0] >= w[1]) && *s.last().unwrap() >= 0.0);
    }

    #[test]
    fn shift_basics() {
        let zero = DenseMatrix::zeros(3, 3);
        let s = shift(&zero, c(1.0, 0.0));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s[(i, j)], if i == j { c(-1.0, 0.0) } else { c(0.0, 0.0) });
            }
        }
        let a = random_matrix(4, 5);
        assert_eq!(shift(&a, c(0.0, 0.0)), a);
        let id = Mat::from_fn(4, 4, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(singular_values(&shift(&id, c(1.0, 0.0))).unwrap()[3] == 0.0);
    }

    #[test]
    fn hermitization_spectrum_is_plus_minus_singular_values() {
        let one = Mat::from_fn(1, 1, |_, _| c(1.0, 0.0));
        let h = hermitize(&one);
        assert_eq!(h[(0, 1)], c(1.0, 0.0));
        assert_eq!(h[(1, 0)], c(1.0, 0.0));
        let ev = hermitian_eigenvalues(&h).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);

        let a = random_matrix(30, 6);
        let h = hermitize(&a);
        assert_eq!(trace(&h), c(0.0, 0.0));
        let ev = hermitian_eigenvalues(&h).unwrap();
        let s = singular_values(&a).unwrap();
        let mut pm: Vec<f64> = s.iter().flat_map(|&x| [x, -x]).collect();
        pm.sort_by(f64::total_cmp);
        let tol = 1e-8 * s[0];
        assert!(ev.iter().zip(&pm).all(|(x, y)| (x - y).abs() <= tol));
    }

    #[test]
    fn empirical_log_potential() {
        let zero = DenseMatrix::zeros(1, 1);
        assert!((log_potential_empirical(&zero, c(2.0, 0.0)).unwrap() + 2f64.ln()).abs() < 1e-15);
        assert!(matches!(log_potential_empirical(&zero, c(0.0, 0.0)), Err(Error::SingularShift { .. })));

        // Ginibre-type matrix with unit-variance complex entries, scaled by n^{-1/2}
        let n = 1000;
        let mut rng = stream(8);
        let scale = 1.0 / (2.0 * n as f64).sqrt();
        let a: DenseMatrix = Mat::from_fn(n, n, |_, _| {
            c(rng.sample::<f64, _>(StandardNormal) * scale, rng.sample::<f64, _>(StandardNormal) * scale)
        });
        let u0 = log_potential_empirical(&a, c(0.0, 0.0)).unwrap();
        assert!((u0 - 0.5).abs() < 0.05, "{u0}");
        let far = log_potential_empirical(&a, c(0.0, 100.0)).unwrap();
        assert!((far + 100f64.ln()).abs() < 0.02, "{far}");
    }

    #[test]
    fn permutation_similarity_preserves_spectrum() {
        let mut rng = stream(9);
        for seed in 0..3 {
            let a = random_matrix(25, 100 + seed);
            let mut perm: Vec<usize> = (0..25).collect();
            perm.shuffle(&mut rng);
            let b = Mat::from_fn(25, 25, |i, j| a[(perm[i], perm[j])]);
            let ea = eigenvalues(&a).unwrap();
            let eb = eigenvalues(&b).unwrap();
            let tol = 1e-8 * singular_values(&a).unwrap()[0];
            assert!(multisets_match(&ea, &eb, tol), "bottleneck {}", bottleneck_distance(&ea, &eb));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn singular_values_are_lipschitz_in_the_shift(seed in 0u64..1000, re in -1.0f64..1.0, im in -1.0f64..1.0,
                                                      dre in -0.1f64..0.1, dim in -0.1f64..0.1) {
            let a = random_matrix(12, seed);
            let z = c(re, im);
            let d = c(dre, dim);
            let s1 = singular_values(&shift(&a, z)).unwrap();
            let s2 = singular_values(&shift(&a, z + d)).unwrap();
            for (x, y) in s1.iter().zip(&s2) {
                prop_assert!((x - y).abs() <= d.norm() + 1e-12);
            }
        }
    }
}
