use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::atom::{AtomSampler, DiagLaw};
use super::bernoulli::sample_bernoulli_pair;
use super::config::EnsembleConfig;
use super::perturbation::{check_perturbation, perturbation_matrix};
use crate::rng::stream;
use crate::{DenseMatrix, Result, TripletMatrix};

/// Draws `X_n = (delta_ij x_ij)` for the configured law.
///
/// Pairs `i < j` are visited in row-major order; each visit draws one mask pair
/// and, when at least one mask is set, one atom pair. The diagonal follows.
/// The output is a pure function of `config`.
pub fn generate_sparse_elliptic(config: &EnsembleConfig) -> Result<TripletMatrix> {
    let n = config.n;
    let pmf = config.sparsity.pmf(n)?;
    let sampler = AtomSampler::new(&config.atom)?;
    let mut rng = stream(config.seed);

    let expected = (n as f64 * n as f64 * pmf.p() * 1.05) as usize + 16;
    let mut x = TripletMatrix::with_capacity(n, expected);
    for i in 0..n {
        for j in i + 1..n {
            let (upper, lower) = sample_bernoulli_pair(&pmf, &mut rng);
            if !(upper || lower) {
                continue;
            }
            let (xi1, xi2) = sampler.sample(&mut rng);
            if upper {
                x.push(i, j, xi1);
            }
            if lower {
                x.push(j, i, xi2);
            }
        }
    }

    let p = pmf.p();
    match config.atom.diag_law {
        DiagLaw::Zero => {}
        law => {
            for i in 0..n {
                if rng.random::<f64>() >= p {
                    continue;
                }
                let v = match law {
                    DiagLaw::StandardGaussian => Complex64::new(rng.sample(StandardNormal), 0.0),
                    DiagLaw::SameAsOffdiag => sampler.sample_first(&mut rng),
                    DiagLaw::Zero => unreachable!(),
                };
                x.push(i, i, v);
            }
        }
    }
    Ok(x)
}

/// `X_n + F_n` without normalization (the supersparse presets plot this).
pub fn build_unnormalized(config: &EnsembleConfig) -> Result<DenseMatrix> {
    assemble_matrix(config, &generate_sparse_elliptic(config)?, false)
}

/// `M_n = (n p_n)^{-1/2} (X_n + F_n)`.
pub fn build_normalized(config: &EnsembleConfig) -> Result<DenseMatrix> {
    assemble_matrix(config, &generate_sparse_elliptic(config)?, true)
}

/// Adds the perturbation of `config` to an already drawn `x` and optionally
/// applies the `(n p_n)^{-1/2}` normalization.
pub fn assemble_matrix(config: &EnsembleConfig, x: &TripletMatrix, normalize: bool) -> Result<DenseMatrix> {
    let mut m = x.to_dense();
    if normalize {
        check_perturbation(&config.perturbation, config.n, config.resolved().p_n)?;
    }
    if let Some(f) = perturbation_matrix(&config.perturbation, config.n)? {
        m += &f;
    }
    if normalize {
        let scale = 1.0 / (config.n as f64 * config.resolved().p_n).sqrt();
        scale_in_place(&mut m, scale);
    }
    Ok(m)
}

/// `(n p_n)^{-1/2} X` for an explicit triplet matrix.
pub fn normalize_triplets(x: &TripletMatrix, p_n: f64) -> DenseMatrix {
    let mut m = x.to_dense();
    scale_in_place(&mut m, 1.0 / (x.dim() as f64 * p_n).sqrt());
    m
}

fn scale_in_place(m: &mut DenseMatrix, scale: f64) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] *= scale;
        }
    }
}
