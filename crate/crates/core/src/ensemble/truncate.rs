use num_complex::Complex64;

use super::atom::{AtomSampler, AtomSpec};
use super::config::EnsembleConfig;
use crate::rng::auxiliary_stream;
use crate::{Result, TripletMatrix};

pub const DEFAULT_AUXILIARY_DRAWS: usize = 1_000_000;
const TRUNCATION_SALT: u64 = 0x7472_756e_6361_7465;

/// Moments of the truncated atom `x 1{|x| <= threshold}`, separately for the
/// upper (`xi_1`, `i < j`) and lower (`xi_2`, `i > j`) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationMoments {
    pub threshold: f64,
    pub mean_upper: Complex64,
    pub mean_lower: Complex64,
    pub second_upper: f64,
    pub second_lower: f64,
}

/// Truncation level `(n p_n)^{1/4}`.
pub fn truncation_threshold(n: usize, p_n: f64) -> f64 {
    (n as f64 * p_n).powf(0.25)
}

/// Monte Carlo estimate of the truncated moments.
///
/// Draws come in antithetic pairs `(xi, -xi)`. Every supported atom law is
/// centrally symmetric, so the mean estimator vanishes identically while the
/// second-moment estimator is unaffected.
pub fn estimate_truncation_moments(
    atom: &AtomSpec,
    threshold: f64,
    draws: usize,
    seed: u64,
) -> Result<TruncationMoments> {
    let sampler = AtomSampler::new(atom)?;
    let mut rng = auxiliary_stream(seed, TRUNCATION_SALT);
    let pairs = draws.div_ceil(2).max(1);
    let zero = Complex64::new(0.0, 0.0);
    let (mut m1, mut m2) = (zero, zero);
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..pairs {
        let (a, b) = sampler.sample(&mut rng);
        for sign in [1.0, -1.0] {
            let (a, b) = (a * sign, b * sign);
            if a.norm() <= threshold {
                m1 += a;
                s1 += a.norm_sqr();
            }
            if b.norm() <= threshold {
                m2 += b;
                s2 += b.norm_sqr();
            }
        }
    }
    let total = (2 * pairs) as f64;
    Ok(TruncationMoments {
        threshold,
        mean_upper: m1 / total,
        mean_lower: m2 / total,
        second_upper: s1 / total,
        second_lower: s2 / total,
    })
}

/// Truncated, centered and rescaled copy of `x` with zero diagonal.
///
/// Off-diagonal entries become `s (x_ij 1{|x_ij| <= T} - p_n m)` with `m` the
/// truncated atom mean and `s` chosen so that the entry variance is `p_n`.
/// A nonzero truncated mean fills every off-diagonal position.
pub fn truncate_center_rescale(x: &TripletMatrix, p_n: f64, moments: &TruncationMoments) -> TripletMatrix {
    let n = x.dim();
    let t = moments.threshold;
    let shift_upper = moments.mean_upper * p_n;
    let shift_lower = moments.mean_lower * p_n;
    let var_upper = p_n * moments.second_upper - shift_upper.norm_sqr();
    let var_lower = p_n * moments.second_lower - shift_lower.norm_sqr();
    let scale_upper = (p_n / var_upper).sqrt();
    let scale_lower = (p_n / var_lower).sqrt();
    let transform = |i: usize, j: usize, v: Complex64| {
        let kept = if v.norm() <= t { v } else { Complex64::new(0.0, 0.0) };
        if i < j {
            (kept - shift_upper) * scale_upper
        } else {
            (kept - shift_lower) * scale_lower
        }
    };

    let zero = Complex64::new(0.0, 0.0);
    if shift_upper == zero && shift_lower == zero {
        let mut out = TripletMatrix::with_capacity(n, x.nnz());
        for &(i, j, v) in x.entries() {
            if i == j {
                continue;
            }
            let w = transform(i, j, v);
            if w != zero {
                out.push(i, j, w);
            }
        }
        return out;
    }

    let stored = x.to_map();
    let mut out = TripletMatrix::with_capacity(n, n * n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = stored.get(&(i, j)).copied().unwrap_or(zero);
                out.push(i, j, transform(i, j, v));
            }
        }
    }
    out
}

/// Truncates `x` drawn from `config`, estimating the moments from
/// [`DEFAULT_AUXILIARY_DRAWS`] auxiliary draws.
pub fn truncate_for_config(config: &EnsembleConfig, x: &TripletMatrix) -> Result<TripletMatrix> {
    let p_n = config.resolved().p_n;
    let t = truncation_threshold(config.n, p_n);
    let moments = estimate_truncation_moments(&config.atom, t, DEFAULT_AUXILIARY_DRAWS, config.seed)?;
    Ok(truncate_center_rescale(x, p_n, &moments))
}
