//! Sparse elliptic ensembles.
//!
//! A matrix `X_n` has mirrored entries `(X_ij, X_ji) = (eta_1 xi_1, eta_2 xi_2)`
//! for `i < j`, where the masks `(eta_1, eta_2)` follow [`BernoulliPairPmf`] and
//! the atoms `(xi_1, xi_2)` follow [`AtomSpec`]. Distinct pairs and the diagonal
//! are independent.

mod atom;
mod bernoulli;
mod config;
mod generate;
mod perturbation;
mod truncate;

pub use atom::{
    atom_covariance, covariance_eigenvalues, sample_atom_pair, AtomFamily, AtomSampler, AtomSpec,
    Covariance4, DiagLaw,
};
pub use bernoulli::{bernoulli_pair_pmf, sample_bernoulli_pair, tau_bounds, BernoulliPairPmf};
pub use config::{
    EnsembleConfig, Factor, PerturbationKind, PerturbationSpec, ResolvedSparsity, Schedule, SparsitySpec,
    CONFIG_SCHEMA_VERSION,
};
pub use generate::{assemble_matrix, build_normalized, build_unnormalized, generate_sparse_elliptic, normalize_triplets};
pub use perturbation::{check_perturbation, constant_low_rank, perturbation_matrix};
pub use truncate::{
    estimate_truncation_moments, truncate_center_rescale, truncate_for_config, truncation_threshold,
    TruncationMoments, DEFAULT_AUXILIARY_DRAWS,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn config(n: usize, family: AtomFamily, theta: f64, schedule: Schedule, rho2: f64, seed: u64) -> EnsembleConfig {
        EnsembleConfig::new(n, AtomSpec::new(family, 0.5, theta), SparsitySpec::new(schedule, rho2), seed)
    }

    #[test]
    fn dense_schedule_fills_matrix() {
        let mut c = config(40, AtomFamily::RealGaussian, 0.0, Schedule::Constant { p: 1.0 }, 0.5, 1);
        c.atom.diag_law = DiagLaw::StandardGaussian;
        assert_eq!(generate_sparse_elliptic(&c).unwrap().nnz(), 40 * 40);
        c.atom.diag_law = DiagLaw::Zero;
        assert_eq!(generate_sparse_elliptic(&c).unwrap().nnz(), 40 * 39);
    }

    #[test]
    fn nnz_matches_binomial_count() {
        let c = config(400, AtomFamily::ComplexGaussian, 0.0, Schedule::Power { c: 1.0, gamma: 0.5 }, 0.5, 2);
        let r = c.resolved();
        let x = generate_sparse_elliptic(&c).unwrap();
        let pairs = (400 * 399 / 2) as f64;
        // per pair: eta_1 + eta_2 has variance 2p(1-p) + 2 tau p
        let pair_var = 2.0 * r.p_n * (1.0 - r.p_n) + 2.0 * r.tau_n * r.p_n;
        let mean = 2.0 * pairs * r.p_n;
        let sd = (pairs * pair_var).sqrt();
        assert!((x.nnz() as f64 - mean).abs() < 3.0 * sd, "nnz {} mean {mean} sd {sd}", x.nnz());
    }

    #[test]
    fn mirrored_products_match_sparse_mixed_moment() {
        for (theta, schedule) in [
            (0.0, Schedule::Power { c: 1.0, gamma: 0.5 }),
            (PI / 2.0, Schedule::Ratio { a: 2.0, b: 1.0 }),
        ] {
            let c = config(500, AtomFamily::ComplexGaussian, theta, schedule, 0.5, 3);
            let r = c.resolved();
            let x = generate_sparse_elliptic(&c).unwrap();
            let map = x.to_map();
            let zero = Complex64::new(0.0, 0.0);
            let mut prods = Vec::new();
            for i in 0..c.n {
                for j in i + 1..c.n {
                    let a = map.get(&(i, j)).copied().unwrap_or(zero);
                    let b = map.get(&(j, i)).copied().unwrap_or(zero);
                    prods.push(a * b);
                }
            }
            let m = prods.len() as f64;
            let mean: Complex64 = prods.iter().sum::<Complex64>() / m;
            let var = prods.iter().map(|p| (p - mean).norm_sqr()).sum::<f64>() / (m - 1.0);
            let se = (var / m).sqrt();
            let target = Complex64::from_polar(0.5, theta) * r.p_n * (r.tau_n + r.p_n);
            assert!((mean - target).norm() < 3.0 * se, "{mean} vs {target} (se {se})");
        }
    }

    #[test]
    fn off_diagonal_variance_is_p_n() {
        let c = config(400, AtomFamily::RealGaussian, 0.0, Schedule::Constant { p: 0.3 }, 0.2, 4);
        let x = generate_sparse_elliptic(&c).unwrap();
        let m = (400 * 399) as f64;
        let sum: f64 = x.entries().iter().map(|(_, _, v)| v.norm_sqr()).sum();
        let sq: f64 = x.entries().iter().map(|(_, _, v)| v.norm_sqr().powi(2)).sum();
        let mean = sum / m;
        let se = ((sq / m - mean * mean) / m).sqrt();
        // correlated mirror entries: inflate by sqrt(2) to stay conservative
        assert!((mean - 0.3).abs() < 3.0 * se * 2f64.sqrt(), "{mean} (se {se})");
    }

    #[test]
    fn generation_is_deterministic() {
        let c = config(120, AtomFamily::ComplexGaussian, 1.0, Schedule::Constant { p: 0.2 }, 0.5, 99);
        let a = generate_sparse_elliptic(&c).unwrap();
        let b = generate_sparse_elliptic(&c).unwrap();
        assert_eq!(a, b);
        let other = generate_sparse_elliptic(&c.with_seed(100)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn normalization_scales_entries() {
        let c = config(60, AtomFamily::ComplexGaussian, 0.0, Schedule::Constant { p: 0.5 }, 0.0, 5);
        let x = generate_sparse_elliptic(&c).unwrap().to_dense();
        let m = build_normalized(&c).unwrap();
        let scale = 1.0 / (60.0f64 * 0.5).sqrt();
        for i in 0..60 {
            for j in 0..60 {
                assert_eq!(m[(i, j)], x[(i, j)] * scale);
            }
        }
    }

    #[test]
    fn normalized_hilbert_schmidt_per_row_is_one() {
        let c = config(600, AtomFamily::RealGaussian, 0.0, Schedule::Power { c: 1.0, gamma: 0.5 }, 0.5, 6);
        let m = build_normalized(&c).unwrap();
        let n = 600.0;
        let hs: f64 = (0..600).flat_map(|j| (0..600).map(move |i| (i, j))).map(|(i, j)| m[(i, j)].norm_sqr()).sum();
        let p = c.resolved().p_n;
        // Var|delta x|^2 = 3p - p^2 for real Gaussian atoms; pairs may be correlated
        let entry_var = 3.0 * p - p * p;
        let sd = (2.0 * n * (n - 1.0) * entry_var).sqrt() / (n * n * p);
        assert!((hs / n - (n - 1.0) / n).abs() < 3.0 * sd, "{} sd {sd}", hs / n);
    }

    #[test]
    fn perturbation_rank_cap() {
        let mut c = config(100, AtomFamily::ComplexGaussian, 0.0, Schedule::Constant { p: 0.5 }, 0.0, 7);
        c.perturbation = constant_low_rank(100, 50, Complex64::new(0.01, 0.0));
        assert!(matches!(build_normalized(&c), Err(Error::PerturbationBoundViolated(_))));
        c.perturbation = constant_low_rank(100, 2, Complex64::new(0.5, 0.0));
        let m = build_normalized(&c).unwrap();
        let x = generate_sparse_elliptic(&c).unwrap().to_dense();
        let scale = 1.0 / 50f64.sqrt();
        assert!((m[(3, 4)] - (x[(3, 4)] + 1.0) * scale).norm() < 1e-14);
        // HS bound: ||F||^2 / (n^2 p) = 25 / 0.5
        c.perturbation = constant_low_rank(100, 1, Complex64::new(5.0, 0.0));
        assert!(matches!(build_normalized(&c), Err(Error::PerturbationBoundViolated(_))));
        c.perturbation = PerturbationSpec {
            kind: PerturbationKind::Explicit {
                entries: (0..100).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect(),
            },
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::PerturbationBoundViolated(_))));
    }

    #[test]
    fn config_validation() {
        let c = config(1000, AtomFamily::RealGaussian, 0.0, Schedule::Supersparse { c: 2.0 }, 0.5, 1);
        c.validate().unwrap();
        let c = config(1000, AtomFamily::RealGaussian, 0.0, Schedule::Power { c: 1.0, gamma: 0.9 }, 0.5, 1);
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let c = config(100, AtomFamily::RealGaussian, 0.0, Schedule::Constant { p: 0.2 }, -1.0, 1);
        assert!(matches!(c.validate(), Err(Error::InfeasibleCorrelation { .. })));
    }

    #[test]
    fn config_json_round_trip() {
        let mut c = config(10, AtomFamily::Custom, 0.3, Schedule::Ratio { a: 2.0, b: 1.0 }, 0.5, 12);
        c.atom.cov = Some(atom_covariance(&AtomSpec::new(AtomFamily::ComplexGaussian, 0.3, 0.0)).unwrap());
        c.perturbation = constant_low_rank(10, 1, Complex64::new(0.5, -0.25));
        let text = serde_json::to_string(&c).unwrap();
        let back: EnsembleConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
    }

    #[test]
    fn truncation_is_noop_on_bounded_symmetric_atoms() {
        let mut x = small_matrix();
        x.push(0, 0, Complex64::new(3.0, 0.0));
        let moments = TruncationMoments {
            threshold: 10.0,
            mean_upper: Complex64::new(0.0, 0.0),
            mean_lower: Complex64::new(0.0, 0.0),
            second_upper: 1.0,
            second_lower: 1.0,
        };
        // variance p_n * 1 already equals p_n, so rescaling is the identity
        let out = truncate_center_rescale(&x, 0.5, &moments);
        assert_eq!(out, x.diagonal_zeroed());
    }

    fn small_matrix() -> crate::TripletMatrix {
        let mut t = crate::TripletMatrix::new(3);
        t.push(0, 1, Complex64::new(0.5, 0.5));
        t.push(1, 0, Complex64::new(-1.0, 0.0));
        t.push(2, 1, Complex64::new(0.0, 2.0));
        t
    }

    #[test]
    fn truncation_bounds_and_variance() {
        let c = config(1000, AtomFamily::RealGaussian, 0.0, Schedule::Power { c: 1.0, gamma: 0.5 }, 0.5, 8);
        let x = generate_sparse_elliptic(&c).unwrap();
        let t = truncate_for_config(&c, &x).unwrap();
        let p_n = c.resolved().p_n;
        let bound = 2.0 * truncation_threshold(1000, p_n);
        assert!(t.entries().iter().all(|&(i, j, v)| i != j && v.norm() <= bound));
        let var: f64 = t.entries().iter().map(|(_, _, v)| v.norm_sqr()).sum::<f64>() / (1000.0 * 999.0);
        assert!((var / p_n - 1.0).abs() < 0.05, "variance ratio {}", var / p_n);
    }

    #[test]
    fn truncation_densifies_on_nonzero_mean() {
        let x = small_matrix();
        let moments = TruncationMoments {
            threshold: 1.0,
            mean_upper: Complex64::new(0.1, 0.0),
            mean_lower: Complex64::new(0.0, 0.0),
            second_upper: 0.8,
            second_lower: 0.8,
        };
        let out = truncate_center_rescale(&x, 0.5, &moments);
        assert_eq!(out.nnz(), 6);
        assert!(out.entries().iter().all(|&(i, j, v)| i != j && v.norm() <= 2.0));
    }
}
