//! Distances between measures, containment, moment estimators and singular
//! value extremes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::law::{signed_margin_inflated, EllipticLawParams};
use crate::spectral::{singular_values, shift, EmpiricalMeasure};
use crate::{DenseMatrix, Result, TripletMatrix};

/// Tooling constant of the intermediate singular value profile.
pub const PROFILE_C0: f64 = 0.01;

/// `max_k [G(g_k) - F(g_k + eps)]` over the atoms `g_k` of `G`, clamped at 0.
fn band_excess(f: &EmpiricalMeasure, g: &EmpiricalMeasure, eps: f64) -> f64 {
    let gs = g.samples();
    let mut worst: f64 = 0.0;
    let mut k = 0;
    while k < gs.len() {
        // last index of the run of ties at gs[k]
        let mut end = k;
        while end + 1 < gs.len() && gs[end + 1] == gs[k] {
            end += 1;
        }
        let g_val = (end + 1) as f64 * g.weight();
        worst = worst.max(g_val - f.cdf(gs[k] + eps));
        k = end + 1;
    }
    worst
}

/// Smallest `eps` with `G(x) <= F(x + eps) + eps` for all `x`.
fn one_sided_levy(f: &EmpiricalMeasure, g: &EmpiricalMeasure) -> f64 {
    let holds = |eps: f64| band_excess(f, g, eps) <= eps;
    if holds(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // the infimum is either a level of the excess or a jump of F; snap to the level
    let level = band_excess(f, g, hi);
    if level > lo && holds(level) {
        level
    } else {
        hi
    }
}

/// Lévy distance between two empirical distribution functions.
pub fn levy_distance(f: &EmpiricalMeasure, g: &EmpiricalMeasure) -> f64 {
    one_sided_levy(f, g).max(one_sided_levy(g, f))
}

/// `sup |F_m - G|` evaluated on both sides of every sample point.
pub fn ks_statistic<G: Fn(f64) -> f64>(emp: &EmpiricalMeasure, cdf: G) -> f64 {
    let mut worst: f64 = 0.0;
    let xs = emp.samples();
    let w = emp.weight();
    let mut k = 0;
    while k < xs.len() {
        let x = xs[k];
        let mut end = k;
        while end + 1 < xs.len() && xs[end + 1] == x {
            end += 1;
        }
        let left = k as f64 * w;
        let right = (end + 1) as f64 * w;
        worst = worst.max((right - cdf(x)).abs()).max((left - cdf(x.next_down())).abs());
        k = end + 1;
    }
    worst
}

/// Fraction of `eigs` inside the ellipse scaled by `inflation`.
pub fn containment_fraction(eigs: &[Complex64], params: &EllipticLawParams, inflation: f64) -> f64 {
    if eigs.is_empty() {
        return 0.0;
    }
    let inside = eigs.iter().filter(|&&z| signed_margin_inflated(z, params, inflation) >= 0.0).count();
    inside as f64 / eigs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: Complex64,
    pub standard_error: f64,
}

impl MomentEstimate {
    pub fn within(&self, target: Complex64, standard_errors: f64) -> bool {
        (self.value - target).norm() <= standard_errors * self.standard_error
    }
}

/// `(1/(p_n N)) sum_{i<j} X_ij X_ji` over all `N = n(n-1)/2` mirror pairs,
/// with the standard error of the mean.
pub fn mixed_moment_estimate(x: &TripletMatrix, p_n: f64) -> MomentEstimate {
    let n = x.dim();
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    if pairs == 0.0 {
        return MomentEstimate { value: Complex64::new(0.0, 0.0), standard_error: f64::INFINITY };
    }
    let map = x.to_map();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sum_sq = 0.0;
    let mut upper: Vec<_> = map.iter().filter(|(&(i, j), _)| i < j).map(|(&k, &v)| (k, v)).collect();
    upper.sort_unstable_by_key(|&(k, _)| k);
    for ((i, j), v) in upper {
        if let Some(&w) = map.get(&(j, i)) {
            let y = v * w / p_n;
            sum += y;
            sum_sq += y.norm_sqr();
        }
    }
    let mean = sum / pairs;
    let var = (sum_sq / pairs - mean.norm_sqr()).max(0.0) * pairs / (pairs - 1.0).max(1.0);
    MomentEstimate { value: mean, standard_error: (var / pairs).sqrt() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularExtremes {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `sigma_{n-i} >= c0 i / n` for all `n^{0.8} <= i < n`.
    pub profile_check: bool,
}

/// Extremes and profile of nonincreasing singular values.
pub fn singular_extremes_from_values(sigma: &[f64]) -> SingularExtremes {
    let n = sigma.len();
    let Some((&sigma_max, &sigma_min)) = sigma.first().zip(sigma.last()) else {
        return SingularExtremes { sigma_min: 0.0, sigma_max: 0.0, profile_check: false };
    };
    let start = (n as f64).powf(0.8).ceil() as usize;
    // sigma_{n-i} is sigma[n - i - 1] in 0-based nonincreasing order
    let profile_check = (start.max(1)..n).all(|i| sigma[n - i - 1] >= PROFILE_C0 * i as f64 / n as f64);
    SingularExtremes { sigma_min, sigma_max, profile_check }
}

pub fn singular_extremes_report(m: &DenseMatrix, z: Complex64) -> Result<SingularExtremes> {
    Ok(singular_extremes_from_values(&singular_values(&shift(m, z))?))
}

/// Aggregated verification quantities of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub containment_fraction: f64,
    pub second_moment_emp: Complex64,
    pub mixed_moment_emp: Complex64,
    pub mixed_moment_se: f64,
    pub ks_to_nu_z: Option<f64>,
    pub levy_trunc: Option<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub trial_count: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn measure(v: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::new(v.to_vec()).unwrap()
    }

    /// Direct check of the band condition on a fine grid of candidate `eps`.
    fn levy_bruteforce(f: &EmpiricalMeasure, g: &EmpiricalMeasure) -> f64 {
        let atoms: Vec<f64> = f.samples().iter().chain(g.samples()).copied().collect();
        let ok = |eps: f64| {
            // right values and left limits at every point where a CDF can jump
            atoms.iter().flat_map(|&a| [a, a - eps, a + eps]).all(|x| {
                f.cdf(x - eps) - eps <= g.cdf(x) + 1e-12
                    && g.cdf(x) <= f.cdf(x + eps) + eps + 1e-12
                    && f.cdf_left(x - eps) - eps <= g.cdf_left(x) + 1e-12
                    && g.cdf_left(x) <= f.cdf_left(x + eps) + eps + 1e-12
            })
        };
        let steps = 20_000;
        (0..=steps).map(|k| k as f64 / steps as f64).find(|&e| ok(e)).unwrap_or(1.0)
    }

    #[test]
    fn levy_examples() {
        let a = measure(&[0.1, 0.5, 0.7]);
        assert_eq!(levy_distance(&a, &a), 0.0);
        assert!((levy_distance(&measure(&[0.0]), &measure(&[0.5])) - 0.5).abs() < 1e-15);
        assert!((levy_distance(&measure(&[0.0]), &measure(&[3.0])) - 1.0).abs() < 1e-15);
        assert!((levy_distance(&measure(&[0.0]), &measure(&[0.2])) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn levy_matches_bruteforce() {
        let mut rng = stream(11);
        for _ in 0..20 {
            let f: Vec<f64> = (0..rng.random_range(1..8)).map(|_| rng.random::<f64>()).collect();
            let g: Vec<f64> = (0..rng.random_range(1..8)).map(|_| rng.random::<f64>() * 1.5).collect();
            let (f, g) = (measure(&f), measure(&g));
            let exact = levy_distance(&f, &g);
            let brute = levy_bruteforce(&f, &g);
            assert!(exact <= brute + 1e-12 && brute <= exact + 1e-4 + 1e-12, "{exact} vs {brute}");
        }
    }

    #[test]
    fn ks_examples() {
        let m = measure(&[0.2, 0.4, 0.4, 0.9]);
        assert_eq!(ks_statistic(&m, |x| m.cdf(x)), 0.0);
        let single = measure(&[0.0]);
        let uniform = |x: f64| x.clamp(0.0, 1.0);
        assert!((ks_statistic(&single, uniform) - 1.0).abs() < 1e-15);
        let mut rng = stream(12);
        let draws: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_statistic(&measure(&draws), uniform) <= 0.03);
    }

    #[test]
    fn containment_examples() {
        let law = EllipticLawParams::with_rho(0.25, 0.0).unwrap();
        let eigs = [Complex64::new(1.2, 0.0), Complex64::new(1.3, 0.0), Complex64::new(0.0, 0.0)];
        assert!((containment_fraction(&eigs, &law, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(containment_fraction(&eigs, &law, 10.0), 1.0);
    }

    #[test]
    fn mixed_moment_of_a_fixed_matrix() {
        let mut x = TripletMatrix::new(3);
        x.push(0, 1, Complex64::new(2.0, 0.0));
        x.push(1, 0, Complex64::new(3.0, 0.0));
        x.push(0, 2, Complex64::new(1.0, 0.0));
        let est = mixed_moment_estimate(&x, 0.5);
        // one nonzero product 6 / 0.5 = 12 among three pairs
        assert!((est.value - Complex64::new(4.0, 0.0)).norm() < 1e-14);
        // sample variance 48 over three pairs
        assert!((est.standard_error - 4.0).abs() < 1e-12);
    }

    #[test]
    fn identity_extremes() {
        let id = DenseMatrix::from_fn(5, 5, |i, j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
        let e = singular_extremes_report(&id, Complex64::new(0.0, 0.0)).unwrap();
        assert!((e.sigma_min - 1.0).abs() < 1e-14 && (e.sigma_max - 1.0).abs() < 1e-14);
        assert!(e.profile_check);
        let e = singular_extremes_from_values(&[1.0, 1e-9, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(!e.profile_check);
    }

    fn sample_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![(-20i32..20).prop_map(|k| k as f64 / 10.0), -2.0f64..2.0], 1..12)
    }

    proptest! {
        #[test]
        fn levy_is_a_metric(a in sample_vec(), b in sample_vec(), c in sample_vec()) {
            let (a, b, c) = (measure(&a), measure(&b), measure(&c));
            let ab = levy_distance(&a, &b);
            prop_assert_eq!(ab, levy_distance(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!(ab <= levy_distance(&a, &c) + levy_distance(&c, &b) + 1e-12);
            prop_assert_eq!(levy_distance(&a, &a), 0.0);
        }

        #[test]
        fn levy_zero_on_permuted_samples(mut a in sample_vec(), seed in 0u64..1000) {
            let m = measure(&a);
            use rand::seq::SliceRandom;
            a.shuffle(&mut stream(seed));
            prop_assert_eq!(levy_distance(&m, &measure(&a)), 0.0);
        }
    }
}
