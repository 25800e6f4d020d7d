use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Joint law of a mirrored pair of Bernoulli(p) masks `(eta_1, eta_2)` with
/// `cov(eta_1, eta_2) = tau * p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliPairPmf {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl BernoulliPairPmf {
    /// Common marginal `P(eta_1 = 1) = P(eta_2 = 1)`.
    pub fn p(&self) -> f64 {
        self.p11 + self.p10
    }

    /// Recovers `tau = (p11 - p^2) / p`.
    pub fn tau(&self) -> f64 {
        let p = self.p();
        (self.p11 - p * p) / p
    }

    pub fn covariance(&self) -> f64 {
        let p = self.p();
        self.p11 - p * p
    }

    /// Correlation of the two masks; undefined (NaN) when `p = 1`.
    pub fn correlation(&self) -> f64 {
        let p = self.p();
        self.covariance() / (p * (1.0 - p))
    }
}

/// Feasible window for `tau` at marginal `p`: every cell of the pmf is
/// nonnegative iff `max(-p, -(1-p)^2/p) <= tau <= 1 - p`.
pub fn tau_bounds(p: f64) -> (f64, f64) {
    let lower = (-p).max(-(1.0 - p) * (1.0 - p) / p);
    (lower, 1.0 - p)
}

/// Unique pmf with Bernoulli(p) marginals and `E[eta_1 eta_2] - p^2 = tau p`.
pub fn bernoulli_pair_pmf(p: f64, tau: f64) -> Result<BernoulliPairPmf> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InfeasibleCorrelation { p, tau, bound: "0 < p <= 1".into() });
    }
    if !tau.is_finite() {
        return Err(Error::InfeasibleCorrelation { p, tau, bound: "tau finite".into() });
    }
    let p11 = p * p + tau * p;
    let p10 = p - p11;
    let p00 = 1.0 - 2.0 * p + p11;
    // absorb rounding at the corners of the window
    let slack = 1e-12;
    if p11 < -slack {
        return Err(Error::InfeasibleCorrelation { p, tau, bound: format!("tau >= -p = {}", -p) });
    }
    if p10 < -slack {
        return Err(Error::InfeasibleCorrelation {
            p,
            tau,
            bound: format!("tau <= 1 - p = {}", 1.0 - p),
        });
    }
    if p00 < -slack {
        return Err(Error::InfeasibleCorrelation {
            p,
            tau,
            bound: format!("tau >= -(1-p)^2/p = {}", -(1.0 - p) * (1.0 - p) / p),
        });
    }
    let p11 = p11.max(0.0);
    let p10 = p10.max(0.0);
    let p00 = p00.max(0.0);
    Ok(BernoulliPairPmf { p11, p10, p01: p10, p00 })
}

pub fn sample_bernoulli_pair<R: Rng + ?Sized>(pmf: &BernoulliPairPmf, rng: &mut R) -> (bool, bool) {
    let u: f64 = rng.random();
    if u < pmf.p11 {
        (true, true)
    } else if u < pmf.p11 + pmf.p10 {
        (true, false)
    } else if u < pmf.p11 + pmf.p10 + pmf.p01 {
        (false, true)
    } else {
        (false, false)
    }
}
