use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::atom::AtomSpec;
use super::bernoulli::{bernoulli_pair_pmf, BernoulliPairPmf};
use crate::{Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Sparsity schedule `n -> p_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    /// `p_n = p`
    Constant { p: f64 },
    /// `p_n = c n^{-gamma}`
    Power { c: f64, gamma: f64 },
    /// `p_n = n / (a n + b)`
    Ratio { a: f64, b: f64 },
    /// `p_n = c / n`
    Supersparse { c: f64 },
}

impl Schedule {
    pub fn p_n(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            Schedule::Constant { p } => p,
            Schedule::Power { c, gamma } => c * nf.powf(-gamma),
            Schedule::Ratio { a, b } => nf / (a * nf + b),
            Schedule::Supersparse { c } => c / nf,
        }
    }

    /// `lim p_n` as `n -> infinity`.
    pub fn p_limit(&self) -> f64 {
        match *self {
            Schedule::Constant { p } => p,
            Schedule::Power { c, gamma } => {
                if gamma > 0.0 {
                    0.0
                } else {
                    c
                }
            }
            Schedule::Ratio { a, .. } => 1.0 / a,
            Schedule::Supersparse { .. } => 0.0,
        }
    }

    pub fn is_supersparse(&self) -> bool {
        matches!(self, Schedule::Supersparse { .. })
    }
}

fn default_min_expected_degree() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsitySpec {
    pub schedule: Schedule,
    /// Correlation of the mirrored masks; `tau_n = rho2 (1 - p_n)`.
    pub rho2: f64,
    /// Lower bound on `n p_n` enforced for non-supersparse schedules.
    #[serde(default = "default_min_expected_degree")]
    pub min_expected_degree: f64,
}

/// Finite-n sparsity values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSparsity {
    pub p_n: f64,
    pub tau_n: f64,
}

impl SparsitySpec {
    pub fn new(schedule: Schedule, rho2: f64) -> Self {
        Self { schedule, rho2, min_expected_degree: default_min_expected_degree() }
    }

    pub fn resolve(&self, n: usize) -> ResolvedSparsity {
        let p_n = self.schedule.p_n(n);
        ResolvedSparsity { p_n, tau_n: self.rho2 * (1.0 - p_n) }
    }

    /// Limits `(p, tau)` of the schedule.
    pub fn limits(&self) -> (f64, f64) {
        let p = self.schedule.p_limit();
        (p, self.rho2 * (1.0 - p))
    }

    pub fn pmf(&self, n: usize) -> Result<BernoulliPairPmf> {
        let r = self.resolve(n);
        bernoulli_pair_pmf(r.p_n, r.tau_n)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.rho2) {
            return Err(Error::InvalidConfig(format!("rho2 = {} outside [-1, 1]", self.rho2)));
        }
        let p_n = self.schedule.p_n(n);
        if !(p_n > 0.0 && p_n <= 1.0) {
            return Err(Error::InvalidConfig(format!("p_n = {p_n} outside (0, 1] at n = {n}")));
        }
        if !self.schedule.is_supersparse() && (n as f64) * p_n < self.min_expected_degree {
            return Err(Error::InvalidConfig(format!(
                "n p_n = {} below the minimum expected degree {}",
                n as f64 * p_n,
                self.min_expected_degree
            )));
        }
        self.pmf(n).map(|_| ())
    }
}

/// `n x r` factor stored column-major: `columns[k][i]`.
pub type Factor = Vec<Vec<Complex64>>;

fn default_hs_bound() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerturbationKind {
    None,
    /// `F = sum_k left_k right_k^T`
    LowRank { left: Factor, right: Factor },
    /// Explicit entries `(i, j, value)`.
    Explicit { entries: Vec<(usize, usize, Complex64)> },
}

/// Deterministic perturbation `F_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(flatten)]
    pub kind: PerturbationKind,
    /// Maximum allowed rank; defaults to `floor(sqrt(n))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_cap: Option<usize>,
    /// Bound on `||F||_HS^2 / (n^2 p_n)`.
    #[serde(default = "default_hs_bound")]
    pub hs_bound: f64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self { kind: PerturbationKind::None, rank_cap: None, hs_bound: default_hs_bound() }
    }
}

impl PerturbationSpec {
    pub fn is_none(&self) -> bool {
        matches!(self.kind, PerturbationKind::None)
    }

    pub fn rank_cap(&self, n: usize) -> usize {
        self.rank_cap.unwrap_or_else(|| (n as f64).sqrt().floor() as usize)
    }
}

fn default_schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

/// Full recipe for one matrix law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    #[serde(default = "default_schema_version")]
    pub spec_version: u32,
    pub n: usize,
    pub atom: AtomSpec,
    pub sparsity: SparsitySpec,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn new(n: usize, atom: AtomSpec, sparsity: SparsitySpec, seed: u64) -> Self {
        Self {
            spec_version: CONFIG_SCHEMA_VERSION,
            n,
            atom,
            sparsity,
            perturbation: PerturbationSpec::default(),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn resolved(&self) -> ResolvedSparsity {
        self.sparsity.resolve(self.n)
    }

    /// Checks every component invariant, including the perturbation bounds.
    pub fn validate(&self) -> Result<()> {
        if self.spec_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported spec_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.spec_version
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        self.atom.validate()?;
        self.sparsity.validate(self.n)?;
        super::perturbation::check_perturbation(&self.perturbation, self.n, self.resolved().p_n)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let hash = Sha256::digest(&json);
        format!("{hash:x}")
    }
}
