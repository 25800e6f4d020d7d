//! Experiment plans: the ensemble recipe plus trial count, shifts, outputs and
//! pass/fail thresholds.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use elliptic_core::ensemble::{AtomFamily, AtomSpec, EnsembleConfig, Schedule, SparsitySpec};
use elliptic_core::law::EllipticLawParams;
use elliptic_core::Complex64;
use serde::{Deserialize, Serialize};

pub const PLAN_SCHEMA_VERSION: u32 = 1;

pub const PRESET_NAMES: [&str; 7] =
    ["fig1a", "fig1b", "fig2a", "fig2b", "supersparse-c2", "supersparse-c5", "supersparse-c10"];

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unknown preset `{0}` (available: {list})", list = PRESET_NAMES.join(", "))]
    UnknownPreset(String),
    #[error(transparent)]
    Ensemble(#[from] elliptic_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    EigsCsv,
    SvalsCsv,
    FigureSvg,
    MetricsJson,
    DensityCsv,
    TripletsCsv,
}

/// `Verify` asserts the thresholds; `Exploratory` only reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Verify,
    Exploratory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Scale applied to the limiting ellipse before counting eigenvalues inside.
    pub inflation: f64,
    /// Minimum containment fraction in every trial.
    pub containment_min: f64,
    /// Allowed distance of the trial-averaged `(1/n) sum lambda^2` from `e^{i theta} rho`.
    pub second_moment_tol: f64,
    /// Allowed distance of the mixed moment estimate, in standard errors.
    pub mixed_moment_se: f64,
    pub ks_max: f64,
    pub levy_max: f64,
    /// `sigma_min > n^{-sigma_min_exponent}` in every trial.
    pub sigma_min_exponent: f64,
    /// `sigma_max <= n^{sigma_max_exponent}` in every trial.
    pub sigma_max_exponent: f64,
    /// Allowed gap between the Stieltjes route and the direct log potential.
    pub potential_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            inflation: 1.08,
            containment_min: 0.95,
            second_moment_tol: 0.05,
            mixed_moment_se: 3.0,
            ks_max: 0.05,
            levy_max: 0.05,
            sigma_min_exponent: 3.0,
            sigma_max_exponent: 0.5,
            potential_tol: 1e-2,
        }
    }
}

fn default_plan_version() -> u32 {
    PLAN_SCHEMA_VERSION
}
fn default_trials() -> usize {
    1
}
fn default_shifts() -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0)]
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default = "default_plan_version")]
    pub spec_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub config: EnsembleConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Shifts `z` at which singular values of `M - zI` are examined.
    #[serde(default = "default_shifts")]
    pub shifts: Vec<Complex64>,
    #[serde(default)]
    pub outputs: BTreeSet<OutputKind>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub mode: Mode,
    /// Apply `(n p_n)^{-1/2}`; the supersparse figures are drawn without it.
    #[serde(default = "default_true")]
    pub normalize: bool,
}

impl ExperimentPlan {
    pub fn new(config: EnsembleConfig) -> Self {
        Self {
            spec_version: PLAN_SCHEMA_VERSION,
            name: None,
            config,
            trials: default_trials(),
            shifts: default_shifts(),
            outputs: BTreeSet::new(),
            master_seed: 0,
            thresholds: Thresholds::default(),
            mode: Mode::Verify,
            normalize: true,
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let schema = |path: &str, message: String| PlanError::Schema { path: path.into(), message };
        if self.spec_version != PLAN_SCHEMA_VERSION {
            return Err(schema("spec_version", format!("unsupported version {}", self.spec_version)));
        }
        if self.trials == 0 {
            return Err(schema("trials", "must be at least 1".into()));
        }
        if let Some(k) = self.shifts.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(schema(&format!("shifts[{k}]"), "shift must be finite".into()));
        }
        if !(self.thresholds.inflation >= 1.0) {
            return Err(schema("thresholds.inflation", "must be at least 1".into()));
        }
        self.config.validate()?;
        self.limit_law()?;
        Ok(())
    }

    /// Supersparse schedules have no proven limit and never assert.
    pub fn is_exploratory(&self) -> bool {
        self.mode == Mode::Exploratory || self.config.sparsity.schedule.is_supersparse()
    }

    /// The limiting law `e^{i theta/2} E_{rho1 (tau + p)}` overlaid and tested against.
    pub fn limit_law(&self) -> Result<EllipticLawParams, PlanError> {
        let (p, tau) = self.config.sparsity.limits();
        Ok(EllipticLawParams::new(self.config.atom.rho1, self.config.atom.theta, tau, p)?)
    }

    /// The law with the finite-n parameters `(p_n, tau_n)`.
    pub fn finite_law(&self) -> Result<EllipticLawParams, PlanError> {
        let r = self.config.resolved();
        Ok(EllipticLawParams::new(self.config.atom.rho1, self.config.atom.theta, r.tau_n, r.p_n)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, PlanError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| PlanError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Parses either a full plan or a bare ensemble config (wrapped with default
/// plan settings), then validates it.
pub fn parse_config(text: &str) -> Result<ExperimentPlan, PlanError> {
    let value: serde_json::Value = from_json(text)?;
    let plan = if value.get("config").is_some() {
        from_json::<ExperimentPlan>(text)?
    } else {
        let config: EnsembleConfig = from_json(text)?;
        let seed = config.seed;
        ExperimentPlan { master_seed: seed, ..ExperimentPlan::new(config) }
    };
    plan.validate()?;
    Ok(plan)
}

const PRESET_N: usize = 1000;
const PRESET_SEED: u64 = 20_240_601;

fn preset_plan(name: &str, family: AtomFamily, theta: f64, schedule: Schedule, rho2: f64) -> ExperimentPlan {
    let atom = AtomSpec::new(family, 0.5, theta);
    let config = EnsembleConfig::new(PRESET_N, atom, SparsitySpec::new(schedule, rho2), PRESET_SEED);
    ExperimentPlan { name: Some(name.to_string()), master_seed: PRESET_SEED, ..ExperimentPlan::new(config) }
}

/// Plans reproducing the published eigenvalue figures.
pub fn preset(name: &str) -> Result<ExperimentPlan, PlanError> {
    use AtomFamily::{ComplexGaussian, RealGaussian};
    let plan = match name {
        "fig1a" => preset_plan(name, RealGaussian, 0.0, Schedule::Constant { p: 1.0 }, 0.0),
        "fig1b" => preset_plan(name, RealGaussian, 0.0, Schedule::Power { c: 1.0, gamma: 0.5 }, 0.5),
        "fig2a" => preset_plan(name, ComplexGaussian, FRAC_PI_2, Schedule::Ratio { a: 1.0, b: 1.0 }, 0.5),
        "fig2b" => preset_plan(name, ComplexGaussian, FRAC_PI_2, Schedule::Ratio { a: 2.0, b: 1.0 }, 0.5),
        "supersparse-c2" | "supersparse-c5" | "supersparse-c10" => {
            let c: f64 = name["supersparse-c".len()..].parse().expect("preset suffix is numeric");
            ExperimentPlan {
                mode: Mode::Exploratory,
                normalize: false,
                ..preset_plan(name, RealGaussian, 0.0, Schedule::Supersparse { c }, 0.5)
            }
        }
        _ => return Err(PlanError::UnknownPreset(name.to_string())),
    };
    plan.validate()?;
    Ok(plan)
}
