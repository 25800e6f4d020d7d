//! Multi-trial orchestration: draws matrices, computes spectra and metrics,
//! writes artifacts and decides pass/fail.

use std::path::Path;

use elliptic_core::ensemble::{assemble_matrix, generate_sparse_elliptic, truncate_for_config};
use elliptic_core::law::{log_potential_theoretical, EllipticLawParams};
use elliptic_core::rng::trial_seed;
use elliptic_core::spectral::{eigenvalues, shift, singular_values, EmpiricalMeasure};
use elliptic_core::stats::{
    containment_fraction, ks_statistic, levy_distance, mixed_moment_estimate, singular_extremes_from_values,
    MetricsReport, MomentEstimate, SingularExtremes,
};
use elliptic_core::stieltjes::{density_table, log_integral_nu_z, NuHatCdf, DEFAULT_EPSILON};
use elliptic_core::{io, Complex64, TripletMatrix};
use rayon::prelude::*;
use serde::Serialize;

use crate::figure::emit_figure;
use crate::plan::{ExperimentPlan, OutputKind, Thresholds};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Cells of the tabulated `nu_hat_z` distribution function.
const NU_HAT_CELLS: usize = 600;
/// Points of the exported density table on `[-x_max, x_max]`.
const DENSITY_POINTS: usize = 801;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Plan(#[from] crate::plan::PlanError),
    #[error(transparent)]
    Core(#[from] elliptic_core::Error),
    #[error("all {0} trials failed; first error: {1}")]
    AllTrialsFailed(usize, String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// What a subcommand needs computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Generate,
    Spectrum,
    Verify,
    Stieltjes,
    Figure,
}

impl Task {
    pub fn default_outputs(self) -> &'static [OutputKind] {
        match self {
            Task::Generate => &[OutputKind::TripletsCsv],
            Task::Spectrum => &[OutputKind::EigsCsv, OutputKind::SvalsCsv],
            Task::Verify => &[OutputKind::MetricsJson],
            Task::Stieltjes => &[OutputKind::DensityCsv, OutputKind::MetricsJson],
            Task::Figure => &[OutputKind::FigureSvg],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityReport {
    pub p_n: f64,
    pub tau_n: f64,
    pub rho_effective: f64,
    pub p_limit: f64,
    pub tau_limit: f64,
    pub rho_effective_limit: f64,
    /// `rho1 e^{i theta} (tau_n + p_n)`, the target of the mixed moment check.
    pub mixed_moment_target: Complex64,
    /// `e^{i theta} rho_limit`, the target of the second moment check.
    pub second_moment_target: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftMetrics {
    pub z: Complex64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub profile_check: bool,
    pub ks_to_nu_z: Option<f64>,
    pub levy_trunc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialMetrics {
    pub containment_fraction: f64,
    pub second_moment: Complex64,
    pub mixed_moment: MomentEstimate,
    pub shifts: Vec<ShiftMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<TrialMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Wall-clock seconds; excluded from the JSON to keep reruns byte-identical.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StieltjesCheck {
    pub z: Complex64,
    /// `-int log s d nu_z(s)` from the fixed-point route.
    pub log_integral: f64,
    /// The logarithmic potential of the limiting law at `z`.
    pub log_potential: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub task: Task,
    pub name: Option<String>,
    pub config_digest: String,
    pub n: usize,
    pub master_seed: u64,
    pub trial_count: usize,
    pub exploratory: bool,
    pub normalized: bool,
    pub sparsity: SparsityReport,
    pub thresholds: Thresholds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stieltjes: Vec<StieltjesCheck>,
    pub checks: Vec<Check>,
    pub trials: Vec<TrialRecord>,
    pub passed: bool,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Raw per-trial data kept until the sequential fold.
struct TrialData {
    triplets: Option<TripletMatrix>,
    eigenvalues: Vec<Complex64>,
    singular: Vec<Vec<f64>>,
    metrics: Option<TrialMetrics>,
}

struct Needs {
    triplets: bool,
    eigenvalues: bool,
    singular: bool,
    metrics: bool,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

fn sparsity_report(plan: &ExperimentPlan) -> Result<SparsityReport, RunError> {
    let r = plan.config.resolved();
    let (p_limit, tau_limit) = plan.config.sparsity.limits();
    let finite = plan.finite_law()?;
    let limit = plan.limit_law()?;
    Ok(SparsityReport {
        p_n: r.p_n,
        tau_n: r.tau_n,
        rho_effective: finite.rho,
        p_limit,
        tau_limit,
        rho_effective_limit: limit.rho,
        mixed_moment_target: plan.config.atom.mixed_moment() * (r.tau_n + r.p_n),
        second_moment_target: elliptic_core::law::second_moment(&limit),
    })
}

/// The singular values of `M - zI` for `M = e^{i theta/2} M'` are those of
/// `M' - e^{-i theta/2} z`, so the solver runs at the unrotated shift.
fn unrotated_shift(law: &EllipticLawParams, z: Complex64) -> Complex64 {
    law.unrotate(z)
}

fn squared(sigma: &[f64]) -> Result<EmpiricalMeasure, elliptic_core::Error> {
    EmpiricalMeasure::new(sigma.iter().map(|s| s * s).collect())
}

fn run_trial(
    plan: &ExperimentPlan,
    index: usize,
    needs: &Needs,
    nu_hat: &[Option<NuHatCdf>],
) -> Result<TrialData, elliptic_core::Error> {
    let seed = trial_seed(plan.master_seed, index as u64);
    let config = plan.config.with_seed(seed);
    let x = generate_sparse_elliptic(&config)?;
    let mut data = TrialData { triplets: None, eigenvalues: Vec::new(), singular: Vec::new(), metrics: None };
    if needs.eigenvalues || needs.singular || needs.metrics {
        let m = assemble_matrix(&config, &x, plan.normalize)?;
        if needs.eigenvalues || needs.metrics {
            data.eigenvalues = eigenvalues(&m)?;
        }
        if needs.singular || needs.metrics {
            data.singular =
                plan.shifts.iter().map(|&z| singular_values(&shift(&m, z))).collect::<Result<_, _>>()?;
        }
        if needs.metrics {
            data.metrics = Some(trial_metrics(plan, &config, &x, &data, nu_hat)?);
        }
    }
    if needs.triplets {
        data.triplets = Some(x);
    }
    Ok(data)
}

fn trial_metrics(
    plan: &ExperimentPlan,
    config: &elliptic_core::EnsembleConfig,
    x: &TripletMatrix,
    data: &TrialData,
    nu_hat: &[Option<NuHatCdf>],
) -> Result<TrialMetrics, elliptic_core::Error> {
    let law = plan.limit_law().map_err(|e| elliptic_core::Error::InvalidConfig(e.to_string()))?;
    let n = data.eigenvalues.len() as f64;
    let p_n = config.resolved().p_n;
    let second_moment = data.eigenvalues.iter().map(|l| l * l).sum::<Complex64>() / n;

    // the truncated comparison matrix is only meaningful after normalization
    let truncated = if plan.normalize && !plan.is_exploratory() {
        Some(assemble_matrix(config, &truncate_for_config(config, x)?, true)?)
    } else {
        None
    };

    let mut shifts = Vec::with_capacity(plan.shifts.len());
    for (k, &z) in plan.shifts.iter().enumerate() {
        let sigma = &data.singular[k];
        let SingularExtremes { sigma_min, sigma_max, profile_check } = singular_extremes_from_values(sigma);
        let ks_to_nu_z = match &nu_hat[k] {
            Some(cdf) => Some(ks_statistic(&EmpiricalMeasure::new(sigma.clone())?.symmetrize(), |t| cdf.cdf(t))),
            None => None,
        };
        let levy_trunc = match &truncated {
            Some(mt) => Some(levy_distance(&squared(sigma)?, &squared(&singular_values(&shift(mt, z))?)?)),
            None => None,
        };
        shifts.push(ShiftMetrics { z, sigma_min, sigma_max, profile_check, ks_to_nu_z, levy_trunc });
    }
    Ok(TrialMetrics {
        containment_fraction: containment_fraction(&data.eigenvalues, &law, plan.thresholds.inflation),
        second_moment,
        mixed_moment: mixed_moment_estimate(x, p_n),
        shifts,
    })
}

fn aggregate(metrics: &[&TrialMetrics]) -> MetricsReport {
    let k = metrics.len() as f64;
    let all_shifts = || metrics.iter().flat_map(|m| m.shifts.iter());
    let max_opt = |f: fn(&ShiftMetrics) -> Option<f64>| all_shifts().filter_map(f).reduce(f64::max);
    let mixed_se = metrics.iter().map(|m| m.mixed_moment.standard_error.powi(2)).sum::<f64>().sqrt() / k;
    MetricsReport {
        containment_fraction: metrics.iter().map(|m| m.containment_fraction).fold(1.0, f64::min),
        second_moment_emp: metrics.iter().map(|m| m.second_moment).sum::<Complex64>() / k,
        mixed_moment_emp: metrics.iter().map(|m| m.mixed_moment.value).sum::<Complex64>() / k,
        mixed_moment_se: mixed_se,
        ks_to_nu_z: max_opt(|s| s.ks_to_nu_z),
        levy_trunc: max_opt(|s| s.levy_trunc),
        sigma_min: all_shifts().map(|s| s.sigma_min).fold(f64::INFINITY, f64::min),
        sigma_max: all_shifts().map(|s| s.sigma_max).fold(0.0, f64::max),
        trial_count: metrics.len(),
    }
}

fn check(name: &str, value: f64, threshold: f64, passed: bool) -> Check {
    Check { name: name.to_string(), value, threshold, passed }
}

fn asserted_checks(plan: &ExperimentPlan, sparsity: &SparsityReport, report: &MetricsReport) -> Vec<Check> {
    let t = &plan.thresholds;
    let n = plan.config.n as f64;
    let mut checks = vec![
        check("containment_fraction_min", report.containment_fraction, t.containment_min,
              report.containment_fraction >= t.containment_min),
    ];
    let sm = (report.second_moment_emp - sparsity.second_moment_target).norm();
    checks.push(check("second_moment_error", sm, t.second_moment_tol, sm <= t.second_moment_tol));
    let mm = (report.mixed_moment_emp - sparsity.mixed_moment_target).norm();
    let allowed = t.mixed_moment_se * report.mixed_moment_se;
    checks.push(check("mixed_moment_error", mm, allowed, mm <= allowed));
    if let Some(ks) = report.ks_to_nu_z {
        checks.push(check("ks_to_nu_z_max", ks, t.ks_max, ks <= t.ks_max));
    }
    if let Some(levy) = report.levy_trunc {
        checks.push(check("levy_trunc_max", levy, t.levy_max, levy <= t.levy_max));
    }
    let floor = n.powf(-t.sigma_min_exponent);
    checks.push(check("sigma_min", report.sigma_min, floor, report.sigma_min > floor));
    let ceiling = n.powf(t.sigma_max_exponent);
    checks.push(check("sigma_max", report.sigma_max, ceiling, report.sigma_max <= ceiling));
    checks
}

fn stieltjes_checks(plan: &ExperimentPlan, out: Option<&Path>) -> Result<(Vec<StieltjesCheck>, Vec<Check>), RunError> {
    let law = plan.limit_law()?;
    let mut results = Vec::new();
    let mut checks = Vec::new();
    for (k, &z) in plan.shifts.iter().enumerate() {
        let w = unrotated_shift(&law, z);
        let log_integral = log_integral_nu_z(w, law.rho)?;
        let log_potential = log_potential_theoretical(z, &law)?;
        let gap = (log_integral - log_potential).abs();
        checks.push(check(&format!("log_potential_gap_z{k}"), gap, plan.thresholds.potential_tol,
                          gap <= plan.thresholds.potential_tol));
        results.push(StieltjesCheck { z, log_integral, log_potential });

        if let Some(dir) = out.filter(|_| plan.outputs.contains(&OutputKind::DensityCsv)) {
            let x_max = z.norm() + 3.0;
            let xs: Vec<f64> = (0..DENSITY_POINTS)
                .map(|i| -x_max + 2.0 * x_max * i as f64 / (DENSITY_POINTS - 1) as f64)
                .collect();
            let table = density_table(&xs, w, law.rho, DEFAULT_EPSILON)?;
            let mut buf = Vec::new();
            io::write_density_csv(&mut buf, z, law.rho, DEFAULT_EPSILON, &table).expect("in-memory write");
            write_file(&dir.join(format!("density_z{k}.csv")), &buf)?;
        }
    }
    Ok((results, checks))
}

/// Runs `task` for `plan`, writing the requested artifacts under `out`.
///
/// Trials run in parallel; results are folded in trial order, so the report
/// and every artifact depend only on the plan.
pub fn run_experiment(plan: &ExperimentPlan, task: Task, out: Option<&Path>) -> Result<RunReport, RunError> {
    plan.validate()?;
    let mut plan = plan.clone();
    plan.outputs.extend(task.default_outputs());
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let law = plan.limit_law()?;
    let sparsity = sparsity_report(&plan)?;
    let exploratory = plan.is_exploratory();
    let wants = |k: OutputKind| plan.outputs.contains(&k);

    let needs = Needs {
        triplets: wants(OutputKind::TripletsCsv),
        eigenvalues: wants(OutputKind::EigsCsv) || wants(OutputKind::FigureSvg),
        singular: wants(OutputKind::SvalsCsv),
        metrics: matches!(task, Task::Verify) || (wants(OutputKind::MetricsJson) && task != Task::Stieltjes),
    };
    let run_trials = task != Task::Stieltjes || needs.eigenvalues || needs.singular || needs.triplets;

    // the limiting nu_hat_z is shared by all trials
    let nu_hat: Vec<Option<NuHatCdf>> = if needs.metrics && plan.normalize && !exploratory {
        plan.shifts
            .iter()
            .map(|&z| NuHatCdf::new(unrotated_shift(&law, z), law.rho, DEFAULT_EPSILON, NU_HAT_CELLS).map(Some))
            .collect::<Result<_, _>>()?
    } else {
        vec![None; plan.shifts.len()]
    };

    let outcomes: Vec<(Result<TrialData, elliptic_core::Error>, f64)> = if run_trials {
        (0..plan.trials)
            .into_par_iter()
            .map(|k| {
                let start = std::time::Instant::now();
                let r = run_trial(&plan, k, &needs, &nu_hat);
                (r, start.elapsed().as_secs_f64())
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut trials = Vec::with_capacity(outcomes.len());
    let mut first_error = None;
    let mut figure_written = false;
    for (k, (outcome, seconds)) in outcomes.iter().enumerate() {
        let seed = trial_seed(plan.master_seed, k as u64);
        match outcome {
            Ok(data) => {
                if let Some(dir) = out {
                    write_trial_artifacts(&plan, &law, k, data, dir, &mut figure_written)?;
                }
                trials.push(TrialRecord { index: k, seed, metrics: data.metrics.clone(), error: None, seconds: *seconds });
            }
            Err(e) => {
                first_error.get_or_insert_with(|| e.to_string());
                trials.push(TrialRecord { index: k, seed, metrics: None, error: Some(e.to_string()), seconds: *seconds });
            }
        }
    }
    if run_trials && trials.iter().all(|t| t.error.is_some()) {
        return Err(RunError::AllTrialsFailed(trials.len(), first_error.unwrap_or_default()));
    }

    let trial_metrics: Vec<&TrialMetrics> = trials.iter().filter_map(|t| t.metrics.as_ref()).collect();
    let metrics = (!trial_metrics.is_empty()).then(|| aggregate(&trial_metrics));
    let mut checks = Vec::new();
    if let (Some(m), false) = (&metrics, exploratory) {
        checks = asserted_checks(&plan, &sparsity, m);
        if trials.iter().any(|t| t.error.is_some()) {
            let failed = trials.iter().filter(|t| t.error.is_some()).count() as f64;
            checks.push(check("failed_trials", failed, 0.0, false));
        }
    }
    let mut stieltjes = Vec::new();
    if task == Task::Stieltjes {
        let (s, c) = stieltjes_checks(&plan, out)?;
        stieltjes = s;
        if !exploratory {
            checks.extend(c);
        }
    }

    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        task,
        name: plan.name.clone(),
        config_digest: plan.config.digest(),
        n: plan.config.n,
        master_seed: plan.master_seed,
        trial_count: plan.trials,
        exploratory,
        normalized: plan.normalize,
        sparsity,
        thresholds: plan.thresholds,
        metrics,
        stieltjes,
        passed: checks.iter().all(|c| c.passed),
        checks,
        trials,
    };
    if let Some(dir) = out.filter(|_| wants(OutputKind::MetricsJson)) {
        write_file(&dir.join("metrics.json"), report.to_json().as_bytes())?;
    }
    Ok(report)
}

fn write_trial_artifacts(
    plan: &ExperimentPlan,
    law: &EllipticLawParams,
    k: usize,
    data: &TrialData,
    dir: &Path,
    figure_written: &mut bool,
) -> Result<(), RunError> {
    let wants = |o: OutputKind| plan.outputs.contains(&o);
    if let Some(x) = data.triplets.as_ref().filter(|_| wants(OutputKind::TripletsCsv)) {
        let mut buf = Vec::new();
        x.write_csv(&mut buf).expect("in-memory write");
        write_file(&dir.join(format!("matrix_trial{k}.csv")), &buf)?;
    }
    if wants(OutputKind::EigsCsv) {
        let mut buf = Vec::new();
        io::write_eigenvalues_csv(&mut buf, &data.eigenvalues).expect("in-memory write");
        write_file(&dir.join(format!("eigs_trial{k}.csv")), &buf)?;
    }
    if wants(OutputKind::SvalsCsv) {
        for (j, (z, sigma)) in plan.shifts.iter().zip(&data.singular).enumerate() {
            let mut buf = Vec::new();
            io::write_singular_values_csv(&mut buf, *z, sigma).expect("in-memory write");
            write_file(&dir.join(format!("svals_trial{k}_z{j}.csv")), &buf)?;
        }
    }
    if wants(OutputKind::FigureSvg) && !*figure_written {
        let title = match &plan.name {
            Some(name) => format!("{name}: n = {}, trial {k}", plan.config.n),
            None => format!("n = {}, trial {k}", plan.config.n),
        };
        let path = dir.join("figure.svg");
        emit_figure(&data.eigenvalues, law, &title, &path).map_err(io_err(&path))?;
        *figure_written = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::preset;

    fn small(name: &str, n: usize) -> ExperimentPlan {
        let mut plan = preset(name).unwrap();
        plan.config.n = n;
        plan
    }

    #[test]
    fn report_echoes_finite_and_limit_values() {
        let plan = small("fig1b", 200);
        let report = run_experiment(&plan, Task::Generate, None).unwrap();
        let s = &report.sparsity;
        assert!((s.rho_effective_limit - 0.25).abs() < 1e-15);
        assert!((s.p_n - 200f64.powf(-0.5)).abs() < 1e-15);
        assert!((s.rho_effective - 0.5 * (s.tau_n + s.p_n)).abs() < 1e-15);
        assert_eq!(s.p_limit, 0.0);
        assert_eq!(s.tau_limit, 0.5);
        assert!(report.passed && report.checks.is_empty());
    }

    #[test]
    fn verify_small_dense_run() {
        let mut plan = small("fig1a", 200);
        plan.trials = 2;
        let report = run_experiment(&plan, Task::Verify, None).unwrap();
        let m = report.metrics.as_ref().unwrap();
        assert_eq!(m.trial_count, 2);
        assert!(m.ks_to_nu_z.is_some() && m.levy_trunc.is_some());
        assert!(report.checks.iter().any(|c| c.name == "containment_fraction_min"));
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["sparsity"]["rho_effective_limit"], 0.5);
        assert_eq!(json["thresholds"]["containment_min"], 0.95);
    }

    #[test]
    fn exploratory_runs_assert_nothing() {
        let plan = small("supersparse-c5", 150);
        let report = run_experiment(&plan, Task::Verify, None).unwrap();
        assert!(report.exploratory && report.checks.is_empty() && report.passed);
        assert!(report.metrics.unwrap().ks_to_nu_z.is_none());
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let mut plan = small("fig1a", 20);
        plan.trials = 50;
        let report = run_experiment(&plan, Task::Generate, None).unwrap();
        let mut seeds: Vec<u64> = report.trials.iter().map(|t| t.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 50);
    }
}
