//! Experiment orchestration for the `elliptic` command-line tool.
//!
//! A run starts from an [`ExperimentPlan`] (parsed from JSON or taken from a
//! preset), draws `trials` independent matrices with seeds derived from the
//! master seed, and folds the per-trial results into a [`RunReport`].

pub mod figure;
pub mod plan;
pub mod run;

use std::path::Path;

pub use plan::{parse_config, preset, ExperimentPlan, Mode, OutputKind, PlanError, Thresholds, PRESET_NAMES};
pub use run::{run_experiment, Check, RunError, RunReport, Task};

/// Resolves `--config` / `--preset` and applies the `--seed` and `--trials`
/// overrides.
pub fn load_plan(
    config: Option<&Path>,
    preset_name: Option<&str>,
    seed: Option<u64>,
    trials: Option<usize>,
) -> anyhow::Result<ExperimentPlan> {
    let mut plan = match (config, preset_name) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
            parse_config(&text)?
        }
        (None, Some(name)) => preset(name)?,
        _ => anyhow::bail!("exactly one of --config and --preset is required"),
    };
    if let Some(seed) = seed {
        plan.master_seed = seed;
    }
    if let Some(trials) = trials {
        plan.trials = trials;
    }
    plan.validate()?;
    Ok(plan)
}
