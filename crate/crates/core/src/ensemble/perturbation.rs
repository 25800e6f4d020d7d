use num_complex::Complex64;

use super::config::{PerturbationKind, PerturbationSpec};
use crate::{DenseMatrix, Error, Result};

/// Dense `F_n`, or `None` when there is no perturbation.
pub fn perturbation_matrix(spec: &PerturbationSpec, n: usize) -> Result<Option<DenseMatrix>> {
    match &spec.kind {
        PerturbationKind::None => Ok(None),
        PerturbationKind::LowRank { left, right } => {
            if left.len() != right.len() {
                return Err(Error::InvalidConfig(format!(
                    "low-rank factors have {} and {} columns",
                    left.len(),
                    right.len()
                )));
            }
            if left.iter().chain(right).any(|col| col.len() != n) {
                return Err(Error::InvalidConfig(format!("low-rank factor columns must have length {n}")));
            }
            let mut f = DenseMatrix::zeros(n, n);
            for (u, v) in left.iter().zip(right) {
                for i in 0..n {
                    for j in 0..n {
                        f[(i, j)] += u[i] * v[j];
                    }
                }
            }
            Ok(Some(f))
        }
        PerturbationKind::Explicit { entries } => {
            let mut f = DenseMatrix::zeros(n, n);
            for &(i, j, v) in entries {
                if i >= n || j >= n {
                    return Err(Error::InvalidConfig(format!("perturbation entry ({i}, {j}) out of range")));
                }
                f[(i, j)] += v;
            }
            Ok(Some(f))
        }
    }
}

fn numerical_rank(f: &DenseMatrix) -> Result<usize> {
    let s = f
        .singular_values()
        .map_err(|_| Error::NoConvergence { routine: "perturbation rank" })?;
    let top = s.first().copied().unwrap_or(0.0);
    let tol = top * f64::EPSILON * f.nrows() as f64;
    Ok(s.iter().filter(|&&x| x > tol && x > 0.0).count())
}

/// Enforces `rank(F) <= cap` and `||F||_HS^2 / (n^2 p_n) <= bound`.
pub fn check_perturbation(spec: &PerturbationSpec, n: usize, p_n: f64) -> Result<()> {
    let cap = spec.rank_cap(n);
    let declared = match &spec.kind {
        PerturbationKind::None => return Ok(()),
        PerturbationKind::LowRank { left, .. } => Some(left.len()),
        PerturbationKind::Explicit { .. } => None,
    };
    if let Some(r) = declared {
        if r > cap {
            return Err(Error::PerturbationBoundViolated(format!("rank {r} exceeds cap {cap}")));
        }
    }
    let Some(f) = perturbation_matrix(spec, n)? else {
        return Ok(());
    };
    if declared.is_none() {
        let r = numerical_rank(&f)?;
        if r > cap {
            return Err(Error::PerturbationBoundViolated(format!("rank {r} exceeds cap {cap}")));
        }
    }
    let hs: f64 = (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).map(|(i, j)| f[(i, j)].norm_sqr()).sum();
    let scaled = hs / ((n * n) as f64 * p_n);
    if scaled > spec.hs_bound {
        return Err(Error::PerturbationBoundViolated(format!(
            "||F||_HS^2 / (n^2 p_n) = {scaled} exceeds {}",
            spec.hs_bound
        )));
    }
    Ok(())
}

/// Rank-`rank` perturbation with constant factor entries, mostly for tests.
pub fn constant_low_rank(n: usize, rank: usize, value: Complex64) -> PerturbationSpec {
    let left = vec![vec![value; n]; rank];
    let right = vec![vec![Complex64::new(1.0, 0.0); n]; rank];
    PerturbationSpec { kind: PerturbationKind::LowRank { left, right }, ..Default::default() }
}
