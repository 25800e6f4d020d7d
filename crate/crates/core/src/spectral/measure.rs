use crate::{Error, Result};

/// Uniform atomic probability measure on a finite multiset of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    samples: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidArgument("NaN sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mass of each atom.
    pub fn weight(&self) -> f64 {
        1.0 / self.samples.len() as f64
    }

    /// `P(X <= x)`; right-continuous.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 * self.weight()
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s < x) as f64 * self.weight()
    }

    /// `(nu(.) + nu(-.)) / 2`: mass `1/(2m)` at each `+x_k` and `-x_k`.
    pub fn symmetrize(&self) -> Self {
        let mut out: Vec<f64> = self.samples.iter().flat_map(|&x| [x, -x]).collect();
        out.sort_by(f64::total_cmp);
        Self { samples: out }
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.weight()
    }
}
