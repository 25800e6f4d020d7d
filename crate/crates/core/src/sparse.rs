use std::collections::HashMap;
use std::io::Write;

use num_complex::Complex64;

use crate::DenseMatrix;

/// Coordinate-format square matrix. Entries are unique per `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletMatrix {
    n: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl TripletMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, capacity: usize) -> Self {
        Self { n, entries: Vec::with_capacity(capacity) }
    }

    pub fn from_entries(n: usize, entries: Vec<(usize, usize, Complex64)>) -> Self {
        debug_assert!(entries.iter().all(|&(i, j, _)| i < n && j < n));
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn push(&mut self, row: usize, col: usize, value: Complex64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn to_map(&self) -> HashMap<(usize, usize), Complex64> {
        let mut map = HashMap::with_capacity(self.entries.len());
        for &(i, j, v) in &self.entries {
            *map.entry((i, j)).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        map
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, _, v)| v.norm_sqr()).sum()
    }

    pub fn diagonal_zeroed(&self) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().copied().filter(|&(i, j, _)| i != j).collect(),
        }
    }

    /// Writes the `i,j,re,im` CSV export.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,j,re,im")?;
        for &(i, j, v) in &self.entries {
            writeln!(out, "{i},{j},{},{}", v.re, v.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_csv() {
        let mut t = TripletMatrix::new(2);
        t.push(0, 1, Complex64::new(1.5, -2.0));
        t.push(1, 1, Complex64::new(3.0, 0.0));
        let d = t.to_dense();
        assert_eq!(d[(0, 1)], Complex64::new(1.5, -2.0));
        assert_eq!(d[(1, 0)], Complex64::new(0.0, 0.0));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "i,j,re,im\n0,1,1.5,-2\n1,1,3,0\n");
        assert_eq!(t.diagonal_zeroed().nnz(), 1);
    }
}
