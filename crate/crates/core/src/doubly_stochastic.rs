use ndarray::{Array2, Axis};

use crate::error::{invalid, Result};
use crate::perm::Permutation;

/// Default tolerance on row/column sums when accepting external matrices.
pub const SUM_TOL: f64 = 1e-6;
/// Smallest entry accepted as "non-negative".
pub const NEG_TOL: f64 = -1e-12;

/// Dense non-negative matrix with unit row and column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublyStochastic {
    x: Array2<f64>,
}

impl DoublyStochastic {
    /// Validates a square matrix against the given row/column sum tolerance.
    pub fn new(x: Array2<f64>, tol: f64) -> Result<Self> {
        let (r, c) = x.dim();
        if r != c {
            return Err(invalid(format!("matrix is {r}x{c}, expected square")));
        }
        let d = DoublyStochastic { x };
        let (sum_dev, min_entry) = d.feasibility();
        if sum_dev > tol {
            return Err(invalid(format!(
                "row/column sums deviate from 1 by {sum_dev:e} (tolerance {tol:e})"
            )));
        }
        if min_entry < NEG_TOL {
            return Err(invalid(format!("negative entry {min_entry:e}")));
        }
        Ok(d)
    }

    pub fn from_permutation(p: &Permutation) -> Self {
        DoublyStochastic { x: p.to_matrix() }
    }

    /// The flat matrix `J/n`.
    pub fn barycenter(n: usize) -> Self {
        DoublyStochastic {
            x: Array2::from_elem((n, n), 1.0 / n as f64),
        }
    }

    /// `(1 − λ)·P + λ·J/n`.
    pub fn blend(p: &Permutation, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(invalid(format!("blend weight {lambda} outside [0, 1]")));
        }
        let n = p.len();
        let mut x = Array2::from_elem((n, n), lambda / n as f64);
        for i in 0..n {
            x[[i, p.apply(i)]] += 1.0 - lambda;
        }
        Ok(DoublyStochastic { x })
    }

    #[cfg(test)]
    pub(crate) fn from_raw(x: Array2<f64>) -> Self {
        DoublyStochastic { x }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.x
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Array2<f64> {
        &mut self.x
    }

    /// Largest absolute deviation of any row or column sum from one, and
    /// the smallest entry.
    pub fn feasibility(&self) -> (f64, f64) {
        let rows = self.x.sum_axis(Axis(1));
        let cols = self.x.sum_axis(Axis(0));
        let dev = rows
            .iter()
            .chain(cols.iter())
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max);
        let min = self.x.iter().copied().fold(f64::INFINITY, f64::min);
        (dev, if min.is_finite() { min } else { 0.0 })
    }
}
