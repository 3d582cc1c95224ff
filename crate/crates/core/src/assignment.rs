//! Dense linear assignment.
//!
//! `lap_min` is the O(n³) shortest-augmenting-path form of the Hungarian
//! method with row/column potentials. Rows are inserted one at a time and
//! each insertion runs a Dijkstra-like search over reduced costs. Ties are
//! broken by scan order (lowest column index first), so the result is
//! deterministic; on a constant matrix it returns the identity.

use ndarray::{Array2, ArrayView2};

use crate::doubly_stochastic::{DoublyStochastic, NEG_TOL, SUM_TOL};
use crate::error::{invalid, Result};
use crate::perm::Permutation;

/// Minimises `Σ_i cost[i][π(i)]` over permutations. Returns the optimal
/// assignment and its cost evaluated on the input matrix.
pub fn lap_min(cost: ArrayView2<'_, f64>) -> Result<(Permutation, f64)> {
    let (rows, cols) = cost.dim();
    if rows != cols {
        return Err(invalid(format!("cost matrix is {rows}x{cols}, expected square")));
    }
    if let Some(v) = cost.iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("cost matrix has non-finite entry {v}")));
    }
    let n = rows;
    if n == 0 {
        return Ok((Permutation::identity(0), 0.0));
    }

    // Shift each row by its minimum; the argmin set is unchanged.
    let mut c = cost.to_owned();
    for mut row in c.rows_mut() {
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        row.mapv_inplace(|v| v - lo);
    }

    // 1-based bookkeeping: column 0 is a virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let crow = c.row(i0 - 1);
            let ui0 = u[i0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = crow[j - 1] - ui0 - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut img = vec![0usize; n];
    for j in 1..=n {
        img[row_of[j] - 1] = j - 1;
    }
    let total = img.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum();
    Ok((Permutation::from_images_unchecked(img), total))
}

/// Nearest permutation matrix to `d` in Frobenius distance, i.e. the
/// maximiser of `⟨D, Q⟩` over permutation matrices `Q`.
pub fn project_to_permutation(d: &DoublyStochastic) -> Result<Permutation> {
    let (dev, min) = d.feasibility();
    if dev > SUM_TOL {
        return Err(invalid(format!(
            "row/column sums deviate from 1 by {dev:e} (tolerance {SUM_TOL:e})"
        )));
    }
    if min < NEG_TOL {
        return Err(invalid(format!("negative entry {min:e}")));
    }
    let neg: Array2<f64> = d.matrix().mapv(|v| -v);
    Ok(lap_min(neg.view())?.0)
}
