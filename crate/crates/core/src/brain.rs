//! Weighted structural-connectivity matrices and their binarisation.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::generators::halves_swap;
use crate::graph::Graph;
use crate::perm::Permutation;

/// Relative asymmetry `|w_ij − w_ji| / max(w_ij, w_ji)` above which a matrix
/// is rejected instead of symmetrised.
pub const MAX_REL_ASYMMETRY: f64 = 0.10;

/// Symmetric non-negative weight matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrix {
    n: usize,
    w: Vec<f64>,
}

impl WeightedMatrix {
    /// Symmetrises by averaging and zeroes the diagonal.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("row has {} entries, expected {n}", row.len()),
                });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("weight {v} is not a finite non-negative number"),
                });
            }
        }
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (rows[i][j], rows[j][i]);
                let scale = a.max(b);
                if scale > 0.0 && (a - b).abs() > MAX_REL_ASYMMETRY * scale {
                    return Err(invalid(format!(
                        "entries ({i}, {j}) = {a} and ({j}, {i}) = {b} differ by more than 10%"
                    )));
                }
                let avg = 0.5 * (a + b);
                w[i * n + j] = avg;
                w[j * n + i] = avg;
            }
        }
        Ok(WeightedMatrix { n, w })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|tok| !tok.is_empty())
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::Parse {
                        line: idx + 1,
                        msg: format!("not a number: {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        WeightedMatrix::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }
}

/// Reads a comma- or whitespace-delimited square matrix.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<WeightedMatrix> {
    WeightedMatrix::parse(&fs::read_to_string(path)?)
}

/// Number of edges kept at density `rho`: `round(rho·C(n, 2))`, halves up.
pub fn target_edge_count(n: usize, rho: f64) -> usize {
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    (rho * pairs + 0.5).floor() as usize
}

/// Keeps the `round(rho·C(n, 2))` heaviest pairs. Equal weights are ordered
/// lexicographically by `(i, j)`; zero-weight pairs never become edges.
pub fn binarize_density(wm: &WeightedMatrix, rho: f64) -> Result<Graph> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!("density {rho} must lie in (0, 1]")));
    }
    let n = wm.n();
    let k = target_edge_count(n, rho);
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| wm.weight(i, j) > 0.0)
        .collect();
    // Stable sort keeps lexicographic order among ties.
    pairs.sort_by(|&(a, b), &(c, d)| {
        wm.weight(c, d)
            .partial_cmp(&wm.weight(a, b))
            .unwrap_or(Ordering::Equal)
    });
    pairs.truncate(k);
    Graph::from_edges(n, &pairs)
}

/// Hemisphere map for atlases listing all left regions before all right ones.
pub fn lr_halves(n: usize) -> Result<Permutation> {
    halves_swap(n)
}

/// Reads a left-right map in the one-line permutation format.
pub fn lr_from_file(path: impl AsRef<Path>, n: usize) -> Result<Permutation> {
    let p = Permutation::parse_text(&fs::read_to_string(path)?)?;
    if p.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: p.len(),
        });
    }
    Ok(p)
}
