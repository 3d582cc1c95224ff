//! Symmetry metrics of a graph under a vertex permutation.
//!
//! With `A` the adjacency matrix and `P` the permutation matrix, the
//! mismatch count `M` is the number of unordered pairs `{i, j}` whose
//! adjacency differs between `A` and `PAPᵀ`. Each such pair contributes
//! four unit entries to `‖A − PAPᵀ‖²_F`, so
//!
//! * `epsilon = ¼‖A − PAPᵀ‖²_F = M / 2` (an integer, `M` is always even),
//! * `S = epsilon / (½·C(n, 2)) = M / C(n, 2)`, a value in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::doubly_stochastic::DoublyStochastic;
use crate::error::{check_dim, invalid, Result};
use crate::graph::Graph;
use crate::perm::Permutation;

/// Non-negative per-node reward/penalty `c` applied to the diagonal of the
/// relaxed assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PenaltyVector(Vec<f64>);

impl PenaltyVector {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = c.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!(
                "penalty entries must be finite and non-negative (c[{i}] = {v})"
            )));
        }
        Ok(PenaltyVector(c))
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        PenaltyVector::new(vec![value; n])
    }

    pub fn zeros(n: usize) -> Self {
        PenaltyVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for PenaltyVector {
    type Error = crate::error::Error;

    fn try_from(c: Vec<f64>) -> Result<Self> {
        PenaltyVector::new(c)
    }
}

impl From<PenaltyVector> for Vec<f64> {
    fn from(c: PenaltyVector) -> Vec<f64> {
        c.0
    }
}

/// The graph with every node `i` relabelled as `p(i)`.
pub fn permute_graph(g: &Graph, p: &Permutation) -> Result<Graph> {
    check_dim(g.n(), p.len())?;
    let n = g.n();
    let mut adj = vec![0u8; n * n];
    for i in 0..n {
        let pi = p.apply(i);
        for j in 0..n {
            adj[pi * n + p.apply(j)] = g.entry(i, j);
        }
    }
    Graph::from_adjacency(n, adj)
}

/// Unordered pairs `{i, j}` with `A[i][j] ≠ A[p(i)][p(j)]`.
pub fn mismatch_count(g: &Graph, p: &Permutation) -> Result<u64> {
    check_dim(g.n(), p.len())?;
    let n = g.n();
    let mut count = 0u64;
    for i in 0..n {
        let pi = p.apply(i);
        let row = g.row(i);
        let prow = g.row(pi);
        for j in i + 1..n {
            count += (row[j] != prow[p.apply(j)]) as u64;
        }
    }
    Ok(count)
}

/// `¼‖A − PAPᵀ‖²_F`: the number of edges lost (equivalently gained)
/// under the permutation.
pub fn epsilon(g: &Graph, p: &Permutation) -> Result<u64> {
    let m = mismatch_count(g, p)?;
    debug_assert_eq!(m % 2, 0);
    Ok(m / 2)
}

/// Normalised approximate symmetry coefficient from an epsilon value.
pub fn coefficient_from_epsilon(n: usize, eps: u64) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("symmetry coefficient needs n >= 2 (n = {n})")));
    }
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    Ok(2.0 * eps as f64 / pairs as f64)
}

/// `S = epsilon / (½·C(n, 2))`, in `[0, 1]`; zero exactly for automorphisms.
pub fn symmetry_coefficient(g: &Graph, p: &Permutation) -> Result<f64> {
    if g.n() < 2 {
        return Err(invalid(format!(
            "symmetry coefficient needs n >= 2 (n = {})",
            g.n()
        )));
    }
    coefficient_from_epsilon(g.n(), epsilon(g, p)?)
}

/// `tr(A P A Pᵀ)`: ordered pairs that are edges both before and after
/// relabelling.
pub fn overlap_trace(g: &Graph, p: &Permutation) -> Result<u64> {
    check_dim(g.n(), p.len())?;
    let mut t = 0u64;
    for (i, j) in g.edges() {
        t += 2 * g.entry(p.apply(i), p.apply(j)) as u64;
    }
    Ok(t)
}

/// Penalised objective `−tr(APAᵀPᵀ) + Σ c[i]·P[i][i]` at a permutation.
pub fn asp_objective_perm(g: &Graph, p: &Permutation, c: &PenaltyVector) -> Result<f64> {
    check_dim(g.n(), c.len())?;
    let overlap = overlap_trace(g, p)? as f64;
    let penalty: f64 = (0..p.len())
        .filter(|&i| p.apply(i) == i)
        .map(|i| c.as_slice()[i])
        .sum();
    Ok(penalty - overlap)
}

/// Same objective evaluated at a doubly stochastic matrix.
pub fn asp_objective(g: &Graph, x: &DoublyStochastic, c: &PenaltyVector) -> Result<f64> {
    check_dim(g.n(), x.n())?;
    check_dim(g.n(), c.len())?;
    let a = g.to_array();
    let axa = a.dot(x.matrix()).dot(&a);
    let quad = (&axa * x.matrix()).sum();
    let lin: f64 = (0..g.n()).map(|i| c.as_slice()[i] * x.matrix()[[i, i]]).sum();
    Ok(lin - quad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn rot() -> Permutation {
        Permutation::from_images(vec![1, 2, 0]).unwrap()
    }

    #[test]
    fn permute_path() {
        let h = permute_graph(&path3(), &rot()).unwrap();
        assert_eq!(h.edges(), vec![(0, 2), (1, 2)]);
        let id = Permutation::identity(3);
        assert_eq!(permute_graph(&path3(), &id).unwrap(), path3());
    }

    #[test]
    fn cycle_rotation_is_automorphism() {
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let r = Permutation::from_images(vec![1, 2, 3, 0]).unwrap();
        assert_eq!(permute_graph(&c4, &r).unwrap(), c4);
        assert_eq!(epsilon(&c4, &r).unwrap(), 0);
    }

    #[test]
    fn path_metrics() {
        assert_eq!(mismatch_count(&path3(), &rot()).unwrap(), 2);
        assert_eq!(epsilon(&path3(), &rot()).unwrap(), 1);
        let s = symmetry_coefficient(&path3(), &rot()).unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(asp_objective_perm(&path3(), &rot(), &PenaltyVector::zeros(3)).unwrap(), -2.0);
    }

    #[test]
    fn complete_graph_objective() {
        let k3 = Graph::complete(3);
        let c = PenaltyVector::zeros(3);
        for img in [[0, 1, 2], [1, 2, 0], [2, 1, 0]] {
            let p = Permutation::from_images(img.to_vec()).unwrap();
            assert_eq!(asp_objective_perm(&k3, &p, &c).unwrap(), -6.0);
        }
    }

    #[test]
    fn identity_with_uniform_penalty() {
        let g = path3();
        let c = PenaltyVector::uniform(3, 2.5).unwrap();
        let v = asp_objective_perm(&g, &Permutation::identity(3), &c).unwrap();
        assert_eq!(v, -4.0 + 2.5 * 3.0);
        let x = DoublyStochastic::from_permutation(&Permutation::identity(3));
        assert!((asp_objective(&g, &x, &c).unwrap() - v).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(symmetry_coefficient(&Graph::empty(1), &Permutation::identity(1)).is_err());
        assert!(epsilon(&path3(), &Permutation::identity(4)).is_err());
        assert!(PenaltyVector::new(vec![1.0, -0.5]).is_err());
        assert!(asp_objective_perm(&path3(), &rot(), &PenaltyVector::zeros(2)).is_err());
    }
}
