//! Quadratic Symmetry Approximator.
//!
//! Minimises the penalised relaxed objective
//!
//! ```text
//! f(X) = −tr(A X Aᵀ Xᵀ) + Σ_i c[i]·X[i][i]
//! ```
//!
//! over doubly stochastic `X` with Frank–Wolfe: the linearised subproblem is a
//! linear assignment on the gradient, and the step along the segment towards
//! its solution is the exact minimiser of the quadratic `f` on that segment.
//! The final iterate is projected onto the nearest permutation matrix.

use std::time::Instant;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::assignment::{lap_min, project_to_permutation};
use crate::doubly_stochastic::DoublyStochastic;
use crate::error::{check_dim, invalid, Result};
use crate::generators::random_perm_max_fp;
use crate::graph::Graph;
use crate::metrics::{coefficient_from_epsilon, epsilon, overlap_trace, PenaltyVector};
use crate::perm::Permutation;
use crate::report::SolverReport;

/// Starting point of a solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitSpec {
    Identity,
    /// Uniform random permutation drawn from the run seed.
    Random,
    Given(Permutation),
    /// `(1 − λ)·P + λ·J/n` with `P` resolved from `base`.
    Blend { base: Box<InitSpec>, lambda: f64 },
}

impl InitSpec {
    pub fn blend(base: InitSpec, lambda: f64) -> InitSpec {
        InitSpec::Blend {
            base: Box::new(base),
            lambda,
        }
    }

    /// The permutation underlying this spec (ignoring any blend). `max_fp`
    /// bounds the fixed points of a random draw.
    pub fn base_permutation(&self, n: usize, max_fp: usize, seed: u64) -> Result<Permutation> {
        match self {
            InitSpec::Identity => Ok(Permutation::identity(n)),
            InitSpec::Random => random_perm_max_fp(n, max_fp, seed),
            InitSpec::Given(p) => {
                check_dim(n, p.len())?;
                Ok(p.clone())
            }
            InitSpec::Blend { base, .. } => base.base_permutation(n, max_fp, seed),
        }
    }

    /// Same spec with the base permutation replaced by `p`.
    pub fn with_base(&self, p: Permutation) -> InitSpec {
        match self {
            InitSpec::Blend { lambda, .. } => InitSpec::blend(InitSpec::Given(p), *lambda),
            _ => InitSpec::Given(p),
        }
    }

    fn starting_point(&self, n: usize, seed: u64) -> Result<DoublyStochastic> {
        let p = self.base_permutation(n, n, seed)?;
        match self {
            InitSpec::Blend { lambda, .. } => DoublyStochastic::blend(&p, *lambda),
            _ => Ok(DoublyStochastic::from_permutation(&p)),
        }
    }
}

/// Blend weight used for random starts.
pub const DEFAULT_BLEND: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsaOptions {
    pub max_iters: usize,
    /// Stop once the relative objective decrease of an iteration drops below this.
    pub rel_tol: f64,
    pub init: InitSpec,
    /// `None` selects [`default_penalty`].
    pub penalty: Option<PenaltyVector>,
}

impl Default for QsaOptions {
    fn default() -> Self {
        QsaOptions {
            max_iters: 200,
            rel_tol: 1e-8,
            init: InitSpec::blend(InitSpec::Random, DEFAULT_BLEND),
            penalty: None,
        }
    }
}

impl QsaOptions {
    pub fn with_init(init: InitSpec) -> Self {
        QsaOptions {
            init,
            ..QsaOptions::default()
        }
    }
}

/// Uniform penalty `2·d_max + 1`. The diagonal contribution of node `i` to
/// `tr(A X A Xᵀ)` is at most `2·deg(i)`, so this strictly outweighs it.
pub fn default_penalty(g: &Graph) -> PenaltyVector {
    PenaltyVector::uniform(g.n(), (2 * g.max_degree() + 1) as f64)
        .expect("positive finite penalty")
}

/// `∇f(X) = −(A X Aᵀ + Aᵀ X A) + diag(c) = −2·A X A + diag(c)`.
pub fn qsa_gradient(g: &Graph, x: &DoublyStochastic, c: &PenaltyVector) -> Result<Array2<f64>> {
    check_dim(g.n(), x.n())?;
    check_dim(g.n(), c.len())?;
    let a = g.to_array();
    let axa = a.dot(x.matrix()).dot(&a);
    Ok(gradient_from(&axa, c))
}

fn gradient_from(axa: &Array2<f64>, c: &PenaltyVector) -> Array2<f64> {
    let mut grad = axa.mapv(|v| -2.0 * v);
    for (i, ci) in c.as_slice().iter().enumerate() {
        grad[[i, i]] += ci;
    }
    grad
}

/// Minimiser over `[0, 1]` of `g(α) = a·α² + b·α`. Ties go to the smaller step.
fn exact_step(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        (-b / (2.0 * a)).clamp(0.0, 1.0)
    } else if a + b < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Quadratic coefficients of `f(X + α(Q − X)) − f(X)` given `axa = A X A`.
fn segment_coefficients(
    g: &Graph,
    x: &DoublyStochastic,
    axa: &Array2<f64>,
    q: &Permutation,
    c: &PenaltyVector,
) -> Result<(f64, f64)> {
    let xm = x.matrix();
    let n = g.n();
    // tr(A X A Xᵀ), tr(A X A Qᵀ), tr(A Q A Qᵀ)
    let xx = Zip::from(axa).and(xm).fold(0.0, |acc, &u, &v| acc + u * v);
    let xq: f64 = (0..n).map(|i| axa[[i, q.apply(i)]]).sum();
    let qq = overlap_trace(g, q)? as f64;
    let cs = c.as_slice();
    let diag_d: f64 = (0..n)
        .map(|i| cs[i] * ((q.apply(i) == i) as u8 as f64 - xm[[i, i]]))
        .sum();
    let a = -(qq - 2.0 * xq + xx);
    let b = -2.0 * (xq - xx) + diag_d;
    Ok((a, b))
}

/// Exact line search from `X` towards the permutation `q`.
pub fn fw_linesearch(
    g: &Graph,
    x: &DoublyStochastic,
    q: &Permutation,
    c: &PenaltyVector,
) -> Result<f64> {
    check_dim(g.n(), x.n())?;
    check_dim(g.n(), q.len())?;
    check_dim(g.n(), c.len())?;
    let a_mat = g.to_array();
    let axa = a_mat.dot(x.matrix()).dot(&a_mat);
    let (a, b) = segment_coefficients(g, x, &axa, q, c)?;
    Ok(exact_step(a, b))
}

fn objective_from(axa: &Array2<f64>, x: &DoublyStochastic, c: &PenaltyVector) -> f64 {
    let quad = Zip::from(axa)
        .and(x.matrix())
        .fold(0.0, |acc, &u, &v| acc + u * v);
    let lin: f64 = c
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, ci)| ci * x.matrix()[[i, i]])
        .sum();
    lin - quad
}

fn validate(g: &Graph, opts: &QsaOptions) -> Result<()> {
    if g.n() < 2 {
        return Err(invalid(format!("QSA needs at least two nodes (n = {})", g.n())));
    }
    if opts.max_iters < 1 {
        return Err(invalid("max_iters must be at least 1"));
    }
    if opts.rel_tol.is_nan() || opts.rel_tol <= 0.0 {
        return Err(invalid(format!("rel_tol must be positive (got {})", opts.rel_tol)));
    }
    if let Some(c) = &opts.penalty {
        check_dim(g.n(), c.len())?;
    }
    Ok(())
}

/// Runs QSA. `seed` only matters for random initialisations.
pub fn qsa_solve(g: &Graph, opts: &QsaOptions, seed: u64) -> Result<SolverReport> {
    qsa_solve_observed(g, opts, seed, |_, _| {})
}

/// As [`qsa_solve`], calling `observer(k, X)` on the starting point (`k = 0`)
/// and after every iteration.
pub fn qsa_solve_observed<F>(
    g: &Graph,
    opts: &QsaOptions,
    seed: u64,
    mut observer: F,
) -> Result<SolverReport>
where
    F: FnMut(usize, &DoublyStochastic),
{
    validate(g, opts)?;
    let start = Instant::now();
    let n = g.n();
    let c = match &opts.penalty {
        Some(c) => c.clone(),
        None => default_penalty(g),
    };
    let a_mat = g.to_array();
    let mut x = opts.init.starting_point(n, seed)?;
    observer(0, &x);

    let mut axa = a_mat.dot(x.matrix()).dot(&a_mat);
    let mut f = objective_from(&axa, &x, &c);
    let mut trace = vec![f];
    let mut iters = 0;

    while iters < opts.max_iters {
        let grad = gradient_from(&axa, &c);
        let (q, _) = lap_min(grad.view())?;
        let (a, b) = segment_coefficients(g, &x, &axa, &q, &c)?;
        let alpha = exact_step(a, b);
        if alpha == 0.0 {
            break;
        }
        {
            let xm = x.matrix_mut();
            xm.mapv_inplace(|v| (1.0 - alpha) * v);
            for i in 0..n {
                xm[[i, q.apply(i)]] += alpha;
            }
        }
        iters += 1;
        observer(iters, &x);
        axa = a_mat.dot(x.matrix()).dot(&a_mat);
        let f_new = objective_from(&axa, &x, &c);
        trace.push(f_new);
        let decrease = f - f_new;
        f = f_new;
        if decrease / f.abs().max(1.0) < opts.rel_tol {
            break;
        }
    }

    let perm = project_to_permutation(&x)?;
    let eps = epsilon(g, &perm)?;
    Ok(SolverReport {
        s: coefficient_from_epsilon(n, eps)?,
        epsilon: eps,
        objective_trace: trace,
        iters,
        fixed_point_count: perm.fixed_points(),
        is_identity: perm.is_identity(),
        wall_ms: start.elapsed().as_millis() as u64,
        seed,
        final_perm: perm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_er, gen_lrm};
    use crate::metrics::asp_objective;

    #[test]
    fn gradient_of_empty_graph_is_penalty() {
        let g = Graph::empty(3);
        let c = PenaltyVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let x = DoublyStochastic::barycenter(3);
        let grad = qsa_gradient(&g, &x, &c).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { c.as_slice()[i] } else { 0.0 };
                assert_eq!(grad[[i, j]], want);
            }
        }
    }

    #[test]
    fn gradient_of_single_edge_at_identity() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let x = DoublyStochastic::from_permutation(&Permutation::identity(2));
        let grad = qsa_gradient(&g, &x, &PenaltyVector::zeros(2)).unwrap();
        assert_eq!(grad, ndarray::array![[-2.0, 0.0], [0.0, -2.0]]);
    }

    #[test]
    fn step_rule_cases() {
        assert_eq!(exact_step(0.0, 0.0), 0.0);
        assert!((exact_step(1.0, -0.6) - 0.3).abs() < 1e-15);
        assert_eq!(exact_step(1.0, 0.5), 0.0);
        assert_eq!(exact_step(1.0, -5.0), 1.0);
        assert_eq!(exact_step(-1.0, 0.5), 1.0);
        assert_eq!(exact_step(-1.0, 1.5), 0.0);
        assert_eq!(exact_step(-1.0, 1.0), 0.0);
    }

    #[test]
    fn linesearch_minimises_on_grid() {
        let g = gen_er(12, 0.4, 3).unwrap();
        let c = default_penalty(&g);
        for seed in 0..10 {
            let p = random_perm_max_fp(12, 12, seed).unwrap();
            let q = random_perm_max_fp(12, 12, seed + 100).unwrap();
            let x = DoublyStochastic::blend(&p, 0.5).unwrap();
            let alpha = fw_linesearch(&g, &x, &q, &c).unwrap();
            let along = |t: f64| {
                let d = (1.0 - t) * x.matrix() + t * q.to_matrix();
                asp_objective(&g, &DoublyStochastic::from_raw(d), &c).unwrap()
            };
            let best = along(alpha);
            for k in 0..=100 {
                assert!(best <= along(k as f64 / 100.0) + 1e-9);
            }
        }
    }

    #[test]
    fn linesearch_degenerate_direction() {
        let g = gen_er(8, 0.5, 1).unwrap();
        let p = random_perm_max_fp(8, 8, 4).unwrap();
        let x = DoublyStochastic::from_permutation(&p);
        assert_eq!(fw_linesearch(&g, &x, &p, &default_penalty(&g)).unwrap(), 0.0);
    }

    #[test]
    fn default_penalty_values() {
        assert_eq!(default_penalty(&Graph::empty(4)).as_slice(), &[1.0; 4]);
        assert_eq!(default_penalty(&Graph::complete(5)).as_slice()[0], 9.0);
        let star = Graph::from_edges(11, &(1..11).map(|v| (0, v)).collect::<Vec<_>>()).unwrap();
        assert_eq!(default_penalty(&star).as_slice()[3], 21.0);
    }

    #[test]
    fn automorphism_start_is_kept() {
        let inst = gen_lrm(40, 0.2, 0.25, 6).unwrap();
        let opts = QsaOptions::with_init(InitSpec::Given(inst.lr.clone()));
        let rep = qsa_solve(&inst.graph, &opts, 0).unwrap();
        assert_eq!(rep.epsilon, 0);
        assert_eq!(rep.s, 0.0);
    }

    #[test]
    fn deterministic_and_monotone() {
        let g = gen_er(30, 0.3, 2).unwrap();
        let opts = QsaOptions::default();
        let a = qsa_solve(&g, &opts, 17).unwrap();
        let b = qsa_solve(&g, &opts, 17).unwrap();
        assert_eq!(a.final_perm, b.final_perm);
        assert_eq!(a.objective_trace, b.objective_trace);
        for w in a.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn rejects_bad_options() {
        let g = gen_er(5, 0.5, 0).unwrap();
        let opts = QsaOptions {
            max_iters: 0,
            ..QsaOptions::default()
        };
        assert!(qsa_solve(&g, &opts, 0).is_err());
        let opts = QsaOptions {
            rel_tol: 0.0,
            ..QsaOptions::default()
        };
        assert!(qsa_solve(&g, &opts, 0).is_err());
        assert!(qsa_solve(&Graph::empty(1), &QsaOptions::default(), 0).is_err());
        let opts = QsaOptions::with_init(InitSpec::Given(Permutation::identity(4)));
        assert!(qsa_solve(&g, &opts, 0).is_err());
        let opts = QsaOptions::with_init(InitSpec::blend(InitSpec::Random, 2.0));
        assert!(qsa_solve(&g, &opts, 0).is_err());
    }
}
