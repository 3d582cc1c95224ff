//! Annealing with Fixed Points.
//!
//! Metropolis annealing over permutations. A move exchanges the images of
//! two distinct positions; moves that would push the number of fixed points
//! above `K` are rejected outright. The temperature follows the logarithmic
//! schedule `T(t) = c / ln(t + d)` and the energy is `epsilon`. The run
//! returns the best non-identity permutation it visited.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::generators::{distinct_pair, seeded_rng};
use crate::graph::Graph;
use crate::metrics::{coefficient_from_epsilon, mismatch_count};
use crate::perm::Permutation;
use crate::qsa::InitSpec;
use crate::report::SolverReport;

/// Proposals sampled from the start state to calibrate `c`.
pub const CALIBRATION_SAMPLES: usize = 200;
/// Target acceptance probability of the median uphill move at `t = 1`.
pub const CALIBRATION_ACCEPTANCE: f64 = 0.8;
/// Steps between internal energy checkpoints.
pub const CHECKPOINT_EVERY: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfpOptions {
    /// Cap on fixed points; `None` means `⌊n/2⌋`.
    pub max_fp: Option<usize>,
    /// Number of proposals; `None` means `100·n²`.
    pub budget: Option<u64>,
    /// Cooling numerator; `None` calibrates it from the start state.
    pub sched_c: Option<f64>,
    pub sched_d: f64,
    pub seed: u64,
    /// `Random` draws a permutation with at most `K` fixed points. Blends are
    /// reduced to their base permutation.
    pub init: InitSpec,
}

impl Default for AfpOptions {
    fn default() -> Self {
        AfpOptions {
            max_fp: None,
            budget: None,
            sched_c: None,
            sched_d: 2.0,
            seed: 0,
            init: InitSpec::Random,
        }
    }
}

impl AfpOptions {
    pub fn max_fp_for(&self, n: usize) -> usize {
        self.max_fp.unwrap_or(n / 2).min(n)
    }

    pub fn budget_for(&self, n: usize) -> u64 {
        self.budget.unwrap_or(100 * (n as u64) * (n as u64))
    }
}

/// `T(t) = c / ln(t + d)`.
pub fn temperature(t: u64, sched_c: f64, sched_d: f64) -> Result<f64> {
    if t < 1 {
        return Err(invalid("annealing steps start at t = 1"));
    }
    if sched_c.is_nan() || sched_c <= 0.0 {
        return Err(invalid(format!("cooling numerator must be positive (c = {sched_c})")));
    }
    let arg = t as f64 + sched_d;
    if arg.is_nan() || arg <= 1.0 {
        return Err(invalid(format!("ln(t + d) must be positive (t + d = {arg})")));
    }
    Ok(sched_c / arg.ln())
}

/// Change in `2·epsilon` (the mismatch count) when the images of `i` and `j`
/// are exchanged. Only rows `i`, `j`, `p(i)`, `p(j)` of the adjacency are read.
pub fn delta_epsilon(g: &Graph, p: &Permutation, i: usize, j: usize) -> Result<i64> {
    check_dim(g.n(), p.len())?;
    let n = g.n();
    if i >= n || j >= n {
        return Err(invalid(format!("swap ({i}, {j}) out of range for n = {n}")));
    }
    if i == j {
        return Err(invalid("swap positions must differ"));
    }
    let (ra, rb) = (g.row(p.apply(i)), g.row(p.apply(j)));
    let (ri, rj) = (g.row(i), g.row(j));
    let mut delta = 0i64;
    for v in 0..n {
        if v == i || v == j {
            continue;
        }
        let pv = p.apply(v);
        let (ai, aj) = (ri[v], rj[v]);
        let (bi, bj) = (ra[pv], rb[pv]);
        delta += (ai != bj) as i64 - (ai != bi) as i64 + (aj != bi) as i64 - (aj != bj) as i64;
    }
    Ok(delta)
}

/// Adjacency rows as bitsets, plus the same for the relabelled graph
/// `B[u][v] = A[p(u)][p(v)]`, kept in sync with the current permutation.
struct AnnealState {
    words: usize,
    a: Vec<u64>,
    b: Vec<u64>,
    perm: Vec<usize>,
    mismatch: i64,
    fixed: usize,
}

impl AnnealState {
    fn new(g: &Graph, p: &Permutation) -> Self {
        let n = g.n();
        let words = n.div_ceil(64).max(1);
        let mut a = vec![0u64; n * words];
        let mut b = vec![0u64; n * words];
        for u in 0..n {
            for v in 0..n {
                if g.has_edge(u, v) {
                    a[u * words + v / 64] |= 1 << (v % 64);
                }
                if g.has_edge(p.apply(u), p.apply(v)) {
                    b[u * words + v / 64] |= 1 << (v % 64);
                }
            }
        }
        let mut st = AnnealState {
            words,
            a,
            b,
            perm: p.images().to_vec(),
            mismatch: 0,
            fixed: p.fixed_points(),
        };
        st.mismatch = (0..n).map(|u| st.row_diff(u, u)).sum::<i64>() / 2;
        st
    }

    #[inline]
    fn bit(row: &[u64], v: usize) -> i64 {
        ((row[v / 64] >> (v % 64)) & 1) as i64
    }

    /// Positions where row `x` of `A` and row `y` of `B` differ.
    #[inline]
    fn row_diff(&self, x: usize, y: usize) -> i64 {
        let w = self.words;
        self.a[x * w..(x + 1) * w]
            .iter()
            .zip(&self.b[y * w..(y + 1) * w])
            .map(|(p, q)| (p ^ q).count_ones() as i64)
            .sum()
    }

    /// As `row_diff` but ignoring columns `i` and `j`.
    #[inline]
    fn row_diff_excl(&self, x: usize, y: usize, i: usize, j: usize) -> i64 {
        let w = self.words;
        let ar = &self.a[x * w..(x + 1) * w];
        let br = &self.b[y * w..(y + 1) * w];
        self.row_diff(x, y)
            - (Self::bit(ar, i) ^ Self::bit(br, i))
            - (Self::bit(ar, j) ^ Self::bit(br, j))
    }

    fn delta(&self, i: usize, j: usize) -> i64 {
        self.row_diff_excl(i, j, i, j) - self.row_diff_excl(i, i, i, j)
            + self.row_diff_excl(j, i, i, j)
            - self.row_diff_excl(j, j, i, j)
    }

    fn fixed_after_swap(&self, i: usize, j: usize) -> usize {
        let (pi, pj) = (self.perm[i], self.perm[j]);
        self.fixed + (pj == i) as usize + (pi == j) as usize
            - (pi == i) as usize
            - (pj == j) as usize
    }

    fn apply_swap(&mut self, i: usize, j: usize, delta: i64, new_fixed: usize) {
        let w = self.words;
        let n = self.perm.len();
        // Rows i and j of B exchange; the (i, j) entry is symmetric so it
        // survives the exchange, the diagonal stays zero.
        for k in 0..w {
            self.b.swap(i * w + k, j * w + k);
        }
        // Columns i and j of B exchange in every row.
        let (wi, mi) = (i / 64, 1u64 << (i % 64));
        let (wj, mj) = (j / 64, 1u64 << (j % 64));
        for u in 0..n {
            let row = &mut self.b[u * w..(u + 1) * w];
            let bi = row[wi] & mi != 0;
            let bj = row[wj] & mj != 0;
            if bi != bj {
                row[wi] ^= mi;
                row[wj] ^= mj;
            }
        }
        self.perm.swap(i, j);
        self.mismatch += delta;
        self.fixed = new_fixed;
    }
}

/// Cooling numerator such that the median uphill move seen from `p` is
/// accepted with probability 0.8 at `t = 1`.
pub fn calibrate_sched_c(g: &Graph, p: &Permutation, sched_d: f64, seed: u64) -> Result<f64> {
    check_dim(g.n(), p.len())?;
    if g.n() < 2 {
        return Err(invalid("calibration needs at least two nodes"));
    }
    let state = AnnealState::new(g, p);
    let mut rng = seeded_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut uphill: Vec<i64> = (0..CALIBRATION_SAMPLES)
        .map(|_| {
            let (i, j) = distinct_pair(g.n(), &mut rng);
            state.delta(i, j)
        })
        .filter(|&d| d > 0)
        .collect();
    if uphill.is_empty() {
        return Ok(1.0);
    }
    uphill.sort_unstable();
    let median_eps = uphill[uphill.len() / 2] as f64 / 2.0;
    let t1 = median_eps / (1.0 / CALIBRATION_ACCEPTANCE).ln();
    Ok(t1 * (1.0 + sched_d).ln())
}

/// Runs AFP from `opts.init`.
pub fn afp_solve(g: &Graph, opts: &AfpOptions) -> Result<SolverReport> {
    afp_solve_observed(g, opts, |_, _, _| {})
}

/// As [`afp_solve`], calling `observer(t, current, 2·epsilon)` every
/// [`CHECKPOINT_EVERY`] steps and after the last one.
pub fn afp_solve_observed<F>(g: &Graph, opts: &AfpOptions, mut observer: F) -> Result<SolverReport>
where
    F: FnMut(u64, &Permutation, u64),
{
    let start = Instant::now();
    let n = g.n();
    if n < 2 {
        return Err(invalid(format!("AFP needs at least two nodes (n = {n})")));
    }
    let k = opts.max_fp_for(n);
    let budget = opts.budget_for(n);
    if budget == 0 {
        return Err(invalid("budget must be at least 1"));
    }
    if opts.sched_d.is_nan() || opts.sched_d + 1.0 <= 1.0 {
        return Err(invalid(format!("sched_d must exceed 0 (got {})", opts.sched_d)));
    }
    let init = opts.init.base_permutation(n, k, opts.seed)?;
    if init.fixed_points() > k {
        return Err(Error::Infeasible(format!(
            "initial permutation has {} fixed points, cap is {k}",
            init.fixed_points()
        )));
    }
    let sched_c = match opts.sched_c {
        Some(c) => c,
        None => calibrate_sched_c(g, &init, opts.sched_d, opts.seed)?,
    };
    temperature(1, sched_c, opts.sched_d)?;

    let mut rng = seeded_rng(opts.seed);
    let mut state = AnnealState::new(g, &init);
    let mut best: Option<(i64, Vec<usize>)> =
        (!init.is_identity()).then(|| (state.mismatch, state.perm.clone()));
    let trace_every = (budget / 100).max(1);
    let mut trace = Vec::with_capacity(101);
    let best_eps = |b: &Option<(i64, Vec<usize>)>, cur: i64| (b.as_ref().map_or(cur, |(m, _)| *m) / 2) as f64;

    for t in 1..=budget {
        let (i, j) = distinct_pair(n, &mut rng);
        let new_fixed = state.fixed_after_swap(i, j);
        if new_fixed <= k {
            let d = state.delta(i, j);
            let accept = d <= 0 || {
                let temp = opts_temperature(t, sched_c, opts.sched_d);
                rng.random::<f64>() < (-(d as f64 / 2.0) / temp).exp()
            };
            if accept {
                state.apply_swap(i, j, d, new_fixed);
                let improves = best.as_ref().is_none_or(|(m, _)| state.mismatch < *m);
                if improves && state.fixed != n {
                    best = Some((state.mismatch, state.perm.clone()));
                }
            }
        }
        if t % CHECKPOINT_EVERY == 0 || t == budget {
            observer(t, &Permutation::from_images_unchecked(state.perm.clone()), state.mismatch as u64);
        }
        if t % trace_every == 0 || t == budget {
            trace.push(best_eps(&best, state.mismatch));
        }
    }

    let perm = match best {
        Some((_, img)) => Permutation::from_images_unchecked(img),
        None => Permutation::from_images_unchecked(state.perm),
    };
    let eps = mismatch_count(g, &perm)? / 2;
    Ok(SolverReport {
        s: coefficient_from_epsilon(n, eps)?,
        epsilon: eps,
        objective_trace: trace,
        iters: budget as usize,
        fixed_point_count: perm.fixed_points(),
        is_identity: perm.is_identity(),
        wall_ms: start.elapsed().as_millis() as u64,
        seed: opts.seed,
        final_perm: perm,
    })
}

#[inline]
fn opts_temperature(t: u64, c: f64, d: f64) -> f64 {
    c / (t as f64 + d).ln()
}
