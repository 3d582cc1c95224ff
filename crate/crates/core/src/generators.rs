//! Structured and random graph models, plus permutation perturbations.
//!
//! Every randomised generator takes an explicit `u64` seed and draws from its
//! own ChaCha stream, so identical arguments always give identical output.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::perm::Permutation;

/// Largest node count any generator will produce.
pub const MAX_NODES: usize = 10_000;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {p} is not a probability")))
    }
}

fn check_size(n: usize) -> Result<()> {
    if n <= MAX_NODES {
        Ok(())
    } else {
        Err(Error::Infeasible(format!("{n} nodes exceeds the cap of {MAX_NODES}")))
    }
}

/// Cartesian product of paths `P_{d1} × P_{d2} × …`. Node ids are mixed-radix
/// with the last coordinate varying fastest.
pub fn gen_grid(dims: &[usize]) -> Result<Graph> {
    if dims.is_empty() {
        return Err(invalid("grid needs at least one dimension"));
    }
    if let Some(d) = dims.iter().find(|&&d| d == 0) {
        return Err(invalid(format!("grid dimension {d} must be positive")));
    }
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n <= MAX_NODES)
        .ok_or_else(|| Error::Infeasible(format!("grid {dims:?} exceeds the node cap")))?;
    let mut g = Graph::empty(n);
    // stride[k] is the id offset of a unit step along coordinate k.
    let mut stride = vec![1usize; dims.len()];
    for k in (0..dims.len() - 1).rev() {
        stride[k] = stride[k + 1] * dims[k + 1];
    }
    for v in 0..n {
        for (k, &d) in dims.iter().enumerate() {
            let coord = (v / stride[k]) % d;
            if coord + 1 < d {
                g.add_edge(v, v + stride[k]);
            }
        }
    }
    Ok(g)
}

fn er_with<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Erdős–Rényi `G(n, p)`.
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    check_prob("p", p)?;
    check_size(n)?;
    Ok(er_with(n, p, &mut seeded_rng(seed)))
}

/// Barabási–Albert preferential attachment. Starts from the complete graph on
/// `m_attach + 1` nodes; every later node links to `m_attach` distinct
/// existing nodes drawn proportionally to their degree.
pub fn gen_ba(n: usize, m_attach: usize, seed: u64) -> Result<Graph> {
    if m_attach == 0 || m_attach >= n {
        return Err(invalid(format!(
            "BA needs 1 <= m_attach < n (m_attach = {m_attach}, n = {n})"
        )));
    }
    check_size(n)?;
    let mut rng = seeded_rng(seed);
    let mut g = Graph::empty(n);
    for i in 0..=m_attach {
        for j in i + 1..=m_attach {
            g.add_edge(i, j);
        }
    }
    let mut degree: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let mut targets = Vec::with_capacity(m_attach);
    for v in m_attach + 1..n {
        // Sequential draws without replacement from the degree snapshot.
        let mut weights: Vec<usize> = degree[..v].to_vec();
        let mut total: usize = weights.iter().sum();
        targets.clear();
        for _ in 0..m_attach {
            let mut r = rng.random_range(0..total);
            let mut pick = 0;
            for (u, &w) in weights.iter().enumerate() {
                if r < w {
                    pick = u;
                    break;
                }
                r -= w;
            }
            total -= weights[pick];
            weights[pick] = 0;
            targets.push(pick);
        }
        for &u in &targets {
            g.add_edge(v, u);
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    Ok(g)
}

/// Stochastic block model with blocks laid out consecutively in `sizes`
/// order and a symmetric block probability matrix.
pub fn gen_sbm(sizes: &[usize], probs: &[Vec<f64>], seed: u64) -> Result<Graph> {
    let r = sizes.len();
    if r == 0 {
        return Err(invalid("SBM needs at least one block"));
    }
    if probs.len() != r || probs.iter().any(|row| row.len() != r) {
        return Err(invalid(format!(
            "SBM probability matrix must be {r}x{r} to match the block sizes"
        )));
    }
    for (a, row) in probs.iter().enumerate() {
        for (b, &pab) in row.iter().enumerate() {
            check_prob("block probability", pab)?;
            if pab != probs[b][a] {
                return Err(invalid(format!(
                    "SBM probability matrix is not symmetric at ({a}, {b})"
                )));
            }
        }
    }
    let n: usize = sizes.iter().sum();
    check_size(n)?;
    let block: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let mut rng = seeded_rng(seed);
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < probs[block[i]][block[j]] {
                g.add_edge(i, j);
            }
        }
    }
    Ok(g)
}

/// Involution swapping the halves `[0, n/2)` and `[n/2, n)`.
pub(crate) fn halves_swap(n: usize) -> Result<Permutation> {
    if !n.is_multiple_of(2) {
        return Err(invalid(format!("half swap needs an even node count (n = {n})")));
    }
    let half = n / 2;
    Ok(Permutation::from_images_unchecked(
        (0..n)
            .map(|i| if i < half { i + half } else { i - half })
            .collect(),
    ))
}

/// Lateral random model together with its left-right automorphism.
#[derive(Debug, Clone)]
pub struct LrmInstance {
    pub graph: Graph,
    pub lr: Permutation,
    pub half: usize,
}

/// Two identical copies of one `G(n/2, p)` sample on `[0, n/2)` and
/// `[n/2, n)`, with each pair `(i, i + n/2)` joined with probability `q`.
pub fn gen_lrm(n: usize, p: f64, q: f64, seed: u64) -> Result<LrmInstance> {
    if !n.is_multiple_of(2) {
        return Err(invalid(format!("LRM needs an even node count (n = {n})")));
    }
    check_prob("p", p)?;
    check_prob("q", q)?;
    check_size(n)?;
    let half = n / 2;
    let mut rng = seeded_rng(seed);
    let base = er_with(half, p, &mut rng);
    let mut graph = base.disjoint_union(&base);
    for i in 0..half {
        if rng.random::<f64>() < q {
            graph.add_edge(i, i + half);
        }
    }
    Ok(LrmInstance {
        graph,
        lr: halves_swap(n)?,
        half,
    })
}

/// `k` sequential rewires: remove a uniformly random edge, then add a
/// uniformly random pair absent from the current graph (the pair just
/// removed excluded).
pub fn rewire_k(g: &Graph, k: usize, seed: u64) -> Result<Graph> {
    if k == 0 {
        return Ok(g.clone());
    }
    let n = g.n();
    let pairs = n * n.saturating_sub(1) / 2;
    if g.m() == 0 || g.m() == pairs {
        return Err(Error::Infeasible(
            "rewiring needs at least one edge and one non-adjacent pair".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let mut out = g.clone();
    let mut edges = out.edges();
    for _ in 0..k {
        let idx = rng.random_range(0..edges.len());
        let removed = edges.swap_remove(idx);
        out.remove_edge(removed.0, removed.1);
        let added = sample_absent_pair(&out, removed, &mut rng);
        out.add_edge(added.0, added.1);
        edges.push(added);
    }
    Ok(out)
}

fn sample_absent_pair<R: Rng>(g: &Graph, exclude: (usize, usize), rng: &mut R) -> (usize, usize) {
    let n = g.n();
    let absent_ok = |i: usize, j: usize| !g.has_edge(i, j) && (i, j) != exclude;
    // Rejection is fast unless the graph is nearly complete.
    for _ in 0..64 {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            continue;
        }
        let (a, b) = (i.min(j), i.max(j));
        if absent_ok(a, b) {
            return (a, b);
        }
    }
    let candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| absent_ok(i, j))
        .collect();
    candidates[rng.random_range(0..candidates.len())]
}

/// LRM extended with two twin sets whose clique halves are placed so that
/// the extended left-right map is only an approximate symmetry.
#[derive(Debug, Clone)]
pub struct DistortedLrmInstance {
    pub graph: Graph,
    /// Left-right map extended by `T1[i] ↔ T2[i]`.
    pub lr: Permutation,
    pub r: usize,
    pub t: usize,
    /// Twin node ids `T1` and `T2`, appended after the LRM nodes.
    pub twin_ids: (Vec<usize>, Vec<usize>),
    /// Anchor sets `X1` (in the first copy) and `X2 = lr(X1)`.
    pub anchor_ids: (Vec<usize>, Vec<usize>),
}

impl DistortedLrmInstance {
    /// An exact automorphism: the left-right map with the clique half of `T1`
    /// sent to the clique half of `T2` and vice versa.
    pub fn automorphism(&self) -> Permutation {
        let mut img = self.lr.images().to_vec();
        let h = self.t / 2;
        let (t1, t2) = &self.twin_ids;
        for i in 0..self.t {
            let partner = if i < h { i + h } else { i - h };
            img[t1[i]] = t2[partner];
            img[t2[partner]] = t1[i];
        }
        Permutation::from_images_unchecked(img)
    }
}

/// Adds `t` twins per side, each adjacent exactly to its side's `r` anchors,
/// then turns the first `t/2` twins of `T1` and the second `t/2` twins of
/// `T2` into cliques.
pub fn distort_lrm(base: &LrmInstance, r: usize, t: usize, seed: u64) -> Result<DistortedLrmInstance> {
    if t < 2 || !t.is_multiple_of(2) {
        return Err(invalid(format!("t must be even and at least 2 (t = {t})")));
    }
    if r > base.half {
        return Err(invalid(format!(
            "anchor count r = {r} exceeds the half size {}",
            base.half
        )));
    }
    let n0 = base.graph.n();
    check_size(n0 + 2 * t)?;
    let mut rng = seeded_rng(seed);
    let mut x1: Vec<usize> = (0..base.half).collect();
    x1.shuffle(&mut rng);
    x1.truncate(r);
    x1.sort_unstable();
    let x2: Vec<usize> = x1.iter().map(|&x| base.lr.apply(x)).collect();

    let t1: Vec<usize> = (n0..n0 + t).collect();
    let t2: Vec<usize> = (n0 + t..n0 + 2 * t).collect();
    let mut graph = base.graph.with_extra_nodes(2 * t);
    for (twins, anchors) in [(&t1, &x1), (&t2, &x2)] {
        for &v in twins {
            for &a in anchors {
                graph.add_edge(v, a);
            }
        }
    }
    let h = t / 2;
    for clique in [&t1[..h], &t2[h..]] {
        for (k, &u) in clique.iter().enumerate() {
            for &v in &clique[k + 1..] {
                graph.add_edge(u, v);
            }
        }
    }

    let mut img: Vec<usize> = base.lr.images().to_vec();
    img.extend(t2.iter().copied());
    img.extend(t1.iter().copied());
    Ok(DistortedLrmInstance {
        graph,
        lr: Permutation::from_images_unchecked(img),
        r,
        t,
        twin_ids: (t1, t2),
        anchor_ids: (x1, x2),
    })
}

/// Applies `l` transpositions of the images of two distinct uniformly chosen
/// positions.
pub fn reshuffle_perm(p: &Permutation, l: usize, seed: u64) -> Result<Permutation> {
    if l == 0 {
        return Ok(p.clone());
    }
    let n = p.len();
    if n < 2 {
        return Err(invalid("reshuffling needs at least two positions"));
    }
    let mut rng = seeded_rng(seed);
    let mut out = p.clone();
    for _ in 0..l {
        let (i, j) = distinct_pair(n, &mut rng);
        out.swap_images(i, j);
    }
    Ok(out)
}

pub(crate) fn distinct_pair<R: Rng>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// Uniform random permutation conditioned on at most `k` fixed points
/// (rejection sampling).
pub fn random_perm_max_fp(n: usize, k: usize, seed: u64) -> Result<Permutation> {
    if n == 1 && k == 0 {
        return Err(Error::Infeasible(
            "no permutation of one element is fixed-point free".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let mut img: Vec<usize> = (0..n).collect();
    loop {
        img.shuffle(&mut rng);
        let fp = img.iter().enumerate().filter(|(i, &v)| *i == v).count();
        if fp <= k {
            return Ok(Permutation::from_images_unchecked(img));
        }
    }
}
