#![allow(dead_code)]

use approxsym::{Graph, Permutation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All permutations of `0..n` as image vectors, lexicographic.
pub fn all_perms(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

pub fn dense(g: &Graph) -> Vec<Vec<i64>> {
    (0..g.n())
        .map(|i| (0..g.n()).map(|j| g.has_edge(i, j) as i64).collect())
        .collect()
}

fn matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let mut c = vec![vec![0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] != 0 {
                for j in 0..n {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}

fn perm_matrix(img: &[usize]) -> Vec<Vec<i64>> {
    let n = img.len();
    let mut p = vec![vec![0; n]; n];
    for (i, &j) in img.iter().enumerate() {
        p[i][j] = 1;
    }
    p
}

fn transpose(a: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i]).collect()).collect()
}

/// `‖A − P A Pᵀ‖²_F` by explicit integer matrix products.
pub fn frobenius_residual_sq(g: &Graph, img: &[usize]) -> i64 {
    let a = dense(g);
    let p = perm_matrix(img);
    let papt = matmul(&matmul(&p, &a), &transpose(&p));
    let mut s = 0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            let d = a[i][j] - papt[i][j];
            s += d * d;
        }
    }
    s
}

/// Unordered pairs `{i, j}` whose adjacency differs from that of
/// `{p(i), p(j)}`.
pub fn unordered_mismatches(g: &Graph, img: &[usize]) -> u64 {
    let n = g.n();
    let mut c = 0;
    for i in 0..n {
        for j in i + 1..n {
            if g.has_edge(i, j) != g.has_edge(img[i], img[j]) {
                c += 1;
            }
        }
    }
    c
}

/// `E(A)`: minimum epsilon over non-identity permutations, by enumeration.
pub fn brute_force_e(g: &Graph) -> u64 {
    all_perms(g.n())
        .iter()
        .filter(|img| img.iter().enumerate().any(|(i, &v)| i != v))
        .map(|img| unordered_mismatches(g, img) / 2)
        .min()
        .expect("n >= 2")
}

pub fn brute_force_lap(cost: &[Vec<f64>]) -> f64 {
    all_perms(cost.len())
        .iter()
        .map(|img| img.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

pub fn random_graph<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
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

pub fn random_perm<R: Rng>(n: usize, rng: &mut R) -> Permutation {
    use rand::seq::SliceRandom;
    let mut img: Vec<usize> = (0..n).collect();
    img.shuffle(rng);
    Permutation::from_images(img).unwrap()
}

/// Weighted matrix invariant under swapping the two halves. Every mirror
/// class gets its own weight, so no density cut can split a class; cross
/// weights sit below all within-hemisphere weights.
pub fn mirrored_weights(n: usize) -> Vec<Vec<f64>> {
    let half = n / 2;
    let code = |idx: usize| ((idx * 7919) % 1_000_003) as f64 / 1_000_003.0;
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..half {
        for j in i + 1..half {
            let v = 1.0 + code(i * half + j);
            for (a, b) in [(i, j), (i + half, j + half)] {
                rows[a][b] = v;
                rows[b][a] = v;
            }
        }
        for j in 0..half {
            let v = 0.5 * code(half * half + i.min(j) * half + i.max(j));
            rows[i][j + half] = v;
            rows[j + half][i] = v;
        }
    }
    rows
}

pub fn matrix_text(rows: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for r in rows {
        s += &r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        s.push('\n');
    }
    s
}
