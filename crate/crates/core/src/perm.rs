//! Vertex permutations stored as arrays of images.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A bijection on `{0..n-1}`; `img[i]` is the image of `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    img: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            img: (0..n).collect(),
        }
    }

    /// Validates that `img` is a bijection.
    pub fn from_images(img: Vec<usize>) -> Result<Self> {
        let n = img.len();
        let mut seen = vec![false; n];
        for (i, &v) in img.iter().enumerate() {
            if v >= n {
                return Err(Error::NotBijection(format!(
                    "image {v} of position {i} is out of range for n = {n}"
                )));
            }
            if seen[v] {
                return Err(Error::NotBijection(format!("image {v} appears twice")));
            }
            seen[v] = true;
        }
        Ok(Permutation { img })
    }

    pub(crate) fn from_images_unchecked(img: Vec<usize>) -> Self {
        debug_assert!(Permutation::from_images(img.clone()).is_ok());
        Permutation { img }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.img.len()
    }

    pub fn is_empty(&self) -> bool {
        self.img.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.img[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.img
    }

    pub fn into_images(self) -> Vec<usize> {
        self.img
    }

    pub fn is_identity(&self) -> bool {
        self.img.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &v) in self.img.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { img: inv }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        check_dim(self.len(), other.len())?;
        Ok(Permutation {
            img: other.img.iter().map(|&v| self.img[v]).collect(),
        })
    }

    /// Exchanges the images of positions `i` and `j`.
    pub fn swap_images(&mut self, i: usize, j: usize) {
        self.img.swap(i, j);
    }

    /// Number of positions mapped to themselves.
    pub fn fixed_points(&self) -> usize {
        self.img.iter().enumerate().filter(|(i, &v)| *i == v).count()
    }

    /// Number of positions where the two permutations disagree.
    pub fn hamming(&self, other: &Permutation) -> Result<usize> {
        check_dim(self.len(), other.len())?;
        Ok(self
            .img
            .iter()
            .zip(&other.img)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// Permutation matrix with `P[i][img[i]] = 1`.
    pub fn to_matrix(&self) -> Array2<f64> {
        let n = self.len();
        let mut m = Array2::zeros((n, n));
        for (i, &v) in self.img.iter().enumerate() {
            m[[i, v]] = 1.0;
        }
        m
    }

    /// One line of space-separated images followed by a newline.
    pub fn to_text(&self) -> String {
        let mut s = self.to_string();
        s.push('\n');
        s
    }

    pub fn parse_text(text: &str) -> Result<Permutation> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let line = lines.next().unwrap_or("");
        if lines.next().is_some() {
            return Err(Error::Parse {
                line: 2,
                msg: "permutation must occupy a single line".into(),
            });
        }
        let img = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| Error::Parse {
                    line: 1,
                    msg: format!("not a node index: {tok:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::from_images(img)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.img.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Permutation::parse_text(s)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(img: Vec<usize>) -> Result<Self> {
        Permutation::from_images(img)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.img
    }
}
