//! Composable initial-permutation expressions.
//!
//! ```text
//! identity
//! random
//! lr                                   the reference permutation in scope
//! lr-file:<path>                       a permutation file (alias perm-file:)
//! reshuffle:<inner>:ℓ=<k>:seed=<s>     <inner> after k random swaps (l= accepted)
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::generators::{random_perm_max_fp, reshuffle_perm};
use crate::perm::Permutation;
use crate::qsa::InitSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitExpr {
    Identity,
    Random,
    Reference,
    File(PathBuf),
    Reshuffle {
        inner: Box<InitExpr>,
        swaps: usize,
        seed: u64,
    },
}

impl InitExpr {
    /// Resolves to a concrete permutation on `n` nodes. `seed` drives
    /// `random`; `max_fp` caps its fixed points.
    pub fn resolve(
        &self,
        n: usize,
        reference: Option<&Permutation>,
        max_fp: usize,
        seed: u64,
    ) -> Result<Permutation> {
        let p = match self {
            InitExpr::Identity => Permutation::identity(n),
            InitExpr::Random => random_perm_max_fp(n, max_fp, seed)?,
            InitExpr::Reference => reference
                .cloned()
                .ok_or_else(|| invalid("init `lr` needs a reference permutation"))?,
            InitExpr::File(path) => Permutation::parse_text(&std::fs::read_to_string(path)?)?,
            InitExpr::Reshuffle { inner, swaps, seed } => {
                let base = inner.resolve(n, reference, max_fp, *seed)?;
                reshuffle_perm(&base, *swaps, *seed)?
            }
        };
        if p.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: p.len(),
            });
        }
        Ok(p)
    }

    /// Solver init spec: `random` stays random, everything else is resolved.
    pub fn to_spec(&self, n: usize, reference: Option<&Permutation>) -> Result<InitSpec> {
        match self {
            InitExpr::Random => Ok(InitSpec::Random),
            InitExpr::Identity => Ok(InitSpec::Identity),
            other => Ok(InitSpec::Given(other.resolve(n, reference, n, 0)?)),
        }
    }

    pub fn uses_reference(&self) -> bool {
        match self {
            InitExpr::Reference => true,
            InitExpr::Reshuffle { inner, .. } => inner.uses_reference(),
            _ => false,
        }
    }
}

impl FromStr for InitExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "identity" => return Ok(InitExpr::Identity),
            "random" => return Ok(InitExpr::Random),
            "lr" => return Ok(InitExpr::Reference),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("reshuffle:") {
            let (rest, seed) = rest
                .rsplit_once(":seed=")
                .ok_or_else(|| invalid(format!("reshuffle init {s:?} lacks :seed=<s>")))?;
            let seed = seed
                .parse()
                .map_err(|_| invalid(format!("bad reshuffle seed {seed:?}")))?;
            let (inner, swaps) = rest
                .rsplit_once(":ℓ=")
                .or_else(|| rest.rsplit_once(":l="))
                .ok_or_else(|| invalid(format!("reshuffle init {s:?} lacks :ℓ=<k>")))?;
            let swaps = swaps
                .parse()
                .map_err(|_| invalid(format!("bad swap count {swaps:?}")))?;
            return Ok(InitExpr::Reshuffle {
                inner: Box::new(inner.parse()?),
                swaps,
                seed,
            });
        }
        for prefix in ["lr-file:", "perm-file:"] {
            if let Some(path) = s.strip_prefix(prefix) {
                if path.is_empty() {
                    return Err(invalid("empty permutation file path"));
                }
                return Ok(InitExpr::File(PathBuf::from(path)));
            }
        }
        Err(invalid(format!("unknown init spec {s:?}")))
    }
}

impl fmt::Display for InitExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitExpr::Identity => f.write_str("identity"),
            InitExpr::Random => f.write_str("random"),
            InitExpr::Reference => f.write_str("lr"),
            InitExpr::File(p) => write!(f, "lr-file:{}", p.display()),
            InitExpr::Reshuffle { inner, swaps, seed } => {
                write!(f, "reshuffle:{inner}:ℓ={swaps}:seed={seed}")
            }
        }
    }
}
