//! Injections and permutations of ℕ, with audited construction.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type MapFn = dyn Fn(u64) -> Result<u64> + Send + Sync;
type InvFn = dyn Fn(u64) -> Result<Option<u64>> + Send + Sync;

/// An injective map `ℕ → ℕ`, optionally declared to be a permutation.
#[derive(Clone)]
pub struct Injection {
    label: Arc<str>,
    map: Arc<MapFn>,
    inverse: Option<Arc<InvFn>>,
    permutation: bool,
}

impl fmt::Debug for Injection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Injection({}{})", self.label, if self.permutation { ", permutation" } else { "" })
    }
}

/// Result of [`Injection::audit`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionAudit {
    pub label: String,
    pub horizon: u64,
    pub permutation: bool,
    /// Largest image of `[1, horizon]`.
    pub max_image: u64,
    /// `[1, cover]` was checked to lie in the image of `[1, horizon]`.
    pub covered_upto: Option<u64>,
}

impl Injection {
    pub fn new<F>(label: impl Into<String>, f: F, permutation: bool) -> Self
    where
        F: Fn(u64) -> Result<u64> + Send + Sync + 'static,
    {
        Injection { label: label.into().into(), map: Arc::new(f), inverse: None, permutation }
    }

    pub fn identity() -> Self {
        Self::new("id", Ok, true).with_inverse(|v| Ok(Some(v)))
    }

    /// Map given by a table `f(n) = table[n-1]`; indices beyond the table fail.
    pub fn from_table(label: impl Into<String>, table: Vec<u64>, permutation: bool) -> Self {
        let table: Arc<[u64]> = table.into();
        let limit = table.len() as u64;
        let t = table.clone();
        let inv: HashMap<u64, u64> = t.iter().enumerate().map(|(i, &v)| (v, i as u64 + 1)).collect();
        Self::new(
            label,
            move |n| {
                if n == 0 {
                    return Err(Error::ZeroIndex);
                }
                table.get(n as usize - 1).copied().ok_or_else(|| Error::HorizonExceeded {
                    what: "tabulated injection".into(),
                    requested: n,
                    limit,
                })
            },
            permutation,
        )
        .with_inverse(move |v| Ok(inv.get(&v).copied()))
    }

    /// Attaches a partial inverse: `Some(n)` with `f(n) = v`, or `None` when
    /// `v` is not an image.
    pub fn with_inverse<G>(mut self, g: G) -> Self
    where
        G: Fn(u64) -> Result<Option<u64>> + Send + Sync + 'static,
    {
        self.inverse = Some(Arc::new(g));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_permutation(&self) -> bool {
        self.permutation
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn apply(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        (self.map)(n)
    }

    /// The preimage of `v`, if the inverse is known.
    pub fn preimage(&self, v: u64) -> Result<Option<u64>> {
        match &self.inverse {
            Some(g) => g(v),
            None => Err(Error::NoInverse(self.label.to_string())),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Injection) -> Injection {
        let (f, g) = (self.clone(), other.clone());
        let label = format!("{}∘{}", self.label, other.label);
        let mut out = Injection::new(label, move |n| f.apply(g.apply(n)?), self.permutation && other.permutation);
        if let (Some(fi), Some(gi)) = (self.inverse.clone(), other.inverse.clone()) {
            out = out.with_inverse(move |v| match fi(v)? {
                Some(u) => gi(u),
                None => Ok(None),
            });
        }
        out
    }

    /// Tabulates `f(1), ..., f(horizon)`.
    pub fn table(&self, horizon: u64) -> Result<Vec<u64>> {
        (1..=horizon).map(|n| self.apply(n)).collect()
    }

    /// Checks injectivity on `[1, horizon]`, and, when `cover` is given, that
    /// every value in `[1, cover]` is hit.
    pub fn audit(&self, horizon: u64, cover: Option<u64>) -> Result<InjectionAudit> {
        let images = self.table(horizon)?;
        let mut seen: HashMap<u64, u64> = HashMap::with_capacity(images.len());
        for (i, &v) in images.iter().enumerate() {
            if v == 0 {
                return Err(Error::Audit(format!("`{}` maps {} to 0", self.label, i + 1)));
            }
            if let Some(first) = seen.insert(v, i as u64 + 1) {
                return Err(Error::NotInjective {
                    label: self.label.to_string(),
                    first,
                    second: i as u64 + 1,
                    value: v,
                });
            }
        }
        if let Some(c) = cover {
            if let Some(gap) = (1..=c).find(|v| !seen.contains_key(v)) {
                return Err(Error::Audit(format!(
                    "`{}` misses {gap} on [1, {horizon}] (cover check up to {c})",
                    self.label
                )));
            }
        }
        Ok(InjectionAudit {
            label: self.label.to_string(),
            horizon,
            permutation: self.permutation,
            max_image: images.iter().copied().max().unwrap_or(0),
            covered_upto: cover,
        })
    }
}
