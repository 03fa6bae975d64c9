//! Series and index transforms: zero-padding, subseries, shuffles and the
//! permutations built from them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::injection::Injection;
use crate::series::Series;
use crate::sets::IndexSet;

/// `a_n = b_k` if `n` is the `k`-th element of `B`, else `0`.
///
/// The nonzero terms of the result are the nonzero terms of `b`, in order.
pub fn zero_pad(b: &Series, set: &IndexSet) -> Series {
    let (b2, s) = (b.clone(), set.clone());
    let mut out = Series::try_new(format!("zero_pad({}, {})", b.name(), set.label()), move |n| {
        if s.contains(n) {
            b2.term(s.rank(n))
        } else {
            Ok(crate::rational::Rational::ZERO)
        }
    });
    if let Some(bound) = b.term_bound() {
        out = out.with_term_bound(bound.clone());
    }
    out
}

/// What [`subseries`] does past the last element of a finite index set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Tail {
    /// Fail with a possibly-finite error.
    #[default]
    Strict,
    /// Continue with zeros.
    ZeroFill,
}

/// `k ↦ a_{e_A(k)}`.
pub fn subseries(a: &Series, set: &IndexSet, tail: Tail) -> Series {
    let (a2, s) = (a.clone(), set.clone());
    let mut out = Series::try_new(format!("subseries({}, {})", a.name(), set.label()), move |k| match s.nth(k) {
        Ok(n) => a2.term(n),
        Err(Error::PossiblyFinite { .. }) if tail == Tail::ZeroFill => Ok(crate::rational::Rational::ZERO),
        Err(e) => Err(e),
    });
    if let Some(bound) = a.term_bound() {
        out = out.with_term_bound(bound.clone());
    }
    out
}

/// `n ↦ a_{f(n)}`.
pub fn apply_injection(a: &Series, f: &Injection) -> Series {
    let (a2, f2) = (a.clone(), f.clone());
    let mut out = Series::try_new(format!("{}∘{}", a.name(), f.label()), move |n| a2.term(f2.apply(n)?));
    if let Some(bound) = a.term_bound() {
        out = out.with_term_bound(bound.clone());
    }
    out
}

fn require_infinite_coinfinite(set: &IndexSet) -> Result<()> {
    if set.is_finite_description() || set.is_cofinite_description() {
        return Err(Error::NotInfiniteCoinfinite { set: set.label().to_string() });
    }
    Ok(())
}

fn audit_err(set: &IndexSet) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::PossiblyFinite { .. } => Error::NotInfiniteCoinfinite { set: set.label().to_string() },
        other => other,
    }
}

/// Tabulates the map sending the `k`-th element of `from_in` to the `k`-th
/// element of `to_in`, and the `k`-th element of `ℕ ∖ from_in` to the `k`-th
/// element of `to_out`, on `[1, horizon]`.
fn tabulate_order_pair(from_in: &IndexSet, to_in: &IndexSet, to_out: &IndexSet, horizon: u64) -> Result<Vec<u64>> {
    let mask = from_in.bitmap_upto(horizon);
    let (mut k_in, mut k_out) = (0u64, 0u64);
    let mut it_in = to_in.iter();
    let mut it_out = to_out.iter();
    let mut table = Vec::with_capacity(horizon as usize);
    for n in 1..=horizon {
        let v = if mask[n as usize] {
            k_in += 1;
            it_in.next().ok_or_else(|| to_in.nth(k_in).err().unwrap_or(Error::ZeroIndex))
        } else {
            k_out += 1;
            it_out.next().ok_or_else(|| to_out.nth(k_out).err().unwrap_or(Error::ZeroIndex))
        };
        table.push(v?);
    }
    Ok(table)
}

/// The shuffle `s_{A,B}`: maps `A` onto `B` and `ℕ ∖ A` onto `ℕ ∖ B`,
/// both order-preservingly.
#[derive(Clone)]
pub struct Shuffle {
    a: IndexSet,
    b: IndexSet,
    co_a: IndexSet,
    co_b: IndexSet,
    table: Arc<[u64]>,
}

impl std::fmt::Debug for Shuffle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Shuffle({}, {})", self.a.label(), self.b.label())
    }
}

impl Shuffle {
    /// Builds `s_{A,B}`, tabulated on `[1, horizon]`.
    pub fn new(a: &IndexSet, b: &IndexSet, horizon: u64) -> Result<Self> {
        require_infinite_coinfinite(a)?;
        require_infinite_coinfinite(b)?;
        let co_b = b.complement();
        let table = tabulate_order_pair(a, b, &co_b, horizon).map_err(audit_err(b))?;
        Ok(Shuffle { a: a.clone(), b: b.clone(), co_a: a.complement(), co_b, table: table.into() })
    }

    pub fn horizon(&self) -> u64 {
        self.table.len() as u64
    }

    pub fn eval(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        if let Some(&v) = self.table.get(n as usize - 1) {
            return Ok(v);
        }
        let k = self.a.rank(n);
        if self.a.contains(n) {
            self.b.nth(k)
        } else {
            self.co_b.nth(n - k)
        }
    }

    /// `s_{B,A}`, the inverse permutation.
    pub fn inverse(&self) -> Result<Shuffle> {
        Shuffle::new(&self.b, &self.a, self.horizon())
    }

    pub fn to_injection(&self) -> Injection {
        let s = self.clone();
        let inv = self.clone();
        Injection::new(format!("s[{},{}]", self.a.label(), self.b.label()), move |n| s.eval(n), true).with_inverse(
            move |v| {
                // s maps A onto B and co(A) onto co(B)
                let k = inv.b.rank(v);
                Ok(Some(if inv.b.contains(v) {
                    inv.a.nth(k)?
                } else {
                    inv.co_a.nth(v - k)?
                }))
            },
        )
    }
}

/// `s_{A,B}` tabulated on `[1, horizon]`.
pub fn shuffle(a: &IndexSet, b: &IndexSet, horizon: u64) -> Result<Shuffle> {
    Shuffle::new(a, b, horizon)
}

/// The permutation `p_{A,B} = s_{A, ℕ∖B}^{-1}`.
///
/// It maps `ℕ ∖ B` onto `A` and `B` onto `ℕ ∖ A`, both order-preservingly,
/// so for `b_ℓ < n < b_{ℓ+1}` we get `p(n) = e_A(n - ℓ)`.
pub fn p_from_set(a: &IndexSet, b: &IndexSet, horizon: u64) -> Result<Injection> {
    require_infinite_coinfinite(a)?;
    require_infinite_coinfinite(b)?;
    let co_a = a.complement();
    let co_b = b.complement();
    let table: Arc<[u64]> = tabulate_order_pair(&co_b, a, &co_a, horizon).map_err(audit_err(a))?.into();
    let label = format!("p[{},{}]", a.label(), b.label());
    let (a1, b1, coa1) = (a.clone(), b.clone(), co_a.clone());
    let (a2, b2, cob2) = (a.clone(), b.clone(), co_b);
    Ok(Injection::new(
        label,
        move |n| {
            if let Some(&v) = table.get(n as usize - 1) {
                return Ok(v);
            }
            let l = b1.rank(n);
            if b1.contains(n) {
                coa1.nth(l)
            } else {
                a1.nth(n - l)
            }
        },
        true,
    )
    .with_inverse(move |v| {
        // the inverse is the shuffle s_{A, ℕ∖B}
        let k = a2.rank(v);
        Ok(Some(if a2.contains(v) { cob2.nth(k)? } else { b2.nth(v - k)? }))
    }))
}

/// The value predicted by the closed form `p_{A,B}(n) = e_A(n - ℓ)` for
/// `n ∉ B`, where `ℓ = |B ∩ [1, n]|`. `None` when `n ∈ B`.
pub fn claim_one_value(a: &IndexSet, b: &IndexSet, n: u64) -> Result<Option<u64>> {
    if b.contains(n) {
        return Ok(None);
    }
    Ok(Some(a.nth(n - b.rank(n))?))
}

/// The oscillation set `C_{A,B,S}`.
///
/// For `m ∈ (b_ℓ, b_{ℓ+1}]` it takes `A` on that gap when `ℓ ∈ S` and
/// `ℕ ∖ A` otherwise. The initial segment `[1, b_1]` is excluded.
pub fn osc_set(a: &IndexSet, b: &IndexSet, s: &IndexSet) -> Result<IndexSet> {
    if b.is_finite_description() {
        return Err(Error::NotInfiniteCoinfinite { set: b.label().to_string() });
    }
    let (a2, b2, s2) = (a.clone(), b.clone(), s.clone());
    let label = format!("C[{},{},{}]", a.label(), b.label(), s.label());
    Ok(IndexSet::predicate(label, move |m| {
        let l = b2.rank(m - 1);
        l > 0 && (s2.contains(l) == a2.contains(m))
    }))
}

/// The missing values `ℕ ∖ f[ℕ]` below a horizon.
fn missing_values(f: &Injection, horizon: u64, probe: u64) -> Result<Vec<u64>> {
    if f.has_inverse() {
        let mut out = Vec::new();
        for v in 1..=horizon {
            if f.preimage(v)?.is_none() {
                out.push(v);
            }
        }
        return Ok(out);
    }
    let mut hit = vec![false; horizon as usize + 1];
    for n in 1..=probe {
        let v = f.apply(n)?;
        if v <= horizon {
            hit[v as usize] = true;
        }
    }
    Ok((1..=horizon).filter(|&v| !hit[v as usize]).collect())
}

/// `p_f`: the `k_f` values missed by `f` first, then `f` shifted by `k_f`.
///
/// `k_f = |ℕ ∖ f[ℕ]|` is declared by the caller. The audit lists values in
/// `[1, horizon]` not hit by `f` (exactly, via the inverse when available;
/// otherwise by sieving the images of `[1, 2·horizon]`) and rejects a wrong
/// declaration.
pub fn p_cofinite(f: &Injection, k_f: u64, horizon: u64) -> Result<Injection> {
    let missing = missing_values(f, horizon, horizon.saturating_mul(2))?;
    if missing.len() as u64 > k_f {
        return Err(Error::Declaration(format!(
            "`{}` misses {} values in [1, {horizon}] (first: {:?}); declared k_f = {k_f}",
            f.label(),
            missing.len(),
            &missing[..missing.len().min(5)]
        )));
    }
    if (missing.len() as u64) < k_f {
        return Err(Error::HorizonExceeded {
            what: format!("missing values of `{}` (found {})", f.label(), missing.len()),
            requested: k_f,
            limit: horizon,
        });
    }
    let missing: Arc<[u64]> = missing.into();
    let (f1, m1) = (f.clone(), missing.clone());
    let mut p = Injection::new(
        format!("p_cofinite[{}]", f.label()),
        move |n| if n <= k_f { Ok(m1[n as usize - 1]) } else { f1.apply(n - k_f) },
        true,
    );
    if f.has_inverse() {
        let f2 = f.clone();
        p = p.with_inverse(move |v| match missing.iter().position(|&x| x == v) {
            Some(i) => Ok(Some(i as u64 + 1)),
            None => Ok(f2.preimage(v)?.map(|n| n + k_f)),
        });
    }
    Ok(p)
}

/// `p_{f,B}`: writes the image of `f` onto `ℕ ∖ B` and the values missed
/// by `f` onto `B`, both in order.
///
/// Without an inverse, `ℕ ∖ f[ℕ]` is sieved from the images of
/// `[1, horizon]` up to their maximum; deeper queries fail with a
/// horizon error.
pub fn p_sparse(f: &Injection, b: &IndexSet, horizon: u64) -> Result<Injection> {
    require_infinite_coinfinite(b)?;
    let images = f.table(horizon)?;
    let image_horizon = images.iter().copied().max().unwrap_or(0);
    let missed: IndexSet = if f.has_inverse() {
        let f2 = f.clone();
        IndexSet::predicate(format!("co(im {})", f.label()), move |v| matches!(f2.preimage(v), Ok(None)))
    } else {
        let mut hit = vec![false; image_horizon as usize + 1];
        for &v in &images {
            hit[v as usize] = true;
        }
        IndexSet::finite((1..=image_horizon).filter(|&v| !hit[v as usize]))?
    };
    let co_b = b.complement();
    let (f1, b1, m1, lim) = (f.clone(), b.clone(), missed, image_horizon);
    Ok(Injection::new(
        format!("p_sparse[{},{}]", f.label(), b.label()),
        move |n| {
            let k = b1.rank(n);
            if b1.contains(n) {
                m1.nth(k).map_err(|_| Error::HorizonExceeded {
                    what: "values missed by the injection".into(),
                    requested: k,
                    limit: lim,
                })
            } else {
                f1.apply(n - k)
            }
        },
        true,
    )
    .with_inverse({
        let (f2, b2, cob) = (f.clone(), b.clone(), co_b);
        let f3 = f.clone();
        move |v| match f2.preimage(v) {
            Ok(Some(k)) => Ok(Some(cob.nth(k)?)),
            Ok(None) => {
                // v is missed by f; it is the j-th missed value
                let j = (1..=v).filter(|&u| matches!(f3.preimage(u), Ok(None))).count() as u64;
                Ok(Some(b2.nth(j)?))
            }
            Err(e) => Err(e),
        }
    }))
}

/// One stage of a transform pipeline.
#[derive(Clone, Debug)]
pub enum Transform {
    ZeroPad(IndexSet),
    Subseries(IndexSet),
    Shuffle(IndexSet, IndexSet),
    PermuteBySet(IndexSet, IndexSet),
    Negate,
}

impl Transform {
    pub fn apply(&self, a: &Series, horizon: u64) -> Result<Series> {
        Ok(match self {
            Transform::ZeroPad(b) => zero_pad(a, b),
            Transform::Subseries(s) => subseries(a, s, Tail::Strict),
            Transform::Shuffle(x, y) => apply_injection(a, &shuffle(x, y, horizon)?.to_injection()),
            Transform::PermuteBySet(x, y) => apply_injection(a, &p_from_set(x, y, horizon)?),
            Transform::Negate => a.negated(),
        })
    }
}

/// Parses `stage | stage | ...` where a stage is `zero_pad(SET)`,
/// `subseries(SET)`, `shuffle(SET;SET)`, `p_set(SET;SET)` or `negate`.
pub fn parse_pipeline(src: &str) -> Result<Vec<Transform>> {
    src.split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|stage| {
            if stage == "negate" {
                return Ok(Transform::Negate);
            }
            let (name, rest) =
                stage.split_once('(').ok_or_else(|| Error::Parse(format!("bad pipeline stage `{stage}`")))?;
            let args = rest.strip_suffix(')').ok_or_else(|| Error::Parse(format!("missing `)` in `{stage}`")))?;
            let sets = args.split(';').map(|s| s.trim().parse::<IndexSet>()).collect::<Result<Vec<_>>>()?;
            match (name.trim(), sets.as_slice()) {
                ("zero_pad", [b]) => Ok(Transform::ZeroPad(b.clone())),
                ("subseries", [s]) => Ok(Transform::Subseries(s.clone())),
                ("shuffle", [x, y]) => Ok(Transform::Shuffle(x.clone(), y.clone())),
                ("p_set", [x, y]) => Ok(Transform::PermuteBySet(x.clone(), y.clone())),
                _ => Err(Error::Parse(format!("unknown stage or wrong arity: `{stage}`"))),
            }
        })
        .collect()
}
