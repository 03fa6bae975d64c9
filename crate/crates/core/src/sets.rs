//! Subsets of the positive integers, with enumeration, rank and the
//! predicates used to reason about subseries.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sets::Kind::*;

/// Default number of integers scanned before a predicate-defined set is
/// declared possibly finite.
pub const DEFAULT_SCAN_BOUND: u64 = 10_000_000;

type EnumFn = dyn Fn(u64) -> Result<u64> + Send + Sync;
type PredFn = dyn Fn(u64) -> bool + Send + Sync;

#[derive(Default)]
struct ScanCache {
    members: Vec<u64>,
    scanned: u64,
}

#[derive(Clone)]
enum Kind {
    Finite(Arc<[u64]>),
    /// Residues are stored in `1..=modulus` (a multiple of the modulus is
    /// represented by the modulus itself).
    Residue { modulus: u64, residues: Arc<[u64]> },
    Enumerated(Arc<EnumFn>),
    Predicate(Arc<PredFn>, Arc<Mutex<ScanCache>>),
    Complement(Arc<IndexSet>, Arc<Mutex<ScanCache>>),
}

/// A subset of ℕ = {1, 2, 3, ...}.
///
/// Sets are immutable and cheap to clone. Predicate and complement sets keep
/// an internal, synchronized cache of the members found so far.
#[derive(Clone)]
pub struct IndexSet {
    kind: Kind,
    label: Arc<str>,
    scan_bound: u64,
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexSet({})", self.label)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn wrap(kind: Kind, label: impl Into<Arc<str>>) -> IndexSet {
    IndexSet { kind, label: label.into(), scan_bound: DEFAULT_SCAN_BOUND }
}

impl IndexSet {
    /// ℕ itself.
    pub fn naturals() -> Self {
        wrap(Residue { modulus: 1, residues: Arc::from([1u64]) }, "all")
    }

    pub fn empty() -> Self {
        wrap(Finite(Arc::from([])), "empty")
    }

    pub fn evens() -> Self {
        wrap(Residue { modulus: 2, residues: Arc::from([2u64]) }, "evens")
    }

    pub fn odds() -> Self {
        wrap(Residue { modulus: 2, residues: Arc::from([1u64]) }, "odds")
    }

    /// A finite set. Elements are sorted and deduplicated; `0` is rejected.
    pub fn finite<I: IntoIterator<Item = u64>>(elements: I) -> Result<Self> {
        let mut v: Vec<u64> = elements.into_iter().collect();
        if v.contains(&0) {
            return Err(Error::InvalidArgument("index sets live in {1,2,...}; got 0".into()));
        }
        v.sort_unstable();
        v.dedup();
        let label = if v.len() <= 8 {
            format!("finite:{}", v.iter().map(u64::to_string).collect::<Vec<_>>().join(","))
        } else {
            format!("finite[{}]", v.len())
        };
        Ok(wrap(Finite(v.into()), label))
    }

    /// `{n : n ≡ r (mod m)}` for each listed residue `r`.
    pub fn residue(modulus: u64, residues: &[u64]) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::InvalidArgument("modulus must be positive".into()));
        }
        let mut rs: Vec<u64> =
            residues.iter().map(|r| match r % modulus { 0 => modulus, x => x }).collect();
        rs.sort_unstable();
        rs.dedup();
        let label = format!(
            "residue:{}:{}",
            modulus,
            residues.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
        );
        Ok(wrap(Residue { modulus, residues: rs.into() }, label))
    }

    /// `{a, a+d, a+2d, ...}`.
    pub fn arithmetic(start: u64, step: u64) -> Result<Self> {
        if start == 0 || step == 0 {
            return Err(Error::InvalidArgument("arithmetic progression needs a, d >= 1".into()));
        }
        let f = move |k: u64| {
            (k - 1)
                .checked_mul(step)
                .and_then(|x| x.checked_add(start))
                .ok_or_else(|| Error::InvalidArgument("arithmetic progression overflows u64".into()))
        };
        Ok(wrap(Enumerated(Arc::new(f)), format!("arith:{start},{step}")))
    }

    /// Set given by a strictly increasing enumeration `e(1) < e(2) < ...`.
    ///
    /// Monotonicity is the caller's contract; [`IndexSet::audit_enumeration`]
    /// checks it on a prefix.
    pub fn enumerated<F>(label: impl Into<String>, e: F) -> Self
    where
        F: Fn(u64) -> Result<u64> + Send + Sync + 'static,
    {
        wrap(Enumerated(Arc::new(e)), label.into())
    }

    /// Set given by a membership predicate.
    pub fn predicate<F>(label: impl Into<String>, p: F) -> Self
    where
        F: Fn(u64) -> bool + Send + Sync + 'static,
    {
        wrap(Predicate(Arc::new(p), Default::default()), label.into())
    }

    /// The primes.
    pub fn primes() -> Self {
        Self::predicate("primes", is_prime)
    }

    /// Reads whitespace or comma separated integers from a file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let v = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<u64>().map_err(|_| Error::Parse(format!("bad index `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        let mut s = Self::finite(v)?;
        s.label = format!("file:{}", path.display()).into();
        Ok(s)
    }

    /// ℕ ∖ self.
    pub fn complement(&self) -> Self {
        let label = format!("co({})", self.label);
        let kind = match &self.kind {
            Residue { modulus, residues } => {
                let rs: Vec<u64> = (1..=*modulus).filter(|r| residues.binary_search(r).is_err()).collect();
                Residue { modulus: *modulus, residues: rs.into() }
            }
            Complement(inner, _) => return (**inner).clone(),
            _ => Complement(Arc::new(self.clone()), Default::default()),
        };
        IndexSet { kind, label: label.into(), scan_bound: self.scan_bound }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into().into();
        self
    }

    /// Overrides the scan bound used before reporting a possibly finite set.
    pub fn with_scan_bound(mut self, bound: u64) -> Self {
        self.scan_bound = bound;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn scan_bound(&self) -> u64 {
        self.scan_bound
    }

    /// `true` when the description itself makes the set finite.
    pub fn is_finite_description(&self) -> bool {
        match &self.kind {
            Finite(_) => true,
            Residue { residues, .. } => residues.is_empty(),
            _ => false,
        }
    }

    /// `true` when the description itself makes the set co-finite.
    pub fn is_cofinite_description(&self) -> bool {
        match &self.kind {
            Residue { modulus, residues } => residues.len() as u64 == *modulus,
            Complement(inner, _) => inner.is_finite_description(),
            _ => false,
        }
    }

    /// The elements of a finite description.
    pub fn finite_elements(&self) -> Option<&[u64]> {
        match &self.kind {
            Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn contains(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        match &self.kind {
            Finite(v) => v.binary_search(&n).is_ok(),
            Residue { modulus, residues } => {
                let r = match n % modulus { 0 => *modulus, x => x };
                residues.binary_search(&r).is_ok()
            }
            Enumerated(e) => enum_lower_bound(e.as_ref(), n).map(|(_, v)| v == n).unwrap_or(false),
            Predicate(p, _) => p(n),
            Complement(inner, _) => !inner.contains(n),
        }
    }

    /// `|self ∩ [1, m]|`.
    pub fn rank(&self, m: u64) -> u64 {
        if m == 0 {
            return 0;
        }
        match &self.kind {
            Finite(v) => v.partition_point(|&x| x <= m) as u64,
            Residue { modulus, residues } => {
                let full = (m / modulus) * residues.len() as u64;
                full + residues.partition_point(|&r| r <= m % modulus) as u64
            }
            Enumerated(e) => {
                // number of k with e(k) <= m; e(k) >= k so k <= m
                let (mut lo, mut hi) = (0u64, m);
                while lo < hi {
                    let mid = lo + (hi - lo).div_ceil(2);
                    match e(mid) {
                        Ok(v) if v <= m => lo = mid,
                        _ => hi = mid - 1,
                    }
                }
                lo
            }
            Predicate(_, cache) | Complement(_, cache) => {
                let mut c = cache.lock().expect("scan cache poisoned");
                self.extend_scan(&mut c, m, u64::MAX);
                c.members.partition_point(|&x| x <= m) as u64
            }
        }
    }

    /// The `k`-th smallest element (1-based).
    pub fn nth(&self, k: u64) -> Result<u64> {
        if k == 0 {
            return Err(Error::ZeroIndex);
        }
        let exhausted = |scanned| Error::PossiblyFinite { set: self.label.to_string(), wanted: k, scanned };
        match &self.kind {
            Finite(v) => v.get(k as usize - 1).copied().ok_or_else(|| exhausted(v.last().copied().unwrap_or(0))),
            Residue { modulus, residues } => {
                let len = residues.len() as u64;
                if len == 0 {
                    return Err(exhausted(u64::MAX));
                }
                let (q, r) = ((k - 1) / len, (k - 1) % len);
                Ok(q * modulus + residues[r as usize])
            }
            Enumerated(e) => e(k),
            Predicate(_, cache) | Complement(_, cache) => {
                let mut c = cache.lock().expect("scan cache poisoned");
                if (c.members.len() as u64) < k {
                    self.extend_scan(&mut c, self.scan_bound, k);
                }
                c.members.get(k as usize - 1).copied().ok_or_else(|| exhausted(c.scanned))
            }
        }
    }

    /// The first `k` elements.
    pub fn first(&self, k: u64) -> Result<Vec<u64>> {
        (1..=k).map(|i| self.nth(i)).collect()
    }

    /// `self ∩ [1, h]` in increasing order.
    pub fn members_upto(&self, h: u64) -> Vec<u64> {
        match &self.kind {
            Finite(v) => v[..v.partition_point(|&x| x <= h)].to_vec(),
            Residue { modulus, residues } => {
                let mut out = Vec::with_capacity((self.rank(h)) as usize);
                let mut base = 0u64;
                'outer: loop {
                    for r in residues.iter() {
                        let x = base + r;
                        if x > h {
                            break 'outer;
                        }
                        out.push(x);
                    }
                    if residues.is_empty() {
                        break;
                    }
                    base += modulus;
                }
                out
            }
            Enumerated(e) => {
                let mut out = Vec::new();
                for k in 1.. {
                    match e(k) {
                        Ok(v) if v <= h => out.push(v),
                        _ => break,
                    }
                }
                out
            }
            Predicate(_, cache) | Complement(_, cache) => {
                let mut c = cache.lock().expect("scan cache poisoned");
                self.extend_scan(&mut c, h, u64::MAX);
                c.members[..c.members.partition_point(|&x| x <= h)].to_vec()
            }
        }
    }

    /// Membership bitmap for `[0, h]` (index 0 is always `false`).
    pub fn bitmap_upto(&self, h: u64) -> Vec<bool> {
        let mut bits = vec![false; h as usize + 1];
        for m in self.members_upto(h) {
            bits[m as usize] = true;
        }
        bits
    }

    /// Increasing iterator over the elements; stops where [`IndexSet::nth`]
    /// would fail.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (1u64..).map_while(move |k| self.nth(k).ok())
    }

    /// Checks that an enumerated set is strictly increasing on `1..=k`.
    pub fn audit_enumeration(&self, k: u64) -> Result<()> {
        let mut prev = 0;
        for i in 1..=k {
            let v = self.nth(i)?;
            if v <= prev {
                return Err(Error::Audit(format!(
                    "enumeration of `{}` not increasing at position {i}: {prev} then {v}",
                    self.label
                )));
            }
            prev = v;
        }
        Ok(())
    }

    fn extend_scan(&self, c: &mut ScanCache, upto: u64, want: u64) {
        while c.scanned < upto && (c.members.len() as u64) < want {
            c.scanned += 1;
            let hit = match &self.kind {
                Predicate(p, _) => p(c.scanned),
                Complement(inner, _) => !inner.contains(c.scanned),
                _ => unreachable!("only scanned kinds have caches"),
            };
            if hit {
                c.members.push(c.scanned);
            }
        }
    }
}

/// Smallest `k` with `e(k) >= n`, together with `e(k)`.
fn enum_lower_bound(e: &EnumFn, n: u64) -> Option<(u64, u64)> {
    let (mut lo, mut hi) = (1u64, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match e(mid) {
            Ok(v) if v < n => lo = mid + 1,
            _ => hi = mid,
        }
    }
    e(lo).ok().map(|v| (lo, v))
}

/// Trial-division primality, adequate for the scan bounds used here.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 || n % 3 == 0 {
        return false;
    }
    let mut i = 5u64;
    while i * i <= n {
        if n % i == 0 || n % (i + 2) == 0 {
            return false;
        }
        i += 6;
    }
    true
}

impl FromStr for IndexSet {
    type Err = Error;

    /// Parses the textual set syntax:
    /// `all`, `evens`, `odds`, `primes`, `empty`, `finite:1,5,9`,
    /// `residue:m:r[,r...]`, `arith:a,d`, `file:PATH`, and `co(...)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let nums = |t: &str| -> Result<Vec<u64>> {
            t.split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| x.parse::<u64>().map_err(|_| Error::Parse(format!("bad integer `{x}` in `{s}`"))))
                .collect()
        };
        if let Some(inner) = s.strip_prefix("co(").and_then(|r| r.strip_suffix(')')) {
            return Ok(inner.parse::<IndexSet>()?.complement());
        }
        match s {
            "all" | "naturals" => return Ok(Self::naturals()),
            "evens" => return Ok(Self::evens()),
            "odds" => return Ok(Self::odds()),
            "primes" => return Ok(Self::primes()),
            "empty" => return Ok(Self::empty()),
            _ => {}
        }
        let (head, rest) = s.split_once(':').ok_or_else(|| Error::Parse(format!("unknown set `{s}`")))?;
        match head {
            "finite" => Self::finite(nums(rest)?).map_err(|e| Error::Parse(e.to_string())),
            "residue" => {
                let (m, rs) =
                    rest.split_once(':').ok_or_else(|| Error::Parse(format!("expected residue:m:r in `{s}`")))?;
                let m: u64 = m.trim().parse().map_err(|_| Error::Parse(format!("bad modulus in `{s}`")))?;
                Self::residue(m, &nums(rs)?).map_err(|e| Error::Parse(e.to_string()))
            }
            "arith" => match nums(rest)?.as_slice() {
                [a, d] => Self::arithmetic(*a, *d).map_err(|e| Error::Parse(e.to_string())),
                _ => Err(Error::Parse(format!("expected arith:a,d in `{s}`"))),
            },
            "file" => Self::from_file(Path::new(rest)),
            _ => Err(Error::Parse(format!("unknown set `{s}`"))),
        }
    }
}

/// Which side of a split lacks witnesses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Inside,
    Outside,
}

/// Finite-horizon evidence that `A` splits `B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitReport {
    /// Elements of `B ∩ A`, up to the requested number.
    pub inside: Vec<u64>,
    /// Elements of `B ∖ A`, up to the requested number.
    pub outside: Vec<u64>,
    pub required: usize,
    pub horizon: u64,
    pub deficient: Vec<Side>,
}

impl SplitReport {
    pub fn holds(&self) -> bool {
        self.deficient.is_empty()
    }
}

/// Looks for `min_witnesses` elements of `B` inside `A` and as many outside,
/// among `B ∩ [1, horizon]`.
pub fn splits(a: &IndexSet, b: &IndexSet, min_witnesses: usize, horizon: u64) -> SplitReport {
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for m in b.members_upto(horizon) {
        if inside.len() >= min_witnesses && outside.len() >= min_witnesses {
            break;
        }
        let bucket = if a.contains(m) { &mut inside } else { &mut outside };
        if bucket.len() < min_witnesses {
            bucket.push(m);
        }
    }
    let mut deficient = Vec::new();
    if inside.len() < min_witnesses {
        deficient.push(Side::Inside);
    }
    if outside.len() < min_witnesses {
        deficient.push(Side::Outside);
    }
    SplitReport { inside, outside, required: min_witnesses, horizon, deficient }
}

/// A gap between consecutive elements of `B` holding too many elements of `A`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapViolation {
    pub left: u64,
    pub right: u64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub allowed_exceptions: u64,
    pub gaps_checked: u64,
    pub violations: Vec<GapViolation>,
}

impl SparsityReport {
    pub fn holds(&self) -> bool {
        self.violations.len() as u64 <= self.allowed_exceptions
    }
}

/// Checks that each open gap `(b_i, b_{i+1})` of `B ∩ [1, horizon]` meets `A`
/// in at most one element, up to `allowed_exceptions` violations.
pub fn sparser_than(a: &IndexSet, b: &IndexSet, allowed_exceptions: u64, horizon: u64) -> Result<SparsityReport> {
    let bs = b.members_upto(horizon);
    if bs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "`{}` has {} element(s) up to {horizon}; at least 2 are needed",
            b.label(),
            bs.len()
        )));
    }
    let mut violations = Vec::new();
    for w in bs.windows(2) {
        let count = a.rank(w[1] - 1) - a.rank(w[0]);
        if count >= 2 {
            violations.push(GapViolation { left: w[0], right: w[1], count });
        }
    }
    Ok(SparsityReport { allowed_exceptions, gaps_checked: bs.len() as u64 - 1, violations })
}

/// `{b_i + i}` for the enumeration `b_1 < b_2 < ...` of `B`.
///
/// The result is always sparser than `ℕ ∖ {b_i + i}`.
pub fn diagonal_shift(b: &IndexSet) -> IndexSet {
    let src = b.clone();
    let label = format!("shift({})", b.label());
    IndexSet::enumerated(label, move |i| Ok(src.nth(i)? + i))
}

/// A pair `x < y` of `A` whose order `f` reverses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inversion {
    pub x: u64,
    pub y: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InversionReport {
    pub horizon: u64,
    pub inversions: Vec<Inversion>,
    /// Inversions with both elements at or above the exception bound.
    pub late_inversions: u64,
    pub exception_bound: u64,
}

impl InversionReport {
    /// `f` jumbles `A` on the horizon (some pair is reversed).
    pub fn jumbled(&self) -> bool {
        !self.inversions.is_empty()
    }

    /// `f` preserves the order of `A` beyond the exception bound.
    pub fn preserves(&self) -> bool {
        self.late_inversions == 0
    }
}

/// Lists order inversions of `f` on `A ∩ [1, horizon]`.
pub fn jumbles(
    f: &crate::injection::Injection,
    a: &IndexSet,
    horizon: u64,
    exception_bound: u64,
) -> Result<InversionReport> {
    let xs = a.members_upto(horizon);
    let images = xs.iter().map(|&x| f.apply(x)).collect::<Result<Vec<_>>>()?;
    let mut inversions = Vec::new();
    let mut late = 0;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            if images[i] > images[j] {
                inversions.push(Inversion { x: xs[i], y: xs[j] });
                if xs[i] >= exception_bound {
                    late += 1;
                }
            }
        }
    }
    Ok(InversionReport { horizon, inversions, late_inversions: late, exception_bound })
}
