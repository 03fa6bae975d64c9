//! Series with exact rational terms, prefix-sum traces and certified
//! divergence verdicts.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use dashu_base::Abs;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{exact_sum_raw, fmt_rational, int, rat, serde_exact, Bounds, Level, RawSum, Rational};
use crate::sets::IndexSet;

type TermFn = dyn Fn(u64) -> Result<Rational> + Send + Sync;

/// A 1-indexed series `a_1, a_2, ...` of exact rationals, evaluated lazily.
///
/// The term function must be pure. When a term bound is declared, every
/// evaluation is checked against it.
#[derive(Clone)]
pub struct Series {
    name: Arc<str>,
    term: Arc<TermFn>,
    term_bound: Option<Rational>,
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series({})", self.name)
    }
}

impl Series {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(u64) -> Rational + Send + Sync + 'static,
    {
        Self::try_new(name, move |n| Ok(f(n)))
    }

    /// A series whose term function may fail (for example when it depends on
    /// an index set that turns out to be finite).
    pub fn try_new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(u64) -> Result<Rational> + Send + Sync + 'static,
    {
        Series { name: name.into().into(), term: Arc::new(f), term_bound: None }
    }

    /// Declares `|a_n| <= bound` for every `n`.
    pub fn with_term_bound(mut self, bound: Rational) -> Self {
        self.term_bound = Some(bound);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into().into();
        self
    }

    /// `(-1)^(n+1)/n`: `1 - 1/2 + 1/3 - ...`.
    pub fn alternating_harmonic() -> Self {
        Self::new("alternating_harmonic", |n| {
            let s = if n % 2 == 1 { 1 } else { -1 };
            rat(s, n as i64)
        })
        .with_term_bound(int(1))
    }

    /// `1/n`.
    pub fn harmonic() -> Self {
        Self::new("harmonic", |n| rat(1, n as i64)).with_term_bound(int(1))
    }

    /// `(-1)^(n+1)`: `1 - 1 + 1 - ...`.
    pub fn alternating_unit() -> Self {
        Self::new("alternating_unit", |n| int(if n % 2 == 1 { 1 } else { -1 })).with_term_bound(int(1))
    }

    /// The zero series.
    pub fn zero() -> Self {
        Self::new("zero", |_| Rational::ZERO).with_term_bound(Rational::ZERO)
    }

    /// Finitely many terms followed by zeros.
    pub fn from_terms(name: impl Into<String>, terms: Vec<Rational>) -> Self {
        let terms: Arc<[Rational]> = terms.into();
        Self::new(name, move |n| terms.get(n as usize - 1).cloned().unwrap_or(Rational::ZERO))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn term_bound(&self) -> Option<&Rational> {
        self.term_bound.as_ref()
    }

    /// `a_n`, checked against the declared term bound.
    pub fn term(&self, n: u64) -> Result<Rational> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        let v = (self.term)(n)?;
        if let Some(b) = &self.term_bound {
            if &v.clone().abs() > b {
                return Err(Error::TermBound {
                    series: self.name.to_string(),
                    index: n,
                    bound: fmt_rational(b),
                });
            }
        }
        Ok(v)
    }

    /// `a_1, ..., a_h`.
    pub fn terms(&self, h: u64) -> Result<Vec<Rational>> {
        (1..=h).map(|n| self.term(n)).collect()
    }

    /// `1/n²`.
    pub fn inverse_squares() -> Self {
        Self::new("inverse_squares", |n| rat(1, (n * n) as i64)).with_term_bound(int(1))
    }

    /// `-a_n`.
    pub fn negated(&self) -> Series {
        let s = self.clone();
        let mut out = Series::try_new(format!("-({})", self.name), move |n| Ok(-s.term(n)?));
        out.term_bound = self.term_bound.clone();
        out
    }
}

/// Prefix sums `S_m = Σ_{n ∈ A ∩ [1,m]} a_n` for `m = 1..=H`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSumTrace {
    series: String,
    over: Option<String>,
    sums: Vec<Rational>,
}

impl PartialSumTrace {
    /// Wraps precomputed prefix sums with their labels.
    pub fn from_parts(series: impl Into<String>, over: Option<String>, sums: Vec<Rational>) -> Result<Self> {
        let mut t = Self::from_sums(series, sums)?;
        t.over = over;
        Ok(t)
    }

    /// Wraps precomputed prefix sums.
    pub fn from_sums(label: impl Into<String>, sums: Vec<Rational>) -> Result<Self> {
        if sums.is_empty() {
            return Err(Error::EmptyHorizon);
        }
        Ok(PartialSumTrace { series: label.into(), over: None, sums })
    }

    pub fn horizon(&self) -> u64 {
        self.sums.len() as u64
    }

    pub fn series_name(&self) -> &str {
        &self.series
    }

    /// Label of the index set summed over, if any.
    pub fn over(&self) -> Option<&str> {
        self.over.as_deref()
    }

    /// `S_m` for `1 <= m <= H`; `S_0 = 0`.
    pub fn sum(&self, m: u64) -> &Rational {
        static ZERO: Rational = Rational::ZERO;
        if m == 0 {
            &ZERO
        } else {
            &self.sums[m as usize - 1]
        }
    }

    pub fn sums(&self) -> &[Rational] {
        &self.sums
    }

    /// `S_m - S_{m-1}`: the included term at `m`, or 0.
    pub fn increment(&self, m: u64) -> Rational {
        self.sum(m) - self.sum(m - 1)
    }

    pub fn last(&self) -> &Rational {
        self.sums.last().expect("non-empty trace")
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.sums.iter().map(crate::rational::to_f64).collect()
    }
}

/// Streams `(m, S_m)` for `m = 1..=horizon`, summing only over `over` if given.
pub fn prefix_sums<'a>(
    series: &'a Series,
    over: Option<&'a IndexSet>,
    horizon: u64,
) -> impl Iterator<Item = Result<(u64, Rational)>> + 'a {
    let mut s = Rational::ZERO;
    let mask = over.map(|a| a.bitmap_upto(horizon));
    (1..=horizon).map(move |m| {
        if mask.as_ref().is_none_or(|b| b[m as usize]) {
            s += series.term(m)?;
        }
        Ok((m, s.clone()))
    })
}

/// The exact trace `S_1, ..., S_H` of `series` over `over` (ℕ when `None`).
pub fn partial_sums(series: &Series, horizon: u64, over: Option<&IndexSet>) -> Result<PartialSumTrace> {
    if horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    let sums = prefix_sums(series, over, horizon).map(|r| r.map(|(_, s)| s)).collect::<Result<Vec<_>>>()?;
    Ok(PartialSumTrace {
        series: series.name().to_string(),
        over: over.map(|a| a.label().to_string()),
        sums,
    })
}

/// Certified classification of a trace at a finite horizon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DivergenceVerdict {
    /// `S_at >= bound`, with no later dip to the lower level.
    CertifiedExceeds {
        #[serde(with = "serde_exact")]
        bound: Rational,
        at_index: u64,
    },
    /// `S_at <= bound` (a negative level), with no later rise to the upper level.
    CertifiedBelow {
        #[serde(with = "serde_exact")]
        bound: Rational,
        at_index: u64,
    },
    /// Alternating strict excursions `S > upper` and `S < lower`.
    CertifiedOscillation {
        #[serde(with = "serde_exact")]
        upper: Rational,
        #[serde(with = "serde_exact")]
        lower: Rational,
        up_indices: Vec<u64>,
        down_indices: Vec<u64>,
    },
    Inconclusive { horizon: u64 },
}

impl DivergenceVerdict {
    pub fn is_oscillation(&self) -> bool {
        matches!(self, DivergenceVerdict::CertifiedOscillation { .. })
    }

    pub fn upcross_count(&self) -> usize {
        match self {
            DivergenceVerdict::CertifiedOscillation { up_indices, .. } => up_indices.len(),
            _ => 0,
        }
    }

    pub fn downcross_count(&self) -> usize {
        match self {
            DivergenceVerdict::CertifiedOscillation { down_indices, .. } => down_indices.len(),
            _ => 0,
        }
    }

    /// `c` when the oscillation levels are symmetric `±c`.
    pub fn amplitude(&self) -> Option<Rational> {
        match self {
            DivergenceVerdict::CertifiedOscillation { upper, lower, .. } if &-upper.clone() == lower => {
                Some(upper.clone())
            }
            _ => None,
        }
    }

    /// Certificate indices, in increasing order.
    pub fn certificate_indices(&self) -> Vec<u64> {
        match self {
            DivergenceVerdict::CertifiedExceeds { at_index, .. }
            | DivergenceVerdict::CertifiedBelow { at_index, .. } => vec![*at_index],
            DivergenceVerdict::CertifiedOscillation { up_indices, down_indices, .. } => {
                let mut v: Vec<u64> = up_indices.iter().chain(down_indices).copied().collect();
                v.sort_unstable();
                v
            }
            DivergenceVerdict::Inconclusive { .. } => vec![],
        }
    }

    /// Re-checks every certificate against the given prefix sums, where
    /// `sum_at(m)` compares `S_m` with a level.
    fn check_with(&self, mut cmp: impl FnMut(u64, &Rational) -> Result<Ordering>) -> Result<bool> {
        Ok(match self {
            DivergenceVerdict::CertifiedExceeds { bound, at_index } => cmp(*at_index, bound)? != Ordering::Less,
            DivergenceVerdict::CertifiedBelow { bound, at_index } => cmp(*at_index, bound)? != Ordering::Greater,
            DivergenceVerdict::CertifiedOscillation { upper, lower, up_indices, down_indices } => {
                if up_indices.is_empty() || down_indices.is_empty() {
                    return Ok(false);
                }
                let mut events: Vec<(u64, bool)> = up_indices
                    .iter()
                    .map(|&m| (m, true))
                    .chain(down_indices.iter().map(|&m| (m, false)))
                    .collect();
                events.sort_unstable();
                let alternates = events.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 != w[1].1);
                if !alternates {
                    return Ok(false);
                }
                for (m, up) in events {
                    let ok = if up { cmp(m, upper)? == Ordering::Greater } else { cmp(m, lower)? == Ordering::Less };
                    if !ok {
                        return Ok(false);
                    }
                }
                true
            }
            DivergenceVerdict::Inconclusive { .. } => true,
        })
    }

    /// Re-checks every certificate against a materialized trace.
    pub fn verify_trace(&self, trace: &PartialSumTrace) -> bool {
        self.check_with(|m, level| {
            if m == 0 || m > trace.horizon() {
                return Err(Error::HorizonExceeded { what: "certificate".into(), requested: m, limit: trace.horizon() });
            }
            Ok(trace.sum(m).cmp(level))
        })
        .unwrap_or(false)
    }

    /// Re-checks every certificate by recomputing the needed prefix sums
    /// exactly from the series.
    pub fn verify(&self, series: &Series, over: Option<&IndexSet>) -> Result<bool> {
        let idx = self.certificate_indices();
        let sums = exact_prefix_sums_at(series, over, &idx)?;
        self.check_with(|m, level| {
            let i = idx.binary_search(&m).expect("certificate index present");
            Ok(sums[i].cmp_to(level))
        })
    }
}

/// Exact prefix sums at the given increasing indices, left unreduced.
pub fn exact_prefix_sums_at(series: &Series, over: Option<&IndexSet>, indices: &[u64]) -> Result<Vec<RawSum>> {
    let mut out: Vec<RawSum> = Vec::with_capacity(indices.len());
    let mut prev = 0u64;
    let mut acc = RawSum { num: 0.into(), den: 1u8.into() };
    let mask = over.map(|a| a.bitmap_upto(indices.last().copied().unwrap_or(0)));
    for &m in indices {
        if m < prev {
            return Err(Error::InvalidArgument("indices must be increasing".into()));
        }
        let terms = (prev + 1..=m)
            .filter(|&n| mask.as_ref().is_none_or(|b| b[n as usize]))
            .map(|n| series.term(n))
            .collect::<Result<Vec<_>>>()?;
        let seg = exact_sum_raw(&terms);
        acc = add_raw(&acc, &seg);
        out.push(acc.clone());
        prev = m;
    }
    Ok(out)
}

fn add_raw(a: &RawSum, b: &RawSum) -> RawSum {
    use dashu_int::IBig;
    if a.den == b.den {
        return RawSum { num: &a.num + &b.num, den: a.den.clone() };
    }
    RawSum {
        num: &a.num * IBig::from(b.den.clone()) + &b.num * IBig::from(a.den.clone()),
        den: &a.den * &b.den,
    }
}

/// Thresholds for the single-pass classifier.
#[derive(Clone, Debug)]
pub struct Criteria {
    /// Oscillation needs `S > upper` ...
    pub upper: Rational,
    /// ... alternating with `S < lower`.
    pub lower: Rational,
    /// Level for the exceeds/below verdicts (`S >= bound` / `S <= -bound`).
    pub bound: Option<Rational>,
    pub min_crossings: usize,
}

impl Criteria {
    /// Symmetric oscillation at `±amplitude`, exceeds/below at `±bound`.
    pub fn new(bound: Rational, amplitude: Rational, min_crossings: usize) -> Result<Self> {
        if bound <= Rational::ZERO || amplitude <= Rational::ZERO || min_crossings == 0 {
            return Err(Error::InvalidArgument("need bound > 0, amplitude > 0, min_crossings >= 1".into()));
        }
        Ok(Criteria { upper: amplitude.clone(), lower: -amplitude, bound: Some(bound), min_crossings })
    }

    /// Oscillation only, between arbitrary levels `lower < upper`.
    pub fn levels(upper: Rational, lower: Rational, min_crossings: usize) -> Result<Self> {
        if lower >= upper || min_crossings == 0 {
            return Err(Error::InvalidArgument("need lower < upper and min_crossings >= 1".into()));
        }
        Ok(Criteria { upper, lower, bound: None, min_crossings })
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    Neutral,
    Up,
    Down,
}

/// Single-pass state machine behind [`classify`] and [`certify_stream`].
struct Classifier {
    crit: Criteria,
    levels: [Level; 4],
    phase: Phase,
    ups: Vec<u64>,
    downs: Vec<u64>,
    exceeds: Option<u64>,
    below: Option<u64>,
    horizon: u64,
}

const UPPER: usize = 0;
const LOWER: usize = 1;
const BOUND: usize = 2;
const NEG_BOUND: usize = 3;

impl Classifier {
    fn new(crit: Criteria) -> Self {
        let b = crit.bound.clone().unwrap_or(Rational::ZERO);
        let levels = [Level::new(crit.upper.clone()), Level::new(crit.lower.clone()), Level::new(b.clone()), Level::new(-b)];
        Classifier { crit, levels, phase: Phase::Neutral, ups: vec![], downs: vec![], exceeds: None, below: None, horizon: 0 }
    }

    fn observe(&mut self, m: u64, mut cmp: impl FnMut(&Level) -> Result<Ordering>) -> Result<()> {
        self.horizon = m;
        let above = cmp(&self.levels[UPPER])?;
        let under = cmp(&self.levels[LOWER])?;
        if above == Ordering::Greater && self.phase != Phase::Up {
            self.ups.push(m);
            self.phase = Phase::Up;
        } else if under == Ordering::Less && self.phase != Phase::Down {
            self.downs.push(m);
            self.phase = Phase::Down;
        }
        if self.crit.bound.is_some() {
            if under != Ordering::Greater {
                self.exceeds = None;
            } else if self.exceeds.is_none() && cmp(&self.levels[BOUND])? != Ordering::Less {
                self.exceeds = Some(m);
            }
            if above != Ordering::Less {
                self.below = None;
            } else if self.below.is_none() && cmp(&self.levels[NEG_BOUND])? != Ordering::Greater {
                self.below = Some(m);
            }
        }
        Ok(())
    }

    fn verdict(self) -> DivergenceVerdict {
        let k = self.crit.min_crossings;
        if self.ups.len() >= k && self.downs.len() >= k {
            return DivergenceVerdict::CertifiedOscillation {
                upper: self.crit.upper,
                lower: self.crit.lower,
                up_indices: self.ups,
                down_indices: self.downs,
            };
        }
        if let (Some(m), Some(b)) = (self.exceeds, &self.crit.bound) {
            return DivergenceVerdict::CertifiedExceeds { bound: b.clone(), at_index: m };
        }
        if let (Some(m), Some(b)) = (self.below, &self.crit.bound) {
            return DivergenceVerdict::CertifiedBelow { bound: -b.clone(), at_index: m };
        }
        DivergenceVerdict::Inconclusive { horizon: self.horizon }
    }
}

/// Classifies a trace. Oscillation takes priority over exceeds, which takes
/// priority over below; `Inconclusive` is the default.
pub fn classify(trace: &PartialSumTrace, bound: &Rational, osc_amplitude: &Rational, min_crossings: usize) -> Result<DivergenceVerdict> {
    classify_with(trace, Criteria::new(bound.clone(), osc_amplitude.clone(), min_crossings)?)
}

/// Classifies a trace against explicit [`Criteria`].
pub fn classify_with(trace: &PartialSumTrace, crit: Criteria) -> Result<DivergenceVerdict> {
    let mut c = Classifier::new(crit);
    for (i, s) in trace.sums().iter().enumerate() {
        c.observe(i as u64 + 1, |l| Ok(s.cmp(&l.value)))?;
    }
    Ok(c.verdict())
}

/// Outcome of [`certify_stream`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamReport {
    pub verdict: DivergenceVerdict,
    pub horizon: u64,
    /// Comparisons the fixed-point enclosure could not decide.
    pub exact_fallbacks: u64,
    /// Approximate final partial sum.
    pub final_sum: f64,
}

/// Same classification as [`classify_with`], without materializing the trace.
///
/// Prefix sums are tracked by a certified fixed-point enclosure; any
/// comparison the enclosure cannot decide is settled by exact arithmetic.
/// Suitable for horizons where exact traces would not fit in memory.
pub fn certify_stream(series: &Series, over: Option<&IndexSet>, horizon: u64, crit: Criteria) -> Result<StreamReport> {
    if horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    let members: Option<Vec<u64>> = over.map(|a| a.members_upto(horizon));
    let mut c = Classifier::new(crit);
    let mut bounds = Bounds::new();
    let mut fallbacks = 0u64;
    // exact checkpoint: S at index `done`
    let mut done = 0u64;
    let mut exact = RawSum { num: 0.into(), den: 1u8.into() };
    let included = |n: u64| members.as_ref().is_none_or(|v| v.binary_search(&n).is_ok());
    let mut next = members.as_ref().map(|v| v.iter().copied().peekable());
    for m in 1..=horizon {
        let hit = match next.as_mut() {
            None => true,
            Some(it) => {
                if it.peek() == Some(&m) {
                    it.next();
                    true
                } else {
                    false
                }
            }
        };
        if hit {
            bounds.add(&series.term(m)?);
        } else if m > 1 {
            // unchanged sum: same comparisons as before
            c.horizon = m;
            continue;
        }
        c.observe(m, |level| {
            if let Some(o) = bounds.cmp_to(level) {
                return Ok(o);
            }
            fallbacks += 1;
            if done < m {
                let terms = (done + 1..=m).filter(|&n| included(n)).map(|n| series.term(n)).collect::<Result<Vec<_>>>()?;
                exact = add_raw(&exact, &exact_sum_raw(&terms));
                done = m;
            }
            Ok(exact.cmp_to(&level.value))
        })?;
    }
    Ok(StreamReport { verdict: c.verdict(), horizon, exact_fallbacks: fallbacks, final_sum: bounds.approx() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_harmonic_terms() {
        let a = Series::alternating_harmonic();
        assert_eq!(a.term(1).unwrap(), int(1));
        assert_eq!(a.term(2).unwrap(), rat(-1, 2));
        assert!(matches!(a.term(0), Err(Error::ZeroIndex)));
        let t = partial_sums(&a, 4, None).unwrap();
        assert_eq!(t.sum(4), &rat(7, 12));
    }

    #[test]
    fn trace_examples() {
        let a = Series::alternating_harmonic();
        let t = partial_sums(&a, 3, Some(&IndexSet::empty())).unwrap();
        assert_eq!(t.sums(), &[Rational::ZERO, Rational::ZERO, Rational::ZERO]);
        let t = partial_sums(&a, 2, Some(&IndexSet::naturals())).unwrap();
        assert_eq!(t.sums(), &[int(1), rat(1, 2)]);
        let t = partial_sums(&a, 4, Some(&IndexSet::odds())).unwrap();
        assert_eq!(t.sums(), &[int(1), int(1), rat(4, 3), rat(4, 3)]);
        assert_eq!(t.increment(2), Rational::ZERO);
        assert!(matches!(partial_sums(&a, 0, None), Err(Error::EmptyHorizon)));
    }

    #[test]
    fn term_bound_is_enforced() {
        let s = Series::new("grow", |n| int(n as i64)).with_term_bound(int(3));
        assert!(s.term(3).is_ok());
        assert!(matches!(s.term(4), Err(Error::TermBound { index: 4, .. })));
    }

    #[test]
    fn classify_alternating_signs() {
        let sums: Vec<Rational> = [1, -1, 1, -1].iter().map(|&x| int(x)).collect();
        let t = PartialSumTrace::from_sums("pm", sums).unwrap();
        let v = classify(&t, &int(5), &rat(1, 2), 2).unwrap();
        assert_eq!(v.upcross_count(), 2);
        assert_eq!(v.downcross_count(), 2);
        assert_eq!(v.amplitude(), Some(rat(1, 2)));
        assert!(v.verify_trace(&t));
    }

    #[test]
    fn classify_zero_trace() {
        let t = partial_sums(&Series::zero(), 50, None).unwrap();
        assert_eq!(classify(&t, &int(1), &int(1), 1).unwrap(), DivergenceVerdict::Inconclusive { horizon: 50 });
    }

    #[test]
    fn classify_rejects_bad_parameters() {
        let t = partial_sums(&Series::zero(), 5, None).unwrap();
        assert!(classify(&t, &int(0), &int(1), 1).is_err());
        assert!(classify(&t, &int(1), &int(1), 0).is_err());
    }

    #[test]
    fn below_and_reset() {
        let sums: Vec<Rational> = [-3, -1, 2, -3].iter().map(|&x| int(x)).collect();
        let t = PartialSumTrace::from_sums("t", sums).unwrap();
        // dips below -2 at 1, recovers to >= 1 at 3, dips again at 4
        let v = classify(&t, &int(2), &int(1), 5).unwrap();
        assert_eq!(v, DivergenceVerdict::CertifiedBelow { bound: int(-2), at_index: 4 });
    }

    #[test]
    fn stream_agrees_with_trace() {
        let a = Series::alternating_harmonic();
        for set in [IndexSet::odds(), IndexSet::evens(), IndexSet::naturals()] {
            let t = partial_sums(&a, 300, Some(&set)).unwrap();
            let crit = Criteria::new(int(2), rat(1, 4), 1).unwrap();
            let v = classify_with(&t, crit.clone()).unwrap();
            let s = certify_stream(&a, Some(&set), 300, crit).unwrap();
            assert_eq!(v, s.verdict);
            assert!(v.verify(&a, Some(&set)).unwrap());
        }
    }

    #[test]
    fn stream_exact_fallback_on_ties() {
        // S hits the level 1/2 exactly; the enclosure cannot decide equality
        let s = Series::from_terms("tie", vec![rat(1, 2), Rational::ZERO, rat(-1, 3)]);
        let crit = Criteria::new(rat(1, 2), rat(1, 3), 1).unwrap();
        let r = certify_stream(&s, None, 3, crit).unwrap();
        assert!(r.exact_fallbacks > 0);
        assert_eq!(r.verdict, DivergenceVerdict::CertifiedExceeds { bound: rat(1, 2), at_index: 1 });
    }
}

impl std::str::FromStr for Series {
    type Err = Error;

    /// Parses `altharm`, `harmonic`, `altunit`, `zero`, `inv_sq`,
    /// `terms:1,-1/2,...` (zeros afterwards) and `neg(...)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("neg(").and_then(|r| r.strip_suffix(')')) {
            return Ok(inner.parse::<Series>()?.negated());
        }
        match s {
            "altharm" | "alternating_harmonic" => Ok(Series::alternating_harmonic()),
            "harmonic" => Ok(Series::harmonic()),
            "altunit" | "alternating_unit" => Ok(Series::alternating_unit()),
            "zero" => Ok(Series::zero()),
            "inv_sq" | "inverse_squares" => Ok(Series::inverse_squares()),
            _ => match s.split_once(':') {
                Some(("terms", rest)) => {
                    let terms = rest
                        .split(',')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(crate::rational::parse_rational)
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Series::from_terms(s, terms))
                }
                _ => Err(Error::Parse(format!("unknown series `{s}`"))),
            },
        }
    }
}
