//! Finite-horizon `(r,s)`-sequences, almost and total splitting, and the
//! check that an almost-splitting witness yields `±1/4` oscillation.

use std::collections::BTreeMap;

use dashu_base::Abs;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{exact_sum, fmt_rational, int, parse_rational, pow, rat, serde_exact, Rational};
use crate::series::{exact_prefix_sums_at, DivergenceVerdict, Series};
use crate::sets::IndexSet;
use crate::witnesses::{quarter_oscillation_check, BlockPartition};

/// The index range of a block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockDomain {
    Interval { lo: u64, hi: u64 },
    Set(Vec<u64>),
}

impl BlockDomain {
    pub fn len(&self) -> usize {
        match self {
            BlockDomain::Interval { lo, hi } => (hi - lo + 1) as usize,
            BlockDomain::Set(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min(&self) -> u64 {
        match self {
            BlockDomain::Interval { lo, .. } => *lo,
            BlockDomain::Set(v) => v[0],
        }
    }

    pub fn max(&self) -> u64 {
        match self {
            BlockDomain::Interval { hi, .. } => *hi,
            BlockDomain::Set(v) => v[v.len() - 1],
        }
    }

    pub fn members(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match self {
            BlockDomain::Interval { lo, hi } => Box::new(*lo..=*hi),
            BlockDomain::Set(v) => Box::new(v.iter().copied()),
        }
    }

    fn position(&self, n: u64) -> Option<usize> {
        match self {
            BlockDomain::Interval { lo, hi } => (*lo..=*hi).contains(&n).then(|| (n - lo) as usize),
            BlockDomain::Set(v) => v.binary_search(&n).ok(),
        }
    }
}

/// One block `(I_k, B_k, (a_n)_{n ∈ I_k})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BlockJson", into = "BlockJson")]
pub struct RsBlock {
    domain: BlockDomain,
    b: Vec<u64>,
    in_b: Vec<bool>,
    terms: Vec<Rational>,
}

impl RsBlock {
    /// `terms[i]` belongs to the `i`-th element of the domain.
    pub fn new(domain: BlockDomain, mut b: Vec<u64>, terms: Vec<Rational>) -> Result<Self> {
        if domain.is_empty() {
            return Err(Error::InvalidArgument("empty block".into()));
        }
        if let BlockDomain::Set(v) = &domain {
            if v.windows(2).any(|w| w[0] >= w[1]) || v[0] == 0 {
                return Err(Error::InvalidArgument("block set must be strictly increasing and positive".into()));
            }
        }
        if let BlockDomain::Interval { lo, hi } = domain {
            if lo == 0 || hi < lo {
                return Err(Error::InvalidArgument(format!("bad block interval [{lo}, {hi}]")));
            }
        }
        if terms.len() != domain.len() {
            return Err(Error::InvalidArgument(format!("block has {} indices but {} terms", domain.len(), terms.len())));
        }
        let (zero, one) = (Rational::ZERO, int(1));
        if let Some(t) = terms.iter().find(|t| **t < zero || **t > one) {
            return Err(Error::InvalidArgument(format!("term {} outside [0, 1]", fmt_rational(t))));
        }
        b.sort_unstable();
        b.dedup();
        let mut in_b = vec![false; terms.len()];
        for &n in &b {
            match domain.position(n) {
                Some(i) => in_b[i] = true,
                None => return Err(Error::InvalidArgument(format!("B contains {n}, which is outside I"))),
            }
        }
        Ok(RsBlock { domain, b, in_b, terms })
    }

    pub fn interval(lo: u64, hi: u64, b: Vec<u64>, terms: Vec<Rational>) -> Result<Self> {
        Self::new(BlockDomain::Interval { lo, hi }, b, terms)
    }

    pub fn domain(&self) -> &BlockDomain {
        &self.domain
    }

    pub fn b(&self) -> &[u64] {
        &self.b
    }

    pub fn terms(&self) -> &[Rational] {
        &self.terms
    }

    pub fn term(&self, n: u64) -> Option<&Rational> {
        self.domain.position(n).map(|i| &self.terms[i])
    }

    /// `Σ_{n ∈ B_k ∩ D} a_n` and `Σ_{n ∈ (I_k ∖ B_k) ∩ D} a_n`; `D = None`
    /// means all of `I_k`.
    pub fn sums_over(&self, d: Option<&IndexSet>) -> (Rational, Rational) {
        let (mut inside, mut outside) = (Vec::new(), Vec::new());
        for (i, n) in self.domain.members().enumerate() {
            if d.is_none_or(|d| d.contains(n)) {
                if self.in_b[i] {
                    inside.push(&self.terms[i]);
                } else {
                    outside.push(&self.terms[i]);
                }
            }
        }
        (exact_sum(inside), exact_sum(outside))
    }

    /// Whether `D ∩ I_k = B_k`.
    pub fn equals_trace(&self, d: &IndexSet) -> bool {
        self.domain.members().enumerate().all(|(i, n)| d.contains(n) == self.in_b[i])
    }
}

#[derive(Serialize, Deserialize)]
struct BlockJson {
    #[serde(rename = "I", skip_serializing_if = "Option::is_none", default)]
    interval: Option<[u64; 2]>,
    #[serde(rename = "I_set", skip_serializing_if = "Option::is_none", default)]
    set: Option<Vec<u64>>,
    #[serde(rename = "B")]
    b: Vec<u64>,
    a: BTreeMap<u64, [String; 2]>,
}

impl From<RsBlock> for BlockJson {
    fn from(blk: RsBlock) -> Self {
        let a = blk
            .domain
            .members()
            .zip(&blk.terms)
            .map(|(n, t)| (n, [t.numerator().to_string(), t.denominator().to_string()]))
            .collect();
        let (interval, set) = match blk.domain {
            BlockDomain::Interval { lo, hi } => (Some([lo, hi]), None),
            BlockDomain::Set(v) => (None, Some(v)),
        };
        BlockJson { interval, set, b: blk.b, a }
    }
}

impl TryFrom<BlockJson> for RsBlock {
    type Error = Error;

    fn try_from(j: BlockJson) -> Result<Self> {
        let domain = match (j.interval, j.set) {
            (Some([lo, hi]), None) => BlockDomain::Interval { lo, hi },
            (None, Some(v)) => BlockDomain::Set(v),
            _ => return Err(Error::Parse("a block needs exactly one of `I` and `I_set`".into())),
        };
        let terms = domain
            .members()
            .map(|n| {
                let [num, den] = j.a.get(&n).ok_or_else(|| Error::Parse(format!("missing term for index {n}")))?;
                parse_rational(&format!("{num}/{den}"))
            })
            .collect::<Result<Vec<_>>>()?;
        if j.a.len() != domain.len() {
            return Err(Error::Parse("terms given for indices outside the block".into()));
        }
        RsBlock::new(domain, j.b, terms)
    }
}

/// Where a sequence built from a series came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOrigin {
    pub series: String,
    pub partition: BlockPartition,
}

/// A finite `(r,s)`-sequence: blocks with `max I_k < min I_{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SeqJson", into = "SeqJson")]
pub struct RSSequence {
    blocks: Vec<RsBlock>,
    pub r: Rational,
    pub s: Rational,
    pub origin: Option<BlockOrigin>,
}

#[derive(Serialize, Deserialize)]
struct SeqJson {
    blocks: Vec<RsBlock>,
    #[serde(with = "serde_exact")]
    r: Rational,
    #[serde(with = "serde_exact")]
    s: Rational,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    origin: Option<BlockOrigin>,
}

impl From<RSSequence> for SeqJson {
    fn from(s: RSSequence) -> Self {
        SeqJson { blocks: s.blocks, r: s.r, s: s.s, origin: s.origin }
    }
}

impl TryFrom<SeqJson> for RSSequence {
    type Error = Error;

    fn try_from(j: SeqJson) -> Result<Self> {
        let mut seq = RSSequence::new(j.blocks, j.r, j.s)?;
        seq.origin = j.origin;
        Ok(seq)
    }
}

impl RSSequence {
    pub fn new(blocks: Vec<RsBlock>, r: Rational, s: Rational) -> Result<Self> {
        if let Some(w) = blocks.windows(2).find(|w| w[0].domain.max() >= w[1].domain.min()) {
            return Err(Error::InvalidArgument(format!(
                "blocks overlap or are out of order: max {} >= min {}",
                w[0].domain.max(),
                w[1].domain.min()
            )));
        }
        if r < Rational::ZERO || s < Rational::ZERO {
            return Err(Error::InvalidArgument("targets must be non-negative".into()));
        }
        Ok(RSSequence { blocks, r, s, origin: None })
    }

    pub fn blocks(&self) -> &[RsBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `Σ_{B_k} a_n` (0-based `k`).
    pub fn b_sum(&self, k: usize) -> Rational {
        self.blocks[k].sums_over(None).0
    }

    /// `Σ_{I_k ∖ B_k} a_n` (0-based `k`).
    pub fn complement_sum(&self, k: usize) -> Rational {
        self.blocks[k].sums_over(None).1
    }

    /// `⋃ B_k` as a finite set.
    pub fn union_of_b(&self) -> IndexSet {
        let all: Vec<u64> = self.blocks.iter().flat_map(|b| b.b.iter().copied()).collect();
        IndexSet::finite(all).expect("positive indices").with_label("union-of-B")
    }
}

/// One row of [`audit_rs`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsAuditRow {
    /// 1-based block number.
    pub k: usize,
    #[serde(with = "serde_exact")]
    pub b_deviation: Rational,
    #[serde(with = "serde_exact")]
    pub complement_deviation: Rational,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsAudit {
    #[serde(with = "serde_exact")]
    pub tol: Rational,
    pub rows: Vec<RsAuditRow>,
    pub failing: Vec<usize>,
}

impl RsAudit {
    pub fn passes(&self) -> bool {
        self.failing.is_empty()
    }
}

/// Deviations `|Σ_{B_k} - r|` and `|Σ_{I_k ∖ B_k} - s|` for blocks
/// `k >= tail_start` (1-based).
pub fn audit_rs(seq: &RSSequence, tol: &Rational, tail_start: usize) -> Result<RsAudit> {
    if tail_start == 0 || tail_start > seq.len().max(1) {
        return Err(Error::InvalidArgument(format!("tail_start must lie in [1, {}]", seq.len().max(1))));
    }
    let mut rows = Vec::new();
    for (i, blk) in seq.blocks.iter().enumerate().skip(tail_start - 1) {
        let (bs, cs) = blk.sums_over(None);
        let bd = (bs - &seq.r).abs();
        let cd = (cs - &seq.s).abs();
        let ok = bd <= *tol && cd <= *tol;
        rows.push(RsAuditRow { k: i + 1, b_deviation: bd, complement_deviation: cd, ok });
    }
    let failing = rows.iter().filter(|r| !r.ok).map(|r| r.k).collect();
    Ok(RsAudit { tol: tol.clone(), rows, failing })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Almost,
    Total,
}

/// Blocks `E` on which `D` splits the sequence, with exact deviations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitWitness {
    pub kind: SplitKind,
    /// 1-based block numbers.
    pub blocks: Vec<usize>,
    /// `|Σ_{D ∩ B_k} a_n - r|` per block of `E`.
    #[serde(with = "serde_exact::vec")]
    pub deviations: Vec<Rational>,
    /// `Σ_{D ∩ (I_k ∖ B_k)} a_n` per block of `E`.
    #[serde(with = "serde_exact::vec")]
    pub leakage: Vec<Rational>,
    /// `None` for total splitting (exact set equality).
    #[serde(with = "serde_exact::option")]
    pub tol: Option<Rational>,
}

impl SplitWitness {
    /// Recomputes every deviation from scratch and checks its bound.
    pub fn verify(&self, d: &IndexSet, seq: &RSSequence) -> bool {
        if self.blocks.len() != self.deviations.len() || self.blocks.len() != self.leakage.len() {
            return false;
        }
        self.blocks.iter().enumerate().all(|(i, &k)| {
            let Some(blk) = k.checked_sub(1).and_then(|j| seq.blocks.get(j)) else { return false };
            let (inside, outside) = blk.sums_over(Some(d));
            let dev = (inside - &seq.r).abs();
            if dev != self.deviations[i] || outside != self.leakage[i] {
                return false;
            }
            match &self.tol {
                Some(t) => dev <= *t && outside <= *t,
                None => blk.equals_trace(d),
            }
        })
    }
}

/// Fewer qualifying blocks than required.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDeficiency {
    pub kind: SplitKind,
    pub qualifying: Vec<usize>,
    pub required: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum SplitOutcome {
    Witness(SplitWitness),
    Deficient(SplitDeficiency),
}

impl SplitOutcome {
    pub fn witness(&self) -> Option<&SplitWitness> {
        match self {
            SplitOutcome::Witness(w) => Some(w),
            SplitOutcome::Deficient(_) => None,
        }
    }

    pub fn qualifying(&self) -> &[usize] {
        match self {
            SplitOutcome::Witness(w) => &w.blocks,
            SplitOutcome::Deficient(d) => &d.qualifying,
        }
    }
}

fn split_scan(d: &IndexSet, seq: &RSSequence, tol: Option<&Rational>, min_blocks: usize) -> Result<SplitOutcome> {
    if min_blocks == 0 {
        return Err(Error::InvalidArgument("min_blocks must be at least 1".into()));
    }
    let kind = if tol.is_some() { SplitKind::Almost } else { SplitKind::Total };
    let (mut blocks, mut deviations, mut leakage) = (vec![], vec![], vec![]);
    for (i, blk) in seq.blocks.iter().enumerate() {
        let qualifies_total = tol.is_none() && blk.equals_trace(d);
        if tol.is_none() && !qualifies_total {
            continue;
        }
        let (inside, outside) = blk.sums_over(Some(d));
        let dev = (inside - &seq.r).abs();
        let ok = match tol {
            Some(t) => dev <= *t && outside <= *t,
            None => true,
        };
        if ok {
            blocks.push(i + 1);
            deviations.push(dev);
            leakage.push(outside);
        }
    }
    Ok(if blocks.len() >= min_blocks {
        SplitOutcome::Witness(SplitWitness { kind, blocks, deviations, leakage, tol: tol.cloned() })
    } else {
        SplitOutcome::Deficient(SplitDeficiency { kind, qualifying: blocks, required: min_blocks })
    })
}

/// All blocks with `|Σ_{D∩B_k} a_n - r| <= tol` and `Σ_{D∩(I_k∖B_k)} a_n <= tol`.
pub fn almost_splits(d: &IndexSet, seq: &RSSequence, tol: &Rational, min_blocks: usize) -> Result<SplitOutcome> {
    if *tol < Rational::ZERO {
        return Err(Error::InvalidArgument("tolerance must be non-negative".into()));
    }
    split_scan(d, seq, Some(tol), min_blocks)
}

/// All blocks with `D ∩ I_k = B_k`.
pub fn totally_splits(d: &IndexSet, seq: &RSSequence, min_blocks: usize) -> Result<SplitOutcome> {
    split_scan(d, seq, None, min_blocks)
}

/// The inequalities behind one excursion pair, on one witness block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionCheck {
    /// 1-based block number `k`; `I_k = J_{2k-1} ∪ J_{2k}`.
    pub k: usize,
    /// `Σ x_n` over `D ∩ P ∩ J_{2k-1}`, `D ∩ N ∩ J_{2k}`, `D ∩ N ∩ J_{2k-1}`,
    /// `D ∩ P ∩ J_{2k}` (in that order).
    #[serde(with = "serde_exact::vec")]
    pub x_sums: Vec<Rational>,
    /// The same four sums of `a_n`, computed directly from the series.
    #[serde(with = "serde_exact::vec")]
    pub a_sums: Vec<Rational>,
    /// `x`-sums above 3/8, 3/8 and below 1/8, 1/8.
    pub x_bounds: bool,
    /// `a`-sums equal the `x`-sums scaled by `±5^{2k-1}`, `±5^{2k}`.
    pub scaling_exact: bool,
    /// `Σ_{n < min I_k} |a_n| < (5^{2k-1} - 1)/4` and
    /// `Σ_{n < min J_{2k}} |a_n| < (5^{2k} - 1)/4`.
    pub prefix_bounds: bool,
    /// Partial sums over `D` at `max J_{2k-1}` and `max J_{2k}` (approximate).
    pub sum_at_odd_end: f64,
    pub sum_at_even_end: f64,
    /// `S^D(max J_{2k-1}) > 1/4` and `S^D(max J_{2k}) < -1/4`, exactly.
    pub quarter_bounds: bool,
}

impl ExcursionCheck {
    pub fn holds(&self) -> bool {
        self.x_bounds && self.scaling_exact && self.prefix_bounds && self.quarter_bounds
    }
}

/// Outcome of [`oscillation_from_witness`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessOscillation {
    pub checks: Vec<ExcursionCheck>,
    pub horizon: u64,
    pub verdict: DivergenceVerdict,
}

/// From a witness that `D` almost splits the `(1,1)`-sequence of `a` (tol at
/// most 1/8), re-derives the block inequalities exactly and classifies the
/// trace over `D` with bound and amplitude `1/4`, asking for one excursion
/// pair per witness block.
pub fn oscillation_from_witness(a: &Series, seq: &RSSequence, d: &IndexSet, witness: &SplitWitness) -> Result<WitnessOscillation> {
    let eighth = rat(1, 8);
    if witness.blocks.is_empty() {
        return Err(Error::WitnessTooWeak("empty witness".into()));
    }
    if witness.tol.as_ref().is_some_and(|t| *t > eighth) {
        return Err(Error::WitnessTooWeak(format!(
            "tolerance {} exceeds 1/8",
            fmt_rational(witness.tol.as_ref().expect("checked"))
        )));
    }
    let Some(origin) = &seq.origin else {
        return Err(Error::WitnessTooWeak("sequence was not built from a series".into()));
    };
    let part = &origin.partition;
    if origin.series != a.name() || part.base != int(5) || seq.r != int(1) || seq.s != int(1) {
        return Err(Error::WitnessTooWeak("sequence is not the base-5 (1,1)-sequence of this series".into()));
    }
    if !witness.verify(d, seq) {
        return Err(Error::WitnessTooWeak("witness does not re-verify".into()));
    }
    let five = int(5);
    let mut checks = Vec::new();
    let mut abs_before = vec![Rational::ZERO];
    for s in &part.abs_sums {
        let next = abs_before.last().expect("non-empty") + s;
        abs_before.push(next);
    }
    let ends: Vec<u64> = witness
        .blocks
        .iter()
        .flat_map(|&k| [part.blocks[2 * k - 2].1, part.blocks[2 * k - 1].1])
        .collect();
    let ends_sums = exact_prefix_sums_at(a, Some(d), &ends)?;
    for (w, &k) in witness.blocks.iter().enumerate() {
        let blk = &seq.blocks[k - 1];
        let (odd, even) = (part.blocks[2 * k - 2], part.blocks[2 * k - 1]);
        let (so, se) = (pow(&five, (2 * k - 1) as u32), pow(&five, (2 * k) as u32));
        let mut x = vec![Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        let mut av = vec![Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for n in odd.0..=even.1 {
            if !d.contains(n) {
                continue;
            }
            let t = a.term(n)?;
            let positive = t >= Rational::ZERO;
            let slot = match (n <= odd.1, positive) {
                (true, true) => 0,
                (false, false) => 1,
                (true, false) => 2,
                (false, true) => 3,
            };
            x[slot].push(blk.term(n).expect("index in block").clone());
            av[slot].push(t);
        }
        let x_sums: Vec<Rational> = x.iter().map(exact_sum).collect();
        let a_sums: Vec<Rational> = av.iter().map(exact_sum).collect();
        let (three8, one8) = (rat(3, 8), rat(1, 8));
        let x_bounds = x_sums[0] > three8 && x_sums[1] > three8 && x_sums[2] < one8 && x_sums[3] < one8;
        let scaling_exact = a_sums[0] == &x_sums[0] * &so
            && a_sums[1] == -(&x_sums[1] * &se)
            && a_sums[2] == -(&x_sums[2] * &so)
            && a_sums[3] == &x_sums[3] * &se;
        let one = int(1);
        let prefix_bounds = abs_before[2 * k - 2] < (&so - &one) / int(4) && abs_before[2 * k - 1] < (&se - &one) / int(4);
        let quarter = rat(1, 4);
        let (s_odd, s_even) = (&ends_sums[2 * w], &ends_sums[2 * w + 1]);
        let quarter_bounds =
            s_odd.cmp_to(&quarter) == std::cmp::Ordering::Greater && s_even.cmp_to(&-quarter.clone()) == std::cmp::Ordering::Less;
        checks.push(ExcursionCheck {
            k,
            x_sums,
            a_sums,
            x_bounds,
            scaling_exact,
            prefix_bounds,
            sum_at_odd_end: s_odd.clone().reduce().to_f64().value(),
            sum_at_even_end: s_even.clone().reduce().to_f64().value(),
            quarter_bounds,
        });
    }
    let horizon = *ends.last().expect("non-empty witness");
    let verdict = quarter_oscillation_check(a, d, witness.blocks.len(), horizon)?;
    Ok(WitnessOscillation { checks, horizon, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witnesses::one_one_sequence;

    fn toy() -> RSSequence {
        let b1 = RsBlock::interval(1, 3, vec![1, 2], vec![rat(1, 2), rat(1, 2), rat(1, 3)]).unwrap();
        let b2 = RsBlock::new(BlockDomain::Set(vec![5, 7]), vec![7], vec![rat(1, 3), int(1)]).unwrap();
        RSSequence::new(vec![b1, b2], int(1), rat(1, 3)).unwrap()
    }

    #[test]
    fn validation() {
        assert!(RsBlock::interval(1, 2, vec![3], vec![int(0), int(0)]).is_err());
        assert!(RsBlock::interval(1, 2, vec![], vec![int(2), int(0)]).is_err());
        assert!(RsBlock::interval(1, 2, vec![], vec![int(0)]).is_err());
        let b = RsBlock::interval(1, 3, vec![], vec![int(0); 3]).unwrap();
        assert!(RSSequence::new(vec![b.clone(), b], int(1), int(1)).is_err());
    }

    #[test]
    fn exact_sequence_audits_clean() {
        let a = audit_rs(&toy(), &int(0), 1).unwrap();
        assert!(a.passes());
        assert!(audit_rs(&toy(), &int(0), 0).is_err());
    }

    #[test]
    fn corrupted_block_is_named() {
        let mut seq = toy();
        seq.blocks[1] = RsBlock::new(BlockDomain::Set(vec![5, 7]), vec![7], vec![rat(1, 3), rat(1, 2)]).unwrap();
        let a = audit_rs(&seq, &rat(1, 10), 1).unwrap();
        assert_eq!(a.failing, vec![2]);
    }

    #[test]
    fn splitting_examples() {
        let seq = toy();
        let d = seq.union_of_b();
        let total = totally_splits(&d, &seq, 2).unwrap();
        assert_eq!(total.qualifying(), &[1, 2]);
        let almost = almost_splits(&d, &seq, &int(0), 2).unwrap();
        assert!(almost.witness().unwrap().verify(&d, &seq));
        let none = almost_splits(&IndexSet::empty(), &seq, &rat(1, 2), 1).unwrap();
        assert!(matches!(none, SplitOutcome::Deficient(_)));
        assert_eq!(totally_splits(&IndexSet::finite([2, 5]).unwrap(), &seq, 1).unwrap().qualifying(), &[] as &[usize]);
    }

    #[test]
    fn total_without_almost_when_block_misses_target() {
        // B_1 sums to 1/2 while r = 1: D ∩ I_1 = B_1, yet the deviation is 1/2.
        let b = RsBlock::interval(1, 2, vec![1], vec![rat(1, 2), int(1)]).unwrap();
        let seq = RSSequence::new(vec![b], int(1), int(1)).unwrap();
        let d = IndexSet::finite([1]).unwrap();
        assert_eq!(totally_splits(&d, &seq, 1).unwrap().qualifying(), &[1]);
        assert!(almost_splits(&d, &seq, &rat(1, 8), 1).unwrap().qualifying().is_empty());
    }

    #[test]
    fn json_roundtrip() {
        let seq = toy();
        let s = serde_json::to_string(&seq).unwrap();
        assert!(s.contains("\"I\":[1,3]") && s.contains("\"I_set\":[5,7]"));
        let back: RSSequence = serde_json::from_str(&s).unwrap();
        assert_eq!(back, seq);
        let unit = one_one_sequence(&Series::alternating_unit(), 1, 100).unwrap();
        let back: RSSequence = serde_json::from_str(&serde_json::to_string(&unit).unwrap()).unwrap();
        assert_eq!(back, unit);
    }

    #[test]
    fn witness_gates() {
        let a = Series::alternating_unit();
        let seq = one_one_sequence(&a, 2, 10_000).unwrap();
        let d = seq.union_of_b();
        let w = almost_splits(&d, &seq, &rat(1, 2), 1).unwrap().witness().unwrap().clone();
        assert!(matches!(oscillation_from_witness(&a, &seq, &d, &w), Err(Error::WitnessTooWeak(_))));
        let mut empty = almost_splits(&d, &seq, &rat(1, 8), 1).unwrap().witness().unwrap().clone();
        empty.blocks.clear();
        empty.deviations.clear();
        empty.leakage.clear();
        assert!(matches!(oscillation_from_witness(&a, &seq, &d, &empty), Err(Error::WitnessTooWeak(_))));
    }

    #[test]
    fn unit_pipeline_oscillates() {
        let a = Series::alternating_unit();
        let seq = one_one_sequence(&a, 2, 10_000).unwrap();
        let d = seq.union_of_b();
        let w = almost_splits(&d, &seq, &rat(1, 8), 2).unwrap().witness().unwrap().clone();
        let out = oscillation_from_witness(&a, &seq, &d, &w).unwrap();
        assert!(out.checks.iter().all(|c| c.holds()), "{:?}", out.checks);
        assert!(out.verdict.is_oscillation());
        assert!(out.verdict.verify(&a, Some(&d)).unwrap());
    }
}
