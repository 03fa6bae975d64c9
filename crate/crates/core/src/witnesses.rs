//! Quantitative divergence certificates: milestone sequences, greedy
//! geometric blocks, the up/down lemma, the quarter-oscillation check and a
//! greedy oscillating-set builder.

use std::cmp::Ordering;

use dashu_base::Abs;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{exact_sum, exact_sum_raw, int, pow, rat, serde_exact, Accumulator, Bounds, Level, Rational};
use crate::rs_seq::{BlockOrigin, RSSequence, RsBlock};
use crate::series::{certify_stream, exact_prefix_sums_at, partial_sums, Criteria, DivergenceVerdict, PartialSumTrace, Series};
use crate::sets::{diagonal_shift, IndexSet};
use crate::transforms::{osc_set, p_from_set};

/// Which way the subseries is pushed between consecutive milestones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum MilestoneMode {
    /// Block sums `> 1`.
    ToPlusInfinity,
    /// Block sums `< -1`.
    ToMinusInfinity,
    /// Block sums alternately `> c` and `< -c`.
    Oscillation {
        #[serde(with = "serde_exact")]
        c: Rational,
    },
}

/// How milestones are selected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MilestoneRule {
    /// Earliest index at which the block certificate holds.
    #[default]
    Greedy,
    /// Earliest index after which the block certificate holds for every
    /// later endpoint up to the horizon.
    Strengthened,
    /// Block sum must also beat `Σ_{n ≤ m_k} |a_n|` (greedy otherwise).
    Dominating,
}

/// Milestones `0 = m_0 < m_1 < m_2 < ...` with exact block certificates over
/// `A ∩ (m_{k-1}, m_k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Milestones {
    pub series: String,
    pub set: String,
    #[serde(flatten)]
    pub mode: MilestoneMode,
    pub rule: MilestoneRule,
    pub indices: Vec<u64>,
    #[serde(with = "serde_exact::vec")]
    pub block_sums: Vec<Rational>,
    /// For the dominating rule: `Σ_{n ≤ m_{k-1}} |a_n| + 1`, the level each
    /// block beat.
    #[serde(with = "serde_exact::vec")]
    pub block_levels: Vec<Rational>,
    pub requested: usize,
    pub horizon: u64,
}

impl Milestones {
    pub fn strengthened(&self) -> bool {
        self.rule == MilestoneRule::Strengthened
    }

    /// Requested milestones that were not found within the horizon.
    pub fn shortfall(&self) -> usize {
        self.requested - self.indices.len()
    }

    /// `(m_{k-1}, m_k]` for the `k`-th milestone (1-based).
    pub fn block(&self, k: usize) -> (u64, u64) {
        let lo = if k == 1 { 0 } else { self.indices[k - 2] };
        (lo, self.indices[k - 1])
    }

    /// Re-derives every block certificate from fresh term evaluations.
    pub fn verify(&self, a: &Series, set: &IndexSet) -> Result<bool> {
        for k in 1..=self.indices.len() {
            let (lo, hi) = self.block(k);
            let terms = set
                .members_upto(hi)
                .into_iter()
                .filter(|&n| n > lo)
                .map(|n| a.term(n))
                .collect::<Result<Vec<_>>>()?;
            let sum = exact_sum(&terms);
            if sum != self.block_sums[k - 1] || !self.block_ok(k, &sum, &self.block_levels[k - 1]) {
                return Ok(false);
            }
            if self.rule == MilestoneRule::Strengthened {
                let mut acc = Accumulator::new();
                for t in &terms {
                    acc.add(t);
                }
                for n in set.members_upto(self.horizon).into_iter().filter(|&n| n > hi) {
                    acc.add(&a.term(n)?);
                    if !self.block_ok_cmp(k, acc.cmp_to(&self.block_levels[k - 1])) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    fn block_ok(&self, k: usize, sum: &Rational, level: &Rational) -> bool {
        self.block_ok_cmp(k, sum.cmp(level))
    }

    fn block_ok_cmp(&self, k: usize, o: Ordering) -> bool {
        if self.wants_up(k) {
            o == Ordering::Greater
        } else {
            o == Ordering::Less
        }
    }

    fn wants_up(&self, k: usize) -> bool {
        match &self.mode {
            MilestoneMode::ToPlusInfinity => true,
            MilestoneMode::ToMinusInfinity => false,
            MilestoneMode::Oscillation { .. } => k % 2 == 1,
        }
    }
}

/// Greedy milestone search with the basic or strengthened rule.
pub fn find_milestones(
    a: &Series,
    set: &IndexSet,
    mode: MilestoneMode,
    count: usize,
    horizon: u64,
    strengthened: bool,
) -> Result<Milestones> {
    let rule = if strengthened { MilestoneRule::Strengthened } else { MilestoneRule::Greedy };
    find_milestones_with(a, set, mode, count, horizon, rule)
}

/// Milestone search under an explicit [`MilestoneRule`].
pub fn find_milestones_with(
    a: &Series,
    set: &IndexSet,
    mode: MilestoneMode,
    count: usize,
    horizon: u64,
    rule: MilestoneRule,
) -> Result<Milestones> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if let MilestoneMode::Oscillation { c } = &mode {
        if *c <= Rational::ZERO {
            return Err(Error::InvalidArgument("oscillation amplitude must be positive".into()));
        }
        if rule != MilestoneRule::Greedy {
            return Err(Error::InvalidArgument("oscillation milestones use the greedy rule only".into()));
        }
    }
    if rule == MilestoneRule::Dominating && mode != MilestoneMode::ToPlusInfinity && mode != MilestoneMode::ToMinusInfinity {
        return Err(Error::InvalidArgument("the dominating rule needs a monotone mode".into()));
    }
    let mut ms = Milestones {
        series: a.name().to_string(),
        set: set.label().to_string(),
        mode,
        rule,
        indices: vec![],
        block_sums: vec![],
        block_levels: vec![],
        requested: count,
        horizon,
    };
    let members = set.members_upto(horizon);
    let terms = members.iter().map(|&n| a.term(n)).collect::<Result<Vec<_>>>()?;
    let mode = ms.mode.clone();
    let level_for = |k: usize, abs_prefix: &Rational| -> Rational {
        match (&mode, rule) {
            (MilestoneMode::ToPlusInfinity, MilestoneRule::Dominating) => abs_prefix + int(1),
            (MilestoneMode::ToMinusInfinity, MilestoneRule::Dominating) => -(abs_prefix + int(1)),
            (MilestoneMode::ToPlusInfinity, _) => int(1),
            (MilestoneMode::ToMinusInfinity, _) => int(-1),
            (MilestoneMode::Oscillation { c }, _) => {
                if k % 2 == 1 {
                    c.clone()
                } else {
                    -c.clone()
                }
            }
        }
    };
    // position in `members` where the current block starts
    let mut start = 0usize;
    let mut abs_prefix = Rational::ZERO;
    let mut abs_upto = 0u64;
    while ms.indices.len() < count {
        let k = ms.indices.len() + 1;
        let lo = ms.indices.last().copied().unwrap_or(0);
        if rule == MilestoneRule::Dominating {
            let abs_terms = (abs_upto + 1..=lo).map(|n| a.term(n).map(|t| t.abs())).collect::<Result<Vec<_>>>()?;
            abs_prefix += exact_sum(&abs_terms);
            abs_upto = lo;
        }
        let level = level_for(k, &abs_prefix);
        let fixed = Level::new(level.clone());
        let up = ms.wants_up(k);
        let passes = |o: Ordering| if up { o == Ordering::Greater } else { o == Ordering::Less };
        // block sum through position i, exact only when the enclosure is undecided
        let mut bounds = Bounds::new();
        let mut cmp_at = |i: usize| -> Ordering {
            bounds.add(&terms[i]);
            bounds.cmp_to(&fixed).unwrap_or_else(|| exact_sum_raw(&terms[start..=i]).cmp_to(&level))
        };
        let found = if rule == MilestoneRule::Strengthened {
            let mut last_fail: Option<usize> = None;
            for i in start..terms.len() {
                if !passes(cmp_at(i)) {
                    last_fail = Some(i);
                }
            }
            match last_fail {
                Some(i) if i + 1 < terms.len() => Some(i + 1),
                Some(_) => None,
                None if start < terms.len() => Some(start),
                None => None,
            }
        } else {
            (start..terms.len()).find(|&i| passes(cmp_at(i)))
        };
        let Some(end) = found else { break };
        let sum = exact_sum(&terms[start..=end]);
        ms.indices.push(members[end]);
        ms.block_sums.push(sum);
        ms.block_levels.push(level);
        start = end + 1;
    }
    Ok(ms)
}

/// `m_k^A = |[1, m_k] ∩ A|` for each milestone.
pub fn rank_milestones(ms: &Milestones, set: &IndexSet) -> Vec<u64> {
    ms.indices.iter().map(|&m| set.rank(m)).collect()
}

/// How many elements of `B_0` fall into a rank gap `(m_k^A, m_{k+1}^A]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    /// No element: the block's terms appear consecutively and in order.
    Clean,
    /// Exactly one element: consecutive and in order, with one extra term
    /// inserted at the given 1-based position.
    OneInsertion { position: u64 },
    /// Two or more elements; nothing is claimed.
    Crowded { hits: u64 },
}

/// Check of the block-image statements for one rank gap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankGapCheck {
    /// Gap number `k`: the gap `(m_k^A, m_{k+1}^A]` (with `m_0 = 0`).
    pub k: usize,
    pub gap: (u64, u64),
    pub kind: GapKind,
    /// `p(start + i)` for the relevant consecutive positions.
    pub images: Vec<u64>,
    /// `A ∩ (m_k, m_{k+1}]`, in order.
    pub expected: Vec<u64>,
    pub holds: bool,
}

/// For `B = diagonal_shift(B_0)` and `p = p_{A,B}`, checks that each rank
/// gap missing `B_0` is mapped onto `A ∩ (m_k, m_{k+1}]` consecutively and in
/// order, and that a gap hit once gets exactly one inserted term outside `A`.
pub fn check_rank_gaps(set: &IndexSet, b0: &IndexSet, ms: &Milestones) -> Result<Vec<RankGapCheck>> {
    let b = diagonal_shift(b0);
    let ranks: Vec<u64> = std::iter::once(0).chain(rank_milestones(ms, set)).collect();
    let top = *ranks.last().unwrap_or(&0);
    let horizon = top + b0.rank(top) + 2;
    let p = p_from_set(set, &b, horizon)?;
    let mut out = Vec::new();
    let bounds: Vec<u64> = std::iter::once(0).chain(ms.indices.iter().copied()).collect();
    for k in 0..ranks.len() - 1 {
        let (lo_r, hi_r) = (ranks[k], ranks[k + 1]);
        let expected: Vec<u64> =
            set.members_upto(bounds[k + 1]).into_iter().filter(|&n| n > bounds[k]).collect();
        let hits = b0.rank(hi_r) - b0.rank(lo_r);
        let (kind, images, holds) = match hits {
            0 => {
                let l = b0.rank(lo_r);
                let images = (1..=hi_r - lo_r).map(|j| p.apply(lo_r + l + j)).collect::<Result<Vec<_>>>()?;
                let holds = images == expected;
                (GapKind::Clean, images, holds)
            }
            1 => {
                let l = b0.rank(hi_r);
                let j = b0.nth(l)? - lo_r;
                let images = (1..=hi_r - lo_r + 1).map(|i| p.apply(lo_r + l - 1 + i)).collect::<Result<Vec<_>>>()?;
                let mut rest = images.clone();
                // b_l + l is the shifted B element; it sits at position j + 1
                let inserted = rest.remove(j as usize);
                let holds = rest == expected && !set.contains(inserted);
                (GapKind::OneInsertion { position: j + 1 }, images, holds)
            }
            h => (GapKind::Crowded { hits: h }, vec![], true),
        };
        out.push(RankGapCheck { k, gap: (lo_r, hi_r), kind, images, expected, holds });
    }
    Ok(out)
}

/// Greedy maximal blocks `J_1, J_2, ...` with `Σ_{J_k} |a_n| <= base^k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    #[serde(with = "serde_exact")]
    pub base: Rational,
    /// Inclusive intervals `[lo, hi]`.
    pub blocks: Vec<(u64, u64)>,
    #[serde(with = "serde_exact::vec")]
    pub abs_sums: Vec<Rational>,
    /// `|a_{max J_k + 1}|`, the term that would overflow the budget.
    #[serde(with = "serde_exact::vec")]
    pub next_terms: Vec<Rational>,
}

impl BlockPartition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn budget(&self, k: usize) -> Rational {
        pow(&self.base, k as u32)
    }

    /// Index `k` (1-based) of the block containing `n`.
    pub fn block_of(&self, n: u64) -> Option<usize> {
        let i = self.blocks.partition_point(|&(_, hi)| hi < n);
        (i < self.blocks.len() && self.blocks[i].0 <= n).then_some(i + 1)
    }

    /// Re-derives sums, budgets, maximality and contiguity from the series.
    pub fn verify(&self, a: &Series) -> Result<bool> {
        let mut expect_lo = 1;
        for (i, &(lo, hi)) in self.blocks.iter().enumerate() {
            if lo != expect_lo || hi < lo {
                return Ok(false);
            }
            let terms = (lo..=hi).map(|n| a.term(n).map(|t| t.abs())).collect::<Result<Vec<_>>>()?;
            let sum = exact_sum(&terms);
            let budget = self.budget(i + 1);
            let next = a.term(hi + 1)?.abs();
            if sum != self.abs_sums[i] || sum > budget || next != self.next_terms[i] || &sum + &next <= budget {
                return Ok(false);
            }
            expect_lo = hi + 1;
        }
        Ok(true)
    }

    /// `base^k / 2 - Σ_{n ∈ J_k, a_n >= 0} a_n` for each block.
    pub fn positive_residuals(&self, a: &Series) -> Result<Vec<Rational>> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| {
                let mut acc = Accumulator::new();
                for n in lo..=hi {
                    let t = a.term(n)?;
                    if t >= Rational::ZERO {
                        acc.add(&t);
                    }
                }
                Ok(self.budget(i + 1) / int(2) - acc.value())
            })
            .collect()
    }
}

/// Builds `block_count` greedy maximal blocks. Fails with a scan-exhaustion
/// error when more than `scan_bound` terms are needed.
pub fn blocks_base_pow(a: &Series, base: &Rational, block_count: usize, scan_bound: u64) -> Result<BlockPartition> {
    if *base <= int(1) {
        return Err(Error::InvalidArgument("base must exceed 1".into()));
    }
    let mut part = BlockPartition { base: base.clone(), blocks: vec![], abs_sums: vec![], next_terms: vec![] };
    let mut n = 1u64;
    let mut pending: Option<Rational> = None;
    for k in 1..=block_count {
        let budget = pow(base, k as u32);
        let level = Level::new(budget.clone());
        let lo = n;
        let mut bounds = Bounds::new();
        let abs_range = |hi: u64| (lo..=hi).map(|i| a.term(i).map(|t| t.abs())).collect::<Result<Vec<_>>>();
        loop {
            if n > scan_bound {
                return Err(Error::ScanExhausted { what: format!("closing block {k} (budget {budget})"), scanned: n - 1 });
            }
            let t = match pending.take() {
                Some(t) => t,
                None => a.term(n)?.abs(),
            };
            let mut trial = bounds;
            trial.add(&t);
            let fits = match trial.cmp_to(&level) {
                Some(o) => o != Ordering::Greater,
                None => exact_sum_raw(&abs_range(n)?).cmp_to(&budget) != Ordering::Greater,
            };
            if !fits {
                if n == lo {
                    return Err(Error::InvalidArgument(format!("term {n} alone exceeds the budget of block {k}")));
                }
                part.blocks.push((lo, n - 1));
                part.abs_sums.push(exact_sum(&abs_range(n - 1)?));
                part.next_terms.push(t.clone());
                pending = Some(t);
                break;
            }
            bounds = trial;
            n += 1;
        }
    }
    Ok(part)
}

/// Builds the (1,1)-sequence of a series with `|a_n| <= 1`: `I_k = J_{2k-1} ∪ J_{2k}`,
/// `B_k = (P ∩ J_{2k-1}) ∪ (N ∩ J_{2k})`, `x_n = |a_n| / 5^j` for `n ∈ J_j`.
pub fn one_one_sequence(a: &Series, block_pairs: usize, scan_bound: u64) -> Result<RSSequence> {
    one_one_sequence_with_base(a, &int(5), block_pairs, scan_bound)
}

/// [`one_one_sequence`] with a general base.
pub fn one_one_sequence_with_base(a: &Series, base: &Rational, block_pairs: usize, scan_bound: u64) -> Result<RSSequence> {
    let part = blocks_base_pow(a, base, 2 * block_pairs, scan_bound)?;
    let one = int(1);
    let mut blocks = Vec::with_capacity(block_pairs);
    for k in 1..=block_pairs {
        let (odd, even) = (part.blocks[2 * k - 2], part.blocks[2 * k - 1]);
        let (s_odd, s_even) = (pow(base, (2 * k - 1) as u32), pow(base, (2 * k) as u32));
        let mut b = Vec::new();
        let mut terms = Vec::with_capacity((even.1 - odd.0 + 1) as usize);
        for n in odd.0..=even.1 {
            let t = a.term(n)?;
            if t.clone().abs() > one {
                return Err(Error::TermBound { series: a.name().to_string(), index: n, bound: "1".into() });
            }
            let in_odd = n <= odd.1;
            let positive = t >= Rational::ZERO;
            if positive == in_odd {
                b.push(n);
            }
            let scale = if in_odd { &s_odd } else { &s_even };
            terms.push(t.abs() / scale);
        }
        blocks.push(RsBlock::interval(odd.0, even.1, b, terms)?);
    }
    let mut seq = RSSequence::new(blocks, int(1), int(1))?;
    seq.origin = Some(BlockOrigin { series: a.name().to_string(), partition: part });
    Ok(seq)
}

/// Finite-horizon evidence for the up/down lemma.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpDownReport {
    #[serde(with = "serde_exact")]
    pub bound: Rational,
    pub horizon: u64,
    /// First `m` with `Σ_{A ∩ [1,m]} a_n > bound`.
    pub set_exceeds_at: Option<u64>,
    /// `|S_H - S_{⌊H/2⌋}|` of the full series.
    #[serde(with = "serde_exact")]
    pub tail_slack: Rational,
    /// `-(bound - tail_slack)`.
    #[serde(with = "serde_exact")]
    pub complement_threshold: Rational,
    /// First `m` with `Σ_{[1,m] ∖ A} a_n < complement_threshold`.
    pub complement_below_at: Option<u64>,
    /// The complement trace is identically zero on the horizon.
    pub complement_static: bool,
}

/// Traces `A` and `ℕ ∖ A` side by side (exact, streaming).
pub fn up_down_check(a: &Series, set: &IndexSet, bound: &Rational, horizon: u64) -> Result<UpDownReport> {
    if *bound <= Rational::ZERO {
        return Err(Error::InvalidArgument("bound must be positive".into()));
    }
    if horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    let mask = set.bitmap_upto(horizon);
    let (mut full, mut mid) = (Accumulator::new(), None);
    let mut terms = Vec::with_capacity(horizon as usize);
    for n in 1..=horizon {
        let t = a.term(n)?;
        full.add(&t);
        if n == horizon / 2 {
            mid = Some(full.value());
        }
        terms.push(t);
    }
    let tail_slack = (full.value() - mid.unwrap_or(Rational::ZERO)).abs();
    let threshold = -(bound - &tail_slack);
    let (mut in_a, mut out_a) = (Accumulator::new(), Accumulator::new());
    let (mut exceeds, mut below, mut moved) = (None, None, false);
    for (i, t) in terms.iter().enumerate() {
        let n = i as u64 + 1;
        if mask[n as usize] {
            in_a.add(t);
            if exceeds.is_none() && in_a.cmp_to(bound) == Ordering::Greater {
                exceeds = Some(n);
            }
        } else {
            out_a.add(t);
            moved |= !out_a.is_zero();
            if below.is_none() && out_a.cmp_to(&threshold) == Ordering::Less {
                below = Some(n);
            }
        }
    }
    Ok(UpDownReport {
        bound: bound.clone(),
        horizon,
        set_exceeds_at: exceeds,
        tail_slack,
        complement_threshold: threshold,
        complement_below_at: below,
        complement_static: !moved,
    })
}

/// Classifies the trace over `D` with bound and amplitude `1/4`.
pub fn quarter_oscillation_check(a: &Series, d: &IndexSet, excursions: usize, horizon: u64) -> Result<DivergenceVerdict> {
    let quarter = rat(1, 4);
    Ok(certify_stream(a, Some(d), horizon, Criteria::new(quarter.clone(), quarter, excursions)?)?.verdict)
}

/// The index at which a target was reached.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetCertificate {
    #[serde(with = "serde_exact")]
    pub target: Rational,
    pub index: u64,
    #[serde(with = "serde_exact")]
    pub sum: Rational,
}

/// A finite set whose partial sums pass a list of targets in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OscillatorResult {
    pub members: Vec<u64>,
    pub certificates: Vec<TargetCertificate>,
    pub requested: usize,
    pub horizon: u64,
}

impl OscillatorResult {
    pub fn shortfall(&self) -> usize {
        self.requested - self.certificates.len()
    }

    pub fn set(&self) -> IndexSet {
        IndexSet::finite(self.members.iter().copied())
            .expect("members are positive")
            .with_label(format!("oscillator[{}]", self.members.len()))
    }

    /// The exact trace of `a` over the constructed set.
    pub fn trace(&self, a: &Series, horizon: u64) -> Result<PartialSumTrace> {
        partial_sums(a, horizon, Some(&self.set()))
    }

    /// `(n, S_n)` at each member, in floating point. Cheap at any horizon,
    /// unlike the exact [`OscillatorResult::trace`].
    pub fn float_trace(&self, a: &Series) -> Result<Vec<(u64, f64)>> {
        let mut b = Bounds::new();
        self.members
            .iter()
            .map(|&n| {
                b.add(&a.term(n)?);
                Ok((n, b.approx()))
            })
            .collect()
    }

    /// Re-checks every certificate with exact sums at the certificate indices.
    pub fn verify(&self, a: &Series) -> Result<bool> {
        let set = self.set();
        let indices: Vec<u64> = self.certificates.iter().map(|c| c.index).collect();
        let sums = exact_prefix_sums_at(a, Some(&set), &indices)?;
        let mut prev = Rational::ZERO;
        for (c, raw) in self.certificates.iter().zip(sums) {
            let s = raw.reduce();
            let ok = if prev < c.target { s > c.target } else { s < c.target };
            if s != c.sum || !ok {
                return Ok(false);
            }
            prev = s;
        }
        Ok(true)
    }
}

/// Greedy construction: take positive terms until the sum passes the next
/// target from below, negative terms until it passes the next target from
/// above, and so on. Targets are passed strictly.
///
/// Audits first that both the positive and the negative part reach
/// `max |target|` within the horizon.
pub fn generic_oscillator(a: &Series, targets: &[Rational], horizon: u64) -> Result<OscillatorResult> {
    let mut out = OscillatorResult { members: vec![], certificates: vec![], requested: targets.len(), horizon };
    if targets.is_empty() {
        return Ok(out);
    }
    let checkpoint = targets.iter().map(|t| t.clone().abs()).max().expect("non-empty");
    let check_level = Level::new(checkpoint.clone());
    let terms = a.terms(horizon)?;
    let (mut pos, mut neg) = (Bounds::new(), Bounds::new());
    for t in &terms {
        if *t > Rational::ZERO {
            pos.add(t);
        } else if *t < Rational::ZERO {
            neg.add(&-t.clone());
        }
    }
    let part_short = |b: &Bounds, positive: bool| match b.cmp_to(&check_level) {
        Some(o) => o == Ordering::Less,
        None => {
            let part: Vec<Rational> = terms
                .iter()
                .filter(|t| if positive { **t > Rational::ZERO } else { **t < Rational::ZERO })
                .map(|t| t.clone().abs())
                .collect();
            exact_sum_raw(&part).cmp_to(&checkpoint) == Ordering::Less
        }
    };
    if part_short(&pos, true) || part_short(&neg, false) {
        return Err(Error::Audit(format!(
            "`{}` does not look conditionally convergent on [1, {horizon}]: positive part ≈ {:.4}, negative part ≈ {:.4}, checkpoint {}",
            a.name(),
            pos.approx(),
            neg.approx(),
            crate::rational::fmt_rational(&checkpoint)
        )));
    }
    let exact_so_far = |members: &[u64]| exact_sum_raw(&members.iter().map(|&m| terms[m as usize - 1].clone()).collect::<Vec<_>>());
    let mut s = Bounds::new();
    let mut current = Rational::ZERO;
    let mut n = 0usize;
    for target in targets {
        let up = current < *target;
        let level = Level::new(target.clone());
        let want = if up { Ordering::Greater } else { Ordering::Less };
        let mut reached = None;
        while n < terms.len() {
            let t = &terms[n];
            n += 1;
            let useful = if up { *t > Rational::ZERO } else { *t < Rational::ZERO };
            if useful {
                s.add(t);
                out.members.push(n as u64);
                let passed = match s.cmp_to(&level) {
                    Some(o) => o == want,
                    None => exact_so_far(&out.members).cmp_to(target) == want,
                };
                if passed {
                    reached = Some(n as u64);
                    break;
                }
            }
        }
        match reached {
            Some(index) => {
                current = exact_so_far(&out.members).reduce();
                out.certificates.push(TargetCertificate { target: target.clone(), index, sum: current.clone() });
            }
            None => break,
        }
    }
    Ok(out)
}

/// The oscillation-set construction: dominating milestones `M` for a set
/// `A` with `Σ_A = +∞`, a set `B` whose gaps each hold two milestones, the
/// gaps `X` holding at least two milestones, a set `S` splitting `X`, and
/// the resulting `C_{A,B,S}`.
#[derive(Clone, Debug)]
pub struct OscillationSetup {
    pub milestones: Milestones,
    /// Elements of `B` up to the horizon (the set continues past it).
    pub b_prefix: Vec<u64>,
    pub x: Vec<u64>,
    pub s: Vec<u64>,
    pub c: IndexSet,
}

/// Builds an [`OscillationSetup`] from the milestones found below `horizon`.
pub fn oscillation_setup(a: &Series, set: &IndexSet, milestone_count: usize, horizon: u64, rule: MilestoneRule) -> Result<OscillationSetup> {
    let ms = find_milestones_with(a, set, MilestoneMode::ToPlusInfinity, milestone_count, horizon, rule)?;
    // b_j sits just below every other milestone, so each gap holds two
    let b_prefix: Vec<u64> = ms.indices.iter().step_by(2).map(|&m| m - 1).filter(|&b| b >= 1).collect();
    let last = b_prefix.last().copied().unwrap_or(0).max(horizon);
    let bp = b_prefix.clone();
    let b = IndexSet::enumerated("B", move |j| {
        let j = j as usize;
        Ok(if j <= bp.len() { bp[j - 1] } else { last + (j - bp.len()) as u64 })
    });
    let x: Vec<u64> = (1..=b_prefix.len() as u64)
        .filter(|&l| {
            let (lo, hi) = (b.nth(l).unwrap_or(u64::MAX), b.nth(l + 1).unwrap_or(u64::MAX));
            ms.indices.iter().filter(|&&m| lo < m && m <= hi).count() >= 2
        })
        .collect();
    let s: Vec<u64> = x.iter().step_by(2).copied().collect();
    let s_set = IndexSet::finite(s.iter().copied())?;
    let c = osc_set(set, &b, &s_set)?;
    Ok(OscillationSetup { milestones: ms, b_prefix, x, s, c })
}
