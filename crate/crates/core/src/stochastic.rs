//! Randomized experiments: random-sign series, the K-space family with its
//! sign-flip symmetry, and Monte Carlo divergence frequencies.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded with
//! `seed_from_u64`. Trial `i` of an experiment with base seed `s` uses seed
//! `s + i` (wrapping), so serial and parallel runs agree.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::seq::index;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{fmt_rational, rat, serde_exact, to_f64, Accumulator, Rational};
use crate::series::{PartialSumTrace, Series};
use crate::sets::IndexSet;

/// A seeded sign pattern `s: ℕ → {0,1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignSequence {
    Random { seed: u64 },
    Constant { bit: bool },
}

impl SignSequence {
    pub fn seeded(seed: u64) -> Self {
        SignSequence::Random { seed }
    }

    pub fn constant(bit: bool) -> Self {
        SignSequence::Constant { bit }
    }

    /// `s(n)` by random access into the generator stream.
    pub fn bit(&self, n: u64) -> Result<bool> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        Ok(match self {
            SignSequence::Constant { bit } => *bit,
            SignSequence::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_word_pos(((n - 1) / 32) as u128);
                (rng.next_u32() >> ((n - 1) % 32)) & 1 == 1
            }
        })
    }

    /// `s(1), ..., s(h)`, streamed.
    pub fn bits(&self, h: u64) -> Vec<bool> {
        match self {
            SignSequence::Constant { bit } => vec![*bit; h as usize],
            SignSequence::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut out = Vec::with_capacity(h as usize);
                while (out.len() as u64) < h {
                    let w = rng.next_u32();
                    for j in 0..32 {
                        if out.len() as u64 == h {
                            break;
                        }
                        out.push((w >> j) & 1 == 1);
                    }
                }
                out
            }
        }
    }
}

/// `I_k`: the interval of length `2k` right after `I_{k-1}`, with `I_1 = [1, 2]`.
/// Returned as inclusive bounds `(k(k-1) + 1, k(k+1))`.
pub fn k_interval(k: u64) -> Result<(u64, u64)> {
    if k == 0 {
        return Err(Error::ZeroIndex);
    }
    Ok((k * (k - 1) + 1, k * (k + 1)))
}

/// The `k` with `n ∈ I_k`.
pub fn k_block_of(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::ZeroIndex);
    }
    let mut k = (((n as f64).sqrt()) as u64).max(1);
    while k * (k + 1) < n {
        k += 1;
    }
    while k > 1 && (k - 1) * k >= n {
        k -= 1;
    }
    Ok(k)
}

/// `C(2k, k)`, the number of possible choices on `I_k`.
pub fn choices_on_block(k: u64) -> u128 {
    (1..=k as u128).fold(1u128, |acc, i| acc * (k as u128 + i) / i)
}

/// A point of K: for each `k <= depth`, a `k`-element subset of `I_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KPoint {
    choices: Vec<Vec<u64>>,
    seed: Option<u64>,
}

impl KPoint {
    /// Uniform sample: each `choice(k)` is uniform over the `k`-subsets of `I_k`.
    pub fn sample(seed: u64, depth: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let choices = (1..=depth)
            .map(|k| {
                let (lo, _) = k_interval(k).expect("k >= 1");
                let mut c: Vec<u64> = index::sample(&mut rng, 2 * k as usize, k as usize)
                    .into_iter()
                    .map(|i| lo + i as u64)
                    .collect();
                c.sort_unstable();
                c
            })
            .collect();
        KPoint { choices, seed: Some(seed) }
    }

    /// Explicit choices; `choices[k-1]` must be a `k`-subset of `I_k`.
    pub fn from_choices(choices: Vec<Vec<u64>>) -> Result<Self> {
        let mut out = Vec::with_capacity(choices.len());
        for (i, mut c) in choices.into_iter().enumerate() {
            let k = i as u64 + 1;
            let (lo, hi) = k_interval(k)?;
            c.sort_unstable();
            c.dedup();
            if c.len() as u64 != k || c.iter().any(|&n| n < lo || n > hi) {
                return Err(Error::InvalidArgument(format!("choice {k} must be a {k}-element subset of [{lo}, {hi}]")));
            }
            out.push(c);
        }
        Ok(KPoint { choices: out, seed: None })
    }

    pub fn depth(&self) -> u64 {
        self.choices.len() as u64
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Last index covered: `max I_depth`.
    pub fn horizon(&self) -> u64 {
        let d = self.depth();
        d * (d + 1)
    }

    pub fn choice(&self, k: u64) -> Result<&[u64]> {
        if k == 0 {
            return Err(Error::ZeroIndex);
        }
        self.choices.get(k as usize - 1).map(|c| c.as_slice()).ok_or(Error::HorizonExceeded {
            what: "K-point choice".into(),
            requested: k,
            limit: self.depth(),
        })
    }

    /// Whether `a^x_n` is positive.
    pub fn positive(&self, n: u64) -> Result<bool> {
        let k = k_block_of(n)?;
        Ok(self.choice(k)?.binary_search(&n).is_ok())
    }
}

/// Replaces every `choice(k)` by `I_k ∖ choice(k)`.
pub fn flip(x: &KPoint) -> KPoint {
    let choices = x
        .choices
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (lo, hi) = k_interval(i as u64 + 1).expect("k >= 1");
            (lo..=hi).filter(|n| c.binary_search(n).is_err()).collect()
        })
        .collect();
    KPoint { choices, seed: x.seed }
}

/// `a^x_n = 1/k²` if `n ∈ choice(k)`, `-1/k²` for other `n ∈ I_k`.
pub fn kspace_series(x: &KPoint) -> Series {
    let x = Arc::new(x.clone());
    let name = match x.seed {
        Some(s) => format!("kspace(seed={s})"),
        None => "kspace".to_string(),
    };
    Series::try_new(name, move |n| {
        let k = k_block_of(n)?;
        let sign = if x.positive(n).map_err(|_| Error::HorizonExceeded {
            what: "K-space term".into(),
            requested: n,
            limit: x.horizon(),
        })? {
            1
        } else {
            -1
        };
        Ok(rat(sign, (k * k) as i64))
    })
    .with_term_bound(rat(1, 1))
}

/// Frequencies from [`inf_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfReport {
    pub set: String,
    pub samples: u64,
    pub depth: u64,
    #[serde(with = "serde_exact")]
    pub threshold: Rational,
    pub seed: u64,
    /// Fraction of samples whose prefix sums over `A` exceed `+threshold`.
    pub exceed_fraction: f64,
    /// Fraction of flipped samples whose prefix sums drop below `-threshold`.
    pub flipped_below_fraction: f64,
    /// Sample-by-sample: `x` exceeds iff `flip(x)` drops below.
    pub pairing_holds: bool,
}

/// Samples K-points (sample `i` uses seed `seed + i`) and records whether the
/// exact prefix sums over `A` pass `±threshold` within `depth` blocks.
pub fn inf_experiment(set: &IndexSet, samples: u64, depth: u64, threshold: &Rational, seed: u64) -> Result<InfReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let horizon = depth * (depth + 1);
    let members = set.members_upto(horizon);
    let outcomes: Vec<(bool, bool)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x = KPoint::sample(seed.wrapping_add(i), depth);
            let fx = flip(&x);
            let passes = |p: &KPoint, up: bool| -> Result<bool> {
                let a = kspace_series(p);
                let mut acc = Accumulator::new();
                for &n in &members {
                    acc.add(&a.term(n)?);
                    let o = if up { acc.cmp_to(threshold) } else { acc.cmp_to(&-threshold.clone()) };
                    if o == if up { Ordering::Greater } else { Ordering::Less } {
                        return Ok(true);
                    }
                }
                Ok(false)
            };
            Ok((passes(&x, true)?, passes(&fx, false)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let up = outcomes.iter().filter(|o| o.0).count() as f64;
    let down = outcomes.iter().filter(|o| o.1).count() as f64;
    Ok(InfReport {
        set: set.label().to_string(),
        samples,
        depth,
        threshold: threshold.clone(),
        seed,
        exceed_fraction: up / samples as f64,
        flipped_below_fraction: down / samples as f64,
        pairing_holds: outcomes.iter().all(|o| o.0 == o.1),
    })
}

/// Exact trace of `Σ_{n ∈ A ∩ [1,m]} (-1)^{s(n)} c_n`.
pub fn rademacher_trace(c: &Series, s: &SignSequence, set: &IndexSet, horizon: u64) -> Result<PartialSumTrace> {
    if horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    let bits = s.bits(horizon);
    let mask = set.bitmap_upto(horizon);
    let mut acc = Accumulator::new();
    let mut sums = Vec::with_capacity(horizon as usize);
    for n in 1..=horizon {
        if mask[n as usize] {
            let t = c.term(n)?;
            if t < Rational::ZERO {
                return Err(Error::InvalidArgument(format!("coefficient {n} is negative: {}", fmt_rational(&t))));
            }
            if bits[n as usize - 1] {
                acc.sub(&t);
            } else {
                acc.add(&t);
            }
        }
        sums.push(acc.value());
    }
    let label = format!("{}±[{}]", c.name(), set.label());
    PartialSumTrace::from_sums(label, sums)
}

/// Monte Carlo estimate of escape frequencies for random-sign series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub trials: u64,
    pub horizon: u64,
    pub escape: f64,
    pub seed: u64,
    /// Fraction of trials with `|S_m| > escape` for some `m <= horizon`.
    pub fraction: f64,
    /// Standard error of `fraction`.
    pub stderr: f64,
    /// Fraction of trials with `|S_horizon| > escape`.
    pub endpoint_fraction: f64,
    pub endpoint_stderr: f64,
    /// `Σ_{n ∈ A, n <= horizon} c_n² / escape²`, bounding the endpoint fraction.
    pub chebyshev_bound: f64,
    /// Sample standard deviation of `S_horizon`.
    pub endpoint_std: f64,
}

impl FrequencyReport {
    /// Endpoint fraction is within three standard errors of the Chebyshev bound
    /// (or below it).
    pub fn respects_chebyshev(&self) -> bool {
        self.endpoint_fraction <= self.chebyshev_bound + 3.0 * self.endpoint_stderr.max(1.0 / self.trials as f64)
    }
}

fn coefficients(c: &Series, set: &IndexSet, horizon: u64) -> Result<Vec<f64>> {
    let mask = set.bitmap_upto(horizon);
    (1..=horizon)
        .map(|n| {
            if !mask[n as usize] {
                return Ok(0.0);
            }
            let t = c.term(n)?;
            if t < Rational::ZERO {
                return Err(Error::InvalidArgument(format!("coefficient {n} is negative")));
            }
            Ok(to_f64(&t))
        })
        .collect()
}

/// Random-sign paths in floating point; `paths[i]` uses seed `seed + i`.
fn run_paths<T: Send>(coeffs: &[f64], trials: u64, seed: u64, f: impl Fn(&[f64], &[bool]) -> T + Sync) -> Vec<T> {
    let h = coeffs.len() as u64;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let bits = SignSequence::seeded(seed.wrapping_add(i)).bits(h);
            f(coeffs, &bits)
        })
        .collect()
}

/// Escape frequency for `Σ_{n ∈ A} (-1)^{s(n)} c_n` with rational coefficients.
pub fn divergence_frequency(c: &Series, set: &IndexSet, trials: u64, horizon: u64, escape: &Rational, seed: u64) -> Result<FrequencyReport> {
    let coeffs = coefficients(c, set, horizon)?;
    divergence_frequency_f64(&coeffs, trials, escape_f64(escape)?, seed)
}

fn escape_f64(escape: &Rational) -> Result<f64> {
    if *escape <= Rational::ZERO {
        return Err(Error::InvalidArgument("escape must be positive".into()));
    }
    Ok(to_f64(escape))
}

/// [`divergence_frequency`] over explicit floating-point coefficients
/// `c_1, ..., c_H` (zero outside `A`).
pub fn divergence_frequency_f64(coeffs: &[f64], trials: u64, escape: f64, seed: u64) -> Result<FrequencyReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if escape <= 0.0 || !escape.is_finite() {
        return Err(Error::InvalidArgument("escape must be positive".into()));
    }
    if coeffs.is_empty() {
        return Err(Error::EmptyHorizon);
    }
    if coeffs.iter().any(|&c| c < 0.0 || !c.is_finite()) {
        return Err(Error::InvalidArgument("coefficients must be finite and non-negative".into()));
    }
    let paths = run_paths(coeffs, trials, seed, |c, bits| {
        let (mut s, mut escaped) = (0.0f64, false);
        for (ci, &b) in c.iter().zip(bits) {
            s += if b { -ci } else { *ci };
            escaped |= s.abs() > escape;
        }
        (escaped, s)
    });
    let n = trials as f64;
    let frac = |k: usize| k as f64 / n;
    let se = |p: f64| (p * (1.0 - p) / n).sqrt();
    let fraction = frac(paths.iter().filter(|p| p.0).count());
    let endpoint_fraction = frac(paths.iter().filter(|p| p.1.abs() > escape).count());
    let mean = paths.iter().map(|p| p.1).sum::<f64>() / n;
    let var = paths.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let sum_sq: f64 = coeffs.iter().map(|c| c * c).sum();
    Ok(FrequencyReport {
        trials,
        horizon: coeffs.len() as u64,
        escape,
        seed,
        fraction,
        stderr: se(fraction),
        endpoint_fraction,
        endpoint_stderr: se(endpoint_fraction),
        chebyshev_bound: sum_sq / (escape * escape),
        endpoint_std: var.sqrt(),
    })
}

/// Sample variance of `S_m` across seeds against the exact `Σ c_n²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub m: u64,
    pub trials: u64,
    pub seed: u64,
    pub sample_variance: f64,
    pub expected_variance: f64,
    /// Estimated standard error of the sample variance.
    pub stderr: f64,
}

impl VarianceReport {
    /// `|sample - expected| <= k · stderr`.
    pub fn within(&self, k: f64) -> bool {
        (self.sample_variance - self.expected_variance).abs() <= k * self.stderr
    }
}

/// Variance experiment at index `m`.
pub fn variance_experiment(c: &Series, set: &IndexSet, m: u64, trials: u64, seed: u64) -> Result<VarianceReport> {
    if m == 0 {
        return Err(Error::EmptyHorizon);
    }
    variance_experiment_f64(&coefficients(c, set, m)?, trials, seed)
}

/// [`variance_experiment`] over explicit coefficients `c_1, ..., c_m`.
pub fn variance_experiment_f64(coeffs: &[f64], trials: u64, seed: u64) -> Result<VarianceReport> {
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least 2 trials".into()));
    }
    if coeffs.is_empty() {
        return Err(Error::EmptyHorizon);
    }
    let ends = run_paths(coeffs, trials, seed, |c, bits| c.iter().zip(bits).map(|(ci, &b)| if b { -ci } else { *ci }).sum::<f64>());
    let n = trials as f64;
    let mean = ends.iter().sum::<f64>() / n;
    let m2 = ends.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = ends.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Ok(VarianceReport {
        m: coeffs.len() as u64,
        trials,
        seed,
        sample_variance: m2 * n / (n - 1.0),
        expected_variance: coeffs.iter().map(|c| c * c).sum(),
        stderr: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::series::partial_sums;

    #[test]
    fn k_intervals() {
        assert_eq!(k_interval(1).unwrap(), (1, 2));
        assert_eq!(k_interval(2).unwrap(), (3, 6));
        assert_eq!(k_interval(3).unwrap(), (7, 12));
        assert_eq!(k_interval(4).unwrap(), (13, 20));
        assert_eq!(choices_on_block(3), 20);
        for n in 1..500 {
            let k = k_block_of(n).unwrap();
            let (lo, hi) = k_interval(k).unwrap();
            assert!(lo <= n && n <= hi);
        }
    }

    #[test]
    fn sign_access_matches_stream() {
        let s = SignSequence::seeded(7);
        let bits = s.bits(100);
        for n in 1..=100 {
            assert_eq!(s.bit(n).unwrap(), bits[n as usize - 1]);
        }
        assert_eq!(SignSequence::seeded(7).bits(100), bits);
    }

    #[test]
    fn kpoint_shape_and_flip() {
        let x = KPoint::sample(3, 8);
        for k in 1..=8 {
            let (lo, hi) = k_interval(k).unwrap();
            let c = x.choice(k).unwrap();
            assert_eq!(c.len() as u64, k);
            assert!(c.iter().all(|&n| lo <= n && n <= hi));
        }
        let fx = flip(&x);
        assert_eq!(flip(&fx), x);
        let (a, b) = (kspace_series(&x), kspace_series(&fx));
        for n in 1..=x.horizon() {
            assert_eq!(a.term(n).unwrap(), -b.term(n).unwrap());
        }
        assert!(matches!(a.term(x.horizon() + 1), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn block_sums_cancel() {
        let x = KPoint::sample(11, 10);
        let t = partial_sums(&kspace_series(&x), x.horizon(), None).unwrap();
        for k in 1..=10u64 {
            let (lo, hi) = k_interval(k).unwrap();
            assert!(t.sum(hi).is_zero());
            for m in lo..=hi {
                assert!(crate::rational::abs(t.sum(m)) <= rat(1, k as i64));
            }
        }
    }

    #[test]
    fn inf_experiment_examples() {
        let r = inf_experiment(&IndexSet::empty(), 20, 6, &rat(1, 10), 1).unwrap();
        assert_eq!(r.exceed_fraction, 0.0);
        let r = inf_experiment(&IndexSet::naturals(), 20, 6, &int(1), 1).unwrap();
        assert_eq!(r.exceed_fraction, 0.0);
        let r = inf_experiment(&IndexSet::odds(), 40, 8, &rat(1, 4), 5).unwrap();
        assert!(r.pairing_holds);
        assert_eq!(r.exceed_fraction, r.flipped_below_fraction);
    }

    #[test]
    fn rademacher_constant_signs() {
        let c = Series::harmonic();
        let up = rademacher_trace(&c, &SignSequence::constant(false), &IndexSet::odds(), 30).unwrap();
        let down = rademacher_trace(&c, &SignSequence::constant(true), &IndexSet::odds(), 30).unwrap();
        let plain = partial_sums(&c, 30, Some(&IndexSet::odds())).unwrap();
        assert_eq!(up.sums(), plain.sums());
        for m in 1..=30 {
            assert_eq!(*down.sum(m), -plain.sum(m).clone());
        }
        assert!(rademacher_trace(&Series::alternating_harmonic(), &SignSequence::seeded(1), &IndexSet::naturals(), 5).is_err());
    }

    #[test]
    fn frequency_zero_coefficients() {
        let r = divergence_frequency(&Series::zero(), &IndexSet::naturals(), 50, 100, &int(1), 3).unwrap();
        assert_eq!(r.fraction, 0.0);
        let again = divergence_frequency(&Series::zero(), &IndexSet::naturals(), 50, 100, &int(1), 3).unwrap();
        assert_eq!(r, again);
    }
}
