//! Exact rationals plus the two accelerators used for long scans: an
//! lcm-denominator running sum and an `i128` fixed-point enclosure.

use std::cmp::Ordering;

use dashu_base::{Abs, DivRemEuclid, Signed};
use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = RBig;

/// `num/den` as a [`Rational`]. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::from_parts_signed(IBig::from(num), IBig::from(den))
}

/// The integer `n` as a [`Rational`].
pub fn int(n: i64) -> Rational {
    Rational::from(n)
}

/// `num/den` from big integers. Panics if `den == 0`.
pub fn frac(num: IBig, den: UBig) -> Rational {
    Rational::from_parts(num, den)
}

/// Lossy conversion for display and plotting.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().value()
}

/// `base^exp`.
pub fn pow(base: &Rational, exp: u32) -> Rational {
    base.pow(exp as usize)
}

/// `|r|`.
pub fn abs(r: &Rational) -> Rational {
    r.clone().abs()
}

/// Sign of a rational as `-1`, `0` or `1`.
pub fn signum(r: &Rational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_negative() {
        -1
    } else {
        1
    }
}

/// Parses `p/q`, an integer, or a terminating decimal such as `-0.125`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: `{s}`"));
    let parse_int = |t: &str| -> Result<IBig> {
        let t = t.trim();
        let t = t.strip_prefix('+').unwrap_or(t);
        if t.is_empty() || !t.trim_start_matches('-').bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        t.parse::<IBig>().map_err(|_| bad())
    };
    if let Some((p, q)) = s.split_once('/') {
        let (p, q) = (parse_int(p)?, parse_int(q)?);
        if q == IBig::ZERO {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(Rational::from_parts_signed(p, q));
    }
    if let Some((whole, fraction)) = s.split_once('.') {
        if fraction.is_empty() || !fraction.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.trim_start().starts_with('-');
        let digits = format!("{}{}", whole.trim().trim_start_matches(['-', '+']), fraction);
        let mag = parse_int(&digits)?;
        let den = UBig::from(10u8).pow(fraction.len());
        let r = Rational::from_parts(mag, den);
        return Ok(if negative { -r } else { r });
    }
    Ok(Rational::from(parse_int(s)?))
}

/// Formats a rational as `p/q` (or `p` when integral).
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_int() {
        r.numerator().to_string()
    } else {
        format!("{}/{}", r.numerator(), r.denominator())
    }
}

/// Serde adapter writing a rational as a `[num, den]` pair of decimal strings.
///
/// Strings keep arbitrarily large integers intact across JSON readers.
pub mod serde_exact {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    fn pair(r: &Rational) -> [String; 2] {
        [r.numerator().to_string(), r.denominator().to_string()]
    }

    fn unpair<E: serde::de::Error>([n, q]: [String; 2]) -> std::result::Result<Rational, E> {
        let n: IBig = n.parse().map_err(E::custom)?;
        let q: UBig = q.parse().map_err(E::custom)?;
        if q == UBig::ZERO {
            return Err(E::custom("zero denominator"));
        }
        Ok(Rational::from_parts(n, q))
    }

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        pair(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        unpair(<[String; 2]>::deserialize(d)?)
    }

    /// Same encoding for vectors.
    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
            v.iter().map(pair).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
            Vec::<[String; 2]>::deserialize(d)?.into_iter().map(unpair).collect()
        }
    }

    /// Same encoding for optional values.
    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
            v.as_ref().map(pair).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
            Option::<[String; 2]>::deserialize(d)?.map(unpair).transpose()
        }
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Running exact sum that skips the per-step gcd.
///
/// The denominator grows as an lcm of the term denominators instead of being
/// reduced after each addition, so long harmonic-type scans cost one
/// word-by-bignum operation per term.
#[derive(Clone, Debug)]
pub struct Accumulator {
    num: IBig,
    den: UBig,
}

impl Default for Accumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl Accumulator {
    pub fn new() -> Self {
        Accumulator { num: IBig::ZERO, den: UBig::ONE }
    }

    pub fn add(&mut self, t: &Rational) {
        if t.is_zero() {
            return;
        }
        let (p, q) = (t.numerator(), t.denominator());
        if let Ok(qs) = u64::try_from(q) {
            let r: u64 = &self.den % qs;
            if r != 0 {
                let m = qs / gcd_u64(r, qs);
                self.den *= m;
                self.num *= m;
            }
            self.num += p * IBig::from(&self.den / qs);
        } else {
            self.num = &self.num * IBig::from(q.clone()) + p * IBig::from(self.den.clone());
            self.den *= q;
            let v = Rational::from_parts(std::mem::take(&mut self.num), std::mem::take(&mut self.den));
            let (n, d) = v.into_parts();
            self.num = n;
            self.den = d;
        }
    }

    pub fn sub(&mut self, t: &Rational) {
        self.add(&-t.clone());
    }

    /// The sum in lowest terms.
    pub fn value(&self) -> Rational {
        Rational::from_parts(self.num.clone(), self.den.clone())
    }

    /// Exact comparison of the running sum with `level`.
    pub fn cmp_to(&self, level: &Rational) -> Ordering {
        cmp_frac(&self.num, &self.den, level)
    }

    pub fn is_zero(&self) -> bool {
        self.num == IBig::ZERO
    }
}

/// Compares `num/den` (den > 0, possibly unreduced) with `level`.
pub(crate) fn cmp_frac(num: &IBig, den: &UBig, level: &Rational) -> Ordering {
    let lhs = num * IBig::from(level.denominator().clone());
    let rhs = level.numerator() * IBig::from(den.clone());
    lhs.cmp(&rhs)
}

/// Unreduced exact value `num/den`, as produced by [`exact_sum_raw`].
#[derive(Clone, Debug)]
pub struct RawSum {
    pub num: IBig,
    pub den: UBig,
}

impl RawSum {
    pub fn cmp_to(&self, level: &Rational) -> Ordering {
        cmp_frac(&self.num, &self.den, level)
    }

    pub fn reduce(self) -> Rational {
        Rational::from_parts(self.num, self.den)
    }
}

/// Exact sum by pairwise (binary-splitting) combination, left unreduced.
pub fn exact_sum_raw<'a, I>(terms: I) -> RawSum
where
    I: IntoIterator<Item = &'a Rational>,
{
    let mut level: Vec<(IBig, UBig)> = terms
        .into_iter()
        .filter(|t| !t.is_zero())
        .map(|t| (t.numerator().clone(), t.denominator().clone()))
        .collect();
    if level.is_empty() {
        return RawSum { num: IBig::ZERO, den: UBig::ONE };
    }
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some((a, b)) = it.next() {
            match it.next() {
                Some((c, d)) if b == d => next.push((a + c, b)),
                Some((c, d)) => next.push((a * IBig::from(d.clone()) + c * IBig::from(b.clone()), b * d)),
                None => next.push((a, b)),
            }
        }
        level = next;
    }
    let (num, den) = level.pop().expect("non-empty");
    RawSum { num, den }
}

/// Exact sum of many terms, reduced once at the end.
pub fn exact_sum<'a, I>(terms: I) -> Rational
where
    I: IntoIterator<Item = &'a Rational>,
{
    exact_sum_raw(terms).reduce()
}

/// Number of fractional bits in [`Bounds`].
pub const FRAC_BITS: usize = 64;

fn scaled(r: &Rational, ceil: bool) -> Option<i128> {
    let shifted: IBig = r.numerator().clone() << FRAC_BITS;
    let (q, rem) = shifted.div_rem_euclid(IBig::from(r.denominator().clone()));
    let q = if ceil && rem != UBig::ZERO { q + IBig::ONE } else { q };
    i128::try_from(q).ok()
}

/// A comparison level pre-rounded for use with [`Bounds`].
#[derive(Clone, Debug)]
pub struct Level {
    pub value: Rational,
    lo: i128,
    hi: i128,
}

impl Level {
    pub fn new(value: Rational) -> Self {
        let lo = scaled(&value, false).unwrap_or(i128::MIN);
        let hi = scaled(&value, true).unwrap_or(i128::MAX);
        Level { value, lo, hi }
    }
}

/// Certified enclosure `[lo, hi] * 2^-64` of a running sum.
///
/// Each added term is rounded outward, so the true sum always lies inside.
/// Comparisons return `None` when the enclosure straddles the level; callers
/// then fall back to exact arithmetic.
#[derive(Clone, Copy, Debug, Default)]
pub struct Bounds {
    lo: i128,
    hi: i128,
    poisoned: bool,
}

impl Bounds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, t: &Rational) {
        if self.poisoned || t.is_zero() {
            return;
        }
        let (Some(l), Some(h)) = (scaled(t, false), scaled(t, true)) else {
            self.poisoned = true;
            return;
        };
        match (self.lo.checked_add(l), self.hi.checked_add(h)) {
            (Some(a), Some(b)) => {
                self.lo = a;
                self.hi = b;
            }
            _ => self.poisoned = true,
        }
    }

    /// Ordering of the enclosed sum against `level`, when decidable.
    pub fn cmp_to(&self, level: &Level) -> Option<Ordering> {
        if self.poisoned {
            None
        } else if self.lo > level.hi {
            Some(Ordering::Greater)
        } else if self.hi < level.lo {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// Midpoint approximation, for reporting only.
    pub fn approx(&self) -> f64 {
        (self.lo as f64 + self.hi as f64) * 0.5 / 2f64.powi(FRAC_BITS as i32)
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-7").unwrap(), int(-7));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("2/-4").unwrap(), rat(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.").is_err());
    }

    #[test]
    fn canonical_form() {
        let r = rat(6, -4);
        assert_eq!(r.numerator(), &IBig::from(-3));
        assert_eq!(r.denominator(), &UBig::from(2u8));
        assert_eq!(fmt_rational(&r), "-3/2");
        assert_eq!(fmt_rational(&int(5)), "5");
    }

    #[test]
    fn accumulator_matches_naive() {
        let mut acc = Accumulator::new();
        let mut naive = Rational::ZERO;
        for n in 1..300i64 {
            let t = rat(if n % 3 == 0 { -1 } else { 1 }, n * (n % 7 + 1));
            acc.add(&t);
            naive += &t;
            assert_eq!(acc.value(), naive);
            assert_eq!(acc.cmp_to(&naive), Ordering::Equal);
        }
    }

    #[test]
    fn accumulator_big_denominators() {
        let big = frac(IBig::ONE, UBig::from(u64::MAX) * UBig::from(3u8));
        let mut acc = Accumulator::new();
        acc.add(&big);
        acc.add(&rat(1, 3));
        acc.sub(&rat(1, 7));
        assert_eq!(acc.value(), big + rat(1, 3) - rat(1, 7));
    }

    #[test]
    fn exact_sum_matches_fold() {
        let terms: Vec<Rational> = (1..500).map(|n| rat(1 - 2 * (n % 2), n)).collect();
        let fold = terms.iter().fold(Rational::ZERO, |a, b| a + b);
        assert_eq!(exact_sum(&terms), fold);
        assert_eq!(exact_sum(&[]), Rational::ZERO);
    }

    #[test]
    fn bounds_enclose() {
        let mut b = Bounds::new();
        let mut exact = Rational::ZERO;
        for n in 1..2000i64 {
            let t = rat(1, n);
            b.add(&t);
            exact += t;
        }
        let below = Level::new(&exact - rat(1, 1_000_000));
        let above = Level::new(&exact + rat(1, 1_000_000));
        assert_eq!(b.cmp_to(&below), Some(Ordering::Greater));
        assert_eq!(b.cmp_to(&above), Some(Ordering::Less));
        assert_eq!(b.cmp_to(&Level::new(exact)), None);
    }

    #[test]
    fn serde_pair_roundtrip() {
        #[derive(serde::Serialize, serde::Deserialize, PartialEq, Debug)]
        struct W(#[serde(with = "serde_exact")] Rational);
        let w = W(rat(-22, 7));
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"["-22","7"]"#);
        assert_eq!(serde_json::from_str::<W>(&s).unwrap(), w);
    }
}
