//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serieslab::rational::{int, rat, Rational};
use serieslab::rs_seq::{BlockDomain, RSSequence, RsBlock};
use serieslab::series::Series;
use serieslab::sets::IndexSet;

/// A residue class set `{n : n mod m ∈ R}` with `∅ ≠ R ≠ ℤ/m`.
pub fn random_residue(rng: &mut ChaCha8Rng) -> IndexSet {
    let m = rng.gen_range(2..=12u64);
    let mut all: Vec<u64> = (1..=m).collect();
    all.shuffle(rng);
    let k = rng.gen_range(1..m) as usize;
    IndexSet::residue(m, &all[..k]).unwrap()
}

/// Infinite and co-infinite: a residue set, an arithmetic progression, or a
/// random prefix on `[1, prefix]` followed by a residue tail.
pub fn random_set(rng: &mut ChaCha8Rng, prefix: u64) -> IndexSet {
    match rng.gen_range(0..3) {
        0 => random_residue(rng),
        1 => IndexSet::arithmetic(rng.gen_range(1..=10), rng.gen_range(2..=7)).unwrap(),
        _ => {
            let mask: Arc<Vec<bool>> = Arc::new((0..=prefix).map(|_| rng.gen_bool(0.5)).collect());
            let tail = random_residue(rng);
            let label = format!("rand[{}]", rng.gen::<u32>());
            IndexSet::predicate(label, move |n| if n <= prefix { mask[n as usize] } else { tail.contains(n) })
        }
    }
}

/// A random finite-valued set given by a mask on `[1, prefix]` and a tail
/// predicate.
pub fn masked(label: String, mask: Vec<bool>, tail: impl Fn(u64) -> bool + Send + Sync + 'static) -> IndexSet {
    let prefix = mask.len() as u64 - 1;
    let mask = Arc::new(mask);
    IndexSet::predicate(label, move |n| if n <= prefix { mask[n as usize] } else { tail(n) })
}

/// Nonzero rational terms `±p/q` with `p ≤ 19`, `q ≤ 23`, reproducible from
/// the seed.
pub fn random_series(seed: u64) -> Series {
    Series::new(format!("rand{seed}"), move |n| {
        let h = splitmix(seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let p = (h % 19) as i64 + 1;
        let q = ((h >> 8) % 23) as i64 + 1;
        let s = if (h >> 16) & 1 == 0 { 1 } else { -1 };
        rat(s * p, q)
    })
}

pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Positive weights scaled to sum exactly to `target`.
fn weights_summing_to(rng: &mut ChaCha8Rng, count: usize, target: &Rational) -> Vec<Rational> {
    let raw: Vec<i64> = (0..count).map(|_| rng.gen_range(1..=20)).collect();
    let total: i64 = raw.iter().sum();
    raw.iter().map(|&w| rat(w, total) * target).collect()
}

/// An exact `(r,s)`-sequence: every block has `Σ_{B_k} = r` and
/// `Σ_{I_k ∖ B_k} = s`, with `r, s ∈ (0, 1]`.
pub fn random_exact_rs(rng: &mut ChaCha8Rng, blocks: usize) -> RSSequence {
    let r = rat(rng.gen_range(1..=8), 8);
    let s = rat(rng.gen_range(1..=8), 8);
    let mut next = 1u64;
    let mut out = Vec::new();
    for _ in 0..blocks {
        let len = rng.gen_range(2..=12usize);
        let use_set = rng.gen_bool(0.3);
        let members: Vec<u64> = if use_set {
            let mut v = Vec::new();
            let mut n = next;
            while v.len() < len {
                n += rng.gen_range(1..=3);
                v.push(n);
            }
            v
        } else {
            (next..next + len as u64).collect()
        };
        let nb = rng.gen_range(1..len);
        let mut idx: Vec<usize> = (0..len).collect();
        idx.shuffle(rng);
        let in_b: Vec<bool> = (0..len).map(|i| idx[..nb].contains(&i)).collect();
        let mut bw = weights_summing_to(rng, nb, &r).into_iter();
        let mut cw = weights_summing_to(rng, len - nb, &s).into_iter();
        let terms: Vec<Rational> = in_b.iter().map(|&b| if b { bw.next().unwrap() } else { cw.next().unwrap() }).collect();
        let b: Vec<u64> = members.iter().zip(&in_b).filter(|(_, &x)| x).map(|(&n, _)| n).collect();
        let domain = if use_set {
            BlockDomain::Set(members.clone())
        } else {
            BlockDomain::Interval { lo: members[0], hi: *members.last().unwrap() }
        };
        next = members.last().unwrap() + rng.gen_range(1..=4);
        out.push(RsBlock::new(domain, b, terms).unwrap());
    }
    RSSequence::new(out, r, s).unwrap()
}

/// A set `D` that equals `B_k` on some blocks and is random elsewhere.
pub fn random_d(rng: &mut ChaCha8Rng, seq: &RSSequence) -> IndexSet {
    let mut members = Vec::new();
    for blk in seq.blocks() {
        let exact = rng.gen_bool(0.4);
        for n in blk.domain().members() {
            let inside = blk.b().binary_search(&n).is_ok();
            let take = if exact { inside } else { rng.gen_bool(if inside { 0.8 } else { 0.15 }) };
            if take {
                members.push(n);
            }
        }
    }
    IndexSet::finite(members).unwrap()
}

pub fn one() -> Rational {
    int(1)
}
