//! Independent bounds showing which pipeline targets fit inside the scan
//! horizons used by the acceptance suite.

use serieslab::error::Error;
use serieslab::rational::int;
use serieslab::series::Series;
use serieslab::witnesses::{blocks_base_pow, one_one_sequence};

/// Greedy count of alternating excursions available to any subseries of the
/// alternating harmonic on `[1, horizon]`. An up-move from below 0 to above 1
/// needs odd-index mass > 1 inside its own interval, a down-move needs even
/// mass > 1; the first down-move only needs mass > 0. Intervals close as soon
/// as the mass possibly exceeds the need, so the counts are upper bounds.
fn greedy_alternations(horizon: u64, up_first: bool) -> (u32, u32) {
    let (mut ups, mut downs) = (0u32, 0u32);
    let mut going_up = up_first;
    let mut need = if up_first { 1.0 } else { 0.0 };
    let mut mass = 0.0f64;
    for n in 1..=horizon {
        let odd = n % 2 == 1;
        if odd == going_up {
            mass += 1.0 / n as f64;
        }
        if mass > need - 1e-9 && (need > 0.0 || mass > 0.0) {
            if going_up {
                ups += 1;
            } else {
                downs += 1;
            }
            going_up = !going_up;
            need = 1.0;
            mass = 0.0;
        }
    }
    (ups, downs)
}

#[test]
fn five_crossings_each_way_do_not_fit_below_a_million() {
    let up_first = greedy_alternations(1_000_000, true);
    let down_first = greedy_alternations(1_000_000, false);
    assert!(up_first.0 < 5 && up_first.1 < 5, "{up_first:?}");
    assert!(down_first.0 < 5 && down_first.1 < 5, "{down_first:?}");
}

#[test]
fn greedy_chain_is_reachable_at_small_horizons() {
    // the first up-move closes at 3, the first down-move at the next even mass > 1
    assert_eq!(greedy_alternations(3, true), (1, 0));
    assert_eq!(greedy_alternations(2, false), (0, 1));
}

#[test]
fn second_base_five_block_of_the_alternating_harmonic_is_out_of_reach() {
    let a = Series::alternating_harmonic();
    let first = blocks_base_pow(&a, &int(5), 1, 1_000).unwrap();
    assert_eq!(first.blocks, vec![(1, 82)]);
    // Σ_{83 ≤ n ≤ N} 1/n > 25 needs N ≈ 82·e^25, far beyond any scan bound here
    let tail: f64 = (83..=1_000_000u64).map(|n| 1.0 / n as f64).sum();
    assert!(tail < 25.0);
    assert!(matches!(blocks_base_pow(&a, &int(5), 2, 1_000_000), Err(Error::ScanExhausted { .. })));
}

#[test]
fn six_witness_blocks_need_hundreds_of_millions_of_terms() {
    // 6 pairs are 12 blocks; with |a_n| ≤ 1 block k holds more than 5^k terms
    let min_terms: u64 = (1..=12).map(|k| 5u64.pow(k)).sum();
    assert!(min_terms > 300_000_000);
    let unit = Series::alternating_unit();
    assert!(matches!(one_one_sequence(&unit, 6, 10_000_000), Err(Error::ScanExhausted { .. })));
}
