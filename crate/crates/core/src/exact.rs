//! Exact solvers on a segment: the area identity, optimal matching and the
//! removal sets that balance an unbalanced supply curve.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::types::{Instance1D, MatchResult, SupplyCurve};

/// Supply points left unmatched, plus the area of the curve without them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalSet {
    /// Strictly increasing indices into the instance's supply list.
    pub removed_supply_indices: Vec<usize>,
    pub post_removal_area: f64,
}

impl RemovalSet {
    fn from_indices(inst: &Instance1D, mut removed: Vec<usize>) -> Result<Self> {
        removed.sort_unstable();
        let post_removal_area = inst.without_supply(&removed)?.supply_curve().total_area();
        Ok(RemovalSet {
            removed_supply_indices: removed,
            post_removal_area,
        })
    }
}

/// Area under the absolute net supply curve of a balanced instance, which
/// equals its optimal total matching distance.
pub fn balanced_area(inst: &Instance1D) -> Result<f64> {
    ensure!(
        inst.is_balanced(),
        Precondition,
        "balanced area needs n = m (got m = {}, n = {})",
        inst.m(),
        inst.n()
    );
    Ok(inst.supply_curve().total_area())
}

/// Minimum-distance matching of every demand point to a distinct supply
/// point.
///
/// Optimal 1D matchings never cross, so demand `i` is matched to supply
/// `i + t` where `t` counts the supply points skipped so far. The DP runs over
/// `(i, t)` in `O(m (n - m + 1))`.
pub fn optimal_match_1d(inst: &Instance1D) -> MatchResult {
    let (d, s) = (inst.demand(), inst.supply());
    let (m, excess) = (d.len(), s.len() - d.len());
    if m == 0 {
        return MatchResult::empty();
    }
    let w = excess + 1;
    // cost[i][t]: best total for demand 0..i having skipped t supply points.
    let mut cost = vec![f64::INFINITY; (m + 1) * w];
    let mut matched = vec![false; (m + 1) * w];
    cost[0] = 0.0;
    for i in 0..=m {
        for t in 0..w {
            let here = cost[i * w + t];
            if t > 0 {
                let skip = cost[i * w + t - 1];
                if skip < here {
                    cost[i * w + t] = skip;
                    matched[i * w + t] = false;
                }
            }
            if i > 0 {
                let via = cost[(i - 1) * w + t] + (d[i - 1] - s[i - 1 + t]).abs();
                if via <= cost[i * w + t] {
                    cost[i * w + t] = via;
                    matched[i * w + t] = true;
                }
            }
        }
    }

    let mut best_t = 0;
    for t in 1..w {
        if cost[m * w + t] < cost[m * w + best_t] {
            best_t = t;
        }
    }
    let mut pairs = Vec::with_capacity(m);
    let (mut i, mut t) = (m, best_t);
    while i > 0 {
        if matched[i * w + t] {
            pairs.push((i - 1, i - 1 + t));
            i -= 1;
        } else {
            t -= 1;
        }
    }
    let total = pairs.iter().map(|&(a, b)| (d[a] - s[b]).abs()).sum();
    MatchResult::new(pairs, total)
}

/// Removal set of minimum post-removal area.
///
/// Removing the `r`-th supply point lowers the curve by one from that event
/// on, so with `r` removals made through event `i` the step after it
/// contributes `gap_i * |S_i - r|`. Among equal-area sets the lexicographically
/// smallest is returned.
pub fn optimal_removal(inst: &Instance1D) -> Result<RemovalSet> {
    ensure!(
        inst.n() > inst.m(),
        Precondition,
        "removal needs n > m (got m = {}, n = {})",
        inst.m(),
        inst.n()
    );
    let curve = inst.supply_curve();
    let excess = inst.n() - inst.m();
    let events = curve.len();
    let w = excess + 1;
    let gap = |i: usize| curve.gaps.get(i).copied().unwrap_or(0.0);
    let step_cost = |i: usize, r: usize| gap(i) * (curve.prefix[i] - r as i64).unsigned_abs() as f64;

    // best[i][r]: least area over events i.. with r removals made before i.
    let mut best = vec![f64::INFINITY; (events + 1) * w];
    best[events * w + excess] = 0.0;
    for i in (0..events).rev() {
        let supply = curve.events[i].is_supply();
        for r in 0..w {
            let keep = step_cost(i, r) + best[(i + 1) * w + r];
            let remove = if supply && r < excess {
                step_cost(i, r + 1) + best[(i + 1) * w + r + 1]
            } else {
                f64::INFINITY
            };
            best[i * w + r] = keep.min(remove);
        }
    }

    let mut removed = Vec::with_capacity(excess);
    let mut r = 0;
    for i in 0..events {
        if r < excess && curve.events[i].is_supply() {
            let keep = step_cost(i, r) + best[(i + 1) * w + r];
            let remove = step_cost(i, r + 1) + best[(i + 1) * w + r + 1];
            if remove <= keep + 1e-12 * keep.abs().max(1.0) {
                removed.push(curve.events[i].index);
                r += 1;
            }
        }
    }
    debug_assert_eq!(removed.len(), excess);
    RemovalSet::from_indices(inst, removed)
}

/// Event positions of the scan-selected removals, in order.
///
/// The `k`-th selection is the supply event where the curve reaches `k` and
/// never drops below `k` again.
fn scan_removals(curve: &SupplyCurve, excess: usize) -> Vec<usize> {
    let events = curve.len();
    let mut suffix_min = vec![i64::MAX; events];
    for i in (0..events.saturating_sub(1)).rev() {
        suffix_min[i] = suffix_min[i + 1].min(curve.prefix[i + 1]);
    }
    let mut picks = Vec::with_capacity(excess);
    for i in 0..events {
        if picks.len() == excess {
            break;
        }
        let k = picks.len() as i64 + 1;
        if curve.events[i].is_supply() && curve.prefix[i] == k && suffix_min[i] >= k {
            picks.push(i);
        }
    }
    picks
}

/// Removal set built by the left-to-right scan, optionally followed by one
/// swap per interior segment.
///
/// A swap applies to segment `k` (between the `k`-th and `k+1`-th selections,
/// `1 <= k < n - m`) when the point right after the `k`-th selection is a
/// supply point inside the segment. That point then replaces the `k+1`-th
/// selection.
pub fn feasible_removal(inst: &Instance1D, do_swaps: bool) -> Result<RemovalSet> {
    ensure!(
        inst.n() > inst.m(),
        Precondition,
        "removal needs n > m (got m = {}, n = {})",
        inst.m(),
        inst.n()
    );
    let curve = inst.supply_curve();
    let excess = inst.n() - inst.m();
    let picks = scan_removals(&curve, excess);
    debug_assert_eq!(picks.len(), excess);

    let mut chosen = picks.clone();
    if do_swaps {
        for k in 0..excess.saturating_sub(1) {
            let next = picks[k] + 1;
            if next < picks[k + 1] && curve.events[next].is_supply() {
                chosen[k + 1] = next;
            }
        }
    }
    let removed = chosen.iter().map(|&e| curve.events[e].index).collect();
    RemovalSet::from_indices(inst, removed)
}

/// Original curve value `S(x_v; I)` at each removed supply point, in order.
pub fn removal_levels(inst: &Instance1D, removal: &RemovalSet) -> Vec<i64> {
    let curve = inst.supply_curve();
    let mut level_of = vec![0i64; inst.n()];
    for (e, &s) in curve.events.iter().zip(&curve.prefix) {
        if e.is_supply() {
            level_of[e.index] = s;
        }
    }
    removal
        .removed_supply_indices
        .iter()
        .map(|&j| level_of[j])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inst(d: &[f64], s: &[f64]) -> Instance1D {
        Instance1D::new(d.to_vec(), s.to_vec(), 1.0).unwrap()
    }

    /// Best sorted pairing over every subset of `m` supply points.
    fn brute_force_total(inst: &Instance1D) -> f64 {
        let (d, s) = (inst.demand(), inst.supply());
        let (m, n) = (d.len(), s.len());
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let chosen = (0..n).filter(|j| mask >> j & 1 == 1);
            let total: f64 = d.iter().zip(chosen).map(|(a, j)| (a - s[j]).abs()).sum();
            best = best.min(total);
        }
        best
    }

    /// Minimum over all injective assignments, ignoring any 1D structure.
    fn permutation_total(inst: &Instance1D) -> f64 {
        fn go(d: &[f64], s: &[f64], used: &mut Vec<bool>, i: usize) -> f64 {
            if i == d.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..s.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min((d[i] - s[j]).abs() + go(d, s, used, i + 1));
                    used[j] = false;
                }
            }
            best
        }
        go(inst.demand(), inst.supply(), &mut vec![false; inst.n()], 0)
    }

    #[test]
    fn balanced_area_examples() {
        assert!((balanced_area(&inst(&[0.4], &[0.1])).unwrap() - 0.3).abs() < 1e-12);
        let two = inst(&[0.2, 0.8], &[0.5, 0.9]);
        assert!((balanced_area(&two).unwrap() - 0.4).abs() < 1e-12);
        assert!((optimal_match_1d(&two).total_distance - 0.4).abs() < 1e-12);
        assert!(balanced_area(&inst(&[0.4], &[0.1, 0.2])).is_err());
    }

    #[test]
    fn nearest_feasible_match() {
        let r = optimal_match_1d(&inst(&[0.5], &[0.2, 0.6]));
        assert_eq!(r.pairs, vec![(0, 1)]);
        assert!((r.total_distance - 0.1).abs() < 1e-12);
        assert_eq!(optimal_match_1d(&inst(&[], &[0.3])), MatchResult::empty());
    }

    #[test]
    fn match_equals_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..400 {
            let n = rng.random_range(1..=10);
            let m = rng.random_range(0..=n.min(6));
            let x = Instance1D::random(m, n, 1.0, &mut rng).unwrap();
            let got = optimal_match_1d(&x).total_distance;
            assert!((got - brute_force_total(&x)).abs() < 1e-9);
            if m <= 4 && n <= 7 {
                assert!((got - permutation_total(&x)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn match_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let n = rng.random_range(1..=40);
            let m = rng.random_range(0..=n);
            let x = Instance1D::random(m, n, 2.0, &mut rng).unwrap();
            let r = optimal_match_1d(&x);
            assert_eq!(r.pairs.len(), m);
            let sup: Vec<usize> = r.pairs.iter().map(|p| p.1).collect();
            assert!(sup.windows(2).all(|w| w[0] < w[1]), "crossing or repeated supply");
            let recomputed: f64 = r
                .pairs
                .iter()
                .map(|&(a, b)| (x.demand()[a] - x.supply()[b]).abs())
                .sum();
            assert!((recomputed - r.total_distance).abs() < 1e-12);
            if m > 0 {
                assert!((r.mean_distance - r.total_distance / m as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn area_identity_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let n = rng.random_range(1..=60);
            let x = Instance1D::random(n, n, 1.0, &mut rng).unwrap();
            let a = balanced_area(&x).unwrap();
            assert!((a - optimal_match_1d(&x).total_distance).abs() < 1e-9);
        }
    }

    #[test]
    fn removal_trivial_case() {
        let r = optimal_removal(&inst(&[], &[0.5])).unwrap();
        assert_eq!(r.removed_supply_indices, vec![0]);
        assert_eq!(r.post_removal_area, 0.0);
        assert!(optimal_removal(&inst(&[0.1], &[0.2])).is_err());
        assert!(feasible_removal(&inst(&[0.1], &[0.2]), true).is_err());
    }

    #[test]
    fn removal_equals_matching_and_prop_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10_000 {
            let n = rng.random_range(1..=12);
            let m = rng.random_range(0..n);
            let x = Instance1D::random(m, n, 1.0, &mut rng).unwrap();
            let r = optimal_removal(&x).unwrap();
            assert_eq!(r.removed_supply_indices.len(), n - m);
            assert!(r.removed_supply_indices.windows(2).all(|w| w[0] < w[1]));
            assert!((r.post_removal_area - optimal_match_1d(&x).total_distance).abs() < 1e-9);
            let levels = removal_levels(&x, &r);
            let expect: Vec<i64> = (1..=(n - m) as i64).collect();
            assert_eq!(levels, expect);
        }
    }

    #[test]
    fn removed_points_bound_balanced_segments() {
        // Between consecutive optimal removals the post-removal curve starts
        // and ends at zero.
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..500 {
            let n = rng.random_range(2..=30);
            let m = rng.random_range(0..n);
            let x = Instance1D::random(m, n, 1.0, &mut rng).unwrap();
            let r = optimal_removal(&x).unwrap();
            let curve = x.supply_curve();
            let mut removed_so_far = 0i64;
            let mut post = Vec::with_capacity(curve.len());
            for (e, &s) in curve.events.iter().zip(&curve.prefix) {
                if e.is_supply() && r.removed_supply_indices.contains(&e.index) {
                    removed_so_far += 1;
                    // Level just before the removal, on the post-removal curve.
                    let before = post.last().copied().unwrap_or(0);
                    assert_eq!(before, 0);
                }
                post.push(s - removed_so_far);
            }
            assert_eq!(*post.last().unwrap(), 0);
        }
    }

    #[test]
    fn scan_selects_level_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..2000 {
            let n = rng.random_range(1..=40);
            let m = rng.random_range(0..n);
            let x = Instance1D::random(m, n, 1.0, &mut rng).unwrap();
            let plain = feasible_removal(&x, false).unwrap();
            let expect: Vec<i64> = (1..=(n - m) as i64).collect();
            assert_eq!(removal_levels(&x, &plain), expect);
            let best = optimal_removal(&x).unwrap().post_removal_area;
            assert!(plain.post_removal_area >= best - 1e-9);
            let swapped = feasible_removal(&x, true).unwrap();
            assert_eq!(swapped.removed_supply_indices.len(), n - m);
            assert!(swapped.post_removal_area >= best - 1e-9);
        }
    }

    #[test]
    fn swaps_are_noop_with_one_excess_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let m = rng.random_range(0..20);
            let x = Instance1D::random(m, m + 1, 1.0, &mut rng).unwrap();
            assert_eq!(
                feasible_removal(&x, true).unwrap(),
                feasible_removal(&x, false).unwrap()
            );
        }
    }

    #[test]
    fn swaps_reduce_area_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let reps = 1000;
        let diffs: Vec<f64> = (0..reps)
            .map(|_| {
                let x = Instance1D::random(20, 25, 1.0, &mut rng).unwrap();
                feasible_removal(&x, true).unwrap().post_removal_area
                    - feasible_removal(&x, false).unwrap().post_removal_area
            })
            .collect();
        let mean = diffs.iter().sum::<f64>() / reps as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let sem = (var / reps as f64).sqrt();
        assert!(mean <= 2.0 * sem, "mean change {mean} with sem {sem}");
    }

    #[test]
    fn tie_break_prefers_earlier_removal() {
        // Two supply points at the same spot, nothing else: either removal
        // leaves zero area; the earlier index wins.
        let x = inst(&[], &[0.3, 0.3]);
        let r = optimal_removal(&x).unwrap();
        assert_eq!(r.removed_supply_indices, vec![0, 1]);
        let x = inst(&[0.5], &[0.5, 0.5]);
        assert_eq!(optimal_removal(&x).unwrap().removed_supply_indices, vec![0]);
    }
}
