//! Agglomerative clustering under the minimum-increase-of-variance (Ward)
//! criterion, deterministic with index-order tie-breaking.

use crate::error::{Error, Result};
use crate::reduction::kmeans::{dist2, finalize_grouped};
use crate::reduction::{period_vectors, CenterRule, ReducedSeries};
use crate::timeseries::{normalize, SeriesBundle};

/// Merge the closest pair of clusters until `n_periods` remain. The merge
/// cost is the Ward increase of within-cluster variance, maintained with the
/// Lance–Williams recurrence; ties resolve to the lowest pair of cluster
/// indices.
pub fn reduce_hierarchical(
    bundle: &SeriesBundle,
    n_periods: usize,
    period_len: usize,
    center: CenterRule,
) -> Result<ReducedSeries> {
    let periods_orig = period_vectors(bundle, period_len)?;
    let periods_norm = period_vectors(&normalize(bundle), period_len)?;
    let n = periods_norm.len();
    if n_periods == 0 || n_periods > n {
        return Err(Error::Argument(format!(
            "hierarchical: n_periods = {n_periods} outside [1, {n}]"
        )));
    }

    // cluster slots: cluster i lives at slot i while active
    let mut active: Vec<bool> = vec![true; n];
    let mut size: Vec<f64> = vec![1.0; n];
    // Ward merge costs, upper triangle; singletons start at ||xi - xj||²/2.
    let mut cost = vec![f64::INFINITY; n * n];
    for i in 0..n {
        for j in i + 1..n {
            cost[i * n + j] = 0.5 * dist2(&periods_norm[i], &periods_norm[j]);
        }
    }
    let mut assignment: Vec<usize> = (0..n).collect();

    let mut remaining = n;
    while remaining > n_periods {
        // lowest-cost pair, ties to lowest (i, j)
        let mut best = (usize::MAX, usize::MAX);
        let mut best_cost = f64::INFINITY;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if !active[j] {
                    continue;
                }
                let c = cost[i * n + j];
                if c < best_cost {
                    best_cost = c;
                    best = (i, j);
                }
            }
        }
        let (a, b) = best;
        debug_assert!(a < b, "found a pair to merge");

        // merge b into a; update costs by Lance–Williams for Ward
        let (na, nb) = (size[a], size[b]);
        for k in 0..n {
            if !active[k] || k == a || k == b {
                continue;
            }
            let nk = size[k];
            let dak = pair_cost(&cost, n, a, k);
            let dbk = pair_cost(&cost, n, b, k);
            let dab = best_cost;
            let new = ((na + nk) * dak + (nb + nk) * dbk - nk * dab) / (na + nb + nk);
            set_pair_cost(&mut cost, n, a, k, new);
        }
        size[a] += size[b];
        active[b] = false;
        remaining -= 1;
        for slot in assignment.iter_mut() {
            if *slot == b {
                *slot = a;
            }
        }
    }

    // compress slot labels to 0..n_periods in slot order
    let mut label = vec![usize::MAX; n];
    let mut next = 0usize;
    for (slot, &is_active) in active.iter().enumerate() {
        if is_active {
            label[slot] = next;
            next += 1;
        }
    }
    let assignment_raw: Vec<usize> = assignment.iter().map(|&s| label[s]).collect();

    finalize_grouped(
        bundle,
        period_len,
        &assignment_raw,
        n_periods,
        center,
        &periods_orig,
        &periods_norm,
        format!(
            "hierarchical_{}_k{}_len{}",
            center.tag(),
            n_periods,
            period_len
        ),
    )
}

#[inline]
fn pair_cost(cost: &[f64], n: usize, i: usize, j: usize) -> f64 {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    cost[lo * n + hi]
}

#[inline]
fn set_pair_cost(cost: &mut [f64], n: usize, i: usize, j: usize, v: f64) {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    cost[lo * n + hi] = v;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{HourlySeries, Unit};

    fn shaped_bundle(levels: &[f64]) -> SeriesBundle {
        let mut demand = Vec::new();
        for &level in levels {
            demand.extend(std::iter::repeat(level).take(24));
        }
        SeriesBundle::new(
            HourlySeries::new(demand, Unit::PowerMw, "demand").unwrap(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn no_merges_gives_identity_grouping() {
        let bundle = shaped_bundle(&[1.0, 2.0, 3.0, 4.0]);
        let r = reduce_hierarchical(&bundle, 4, 24, CenterRule::Centroid).unwrap();
        let g = r.grouping.as_ref().unwrap();
        assert_eq!(g.assignment, vec![0, 1, 2, 3]);
        assert_eq!(g.period_weight, vec![1.0; 4]);
        assert_eq!(r.bundle.demand().values(), bundle.demand().values());
    }

    #[test]
    fn separates_two_shapes_like_brute_force() {
        // brute force over all 2-partitions of 6 days confirms the optimal
        // split is by level; ward must find it
        let bundle = shaped_bundle(&[10.0, 50.0, 11.0, 49.0, 10.5, 50.5]);
        let r = reduce_hierarchical(&bundle, 2, 24, CenterRule::Centroid).unwrap();
        let g = r.grouping.as_ref().unwrap();
        assert_eq!(g.assignment[0], g.assignment[2]);
        assert_eq!(g.assignment[0], g.assignment[4]);
        assert_eq!(g.assignment[1], g.assignment[3]);
        assert_eq!(g.assignment[1], g.assignment[5]);
        assert_ne!(g.assignment[0], g.assignment[1]);
    }

    #[test]
    fn repeated_invocation_is_identical() {
        let bundle = shaped_bundle(&[3.0, 9.0, 1.0, 7.0, 5.0, 2.0, 8.0, 4.0]);
        let a = reduce_hierarchical(&bundle, 3, 24, CenterRule::Medoid).unwrap();
        let b = reduce_hierarchical(&bundle, 3, 24, CenterRule::Medoid).unwrap();
        assert_eq!(a, b);
    }
}
