//! Period clustering with Lloyd's iteration on normalized period vectors.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::reduction::{bundle_from_periods, period_vectors, CenterRule, PeriodGrouping, ReducedSeries};
use crate::timeseries::{normalize, SeriesBundle};

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn mean_of(members: &[usize], points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points[0].len();
    let mut mean = vec![0.0; dim];
    for &i in members {
        for (m, v) in mean.iter_mut().zip(&points[i]) {
            *m += v;
        }
    }
    let n = members.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Member minimizing the summed squared distance to all members; ties go to
/// the lowest original index.
pub(crate) fn medoid_of(members: &[usize], points: &[Vec<f64>]) -> usize {
    let mut best = members[0];
    let mut best_cost = f64::INFINITY;
    for &i in members {
        let cost: f64 = members.iter().map(|&j| dist2(&points[i], &points[j])).sum();
        if cost < best_cost - 1e-15 || (cost <= best_cost + 1e-15 && i < best) {
            best_cost = cost;
            best = i;
        }
    }
    best
}

/// Assemble the grouped reduced series: clusters relabelled by their lowest
/// member, representatives per center rule, weights from cluster sizes.
pub(crate) fn finalize_grouped(
    bundle: &SeriesBundle,
    period_len: usize,
    assignment_raw: &[usize],
    k: usize,
    center: CenterRule,
    periods_orig: &[Vec<f64>],
    periods_norm: &[Vec<f64>],
    tag: String,
) -> Result<ReducedSeries> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in assignment_raw.iter().enumerate() {
        members[c].push(i);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&c| members[c].first().copied().unwrap_or(usize::MAX));

    let mut reps: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut relabel = vec![0usize; k];
    let mut period_weight = Vec::with_capacity(k);
    for (new_idx, &c) in order.iter().enumerate() {
        relabel[c] = new_idx;
        debug_assert!(!members[c].is_empty(), "empty cluster survived");
        period_weight.push(members[c].len() as f64);
        let rep = match center {
            CenterRule::Centroid => mean_of(&members[c], periods_orig),
            CenterRule::Medoid => periods_orig[medoid_of(&members[c], periods_norm)].clone(),
        };
        reps.push(rep);
    }
    let assignment: Vec<usize> = assignment_raw.iter().map(|&c| relabel[c]).collect();

    let reduced_bundle = bundle_from_periods(bundle, &reps, period_len)?;
    let mut weights = Vec::with_capacity(k * period_len);
    for &w in &period_weight {
        weights.extend(std::iter::repeat(w).take(period_len));
    }
    let reduced = ReducedSeries {
        bundle: reduced_bundle,
        m: k * period_len,
        weights,
        grouping: Some(PeriodGrouping {
            period_len,
            n_periods: k,
            assignment,
            period_weight,
        }),
        source_hours: bundle.hours(),
        method_tag: tag,
    };
    reduced.validate()?;
    Ok(reduced)
}

/// k-means over whole periods. Seeding is k-means++ from the given seed,
/// iteration stops at the first non-improving step so the clustering
/// objective is non-increasing throughout; empty clusters are re-seeded from
/// the point farthest from its center.
pub fn reduce_kmeans(
    bundle: &SeriesBundle,
    n_periods: usize,
    period_len: usize,
    center: CenterRule,
    seed: u64,
) -> Result<ReducedSeries> {
    let periods_orig = period_vectors(bundle, period_len)?;
    let periods_norm = period_vectors(&normalize(bundle), period_len)?;
    let n = periods_norm.len();
    if n_periods == 0 || n_periods > n {
        return Err(Error::Argument(format!(
            "kmeans: n_periods = {n_periods} outside [1, {n}]"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_seeding(&periods_norm, n_periods, &mut rng);

    let mut assignment = vec![0usize; n];
    let mut last_objective = f64::INFINITY;
    for _round in 0..200 {
        // Assignment step; ties go to the lower center index.
        for (i, point) in periods_norm.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center_vec) in centers.iter().enumerate() {
                let d = dist2(point, center_vec);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assignment[i] = best;
        }

        // Re-seed empty clusters from the farthest point.
        let mut reseeds = 0;
        loop {
            let mut counts = vec![0usize; n_periods];
            for &c in &assignment {
                counts[c] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            reseeds += 1;
            if reseeds > n {
                break;
            }
            let far = (0..n)
                .max_by(|&a, &b| {
                    let da = dist2(&periods_norm[a], &centers[assignment[a]]);
                    let db = dist2(&periods_norm[b], &centers[assignment[b]]);
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .expect("nonempty data");
            centers[empty] = periods_norm[far].clone();
            assignment[far] = empty;
        }

        // Update step.
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_periods];
        for (i, &c) in assignment.iter().enumerate() {
            members[c].push(i);
        }
        for (c, mem) in members.iter().enumerate() {
            centers[c] = match center {
                CenterRule::Centroid => mean_of(mem, &periods_norm),
                CenterRule::Medoid => periods_norm[medoid_of(mem, &periods_norm)].clone(),
            };
        }

        let objective: f64 = periods_norm
            .iter()
            .zip(&assignment)
            .map(|(p, &c)| dist2(p, &centers[c]))
            .sum();
        if objective >= last_objective - 1e-12 {
            break;
        }
        last_objective = objective;
    }

    finalize_grouped(
        bundle,
        period_len,
        &assignment,
        n_periods,
        center,
        &periods_orig,
        &periods_norm,
        format!(
            "kmeans_{}_k{}_len{}_seed{}",
            center.tag(),
            n_periods,
            period_len,
            seed
        ),
    )
}

fn plus_plus_seeding(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // all remaining points coincide with a center; take the first
            // index not yet chosen
            (0..n)
                .find(|&i| d2[i] > 0.0 || !centers.iter().any(|c| c == &points[i]))
                .unwrap_or(0)
        } else {
            WeightedIndex::new(&d2).expect("positive weights").sample(rng)
        };
        centers.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, centers.last().expect("just pushed"));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{CfSeries, HourlySeries, Unit};

    /// Four days where two shapes alternate: low flat and high flat.
    fn two_shape_bundle() -> SeriesBundle {
        let mut demand = Vec::new();
        for day in 0..6 {
            let level = if day % 2 == 0 { 10.0 } else { 50.0 };
            demand.extend(std::iter::repeat(level).take(24));
        }
        SeriesBundle::new(
            HourlySeries::new(demand, Unit::PowerMw, "demand").unwrap(),
            vec![],
        )
        .unwrap()
    }

    fn identical_days_bundle() -> SeriesBundle {
        let day: Vec<f64> = (0..24).map(|h| 10.0 + h as f64).collect();
        let mut demand = Vec::new();
        for _ in 0..4 {
            demand.extend_from_slice(&day);
        }
        SeriesBundle::new(
            HourlySeries::new(demand, Unit::PowerMw, "demand").unwrap(),
            vec![CfSeries {
                region: "r1".into(),
                tech: "pv".into(),
                series: HourlySeries::new(vec![0.5; 96], Unit::Fraction, "cf").unwrap(),
            }],
        )
        .unwrap()
    }

    #[test]
    fn identical_days_collapse_to_one_representative() {
        let bundle = identical_days_bundle();
        let r = reduce_kmeans(&bundle, 1, 24, CenterRule::Centroid, 7).unwrap();
        assert_eq!(r.m, 24);
        let g = r.grouping.as_ref().unwrap();
        assert_eq!(g.period_weight, vec![4.0]);
        for (h, &v) in r.bundle.demand().values().iter().enumerate() {
            assert!((v - (10.0 + h as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn two_shapes_separate_exactly() {
        let bundle = two_shape_bundle();
        for seed in [1, 2, 3] {
            let r = reduce_kmeans(&bundle, 2, 24, CenterRule::Centroid, seed).unwrap();
            let g = r.grouping.as_ref().unwrap();
            // days 0,2,4 together and 1,3,5 together
            assert_eq!(g.assignment[0], g.assignment[2]);
            assert_eq!(g.assignment[0], g.assignment[4]);
            assert_eq!(g.assignment[1], g.assignment[3]);
            assert_ne!(g.assignment[0], g.assignment[1]);
        }
    }

    #[test]
    fn medoid_representatives_are_original_days() {
        let bundle = two_shape_bundle();
        let r = reduce_kmeans(&bundle, 2, 24, CenterRule::Medoid, 5).unwrap();
        for p in 0..2 {
            let rep = &r.bundle.demand().values()[p * 24..(p + 1) * 24];
            let matches_original = (0..6).any(|day| {
                let orig = &bundle.demand().values()[day * 24..(day + 1) * 24];
                rep == orig
            });
            assert!(matches_original);
        }
    }

    #[test]
    fn determinism_and_argument_errors() {
        let bundle = two_shape_bundle();
        let a = reduce_kmeans(&bundle, 3, 24, CenterRule::Centroid, 42).unwrap();
        let b = reduce_kmeans(&bundle, 3, 24, CenterRule::Centroid, 42).unwrap();
        assert_eq!(a, b);
        assert!(reduce_kmeans(&bundle, 7, 24, CenterRule::Centroid, 1).is_err());
        assert!(reduce_kmeans(&bundle, 0, 24, CenterRule::Centroid, 1).is_err());
    }
}
