//! Duration-curve matching selection: pick whole periods (and weights) so
//! the weighted duration curve of the reduced series reproduces the
//! linearized duration curve of the full series, per series.

use crate::error::{Error, Result};
use crate::reduction::kmeans::dist2;
use crate::reduction::{bundle_from_periods, period_vectors, PeriodGrouping, ReducedSeries};
use crate::timeseries::{bin_index, normalize, SeriesBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PonceletWeighting {
    /// Positive integer weights summing to the original period count;
    /// integrates as grouped periods.
    Weighted,
    /// All selected periods weigh the same (possibly fractional); integrates
    /// as a chronological sequence.
    Uniform,
}

impl PonceletWeighting {
    pub fn tag(&self) -> &'static str {
        match self {
            PonceletWeighting::Weighted => "weighted",
            PonceletWeighting::Uniform => "uniform",
        }
    }
}

/// Bin masses of each candidate period against the full-series bin edges,
/// one row of `bins` counts per series.
struct BinData {
    n_series: usize,
    bins: usize,
    /// full-series masses, [series][bin]
    full: Vec<f64>,
    /// per period: [series][bin] counts of the period's hours
    per_period: Vec<Vec<f64>>,
}

impl BinData {
    fn build(bundle: &SeriesBundle, period_len: usize, bins: usize) -> Result<BinData> {
        let normalized = normalize(bundle);
        let hours = bundle.hours();
        let n_periods = hours / period_len;
        let series: Vec<&[f64]> = normalized.all_series().map(|s| s.values()).collect();
        let n_series = series.len();

        let mut full = vec![0.0; n_series * bins];
        let mut edges = Vec::with_capacity(n_series);
        for (s, values) in series.iter().enumerate() {
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            edges.push((min, max));
            for &v in *values {
                full[s * bins + bin_index(v, min, max, bins)] += 1.0;
            }
        }
        let mut per_period = Vec::with_capacity(n_periods);
        for p in 0..n_periods {
            let mut masses = vec![0.0; n_series * bins];
            for (s, values) in series.iter().enumerate() {
                let (min, max) = edges[s];
                for &v in &values[p * period_len..(p + 1) * period_len] {
                    masses[s * bins + bin_index(v, min, max, bins)] += 1.0;
                }
            }
            per_period.push(masses);
        }
        Ok(BinData { n_series, bins, full, per_period })
    }

    /// Squared bin-mass error of a weighted selection.
    fn error(&self, selected: &[usize], weights: &[f64]) -> f64 {
        let dim = self.n_series * self.bins;
        let mut reduced = vec![0.0; dim];
        for (&p, &w) in selected.iter().zip(weights) {
            for (r, m) in reduced.iter_mut().zip(&self.per_period[p]) {
                *r += w * m;
            }
        }
        self.full
            .iter()
            .zip(&reduced)
            .map(|(f, r)| (f - r) * (f - r))
            .sum()
    }
}

/// Select `n_periods` periods (default length one day) and weights by greedy
/// forward selection followed by steepest-descent local search over pairwise
/// swaps and single-unit weight transfers.
pub fn reduce_poncelet(
    bundle: &SeriesBundle,
    n_periods: usize,
    period_len: usize,
    bins: usize,
    weighting: PonceletWeighting,
) -> Result<ReducedSeries> {
    let periods_orig = period_vectors(bundle, period_len)?;
    let n = periods_orig.len();
    if n_periods == 0 || n_periods > n {
        return Err(Error::Argument(format!(
            "poncelet: n_periods = {n_periods} outside [1, {n}]"
        )));
    }
    if bins == 0 {
        return Err(Error::Argument("poncelet: bins must be positive".into()));
    }
    let data = BinData::build(bundle, period_len, bins)?;
    let total = n as f64;

    // Greedy forward selection under provisionally equal weights.
    let mut selected: Vec<usize> = Vec::with_capacity(n_periods);
    for _ in 0..n_periods {
        let mut best: Option<(f64, usize)> = None;
        for cand in 0..n {
            if selected.contains(&cand) {
                continue;
            }
            let mut trial = selected.clone();
            trial.push(cand);
            let w = total / trial.len() as f64;
            let err = data.error(&trial, &vec![w; trial.len()]);
            if best.map_or(true, |(b, _)| err < b - 1e-12) {
                best = Some((err, cand));
            }
        }
        selected.push(best.expect("candidate exists").1);
    }
    selected.sort_unstable();

    // Weights: balanced integer split (weighted) or equal share (uniform).
    let mut weights: Vec<f64> = match weighting {
        PonceletWeighting::Uniform => vec![total / n_periods as f64; n_periods],
        PonceletWeighting::Weighted => {
            let base = n / n_periods;
            let extra = n % n_periods;
            (0..n_periods)
                .map(|i| (base + usize::from(i < extra)) as f64)
                .collect()
        }
    };

    // Steepest-descent local search until no move improves. Swaps are also
    // tried combined with one weight transfer touching the swapped slot, so
    // an exchange that only pays off after re-weighting is not missed.
    let mut err = data.error(&selected, &weights);
    let tiny = n_periods * (n - n_periods) * (n - n_periods) <= 5_000;
    loop {
        let mut best_move: Option<(f64, Move)> = None;
        let consider = |e: f64, mv: Move, best_move: &mut Option<(f64, Move)>| {
            if e < err - 1e-9 && best_move.as_ref().map_or(true, |(b, _)| e < b - 1e-12) {
                *best_move = Some((e, mv));
            }
        };

        for slot in 0..n_periods {
            for cand in 0..n {
                if selected.contains(&cand) {
                    continue;
                }
                let mut trial = selected.clone();
                trial[slot] = cand;
                let e = data.error(&trial, &weights);
                consider(e, Move::Swap { slot, cand, from: None }, &mut best_move);

                if weighting == PonceletWeighting::Weighted {
                    for other in 0..n_periods {
                        if other == slot {
                            continue;
                        }
                        // shift one unit toward the swapped slot ...
                        if weights[other] >= 2.0 {
                            let mut w = weights.clone();
                            w[other] -= 1.0;
                            w[slot] += 1.0;
                            let e = data.error(&trial, &w);
                            consider(
                                e,
                                Move::Swap { slot, cand, from: Some((other, slot)) },
                                &mut best_move,
                            );
                        }
                        // ... or away from it
                        if weights[slot] >= 2.0 {
                            let mut w = weights.clone();
                            w[slot] -= 1.0;
                            w[other] += 1.0;
                            let e = data.error(&trial, &w);
                            consider(
                                e,
                                Move::Swap { slot, cand, from: Some((slot, other)) },
                                &mut best_move,
                            );
                        }
                    }
                }
            }
        }
        if weighting == PonceletWeighting::Weighted {
            for from in 0..n_periods {
                if weights[from] < 2.0 {
                    continue;
                }
                for to in 0..n_periods {
                    if to == from {
                        continue;
                    }
                    let mut trial = weights.clone();
                    trial[from] -= 1.0;
                    trial[to] += 1.0;
                    let e = data.error(&selected, &trial);
                    consider(e, Move::Transfer { from, to }, &mut best_move);
                }
            }
        }
        // double swap on tiny instances, where it enumerates the remaining
        // neighborhood completely
        if tiny && n_periods >= 2 {
            for slot_a in 0..n_periods {
                for slot_b in slot_a + 1..n_periods {
                    for cand_a in 0..n {
                        if selected.contains(&cand_a) {
                            continue;
                        }
                        for cand_b in 0..n {
                            if cand_b == cand_a || selected.contains(&cand_b) {
                                continue;
                            }
                            let mut trial = selected.clone();
                            trial[slot_a] = cand_a;
                            trial[slot_b] = cand_b;
                            let e = data.error(&trial, &weights);
                            consider(
                                e,
                                Move::DoubleSwap { slot_a, cand_a, slot_b, cand_b },
                                &mut best_move,
                            );
                        }
                    }
                }
            }
        }

        match best_move {
            None => break,
            Some((e, mv)) => {
                match mv {
                    Move::Swap { slot, cand, from } => {
                        selected[slot] = cand;
                        if let Some((f, t)) = from {
                            weights[f] -= 1.0;
                            weights[t] += 1.0;
                        }
                    }
                    Move::Transfer { from, to } => {
                        weights[from] -= 1.0;
                        weights[to] += 1.0;
                    }
                    Move::DoubleSwap { slot_a, cand_a, slot_b, cand_b } => {
                        selected[slot_a] = cand_a;
                        selected[slot_b] = cand_b;
                    }
                }
                err = e;
            }
        }
    }

    // keep chronological order of the selected periods
    let mut order: Vec<usize> = (0..n_periods).collect();
    order.sort_by_key(|&i| selected[i]);
    let selected: Vec<usize> = order.iter().map(|&i| selected[i]).collect();
    let weights: Vec<f64> = order.iter().map(|&i| weights[i]).collect();

    let reps: Vec<Vec<f64>> = selected.iter().map(|&p| periods_orig[p].clone()).collect();
    let reduced_bundle = bundle_from_periods(bundle, &reps, period_len)?;
    let m = n_periods * period_len;
    let tag = format!(
        "poncelet_{}_k{}_b{}_len{}",
        weighting.tag(),
        n_periods,
        bins,
        period_len
    );

    let reduced = match weighting {
        PonceletWeighting::Uniform => {
            let w = bundle.hours() as f64 / m as f64;
            ReducedSeries {
                bundle: reduced_bundle,
                m,
                weights: vec![w; m],
                grouping: None,
                source_hours: bundle.hours(),
                method_tag: tag,
            }
        }
        PonceletWeighting::Weighted => {
            // nearest selected period with remaining occurrence budget
            let periods_norm = period_vectors(&normalize(bundle), period_len)?;
            let mut used = vec![0.0; n_periods];
            let mut assignment = Vec::with_capacity(n);
            for d in 0..n {
                let mut best: Option<(f64, usize)> = None;
                for (r, &p) in selected.iter().enumerate() {
                    if used[r] >= weights[r] {
                        continue;
                    }
                    let dist = dist2(&periods_norm[d], &periods_norm[p]);
                    if best.map_or(true, |(b, _)| dist < b - 1e-15) {
                        best = Some((dist, r));
                    }
                }
                let (_, r) = best.expect("capacity left by weight conservation");
                used[r] += 1.0;
                assignment.push(r);
            }
            let mut step_weights = Vec::with_capacity(m);
            for &w in &weights {
                step_weights.extend(std::iter::repeat(w).take(period_len));
            }
            ReducedSeries {
                bundle: reduced_bundle,
                m,
                weights: step_weights,
                grouping: Some(PeriodGrouping {
                    period_len,
                    n_periods,
                    assignment,
                    period_weight: weights,
                }),
                source_hours: bundle.hours(),
                method_tag: tag,
            }
        }
    };
    reduced.validate()?;
    Ok(reduced)
}

enum Move {
    Swap {
        slot: usize,
        cand: usize,
        /// optional single-unit weight transfer applied with the swap
        from: Option<(usize, usize)>,
    },
    Transfer {
        from: usize,
        to: usize,
    },
    DoubleSwap {
        slot_a: usize,
        cand_a: usize,
        slot_b: usize,
        cand_b: usize,
    },
}

/// Exhaustive optimum over all selections and integer weightings; test
/// oracle for tiny instances.
#[doc(hidden)]
pub fn exhaustive_optimum(
    bundle: &SeriesBundle,
    n_periods: usize,
    period_len: usize,
    bins: usize,
    weighting: PonceletWeighting,
) -> Result<(Vec<usize>, Vec<f64>, f64)> {
    let data = BinData::build(bundle, period_len, bins)?;
    let n = bundle.hours() / period_len;
    let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;
    let mut selection = Vec::new();
    enumerate_selections(n, n_periods, 0, &mut selection, &mut |sel| {
        match weighting {
            PonceletWeighting::Uniform => {
                let w = n as f64 / n_periods as f64;
                let weights = vec![w; n_periods];
                let e = data.error(sel, &weights);
                if best.as_ref().map_or(true, |(_, _, b)| e < b - 1e-12) {
                    best = Some((sel.to_vec(), weights, e));
                }
            }
            PonceletWeighting::Weighted => {
                let mut weights = vec![1.0; n_periods];
                enumerate_weights(n - n_periods, 0, &mut weights, &mut |w| {
                    let e = data.error(sel, w);
                    if best.as_ref().map_or(true, |(_, _, b)| e < b - 1e-12) {
                        best = Some((sel.to_vec(), w.to_vec(), e));
                    }
                });
            }
        }
    });
    best.ok_or_else(|| Error::Internal("empty search space".into()))
}

fn enumerate_selections(
    n: usize,
    k: usize,
    start: usize,
    current: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if current.len() == k {
        visit(current);
        return;
    }
    let remaining = k - current.len();
    for p in start..=n.saturating_sub(remaining) {
        current.push(p);
        enumerate_selections(n, k, p + 1, current, visit);
        current.pop();
    }
}

fn enumerate_weights(
    spare: usize,
    slot: usize,
    weights: &mut Vec<f64>,
    visit: &mut impl FnMut(&[f64]),
) {
    if slot == weights.len() - 1 {
        weights[slot] += spare as f64;
        visit(weights);
        weights[slot] -= spare as f64;
        return;
    }
    for take in 0..=spare {
        weights[slot] += take as f64;
        enumerate_weights(spare - take, slot + 1, weights, visit);
        weights[slot] -= take as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{HourlySeries, Unit};

    /// Year of four days: day shape A three times, day shape B once.
    fn three_to_one_bundle() -> SeriesBundle {
        let day_a: Vec<f64> = (0..24).map(|h| 20.0 + (h as f64)).collect();
        let day_b: Vec<f64> = (0..24).map(|h| 80.0 - (h as f64)).collect();
        let mut demand = Vec::new();
        demand.extend_from_slice(&day_a);
        demand.extend_from_slice(&day_a);
        demand.extend_from_slice(&day_b);
        demand.extend_from_slice(&day_a);
        SeriesBundle::new(
            HourlySeries::new(demand, Unit::PowerMw, "demand").unwrap(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn full_selection_has_zero_error() {
        let bundle = three_to_one_bundle();
        let r = reduce_poncelet(&bundle, 4, 24, 10, PonceletWeighting::Weighted).unwrap();
        let data = BinData::build(&bundle, 24, 10).unwrap();
        let g = r.grouping.as_ref().unwrap();
        let selected: Vec<usize> = vec![0, 1, 2, 3];
        assert_eq!(data.error(&selected, &g.period_weight), 0.0);
        assert_eq!(g.period_weight, vec![1.0; 4]);
    }

    #[test]
    fn weighted_mode_recovers_three_to_one_instance() {
        let bundle = three_to_one_bundle();
        let r = reduce_poncelet(&bundle, 2, 24, 10, PonceletWeighting::Weighted).unwrap();
        let g = r.grouping.as_ref().unwrap();
        // one A-day with weight 3, the B-day with weight 1, zero bin error
        assert_eq!(g.period_weight.iter().sum::<f64>(), 4.0);
        let weights_sorted = {
            let mut w = g.period_weight.clone();
            w.sort_by(f64::total_cmp);
            w
        };
        assert_eq!(weights_sorted, vec![1.0, 3.0]);
        let (_, _, best_err) =
            exhaustive_optimum(&bundle, 2, 24, 10, PonceletWeighting::Weighted).unwrap();
        assert!(best_err <= 1e-12);
    }

    /// Bin error of the algorithm's reduced series, recomputed from the
    /// period weights it reports.
    fn algo_error(bundle: &SeriesBundle, r: &ReducedSeries, data: &BinData) -> f64 {
        let periods = period_vectors(bundle, 24).unwrap();
        let reduced_periods = period_vectors(&r.bundle, 24).unwrap();
        let mut selected = Vec::new();
        for rep in &reduced_periods {
            let idx = periods
                .iter()
                .position(|p| p.iter().zip(rep).all(|(a, b)| (a - b).abs() < 1e-9))
                .expect("representatives are original periods");
            selected.push(idx);
        }
        let weights: Vec<f64> = match &r.grouping {
            Some(g) => g.period_weight.clone(),
            None => {
                let n = periods.len() as f64;
                vec![n / selected.len() as f64; selected.len()]
            }
        };
        data.error(&selected, &weights)
    }

    #[test]
    fn matches_exhaustive_search_on_tiny_instances() {
        for seed in [3u64, 8, 21] {
            let bundle = crate::timeseries::synth_bundle(seed, 6 * 24).unwrap();
            for weighting in [PonceletWeighting::Weighted, PonceletWeighting::Uniform] {
                for k in [1usize, 2] {
                    let r = reduce_poncelet(&bundle, k, 24, 5, weighting).unwrap();
                    let data = BinData::build(&bundle, 24, 5).unwrap();
                    let (sel, w, best) = exhaustive_optimum(&bundle, k, 24, 5, weighting).unwrap();
                    let algo_err = algo_error(&bundle, &r, &data);
                    assert!(
                        algo_err <= best + 1e-9,
                        "seed {seed} k {k} {:?}: algo {algo_err} vs oracle {best} (sel {sel:?} w {w:?})",
                        weighting
                    );
                }
            }
        }
    }

    #[test]
    fn weighted_never_loses_to_uniform_on_same_budget() {
        // period count divisible by the budget, so weighted can replicate
        // the uniform weighting exactly
        for seed in [4u64, 9] {
            let bundle = crate::timeseries::synth_bundle(seed, 8 * 24).unwrap();
            let data = BinData::build(&bundle, 24, 6).unwrap();
            let rw = reduce_poncelet(&bundle, 4, 24, 6, PonceletWeighting::Weighted).unwrap();
            let ru = reduce_poncelet(&bundle, 4, 24, 6, PonceletWeighting::Uniform).unwrap();
            let ew = algo_error(&bundle, &rw, &data);
            let eu = algo_error(&bundle, &ru, &data);
            assert!(ew <= eu + 1e-9, "seed {seed}: weighted {ew} vs uniform {eu}");
        }
    }

    #[test]
    fn argument_errors() {
        let bundle = three_to_one_bundle();
        assert!(reduce_poncelet(&bundle, 9, 24, 5, PonceletWeighting::Weighted).is_err());
        assert!(reduce_poncelet(&bundle, 1, 24, 0, PonceletWeighting::Weighted).is_err());
    }
}
