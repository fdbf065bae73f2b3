//! Stride selection: every n-th hour, circular smoothing, then a per-series
//! monotone power transform matching the full series' minimum, maximum, and
//! mean.

use crate::error::{Error, Result};
use crate::reduction::ReducedSeries;
use crate::timeseries::{CfSeries, HourlySeries, SeriesBundle, Unit};

/// Three-step reduction: select hours `0, stride, 2·stride, …`, smooth with a
/// centered circular moving average of odd width `window`, and re-scale each
/// series with `y -> c·y^p + d` so minimum and maximum match the full series
/// exactly and the mean as closely as the power family allows.
pub fn reduce_gerbaulet(
    bundle: &SeriesBundle,
    stride: usize,
    window: usize,
) -> Result<ReducedSeries> {
    let hours = bundle.hours();
    if stride == 0 || stride > hours {
        return Err(Error::Argument(format!(
            "gerbaulet: stride {stride} outside [1, {hours}]"
        )));
    }
    if window == 0 || window % 2 == 0 {
        return Err(Error::Argument(format!(
            "gerbaulet: window {window} must be an odd positive integer"
        )));
    }

    let reduce_series = |series: &HourlySeries| -> Result<Vec<f64>> {
        let selected: Vec<f64> = series.values().iter().copied().step_by(stride).collect();
        let smoothed = circular_moving_average(&selected, window);
        Ok(fit_power_transform(
            &smoothed,
            series.min(),
            series.max(),
            series.mean(),
        ))
    };

    let demand_values = reduce_series(bundle.demand())?
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    let demand = HourlySeries::new(demand_values, Unit::PowerMw, bundle.demand().label())?;
    let m = demand.len();
    let cfs = bundle
        .capacity_factors()
        .iter()
        .map(|cf| {
            let values = reduce_series(&cf.series)?
                .into_iter()
                .map(|v| v.clamp(0.0, 1.0))
                .collect();
            Ok(CfSeries {
                region: cf.region.clone(),
                tech: cf.tech.clone(),
                series: HourlySeries::new(values, Unit::Fraction, cf.series.label())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let reduced = ReducedSeries {
        bundle: SeriesBundle::new(demand, cfs)?,
        m,
        weights: vec![hours as f64 / m as f64; m],
        grouping: None,
        source_hours: hours,
        method_tag: format!("gerbaulet_s{stride}_w{window}"),
    };
    reduced.validate()?;
    Ok(reduced)
}

fn circular_moving_average(values: &[f64], window: usize) -> Vec<f64> {
    if window == 1 {
        return values.to_vec();
    }
    let n = values.len();
    let half = (window / 2).min(n / 2) as isize;
    let width = (2 * half + 1) as f64;
    (0..n as isize)
        .map(|i| {
            let mut sum = 0.0;
            for k in -half..=half {
                sum += values[(i + k).rem_euclid(n as isize) as usize];
            }
            sum / width
        })
        .collect()
}

/// Fit `y -> c·y^p + d`: `c` and `d` follow in closed form from matching the
/// full minimum and maximum for a given exponent, the exponent is chosen on
/// a grid over [0.25, 4] (then refined) to match the full mean. `p = 1` is
/// evaluated exactly so an identity selection stays bitwise identical.
fn fit_power_transform(values: &[f64], full_min: f64, full_max: f64, full_mean: f64) -> Vec<f64> {
    let rmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    let rmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if rmax - rmin < 1e-12 {
        // degenerate: a constant sequence carries no shape to rescale
        return vec![full_mean; values.len()];
    }

    // values could be slightly negative only through smoothing of
    // non-negative data, which cannot happen; powers are safe on y >= 0
    let apply = |p: f64, out: &mut Vec<f64>| {
        let (pmin, pmax) = (powp(rmin, p), powp(rmax, p));
        let c = (full_max - full_min) / (pmax - pmin);
        let d = full_min - c * pmin;
        out.clear();
        out.extend(values.iter().map(|&y| c * powp(y, p) + d));
    };
    let mean_err = |p: f64, buf: &mut Vec<f64>| -> f64 {
        apply(p, buf);
        let mean = buf.iter().sum::<f64>() / buf.len() as f64;
        (mean - full_mean).abs()
    };

    let mut buf = Vec::with_capacity(values.len());
    let mut best_p = 1.0;
    let mut best_err = mean_err(1.0, &mut buf);
    let mut p = 0.25;
    while p <= 4.0 + 1e-12 {
        let err = mean_err(p, &mut buf);
        if err < best_err - 1e-15 {
            best_err = err;
            best_p = p;
        }
        p += 0.01;
    }
    // golden-section refinement around the best grid point
    let (mut lo, mut hi) = ((best_p - 0.01).max(0.25), (best_p + 0.01).min(4.0));
    for _ in 0..40 {
        let m1 = lo + 0.381_966 * (hi - lo);
        let m2 = hi - 0.381_966 * (hi - lo);
        if mean_err(m1, &mut buf) < mean_err(m2, &mut buf) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let refined = 0.5 * (lo + hi);
    if mean_err(refined, &mut buf) < best_err {
        best_p = refined;
    }

    apply(best_p, &mut buf);
    buf
}

#[inline]
fn powp(y: f64, p: f64) -> f64 {
    if p == 1.0 {
        y
    } else {
        y.powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::synth_bundle;

    #[test]
    fn stride_one_window_one_is_identity() {
        let bundle = synth_bundle(5, 96).unwrap();
        let r = reduce_gerbaulet(&bundle, 1, 1).unwrap();
        assert_eq!(r.m, 96);
        for (orig, red) in bundle.all_series().zip(r.bundle.all_series()) {
            assert_eq!(orig.values(), red.values(), "{}", orig.label());
        }
    }

    #[test]
    fn extrema_match_exactly_for_any_stride() {
        // strides co-prime with the day length cycle through all hours of
        // day, the shape the method was designed for
        let bundle = synth_bundle(9, 8760).unwrap();
        for (stride, window) in [(25, 3), (49, 5), (23, 1)] {
            let r = reduce_gerbaulet(&bundle, stride, window).unwrap();
            for (orig, red) in bundle.all_series().zip(r.bundle.all_series()) {
                let scale = orig.max().abs().max(1.0);
                assert!(
                    (orig.min() - red.min()).abs() <= 1e-6 * scale,
                    "{} min: {} vs {}",
                    orig.label(),
                    orig.min(),
                    red.min()
                );
                assert!(
                    (orig.max() - red.max()).abs() <= 1e-6 * scale,
                    "{} max: {} vs {}",
                    orig.label(),
                    orig.max(),
                    red.max()
                );
            }
        }
    }

    #[test]
    fn mean_matches_within_half_percent_on_synthetic_year() {
        let bundle = synth_bundle(2, 8760).unwrap();
        let r = reduce_gerbaulet(&bundle, 24, 3).unwrap();
        for (orig, red) in bundle.all_series().zip(r.bundle.all_series()) {
            let rel = (orig.mean() - red.mean()).abs() / orig.mean().abs();
            assert!(
                rel < 5e-3,
                "{}: mean {} vs {} (rel {rel})",
                orig.label(),
                orig.mean(),
                red.mean()
            );
        }
    }

    #[test]
    fn argument_errors() {
        let bundle = synth_bundle(1, 48).unwrap();
        assert!(reduce_gerbaulet(&bundle, 0, 1).is_err());
        assert!(reduce_gerbaulet(&bundle, 49, 1).is_err());
        assert!(reduce_gerbaulet(&bundle, 2, 2).is_err());
    }
}
