//! Block re-sampling: adjacent hours joined by averaging.

use crate::error::{Error, Result};
use crate::reduction::ReducedSeries;
use crate::timeseries::{CfSeries, HourlySeries, SeriesBundle};

/// Replace each block of `block_hours` consecutive hours by its arithmetic
/// mean. The natural step size of the result is `block_hours`.
pub fn resample(bundle: &SeriesBundle, block_hours: usize) -> Result<ReducedSeries> {
    let hours = bundle.hours();
    if block_hours == 0 || hours % block_hours != 0 {
        return Err(Error::Argument(format!(
            "resample: block of {block_hours} hours does not divide {hours}"
        )));
    }
    let m = hours / block_hours;

    let block_mean = |series: &HourlySeries| -> Vec<f64> {
        series
            .values()
            .chunks_exact(block_hours)
            .map(|block| block.iter().sum::<f64>() / block_hours as f64)
            .collect()
    };

    let demand = HourlySeries::new(
        block_mean(bundle.demand()),
        bundle.demand().unit(),
        bundle.demand().label(),
    )?;
    let cfs = bundle
        .capacity_factors()
        .iter()
        .map(|cf| {
            Ok(CfSeries {
                region: cf.region.clone(),
                tech: cf.tech.clone(),
                series: HourlySeries::new(
                    block_mean(&cf.series),
                    cf.series.unit(),
                    cf.series.label(),
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let reduced = ReducedSeries {
        bundle: SeriesBundle::new(demand, cfs)?,
        m,
        weights: vec![block_hours as f64; m],
        grouping: None,
        source_hours: hours,
        method_tag: format!("resample_b{block_hours}"),
    };
    reduced.validate()?;
    Ok(reduced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{synth_bundle, Unit};

    #[test]
    fn block_one_is_identity() {
        let bundle = synth_bundle(3, 48).unwrap();
        let r = resample(&bundle, 1).unwrap();
        assert_eq!(r.m, 48);
        assert_eq!(r.bundle, bundle);
    }

    #[test]
    fn hand_case() {
        let bundle = SeriesBundle::new(
            HourlySeries::new(vec![1.0, 3.0, 5.0, 7.0], Unit::PowerMw, "demand").unwrap(),
            vec![],
        )
        .unwrap();
        let r = resample(&bundle, 2).unwrap();
        assert_eq!(r.bundle.demand().values(), &[2.0, 6.0]);
        assert_eq!(r.weights, vec![2.0, 2.0]);
        assert!(resample(&bundle, 3).is_err());
    }

    #[test]
    fn mean_is_preserved_for_any_block() {
        let bundle = synth_bundle(11, 96).unwrap();
        for block in [1, 2, 4, 8, 24] {
            let r = resample(&bundle, block).unwrap();
            for (orig, red) in bundle.all_series().zip(r.bundle.all_series()) {
                assert!(
                    (orig.mean() - red.mean()).abs() < 1e-12,
                    "block {block}: {} vs {}",
                    orig.mean(),
                    red.mean()
                );
            }
        }
    }
}
