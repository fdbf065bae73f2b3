//! Derivation of reduced time-series from a full hourly year.
//!
//! Five methods are implemented: k-means and hierarchical clustering of
//! whole periods (grouped integration), duration-curve matching selection
//! with optimized or uniform weights, stride selection with smoothing and
//! moment matching, and plain block re-sampling.

mod gerbaulet;
mod hierarchical;
mod kmeans;
mod poncelet;
mod resample;
mod serialize;

pub use gerbaulet::reduce_gerbaulet;
pub use hierarchical::reduce_hierarchical;
pub use kmeans::reduce_kmeans;
pub use poncelet::{reduce_poncelet, PonceletWeighting};
#[doc(hidden)]
pub use poncelet::exhaustive_optimum;
pub use resample::resample;
pub use serialize::{read_reduced, write_reduced};

use crate::error::{Error, Result};
use crate::timeseries::SeriesBundle;

/// Cluster representative rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterRule {
    /// Mean over the cluster members.
    Centroid,
    /// The member minimizing the summed squared distance to all members;
    /// representatives are always original data.
    Medoid,
}

impl CenterRule {
    pub fn tag(&self) -> &'static str {
        match self {
            CenterRule::Centroid => "centroid",
            CenterRule::Medoid => "medoid",
        }
    }
}

/// How reduced steps group into weighted periods of the original year.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodGrouping {
    pub period_len: usize,
    pub n_periods: usize,
    /// original period index -> representative period index
    pub assignment: Vec<usize>,
    /// occurrences represented by each representative
    pub period_weight: Vec<f64>,
}

impl PeriodGrouping {
    pub fn validate(&self, source_hours: usize) -> Result<()> {
        let n_original = source_hours / self.period_len;
        if self.period_len * n_original != source_hours {
            return Err(Error::Validation(format!(
                "grouping: period length {} does not divide source hours {source_hours}",
                self.period_len
            )));
        }
        if self.assignment.len() != n_original {
            return Err(Error::Validation(format!(
                "grouping: assignment covers {} periods, expected {n_original}",
                self.assignment.len()
            )));
        }
        if self.period_weight.len() != self.n_periods {
            return Err(Error::Validation(
                "grouping: one weight per representative required".into(),
            ));
        }
        let mut counts = vec![0usize; self.n_periods];
        for &rep in &self.assignment {
            if rep >= self.n_periods {
                return Err(Error::Validation(format!(
                    "grouping: assignment references representative {rep} of {}",
                    self.n_periods
                )));
            }
            counts[rep] += 1;
        }
        for (r, (&c, &w)) in counts.iter().zip(&self.period_weight).enumerate() {
            if w < 1.0 || (w - c as f64).abs() > 1e-9 {
                return Err(Error::Validation(format!(
                    "grouping: representative {r} has weight {w}, assignment count {c}"
                )));
            }
        }
        Ok(())
    }
}

/// A reduced time-series: profiles of length `m`, per-step weights in hours
/// represented, and (for grouped methods) the period structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSeries {
    pub bundle: SeriesBundle,
    pub m: usize,
    /// hours of the original year represented by each step
    pub weights: Vec<f64>,
    pub grouping: Option<PeriodGrouping>,
    pub source_hours: usize,
    pub method_tag: String,
}

impl ReducedSeries {
    pub fn validate(&self) -> Result<()> {
        if self.bundle.hours() != self.m {
            return Err(Error::Validation(format!(
                "reduced bundle has {} hours, expected m = {}",
                self.bundle.hours(),
                self.m
            )));
        }
        if self.weights.len() != self.m {
            return Err(Error::Validation("one weight per reduced step required".into()));
        }
        if self.weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::Validation("step weights must be positive".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - self.source_hours as f64).abs() > 1e-6 * self.source_hours as f64 {
            return Err(Error::Validation(format!(
                "step weights sum to {total}, expected {}",
                self.source_hours
            )));
        }
        if let Some(g) = &self.grouping {
            g.validate(self.source_hours)?;
            if g.n_periods * g.period_len != self.m {
                return Err(Error::Validation(format!(
                    "grouping implies m = {}, reduced series has {}",
                    g.n_periods * g.period_len,
                    self.m
                )));
            }
            for p in 0..g.n_periods {
                for u in 0..g.period_len {
                    if (self.weights[p * g.period_len + u] - g.period_weight[p]).abs() > 1e-9 {
                        return Err(Error::Validation(format!(
                            "step weight within period {p} deviates from the period weight"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Uniform step weights, i.e. integrable as a chronological sequence.
    pub fn has_uniform_weights(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|&w| (w - w0).abs() <= 1e-9 * w0.abs().max(1.0))
    }

    /// The identity "reduction": the original year, weights 1, grouped into
    /// source_hours/period_len periods each mapping to itself.
    pub fn identity_grouped(bundle: &SeriesBundle, period_len: usize) -> Result<Self> {
        let hours = bundle.hours();
        if period_len == 0 || hours % period_len != 0 {
            return Err(Error::Argument(format!(
                "identity grouping: period length {period_len} does not divide {hours}"
            )));
        }
        let n = hours / period_len;
        let reduced = ReducedSeries {
            bundle: bundle.clone(),
            m: hours,
            weights: vec![1.0; hours],
            grouping: Some(PeriodGrouping {
                period_len,
                n_periods: n,
                assignment: (0..n).collect(),
                period_weight: vec![1.0; n],
            }),
            source_hours: hours,
            method_tag: format!("identity_grouped_len{period_len}"),
        };
        reduced.validate()?;
        Ok(reduced)
    }
}

/// Slice a bundle into per-period vectors: demand first, then capacity
/// factors in catalog order, all hours of the period concatenated.
pub(crate) fn period_vectors(bundle: &SeriesBundle, period_len: usize) -> Result<Vec<Vec<f64>>> {
    let hours = bundle.hours();
    if period_len == 0 || hours % period_len != 0 {
        return Err(Error::Argument(format!(
            "period length {period_len} does not divide source hours {hours}"
        )));
    }
    let n = hours / period_len;
    let mut out = Vec::with_capacity(n);
    for p in 0..n {
        let mut v = Vec::with_capacity(period_len * (1 + bundle.capacity_factors().len()));
        for series in bundle.all_series() {
            v.extend_from_slice(&series.values()[p * period_len..(p + 1) * period_len]);
        }
        out.push(v);
    }
    Ok(out)
}

/// Build the reduced bundle from representative period vectors (original
/// units, same layout as [`period_vectors`]).
pub(crate) fn bundle_from_periods(
    source: &SeriesBundle,
    reps: &[Vec<f64>],
    period_len: usize,
) -> Result<SeriesBundle> {
    use crate::timeseries::{CfSeries, HourlySeries, Unit};

    let n_series = 1 + source.capacity_factors().len();
    let m = reps.len() * period_len;
    let mut series_values: Vec<Vec<f64>> = vec![Vec::with_capacity(m); n_series];
    for rep in reps {
        for (s, chunk) in rep.chunks_exact(period_len).enumerate() {
            series_values[s].extend_from_slice(chunk);
        }
    }
    let mut iter = series_values.into_iter();
    let demand_values: Vec<f64> = iter.next().expect("demand series present");
    // clamp numeric dust so unit invariants hold
    let demand = HourlySeries::new(
        demand_values.into_iter().map(|v| v.max(0.0)).collect(),
        Unit::PowerMw,
        source.demand().label(),
    )?;
    let mut cfs = Vec::new();
    for (cf, values) in source.capacity_factors().iter().zip(iter) {
        cfs.push(CfSeries {
            region: cf.region.clone(),
            tech: cf.tech.clone(),
            series: HourlySeries::new(
                values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
                Unit::Fraction,
                cf.series.label(),
            )?,
        });
    }
    SeriesBundle::new(demand, cfs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::synth_bundle;

    #[test]
    fn identity_grouping_is_valid() {
        let bundle = synth_bundle(1, 96).unwrap();
        let r = ReducedSeries::identity_grouped(&bundle, 24).unwrap();
        assert_eq!(r.m, 96);
        assert_eq!(r.grouping.as_ref().unwrap().n_periods, 4);
        assert!(r.has_uniform_weights());
    }

    #[test]
    fn grouping_validation_catches_mismatches() {
        let bundle = synth_bundle(1, 48).unwrap();
        let mut r = ReducedSeries::identity_grouped(&bundle, 24).unwrap();
        r.grouping.as_mut().unwrap().period_weight[0] = 2.0;
        assert!(r.validate().is_err());

        let mut r2 = ReducedSeries::identity_grouped(&bundle, 24).unwrap();
        r2.weights[0] = 0.5;
        assert!(r2.validate().is_err());
    }

    #[test]
    fn period_vectors_concatenate_all_series() {
        let bundle = synth_bundle(1, 48).unwrap();
        let v = period_vectors(&bundle, 24).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].len(), 24 * 3);
        assert_eq!(v[0][0], bundle.demand().values()[0]);
        assert_eq!(v[1][0], bundle.demand().values()[24]);
        assert!(period_vectors(&bundle, 36).is_err());
    }
}
