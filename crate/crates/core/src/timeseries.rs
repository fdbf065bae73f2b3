//! Hourly profiles, CSV ingestion, duration curves and synthetic years.
//!
//! Everything here is immutable after construction and safe to share across
//! threads; the operations are pure functions.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Physical unit of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// Power in MW, values must be non-negative.
    PowerMw,
    /// Dimensionless share, values must lie in [0, 1].
    Fraction,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unit::PowerMw => write!(f, "power_MW"),
            Unit::Fraction => write!(f, "fraction"),
        }
    }
}

/// An hourly profile: demand or a capacity factor.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    values: Vec<f64>,
    unit: Unit,
    label: String,
}

impl HourlySeries {
    pub fn new(values: Vec<f64>, unit: Unit, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if values.is_empty() {
            return Err(Error::Validation(format!("series '{label}' is empty")));
        }
        for (idx, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "series '{label}' has non-finite value at hour {idx}"
                )));
            }
            match unit {
                Unit::Fraction if !(0.0..=1.0).contains(&v) => {
                    return Err(Error::Validation(format!(
                        "series '{label}' has value {v} outside [0,1] at hour {idx}"
                    )));
                }
                Unit::PowerMw if v < 0.0 => {
                    return Err(Error::Validation(format!(
                        "series '{label}' has negative value {v} at hour {idx}"
                    )));
                }
                _ => {}
            }
        }
        Ok(Self { values, unit, label })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length > 0 is a construction invariant
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A capacity-factor profile keyed by (region, technology).
#[derive(Debug, Clone, PartialEq)]
pub struct CfSeries {
    pub region: String,
    pub tech: String,
    pub series: HourlySeries,
}

/// Demand plus the capacity-factor profiles that belong to one scenario year.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesBundle {
    demand: HourlySeries,
    capacity_factors: Vec<CfSeries>,
    hours: usize,
}

impl SeriesBundle {
    pub fn new(demand: HourlySeries, capacity_factors: Vec<CfSeries>) -> Result<Self> {
        let hours = demand.len();
        for cf in &capacity_factors {
            if cf.series.len() != hours {
                return Err(Error::Validation(format!(
                    "cf series ({}, {}) has {} hours, demand has {}",
                    cf.region,
                    cf.tech,
                    cf.series.len(),
                    hours
                )));
            }
        }
        for (i, a) in capacity_factors.iter().enumerate() {
            for b in capacity_factors.iter().skip(i + 1) {
                if a.region == b.region && a.tech == b.tech {
                    return Err(Error::Validation(format!(
                        "duplicate cf series for ({}, {})",
                        a.region, a.tech
                    )));
                }
            }
        }
        Ok(Self { demand, capacity_factors, hours })
    }

    pub fn demand(&self) -> &HourlySeries {
        &self.demand
    }

    pub fn capacity_factors(&self) -> &[CfSeries] {
        &self.capacity_factors
    }

    pub fn hours(&self) -> usize {
        self.hours
    }

    pub fn cf(&self, region: &str, tech: &str) -> Option<&HourlySeries> {
        self.capacity_factors
            .iter()
            .find(|c| c.region == region && c.tech == tech)
            .map(|c| &c.series)
    }

    /// All member series, demand first, cf series in catalog order.
    pub fn all_series(&self) -> impl Iterator<Item = &HourlySeries> {
        std::iter::once(&self.demand).chain(self.capacity_factors.iter().map(|c| &c.series))
    }
}

/// Series values sorted in non-increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationCurve {
    sorted: Vec<f64>,
}

impl DurationCurve {
    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

/// One step of a linearized duration curve: interval midpoint and the number
/// of curve values falling into the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedBin {
    pub level: f64,
    pub mass: usize,
}

/// Column mapping used when ingesting a bundle from CSV.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    /// Optional leading hour-index column (0-based integers, ignored beyond a
    /// parse check).
    pub hour_column: Option<String>,
    pub demand_column: String,
    pub cf_columns: Vec<CfColumn>,
}

#[derive(Debug, Clone)]
pub struct CfColumn {
    pub column: String,
    pub region: String,
    pub tech: String,
}

impl CsvSchema {
    /// The conventional schema this crate itself emits: `hour`, `demand`,
    /// then one `cf_<region>_<tech>` column per capacity-factor series.
    pub fn canonical(cf_keys: &[(String, String)]) -> Self {
        CsvSchema {
            hour_column: Some("hour".to_string()),
            demand_column: "demand".to_string(),
            cf_columns: cf_keys
                .iter()
                .map(|(region, tech)| CfColumn {
                    column: format!("cf_{region}_{tech}"),
                    region: region.clone(),
                    tech: tech.clone(),
                })
                .collect(),
        }
    }
}

/// Read a bundle from a headered CSV file.
pub fn load_bundle(path: &Path, schema: &CsvSchema) -> Result<SeriesBundle> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;

    let headers = reader
        .headers()
        .map_err(|source| Error::Csv { path: path.to_path_buf(), source })?
        .clone();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };

    let hour_idx = match &schema.hour_column {
        Some(name) => Some(col_index(name)?),
        None => None,
    };
    let demand_idx = col_index(&schema.demand_column)?;
    let cf_idx: Vec<usize> = schema
        .cf_columns
        .iter()
        .map(|c| col_index(&c.column))
        .collect::<Result<_>>()?;

    let mut demand = Vec::new();
    let mut cf_values: Vec<Vec<f64>> = vec![Vec::new(); cf_idx.len()];

    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;
        let cell = |idx: usize, column: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::ParseCell {
                path: path.to_path_buf(),
                row,
                column: column.to_string(),
                value: raw.to_string(),
            })
        };

        if let Some(idx) = hour_idx {
            let raw = record.get(idx).unwrap_or("");
            raw.parse::<u64>().map_err(|_| Error::ParseCell {
                path: path.to_path_buf(),
                row,
                column: schema.hour_column.clone().unwrap_or_default(),
                value: raw.to_string(),
            })?;
        }
        demand.push(cell(demand_idx, &schema.demand_column)?);
        for (k, &idx) in cf_idx.iter().enumerate() {
            let v = cell(idx, &schema.cf_columns[k].column)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!(
                    "{}: row {}, column '{}': capacity factor {} outside [0,1]",
                    path.display(),
                    row,
                    schema.cf_columns[k].column,
                    v
                )));
            }
            cf_values[k].push(v);
        }
    }

    let demand = HourlySeries::new(demand, Unit::PowerMw, schema.demand_column.clone())?;
    let capacity_factors = schema
        .cf_columns
        .iter()
        .zip(cf_values)
        .map(|(col, values)| {
            Ok(CfSeries {
                region: col.region.clone(),
                tech: col.tech.clone(),
                series: HourlySeries::new(values, Unit::Fraction, col.column.clone())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    SeriesBundle::new(demand, capacity_factors)
}

/// Write a bundle in the conventional column layout (`hour`, `demand`,
/// `cf_<region>_<tech>`, ...).
pub fn write_bundle(path: &Path, bundle: &SeriesBundle) -> Result<()> {
    let io_err = |source: csv::Error| Error::Csv { path: path.to_path_buf(), source };
    let mut writer = csv::Writer::from_path(path).map_err(io_err)?;
    let mut header = vec!["hour".to_string(), "demand".to_string()];
    for cf in bundle.capacity_factors() {
        header.push(format!("cf_{}_{}", cf.region, cf.tech));
    }
    writer.write_record(&header).map_err(io_err)?;
    for t in 0..bundle.hours() {
        let mut record = vec![t.to_string(), format_value(bundle.demand().values()[t])];
        for cf in bundle.capacity_factors() {
            record.push(format_value(cf.series.values()[t]));
        }
        writer.write_record(&record).map_err(io_err)?;
    }
    writer.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

/// Canonical decimal formatting: 9 significant digits, stable under
/// re-ingestion (parse → format reproduces the text).
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0.0".to_string();
    }
    format!("{v:.8e}")
}

/// Map every series affinely onto [0, 1]; constant series map to 0.5.
pub fn normalize(bundle: &SeriesBundle) -> SeriesBundle {
    let capacity_factors = bundle
        .capacity_factors()
        .iter()
        .map(|cf| CfSeries {
            region: cf.region.clone(),
            tech: cf.tech.clone(),
            series: normalize_series(&cf.series),
        })
        .collect();
    SeriesBundle::new(normalize_series(bundle.demand()), capacity_factors)
        .expect("normalization preserves bundle shape")
}

pub fn normalize_series(series: &HourlySeries) -> HourlySeries {
    let min = series.min();
    let max = series.max();
    let values = if max > min {
        let span = max - min;
        series.values().iter().map(|&v| (v - min) / span).collect()
    } else {
        vec![0.5; series.len()]
    };
    HourlySeries::new(values, Unit::Fraction, series.label())
        .expect("normalized values lie in [0,1]")
}

/// Sort a series into its duration curve (descending).
pub fn duration_curve(series: &HourlySeries) -> DurationCurve {
    let mut sorted = series.values().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    DurationCurve { sorted }
}

/// Partition the curve's value range into `bins` equal-width intervals
/// (upper-inclusive at the top) and count the values per interval.
///
/// Bins are returned from the highest interval down; masses sum to the curve
/// length.
pub fn linearize(curve: &DurationCurve, bins: usize) -> Result<Vec<LinearizedBin>> {
    if bins == 0 {
        return Err(Error::Argument("linearize: bins must be positive".into()));
    }
    if bins > curve.len() {
        return Err(Error::Argument(format!(
            "linearize: bins ({bins}) exceeds curve length ({})",
            curve.len()
        )));
    }
    let max = curve.values()[0];
    let min = curve.values()[curve.len() - 1];
    let width = (max - min) / bins as f64;
    let mut out: Vec<LinearizedBin> = (0..bins)
        .map(|k| LinearizedBin { level: max - (k as f64 + 0.5) * width, mass: 0 })
        .collect();
    for &v in curve.values() {
        out[bin_index(v, min, max, bins)].mass += 1;
    }
    Ok(out)
}

/// Index (from the top interval) of the bin holding `v`; shared with the
/// duration-curve matching reduction so both sides use identical edges.
pub(crate) fn bin_index(v: f64, min: f64, max: f64, bins: usize) -> usize {
    let width = (max - min) / bins as f64;
    if width <= 0.0 {
        return 0;
    }
    (((max - v) / width).floor() as isize).clamp(0, bins as isize - 1) as usize
}

/// Synthetic profile families for desk-scale experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthProfile {
    SeasonalDemand,
    PvLike,
    WindLike,
}

/// Deterministic synthetic year: same (seed, hours, profile) always yields a
/// bitwise-identical series.
pub fn synth_year(seed: u64, hours: usize, profile: SynthProfile) -> Result<HourlySeries> {
    if hours < 24 || hours % 24 != 0 {
        return Err(Error::Argument(format!(
            "synth_year: hours ({hours}) must be >= 24 and divisible by 24"
        )));
    }
    let series = match profile {
        SynthProfile::SeasonalDemand => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ea5_0a1d);
            let noise = Normal::new(0.0, 1.5).expect("valid std dev");
            let values = (0..hours)
                .map(|h| {
                    let yf = h as f64 / hours as f64;
                    let hod = (h % 24) as f64;
                    let annual = 18.0 * (2.0 * PI * yf).cos();
                    let diurnal = 9.0 * (2.0 * PI * (hod - 18.0) / 24.0).cos();
                    (50.0 + annual + diurnal + noise.sample(&mut rng)).max(0.0)
                })
                .collect();
            HourlySeries::new(values, Unit::PowerMw, "seasonal_demand")?
        }
        SynthProfile::PvLike => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0050_11ce);
            let values = (0..hours)
                .map(|h| {
                    let yf = h as f64 / hours as f64;
                    let hod = (h % 24) as f64;
                    if hod <= 6.0 || hod >= 18.0 {
                        return 0.0;
                    }
                    let shape = (PI * (hod - 6.0) / 12.0).sin();
                    let annual = 0.30 + 0.35 * (1.0 - (2.0 * PI * yf).cos());
                    let cloud: f64 = rng.gen();
                    shape * annual * (1.0 - 0.35 * cloud)
                })
                .collect();
            HourlySeries::new(values, Unit::Fraction, "pv_like")?
        }
        SynthProfile::WindLike => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0057_17d0);
            let noise = Normal::new(0.0, 1.0).expect("valid std dev");
            let mut deviation = 0.0_f64;
            let values = (0..hours)
                .map(|h| {
                    let yf = h as f64 / hours as f64;
                    let mean = 0.38 + 0.14 * (2.0 * PI * yf).cos();
                    deviation = 0.96 * deviation + 0.06 * noise.sample(&mut rng);
                    (mean + deviation).clamp(0.0, 1.0)
                })
                .collect();
            HourlySeries::new(values, Unit::Fraction, "wind_like")?
        }
    };
    Ok(series)
}

/// The standard desk-scale bundle: seasonal demand plus one pv-like and one
/// wind-like capacity factor, all from one seed.
pub fn synth_bundle(seed: u64, hours: usize) -> Result<SeriesBundle> {
    let demand = synth_year(seed, hours, SynthProfile::SeasonalDemand)?;
    let pv = synth_year(seed.wrapping_add(1), hours, SynthProfile::PvLike)?;
    let wind = synth_year(seed.wrapping_add(2), hours, SynthProfile::WindLike)?;
    SeriesBundle::new(
        demand,
        vec![
            CfSeries { region: "r1".into(), tech: "pv".into(), series: pv },
            CfSeries { region: "r1".into(), tech: "wind".into(), series: wind },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn series(values: &[f64]) -> HourlySeries {
        HourlySeries::new(values.to_vec(), Unit::PowerMw, "test").unwrap()
    }

    #[test]
    fn hourly_series_rejects_bad_values() {
        assert!(HourlySeries::new(vec![], Unit::PowerMw, "x").is_err());
        assert!(HourlySeries::new(vec![1.3], Unit::Fraction, "x").is_err());
        assert!(HourlySeries::new(vec![-0.1], Unit::PowerMw, "x").is_err());
        assert!(HourlySeries::new(vec![f64::NAN], Unit::PowerMw, "x").is_err());
    }

    #[test]
    fn load_bundle_parses_columns() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "hour,demand,pv_r1,wind_r1").unwrap();
        for t in 0..24 {
            writeln!(file, "{t},{},0.5,0.25", 10.0 + t as f64).unwrap();
        }
        let schema = CsvSchema {
            hour_column: Some("hour".into()),
            demand_column: "demand".into(),
            cf_columns: vec![
                CfColumn { column: "pv_r1".into(), region: "r1".into(), tech: "pv".into() },
                CfColumn { column: "wind_r1".into(), region: "r1".into(), tech: "wind".into() },
            ],
        };
        let bundle = load_bundle(file.path(), &schema).unwrap();
        assert_eq!(bundle.hours(), 24);
        assert_eq!(bundle.capacity_factors().len(), 2);
        assert_eq!(bundle.cf("r1", "pv").unwrap().values()[0], 0.5);
    }

    #[test]
    fn load_bundle_demand_only() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "demand").unwrap();
        for t in 0..24 {
            writeln!(file, "{}", 5.0 + t as f64).unwrap();
        }
        let schema = CsvSchema {
            hour_column: None,
            demand_column: "demand".into(),
            cf_columns: vec![],
        };
        let bundle = load_bundle(file.path(), &schema).unwrap();
        assert_eq!(bundle.hours(), 24);
        assert!(bundle.capacity_factors().is_empty());
    }

    #[test]
    fn load_bundle_reports_schema_and_value_errors() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "demand,pv").unwrap();
        writeln!(file, "10,0.5").unwrap();
        writeln!(file, "11,1.3").unwrap();
        let schema = CsvSchema {
            hour_column: None,
            demand_column: "demand".into(),
            cf_columns: vec![CfColumn {
                column: "pv".into(),
                region: "r1".into(),
                tech: "pv".into(),
            }],
        };
        let err = load_bundle(file.path(), &schema).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 1"), "{msg}");
        assert!(msg.contains("pv"), "{msg}");

        let missing = CsvSchema {
            hour_column: None,
            demand_column: "nope".into(),
            cf_columns: vec![],
        };
        assert!(matches!(
            load_bundle(file.path(), &missing),
            Err(Error::MissingColumn { .. })
        ));

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "demand").unwrap();
        writeln!(bad, "10").unwrap();
        writeln!(bad, "abc").unwrap();
        let schema = CsvSchema {
            hour_column: None,
            demand_column: "demand".into(),
            cf_columns: vec![],
        };
        match load_bundle(bad.path(), &schema) {
            Err(Error::ParseCell { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn normalize_affine_map() {
        let s = normalize_series(&series(&[0.0, 50.0, 100.0]));
        assert_eq!(s.values(), &[0.0, 0.5, 1.0]);
        let s = normalize_series(&series(&[2.0, 4.0, 10.0]));
        assert_eq!(s.values(), &[0.0, 0.25, 1.0]);
        let s = normalize_series(&series(&[7.0, 7.0, 7.0]));
        assert_eq!(s.values(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn normalize_is_idempotent() {
        let once = normalize_series(&series(&[3.0, 9.0, 4.5, 6.0]));
        let twice = normalize_series(&once);
        assert_eq!(once.values(), twice.values());
    }

    #[test]
    fn duration_curve_sorts_descending() {
        let c = duration_curve(&series(&[1.0, 3.0, 2.0]));
        assert_eq!(c.values(), &[3.0, 2.0, 1.0]);
        let again = duration_curve(&series(&[3.0, 2.0, 1.0]));
        assert_eq!(c, again);
    }

    #[test]
    fn linearize_hand_case() {
        let c = duration_curve(&series(&[4.0, 3.0, 2.0, 1.0]));
        let bins = linearize(&c, 2).unwrap();
        assert_eq!(bins.len(), 2);
        assert!((bins[0].level - 3.25).abs() < 1e-12);
        assert_eq!(bins[0].mass, 2);
        assert!((bins[1].level - 1.75).abs() < 1e-12);
        assert_eq!(bins[1].mass, 2);
    }

    #[test]
    fn linearize_conservation_and_edges() {
        let c = duration_curve(&series(&[5.0, 4.0, 3.0, 2.0, 1.0]));
        for bins in 1..=c.len() {
            let out = linearize(&c, bins).unwrap();
            assert_eq!(out.iter().map(|b| b.mass).sum::<usize>(), c.len());
        }
        assert!(linearize(&c, 0).is_err());
        assert!(linearize(&c, 6).is_err());

        let constant = duration_curve(&series(&[2.0; 8]));
        let out = linearize(&constant, 4).unwrap();
        let nonzero: Vec<_> = out.iter().filter(|b| b.mass > 0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].mass, 8);
    }

    #[test]
    fn synth_year_is_deterministic() {
        for profile in [
            SynthProfile::SeasonalDemand,
            SynthProfile::PvLike,
            SynthProfile::WindLike,
        ] {
            let a = synth_year(7, 8760, profile).unwrap();
            let b = synth_year(7, 8760, profile).unwrap();
            assert_eq!(a.values(), b.values());
            let c = synth_year(8, 8760, profile).unwrap();
            assert_ne!(a.values(), c.values());
        }
        assert!(synth_year(7, 100, SynthProfile::PvLike).is_err());
        assert!(synth_year(7, 0, SynthProfile::PvLike).is_err());
    }

    #[test]
    fn synth_pv_night_hours_are_zero() {
        let pv = synth_year(3, 8760, SynthProfile::PvLike).unwrap();
        for (h, &v) in pv.values().iter().enumerate() {
            let hod = h % 24;
            if hod <= 6 || hod >= 18 {
                assert_eq!(v, 0.0, "hour {h}");
            }
        }
        assert!(pv.max() <= 1.0);
    }

    #[test]
    fn synth_demand_is_winter_peaking() {
        let dem = synth_year(11, 8760, SynthProfile::SeasonalDemand).unwrap();
        let q = 8760 / 4;
        let first: f64 = dem.values()[..q].iter().sum::<f64>() / q as f64;
        let mid_start = 8760 * 3 / 8;
        let middle: f64 = dem.values()[mid_start..mid_start + q].iter().sum::<f64>() / q as f64;
        assert!(
            first > middle,
            "first-quarter mean {first} should exceed mid-year mean {middle}"
        );
    }

    #[test]
    fn bundle_round_trip_through_csv() {
        let bundle = synth_bundle(5, 48).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bundle.csv");
        write_bundle(&path, &bundle).unwrap();
        let keys: Vec<(String, String)> = bundle
            .capacity_factors()
            .iter()
            .map(|c| (c.region.clone(), c.tech.clone()))
            .collect();
        let back = load_bundle(&path, &CsvSchema::canonical(&keys)).unwrap();
        assert_eq!(back.hours(), bundle.hours());
        for (a, b) in bundle.all_series().zip(back.all_series()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-7 * x.abs().max(1.0));
            }
        }
    }
}
