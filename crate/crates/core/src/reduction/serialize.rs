//! ReducedSeries persistence: a profiles CSV (same layout as bundle input)
//! plus a metadata CSV with the method tag, weights, and grouping.

use std::path::Path;

use crate::error::{Error, Result};
use crate::reduction::{PeriodGrouping, ReducedSeries};
use crate::timeseries::{format_value, load_bundle, write_bundle, CsvSchema};

/// Write the profile/metadata CSV pair.
pub fn write_reduced(profiles: &Path, metadata: &Path, reduced: &ReducedSeries) -> Result<()> {
    write_bundle(profiles, &reduced.bundle)?;

    let io_err = |source: csv::Error| Error::Csv { path: metadata.to_path_buf(), source };
    let mut w = csv::Writer::from_path(metadata).map_err(io_err)?;
    w.write_record(["key", "value"]).map_err(io_err)?;
    let mut put = |k: &str, v: String| w.write_record([k, &v]).map_err(io_err);
    put("method_tag", reduced.method_tag.clone())?;
    put("m", reduced.m.to_string())?;
    put("source_hours", reduced.source_hours.to_string())?;
    put("weights", join_f64(&reduced.weights))?;
    let cf_keys: Vec<String> = reduced
        .bundle
        .capacity_factors()
        .iter()
        .map(|c| format!("{}:{}", c.region, c.tech))
        .collect();
    put("cf_keys", cf_keys.join(";"))?;
    if let Some(g) = &reduced.grouping {
        put("period_len", g.period_len.to_string())?;
        put("n_periods", g.n_periods.to_string())?;
        put(
            "assignment",
            g.assignment.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";"),
        )?;
        put("period_weight", join_f64(&g.period_weight))?;
    }
    w.flush().map_err(|source| Error::Io { path: metadata.to_path_buf(), source })?;
    Ok(())
}

/// Read back a profile/metadata CSV pair.
pub fn read_reduced(profiles: &Path, metadata: &Path) -> Result<ReducedSeries> {
    let io_err = |source: csv::Error| Error::Csv { path: metadata.to_path_buf(), source };
    let mut reader = csv::Reader::from_path(metadata).map_err(io_err)?;
    let mut get = std::collections::HashMap::new();
    for record in reader.records() {
        let record = record.map_err(io_err)?;
        let key = record.get(0).unwrap_or_default().to_string();
        let value = record.get(1).unwrap_or_default().to_string();
        get.insert(key, value);
    }
    let field = |k: &str| -> Result<&String> {
        get.get(k)
            .ok_or_else(|| Error::Validation(format!("{}: missing key '{k}'", metadata.display())))
    };
    let parse_usize = |k: &str| -> Result<usize> {
        field(k)?
            .parse()
            .map_err(|_| Error::Validation(format!("{}: bad integer for '{k}'", metadata.display())))
    };

    let cf_keys: Vec<(String, String)> = field("cf_keys")?
        .split(';')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.split_once(':')
                .map(|(r, t)| (r.to_string(), t.to_string()))
                .ok_or_else(|| {
                    Error::Validation(format!("{}: bad cf key '{s}'", metadata.display()))
                })
        })
        .collect::<Result<_>>()?;
    let bundle = load_bundle(profiles, &CsvSchema::canonical(&cf_keys))?;

    let grouping = if get.contains_key("period_len") {
        Some(PeriodGrouping {
            period_len: parse_usize("period_len")?,
            n_periods: parse_usize("n_periods")?,
            assignment: field("assignment")?
                .split(';')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().map_err(|_| {
                        Error::Validation(format!("{}: bad assignment entry", metadata.display()))
                    })
                })
                .collect::<Result<_>>()?,
            period_weight: split_f64(field("period_weight")?, metadata)?,
        })
    } else {
        None
    };

    let reduced = ReducedSeries {
        m: parse_usize("m")?,
        source_hours: parse_usize("source_hours")?,
        weights: split_f64(field("weights")?, metadata)?,
        method_tag: field("method_tag")?.clone(),
        grouping,
        bundle,
    };
    reduced.validate()?;
    Ok(reduced)
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(|v| format_value(*v)).collect::<Vec<_>>().join(";")
}

fn split_f64(text: &str, path: &Path) -> Result<Vec<f64>> {
    text.split(';')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Validation(format!("{}: bad number '{s}'", path.display())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{reduce_kmeans, resample, CenterRule};
    use crate::timeseries::synth_bundle;

    #[test]
    fn grouped_round_trip() {
        let bundle = synth_bundle(5, 8 * 24).unwrap();
        let reduced = reduce_kmeans(&bundle, 3, 24, CenterRule::Centroid, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let profiles = dir.path().join("profiles.csv");
        let meta = dir.path().join("meta.csv");
        write_reduced(&profiles, &meta, &reduced).unwrap();
        let back = read_reduced(&profiles, &meta).unwrap();
        assert_eq!(back.m, reduced.m);
        assert_eq!(back.method_tag, reduced.method_tag);
        assert_eq!(back.grouping, reduced.grouping);
        for (a, b) in reduced.bundle.all_series().zip(back.bundle.all_series()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-7 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn chronological_round_trip() {
        let bundle = synth_bundle(5, 96).unwrap();
        let reduced = resample(&bundle, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let profiles = dir.path().join("profiles.csv");
        let meta = dir.path().join("meta.csv");
        write_reduced(&profiles, &meta, &reduced).unwrap();
        let back = read_reduced(&profiles, &meta).unwrap();
        assert_eq!(back.grouping, None);
        assert_eq!(back.weights, reduced.weights);
    }
}
