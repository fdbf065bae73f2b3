//! results.csv and per-metric SVG charts for a finished sweep.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::svg::{render_chart, SeriesData};
use crate::evaluation::SweepRow;
use crate::model::Catalog;
use crate::timeseries::format_value;

/// Write `results.csv` plus one SVG per metric (`lost_load_share`,
/// `cost_deviation`, `solve_time_ratio`) into `out_dir`. Returns the list of
/// files written.
pub fn emit_reports(rows: &[SweepRow], catalog: &Catalog, out_dir: &Path) -> Result<Vec<String>> {
    if rows.is_empty() {
        return Err(Error::Argument("emit_reports: empty report table".into()));
    }
    fs::create_dir_all(out_dir)
        .map_err(|source| Error::Io { path: out_dir.to_path_buf(), source })?;
    let mut written = Vec::new();

    // capacity columns in catalog order
    let mut cap_cols: Vec<(String, String, bool)> = Vec::new(); // (column, tech, is_power)
    for tech in catalog.techs() {
        if tech.kind == crate::model::TechKind::LoadShedding {
            continue;
        }
        cap_cols.push((format!("cap_pow_{}", tech.id), tech.id.clone(), true));
        if tech.kind.is_storage() {
            cap_cols.push((format!("cap_en_{}", tech.id), tech.id.clone(), false));
        }
    }

    let csv_path = out_dir.join("results.csv");
    {
        let io_err = |source: csv::Error| Error::Csv { path: csv_path.clone(), source };
        let mut w = csv::Writer::from_path(&csv_path).map_err(io_err)?;
        let mut header = vec![
            "scenario_tag".to_string(),
            "method".to_string(),
            "mode".to_string(),
            "m".to_string(),
            "alpha".to_string(),
            "beta".to_string(),
            "lost_load_share".to_string(),
            "lost_load_hours".to_string(),
            "cost_deviation".to_string(),
            "reduced_objective".to_string(),
            "reference_objective".to_string(),
            "solve_time_ratio".to_string(),
        ];
        header.extend(cap_cols.iter().map(|(c, _, _)| c.clone()));
        header.push("error".to_string());
        w.write_record(&header).map_err(io_err)?;

        for row in rows {
            let mut record: Vec<String> = Vec::with_capacity(header.len());
            match &row.outcome {
                Ok(report) => {
                    record.push(report.scenario_tag.clone());
                    record.push(report.method.clone());
                    record.push(report.mode.clone());
                    record.push(report.m.to_string());
                    record.push(format_value(report.alpha));
                    record.push(format_value(report.beta));
                    record.push(format_value(report.lost_load_share));
                    record.push(report.lost_load_hours.to_string());
                    record.push(format_value(report.cost_deviation));
                    record.push(format_value(report.reduced_objective));
                    record.push(format_value(report.reference_objective));
                    record.push(format_value(report.solve_time_ratio));
                    for (_, tech, is_power) in &cap_cols {
                        let entry = report.plan.get(tech);
                        record.push(format_value(if *is_power {
                            entry.power_mw
                        } else {
                            entry.energy_mwh
                        }));
                    }
                    record.push(String::new());
                }
                Err(message) => {
                    record.push(format!("{}_m{}_{}", row.method, row.m_target, row.mode));
                    record.push(row.method.clone());
                    record.push(row.mode.clone());
                    record.push(row.m_target.to_string());
                    for _ in 0..8 + cap_cols.len() {
                        record.push(String::new());
                    }
                    record.push(message.clone());
                }
            }
            w.write_record(&record).map_err(io_err)?;
        }
        w.flush().map_err(|source| Error::Io { path: csv_path.clone(), source })?;
    }
    written.push("results.csv".to_string());

    for (metric, label) in [
        ("lost_load_share", "loss of load (share of demand)"),
        ("cost_deviation", "system-cost deviation"),
        ("solve_time_ratio", "solve effort relative to full resolution"),
    ] {
        let mut series: Vec<SeriesData> = Vec::new();
        for row in rows {
            let Ok(report) = &row.outcome else { continue };
            let y = match metric {
                "lost_load_share" => report.lost_load_share,
                "cost_deviation" => report.cost_deviation,
                _ => report.solve_time_ratio,
            };
            let key = format!("{} {}", report.method, report.mode);
            match series.iter_mut().find(|s| s.label == key) {
                Some(s) => s.points.push((report.m as f64, y)),
                None => series.push(SeriesData { label: key, points: vec![(report.m as f64, y)] }),
            }
        }
        if series.is_empty() {
            continue;
        }
        for s in series.iter_mut() {
            s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let name = format!("{metric}.svg");
        let svg = render_chart(metric, label, &series);
        fs::write(out_dir.join(&name), svg)
            .map_err(|source| Error::Io { path: out_dir.join(&name), source })?;
        written.push(name);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{run_sweep, IntegrationSpec, MethodSpec, SweepGrid};
    use crate::model::ScalingMode;
    use crate::timeseries::synth_bundle;

    #[test]
    fn csv_and_svgs_round_trip_stably() {
        let bundle = synth_bundle(5, 6 * 24).unwrap();
        let catalog = crate::evaluation::tests::desk_catalog(11_000.0);
        let grid = SweepGrid::new(
            vec![MethodSpec::Resample],
            vec![IntegrationSpec::Chronological(ScalingMode::Rescale)],
            vec![3 * 24, 6 * 24],
        );
        let rows = run_sweep(&grid, &bundle, &catalog, 11_000.0, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_reports(&rows, &catalog, dir.path()).unwrap();
        assert!(files.contains(&"results.csv".to_string()));
        assert!(files.contains(&"lost_load_share.svg".to_string()));

        let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert_eq!(text.lines().count(), 3); // header + 2 rows

        // decimal text round-trips through parse + reformat
        let mut reader = csv::Reader::from_path(dir.path().join("results.csv")).unwrap();
        let headers = reader.headers().unwrap().clone();
        let share_idx = headers.iter().position(|h| h == "lost_load_share").unwrap();
        for record in reader.records() {
            let record = record.unwrap();
            let cell = record.get(share_idx).unwrap();
            if !cell.is_empty() {
                let v: f64 = cell.parse().unwrap();
                assert_eq!(format_value(v), cell);
            }
        }
    }
}
