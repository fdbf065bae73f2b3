//! Method x length x integration sweeps over a bounded worker pool.

use std::collections::VecDeque;
use std::sync::Mutex;

use crate::error::Result;
use crate::evaluation::{
    run_scenario, EvalContext, EvaluationReport, IntegrationSpec, MethodSpec,
};
use crate::model::Catalog;
use crate::timeseries::{synth_year, SeriesBundle, SynthProfile};

/// Grid of scenarios: all admissible (method, mode, length) combinations.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub methods: Vec<MethodSpec>,
    pub modes: Vec<IntegrationSpec>,
    pub lengths: Vec<usize>,
    pub period_len: usize,
    /// drop the hydrogen/methane chain from the catalog
    pub no_seasonal_storage: bool,
    /// swap the demand profile for one without electrified heating, i.e.
    /// much weaker seasonality
    pub conventional_demand: bool,
}

impl SweepGrid {
    pub fn new(methods: Vec<MethodSpec>, modes: Vec<IntegrationSpec>, lengths: Vec<usize>) -> Self {
        SweepGrid {
            methods,
            modes,
            lengths,
            period_len: 24,
            no_seasonal_storage: false,
            conventional_demand: false,
        }
    }
}

/// One executed sweep cell; failures keep the identifying fields and carry
/// the error text instead of a report.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub method: String,
    pub mode: String,
    pub m_target: usize,
    pub outcome: std::result::Result<EvaluationReport, String>,
}

/// Run every admissible cell of the grid. Cells execute on `jobs` worker
/// threads; the output order is deterministic (method, mode, length)
/// regardless of scheduling. Inadmissible or failing cells become error rows
/// and the sweep continues.
pub fn run_sweep(
    grid: &SweepGrid,
    bundle: &SeriesBundle,
    catalog: &Catalog,
    voll: f64,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    let catalog = if grid.no_seasonal_storage {
        catalog.without_seasonal_storage()
    } else {
        catalog.clone()
    };
    let bundle = if grid.conventional_demand {
        swap_conventional_demand(bundle)?
    } else {
        bundle.clone()
    };

    let ctx = EvalContext::new(bundle, catalog, voll);
    // The reference solve is shared state; compute it before fanning out.
    let reference_err = ctx.reference().err().map(|e| e.to_string());

    let mut cells: Vec<(MethodSpec, IntegrationSpec, usize)> = Vec::new();
    for method in &grid.methods {
        for mode in &grid.modes {
            for &m in &grid.lengths {
                cells.push((method.clone(), *mode, m));
            }
        }
    }

    let queue: Mutex<VecDeque<usize>> = Mutex::new((0..cells.len()).collect());
    let results: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; cells.len()]);

    let worker = |_worker_id: usize| {
        loop {
            let next = queue.lock().expect("queue lock").pop_front();
            let Some(idx) = next else { break };
            let (method, mode, m) = &cells[idx];
            let outcome = match &reference_err {
                Some(e) => Err(format!("reference solve failed: {e}")),
                None => run_scenario(&ctx, method, *m, mode, grid.period_len)
                    .map_err(|e| e.to_string()),
            };
            let row = SweepRow {
                method: method.name(),
                mode: mode.tag(),
                m_target: *m,
                outcome,
            };
            results.lock().expect("results lock")[idx] = Some(row);
        }
    };

    let jobs = jobs.max(1).min(cells.len().max(1));
    std::thread::scope(|scope| {
        for w in 1..jobs {
            scope.spawn(move || worker(w));
        }
        worker(0);
    });

    let mut rows: Vec<SweepRow> = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every cell executed"))
        .collect();
    rows.sort_by(|a, b| {
        (&a.method, &a.mode, a.m_target).cmp(&(&b.method, &b.mode, b.m_target))
    });
    Ok(rows)
}

/// Stand-in for demand without sector integration: same seed family, much
/// weaker winter peak.
fn swap_conventional_demand(bundle: &SeriesBundle) -> Result<SeriesBundle> {
    let hours = bundle.hours();
    let flat = synth_year(9_999, hours, SynthProfile::SeasonalDemand)?;
    // compress the seasonal swing toward the annual mean
    let mean = flat.mean();
    let values: Vec<f64> = flat
        .values()
        .iter()
        .map(|v| (mean + 0.35 * (v - mean)).max(0.0))
        .collect();
    let demand = crate::timeseries::HourlySeries::new(
        values,
        crate::timeseries::Unit::PowerMw,
        "conventional_demand",
    )?;
    SeriesBundle::new(demand, bundle.capacity_factors().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScalingMode;
    use crate::reduction::PonceletWeighting;
    use crate::timeseries::synth_bundle;

    fn catalog() -> Catalog {
        crate::evaluation::tests::desk_catalog(11_000.0)
    }

    #[test]
    fn sweep_is_ordered_and_complete() {
        let bundle = synth_bundle(7, 8 * 24).unwrap();
        let grid = SweepGrid::new(
            vec![
                MethodSpec::Resample,
                MethodSpec::Poncelet { bins: 5, weighting: PonceletWeighting::Uniform },
            ],
            vec![IntegrationSpec::Chronological(ScalingMode::Rescale)],
            vec![2 * 24, 4 * 24, 8 * 24],
        );
        let rows = run_sweep(&grid, &bundle, &catalog(), 11_000.0, 2).unwrap();
        assert_eq!(rows.len(), 6);
        let mut sorted = rows.clone();
        sorted.sort_by(|a, b| {
            (&a.method, &a.mode, a.m_target).cmp(&(&b.method, &b.mode, b.m_target))
        });
        for (a, b) in rows.iter().zip(&sorted) {
            assert_eq!(a.method, b.method);
            assert_eq!(a.m_target, b.m_target);
        }
        assert!(rows.iter().all(|r| r.outcome.is_ok()));
    }

    #[test]
    fn inadmissible_cells_become_error_rows() {
        let bundle = synth_bundle(7, 4 * 24).unwrap();
        let grid = SweepGrid::new(
            vec![MethodSpec::KMeans { center: crate::reduction::CenterRule::Centroid, seed: 3 }],
            vec![
                IntegrationSpec::Grouped,
                IntegrationSpec::Chronological(ScalingMode::Compress),
            ],
            vec![2 * 24],
        );
        let rows = run_sweep(&grid, &bundle, &catalog(), 11_000.0, 1).unwrap();
        assert_eq!(rows.len(), 2);
        let failures: Vec<_> = rows.iter().filter(|r| r.outcome.is_err()).collect();
        assert_eq!(failures.len(), 1);
        assert!(failures[0].mode.starts_with("chronological"));
        assert!(rows.iter().any(|r| r.outcome.is_ok()));
    }

    #[test]
    fn no_seasonal_storage_drops_the_chain() {
        let bundle = synth_bundle(7, 4 * 24).unwrap();
        let mut grid = SweepGrid::new(
            vec![MethodSpec::Resample],
            vec![IntegrationSpec::Chronological(ScalingMode::Rescale)],
            vec![2 * 24],
        );
        grid.no_seasonal_storage = true;
        let rows = run_sweep(&grid, &bundle, &catalog(), 11_000.0, 1).unwrap();
        let report = rows[0].outcome.as_ref().unwrap();
        assert_eq!(report.plan.get("h2store").energy_mwh, 0.0);
        assert_eq!(report.plan.get("electrolysis").power_mw, 0.0);
        assert!(!report.plan.entries.contains_key("h2store"));
    }
}
