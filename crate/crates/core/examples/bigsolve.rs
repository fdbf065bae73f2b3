//! Timing probe for the full-resolution expansion and dispatch solves.
use std::time::Instant;
use tsrbench_core::evaluation::*;
use tsrbench_core::model::*;
use tsrbench_core::reduction::resample;
use tsrbench_core::solver::*;
use tsrbench_core::timeseries::synth_bundle;

fn desk_catalog(voll: f64) -> Catalog {
    Catalog::new(vec![
        Technology::renewable("pv", 60_000.0, Some(("r1", "pv"))),
        Technology::renewable("wind", 110_000.0, Some(("r1", "wind"))),
        Technology::storage("battery", TechKind::ShortTermStorage, Carrier::Electricity, 15_000.0, 10_000.0, 0.9, 0.9).with_max_ep_ratio(10.0),
        Technology::converter("electrolysis", Carrier::Electricity, Carrier::Hydrogen, 35_000.0, 0.7),
        Technology::storage("h2store", TechKind::LongTermStorageChainElement, Carrier::Hydrogen, 2_000.0, 150.0, 1.0, 1.0),
        Technology::converter("h2turbine", Carrier::Hydrogen, Carrier::Electricity, 45_000.0, 0.4),
        Technology::shedding("shed", 11_000.0),
    ]).unwrap()
}

fn main() {
    let hours: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2190);
    let bundle = synth_bundle(42, hours).unwrap();
    let catalog = desk_catalog(11_000.0).with_investment_prorated(hours);
    let identity = resample(&bundle, 1).unwrap();
    let scaling = ScalingPolicy::identity(hours);
    let t0 = Instant::now();
    let lp = build_chronological(&identity, &catalog, &scaling).unwrap();
    println!("build: {:.2}s vars {} rows {} nnz {}", t0.elapsed().as_secs_f64(), lp.n_vars(), lp.n_constraints(), lp.nnz());
    let t0 = Instant::now();
    let r = solve(&lp, &SolveOptions::default()).unwrap();
    println!("expansion solve: {:.2}s status {:?} obj {:.3} iters {} pivot_s {:.2}",
        t0.elapsed().as_secs_f64(), r.status, r.objective, r.iterations, r.solve_seconds);
    let plan = extract_plan(&r, &lp).unwrap();
    println!("plan: {:?}", plan.entries);
    let t0 = Instant::now();
    let dlp = build_dispatch(&bundle, &catalog, &plan, 11_000.0).unwrap();
    let dr = solve(&dlp, &SolveOptions::default()).unwrap();
    println!("dispatch solve: {:.2}s status {:?} obj {:.3} iters {}", t0.elapsed().as_secs_f64(), dr.status, dr.objective, dr.iterations);
}
