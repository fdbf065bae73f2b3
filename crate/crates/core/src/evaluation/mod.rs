//! The two-stage adequacy protocol: solve the expansion model on a reduced
//! series, fix the resulting capacities, re-dispatch the full year, and
//! report loss of load and system-cost deviation.

mod emit;
mod svg;
mod sweep;

pub use emit::emit_reports;
pub use sweep::{run_sweep, SweepGrid, SweepRow};

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::{
    build_chronological, build_dispatch, build_grouped, extract_plan, make_scaling_for,
    system_cost, CapacityPlan, Catalog, ScalingMode, ScalingPolicy,
};
use crate::reduction::{
    reduce_gerbaulet, reduce_hierarchical, reduce_kmeans, reduce_poncelet, resample, CenterRule,
    PonceletWeighting, ReducedSeries,
};
use crate::solver::{solve, LinearProgram, SolveOptions, SolveResult, VarRole};
use crate::timeseries::SeriesBundle;

/// Shedding below this many MWh in one step does not count as an hour with
/// unmet demand.
pub const SHED_TOL_MWH: f64 = 1e-6;

/// Adequacy metrics of one scenario.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    /// share of annual demand unmet in the full-resolution re-dispatch
    pub lost_load_share: f64,
    /// hours with shedding above [`SHED_TOL_MWH`]
    pub lost_load_hours: usize,
    /// (reduced objective - reference objective) / reference objective,
    /// shedding cost excluded on both sides
    pub cost_deviation: f64,
    pub plan: CapacityPlan,
    pub reduced_objective: f64,
    pub reference_objective: f64,
    /// reduced-solve pivots over reference-solve pivots: a deterministic
    /// optimizer-effort ratio, so sweep outputs are byte-reproducible
    pub solve_time_ratio: f64,
    pub scenario_tag: String,
    pub method: String,
    pub mode: String,
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// A derivation method with its fixed parameters; the reduced length `m`
/// varies per sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    KMeans { center: CenterRule, seed: u64 },
    Hierarchical { center: CenterRule },
    Poncelet { bins: usize, weighting: PonceletWeighting },
    Gerbaulet { window: usize },
    Resample,
}

impl MethodSpec {
    pub fn name(&self) -> String {
        match self {
            MethodSpec::KMeans { center, .. } => format!("kmeans_{}", center.tag()),
            MethodSpec::Hierarchical { center } => format!("hierarchical_{}", center.tag()),
            MethodSpec::Poncelet { bins, weighting } => {
                format!("poncelet_{}_{}bins", weighting.tag(), bins)
            }
            MethodSpec::Gerbaulet { window } => format!("gerbaulet_w{window}"),
            MethodSpec::Resample => "resample".to_string(),
        }
    }

    /// Whether the method can feed the given integration mode: clustering
    /// needs weights (grouped), stride selection and re-sampling produce
    /// unweighted sequences (chronological), duration-curve matching swings
    /// both ways depending on its weighting variant.
    pub fn admissible(&self, mode: &IntegrationSpec) -> bool {
        match (self, mode) {
            (MethodSpec::KMeans { .. }, IntegrationSpec::Grouped) => true,
            (MethodSpec::Hierarchical { .. }, IntegrationSpec::Grouped) => true,
            (
                MethodSpec::Poncelet { weighting: PonceletWeighting::Weighted, .. },
                IntegrationSpec::Grouped,
            ) => true,
            (
                MethodSpec::Poncelet { weighting: PonceletWeighting::Uniform, .. },
                IntegrationSpec::Chronological(_),
            ) => true,
            (MethodSpec::Gerbaulet { .. }, IntegrationSpec::Chronological(_)) => true,
            (MethodSpec::Resample, IntegrationSpec::Chronological(_)) => true,
            _ => false,
        }
    }

    /// Derive a reduced series of (approximately) `m_target` steps.
    pub fn derive(
        &self,
        bundle: &SeriesBundle,
        m_target: usize,
        period_len: usize,
    ) -> Result<ReducedSeries> {
        let hours = bundle.hours();
        let need_periods = |m: usize| -> Result<usize> {
            if m == 0 || m % period_len != 0 {
                return Err(Error::Argument(format!(
                    "length m = {m} is not a multiple of the period length {period_len}"
                )));
            }
            Ok(m / period_len)
        };
        match self {
            MethodSpec::KMeans { center, seed } => {
                reduce_kmeans(bundle, need_periods(m_target)?, period_len, *center, *seed)
            }
            MethodSpec::Hierarchical { center } => {
                reduce_hierarchical(bundle, need_periods(m_target)?, period_len, *center)
            }
            MethodSpec::Poncelet { bins, weighting } => {
                reduce_poncelet(bundle, need_periods(m_target)?, period_len, *bins, *weighting)
            }
            MethodSpec::Gerbaulet { window } => {
                let stride = (hours as f64 / m_target as f64).round().max(1.0) as usize;
                reduce_gerbaulet(bundle, stride, *window)
            }
            MethodSpec::Resample => {
                if m_target == 0 || hours % m_target != 0 {
                    return Err(Error::Argument(format!(
                        "resample: target length {m_target} does not divide {hours}"
                    )));
                }
                resample(bundle, hours / m_target)
            }
        }
    }
}

/// Integration mode of a sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegrationSpec {
    Grouped,
    Chronological(ScalingMode),
}

impl IntegrationSpec {
    pub fn tag(&self) -> String {
        match self {
            IntegrationSpec::Grouped => "grouped".to_string(),
            IntegrationSpec::Chronological(mode) => format!("chronological_{}", mode.tag()),
        }
    }
}

/// Reference solve at full resolution, shared across scenarios.
#[derive(Debug, Clone)]
pub struct Reference {
    pub objective_excl_shed: f64,
    pub plan: CapacityPlan,
    pub iterations: u64,
    pub solve_seconds: f64,
}

/// Bundle + catalog + VoLL with the cached full-resolution reference.
pub struct EvalContext {
    pub bundle: SeriesBundle,
    pub catalog: Catalog,
    pub voll: f64,
    pub solve_options: SolveOptions,
    reference: OnceLock<std::result::Result<Reference, String>>,
}

impl EvalContext {
    pub fn new(bundle: SeriesBundle, catalog: Catalog, voll: f64) -> Self {
        EvalContext {
            bundle,
            catalog,
            voll,
            solve_options: SolveOptions::default(),
            reference: OnceLock::new(),
        }
    }

    /// The full-resolution expansion solve (computed once per context).
    pub fn reference(&self) -> Result<&Reference> {
        let cached = self.reference.get_or_init(|| {
            compute_reference(&self.bundle, &self.catalog, &self.solve_options)
                .map_err(|e| e.to_string())
        });
        cached
            .as_ref()
            .map_err(|e| Error::Internal(format!("reference solve failed: {e}")))
    }
}

fn compute_reference(
    bundle: &SeriesBundle,
    catalog: &Catalog,
    opts: &SolveOptions,
) -> Result<Reference> {
    let identity = resample(bundle, 1)?;
    let scaling = ScalingPolicy::identity(bundle.hours());
    let lp = build_chronological(&identity, catalog, &scaling)?;
    let result = solve(&lp, opts)?;
    if !result.is_optimal() {
        return Err(Error::NonOptimal(result.status));
    }
    let cost = system_cost(&result, &lp)?;
    let shed = shed_cost(&lp, &result, &identity, 1.0, catalog);
    Ok(Reference {
        objective_excl_shed: cost.total - shed,
        plan: extract_plan(&result, &lp)?,
        iterations: result.iterations.max(1),
        solve_seconds: result.solve_seconds,
    })
}

/// Cost of shedding in an expansion solve: shed flows priced at the catalog
/// VoLL, weighted like every other flow in the variable-cost row.
fn shed_cost(
    lp: &LinearProgram,
    result: &SolveResult,
    reduced: &ReducedSeries,
    beta: f64,
    catalog: &Catalog,
) -> f64 {
    let Some(shed_tech) = catalog
        .techs()
        .iter()
        .find(|t| t.kind == crate::model::TechKind::LoadShedding)
    else {
        return 0.0;
    };
    let weight_of = |step: usize| -> f64 {
        match &reduced.grouping {
            Some(g) => g.period_weight[step / g.period_len],
            None => beta,
        }
    };
    let mut total = 0.0;
    for (j, meta) in lp.metas().iter().enumerate() {
        if let VarRole::Shedding { step } = meta.role {
            total += result.primal[j].max(0.0) * shed_tech.var_cost * weight_of(step);
        }
    }
    total
}

/// Dispatch metrics of a fixed plan against the full-resolution year.
pub fn evaluate_plan(
    plan: &CapacityPlan,
    full_bundle: &SeriesBundle,
    catalog: &Catalog,
    voll: f64,
    opts: &SolveOptions,
) -> Result<(f64, usize)> {
    let lp = build_dispatch(full_bundle, catalog, plan, voll)?;
    let result = solve(&lp, opts)?;
    if !result.is_optimal() {
        // with unbounded shedding the dispatch is always feasible
        return Err(Error::Internal(format!(
            "dispatch unexpectedly ended {:?}",
            result.status
        )));
    }
    let mut shed_total = 0.0;
    let mut shed_hours = 0usize;
    for (j, meta) in lp.metas().iter().enumerate() {
        if let VarRole::Shedding { .. } = meta.role {
            let v = result.primal[j].max(0.0);
            shed_total += v;
            if v > SHED_TOL_MWH {
                shed_hours += 1;
            }
        }
    }
    let demand_total: f64 = full_bundle.demand().values().iter().sum();
    let share = (shed_total / demand_total).clamp(0.0, 1.0);
    Ok((share, shed_hours))
}

/// Full protocol for one scenario: derive, build, solve, fix capacities,
/// re-dispatch, report.
pub fn run_scenario(
    ctx: &EvalContext,
    method: &MethodSpec,
    m_target: usize,
    mode: &IntegrationSpec,
    period_len: usize,
) -> Result<EvaluationReport> {
    if !method.admissible(mode) {
        return Err(Error::Inadmissible {
            method: method.name(),
            mode: mode.tag(),
        });
    }
    let reference = ctx.reference()?;
    let reduced = method.derive(&ctx.bundle, m_target, period_len)?;

    let (lp, alpha, beta) = match mode {
        IntegrationSpec::Grouped => (build_grouped(&reduced, &ctx.catalog)?, 1.0, 1.0),
        IntegrationSpec::Chronological(scaling_mode) => {
            let scaling = make_scaling_for(
                reduced.m,
                *scaling_mode,
                ctx.bundle.hours() as f64,
            )?;
            (
                build_chronological(&reduced, &ctx.catalog, &scaling)?,
                scaling.alpha,
                scaling.beta,
            )
        }
    };
    let result = solve(&lp, &ctx.solve_options)?;
    if !result.is_optimal() {
        return Err(Error::NonOptimal(result.status));
    }
    let cost = system_cost(&result, &lp)?;
    let reduced_objective = cost.total - shed_cost(&lp, &result, &reduced, beta, &ctx.catalog);
    let plan = extract_plan(&result, &lp)?;

    let (lost_load_share, lost_load_hours) =
        evaluate_plan(&plan, &ctx.bundle, &ctx.catalog, ctx.voll, &ctx.solve_options)?;

    let reference_objective = reference.objective_excl_shed;
    Ok(EvaluationReport {
        lost_load_share,
        lost_load_hours,
        cost_deviation: (reduced_objective - reference_objective) / reference_objective,
        plan,
        reduced_objective,
        reference_objective,
        solve_time_ratio: result.iterations as f64 / reference.iterations as f64,
        scenario_tag: format!("{}_m{}_{}", method.name(), reduced.m, mode.tag()),
        method: method.name(),
        mode: mode.tag(),
        m: reduced.m,
        alpha,
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Carrier, TechKind, Technology};
    use crate::timeseries::synth_bundle;

    pub(crate) fn desk_catalog(voll: f64) -> Catalog {
        Catalog::new(vec![
            Technology::renewable("pv", 60_000.0, Some(("r1", "pv"))),
            Technology::renewable("wind", 110_000.0, Some(("r1", "wind"))),
            Technology::storage(
                "battery",
                TechKind::ShortTermStorage,
                Carrier::Electricity,
                15_000.0,
                10_000.0,
                0.9,
                0.9,
            )
            .with_max_ep_ratio(10.0),
            Technology::converter("electrolysis", Carrier::Electricity, Carrier::Hydrogen, 35_000.0, 0.7),
            Technology::storage(
                "h2store",
                TechKind::LongTermStorageChainElement,
                Carrier::Hydrogen,
                2_000.0,
                150.0,
                1.0,
                1.0,
            ),
            Technology::converter("h2turbine", Carrier::Hydrogen, Carrier::Electricity, 45_000.0, 0.4),
            Technology::shedding("shed", voll),
        ])
        .unwrap()
    }

    #[test]
    fn identity_resample_is_self_consistent() {
        let bundle = synth_bundle(3, 14 * 24).unwrap();
        let catalog = desk_catalog(11_000.0).with_investment_prorated(bundle.hours());
        let ctx = EvalContext::new(bundle, catalog, 11_000.0);
        let report = run_scenario(
            &ctx,
            &MethodSpec::Resample,
            14 * 24,
            &IntegrationSpec::Chronological(ScalingMode::Rescale),
            24,
        )
        .unwrap();
        assert!(report.lost_load_share.abs() < 1e-6, "{}", report.lost_load_share);
        assert_eq!(report.lost_load_hours, 0);
        assert!(
            report.cost_deviation.abs() < 1e-6,
            "deviation {}",
            report.cost_deviation
        );
    }

    #[test]
    fn zero_plan_sheds_all_demand() {
        let bundle = synth_bundle(3, 48).unwrap();
        let catalog = desk_catalog(11_000.0);
        let mut plan = CapacityPlan::default();
        for t in catalog.techs() {
            if t.kind != TechKind::LoadShedding {
                plan.set(&t.id, crate::model::PlanEntry::default());
            }
        }
        let (share, hours) =
            evaluate_plan(&plan, &bundle, &catalog, 11_000.0, &SolveOptions::default()).unwrap();
        assert!((share - 1.0).abs() < 1e-9);
        assert_eq!(hours, 48);
    }

    #[test]
    fn inadmissible_combination_is_rejected() {
        let bundle = synth_bundle(3, 48).unwrap();
        let ctx = EvalContext::new(bundle, desk_catalog(11_000.0), 11_000.0);
        let err = run_scenario(
            &ctx,
            &MethodSpec::KMeans { center: CenterRule::Centroid, seed: 1 },
            24,
            &IntegrationSpec::Chronological(ScalingMode::Compress),
            24,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Inadmissible { .. }));

        let err = run_scenario(
            &ctx,
            &MethodSpec::Resample,
            24,
            &IntegrationSpec::Grouped,
            24,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Inadmissible { .. }));
    }
}
