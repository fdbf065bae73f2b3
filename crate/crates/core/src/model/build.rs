//! Program builders: chronological sequence (α/β scaling), grouped periods
//! with inter-period storage linking, and fixed-capacity dispatch.
//!
//! Per time-step structure: one energy balance per carrier in use, one
//! storage balance per storage, one capacity row per technology activity,
//! one energy-capacity row per storage level. Total investment and variable
//! cost are explicit variables defined by one row each and form the
//! objective. The storage balance carries charge and discharge efficiencies;
//! demand and power-capacity rows are scaled by α, flows in the variable-cost
//! row by β (chronological) or by the period weight (grouped).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{CapacityPlan, Carrier, Catalog, ScalingPolicy, TechKind, Technology};
use crate::reduction::ReducedSeries;
use crate::solver::{LinearProgram, Sense, VarId, VarRole};
use crate::timeseries::SeriesBundle;

/// Per-technology variable ids of one model instance.
struct TechVars {
    capa_power: Option<VarId>,
    capa_energy: Option<VarId>,
    /// activity per step: generation, conversion output, or shedding
    activity: Vec<VarId>,
    st_in: Vec<VarId>,
    st_out: Vec<VarId>,
    st_level: Vec<VarId>,
    /// inter-period state per original period (grouped mode)
    inter: Vec<VarId>,
}

struct BuildContext<'a> {
    catalog: &'a Catalog,
    bundle: &'a SeriesBundle,
    m: usize,
    alpha: f64,
    /// cost weight per step: β (chronological) or the period weight (grouped)
    cost_weight: Vec<f64>,
    grouped: Option<&'a crate::reduction::PeriodGrouping>,
    plan: Option<(&'a CapacityPlan, f64)>,
    carriers: Vec<Carrier>,
}

/// Expansion program over a chronological sequence (Eqs-style balance,
/// cyclic storage, α/β scaling).
pub fn build_chronological(
    reduced: &ReducedSeries,
    catalog: &Catalog,
    scaling: &ScalingPolicy,
) -> Result<LinearProgram> {
    reduced.validate()?;
    if scaling.m != reduced.m {
        return Err(Error::Build(format!(
            "scaling is for m = {}, reduced series has m = {}",
            scaling.m, reduced.m
        )));
    }
    if !reduced.has_uniform_weights() {
        return Err(Error::Build(
            "chronological integration requires uniform step weights".into(),
        ));
    }
    let ctx = BuildContext {
        catalog,
        bundle: &reduced.bundle,
        m: reduced.m,
        alpha: scaling.alpha,
        cost_weight: vec![scaling.beta; reduced.m],
        grouped: None,
        plan: None,
        carriers: carriers_in_use(catalog),
    };
    build(&ctx)
}

/// Expansion program over grouped periods with the inter-period storage
/// state: relative in-period levels, a yearly cycle on the accumulated
/// state, and combined capacity limits at every original period and step.
pub fn build_grouped(reduced: &ReducedSeries, catalog: &Catalog) -> Result<LinearProgram> {
    reduced.validate()?;
    let grouping = reduced
        .grouping
        .as_ref()
        .ok_or_else(|| Error::Build("grouped integration requires a period grouping".into()))?;
    for &w in &grouping.period_weight {
        if (w - w.round()).abs() > 1e-9 {
            return Err(Error::Build(format!(
                "grouped integration requires integral period weights, found {w}"
            )));
        }
    }
    let mut cost_weight = Vec::with_capacity(reduced.m);
    for p in 0..grouping.n_periods {
        for _ in 0..grouping.period_len {
            cost_weight.push(grouping.period_weight[p]);
        }
    }
    let ctx = BuildContext {
        catalog,
        bundle: &reduced.bundle,
        m: reduced.m,
        alpha: 1.0,
        cost_weight,
        grouped: Some(grouping),
        plan: None,
        carriers: carriers_in_use(catalog),
    };
    build(&ctx)
}

/// Full-resolution dispatch with capacities fixed to a plan and shedding
/// priced at `voll`.
pub fn build_dispatch(
    full_bundle: &SeriesBundle,
    catalog: &Catalog,
    plan: &CapacityPlan,
    voll: f64,
) -> Result<LinearProgram> {
    for tech in catalog.techs() {
        if tech.kind == TechKind::LoadShedding {
            continue;
        }
        let entry = plan.entries.get(&tech.id).ok_or_else(|| {
            Error::Build(format!("plan does not cover technology '{}'", tech.id))
        })?;
        if let Some(max) = tech.max_power {
            if entry.power_mw > max * (1.0 + 1e-9) + 1e-9 {
                return Err(Error::Build(format!(
                    "plan power {} exceeds potential {max} for '{}'",
                    entry.power_mw, tech.id
                )));
            }
        }
        if let Some(max) = tech.max_energy {
            if tech.kind.is_storage() && entry.energy_mwh > max * (1.0 + 1e-9) + 1e-9 {
                return Err(Error::Build(format!(
                    "plan energy {} exceeds potential {max} for '{}'",
                    entry.energy_mwh, tech.id
                )));
            }
        }
    }
    let ctx = BuildContext {
        catalog,
        bundle: full_bundle,
        m: full_bundle.hours(),
        alpha: 1.0,
        cost_weight: vec![1.0; full_bundle.hours()],
        grouped: None,
        plan: Some((plan, voll)),
        carriers: carriers_in_use(catalog),
    };
    build(&ctx)
}

fn carriers_in_use(catalog: &Catalog) -> Vec<Carrier> {
    let mut carriers = vec![Carrier::Electricity];
    for t in catalog.techs() {
        for c in [Some(t.carrier), t.input_carrier].into_iter().flatten() {
            if !carriers.contains(&c) {
                carriers.push(c);
            }
        }
    }
    carriers
}

fn activity_role(tech: &Technology, step: usize) -> VarRole {
    match tech.kind {
        TechKind::LoadShedding => VarRole::Shedding { step },
        _ => VarRole::Generation { tech: tech.id.clone(), step },
    }
}

fn build(ctx: &BuildContext) -> Result<LinearProgram> {
    let mut lp = LinearProgram::new();
    let m = ctx.m;

    // Pre-resolve capacity-factor slices so a missing reference fails early.
    let mut cf_series: Vec<Option<&[f64]>> = Vec::with_capacity(ctx.catalog.techs().len());
    for tech in ctx.catalog.techs() {
        match &tech.cf_ref {
            Some((region, tid)) => {
                let series = ctx.bundle.cf(region, tid).ok_or_else(|| {
                    Error::Build(format!(
                        "technology '{}' references capacity factors ({region}, {tid}) missing from the bundle",
                        tech.id
                    ))
                })?;
                cf_series.push(Some(series.values()));
            }
            None => cf_series.push(None),
        }
    }

    // Capacity variables, investment and variable cost.
    let mut vars: Vec<TechVars> = Vec::with_capacity(ctx.catalog.techs().len());
    for tech in ctx.catalog.techs() {
        let mut tv = TechVars {
            capa_power: None,
            capa_energy: None,
            activity: Vec::new(),
            st_in: Vec::new(),
            st_out: Vec::new(),
            st_level: Vec::new(),
            inter: Vec::new(),
        };
        if tech.kind != TechKind::LoadShedding {
            let (mut lo, mut hi) = (0.0, tech.max_power.unwrap_or(f64::INFINITY));
            if let Some((plan, _)) = ctx.plan {
                let v = plan.get(&tech.id).power_mw;
                lo = v;
                hi = v;
            }
            tv.capa_power = Some(lp.add_var(
                format!("capa_pow_{}", tech.id),
                VarRole::CapacityPower { tech: tech.id.clone() },
                lo,
                hi,
                0.0,
            ));
            if tech.kind.is_storage() {
                let (mut lo, mut hi) = (0.0, tech.max_energy.unwrap_or(f64::INFINITY));
                if let Some((plan, _)) = ctx.plan {
                    let v = plan.get(&tech.id).energy_mwh;
                    lo = v;
                    hi = v;
                }
                tv.capa_energy = Some(lp.add_var(
                    format!("capa_en_{}", tech.id),
                    VarRole::CapacityEnergy { tech: tech.id.clone() },
                    lo,
                    hi,
                    0.0,
                ));
            }
        }
        vars.push(tv);
    }
    let invc = lp.add_var("invc", VarRole::TotalInvestCost, 0.0, f64::INFINITY, 1.0);
    let varc = lp.add_var("varc", VarRole::TotalVariableCost, 0.0, f64::INFINITY, 1.0);

    // Per-step variables in time order.
    let grouped = ctx.grouped.is_some();
    for t in 0..m {
        for (tech, tv) in ctx.catalog.techs().iter().zip(vars.iter_mut()) {
            match tech.kind {
                TechKind::RenewableGenerator | TechKind::Converter => {
                    tv.activity.push(lp.add_var(
                        format!("gen_{}_t{t}", tech.id),
                        activity_role(tech, t),
                        0.0,
                        f64::INFINITY,
                        0.0,
                    ));
                }
                TechKind::LoadShedding => {
                    tv.activity.push(lp.add_var(
                        format!("shed_{}_t{t}", tech.id),
                        activity_role(tech, t),
                        0.0,
                        f64::INFINITY,
                        0.0,
                    ));
                }
                TechKind::ShortTermStorage | TechKind::LongTermStorageChainElement => {
                    tv.st_in.push(lp.add_var(
                        format!("stin_{}_t{t}", tech.id),
                        VarRole::StorageIn { tech: tech.id.clone(), step: t },
                        0.0,
                        f64::INFINITY,
                        0.0,
                    ));
                    tv.st_out.push(lp.add_var(
                        format!("stout_{}_t{t}", tech.id),
                        VarRole::StorageOut { tech: tech.id.clone(), step: t },
                        0.0,
                        f64::INFINITY,
                        0.0,
                    ));
                    let lower = if grouped { f64::NEG_INFINITY } else { 0.0 };
                    tv.st_level.push(lp.add_var(
                        format!("lvl_{}_t{t}", tech.id),
                        VarRole::StorageLevel { tech: tech.id.clone(), step: t },
                        lower,
                        f64::INFINITY,
                        0.0,
                    ));
                }
            }
        }
    }

    // Inter-period state variables per storage (grouped mode).
    if let Some(g) = ctx.grouped {
        let n_original = g.assignment.len();
        for (tech, tv) in ctx.catalog.techs().iter().zip(vars.iter_mut()) {
            if tech.kind.is_storage() {
                for d in 0..n_original {
                    tv.inter.push(lp.add_var(
                        format!("inter_{}_d{d}", tech.id),
                        VarRole::InterPeriodLevel { tech: tech.id.clone(), period: d },
                        f64::NEG_INFINITY,
                        f64::INFINITY,
                        0.0,
                    ));
                }
            }
        }
    }

    // Per-step rows: carrier balances, storage balances, capacity limits.
    let demand = ctx.bundle.demand().values();
    for t in 0..m {
        let mut balance: BTreeMap<Carrier, Vec<(VarId, f64)>> = BTreeMap::new();
        for c in &ctx.carriers {
            balance.insert(*c, Vec::new());
        }
        for ((tech, tv), cf) in ctx.catalog.techs().iter().zip(&vars).zip(&cf_series) {
            match tech.kind {
                TechKind::RenewableGenerator | TechKind::LoadShedding => {
                    let a = tv.activity[t];
                    balance.get_mut(&tech.carrier).expect("carrier registered").push((a, 1.0));
                    if tech.kind == TechKind::RenewableGenerator {
                        let cf_t = cf.map(|v| v[t]).unwrap_or(1.0);
                        let capa = tv.capa_power.expect("generator has power capacity");
                        let mut coeffs = vec![(a, 1.0)];
                        if cf_t != 0.0 {
                            coeffs.push((capa, -cf_t * ctx.alpha));
                        }
                        lp.add_constraint(coeffs, Sense::Le, 0.0);
                    }
                }
                TechKind::Converter => {
                    let a = tv.activity[t];
                    balance.get_mut(&tech.carrier).expect("carrier registered").push((a, 1.0));
                    let input = tech.input_carrier.expect("validated converter input");
                    balance
                        .get_mut(&input)
                        .expect("carrier registered")
                        .push((a, -1.0 / tech.efficiency_out));
                    let capa = tv.capa_power.expect("converter has power capacity");
                    lp.add_constraint(vec![(a, 1.0), (capa, -ctx.alpha)], Sense::Le, 0.0);
                }
                TechKind::ShortTermStorage | TechKind::LongTermStorageChainElement => {
                    let (s_in, s_out, lvl) = (tv.st_in[t], tv.st_out[t], tv.st_level[t]);
                    let bal = balance.get_mut(&tech.carrier).expect("carrier registered");
                    bal.push((s_out, 1.0));
                    bal.push((s_in, -1.0));

                    // storage balance: lvl_t - lvl_prev - η_in·in + out/η_out = 0
                    let mut coeffs = vec![
                        (lvl, 1.0),
                        (s_in, -tech.efficiency_in),
                        (s_out, 1.0 / tech.efficiency_out),
                    ];
                    match ctx.grouped {
                        None => {
                            let prev = tv.st_level[(t + m - 1) % m];
                            coeffs.push((prev, -1.0));
                        }
                        Some(g) => {
                            // within-period chain; the first step starts at 0
                            if t % g.period_len != 0 {
                                coeffs.push((tv.st_level[t - 1], -1.0));
                            }
                        }
                    }
                    lp.add_constraint(coeffs, Sense::Eq, 0.0);

                    let capa = tv.capa_power.expect("storage has power capacity");
                    lp.add_constraint(
                        vec![(s_in, 1.0), (s_out, 1.0), (capa, -ctx.alpha)],
                        Sense::Le,
                        0.0,
                    );
                    if ctx.grouped.is_none() {
                        let size = tv.capa_energy.expect("storage has energy capacity");
                        lp.add_constraint(vec![(lvl, 1.0), (size, -1.0)], Sense::Le, 0.0);
                    }
                }
            }
        }
        for carrier in &ctx.carriers {
            let coeffs = balance.remove(carrier).expect("carrier registered");
            let rhs = if *carrier == Carrier::Electricity {
                demand[t] * ctx.alpha
            } else {
                0.0
            };
            if coeffs.is_empty() && rhs == 0.0 {
                continue;
            }
            lp.add_constraint(coeffs, Sense::Eq, rhs);
        }
    }

    // Inter-period linking and combined capacity limits (grouped mode).
    if let Some(g) = ctx.grouped {
        let n_original = g.assignment.len();
        for (tech, tv) in ctx.catalog.techs().iter().zip(&vars) {
            if !tech.kind.is_storage() {
                continue;
            }
            for d in 0..n_original {
                let rep = g.assignment[d];
                let delta = tv.st_level[rep * g.period_len + g.period_len - 1];
                // E[d+1] = E[d] + net charge of the representative of d
                lp.add_constraint(
                    vec![
                        (tv.inter[(d + 1) % n_original], 1.0),
                        (tv.inter[d], -1.0),
                        (delta, -1.0),
                    ],
                    Sense::Eq,
                    0.0,
                );
            }
            let size = tv.capa_energy.expect("storage has energy capacity");
            for d in 0..n_original {
                let rep = g.assignment[d];
                for u in 0..g.period_len {
                    let lvl = tv.st_level[rep * g.period_len + u];
                    lp.add_constraint(
                        vec![(tv.inter[d], 1.0), (lvl, 1.0)],
                        Sense::Ge,
                        0.0,
                    );
                    lp.add_constraint(
                        vec![(tv.inter[d], 1.0), (lvl, 1.0), (size, -1.0)],
                        Sense::Le,
                        0.0,
                    );
                }
            }
        }
    }

    // Energy-to-power caps.
    for (tech, tv) in ctx.catalog.techs().iter().zip(&vars) {
        if let (Some(ratio), Some(size), Some(power)) =
            (tech.max_ep_ratio, tv.capa_energy, tv.capa_power)
        {
            lp.add_constraint(vec![(size, 1.0), (power, -ratio)], Sense::Le, 0.0);
        }
    }

    // Cost definitions.
    let mut inv_coeffs: Vec<(VarId, f64)> = Vec::new();
    for (tech, tv) in ctx.catalog.techs().iter().zip(&vars) {
        if let Some(capa) = tv.capa_power {
            if tech.inv_cost_power != 0.0 {
                inv_coeffs.push((capa, tech.inv_cost_power));
            }
        }
        if let Some(size) = tv.capa_energy {
            if tech.inv_cost_energy != 0.0 {
                inv_coeffs.push((size, tech.inv_cost_energy));
            }
        }
    }
    inv_coeffs.push((invc, -1.0));
    lp.add_constraint(inv_coeffs, Sense::Eq, 0.0);

    let mut var_coeffs: Vec<(VarId, f64)> = Vec::new();
    for (tech, tv) in ctx.catalog.techs().iter().zip(&vars) {
        let unit_cost = match (tech.kind, ctx.plan) {
            (TechKind::LoadShedding, Some((_, voll))) => voll,
            _ => tech.var_cost,
        };
        if unit_cost == 0.0 {
            continue;
        }
        match tech.kind {
            TechKind::ShortTermStorage | TechKind::LongTermStorageChainElement => {
                for t in 0..m {
                    var_coeffs.push((tv.st_out[t], unit_cost * ctx.cost_weight[t]));
                }
            }
            _ => {
                for t in 0..m {
                    var_coeffs.push((tv.activity[t], unit_cost * ctx.cost_weight[t]));
                }
            }
        }
    }
    var_coeffs.push((varc, -1.0));
    lp.add_constraint(var_coeffs, Sense::Eq, 0.0);

    lp.validate()?;
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_scaling_for, PlanEntry, ScalingMode};
    use crate::solver::{solve, SolveOptions, SolveStatus};
    use crate::timeseries::{CfSeries, HourlySeries, SeriesBundle, Unit};

    fn flat_bundle(hours: usize, demand: f64, cf: f64) -> SeriesBundle {
        SeriesBundle::new(
            HourlySeries::new(vec![demand; hours], Unit::PowerMw, "demand").unwrap(),
            vec![CfSeries {
                region: "r1".into(),
                tech: "gen".into(),
                series: HourlySeries::new(vec![cf; hours], Unit::Fraction, "cf").unwrap(),
            }],
        )
        .unwrap()
    }

    fn chronological_identity(bundle: &SeriesBundle, tag: &str) -> ReducedSeries {
        ReducedSeries {
            bundle: bundle.clone(),
            m: bundle.hours(),
            weights: vec![1.0; bundle.hours()],
            grouping: None,
            source_hours: bundle.hours(),
            method_tag: tag.to_string(),
        }
    }

    fn small_catalog() -> Catalog {
        Catalog::new(vec![
            Technology::renewable("gen", 1.0, Some(("r1", "gen"))),
            Technology::storage(
                "store",
                TechKind::ShortTermStorage,
                Carrier::Electricity,
                1.0,
                1.0,
                1.0,
                1.0,
            ),
        ])
        .unwrap()
    }

    #[test]
    fn variable_and_row_counts_for_two_steps() {
        // 1 generator + 1 storage over m = 2:
        // 2·(1 activity + 3 storage) + 3 capacity + 2 cost = 13 variables;
        // 2 energy balances + 2 storage balances + 6 capacity rows + 2 cost rows.
        let bundle = flat_bundle(2, 10.0, 1.0);
        let reduced = chronological_identity(&bundle, "test");
        let scaling = ScalingPolicy::identity(2);
        let lp = build_chronological(&reduced, &small_catalog(), &scaling).unwrap();
        assert_eq!(lp.n_vars(), 13);
        assert_eq!(lp.n_constraints(), 12);
    }

    #[test]
    fn zero_demand_solves_to_zero() {
        let bundle = flat_bundle(4, 0.0, 1.0);
        let reduced = chronological_identity(&bundle, "test");
        let lp =
            build_chronological(&reduced, &small_catalog(), &ScalingPolicy::identity(4)).unwrap();
        let r = solve(&lp, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.objective.abs() < 1e-9);
    }

    #[test]
    fn constant_demand_analytic_optimum() {
        // demand 10 MW, cf = 1, invC = 1, varC = 0, α = β = 1:
        // Capa_gen = 10, objective = 10, regardless of m.
        let bundle = flat_bundle(48, 10.0, 1.0);
        let reduced = chronological_identity(&bundle, "test");
        let catalog = Catalog::new(vec![Technology::renewable("gen", 1.0, Some(("r1", "gen")))])
            .unwrap();
        let lp =
            build_chronological(&reduced, &catalog, &ScalingPolicy::identity(48)).unwrap();
        let r = solve(&lp, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 10.0).abs() < 1e-7, "{}", r.objective);
        let capa = lp.var_by_name("capa_pow_gen").unwrap();
        assert!((r.primal[capa.0] - 10.0).abs() < 1e-7);
    }

    #[test]
    fn missing_cf_reference_is_a_build_error() {
        let bundle = flat_bundle(2, 1.0, 1.0);
        let reduced = chronological_identity(&bundle, "test");
        let catalog =
            Catalog::new(vec![Technology::renewable("gen", 1.0, Some(("rX", "gen")))]).unwrap();
        assert!(matches!(
            build_chronological(&reduced, &catalog, &ScalingPolicy::identity(2)),
            Err(Error::Build(_))
        ));
    }

    #[test]
    fn scaling_m_mismatch_is_a_build_error() {
        let bundle = flat_bundle(4, 1.0, 1.0);
        let reduced = chronological_identity(&bundle, "test");
        let scaling = make_scaling_for(2, ScalingMode::Compress, 4.0).unwrap();
        assert!(build_chronological(&reduced, &small_catalog(), &scaling).is_err());
    }

    #[test]
    fn grouped_requires_integral_weights() {
        let bundle = flat_bundle(48, 1.0, 0.5);
        let mut reduced = ReducedSeries::identity_grouped(&bundle, 24).unwrap();
        reduced.grouping.as_mut().unwrap().period_weight = vec![1.5, 0.5];
        reduced.weights = vec![1.5; 24].into_iter().chain(vec![0.5; 24]).collect();
        assert!(build_grouped(&reduced, &small_catalog()).is_err());
    }

    #[test]
    fn dispatch_with_zero_plan_sheds_everything() {
        let bundle = flat_bundle(6, 5.0, 1.0);
        let catalog = Catalog::new(vec![
            Technology::renewable("gen", 1.0, Some(("r1", "gen"))),
            Technology::shedding("shed", 100.0),
        ])
        .unwrap();
        let mut plan = CapacityPlan::default();
        plan.set("gen", PlanEntry { power_mw: 0.0, energy_mwh: 0.0 });
        let lp = build_dispatch(&bundle, &catalog, &plan, 100.0).unwrap();
        let r = solve(&lp, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        // all demand shed at voll
        assert!((r.objective - 6.0 * 5.0 * 100.0).abs() < 1e-6);
    }

    #[test]
    fn dispatch_rejects_plan_beyond_potential() {
        let bundle = flat_bundle(2, 5.0, 1.0);
        let catalog = Catalog::new(vec![
            Technology::renewable("gen", 1.0, Some(("r1", "gen"))).with_max_power(3.0)
        ])
        .unwrap();
        let mut plan = CapacityPlan::default();
        plan.set("gen", PlanEntry { power_mw: 5.0, energy_mwh: 0.0 });
        assert!(build_dispatch(&bundle, &catalog, &plan, 100.0).is_err());
    }
}
