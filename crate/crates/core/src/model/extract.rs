//! Reading capacities and cost components out of a solved program.

use crate::error::{Error, Result};
use crate::model::CapacityPlan;
use crate::solver::{LinearProgram, SolveResult, VarRole};

/// Tolerance for clamping slightly negative capacity values to zero.
const CLAMP_TOL: f64 = 1e-7;

/// Read the capacity plan from an optimal solve.
pub fn extract_plan(result: &SolveResult, lp: &LinearProgram) -> Result<CapacityPlan> {
    if !result.is_optimal() {
        return Err(Error::NonOptimal(result.status));
    }
    let mut plan = CapacityPlan::default();
    for (j, meta) in lp.metas().iter().enumerate() {
        let (tech, is_power) = match &meta.role {
            VarRole::CapacityPower { tech } => (tech, true),
            VarRole::CapacityEnergy { tech } => (tech, false),
            _ => continue,
        };
        let raw = result.primal[j];
        let value = if raw < 0.0 {
            if raw < -CLAMP_TOL {
                return Err(Error::Internal(format!(
                    "capacity variable '{}' is {raw}, below the clamp tolerance",
                    meta.name
                )));
            }
            0.0
        } else {
            raw
        };
        let mut entry = plan.get(tech);
        if is_power {
            entry.power_mw = value;
        } else {
            entry.energy_mwh = value;
        }
        plan.set(tech, entry);
    }
    Ok(plan)
}

/// Total, investment, and variable cost of an optimal solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub total: f64,
    pub invest: f64,
    pub variable: f64,
}

pub fn system_cost(result: &SolveResult, lp: &LinearProgram) -> Result<CostBreakdown> {
    if !result.is_optimal() {
        return Err(Error::NonOptimal(result.status));
    }
    let mut invest = None;
    let mut variable = None;
    for (j, meta) in lp.metas().iter().enumerate() {
        match meta.role {
            VarRole::TotalInvestCost => invest = Some(result.primal[j]),
            VarRole::TotalVariableCost => variable = Some(result.primal[j]),
            _ => {}
        }
    }
    let invest = invest.ok_or_else(|| Error::Internal("program lacks an invest-cost variable".into()))?;
    let variable =
        variable.ok_or_else(|| Error::Internal("program lacks a variable-cost variable".into()))?;
    Ok(CostBreakdown { total: result.objective, invest, variable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_chronological, Catalog, ScalingPolicy, Technology};
    use crate::reduction::ReducedSeries;
    use crate::solver::{solve, SolveOptions, SolveStatus};
    use crate::timeseries::{CfSeries, HourlySeries, SeriesBundle, Unit};

    fn instance() -> (LinearProgram, SolveResult) {
        let bundle = SeriesBundle::new(
            HourlySeries::new(vec![10.0; 4], Unit::PowerMw, "demand").unwrap(),
            vec![CfSeries {
                region: "r1".into(),
                tech: "gen".into(),
                series: HourlySeries::new(vec![1.0; 4], Unit::Fraction, "cf").unwrap(),
            }],
        )
        .unwrap();
        let reduced = ReducedSeries {
            bundle: bundle.clone(),
            m: 4,
            weights: vec![1.0; 4],
            grouping: None,
            source_hours: 4,
            method_tag: "test".into(),
        };
        let catalog =
            Catalog::new(vec![Technology::renewable("gen", 1.0, Some(("r1", "gen")))]).unwrap();
        let lp = build_chronological(&reduced, &catalog, &ScalingPolicy::identity(4)).unwrap();
        let r = solve(&lp, &SolveOptions::default()).unwrap();
        (lp, r)
    }

    #[test]
    fn plan_and_costs_from_analytic_instance() {
        let (lp, r) = instance();
        assert_eq!(r.status, SolveStatus::Optimal);
        let plan = extract_plan(&r, &lp).unwrap();
        assert!((plan.get("gen").power_mw - 10.0).abs() < 1e-7);

        let cost = system_cost(&r, &lp).unwrap();
        assert!((cost.total - 10.0).abs() < 1e-7);
        assert!((cost.invest - 10.0).abs() < 1e-7);
        assert!(cost.variable.abs() < 1e-9);
        assert!((cost.total - cost.invest - cost.variable).abs() <= 1e-6 * (1.0 + cost.total.abs()));
    }

    #[test]
    fn non_optimal_results_are_rejected() {
        let (lp, mut r) = instance();
        r.status = SolveStatus::IterationLimit;
        assert!(matches!(extract_plan(&r, &lp), Err(Error::NonOptimal(_))));
        assert!(matches!(system_cost(&r, &lp), Err(Error::NonOptimal(_))));
    }

    #[test]
    fn tiny_negatives_clamp_to_zero() {
        let (lp, mut r) = instance();
        let capa = lp.var_by_name("capa_pow_gen").unwrap();
        r.primal[capa.0] = -1e-9;
        let plan = extract_plan(&r, &lp).unwrap();
        assert_eq!(plan.get("gen").power_mw, 0.0);

        r.primal[capa.0] = -1e-3;
        assert!(extract_plan(&r, &lp).is_err());
    }
}
