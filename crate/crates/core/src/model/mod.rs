//! Linear capacity-expansion model: technology catalog, step scaling, and
//! the chronological / grouped / dispatch program builders.

mod build;
mod extract;

pub use build::{build_chronological, build_dispatch, build_grouped};
pub use extract::{extract_plan, system_cost, CostBreakdown};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Hours of the year the scaling relation is anchored to.
pub const YEAR_HOURS: f64 = 8760.0;

/// Energy carriers of the test system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Carrier {
    Electricity,
    Hydrogen,
    Methane,
}

impl Carrier {
    pub fn name(&self) -> &'static str {
        match self {
            Carrier::Electricity => "electricity",
            Carrier::Hydrogen => "hydrogen",
            Carrier::Methane => "methane",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "electricity" => Ok(Carrier::Electricity),
            "hydrogen" => Ok(Carrier::Hydrogen),
            "methane" => Ok(Carrier::Methane),
            other => Err(Error::Validation(format!("unknown carrier '{other}'"))),
        }
    }
}

/// Technology classes of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TechKind {
    RenewableGenerator,
    ShortTermStorage,
    /// Storage element of a seasonal fuel chain (hydrogen or methane store).
    LongTermStorageChainElement,
    /// Converts one carrier into another (electrolysis, turbines, methanation).
    Converter,
    LoadShedding,
}

impl TechKind {
    pub fn is_storage(&self) -> bool {
        matches!(
            self,
            TechKind::ShortTermStorage | TechKind::LongTermStorageChainElement
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            TechKind::RenewableGenerator => "renewable_generator",
            TechKind::ShortTermStorage => "short_term_storage",
            TechKind::LongTermStorageChainElement => "long_term_storage_chain_element",
            TechKind::Converter => "converter",
            TechKind::LoadShedding => "load_shedding",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "renewable_generator" => Ok(TechKind::RenewableGenerator),
            "short_term_storage" => Ok(TechKind::ShortTermStorage),
            "long_term_storage_chain_element" => Ok(TechKind::LongTermStorageChainElement),
            "converter" => Ok(TechKind::Converter),
            "load_shedding" => Ok(TechKind::LoadShedding),
            other => Err(Error::Validation(format!("unknown technology kind '{other}'"))),
        }
    }
}

/// One technology of the catalog.
///
/// Costs are annualized: `inv_cost_power` per MW-year, `inv_cost_energy` per
/// MWh-year (storages only), `var_cost` per MWh of activity. Converters are
/// sized and priced on their output; the input carrier is drawn at
/// `output / efficiency_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Technology {
    pub id: String,
    pub kind: TechKind,
    pub inv_cost_power: f64,
    pub inv_cost_energy: f64,
    pub var_cost: f64,
    pub efficiency_in: f64,
    pub efficiency_out: f64,
    /// None = unbounded potential
    pub max_power: Option<f64>,
    pub max_energy: Option<f64>,
    /// energy-to-power cap for storage (battery rule)
    pub max_ep_ratio: Option<f64>,
    /// (region, tech) key into the bundle's capacity factors
    pub cf_ref: Option<(String, String)>,
    /// output carrier (generators, converters, shedding) or stored carrier
    pub carrier: Carrier,
    /// converter input
    pub input_carrier: Option<Carrier>,
}

impl Technology {
    fn validate(&self) -> Result<()> {
        let id_ok = !self.id.is_empty()
            && self.id.chars().next().map(|c| c.is_ascii_alphabetic()).unwrap_or(false)
            && self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !id_ok {
            return Err(Error::Validation(format!(
                "technology id '{}' must be alphanumeric/underscore and start with a letter",
                self.id
            )));
        }
        for (name, v) in [
            ("inv_cost_power", self.inv_cost_power),
            ("inv_cost_energy", self.inv_cost_energy),
            ("var_cost", self.var_cost),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!(
                    "technology '{}': {name} must be a finite non-negative number",
                    self.id
                )));
            }
        }
        for (name, v) in [
            ("efficiency_in", self.efficiency_in),
            ("efficiency_out", self.efficiency_out),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Validation(format!(
                    "technology '{}': {name} must lie in (0, 1]",
                    self.id
                )));
            }
        }
        if let Some(r) = self.max_ep_ratio {
            if !(r > 0.0) {
                return Err(Error::Validation(format!(
                    "technology '{}': max_ep_ratio must be positive",
                    self.id
                )));
            }
        }
        match self.kind {
            TechKind::Converter => {
                if self.input_carrier.is_none() {
                    return Err(Error::Validation(format!(
                        "converter '{}' needs an input carrier",
                        self.id
                    )));
                }
                if self.input_carrier == Some(self.carrier) {
                    return Err(Error::Validation(format!(
                        "converter '{}' cannot convert a carrier into itself",
                        self.id
                    )));
                }
            }
            TechKind::LoadShedding => {
                if self.carrier != Carrier::Electricity {
                    return Err(Error::Validation(format!(
                        "load shedding '{}' must act on electricity",
                        self.id
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Convenience constructor for a renewable generator.
    pub fn renewable(id: &str, inv_cost_power: f64, cf_ref: Option<(&str, &str)>) -> Technology {
        Technology {
            id: id.to_string(),
            kind: TechKind::RenewableGenerator,
            inv_cost_power,
            inv_cost_energy: 0.0,
            var_cost: 0.0,
            efficiency_in: 1.0,
            efficiency_out: 1.0,
            max_power: None,
            max_energy: None,
            max_ep_ratio: None,
            cf_ref: cf_ref.map(|(r, t)| (r.to_string(), t.to_string())),
            carrier: Carrier::Electricity,
            input_carrier: None,
        }
    }

    /// Convenience constructor for a storage technology.
    pub fn storage(
        id: &str,
        kind: TechKind,
        carrier: Carrier,
        inv_cost_power: f64,
        inv_cost_energy: f64,
        efficiency_in: f64,
        efficiency_out: f64,
    ) -> Technology {
        Technology {
            id: id.to_string(),
            kind,
            inv_cost_power,
            inv_cost_energy,
            var_cost: 0.0,
            efficiency_in,
            efficiency_out,
            max_power: None,
            max_energy: None,
            max_ep_ratio: None,
            cf_ref: None,
            carrier,
            input_carrier: None,
        }
    }

    /// Convenience constructor for a converter (priced on output).
    pub fn converter(
        id: &str,
        input: Carrier,
        output: Carrier,
        inv_cost_power: f64,
        efficiency: f64,
    ) -> Technology {
        Technology {
            id: id.to_string(),
            kind: TechKind::Converter,
            inv_cost_power,
            inv_cost_energy: 0.0,
            var_cost: 0.0,
            efficiency_in: 1.0,
            efficiency_out: efficiency,
            max_power: None,
            max_energy: None,
            max_ep_ratio: None,
            cf_ref: None,
            carrier: output,
            input_carrier: Some(input),
        }
    }

    /// Convenience constructor for load shedding at a given value of lost
    /// load.
    pub fn shedding(id: &str, voll: f64) -> Technology {
        Technology {
            id: id.to_string(),
            kind: TechKind::LoadShedding,
            inv_cost_power: 0.0,
            inv_cost_energy: 0.0,
            var_cost: voll,
            efficiency_in: 1.0,
            efficiency_out: 1.0,
            max_power: None,
            max_energy: None,
            max_ep_ratio: None,
            cf_ref: None,
            carrier: Carrier::Electricity,
            input_carrier: None,
        }
    }

    pub fn with_max_power(mut self, v: f64) -> Self {
        self.max_power = Some(v);
        self
    }

    pub fn with_max_energy(mut self, v: f64) -> Self {
        self.max_energy = Some(v);
        self
    }

    pub fn with_max_ep_ratio(mut self, v: f64) -> Self {
        self.max_ep_ratio = Some(v);
        self
    }

    pub fn with_var_cost(mut self, v: f64) -> Self {
        self.var_cost = v;
        self
    }
}

/// Validated, ordered technology catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    techs: Vec<Technology>,
}

impl Catalog {
    pub fn new(techs: Vec<Technology>) -> Result<Self> {
        for t in &techs {
            t.validate()?;
        }
        for (i, a) in techs.iter().enumerate() {
            for b in techs.iter().skip(i + 1) {
                if a.id == b.id {
                    return Err(Error::Validation(format!("duplicate technology id '{}'", a.id)));
                }
            }
        }
        Ok(Catalog { techs })
    }

    pub fn techs(&self) -> &[Technology] {
        &self.techs
    }

    pub fn get(&self, id: &str) -> Option<&Technology> {
        self.techs.iter().find(|t| t.id == id)
    }

    pub fn storages(&self) -> impl Iterator<Item = &Technology> {
        self.techs.iter().filter(|t| t.kind.is_storage())
    }

    /// Catalog without the seasonal fuel chain: drops every technology that
    /// stores or converts a non-electricity carrier.
    pub fn without_seasonal_storage(&self) -> Catalog {
        let techs = self
            .techs
            .iter()
            .filter(|t| {
                t.carrier == Carrier::Electricity
                    && t.input_carrier.map_or(true, |c| c == Carrier::Electricity)
            })
            .cloned()
            .collect();
        Catalog { techs }
    }

    /// Catalog with every storage removed (scaling-invariance experiments).
    pub fn without_storage(&self) -> Catalog {
        Catalog {
            techs: self.techs.iter().filter(|t| !t.kind.is_storage()).cloned().collect(),
        }
    }

    /// Catalog with annualized investment costs prorated to a horizon of
    /// `hours`. Keeps shedding economics consistent when a bundle covers
    /// less than a year.
    pub fn with_investment_prorated(&self, hours: usize) -> Catalog {
        let factor = hours as f64 / YEAR_HOURS;
        let techs = self
            .techs
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.inv_cost_power *= factor;
                t.inv_cost_energy *= factor;
                t
            })
            .collect();
        Catalog { techs }
    }
}

/// Step scaling of a chronological sequence: each of the `m` steps stands
/// for `alpha` hours, and flows outside balances and capacity limits are
/// scaled up by `beta` so one model year equals `total_hours`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPolicy {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub total_hours: f64,
}

/// How to pick the (α, β) pair for a given reduced length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingMode {
    /// α = 1: hourly steps, year compressed, β = total/m.
    Compress,
    /// β = 1: steps re-scaled to cover the year, α = total/m.
    Rescale,
    /// given α, β from the scaling relation.
    Blend(f64),
}

impl ScalingMode {
    pub fn tag(&self) -> String {
        match self {
            ScalingMode::Compress => "compress".to_string(),
            ScalingMode::Rescale => "rescale".to_string(),
            ScalingMode::Blend(a) => format!("blend{a:.4}"),
        }
    }
}

/// Scaling for a reduced series standing for the standard year of 8,760
/// hours.
pub fn make_scaling(m: usize, mode: ScalingMode) -> Result<ScalingPolicy> {
    make_scaling_for(m, mode, YEAR_HOURS)
}

/// Scaling against an arbitrary horizon (desk-scale bundles shorter than a
/// year use their own length).
pub fn make_scaling_for(m: usize, mode: ScalingMode, total_hours: f64) -> Result<ScalingPolicy> {
    if m == 0 || (m as f64) > total_hours {
        return Err(Error::Argument(format!(
            "scaling: m = {m} outside [1, {total_hours}]"
        )));
    }
    let alpha_max = total_hours / m as f64;
    let alpha = match mode {
        ScalingMode::Compress => 1.0,
        ScalingMode::Rescale => alpha_max,
        ScalingMode::Blend(a) => {
            if !(1.0 - 1e-9..=alpha_max + 1e-9).contains(&a) {
                return Err(Error::Argument(format!(
                    "scaling: alpha = {a} outside [1, {alpha_max}]"
                )));
            }
            a.clamp(1.0, alpha_max)
        }
    };
    let beta = total_hours / (m as f64 * alpha);
    Ok(ScalingPolicy { m, alpha, beta, total_hours })
}

impl ScalingPolicy {
    /// α = β = 1 for a full-resolution horizon of `m` hours.
    pub fn identity(m: usize) -> ScalingPolicy {
        ScalingPolicy { m, alpha: 1.0, beta: 1.0, total_hours: m as f64 }
    }
}

/// Power and energy capacity per technology.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanEntry {
    pub power_mw: f64,
    pub energy_mwh: f64,
}

/// The capacities decided by an expansion solve, keyed by technology id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CapacityPlan {
    pub entries: BTreeMap<String, PlanEntry>,
}

impl CapacityPlan {
    pub fn get(&self, id: &str) -> PlanEntry {
        self.entries.get(id).copied().unwrap_or_default()
    }

    pub fn set(&mut self, id: &str, entry: PlanEntry) {
        self.entries.insert(id.to_string(), entry);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_modes_match_the_relation() {
        let s = make_scaling(384, ScalingMode::Compress).unwrap();
        assert_eq!(s.alpha, 1.0);
        assert!((s.beta - 8760.0 / 384.0).abs() < 1e-12);
        assert!((s.beta - 22.8125).abs() < 1e-12);

        let s = make_scaling(8760, ScalingMode::Rescale).unwrap();
        assert_eq!(s.alpha, 1.0);
        assert_eq!(s.beta, 1.0);

        let s = make_scaling(4380, ScalingMode::Blend(2.0)).unwrap();
        assert!((s.beta - 1.0).abs() < 1e-12);

        assert!(make_scaling(384, ScalingMode::Blend(30.0)).is_err());
        assert!(make_scaling(0, ScalingMode::Compress).is_err());
    }

    #[test]
    fn catalog_rejects_bad_technologies() {
        let good = Technology::renewable("pv", 10.0, None);
        assert!(Catalog::new(vec![good.clone(), good]).is_err());

        let mut bad = Technology::renewable("x", 10.0, None);
        bad.efficiency_out = 0.0;
        assert!(Catalog::new(vec![bad]).is_err());

        let mut conv = Technology::converter("ely", Carrier::Electricity, Carrier::Hydrogen, 5.0, 0.7);
        conv.input_carrier = None;
        assert!(Catalog::new(vec![conv]).is_err());

        let mut shed = Technology::shedding("shed", 1000.0);
        shed.carrier = Carrier::Hydrogen;
        assert!(Catalog::new(vec![shed]).is_err());
    }

    #[test]
    fn seasonal_chain_filter_drops_fuel_technologies() {
        let catalog = Catalog::new(vec![
            Technology::renewable("pv", 10.0, None),
            Technology::storage(
                "battery",
                TechKind::ShortTermStorage,
                Carrier::Electricity,
                1.0,
                1.0,
                0.9,
                0.9,
            ),
            Technology::converter("ely", Carrier::Electricity, Carrier::Hydrogen, 5.0, 0.7),
            Technology::storage(
                "h2store",
                TechKind::LongTermStorageChainElement,
                Carrier::Hydrogen,
                0.5,
                0.01,
                1.0,
                1.0,
            ),
            Technology::converter("h2turbine", Carrier::Hydrogen, Carrier::Electricity, 4.0, 0.4),
            Technology::shedding("shed", 11_000.0),
        ])
        .unwrap();
        let trimmed = catalog.without_seasonal_storage();
        let ids: Vec<&str> = trimmed.techs().iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, vec!["pv", "battery", "shed"]);
        let no_storage = catalog.without_storage();
        assert!(no_storage.techs().iter().all(|t| !t.kind.is_storage()));
    }
}
