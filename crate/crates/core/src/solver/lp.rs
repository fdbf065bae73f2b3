//! Sparse LP instance: bounded variables, sparse rows, minimization objective.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Index of a variable within a [`LinearProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// What a variable stands for in the energy model; `Other` covers variables
/// created outside the model builders.
#[derive(Debug, Clone, PartialEq)]
pub enum VarRole {
    Generation { tech: String, step: usize },
    Shedding { step: usize },
    StorageIn { tech: String, step: usize },
    StorageOut { tech: String, step: usize },
    StorageLevel { tech: String, step: usize },
    /// Storage state carried across original periods in grouped mode.
    InterPeriodLevel { tech: String, period: usize },
    CapacityPower { tech: String },
    CapacityEnergy { tech: String },
    TotalInvestCost,
    TotalVariableCost,
    Other,
}

/// Name and role of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VarMeta {
    pub name: String,
    pub role: VarRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sense::Le => write!(f, "<="),
            Sense::Eq => write!(f, "="),
            Sense::Ge => write!(f, ">="),
        }
    }
}

/// One sparse constraint row.
#[derive(Debug, Clone)]
pub struct Constraint {
    /// (variable, coefficient) pairs; variables unique within a row.
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A sparse linear program, immutable once built.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    meta: Vec<VarMeta>,
    constraints: Vec<Constraint>,
    by_name: HashMap<String, VarId>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a variable with bounds `[lower, upper]` (infinities allowed) and
    /// objective coefficient `obj`.
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        role: VarRole,
        lower: f64,
        upper: f64,
        obj: f64,
    ) -> VarId {
        let name = name.into();
        let id = VarId(self.lower.len());
        debug_assert!(
            !self.by_name.contains_key(&name),
            "duplicate variable name {name}"
        );
        self.by_name.insert(name.clone(), id);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(obj);
        self.meta.push(VarMeta { name, role });
        id
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(VarId, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn n_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn nnz(&self) -> usize {
        self.constraints.iter().map(|c| c.coeffs.len()).sum()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn meta(&self, id: VarId) -> &VarMeta {
        &self.meta[id.0]
    }

    pub fn metas(&self) -> &[VarMeta] {
        &self.meta
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    /// Variables whose role satisfies `pred`, in variable order.
    pub fn vars_with_role(&self, mut pred: impl FnMut(&VarRole) -> bool) -> Vec<VarId> {
        self.meta
            .iter()
            .enumerate()
            .filter(|(_, m)| pred(&m.role))
            .map(|(i, _)| VarId(i))
            .collect()
    }

    /// Fix a variable to a single value by collapsing its bounds.
    pub fn fix_var(&mut self, id: VarId, value: f64) {
        self.lower[id.0] = value;
        self.upper[id.0] = value;
    }

    pub fn objective_value(&self, primal: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(primal)
            .map(|(c, x)| c * x)
            .sum()
    }

    /// Check structural well-formedness: bounds ordered, coefficients finite,
    /// rows referencing existing variables only.
    pub fn validate(&self) -> Result<()> {
        for (i, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l > u {
                return Err(Error::Validation(format!(
                    "variable '{}' has lower bound {l} above upper bound {u}",
                    self.meta[i].name
                )));
            }
            if l.is_nan() || u.is_nan() {
                return Err(Error::Validation(format!(
                    "variable '{}' has NaN bound",
                    self.meta[i].name
                )));
            }
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(Error::Validation(format!("row {r} has non-finite rhs")));
            }
            for &(v, a) in &c.coeffs {
                if v.0 >= self.n_vars() {
                    return Err(Error::Validation(format!(
                        "row {r} references unknown variable index {}",
                        v.0
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::Validation(format!(
                        "row {r} has non-finite coefficient on '{}'",
                        self.meta[v.0].name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_and_validate() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarRole::Other, 0.0, f64::INFINITY, 1.0);
        let y = lp.add_var("y", VarRole::Other, 0.0, 2.0, -1.0);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        assert_eq!(lp.n_vars(), 2);
        assert_eq!(lp.n_constraints(), 1);
        assert!(lp.validate().is_ok());
        assert_eq!(lp.var_by_name("y"), Some(y));

        lp.fix_var(y, 3.0);
        assert_eq!(lp.lower()[1], 3.0);

        let mut bad = LinearProgram::new();
        bad.add_var("x", VarRole::Other, 1.0, 0.0, 0.0);
        assert!(bad.validate().is_err());
    }
}
