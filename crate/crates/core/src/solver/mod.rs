//! Linear-program representation and the embedded simplex solver.
//!
//! The solver is a bounded-variable revised simplex (phase I / phase II) with
//! a sparse LU factorization of the basis, product-form updates between
//! refactorizations, and Dantzig pricing that falls back to Bland's rule
//! when it stalls. Instances can also be exported in CPLEX-LP text format
//! and solutions imported back from `name value` files.

mod lp;
mod lpfile;
mod lu;
mod presolve;
mod simplex;

pub use lp::{Constraint, LinearProgram, Sense, VarId, VarMeta, VarRole};
pub use lpfile::{export_lp, import_solution, write_solution};
pub use simplex::{solve, solve_certified, BasisStatus, Certificate};

/// Termination state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Primal solution of a [`LinearProgram`].
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective value of `primal` (finite when optimal).
    pub objective: f64,
    /// One value per LP variable, in variable order.
    pub primal: Vec<f64>,
    /// Simplex pivots performed (phase I + phase II). Deterministic for a
    /// fixed instance and options.
    pub iterations: u64,
    /// Wall-clock seconds spent in the pivot loop only.
    pub solve_seconds: f64,
    /// Variable names defaulted to zero by [`import_solution`].
    pub warnings: Vec<String>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solver knobs; the defaults suit every instance this crate builds.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Bound violation tolerated on any variable.
    pub feasibility_tol: f64,
    /// Reduced-cost violation tolerated at termination.
    pub optimality_tol: f64,
    pub max_iterations: u64,
    pub pivot_rule: PivotRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Most-negative reduced cost, switching to Bland's least-index rule
    /// after a stall-detection threshold so termination is guaranteed.
    DantzigWithBlandFallback,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            max_iterations: 50_000_000,
            pivot_rule: PivotRule::DantzigWithBlandFallback,
        }
    }
}
