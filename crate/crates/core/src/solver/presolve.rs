//! Presolve: substitute fixed variables, drop empty rows, fold singleton
//! rows into bounds. Nothing more — the solver is meant to see the model
//! structure the builders produce.

use crate::error::Result;
use crate::solver::lp::{LinearProgram, Sense, VarId};
use crate::solver::simplex::solve_reduced;
use crate::solver::{SolveOptions, SolveResult, SolveStatus};

const FOLD_TOL: f64 = 1e-9;

pub(crate) fn solve_with_presolve(lp: &LinearProgram, opts: &SolveOptions) -> Result<SolveResult> {
    let n = lp.n_vars();
    let mut lower = lp.lower().to_vec();
    let mut upper = lp.upper().to_vec();
    let mut fixed = vec![false; n];
    let mut row_dropped = vec![false; lp.n_constraints()];
    let mut infeasible = false;

    for j in 0..n {
        if lower[j] == upper[j] {
            fixed[j] = true;
        }
    }

    // Cascade: substituting fixed variables can turn rows into singletons,
    // folding singletons can fix further variables.
    loop {
        let mut changed = false;
        for (r, c) in lp.constraints().iter().enumerate() {
            if row_dropped[r] || infeasible {
                continue;
            }
            let mut rhs = c.rhs;
            let mut live: Option<(usize, f64)> = None;
            let mut live_count = 0;
            for &(VarId(j), a) in &c.coeffs {
                if fixed[j] {
                    rhs -= a * lower[j];
                } else {
                    live_count += 1;
                    if live_count == 1 {
                        live = Some((j, a));
                    }
                }
            }
            let scale = 1.0 + c.rhs.abs();
            match live_count {
                0 => {
                    let ok = match c.sense {
                        Sense::Le => rhs >= -FOLD_TOL * scale,
                        Sense::Ge => rhs <= FOLD_TOL * scale,
                        Sense::Eq => rhs.abs() <= FOLD_TOL * scale,
                    };
                    if !ok {
                        infeasible = true;
                    }
                    row_dropped[r] = true;
                    changed = true;
                }
                1 => {
                    let (j, a) = live.expect("one live coefficient");
                    if a.abs() <= FOLD_TOL {
                        continue;
                    }
                    let v = rhs / a;
                    match (c.sense, a > 0.0) {
                        (Sense::Le, true) | (Sense::Ge, false) => {
                            if v < upper[j] {
                                upper[j] = v;
                            }
                        }
                        (Sense::Le, false) | (Sense::Ge, true) => {
                            if v > lower[j] {
                                lower[j] = v;
                            }
                        }
                        (Sense::Eq, _) => {
                            if v > lower[j] {
                                lower[j] = v;
                            }
                            if v < upper[j] {
                                upper[j] = v;
                            }
                        }
                    }
                    if lower[j] > upper[j] {
                        if lower[j] - upper[j] <= FOLD_TOL * (1.0 + lower[j].abs()) {
                            let mid = 0.5 * (lower[j] + upper[j]);
                            lower[j] = mid;
                            upper[j] = mid;
                        } else {
                            infeasible = true;
                        }
                    }
                    if lower[j] == upper[j] {
                        fixed[j] = true;
                    }
                    row_dropped[r] = true;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed || infeasible {
            break;
        }
    }

    let fixed_value = |j: usize| -> f64 { lower[j] };

    if infeasible {
        let primal: Vec<f64> = (0..n)
            .map(|j| {
                if fixed[j] {
                    fixed_value(j)
                } else if lower[j].is_finite() {
                    lower[j]
                } else {
                    0.0
                }
            })
            .collect();
        return Ok(SolveResult {
            status: SolveStatus::Infeasible,
            objective: f64::NAN,
            primal,
            iterations: 0,
            solve_seconds: 0.0,
            warnings: Vec::new(),
        });
    }

    // Build the reduced program over the surviving variables and rows.
    let mut map = vec![usize::MAX; n];
    let mut reduced = LinearProgram::new();
    for j in 0..n {
        if !fixed[j] {
            let meta = lp.meta(VarId(j));
            map[j] = reduced
                .add_var(
                    meta.name.clone(),
                    meta.role.clone(),
                    lower[j],
                    upper[j],
                    lp.objective()[j],
                )
                .0;
        }
    }
    for (r, c) in lp.constraints().iter().enumerate() {
        if row_dropped[r] {
            continue;
        }
        let mut rhs = c.rhs;
        let mut coeffs = Vec::with_capacity(c.coeffs.len());
        for &(VarId(j), a) in &c.coeffs {
            if fixed[j] {
                rhs -= a * fixed_value(j);
            } else {
                coeffs.push((VarId(map[j]), a));
            }
        }
        reduced.add_constraint(coeffs, c.sense, rhs);
    }

    let sub = solve_reduced(&reduced, opts)?;

    let mut primal = vec![0.0; n];
    for j in 0..n {
        primal[j] = if fixed[j] {
            fixed_value(j)
        } else {
            sub.primal[map[j]]
        };
    }
    let objective = if sub.status == SolveStatus::Optimal {
        lp.objective_value(&primal)
    } else {
        sub.objective
    };
    Ok(SolveResult {
        status: sub.status,
        objective,
        primal,
        iterations: sub.iterations,
        solve_seconds: sub.solve_seconds,
        warnings: sub.warnings,
    })
}
