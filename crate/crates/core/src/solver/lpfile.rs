//! CPLEX-LP text export and `name value` solution import.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::lp::{LinearProgram, Sense};
use crate::solver::{SolveResult, SolveStatus};

fn check_name(name: &str) -> Result<()> {
    let ok_len = !name.is_empty() && name.len() <= 255;
    let ok_chars = name
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || "_().#".contains(c));
    let ok_start = name
        .chars()
        .next()
        .map(|c| c.is_ascii_alphabetic() && !matches!(c, 'e' | 'E'))
        .unwrap_or(false);
    if ok_len && ok_chars && ok_start {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "variable name '{name}' not exportable to LP format"
        )))
    }
}

fn num(v: f64) -> String {
    // Display for f64 round-trips exactly.
    format!("{v}")
}

/// Write the program in CPLEX-LP text format (Minimize / Subject To /
/// Bounds / End). Every variable gets an explicit bounds line.
pub fn export_lp(lp: &LinearProgram, path: &Path) -> Result<()> {
    for meta in lp.metas() {
        check_name(&meta.name)?;
    }

    let mut text = String::new();
    text.push_str("Minimize\n obj:");
    let mut wrote = 0usize;
    for (j, &c) in lp.objective().iter().enumerate() {
        if c != 0.0 {
            let name = &lp.metas()[j].name;
            let sign = if c >= 0.0 { '+' } else { '-' };
            let _ = write!(text, " {sign} {} {name}", num(c.abs()));
            wrote += 1;
            if wrote % 8 == 0 {
                text.push_str("\n     ");
            }
        }
    }
    if wrote == 0 {
        let _ = write!(text, " + 0 {}", lp.metas()[0].name);
    }
    text.push_str("\nSubject To\n");
    for (r, c) in lp.constraints().iter().enumerate() {
        let _ = write!(text, " c{r}:");
        let mut terms = 0usize;
        for &(v, a) in &c.coeffs {
            if a == 0.0 {
                continue;
            }
            let name = &lp.metas()[v.0].name;
            let sign = if a >= 0.0 { '+' } else { '-' };
            let _ = write!(text, " {sign} {} {name}", num(a.abs()));
            terms += 1;
            if terms % 8 == 0 {
                text.push_str("\n     ");
            }
        }
        if terms == 0 {
            let _ = write!(text, " + 0 {}", lp.metas()[0].name);
        }
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(text, " {sense} {}", num(c.rhs));
    }
    text.push_str("Bounds\n");
    for (j, meta) in lp.metas().iter().enumerate() {
        let (l, u) = (lp.lower()[j], lp.upper()[j]);
        if l == u {
            let _ = writeln!(text, " {} = {}", meta.name, num(l));
        } else if l.is_infinite() && u.is_infinite() {
            let _ = writeln!(text, " {} free", meta.name);
        } else if l.is_infinite() {
            let _ = writeln!(text, " -infinity <= {} <= {}", meta.name, num(u));
        } else if u.is_infinite() {
            let _ = writeln!(text, " {} >= {}", meta.name, num(l));
        } else {
            let _ = writeln!(text, " {} <= {} <= {}", num(l), meta.name, num(u));
        }
    }
    text.push_str("End\n");

    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Read a `name value` per line solution file. Unknown names are an error;
/// names missing from the file default to zero and are reported as warnings.
pub fn import_solution(path: &Path, lp: &LinearProgram) -> Result<SolveResult> {
    let text =
        fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut primal = vec![0.0f64; lp.n_vars()];
    let mut seen = vec![false; lp.n_vars()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let name = parts.next().unwrap_or_default();
        let value = parts.next().ok_or_else(|| {
            Error::Validation(format!(
                "{}: line {}: expected 'name value'",
                path.display(),
                lineno + 1
            ))
        })?;
        let id = lp
            .var_by_name(name)
            .ok_or_else(|| Error::UnknownSolutionName(name.to_string()))?;
        let v: f64 = value.parse().map_err(|_| {
            Error::Validation(format!(
                "{}: line {}: cannot parse value '{value}'",
                path.display(),
                lineno + 1
            ))
        })?;
        primal[id.0] = v;
        seen[id.0] = true;
    }
    let warnings: Vec<String> = seen
        .iter()
        .enumerate()
        .filter(|(_, s)| !**s)
        .map(|(j, _)| format!("variable '{}' missing from solution, defaulted to 0", lp.metas()[j].name))
        .collect();
    let objective = lp.objective_value(&primal);
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        objective,
        primal,
        iterations: 0,
        solve_seconds: 0.0,
        warnings,
    })
}

/// Write a solution in the `name value` format accepted by
/// [`import_solution`].
pub fn write_solution(path: &Path, lp: &LinearProgram, result: &SolveResult) -> Result<()> {
    let mut text = String::new();
    for (j, meta) in lp.metas().iter().enumerate() {
        let _ = writeln!(text, "{} {}", meta.name, num(result.primal[j]));
    }
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
