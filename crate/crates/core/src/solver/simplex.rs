//! Bounded-variable revised simplex, phase I / phase II.
//!
//! Layout: every constraint row gets a logical column (slack for `<=`,
//! surplus for `>=`, a fixed padding column for `=`); rows whose logical
//! cannot absorb the initial residual get an explicit artificial column that
//! phase I prices out. The basis is refactorized every 64 pivots and tracked
//! with product-form eta updates in between. Pricing is Dantzig (most
//! violating reduced cost) with incremental updates from the pivot row, and
//! switches to Bland's least-index rule after a stall so termination is
//! guaranteed.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::solver::lp::{LinearProgram, Sense};
use crate::solver::lu::{BasisColumns, Factorization, Scratch, SparseVec};
use crate::solver::presolve;
use crate::solver::{PivotRule, SolveOptions, SolveResult, SolveStatus};

/// Status of one LP variable in the final basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    Free,
    /// Fixed by equal bounds.
    Fixed,
}

/// Optimality certificate: exact reduced costs and basis statuses at
/// termination, for dual-feasibility checks in tests.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub reduced_costs: Vec<f64>,
    pub statuses: Vec<BasisStatus>,
}

/// Solve with presolve (fixed-variable substitution, empty and singleton row
/// folding). The returned primal covers every variable of `lp`.
pub fn solve(lp: &LinearProgram, opts: &SolveOptions) -> Result<SolveResult> {
    lp.validate()?;
    presolve::solve_with_presolve(lp, opts)
}

/// Solve without presolve and return the optimality certificate alongside.
pub fn solve_certified(
    lp: &LinearProgram,
    opts: &SolveOptions,
) -> Result<(SolveResult, Certificate)> {
    lp.validate()?;
    let mut engine = Engine::new(lp, opts);
    let result = engine.run()?;
    let cert = engine.certificate();
    Ok((result, cert))
}

/// Solve a (possibly presolve-reduced) LP without further reduction.
pub(crate) fn solve_reduced(lp: &LinearProgram, opts: &SolveOptions) -> Result<SolveResult> {
    let mut engine = Engine::new(lp, opts);
    engine.run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    Free,
    Fixed,
}

/// Dense vector with an explicit nonzero list; epoch marks avoid clearing.
#[derive(Debug, Default)]
struct IndexedVec {
    dense: Vec<f64>,
    nz: Vec<u32>,
    mark: Vec<u32>,
    epoch: u32,
}

impl IndexedVec {
    fn resize(&mut self, n: usize) {
        if self.dense.len() < n {
            self.dense.resize(n, 0.0);
            self.mark.resize(n, 0);
        }
    }

    fn begin(&mut self) {
        self.nz.clear();
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    #[inline]
    fn add(&mut self, i: u32, v: f64) {
        if self.mark[i as usize] != self.epoch {
            self.mark[i as usize] = self.epoch;
            self.dense[i as usize] = v;
            self.nz.push(i);
        } else {
            self.dense[i as usize] += v;
        }
    }

    #[inline]
    fn set(&mut self, i: u32, v: f64) {
        if self.mark[i as usize] != self.epoch {
            self.mark[i as usize] = self.epoch;
            self.nz.push(i);
        }
        self.dense[i as usize] = v;
    }

    #[inline]
    fn get(&self, i: u32) -> f64 {
        if self.mark[i as usize] == self.epoch {
            self.dense[i as usize]
        } else {
            0.0
        }
    }

    fn set_from(&mut self, sv: &SparseVec) {
        self.begin();
        for (i, v) in sv.iter() {
            self.add(i, v);
        }
    }

    fn export(&self, out: &mut SparseVec) {
        out.clear();
        for &i in &self.nz {
            let v = self.dense[i as usize];
            if v != 0.0 {
                out.push(i, v);
            }
        }
    }
}

/// One product-form update: entering column `w = B^-1 a_q` pivoting at `row`.
struct Eta {
    row: u32,
    pivot: f64,
    idx: Vec<u32>,
    val: Vec<f64>,
}

const RATIO_PIVOT_TOL: f64 = 1e-9;
const STALL_LIMIT: u64 = 2000;
const REFACTOR_EVERY: usize = 64;
const MAX_CONSECUTIVE_REJECTS: u32 = 500;

struct Engine<'a> {
    opts: SolveOptions,
    m: usize,
    n_struct: usize,
    n_total: usize,
    // structural matrix, both orientations
    colptr: Vec<u32>,
    colrows: Vec<u32>,
    colvals: Vec<f64>,
    rowptr: Vec<u32>,
    rowcols: Vec<u32>,
    rowvals: Vec<f64>,
    rhs: Vec<f64>,
    /// logical-column coefficient per row
    row_coef: Vec<f64>,
    /// artificial column index per row (u32::MAX when absent)
    art_of_row: Vec<u32>,
    /// row and sign of each artificial column
    art_row: Vec<u32>,
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// phase II costs per total var
    cost: Vec<f64>,
    // mutable state
    state: Vec<VarState>,
    basic: Vec<u32>,
    x: Vec<f64>,
    d: Vec<f64>,
    factor: Factorization,
    etas: Vec<Eta>,
    scratch: Scratch,
    basis_cols: BasisColumns,
    work: SparseVec,
    work_out: SparseVec,
    col_w: IndexedVec,
    alpha: IndexedVec,
    phase_one: bool,
    bland: bool,
    stall: u64,
    rejects: u32,
    iterations: u64,
    lp: &'a LinearProgram,
}

impl<'a> Engine<'a> {
    fn new(lp: &'a LinearProgram, opts: &SolveOptions) -> Self {
        let m = lp.n_constraints();
        let n_struct = lp.n_vars();

        let nnz = lp.nnz();
        let mut rowptr = Vec::with_capacity(m + 1);
        let mut rowcols = Vec::with_capacity(nnz);
        let mut rowvals = Vec::with_capacity(nnz);
        rowptr.push(0u32);
        for c in lp.constraints() {
            for &(v, a) in &c.coeffs {
                rowcols.push(v.0 as u32);
                rowvals.push(a);
            }
            rowptr.push(rowcols.len() as u32);
        }
        let mut colcount = vec![0u32; n_struct + 1];
        for &j in &rowcols {
            colcount[j as usize + 1] += 1;
        }
        for j in 0..n_struct {
            colcount[j + 1] += colcount[j];
        }
        let colptr = colcount.clone();
        let mut cursor = colcount;
        let mut colrows = vec![0u32; nnz];
        let mut colvals = vec![0.0f64; nnz];
        for i in 0..m {
            for e in rowptr[i] as usize..rowptr[i + 1] as usize {
                let j = rowcols[e] as usize;
                let slot = cursor[j] as usize;
                colrows[slot] = i as u32;
                colvals[slot] = rowvals[e];
                cursor[j] += 1;
            }
        }

        let rhs: Vec<f64> = lp.constraints().iter().map(|c| c.rhs).collect();
        let row_coef: Vec<f64> = lp
            .constraints()
            .iter()
            .map(|c| match c.sense {
                Sense::Le | Sense::Eq => 1.0,
                Sense::Ge => -1.0,
            })
            .collect();

        let mut lower = lp.lower().to_vec();
        let mut upper = lp.upper().to_vec();
        let mut cost = lp.objective().to_vec();
        for c in lp.constraints() {
            let (lo, hi) = match c.sense {
                Sense::Le | Sense::Ge => (0.0, f64::INFINITY),
                Sense::Eq => (0.0, 0.0),
            };
            lower.push(lo);
            upper.push(hi);
            cost.push(0.0);
        }

        Engine {
            opts: opts.clone(),
            m,
            n_struct,
            n_total: n_struct + m,
            colptr,
            colrows,
            colvals,
            rowptr,
            rowcols,
            rowvals,
            rhs,
            row_coef,
            art_of_row: vec![u32::MAX; m],
            art_row: Vec::new(),
            art_sign: Vec::new(),
            lower,
            upper,
            cost,
            state: Vec::new(),
            basic: Vec::new(),
            x: Vec::new(),
            d: Vec::new(),
            factor: Factorization::default(),
            etas: Vec::new(),
            scratch: Scratch::default(),
            basis_cols: BasisColumns::default(),
            work: SparseVec::default(),
            work_out: SparseVec::default(),
            col_w: IndexedVec::default(),
            alpha: IndexedVec::default(),
            phase_one: false,
            bland: false,
            stall: 0,
            rejects: 0,
            iterations: 0,
            lp,
        }
    }

    #[inline]
    fn is_artificial(&self, j: u32) -> bool {
        (j as usize) >= self.n_struct + self.m
    }

    fn setup(&mut self) {
        self.state = vec![VarState::AtLower; self.n_total];
        self.x = vec![0.0; self.n_total];
        for j in 0..self.n_total {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l == u {
                self.state[j] = VarState::Fixed;
                self.x[j] = l;
            } else if l.is_finite() && u.is_finite() {
                if self.cost[j] < 0.0 {
                    self.state[j] = VarState::AtUpper;
                    self.x[j] = u;
                } else {
                    self.state[j] = VarState::AtLower;
                    self.x[j] = l;
                }
            } else if l.is_finite() {
                self.state[j] = VarState::AtLower;
                self.x[j] = l;
            } else if u.is_finite() {
                self.state[j] = VarState::AtUpper;
                self.x[j] = u;
            } else {
                self.state[j] = VarState::Free;
                self.x[j] = 0.0;
            }
        }

        let mut residual = self.rhs.clone();
        for j in 0..self.n_struct {
            let xj = self.x[j];
            if xj != 0.0 {
                for e in self.colptr[j] as usize..self.colptr[j + 1] as usize {
                    residual[self.colrows[e] as usize] -= self.colvals[e] * xj;
                }
            }
        }

        // Initial basis: the logical column when it can hold the residual,
        // otherwise a fresh artificial.
        self.basic = vec![0; self.m];
        for i in 0..self.m {
            let logical = (self.n_struct + i) as u32;
            let s = residual[i] / self.row_coef[i];
            let (l, u) = (self.lower[logical as usize], self.upper[logical as usize]);
            if s >= l - 1e-12 && s <= u + 1e-12 {
                self.basic[i] = logical;
                self.state[logical as usize] = VarState::Basic;
                self.x[logical as usize] = s.clamp(l, u);
            } else {
                let sign = if residual[i] >= 0.0 { 1.0 } else { -1.0 };
                let k = self.art_row.len();
                let id = (self.n_struct + self.m + k) as u32;
                self.art_row.push(i as u32);
                self.art_sign.push(sign);
                self.art_of_row[i] = id;
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.cost.push(0.0);
                self.state.push(VarState::Basic);
                self.x.push(residual[i] * sign);
                self.basic[i] = id;
                self.n_total += 1;
            }
        }
        self.phase_one = !self.art_row.is_empty();

        self.col_w.resize(self.m);
        self.alpha.resize(self.n_total);
        self.d = vec![0.0; self.n_total];
    }

    fn refactorize(&mut self) -> Result<()> {
        self.basis_cols.clear();
        for i in 0..self.m {
            let j = self.basic[i];
            let ju = j as usize;
            if ju < self.n_struct {
                for e in self.colptr[ju] as usize..self.colptr[ju + 1] as usize {
                    self.basis_cols.push_entry(self.colrows[e], self.colvals[e]);
                }
            } else if ju < self.n_struct + self.m {
                let row = ju - self.n_struct;
                self.basis_cols.push_entry(row as u32, self.row_coef[row]);
            } else {
                let k = ju - self.n_struct - self.m;
                self.basis_cols.push_entry(self.art_row[k], self.art_sign[k]);
            }
            self.basis_cols.finish_col();
        }
        self.factor = Factorization::factorize(&self.basis_cols, &mut self.scratch)?;
        self.etas.clear();
        Ok(())
    }

    /// Recompute basic values exactly from the nonbasic assignment.
    fn recompute_x(&mut self) {
        let mut rhs_work = self.rhs.clone();
        for j in 0..self.n_total as u32 {
            if self.state[j as usize] != VarState::Basic {
                let xj = self.x[j as usize];
                if xj != 0.0 {
                    let ju = j as usize;
                    if ju < self.n_struct {
                        for e in self.colptr[ju] as usize..self.colptr[ju + 1] as usize {
                            rhs_work[self.colrows[e] as usize] -= self.colvals[e] * xj;
                        }
                    } else if ju < self.n_struct + self.m {
                        rhs_work[ju - self.n_struct] -= self.row_coef[ju - self.n_struct] * xj;
                    } else {
                        let k = ju - self.n_struct - self.m;
                        rhs_work[self.art_row[k] as usize] -= self.art_sign[k] * xj;
                    }
                }
            }
        }
        self.work.clear();
        for (i, v) in rhs_work.iter().enumerate() {
            if *v != 0.0 {
                self.work.push(i as u32, *v);
            }
        }
        let mut out = std::mem::take(&mut self.work_out);
        self.ftran(&mut out);
        for i in 0..self.m {
            self.x[self.basic[i] as usize] = 0.0;
        }
        for (slot, v) in out.iter() {
            self.x[self.basic[slot as usize] as usize] = v;
        }
        self.work_out = out;
    }

    #[inline]
    fn active_cost(&self, j: u32) -> f64 {
        if self.phase_one {
            if self.is_artificial(j) && self.state[j as usize] != VarState::Fixed {
                1.0
            } else {
                0.0
            }
        } else {
            self.cost[j as usize]
        }
    }

    /// Recompute reduced costs exactly for the active phase.
    fn recompute_d(&mut self) {
        self.work.clear();
        for i in 0..self.m {
            let cb = self.active_cost(self.basic[i]);
            if cb != 0.0 {
                self.work.push(i as u32, cb);
            }
        }
        let mut out = std::mem::take(&mut self.work_out);
        self.btran(&mut out);
        for j in 0..self.n_total as u32 {
            self.d[j as usize] = self.active_cost(j);
        }
        for (row, yi) in out.iter() {
            let r = row as usize;
            for e in self.rowptr[r] as usize..self.rowptr[r + 1] as usize {
                self.d[self.rowcols[e] as usize] -= yi * self.rowvals[e];
            }
            self.d[self.n_struct + r] -= yi * self.row_coef[r];
            let art = self.art_of_row[r];
            if art != u32::MAX {
                let k = art as usize - self.n_struct - self.m;
                self.d[art as usize] -= yi * self.art_sign[k];
            }
        }
        self.work_out = out;
    }

    /// FTRAN through factorization and eta file; input `self.work` (rows),
    /// output sparse over slots.
    fn ftran(&mut self, out: &mut SparseVec) {
        self.factor.ftran(&self.work, out, &mut self.scratch);
        if self.etas.is_empty() {
            return;
        }
        self.col_w.set_from(out);
        for eta in &self.etas {
            let t = self.col_w.get(eta.row);
            if t != 0.0 {
                let t = t / eta.pivot;
                self.col_w.set(eta.row, t);
                for (i, v) in eta.idx.iter().zip(&eta.val) {
                    self.col_w.add(*i, -v * t);
                }
            }
        }
        self.col_w.export(out);
    }

    /// BTRAN through eta file (reverse order) and factorization; input
    /// `self.work` (slots), output sparse over rows.
    fn btran(&mut self, out: &mut SparseVec) {
        if !self.etas.is_empty() {
            self.col_w.set_from(&self.work);
            for eta in self.etas.iter().rev() {
                let vr = self.col_w.get(eta.row);
                let mut dot = 0.0;
                for (i, v) in eta.idx.iter().zip(&eta.val) {
                    dot += v * self.col_w.get(*i);
                }
                self.col_w.set(eta.row, (vr - dot) / eta.pivot);
            }
            self.col_w.export(&mut self.work);
        }
        self.factor.btran(&self.work, out, &mut self.scratch);
    }

    fn run(&mut self) -> Result<SolveResult> {
        if self.m == 0 {
            return Ok(self.solve_unconstrained());
        }
        self.setup();
        self.refactorize()?;
        self.recompute_x();

        let started = Instant::now();
        let status = self.iterate()?;
        let pivot_seconds = started.elapsed().as_secs_f64();

        let primal: Vec<f64> = self.x[..self.n_struct].to_vec();
        let objective = self.lp.objective_value(&primal);
        Ok(SolveResult {
            status,
            objective,
            primal,
            iterations: self.iterations,
            solve_seconds: pivot_seconds,
            warnings: Vec::new(),
        })
    }

    fn solve_unconstrained(&mut self) -> SolveResult {
        let mut primal = vec![0.0; self.n_struct];
        let mut status = SolveStatus::Optimal;
        for j in 0..self.n_struct {
            let c = self.lp.objective()[j];
            let (l, u) = (self.lp.lower()[j], self.lp.upper()[j]);
            primal[j] = if c > 0.0 {
                if l.is_finite() {
                    l
                } else {
                    status = SolveStatus::Unbounded;
                    0.0
                }
            } else if c < 0.0 {
                if u.is_finite() {
                    u
                } else {
                    status = SolveStatus::Unbounded;
                    0.0
                }
            } else if l.is_finite() {
                l
            } else if u.is_finite() {
                u
            } else {
                0.0
            };
        }
        let objective = self.lp.objective_value(&primal);
        SolveResult {
            status,
            objective,
            primal,
            iterations: 0,
            solve_seconds: 0.0,
            warnings: Vec::new(),
        }
    }

    fn iterate(&mut self) -> Result<SolveStatus> {
        if self.phase_one {
            self.recompute_d();
            let status = self.pivot_loop()?;
            if status != SolveStatus::Optimal {
                return Ok(status);
            }
            let infeas: f64 = (0..self.art_row.len())
                .map(|k| self.x[self.n_struct + self.m + k])
                .sum();
            let rhs_scale = self.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
            if infeas > self.opts.feasibility_tol * rhs_scale * 10.0 {
                return Ok(SolveStatus::Infeasible);
            }
            self.retire_artificials()?;
            self.phase_one = false;
            self.bland = false;
            self.stall = 0;
        }
        self.recompute_d();
        self.pivot_loop()
    }

    fn pivot_loop(&mut self) -> Result<SolveStatus> {
        let mut clean_rounds = 0;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Ok(SolveStatus::IterationLimit);
            }
            let Some(q) = self.price() else {
                // Verify on fresh factors before declaring optimality.
                if clean_rounds >= 3 {
                    return Ok(SolveStatus::Optimal);
                }
                self.refactorize()?;
                self.recompute_x();
                self.recompute_d();
                clean_rounds += 1;
                if self.price().is_none() {
                    return Ok(SolveStatus::Optimal);
                }
                continue;
            };
            clean_rounds = 0;

            match self.step(q)? {
                StepOutcome::Moved => {
                    self.rejects = 0;
                }
                StepOutcome::Unbounded => {
                    if self.phase_one {
                        return Err(Error::Internal(
                            "phase I objective unbounded; inconsistent setup".into(),
                        ));
                    }
                    return Ok(SolveStatus::Unbounded);
                }
                StepOutcome::Rejected => {
                    self.rejects += 1;
                    if self.rejects > MAX_CONSECUTIVE_REJECTS {
                        return Err(Error::Internal(
                            "simplex stalled on numerically unusable pivots".into(),
                        ));
                    }
                }
            }
        }
    }

    /// Dantzig (or Bland) pricing over nonbasic variables.
    fn price(&self) -> Option<u32> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(f64, u32)> = None;
        for j in 0..self.n_total as u32 {
            let viol = match self.state[j as usize] {
                VarState::AtLower => -self.d[j as usize],
                VarState::AtUpper => self.d[j as usize],
                VarState::Free => self.d[j as usize].abs(),
                VarState::Basic | VarState::Fixed => continue,
            };
            if viol > tol {
                if self.bland {
                    return Some(j);
                }
                if best.map_or(true, |(b, _)| viol > b) {
                    best = Some((viol, j));
                }
            }
        }
        best.map(|(_, j)| j)
    }

    fn step(&mut self, q: u32) -> Result<StepOutcome> {
        // Entering column w = B^-1 a_q.
        self.work.clear();
        {
            let ju = q as usize;
            if ju < self.n_struct {
                for e in self.colptr[ju] as usize..self.colptr[ju + 1] as usize {
                    self.work.push(self.colrows[e], self.colvals[e]);
                }
            } else if ju < self.n_struct + self.m {
                self.work
                    .push((ju - self.n_struct) as u32, self.row_coef[ju - self.n_struct]);
            } else {
                let k = ju - self.n_struct - self.m;
                self.work.push(self.art_row[k], self.art_sign[k]);
            }
        }
        let mut w = std::mem::take(&mut self.work_out);
        self.ftran(&mut w);

        // Exact reduced cost from the fresh column; reject stale candidates.
        let mut dq = self.active_cost(q);
        for (slot, wi) in w.iter() {
            let cb = self.active_cost(self.basic[slot as usize]);
            if cb != 0.0 {
                dq -= cb * wi;
            }
        }
        let eligible = match self.state[q as usize] {
            VarState::AtLower => dq < -0.5 * self.opts.optimality_tol,
            VarState::AtUpper => dq > 0.5 * self.opts.optimality_tol,
            VarState::Free => dq.abs() > 0.5 * self.opts.optimality_tol,
            _ => false,
        };
        if !eligible {
            self.d[q as usize] = dq;
            self.work_out = w;
            return Ok(StepOutcome::Rejected);
        }
        let dir: f64 = match self.state[q as usize] {
            VarState::AtLower => 1.0,
            VarState::AtUpper => -1.0,
            VarState::Free => {
                if dq < 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            _ => unreachable!(),
        };

        // Harris-style two-pass ratio test.
        let own_range = self.upper[q as usize] - self.lower[q as usize];
        let theta_own = if own_range.is_finite() { own_range } else { f64::INFINITY };
        let feas_tol = if self.bland { 0.0 } else { self.opts.feasibility_tol };

        let mut theta_max = if theta_own.is_finite() {
            theta_own + feas_tol
        } else {
            f64::INFINITY
        };
        for (slot, wi) in w.iter() {
            let b = self.basic[slot as usize] as usize;
            let rate = dir * wi;
            if rate > RATIO_PIVOT_TOL {
                let l = self.lower[b];
                if l.is_finite() {
                    let t = (self.x[b] - l + feas_tol) / rate;
                    if t < theta_max {
                        theta_max = t;
                    }
                }
            } else if rate < -RATIO_PIVOT_TOL {
                let u = self.upper[b];
                if u.is_finite() {
                    let t = (self.x[b] - u - feas_tol) / rate;
                    if t < theta_max {
                        theta_max = t;
                    }
                }
            }
        }

        // Second pass: largest pivot among rows whose exact ratio fits below
        // theta_max (lowest variable index under Bland).
        let mut leave: Option<(u32, f64, f64, bool)> = None;
        for (slot, wi) in w.iter() {
            let b = self.basic[slot as usize] as usize;
            let rate = dir * wi;
            let (exact, to_lower) = if rate > RATIO_PIVOT_TOL {
                let l = self.lower[b];
                if !l.is_finite() {
                    continue;
                }
                ((self.x[b] - l) / rate, true)
            } else if rate < -RATIO_PIVOT_TOL {
                let u = self.upper[b];
                if !u.is_finite() {
                    continue;
                }
                ((self.x[b] - u) / rate, false)
            } else {
                continue;
            };
            if exact <= theta_max {
                let better = match &leave {
                    None => true,
                    Some((lslot, lw, lex, _)) => {
                        if self.bland {
                            exact < lex - 1e-12
                                || (exact <= lex + 1e-12
                                    && self.basic[slot as usize] < self.basic[*lslot as usize])
                        } else {
                            wi.abs() > *lw
                        }
                    }
                };
                if better {
                    leave = Some((slot, wi.abs(), exact, to_lower));
                }
            }
        }

        let theta_rows = leave.as_ref().map(|(_, _, t, _)| t.max(0.0));
        let flip = match theta_rows {
            None => {
                if theta_own.is_finite() {
                    true
                } else {
                    self.work_out = w;
                    return Ok(StepOutcome::Unbounded);
                }
            }
            Some(theta) => theta_own.is_finite() && theta_own <= theta,
        };
        if flip {
            if theta_own > 0.0 {
                for (s, wi) in w.iter() {
                    let b = self.basic[s as usize] as usize;
                    self.x[b] -= dir * theta_own * wi;
                }
            }
            match self.state[q as usize] {
                VarState::AtLower => {
                    self.state[q as usize] = VarState::AtUpper;
                    self.x[q as usize] = self.upper[q as usize];
                }
                VarState::AtUpper => {
                    self.state[q as usize] = VarState::AtLower;
                    self.x[q as usize] = self.lower[q as usize];
                }
                _ => unreachable!("flip requires a boxed variable"),
            }
            self.work_out = w;
            self.iterations += 1;
            return Ok(StepOutcome::Moved);
        }

        let (slot, _, exact, to_lower) = leave.expect("pivot row exists when not flipping");
        let theta = exact.max(0.0);
        let r = slot as usize;
        let p = self.basic[r];
        let mut w_r = 0.0;
        for (s, wi) in w.iter() {
            if s == slot {
                w_r = wi;
                break;
            }
        }
        if w_r.abs() < RATIO_PIVOT_TOL {
            self.refactorize()?;
            self.recompute_x();
            self.recompute_d();
            self.work_out = w;
            return Ok(StepOutcome::Rejected);
        }

        // Reduced-cost update from the pivot row, before the basis changes.
        self.work.clear();
        self.work.push(slot, 1.0);
        let mut rho = SparseVec::default();
        std::mem::swap(&mut rho, &mut self.work_out);
        self.btran(&mut rho);
        self.alpha.begin();
        for (row, yi) in rho.iter() {
            let ri = row as usize;
            for e in self.rowptr[ri] as usize..self.rowptr[ri + 1] as usize {
                let j = self.rowcols[e];
                match self.state[j as usize] {
                    VarState::Basic | VarState::Fixed => {}
                    _ => self.alpha.add(j, yi * self.rowvals[e]),
                }
            }
            let logical = (self.n_struct + ri) as u32;
            match self.state[logical as usize] {
                VarState::Basic | VarState::Fixed => {}
                _ => self.alpha.add(logical, yi * self.row_coef[ri]),
            }
            let art = self.art_of_row[ri];
            if art != u32::MAX {
                match self.state[art as usize] {
                    VarState::Basic | VarState::Fixed => {}
                    _ => {
                        let k = art as usize - self.n_struct - self.m;
                        self.alpha.add(art, yi * self.art_sign[k]);
                    }
                }
            }
        }
        let theta_d = dq / w_r;
        for idx in 0..self.alpha.nz.len() {
            let j = self.alpha.nz[idx];
            let a = self.alpha.dense[j as usize];
            if a != 0.0 {
                self.d[j as usize] -= theta_d * a;
            }
        }
        self.work_out = rho;

        // Primal update.
        let step = dir * theta;
        if theta > 0.0 {
            for (s, wi) in w.iter() {
                let b = self.basic[s as usize] as usize;
                self.x[b] -= step * wi;
            }
        }
        self.x[q as usize] += step;

        // The leaving variable snaps exactly onto the bound it blocked at;
        // retired artificials can never re-enter.
        let pu = p as usize;
        if self.is_artificial(p) {
            self.state[pu] = VarState::Fixed;
            self.lower[pu] = 0.0;
            self.upper[pu] = 0.0;
            self.x[pu] = 0.0;
        } else if self.lower[pu] == self.upper[pu] {
            self.state[pu] = VarState::Fixed;
            self.x[pu] = self.lower[pu];
        } else if to_lower {
            self.state[pu] = VarState::AtLower;
            self.x[pu] = self.lower[pu];
        } else {
            self.state[pu] = VarState::AtUpper;
            self.x[pu] = self.upper[pu];
        }
        self.state[q as usize] = VarState::Basic;
        self.basic[r] = q;
        self.d[pu] = -theta_d;
        self.d[q as usize] = 0.0;

        let mut eta = Eta {
            row: slot,
            pivot: w_r,
            idx: Vec::with_capacity(w.len().saturating_sub(1)),
            val: Vec::with_capacity(w.len().saturating_sub(1)),
        };
        for (s, wi) in w.iter() {
            if s != slot && wi != 0.0 {
                eta.idx.push(s);
                eta.val.push(wi);
            }
        }
        self.etas.push(eta);
        self.work_out = w;
        self.iterations += 1;

        if theta <= 1e-12 {
            self.stall += 1;
            if self.stall > STALL_LIMIT && !self.bland {
                self.bland = true;
            }
        } else if self.bland || self.stall > 0 {
            self.bland = false;
            self.stall = 0;
        }

        if self.etas.len() >= REFACTOR_EVERY {
            self.refactorize()?;
            self.recompute_x();
            self.recompute_d();
        }
        match self.opts.pivot_rule {
            PivotRule::DantzigWithBlandFallback => {}
        }
        Ok(StepOutcome::Moved)
    }

    /// After phase I: pivot zero-valued basic artificials out where possible;
    /// freeze the rest (linearly dependent rows) at zero.
    fn retire_artificials(&mut self) -> Result<()> {
        for k in 0..self.art_row.len() {
            let j = (self.n_struct + self.m + k) as u32;
            if self.state[j as usize] != VarState::Basic {
                self.state[j as usize] = VarState::Fixed;
                self.lower[j as usize] = 0.0;
                self.upper[j as usize] = 0.0;
                self.x[j as usize] = 0.0;
                continue;
            }
            let slot = self
                .basic
                .iter()
                .position(|&b| b == j)
                .expect("basic artificial occupies a slot") as u32;
            self.work.clear();
            self.work.push(slot, 1.0);
            let mut rho = std::mem::take(&mut self.work_out);
            self.btran(&mut rho);
            let mut best: Option<(f64, u32)> = None;
            for (row, yi) in rho.iter() {
                let ri = row as usize;
                for e in self.rowptr[ri] as usize..self.rowptr[ri + 1] as usize {
                    let cand = self.rowcols[e];
                    if !matches!(
                        self.state[cand as usize],
                        VarState::AtLower | VarState::AtUpper | VarState::Free
                    ) {
                        continue;
                    }
                    let a = (yi * self.rowvals[e]).abs();
                    if a > 1e-7 {
                        let better = match best {
                            None => true,
                            Some((ba, bj)) => a > ba * 1.0001 || (a >= ba * 0.9999 && cand < bj),
                        };
                        if better {
                            best = Some((a, cand));
                        }
                    }
                }
                let logical = (self.n_struct + ri) as u32;
                if matches!(
                    self.state[logical as usize],
                    VarState::AtLower | VarState::AtUpper | VarState::Free
                ) {
                    let a = (yi * self.row_coef[ri]).abs();
                    if a > 1e-7 {
                        let better = match best {
                            None => true,
                            Some((ba, bj)) => a > ba * 1.0001 || (a >= ba * 0.9999 && logical < bj),
                        };
                        if better {
                            best = Some((a, logical));
                        }
                    }
                }
            }
            self.work_out = rho;

            let mut retired = false;
            if let Some((_, enter)) = best {
                self.work.clear();
                let eu = enter as usize;
                if eu < self.n_struct {
                    for e in self.colptr[eu] as usize..self.colptr[eu + 1] as usize {
                        self.work.push(self.colrows[e], self.colvals[e]);
                    }
                } else {
                    self.work
                        .push((eu - self.n_struct) as u32, self.row_coef[eu - self.n_struct]);
                }
                let mut w = std::mem::take(&mut self.work_out);
                self.ftran(&mut w);
                let mut w_r = 0.0;
                for (s, wi) in w.iter() {
                    if s == slot {
                        w_r = wi;
                        break;
                    }
                }
                if w_r.abs() > 1e-9 {
                    let mut eta = Eta {
                        row: slot,
                        pivot: w_r,
                        idx: Vec::new(),
                        val: Vec::new(),
                    };
                    for (s, wi) in w.iter() {
                        if s != slot && wi != 0.0 {
                            eta.idx.push(s);
                            eta.val.push(wi);
                        }
                    }
                    self.basic[slot as usize] = enter;
                    self.state[enter as usize] = VarState::Basic;
                    self.x[enter as usize] = self.x[enter as usize];
                    self.etas.push(eta);
                    self.iterations += 1;
                    retired = true;
                    if self.etas.len() >= REFACTOR_EVERY {
                        self.refactorize()?;
                        self.recompute_x();
                    }
                }
                self.work_out = w;
            }
            self.state[j as usize] = if retired { VarState::Fixed } else { VarState::Basic };
            self.lower[j as usize] = 0.0;
            self.upper[j as usize] = 0.0;
            self.x[j as usize] = 0.0;
        }
        Ok(())
    }

    fn certificate(&self) -> Certificate {
        let statuses = (0..self.n_struct)
            .map(|j| match self.state.get(j) {
                Some(VarState::Basic) => BasisStatus::Basic,
                Some(VarState::AtLower) => BasisStatus::AtLower,
                Some(VarState::AtUpper) => BasisStatus::AtUpper,
                Some(VarState::Free) => BasisStatus::Free,
                Some(VarState::Fixed) | None => BasisStatus::Fixed,
            })
            .collect();
        Certificate {
            reduced_costs: if self.d.len() >= self.n_struct {
                self.d[..self.n_struct].to_vec()
            } else {
                vec![0.0; self.n_struct]
            },
            statuses,
        }
    }
}

enum StepOutcome {
    Moved,
    Rejected,
    Unbounded,
}
