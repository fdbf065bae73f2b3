//! Sparse LU factorization of the simplex basis.
//!
//! Left-looking Gilbert–Peierls factorization with partial pivoting.
//! Factors are kept in pivot coordinates in both column- and row-major form
//! so forward and transposed solves can exploit sparse right-hand sides
//! (depth-first reach over the factor pattern instead of full sweeps).

use crate::error::{Error, Result};

/// Columns of the basis gathered by the caller, CSC layout, original row
/// indices.
#[derive(Debug, Default)]
pub struct BasisColumns {
    pub colptr: Vec<u32>,
    pub rows: Vec<u32>,
    pub vals: Vec<f64>,
}

impl BasisColumns {
    pub fn clear(&mut self) {
        self.colptr.clear();
        self.rows.clear();
        self.vals.clear();
        self.colptr.push(0);
    }

    pub fn push_entry(&mut self, row: u32, val: f64) {
        self.rows.push(row);
        self.vals.push(val);
    }

    pub fn finish_col(&mut self) {
        self.colptr.push(self.rows.len() as u32);
    }

    pub fn n_cols(&self) -> usize {
        self.colptr.len() - 1
    }

    fn col(&self, j: usize) -> (&[u32], &[f64]) {
        let a = self.colptr[j] as usize;
        let b = self.colptr[j + 1] as usize;
        (&self.rows[a..b], &self.vals[a..b])
    }
}

/// Compressed sparse storage for one triangle, pivot coordinates.
#[derive(Debug, Default, Clone)]
struct Triangle {
    ptr: Vec<u32>,
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl Triangle {
    fn with_cols(n: usize) -> Self {
        let mut ptr = Vec::with_capacity(n + 1);
        ptr.push(0);
        Triangle { ptr, idx: Vec::new(), val: Vec::new() }
    }

    fn seal(&mut self) {
        self.ptr.push(self.idx.len() as u32);
    }

    #[inline]
    fn range(&self, j: usize) -> std::ops::Range<usize> {
        self.ptr[j] as usize..self.ptr[j + 1] as usize
    }

    /// Transpose pattern and values (counting sort by entry index).
    fn transposed(&self, n: usize) -> Triangle {
        let nnz = self.idx.len();
        let mut counts = vec![0u32; n + 1];
        for &i in &self.idx {
            counts[i as usize + 1] += 1;
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let mut cursor = counts.clone();
        let mut idx = vec![0u32; nnz];
        let mut val = vec![0.0f64; nnz];
        for j in 0..self.ptr.len() - 1 {
            for e in self.range(j) {
                let i = self.idx[e] as usize;
                let slot = cursor[i] as usize;
                idx[slot] = j as u32;
                val[slot] = self.val[e];
                cursor[i] += 1;
            }
        }
        Triangle { ptr: counts, idx, val }
    }
}

/// Scratch space shared across factorizations and solves.
#[derive(Debug, Default)]
pub struct Scratch {
    value: Vec<f64>,
    mark: Vec<u32>,
    epoch: u32,
    init: Vec<u32>,
    init_epoch: u32,
    dfs: Vec<(u32, u32)>,
    topo: Vec<u32>,
    topo2: Vec<u32>,
    seeds: Vec<u32>,
}

impl Scratch {
    pub fn resize(&mut self, m: usize) {
        if self.value.len() < m {
            self.value.resize(m, 0.0);
            self.mark.resize(m, 0);
            self.init.resize(m, 0);
        }
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
        self.epoch
    }

    fn next_init_epoch(&mut self) -> u32 {
        self.init_epoch = self.init_epoch.wrapping_add(1);
        if self.init_epoch == 0 {
            self.init.iter_mut().for_each(|m| *m = 0);
            self.init_epoch = 1;
        }
        self.init_epoch
    }

    /// Zero the value cell on first touch within the current init epoch.
    #[inline]
    fn ensure_init(&mut self, i: u32) {
        if self.init[i as usize] != self.init_epoch {
            self.init[i as usize] = self.init_epoch;
            self.value[i as usize] = 0.0;
        }
    }

    /// Depth-first reach over `ptr/idx` adjacency from `seeds`, appending to
    /// `self.topo` in postorder. Reverse iteration of `topo` then yields a
    /// topological order (every node before the nodes it updates).
    fn reach(&mut self, ptr: &[u32], idx: &[u32], seeds: &[u32], epoch: u32) {
        for &seed in seeds {
            if self.mark[seed as usize] == epoch {
                continue;
            }
            self.mark[seed as usize] = epoch;
            self.dfs.push((seed, ptr[seed as usize]));
            while let Some((node, mut edge)) = self.dfs.pop() {
                let end = ptr[node as usize + 1];
                let mut descended = false;
                while edge < end {
                    let next = idx[edge as usize];
                    edge += 1;
                    if self.mark[next as usize] != epoch {
                        self.mark[next as usize] = epoch;
                        self.dfs.push((node, edge));
                        self.dfs.push((next, ptr[next as usize]));
                        descended = true;
                        break;
                    }
                }
                if !descended {
                    self.topo.push(node);
                }
            }
        }
    }
}

/// A sparse vector as parallel (position, value) lists.
#[derive(Debug, Default, Clone)]
pub struct SparseVec {
    pub idx: Vec<u32>,
    pub val: Vec<f64>,
}

impl SparseVec {
    pub fn clear(&mut self) {
        self.idx.clear();
        self.val.clear();
    }

    pub fn push(&mut self, i: u32, v: f64) {
        self.idx.push(i);
        self.val.push(v);
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.idx.iter().copied().zip(self.val.iter().copied())
    }
}

/// Drop threshold for values created during elimination.
const DROP_TOL: f64 = 1e-13;
/// A pivot smaller than this marks the basis numerically singular.
const PIVOT_ABS_TOL: f64 = 1e-11;

/// LU factors of one basis snapshot.
#[derive(Debug, Default)]
pub struct Factorization {
    m: usize,
    lower: Triangle,
    lower_t: Triangle,
    upper: Triangle,
    upper_t: Triangle,
    u_diag: Vec<f64>,
    /// original row -> pivot position
    row_to_pos: Vec<u32>,
    /// pivot position -> original row
    pos_to_row: Vec<u32>,
    /// pivot position -> basis slot
    pos_to_slot: Vec<u32>,
    /// basis slot -> pivot position
    slot_to_pos: Vec<u32>,
}

impl Factorization {
    /// Factorize the gathered basis columns. Columns are processed in order
    /// of their topmost row, which keeps staircase bases nearly fill-free.
    pub fn factorize(cols: &BasisColumns, scratch: &mut Scratch) -> Result<Self> {
        let m = cols.n_cols();
        scratch.resize(m);

        let mut order: Vec<u32> = (0..m as u32).collect();
        order.sort_by_key(|&j| {
            let (rows, _) = cols.col(j as usize);
            let top = rows.iter().copied().min().unwrap_or(u32::MAX);
            (top, rows.len() as u32, j)
        });

        let mut lower = Triangle::with_cols(m);
        let mut upper = Triangle::with_cols(m);
        let mut u_diag = vec![0.0f64; m];
        let mut row_to_pos = vec![u32::MAX; m];
        let mut pos_to_row = vec![0u32; m];

        // Candidate pivot rows (currently unpivoted) of the working column.
        let mut pattern: Vec<u32> = Vec::with_capacity(64);
        let mut seeds: Vec<u32> = Vec::with_capacity(64);

        for (k, &slot) in order.iter().enumerate() {
            let (rows, vals) = cols.col(slot as usize);
            let epoch = scratch.next_epoch();

            // Symbolic phase. Nodes are pivot positions, marked and
            // value-initialized through their pivot row cell; unpivoted rows
            // are terminals that join the candidate pattern.
            pattern.clear();
            seeds.clear();
            scratch.topo.clear();
            for &r in rows {
                let p = row_to_pos[r as usize];
                if p == u32::MAX {
                    if scratch.mark[r as usize] != epoch {
                        scratch.mark[r as usize] = epoch;
                        scratch.value[r as usize] = 0.0;
                        pattern.push(r);
                    }
                } else {
                    seeds.push(p);
                }
            }
            for s in 0..seeds.len() {
                dfs_lower(
                    seeds[s],
                    &lower,
                    &pos_to_row,
                    &row_to_pos,
                    scratch,
                    epoch,
                    &mut pattern,
                );
            }

            // Numeric phase: scatter the column, eliminate in topological
            // order, then split into U entries and pivot candidates.
            for (&r, &v) in rows.iter().zip(vals) {
                scratch.value[r as usize] = v;
            }
            for t in (0..scratch.topo.len()).rev() {
                let p = scratch.topo[t] as usize;
                let x = scratch.value[pos_to_row[p] as usize];
                if x == 0.0 {
                    continue;
                }
                for e in lower.range(p) {
                    let r2 = lower.idx[e] as usize;
                    scratch.value[r2] -= lower.val[e] * x;
                }
            }
            for t in (0..scratch.topo.len()).rev() {
                let p = scratch.topo[t];
                let pr = pos_to_row[p as usize] as usize;
                let x = scratch.value[pr];
                scratch.value[pr] = 0.0;
                if x.abs() > DROP_TOL {
                    upper.idx.push(p);
                    upper.val.push(x);
                }
            }
            upper.seal();

            let mut pivot_row = u32::MAX;
            let mut pivot_abs = 0.0f64;
            for &r in &pattern {
                let a = scratch.value[r as usize].abs();
                if a > pivot_abs {
                    pivot_abs = a;
                    pivot_row = r;
                }
            }
            if pivot_row == u32::MAX || pivot_abs < PIVOT_ABS_TOL {
                return Err(Error::Internal(format!(
                    "singular basis: no usable pivot for basis slot {slot} (best {pivot_abs:.3e})"
                )));
            }
            let pivot_val = scratch.value[pivot_row as usize];
            u_diag[k] = pivot_val;
            row_to_pos[pivot_row as usize] = k as u32;
            pos_to_row[k] = pivot_row;
            for &r in &pattern {
                let x = scratch.value[r as usize];
                scratch.value[r as usize] = 0.0;
                if r != pivot_row && x.abs() > DROP_TOL {
                    lower.idx.push(r);
                    lower.val.push(x / pivot_val);
                }
            }
            lower.seal();
        }

        // Remap L entries from original rows to pivot positions.
        for i in lower.idx.iter_mut() {
            *i = row_to_pos[*i as usize];
        }

        let mut slot_to_pos = vec![0u32; m];
        for (k, &slot) in order.iter().enumerate() {
            slot_to_pos[slot as usize] = k as u32;
        }

        let lower_t = lower.transposed(m);
        let upper_t = upper.transposed(m);
        Ok(Factorization {
            m,
            lower,
            lower_t,
            upper,
            upper_t,
            u_diag,
            row_to_pos,
            pos_to_row,
            pos_to_slot: order,
            slot_to_pos,
        })
    }

    /// Solve `B x = rhs`, `rhs` sparse over original rows, result sparse over
    /// basis slots.
    pub fn ftran(&self, rhs: &SparseVec, out: &mut SparseVec, scratch: &mut Scratch) {
        scratch.resize(self.m);
        scratch.next_init_epoch();

        // Seed positions and reach of the L pass.
        scratch.seeds.clear();
        for &r in &rhs.idx {
            scratch.seeds.push(self.row_to_pos[r as usize]);
        }
        let epoch = scratch.next_epoch();
        scratch.topo.clear();
        let seeds = std::mem::take(&mut scratch.seeds);
        scratch.reach(&self.lower.ptr, &self.lower.idx, &seeds, epoch);
        scratch.seeds = seeds;
        for t in 0..scratch.topo.len() {
            let p = scratch.topo[t];
            scratch.ensure_init(p);
        }
        for (i, (&r, &v)) in rhs.idx.iter().zip(&rhs.val).enumerate() {
            let _ = i;
            scratch.value[self.row_to_pos[r as usize] as usize] += v;
        }
        for t in (0..scratch.topo.len()).rev() {
            let p = scratch.topo[t] as usize;
            let x = scratch.value[p];
            if x != 0.0 {
                for e in self.lower.range(p) {
                    scratch.value[self.lower.idx[e] as usize] -= self.lower.val[e] * x;
                }
            }
        }

        // U pass: reach from the L-result support.
        let epoch2 = scratch.next_epoch();
        std::mem::swap(&mut scratch.topo, &mut scratch.topo2);
        scratch.topo.clear();
        let seeds2 = std::mem::take(&mut scratch.topo2);
        scratch.reach(&self.upper.ptr, &self.upper.idx, &seeds2, epoch2);
        scratch.topo2 = seeds2;
        for t in 0..scratch.topo.len() {
            let p = scratch.topo[t];
            scratch.ensure_init(p);
        }
        out.clear();
        for t in (0..scratch.topo.len()).rev() {
            let p = scratch.topo[t] as usize;
            let x = scratch.value[p] / self.u_diag[p];
            if x != 0.0 {
                out.push(self.pos_to_slot[p], x);
                for e in self.upper.range(p) {
                    scratch.value[self.upper.idx[e] as usize] -= self.upper.val[e] * x;
                }
            }
        }
    }

    /// Solve `B^T y = rhs`, `rhs` sparse over basis slots, result sparse over
    /// original rows.
    pub fn btran(&self, rhs: &SparseVec, out: &mut SparseVec, scratch: &mut Scratch) {
        scratch.resize(self.m);
        scratch.next_init_epoch();

        scratch.seeds.clear();
        for &s in &rhs.idx {
            scratch.seeds.push(self.slot_to_pos[s as usize]);
        }
        // U^T pass: dependencies run small -> large via U rows.
        let epoch = scratch.next_epoch();
        scratch.topo.clear();
        let seeds = std::mem::take(&mut scratch.seeds);
        scratch.reach(&self.upper_t.ptr, &self.upper_t.idx, &seeds, epoch);
        scratch.seeds = seeds;
        for t in 0..scratch.topo.len() {
            let p = scratch.topo[t];
            scratch.ensure_init(p);
        }
        for (&s, &v) in rhs.idx.iter().zip(&rhs.val) {
            scratch.value[self.slot_to_pos[s as usize] as usize] += v;
        }
        for t in (0..scratch.topo.len()).rev() {
            let p = scratch.topo[t] as usize;
            let x = scratch.value[p] / self.u_diag[p];
            scratch.value[p] = x;
            if x != 0.0 {
                for e in self.upper_t.range(p) {
                    scratch.value[self.upper_t.idx[e] as usize] -= self.upper_t.val[e] * x;
                }
            }
        }

        // L^T pass: dependencies run large -> small via L rows.
        let epoch2 = scratch.next_epoch();
        std::mem::swap(&mut scratch.topo, &mut scratch.topo2);
        scratch.topo.clear();
        let seeds2 = std::mem::take(&mut scratch.topo2);
        scratch.reach(&self.lower_t.ptr, &self.lower_t.idx, &seeds2, epoch2);
        scratch.topo2 = seeds2;
        for t in 0..scratch.topo.len() {
            let p = scratch.topo[t];
            scratch.ensure_init(p);
        }
        out.clear();
        for t in (0..scratch.topo.len()).rev() {
            let p = scratch.topo[t] as usize;
            let x = scratch.value[p];
            if x != 0.0 {
                out.push(self.pos_to_row[p], x);
                for e in self.lower_t.range(p) {
                    scratch.value[self.lower_t.idx[e] as usize] -= self.lower_t.val[e] * x;
                }
            }
        }
    }
}

/// DFS over L columns during factorization. Nodes are pivot positions marked
/// through their pivot-row cell; unpivoted rows terminate the walk and join
/// the candidate pattern.
fn dfs_lower(
    seed: u32,
    lower: &Triangle,
    pos_to_row: &[u32],
    row_to_pos: &[u32],
    scratch: &mut Scratch,
    epoch: u32,
    pattern: &mut Vec<u32>,
) {
    let seed_row = pos_to_row[seed as usize] as usize;
    if scratch.mark[seed_row] == epoch {
        return;
    }
    scratch.mark[seed_row] = epoch;
    scratch.value[seed_row] = 0.0;
    scratch.dfs.push((seed, lower.ptr[seed as usize]));
    while let Some((node, mut edge)) = scratch.dfs.pop() {
        let end = lower.ptr[node as usize + 1];
        let mut descended = false;
        while edge < end {
            let row = lower.idx[edge as usize] as usize; // original row index
            edge += 1;
            if scratch.mark[row] == epoch {
                continue;
            }
            scratch.mark[row] = epoch;
            scratch.value[row] = 0.0;
            let next = row_to_pos[row];
            if next == u32::MAX {
                pattern.push(row as u32);
            } else {
                scratch.dfs.push((node, edge));
                scratch.dfs.push((next, lower.ptr[next as usize]));
                descended = true;
                break;
            }
        }
        if !descended {
            scratch.topo.push(node);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_from(cols: &BasisColumns) -> Vec<Vec<f64>> {
        let m = cols.n_cols();
        let mut d = vec![vec![0.0; m]; m];
        for j in 0..m {
            let (rows, vals) = cols.col(j);
            for (&r, &v) in rows.iter().zip(vals) {
                d[r as usize][j] = v;
            }
        }
        d
    }

    fn mat_vec(d: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let m = d.len();
        (0..m)
            .map(|i| (0..m).map(|j| d[i][j] * x[j]).sum())
            .collect()
    }

    fn mat_t_vec(d: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let m = d.len();
        (0..m)
            .map(|j| (0..m).map(|i| d[i][j] * x[i]).sum())
            .collect()
    }

    fn to_dense(v: &SparseVec, m: usize) -> Vec<f64> {
        let mut d = vec![0.0; m];
        for (i, x) in v.iter() {
            d[i as usize] += x;
        }
        d
    }

    fn random_basis(m: usize, seed: u64) -> BasisColumns {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut cols = BasisColumns::default();
        cols.clear();
        for j in 0..m {
            cols.push_entry(j as u32, 2.0 + rng.gen::<f64>());
            for _ in 0..2 {
                let r = rng.gen_range(0..m) as u32;
                if r != j as u32 {
                    cols.push_entry(r, rng.gen_range(-1.0..1.0));
                }
            }
            cols.finish_col();
        }
        cols
    }

    #[test]
    fn ftran_btran_match_dense() {
        for seed in 0..8u64 {
            let m = 40;
            let cols = random_basis(m, seed);
            let dense = dense_from(&cols);
            let mut scratch = Scratch::default();
            let f = Factorization::factorize(&cols, &mut scratch).unwrap();

            let mut rhs = SparseVec::default();
            rhs.push(3, 1.0);
            rhs.push(17, -2.5);
            let mut out = SparseVec::default();
            f.ftran(&rhs, &mut out, &mut scratch);
            let x = to_dense(&out, m);
            let bx = mat_vec(&dense, &x);
            let want = to_dense(&rhs, m);
            for i in 0..m {
                assert!((bx[i] - want[i]).abs() < 1e-9, "seed {seed} ftran row {i}");
            }

            let mut rhs_t = SparseVec::default();
            rhs_t.push(5, 1.0);
            rhs_t.push(29, 0.5);
            f.btran(&rhs_t, &mut out, &mut scratch);
            let y = to_dense(&out, m);
            let bty = mat_t_vec(&dense, &y);
            let want = to_dense(&rhs_t, m);
            for j in 0..m {
                assert!((bty[j] - want[j]).abs() < 1e-9, "seed {seed} btran col {j}");
            }
        }
    }

    #[test]
    fn repeated_solves_reuse_scratch() {
        let m = 25;
        let cols = random_basis(m, 42);
        let dense = dense_from(&cols);
        let mut scratch = Scratch::default();
        let f = Factorization::factorize(&cols, &mut scratch).unwrap();
        let mut out = SparseVec::default();
        for k in 0..m {
            let mut rhs = SparseVec::default();
            rhs.push(k as u32, 1.0);
            f.ftran(&rhs, &mut out, &mut scratch);
            let x = to_dense(&out, m);
            let bx = mat_vec(&dense, &x);
            for i in 0..m {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((bx[i] - want).abs() < 1e-9, "k {k} row {i}");
            }
        }
    }

    #[test]
    fn cyclic_chain_factorizes() {
        // Storage-level chain: col t has +1 on row t and -0.9 on row t+1
        // (cyclic wrap), the shape the model builders produce.
        let m = 16;
        let mut cols = BasisColumns::default();
        cols.clear();
        for t in 0..m {
            cols.push_entry(t as u32, 1.0);
            cols.push_entry(((t + 1) % m) as u32, -0.9);
            cols.finish_col();
        }
        let dense = dense_from(&cols);
        let mut scratch = Scratch::default();
        let f = Factorization::factorize(&cols, &mut scratch).unwrap();
        let mut rhs = SparseVec::default();
        rhs.push(0, 1.0);
        let mut out = SparseVec::default();
        f.ftran(&rhs, &mut out, &mut scratch);
        let x = to_dense(&out, m);
        let bx = mat_vec(&dense, &x);
        assert!((bx[0] - 1.0).abs() < 1e-9);
        for (i, v) in bx.iter().enumerate().take(m).skip(1) {
            assert!(v.abs() < 1e-9, "row {i}");
        }
    }

    #[test]
    fn singular_basis_is_reported() {
        let mut cols = BasisColumns::default();
        cols.clear();
        cols.push_entry(0, 1.0);
        cols.finish_col();
        cols.push_entry(0, 2.0);
        cols.finish_col();
        let mut scratch = Scratch::default();
        assert!(Factorization::factorize(&cols, &mut scratch).is_err());
    }
}
