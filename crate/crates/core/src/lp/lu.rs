//! Sparse LU factorization of a simplex basis.
//!
//! Right-looking elimination with Markowitz pivot selection and threshold
//! partial pivoting. Column and row singletons are taken first, which for
//! bases dominated by slack columns leaves only a small kernel to eliminate.
//!
//! The factors are kept as an elimination sequence: step `k` pivots on row
//! `pivot_row[k]` and basis position `pivot_col[k]`, with the row operations
//! (`L` multipliers) and the remaining pivot-row entries (`U`) of that step.

const NONE: usize = usize::MAX;
/// Relative threshold for partial pivoting.
const THRESHOLD: f64 = 0.1;
/// Entries below this magnitude after an update are dropped.
const DROP_TOL: f64 = 1e-14;
/// Absolute magnitude below which a pivot candidate counts as zero.
pub(crate) const SINGULAR_TOL: f64 = 1e-11;
/// Markowitz search stops after this many candidate columns.
const SEARCH_COLUMNS: usize = 4;

/// Intrusive bucket lists keyed by nonzero count.
struct Buckets {
    head: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    count: Vec<usize>,
    active: Vec<bool>,
}

impl Buckets {
    fn new(n: usize, max_count: usize) -> Self {
        Buckets {
            head: vec![NONE; max_count + 2],
            next: vec![NONE; n],
            prev: vec![NONE; n],
            count: vec![0; n],
            active: vec![false; n],
        }
    }

    fn insert(&mut self, i: usize, count: usize) {
        let count = count.min(self.head.len() - 1);
        self.count[i] = count;
        self.active[i] = true;
        self.prev[i] = NONE;
        self.next[i] = self.head[count];
        if self.head[count] != NONE {
            self.prev[self.head[count]] = i;
        }
        self.head[count] = i;
    }

    fn remove(&mut self, i: usize) {
        if !self.active[i] {
            return;
        }
        let (p, n) = (self.prev[i], self.next[i]);
        if p != NONE {
            self.next[p] = n;
        } else {
            self.head[self.count[i]] = n;
        }
        if n != NONE {
            self.prev[n] = p;
        }
        self.active[i] = false;
    }

    fn update(&mut self, i: usize, count: usize) {
        if self.active[i] {
            self.remove(i);
            self.insert(i, count);
        }
    }

    fn first(&self, count: usize) -> Option<usize> {
        self.head.get(count).copied().filter(|&i| i != NONE)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_col: Vec<usize>,
    pivot_val: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

/// Basis positions and rows left over when the basis is singular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Singular {
    pub columns: Vec<usize>,
    pub rows: Vec<usize>,
}

impl LuFactors {
    pub(crate) fn nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }

    /// Solve `B x = b`. `b` is indexed by row, the result by basis position.
    pub(crate) fn solve(&self, b: &mut [f64], out: &mut [f64]) {
        for k in 0..self.m {
            let br = b[self.pivot_row[k]];
            if br != 0.0 {
                for e in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_idx[e]] -= self.l_val[e] * br;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut v = b[self.pivot_row[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                v -= self.u_val[e] * out[self.u_idx[e]];
            }
            out[self.pivot_col[k]] = v / self.pivot_val[k];
        }
    }

    /// Solve `Bᵀ y = c`. `c` is indexed by basis position (and is consumed as
    /// scratch), the result by row.
    pub(crate) fn solve_transpose(&self, c: &mut [f64], out: &mut [f64]) {
        for k in 0..self.m {
            let z = c[self.pivot_col[k]] / self.pivot_val[k];
            out[self.pivot_row[k]] = z;
            if z != 0.0 {
                for e in self.u_start[k]..self.u_start[k + 1] {
                    c[self.u_idx[e]] -= self.u_val[e] * z;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut acc = 0.0;
            for e in self.l_start[k]..self.l_start[k + 1] {
                acc += self.l_val[e] * out[self.l_idx[e]];
            }
            out[self.pivot_row[k]] -= acc;
        }
    }
}

/// Factorize the `m × m` matrix whose column `j` is `columns[j]` (row, value)
/// pairs. On singularity the dependent columns and the rows left without a
/// pivot are returned so the caller can swap in unit columns.
pub(crate) fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<LuFactors, Singular> {
    assert_eq!(columns.len(), m);
    let mut cols: Vec<Vec<(usize, f64)>> =
        columns.iter().map(|c| c.iter().copied().filter(|&(_, v)| v.abs() > DROP_TOL).collect()).collect();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (j, c) in cols.iter().enumerate() {
        for &(i, _) in c {
            rows[i].push(j);
        }
    }

    let mut col_b = Buckets::new(m, m);
    let mut row_b = Buckets::new(m, m);
    for (j, col) in cols.iter().enumerate() {
        col_b.insert(j, col.len());
    }
    for (i, row) in rows.iter().enumerate() {
        row_b.insert(i, row.len());
    }

    let mut f = LuFactors {
        m,
        pivot_row: Vec::with_capacity(m),
        pivot_col: Vec::with_capacity(m),
        pivot_val: Vec::with_capacity(m),
        l_start: vec![0],
        l_idx: Vec::new(),
        l_val: Vec::new(),
        u_start: vec![0],
        u_idx: Vec::new(),
        u_val: Vec::new(),
    };
    let mut singular_cols = Vec::new();
    let mut pos = vec![NONE; m];
    let mut l_buf: Vec<(usize, f64)> = Vec::new();
    let mut u_buf: Vec<(usize, f64)> = Vec::new();
    let mut row_done = vec![false; m];
    let mut col_done = vec![false; m];

    let mut remaining = m;
    while remaining > 0 {
        // Empty columns are structurally dependent.
        if let Some(j) = col_b.first(0) {
            col_b.remove(j);
            col_done[j] = true;
            singular_cols.push(j);
            remaining -= 1;
            continue;
        }

        let choice = select_pivot(&cols, &rows, &col_b, &row_b);
        let Some((r, c)) = choice else {
            // Every remaining entry is numerically zero.
            for (j, done) in col_done.iter_mut().enumerate() {
                if !*done {
                    singular_cols.push(j);
                    *done = true;
                }
            }
            break;
        };

        // Pivot column: multipliers for the other rows.
        let col_c = std::mem::take(&mut cols[c]);
        let piv = col_c.iter().find(|&&(i, _)| i == r).map(|&(_, v)| v).unwrap();
        l_buf.clear();
        for &(i, v) in &col_c {
            remove_from(&mut rows[i], c);
            if i != r {
                l_buf.push((i, v / piv));
            }
        }
        col_b.remove(c);

        // Pivot row: entries left in the other active columns.
        u_buf.clear();
        for &j in &rows[r] {
            let cj = &mut cols[j];
            if let Some(k) = cj.iter().position(|&(i, _)| i == r) {
                u_buf.push((j, cj[k].1));
                cj.swap_remove(k);
            }
        }
        rows[r].clear();
        row_b.remove(r);
        row_done[r] = true;
        col_done[c] = true;

        // Schur complement update.
        for &(j, u) in &u_buf {
            let cj = &mut cols[j];
            for (k, &(i, _)) in cj.iter().enumerate() {
                pos[i] = k;
            }
            for &(i, l) in &l_buf {
                let delta = -l * u;
                if pos[i] != NONE {
                    cj[pos[i]].1 += delta;
                } else {
                    pos[i] = cj.len();
                    cj.push((i, delta));
                    rows[i].push(j);
                }
            }
            for &(i, _) in cj.iter() {
                pos[i] = NONE;
            }
            let mut k = 0;
            while k < cj.len() {
                if cj[k].1.abs() <= DROP_TOL {
                    let (i, _) = cj.swap_remove(k);
                    remove_from(&mut rows[i], j);
                } else {
                    k += 1;
                }
            }
            col_b.update(j, cj.len());
        }
        for &(i, _) in &l_buf {
            row_b.update(i, rows[i].len());
        }
        for &(j, _) in &u_buf {
            // Rows touched only through dropped entries.
            for &(i, _) in &cols[j] {
                row_b.update(i, rows[i].len());
            }
        }

        f.pivot_row.push(r);
        f.pivot_col.push(c);
        f.pivot_val.push(piv);
        for &(i, l) in &l_buf {
            f.l_idx.push(i);
            f.l_val.push(l);
        }
        f.l_start.push(f.l_idx.len());
        for &(j, u) in &u_buf {
            f.u_idx.push(j);
            f.u_val.push(u);
        }
        f.u_start.push(f.u_idx.len());
        remaining -= 1;
    }

    if !singular_cols.is_empty() {
        singular_cols.sort_unstable();
        let free_rows = (0..m).filter(|&i| !row_done[i]).collect();
        return Err(Singular { columns: singular_cols, rows: free_rows });
    }
    Ok(f)
}

fn remove_from(list: &mut Vec<usize>, x: usize) {
    if let Some(k) = list.iter().position(|&y| y == x) {
        list.swap_remove(k);
    }
}

fn select_pivot(
    cols: &[Vec<(usize, f64)>],
    rows: &[Vec<usize>],
    col_b: &Buckets,
    row_b: &Buckets,
) -> Option<(usize, usize)> {
    // Column singletons never cause fill-in.
    let mut j = col_b.first(1);
    while let Some(c) = j {
        let (r, v) = cols[c][0];
        if v.abs() > SINGULAR_TOL {
            return Some((r, c));
        }
        j = Some(col_b.next[c]).filter(|&n| n != NONE);
    }
    // Row singletons: fill-in free as well, but respect the threshold.
    let mut i = row_b.first(1);
    while let Some(r) = i {
        let c = rows[r][0];
        let col = &cols[c];
        let max = col.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
        if let Some(&(_, v)) = col.iter().find(|&&(k, _)| k == r) {
            if v.abs() >= THRESHOLD * max && v.abs() > SINGULAR_TOL {
                return Some((r, c));
            }
        }
        i = Some(row_b.next[r]).filter(|&n| n != NONE);
    }

    let mut best: Option<(usize, usize)> = None;
    let mut best_cost = usize::MAX;
    let mut best_abs = 0.0;
    let mut searched = 0;
    for count in 1..col_b.head.len() {
        let mut j = col_b.first(count);
        while let Some(c) = j {
            let col = &cols[c];
            let max = col.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
            if max > SINGULAR_TOL {
                for &(r, v) in col {
                    if v.abs() < THRESHOLD * max || v.abs() <= SINGULAR_TOL {
                        continue;
                    }
                    let cost = (rows[r].len() - 1) * (col.len() - 1);
                    if cost < best_cost || (cost == best_cost && v.abs() > best_abs) {
                        best = Some((r, c));
                        best_cost = cost;
                        best_abs = v.abs();
                    }
                }
                searched += 1;
            }
            if searched >= SEARCH_COLUMNS && best.is_some() {
                return best;
            }
            j = Some(col_b.next[c]).filter(|&n| n != NONE);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_cols(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m).map(|j| (0..m).filter(|&i| a[i][j] != 0.0).map(|i| (i, a[i][j])).collect()).collect()
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..a.len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
    }

    fn check_solves(a: &[Vec<f64>]) {
        let m = a.len();
        let lu = factorize(m, &dense_to_cols(a)).unwrap();
        let x: Vec<f64> = (0..m).map(|i| (i as f64) - 1.5).collect();
        let mut b = matvec(a, &x);
        let mut out = vec![0.0; m];
        lu.solve(&mut b, &mut out);
        for i in 0..m {
            assert!((out[i] - x[i]).abs() < 1e-9, "solve {i}: {} vs {}", out[i], x[i]);
        }
        let mut c = matvec(&transpose(a), &x);
        let mut y = vec![0.0; m];
        lu.solve_transpose(&mut c, &mut y);
        for i in 0..m {
            assert!((y[i] - x[i]).abs() < 1e-9, "transpose {i}: {} vs {}", y[i], x[i]);
        }
    }

    #[test]
    fn identity_and_permutation() {
        check_solves(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        check_solves(&[vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 3.0], vec![4.0, 0.0, 0.0]]);
    }

    #[test]
    fn dense_needs_elimination() {
        check_solves(&[
            vec![2.0, 1.0, 1.0, 0.0],
            vec![4.0, 3.0, 3.0, 1.0],
            vec![8.0, 7.0, 9.0, 5.0],
            vec![6.0, 7.0, 9.0, 8.0],
        ]);
    }

    #[test]
    fn small_leading_entry_is_not_pivoted_on() {
        check_solves(&[vec![1e-10, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn singular_reports_dependent_columns() {
        let a = vec![vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![0.0, 0.0, 1.0]];
        let err = factorize(3, &dense_to_cols(&a)).unwrap_err();
        assert_eq!(err.columns.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }

    #[test]
    fn random_sparse_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = rng.gen_range(1..25);
            let mut a = vec![vec![0.0; m]; m];
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = rng.gen_range(1.0..3.0);
                for x in row.iter_mut() {
                    if rng.gen_bool(0.2) {
                        *x += rng.gen_range(-2.0..2.0);
                    }
                }
            }
            check_solves(&a);
        }
    }
}
