//! Bounded-variable revised primal simplex on a [`StandardForm`].
//!
//! Phase 1 minimizes the sum of bound infeasibilities of the basic variables
//! and shares the basis with phase 2, which prices the true objective. The
//! basis inverse is an LU factorization followed by a product-form eta file
//! that is discarded at every refactorization.

use std::time::Instant;

use super::lu::{factorize, LuFactors};
use super::standard::StandardForm;
use super::{BasisStatus, LpError, LpOptions};

/// Smallest |α_i| accepted as a pivot in the ratio test.
const PIVOT_TOL: f64 = 1e-9;
/// A step shorter than this counts as degenerate.
const DEGENERATE_STEP: f64 = 1e-12;
/// Attempts at repairing a singular basis before giving up.
const MAX_REPAIRS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

pub(crate) struct Simplex<'a> {
    sf: &'a StandardForm,
    opts: &'a LpOptions,
    m: usize,
    n: usize,
    pub(crate) lo: Vec<f64>,
    pub(crate) hi: Vec<f64>,
    pub(crate) x: Vec<f64>,
    pub(crate) state: Vec<BasisStatus>,
    head: Vec<usize>,
    lu: Option<LuFactors>,
    etas: Vec<Eta>,
    pub(crate) iterations: usize,
    degenerate_run: usize,
    /// Phase-2 duals at termination (scaled space).
    pub(crate) duals: Vec<f64>,
}

impl<'a> Simplex<'a> {
    /// `lo`/`hi` are scaled bounds over structural and slack columns.
    pub(crate) fn new(
        sf: &'a StandardForm,
        opts: &'a LpOptions,
        lo: Vec<f64>,
        hi: Vec<f64>,
        warm: Option<&[BasisStatus]>,
    ) -> Self {
        let m = sf.num_rows();
        let n = sf.num_structural();
        let nt = n + m;
        let mut state = vec![BasisStatus::AtLower; nt];
        let warm_ok = warm.filter(|w| w.len() == nt && w.iter().filter(|&&s| s == BasisStatus::Basic).count() == m);
        match warm_ok {
            Some(w) => state.copy_from_slice(w),
            None => {
                for s in state.iter_mut().skip(n) {
                    *s = BasisStatus::Basic;
                }
            }
        }
        let mut head = Vec::with_capacity(m);
        for (j, s) in state.iter().enumerate() {
            if *s == BasisStatus::Basic {
                head.push(j);
            }
        }
        let mut sx = Simplex {
            sf,
            opts,
            m,
            n,
            lo,
            hi,
            x: vec![0.0; nt],
            state,
            head,
            lu: None,
            etas: Vec::new(),
            iterations: 0,
            degenerate_run: 0,
            duals: vec![0.0; m],
        };
        for j in 0..nt {
            if sx.state[j] != BasisStatus::Basic {
                sx.state[j] = sx.nonbasic_state(j, sx.state[j]);
                sx.x[j] = sx.nonbasic_value(j);
            }
        }
        sx
    }

    /// Pick a legal nonbasic status close to `want`.
    fn nonbasic_state(&self, j: usize, want: BasisStatus) -> BasisStatus {
        let (lo, hi) = (self.lo[j], self.hi[j]);
        match want {
            BasisStatus::AtUpper if hi.is_finite() => BasisStatus::AtUpper,
            _ if lo.is_finite() => BasisStatus::AtLower,
            _ if hi.is_finite() => BasisStatus::AtUpper,
            _ => BasisStatus::Free,
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            BasisStatus::AtLower => self.lo[j],
            BasisStatus::AtUpper => self.hi[j],
            _ => 0.0,
        }
    }

    fn column_entries(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        if j < self.n {
            let (rows, vals) = self.sf.column(j);
            out.extend(rows.iter().copied().zip(vals.iter().copied()));
        } else {
            out.push((j - self.n, 1.0));
        }
    }

    /// `a_jᵀ y`.
    fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let (rows, vals) = self.sf.column(j);
            rows.iter().zip(vals).map(|(&i, &v)| v * y[i]).sum()
        } else {
            y[j - self.n]
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        self.etas.clear();
        let mut buf = Vec::new();
        for _ in 0..=MAX_REPAIRS {
            let cols: Vec<Vec<(usize, f64)>> = self
                .head
                .iter()
                .map(|&j| {
                    self.column_entries(j, &mut buf);
                    buf.clone()
                })
                .collect();
            match factorize(self.m, &cols) {
                Ok(lu) => {
                    self.lu = Some(lu);
                    return Ok(());
                }
                Err(sing) => {
                    // Swap each dependent column for the slack of an
                    // unpivoted row.
                    for (&pos, &row) in sing.columns.iter().zip(&sing.rows) {
                        let out = self.head[pos];
                        let slack = self.n + row;
                        self.state[out] = self.nonbasic_state(out, BasisStatus::AtLower);
                        self.x[out] = self.nonbasic_value(out);
                        self.state[slack] = BasisStatus::Basic;
                        self.head[pos] = slack;
                    }
                    if sing.columns.len() != sing.rows.len() {
                        return Err(LpError::Numerical("inconsistent singular basis".into()));
                    }
                }
            }
        }
        Err(LpError::Numerical("singular basis beyond repair".into()))
    }

    /// `B⁻¹ b` for a row-indexed `b`; result by basis position.
    fn ftran(&self, b: &mut [f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.lu.as_ref().unwrap().solve(b, &mut out);
        for eta in &self.etas {
            let vr = out[eta.pos] / eta.pivot;
            out[eta.pos] = vr;
            if vr != 0.0 {
                for &(i, a) in &eta.entries {
                    out[i] -= a * vr;
                }
            }
        }
        out
    }

    /// `B⁻ᵀ c` for a position-indexed `c`; result by row.
    fn btran(&self, mut c: Vec<f64>) -> Vec<f64> {
        for eta in self.etas.iter().rev() {
            let mut v = c[eta.pos];
            for &(i, a) in &eta.entries {
                v -= a * c[i];
            }
            c[eta.pos] = v / eta.pivot;
        }
        let mut out = vec![0.0; self.m];
        self.lu.as_ref().unwrap().solve_transpose(&mut c, &mut out);
        out
    }

    fn recompute_basic(&mut self) {
        let mut r = self.sf.rhs().to_vec();
        for j in 0..self.n + self.m {
            if self.state[j] == BasisStatus::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            if j < self.n {
                let (rows, vals) = self.sf.column(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    r[i] -= v * xj;
                }
            } else {
                r[j - self.n] -= xj;
            }
        }
        let xb = self.ftran(&mut r);
        for (pos, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.sf.cost()[j]
        } else {
            0.0
        }
    }

    /// Phase-1 cost of the basic variable at each position, or `None` when
    /// the basis is primal feasible.
    fn infeasibility_costs(&self) -> Option<Vec<f64>> {
        let tol = self.opts.feas_tol;
        let mut any = false;
        let c: Vec<f64> = self
            .head
            .iter()
            .map(|&j| {
                if self.x[j] < self.lo[j] - tol {
                    any = true;
                    -1.0
                } else if self.x[j] > self.hi[j] + tol {
                    any = true;
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        any.then_some(c)
    }

    /// Choose an entering column and its direction (+1 increase, −1 decrease).
    fn price(&self, y: &[f64], phase1: bool, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.opt_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n + self.m {
            let st = self.state[j];
            if st == BasisStatus::Basic || self.lo[j] == self.hi[j] {
                continue;
            }
            let c = if phase1 { 0.0 } else { self.cost(j) };
            let d = c - self.column_dot(j, y);
            let dir = match st {
                BasisStatus::AtLower if d < -tol => 1.0,
                BasisStatus::AtUpper if d > tol => -1.0,
                BasisStatus::Free if d.abs() > tol => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    pub(crate) fn run(&mut self, deadline: Option<Instant>) -> Result<Outcome, LpError> {
        for j in 0..self.n + self.m {
            if self.lo[j] > self.hi[j] {
                return Ok(Outcome::Infeasible);
            }
        }
        self.refactor()?;
        self.recompute_basic();
        let mut fresh = true;
        let mut buf = Vec::new();
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(LpError::IterationLimit);
            }
            if self.iterations.is_multiple_of(64) {
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        return Err(LpError::TimeLimit);
                    }
                }
            }
            if self.etas.len() >= self.opts.refactor_interval {
                self.refactor()?;
                self.recompute_basic();
                fresh = true;
            }

            let phase1_costs = self.infeasibility_costs();
            let phase1 = phase1_costs.is_some();
            let cb = phase1_costs.unwrap_or_else(|| self.head.iter().map(|&j| self.cost(j)).collect());
            let y = self.btran(cb);
            let bland = self.degenerate_run >= self.opts.degenerate_limit;

            let Some((q, dir)) = self.price(&y, phase1, bland) else {
                if !fresh {
                    self.refactor()?;
                    self.recompute_basic();
                    fresh = true;
                    continue;
                }
                if phase1 {
                    return Ok(Outcome::Infeasible);
                }
                self.duals = y;
                return Ok(Outcome::Optimal);
            };

            self.column_entries(q, &mut buf);
            let mut rhs = vec![0.0; self.m];
            for &(i, v) in &buf {
                rhs[i] = v;
            }
            let alpha = self.ftran(&mut rhs);

            let (leave, theta) = self.ratio_test(&alpha, dir, bland);
            let flip = (self.hi[q] - self.lo[q]).is_finite() && self.hi[q] - self.lo[q] <= theta;

            if leave.is_none() && !flip {
                if !fresh {
                    self.refactor()?;
                    self.recompute_basic();
                    fresh = true;
                    continue;
                }
                if phase1 {
                    return Err(LpError::Numerical("phase 1 ray without breakpoint".into()));
                }
                return Ok(Outcome::Unbounded);
            }

            self.iterations += 1;
            fresh = false;
            let step = if flip { self.hi[q] - self.lo[q] } else { theta };
            if step <= DEGENERATE_STEP {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            if step != 0.0 {
                for (pos, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        let b = self.head[pos];
                        self.x[b] -= dir * a * step;
                    }
                }
            }

            if flip {
                self.state[q] = if dir > 0.0 { BasisStatus::AtUpper } else { BasisStatus::AtLower };
                self.x[q] = self.nonbasic_value(q);
                continue;
            }

            let (r, to_upper) = leave.unwrap();
            let b = self.head[r];
            self.x[q] += dir * step;
            self.state[b] = if to_upper { BasisStatus::AtUpper } else { BasisStatus::AtLower };
            if self.lo[b] == self.hi[b] {
                self.state[b] = BasisStatus::AtLower;
            }
            self.x[b] = self.nonbasic_value(b);
            self.state[q] = BasisStatus::Basic;
            self.head[r] = q;
            let entries =
                alpha.iter().enumerate().filter(|&(i, &a)| i != r && a != 0.0).map(|(i, &a)| (i, a)).collect();
            self.etas.push(Eta { pos: r, pivot: alpha[r], entries });
        }
    }

    /// Returns the leaving position with the bound it leaves at (`true` for
    /// upper), and the step length. Harris two-pass unless `bland`.
    fn ratio_test(&self, alpha: &[f64], dir: f64, bland: bool) -> (Option<(usize, bool)>, f64) {
        let tol = self.opts.feas_tol;
        // Each candidate: position, exact ratio, relaxed ratio, |alpha|, to_upper.
        let mut cands: Vec<(usize, f64, f64, f64, bool)> = Vec::new();
        for (pos, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.head[pos];
            let delta = -dir * a;
            let (xb, lo, hi) = (self.x[b], self.lo[b], self.hi[b]);
            let below = xb < lo - tol;
            let above = xb > hi + tol;
            if delta > 0.0 {
                if below {
                    cands.push((pos, (lo - xb) / delta, (lo - xb) / delta, a.abs(), false));
                } else if !above && hi.is_finite() {
                    let gap = (hi - xb).max(0.0);
                    cands.push((pos, gap / delta, (hi - xb + tol) / delta, a.abs(), true));
                }
            } else if above {
                cands.push((pos, (xb - hi) / -delta, (xb - hi) / -delta, a.abs(), true));
            } else if !below && lo.is_finite() {
                let gap = (xb - lo).max(0.0);
                cands.push((pos, gap / -delta, (xb - lo + tol) / -delta, a.abs(), false));
            }
        }
        if cands.is_empty() {
            return (None, f64::INFINITY);
        }
        if bland {
            let min = cands.iter().fold(f64::INFINITY, |m, c| m.min(c.1));
            let pick = cands.iter().filter(|c| c.1 <= min + DEGENERATE_STEP).min_by_key(|c| self.head[c.0]).unwrap();
            return (Some((pick.0, pick.4)), pick.1.max(0.0));
        }
        let bound = cands.iter().fold(f64::INFINITY, |m, c| m.min(c.2));
        let mut pick = None;
        let mut best = -1.0;
        for c in &cands {
            if c.1 <= bound && c.3 > best {
                best = c.3;
                pick = Some(c);
            }
        }
        let pick = pick.unwrap_or_else(|| cands.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap());
        (Some((pick.0, pick.4)), pick.1.max(0.0))
    }

    /// Reduced costs of all columns using the phase-2 duals (scaled space).
    pub(crate) fn reduced_costs(&self) -> Vec<f64> {
        (0..self.n + self.m).map(|j| self.cost(j) - self.column_dot(j, &self.duals)).collect()
    }

    pub(crate) fn factor_nnz(&self) -> usize {
        self.lu.as_ref().map_or(0, |l| l.nnz())
    }
}
