//! The tender formulation exactly as written, with all binary decisions
//! fixed. Products of binaries with capacities or deliveries are evaluated
//! as products; what remains is an LP in Q, X, I, V and S.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use vaxtender::instance::Instance;
use vaxtender::model::VarKey;

/// Index sets derived from the instance tables.
pub struct Sets {
    pub windows: Vec<(usize, usize)>,
    pub producers_of_antigen: Vec<Vec<usize>>,
    pub vaccines_of_producer: Vec<Vec<usize>>,
    pub antigens_of_producer: Vec<Vec<usize>>,
    pub vaccines_of_antigen: Vec<Vec<usize>>,
}

impl Sets {
    pub fn new(inst: &Instance) -> Self {
        let t = inst.num_periods;
        let windows = (1..=t).flat_map(|s| (s..=t.min(s + inst.max_tender_len - 1)).map(move |e| (s, e))).collect();
        let np = inst.producers.len();
        let na = inst.antigens.len();
        let mut vaccines_of_producer = vec![Vec::new(); np];
        let mut antigens_of_producer = vec![Vec::new(); np];
        let mut producers_of_antigen = vec![Vec::new(); na];
        let mut vaccines_of_antigen = vec![Vec::new(); na];
        for (v, ps) in inst.vaccine_producers.iter().enumerate() {
            for &p in ps {
                vaccines_of_producer[p].push(v);
                for &a in &inst.vaccine_antigens[v] {
                    antigens_of_producer[p].push(a);
                    producers_of_antigen[a].push(p);
                }
            }
            for &a in &inst.vaccine_antigens[v] {
                vaccines_of_antigen[a].push(v);
            }
        }
        for list in vaccines_of_producer
            .iter_mut()
            .chain(&mut antigens_of_producer)
            .chain(&mut producers_of_antigen)
            .chain(&mut vaccines_of_antigen)
        {
            list.sort_unstable();
            list.dedup();
        }
        Sets { windows, producers_of_antigen, vaccines_of_producer, antigens_of_producer, vaccines_of_antigen }
    }

    fn window(&self, t: usize, tau: usize) -> usize {
        self.windows.iter().position(|&w| w == (t, tau)).expect("window")
    }
}

/// One assignment of every binary decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Binaries {
    /// `f[a][w]`, `w` indexing [`Sets::windows`].
    pub f: Vec<Vec<bool>>,
    pub w: Vec<Vec<bool>>,
    /// `y[p][t-1]`.
    pub y: Vec<Vec<bool>>,
    pub l: Vec<Vec<bool>>,
}

pub fn num_binaries(inst: &Instance, sets: &Sets) -> usize {
    let nw = sets.windows.len();
    (inst.antigens.len() + inst.producers.len()) * nw + 2 * inst.producers.len() * inst.num_periods
}

impl Binaries {
    /// Decode bit `k` of `bits` in the order F, W, Y, L.
    pub fn from_bits(inst: &Instance, sets: &Sets, bits: u64) -> Self {
        let mut k = 0;
        let mut next = || {
            let b = bits >> k & 1 == 1;
            k += 1;
            b
        };
        let nw = sets.windows.len();
        let nt = inst.num_periods;
        let f = (0..inst.antigens.len()).map(|_| (0..nw).map(|_| next()).collect()).collect();
        let w = (0..inst.producers.len()).map(|_| (0..nw).map(|_| next()).collect()).collect();
        let y = (0..inst.producers.len()).map(|_| (0..nt).map(|_| next()).collect()).collect();
        let l = (0..inst.producers.len()).map(|_| (0..nt).map(|_| next()).collect()).collect();
        Binaries { f, w, y, l }
    }

    /// Value of a binary key, `None` for continuous keys.
    pub fn value(&self, sets: &Sets, key: &VarKey) -> Option<f64> {
        let b = match *key {
            VarKey::Tender { a, t, tau } => self.f[a][sets.window(t, tau)],
            VarKey::Grant { p, t, tau } => self.w[p][sets.window(t, tau)],
            VarKey::Produce { p, t } => self.y[p][t - 1],
            VarKey::Extend { p, t } => self.l[p][t - 1],
            _ => return None,
        };
        Some(if b { 1.0 } else { 0.0 })
    }
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Constraints that involve binaries only: tender supply, same-start
/// overlap, coverage and the two grant rows.
pub fn binary_rows_hold(inst: &Instance, sets: &Sets, strict: bool, b: &Binaries) -> bool {
    let len = inst.max_tender_len;
    for a in 0..inst.antigens.len() {
        for (k, &(t, tau)) in sets.windows.iter().enumerate() {
            let producing: usize =
                sets.producers_of_antigen[a].iter().map(|&p| (t..=tau).filter(|&l| b.y[p][l - 1]).count()).sum();
            if b.f[a][k] && producing < tau - t + 1 {
                return false;
            }
        }
        for t in 1..=inst.num_periods {
            let started = sets.windows.iter().enumerate().filter(|&(k, w)| w.0 == t && b.f[a][k]).count();
            if started > 1 {
                return false;
            }
        }
        for l in 1..=inst.num_periods {
            let first = if l > len { l - len + 1 } else { 1 };
            let covered = sets
                .windows
                .iter()
                .enumerate()
                .any(|(k, &(t, tau))| t >= first && t <= l && (!strict || tau >= l) && b.f[a][k]);
            if !covered {
                return false;
            }
        }
    }
    for p in 0..inst.producers.len() {
        let portfolio = &sets.antigens_of_producer[p];
        for k in 0..sets.windows.len() {
            let fs = portfolio.iter().filter(|&&a| b.f[a][k]).count() as f64;
            let w = ind(b.w[p][k]);
            if fs < w || fs > portfolio.len() as f64 * w {
                return false;
            }
        }
    }
    true
}

/// Result of one fixed binary pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    BinaryInfeasible,
    Infeasible,
    /// Total objective including the binary cost terms.
    Optimal(f64),
}

struct Lp {
    p: Problem,
    ok: bool,
}

impl Lp {
    /// Add `Σ terms (op) rhs`; a constraint without variables is checked.
    fn add(&mut self, terms: Vec<(Variable, f64)>, op: ComparisonOp, rhs: f64) {
        let terms: Vec<_> = terms.into_iter().filter(|t| t.1 != 0.0).collect();
        if terms.is_empty() {
            let tol = 1e-9 * rhs.abs().max(1.0);
            self.ok &= match op {
                ComparisonOp::Le => 0.0 <= rhs + tol,
                ComparisonOp::Ge => 0.0 >= rhs - tol,
                ComparisonOp::Eq => rhs.abs() <= tol,
            };
        } else {
            self.p.add_constraint(terms.as_slice(), op, rhs);
        }
    }
}

/// Solve the original formulation with every binary fixed to `b`.
pub fn solve_pattern(inst: &Instance, sets: &Sets, strict: bool, b: &Binaries) -> Outcome {
    if !binary_rows_hold(inst, sets, strict, b) {
        return Outcome::BinaryInfeasible;
    }
    let nt = inst.num_periods;
    let nw = sets.windows.len();
    let disc = |t: usize| inst.discount.powi(t as i32);
    let mut lp = Lp { p: Problem::new(OptimizationDirection::Minimize), ok: true };
    let inf = f64::INFINITY;

    // Producer-indexed tables sized for every producer; unused entries stay None.
    let nv = inst.vaccines.len();
    let np = inst.producers.len();
    let mut q = vec![vec![vec![None; nw]; np]; nv];
    let mut x = vec![vec![vec![None; nt]; np]; nv];
    for v in 0..nv {
        for &p in &inst.vaccine_producers[v] {
            for slot in q[v][p].iter_mut() {
                *slot = Some(lp.p.add_var(0.0, (0.0, inf)));
            }
            for t in 1..=nt {
                x[v][p][t - 1] = Some(lp.p.add_var(disc(t) * inst.reservation_price[v][p][t - 1], (0.0, inf)));
            }
        }
    }
    let stock: Vec<Vec<Variable>> = (0..nv)
        .map(|v| {
            (1..=nt)
                .map(|t| lp.p.add_var(disc(t) * inst.holding_rate[v] * inst.avg_price[v][t - 1], (0.0, inf)))
                .collect()
        })
        .collect();
    let used: Vec<Vec<Variable>> = (0..nv).map(|_| (0..nt).map(|_| lp.p.add_var(0.0, (0.0, inf))).collect()).collect();
    let short: Vec<Vec<Variable>> = (0..inst.antigens.len())
        .map(|_| (1..=nt).map(|t| lp.p.add_var(disc(t) * inst.shortage_penalty, (0.0, inf))).collect())
        .collect();

    let mut constant = 0.0;
    for a in 0..inst.antigens.len() {
        for (k, &(t, _)) in sets.windows.iter().enumerate() {
            constant += disc(t) * inst.tender_setup_cost[t - 1] * ind(b.f[a][k]);
        }
    }
    for p in 0..np {
        for t in 1..=nt {
            constant += disc(t) * inst.capacity_ext_cost[p] * ind(b.l[p][t - 1]);
        }
    }

    let s = |p: usize, t: usize| inst.capacity[p][t - 1];
    let kappa = inst.capacity_ext_rate;
    // s_pt + κ Σ_{k≤t} s_pk L_pk
    let extended = |p: usize, t: usize| s(p, t) + kappa * (1..=t).map(|k| s(p, k) * ind(b.l[p][k - 1])).sum::<f64>();

    for p in 0..np {
        for (k, &(t, tau)) in sets.windows.iter().enumerate() {
            let wv = ind(b.w[p][k]);
            let cap: f64 = (t..=tau).map(|l| extended(p, l)).sum();
            let terms = sets.vaccines_of_producer[p].iter().map(|&v| (q[v][p][k].unwrap(), 1.0)).collect();
            lp.add(terms, ComparisonOp::Le, wv * cap);
            for &v in &sets.vaccines_of_producer[p] {
                let mut terms = vec![(q[v][p][k].unwrap(), 1.0)];
                terms.extend((t..=tau).map(|l| (x[v][p][l - 1].unwrap(), -wv)));
                lp.add(terms, ComparisonOp::Ge, 0.0);
            }
        }
        for t in 1..=nt {
            let terms = sets.vaccines_of_producer[p].iter().map(|&v| (x[v][p][t - 1].unwrap(), 1.0)).collect();
            lp.add(terms, ComparisonOp::Le, ind(b.y[p][t - 1]) * extended(p, t));

            let terms = sets.vaccines_of_producer[p]
                .iter()
                .map(|&v| (x[v][p][t - 1].unwrap(), inst.reservation_price[v][p][t - 1]))
                .collect();
            let setup: f64 = sets.vaccines_of_producer[p]
                .iter()
                .map(|&v| (1.0 + inst.roi[v][p]) * inst.setup_cost[v][p][t - 1])
                .sum();
            lp.add(terms, ComparisonOp::Ge, setup * ind(b.y[p][t - 1]));
        }
    }
    for v in 0..nv {
        for t in 1..=nt {
            // I_{t-1} + Σ_p X_vpt − V_vt − I_vt = 0
            let mut terms: Vec<_> = inst.vaccine_producers[v].iter().map(|&p| (x[v][p][t - 1].unwrap(), 1.0)).collect();
            terms.push((used[v][t - 1], -1.0));
            terms.push((stock[v][t - 1], -1.0));
            let rhs = if t == 1 {
                -inst.initial_inventory[v]
            } else {
                terms.push((stock[v][t - 2], 1.0));
                0.0
            };
            lp.add(terms, ComparisonOp::Eq, rhs);
        }
    }
    for (a, short_a) in short.iter().enumerate() {
        for t in 1..=nt {
            // d_at − Σ V + S_{t-1} ≤ S_t
            let mut terms: Vec<_> = sets.vaccines_of_antigen[a].iter().map(|&v| (used[v][t - 1], -1.0)).collect();
            terms.push((short_a[t - 1], -1.0));
            let mut rhs = -inst.demand[a][t - 1];
            if t == 1 {
                rhs -= inst.initial_unvaccinated[a];
            } else {
                terms.push((short_a[t - 2], 1.0));
            }
            lp.add(terms, ComparisonOp::Le, rhs);
        }
    }
    if !lp.ok {
        return Outcome::Infeasible;
    }
    match lp.p.solve() {
        Ok(microlp::SolveOutcome::Solution(sol)) => Outcome::Optimal(sol.objective() + constant),
        Ok(other) => panic!("reference LP interrupted: {other:?}"),
        Err(microlp::Error::Infeasible) => Outcome::Infeasible,
        Err(e) => panic!("reference LP failed on a fixed pattern: {e}"),
    }
}

/// Minimum over all binary patterns, `None` when every pattern is infeasible.
pub fn brute_force(inst: &Instance, strict: bool) -> Option<f64> {
    let sets = Sets::new(inst);
    let n = num_binaries(inst, &sets);
    assert!(n <= 24, "too many binaries ({n}) to enumerate");
    (0..1u64 << n)
        .filter_map(|bits| match solve_pattern(inst, &sets, strict, &Binaries::from_bits(inst, &sets, bits)) {
            Outcome::Optimal(z) => Some(z),
            _ => None,
        })
        .min_by(f64::total_cmp)
}
