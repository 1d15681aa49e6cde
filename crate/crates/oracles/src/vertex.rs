//! Exhaustive vertex enumeration for small bounded LPs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vaxtender::lp::LpStatus;
use vaxtender::model::{MilpModel, Sense};

/// `min c·x` subject to `rows` and finite bounds `lower ≤ x ≤ upper`.
#[derive(Debug, Clone)]
pub struct DenseLp {
    pub cost: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Sense, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DenseLp {
    pub fn to_model(&self) -> MilpModel {
        let mut m = MilpModel::new("lp");
        let cols: Vec<usize> =
            (0..self.cost.len()).map(|j| m.add_continuous(format!("x{j}"), self.lower[j], self.upper[j])).collect();
        for (i, (a, s, b)) in self.rows.iter().enumerate() {
            m.add_row(format!("r{i}"), *s, *b, cols.iter().zip(a).map(|(&j, &v)| (j, v)));
        }
        m.set_objective(cols.iter().zip(&self.cost).map(|(&j, &c)| (j, c)), 0.0);
        m
    }

    pub fn feasible(&self, x: &[f64], tol: f64) -> bool {
        let bounds =
            x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol);
        bounds
            && self.rows.iter().all(|(a, s, b)| {
                let act: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
                let t = tol * act.abs().max(b.abs()).max(1.0);
                match s {
                    Sense::Le => act <= b + t,
                    Sense::Ge => act >= b - t,
                    Sense::Eq => (act - b).abs() <= t,
                }
            })
    }
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Best vertex, or `None` when no vertex is feasible (the region is empty
/// since all bounds are finite).
pub fn vertex_optimum(lp: &DenseLp) -> Option<(f64, Vec<f64>)> {
    let n = lp.cost.len();
    assert!(lp.lower.iter().chain(&lp.upper).all(|b| b.is_finite()), "bounds must be finite");
    // Candidate hyperplanes: every row, then each bound.
    let mut planes: Vec<(Vec<f64>, f64)> = lp.rows.iter().map(|(a, _, b)| (a.clone(), *b)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    combinations(planes.len(), n, &mut |pick| {
        let a = DMatrix::from_fn(n, n, |i, j| planes[pick[i]].0[j]);
        let b = DVector::from_iterator(n, pick.iter().map(|&i| planes[i].1));
        let lu = a.lu();
        if lu.determinant().abs() < 1e-10 {
            return;
        }
        let Some(x) = lu.solve(&b) else { return };
        let x: Vec<f64> = x.iter().copied().collect();
        if !lp.feasible(&x, 1e-9) {
            return;
        }
        let z: f64 = lp.cost.iter().zip(&x).map(|(c, x)| c * x).sum();
        if best.as_ref().is_none_or(|(bz, _)| z < *bz) {
            best = Some((z, x));
        }
    });
    best
}

/// Random LP with 2..=6 variables, 1..=5 rows of mixed sense and small
/// integer data inside a finite box.
pub fn random_lp(seed: u64) -> DenseLp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(1..=5);
    let mut int = |lo: i32, hi: i32| rng.gen_range(lo..=hi) as f64;
    let cost = (0..n).map(|_| int(-6, 6)).collect();
    let lower: Vec<f64> = (0..n).map(|_| int(-3, 0)).collect();
    let upper = lower.iter().map(|l| l + int(1, 6)).collect();
    let rows = (0..m)
        .map(|k| {
            let a = (0..n).map(|_| int(-4, 4)).collect();
            let sense = match k % 4 {
                3 => Sense::Eq,
                1 => Sense::Ge,
                _ => Sense::Le,
            };
            (a, sense, int(-6, 8))
        })
        .collect();
    DenseLp { cost, rows, lower, upper }
}

/// Small LPs whose status is known by inspection.
pub fn hand_built_cases() -> Vec<(&'static str, MilpModel, LpStatus)> {
    let inf = f64::INFINITY;
    let mut out = Vec::new();

    let mut m = MilpModel::new("contradictory bounds rows");
    let x = m.add_continuous("x", 0.0, inf);
    m.add_row("lo", Sense::Ge, 2.0, [(x, 1.0)]);
    m.add_row("hi", Sense::Le, 1.0, [(x, 1.0)]);
    out.push(("x >= 2 and x <= 1", m, LpStatus::Infeasible));

    let mut m = MilpModel::new("parallel equalities");
    let x = m.add_continuous("x", 0.0, inf);
    let y = m.add_continuous("y", 0.0, inf);
    m.add_row("a", Sense::Eq, 1.0, [(x, 1.0), (y, 1.0)]);
    m.add_row("b", Sense::Eq, 3.0, [(x, 1.0), (y, 1.0)]);
    out.push(("x + y = 1 and x + y = 3", m, LpStatus::Infeasible));

    let mut m = MilpModel::new("box too small");
    let x = m.add_continuous("x", 0.0, 2.0);
    let y = m.add_continuous("y", 0.0, 2.0);
    m.add_row("sum", Sense::Ge, 5.0, [(x, 1.0), (y, 1.0)]);
    out.push(("x + y >= 5 in [0,2]^2", m, LpStatus::Infeasible));

    let mut m = MilpModel::new("ray");
    let x = m.add_continuous("x", 0.0, inf);
    let y = m.add_continuous("y", 0.0, inf);
    m.add_row("d", Sense::Le, 1.0, [(x, 1.0), (y, -1.0)]);
    m.set_objective([(x, -1.0), (y, -1.0)], 0.0);
    out.push(("min -x-y with x - y <= 1", m, LpStatus::Unbounded));

    let mut m = MilpModel::new("free");
    let x = m.add_continuous("x", f64::NEG_INFINITY, inf);
    m.add_row("cap", Sense::Le, 3.0, [(x, 1.0)]);
    m.set_objective([(x, 1.0)], 0.0);
    out.push(("min x, x free, x <= 3", m, LpStatus::Unbounded));
    out
}
