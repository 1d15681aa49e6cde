//! Reference implementations that share no code with the solver: the
//! original tender formulation solved per binary pattern, LP vertex
//! enumeration, an MPS reader and a random tiny-instance generator.

pub mod formulation;
pub mod instances;
pub mod mps;
pub mod vertex;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use vaxtender::model::{MilpModel, Sense};

/// Outcome of an LP solved by the reference solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpOutcome {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Solve the continuous relaxation of `model` with column bounds replaced
/// by `bounds`, using `microlp`. Rows whose columns are all fixed are
/// checked directly first.
pub fn reference_lp(model: &MilpModel, bounds: &[(f64, f64)]) -> LpOutcome {
    for r in &model.rows {
        if r.coefs.iter().all(|&(j, _)| bounds[j].0 == bounds[j].1) {
            let act: f64 = r.coefs.iter().map(|&(j, a)| a * bounds[j].0).sum();
            let tol = 1e-9 * act.abs().max(r.rhs.abs()).max(1.0);
            let ok = match r.sense {
                Sense::Le => act <= r.rhs + tol,
                Sense::Ge => act >= r.rhs - tol,
                Sense::Eq => (act - r.rhs).abs() <= tol,
            };
            if !ok {
                return LpOutcome::Infeasible;
            }
        }
    }
    let cost = model.cost_vector();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = bounds.iter().zip(&cost).map(|(&b, &c)| p.add_var(c, b)).collect();
    for r in &model.rows {
        let terms: Vec<_> = r.coefs.iter().map(|&(j, a)| (vars[j], a)).collect();
        let op = match r.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        if !terms.is_empty() {
            p.add_constraint(terms.as_slice(), op, r.rhs);
        }
    }
    match p.solve() {
        Ok(microlp::SolveOutcome::Solution(sol)) => LpOutcome::Optimal(sol.objective() + model.objective.constant),
        Ok(other) => panic!("reference LP interrupted: {other:?}"),
        Err(microlp::Error::Infeasible) => LpOutcome::Infeasible,
        Err(microlp::Error::Unbounded) => LpOutcome::Unbounded,
        Err(e) => panic!("reference LP failed: {e}"),
    }
}

/// `|a − b| ≤ tol · max(1, |a|, |b|)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
