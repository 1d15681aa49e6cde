//! LP relaxations of a [`MilpModel`]: integrality is dropped and the
//! remaining linear program is solved by a bounded revised primal simplex.

mod lu;
mod simplex;
mod standard;

pub use standard::{standardize, StandardForm};

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::MilpModel;
use simplex::{Outcome, Simplex};

#[derive(Debug, Clone, PartialEq)]
pub struct LpOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
    /// Basis updates between refactorizations.
    pub refactor_interval: usize,
    pub deadline: Option<Instant>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            max_iterations: 5_000_000,
            degenerate_limit: 1000,
            refactor_interval: 100,
            deadline: None,
        }
    }
}

impl LpOptions {
    /// Tolerances tightened by a factor of 100, used when re-solving after a
    /// numerical failure.
    pub fn tightened(&self) -> Self {
        LpOptions {
            feas_tol: self.feas_tol * 1e-2,
            opt_tol: self.opt_tol * 1e-2,
            refactor_interval: (self.refactor_interval / 4).max(10),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column held at zero.
    Free,
}

/// Status of every structural and slack column, usable as a warm start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis(pub Vec<BasisStatus>);

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Column values; meaningful when optimal.
    pub x: Vec<f64>,
    /// `cᵀx + constant` when optimal, `+∞` if infeasible, `−∞` if unbounded.
    pub objective: f64,
    pub row_activity: Vec<f64>,
    /// Row duals `y` with reduced costs `c − Aᵀy`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub basis: Basis,
    pub iterations: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("time limit reached during LP solve")]
    TimeLimit,
}

/// Relative violation above which an "optimal" point is rejected.
const ACCEPT_VIOLATION: f64 = 1e-6;

/// A model prepared for repeated solves under changing column bounds.
pub struct LpProblem<'m> {
    model: &'m MilpModel,
    sf: StandardForm,
}

impl<'m> LpProblem<'m> {
    pub fn new(model: &'m MilpModel) -> Self {
        LpProblem { model, sf: standardize(model) }
    }

    pub fn model(&self) -> &MilpModel {
        self.model
    }

    pub fn standard_form(&self) -> &StandardForm {
        &self.sf
    }

    /// Solve with the model's own column bounds.
    pub fn solve(&self, opts: &LpOptions) -> Result<LpSolution, LpError> {
        let (lo, hi): (Vec<f64>, Vec<f64>) = self.model.columns.iter().map(|c| (c.lower, c.upper)).unzip();
        self.solve_with_bounds(&lo, &hi, None, opts)
    }

    /// Solve with overriding column bounds (original units), optionally
    /// warm-started from a previous basis of the same problem.
    pub fn solve_with_bounds(
        &self,
        lower: &[f64],
        upper: &[f64],
        warm: Option<&Basis>,
        opts: &LpOptions,
    ) -> Result<LpSolution, LpError> {
        let n = self.sf.num_structural();
        let mut lo = self.sf.lower().to_vec();
        let mut hi = self.sf.upper().to_vec();
        for j in 0..n {
            lo[j] = self.sf.scale_value(j, lower[j]);
            hi[j] = self.sf.scale_value(j, upper[j]);
        }
        let mut sx = Simplex::new(&self.sf, opts, lo, hi, warm.map(|b| b.0.as_slice()));
        let outcome = sx.run(opts.deadline)?;
        log::trace!(
            "lp {}: {:?} after {} iterations (factor nnz {})",
            self.model.name,
            outcome,
            sx.iterations,
            sx.factor_nnz()
        );

        let mut x = self.sf.recover(&sx.x);
        let basis = Basis(sx.state.clone());
        let status = match outcome {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Infeasible => LpStatus::Infeasible,
            Outcome::Unbounded => LpStatus::Unbounded,
        };
        let (objective, duals, reduced_costs) = match status {
            LpStatus::Optimal => {
                for j in 0..n {
                    x[j] = x[j].clamp(lower[j], upper[j]);
                }
                let viol = self.model.max_violation(&x);
                if viol > ACCEPT_VIOLATION {
                    return Err(LpError::Numerical(format!("optimal point violates rows by {viol:e} (relative)")));
                }
                let duals = sx.duals.iter().zip(self.sf.row_scale()).map(|(y, r)| y * r).collect();
                let rc = sx.reduced_costs();
                let reduced = (0..n).map(|j| rc[j] / self.sf.col_scale()[j]).collect();
                (self.model.objective_value(&x), duals, reduced)
            }
            LpStatus::Infeasible => (f64::INFINITY, Vec::new(), Vec::new()),
            LpStatus::Unbounded => (f64::NEG_INFINITY, Vec::new(), Vec::new()),
        };
        let row_activity = self.model.rows.iter().map(|r| r.activity(&x)).collect();
        Ok(LpSolution { status, x, objective, row_activity, duals, reduced_costs, basis, iterations: sx.iterations })
    }
}

/// Solve the LP relaxation of `model` with default options.
pub fn solve_lp(model: &MilpModel) -> Result<LpSolution, LpError> {
    solve_lp_with(model, &LpOptions::default())
}

pub fn solve_lp_with(model: &MilpModel, opts: &LpOptions) -> Result<LpSolution, LpError> {
    LpProblem::new(model).solve(opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn box_lp() {
        let mut m = MilpModel::new("box");
        let x = m.add_continuous("x", 0.0, INF);
        let y = m.add_continuous("y", 0.0, INF);
        m.add_row("cx", Sense::Le, 1.0, [(x, 1.0)]);
        m.add_row("cy", Sense::Le, 1.0, [(y, 1.0)]);
        m.set_objective([(x, -1.0), (y, -1.0)], 0.0);
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 2.0).abs() < 1e-12);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_box_is_infeasible() {
        let mut m = MilpModel::new("e");
        let x = m.add_continuous("x", f64::NEG_INFINITY, INF);
        m.add_row("a", Sense::Ge, 1.0, [(x, 1.0)]);
        m.add_row("b", Sense::Le, 0.0, [(x, 1.0)]);
        assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut m = MilpModel::new("u");
        let x = m.add_continuous("x", 0.0, INF);
        m.set_objective([(x, -1.0)], 0.0);
        assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variable_and_equalities() {
        // min x + 2y, x free, x + y = 3, x - y >= -1, y <= 10
        let mut m = MilpModel::new("f");
        let x = m.add_continuous("x", f64::NEG_INFINITY, INF);
        let y = m.add_continuous("y", 0.0, 10.0);
        m.add_row("e", Sense::Eq, 3.0, [(x, 1.0), (y, 1.0)]);
        m.add_row("g", Sense::Ge, -1.0, [(x, 1.0), (y, -1.0)]);
        m.set_objective([(x, 1.0), (y, 2.0)], 0.5);
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        // y = 0, x = 3.
        assert!((s.objective - 3.5).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn bound_overrides_and_warm_start() {
        let mut m = MilpModel::new("w");
        let x = m.add_continuous("x", 0.0, 1.0);
        let y = m.add_continuous("y", 0.0, 1.0);
        m.add_row("c", Sense::Le, 4.0, [(x, 3.0), (y, 2.0)]);
        m.set_objective([(x, -5.0), (y, -4.0)], 0.0);
        let p = LpProblem::new(&m);
        let root = p.solve(&LpOptions::default()).unwrap();
        // y has the better ratio, so the relaxation sits at (2/3, 1).
        assert!((root.objective + 22.0 / 3.0).abs() < 1e-9, "{}", root.objective);
        let child = p.solve_with_bounds(&[1.0, 0.0], &[1.0, 1.0], Some(&root.basis), &LpOptions::default()).unwrap();
        // x = 1 leaves room for y = 1/2.
        assert!((child.objective + 7.0).abs() < 1e-9, "{}", child.objective);
    }

    #[test]
    fn badly_scaled_rows() {
        let mut m = MilpModel::new("s");
        let x = m.add_continuous("x", 0.0, INF);
        let y = m.add_continuous("y", 0.0, INF);
        m.add_row("big", Sense::Ge, 3e8, [(x, 1e8), (y, 2e8)]);
        m.add_row("small", Sense::Ge, 1e-4, [(x, 1e-4), (y, 1e-5)]);
        m.set_objective([(x, 1.0), (y, 1.0)], 0.0);
        let s = solve_lp(&m).unwrap();
        // Both rows bind: x + 2y = 3 and x + 0.1y = 1.
        let yv = 2.0 / 1.9;
        let xv = 1.0 - 0.1 * yv;
        assert!((s.objective - (xv + yv)).abs() < 1e-9, "{}", s.objective);
    }
}
