//! LP-based branch-and-bound over the binary columns of a [`MilpModel`].
//!
//! Nodes are taken from the pool in best-bound order (ties by smallest id)
//! in fixed-width batches. The LPs of a batch are solved in parallel and the
//! results merged one by one in pop order, so incumbents, pruning and child
//! ids depend only on the model and the parameters, never on thread timing.

mod node;

pub use node::{branch, Node};

use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::lp::{LpError, LpOptions, LpProblem, LpSolution, LpStatus};
use crate::model::MilpModel;
use node::Queued;

#[derive(Debug, Clone)]
pub struct SolveParams {
    pub rel_gap: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    pub int_tol: f64,
    /// Fixed batch width, making the search independent of thread count.
    /// When false the batch width follows the number of worker threads.
    pub deterministic: bool,
    pub batch_width: usize,
    /// Worker threads for node batches; 0 uses the global pool.
    pub threads: usize,
    /// Rounding heuristic is retried after this many nodes.
    pub heuristic_every: u64,
    /// Progress line every this many nodes (besides one per incumbent).
    pub log_every: u64,
    pub lp: LpOptions,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            rel_gap: 1e-6,
            time_limit: None,
            node_limit: None,
            int_tol: 1e-6,
            deterministic: true,
            batch_width: 8,
            threads: 0,
            heuristic_every: 50,
            log_every: 100,
            lp: LpOptions::default(),
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<(), MilpError> {
        let bad = |m: &str| Err(MilpError::InvalidParams(m.to_string()));
        if !(self.rel_gap >= 0.0 && self.rel_gap.is_finite()) {
            return bad("rel_gap must be finite and non-negative");
        }
        if self.time_limit.is_some_and(|t| t.is_zero()) {
            return bad("time limit must be positive");
        }
        if self.node_limit == Some(0) {
            return bad("node limit must be positive");
        }
        if !(self.int_tol > 0.0 && self.int_tol < 0.5) {
            return bad("int_tol must lie in (0, 0.5)");
        }
        if self.batch_width == 0 || self.heuristic_every == 0 || self.log_every == 0 {
            return bad("batch width and intervals must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MilpStatus {
    Optimal,
    GapReached,
    TimeLimit,
    NodeLimit,
    Infeasible,
}

/// Global bounds after a merged batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub nodes: u64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Incumbent column values, empty when none was found.
    pub x: Vec<f64>,
    /// Incumbent objective, `+∞` without an incumbent.
    pub objective: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub nodes: u64,
    pub lp_iterations: u64,
    pub trace: Vec<Progress>,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.x.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("invalid solve parameters: {0}")]
    InvalidParams(String),
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("node {node} failed after re-solve: {source}")]
    NodeFailure { node: u64, source: LpError },
}

/// Relative gap as reported: `(upper − lower) / max(1, |upper|)`.
pub fn relative_gap(upper: f64, lower: f64) -> f64 {
    if !upper.is_finite() {
        return f64::INFINITY;
    }
    ((upper - lower) / upper.abs().max(1.0)).max(0.0)
}

pub fn solve_milp(model: &MilpModel, params: &SolveParams) -> Result<MilpSolution, MilpError> {
    params.validate()?;
    exec::with_threads(params.threads, || Search::new(model, params).run())
}

struct Search<'m> {
    problem: LpProblem<'m>,
    params: &'m SolveParams,
    lp_opts: LpOptions,
    root_lo: Vec<f64>,
    root_hi: Vec<f64>,
    binaries: Vec<usize>,
    deadline: Option<Instant>,
    pool: BinaryHeap<Queued>,
    incumbent: Vec<f64>,
    ub: f64,
    lb: f64,
    nodes: u64,
    next_id: u64,
    lp_iterations: u64,
    trace: Vec<Progress>,
    last_heuristic: u64,
}

enum Stop {
    Done(MilpStatus),
    Continue,
}

impl<'m> Search<'m> {
    fn new(model: &'m MilpModel, params: &'m SolveParams) -> Self {
        let deadline = params.time_limit.map(|t| Instant::now() + t);
        let mut lp_opts = params.lp.clone();
        lp_opts.deadline = match (lp_opts.deadline, deadline) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let mut binaries: Vec<usize> = model.binary_columns().collect();
        binaries.sort_by_key(|&j| (model.columns[j].priority, j));
        Search {
            problem: LpProblem::new(model),
            params,
            lp_opts,
            root_lo: model.columns.iter().map(|c| c.lower).collect(),
            root_hi: model.columns.iter().map(|c| c.upper).collect(),
            binaries,
            deadline,
            pool: BinaryHeap::new(),
            incumbent: Vec::new(),
            ub: f64::INFINITY,
            lb: f64::NEG_INFINITY,
            nodes: 0,
            next_id: 1,
            lp_iterations: 0,
            trace: Vec::new(),
            last_heuristic: 0,
        }
    }

    fn model(&self) -> &MilpModel {
        self.problem.model()
    }

    /// Nodes whose bound is not below this are pruned.
    fn cutoff(&self) -> f64 {
        if self.ub.is_finite() {
            self.ub - 1e-9 * self.ub.abs().max(1.0)
        } else {
            f64::INFINITY
        }
    }

    fn solve_bounds(&self, lo: &[f64], hi: &[f64], warm: Option<&crate::lp::Basis>) -> Result<LpSolution, LpError> {
        match self.problem.solve_with_bounds(lo, hi, warm, &self.lp_opts) {
            Err(e @ (LpError::Numerical(_) | LpError::IterationLimit)) => {
                log::warn!("LP failure ({e}); re-solving with tightened tolerances");
                self.problem.solve_with_bounds(lo, hi, None, &self.lp_opts.tightened())
            }
            r => r,
        }
    }

    fn solve_node(&self, node: &Node) -> Result<LpSolution, LpError> {
        let (lo, hi) = node.bounds(&self.root_lo, &self.root_hi);
        self.solve_bounds(&lo, &hi, node.warm.as_deref())
    }

    /// Most fractional binary in the highest-priority class that has any.
    fn pick_branch(&self, x: &[f64]) -> Option<usize> {
        let cols = &self.model().columns;
        let mut best: Option<(u8, f64, usize)> = None;
        for &j in &self.binaries {
            let f = x[j] - x[j].floor();
            let dist = f.min(1.0 - f);
            if dist <= self.params.int_tol {
                continue;
            }
            let p = cols[j].priority;
            match best {
                Some((bp, _, _)) if p > bp => break,
                Some((_, bd, _)) if dist <= bd => {}
                _ => best = Some((p, dist, j)),
            }
        }
        best.map(|(_, _, j)| j)
    }

    /// Snap binaries and clean tiny negatives in continuous columns.
    fn polish(&self, x: &[f64]) -> Vec<f64> {
        let tol = self.lp_opts.feas_tol;
        self.model()
            .columns
            .iter()
            .zip(x)
            .map(|(c, &v)| {
                if c.is_binary() {
                    v.round()
                } else if v < 0.0 && v > -tol && c.lower <= 0.0 {
                    0.0
                } else {
                    v + 0.0
                }
            })
            .collect()
    }

    fn offer_incumbent(&mut self, x: &[f64], depth: u32, source: &str) {
        let x = self.polish(x);
        let obj = self.model().objective_value(&x);
        if obj < self.ub {
            self.ub = obj;
            self.incumbent = x;
            log::info!("incumbent from {source}");
            self.log_progress(depth);
        }
    }

    fn log_progress(&self, depth: u32) {
        log::info!(
            "node={} lb={:.9e} ub={:.9e} gap={:.3e} depth={}",
            self.nodes,
            self.lb,
            self.ub,
            relative_gap(self.ub, self.lb),
            depth
        );
    }

    /// LP rounding: fix binaries to rounded values and re-solve the rest.
    fn rounding_heuristic(&mut self, x: &[f64], depth: u32) {
        let rules: [fn(f64, f64) -> f64; 2] =
            [|v, _| if v >= 0.5 { 1.0 } else { 0.0 }, |v, tol| if v > tol { 1.0 } else { 0.0 }];
        for rule in rules {
            let (mut lo, mut hi) = (self.root_lo.clone(), self.root_hi.clone());
            for &j in &self.binaries {
                let v = rule(x[j], self.params.int_tol).clamp(lo[j], hi[j]);
                lo[j] = v;
                hi[j] = v;
            }
            match self.solve_bounds(&lo, &hi, None) {
                Ok(sol) => {
                    self.lp_iterations += sol.iterations as u64;
                    if sol.status == LpStatus::Optimal {
                        self.offer_incumbent(&sol.x, depth, "rounding");
                        return;
                    }
                }
                Err(e) => log::debug!("rounding heuristic LP failed: {e}"),
            }
        }
    }

    /// Merge one solved node. Returns the LP point when it was fractional.
    fn merge(&mut self, node: Node, sol: LpSolution) -> Result<Option<Vec<f64>>, MilpError> {
        self.lp_iterations += sol.iterations as u64;
        match sol.status {
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Unbounded => return Err(MilpError::Unbounded),
            LpStatus::Optimal => {}
        }
        let bound = sol.objective.max(node.bound);
        if bound >= self.cutoff() {
            return Ok(None);
        }
        match self.pick_branch(&sol.x) {
            None => {
                self.offer_incumbent(&sol.x, node.depth, "node");
                Ok(None)
            }
            Some(j) => {
                let parent = Node { bound, warm: Some(Arc::new(sol.basis)), ..node };
                let (down, up) = branch(&parent, j, self.next_id);
                self.next_id += 2;
                self.pool.push(Queued(down));
                self.pool.push(Queued(up));
                Ok(Some(sol.x))
            }
        }
    }

    fn update_lower_bound(&mut self) {
        let best = self.pool.peek().map_or(self.ub, |q| q.0.bound.min(self.ub));
        if best > self.lb {
            self.lb = best;
        }
        self.trace.push(Progress { nodes: self.nodes, lower_bound: self.lb, upper_bound: self.ub });
    }

    fn check_stop(&self) -> Stop {
        if self.pool.is_empty() {
            return Stop::Done(if self.incumbent.is_empty() { MilpStatus::Infeasible } else { MilpStatus::Optimal });
        }
        if !self.incumbent.is_empty() && relative_gap(self.ub, self.lb) <= self.params.rel_gap {
            return Stop::Done(MilpStatus::GapReached);
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Stop::Done(MilpStatus::TimeLimit);
        }
        if self.params.node_limit.is_some_and(|l| self.nodes >= l) {
            return Stop::Done(MilpStatus::NodeLimit);
        }
        Stop::Continue
    }

    fn node_failure(node: u64, e: LpError) -> Result<Option<MilpStatus>, MilpError> {
        match e {
            LpError::TimeLimit => Ok(Some(MilpStatus::TimeLimit)),
            source => Err(MilpError::NodeFailure { node, source }),
        }
    }

    fn run(mut self) -> Result<MilpSolution, MilpError> {
        let root = Node::root(f64::NEG_INFINITY);
        self.nodes = 1;
        let status = match self.solve_node(&root) {
            Err(e) => Self::node_failure(0, e)?,
            Ok(sol) => {
                if sol.status == LpStatus::Optimal {
                    self.lb = sol.objective;
                }
                let frac = self.merge(root, sol)?;
                if let Some(x) = frac {
                    self.rounding_heuristic(&x, 0);
                }
                None
            }
        };
        let status = match status {
            Some(s) => s,
            None => self.search()?,
        };
        if status == MilpStatus::Optimal {
            self.lb = self.ub;
        }
        if self.trace.last().map(|p| (p.lower_bound, p.upper_bound)) != Some((self.lb, self.ub)) {
            self.trace.push(Progress { nodes: self.nodes, lower_bound: self.lb, upper_bound: self.ub });
        }
        self.log_progress(0);
        Ok(MilpSolution {
            status,
            objective: self.ub,
            lower_bound: self.lb,
            gap: relative_gap(self.ub, self.lb),
            x: self.incumbent,
            nodes: self.nodes,
            lp_iterations: self.lp_iterations,
            trace: self.trace,
        })
    }

    fn search(&mut self) -> Result<MilpStatus, MilpError> {
        let width = if self.params.deterministic { self.params.batch_width } else { exec::current_threads().max(1) };
        let mut last_log = 0;
        loop {
            self.update_lower_bound();
            if let Stop::Done(s) = self.check_stop() {
                return Ok(s);
            }
            let mut batch = Vec::with_capacity(width);
            while batch.len() < width {
                let Some(Queued(node)) = self.pool.pop() else { break };
                if node.bound < self.cutoff() {
                    batch.push(node);
                }
            }
            if let Some(limit) = self.params.node_limit {
                batch.truncate((limit - self.nodes) as usize);
            }
            if batch.is_empty() {
                continue;
            }
            let results = {
                let this = &*self;
                exec::par_map(&batch, |n| this.solve_node(n))
            };
            let mut best_frac: Option<(f64, u32, Vec<f64>)> = None;
            let mut timed_out = false;
            for (node, res) in batch.into_iter().zip(results) {
                self.nodes += 1;
                let (id, depth) = (node.id, node.depth);
                match res {
                    Err(e) => {
                        if Self::node_failure(id, e)?.is_some() {
                            timed_out = true;
                        }
                    }
                    Ok(sol) => {
                        let obj = sol.objective;
                        if let Some(x) = self.merge(node, sol)? {
                            if best_frac.as_ref().is_none_or(|b| obj < b.0) {
                                best_frac = Some((obj, depth, x));
                            }
                        }
                    }
                }
            }
            if timed_out {
                self.update_lower_bound();
                return Ok(MilpStatus::TimeLimit);
            }
            if self.nodes - self.last_heuristic >= self.params.heuristic_every {
                if let Some((_, depth, x)) = best_frac {
                    self.last_heuristic = self.nodes;
                    self.rounding_heuristic(&x, depth);
                }
            }
            if self.nodes - last_log >= self.params.log_every {
                last_log = self.nodes;
                self.log_progress(self.pool.peek().map_or(0, |q| q.0.depth));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_lp;
    use crate::model::Sense;

    fn knapsack() -> MilpModel {
        let mut m = MilpModel::new("k");
        let x = m.add_binary("x");
        let y = m.add_binary("y");
        m.add_row("c", Sense::Le, 4.0, [(x, 3.0), (y, 2.0)]);
        m.set_objective([(x, -5.0), (y, -4.0)], 0.0);
        m
    }

    #[test]
    fn knapsack_optimum() {
        let s = solve_milp(&knapsack(), &SolveParams::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert_eq!(s.x, vec![1.0, 0.0]);
        assert!((s.objective + 5.0).abs() < 1e-9);
        assert_eq!(s.gap, 0.0);
    }

    #[test]
    fn no_binaries_is_one_node() {
        let mut m = MilpModel::new("lp");
        let x = m.add_continuous("x", 0.0, 3.0);
        m.add_row("c", Sense::Ge, 1.5, [(x, 1.0)]);
        m.set_objective([(x, 2.0)], 1.0);
        let s = solve_milp(&m, &SolveParams::default()).unwrap();
        assert_eq!(s.nodes, 1);
        assert_eq!(s.objective, solve_lp(&m).unwrap().objective);
    }

    #[test]
    fn infeasible_milp() {
        let mut m = MilpModel::new("inf");
        let x = m.add_binary("x");
        let y = m.add_binary("y");
        m.add_row("c", Sense::Eq, 1.0, [(x, 2.0), (y, 2.0)]);
        let s = solve_milp(&m, &SolveParams::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Infeasible);
        assert!(!s.has_incumbent());
    }

    #[test]
    fn branching_prefers_priority_class() {
        let mut m = MilpModel::new("p");
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        m.columns[a].priority = 1;
        m.add_row("c", Sense::Le, 1.0, [(a, 1.0), (b, 1.0)]);
        let params = SolveParams::default();
        let s = Search::new(&m, &params);
        // a is more fractional but b has the higher priority class.
        assert_eq!(s.pick_branch(&[0.5, 0.1]), Some(b));
        assert_eq!(s.pick_branch(&[0.5, 0.0]), Some(a));
        assert_eq!(s.pick_branch(&[1.0, 0.0]), None);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = SolveParams { node_limit: Some(0), ..SolveParams::default() };
        assert!(matches!(solve_milp(&knapsack(), &p), Err(MilpError::InvalidParams(_))));
    }

    #[test]
    fn gap_definition() {
        assert_eq!(relative_gap(10.0, 8.0), 0.2);
        assert_eq!(relative_gap(0.5, 0.0), 0.5);
        assert_eq!(relative_gap(f64::INFINITY, 0.0), f64::INFINITY);
    }
}
