//! Generic sparse MILP representation and the compiler from an [`Instance`]
//! to it.
//!
//! [`Instance`]: crate::instance::Instance

mod build;
mod dump;
mod linearize;
pub mod mps;

pub use build::{build_model, BuildOptions};
pub use dump::{model_from_dump, model_to_dump, ModelDump};
pub use linearize::{commitment_bounds, linearize_binary_products, linearize_commitment, CommitmentBounds, ProductMap};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::InstanceError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("empty model not exportable")]
    Empty,
    #[error("name collision after sanitization: {0:?}")]
    NameCollision(String),
    #[error("MPS parse error at line {line}: {message}")]
    Mps { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrality {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integrality: Integrality,
    /// Branching class; lower values are branched on first.
    #[serde(default)]
    pub priority: u8,
}

impl Column {
    pub fn is_binary(&self) -> bool {
        self.integrality == Integrality::Binary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub sense: Sense,
    pub rhs: f64,
    /// Sorted by column, no duplicates, no zeros.
    pub coefs: Vec<(usize, f64)>,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }

    /// Magnitude used to make feasibility tolerances relative.
    pub fn scale(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| (a * x[j]).abs()).fold(self.rhs.abs().max(1.0), f64::max)
    }
}

/// Linear objective, always minimized.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub coefs: Vec<(usize, f64)>,
    pub constant: f64,
}

/// Semantic identity of a column in a model compiled from an instance.
///
/// Indices are positions in the instance's antigen/vaccine/producer lists;
/// periods are 1-based. Field order mirrors the subscript order of the
/// formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    /// Tender for antigen `a` covering `t..=tau`.
    Tender { a: usize, t: usize, tau: usize },
    /// Commitment of producer `p` for vaccine `v` over `t..=tau`.
    Commitment { v: usize, p: usize, t: usize, tau: usize },
    /// Doses of `v` delivered by `p` in `t`.
    Delivery { v: usize, p: usize, t: usize },
    /// Producer `p` produces in `t`.
    Produce { p: usize, t: usize },
    /// Producer `p` holds a commitment for `t..=tau`.
    Grant { p: usize, t: usize, tau: usize },
    /// Capacity extension by `p` in `t`.
    Extend { p: usize, t: usize },
    /// Stock of `v` at period `t`.
    Inventory { v: usize, t: usize },
    /// Children vaccinated with `v` in `t`.
    Vaccinated { v: usize, t: usize },
    /// Children unvaccinated for antigen `a` in `t`.
    Unvaccinated { a: usize, t: usize },
    /// Window delivery total `Σ_{l=t..tau} X_vpl`.
    DeliverySum { v: usize, p: usize, t: usize, tau: usize },
    /// McCormick stand-in for `W_ptτ · X̃_vptτ`.
    Envelope { v: usize, p: usize, t: usize, tau: usize },
    /// `W_ptτ · L_pk`.
    GrantExtend { p: usize, t: usize, tau: usize, k: usize },
    /// `Y_pt · L_pl`.
    ProduceExtend { p: usize, t: usize, l: usize },
}

impl VarKey {
    pub fn kind(&self) -> VarKind {
        match self {
            VarKey::Tender { .. } => VarKind::Tender,
            VarKey::Commitment { .. } => VarKind::Commitment,
            VarKey::Delivery { .. } => VarKind::Delivery,
            VarKey::Produce { .. } => VarKind::Produce,
            VarKey::Grant { .. } => VarKind::Grant,
            VarKey::Extend { .. } => VarKind::Extend,
            VarKey::Inventory { .. } => VarKind::Inventory,
            VarKey::Vaccinated { .. } => VarKind::Vaccinated,
            VarKey::Unvaccinated { .. } => VarKind::Unvaccinated,
            VarKey::DeliverySum { .. } => VarKind::DeliverySum,
            VarKey::Envelope { .. } => VarKind::Envelope,
            VarKey::GrantExtend { .. } => VarKind::GrantExtend,
            VarKey::ProduceExtend { .. } => VarKind::ProduceExtend,
        }
    }
}

/// Column block, in model order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Tender,
    Commitment,
    Delivery,
    Produce,
    Grant,
    Extend,
    Inventory,
    Vaccinated,
    Unvaccinated,
    DeliverySum,
    Envelope,
    GrantExtend,
    ProduceExtend,
}

impl VarKind {
    pub const ALL: [VarKind; 13] = [
        VarKind::Tender,
        VarKind::Commitment,
        VarKind::Delivery,
        VarKind::Produce,
        VarKind::Grant,
        VarKind::Extend,
        VarKind::Inventory,
        VarKind::Vaccinated,
        VarKind::Unvaccinated,
        VarKind::DeliverySum,
        VarKind::Envelope,
        VarKind::GrantExtend,
        VarKind::ProduceExtend,
    ];

    /// Prefix used in column names.
    pub fn symbol(self) -> &'static str {
        match self {
            VarKind::Tender => "F",
            VarKind::Commitment => "Q",
            VarKind::Delivery => "X",
            VarKind::Produce => "Y",
            VarKind::Grant => "W",
            VarKind::Extend => "L",
            VarKind::Inventory => "I",
            VarKind::Vaccinated => "V",
            VarKind::Unvaccinated => "S",
            VarKind::DeliverySum => "XT",
            VarKind::Envelope => "K",
            VarKind::GrantExtend => "ZW",
            VarKind::ProduceExtend => "ZY",
        }
    }
}

/// Bijection between semantic keys and column ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarIndex {
    keys: Vec<VarKey>,
    ids: HashMap<VarKey, usize>,
}

impl VarIndex {
    pub fn get(&self, key: &VarKey) -> Option<usize> {
        self.ids.get(key).copied()
    }

    pub fn key(&self, col: usize) -> Option<&VarKey> {
        self.keys.get(col)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &VarKey)> {
        self.keys.iter().enumerate()
    }

    fn insert(&mut self, key: VarKey, col: usize) {
        debug_assert_eq!(col, self.keys.len());
        let previous = self.ids.insert(key, col);
        assert!(previous.is_none(), "duplicate variable key {key:?}");
        self.keys.push(key);
    }
}

/// A minimization MILP with sparse rows and bounded columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    pub objective: Objective,
    /// Populated for models compiled from an instance, empty otherwise.
    pub var_index: VarIndex,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel { name: name.into(), ..Default::default() }
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_column(&mut self, name: impl Into<String>, lower: f64, upper: f64, integrality: Integrality) -> usize {
        let (lower, upper) = match integrality {
            Integrality::Binary => (lower.max(0.0), upper.min(1.0)),
            Integrality::Continuous => (lower, upper),
        };
        self.columns.push(Column { name: name.into(), lower, upper, integrality, priority: 0 });
        self.columns.len() - 1
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.add_column(name, lower, upper, Integrality::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.add_column(name, 0.0, 1.0, Integrality::Binary)
    }

    /// Add a column with a semantic key; the key fixes its name.
    pub fn add_keyed(
        &mut self,
        key: VarKey,
        name: String,
        lower: f64,
        upper: f64,
        integrality: Integrality,
        priority: u8,
    ) -> usize {
        let col = self.add_column(name, lower, upper, integrality);
        self.columns[col].priority = priority;
        self.var_index.insert(key, col);
        col
    }

    /// Add a row; coefficients are merged per column and zeros dropped.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        sense: Sense,
        rhs: f64,
        coefs: impl IntoIterator<Item = (usize, f64)>,
    ) -> usize {
        // `+ 0.0` folds a negative zero rhs into +0.
        self.rows.push(Row { name: name.into(), sense, rhs: rhs + 0.0, coefs: normalize(coefs) });
        self.rows.len() - 1
    }

    pub fn set_objective(&mut self, coefs: impl IntoIterator<Item = (usize, f64)>, constant: f64) {
        self.objective = Objective { coefs: normalize(coefs), constant };
    }

    pub fn col(&self, key: &VarKey) -> Option<usize> {
        self.var_index.get(key)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.constant + self.objective.coefs.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    /// Dense objective coefficient vector.
    pub fn cost_vector(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_columns()];
        for &(j, v) in &self.objective.coefs {
            c[j] += v;
        }
        c
    }

    pub fn binary_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.columns.iter().enumerate().filter(|(_, c)| c.is_binary()).map(|(j, _)| j)
    }

    /// Largest relative row violation and largest bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x) / r.scale(x)).fold(0.0, f64::max);
        let bounds = self
            .columns
            .iter()
            .zip(x)
            .map(|(c, &v)| (c.lower - v).max(v - c.upper).max(0.0) / v.abs().max(1.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Check the structural invariants: finite data, in-range columns,
    /// binary bounds within `[0,1]`, key bijection.
    pub fn check(&self) -> Result<(), ModelError> {
        let n = self.num_columns();
        for c in &self.columns {
            if c.lower.is_nan() || c.upper.is_nan() || c.lower == f64::INFINITY || c.upper == f64::NEG_INFINITY {
                return Err(ModelError::NonFinite(format!("bounds of column {}", c.name)));
            }
            if c.is_binary() && (c.lower < 0.0 || c.upper > 1.0) {
                return Err(ModelError::Invalid(format!("binary column {} has bounds outside [0,1]", c.name)));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(ModelError::NonFinite(format!("rhs of row {}", r.name)));
            }
            for &(j, a) in &r.coefs {
                if j >= n {
                    return Err(ModelError::Invalid(format!("row {} references column {j}", r.name)));
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFinite(format!("coefficient in row {}", r.name)));
                }
            }
        }
        for &(j, c) in &self.objective.coefs {
            if j >= n || !c.is_finite() {
                return Err(ModelError::NonFinite("objective".into()));
            }
        }
        if !self.objective.constant.is_finite() {
            return Err(ModelError::NonFinite("objective constant".into()));
        }
        if !self.var_index.is_empty() && self.var_index.len() != n {
            return Err(ModelError::Invalid("variable index does not cover every column".into()));
        }
        Ok(())
    }

    /// Number of columns per semantic block.
    pub fn census(&self) -> HashMap<VarKind, usize> {
        let mut out = HashMap::new();
        for (_, key) in self.var_index.iter() {
            *out.entry(key.kind()).or_insert(0) += 1;
        }
        out
    }

    /// Number of rows whose name starts with `family[`.
    pub fn row_family_count(&self, family: &str) -> usize {
        self.rows.iter().filter(|r| r.name.strip_prefix(family).is_some_and(|rest| rest.starts_with('['))).count()
    }
}

fn normalize(coefs: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = coefs.into_iter().collect();
    v.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for (j, a) in v {
        match out.last_mut() {
            Some((k, acc)) if *k == j => *acc += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_merge_duplicate_columns_and_drop_zeros() {
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", 0.0, 1.0);
        let y = m.add_continuous("y", 0.0, 1.0);
        m.add_row("r", Sense::Le, 1.0, [(y, 2.0), (x, 1.0), (y, -2.0), (x, 0.5)]);
        assert_eq!(m.rows[0].coefs, vec![(x, 1.5)]);
    }

    #[test]
    fn binary_bounds_clamped() {
        let mut m = MilpModel::new("t");
        let b = m.add_column("b", -3.0, 7.0, Integrality::Binary);
        assert_eq!((m.columns[b].lower, m.columns[b].upper), (0.0, 1.0));
    }

    #[test]
    fn violation_by_sense() {
        let row = Row { name: "r".into(), sense: Sense::Ge, rhs: 2.0, coefs: vec![(0, 1.0)] };
        assert_eq!(row.violation(&[1.5]), 0.5);
        assert_eq!(row.violation(&[3.0]), 0.0);
        let eq = Row { sense: Sense::Eq, ..row };
        assert_eq!(eq.violation(&[3.0]), 1.0);
    }

    #[test]
    fn check_rejects_nan_coefficient() {
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", 0.0, 1.0);
        m.add_row("r", Sense::Le, 1.0, [(x, f64::NAN)]);
        assert!(matches!(m.check(), Err(ModelError::NonFinite(_))));
    }
}
