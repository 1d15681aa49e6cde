//! Equality form with one slack per row, plus power-of-two equilibration.
//!
//! Row `i` becomes `Σ_j a_ij x_j + s_i = b_i` with the slack bounded by the
//! row sense: `≤` gives `s_i ≥ 0`, `≥` gives `s_i ≤ 0`, `=` fixes `s_i = 0`.
//! Free columns stay free; the simplex handles them natively, so recovery is
//! a plain rescale. Scale factors are powers of two and therefore exact.

use crate::model::{MilpModel, Sense};

#[derive(Debug, Clone)]
pub struct StandardForm {
    num_rows: usize,
    num_structural: usize,
    col_start: Vec<usize>,
    row_idx: Vec<usize>,
    value: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    /// Bounds in scaled space, structural columns first, then slacks.
    lower: Vec<f64>,
    upper: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    objective_constant: f64,
}

fn pow2_near(x: f64) -> f64 {
    if x > 0.0 && x.is_finite() {
        2f64.powi(x.log2().round() as i32)
    } else {
        1.0
    }
}

/// Convert a model into scaled equality form. Integrality is ignored.
pub fn standardize(model: &MilpModel) -> StandardForm {
    let m = model.num_rows();
    let n = model.num_columns();

    let mut row_scale = vec![1.0; m];
    for (i, row) in model.rows.iter().enumerate() {
        let max = row.coefs.iter().fold(0.0f64, |acc, &(_, a)| acc.max(a.abs()));
        row_scale[i] = 1.0 / pow2_near(max);
    }
    let mut col_max = vec![0.0f64; n];
    for (i, row) in model.rows.iter().enumerate() {
        for &(j, a) in &row.coefs {
            col_max[j] = col_max[j].max((a * row_scale[i]).abs());
        }
    }
    let col_scale: Vec<f64> = col_max.iter().map(|&c| 1.0 / pow2_near(c)).collect();

    let mut counts = vec![0usize; n + 1];
    for row in &model.rows {
        for &(j, _) in &row.coefs {
            counts[j + 1] += 1;
        }
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let col_start = counts.clone();
    let mut fill = counts;
    let nnz = col_start[n];
    let mut row_idx = vec![0; nnz];
    let mut value = vec![0.0; nnz];
    for (i, row) in model.rows.iter().enumerate() {
        for &(j, a) in &row.coefs {
            let k = fill[j];
            row_idx[k] = i;
            value[k] = a * row_scale[i] * col_scale[j];
            fill[j] += 1;
        }
    }

    let mut cost = vec![0.0; n];
    for &(j, c) in &model.objective.coefs {
        cost[j] += c * col_scale[j];
    }

    let mut lower = Vec::with_capacity(n + m);
    let mut upper = Vec::with_capacity(n + m);
    for (j, c) in model.columns.iter().enumerate() {
        lower.push(c.lower / col_scale[j]);
        upper.push(c.upper / col_scale[j]);
    }
    for row in &model.rows {
        let (lo, hi) = match row.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        lower.push(lo);
        upper.push(hi);
    }
    let rhs = model.rows.iter().zip(&row_scale).map(|(r, s)| r.rhs * s).collect();

    StandardForm {
        num_rows: m,
        num_structural: n,
        col_start,
        row_idx,
        value,
        cost,
        rhs,
        lower,
        upper,
        row_scale,
        col_scale,
        objective_constant: model.objective.constant,
    }
}

impl StandardForm {
    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_structural(&self) -> usize {
        self.num_structural
    }

    /// Structural plus slack columns.
    pub fn num_total(&self) -> usize {
        self.num_structural + self.num_rows
    }

    /// Scaled entries of structural column `j`.
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_start[j]..self.col_start[j + 1];
        (&self.row_idx[r.clone()], &self.value[r])
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn row_scale(&self) -> &[f64] {
        &self.row_scale
    }

    pub fn col_scale(&self) -> &[f64] {
        &self.col_scale
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    /// Map an original structural bound or value of column `j` into scaled space.
    pub fn scale_value(&self, j: usize, x: f64) -> f64 {
        x / self.col_scale[j]
    }

    /// Recover original column values from scaled structural values.
    pub fn recover(&self, scaled: &[f64]) -> Vec<f64> {
        scaled[..self.num_structural].iter().zip(&self.col_scale).map(|(x, s)| x * s).collect()
    }

    /// Scaled structural values for original column values.
    pub fn to_scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(j, &v)| self.scale_value(j, v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_le() -> MilpModel {
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.add_row("r", Sense::Le, 5.0, [(x, 1.0)]);
        m
    }

    #[test]
    fn le_row_gets_nonnegative_slack() {
        let sf = standardize(&model_le());
        assert_eq!(sf.num_total(), 2);
        assert_eq!(sf.lower()[1], 0.0);
        assert_eq!(sf.upper()[1], f64::INFINITY);
        let (rows, vals) = sf.column(0);
        assert_eq!(rows, &[0]);
        assert_eq!(vals[0] / sf.rhs()[0], 1.0 / 5.0 * sf.col_scale()[0]);
    }

    #[test]
    fn equality_row_has_fixed_slack() {
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        m.add_row("e", Sense::Eq, 3.0, [(x, 2.0)]);
        m.add_row("g", Sense::Ge, 1.0, [(x, 1.0)]);
        let sf = standardize(&m);
        assert_eq!((sf.lower()[1], sf.upper()[1]), (0.0, 0.0));
        assert_eq!((sf.lower()[2], sf.upper()[2]), (f64::NEG_INFINITY, 0.0));
        assert_eq!(sf.lower()[0], f64::NEG_INFINITY);
    }

    #[test]
    fn recovery_is_exact() {
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        let y = m.add_continuous("y", 0.0, 1e8);
        m.add_row("r", Sense::Le, 1e8, [(x, 3e-3), (y, 7e5)]);
        let sf = standardize(&m);
        let orig = [-1.234567e-3, 98765.4321];
        assert_eq!(sf.recover(&sf.to_scaled(&orig)), orig.to_vec());
    }

    #[test]
    fn scaled_entries_near_unit_magnitude() {
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let y = m.add_continuous("y", 0.0, f64::INFINITY);
        m.add_row("a", Sense::Le, 1.0, [(x, 1e8), (y, 3e7)]);
        m.add_row("b", Sense::Le, 1.0, [(x, 2.0), (y, 1e-3)]);
        let sf = standardize(&m);
        for j in 0..2 {
            let (_, vals) = sf.column(j);
            let max = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!((0.5..=2.0).contains(&max), "column {j} max {max}");
        }
    }
}
