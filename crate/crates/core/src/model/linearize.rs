//! Exact linearizations of the products in the commitment and capacity rows.
//!
//! Every product has at least one binary factor, so each reformulation
//! agrees with the original constraint at every binary point.

use std::collections::HashMap;

use crate::instance::{DerivedSets, Instance};

use super::build::Names;
use super::{Integrality, MilpModel, ModelError, Sense, VarKey};

/// McCormick bounds for the product `W_ptτ · X̃_vptτ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommitmentBounds {
    pub w_lower: f64,
    pub w_upper: f64,
    pub x_lower: f64,
    pub x_upper: f64,
}

/// Static bounds for a window: `W ∈ [0, 1]` and `X̃` between zero and the
/// window capacity with every possible extension taken.
pub fn commitment_bounds(inst: &Instance, p: usize, t: usize, tau: usize) -> CommitmentBounds {
    let x_upper = (t..=tau).map(|l| inst.capacity_at(p, l) + inst.max_extension(p, l)).sum();
    CommitmentBounds { w_lower: 0.0, w_upper: 1.0, x_lower: 0.0, x_upper }
}

/// Add `X̃` and `K` for every `(v, p, t, τ)` with the defining equality,
/// `Q ≥ K`, and the four envelope inequalities.
///
/// Requires the `X`, `Q` and `W` columns to exist.
pub fn linearize_commitment(model: &mut MilpModel, inst: &Instance, sets: &DerivedSets) -> Result<(), ModelError> {
    let names = Names::new(inst);
    let mut quads = Vec::new();
    for v in 0..inst.num_vaccines() {
        for &p in &inst.vaccine_producers[v] {
            for w in sets.windows() {
                quads.push((v, p, w.start, w.end));
            }
        }
    }

    let mut bounds = Vec::with_capacity(quads.len());
    for &(v, p, t, tau) in &quads {
        let b = commitment_bounds(inst, p, t, tau);
        if !b.x_upper.is_finite() {
            return Err(ModelError::NonFinite(format!(
                "commitment bound for producer {} window {t}..{tau}",
                inst.producers[p]
            )));
        }
        let key = VarKey::DeliverySum { v, p, t, tau };
        model.add_keyed(key, names.var(&key), b.x_lower, b.x_upper, Integrality::Continuous, 2);
        bounds.push(b);
    }
    for &(v, p, t, tau) in &quads {
        let key = VarKey::Envelope { v, p, t, tau };
        model.add_keyed(key, names.var(&key), f64::NEG_INFINITY, f64::INFINITY, Integrality::Continuous, 2);
    }

    let col = |m: &MilpModel, key: VarKey| m.col(&key).expect("column created above");
    for (&(v, p, t, tau), b) in quads.iter().zip(&bounds) {
        let xs = col(model, VarKey::DeliverySum { v, p, t, tau });
        let k = col(model, VarKey::Envelope { v, p, t, tau });
        let q = model
            .col(&VarKey::Commitment { v, p, t, tau })
            .ok_or_else(|| ModelError::Invalid("commitment columns missing".into()))?;
        let w = model
            .col(&VarKey::Grant { p, t, tau })
            .ok_or_else(|| ModelError::Invalid("grant columns missing".into()))?;
        let tag = names.tag(&[names.v(v), names.p(p), &t.to_string(), &tau.to_string()]);

        let mut def = vec![(xs, 1.0)];
        for l in t..=tau {
            let x = model
                .col(&VarKey::Delivery { v, p, t: l })
                .ok_or_else(|| ModelError::Invalid("delivery columns missing".into()))?;
            def.push((x, -1.0));
        }
        model.add_row(format!("xsum_def{tag}"), Sense::Eq, 0.0, def);
        model.add_row(format!("commit_cover{tag}"), Sense::Ge, 0.0, [(q, 1.0), (k, -1.0)]);

        // K >= xu W + X̃ wu - xu wu
        model.add_row(
            format!("mc_ge_upper{tag}"),
            Sense::Ge,
            -b.x_upper * b.w_upper,
            [(k, 1.0), (w, -b.x_upper), (xs, -b.w_upper)],
        );
        // K >= xl W + X̃ wl - xl wl
        model.add_row(
            format!("mc_ge_lower{tag}"),
            Sense::Ge,
            -b.x_lower * b.w_lower,
            [(k, 1.0), (w, -b.x_lower), (xs, -b.w_lower)],
        );
        // K <= xu W + X̃ wl - xu wl
        model.add_row(
            format!("mc_le_upper{tag}"),
            Sense::Le,
            -b.x_upper * b.w_lower,
            [(k, 1.0), (w, -b.x_upper), (xs, -b.w_lower)],
        );
        // K <= xl W + X̃ wu - xl wu
        model.add_row(
            format!("mc_le_lower{tag}"),
            Sense::Le,
            -b.x_lower * b.w_upper,
            [(k, 1.0), (w, -b.x_lower), (xs, -b.w_upper)],
        );
    }
    Ok(())
}

/// Auxiliary columns standing in for binary products.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProductMap {
    /// `(p, t, τ, k)` → column of `W_ptτ · L_pk`.
    pub grant_extend: HashMap<(usize, usize, usize, usize), usize>,
    /// `(p, t, l)` → column of `Y_pt · L_pl`.
    pub produce_extend: HashMap<(usize, usize, usize), usize>,
}

/// Introduce `z = b1 · b2` for each binary product with a nonzero
/// coefficient in the commitment-capacity and delivery-capacity rows, with
/// `z ≤ b1`, `z ≤ b2`, `z ≥ b1 + b2 − 1`, `z ∈ [0, 1]`.
///
/// A product only appears when `κ · s_pk > 0`; with `κ = 0` no auxiliaries
/// are created. Requires the `W`, `Y` and `L` columns to exist.
pub fn linearize_binary_products(
    model: &mut MilpModel,
    inst: &Instance,
    sets: &DerivedSets,
) -> Result<ProductMap, ModelError> {
    let names = Names::new(inst);
    let kappa = inst.capacity_ext_rate;
    let mut pairs: Vec<(VarKey, VarKey, VarKey)> = Vec::new();

    for p in 0..inst.num_producers() {
        for w in sets.windows() {
            for k in 1..=w.end {
                if kappa * inst.capacity_at(p, k) > 0.0 {
                    pairs.push((
                        VarKey::GrantExtend { p, t: w.start, tau: w.end, k },
                        VarKey::Grant { p, t: w.start, tau: w.end },
                        VarKey::Extend { p, t: k },
                    ));
                }
            }
        }
    }
    for p in 0..inst.num_producers() {
        for t in inst.periods() {
            for l in 1..=t {
                if kappa * inst.capacity_at(p, l) > 0.0 {
                    pairs.push((
                        VarKey::ProduceExtend { p, t, l },
                        VarKey::Produce { p, t },
                        VarKey::Extend { p, t: l },
                    ));
                }
            }
        }
    }

    let mut map = ProductMap::default();
    let mut cols = Vec::with_capacity(pairs.len());
    for (z, _, _) in &pairs {
        let col = model.add_keyed(*z, names.var(z), 0.0, 1.0, Integrality::Continuous, 2);
        match *z {
            VarKey::GrantExtend { p, t, tau, k } => {
                map.grant_extend.insert((p, t, tau, k), col);
            }
            VarKey::ProduceExtend { p, t, l } => {
                map.produce_extend.insert((p, t, l), col);
            }
            _ => unreachable!(),
        }
        cols.push(col);
    }
    for ((z, b1, b2), &zc) in pairs.iter().zip(&cols) {
        let c1 = model.col(b1).ok_or_else(|| ModelError::Invalid(format!("missing factor column {b1:?}")))?;
        let c2 = model.col(b2).ok_or_else(|| ModelError::Invalid(format!("missing factor column {b2:?}")))?;
        let base = names.var(z);
        model.add_row(format!("prod_le_a[{base}]"), Sense::Le, 0.0, [(zc, 1.0), (c1, -1.0)]);
        model.add_row(format!("prod_le_b[{base}]"), Sense::Le, 0.0, [(zc, 1.0), (c2, -1.0)]);
        model.add_row(format!("prod_ge[{base}]"), Sense::Ge, -1.0, [(zc, 1.0), (c1, -1.0), (c2, -1.0)]);
    }
    Ok(map)
}
