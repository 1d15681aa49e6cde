//! Compile an instance into the linearized tender scheduling MILP.
//!
//! Column blocks are emitted in the order F, Q, X, Y, W, L, I, V, S, X̃, K, Z
//! and lexicographically by index tuple inside each block. Rows follow the
//! order: tender supply, overlap, coverage, grant bounds, the McCormick
//! system replacing the commitment-cover row, product definitions,
//! commitment capacity, delivery capacity, inventory balance, unvaccinated
//! tracking, producer ROI.

use crate::instance::{DerivedSets, Instance};

use super::linearize::{linearize_binary_products, linearize_commitment, ProductMap};
use super::{Integrality, MilpModel, ModelError, Sense, VarKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Count a tender toward period `l` only if it is still running at `l`.
    /// When off, the coverage row counts every tender that starts within the
    /// last `L` periods, as the formulation is written.
    pub strict_coverage: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { strict_coverage: true }
    }
}

pub(crate) struct Names<'a> {
    inst: &'a Instance,
}

impl<'a> Names<'a> {
    pub(crate) fn new(inst: &'a Instance) -> Self {
        Names { inst }
    }

    pub(crate) fn a(&self, a: usize) -> &str {
        &self.inst.antigens[a]
    }

    pub(crate) fn v(&self, v: usize) -> &str {
        &self.inst.vaccines[v]
    }

    pub(crate) fn p(&self, p: usize) -> &str {
        &self.inst.producers[p]
    }

    pub(crate) fn tag(&self, parts: &[&str]) -> String {
        format!("[{}]", parts.join(","))
    }

    pub(crate) fn var(&self, key: &VarKey) -> String {
        let n = |x: usize| x.to_string();
        let parts: Vec<String> = match *key {
            VarKey::Tender { a, t, tau } => vec![self.a(a).into(), n(t), n(tau)],
            VarKey::Commitment { v, p, t, tau }
            | VarKey::DeliverySum { v, p, t, tau }
            | VarKey::Envelope { v, p, t, tau } => {
                vec![self.v(v).into(), self.p(p).into(), n(t), n(tau)]
            }
            VarKey::Delivery { v, p, t } => vec![self.v(v).into(), self.p(p).into(), n(t)],
            VarKey::Produce { p, t } | VarKey::Extend { p, t } => vec![self.p(p).into(), n(t)],
            VarKey::Grant { p, t, tau } => vec![self.p(p).into(), n(t), n(tau)],
            VarKey::Inventory { v, t } | VarKey::Vaccinated { v, t } => vec![self.v(v).into(), n(t)],
            VarKey::Unvaccinated { a, t } => vec![self.a(a).into(), n(t)],
            VarKey::GrantExtend { p, t, tau, k } => vec![self.p(p).into(), n(t), n(tau), n(k)],
            VarKey::ProduceExtend { p, t, l } => vec![self.p(p).into(), n(t), n(l)],
        };
        format!("{}[{}]", key.kind().symbol(), parts.join(","))
    }
}

/// Compile `inst` into a MILP whose binary-feasible points are exactly those
/// of the original formulation.
pub fn build_model(inst: &Instance, opts: BuildOptions) -> Result<MilpModel, ModelError> {
    let sets = inst.derive()?;
    let mut model = MilpModel::new(inst.name.clone());
    add_base_columns(&mut model, inst, &sets);
    add_structure_rows(&mut model, inst, &sets);
    add_coverage_and_grant_rows(&mut model, inst, &sets, opts);
    linearize_commitment(&mut model, inst, &sets)?;
    let products = linearize_binary_products(&mut model, inst, &sets)?;
    add_flow_rows(&mut model, inst, &sets, &products)?;
    add_objective(&mut model, inst, &sets)?;
    model.check()?;
    Ok(model)
}

fn add_base_columns(model: &mut MilpModel, inst: &Instance, sets: &DerivedSets) {
    let names = Names::new(inst);
    let inf = f64::INFINITY;
    let add = |m: &mut MilpModel, key: VarKey, integrality: Integrality, priority: u8| {
        let (lo, hi) = match integrality {
            Integrality::Binary => (0.0, 1.0),
            Integrality::Continuous => (0.0, inf),
        };
        m.add_keyed(key, names.var(&key), lo, hi, integrality, priority);
    };
    let bin = Integrality::Binary;
    let cont = Integrality::Continuous;

    for a in 0..inst.num_antigens() {
        for w in sets.windows() {
            add(model, VarKey::Tender { a, t: w.start, tau: w.end }, bin, 0);
        }
    }
    for v in 0..inst.num_vaccines() {
        for &p in &inst.vaccine_producers[v] {
            for w in sets.windows() {
                add(model, VarKey::Commitment { v, p, t: w.start, tau: w.end }, cont, 2);
            }
        }
    }
    for v in 0..inst.num_vaccines() {
        for &p in &inst.vaccine_producers[v] {
            for t in inst.periods() {
                add(model, VarKey::Delivery { v, p, t }, cont, 2);
            }
        }
    }
    for p in 0..inst.num_producers() {
        for t in inst.periods() {
            add(model, VarKey::Produce { p, t }, bin, 1);
        }
    }
    for p in 0..inst.num_producers() {
        for w in sets.windows() {
            add(model, VarKey::Grant { p, t: w.start, tau: w.end }, bin, 0);
        }
    }
    for p in 0..inst.num_producers() {
        for t in inst.periods() {
            add(model, VarKey::Extend { p, t }, bin, 1);
        }
    }
    for v in 0..inst.num_vaccines() {
        for t in inst.periods() {
            add(model, VarKey::Inventory { v, t }, cont, 2);
        }
    }
    for v in 0..inst.num_vaccines() {
        for t in inst.periods() {
            add(model, VarKey::Vaccinated { v, t }, cont, 2);
        }
    }
    for a in 0..inst.num_antigens() {
        for t in inst.periods() {
            add(model, VarKey::Unvaccinated { a, t }, cont, 2);
        }
    }
}

fn col(model: &MilpModel, key: VarKey) -> usize {
    model.col(&key).unwrap_or_else(|| panic!("column {key:?} not created"))
}

/// Tender supply and overlap rows.
fn add_structure_rows(model: &mut MilpModel, inst: &Instance, sets: &DerivedSets) {
    let names = Names::new(inst);
    let num = |x: usize| x.to_string();

    // A tender for a over t..τ needs a producing producer in each of its periods.
    for a in 0..inst.num_antigens() {
        for w in sets.windows() {
            let f = col(model, VarKey::Tender { a, t: w.start, tau: w.end });
            let mut coefs = vec![(f, w.len() as f64)];
            for &p in &sets.producers_of_antigen[a] {
                for l in w.periods() {
                    coefs.push((col(model, VarKey::Produce { p, t: l }), -1.0));
                }
            }
            let tag = names.tag(&[names.a(a), &num(w.start), &num(w.end)]);
            model.add_row(format!("tender_supply{tag}"), Sense::Le, 0.0, coefs);
        }
    }

    // Two tenders for the same antigen cannot start in the same period.
    for a in 0..inst.num_antigens() {
        for t in inst.periods() {
            let ends = sets.window_ends(t);
            for (i, &tau) in ends.iter().enumerate() {
                for &tau2 in &ends[i + 1..] {
                    let f1 = col(model, VarKey::Tender { a, t, tau });
                    let f2 = col(model, VarKey::Tender { a, t, tau: tau2 });
                    let tag = names.tag(&[names.a(a), &num(t), &num(tau), &num(tau2)]);
                    model.add_row(format!("tender_overlap{tag}"), Sense::Le, 1.0, [(f1, 1.0), (f2, 1.0)]);
                }
            }
        }
    }
}

fn add_coverage_and_grant_rows(model: &mut MilpModel, inst: &Instance, sets: &DerivedSets, opts: BuildOptions) {
    let names = Names::new(inst);
    let num = |x: usize| x.to_string();
    let len = sets.max_tender_len;

    for a in 0..inst.num_antigens() {
        for l in inst.periods() {
            let first = if l >= len { l + 1 - len } else { 1 };
            let mut coefs = Vec::new();
            for t in first..=l {
                for &tau in sets.window_ends(t) {
                    if opts.strict_coverage && tau < l {
                        continue;
                    }
                    coefs.push((col(model, VarKey::Tender { a, t, tau }), 1.0));
                }
            }
            let tag = names.tag(&[names.a(a), &num(l)]);
            model.add_row(format!("coverage{tag}"), Sense::Ge, 1.0, coefs);
        }
    }

    for p in 0..inst.num_producers() {
        let portfolio = &sets.antigens_of_producer[p];
        for w in sets.windows() {
            let g = col(model, VarKey::Grant { p, t: w.start, tau: w.end });
            let fs: Vec<usize> =
                portfolio.iter().map(|&a| col(model, VarKey::Tender { a, t: w.start, tau: w.end })).collect();
            let tag = names.tag(&[names.p(p), &num(w.start), &num(w.end)]);
            model.add_row(format!("grant_lb{tag}"), Sense::Ge, 0.0, fs.iter().map(|&f| (f, 1.0)).chain([(g, -1.0)]));
            model.add_row(
                format!("grant_ub{tag}"),
                Sense::Le,
                0.0,
                fs.iter().map(|&f| (f, 1.0)).chain([(g, -(portfolio.len() as f64))]),
            );
        }
    }
}

fn add_flow_rows(
    model: &mut MilpModel,
    inst: &Instance,
    sets: &DerivedSets,
    products: &ProductMap,
) -> Result<(), ModelError> {
    let names = Names::new(inst);
    let num = |x: usize| x.to_string();
    let kappa = inst.capacity_ext_rate;

    // Commitments within a window cannot exceed the (extended) window capacity.
    for p in 0..inst.num_producers() {
        for w in sets.windows() {
            let (t, tau) = (w.start, w.end);
            let mut coefs: Vec<(usize, f64)> = sets.vaccines_of_producer[p]
                .iter()
                .map(|&v| (col(model, VarKey::Commitment { v, p, t, tau }), 1.0))
                .collect();
            let base = inst.window_capacity(p, t, tau);
            coefs.push((col(model, VarKey::Grant { p, t, tau }), -base));
            for k in 1..=tau {
                if let Some(&z) = products.grant_extend.get(&(p, t, tau, k)) {
                    let periods_after = (tau - t.max(k) + 1) as f64;
                    coefs.push((z, -kappa * inst.capacity_at(p, k) * periods_after));
                }
            }
            let tag = names.tag(&[names.p(p), &num(t), &num(tau)]);
            model.add_row(format!("commit_cap{tag}"), Sense::Le, 0.0, coefs);
        }
    }

    // Deliveries in a period cannot exceed the producer's (extended) capacity.
    for p in 0..inst.num_producers() {
        for t in inst.periods() {
            let mut coefs: Vec<(usize, f64)> =
                sets.vaccines_of_producer[p].iter().map(|&v| (col(model, VarKey::Delivery { v, p, t }), 1.0)).collect();
            coefs.push((col(model, VarKey::Produce { p, t }), -inst.capacity_at(p, t)));
            for l in 1..=t {
                if let Some(&z) = products.produce_extend.get(&(p, t, l)) {
                    coefs.push((z, -kappa * inst.capacity_at(p, l)));
                }
            }
            let tag = names.tag(&[names.p(p), &num(t)]);
            model.add_row(format!("deliver_cap{tag}"), Sense::Le, 0.0, coefs);
        }
    }

    // I_{v,t-1} + Σ_p X_vpt = V_vt + I_vt
    for v in 0..inst.num_vaccines() {
        for t in inst.periods() {
            let mut coefs: Vec<(usize, f64)> =
                inst.vaccine_producers[v].iter().map(|&p| (col(model, VarKey::Delivery { v, p, t }), 1.0)).collect();
            coefs.push((col(model, VarKey::Vaccinated { v, t }), -1.0));
            coefs.push((col(model, VarKey::Inventory { v, t }), -1.0));
            let rhs = if t == 1 {
                -inst.initial_inventory[v]
            } else {
                coefs.push((col(model, VarKey::Inventory { v, t: t - 1 }), 1.0));
                0.0
            };
            let tag = names.tag(&[names.v(v), &num(t)]);
            model.add_row(format!("inventory{tag}"), Sense::Eq, rhs, coefs);
        }
    }

    // d_at - Σ_v V_vt + S_{a,t-1} <= S_at
    for a in 0..inst.num_antigens() {
        for t in inst.periods() {
            let mut coefs: Vec<(usize, f64)> =
                sets.vaccines_of_antigen[a].iter().map(|&v| (col(model, VarKey::Vaccinated { v, t }), -1.0)).collect();
            coefs.push((col(model, VarKey::Unvaccinated { a, t }), -1.0));
            let mut rhs = -inst.demand_at(a, t);
            if t == 1 {
                rhs -= inst.initial_unvaccinated[a];
            } else {
                coefs.push((col(model, VarKey::Unvaccinated { a, t: t - 1 }), 1.0));
            }
            let tag = names.tag(&[names.a(a), &num(t)]);
            model.add_row(format!("unvaccinated{tag}"), Sense::Le, rhs, coefs);
        }
    }

    // Revenue covers the ROI-marked-up set-up cost whenever the producer produces.
    for p in 0..inst.num_producers() {
        for t in inst.periods() {
            let vs = &sets.vaccines_of_producer[p];
            let mut coefs: Vec<(usize, f64)> =
                vs.iter().map(|&v| (col(model, VarKey::Delivery { v, p, t }), inst.price(v, p, t))).collect();
            let setup: f64 = vs.iter().map(|&v| (1.0 + inst.roi[v][p]) * inst.setup(v, p, t)).sum();
            coefs.push((col(model, VarKey::Produce { p, t }), -setup));
            let tag = names.tag(&[names.p(p), &num(t)]);
            model.add_row(format!("roi{tag}"), Sense::Ge, 0.0, coefs);
        }
    }
    Ok(())
}

fn add_objective(model: &mut MilpModel, inst: &Instance, sets: &DerivedSets) -> Result<(), ModelError> {
    let mut coefs = Vec::new();
    for a in 0..inst.num_antigens() {
        for w in sets.windows() {
            let disc = inst.discount_factor(w.start);
            coefs.push((
                col(model, VarKey::Tender { a, t: w.start, tau: w.end }),
                disc * inst.tender_setup_cost[w.start - 1],
            ));
        }
    }
    for v in 0..inst.num_vaccines() {
        for &p in &inst.vaccine_producers[v] {
            for t in inst.periods() {
                coefs.push((col(model, VarKey::Delivery { v, p, t }), inst.discount_factor(t) * inst.price(v, p, t)));
            }
        }
    }
    for a in 0..inst.num_antigens() {
        for t in inst.periods() {
            coefs.push((col(model, VarKey::Unvaccinated { a, t }), inst.discount_factor(t) * inst.shortage_penalty));
        }
    }
    for v in 0..inst.num_vaccines() {
        for t in inst.periods() {
            let unit = inst.holding_rate[v] * inst.avg_price[v][t - 1];
            coefs.push((col(model, VarKey::Inventory { v, t }), inst.discount_factor(t) * unit));
        }
    }
    for p in 0..inst.num_producers() {
        for t in inst.periods() {
            coefs.push((col(model, VarKey::Extend { p, t }), inst.discount_factor(t) * inst.capacity_ext_cost[p]));
        }
    }
    if coefs.iter().any(|(_, c)| !c.is_finite()) {
        return Err(ModelError::NonFinite("objective".into()));
    }
    model.set_objective(coefs, 0.0);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::builder::single;
    use crate::model::VarKind;

    #[test]
    fn tiny_census_matches_enumeration() {
        let inst = single(3);
        let m = build_model(&inst, BuildOptions::default()).unwrap();
        assert_eq!(m.num_columns(), 48);
        let census = m.census();
        let expect = [
            (VarKind::Tender, 6),
            (VarKind::Commitment, 6),
            (VarKind::Delivery, 3),
            (VarKind::Produce, 3),
            (VarKind::Grant, 6),
            (VarKind::Extend, 3),
            (VarKind::Inventory, 3),
            (VarKind::Vaccinated, 3),
            (VarKind::Unvaccinated, 3),
            (VarKind::DeliverySum, 6),
            (VarKind::Envelope, 6),
        ];
        for (kind, n) in expect {
            assert_eq!(census.get(&kind).copied().unwrap_or(0), n, "{kind:?}");
        }
    }

    #[test]
    fn column_blocks_in_order() {
        let mut inst = single(3);
        inst.capacity_ext_rate = 0.1;
        let m = build_model(&inst, BuildOptions::default()).unwrap();
        let kinds: Vec<VarKind> = m.var_index.iter().map(|(_, k)| k.kind()).collect();
        assert!(kinds.windows(2).all(|w| w[0] <= w[1]));
        assert!(kinds.contains(&VarKind::GrantExtend));
    }

    #[test]
    fn delivery_capacity_row_expands_extension_products() {
        // s = 100, κ = 0.1, t = 2: X ≤ 100 Y + 10 z(Y2,L1) + 10 z(Y2,L2)
        let mut inst = single(3);
        inst.capacity_ext_rate = 0.1;
        let m = build_model(&inst, BuildOptions::default()).unwrap();
        let row = m.rows.iter().find(|r| r.name == "deliver_cap[P,2]").unwrap();
        let y = m.col(&VarKey::Produce { p: 0, t: 2 }).unwrap();
        let z1 = m.col(&VarKey::ProduceExtend { p: 0, t: 2, l: 1 }).unwrap();
        let z2 = m.col(&VarKey::ProduceExtend { p: 0, t: 2, l: 2 }).unwrap();
        let x = m.col(&VarKey::Delivery { v: 0, p: 0, t: 2 }).unwrap();
        let coef = |c: usize| row.coefs.iter().find(|&&(j, _)| j == c).map(|&(_, a)| a);
        assert_eq!(coef(x), Some(1.0));
        assert_eq!(coef(y), Some(-100.0));
        assert!((coef(z1).unwrap() + 10.0).abs() < 1e-12);
        assert!((coef(z2).unwrap() + 10.0).abs() < 1e-12);
        assert_eq!(row.coefs.len(), 4);
        assert_eq!(row.sense, Sense::Le);
    }

    #[test]
    fn strict_coverage_drops_finished_tenders() {
        let inst = single(3);
        let strict = build_model(&inst, BuildOptions { strict_coverage: true }).unwrap();
        let literal = build_model(&inst, BuildOptions { strict_coverage: false }).unwrap();
        let find = |m: &MilpModel, name: &str| m.rows.iter().find(|r| r.name == name).unwrap().coefs.len();
        // Period 3: starts 1..3; literal counts all 6 windows, strict only those ending at 3.
        assert_eq!(find(&literal, "coverage[A,3]"), 6);
        assert_eq!(find(&strict, "coverage[A,3]"), 3);
    }

    #[test]
    fn objective_is_discounted() {
        let mut inst = single(3);
        inst.discount = 0.9;
        let m = build_model(&inst, BuildOptions::default()).unwrap();
        let c = m.cost_vector();
        for t in 1..=3 {
            let x = m.col(&VarKey::Delivery { v: 0, p: 0, t }).unwrap();
            assert!((c[x] - 0.9f64.powi(t as i32) * 2.0).abs() < 1e-15);
            let s = m.col(&VarKey::Unvaccinated { a: 0, t }).unwrap();
            assert!((c[s] - 0.9f64.powi(t as i32) * 10.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_instance_rejected() {
        let mut inst = single(3);
        inst.discount = 1.5;
        assert!(matches!(build_model(&inst, BuildOptions::default()), Err(ModelError::Instance(_))));
    }

    #[test]
    fn overflowing_capacity_rejected() {
        let mut inst = single(3);
        inst.capacity[0] = vec![f64::MAX; 3];
        assert!(build_model(&inst, BuildOptions::default()).is_err());
    }

    #[test]
    fn rebuild_is_identical() {
        let mut inst = single(4);
        inst.capacity_ext_rate = 0.05;
        let a = build_model(&inst, BuildOptions::default()).unwrap();
        let b = build_model(&inst, BuildOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
