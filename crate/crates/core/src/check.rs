//! Direct evaluation of the original tender-scheduling constraints, with the
//! binary products in the capacity and commitment rows evaluated as products
//! rather than through their linearizations.

use std::fmt;

use crate::instance::{DerivedSets, Instance, InstanceError};
use crate::model::{BuildOptions, MilpModel, VarKey};

#[derive(Debug, Clone, PartialEq)]
pub struct Breach {
    pub constraint: &'static str,
    pub index: String,
    /// Relative violation.
    pub amount: f64,
}

impl fmt::Display for Breach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{} violated by {:e}", self.constraint, self.index, self.amount)
    }
}

struct Ctx<'a, V> {
    inst: &'a Instance,
    value: V,
    tol: f64,
    out: Vec<Breach>,
}

impl<V: Fn(&VarKey) -> f64> Ctx<'_, V> {
    fn v(&self, key: VarKey) -> f64 {
        (self.value)(&key)
    }

    /// Record `lhs ≤ rhs` when violated beyond the relative tolerance.
    fn le(&mut self, constraint: &'static str, index: impl FnOnce() -> String, lhs: f64, rhs: f64) {
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        let amount = (lhs - rhs) / scale;
        if amount > self.tol {
            self.out.push(Breach { constraint, index: index(), amount });
        }
    }

    fn eq(&mut self, constraint: &'static str, index: impl Fn() -> String, lhs: f64, rhs: f64) {
        self.le(constraint, &index, lhs, rhs);
        self.le(constraint, index, rhs, lhs);
    }
}

/// Evaluate every original constraint on the point given by `value`.
/// Returns the breached constraints; an empty list means feasible.
pub fn check_original(
    inst: &Instance,
    opts: BuildOptions,
    value: impl Fn(&VarKey) -> f64,
    tol: f64,
) -> Result<Vec<Breach>, InstanceError> {
    let sets = inst.derive()?;
    let mut c = Ctx { inst, value, tol, out: Vec::new() };
    structure(&mut c, &sets, opts);
    capacity(&mut c, &sets);
    flows(&mut c, &sets);
    domains(&mut c, &sets);
    Ok(c.out)
}

/// [`check_original`] on a column vector of a model built from `inst`.
pub fn check_model_point(
    inst: &Instance,
    opts: BuildOptions,
    model: &MilpModel,
    x: &[f64],
    tol: f64,
) -> Result<Vec<Breach>, InstanceError> {
    check_original(inst, opts, |k| model.col(k).map_or(0.0, |j| x[j]), tol)
}

fn idx(parts: &[&dyn fmt::Display]) -> String {
    let s: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
    format!("[{}]", s.join(","))
}

fn structure<V: Fn(&VarKey) -> f64>(c: &mut Ctx<'_, V>, sets: &DerivedSets, opts: BuildOptions) {
    let inst = c.inst;
    for a in 0..inst.num_antigens() {
        for w in sets.windows() {
            let f = c.v(VarKey::Tender { a, t: w.start, tau: w.end });
            let supply: f64 = sets.producers_of_antigen[a]
                .iter()
                .flat_map(|&p| w.periods().map(move |l| (p, l)))
                .map(|(p, l)| c.v(VarKey::Produce { p, t: l }))
                .sum();
            c.le("tender_supply", || idx(&[&inst.antigens[a], &w.start, &w.end]), w.len() as f64 * f, supply);
        }
        for t in inst.periods() {
            let ends = sets.window_ends(t);
            for (i, &tau) in ends.iter().enumerate() {
                for &tau2 in &ends[i + 1..] {
                    let s = c.v(VarKey::Tender { a, t, tau }) + c.v(VarKey::Tender { a, t, tau: tau2 });
                    c.le("tender_overlap", || idx(&[&inst.antigens[a], &t, &tau, &tau2]), s, 1.0);
                }
            }
        }
        for l in inst.periods() {
            let first = (l + 1).saturating_sub(sets.max_tender_len).max(1);
            let mut cover = 0.0;
            for t in first..=l {
                for &tau in sets.window_ends(t) {
                    if !opts.strict_coverage || tau >= l {
                        cover += c.v(VarKey::Tender { a, t, tau });
                    }
                }
            }
            c.le("coverage", || idx(&[&inst.antigens[a], &l]), 1.0, cover);
        }
    }
    for p in 0..inst.num_producers() {
        let portfolio = &sets.antigens_of_producer[p];
        for w in sets.windows() {
            let wv = c.v(VarKey::Grant { p, t: w.start, tau: w.end });
            let fs: f64 = portfolio.iter().map(|&a| c.v(VarKey::Tender { a, t: w.start, tau: w.end })).sum();
            let i = || idx(&[&inst.producers[p], &w.start, &w.end]);
            c.le("grant_lb", i, wv, fs);
            c.le("grant_ub", i, fs, portfolio.len() as f64 * wv);
        }
    }
}

fn capacity<V: Fn(&VarKey) -> f64>(c: &mut Ctx<'_, V>, sets: &DerivedSets) {
    let inst = c.inst;
    let kappa = inst.capacity_ext_rate;
    for p in 0..inst.num_producers() {
        // Extended capacity in period l given the extension decisions.
        let extended: Vec<f64> = std::iter::once(0.0)
            .chain(inst.periods().map(|l| {
                let ext: f64 = (1..=l).map(|k| inst.capacity_at(p, k) * c.v(VarKey::Extend { p, t: k })).sum();
                inst.capacity_at(p, l) + kappa * ext
            }))
            .collect();
        for w in sets.windows() {
            let (t, tau) = (w.start, w.end);
            let wv = c.v(VarKey::Grant { p, t, tau });
            let committed: f64 =
                sets.vaccines_of_producer[p].iter().map(|&v| c.v(VarKey::Commitment { v, p, t, tau })).sum();
            let cap: f64 = w.periods().map(|l| extended[l]).sum();
            c.le("commit_cap", || idx(&[&inst.producers[p], &t, &tau]), committed, wv * cap);
            for &v in &sets.vaccines_of_producer[p] {
                let delivered: f64 = w.periods().map(|l| c.v(VarKey::Delivery { v, p, t: l })).sum();
                let q = c.v(VarKey::Commitment { v, p, t, tau });
                c.le("commit_cover", || idx(&[&inst.vaccines[v], &inst.producers[p], &t, &tau]), delivered * wv, q);
            }
        }
        for t in inst.periods() {
            let delivered: f64 = sets.vaccines_of_producer[p].iter().map(|&v| c.v(VarKey::Delivery { v, p, t })).sum();
            let y = c.v(VarKey::Produce { p, t });
            c.le("deliver_cap", || idx(&[&inst.producers[p], &t]), delivered, y * extended[t]);
        }
    }
}

fn flows<V: Fn(&VarKey) -> f64>(c: &mut Ctx<'_, V>, sets: &DerivedSets) {
    let inst = c.inst;
    for v in 0..inst.num_vaccines() {
        for t in inst.periods() {
            let prev = if t == 1 { inst.initial_inventory[v] } else { c.v(VarKey::Inventory { v, t: t - 1 }) };
            let inflow: f64 = inst.vaccine_producers[v].iter().map(|&p| c.v(VarKey::Delivery { v, p, t })).sum();
            let out = c.v(VarKey::Vaccinated { v, t }) + c.v(VarKey::Inventory { v, t });
            c.eq("inventory", || idx(&[&inst.vaccines[v], &t]), prev + inflow, out);
        }
    }
    for a in 0..inst.num_antigens() {
        for t in inst.periods() {
            let prev = if t == 1 { inst.initial_unvaccinated[a] } else { c.v(VarKey::Unvaccinated { a, t: t - 1 }) };
            let used: f64 = sets.vaccines_of_antigen[a].iter().map(|&v| c.v(VarKey::Vaccinated { v, t })).sum();
            let s = c.v(VarKey::Unvaccinated { a, t });
            c.le("unvaccinated", || idx(&[&inst.antigens[a], &t]), inst.demand_at(a, t) - used + prev, s);
        }
    }
    for p in 0..inst.num_producers() {
        for t in inst.periods() {
            let vs = &sets.vaccines_of_producer[p];
            let revenue: f64 = vs.iter().map(|&v| inst.price(v, p, t) * c.v(VarKey::Delivery { v, p, t })).sum();
            let setup: f64 = vs.iter().map(|&v| (1.0 + inst.roi[v][p]) * inst.setup(v, p, t)).sum();
            let y = c.v(VarKey::Produce { p, t });
            c.le("roi", || idx(&[&inst.producers[p], &t]), setup * y, revenue);
        }
    }
}

fn domains<V: Fn(&VarKey) -> f64>(c: &mut Ctx<'_, V>, sets: &DerivedSets) {
    let inst = c.inst;
    let mut binaries = Vec::new();
    let mut continuous = Vec::new();
    for a in 0..inst.num_antigens() {
        for w in sets.windows() {
            binaries.push(VarKey::Tender { a, t: w.start, tau: w.end });
        }
        for t in inst.periods() {
            continuous.push(VarKey::Unvaccinated { a, t });
        }
    }
    for p in 0..inst.num_producers() {
        for w in sets.windows() {
            binaries.push(VarKey::Grant { p, t: w.start, tau: w.end });
        }
        for t in inst.periods() {
            binaries.push(VarKey::Produce { p, t });
            binaries.push(VarKey::Extend { p, t });
        }
    }
    for v in 0..inst.num_vaccines() {
        for t in inst.periods() {
            continuous.push(VarKey::Inventory { v, t });
            continuous.push(VarKey::Vaccinated { v, t });
        }
        for &p in &inst.vaccine_producers[v] {
            for t in inst.periods() {
                continuous.push(VarKey::Delivery { v, p, t });
            }
            for w in sets.windows() {
                continuous.push(VarKey::Commitment { v, p, t: w.start, tau: w.end });
            }
        }
    }
    for key in binaries {
        let x = c.v(key);
        let dist = x.abs().min((x - 1.0).abs());
        if dist > c.tol {
            c.out.push(Breach { constraint: "binary", index: format!("{key:?}"), amount: dist });
        }
    }
    for key in continuous {
        let x = c.v(key);
        if x < -c.tol * x.abs().max(1.0) {
            c.out.push(Breach { constraint: "nonnegative", index: format!("{key:?}"), amount: -x });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::builder::single;

    #[test]
    fn all_zero_point_breaks_coverage_only() {
        let inst = single(2);
        let br = check_original(&inst, BuildOptions::default(), |_| 0.0, 1e-9).unwrap();
        assert!(!br.is_empty());
        assert!(br.iter().all(|b| b.constraint == "coverage" || b.constraint == "unvaccinated"), "{br:?}");
    }

    #[test]
    fn commitment_product_is_evaluated_directly() {
        let inst = single(1);
        // One tender at period 1 with grant, production, delivery 10 and
        // commitment 10; S = 0.
        let value = |k: &VarKey| match *k {
            VarKey::Tender { .. } | VarKey::Grant { .. } | VarKey::Produce { .. } => 1.0,
            VarKey::Delivery { .. } | VarKey::Vaccinated { .. } => 10.0,
            VarKey::Commitment { .. } => 10.0,
            _ => 0.0,
        };
        assert!(check_original(&inst, BuildOptions::default(), value, 1e-9).unwrap().is_empty());
        let short = |k: &VarKey| match *k {
            VarKey::Commitment { .. } => 5.0,
            _ => value(k),
        };
        let br = check_original(&inst, BuildOptions::default(), short, 1e-9).unwrap();
        assert_eq!(br.len(), 1);
        assert_eq!(br[0].constraint, "commit_cover");
    }
}
