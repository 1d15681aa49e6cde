use std::fmt;

use serde::Serialize;

use super::Instance;

/// One broken instance invariant. `location` names the offending entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { location: location.into(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Check every instance invariant and report all violations. Never aborts.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let na = inst.num_antigens();
    let nv = inst.num_vaccines();
    let np = inst.num_producers();
    let nt = inst.num_periods;

    if na == 0 {
        report.push("antigens", "instance has no antigens");
    }
    if nv == 0 {
        report.push("vaccines", "instance has no vaccines");
    }
    if np == 0 {
        report.push("producers", "instance has no producers");
    }
    if nt == 0 {
        report.push("num_periods", "planning horizon must have at least one period");
    }
    check_unique(&mut report, "antigens", &inst.antigens);
    check_unique(&mut report, "vaccines", &inst.vaccines);
    check_unique(&mut report, "producers", &inst.producers);

    let mut structure_ok = true;
    if inst.vaccine_antigens.len() != nv || inst.vaccine_producers.len() != nv {
        report.push("vaccine_antigens", "incidence tables must have one entry per vaccine");
        structure_ok = false;
    } else {
        for v in 0..nv {
            let name = &inst.vaccines[v];
            if inst.vaccine_antigens[v].is_empty() {
                report.push(format!("vaccine_antigens.{name}"), "vaccine without antigen");
            }
            if inst.vaccine_producers[v].is_empty() {
                report.push(format!("producer_vaccines.{name}"), "vaccine without producer");
            }
            if inst.vaccine_antigens[v].iter().any(|&a| a >= na) {
                report.push(format!("vaccine_antigens.{name}"), "unknown antigen index");
                structure_ok = false;
            }
            if inst.vaccine_producers[v].iter().any(|&p| p >= np) {
                report.push(format!("producer_vaccines.{name}"), "unknown producer index");
                structure_ok = false;
            }
        }
    }

    let mut shape_ok = true;
    let mut shape = |report: &mut ValidationReport, path: &str, ok: bool| {
        if !ok {
            report.push(path, "parameter table not fully populated over its index set");
            shape_ok = false;
        }
    };
    let rows = |table: &Vec<Vec<f64>>, n: usize, m: usize| table.len() == n && table.iter().all(|r| r.len() == m);
    let cube = |table: &Vec<Vec<Vec<f64>>>| {
        table.len() == nv && table.iter().all(|r| r.len() == np && r.iter().all(|c| c.len() == nt))
    };
    shape(&mut report, "params.demand", rows(&inst.demand, na, nt));
    shape(&mut report, "params.capacity", rows(&inst.capacity, np, nt));
    shape(&mut report, "params.roi", rows(&inst.roi, nv, np));
    shape(&mut report, "params.setup_cost", cube(&inst.setup_cost));
    shape(&mut report, "params.holding_rate", inst.holding_rate.len() == nv);
    shape(&mut report, "params.reservation_price", cube(&inst.reservation_price));
    shape(&mut report, "params.avg_price", rows(&inst.avg_price, nv, nt));
    shape(&mut report, "params.tender_setup_cost", inst.tender_setup_cost.len() == nt);
    shape(&mut report, "params.capacity_ext_cost", inst.capacity_ext_cost.len() == np);
    shape(&mut report, "params.initial_unvaccinated", inst.initial_unvaccinated.len() == na);
    shape(&mut report, "params.initial_inventory", inst.initial_inventory.len() == nv);

    if shape_ok {
        check_table(&mut report, "params.demand", inst.demand.iter().flatten());
        check_table(&mut report, "params.capacity", inst.capacity.iter().flatten());
        check_table(&mut report, "params.roi", inst.roi.iter().flatten());
        check_table(&mut report, "params.setup_cost", inst.setup_cost.iter().flatten().flatten());
        check_table(&mut report, "params.holding_rate", inst.holding_rate.iter());
        check_table(&mut report, "params.reservation_price", inst.reservation_price.iter().flatten().flatten());
        check_table(&mut report, "params.avg_price", inst.avg_price.iter().flatten());
        check_table(&mut report, "params.tender_setup_cost", inst.tender_setup_cost.iter());
        check_table(&mut report, "params.capacity_ext_cost", inst.capacity_ext_cost.iter());
        check_table(&mut report, "params.initial_unvaccinated", inst.initial_unvaccinated.iter());
        check_table(&mut report, "params.initial_inventory", inst.initial_inventory.iter());
    }

    if !(inst.discount > 0.0 && inst.discount <= 1.0) {
        report.push("scalars.delta", "discount factor out of (0,1]");
    }
    if !(inst.capacity_ext_rate >= 0.0 && inst.capacity_ext_rate.is_finite()) {
        report.push("scalars.kappa", "capacity extension rate must be finite and >= 0");
    }
    if !(inst.shortage_penalty >= 0.0 && inst.shortage_penalty.is_finite()) {
        report.push("scalars.beta", "shortage penalty must be finite and >= 0");
    }
    if inst.max_tender_len == 0 {
        report.push("scalars.max_tender_len", "maximum tender length must be >= 1");
    }

    if structure_ok && shape_ok {
        let sets = super::derive_sets(inst);
        for a in 0..na {
            let has_demand = inst.demand[a].iter().any(|&d| d > 0.0);
            if has_demand && sets.producers_of_antigen[a].is_empty() {
                report.push(format!("antigens.{}", inst.antigens[a]), "antigen with positive demand has no producer");
            }
        }
    }
    report
}

fn check_unique(report: &mut ValidationReport, path: &str, names: &[String]) {
    let mut sorted: Vec<&String> = names.iter().collect();
    sorted.sort();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            report.push(format!("{path}.{}", pair[0]), "duplicate id");
        }
    }
}

fn check_table<'a>(report: &mut ValidationReport, path: &str, values: impl Iterator<Item = &'a f64>) {
    let mut non_finite = false;
    let mut negative = false;
    for &x in values {
        non_finite |= !x.is_finite();
        negative |= x < 0.0;
    }
    if non_finite {
        report.push(path, "value is not finite");
    }
    if negative {
        report.push(path, "value must be >= 0");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::builder::single;

    #[test]
    fn well_formed_single_passes() {
        assert!(validate_instance(&single(3)).is_empty());
    }

    #[test]
    fn vaccine_without_producer_reported() {
        let mut inst = single(3);
        inst.vaccine_producers[0].clear();
        let report = validate_instance(&inst);
        assert!(report.contains("vaccine without producer"), "{report}");
    }

    #[test]
    fn discount_above_one_reported() {
        let mut inst = single(3);
        inst.discount = 1.2;
        let report = validate_instance(&inst);
        assert!(report.contains("discount factor out of (0,1]"), "{report}");
    }

    #[test]
    fn zero_discount_reported() {
        let mut inst = single(3);
        inst.discount = 0.0;
        assert!(validate_instance(&inst).contains("discount factor"));
    }

    #[test]
    fn reports_every_violation() {
        let mut inst = single(3);
        inst.discount = 2.0;
        inst.capacity_ext_rate = -1.0;
        inst.demand[0][1] = -5.0;
        inst.max_tender_len = 0;
        let report = validate_instance(&inst);
        assert_eq!(report.violations.len(), 4, "{report}");
    }

    #[test]
    fn short_table_reported_without_panicking() {
        let mut inst = single(3);
        inst.capacity[0].pop();
        assert!(validate_instance(&inst).contains("not fully populated"));
    }

    #[test]
    fn demand_without_producer_reported() {
        let mut inst = single(3);
        inst.antigens.push("Orphan".into());
        inst.demand.push(vec![1.0; 3]);
        inst.initial_unvaccinated.push(0.0);
        let report = validate_instance(&inst);
        assert!(report.contains("has no producer"), "{report}");
    }
}
