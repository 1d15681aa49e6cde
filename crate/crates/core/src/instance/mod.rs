//! Problem instances: the sets and parameter tables of the tender scheduling
//! model, their validation, and the index sets the formulation derives from
//! them.
//!
//! Entities are addressed by position (`usize`) everywhere inside the crate.
//! Names only matter at the file boundary and in reports.

mod json;
mod validate;

pub use json::{instance_from_json, instance_from_reader, instance_to_json, InstanceFile};
pub use validate::{validate_instance, ValidationReport, Violation};

use thiserror::Error;

/// Periods are 1-based years, `1..=num_periods`.
pub type Period = usize;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("instance rejected: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl InstanceError {
    pub(crate) fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        InstanceError::Field { path: path.into(), message: message.into() }
    }
}

/// All sets and parameters of one tender scheduling problem.
///
/// Tables are dense vectors indexed by entity position and `t - 1`. Tables
/// keyed by `(vaccine, producer)` are dense over all producers; entries for
/// producers that do not make the vaccine are ignored by every consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub antigens: Vec<String>,
    pub vaccines: Vec<String>,
    pub producers: Vec<String>,
    pub num_periods: usize,
    /// Antigen positions contained in each vaccine, ascending.
    pub vaccine_antigens: Vec<Vec<usize>>,
    /// Producer positions making each vaccine, ascending.
    pub vaccine_producers: Vec<Vec<usize>>,
    /// `[antigen][t]` children to vaccinate.
    pub demand: Vec<Vec<f64>>,
    /// `[producer][t]` doses.
    pub capacity: Vec<Vec<f64>>,
    /// `[vaccine][producer]` required annualized return.
    pub roi: Vec<Vec<f64>>,
    /// `[vaccine][producer][t]` production set-up cost, USD.
    pub setup_cost: Vec<Vec<Vec<f64>>>,
    /// `[vaccine]` annual holding cost as a fraction of price.
    pub holding_rate: Vec<f64>,
    /// `[vaccine][producer][t]` USD per dose.
    pub reservation_price: Vec<Vec<Vec<f64>>>,
    /// `[vaccine][t]` USD per dose averaged over producers.
    pub avg_price: Vec<Vec<f64>>,
    /// `[t]` USD per tender started in period t.
    pub tender_setup_cost: Vec<f64>,
    /// `[producer]` USD per capacity extension decision.
    pub capacity_ext_cost: Vec<f64>,
    pub capacity_ext_rate: f64,
    /// `[antigen]` children unvaccinated before period 1.
    pub initial_unvaccinated: Vec<f64>,
    /// `[vaccine]` doses in stock before period 1.
    pub initial_inventory: Vec<f64>,
    pub shortage_penalty: f64,
    pub discount: f64,
    pub max_tender_len: usize,
}

impl Instance {
    pub fn num_antigens(&self) -> usize {
        self.antigens.len()
    }

    pub fn num_vaccines(&self) -> usize {
        self.vaccines.len()
    }

    pub fn num_producers(&self) -> usize {
        self.producers.len()
    }

    /// Iterator over `1..=num_periods`.
    pub fn periods(&self) -> impl Iterator<Item = Period> + Clone {
        1..=self.num_periods
    }

    pub fn demand_at(&self, a: usize, t: Period) -> f64 {
        self.demand[a][t - 1]
    }

    pub fn capacity_at(&self, p: usize, t: Period) -> f64 {
        self.capacity[p][t - 1]
    }

    pub fn price(&self, v: usize, p: usize, t: Period) -> f64 {
        self.reservation_price[v][p][t - 1]
    }

    pub fn setup(&self, v: usize, p: usize, t: Period) -> f64 {
        self.setup_cost[v][p][t - 1]
    }

    /// `δ^t` for a 1-based period.
    pub fn discount_factor(&self, t: Period) -> f64 {
        self.discount.powi(t as i32)
    }

    pub fn antigen_index(&self, name: &str) -> Option<usize> {
        self.antigens.iter().position(|a| a == name)
    }

    pub fn vaccine_index(&self, name: &str) -> Option<usize> {
        self.vaccines.iter().position(|v| v == name)
    }

    pub fn producer_index(&self, name: &str) -> Option<usize> {
        self.producers.iter().position(|p| p == name)
    }

    /// Validate and derive the implicit index sets in one step.
    pub fn derive(&self) -> Result<DerivedSets, InstanceError> {
        let report = validate_instance(self);
        if !report.is_empty() {
            return Err(InstanceError::Invalid(report));
        }
        Ok(derive_sets(self))
    }

    /// Sum of `s_pl` over `l = t..=tau`.
    pub fn window_capacity(&self, p: usize, t: Period, tau: Period) -> f64 {
        (t..=tau).map(|l| self.capacity_at(p, l)).sum()
    }

    /// Extra capacity available in period `l` when every extension
    /// `k = 1..=l` is taken: `κ Σ_k s_pk`.
    pub fn max_extension(&self, p: usize, l: Period) -> f64 {
        self.capacity_ext_rate * (1..=l).map(|k| self.capacity_at(p, k)).sum::<f64>()
    }
}

/// A tender window `(start, end)`, both inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Window {
    pub start: Period,
    pub end: Period,
}

impl Window {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, l: Period) -> bool {
        self.start <= l && l <= self.end
    }

    pub fn periods(&self) -> std::ops::RangeInclusive<Period> {
        self.start..=self.end
    }
}

/// Index sets used implicitly by the formulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedSets {
    pub num_periods: usize,
    pub max_tender_len: usize,
    /// `tender_windows[t - 1]` holds the end periods allowed for a tender
    /// starting in `t`: `t..=min(t + L - 1, T)`.
    pub tender_windows: Vec<Vec<Period>>,
    /// Producers of any vaccine containing the antigen.
    pub producers_of_antigen: Vec<Vec<usize>>,
    /// Vaccines made by the producer.
    pub vaccines_of_producer: Vec<Vec<usize>>,
    /// Antigens contained in the producer's portfolio.
    pub antigens_of_producer: Vec<Vec<usize>>,
    /// Vaccines containing the antigen.
    pub vaccines_of_antigen: Vec<Vec<usize>>,
}

impl DerivedSets {
    pub fn window_ends(&self, t: Period) -> &[Period] {
        &self.tender_windows[t - 1]
    }

    /// Every `(t, τ)` pair in lexicographic order.
    pub fn windows(&self) -> impl Iterator<Item = Window> + '_ {
        self.tender_windows
            .iter()
            .enumerate()
            .flat_map(|(i, ends)| ends.iter().map(move |&end| Window { start: i + 1, end }))
    }

    pub fn num_windows(&self) -> usize {
        self.tender_windows.iter().map(Vec::len).sum()
    }
}

/// Derive the tender windows and producer/vaccine/antigen incidence sets.
///
/// Pure; does not validate. Callers that need the validity precondition use
/// [`Instance::derive`].
pub fn derive_sets(inst: &Instance) -> DerivedSets {
    let horizon = inst.num_periods;
    let len = inst.max_tender_len.max(1);
    let tender_windows = (1..=horizon).map(|t| (t..=(t + len - 1).min(horizon)).collect()).collect();

    let mut producers_of_antigen = vec![Vec::new(); inst.num_antigens()];
    let mut vaccines_of_producer = vec![Vec::new(); inst.num_producers()];
    let mut antigens_of_producer = vec![Vec::new(); inst.num_producers()];
    let mut vaccines_of_antigen = vec![Vec::new(); inst.num_antigens()];

    for (v, producers) in inst.vaccine_producers.iter().enumerate() {
        for &p in producers {
            vaccines_of_producer[p].push(v);
            for &a in &inst.vaccine_antigens[v] {
                producers_of_antigen[a].push(p);
                antigens_of_producer[p].push(a);
            }
        }
    }
    for (v, antigens) in inst.vaccine_antigens.iter().enumerate() {
        for &a in antigens {
            vaccines_of_antigen[a].push(v);
        }
    }
    for set in producers_of_antigen
        .iter_mut()
        .chain(vaccines_of_producer.iter_mut())
        .chain(antigens_of_producer.iter_mut())
        .chain(vaccines_of_antigen.iter_mut())
    {
        set.sort_unstable();
        set.dedup();
    }

    DerivedSets {
        num_periods: horizon,
        max_tender_len: len,
        tender_windows,
        producers_of_antigen,
        vaccines_of_producer,
        antigens_of_producer,
        vaccines_of_antigen,
    }
}

/// Small helpers for building instances in code and tests.
pub mod builder {
    use super::Instance;

    /// A single-antigen, single-vaccine, single-producer instance with flat
    /// parameters; fields can be adjusted afterwards.
    pub fn single(periods: usize) -> Instance {
        Instance {
            name: "single".into(),
            antigens: vec!["A".into()],
            vaccines: vec!["V".into()],
            producers: vec!["P".into()],
            num_periods: periods,
            vaccine_antigens: vec![vec![0]],
            vaccine_producers: vec![vec![0]],
            demand: vec![vec![10.0; periods]],
            capacity: vec![vec![100.0; periods]],
            roi: vec![vec![0.1]],
            setup_cost: vec![vec![vec![1.0; periods]]],
            holding_rate: vec![0.1],
            reservation_price: vec![vec![vec![2.0; periods]]],
            avg_price: vec![vec![2.0; periods]],
            tender_setup_cost: vec![50.0; periods],
            capacity_ext_cost: vec![100.0],
            capacity_ext_rate: 0.0,
            initial_unvaccinated: vec![0.0],
            initial_inventory: vec![0.0],
            shortage_penalty: 10.0,
            discount: 0.95,
            max_tender_len: 5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_start_of_ten_year_horizon() {
        let mut inst = builder::single(10);
        inst.max_tender_len = 5;
        let sets = derive_sets(&inst);
        assert_eq!(sets.window_ends(1), &[1, 2, 3, 4, 5]);
    }

    #[test]
    fn windows_clamp_at_horizon() {
        let inst = builder::single(30);
        let sets = derive_sets(&inst);
        assert_eq!(sets.window_ends(28), &[28, 29, 30]);
        for t in inst.periods() {
            let ends = sets.window_ends(t);
            assert_eq!(ends.len(), 5.min(30 - t + 1));
            assert_eq!(ends[0], t);
            assert!(*ends.last().unwrap() <= 30);
        }
    }

    #[test]
    fn producers_of_antigen_union_over_vaccines() {
        let mut inst = builder::single(3);
        inst.antigens = vec!["Measles".into(), "Mumps".into(), "Rubella".into()];
        inst.vaccines = vec!["MMR".into()];
        inst.producers = vec!["P1".into(), "P2".into()];
        inst.vaccine_antigens = vec![vec![0, 1, 2]];
        inst.vaccine_producers = vec![vec![0, 1]];
        let sets = derive_sets(&inst);
        assert_eq!(sets.producers_of_antigen[0], vec![0, 1]);
        assert_eq!(sets.vaccines_of_producer[1], vec![0]);
        assert_eq!(sets.antigens_of_producer[0], vec![0, 1, 2]);
        assert_eq!(sets.vaccines_of_antigen[2], vec![0]);
    }

    #[test]
    fn producer_without_vaccines_has_no_antigens() {
        let mut inst = builder::single(2);
        inst.producers.push("Idle".into());
        let sets = derive_sets(&inst);
        assert!(sets.vaccines_of_producer[1].is_empty());
        assert!(sets.antigens_of_producer[1].is_empty());
    }

    #[test]
    fn tiny_horizon_window_census() {
        let inst = builder::single(3);
        let sets = derive_sets(&inst);
        assert_eq!(sets.num_windows(), 6);
        let all: Vec<_> = sets.windows().map(|w| (w.start, w.end)).collect();
        assert_eq!(all, vec![(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]);
    }
}
