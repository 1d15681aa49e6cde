use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::instance::Instance;
use crate::model::{MilpModel, VarKey};

/// Scheduled tenders per antigen as `(start, end)` pairs sorted by start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TenderSchedule {
    pub instance: String,
    pub tenders: BTreeMap<String, Vec<(usize, usize)>>,
}

impl TenderSchedule {
    pub fn empty(inst: &Instance) -> Self {
        TenderSchedule {
            instance: inst.name.clone(),
            tenders: inst.antigens.iter().map(|a| (a.clone(), Vec::new())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tenders.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize, usize)> {
        self.tenders.iter().flat_map(|(a, v)| v.iter().map(move |&(s, e)| (a.as_str(), s, e)))
    }
}

/// Decode the tender schedule from a solution of a model built from `inst`.
/// Every tender variable must be within `int_tol` of 0 or 1.
pub fn extract_schedule(
    inst: &Instance,
    model: &MilpModel,
    x: &[f64],
    int_tol: f64,
) -> Result<TenderSchedule, AnalysisError> {
    let sets = inst.derive().map_err(crate::model::ModelError::from)?;
    let mut sched = TenderSchedule::empty(inst);
    for (a, name) in inst.antigens.iter().enumerate() {
        let list = sched.tenders.get_mut(name).unwrap();
        for w in sets.windows() {
            let key = VarKey::Tender { a, t: w.start, tau: w.end };
            let j = model.col(&key).ok_or_else(|| {
                AnalysisError::OutOfRange(format!("model has no tender column for {name} {}..{}", w.start, w.end))
            })?;
            let v = *x.get(j).ok_or(AnalysisError::LengthMismatch { left: x.len(), right: model.num_columns() })?;
            if v >= 1.0 - int_tol {
                list.push((w.start, w.end));
            } else if v > int_tol {
                return Err(AnalysisError::NonIntegral(format!("F[{name},{},{}] = {v}", w.start, w.end)));
            }
        }
    }
    Ok(sched)
}

/// Flat 0/1 vector over all `(antigen, t, τ)` in lexicographic order.
pub fn schedule_vector(sched: &TenderSchedule, inst: &Instance) -> Result<Vec<f64>, AnalysisError> {
    let sets = inst.derive().map_err(crate::model::ModelError::from)?;
    let per_antigen = sets.num_windows();
    let mut offsets = BTreeMap::new();
    for (k, w) in sets.windows().enumerate() {
        offsets.insert((w.start, w.end), k);
    }
    let mut out = vec![0.0; per_antigen * inst.num_antigens()];
    for (name, list) in &sched.tenders {
        let a = inst.antigen_index(name).ok_or_else(|| AnalysisError::OutOfRange(format!("unknown antigen {name}")))?;
        for &(s, e) in list {
            let k = offsets
                .get(&(s, e))
                .ok_or_else(|| AnalysisError::OutOfRange(format!("tender {name} {s}..{e} is not a window")))?;
            out[a * per_antigen + k] = 1.0;
        }
    }
    Ok(out)
}

/// Tender counts by length `1..=max_len`.
pub fn tender_length_histogram(sched: &TenderSchedule, max_len: usize) -> BTreeMap<usize, usize> {
    let mut h: BTreeMap<usize, usize> = (1..=max_len).map(|l| (l, 0)).collect();
    for (_, s, e) in sched.iter() {
        *h.entry(e + 1 - s).or_default() += 1;
    }
    h
}

/// Share of scheduled tenders whose length equals `len` (0 when empty).
pub fn length_share(sched: &TenderSchedule, len: usize) -> f64 {
    let total = sched.len();
    if total == 0 {
        return 0.0;
    }
    sched.iter().filter(|&(_, s, e)| e + 1 - s == len).count() as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::builder::single;
    use crate::model::{build_model, BuildOptions};

    #[test]
    fn decode_single_tender() {
        let inst = single(10);
        let model = build_model(&inst, BuildOptions::default()).unwrap();
        let mut x = vec![0.0; model.num_columns()];
        x[model.col(&VarKey::Tender { a: 0, t: 1, tau: 5 }).unwrap()] = 1.0;
        let s = extract_schedule(&inst, &model, &x, 1e-6).unwrap();
        assert_eq!(s.tenders["A"], vec![(1, 5)]);
        let v = schedule_vector(&s, &inst).unwrap();
        assert_eq!(v.iter().filter(|&&e| e == 1.0).count(), 1);
    }

    #[test]
    fn fractional_tender_is_rejected() {
        let inst = single(3);
        let model = build_model(&inst, BuildOptions::default()).unwrap();
        let mut x = vec![0.0; model.num_columns()];
        x[model.col(&VarKey::Tender { a: 0, t: 2, tau: 3 }).unwrap()] = 0.5;
        assert!(matches!(extract_schedule(&inst, &model, &x, 1e-6), Err(AnalysisError::NonIntegral(_))));
    }

    #[test]
    fn vector_length_and_empty() {
        let inst = single(3);
        let v = schedule_vector(&TenderSchedule::empty(&inst), &inst).unwrap();
        assert_eq!(v, vec![0.0; 6]);
    }

    #[test]
    fn out_of_range_entry() {
        let inst = single(3);
        let mut s = TenderSchedule::empty(&inst);
        s.tenders.get_mut("A").unwrap().push((2, 7));
        assert!(matches!(schedule_vector(&s, &inst), Err(AnalysisError::OutOfRange(_))));
    }

    #[test]
    fn histogram_counts_lengths() {
        let inst = single(10);
        let mut s = TenderSchedule::empty(&inst);
        s.tenders.insert("A".into(), vec![(1, 5), (6, 10)]);
        let h = tender_length_histogram(&s, 5);
        assert_eq!(h[&5], 2);
        assert_eq!(h.values().sum::<usize>(), 2);
        assert_eq!(length_share(&s, 5), 1.0);
        let h = tender_length_histogram(&TenderSchedule::empty(&inst), 5);
        assert!(h.values().all(|&c| c == 0));
    }
}
