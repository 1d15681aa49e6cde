use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::schedule::{extract_schedule, tender_length_histogram, TenderSchedule};
use super::AnalysisError;
use crate::bnb::{MilpSolution, MilpStatus};
use crate::instance::Instance;
use crate::model::{MilpModel, VarKey};

/// Unvaccinated stock `S_at` per antigen, periods 1..T. Values within a
/// relative 1e-9 of zero (against the largest demand) are reported as 0.
pub fn unvaccinated_series(inst: &Instance, model: &MilpModel, x: &[f64]) -> BTreeMap<String, Vec<f64>> {
    let scale = inst.demand.iter().flatten().fold(1.0f64, |m, &d| m.max(d));
    inst.antigens
        .iter()
        .enumerate()
        .map(|(a, name)| {
            let series = inst
                .periods()
                .map(|t| {
                    let v = model.col(&VarKey::Unvaccinated { a, t }).map_or(0.0, |j| x[j]);
                    if v.abs() <= 1e-9 * scale {
                        0.0
                    } else {
                        v
                    }
                })
                .collect();
            (name.clone(), series)
        })
        .collect()
}

/// `Σ_a Σ_t S_at` and `Σ_a S_aT`.
pub fn unvaccinated_totals(series: &BTreeMap<String, Vec<f64>>) -> (f64, f64) {
    let total = series.values().flatten().sum();
    let terminal = series.values().filter_map(|s| s.last()).sum();
    (total, terminal)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub instance: String,
    pub status: MilpStatus,
    pub objective: Option<f64>,
    pub lower_bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: u64,
    pub schedule: BTreeMap<String, Vec<(usize, usize)>>,
    pub histogram: BTreeMap<usize, usize>,
    pub unvaccinated: BTreeMap<String, Vec<f64>>,
    pub total_unvaccinated: f64,
    pub terminal_unvaccinated: f64,
}

impl SolveReport {
    /// Build the report; schedule and series are empty without an incumbent.
    pub fn new(inst: &Instance, model: &MilpModel, sol: &MilpSolution, int_tol: f64) -> Result<Self, AnalysisError> {
        let (schedule, unvaccinated) = if sol.has_incumbent() {
            (extract_schedule(inst, model, &sol.x, int_tol)?, unvaccinated_series(inst, model, &sol.x))
        } else {
            (TenderSchedule::empty(inst), BTreeMap::new())
        };
        let (total, terminal) = unvaccinated_totals(&unvaccinated);
        Ok(SolveReport {
            instance: inst.name.clone(),
            status: sol.status,
            objective: finite(sol.objective),
            lower_bound: finite(sol.lower_bound),
            gap: finite(sol.gap),
            nodes: sol.nodes,
            histogram: tender_length_histogram(&schedule, inst.max_tender_len),
            schedule: schedule.tenders,
            unvaccinated,
            total_unvaccinated: total,
            terminal_unvaccinated: terminal,
        })
    }

    pub fn schedule(&self) -> TenderSchedule {
        TenderSchedule { instance: self.instance.clone(), tenders: self.schedule.clone() }
    }
}

/// Column values by name, in column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub instance: String,
    pub status: MilpStatus,
    pub objective: Option<f64>,
    pub columns: Vec<(String, f64)>,
}

impl SolutionFile {
    pub fn new(inst: &Instance, model: &MilpModel, sol: &MilpSolution) -> Self {
        SolutionFile {
            instance: inst.name.clone(),
            status: sol.status,
            objective: finite(sol.objective),
            columns: model.columns.iter().zip(&sol.x).map(|(c, &v)| (c.name.clone(), v)).collect(),
        }
    }
}

/// Gantt chart: one row per antigen, one bar per tender.
pub fn gantt_svg(sched: &TenderSchedule, num_periods: usize) -> String {
    const LEFT: usize = 110;
    const TOP: usize = 30;
    const ROW: usize = 28;
    const UNIT: usize = 24;
    let width = LEFT + UNIT * num_periods + 20;
    let rows = sched.tenders.len();
    let height = TOP + ROW * rows + 30;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{LEFT}" y="18">Tender schedule ({})</text>"#, escape(&sched.instance));
    for t in 1..=num_periods {
        let x = LEFT + UNIT * (t - 1);
        let _ = writeln!(
            s,
            r##"<line x1="{x}" y1="{TOP}" x2="{x}" y2="{}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="middle" font-size="9">{t}</text>"##,
            TOP + ROW * rows,
            x + UNIT / 2,
            TOP + ROW * rows + 14
        );
    }
    for (i, (antigen, tenders)) in sched.tenders.iter().enumerate() {
        let y = TOP + ROW * i;
        let _ = writeln!(s, r#"<text x="4" y="{}">{}</text>"#, y + ROW / 2 + 4, escape(antigen));
        for &(start, end) in tenders {
            let x = LEFT + UNIT * (start - 1);
            let w = UNIT * (end + 1 - start);
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{}" width="{}" height="{}" rx="3" fill="#4a7ab5" stroke="#1f3f66"><title>{} {start}-{end}</title></rect>"##,
                x + 1,
                y + 4,
                w - 2,
                ROW - 8,
                escape(antigen)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
