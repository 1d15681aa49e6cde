use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{unvaccinated_series, unvaccinated_totals};
use super::schedule::{extract_schedule, schedule_vector, TenderSchedule};
use super::similarity::{cosine_similarity, similarity_matrix};
use super::AnalysisError;
use crate::bnb::{solve_milp, MilpSolution, MilpStatus, SolveParams};
use crate::exec;
use crate::instance::Instance;
use crate::model::{build_model, BuildOptions, MilpModel};

pub struct Solved {
    pub model: MilpModel,
    pub solution: MilpSolution,
}

/// Build and solve one instance.
pub fn solve_instance(inst: &Instance, opts: BuildOptions, params: &SolveParams) -> Result<Solved, AnalysisError> {
    let model = build_model(inst, opts)?;
    let solution = solve_milp(&model, params)?;
    Ok(Solved { model, solution })
}

/// Solve and decode the schedule; fails without an incumbent.
fn solve_schedule(
    inst: &Instance,
    opts: BuildOptions,
    params: &SolveParams,
) -> Result<(Solved, TenderSchedule), AnalysisError> {
    let solved = solve_instance(inst, opts, params)?;
    if !solved.solution.has_incumbent() {
        return Err(AnalysisError::NoIncumbent(solved.solution.status));
    }
    let sched = extract_schedule(inst, &solved.model, &solved.solution.x, params.int_tol)?;
    Ok((solved, sched))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub beta: f64,
    pub status: Option<MilpStatus>,
    pub objective: Option<f64>,
    pub gap: Option<f64>,
    pub total_unvaccinated: Option<f64>,
    pub terminal_unvaccinated: Option<f64>,
    pub schedule: Option<TenderSchedule>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    /// Cosine similarities between the schedules of all entries.
    pub fn schedule_similarities(&self, inst: &Instance) -> Vec<Vec<Option<f64>>> {
        let vectors: Vec<Vec<f64>> = self
            .entries
            .iter()
            .map(|e| e.schedule.as_ref().and_then(|s| schedule_vector(s, inst).ok()).unwrap_or_default())
            .collect();
        similarity_matrix(&vectors)
    }
}

/// Solve `inst` once per β, everything else unchanged. Failures are
/// recorded in their entry; results follow the order of `betas`.
pub fn beta_sweep(
    inst: &Instance,
    betas: &[f64],
    opts: BuildOptions,
    params: &SolveParams,
) -> Result<SweepResult, AnalysisError> {
    if betas.is_empty() {
        return Err(AnalysisError::InvalidInput("no β values given".into()));
    }
    if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(AnalysisError::InvalidInput(format!("β = {b} must be finite and non-negative")));
    }
    let entries = exec::par_map(betas, |&beta| {
        let mut inst = inst.clone();
        inst.shortage_penalty = beta;
        match solve_schedule(&inst, opts, params) {
            Ok((solved, sched)) => {
                let series = unvaccinated_series(&inst, &solved.model, &solved.solution.x);
                let (total, terminal) = unvaccinated_totals(&series);
                SweepEntry {
                    beta,
                    status: Some(solved.solution.status),
                    objective: Some(solved.solution.objective),
                    gap: Some(solved.solution.gap),
                    total_unvaccinated: Some(total),
                    terminal_unvaccinated: Some(terminal),
                    schedule: Some(sched),
                    error: None,
                }
            }
            Err(e) => SweepEntry {
                beta,
                status: match &e {
                    AnalysisError::NoIncumbent(s) => Some(*s),
                    _ => None,
                },
                objective: None,
                gap: None,
                total_unvaccinated: None,
                terminal_unvaccinated: None,
                schedule: None,
                error: Some(e.to_string()),
            },
        }
    });
    Ok(SweepResult { entries })
}

/// Relative uniform noise on demand and capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    /// Each `d_at` is scaled by a factor drawn from `1 ± demand_pct/100`.
    pub demand_pct: f64,
    pub capacity_pct: f64,
    pub seed: u64,
}

pub fn perturb(inst: &Instance, p: &Perturbation) -> Result<Instance, AnalysisError> {
    for pct in [p.demand_pct, p.capacity_pct] {
        if !(0.0..100.0).contains(&pct) {
            return Err(AnalysisError::InvalidInput(format!("perturbation {pct}% outside [0,100)")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut noise = |pct: f64| if pct == 0.0 { 1.0 } else { 1.0 + rng.gen_range(-pct..=pct) / 100.0 };
    let mut out = inst.clone();
    for row in &mut out.demand {
        for d in row.iter_mut() {
            *d *= noise(p.demand_pct);
        }
    }
    for row in &mut out.capacity {
        for s in row.iter_mut() {
            *s *= noise(p.capacity_pct);
        }
    }
    out.name = format!("{}-perturbed-{}", inst.name, p.seed);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSample {
    pub seed: u64,
    pub status: Option<MilpStatus>,
    pub similarity: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub baseline: TenderSchedule,
    pub samples: Vec<RobustnessSample>,
    pub min_similarity: Option<f64>,
    pub max_similarity: Option<f64>,
}

/// Compare the baseline schedule against schedules of `samples` perturbed
/// copies (seeds `seed`, `seed + 1`, …) by cosine similarity.
pub fn robustness(
    inst: &Instance,
    samples: usize,
    demand_pct: f64,
    capacity_pct: f64,
    seed: u64,
    opts: BuildOptions,
    params: &SolveParams,
) -> Result<RobustnessResult, AnalysisError> {
    let (_, baseline) = solve_schedule(inst, opts, params)?;
    let base_vec = schedule_vector(&baseline, inst)?;
    let perts: Vec<Perturbation> =
        (0..samples as u64).map(|i| Perturbation { demand_pct, capacity_pct, seed: seed.wrapping_add(i) }).collect();
    // Validate once up front so argument errors are not buried per sample.
    if let Some(p) = perts.first() {
        perturb(inst, p)?;
    }
    let samples = exec::par_map(&perts, |p| {
        let result = perturb(inst, p).and_then(|pi| solve_schedule(&pi, opts, params)).and_then(|(solved, sched)| {
            let v = schedule_vector(&sched, inst)?;
            Ok((solved.solution.status, cosine_similarity(&base_vec, &v)?))
        });
        match result {
            Ok((status, sim)) => {
                RobustnessSample { seed: p.seed, status: Some(status), similarity: Some(sim), error: None }
            }
            Err(e) => RobustnessSample { seed: p.seed, status: None, similarity: None, error: Some(e.to_string()) },
        }
    });
    let sims: Vec<f64> = samples.iter().filter_map(|s| s.similarity).collect();
    Ok(RobustnessResult {
        baseline,
        min_similarity: sims.iter().copied().reduce(f64::min),
        max_similarity: sims.iter().copied().reduce(f64::max),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::builder::single;

    #[test]
    fn perturbation_is_seeded_and_bounded() {
        let inst = single(6);
        let p = Perturbation { demand_pct: 10.0, capacity_pct: 0.0, seed: 3 };
        let a = perturb(&inst, &p).unwrap();
        let b = perturb(&inst, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.capacity, inst.capacity);
        assert!(a.demand[0].iter().all(|&d| (9.0..=11.0).contains(&d)));
        assert_ne!(a.demand, inst.demand);
        assert!(perturb(&inst, &Perturbation { demand_pct: 100.0, ..p }).is_err());
    }

    #[test]
    fn sweep_rejects_bad_betas() {
        let inst = single(2);
        let params = SolveParams::default();
        assert!(beta_sweep(&inst, &[], BuildOptions::default(), &params).is_err());
        assert!(beta_sweep(&inst, &[-1.0], BuildOptions::default(), &params).is_err());
    }

    #[test]
    fn sweep_keeps_input_order() {
        let inst = single(3);
        let betas = [5.0, 0.0, 1.0];
        let r = beta_sweep(&inst, &betas, BuildOptions::default(), &SolveParams::default()).unwrap();
        let got: Vec<f64> = r.entries.iter().map(|e| e.beta).collect();
        assert_eq!(got, betas);
        assert!(r.entries.iter().all(|e| e.error.is_none()));
    }
}
