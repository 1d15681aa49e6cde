//! Schedules, similarity, β-sweeps and reports built on solved instances.

mod report;
mod schedule;
mod similarity;
mod sweep;

pub use report::{gantt_svg, unvaccinated_series, unvaccinated_totals, SolutionFile, SolveReport};
pub use schedule::{extract_schedule, length_share, schedule_vector, tender_length_histogram, TenderSchedule};
pub use similarity::{cosine_similarity, schedule_similarity, similarity_matrix};
pub use sweep::{
    beta_sweep, perturb, robustness, solve_instance, Perturbation, RobustnessResult, RobustnessSample, Solved,
    SweepEntry, SweepResult,
};

use thiserror::Error;

use crate::bnb::{MilpError, MilpStatus};
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("non-integral tender variable {0}; an integral solution is required")]
    NonIntegral(String),
    #[error("{0}")]
    OutOfRange(String),
    #[error("vector lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("cosine similarity needs non-zero vectors")]
    ZeroVector,
    #[error("solve ended with status {0:?} and no incumbent")]
    NoIncumbent(MilpStatus),
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Milp(#[from] MilpError),
}
