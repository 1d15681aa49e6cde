//! Coordinated multi-period vaccine tender scheduling.
//!
//! An [`instance::Instance`] describes antigens, vaccines, producers and
//! their yearly parameters. [`model::build_model`] compiles it into a linear
//! mixed-binary program, which [`bnb::solve_milp`] solves with LP-based
//! branch-and-bound on top of the simplex in [`lp`]. [`forecast`] produces
//! demand and capacity series; [`analysis`] turns solutions into schedules,
//! similarity scores and reports.

pub mod analysis;
pub mod bnb;
pub mod check;
pub mod exec;
pub mod forecast;
pub mod instance;
pub mod lp;
pub mod model;
