//! Dihedral coset problem: the simulated world and the phase-estimation solver.

mod solver;
mod world;

pub use solver::{
    combine_estimates, estimate_angle, routine_r3, solve_congruence, solve_dcp, verify_candidates, ArmStats, DcpConfig,
    DcpTranscript, PhaseEstimate, StageRecord, Verification,
};
pub use world::{
    default_bad_prob, Audit, CosetRegister, CosetSource, DcpWorld, PhaseRegister, PlantedCosets, QubitBasis,
    ResidualDescription, ResidualQubit, RoutineAnalysis, RoutineOutcome, WorldStats,
};

use crate::qsim::QsimError;
use crate::subsetsum::SubsetSumError;

#[derive(Debug, thiserror::Error)]
pub enum DcpError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal contract broken: {0}")]
    Contract(String),
    #[error("coset source failed: {0}")]
    Source(String),
    #[error("estimation failed at q = {q}: {reason}")]
    EstimationFailed { q: u64, reason: String },
    #[error(transparent)]
    Oracle(#[from] SubsetSumError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}
