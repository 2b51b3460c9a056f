//! From a unique-SVP instance to DCP registers and back to a short vector.

mod encode;
mod pipeline;
mod sampler;

pub use encode::{dcp_modulus, decode_difference, encode, encode_difference};
pub use pipeline::{
    default_range, length_guesses, solve_unique_svp, Candidate, CandidateSource, CellOutcome, SvpConfig, SvpReport,
    SvpStatus,
};
pub use sampler::{
    f_embed, g_cell, hidden_difference, is_prime, smallest_prime_above, LatticeCosetSource, Provenance,
    ReductionParams, RegisterStatus, SamplerKind, SamplerMode, SourceCounts, TwoPointRegister, TwoPointSampler,
    PREIMAGE_BUDGET,
};

use crate::dcp::DcpError;
use crate::lattice::LatticeError;

#[derive(Debug, thiserror::Error)]
pub enum SvpError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("digit {index} is zero after the offset; |b| reached M")]
    DecodeOverflow { index: usize },
    #[error("structural violation at {location}: {zeros} preimages with t = 0, {ones} with t = 1")]
    StructuralViolation {
        location: String,
        zeros: usize,
        ones: usize,
    },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Dcp(#[from] DcpError),
}
