pub mod dcp;
pub mod geometry;
pub mod harness;
pub mod lattice;
pub mod matching;
pub mod qsim;
pub mod rng;
pub mod subsetsum;
pub mod svp;
