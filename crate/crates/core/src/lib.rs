pub mod cli;
pub mod error;
pub mod games;
pub mod gf2;
pub mod graphs;
pub mod matops;
pub mod rounding;
pub mod solutiongroup;
pub mod strategies;
