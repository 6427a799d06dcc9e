//! Grenander estimator of a decreasing density, its argmax inverse, exact
//! L_k-error functionals, and a seeded Monte Carlo laboratory for the
//! central limit theory of those errors.

pub mod density;
pub mod brownian;
pub mod chernoff;
pub mod cli;
pub mod constants;
pub mod error;
pub mod functionals;
pub mod grenander;
pub mod harness;
pub mod inverse_process;
pub mod quadrature;
pub mod render;
pub mod rng;
pub mod stats;

pub use density::{DensityFamily, MonotoneDensity};
pub use error::{Error, Result};
pub use grenander::{
    apply_cutoff, fit_lcm, inverse_cutoff, segment_decomposition, ConcaveMajorant, CutoffSpec,
    EmpiricalCdf, GrenanderEstimate, Segment, SegmentCase,
};
