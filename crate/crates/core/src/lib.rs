//! SDP relaxations of homogeneous quadratic programs.
//!
//! Solves `min/max x*Cx s.t. x*A_k x >= 1` (resp. `<= 1`) over the reals or
//! complex numbers through their semidefinite relaxations, extracts rank-one
//! solutions with randomized rounding, and evaluates the approximation-ratio
//! certificates and probability bounds that justify the rounding schemes.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. All transcendental functions go through `libm`, so results are
//! bit-identical across platforms for a given seed.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod instances;
pub mod linalg;
pub mod probability;
pub mod rank;
pub mod rng;
pub mod rounding;
pub mod sdp;

mod math;

pub use linalg::{HermMatrix, LinalgError, Mat, Spectrum, SymMatrix};
pub use sdp::{Field, QcqpInstance, Sense, SdpSolution, SolveStatus};
