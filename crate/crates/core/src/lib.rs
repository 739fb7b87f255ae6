//! Measurement-based linear optics (MBLO) on continuous-variable cluster states.
//!
//! The crate builds cluster graphs as algebraic terms, evaluates their quadrature
//! input-output relations `(G, N, D)`, compiles unitaries into universal brickwork
//! phase schedules, derives finite-squeezing thresholds, and samples MBLO output
//! states in the classically easy regime. Small exact oracles (hafnian, permanent,
//! truncated Fock space) back the tests.
//!
//! Conventions: xxpp quadrature ordering, `hbar = 1`, vacuum covariance `I/2`.
//!
//! The matrix pipeline is generic over the scalar `T: Real` (`f32` or `f64`);
//! probability, fidelity and sampling code is `f64`. Hafnian and permanent kernels
//! are generic over any commutative ring, so integer inputs are evaluated exactly.

pub mod error;
pub mod format;
pub mod graph;
pub mod io_relation;
pub mod noise;
pub mod numerics;
pub mod oracle;
pub mod sampling;
pub mod synthesis;

pub use error::{Error, Result};

/// Scalar field for the matrix pipeline.
pub trait Real: nalgebra::RealField + Copy + Send + Sync + 'static {}
impl<T> Real for T where T: nalgebra::RealField + Copy + Send + Sync + 'static {}

/// RNG seed; equal seeds give bit-identical streams.
pub type Seed = u64;

/// Real dense matrix in double precision.
pub type RealMatrix = numerics::Matrix<f64>;
/// Complex dense matrix in double precision.
pub type ComplexMatrix = numerics::CMatrix<f64>;
/// Input-output relation in double precision.
pub type IORelation = io_relation::IoRelation<f64>;
/// Phase schedule in double precision.
pub type PhaseSchedule = io_relation::Schedule<f64>;
/// Brick parameters in double precision.
pub type BrickParams = synthesis::Brick<f64>;
/// Synthesis plan in double precision.
pub type SynthesisPlan = synthesis::Plan<f64>;

pub use graph::GraphTerm;
pub use num_complex::Complex64;
