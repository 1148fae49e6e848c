//! Pseudo-spectral solver for the fractional parabolic-elliptic Keller-Segel
//! system with logistic source on the torus, plus the machinery that checks
//! its explicit a-priori bounds on computed solutions.

pub mod constants;
pub mod dynamics;
pub mod io;
pub mod quadrature;
pub mod special;
pub mod torus;
pub mod verifier;

pub use constants::{BoundEnvelope, DataNorms, EnvelopeKind, ModelParams, PaperConstants};
pub use torus::{Field, SpectralField, TorusGrid};
pub use dynamics::{Scheme, SolverConfig, Trajectory, TrajectoryRecord};
pub use io::{IoError, RunConfig};
pub use verifier::{Certificate, ClaimId, Status, Tolerance};
