//! Magnetoelastic decay toolkit.
//!
//! Two halves share the domain types:
//!
//! * a geometric engine that traces generalized bicharacteristics with
//!   transversal/longitudinal mode conversion in smooth implicit domains,
//!   searches for field-resistant rays and decides the uniform-vs-polynomial
//!   decay class together with the contact-order exponent;
//! * a desk-scale finite-difference solver for the coupled
//!   elastic/magnetic system on a box, with energy and dissipation
//!   bookkeeping, Helmholtz splitting, negative-order norms and the
//!   observability functionals, plus decay-rate fitting.

pub mod decay;
pub mod error;
pub mod geometry;
pub mod material;
pub mod pde;
pub mod ray;
pub mod scenario;
pub mod search;
pub mod vec3;

pub use error::{FitError, GeomError, SolveError, TraceError, ValidationError};
pub use material::{Material, WaveMode};
pub use vec3::{vec3, Vec3};

/// Version stamp embedded in every machine-readable output.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version of the serialized schemas (scenario, verdict, reports).
pub const SCHEMA_VERSION: u32 = 1;
