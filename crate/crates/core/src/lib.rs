//! A numerical laboratory for volume-preserving torus diffeomorphisms with a
//! dominated splitting `E^cs + E^cu`.
//!
//! The crate estimates invariant bundles and finite-time Lyapunov exponents,
//! evaluates the inflatability inequality `int xi_n dm > Xi_n`, grows
//! discretised unstable disks to measure boundary visibility and span, probes
//! ergodicity through Birkhoff profiles, and certifies product structure
//! with constant cone fields.

pub mod cli;
pub mod cocycle;
pub mod diskgrowth;
pub mod error;
pub mod hopf;
pub mod inflatability;
pub mod linalg;
pub mod lyapunov;
pub mod productstructure;
pub mod rng;
pub mod splitting;
pub mod system;

pub use error::{LabError, Result};
pub use splitting::{estimate_splitting, SplittingFrame, SplittingParams};
pub use system::catalog::{catalog, system};
pub use system::{TorusMap, TorusPoint};
