//! Teacher assignment: instances, the integer-linear model, an exact
//! branch-and-bound solver, solver-file encodings, an independent verifier,
//! accuracy metrics and a seeded instance generator.

pub mod encode;
pub mod generate;
pub mod instance;
pub mod metrics;
pub mod model;
pub mod assignment;
pub mod solver;
pub mod verify;

pub use assignment::Assignment;
pub use instance::Instance;
