//! Particle laboratory for magnetized Vlasov dynamics on the torus.
//!
//! Empirical measures are pushed along characteristics, compared with
//! phase-space Wasserstein distances and coupling functionals, and the
//! measured separations are checked against explicit stability bounds.

pub mod bounds;
pub mod ensemble;
pub mod error;
pub mod fields;
pub mod flow;
pub mod geometry;
pub mod harness;
pub mod sum;
pub mod transport;

pub use error::{Error, Result};
