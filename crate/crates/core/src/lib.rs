//! Khinchin families of power series, Hayman-class checks and saddle-point coefficient estimates.

pub mod admissibility;
pub mod cli;
pub mod error;
pub mod family;
pub mod number_theory;
pub mod report;
pub mod saddle;
pub mod series;

pub use error::{Error, Result};
pub use family::FamilyEvaluator;
pub use series::CoefficientSeries;
