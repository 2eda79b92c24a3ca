//! Small numerical toolkit: damped fixed points, bracketed roots,
//! adaptive quadrature and dense Hermitian solves.

pub mod fixed_point;
pub mod linalg;
pub mod quadrature;
pub mod roots;

pub use fixed_point::{FixedPointConfig, FixedPointOutcome};
