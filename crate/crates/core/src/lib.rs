//! Finite-grid laboratory for Schrödinger-adapted weight classes.
//!
//! Everything lives on a uniform cell-centred lattice over `[-L, L]^n`:
//! critical radius fields of a potential `V`, the penalised maximal operators
//! `M_{V,θ}` and relatives, `A_p^{ρ,θ}` constants, the dyadic
//! Calderón–Zygmund decomposition, Rubio de Francia majorants and a harness
//! that measures the constants in weighted norm inequalities.

pub mod cli;
pub mod construct;
pub mod czd;
pub mod error;
pub mod grid;
pub mod maximal;
pub mod par;
pub mod potential;
pub mod report;
pub mod verify;
pub mod rng;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{GridFunction, GridSpec, VectorGridFunction};
pub use potential::{CriticalRadiusField, Potential};
pub use report::InequalityReport;
pub use weights::Weight;
