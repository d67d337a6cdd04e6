//! Beris–Edwards Q-tensor diffuse-interface simulator and the diagnostics
//! used to study its sharp-interface limit.
//!
//! Layering, bottom up: [`qspace`] (tensor algebra, bulk potential),
//! [`profiles`] (1D traveling wave, quasi-distance), [`geometry`]
//! (analytic reference interfaces), [`grid`] (fields and stencils),
//! [`linsolve`], [`solver`], [`diagnostics`], [`harness`].

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod linsolve;
pub mod profiles;
pub mod qspace;
pub mod solver;

pub use error::{QslError, Result};
