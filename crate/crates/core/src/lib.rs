//! Numerical kernels for variational problems over functions of bounded
//! deformation.

pub mod error;
pub mod fields;
pub mod functional;
pub mod integrands;
pub mod rigidity2d;
pub mod symtensor;
pub mod youngmeasures;

pub use error::{Error, Result};
pub use fields::{
    assemble_symmetrized_measure, directional_slice_check, doubling_scan, DisplacementField, Grid, JumpInterface,
    SymMeasure,
};
pub use functional::{area_functional, evaluate_functional, FunctionalBreakdown};
pub use integrands::Integrand;
pub use symtensor::{classify_dyad, frobenius_inner, sym_dyad, DyadClass, DyadTag, SymMatrix};
