//! Grid-sampled displacement fields, their symmetrized derivative measures,
//! blow-ups and the doubling scan.

pub mod field;
pub mod geometry;
pub mod grid;
pub mod measure;

pub use field::{diff_axis, DisplacementField, JumpInterface, RigidFit, Surface, SymGradient};
pub use geometry::Region;
pub use grid::Grid;
pub use measure::{
    assemble_symmetrized_measure, directional_slice_check, doubling_scan, DoublingReport, DoublingRow, PointAtom,
    SliceCheck, SurfaceAtom, SymMeasure,
};
