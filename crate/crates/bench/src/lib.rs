//! Fixtures shared by the criterion benches in `benches/`.

use bdlab_core::fields::{DisplacementField, Grid, JumpInterface};

/// Smooth field on `[0,1]²` with `n` nodes per axis and one vertical jump at `x₁ = 0.5 + h/2`.
pub fn jump_field(n: usize) -> DisplacementField {
    let grid = Grid::cube(2, 0.0, 1.0, n).expect("valid grid");
    let xv = 0.5 + 0.5 / (n - 1) as f64;
    let j = JumpInterface::segment([xv, 0.0], [xv, 1.0], vec![1.0, -0.5]).expect("valid segment");
    DisplacementField::from_fn(
        grid,
        |x| {
            let s = if j.is_plus_side(x) { 1.0 } else { 0.0 };
            vec![x[1].sin() + s, x[0] * x[1] - 0.5 * s]
        },
        vec![j.clone()],
    )
    .expect("valid field")
}

/// Nodal samples of the harmonic `g = eˣ¹ cos x₂` on `grid`.
pub fn harmonic_g(grid: &Grid) -> Vec<f64> {
    (0..grid.node_count())
        .map(|k| {
            let x = grid.node_coord(k);
            x[0].exp() * x[1].cos()
        })
        .collect()
}
