//! Periodic tiling of a cell field plus floor staircases, rescaled to the
//! unit cell. The staircase compensates the face mismatch of the cell field
//! exactly, so the tiled field is continuous across every gluing line.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::geometry::clip_param_box;
use crate::fields::{DisplacementField, Grid, JumpInterface, Surface};
use crate::symtensor::{sym_dyad, SymMatrix};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StaircaseResult {
    pub u: DisplacementField,
    /// `∫_Q |u_n(x) − T x| dx`.
    pub dist_to_affine: f64,
    /// `T = q₁ b⊗a + q₂ a⊗b`, row-major.
    pub target: [[f64; 2]; 2],
    /// Symmetric part `(q₁ + q₂) a⊙b`.
    pub target_sym: SymMatrix,
    /// `Σ |[u_n] ⊙ ν| dH¹` over the gluing lines between tiles.
    pub gluing_mass: f64,
}

/// Tile `v`, defined on the cell `{|x·a| ≤ 1/2, |x·b| ≤ 1/2}` with
/// `a = (α, 0)`, `b = (0, β)`, add `q₁⌊x·a + 1/2⌋b + q₂⌊x·b + 1/2⌋a` and
/// return `u_n(x) = w(nx)/n` on the same cell.
///
/// The face traces of `v` must satisfy `v|right − v|left = q₁b` and
/// `v|top − v|bottom = q₂a` node by node, and the node counts of `v` must be
/// odd so that half tiles end on nodes.
pub fn staircase_average(v: &DisplacementField, a: [f64; 2], b: [f64; 2], q1: f64, q2: f64, n: usize) -> Result<StaircaseResult> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if a[1] != 0.0 || b[0] != 0.0 || !(a[0] > 0.0) || !(b[1] > 0.0) {
        return invalid("the cell must be a rectangle: a = (α, 0), b = (0, β) with α, β > 0");
    }
    let grid = v.grid();
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: grid.dim() });
    }
    let half = [0.5 / a[0], 0.5 / b[1]];
    for k in 0..2 {
        let [lo, hi] = grid.bounds()[k];
        if (lo + half[k]).abs() > 1e-12 * half[k] || (hi - half[k]).abs() > 1e-12 * half[k] {
            return Err(Error::InvalidInput(format!("cell box on axis {k} must be [−{0}, {0}]", half[k])));
        }
    }
    let kk = [grid.n()[0] - 1, grid.n()[1] - 1];
    if kk.iter().any(|k| k % 2 == 1) {
        return invalid("cell grids need an odd node count per axis");
    }
    // face compatibility, node by node
    let at = |i: usize, j: usize| v.value(grid.node_index(&[i, j]));
    let tol = 1e-9 * (1.0 + q1.abs() + q2.abs());
    for j in 0..=kk[1] {
        let (l, r) = (at(0, j), at(kk[0], j));
        let gap = ((r[0] - l[0] - q1 * b[0]).powi(2) + (r[1] - l[1] - q1 * b[1]).powi(2)).sqrt();
        if gap > tol {
            return Err(Error::InvalidInput(format!("a-faces: trace difference off by {gap:.3e} at face node {j}")));
        }
    }
    for i in 0..=kk[0] {
        let (lo, hi) = (at(i, 0), at(i, kk[1]));
        let gap = ((hi[0] - lo[0] - q2 * a[0]).powi(2) + (hi[1] - lo[1] - q2 * a[1]).powi(2)).sqrt();
        if gap > tol {
            return Err(Error::InvalidInput(format!("b-faces: trace difference off by {gap:.3e} at face node {i}")));
        }
    }

    let nf = n as f64;
    let fine = Grid::new(
        vec![[-half[0], half[0]], [-half[1], half[1]]],
        vec![n * kk[0] + 1, n * kk[1] + 1],
    )?;
    // node i on axis k sits at s = i − n K/2 cell steps from the centre of
    // the stretched picture; its tile and local index follow by integer math
    let tile = |i: usize, k: usize| -> (i64, usize) {
        let kk = kk[k] as i64;
        let s = i as i64 - (n as i64 * kk) / 2;
        let t = (2 * s + kk).div_euclid(2 * kk);
        (t, (s - t * kk + kk / 2) as usize)
    };
    let w_at = |ta: i64, tb: i64, j0: usize, j1: usize| -> [f64; 2] {
        let vv = at(j0, j1);
        let (sa, sb) = (q1 * ta as f64, q2 * tb as f64);
        [vv[0] + sa * b[0] + sb * a[0], vv[1] + sa * b[1] + sb * a[1]]
    };

    let mut values = Vec::with_capacity(2 * fine.node_count());
    for node in 0..fine.node_count() {
        let m = fine.node_multi(node);
        let ((ta, j0), (tb, j1)) = (tile(m[0], 0), tile(m[1], 1));
        let w = w_at(ta, tb, j0, j1);
        values.push(w[0] / nf);
        values.push(w[1] / nf);
    }

    // tiled copies of the interior interfaces of v, clipped to the cell
    let (lo, hi) = (fine.lo(), fine.hi());
    let t_range = |k: usize| tile(0, k).0..=tile(n * kk[k], k).0;
    let mut jumps = Vec::new();
    for ta in t_range(0) {
        for tb in t_range(1) {
            let centre = [2.0 * half[0] * ta as f64, 2.0 * half[1] * tb as f64];
            for j in v.jumps() {
                let mut pts: Vec<[[f64; 2]; 2]> = Vec::new();
                for piece in j.pieces() {
                    let Surface::Segment([p, q]) = piece.transformed(&[-centre[0], -centre[1]], nf) else {
                        return invalid("cell interfaces must be segments");
                    };
                    if let Some((t0, t1)) = clip_param_box(&p, &q, &lo, &hi) {
                        if t1 - t0 > 1e-12 {
                            let lerp = |t: f64| [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                            pts.push([lerp(t0), lerp(t1)]);
                        }
                    }
                }
                let jump: Vec<f64> = j.jump().iter().map(|x| x / nf).collect();
                for [p, q] in pts {
                    jumps.push(JumpInterface::segment(p, q, jump.clone())?);
                }
            }
        }
    }
    let u = DisplacementField::new(fine.clone(), values, jumps)?;

    // jumps of u_n across gluing lines from the traces of adjacent tiles
    let mut gluing_mass = 0.0;
    for k in 0..2 {
        let o = 1 - k;
        let h_o = fine.spacing(o);
        let mut normal = [0.0; 2];
        normal[k] = 1.0;
        for i in 1..n * kk[k] {
            let (t, j) = tile(i, k);
            if j != 0 {
                continue;
            }
            for io in 0..=n * kk[o] {
                let (to, jo) = tile(io, o);
                let (left, right) = if k == 0 {
                    (w_at(t - 1, to, kk[0], jo), w_at(t, to, 0, jo))
                } else {
                    (w_at(to, t - 1, jo, kk[1]), w_at(to, t, jo, 0))
                };
                let jump = [(right[0] - left[0]) / nf, (right[1] - left[1]) / nf];
                let weight = if io == 0 || io == n * kk[o] { 0.5 * h_o } else { h_o };
                gluing_mass += weight * sym_dyad(&jump, &normal)?.norm();
            }
        }
    }

    let target = [
        [q1 * b[0] * a[0] + q2 * a[0] * b[0], q1 * b[0] * a[1] + q2 * a[0] * b[1]],
        [q1 * b[1] * a[0] + q2 * a[1] * b[0], q1 * b[1] * a[1] + q2 * a[1] * b[1]],
    ];
    let target_sym = sym_dyad(&a, &b)?.scaled(q1 + q2);

    let dist_to_affine = {
        let err: Vec<f64> = (0..fine.node_count())
            .map(|node| {
                let x = fine.node_coord(node);
                let uv = u.value(node);
                let tx = [target[0][0] * x[0] + target[0][1] * x[1], target[1][0] * x[0] + target[1][1] * x[1]];
                (uv[0] - tx[0]).hypot(uv[1] - tx[1])
            })
            .collect();
        (0..fine.cell_count())
            .map(|c| fine.cell_corners(c).iter().map(|&k| err[k]).sum::<f64>() / 4.0)
            .sum::<f64>()
            * fine.cell_volume()
    };

    Ok(StaircaseResult {
        u,
        dist_to_affine,
        target,
        target_sym,
        gluing_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::assemble_symmetrized_measure;

    fn cell(m: usize) -> Grid {
        Grid::cube(2, -0.5, 0.5, m).unwrap()
    }

    // steps sit between nodes of the 9-node cell grid
    const S: f64 = 1.0 / 16.0;

    fn staircase_cell(m: usize) -> DisplacementField {
        let j1 = JumpInterface::segment([-0.5, S], [0.5, S], vec![-1.0, 0.0]).unwrap();
        let j2 = JumpInterface::segment([S, -0.5], [S, 0.5], vec![0.0, 1.0]).unwrap();
        DisplacementField::from_fn(cell(m), |x| vec![(x[1] > S) as u8 as f64, (x[0] > S) as u8 as f64], vec![j1, j2]).unwrap()
    }

    #[test]
    fn staircase_cell_target_and_gluing() {
        let mut prev: Option<f64> = None;
        for n in [1, 2, 4, 8] {
            let r = staircase_average(&staircase_cell(9), [1.0, 0.0], [0.0, 1.0], 1.0, 1.0, n).unwrap();
            assert!(r.gluing_mass < 1e-12);
            assert!(r.target_sym.max_abs_diff(&sym_dyad(&[1.0, 0.0], &[0.0, 1.0]).unwrap().scaled(2.0)) < 1e-15);
            if let Some(p) = prev {
                let ratio = p / r.dist_to_affine;
                assert!((ratio - 2.0).abs() < 0.4, "n = {n}: ratio {ratio}");
            }
            prev = Some(r.dist_to_affine);
        }
    }

    #[test]
    fn tiled_measure_has_only_cell_interfaces() {
        // every atom of Eu_n is a scaled copy of a cell interface: total
        // singular mass stays 2·|e₁⊙e₂|·|Q| summed over tiles
        let r = staircase_average(&staircase_cell(9), [1.0, 0.0], [0.0, 1.0], 1.0, 1.0, 4).unwrap();
        let mu = assemble_symmetrized_measure(&r.u).unwrap();
        assert!((mu.singular_mass() - 2.0 / 2f64.sqrt()).abs() < 1e-12);
        // away from the interfaces 𝓔u_n vanishes: the staircase is piecewise constant
        let flagged = r.u.sym_gradient().flagged;
        for (c, m) in mu.density().iter().enumerate() {
            if !flagged[c] {
                assert!(m.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn periodic_constant_cell() {
        let v = DisplacementField::from_fn(cell(5), |_| vec![0.3, -0.2], vec![]).unwrap();
        let d: Vec<f64> = [1, 2, 4]
            .iter()
            .map(|&n| staircase_average(&v, [1.0, 0.0], [0.0, 1.0], 0.0, 0.0, n).unwrap().dist_to_affine)
            .collect();
        let c = 0.3f64.hypot(0.2);
        for (k, n) in [1.0, 2.0, 4.0].iter().enumerate() {
            assert!((d[k] - c / n).abs() < 1e-12);
        }
    }

    #[test]
    fn single_step_cell() {
        let j = JumpInterface::segment([S, -0.5], [S, 0.5], vec![0.0, 1.0]).unwrap();
        let v = DisplacementField::from_fn(cell(9), |x| vec![0.0, (x[0] > S) as u8 as f64], vec![j]).unwrap();
        let d: Vec<f64> = [2, 4, 8]
            .iter()
            .map(|&n| {
                let r = staircase_average(&v, [1.0, 0.0], [0.0, 1.0], 1.0, 0.0, n).unwrap();
                assert!(r.gluing_mass < 1e-12);
                r.dist_to_affine
            })
            .collect();
        for w in d.windows(2) {
            assert!((w[0] / w[1] - 2.0).abs() < 0.4, "{d:?}");
        }
    }

    #[test]
    fn incompatible_faces() {
        let v = DisplacementField::from_fn(cell(5), |x| vec![x[0], 0.0], vec![]).unwrap();
        let e = staircase_average(&v, [1.0, 0.0], [0.0, 1.0], 0.0, 0.0, 2).unwrap_err();
        assert!(format!("{e}").contains("a-faces"));
        assert!(staircase_average(&staircase_cell(8), [1.0, 0.0], [0.0, 1.0], 1.0, 1.0, 2).is_err());
    }
}
