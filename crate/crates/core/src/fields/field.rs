use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::geometry::{clip_polygon_box, dist_sq, newell_normal, polygon_area, segments_overlap, Region};
use super::grid::Grid;
use crate::error::{invalid, Error, Result};
use crate::symtensor::{sym_dyad, SymMatrix};

/// A flat piece of a codimension-one surface: a segment in 2D or a planar
/// polygon in 3D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    Segment([[f64; 2]; 2]),
    Polygon(Vec<[f64; 3]>),
}

impl Surface {
    pub fn dim(&self) -> usize {
        match self {
            Surface::Segment(_) => 2,
            Surface::Polygon(_) => 3,
        }
    }

    /// `(d−1)`-dimensional measure.
    pub fn measure(&self) -> f64 {
        match self {
            Surface::Segment([p, q]) => dist_sq(p, q).sqrt(),
            Surface::Polygon(v) => polygon_area(v),
        }
    }

    /// Unit normal. For a segment traversed `p → q` it is the tangent rotated
    /// clockwise, `(t₂, −t₁)`; for a polygon it follows the right-hand rule.
    pub fn normal(&self) -> Vec<f64> {
        match self {
            Surface::Segment([p, q]) => {
                let t = [q[0] - p[0], q[1] - p[1]];
                let l = (t[0] * t[0] + t[1] * t[1]).sqrt();
                vec![t[1] / l, -t[0] / l]
            }
            Surface::Polygon(v) => {
                let n = newell_normal(v);
                let l = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                vec![n[0] / l, n[1] / l, n[2] / l]
            }
        }
    }

    pub fn anchor(&self) -> Vec<f64> {
        match self {
            Surface::Segment([p, _]) => p.to_vec(),
            Surface::Polygon(v) => v[0].to_vec(),
        }
    }

    /// Signed distance of `x` to the supporting line/plane.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        let n = self.normal();
        let a = self.anchor();
        x.iter().zip(&a).zip(&n).map(|((x, a), n)| (x - a) * n).sum()
    }

    /// Unsigned distance from `x` to the piece itself.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Surface::Segment([p, q]) => {
                let d = [q[0] - p[0], q[1] - p[1]];
                let l2 = d[0] * d[0] + d[1] * d[1];
                let t = (((x[0] - p[0]) * d[0] + (x[1] - p[1]) * d[1]) / l2).clamp(0.0, 1.0);
                let c = [p[0] + t * d[0], p[1] + t * d[1]];
                dist_sq(x, &c).sqrt()
            }
            Surface::Polygon(v) => {
                let s = self.signed_distance(x);
                let n = self.normal();
                let proj: Vec<f64> = x.iter().zip(&n).map(|(x, n)| x - s * n).collect();
                if point_in_polygon(v, &proj, &n) {
                    s.abs()
                } else {
                    // distance to the boundary edges
                    (0..v.len())
                        .map(|i| {
                            let a = v[i];
                            let b = v[(i + 1) % v.len()];
                            let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                            let l2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                            let t = (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1] + (x[2] - a[2]) * d[2]) / l2)
                                .clamp(0.0, 1.0);
                            let c = [a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]];
                            dist_sq(x, &c).sqrt()
                        })
                        .fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    /// Measure of the part of the piece inside `region`.
    pub fn measure_in(&self, region: &Region) -> f64 {
        match self {
            Surface::Segment([p, q]) => region.segment_measure(p, q),
            Surface::Polygon(v) => region.polygon_measure(v),
        }
    }

    /// Whether the piece meets the closed box in a set of positive measure.
    pub fn crosses_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        match self {
            Surface::Segment([p, q]) => Region::cuboid(lo, hi).segment_measure(p, q) > 0.0,
            Surface::Polygon(v) => clip_polygon_box(v, lo, hi).len() >= 3,
        }
    }

    /// Image under `x ↦ (x − x₀)/r`.
    pub fn transformed(&self, x0: &[f64], r: f64) -> Surface {
        match self {
            Surface::Segment([p, q]) => Surface::Segment([
                [(p[0] - x0[0]) / r, (p[1] - x0[1]) / r],
                [(q[0] - x0[0]) / r, (q[1] - x0[1]) / r],
            ]),
            Surface::Polygon(v) => Surface::Polygon(
                v.iter()
                    .map(|p| [(p[0] - x0[0]) / r, (p[1] - x0[1]) / r, (p[2] - x0[2]) / r])
                    .collect(),
            ),
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let pts: Vec<Vec<f64>> = match self {
            Surface::Segment(s) => s.iter().map(|p| p.to_vec()).collect(),
            Surface::Polygon(v) => v.iter().map(|p| p.to_vec()).collect(),
        };
        let d = pts[0].len();
        let lo = (0..d).map(|k| pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();
        let hi = (0..d).map(|k| pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
        (lo, hi)
    }
}

fn point_in_polygon(v: &[[f64; 3]], p: &[f64], n: &[f64]) -> bool {
    // project on the coordinate plane with the largest normal component
    let k = (0..3).max_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap();
    let (i, j) = match k {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let mut inside = false;
    let m = v.len();
    for a in 0..m {
        let b = (a + m - 1) % m;
        let (xa, ya, xb, yb) = (v[a][i], v[a][j], v[b][i], v[b][j]);
        if (ya > p[j]) != (yb > p[j]) && p[i] < (xb - xa) * (p[j] - ya) / (yb - ya) + xa {
            inside = !inside;
        }
    }
    inside
}

/// Oriented interface carrying a constant jump `u⁺ − u⁻`, where `+` is the side
/// the normal points to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JumpRepr", into = "JumpRepr")]
pub struct JumpInterface {
    pieces: Vec<Surface>,
    jump: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JumpRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polyline: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polygon: Option<Vec<[f64; 3]>>,
    jump: Vec<f64>,
}

impl TryFrom<JumpRepr> for JumpInterface {
    type Error = Error;
    fn try_from(r: JumpRepr) -> Result<Self> {
        match (r.polyline, r.polygon) {
            (Some(p), None) => JumpInterface::polyline(p, r.jump),
            (None, Some(p)) => JumpInterface::polygon(p, r.jump),
            _ => invalid("jump interface needs exactly one of `polyline` or `polygon`"),
        }
    }
}

impl From<JumpInterface> for JumpRepr {
    fn from(j: JumpInterface) -> Self {
        match &j.pieces[0] {
            Surface::Segment(_) => {
                let mut pts: Vec<[f64; 2]> = Vec::new();
                for p in &j.pieces {
                    if let Surface::Segment([a, b]) = p {
                        if pts.is_empty() {
                            pts.push(*a);
                        }
                        pts.push(*b);
                    }
                }
                JumpRepr {
                    polyline: Some(pts),
                    polygon: None,
                    jump: j.jump,
                }
            }
            Surface::Polygon(v) => JumpRepr {
                polyline: None,
                polygon: Some(v.clone()),
                jump: j.jump,
            },
        }
    }
}

impl JumpInterface {
    pub fn polyline(points: Vec<[f64; 2]>, jump: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return invalid("polyline needs at least two points");
        }
        if jump.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: jump.len(),
            });
        }
        let mut pieces = Vec::with_capacity(points.len() - 1);
        for w in points.windows(2) {
            if !(w[0].iter().chain(&w[1]).all(|v| v.is_finite())) {
                return invalid("polyline has non-finite coordinates");
            }
            if dist_sq(&w[0], &w[1]) == 0.0 {
                return invalid("polyline has a zero-length segment");
            }
            pieces.push(Surface::Segment([w[0], w[1]]));
        }
        Self::checked(pieces, jump)
    }

    /// Straight segment from `p` to `q`.
    pub fn segment(p: [f64; 2], q: [f64; 2], jump: Vec<f64>) -> Result<Self> {
        Self::polyline(vec![p, q], jump)
    }

    pub fn polygon(verts: Vec<[f64; 3]>, jump: Vec<f64>) -> Result<Self> {
        if verts.len() < 3 {
            return invalid("polygon needs at least three vertices");
        }
        if jump.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: jump.len(),
            });
        }
        let area = polygon_area(&verts);
        if !(area.is_finite() && area > 0.0) {
            return invalid("polygon is degenerate");
        }
        let n = newell_normal(&verts);
        let nl = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let scale = verts.iter().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
        for v in &verts {
            let off = ((v[0] - verts[0][0]) * n[0] + (v[1] - verts[0][1]) * n[1] + (v[2] - verts[0][2]) * n[2]) / nl;
            if off.abs() > 1e-9 * scale {
                return invalid("polygon is not planar");
            }
        }
        Self::checked(vec![Surface::Polygon(verts)], jump)
    }

    fn checked(pieces: Vec<Surface>, jump: Vec<f64>) -> Result<Self> {
        if !jump.iter().all(|v| v.is_finite()) {
            return invalid("jump vector is not finite");
        }
        Ok(Self { pieces, jump })
    }

    pub fn pieces(&self) -> &[Surface] {
        &self.pieces
    }

    pub fn jump(&self) -> &[f64] {
        &self.jump
    }

    pub fn dim(&self) -> usize {
        self.jump.len()
    }

    pub fn measure(&self) -> f64 {
        self.pieces.iter().map(Surface::measure).sum()
    }

    /// Side of `x`: `true` on the side the normal of the nearest piece points to.
    pub fn is_plus_side(&self, x: &[f64]) -> bool {
        let mut best = f64::INFINITY;
        let mut sd = 0.0_f64;
        for p in &self.pieces {
            let dist = p.distance(x);
            let s = p.signed_distance(x);
            if dist < best - 1e-14 || ((dist - best).abs() <= 1e-14 && s.abs() > sd.abs()) {
                best = dist;
                sd = s;
            }
        }
        sd > 0.0
    }

    /// Amplitude `(u⁺ − u⁻) ⊙ n` of each piece.
    pub fn amplitudes(&self) -> Vec<SymMatrix> {
        self.pieces
            .iter()
            .map(|p| sym_dyad(&self.jump, &p.normal()).expect("dimension checked"))
            .collect()
    }
}

/// Grid-sampled vector field with explicit jump interfaces. `values` holds the
/// `d` components of each node consecutively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldRepr", into = "FieldRepr")]
pub struct DisplacementField {
    grid: Grid,
    values: Vec<f64>,
    jumps: Vec<JumpInterface>,
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    grid: Grid,
    values: Vec<f64>,
    #[serde(default)]
    jumps: Vec<JumpInterface>,
}

impl TryFrom<FieldRepr> for DisplacementField {
    type Error = Error;
    fn try_from(r: FieldRepr) -> Result<Self> {
        DisplacementField::new(r.grid, r.values, r.jumps)
    }
}

impl From<DisplacementField> for FieldRepr {
    fn from(f: DisplacementField) -> Self {
        FieldRepr {
            grid: f.grid,
            values: f.values,
            jumps: f.jumps,
        }
    }
}

impl DisplacementField {
    pub fn new(grid: Grid, values: Vec<f64>, jumps: Vec<JumpInterface>) -> Result<Self> {
        let d = grid.dim();
        if values.len() != grid.node_count() * d {
            return Err(Error::DimensionMismatch {
                expected: grid.node_count() * d,
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return invalid("field values must be finite");
        }
        let eps = 1e-9 * grid.max_spacing();
        for (ji, j) in jumps.iter().enumerate() {
            if j.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: j.dim(),
                });
            }
            for p in j.pieces() {
                let (lo, hi) = p.bounding_box();
                if !grid.contains(&lo, eps) || !grid.contains(&hi, eps) {
                    return invalid(format!("jump interface {ji} leaves the grid box"));
                }
                // no node may sit on an interface: the side would be ambiguous
                let lo_e: Vec<f64> = lo.iter().map(|v| v - eps).collect();
                let hi_e: Vec<f64> = hi.iter().map(|v| v + eps).collect();
                for c in grid.cells_meeting(&lo_e, &hi_e) {
                    for node in grid.cell_corners(c) {
                        let x = grid.node_coord(node);
                        if p.distance(&x) <= eps {
                            return invalid(format!(
                                "grid node {x:?} lies on jump interface {ji}; shift the interface or change n"
                            ));
                        }
                    }
                }
            }
        }
        check_no_overlap(&jumps, eps)?;
        Ok(Self { grid, values, jumps })
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Vec<f64>, jumps: Vec<JumpInterface>) -> Result<Self> {
        let d = grid.dim();
        let mut values = Vec::with_capacity(grid.node_count() * d);
        for i in 0..grid.node_count() {
            let v = f(&grid.node_coord(i));
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            values.extend(v);
        }
        Self::new(grid, values, jumps)
    }

    pub fn zeros(grid: Grid) -> Self {
        let len = grid.node_count() * grid.dim();
        Self {
            grid,
            values: vec![0.0; len],
            jumps: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn jumps(&self) -> &[JumpInterface] {
        &self.jumps
    }

    pub fn value(&self, node: usize) -> &[f64] {
        let d = self.dim();
        &self.values[node * d..(node + 1) * d]
    }

    /// Interfaces with a piece crossing the given cell.
    pub fn cell_crossings(&self, cell: usize) -> Vec<usize> {
        let (lo, hi) = self.grid.cell_bounds(cell);
        self.jumps
            .iter()
            .enumerate()
            .filter(|(_, j)| j.pieces().iter().any(|p| p.crosses_box(&lo, &hi)))
            .map(|(i, _)| i)
            .collect()
    }

    /// Full gradient `∂_k uⁱ` (row-major, `i·d + k`) at the centre of a cell from
    /// the compact corner stencil. Corners on the `+` side of a crossing interface
    /// have the jump removed first when `correct` is set.
    pub fn cell_gradient(&self, cell: usize, correct: bool) -> Vec<f64> {
        let d = self.dim();
        let corners = self.grid.cell_corners(cell);
        let mut vals: Vec<Vec<f64>> = corners.iter().map(|&c| self.value(c).to_vec()).collect();
        if correct {
            for ji in self.cell_crossings(cell) {
                let j = &self.jumps[ji];
                for (ci, &node) in corners.iter().enumerate() {
                    if j.is_plus_side(&self.grid.node_coord(node)) {
                        for (v, jv) in vals[ci].iter_mut().zip(j.jump()) {
                            *v -= jv;
                        }
                    }
                }
            }
        }
        let mut g = vec![0.0; d * d];
        let w = 1.0 / (1usize << (d - 1)) as f64;
        for k in 0..d {
            let h = self.grid.spacing(k);
            for c in 0..corners.len() {
                if c >> k & 1 == 1 {
                    let c0 = c & !(1 << k);
                    for i in 0..d {
                        g[i * d + k] += w * (vals[c][i] - vals[c0][i]) / h;
                    }
                }
            }
        }
        g
    }

    /// Per-cell symmetrized gradient at cell centres.
    pub fn sym_gradient(&self) -> SymGradient {
        let d = self.dim();
        let mut values = Vec::with_capacity(self.grid.cell_count());
        let mut flagged = Vec::with_capacity(self.grid.cell_count());
        for c in 0..self.grid.cell_count() {
            let cut = !self.cell_crossings(c).is_empty();
            let g = self.cell_gradient(c, true);
            values.push(SymMatrix::from_fn(d, |i, j| 0.5 * (g[i * d + j] + g[j * d + i])));
            flagged.push(cut);
        }
        SymGradient { values, flagged }
    }

    /// Nodal gradient with centred differences inside and second-order one-sided
    /// differences on the boundary. Ignores jump interfaces.
    pub fn nodal_gradient(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let per_axis: Vec<Vec<f64>> = (0..d).map(|k| diff_axis(&self.grid, &self.values, d, k)).collect();
        (0..self.grid.node_count())
            .map(|node| {
                let mut g = vec![0.0; d * d];
                for i in 0..d {
                    for k in 0..d {
                        g[i * d + k] = per_axis[k][node * d + i];
                    }
                }
                g
            })
            .collect()
    }

    /// Least-squares rigid fit `u(x) ≈ u₀ + R x` over all nodes.
    pub fn fit_rigid(&self) -> Result<RigidFit> {
        if !self.jumps.is_empty() {
            return invalid("fit_rigid requires a field without jumps");
        }
        let d = self.dim();
        let n = self.grid.node_count();
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|p| (p + 1..d).map(move |q| (p, q))).collect();
        let m = d + pairs.len();
        let mut centre = vec![0.0; d];
        for node in 0..n {
            for (c, x) in centre.iter_mut().zip(self.grid.node_coord(node)) {
                *c += x / n as f64;
            }
        }
        let mut ata = DMatrix::<f64>::zeros(m, m);
        let mut atb = DVector::<f64>::zeros(m);
        let mut row = vec![0.0; m];
        for node in 0..n {
            let x = self.grid.node_coord(node);
            let y: Vec<f64> = x.iter().zip(&centre).map(|(a, b)| a - b).collect();
            let u = self.value(node);
            for i in 0..d {
                row.iter_mut().for_each(|r| *r = 0.0);
                row[i] = 1.0;
                // (E_pq y)_i = δ_ip y_q − δ_iq y_p
                for (s, &(p, q)) in pairs.iter().enumerate() {
                    row[d + s] = if i == p {
                        y[q]
                    } else if i == q {
                        -y[p]
                    } else {
                        0.0
                    };
                }
                for a in 0..m {
                    atb[a] += row[a] * u[i];
                    for b in 0..m {
                        ata[(a, b)] += row[a] * row[b];
                    }
                }
            }
        }
        let sol = ata
            .clone()
            .cholesky()
            .map(|c| c.solve(&atb))
            .ok_or_else(|| Error::InvalidInput("degenerate grid for rigid fit".into()))?;
        let mut r = vec![0.0; d * d];
        for (s, &(p, q)) in pairs.iter().enumerate() {
            r[p * d + q] = sol[d + s];
            r[q * d + p] = -sol[d + s];
        }
        // translate the centred intercept back: u₀ = c₀ − R·centre
        let mut u0: Vec<f64> = (0..d).map(|i| sol[i]).collect();
        for i in 0..d {
            for k in 0..d {
                u0[i] -= r[i * d + k] * centre[k];
            }
        }
        let mut ss = 0.0;
        for node in 0..n {
            let x = self.grid.node_coord(node);
            let u = self.value(node);
            for i in 0..d {
                let model = u0[i] + (0..d).map(|k| r[i * d + k] * x[k]).sum::<f64>();
                ss += (u[i] - model).powi(2);
            }
        }
        Ok(RigidFit {
            u0,
            r,
            residual: (ss / n as f64).sqrt(),
        })
    }
}

fn check_no_overlap(jumps: &[JumpInterface], eps: f64) -> Result<()> {
    let segs: Vec<(usize, usize, [f64; 2], [f64; 2])> = jumps
        .iter()
        .enumerate()
        .flat_map(|(ji, j)| {
            j.pieces().iter().enumerate().filter_map(move |(pi, p)| match p {
                Surface::Segment([a, b]) => Some((ji, pi, *a, *b)),
                Surface::Polygon(_) => None,
            })
        })
        .collect();
    for (s, a) in segs.iter().enumerate() {
        for b in &segs[s + 1..] {
            // consecutive pieces of one polyline share a vertex by construction
            let adjacent = a.0 == b.0 && a.1 + 1 == b.1;
            if !adjacent && segments_overlap(a.2, a.3, b.2, b.3, eps) {
                return invalid(format!("jump interfaces {} and {} overlap", a.0, b.0));
            }
        }
    }
    Ok(())
}

/// Derivative along axis `k` of a nodal field with `ncomp` components per
/// node; centred inside, second-order one-sided at the ends.
pub fn diff_axis(grid: &Grid, data: &[f64], ncomp: usize, k: usize) -> Vec<f64> {
    let h = grid.spacing(k);
    let nk = grid.n()[k];
    let stride: usize = grid.n()[k + 1..].iter().product::<usize>() * ncomp;
    let mut out = vec![0.0; data.len()];
    for node in 0..grid.node_count() {
        let i = grid.node_multi(node)[k];
        for c in 0..ncomp {
            let at = |off: isize| data[((node * ncomp + c) as isize + off * stride as isize) as usize];
            out[node * ncomp + c] = if i == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else if i + 1 == nk {
                (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h)
            } else {
                (at(1) - at(-1)) / (2.0 * h)
            };
        }
    }
    out
}

/// Per-cell symmetrized gradient with flags for cells cut by a jump.
#[derive(Debug, Clone)]
pub struct SymGradient {
    pub values: Vec<SymMatrix>,
    pub flagged: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidFit {
    pub u0: Vec<f64>,
    /// Skew-symmetric, row-major.
    pub r: Vec<f64>,
    pub residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize) -> Grid {
        Grid::cube(2, 0.0, 1.0, n).unwrap()
    }

    #[test]
    fn rigid_field_has_zero_sym_gradient() {
        let u = DisplacementField::from_fn(unit_grid(9), |x| vec![1.0 - 0.5 * x[1], 2.0 + 0.5 * x[0]], vec![]).unwrap();
        for m in u.sym_gradient().values {
            assert!(m.norm() < 1e-13);
        }
    }

    #[test]
    fn linear_symmetric_field_gives_constant() {
        let a = SymMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, -2.0]], 0.0).unwrap();
        let u = DisplacementField::from_fn(unit_grid(7), |x| a.mul_vec(x), vec![]).unwrap();
        for m in u.sym_gradient().values {
            assert!(m.max_abs_diff(&a) < 1e-12);
        }
    }

    #[test]
    fn fit_rigid_exact() {
        let u = DisplacementField::from_fn(unit_grid(6), |x| vec![1.0 - x[1], 2.0 + x[0]], vec![]).unwrap();
        let fit = u.fit_rigid().unwrap();
        assert!((fit.u0[0] - 1.0).abs() < 1e-12 && (fit.u0[1] - 2.0).abs() < 1e-12);
        assert!((fit.r[1] + 1.0).abs() < 1e-12 && (fit.r[2] - 1.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_rigid_of_symmetric_map() {
        // oracle: for A = diag(1,−1) on a grid symmetric about 0 the best skew
        // fit vanishes, so the residual is RMS |Ax|
        let g = Grid::cube(2, -1.0, 1.0, 5).unwrap();
        let u = DisplacementField::from_fn(g.clone(), |x| vec![x[0], -x[1]], vec![]).unwrap();
        let fit = u.fit_rigid().unwrap();
        let rms = ((0..g.node_count())
            .map(|i| {
                let x = g.node_coord(i);
                x[0] * x[0] + x[1] * x[1]
            })
            .sum::<f64>()
            / g.node_count() as f64)
            .sqrt();
        assert!(fit.r.iter().all(|v| v.abs() < 1e-12));
        assert!(fit.u0.iter().all(|v| v.abs() < 1e-12));
        assert!((fit.residual - rms).abs() < 1e-12);
    }

    #[test]
    fn zero_field_fit() {
        let fit = DisplacementField::zeros(unit_grid(4)).fit_rigid().unwrap();
        assert!(fit.u0.iter().chain(&fit.r).all(|v| *v == 0.0) && fit.residual == 0.0);
    }

    #[test]
    fn node_on_interface_rejected() {
        let g = Grid::cube(2, -1.0, 1.0, 5).unwrap();
        let j = JumpInterface::segment([0.0, -1.0], [0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(DisplacementField::from_fn(g, |_| vec![0.0, 0.0], vec![j]).is_err());
    }

    #[test]
    fn overlapping_interfaces_rejected() {
        let g = Grid::cube(2, -1.0, 1.0, 6).unwrap();
        let a = JumpInterface::segment([0.0, -1.0], [0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let b = JumpInterface::segment([0.0, -0.5], [0.0, 0.5], vec![1.0, 0.0]).unwrap();
        assert!(DisplacementField::from_fn(g, |_| vec![0.0, 0.0], vec![a, b]).is_err());
    }

    #[test]
    fn jump_side_and_normal() {
        // upward segment: normal (1, 0), + side is x₁ > 0
        let j = JumpInterface::segment([0.0, -1.0], [0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(j.pieces()[0].normal(), vec![1.0, 0.0]);
        assert!(j.is_plus_side(&[0.2, 0.0]));
        assert!(!j.is_plus_side(&[-0.2, 0.3]));
        let amp = &j.amplitudes()[0];
        assert!((amp.get(0, 1) - 0.5).abs() < 1e-15 && amp.get(0, 0) == 0.0 && amp.get(1, 1) == 0.0);
    }

    #[test]
    fn cut_cells_recover_smooth_part() {
        let g = Grid::cube(2, -1.0, 1.0, 8).unwrap();
        let j = JumpInterface::segment([0.0, -1.0], [0.0, 1.0], vec![0.5, 1.0]).unwrap();
        let u = DisplacementField::from_fn(
            g,
            |x| {
                let s = if x[0] > 0.0 { 1.0 } else { 0.0 };
                vec![x[0] + 0.5 * s, 2.0 * x[1] + s]
            },
            vec![j],
        )
        .unwrap();
        let sg = u.sym_gradient();
        assert!(sg.flagged.iter().any(|f| *f));
        for m in &sg.values {
            assert!((m.get(0, 0) - 1.0).abs() < 1e-12 && (m.get(1, 1) - 2.0).abs() < 1e-12);
            assert!(m.get(0, 1).abs() < 1e-12);
        }
    }

    #[test]
    fn field_json_round_trip() {
        let g = Grid::cube(2, -1.0, 1.0, 4).unwrap();
        let j = JumpInterface::polyline(vec![[0.0, -1.0], [0.1, 0.0], [0.0, 1.0]], vec![0.0, 1.0]).unwrap();
        let u = DisplacementField::from_fn(g, |x| vec![x[0], x[1]], vec![j]).unwrap();
        let s = serde_json::to_string(&u).unwrap();
        assert!(s.contains("\"polyline\""));
        let back: DisplacementField = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn diff_axis_second_order_at_boundary() {
        let g = unit_grid(5);
        let data: Vec<f64> = (0..g.node_count()).map(|i| g.node_coord(i)[0].powi(2)).collect();
        let d = diff_axis(&g, &data, 1, 0);
        for i in 0..g.node_count() {
            assert!((d[i] - 2.0 * g.node_coord(i)[0]).abs() < 1e-12);
        }
    }
}
