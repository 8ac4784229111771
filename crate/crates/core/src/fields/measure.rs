use serde::{Deserialize, Serialize};

use super::field::{DisplacementField, Surface};
use super::geometry::Region;
use super::grid::Grid;
use crate::error::{invalid, Error, Result};
use crate::symtensor::SymMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceAtom {
    pub surface: Surface,
    /// Matrix per unit `(d−1)`-measure.
    pub amplitude: SymMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAtom {
    pub location: Vec<f64>,
    pub matrix: SymMatrix,
}

/// Matrix-valued measure `density·Lᵈ + Σ amplitude·H^{d−1}⌞S + Σ matrix·δ_x`.
/// The density is piecewise constant on grid cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct SymMeasure {
    grid: Grid,
    density: Vec<SymMatrix>,
    surface_atoms: Vec<SurfaceAtom>,
    point_atoms: Vec<PointAtom>,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    grid: Grid,
    density: Vec<SymMatrix>,
    #[serde(default)]
    surface_atoms: Vec<SurfaceAtom>,
    #[serde(default)]
    point_atoms: Vec<PointAtom>,
}

impl TryFrom<MeasureRepr> for SymMeasure {
    type Error = Error;
    fn try_from(r: MeasureRepr) -> Result<Self> {
        SymMeasure::new(r.grid, r.density, r.surface_atoms, r.point_atoms)
    }
}

impl From<SymMeasure> for MeasureRepr {
    fn from(m: SymMeasure) -> Self {
        MeasureRepr {
            grid: m.grid,
            density: m.density,
            surface_atoms: m.surface_atoms,
            point_atoms: m.point_atoms,
        }
    }
}

impl SymMeasure {
    pub fn new(
        grid: Grid,
        density: Vec<SymMatrix>,
        surface_atoms: Vec<SurfaceAtom>,
        point_atoms: Vec<PointAtom>,
    ) -> Result<Self> {
        let d = grid.dim();
        if density.len() != grid.cell_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.cell_count(),
                got: density.len(),
            });
        }
        let bad_dim = density
            .iter()
            .map(SymMatrix::dim)
            .chain(surface_atoms.iter().map(|a| a.amplitude.dim()))
            .chain(surface_atoms.iter().map(|a| a.surface.dim()))
            .chain(point_atoms.iter().map(|a| a.matrix.dim()))
            .chain(point_atoms.iter().map(|a| a.location.len()))
            .find(|&k| k != d);
        if let Some(got) = bad_dim {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
        let finite = density.iter().all(SymMatrix::is_finite)
            && surface_atoms.iter().all(|a| a.amplitude.is_finite() && a.surface.measure().is_finite())
            && point_atoms
                .iter()
                .all(|a| a.matrix.is_finite() && a.location.iter().all(|v| v.is_finite()));
        if !finite {
            return invalid("measure has non-finite entries");
        }
        Ok(Self {
            grid,
            density,
            surface_atoms,
            point_atoms,
        })
    }

    pub fn zero(grid: Grid) -> Self {
        let d = grid.dim();
        let density = vec![SymMatrix::zeros(d); grid.cell_count()];
        Self {
            grid,
            density,
            surface_atoms: Vec::new(),
            point_atoms: Vec::new(),
        }
    }

    /// `A·Lᵈ` restricted to the grid box.
    pub fn lebesgue(grid: Grid, a: &SymMatrix) -> Result<Self> {
        if a.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: a.dim(),
            });
        }
        let density = vec![a.clone(); grid.cell_count()];
        Self::new(grid, density, Vec::new(), Vec::new())
    }

    pub fn with_surface_atom(mut self, atom: SurfaceAtom) -> Result<Self> {
        self.surface_atoms.push(atom);
        Self::new(self.grid, self.density, self.surface_atoms, self.point_atoms)
    }

    pub fn with_point_atom(mut self, atom: PointAtom) -> Result<Self> {
        self.point_atoms.push(atom);
        Self::new(self.grid, self.density, self.surface_atoms, self.point_atoms)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn density(&self) -> &[SymMatrix] {
        &self.density
    }

    pub fn surface_atoms(&self) -> &[SurfaceAtom] {
        &self.surface_atoms
    }

    pub fn point_atoms(&self) -> &[PointAtom] {
        &self.point_atoms
    }

    /// `∫|density| dx`.
    pub fn absolutely_continuous_mass(&self) -> f64 {
        self.density.iter().map(SymMatrix::norm).sum::<f64>() * self.grid.cell_volume()
    }

    /// `|μˢ|` of the whole space.
    pub fn singular_mass(&self) -> f64 {
        self.surface_atoms
            .iter()
            .map(|a| a.amplitude.norm() * a.surface.measure())
            .sum::<f64>()
            + self.point_atoms.iter().map(|a| a.matrix.norm()).sum::<f64>()
    }

    pub fn total_variation(&self) -> f64 {
        self.absolutely_continuous_mass() + self.singular_mass()
    }

    fn density_cells(&self, region: &Region) -> Vec<usize> {
        let d = self.dim();
        let (mut lo, mut hi) = (self.grid.lo(), self.grid.hi());
        if let Some((bl, bh)) = &region.bbox {
            for k in 0..d {
                lo[k] = lo[k].max(bl[k]);
                hi[k] = hi[k].min(bh[k]);
            }
        }
        if let Some((c, r)) = &region.ball {
            for k in 0..d {
                lo[k] = lo[k].max(c[k] - r);
                hi[k] = hi[k].min(c[k] + r);
            }
        }
        if (0..d).any(|k| hi[k] < lo[k]) {
            return Vec::new();
        }
        self.grid.cells_meeting(&lo, &hi)
    }

    /// `|μ|(region)`.
    pub fn variation_in(&self, region: &Region) -> f64 {
        let mut total = 0.0;
        for c in self.density_cells(region) {
            let dn = self.density[c].norm();
            if dn > 0.0 {
                let (lo, hi) = self.grid.cell_bounds(c);
                total += dn * region.rect_measure(&lo, &hi);
            }
        }
        for a in &self.surface_atoms {
            total += a.amplitude.norm() * a.surface.measure_in(region);
        }
        for a in &self.point_atoms {
            if region.contains(&a.location) {
                total += a.matrix.norm();
            }
        }
        total
    }

    /// `μ(region)`.
    pub fn value_in(&self, region: &Region) -> SymMatrix {
        let mut total = SymMatrix::zeros(self.dim());
        for c in self.density_cells(region) {
            let (lo, hi) = self.grid.cell_bounds(c);
            let w = region.rect_measure(&lo, &hi);
            if w > 0.0 {
                total += &self.density[c].scaled(w);
            }
        }
        for a in &self.surface_atoms {
            let w = a.surface.measure_in(region);
            if w > 0.0 {
                total += &a.amplitude.scaled(w);
            }
        }
        for a in &self.point_atoms {
            if region.contains(&a.location) {
                total += &a.matrix;
            }
        }
        total
    }

    /// `|μ|(B(x₀, r))` with the open ball.
    pub fn mass_in_ball(&self, x0: &[f64], r: f64) -> f64 {
        self.variation_in(&Region::ball(x0, r))
    }

    /// `μ(B(x₀, r))`.
    pub fn value_in_ball(&self, x0: &[f64], r: f64) -> SymMatrix {
        self.value_in(&Region::ball(x0, r))
    }

    /// Polar `dμ/d|μ|` of the density on a cell, or `None` where it vanishes.
    pub fn density_polar(&self, cell: usize) -> Option<SymMatrix> {
        let m = &self.density[cell];
        let n = m.norm();
        (n > 0.0).then(|| m.scaled(1.0 / n))
    }

    /// `c·T^{(x₀,r)}_* μ` with `T(x) = (x − x₀)/r`. The grid box is mapped along,
    /// so nothing is clipped.
    pub fn blow_up(&self, x0: &[f64], r: f64, c: f64) -> Result<SymMeasure> {
        if !(r > 0.0 && r.is_finite() && c > 0.0 && c.is_finite()) {
            return invalid(format!("blow_up needs r > 0 and c > 0, got r = {r}, c = {c}"));
        }
        if x0.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x0.len(),
            });
        }
        let d = self.dim() as i32;
        let grid = self.grid.transformed(x0, r)?;
        let dens_scale = c * r.powi(d);
        let surf_scale = c * r.powi(d - 1);
        let density = self.density.iter().map(|m| m.scaled(dens_scale)).collect();
        let surface_atoms = self
            .surface_atoms
            .iter()
            .map(|a| SurfaceAtom {
                surface: a.surface.transformed(x0, r),
                amplitude: a.amplitude.scaled(surf_scale),
            })
            .collect();
        let point_atoms = self
            .point_atoms
            .iter()
            .map(|a| PointAtom {
                location: a.location.iter().zip(x0).map(|(x, y)| (x - y) / r).collect(),
                matrix: a.matrix.scaled(c),
            })
            .collect();
        SymMeasure::new(grid, density, surface_atoms, point_atoms)
    }
}

/// `Eu` of a field: jump-corrected cell density plus one surface atom per
/// interface piece with amplitude `(u⁺ − u⁻) ⊙ n`.
pub fn assemble_symmetrized_measure(u: &DisplacementField) -> Result<SymMeasure> {
    let sg = u.sym_gradient();
    let mut atoms = Vec::new();
    for j in u.jumps() {
        for (piece, amp) in j.pieces().iter().zip(j.amplitudes()) {
            atoms.push(SurfaceAtom {
                surface: piece.clone(),
                amplitude: amp,
            });
        }
    }
    SymMeasure::new(u.grid().clone(), sg.values, atoms, Vec::new())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingRow {
    pub r: f64,
    pub mass_r: f64,
    pub mass_tr: f64,
    /// `+∞` when `mass_r = 0`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub x0: Vec<f64>,
    pub t: f64,
    pub rows: Vec<DoublingRow>,
    pub sup: f64,
    pub argmax_r: f64,
}

/// Ratios `|μ|(B(x₀, t r)) / |μ|(B(x₀, r))` along the given radii.
pub fn doubling_scan(mu: &SymMeasure, x0: &[f64], t: f64, radii: &[f64]) -> Result<DoublingReport> {
    if !(t > 1.0 && t.is_finite()) {
        return invalid(format!("doubling scan needs t > 1, got {t}"));
    }
    if x0.len() != mu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: x0.len(),
        });
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return invalid("radii must be positive and finite");
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("radii must be strictly decreasing");
    }
    let mut rows = Vec::with_capacity(radii.len());
    let (mut sup, mut argmax_r) = (f64::NEG_INFINITY, radii[0]);
    for &r in radii {
        let mass_r = mu.mass_in_ball(x0, r);
        let mass_tr = mu.mass_in_ball(x0, t * r);
        let ratio = if mass_r > 0.0 { mass_tr / mass_r } else { f64::INFINITY };
        if ratio > sup {
            sup = ratio;
            argmax_r = r;
        }
        rows.push(DoublingRow {
            r,
            mass_r,
            mass_tr,
            ratio,
        });
    }
    Ok(DoublingReport {
        x0: x0.to_vec(),
        t,
        rows,
        sup,
        argmax_r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceCheck {
    pub lhs: f64,
    pub rhs: f64,
}

/// Compare `|ξᵀ(Eu)ξ|(box)` with the integral over grid slices of the total
/// variation of `t ↦ ξ·u(y + tξ)`. `ξ` must be an axis or a diagonal.
pub fn directional_slice_check(u: &DisplacementField, xi: &[f64]) -> Result<SliceCheck> {
    let grid = u.grid();
    if grid.dim() != 2 || xi.len() != 2 {
        return invalid("slice check is implemented for d = 2");
    }
    let nx = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    if (nx - 1.0).abs() > 1e-9 {
        return invalid("slice direction must be a unit vector");
    }
    let eps = 1e-12;
    let axis = if xi[1].abs() < eps {
        Some(0)
    } else if xi[0].abs() < eps {
        Some(1)
    } else {
        None
    };
    let diagonal = (xi[0].abs() - xi[1].abs()).abs() < 1e-9;
    if axis.is_none() && !diagonal {
        return invalid("slice direction must be axis-aligned or diagonal");
    }
    if axis.is_none() && (grid.spacing(0) - grid.spacing(1)).abs() > 1e-12 * grid.spacing(0) {
        return invalid("diagonal slices need equal spacing on both axes");
    }

    let mu = assemble_symmetrized_measure(u)?;
    let contract = |m: &SymMatrix| m.quad_form(xi).abs();
    let lhs = mu.density().iter().map(contract).sum::<f64>() * grid.cell_volume()
        + mu
            .surface_atoms()
            .iter()
            .map(|a| contract(&a.amplitude) * a.surface.measure())
            .sum::<f64>();

    let n = grid.n();
    let proj = |i: usize, j: usize| {
        let v = u.value(grid.node_index(&[i, j]));
        v[0] * xi[0] + v[1] * xi[1]
    };
    let rhs = match axis {
        Some(k) => {
            let other = 1 - k;
            let h_other = grid.spacing(other);
            let mut total = 0.0;
            for m in 0..n[other] {
                let w = if m == 0 || m + 1 == n[other] { 0.5 * h_other } else { h_other };
                let mut tv = 0.0;
                for s in 0..n[k] - 1 {
                    let (a, b) = if k == 0 { (proj(s, m), proj(s + 1, m)) } else { (proj(m, s), proj(m, s + 1)) };
                    tv += (b - a).abs();
                }
                total += w * tv;
            }
            total
        }
        None => {
            let h = grid.spacing(0);
            let w = h / std::f64::consts::SQRT_2;
            let same_sign = xi[0] * xi[1] > 0.0;
            let (n0, n1) = (n[0] as isize, n[1] as isize);
            let mut total = 0.0;
            // lines i − j = c (for ξ ∝ (1,1)) or i + j = c (for ξ ∝ (1,−1))
            let (cmin, cmax) = if same_sign { (-(n1 - 1), n0 - 1) } else { (0, n0 + n1 - 2) };
            for c in cmin..=cmax {
                let mut pts = Vec::new();
                for i in 0..n0 {
                    let j = if same_sign { i - c } else { c - i };
                    if (0..n1).contains(&j) {
                        pts.push((i as usize, j as usize));
                    }
                }
                let tv: f64 = pts.windows(2).map(|p| (proj(p[1].0, p[1].1) - proj(p[0].0, p[0].1)).abs()).sum();
                total += w * tv;
            }
            total
        }
    };
    Ok(SliceCheck { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::field::JumpInterface;
    use crate::symtensor::sym_dyad;

    fn staircase(n: usize) -> DisplacementField {
        let g = Grid::cube(2, -1.0, 1.0, n).unwrap();
        let j1 = JumpInterface::segment([-1.0, 0.0], [1.0, 0.0], vec![-1.0, 0.0]).unwrap();
        let j2 = JumpInterface::segment([0.0, -1.0], [0.0, 1.0], vec![0.0, 1.0]).unwrap();
        DisplacementField::from_fn(
            g,
            |x| vec![(x[1] > 0.0) as u8 as f64, (x[0] > 0.0) as u8 as f64],
            vec![j1, j2],
        )
        .unwrap()
    }

    #[test]
    fn staircase_measure() {
        // segment (−1,0)→(1,0) has normal (0,−1): + side is below, u⁺ − u⁻ = (−1, 0)
        let mu = assemble_symmetrized_measure(&staircase(10)).unwrap();
        let e12 = sym_dyad(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(mu.absolutely_continuous_mass() < 1e-12);
        assert_eq!(mu.surface_atoms().len(), 2);
        for a in mu.surface_atoms() {
            assert!(a.amplitude.max_abs_diff(&e12) < 1e-15);
        }
        assert!((mu.total_variation() - 2.0 * 2.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_jump_amplitude() {
        let g = Grid::cube(2, -1.0, 1.0, 6).unwrap();
        let j = JumpInterface::segment([0.0, -1.0], [0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let u = DisplacementField::from_fn(g, |x| vec![0.0, (x[0] > 0.0) as u8 as f64], vec![j]).unwrap();
        let mu = assemble_symmetrized_measure(&u).unwrap();
        let expect = sym_dyad(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!(mu.surface_atoms()[0].amplitude.max_abs_diff(&expect) < 1e-15);
        assert!(mu.absolutely_continuous_mass() < 1e-12);
    }

    #[test]
    fn doubling_trivial_cases() {
        let g = Grid::cube(2, -1.0, 1.0, 41).unwrap();
        let a = SymMatrix::identity(2).scaled(0.5);
        let leb = SymMeasure::lebesgue(g.clone(), &a).unwrap();
        let rep = doubling_scan(&leb, &[0.0, 0.0], 3.0, &[0.2, 0.1, 0.05]).unwrap();
        for row in &rep.rows {
            assert!((row.ratio - 9.0).abs() < 1e-12, "{row:?}");
        }
        let dirac = SymMeasure::zero(g.clone())
            .with_point_atom(PointAtom {
                location: vec![0.1, 0.0],
                matrix: a.clone(),
            })
            .unwrap();
        let rep = doubling_scan(&dirac, &[0.1, 0.0], 3.0, &[0.2, 0.1]).unwrap();
        assert!(rep.rows.iter().all(|r| r.ratio == 1.0));
        let rep = doubling_scan(&dirac, &[-0.5, 0.0], 3.0, &[0.1]).unwrap();
        assert!(rep.rows[0].ratio.is_infinite());
    }

    #[test]
    fn blow_up_lebesgue_invariant() {
        let g = Grid::cube(2, -1.0, 1.0, 9).unwrap();
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 0.0]], 0.0).unwrap();
        let mu = SymMeasure::lebesgue(g, &a).unwrap();
        let r = 0.25_f64;
        let b = mu.blow_up(&[0.3, -0.2], r, r.powi(-2)).unwrap();
        for m in b.density() {
            assert!(m.max_abs_diff(&a) < 1e-13);
        }
    }

    #[test]
    fn blow_up_point_atom() {
        let g = Grid::cube(2, -1.0, 1.0, 5).unwrap();
        let a = SymMatrix::identity(2);
        let mu = SymMeasure::zero(g)
            .with_point_atom(PointAtom {
                location: vec![0.5, 0.5],
                matrix: a.clone(),
            })
            .unwrap();
        let b = mu.blow_up(&[0.5, 0.5], 0.1, 1.0).unwrap();
        assert_eq!(b.point_atoms()[0].location, vec![0.0, 0.0]);
        assert_eq!(b.point_atoms()[0].matrix, a);
    }

    #[test]
    fn slice_staircase_e1() {
        let u = staircase(10);
        let s = directional_slice_check(&u, &[1.0, 0.0]).unwrap();
        assert!(s.lhs.abs() < 1e-12 && s.rhs.abs() < 1e-12);
    }

    #[test]
    fn slice_rejects_odd_direction() {
        let u = staircase(10);
        assert!(directional_slice_check(&u, &[0.6, 0.8]).is_err());
    }

    #[test]
    fn measure_json_round_trip() {
        let mu = assemble_symmetrized_measure(&staircase(6)).unwrap();
        let s = serde_json::to_string(&mu).unwrap();
        let back: SymMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, mu);
    }
}
