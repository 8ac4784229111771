//! The linear-growth functional with bulk, singular and boundary parts, the
//! area functional, minimization and the semicontinuity experiments.

pub mod experiments;
pub mod minimize;
pub mod mollify;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{assemble_symmetrized_measure, DisplacementField, Grid, Surface, SymMeasure};
use crate::integrands::recession::recession_strong_checked;
use crate::integrands::{Integrand, Ladder};
use crate::symtensor::{sym_dyad, SymMatrix};

pub use experiments::{lsc_experiment, strict_continuity_experiment, LscReport, SequenceKind, SequenceSpec, StrictReport};
pub use minimize::{minimize_functional, MinimizeOptions, MinimizeResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBreakdown {
    pub bulk: f64,
    pub singular: f64,
    pub boundary: f64,
    pub total: f64,
    pub boundary_included: bool,
}

impl FunctionalBreakdown {
    fn new(bulk: f64, singular: f64, boundary: Option<f64>) -> Self {
        let b = boundary.unwrap_or(0.0);
        Self {
            bulk,
            singular,
            boundary: b,
            total: bulk + singular + b,
            boundary_included: boundary.is_some(),
        }
    }
}

/// Strong recession `f^∞(x, ·)` with a cache for x-independent integrands.
pub struct RecessionCache<'a> {
    f: &'a Integrand,
    ladder: Ladder,
    memo: HashMap<Vec<u64>, f64>,
}

impl<'a> RecessionCache<'a> {
    pub fn new(f: &'a Integrand) -> Self {
        Self {
            f,
            ladder: Ladder::default(),
            memo: HashMap::new(),
        }
    }

    pub fn value(&mut self, x: &[f64], a: &SymMatrix) -> Result<f64> {
        if self.f.x_dependent() {
            return recession_strong_checked(self.f, x, a, &self.ladder);
        }
        let key: Vec<u64> = a.upper().iter().map(|v| v.to_bits()).collect();
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        let v = recession_strong_checked(self.f, x, a, &self.ladder)?;
        self.memo.insert(key, v);
        Ok(v)
    }

    /// `f^∞(x, P/|P|)·|P|`, zero for `P = 0`.
    pub fn weighted(&mut self, x: &[f64], p: &SymMatrix) -> Result<f64> {
        let n = p.norm();
        if n == 0.0 {
            return Ok(0.0);
        }
        Ok(self.value(x, &p.scaled(1.0 / n))? * n)
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub(crate) const GAUSS8: [(f64, f64); 8] = [
    (0.019_855_071_751_231_856, 0.050_614_268_145_188_13),
    (0.101_666_761_293_186_6, 0.111_190_517_226_687_24),
    (0.237_233_795_041_835_5, 0.156_853_322_938_943_64),
    (0.408_282_678_752_175_1, 0.181_341_891_689_180_99),
    (0.591_717_321_247_824_9, 0.181_341_891_689_180_99),
    (0.762_766_204_958_164_5, 0.156_853_322_938_943_64),
    (0.898_333_238_706_813_4, 0.111_190_517_226_687_24),
    (0.980_144_928_248_768_1, 0.050_614_268_145_188_13),
];

/// `∫_S f^∞(x, amplitude/|amplitude|)·|amplitude| dH^{d−1}` over a surface atom.
pub fn surface_term(cache: &mut RecessionCache<'_>, surface: &Surface, amp: &SymMatrix) -> Result<f64> {
    let n = amp.norm();
    if n == 0.0 {
        return Ok(0.0);
    }
    let dir = amp.scaled(1.0 / n);
    if !cache.f.x_dependent() {
        return Ok(cache.value(&surface.anchor(), &dir)? * n * surface.measure());
    }
    match surface {
        Surface::Segment([p, q]) => {
            let len = surface.measure();
            let mut s = 0.0;
            for (t, w) in GAUSS8 {
                let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                s += w * cache.value(&x, &dir)?;
            }
            Ok(s * n * len)
        }
        Surface::Polygon(v) => {
            // fan triangles with the edge-midpoint rule
            let mut s = 0.0;
            for k in 1..v.len() - 1 {
                let tri = [v[0], v[k], v[k + 1]];
                let area = Surface::Polygon(tri.to_vec()).measure();
                for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                    let m: Vec<f64> = (0..3).map(|c| 0.5 * (tri[i][c] + tri[j][c])).collect();
                    s += area / 3.0 * cache.value(&m, &dir)?;
                }
            }
            Ok(s * n)
        }
    }
}

/// Bulk and singular parts of `∫ f(x, dμ/dL) dx + ∫ f^∞(x, dμˢ/d|μˢ|) d|μˢ|`.
pub fn evaluate_measure(f: &Integrand, mu: &SymMeasure) -> Result<(f64, f64)> {
    check_dim(f, mu.dim())?;
    let grid = mu.grid();
    let vol = grid.cell_volume();
    let mut bulk = 0.0;
    for (c, m) in mu.density().iter().enumerate() {
        let v = f.eval(&grid.cell_center(c), m);
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("integrand is not finite at cell {c}")));
        }
        bulk += v * vol;
    }
    let mut cache = RecessionCache::new(f);
    let mut singular = 0.0;
    for a in mu.surface_atoms() {
        singular += surface_term(&mut cache, &a.surface, &a.amplitude)?;
    }
    for a in mu.point_atoms() {
        singular += cache.weighted(&a.location, &a.matrix)?;
    }
    Ok((bulk, singular))
}

fn check_dim(f: &Integrand, d: usize) -> Result<()> {
    if f.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: f.dim() });
    }
    Ok(())
}

/// Boundary nodes of the box with their inner normals and trapezoid weights.
/// A node on an edge or corner appears once per face it lies on.
pub fn boundary_quadrature(grid: &Grid) -> Vec<(usize, Vec<f64>, f64)> {
    let d = grid.dim();
    let mut out = Vec::new();
    for node in 0..grid.node_count() {
        let m = grid.node_multi(node);
        for k in 0..d {
            let side = if m[k] == 0 {
                1.0
            } else if m[k] + 1 == grid.n()[k] {
                -1.0
            } else {
                continue;
            };
            let mut w = 1.0;
            for j in (0..d).filter(|&j| j != k) {
                let end = m[j] == 0 || m[j] + 1 == grid.n()[j];
                w *= grid.spacing(j) * if end { 0.5 } else { 1.0 };
            }
            let mut n = vec![0.0; d];
            n[k] = side;
            out.push((node, n, w));
        }
    }
    out
}

/// `∫_{∂Ω} f^∞(x, (u − g)|_{∂Ω} ⊙ n_Ω) dH^{d−1}` with the inner normal,
/// by the trapezoid rule over boundary nodes. `g` is nodal Dirichlet data.
pub fn boundary_term(f: &Integrand, u: &DisplacementField, dirichlet: Option<&[f64]>) -> Result<f64> {
    let mut cache = RecessionCache::new(f);
    boundary_term_cached(&mut cache, u.grid(), u.values(), dirichlet)
}

pub(crate) fn boundary_term_cached(
    cache: &mut RecessionCache<'_>,
    grid: &Grid,
    values: &[f64],
    dirichlet: Option<&[f64]>,
) -> Result<f64> {
    let d = grid.dim();
    let mut s = 0.0;
    for (node, n, w) in boundary_quadrature(grid) {
        s += w * boundary_density(cache, grid, values, dirichlet, node, &n)?;
    }
    let _ = d;
    Ok(s)
}

pub(crate) fn boundary_density(
    cache: &mut RecessionCache<'_>,
    grid: &Grid,
    values: &[f64],
    dirichlet: Option<&[f64]>,
    node: usize,
    n: &[f64],
) -> Result<f64> {
    let d = grid.dim();
    let mut tr: Vec<f64> = values[node * d..(node + 1) * d].to_vec();
    if let Some(g) = dirichlet {
        for (t, gv) in tr.iter_mut().zip(&g[node * d..(node + 1) * d]) {
            *t -= gv;
        }
    }
    let m = sym_dyad(&tr, n)?;
    cache.weighted(&grid.node_coord(node), &m)
}

/// `F(u)` split into bulk, singular and (optionally) boundary parts.
pub fn evaluate_functional(f: &Integrand, u: &DisplacementField, include_boundary: bool) -> Result<FunctionalBreakdown> {
    evaluate_functional_dirichlet(f, u, include_boundary, None)
}

/// As [`evaluate_functional`], with the boundary trace replaced by `u − g`.
pub fn evaluate_functional_dirichlet(
    f: &Integrand,
    u: &DisplacementField,
    include_boundary: bool,
    dirichlet: Option<&[f64]>,
) -> Result<FunctionalBreakdown> {
    check_dim(f, u.dim())?;
    if let Some(g) = dirichlet {
        if g.len() != u.values().len() {
            return Err(Error::DimensionMismatch {
                expected: u.values().len(),
                got: g.len(),
            });
        }
    }
    let mu = assemble_symmetrized_measure(u)?;
    let (bulk, singular) = evaluate_measure(f, &mu)?;
    let boundary = if include_boundary {
        Some(boundary_term(f, u, dirichlet)?)
    } else {
        None
    };
    Ok(FunctionalBreakdown::new(bulk, singular, boundary))
}

/// `⟨μ⟩ = ∫ √(1 + |dμ/dL|²) dx + |μˢ|`.
pub fn area_functional(mu: &SymMeasure) -> f64 {
    let vol = mu.grid().cell_volume();
    mu.density().iter().map(|m| (1.0 + m.norm_sq()).sqrt()).sum::<f64>() * vol + mu.singular_mass()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::JumpInterface;

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
    fn staircase_norm_value() {
        let b = evaluate_functional(&Integrand::norm(2), &staircase(12), false).unwrap();
        assert!(b.bulk.abs() < 1e-12);
        assert!((b.singular - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(b.total, b.bulk + b.singular);
    }

    #[test]
    fn staircase_area() {
        let mu = assemble_symmetrized_measure(&staircase(12)).unwrap();
        assert!((area_functional(&mu) - (4.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn area_examples() {
        let g = Grid::cube(2, 0.0, 1.0, 5).unwrap();
        assert!((area_functional(&SymMeasure::zero(g.clone())) - 1.0).abs() < 1e-15);
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, -1.0]], 0.0).unwrap();
        let mu = SymMeasure::lebesgue(g, &a).unwrap();
        assert!((area_functional(&mu) - (1.0 + a.norm_sq()).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zero_field_with_boundary() {
        let g = Grid::cube(2, 0.0, 1.0, 6).unwrap();
        let b = evaluate_functional(&Integrand::norm(2), &DisplacementField::zeros(g), true).unwrap();
        assert_eq!((b.bulk, b.singular, b.boundary, b.total), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn affine_area_bulk() {
        let g = Grid::cube(2, 0.0, 2.0, 9).unwrap();
        let a = SymMatrix::from_rows(&[vec![0.5, -0.3], vec![-0.3, 0.2]], 0.0).unwrap();
        let u = DisplacementField::from_fn(g, |x| a.mul_vec(x), vec![]).unwrap();
        let b = evaluate_functional(&Integrand::area(2), &u, false).unwrap();
        assert!((b.bulk - 4.0 * (1.0 + a.norm_sq()).sqrt()).abs() < 1e-12);
        assert_eq!(b.singular, 0.0);
    }

    #[test]
    fn boundary_constant_field() {
        // u ≡ e₁ on the unit square: |e₁⊙e₁| on the two vertical sides,
        // |e₁⊙e₂| on the two horizontal ones
        let g = Grid::cube(2, 0.0, 1.0, 7).unwrap();
        let u = DisplacementField::from_fn(g, |_| vec![1.0, 0.0], vec![]).unwrap();
        let b = boundary_term(&Integrand::norm(2), &u, None).unwrap();
        assert!((b - (2.0 + 2.0 / 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_scaling() {
        let u = staircase(10);
        let mut v = u.clone();
        v.values_mut().iter_mut().for_each(|x| *x *= 3.0);
        let scaled_jumps: Vec<JumpInterface> = u
            .jumps()
            .iter()
            .map(|j| {
                let Surface::Segment([p, q]) = j.pieces()[0] else { unreachable!() };
                JumpInterface::segment(p, q, j.jump().iter().map(|x| 3.0 * x).collect()).unwrap()
            })
            .collect();
        let v = DisplacementField::new(v.grid().clone(), v.values().to_vec(), scaled_jumps).unwrap();
        let f = Integrand::norm(2);
        let a = evaluate_functional(&f, &u, true).unwrap();
        let b = evaluate_functional(&f, &v, true).unwrap();
        assert!((b.total - 3.0 * a.total).abs() < 1e-12);
        assert!((b.boundary - 3.0 * a.boundary).abs() < 1e-12);
    }
}
