//! Solutions of the planar inclusion `𝓔u = P g` for a fixed symmetric `P`,
//! split by the sign pattern of the eigenvalues of `P`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{DisplacementField, Grid};
use crate::symtensor::{classify_dyad, sym_eigen, DyadTag, SymMatrix, DEFAULT_DYAD_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InclusionTag {
    Trivial,
    OppositeSign,
    Degenerate,
    Elliptic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionCase {
    pub tag: InclusionTag,
    /// For `Degenerate` the non-zero eigenvalue comes first.
    pub eigen: (f64, f64),
    /// Rows are unit eigenvectors, so `Q P Qᵀ = diag(λ₁, λ₂)`.
    pub frame: [[f64; 2]; 2],
}

pub fn classify_inclusion(p: &SymMatrix) -> Result<InclusionCase> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: p.dim() });
    }
    let class = classify_dyad(p, DEFAULT_DYAD_TOL)?;
    let eig = sym_eigen(p);
    let (mut l, mut v) = ([eig.values[0], eig.values[1]], [eig.vectors[0].clone(), eig.vectors[1].clone()]);
    let tag = match class.tag {
        DyadTag::Zero => InclusionTag::Trivial,
        DyadTag::OppositeSignDyad => InclusionTag::OppositeSign,
        DyadTag::NotDyad => InclusionTag::Elliptic,
        DyadTag::RankOneDyad => {
            if l[0].abs() < l[1].abs() {
                l.swap(0, 1);
                v.swap(0, 1);
            }
            InclusionTag::Degenerate
        }
    };
    Ok(InclusionCase {
        tag,
        eigen: (l[0], l[1]),
        frame: [[v[0][0], v[0][1]], [v[1][0], v[1][1]]],
    })
}

/// Samples of a scalar function on a uniform 1D grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile1D {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

impl Profile1D {
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if !(hi > lo) || values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return invalid("profile needs hi > lo and at least two finite samples");
        }
        Ok(Self { lo, hi, values })
    }

    pub fn sample(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return invalid("profile needs at least two samples");
        }
        let dt = (hi - lo) / (n - 1) as f64;
        Self::new(lo, hi, (0..n).map(|i| f(lo + i as f64 * dt)).collect())
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    /// Cumulative trapezoid with value 0 at `lo`.
    pub fn antiderivative(&self) -> Profile1D {
        let dt = self.spacing();
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * dt * (w[0] + w[1]);
            out.push(acc);
        }
        Profile1D {
            lo: self.lo,
            hi: self.hi,
            values: out,
        }
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let slack = 1e-9 * (self.hi - self.lo);
        if !(t >= self.lo - slack && t <= self.hi + slack) {
            return Err(Error::InvalidInput(format!("{t} is outside the profile range [{}, {}]", self.lo, self.hi)));
        }
        let n = self.values.len();
        let s = ((t - self.lo) / self.spacing()).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        Ok((i, s - i as f64))
    }

    /// Piecewise-linear interpolation.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let (i, s) = self.locate(t)?;
        Ok((1.0 - s) * self.values[i] + s * self.values[i + 1])
    }

    /// Cubic Hermite interpolation of `self` using `deriv` as its derivative
    /// on the same nodes.
    pub fn eval_hermite(&self, deriv: &Profile1D, t: f64) -> Result<f64> {
        if deriv.values.len() != self.values.len() || deriv.lo != self.lo || deriv.hi != self.hi {
            return invalid("Hermite data must share nodes");
        }
        let (i, s) = self.locate(t)?;
        let dt = self.spacing();
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * self.values[i] + h10 * dt * deriv.values[i] + h01 * self.values[i + 1] + h11 * dt * deriv.values[i + 1])
    }
}

/// `[min, max]` of `x·dir` over the box of `grid`.
pub fn projection_range(grid: &Grid, dir: &[f64]) -> (f64, f64) {
    let (lo, hi) = (grid.lo(), grid.hi());
    let mut a = 0.0;
    let mut b = 0.0;
    for k in 0..grid.dim() {
        let (p, q) = (lo[k] * dir[k], hi[k] * dir[k]);
        a += p.min(q);
        b += p.max(q);
    }
    (a, b)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InclusionSolution {
    pub u: DisplacementField,
    /// `g` at the nodes.
    pub g: Vec<f64>,
    /// `max_c |𝓔u(c) − P g(c)|` over cell centres.
    pub residual: f64,
}

/// `max_c |𝓔u(c) − P g(c)|` with the compact stencil at cell centres.
pub fn inclusion_residual(u: &DisplacementField, p: &SymMatrix, g_at: impl Fn(&[f64]) -> Result<f64>) -> Result<f64> {
    let e = u.sym_gradient();
    let grid = u.grid();
    let mut r: f64 = 0.0;
    for (c, m) in e.values.iter().enumerate() {
        let g = g_at(&grid.cell_center(c))?;
        r = r.max((m - &p.scaled(g)).norm());
    }
    Ok(r)
}

fn check_grid(grid: &Grid) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: grid.dim() });
    }
    Ok(())
}

/// `u = H₁(x·a) b + H₂(x·b) a` with `P = a⊙b` and `H_k' = h_k`, so that
/// `g = h₁(x·a) + h₂(x·b)`.
pub fn solve_opposite_sign(p: &SymMatrix, h1: &Profile1D, h2: &Profile1D, grid: &Grid) -> Result<InclusionSolution> {
    check_grid(grid)?;
    let class = classify_dyad(p, DEFAULT_DYAD_TOL)?;
    if class.tag != DyadTag::OppositeSignDyad {
        return Err(Error::InvalidInput(format!("P is {:?}, not an opposite-sign dyad", class.tag)));
    }
    let (a, b) = (class.a.expect("witness"), class.b.expect("witness"));
    for (prof, dir, name) in [(h1, &a, "h1"), (h2, &b, "h2")] {
        let (lo, hi) = projection_range(grid, dir);
        let slack = 1e-9 * (hi - lo).max(1.0);
        if prof.lo > lo + slack || prof.hi < hi - slack {
            return Err(Error::InvalidInput(format!("{name} must cover [{lo}, {hi}]")));
        }
    }
    let (big_h1, big_h2) = (h1.antiderivative(), h2.antiderivative());
    let dot = |x: &[f64], v: &[f64]| x[0] * v[0] + x[1] * v[1];
    let mut values = Vec::with_capacity(2 * grid.node_count());
    let mut g = Vec::with_capacity(grid.node_count());
    for node in 0..grid.node_count() {
        let x = grid.node_coord(node);
        let (ta, tb) = (dot(&x, &a), dot(&x, &b));
        let s1 = big_h1.eval_hermite(h1, ta)?;
        let s2 = big_h2.eval_hermite(h2, tb)?;
        values.push(s1 * b[0] + s2 * a[0]);
        values.push(s1 * b[1] + s2 * a[1]);
        g.push(h1.eval(ta)? + h2.eval(tb)?);
    }
    let u = DisplacementField::new(grid.clone(), values, Vec::new())?;
    let residual = inclusion_residual(&u, p, |x| Ok(h1.eval(dot(x, &a))? + h2.eval(dot(x, &b))?))?;
    Ok(InclusionSolution { u, g, residual })
}

/// `u = λ₁ (H(x₁) + 𝒫'(x₁) x₂, −𝒫(x₁))` with `H' = h`, `𝒫'' = p`, solving
/// `𝓔u = diag(λ₁, 0) g` for `g = h(x₁) + p(x₁) x₂`.
pub fn solve_degenerate(lambda1: f64, h: &Profile1D, p: &Profile1D, grid: &Grid) -> Result<InclusionSolution> {
    check_grid(grid)?;
    if lambda1 == 0.0 || !lambda1.is_finite() {
        return invalid("λ₁ must be non-zero");
    }
    let (lo, hi) = (grid.lo()[0], grid.hi()[0]);
    let slack = 1e-9 * (hi - lo);
    for prof in [h, p] {
        if prof.lo > lo + slack || prof.hi < hi - slack {
            return Err(Error::InvalidInput(format!("profiles must cover [{lo}, {hi}]")));
        }
    }
    let big_h = h.antiderivative();
    let dp = p.antiderivative();
    let pp = dp.antiderivative();
    let mut values = Vec::with_capacity(2 * grid.node_count());
    let mut g = Vec::with_capacity(grid.node_count());
    for node in 0..grid.node_count() {
        let x = grid.node_coord(node);
        let hv = big_h.eval_hermite(h, x[0])?;
        let d1 = dp.eval_hermite(p, x[0])?;
        let d0 = pp.eval_hermite(&dp, x[0])?;
        values.push(lambda1 * (hv + d1 * x[1]));
        values.push(-lambda1 * d0);
        g.push(h.eval(x[0])? + p.eval(x[0])? * x[1]);
    }
    let u = DisplacementField::new(grid.clone(), values, Vec::new())?;
    let pm = SymMatrix::from_diag(&[lambda1, 0.0]);
    let residual = inclusion_residual(&u, &pm, |x| Ok(h.eval(x[0])? + p.eval(x[0])? * x[1]))?;
    Ok(InclusionSolution { u, g, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathOrder {
    RowsFirst,
    ColumnsFirst,
}

/// Integrate a nodal gradient `(d1, d2)` from the lower-left corner (value 0)
/// with the trapezoid rule: along the first axis then the second, or the
/// reverse.
pub fn path_integrate(grid: &Grid, d1: &[f64], d2: &[f64], order: PathOrder) -> Vec<f64> {
    let (n0, n1) = (grid.n()[0], grid.n()[1]);
    let (h0, h1) = (grid.spacing(0), grid.spacing(1));
    let idx = |i: usize, j: usize| i * n1 + j;
    let mut f = vec![0.0; n0 * n1];
    match order {
        PathOrder::RowsFirst => {
            for i in 1..n0 {
                f[idx(i, 0)] = f[idx(i - 1, 0)] + 0.5 * h0 * (d1[idx(i - 1, 0)] + d1[idx(i, 0)]);
            }
            for i in 0..n0 {
                for j in 1..n1 {
                    f[idx(i, j)] = f[idx(i, j - 1)] + 0.5 * h1 * (d2[idx(i, j - 1)] + d2[idx(i, j)]);
                }
            }
        }
        PathOrder::ColumnsFirst => {
            for j in 1..n1 {
                f[idx(0, j)] = f[idx(0, j - 1)] + 0.5 * h1 * (d2[idx(0, j - 1)] + d2[idx(0, j)]);
            }
            for j in 0..n1 {
                for i in 1..n0 {
                    f[idx(i, j)] = f[idx(i - 1, j)] + 0.5 * h0 * (d1[idx(i - 1, j)] + d1[idx(i, j)]);
                }
            }
        }
    }
    f
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipticSolution {
    pub u: DisplacementField,
    /// Potential `f` with `∇u = P g + [[0, −1], [1, 0]] f`.
    pub f: Vec<f64>,
    pub residual_pde: f64,
    pub residual_incl: f64,
    pub tol: f64,
}

/// Discrete `𝒜_P g = P₂₂ ∂₁₁g − 2P₁₂ ∂₁₂g + P₁₁ ∂₂₂g`, max over interior nodes.
pub fn elliptic_operator_residual(p: &SymMatrix, g: &[f64], grid: &Grid) -> f64 {
    let (n0, n1) = (grid.n()[0], grid.n()[1]);
    let (h0, h1) = (grid.spacing(0), grid.spacing(1));
    let idx = |i: usize, j: usize| i * n1 + j;
    let mut r: f64 = 0.0;
    for i in 1..n0 - 1 {
        for j in 1..n1 - 1 {
            let g11 = (g[idx(i + 1, j)] - 2.0 * g[idx(i, j)] + g[idx(i - 1, j)]) / (h0 * h0);
            let g22 = (g[idx(i, j + 1)] - 2.0 * g[idx(i, j)] + g[idx(i, j - 1)]) / (h1 * h1);
            let g12 = (g[idx(i + 1, j + 1)] - g[idx(i + 1, j - 1)] - g[idx(i - 1, j + 1)] + g[idx(i - 1, j - 1)]) / (4.0 * h0 * h1);
            r = r.max((p.get(1, 1) * g11 - 2.0 * p.get(0, 1) * g12 + p.get(0, 0) * g22).abs());
        }
    }
    r
}

/// Solve `𝓔u = P g` for same-sign `P` from nodal `g`. The potential uses the
/// cofactor form `∂₁f = P₁₂∂₁g − P₁₁∂₂g`, `∂₂f = P₂₂∂₁g − P₁₂∂₂g`, which in the
/// eigenframe reads `∇f = (−λ₁∂₂g, λ₂∂₁g)`; its integrability is `𝒜_P g = 0`.
pub fn solve_elliptic(p: &SymMatrix, g: &[f64], grid: &Grid) -> Result<EllipticSolution> {
    check_grid(grid)?;
    let case = classify_inclusion(p)?;
    if case.tag != InclusionTag::Elliptic {
        return Err(Error::InvalidInput(format!("P is {:?}, not elliptic", case.tag)));
    }
    if grid.n().iter().any(|&n| n < 5) {
        return invalid("the elliptic solver needs at least 5 nodes per axis");
    }
    if g.len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            got: g.len(),
        });
    }
    let g_max = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let h = grid.max_spacing();
    let tol = 10.0 * h * h * g_max * (case.eigen.0.abs() + case.eigen.1.abs());
    let residual_pde = elliptic_operator_residual(p, g, grid);
    if !(residual_pde <= tol) {
        return Err(Error::NotSolvable { residual: residual_pde, tol });
    }
    let (p11, p12, p22) = (p.get(0, 0), p.get(0, 1), p.get(1, 1));
    let g1 = diff4(grid, g, 0);
    let g2 = diff4(grid, g, 1);
    let f1: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| p12 * a - p11 * b).collect();
    let f2: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| p22 * a - p12 * b).collect();
    let f = path_integrate(grid, &f1, &f2, PathOrder::RowsFirst);

    // ∇u = [[P₁₁g, P₁₂g − f], [P₁₂g + f, P₂₂g]], row i is ∇uⁱ
    let n = grid.node_count();
    let comp = |i: usize| -> Vec<f64> {
        let (d1, d2): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|k| {
                if i == 0 {
                    (p11 * g[k], p12 * g[k] - f[k])
                } else {
                    (p12 * g[k] + f[k], p22 * g[k])
                }
            })
            .unzip();
        path_integrate(grid, &d1, &d2, PathOrder::RowsFirst)
    };
    let (u1, u2) = (comp(0), comp(1));
    let values = u1.iter().zip(&u2).flat_map(|(a, b)| [*a, *b]).collect();
    let u = DisplacementField::new(grid.clone(), values, Vec::new())?;
    let residual_incl = inclusion_residual(&u, p, |x| Ok(cell_mean(grid, g, x)))?;
    Ok(EllipticSolution {
        u,
        f,
        residual_pde,
        residual_incl,
        tol,
    })
}

/// Fourth-order derivative of nodal data along axis `k`. A second-order
/// derivative would leave `O(h²)` error jumps between boundary and interior
/// nodes, which the cell stencil turns into `O(h)` residuals; fourth order
/// everywhere keeps them below the `O(h²)` scale.
fn diff4(grid: &Grid, data: &[f64], k: usize) -> Vec<f64> {
    let n = grid.n();
    let h = grid.spacing(k);
    let stride = if k == 0 { n[1] } else { 1 };
    let len = n[k];
    let mut out = vec![0.0; data.len()];
    for (node, o) in out.iter_mut().enumerate() {
        let i = grid.node_multi(node)[k];
        let at = |m: usize| data[node - i * stride + m * stride];
        *o = if i == 0 {
            (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h)
        } else if i == 1 {
            (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) / (12.0 * h)
        } else if i == len - 2 {
            let e = len - 1;
            (3.0 * at(e) + 10.0 * at(e - 1) - 18.0 * at(e - 2) + 6.0 * at(e - 3) - at(e - 4)) / (12.0 * h)
        } else if i == len - 1 {
            let e = len - 1;
            (25.0 * at(e) - 48.0 * at(e - 1) + 36.0 * at(e - 2) - 16.0 * at(e - 3) + 3.0 * at(e - 4)) / (12.0 * h)
        } else {
            (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h)
        };
    }
    out
}

/// Mean of nodal data over the corners of the cell containing `x`.
fn cell_mean(grid: &Grid, data: &[f64], x: &[f64]) -> f64 {
    let m: Vec<usize> = (0..grid.dim())
        .map(|k| {
            let i = ((x[k] - grid.lo()[k]) / grid.spacing(k)).floor() as isize;
            i.clamp(0, grid.n()[k] as isize - 2) as usize
        })
        .collect();
    let corners = grid.cell_corners(grid.cell_index(&m));
    corners.iter().map(|&c| data[c]).sum::<f64>() / corners.len() as f64
}

/// Nodal samples of a scalar function.
pub fn sample_nodes(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..grid.node_count()).map(|n| f(&grid.node_coord(n))).collect()
}
