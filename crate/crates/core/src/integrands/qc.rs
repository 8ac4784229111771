//! Numerical tests of symmetric quasiconvexity: the zero-boundary cell problem
//! and the convexity condition along symmetric-dyad segments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Integrand;
use crate::error::{invalid, Error, Result};
use crate::fields::{DisplacementField, Grid};
use crate::symtensor::{sym_dyad, SymMatrix};

/// One-directional oscillation `ψ = scale·(1/k)·tri(k x·a)·b·φ(x)` with `tri`
/// the distance to the nearest integer and `φ` a boundary cutoff. Its
/// symmetrized gradient is `±scale·a⊙b` away from the cutoff layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaminateSeed {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub scale: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOptions {
    pub iters: usize,
    pub random_starts: usize,
    pub seed: u64,
    /// Use the built-in laminate seeds in directions at multiples of π/4.
    pub default_laminates: bool,
    pub extra_seeds: Vec<LaminateSeed>,
    /// Width of the cutoff layer of laminate seeds, as a fraction of the box.
    pub cutoff: f64,
}

impl Default for CellOptions {
    fn default() -> Self {
        Self {
            iters: 200,
            random_starts: 2,
            seed: 0,
            default_laminates: true,
            extra_seeds: Vec::new(),
            cutoff: 0.125,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub label: String,
    pub initial_mean: f64,
    pub final_mean: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub h_at_a: f64,
    pub min_mean: f64,
    pub tol: f64,
    pub violation: bool,
    pub best_start: String,
    pub starts: Vec<StartSummary>,
    pub psi: DisplacementField,
}

/// Violation tolerance `1e−5·(1 + |h(A)|)`.
pub fn violation_tol(h_at_a: f64) -> f64 {
    1e-5 * (1.0 + h_at_a.abs())
}

struct Cell<'a> {
    h: &'a Integrand,
    a: &'a SymMatrix,
    grid: &'a Grid,
    centres: Vec<Vec<f64>>,
    corners: Vec<[usize; 4]>,
    interior: Vec<bool>,
}

impl Cell<'_> {
    fn strain(&self, psi: &[f64], c: usize) -> SymMatrix {
        let [n00, n10, n01, n11] = self.corners[c];
        let (h0, h1) = (self.grid.spacing(0), self.grid.spacing(1));
        let mut g = [[0.0; 2]; 2];
        for i in 0..2 {
            g[i][0] = 0.5 * ((psi[2 * n10 + i] - psi[2 * n00 + i]) + (psi[2 * n11 + i] - psi[2 * n01 + i])) / h0;
            g[i][1] = 0.5 * ((psi[2 * n01 + i] - psi[2 * n00 + i]) + (psi[2 * n11 + i] - psi[2 * n10 + i])) / h1;
        }
        SymMatrix::from_fn(2, |i, j| 0.5 * (g[i][j] + g[j][i]))
    }

    fn mean(&self, psi: &[f64]) -> f64 {
        let mut s = 0.0;
        for c in 0..self.corners.len() {
            let e = self.strain(psi, c);
            s += self.h.eval(&self.centres[c], &(self.a + &e));
        }
        s / self.corners.len() as f64
    }

    fn mean_and_grad(&self, psi: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (h0, h1) = (self.grid.spacing(0), self.grid.spacing(1));
        let nc = self.corners.len() as f64;
        let mut s = 0.0;
        for c in 0..self.corners.len() {
            let m = self.a + &self.strain(psi, c);
            s += self.h.eval(&self.centres[c], &m);
            let gm = self.h.grad_a(&self.centres[c], &m);
            let [n00, n10, n01, n11] = self.corners[c];
            for i in 0..2 {
                // G : E = Σ_ik G_ik ∂_k ψⁱ for symmetric G
                let w0 = gm.get(i, 0) * 0.5 / (h0 * nc);
                let w1 = gm.get(i, 1) * 0.5 / (h1 * nc);
                grad[2 * n00 + i] += -w0 - w1;
                grad[2 * n10 + i] += w0 - w1;
                grad[2 * n01 + i] += -w0 + w1;
                grad[2 * n11 + i] += w0 + w1;
            }
        }
        for (node, inside) in self.interior.iter().enumerate() {
            if !inside {
                grad[2 * node] = 0.0;
                grad[2 * node + 1] = 0.0;
            }
        }
        s / nc
    }

    fn descend(&self, mut psi: Vec<f64>, iters: usize) -> Result<(Vec<f64>, f64, f64, usize)> {
        let mut grad = vec![0.0; psi.len()];
        let mut f = self.mean_and_grad(&psi, &mut grad);
        let f0 = f;
        if !f.is_finite() {
            return Err(Error::SearchAborted(format!("non-finite integrand value {f} at start")));
        }
        let mut alpha = 1.0;
        let mut trial = psi.clone();
        let mut it = 0;
        let mut quiet = 0;
        while it < iters {
            it += 1;
            let gg: f64 = grad.iter().map(|g| g * g).sum();
            if gg == 0.0 {
                break;
            }
            let mut accepted = false;
            alpha *= 2.0;
            for _ in 0..50 {
                for ((t, p), g) in trial.iter_mut().zip(&psi).zip(&grad) {
                    *t = p - alpha * g;
                }
                let ft = self.mean(&trial);
                if !ft.is_finite() {
                    return Err(Error::SearchAborted(format!("non-finite integrand value {ft} during search")));
                }
                if ft <= f - 1e-4 * alpha * gg {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            std::mem::swap(&mut psi, &mut trial);
            let prev = f;
            f = self.mean_and_grad(&psi, &mut grad);
            if prev - f < 1e-13 * (1.0 + f.abs()) {
                quiet += 1;
                if quiet >= 10 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        Ok((psi, f0, f, it))
    }
}

fn tri(s: f64) -> f64 {
    (s - s.round()).abs()
}

fn laminate_values(grid: &Grid, seed: &LaminateSeed, cutoff: f64) -> Vec<f64> {
    let lo = grid.lo();
    let hi = grid.hi();
    let mut out = vec![0.0; 2 * grid.node_count()];
    for node in 0..grid.node_count() {
        let x = grid.node_coord(node);
        let mut phi = 1.0_f64;
        for k in 0..2 {
            let w = cutoff * (hi[k] - lo[k]);
            let d = (x[k] - lo[k]).min(hi[k] - x[k]).max(0.0);
            phi = phi.min(d / w);
        }
        let s = seed.scale / seed.k * tri(seed.k * (x[0] * seed.a[0] + x[1] * seed.a[1])) * phi.min(1.0);
        out[2 * node] = s * seed.b[0];
        out[2 * node + 1] = s * seed.b[1];
    }
    out
}

fn default_seeds() -> Vec<LaminateSeed> {
    let dirs: Vec<[f64; 2]> = (0..4)
        .map(|i| {
            let th = i as f64 * std::f64::consts::FRAC_PI_4;
            [th.cos(), th.sin()]
        })
        .collect();
    let mut seeds = Vec::new();
    for i in 0..dirs.len() {
        for j in i..dirs.len() {
            seeds.push(LaminateSeed {
                a: dirs[i],
                b: dirs[j],
                scale: 1.0,
                k: 2.0,
            });
        }
    }
    seeds
}

/// Minimize the cell mean of `h(A + 𝓔ψ)` over zero-boundary `ψ` on a 2D grid
/// by multistart gradient descent. `ψ = 0` is always among the starts, so
/// `min_mean ≤ h(A)`.
pub fn cell_problem_min(h: &Integrand, a: &SymMatrix, cell: &Grid, opts: &CellOptions) -> Result<CellResult> {
    if cell.dim() != 2 || h.dim() != 2 || a.dim() != 2 {
        return invalid("cell problem is implemented for d = 2");
    }
    if h.x_dependent() {
        return invalid("cell problem needs an x-independent integrand");
    }
    let corners: Vec<[usize; 4]> = (0..cell.cell_count())
        .map(|c| {
            let k = cell.cell_corners(c);
            [k[0], k[1], k[2], k[3]]
        })
        .collect();
    let interior: Vec<bool> = (0..cell.node_count())
        .map(|node| {
            let m = cell.node_multi(node);
            (0..2).all(|k| m[k] > 0 && m[k] + 1 < cell.n()[k])
        })
        .collect();
    let prob = Cell {
        h,
        a,
        grid: cell,
        centres: (0..cell.cell_count()).map(|c| cell.cell_center(c)).collect(),
        corners,
        interior,
    };
    let h_at_a = h.eval(&prob.centres[0], a);
    if !h_at_a.is_finite() {
        return Err(Error::SearchAborted(format!("h(A) = {h_at_a} is not finite")));
    }

    let n = 2 * cell.node_count();
    let mut starts: Vec<(String, Vec<f64>)> = vec![("zero".into(), vec![0.0; n])];
    let mut seeds = if opts.default_laminates { default_seeds() } else { Vec::new() };
    seeds.extend(opts.extra_seeds.iter().cloned());
    for s in &seeds {
        let label = format!("laminate a=({:.3},{:.3}) b=({:.3},{:.3}) scale={}", s.a[0], s.a[1], s.b[0], s.b[1], s.scale);
        starts.push((label, laminate_values(cell, s, opts.cutoff)));
    }
    for r in 0..opts.random_starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
        let v: Vec<f64> = (0..n)
            .map(|i| if prob.interior[i / 2] { rng.gen_range(-0.05..0.05) } else { 0.0 })
            .collect();
        starts.push((format!("random#{r}"), v));
    }

    let runs: Vec<Result<(String, Vec<f64>, f64, f64, usize)>> = starts
        .into_par_iter()
        .map(|(label, psi)| {
            let (psi, f0, f, it) = prob.descend(psi, opts.iters)?;
            Ok((label, psi, f0, f, it))
        })
        .collect();

    let mut best: Option<(String, Vec<f64>, f64)> = None;
    let mut summaries = Vec::new();
    for run in runs {
        let (label, psi, f0, f, it) = run?;
        summaries.push(StartSummary {
            label: label.clone(),
            initial_mean: f0,
            final_mean: f,
            iterations: it,
        });
        if best.as_ref().is_none_or(|b| f < b.2) {
            best = Some((label, psi, f));
        }
    }
    let (best_start, psi, mut min_mean) = best.expect("zero start always present");
    // ψ = 0 is admissible
    if h_at_a < min_mean {
        min_mean = h_at_a;
    }
    let tol = violation_tol(h_at_a);
    Ok(CellResult {
        h_at_a,
        min_mean,
        tol,
        violation: min_mean < h_at_a - tol,
        best_start,
        starts: summaries,
        psi: DisplacementField::new(cell.clone(), psi, Vec::new())?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSamples {
    pub a_list: Vec<SymMatrix>,
    pub ab_list: Vec<(Vec<f64>, Vec<f64>)>,
    pub thetas: Vec<f64>,
}

impl SegmentSamples {
    /// Random base points with `|A| ≤ 2` and random vector pairs in the unit ball.
    pub fn random(dim: usize, n_a: usize, n_ab: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a_list = (0..n_a)
            .map(|_| super::random_unit_sym(&mut rng, dim).scaled(2.0 * rng.gen::<f64>()))
            .collect();
        let vec = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let ab_list = (0..n_ab).map(|_| (vec(&mut rng), vec(&mut rng))).collect();
        Self {
            a_list,
            ab_list,
            thetas: vec![0.25, 0.5, 0.75],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentViolation {
    pub a1: SymMatrix,
    pub a2: SymMatrix,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub theta: f64,
    /// `h(θA₁ + (1−θ)A₂) − θh(A₁) − (1−θ)h(A₂)`, positive on a violation.
    pub gap: f64,
}

/// Check `h(θA₁ + (1−θ)A₂) ≤ θh(A₁) + (1−θ)h(A₂)` along `A₂ = A₁ + a⊙b`.
pub fn dyad_segment_scan(h: &Integrand, samples: &SegmentSamples) -> Result<Vec<SegmentViolation>> {
    let mut out = Vec::new();
    let x = vec![0.0; h.dim()];
    for th in &samples.thetas {
        if !(0.0..=1.0).contains(th) {
            return invalid(format!("theta must lie in [0, 1], got {th}"));
        }
    }
    for a1 in &samples.a_list {
        for (a, b) in &samples.ab_list {
            let a2 = a1 + &sym_dyad(a, b)?;
            let (h1, h2) = (h.eval(&x, a1), h.eval(&x, &a2));
            for &th in &samples.thetas {
                let mid = &a1.scaled(th) + &a2.scaled(1.0 - th);
                let lhs = h.eval(&x, &mid);
                let rhs = th * h1 + (1.0 - th) * h2;
                let gap = lhs - rhs;
                if gap > 1e-10 * (1.0 + lhs.abs() + rhs.abs()) {
                    out.push(SegmentViolation {
                        a1: a1.clone(),
                        a2: a2.clone(),
                        a: a.clone(),
                        b: b.clone(),
                        theta: th,
                        gap,
                    });
                }
            }
        }
    }
    Ok(out)
}
