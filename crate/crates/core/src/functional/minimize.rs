use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{boundary_density, boundary_quadrature, evaluate_functional_dirichlet, FunctionalBreakdown, RecessionCache};
use crate::error::{invalid, Error, Result};
use crate::fields::{DisplacementField, Grid};
use crate::integrands::random_unit_sym;
use crate::integrands::Integrand;
use crate::symtensor::SymMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Coercivity constant in `m(|A| − 1) ≤ f(x, A)`.
    pub coercivity_m: f64,
    /// Nodal Dirichlet data, `d` values per node; only boundary nodes are read.
    pub dirichlet: Option<Vec<f64>>,
    pub include_boundary: bool,
    pub iters: usize,
    pub random_starts: usize,
    pub seed: u64,
    /// Explicit competitors; the result is never worse than any of them.
    pub competitors: Vec<DisplacementField>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            coercivity_m: 1.0,
            dirichlet: None,
            include_boundary: true,
            iters: 300,
            random_starts: 1,
            seed: 0,
            competitors: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeStart {
    pub label: String,
    pub initial_total: f64,
    pub final_total: f64,
    pub iterations: usize,
    pub stagnated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub u: DisplacementField,
    pub breakdown: FunctionalBreakdown,
    pub best_start: String,
    /// The best start ended after 50 consecutive failed line searches.
    pub stagnated: bool,
    pub starts: Vec<MinimizeStart>,
}

const COERCIVITY_SAMPLES: usize = 2000;
const STAGNATION_LIMIT: usize = 50;

fn check_coercivity(f: &Integrand, m: f64, seed: u64) -> Result<()> {
    if !(m > 0.0 && m.is_finite()) {
        return invalid("coercivity constant must be positive");
    }
    let d = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x636f_6572);
    for _ in 0..COERCIVITY_SAMPLES {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
        let r = 10f64.powf(rng.gen_range(-2.0..4.0));
        let a = random_unit_sym(&mut rng, d).scaled(r);
        let v = f.eval(&x, &a);
        let lower = m * (r - 1.0);
        if !(v >= lower - 1e-9 * (1.0 + lower.abs())) {
            return Err(Error::InvalidInput(format!(
                "coercivity fails: f = {v} < m(|A| − 1) = {lower} at |A| = {r}"
            )));
        }
    }
    Ok(())
}

/// Discrete objective over jump-free nodal values.
struct Objective<'a> {
    f: &'a Integrand,
    grid: &'a Grid,
    dirichlet: Option<&'a [f64]>,
    include_boundary: bool,
    centres: Vec<Vec<f64>>,
    /// Boundary quadrature entries per node: (inner normal, weight).
    boundary: Vec<Vec<(Vec<f64>, f64)>>,
    /// Cells touching each node.
    node_cells: Vec<Vec<usize>>,
}

impl<'a> Objective<'a> {
    fn new(f: &'a Integrand, grid: &'a Grid, dirichlet: Option<&'a [f64]>, include_boundary: bool) -> Self {
        let centres = (0..grid.cell_count()).map(|c| grid.cell_center(c)).collect();
        let mut boundary = vec![Vec::new(); grid.node_count()];
        if include_boundary {
            for (node, n, w) in boundary_quadrature(grid) {
                boundary[node].push((n, w));
            }
        }
        let mut node_cells = vec![Vec::new(); grid.node_count()];
        for c in 0..grid.cell_count() {
            for &node in grid.cell_corners(c).iter() {
                node_cells[node].push(c);
            }
        }
        Self {
            f,
            grid,
            dirichlet,
            include_boundary,
            centres,
            boundary,
            node_cells,
        }
    }

    fn strain(&self, values: &[f64], cell: usize) -> SymMatrix {
        let d = self.grid.dim();
        let corners = self.grid.cell_corners(cell);
        let w = 1.0 / (1usize << (d - 1)) as f64;
        let mut g = vec![0.0; d * d];
        for k in 0..d {
            let h = self.grid.spacing(k);
            for c in 0..corners.len() {
                if c >> k & 1 == 1 {
                    let (n1, n0) = (corners[c], corners[c & !(1 << k)]);
                    for i in 0..d {
                        g[i * d + k] += w * (values[n1 * d + i] - values[n0 * d + i]) / h;
                    }
                }
            }
        }
        SymMatrix::from_fn(d, |i, j| 0.5 * (g[i * d + j] + g[j * d + i]))
    }

    fn cell_term(&self, values: &[f64], cell: usize) -> f64 {
        self.f.eval(&self.centres[cell], &self.strain(values, cell)) * self.grid.cell_volume()
    }

    fn node_boundary(&self, cache: &mut RecessionCache<'_>, values: &[f64], node: usize) -> Result<f64> {
        let mut s = 0.0;
        for (n, w) in &self.boundary[node] {
            s += w * boundary_density(cache, self.grid, values, self.dirichlet, node, n)?;
        }
        Ok(s)
    }

    fn total(&self, cache: &mut RecessionCache<'_>, values: &[f64]) -> Result<f64> {
        let mut s: f64 = (0..self.grid.cell_count()).map(|c| self.cell_term(values, c)).sum();
        if self.include_boundary {
            for node in 0..self.grid.node_count() {
                s += self.node_boundary(cache, values, node)?;
            }
        }
        if !s.is_finite() {
            return Err(Error::SearchAborted(format!("non-finite objective {s}")));
        }
        Ok(s)
    }

    /// Local value touched by one node: its cells and boundary entries.
    fn local(&self, cache: &mut RecessionCache<'_>, values: &[f64], node: usize) -> Result<f64> {
        let mut s: f64 = self.node_cells[node].iter().map(|&c| self.cell_term(values, c)).sum();
        s += self.node_boundary(cache, values, node)?;
        Ok(s)
    }

    /// Central finite-difference gradient of the total. Each component only
    /// changes the terms touching its node, so only those are recomputed.
    fn gradient(&self, cache: &mut RecessionCache<'_>, values: &mut [f64], out: &mut [f64]) -> Result<()> {
        let d = self.grid.dim();
        for node in 0..self.grid.node_count() {
            for i in 0..d {
                let k = node * d + i;
                let v = values[k];
                let e = 1e-6 * (1.0 + v.abs());
                values[k] = v + e;
                let fp = self.local(cache, values, node)?;
                values[k] = v - e;
                let fm = self.local(cache, values, node)?;
                values[k] = v;
                out[k] = (fp - fm) / (2.0 * e);
            }
        }
        Ok(())
    }

    fn descend(&self, cache: &mut RecessionCache<'_>, mut x: Vec<f64>, iters: usize, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64, f64, usize, bool)> {
        let n = x.len();
        let mut f = self.total(cache, &x)?;
        let f0 = f;
        let mut grad = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut alpha = 1.0;
        let mut fails = 0;
        let mut it = 0;
        while it < iters {
            it += 1;
            self.gradient(cache, &mut x, &mut grad)?;
            let gg: f64 = grad.iter().map(|g| g * g).sum();
            if gg == 0.0 {
                break;
            }
            let mut accepted = false;
            alpha *= 2.0;
            for _ in 0..40 {
                for ((t, p), g) in trial.iter_mut().zip(&x).zip(&grad) {
                    *t = p - alpha * g;
                }
                let ft = self.total(cache, &trial)?;
                if ft <= f - 1e-4 * alpha * gg {
                    f = ft;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if accepted {
                fails = 0;
                std::mem::swap(&mut x, &mut trial);
                continue;
            }
            // the gradient is not a descent direction at a kink: probe a
            // random direction of the same length before counting a failure
            let scale = alpha.max(1e-12) * gg.sqrt() / (n as f64).sqrt();
            for (t, p) in trial.iter_mut().zip(&x) {
                *t = p + scale * rng.gen_range(-1.0..1.0);
            }
            let ft = self.total(cache, &trial)?;
            if ft < f {
                f = ft;
                std::mem::swap(&mut x, &mut trial);
                fails = 0;
            } else {
                fails += 1;
                alpha = 1.0;
                if fails >= STAGNATION_LIMIT {
                    return Ok((x, f0, f, it, true));
                }
            }
        }
        Ok((x, f0, f, it, false))
    }
}

/// Minimize the discrete functional over jump-free nodal fields by
/// multistart descent. Dirichlet data enters only through the relaxed
/// boundary term, so the reported total is an upper bound on the discrete
/// minimum that never exceeds a supplied competitor.
pub fn minimize_functional(f: &Integrand, grid: &Grid, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    let d = grid.dim();
    if f.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: f.dim() });
    }
    check_coercivity(f, opts.coercivity_m, opts.seed)?;
    let len = grid.node_count() * d;
    if let Some(g) = &opts.dirichlet {
        if g.len() != len {
            return Err(Error::DimensionMismatch { expected: len, got: g.len() });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return invalid("Dirichlet data must be finite");
        }
    }
    for c in &opts.competitors {
        if c.grid() != grid {
            return invalid("competitor lives on a different grid");
        }
    }
    let dirichlet = opts.dirichlet.as_deref();
    let obj = Objective::new(f, grid, dirichlet, opts.include_boundary);
    let mut cache = RecessionCache::new(f);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut starts: Vec<(String, Vec<f64>)> = vec![("zero".into(), vec![0.0; len])];
    if let Some(g) = dirichlet {
        starts.push(("dirichlet".into(), g.to_vec()));
    }
    for k in 0..opts.random_starts {
        starts.push((format!("random{k}"), (0..len).map(|_| rng.gen_range(-0.1..0.1)).collect()));
    }

    let mut summaries = Vec::new();
    let mut best: Option<(f64, DisplacementField, String, bool)> = None;
    for (label, x0) in starts {
        let (x, f0, fx, iterations, stagnated) = obj.descend(&mut cache, x0, opts.iters, &mut rng)?;
        summaries.push(MinimizeStart {
            label: label.clone(),
            initial_total: f0,
            final_total: fx,
            iterations,
            stagnated,
        });
        if best.as_ref().map_or(true, |b| fx < b.0) {
            best = Some((fx, DisplacementField::new(grid.clone(), x, Vec::new())?, label, stagnated));
        }
    }
    let (_, mut u, mut best_start, mut stagnated) = best.expect("the zero start always runs");
    let mut breakdown = evaluate_functional_dirichlet(f, &u, opts.include_boundary, dirichlet)?;
    for (k, c) in opts.competitors.iter().enumerate() {
        let b = evaluate_functional_dirichlet(f, c, opts.include_boundary, dirichlet)?;
        summaries.push(MinimizeStart {
            label: format!("competitor{k}"),
            initial_total: b.total,
            final_total: b.total,
            iterations: 0,
            stagnated: false,
        });
        if b.total < breakdown.total {
            breakdown = b;
            u = c.clone();
            best_start = format!("competitor{k}");
            stagnated = false;
        }
    }
    Ok(MinimizeResult {
        u,
        breakdown,
        best_start,
        stagnated,
        starts: summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Grid {
        Grid::cube(2, 0.0, 1.0, n).unwrap()
    }

    #[test]
    fn norm_minimizer_is_constant() {
        let r = minimize_functional(&Integrand::norm(2), &unit(5), &MinimizeOptions::default()).unwrap();
        assert!(r.breakdown.total.abs() < 1e-9, "{:?}", r.breakdown);
    }

    #[test]
    fn shifted_norm_reaches_affine() {
        // |P| < 1 keeps m(|A| − 1) ≤ |A − P| with m = 1
        let p = SymMatrix::from_diag(&[0.5, -0.5]);
        let f = Integrand::shifted_norm(p.clone());
        let g = unit(5);
        let affine = DisplacementField::from_fn(g.clone(), |x| p.mul_vec(x), vec![]).unwrap();
        let opts = MinimizeOptions {
            include_boundary: false,
            competitors: vec![affine],
            iters: 100,
            ..Default::default()
        };
        let r = minimize_functional(&f, &g, &opts).unwrap();
        assert!(r.breakdown.bulk < 1e-12);
        assert!(r.starts[0].final_total < r.starts[0].initial_total);
    }

    #[test]
    fn dirichlet_competitor() {
        let g = unit(5);
        let data: Vec<f64> = (0..g.node_count()).flat_map(|_| [1.0, 0.0]).collect();
        let zero = evaluate_functional_dirichlet(&Integrand::norm(2), &DisplacementField::zeros(g.clone()), true, Some(&data)).unwrap();
        // perimeter terms |e₁⊙e₁| and |e₁⊙e₂| on the unit square
        assert!((zero.boundary - (2.0 + 2f64.sqrt())).abs() < 1e-12);
        let c = DisplacementField::from_fn(g.clone(), |_| vec![1.0, 0.0], vec![]).unwrap();
        let opts = MinimizeOptions {
            dirichlet: Some(data),
            competitors: vec![c],
            iters: 20,
            ..Default::default()
        };
        let r = minimize_functional(&Integrand::norm(2), &g, &opts).unwrap();
        assert!(r.breakdown.total <= 1e-12);
    }

    #[test]
    fn coercivity_rejected() {
        let f = Integrand::neg_norm(2);
        assert!(matches!(
            minimize_functional(&f, &unit(4), &MinimizeOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn fd_gradient_matches_total() {
        let g = unit(4);
        let f = Integrand::area(2);
        let obj = Objective::new(&f, &g, None, true);
        let mut cache = RecessionCache::new(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x: Vec<f64> = (0..2 * g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut grad = vec![0.0; x.len()];
        obj.gradient(&mut cache, &mut x, &mut grad).unwrap();
        for k in [0, 5, 13, 20] {
            let e = 1e-6;
            let mut xp = x.clone();
            xp[k] += e;
            let mut xm = x.clone();
            xm[k] -= e;
            let fd = (obj.total(&mut cache, &xp).unwrap() - obj.total(&mut cache, &xm).unwrap()) / (2.0 * e);
            assert!((fd - grad[k]).abs() < 1e-5, "{k}: {fd} vs {}", grad[k]);
        }
    }
}
