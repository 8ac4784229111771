//! Integrands `f(x, A)` of linear growth: catalog, parsed expressions, the
//! S-transform, recession functions and symmetric-quasiconvexity tests.

pub mod expr;
pub mod qc;
pub mod recession;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::symtensor::SymMatrix;
use expr::{parse_expr, Ctx, Dual, Expr, Scalar, Vars};

pub use qc::{cell_problem_min, dyad_segment_scan, CellOptions, CellResult, SegmentSamples, SegmentViolation};
pub use recession::{recession, Ladder, RecessionEstimate, RecessionMode};

type EvalFn = dyn Fn(&[f64], &SymMatrix) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &SymMatrix) -> SymMatrix + Send + Sync;

/// Number of random samples behind the growth estimate.
pub const GROWTH_SAMPLES: usize = 10_000;
const GROWTH_SEED: u64 = 0x6772_6f77;

/// Sampled estimate of `M` in `|f(x,A)| ≤ M(1 + |A|)`. Probabilistic: a pass
/// on the sample is not a proof.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub m: f64,
    /// Largest ratio over samples with `|A| ≤ 10`.
    pub m_small: f64,
    /// Largest ratio over samples with `|A| ≥ 10³`.
    pub m_large: f64,
    /// Set when the large-|A| ratio outgrows the small-|A| one or a value is
    /// not finite.
    pub warning: bool,
}

#[derive(Clone)]
pub struct Integrand {
    name: String,
    dim: usize,
    eval: Arc<EvalFn>,
    grad: Option<Arc<GradFn>>,
    x_dependent: bool,
    growth: GrowthEstimate,
    expr: Option<Expr>,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrand")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("x_dependent", &self.x_dependent)
            .field("analytic_grad", &self.grad.is_some())
            .field("growth", &self.growth)
            .finish()
    }
}

impl Integrand {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        x_dependent: bool,
        eval: impl Fn(&[f64], &SymMatrix) -> f64 + Send + Sync + 'static,
        grad: Option<Arc<GradFn>>,
    ) -> Self {
        let eval: Arc<EvalFn> = Arc::new(eval);
        let growth = estimate_growth(&*eval, dim);
        Self {
            name: name.into(),
            dim,
            eval,
            grad,
            x_dependent,
            growth,
            expr: None,
        }
    }

    /// `|A|`.
    pub fn norm(dim: usize) -> Self {
        Self::new("norm(A)", dim, false, |_, a| a.norm(), Some(Arc::new(|_, a| unit_or_zero(a))))
    }

    /// `−|A|`.
    pub fn neg_norm(dim: usize) -> Self {
        Self::new(
            "-norm(A)",
            dim,
            false,
            |_, a| -a.norm(),
            Some(Arc::new(|_, a| -unit_or_zero(a))),
        )
    }

    /// Area integrand `√(1 + |A|²)`.
    pub fn area(dim: usize) -> Self {
        Self::new(
            "sqrt(1 + normsq(A))",
            dim,
            false,
            |_, a| (1.0 + a.norm_sq()).sqrt(),
            Some(Arc::new(|_, a| a.scaled(1.0 / (1.0 + a.norm_sq()).sqrt()))),
        )
    }

    /// `A : A`; convex but of quadratic growth, so its growth estimate warns.
    pub fn quadratic(dim: usize) -> Self {
        Self::new("normsq(A)", dim, false, |_, a| a.norm_sq(), Some(Arc::new(|_, a| a.scaled(2.0))))
    }

    /// `B : A`.
    pub fn linear(b: SymMatrix) -> Self {
        let b2 = b.clone();
        let dim = b.dim();
        Self::new(
            format!("dot(A, {})", matrix_literal(&b)),
            dim,
            false,
            move |_, a| b.dot(a),
            Some(Arc::new(move |_, _| b2.clone())),
        )
    }

    /// `|A − B|`.
    pub fn shifted_norm(b: SymMatrix) -> Self {
        let b2 = b.clone();
        let dim = b.dim();
        Self::new(
            format!("norm(A - {})", matrix_literal(&b)),
            dim,
            false,
            move |_, a| (a - &b).norm(),
            Some(Arc::new(move |_, a| unit_or_zero(&(a - &b2)))),
        )
    }

    /// `|A + P| + |A − P| − 2|A|`: nonnegative, 1-homogeneous, and not
    /// symmetric-quasiconvex when `P` is a symmetric dyad.
    pub fn dyad_violator(p: SymMatrix) -> Self {
        let p2 = p.clone();
        let dim = p.dim();
        let lit = matrix_literal(&p);
        Self::new(
            format!("norm(A + {lit}) + norm(A - {lit}) - 2*norm(A)"),
            dim,
            false,
            move |_, a| (a + &p).norm() + (a - &p).norm() - 2.0 * a.norm(),
            Some(Arc::new(move |_, a| {
                let mut g = unit_or_zero(&(a + &p2));
                g += &unit_or_zero(&(a - &p2));
                g -= &unit_or_zero(a).scaled(2.0);
                g
            })),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x_dependent(&self) -> bool {
        self.x_dependent
    }

    pub fn growth(&self) -> GrowthEstimate {
        self.growth
    }

    pub fn growth_m(&self) -> f64 {
        self.growth.m
    }

    pub fn has_analytic_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn expr(&self) -> Option<&Expr> {
        self.expr.as_ref()
    }

    #[inline]
    pub fn eval(&self, x: &[f64], a: &SymMatrix) -> f64 {
        (self.eval)(x, a)
    }

    /// Frobenius gradient in `A`; analytic when available, otherwise central
    /// differences in the orthonormal coordinates of `Sym(d)`.
    pub fn grad_a(&self, x: &[f64], a: &SymMatrix) -> SymMatrix {
        if let Some(g) = &self.grad {
            return g(x, a);
        }
        let c = a.to_coords();
        let step = 1e-6 * (1.0 + a.norm());
        let mut g = vec![0.0; c.len()];
        let mut probe = c.clone();
        for k in 0..c.len() {
            probe[k] = c[k] + step;
            let fp = self.eval(x, &SymMatrix::from_coords(self.dim, &probe));
            probe[k] = c[k] - step;
            let fm = self.eval(x, &SymMatrix::from_coords(self.dim, &probe));
            probe[k] = c[k];
            g[k] = (fp - fm) / (2.0 * step);
        }
        SymMatrix::from_coords(self.dim, &g)
    }

    /// `(1 − |Â|) f(x, Â/(1 − |Â|))` for `|Â| < 1`.
    pub fn transform_s(&self, x: &[f64], a_hat: &SymMatrix) -> Result<f64> {
        let n = a_hat.norm();
        if n >= 1.0 {
            return invalid(format!("S-transform needs |Â| < 1, got {n}"));
        }
        Ok((1.0 - n) * self.eval(x, &a_hat.scaled(1.0 / (1.0 - n))))
    }

    /// Sampled `sup |Sf|` over `x` in the unit box and `|Â| < 1`.
    pub fn e_norm_estimate(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = 0.0_f64;
        for _ in 0..samples {
            let x: Vec<f64> = (0..self.dim).map(|_| rng.gen::<f64>()).collect();
            let dir = random_unit_sym(&mut rng, self.dim);
            let r: f64 = rng.gen::<f64>().sqrt() * (1.0 - 1e-9);
            if let Ok(v) = self.transform_s(&x, &dir.scaled(r)) {
                best = best.max(v.abs());
            }
        }
        best
    }
}

fn unit_or_zero(a: &SymMatrix) -> SymMatrix {
    let n = a.norm();
    if n > 0.0 {
        a.scaled(1.0 / n)
    } else {
        SymMatrix::zeros(a.dim())
    }
}

fn matrix_literal(m: &SymMatrix) -> String {
    let rows: Vec<String> = m
        .to_rows()
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}

/// Uniformly random unit-norm symmetric matrix.
pub fn random_unit_sym(rng: &mut impl Rng, dim: usize) -> SymMatrix {
    let m = SymMatrix::coord_len(dim);
    loop {
        let c: Vec<f64> = (0..m).map(|_| standard_normal(rng)).collect();
        let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-12 {
            return SymMatrix::from_coords(dim, &c.iter().map(|v| v / n).collect::<Vec<_>>());
        }
    }
}

pub(crate) fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn estimate_growth(f: &EvalFn, dim: usize) -> GrowthEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(GROWTH_SEED);
    let (mut m, mut m_small, mut m_large) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut finite = true;
    for _ in 0..GROWTH_SAMPLES {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        // |A| log-uniform on [1e-2, 1e4], plus the origin
        let mag = if rng.gen::<f64>() < 0.01 { 0.0 } else { 10f64.powf(rng.gen_range(-2.0..4.0)) };
        let a = random_unit_sym(&mut rng, dim).scaled(mag);
        let v = f(&x, &a);
        if !v.is_finite() {
            finite = false;
            continue;
        }
        let ratio = v.abs() / (1.0 + mag);
        m = m.max(ratio);
        if mag <= 10.0 {
            m_small = m_small.max(ratio);
        }
        if mag >= 1e3 {
            m_large = m_large.max(ratio);
        }
    }
    GrowthEstimate {
        m,
        m_small,
        m_large,
        warning: !finite || m_large > 2.0 * m_small + 1.0,
    }
}

/// Parse an integrand expression in `A` and `x[i]` for dimension `dim`. The
/// gradient in `A` comes from forward-mode dual evaluation.
pub fn parse_integrand(src: &str, dim: usize) -> Result<Integrand> {
    if !(1..=3).contains(&dim) {
        return invalid(format!("integrand dimension must be 1, 2 or 3, got {dim}"));
    }
    let e = Arc::new(parse_expr(src, Vars::integrand(dim))?);
    let x_dependent = e.uses_x();
    let ev = e.clone();
    let eval = move |x: &[f64], a: &SymMatrix| {
        let full: smallvec::SmallVec<[f64; 9]> = (0..dim * dim).map(|k| a.get(k / dim, k % dim)).collect();
        ev.eval(&Ctx {
            dim,
            a: &full,
            x,
            t: 0.0,
        })
    };
    let eg = e.clone();
    let grad: Arc<GradFn> = Arc::new(move |x: &[f64], a: &SymMatrix| {
        let full = dual_matrix(a);
        let out = eg.eval(&Ctx {
            dim,
            a: &full,
            x,
            t: 0.0,
        });
        SymMatrix::from_coords(dim, &out.g[..SymMatrix::coord_len(dim)])
    });
    let mut f = Integrand::new(e.to_string(), dim, x_dependent, eval, Some(grad));
    f.expr = Some((*e).clone());
    Ok(f)
}

/// Full matrix of duals seeded with the orthonormal `Sym(d)` coordinates.
fn dual_matrix(a: &SymMatrix) -> smallvec::SmallVec<[Dual; 9]> {
    let d = a.dim();
    let mut full: smallvec::SmallVec<[Dual; 9]> = (0..d * d).map(|k| Dual::cst(a.get(k / d, k % d))).collect();
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            if i == j {
                full[i * d + i].g[k] = 1.0;
            } else {
                let w = std::f64::consts::FRAC_1_SQRT_2;
                full[i * d + j].g[k] = w;
                full[j * d + i].g[k] = w;
            }
            k += 1;
        }
    }
    full
}

/// Scalar function of `x` (e.g. a source term `g`).
#[derive(Clone)]
pub struct FieldFn {
    expr: Arc<Expr>,
    dim: usize,
}

impl FieldFn {
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        Ok(Self {
            expr: Arc::new(parse_expr(src, Vars::field(dim))?),
            dim,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.expr.eval(&Ctx::<f64> {
            dim: self.dim,
            a: &[],
            x,
            t: 0.0,
        })
    }
}

/// Scalar function of one variable `t`.
#[derive(Clone)]
pub struct ProfileFn {
    expr: Arc<Expr>,
}

impl ProfileFn {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self {
            expr: Arc::new(parse_expr(src, Vars::profile())?),
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.expr.eval(&Ctx::<f64> {
            dim: 1,
            a: &[],
            x: &[],
            t,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::symtensor::sym_dyad;

    #[test]
    fn parse_examples() {
        let f = parse_integrand("norm(A)", 2).unwrap();
        assert!((f.eval(&[0.0, 0.0], &SymMatrix::identity(2)) - 2f64.sqrt()).abs() < 1e-15);
        let g = parse_integrand("sqrt(1 + normsq(A))", 2).unwrap();
        assert_eq!(g.eval(&[0.0, 0.0], &SymMatrix::zeros(2)), 1.0);
        assert!(matches!(parse_integrand("norm(A) @ x", 2), Err(Error::Syntax { pos: 8, .. })));
    }

    #[test]
    fn growth_flags() {
        assert!(!Integrand::norm(2).growth().warning);
        assert!(!Integrand::area(2).growth().warning);
        let m = Integrand::norm(2).growth_m();
        assert!(m <= 1.0 && m > 0.999);
        assert!(Integrand::quadratic(2).growth().warning);
        assert!(parse_integrand("normsq(A)", 2).unwrap().growth().warning);
        assert!(!parse_integrand("norm(A) + sqrt(norm(A))", 2).unwrap().growth().warning);
    }

    #[test]
    fn parsed_gradient_matches_catalog() {
        let a = SymMatrix::from_rows(&[vec![0.3, -0.4], vec![-0.4, 1.1]], 0.0).unwrap();
        let parsed = parse_integrand("sqrt(1 + normsq(A))", 2).unwrap();
        let cat = Integrand::area(2);
        assert!(parsed.grad_a(&[0.0, 0.0], &a).max_abs_diff(&cat.grad_a(&[0.0, 0.0], &a)) < 1e-14);
        let p = sym_dyad(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let viol = Integrand::dyad_violator(p.clone());
        let viol_parsed = parse_integrand(viol.name(), 2).unwrap();
        assert!((viol.eval(&[0.0, 0.0], &a) - viol_parsed.eval(&[0.0, 0.0], &a)).abs() < 1e-14);
        assert!(viol.grad_a(&[0.0, 0.0], &a).max_abs_diff(&viol_parsed.grad_a(&[0.0, 0.0], &a)) < 1e-14);
    }

    #[test]
    fn finite_difference_gradient() {
        let a = SymMatrix::from_rows(&[vec![0.3, -0.4], vec![-0.4, 1.1]], 0.0).unwrap();
        let plain = Integrand::new("area", 2, false, |_, a| (1.0 + a.norm_sq()).sqrt(), None);
        let g = plain.grad_a(&[0.0, 0.0], &a);
        assert!(g.max_abs_diff(&Integrand::area(2).grad_a(&[0.0, 0.0], &a)) < 1e-8);
    }

    #[test]
    fn s_transform_examples() {
        let a = SymMatrix::from_rows(&[vec![0.2, 0.1], vec![0.1, -0.3]], 0.0).unwrap();
        let n = a.norm();
        let x = [0.0, 0.0];
        assert!((Integrand::norm(2).transform_s(&x, &a).unwrap() - n).abs() < 1e-15);
        let oracle = ((1.0 - n).powi(2) + n * n).sqrt();
        assert!((Integrand::area(2).transform_s(&x, &a).unwrap() - oracle).abs() < 1e-15);
        assert_eq!(Integrand::area(2).transform_s(&x, &SymMatrix::zeros(2)).unwrap(), 1.0);
        assert!(Integrand::norm(2).transform_s(&x, &SymMatrix::identity(2)).is_err());
        assert!(Integrand::area(2).e_norm_estimate(500, 1) <= 1.0 + 1e-12);
    }

    #[test]
    fn x_dependence_detected() {
        assert!(parse_integrand("norm(A) * (1 + x[0]^2)", 2).unwrap().x_dependent());
        assert!(!parse_integrand("norm(A)", 2).unwrap().x_dependent());
        let g = FieldFn::parse("x[0]^2 - x[1]^2", 2).unwrap();
        assert_eq!(g.eval(&[2.0, 1.0]), 3.0);
        let p = ProfileFn::parse("12*t^2").unwrap();
        assert_eq!(p.eval(0.5), 3.0);
    }
}
