use serde::{Deserialize, Serialize};

use super::mollify::{bspline_cdf, Mollified};
use super::{area_functional, evaluate_functional};
use crate::error::{invalid, Error, Result};
use crate::fields::{assemble_symmetrized_measure, DisplacementField, Grid};
use crate::integrands::{Integrand, RecessionMode};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    /// `u_j = amplitude·(1/j)·tri(j x·a)·b`, limit `0`.
    LaminateOscillation { a: [f64; 2], b: [f64; 2], amplitude: f64 },
    /// `u_j = jump·(C(s + 2) − C(s − 2))` with `s = 4j(x_axis − position)` and
    /// `C` the B-spline step: a bump on `|x_axis − position| < 1/j` whose variation
    /// `2|jump⊙e_axis|` concentrates on the line while `u_j → 0`.
    Concentration { axis: usize, position: f64, jump: [f64; 2] },
    /// `u_j` is the mollification of `limit` at radius `1/j`. These converge
    /// strictly, so for integrands that are not positively 1-homogeneous the
    /// finite-`j` values approach `F(u)` from below.
    Mollification { limit: DisplacementField },
    /// `u_j = limit` for every `j`.
    Constant { limit: DisplacementField },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceSpec {
    #[serde(flatten)]
    pub kind: SequenceKind,
    pub js: Vec<usize>,
    pub grid: Grid,
    #[serde(default)]
    pub include_boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LscRow {
    pub j: usize,
    pub f_uj: f64,
    pub area_uj: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LscReport {
    pub trajectory: Vec<LscRow>,
    /// Minimum of `F(u_j)` over the last half of the index list.
    pub liminf: f64,
    pub f_limit: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub recession_mode: RecessionMode,
}

impl SequenceSpec {
    fn check_resolution(&self, j_max: usize) -> Result<()> {
        let h = self.grid.max_spacing();
        let scale = match &self.kind {
            SequenceKind::LaminateOscillation { a, .. } => 1.0 / (j_max as f64 * a[0].hypot(a[1])),
            SequenceKind::Concentration { .. } => 1.0 / j_max as f64,
            SequenceKind::Mollification { .. } => 2.0 / j_max as f64,
            SequenceKind::Constant { .. } => return Ok(()),
        };
        if scale < 4.0 * h {
            return Err(Error::Resolution(format!(
                "length scale {scale:.3e} at j = {j_max} is below 4h = {:.3e}",
                4.0 * h
            )));
        }
        Ok(())
    }

    pub fn limit(&self) -> Result<DisplacementField> {
        match &self.kind {
            SequenceKind::LaminateOscillation { .. } | SequenceKind::Concentration { .. } => {
                Ok(DisplacementField::zeros(self.grid.clone()))
            }
            SequenceKind::Mollification { limit } | SequenceKind::Constant { limit } => {
                if limit.grid() != &self.grid {
                    return invalid("limit field lives on a different grid");
                }
                Ok(limit.clone())
            }
        }
    }

    pub fn realize(&self, j: usize) -> Result<DisplacementField> {
        if j == 0 {
            return invalid("sequence indices start at 1");
        }
        let jf = j as f64;
        match &self.kind {
            SequenceKind::LaminateOscillation { a, b, amplitude } => {
                if self.grid.dim() != 2 {
                    return invalid("laminate sequences are 2D");
                }
                let (a, b, s) = (*a, *b, *amplitude);
                DisplacementField::from_fn(
                    self.grid.clone(),
                    move |x| {
                        let t = jf * (x[0] * a[0] + x[1] * a[1]);
                        let v = s / jf * (t - t.round()).abs();
                        vec![v * b[0], v * b[1]]
                    },
                    Vec::new(),
                )
            }
            SequenceKind::Concentration { axis, position, jump } => {
                let (k, c, jv) = (*axis, *position, *jump);
                if self.grid.dim() != 2 || k > 1 {
                    return invalid("concentration sequences are 2D with axis 0 or 1");
                }
                if !(c - 1.0 / jf > self.grid.lo()[k] && c + 1.0 / jf < self.grid.hi()[k]) {
                    return invalid("concentration layer must stay inside the box");
                }
                DisplacementField::from_fn(
                    self.grid.clone(),
                    move |x| {
                        let s = 4.0 * jf * (x[k] - c);
                        let w = bspline_cdf(s + 2.0) - bspline_cdf(s - 2.0);
                        vec![w * jv[0], w * jv[1]]
                    },
                    Vec::new(),
                )
            }
            SequenceKind::Mollification { limit } => Mollified::new(limit, 1.0 / jf)?.sample(),
            SequenceKind::Constant { limit } => Ok(limit.clone()),
        }
    }
}

/// Evaluate `F(u_j)` along a sequence and compare the tail minimum with `F(u)`.
pub fn lsc_experiment(f: &Integrand, seq: &SequenceSpec) -> Result<LscReport> {
    let Some(&j_max) = seq.js.iter().max() else {
        return invalid("index list is empty");
    };
    seq.check_resolution(j_max)?;
    let limit = seq.limit()?;
    let f_limit = evaluate_functional(f, &limit, seq.include_boundary)?.total;
    let mut trajectory = Vec::with_capacity(seq.js.len());
    for &j in &seq.js {
        let u = seq.realize(j)?;
        let f_uj = evaluate_functional(f, &u, seq.include_boundary)?.total;
        let area_uj = area_functional(&assemble_symmetrized_measure(&u)?);
        trajectory.push(LscRow { j, f_uj, area_uj });
    }
    let tail = &trajectory[trajectory.len() / 2..];
    let liminf = tail.iter().map(|r| r.f_uj).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * (1.0 + f_limit.abs());
    let verdict = if liminf >= f_limit - tol { Verdict::Pass } else { Verdict::Fail };
    Ok(LscReport {
        trajectory,
        liminf,
        f_limit,
        tol,
        verdict,
        recession_mode: RecessionMode::Strong,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrictRow {
    pub delta: f64,
    pub area_delta: f64,
    pub f_delta: f64,
    pub area_gap: f64,
    pub f_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrictReport {
    pub trajectory: Vec<StrictRow>,
    pub area_limit: f64,
    pub f_limit: f64,
    /// `|F(u_δ) − F(u)|` is non-increasing along the δ-list.
    pub monotone: bool,
}

/// Compare `⟨Eu_δ⟩` and `F(u_δ)` with their values at `u` along a decreasing
/// list of mollification radii. The boundary term is not included.
pub fn strict_continuity_experiment(f: &Integrand, u: &DisplacementField, deltas: &[f64]) -> Result<StrictReport> {
    if deltas.is_empty() || deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("mollification radii must be strictly decreasing");
    }
    let h = u.grid().max_spacing();
    let smallest = deltas[deltas.len() - 1];
    if smallest < 2.0 * h {
        return Err(Error::Resolution(format!("radius {smallest} is below 2h = {}", 2.0 * h)));
    }
    let area_limit = area_functional(&assemble_symmetrized_measure(u)?);
    let f_limit = evaluate_functional(f, u, false)?.total;
    let mut trajectory = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let m = Mollified::new(u, delta)?;
        let area_delta = m.area();
        let f_delta = m.functional(f);
        trajectory.push(StrictRow {
            delta,
            area_delta,
            f_delta,
            area_gap: (area_delta - area_limit).abs(),
            f_gap: (f_delta - f_limit).abs(),
        });
    }
    let monotone = trajectory.windows(2).all(|w| w[1].f_gap <= w[0].f_gap);
    Ok(StrictReport {
        trajectory,
        area_limit,
        f_limit,
        monotone,
    })
}
