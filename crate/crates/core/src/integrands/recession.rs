use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{random_unit_sym, Integrand};
use crate::error::{invalid, Error, Result};
use crate::symtensor::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecessionMode {
    /// `lim f(x, tA)/t`.
    Strong,
    /// `limsup f(x, tA')/t` over `A' → A`, `t → ∞`.
    UpperSharp,
    /// `liminf f(x, tA')/t` over `A' → A`, `t → ∞`.
    LowerFlat,
}

/// Geometric schedule `t_n = t0·ratioⁿ`, `n < rungs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub t0: f64,
    pub ratio: f64,
    pub rungs: usize,
}

impl Default for Ladder {
    fn default() -> Self {
        Self {
            t0: 1.0,
            ratio: 4.0,
            rungs: 16,
        }
    }
}

impl Ladder {
    pub fn t_max(&self) -> f64 {
        self.t0 * self.ratio.powi(self.rungs as i32 - 1)
    }

    fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) || !(self.ratio >= 2.0 && self.ratio.is_finite()) || self.rungs < 3 {
            return invalid("ladder needs t0 > 0, ratio ≥ 2 and at least 3 rungs");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecessionEstimate {
    pub value: f64,
    pub mode: RecessionMode,
    pub t_max: f64,
    pub converged: bool,
    /// Gap between the last two extrapolants.
    pub spread: f64,
    /// Gap between the last two raw ladder values.
    pub raw_gap: f64,
    pub tol: f64,
}

/// Relative convergence tolerance on successive extrapolants.
pub const RECESSION_TOL: f64 = 1e-6;
const PERTURBATION_SEED: u64 = 0x7265_6365;
const RANDOM_PERTURBATIONS: usize = 4;

/// Estimate the recession function of `f` at `(x, A)` by extrapolating the
/// ladder `f(x, t A)/t`.
pub fn recession(f: &Integrand, x: &[f64], a: &SymMatrix, mode: RecessionMode, ladder: &Ladder) -> Result<RecessionEstimate> {
    ladder.validate()?;
    if a.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: a.dim(),
        });
    }
    let an = a.norm();
    let tol = RECESSION_TOL * (1.0 + an);
    if an == 0.0 {
        return Ok(RecessionEstimate {
            value: 0.0,
            mode,
            t_max: ladder.t_max(),
            converged: true,
            spread: 0.0,
            raw_gap: 0.0,
            tol,
        });
    }
    let bound = 2.0 * f.growth_m() * (1.0 + an);
    let perturbations: Vec<SymMatrix> = match mode {
        RecessionMode::Strong => Vec::new(),
        _ => {
            let d = a.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(PERTURBATION_SEED);
            let mut dirs = Vec::new();
            for k in 0..SymMatrix::coord_len(d) {
                let e = SymMatrix::basis(d, k);
                dirs.push(-&e);
                dirs.push(e);
            }
            dirs.extend((0..RANDOM_PERTURBATIONS).map(|_| random_unit_sym(&mut rng, d)));
            dirs
        }
    };

    let mut seq = Vec::with_capacity(ladder.rungs);
    for n in 0..ladder.rungs {
        let t = ladder.t0 * ladder.ratio.powi(n as i32);
        let mut s = f.eval(x, &a.scaled(t)) / t;
        let rho = 0.5 * an * ladder.ratio.powf(-(n as f64) / 2.0);
        for e in &perturbations {
            let ap = a + &e.scaled(rho);
            let v = f.eval(x, &ap.scaled(t)) / t;
            s = match mode {
                RecessionMode::UpperSharp => s.max(v),
                RecessionMode::LowerFlat => s.min(v),
                RecessionMode::Strong => s,
            };
        }
        if !s.is_finite() {
            return Err(Error::RecessionDiverged {
                direction: format!("{a}"),
                spread: f64::INFINITY,
            });
        }
        if s.abs() > bound * (1.0 + 1e-9) {
            return Err(Error::GrowthViolation { value: s, bound, t });
        }
        seq.push(s);
    }

    let extrap: Vec<f64> = (2..seq.len()).map(|n| aitken(seq[n - 2], seq[n - 1], seq[n])).collect();
    let last = extrap[extrap.len() - 1];
    let spread = (last - extrap[extrap.len() - 2]).abs();
    let raw_gap = (seq[seq.len() - 1] - seq[seq.len() - 2]).abs();
    Ok(RecessionEstimate {
        value: last,
        mode,
        t_max: ladder.t_max(),
        converged: spread < tol,
        spread,
        raw_gap,
        tol,
    })
}

/// Aitken Δ² step; falls back to the last term when the differences are at
/// rounding level or do not contract.
fn aitken(s0: f64, s1: f64, s2: f64) -> f64 {
    let d1 = s1 - s0;
    let d2 = s2 - s1;
    if d2.abs() <= 1e-13 * (1.0 + s2.abs()) || d1 == 0.0 {
        return s2;
    }
    let q = d2 / d1;
    if !(q.is_finite() && q.abs() < 0.9) {
        return s2;
    }
    s2 + d2 * q / (1.0 - q)
}

/// Strong recession with an error when the ladder has not settled.
pub fn recession_strong_checked(f: &Integrand, x: &[f64], a: &SymMatrix, ladder: &Ladder) -> Result<f64> {
    let est = recession(f, x, a, RecessionMode::Strong, ladder)?;
    if !est.converged {
        return Err(Error::RecessionDiverged {
            direction: format!("{a}"),
            spread: est.spread,
        });
    }
    Ok(est.value)
}
