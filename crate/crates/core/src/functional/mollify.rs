//! Mollification of fields whose jump interfaces are straight, axis-aligned
//! and cross the whole box. Each jump `J·1_{s(x_k − c) > 0}` is replaced by
//! `J·C_δ(s(x_k − c))` with `C_δ` the distribution function of the cubic
//! B-spline kernel of radius `δ`; the jump-free part is kept as is.

use super::GAUSS8;
use crate::error::{invalid, Result};
use crate::fields::{assemble_symmetrized_measure, DisplacementField, Grid, Surface};
use crate::integrands::Integrand;
use crate::symtensor::{sym_dyad, SymMatrix};

/// Standard cubic B-spline on `[−2, 2]`, unit mass.
pub fn bspline(s: f64) -> f64 {
    let a = s.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        (2.0 - a).powi(3) / 6.0
    } else {
        0.0
    }
}

/// Distribution function of [`bspline`].
pub fn bspline_cdf(s: f64) -> f64 {
    let a = s.abs();
    let g = if a < 1.0 {
        2.0 * a / 3.0 - a.powi(3) / 3.0 + a.powi(4) / 8.0
    } else if a < 2.0 {
        0.5 - (2.0 - a).powi(4) / 24.0
    } else {
        0.5
    };
    0.5 + g.copysign(s)
}

/// 1D kernel `k_δ(t) = (2/δ)·N(2t/δ)`, supported on `[−δ, δ]`.
pub fn kernel(delta: f64, t: f64) -> f64 {
    2.0 / delta * bspline(2.0 * t / delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub axis: usize,
    pub offset: f64,
    /// `+1` when the `+` side is `x_axis > offset`.
    pub sign: f64,
    pub jump: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Mollified {
    grid: Grid,
    /// Absolutely continuous strain of the unmollified field, per cell.
    base: Vec<SymMatrix>,
    /// Nodal values with every jump removed.
    base_values: Vec<f64>,
    steps: Vec<Step>,
    delta: f64,
}

fn steps_of(u: &DisplacementField) -> Result<Vec<Step>> {
    let grid = u.grid();
    let (lo, hi) = (grid.lo(), grid.hi());
    let mut steps = Vec::new();
    for j in u.jumps() {
        let mut axis = None;
        let mut offset = 0.0;
        let mut sign = 0.0;
        let mut covered = 0.0;
        for piece in j.pieces() {
            let Surface::Segment([p, q]) = piece else {
                return invalid("mollification supports 2D segment interfaces only");
            };
            let n = piece.normal();
            let k = if n[1].abs() < 1e-12 {
                0
            } else if n[0].abs() < 1e-12 {
                1
            } else {
                return invalid("mollification needs axis-aligned interfaces");
            };
            if axis.is_some_and(|a| a != k || (p[k] - offset).abs() > 1e-12 || n[k] != sign) {
                return invalid("interface pieces must lie on one line with one orientation");
            }
            axis = Some(k);
            offset = p[k];
            sign = n[k];
            let o = 1 - k;
            let (a, b) = (p[o].min(q[o]).max(lo[o]), p[o].max(q[o]).min(hi[o]));
            covered += (b - a).max(0.0);
        }
        let k = axis.expect("interfaces have at least one piece");
        let o = 1 - k;
        if (covered - (hi[o] - lo[o])).abs() > 1e-9 * (hi[o] - lo[o]) {
            return invalid("mollification needs interfaces crossing the whole box");
        }
        steps.push(Step {
            axis: k,
            offset,
            sign,
            jump: j.jump().to_vec(),
        });
    }
    Ok(steps)
}

impl Mollified {
    pub fn new(u: &DisplacementField, delta: f64) -> Result<Self> {
        if u.dim() != 2 {
            return invalid("mollification is implemented in 2D");
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return invalid("mollification radius must be positive");
        }
        let steps = steps_of(u)?;
        let grid = u.grid().clone();
        let mut base_values = u.values().to_vec();
        for node in 0..grid.node_count() {
            let x = grid.node_coord(node);
            for s in &steps {
                if s.sign * (x[s.axis] - s.offset) > 0.0 {
                    base_values[2 * node] -= s.jump[0];
                    base_values[2 * node + 1] -= s.jump[1];
                }
            }
        }
        let base = assemble_symmetrized_measure(u)?.density().to_vec();
        Ok(Self {
            grid,
            base,
            base_values,
            steps,
            delta,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// `u_δ` at a node.
    pub fn value_at_node(&self, node: usize) -> [f64; 2] {
        let x = self.grid.node_coord(node);
        let mut v = [self.base_values[2 * node], self.base_values[2 * node + 1]];
        for s in &self.steps {
            let c = bspline_cdf(2.0 * s.sign * (x[s.axis] - s.offset) / self.delta);
            v[0] += c * s.jump[0];
            v[1] += c * s.jump[1];
        }
        v
    }

    /// Nodal sampling of `u_δ` as a jump-free field.
    pub fn sample(&self) -> Result<DisplacementField> {
        let values = (0..self.grid.node_count()).flat_map(|n| self.value_at_node(n)).collect();
        DisplacementField::new(self.grid.clone(), values, Vec::new())
    }

    /// `𝓔u_δ(x)` for `x` in the given cell.
    pub fn strain(&self, cell: usize, x: &[f64]) -> SymMatrix {
        let mut e = self.base[cell].clone();
        for s in &self.steps {
            let w = kernel(self.delta, s.sign * (x[s.axis] - s.offset));
            if w != 0.0 {
                let mut n = [0.0; 2];
                n[s.axis] = s.sign;
                let m = sym_dyad(&s.jump, &n).expect("2D vectors");
                e += &m.scaled(w);
            }
        }
        e
    }

    /// Panel breakpoints on one axis: grid nodes and kernel knots.
    fn breakpoints(&self, k: usize) -> Vec<f64> {
        let (lo, hi) = (self.grid.lo()[k], self.grid.hi()[k]);
        let mut b: Vec<f64> = (0..self.grid.n()[k]).map(|i| self.grid.coord(k, i)).collect();
        for s in self.steps.iter().filter(|s| s.axis == k) {
            for m in -2..=2 {
                let t = s.offset + m as f64 * 0.5 * self.delta;
                if t > lo && t < hi {
                    b.push(t);
                }
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        b
    }

    /// `∫_Ω g(x, 𝓔u_δ(x)) dx` by tensor Gauss-Legendre panels between
    /// breakpoints; the integrand is smooth on every panel.
    pub fn integrate(&self, g: impl Fn(&[f64], &SymMatrix) -> f64) -> f64 {
        let bx = self.breakpoints(0);
        let by = self.breakpoints(1);
        let mut total = 0.0;
        for wx in bx.windows(2) {
            for wy in by.windows(2) {
                let (hx, hy) = (wx[1] - wx[0], wy[1] - wy[0]);
                let mid = [0.5 * (wx[0] + wx[1]), 0.5 * (wy[0] + wy[1])];
                let cell = self.cell_of(&mid);
                let mut s = 0.0;
                for (tx, ax) in GAUSS8 {
                    for (ty, ay) in GAUSS8 {
                        let x = [wx[0] + tx * hx, wy[0] + ty * hy];
                        s += ax * ay * g(&x, &self.strain(cell, &x));
                    }
                }
                total += s * hx * hy;
            }
        }
        total
    }

    fn cell_of(&self, x: &[f64]) -> usize {
        let m: Vec<usize> = (0..2)
            .map(|k| {
                let i = ((x[k] - self.grid.lo()[k]) / self.grid.spacing(k)).floor() as isize;
                i.clamp(0, self.grid.n()[k] as isize - 2) as usize
            })
            .collect();
        self.grid.cell_index(&m)
    }

    /// `F(u_δ) = ∫ f(x, 𝓔u_δ) dx`; `u_δ` has no singular part.
    pub fn functional(&self, f: &Integrand) -> f64 {
        self.integrate(|x, e| f.eval(x, e))
    }

    /// `⟨Eu_δ⟩ = ∫ √(1 + |𝓔u_δ|²) dx`.
    pub fn area(&self) -> f64 {
        self.integrate(|_, e| (1.0 + e.norm_sq()).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::JumpInterface;

    #[test]
    fn bspline_mass_and_cdf() {
        // Simpson oracle for the mass and the derivative of the cdf
        let n = 4000;
        let h = 4.0 / n as f64;
        let mut mass = 0.0;
        for i in 0..=n {
            let s = -2.0 + i as f64 * h;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            mass += w * bspline(s);
        }
        assert!((mass * h / 3.0 - 1.0).abs() < 1e-12);
        for s in [-1.7, -0.4, 0.0, 0.3, 1.2, 1.99] {
            let d = (bspline_cdf(s + 1e-6) - bspline_cdf(s - 1e-6)) / 2e-6;
            assert!((d - bspline(s)).abs() < 1e-8);
        }
        assert_eq!(bspline_cdf(-3.0), 0.0);
        assert_eq!(bspline_cdf(2.5), 1.0);
        assert_eq!(bspline_cdf(0.0), 0.5);
    }

    #[test]
    fn single_jump_mass_is_preserved() {
        // |Eu_δ|(Ω) = |J⊙n|·length when the transition layer stays inside Ω
        let g = Grid::cube(2, -1.0, 1.0, 40).unwrap();
        let j = JumpInterface::segment([0.0, -1.0], [0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let u = DisplacementField::from_fn(g, |x| if x[0] > 0.0 { vec![1.0, 2.0] } else { vec![0.0, 0.0] }, vec![j]).unwrap();
        let m = Mollified::new(&u, 0.3).unwrap();
        let mass = m.integrate(|_, e| e.norm());
        let amp = sym_dyad(&[1.0, 2.0], &[1.0, 0.0]).unwrap().norm();
        assert!((mass - 2.0 * amp).abs() < 1e-12);
        let s = m.sample().unwrap();
        assert!(s.jumps().is_empty());
    }

    #[test]
    fn rejects_partial_and_oblique() {
        let g = Grid::cube(2, -1.0, 1.0, 10).unwrap();
        let j = JumpInterface::segment([0.05, -0.5], [0.05, 1.0], vec![1.0, 0.0]).unwrap();
        let u = DisplacementField::from_fn(g.clone(), |_| vec![0.0, 0.0], vec![j]).unwrap();
        assert!(Mollified::new(&u, 0.3).is_err());
        let j = JumpInterface::segment([-1.0, -0.95], [1.0, 0.95], vec![1.0, 0.0]).unwrap();
        let u = DisplacementField::from_fn(g, |_| vec![0.0, 0.0], vec![j]).unwrap();
        assert!(Mollified::new(&u, 0.3).is_err());
    }
}
