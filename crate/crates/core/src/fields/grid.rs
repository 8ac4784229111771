use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};

pub type Idx = SmallVec<[usize; 3]>;

/// Uniform tensor grid on an axis-aligned box. Nodes are ordered with axis 0
/// varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    bounds: Vec<[f64; 2]>,
    n: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    #[serde(rename = "box")]
    bounds: Vec<[f64; 2]>,
    n: Vec<usize>,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        Grid::new(r.bounds, r.n)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> Self {
        GridRepr {
            bounds: g.bounds,
            n: g.n,
        }
    }
}

impl Grid {
    pub fn new(bounds: Vec<[f64; 2]>, n: Vec<usize>) -> Result<Self> {
        if bounds.len() != n.len() {
            return Err(Error::DimensionMismatch {
                expected: bounds.len(),
                got: n.len(),
            });
        }
        if !(2..=3).contains(&bounds.len()) {
            return invalid(format!("grid dimension must be 2 or 3, got {}", bounds.len()));
        }
        for (k, (b, &nk)) in bounds.iter().zip(&n).enumerate() {
            if nk < 3 {
                return invalid(format!("axis {k}: need at least 3 nodes, got {nk}"));
            }
            if !(b[0].is_finite() && b[1].is_finite() && b[1] > b[0]) {
                return invalid(format!("axis {k}: invalid interval [{}, {}]", b[0], b[1]));
            }
        }
        Ok(Self { bounds, n })
    }

    /// Square/cubic grid `[lo, hi]^d` with `n` nodes per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![[lo, hi]; dim], vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn lo(&self) -> Vec<f64> {
        self.bounds.iter().map(|b| b[0]).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.bounds.iter().map(|b| b[1]).collect()
    }

    pub fn spacing(&self, k: usize) -> f64 {
        (self.bounds[k][1] - self.bounds[k][0]) / (self.n[k] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).fold(0.0, f64::max)
    }

    pub fn node_count(&self) -> usize {
        self.n.iter().product()
    }

    pub fn cell_count(&self) -> usize {
        self.n.iter().map(|n| n - 1).product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).product()
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|b| b[1] - b[0]).product()
    }

    pub fn coord(&self, k: usize, i: usize) -> f64 {
        // hit `hi` exactly at the last node
        if i + 1 == self.n[k] {
            self.bounds[k][1]
        } else {
            self.bounds[k][0] + i as f64 * self.spacing(k)
        }
    }

    pub fn node_multi(&self, mut idx: usize) -> Idx {
        let mut out: Idx = SmallVec::from_elem(0, self.dim());
        for k in (0..self.dim()).rev() {
            out[k] = idx % self.n[k];
            idx /= self.n[k];
        }
        out
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.n).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn node_coord(&self, idx: usize) -> Vec<f64> {
        let m = self.node_multi(idx);
        (0..self.dim()).map(|k| self.coord(k, m[k])).collect()
    }

    pub fn cell_multi(&self, mut idx: usize) -> Idx {
        let mut out: Idx = SmallVec::from_elem(0, self.dim());
        for k in (0..self.dim()).rev() {
            let m = self.n[k] - 1;
            out[k] = idx % m;
            idx /= m;
        }
        out
    }

    pub fn cell_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.n).fold(0, |acc, (&i, &n)| acc * (n - 1) + i)
    }

    /// Lower and upper corners of a cell.
    pub fn cell_bounds(&self, idx: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.cell_multi(idx);
        let lo = (0..self.dim()).map(|k| self.coord(k, m[k])).collect();
        let hi = (0..self.dim()).map(|k| self.coord(k, m[k] + 1)).collect();
        (lo, hi)
    }

    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        let (lo, hi) = self.cell_bounds(idx);
        lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Node indices of the `2^d` cell corners; bit `k` of the position selects
    /// the upper node along axis `k`.
    pub fn cell_corners(&self, idx: usize) -> SmallVec<[usize; 8]> {
        let m = self.cell_multi(idx);
        let d = self.dim();
        (0..1usize << d)
            .map(|c| {
                let multi: Idx = (0..d).map(|k| m[k] + (c >> k & 1)).collect();
                self.node_index(&multi)
            })
            .collect()
    }

    pub fn contains(&self, p: &[f64], eps: f64) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(&self.bounds)
                .all(|(x, b)| *x >= b[0] - eps && *x <= b[1] + eps)
    }

    /// Range of cell indices along axis `k` whose closure meets `[a, b]`.
    pub fn cell_range(&self, k: usize, a: f64, b: f64) -> std::ops::Range<usize> {
        let h = self.spacing(k);
        let m = self.n[k] - 1;
        let lo = ((a - self.bounds[k][0]) / h).floor().max(0.0) as usize;
        let hi = (((b - self.bounds[k][0]) / h).floor() as i64 + 1).clamp(0, m as i64) as usize;
        lo.min(m)..hi
    }

    /// Cells whose closure meets the box `[a, b]`.
    pub fn cells_meeting(&self, a: &[f64], b: &[f64]) -> Vec<usize> {
        let ranges: Vec<_> = (0..self.dim()).map(|k| self.cell_range(k, a[k], b[k])).collect();
        let mut out = Vec::new();
        let mut multi: Idx = ranges.iter().map(|r| r.start).collect();
        if ranges.iter().any(|r| r.is_empty()) {
            return out;
        }
        loop {
            out.push(self.cell_index(&multi));
            let mut k = self.dim();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                multi[k] += 1;
                if multi[k] < ranges[k].end {
                    break;
                }
                multi[k] = ranges[k].start;
            }
        }
    }

    /// Affine image `x ↦ (x − x₀)/r` of the grid.
    pub fn transformed(&self, x0: &[f64], r: f64) -> Result<Self> {
        let bounds = self
            .bounds
            .iter()
            .zip(x0)
            .map(|(b, c)| [(b[0] - c) / r, (b[1] - c) / r])
            .collect();
        Self::new(bounds, self.n.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let g = Grid::new(vec![[0.0, 1.0], [-1.0, 1.0], [0.0, 2.0]], vec![3, 4, 5]).unwrap();
        for i in 0..g.node_count() {
            assert_eq!(g.node_index(&g.node_multi(i)), i);
        }
        for i in 0..g.cell_count() {
            assert_eq!(g.cell_index(&g.cell_multi(i)), i);
        }
        assert_eq!(g.node_multi(1).as_slice(), &[0, 0, 1]);
        assert_eq!(g.cell_corners(0).len(), 8);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(vec![[0.0, 1.0], [0.0, 1.0]], vec![2, 3]).is_err());
        assert!(Grid::new(vec![[1.0, 0.0], [0.0, 1.0]], vec![3, 3]).is_err());
        assert!(Grid::new(vec![[0.0, 1.0]], vec![3]).is_err());
    }

    #[test]
    fn json_shape() {
        let g = Grid::cube(2, -1.0, 1.0, 5).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"box":[[-1.0,1.0],[-1.0,1.0]],"n":[5,5]}"#);
        let back: Grid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<Grid>(r#"{"box":[[0,1],[0,1]],"n":[2,5]}"#).is_err());
    }

    #[test]
    fn cells_meeting_box() {
        let g = Grid::cube(2, 0.0, 1.0, 11).unwrap();
        let cells = g.cells_meeting(&[0.25, 0.25], &[0.35, 0.45]);
        // x cells 2,3 ; y cells 2,3,4
        assert_eq!(cells.len(), 6);
    }
}
