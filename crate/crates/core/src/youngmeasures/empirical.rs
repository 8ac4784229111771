use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Atom, ConcAtom, ConcSupport, YoungMeasure};
use crate::error::{invalid, Result};
use crate::fields::{assemble_symmetrized_measure, DisplacementField, SymMeasure};
use crate::symtensor::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalOptions {
    /// Cells per window edge; must divide the cell count on every axis.
    pub window: usize,
    /// Histogram bins across the data range of each coordinate.
    pub bins: usize,
    /// Cells with `|𝓔u| > cutoff_factor · median` count as concentration.
    pub cutoff_factor: f64,
}

impl Default for EmpiricalOptions {
    fn default() -> Self {
        Self {
            window: 4,
            bins: 32,
            cutoff_factor: 10.0,
        }
    }
}

#[derive(Default)]
struct Bin {
    weight: f64,
    sum: Vec<f64>,
}

fn binned(values: impl Iterator<Item = (f64, Vec<f64>)>, width: f64) -> BTreeMap<Vec<i64>, Bin> {
    let mut bins: BTreeMap<Vec<i64>, Bin> = BTreeMap::new();
    for (w, c) in values {
        let key = c.iter().map(|v| (v / width).round() as i64).collect();
        let b = bins.entry(key).or_default();
        if b.sum.is_empty() {
            b.sum = vec![0.0; c.len()];
        }
        b.weight += w;
        for (s, v) in b.sum.iter_mut().zip(&c) {
            *s += w * v;
        }
    }
    bins
}

/// Histogram Young measure of the tail (last half) of a sequence of fields.
///
/// Per window, strains at or below the cutoff form the oscillation atoms
/// (bin means, lattice width = data range / bins); cells above it enter the
/// oscillation part as `δ₀` and their mass `Σ|𝓔u|·vol`, averaged over the
/// tail, becomes concentration density with binned unit directions. Surface
/// and point atoms of the fields become concentration atoms.
pub fn empirical_ym(seq: &[DisplacementField], opts: &EmpiricalOptions) -> Result<YoungMeasure> {
    let Some(first) = seq.first() else {
        return invalid("empty sequence");
    };
    let grid = first.grid().clone();
    if seq.iter().any(|u| u.grid() != &grid) {
        return invalid("all fields must share a grid");
    }
    if opts.window == 0 || opts.bins == 0 || !(opts.cutoff_factor > 0.0) {
        return invalid("window, bins and cutoff factor must be positive");
    }
    let d = grid.dim();
    let cells_per_axis: Vec<usize> = grid.n().iter().map(|n| n - 1).collect();
    if cells_per_axis.iter().any(|c| c % opts.window != 0) {
        return invalid("window must divide the cell count on every axis");
    }
    let tail = &seq[seq.len() / 2..];
    let pooled = tail.len() as f64;
    let measures: Vec<SymMeasure> = tail.iter().map(assemble_symmetrized_measure).collect::<Result<_>>()?;

    let mut norms: Vec<f64> = measures.iter().flat_map(|m| m.density().iter().map(SymMatrix::norm)).collect();
    norms.sort_by(f64::total_cmp);
    let median = norms[norms.len() / 2];
    let cutoff = opts.cutoff_factor * median;
    let exceeds = |m: &SymMatrix| m.norm() > cutoff && m.norm() > 0.0;

    let mut range: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in 0..SymMatrix::coord_len(d) {
        let vals = measures
            .iter()
            .flat_map(|m| m.density().iter().filter(|e| !exceeds(e)).map(move |e| e.to_coords()[k]));
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if hi >= lo {
            range = range.max(hi - lo);
            scale = scale.max(lo.abs()).max(hi.abs());
        }
    }
    // rounding noise in constant strains must not split a bin
    let width = (range / opts.bins as f64).max(1e-9 * (1.0 + scale));
    let sphere_width = 2.0 / opts.bins as f64;

    // windows in cell-multi-index order
    let wcount: Vec<usize> = cells_per_axis.iter().map(|c| c / opts.window).collect();
    let n_windows: usize = wcount.iter().product();
    let vol = grid.cell_volume();
    let window_cells = |w: usize| -> Vec<usize> {
        let mut wm = vec![0; d];
        let mut r = w;
        for k in (0..d).rev() {
            wm[k] = r % wcount[k];
            r /= wcount[k];
        }
        let per = opts.window.pow(d as u32);
        (0..per)
            .map(|i| {
                let mut r = i;
                let mut m = vec![0; d];
                for k in (0..d).rev() {
                    m[k] = wm[k] * opts.window + r % opts.window;
                    r /= opts.window;
                }
                grid.cell_index(&m)
            })
            .collect()
    };

    type WindowOut = (Vec<usize>, Vec<Atom>, f64, Vec<Atom>);
    let windows: Vec<WindowOut> = (0..n_windows)
        .into_par_iter()
        .map(|w| {
            let cells = window_cells(w);
            let total = cells.len() as f64 * pooled;
            let mut regular = Vec::new();
            let mut conc = Vec::new();
            for m in &measures {
                for &c in &cells {
                    let e = &m.density()[c];
                    if exceeds(e) {
                        conc.push(e.clone());
                    } else {
                        regular.push(e.to_coords());
                    }
                }
            }
            let mut osc: Vec<Atom> = binned(regular.into_iter().map(|c| (1.0, c)), width)
                .into_values()
                .map(|b| Atom::new(b.weight / total, SymMatrix::from_coords(d, &b.sum.iter().map(|s| s / b.weight).collect::<Vec<_>>())))
                .collect();
            if !conc.is_empty() {
                osc.push(Atom::new(conc.len() as f64 / total, SymMatrix::zeros(d)));
            }
            let mass: f64 = conc.iter().map(SymMatrix::norm).sum();
            let density = mass * vol / pooled / (cells.len() as f64 * vol);
            let sphere: Vec<Atom> = if mass > 0.0 {
                binned(conc.iter().map(|e| (e.norm(), e.scaled(1.0 / e.norm()).to_coords())), sphere_width)
                    .into_values()
                    .map(|b| {
                        let m = SymMatrix::from_coords(d, &b.sum);
                        Atom::new(b.weight / mass, m.scaled(1.0 / m.norm()))
                    })
                    .collect()
            } else {
                Vec::new()
            };
            (cells, osc, density, sphere)
        })
        .collect();

    let nc = grid.cell_count();
    let mut osc = vec![Vec::new(); nc];
    let mut conc_density = vec![0.0; nc];
    let mut sphere = vec![Vec::new(); nc];
    for (cells, o, dens, s) in windows {
        for c in cells {
            osc[c] = o.clone();
            conc_density[c] = dens;
            sphere[c] = s.clone();
        }
    }

    let mut conc_atoms = Vec::new();
    for m in &measures {
        for a in m.surface_atoms() {
            let n = a.amplitude.norm();
            if n > 0.0 {
                conc_atoms.push(ConcAtom {
                    support: ConcSupport::Surface(a.surface.clone()),
                    mass: n * a.surface.measure() / pooled,
                    sphere: vec![Atom::new(1.0, a.amplitude.scaled(1.0 / n))],
                });
            }
        }
        for a in m.point_atoms() {
            let n = a.matrix.norm();
            if n > 0.0 {
                conc_atoms.push(ConcAtom {
                    support: ConcSupport::Point(a.location.clone()),
                    mass: n / pooled,
                    sphere: vec![Atom::new(1.0, a.matrix.scaled(1.0 / n))],
                });
            }
        }
    }
    YoungMeasure::new(grid, osc, conc_density, conc_atoms, sphere)
}
