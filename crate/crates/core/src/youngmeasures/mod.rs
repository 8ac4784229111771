//! Generalized Young measures on a grid: oscillation atoms per cell, a
//! concentration measure with a density part and surface/point atoms, and
//! unit-sphere atoms describing the concentration directions.

pub mod empirical;
pub mod staircase;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{Grid, PointAtom, Surface, SurfaceAtom, SymMeasure};
use crate::functional::{surface_term, RecessionCache};
use crate::integrands::{recession, Integrand, Ladder, RecessionMode};
use crate::symtensor::{classify_dyad, DyadTag, SymMatrix, DEFAULT_DYAD_TOL};

pub use empirical::{empirical_ym, EmpiricalOptions};
pub use staircase::{staircase_average, StaircaseResult};

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub matrix: SymMatrix,
}

impl Atom {
    pub fn new(weight: f64, matrix: SymMatrix) -> Self {
        Self { weight, matrix }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConcSupport {
    /// `λ` restricted here is `mass/H^{d−1}(S) · H^{d−1}⌞S`.
    Surface(Surface),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcAtom {
    pub support: ConcSupport,
    pub mass: f64,
    pub sphere: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "YoungRepr")]
pub struct YoungMeasure {
    grid: Grid,
    osc: Vec<Vec<Atom>>,
    conc_density: Vec<f64>,
    conc_atoms: Vec<ConcAtom>,
    /// Sphere atoms for the density part of `λ`, per cell; empty where the
    /// density vanishes.
    sphere: Vec<Vec<Atom>>,
}

#[derive(Deserialize)]
struct YoungRepr {
    grid: Grid,
    osc: Vec<Vec<Atom>>,
    conc_density: Vec<f64>,
    conc_atoms: Vec<ConcAtom>,
    sphere: Vec<Vec<Atom>>,
}

impl TryFrom<YoungRepr> for YoungMeasure {
    type Error = Error;
    fn try_from(r: YoungRepr) -> Result<Self> {
        YoungMeasure::new(r.grid, r.osc, r.conc_density, r.conc_atoms, r.sphere)
    }
}

fn check_probability(atoms: &[Atom], unit: bool, what: &str) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::InvalidInput(format!("{what}: empty atom list")));
    }
    let mut total = 0.0;
    for a in atoms {
        if !(a.weight >= 0.0) || !a.matrix.is_finite() {
            return Err(Error::InvalidInput(format!("{what}: weights must be non-negative and atoms finite")));
        }
        if unit && (a.matrix.norm() - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidInput(format!("{what}: sphere atom has norm {}", a.matrix.norm())));
        }
        total += a.weight;
    }
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidInput(format!("{what}: weights sum to {total}")));
    }
    Ok(())
}

fn mean(atoms: &[Atom], d: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(d);
    for a in atoms {
        m += &a.matrix.scaled(a.weight);
    }
    m
}

impl YoungMeasure {
    pub fn new(
        grid: Grid,
        osc: Vec<Vec<Atom>>,
        conc_density: Vec<f64>,
        conc_atoms: Vec<ConcAtom>,
        sphere: Vec<Vec<Atom>>,
    ) -> Result<Self> {
        let (nc, d) = (grid.cell_count(), grid.dim());
        if osc.len() != nc || conc_density.len() != nc || sphere.len() != nc {
            return Err(Error::DimensionMismatch {
                expected: nc,
                got: osc.len().min(conc_density.len()).min(sphere.len()),
            });
        }
        for (c, atoms) in osc.iter().enumerate() {
            check_probability(atoms, false, &format!("osc[{c}]"))?;
            if atoms.iter().any(|a| a.matrix.dim() != d) {
                return invalid("atom dimension differs from the grid");
            }
        }
        for (c, (&m, s)) in conc_density.iter().zip(&sphere).enumerate() {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::InvalidInput(format!("conc_density[{c}] = {m}")));
            }
            if m > 0.0 || !s.is_empty() {
                check_probability(s, true, &format!("sphere[{c}]"))?;
            }
        }
        for (k, a) in conc_atoms.iter().enumerate() {
            if !(a.mass >= 0.0 && a.mass.is_finite()) {
                return Err(Error::InvalidInput(format!("conc_atoms[{k}]: mass {}", a.mass)));
            }
            check_probability(&a.sphere, true, &format!("conc_atoms[{k}]"))?;
            if let ConcSupport::Surface(s) = &a.support {
                if s.measure() <= 0.0 {
                    return Err(Error::InvalidInput(format!("conc_atoms[{k}]: degenerate support")));
                }
            }
        }
        Ok(Self {
            grid,
            osc,
            conc_density,
            conc_atoms,
            sphere,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn osc(&self) -> &[Vec<Atom>] {
        &self.osc
    }

    pub fn conc_density(&self) -> &[f64] {
        &self.conc_density
    }

    pub fn conc_atoms(&self) -> &[ConcAtom] {
        &self.conc_atoms
    }

    pub fn sphere(&self) -> &[Vec<Atom>] {
        &self.sphere
    }

    /// Total mass of `λ`.
    pub fn conc_mass(&self) -> f64 {
        self.conc_density.iter().sum::<f64>() * self.grid.cell_volume() + self.conc_atoms.iter().map(|a| a.mass).sum::<f64>()
    }
}

/// `ε_μ`: `δ` at the density in each cell, `λ = |μˢ|` with `δ` at the polar.
pub fn elementary_ym(mu: &SymMeasure) -> YoungMeasure {
    let grid = mu.grid().clone();
    let nc = grid.cell_count();
    let osc = mu.density().iter().map(|m| vec![Atom::new(1.0, m.clone())]).collect();
    let mut conc_atoms = Vec::new();
    for a in mu.surface_atoms() {
        let n = a.amplitude.norm();
        if n > 0.0 {
            conc_atoms.push(ConcAtom {
                support: ConcSupport::Surface(a.surface.clone()),
                mass: n * a.surface.measure(),
                sphere: vec![Atom::new(1.0, a.amplitude.scaled(1.0 / n))],
            });
        }
    }
    for a in mu.point_atoms() {
        let n = a.matrix.norm();
        if n > 0.0 {
            conc_atoms.push(ConcAtom {
                support: ConcSupport::Point(a.location.clone()),
                mass: n,
                sphere: vec![Atom::new(1.0, a.matrix.scaled(1.0 / n))],
            });
        }
    }
    YoungMeasure::new(grid, osc, vec![0.0; nc], conc_atoms, vec![Vec::new(); nc]).expect("elementary data is valid")
}

/// Homogeneous two-atom laminate `θ δ_{A₊} + (1 − θ) δ_{A₋}` with `λ = 0`.
pub fn laminate_ym(grid: &Grid, a_plus: &SymMatrix, a_minus: &SymMatrix, theta: f64) -> Result<YoungMeasure> {
    if !(theta > 0.0 && theta < 1.0) {
        return invalid("θ must lie in (0, 1)");
    }
    if a_plus.dim() != grid.dim() || a_minus.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: a_plus.dim(),
        });
    }
    let class = classify_dyad(&(a_plus - a_minus), DEFAULT_DYAD_TOL)?;
    if !matches!(class.tag, DyadTag::OppositeSignDyad | DyadTag::RankOneDyad) {
        return Err(Error::InvalidInput(format!("A₊ − A₋ is {:?}, not a symmetric dyad", class.tag)));
    }
    let nc = grid.cell_count();
    let cell = vec![Atom::new(theta, a_plus.clone()), Atom::new(1.0 - theta, a_minus.clone())];
    YoungMeasure::new(grid.clone(), vec![cell; nc], vec![0.0; nc], Vec::new(), vec![Vec::new(); nc])
}

/// Pure concentration on one surface: `ν_x = δ₀`, `λ = mass` spread over `S`.
pub fn concentration_ym(grid: &Grid, support: Surface, mass: f64, sphere: Vec<Atom>) -> Result<YoungMeasure> {
    let nc = grid.cell_count();
    let d = grid.dim();
    YoungMeasure::new(
        grid.clone(),
        vec![vec![Atom::new(1.0, SymMatrix::zeros(d))]; nc],
        vec![0.0; nc],
        vec![ConcAtom {
            support: ConcSupport::Surface(support),
            mass,
            sphere,
        }],
        vec![Vec::new(); nc],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub bulk_pairing: f64,
    pub singular_pairing: f64,
    pub total: f64,
    pub recession_mode: RecessionMode,
}

/// `⟪f, ν⟫ = ∫⟨f(x,·), ν_x⟩ dx + ∫⟨f^∞(x,·), ν^∞_x⟩ dλ`.
pub fn pair_duality(f: &Integrand, nu: &YoungMeasure) -> Result<PairingReport> {
    let grid = &nu.grid;
    if f.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: f.dim(),
        });
    }
    let vol = grid.cell_volume();
    let mut cache = RecessionCache::new(f);
    let mut bulk = 0.0;
    let mut singular = 0.0;
    for c in 0..grid.cell_count() {
        let x = grid.cell_center(c);
        let s: f64 = nu.osc[c].iter().map(|a| a.weight * f.eval(&x, &a.matrix)).sum();
        bulk += s * vol;
        let m = nu.conc_density[c];
        if m > 0.0 {
            for a in &nu.sphere[c] {
                singular += a.weight * m * vol * cache.value(&x, &a.matrix)?;
            }
        }
    }
    for atom in &nu.conc_atoms {
        for a in &atom.sphere {
            singular += a.weight
                * match &atom.support {
                    ConcSupport::Surface(s) => surface_term(&mut cache, s, &a.matrix.scaled(atom.mass / s.measure()))?,
                    ConcSupport::Point(x) => cache.weighted(x, &a.matrix.scaled(atom.mass))?,
                };
        }
    }
    Ok(PairingReport {
        bulk_pairing: bulk,
        singular_pairing: singular,
        total: bulk + singular,
        recession_mode: RecessionMode::Strong,
    })
}

/// `[ν] = ⟨id, ν_x⟩ L^d + ⟨id, ν^∞_x⟩ λ`.
pub fn barycenter(nu: &YoungMeasure) -> SymMeasure {
    let d = nu.grid.dim();
    let density = (0..nu.grid.cell_count())
        .map(|c| {
            let mut m = mean(&nu.osc[c], d);
            if nu.conc_density[c] > 0.0 {
                m += &mean(&nu.sphere[c], d).scaled(nu.conc_density[c]);
            }
            m
        })
        .collect();
    let mut surface_atoms = Vec::new();
    let mut point_atoms = Vec::new();
    for atom in &nu.conc_atoms {
        let m = mean(&atom.sphere, d);
        match &atom.support {
            ConcSupport::Surface(s) => surface_atoms.push(SurfaceAtom {
                surface: s.clone(),
                amplitude: m.scaled(atom.mass / s.measure()),
            }),
            ConcSupport::Point(x) => point_atoms.push(PointAtom {
                location: x.clone(),
                matrix: m.scaled(atom.mass),
            }),
        }
    }
    SymMeasure::new(nu.grid.clone(), density, surface_atoms, point_atoms).expect("barycenter of a valid Young measure")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JensenSite {
    /// Regular inequality at a cell.
    Cell(usize),
    /// Singular inequality at a concentration atom.
    Atom(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JensenVerdict {
    Holds,
    Fails,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub gap: f64,
    pub tol: f64,
    pub verdict: JensenVerdict,
}

fn upper_sharp(h: &Integrand, x: &[f64], a: &SymMatrix) -> Result<f64> {
    let est = recession(h, x, a, RecessionMode::UpperSharp, &Ladder::default())?;
    if !est.converged {
        return Err(Error::RecessionDiverged {
            direction: format!("{a}"),
            spread: est.spread,
        });
    }
    Ok(est.value)
}

/// Both sides of the regular or singular Jensen-type inequality for an
/// x-independent `h`, with `h^#` the upper recession function.
pub fn jensen_check(nu: &YoungMeasure, h: &Integrand, site: JensenSite) -> Result<JensenReport> {
    if h.x_dependent() {
        return invalid("Jensen checks need an x-independent integrand");
    }
    let d = nu.grid.dim();
    if h.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: h.dim() });
    }
    let x = vec![0.0; d];
    let (lhs, rhs) = match site {
        JensenSite::Cell(c) => {
            if c >= nu.grid.cell_count() {
                return Err(Error::InvalidInput(format!("cell {c} out of range")));
            }
            let lam = nu.conc_density[c];
            let mut arg = mean(&nu.osc[c], d);
            let mut rhs: f64 = nu.osc[c].iter().map(|a| a.weight * h.eval(&x, &a.matrix)).sum();
            if lam > 0.0 {
                arg += &mean(&nu.sphere[c], d).scaled(lam);
                for a in &nu.sphere[c] {
                    rhs += a.weight * lam * upper_sharp(h, &x, &a.matrix)?;
                }
            }
            (h.eval(&x, &arg), rhs)
        }
        JensenSite::Atom(k) => {
            let Some(atom) = nu.conc_atoms.get(k) else {
                return Err(Error::InvalidInput(format!("concentration atom {k} out of range")));
            };
            let lhs = upper_sharp(h, &x, &mean(&atom.sphere, d))?;
            let mut rhs = 0.0;
            for a in &atom.sphere {
                rhs += a.weight * upper_sharp(h, &x, &a.matrix)?;
            }
            (lhs, rhs)
        }
    };
    let tol = 1e-6 * (1.0 + lhs.abs() + rhs.abs());
    let gap = rhs - lhs;
    Ok(JensenReport {
        lhs,
        rhs,
        gap,
        tol,
        verdict: if gap >= -tol { JensenVerdict::Holds } else { JensenVerdict::Fails },
    })
}
