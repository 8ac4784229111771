//! `bdlab`: command-line driver for the bdlab experiments.
//!
//! Exit status: 0 on success, 1 on input errors, 2 when a verdict fails.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use bdlab_core::fields::{assemble_symmetrized_measure, doubling_scan, DisplacementField, Grid, SymMeasure};
use bdlab_core::functional::{
    evaluate_functional, lsc_experiment, minimize_functional, strict_continuity_experiment, MinimizeOptions, SequenceSpec,
};
use bdlab_core::functional::experiments::Verdict;
use bdlab_core::integrands::{cell_problem_min, parse_integrand, CellOptions, FieldFn, Integrand, ProfileFn};
use bdlab_core::rigidity2d::{
    classify_inclusion, projection_range, sample_nodes, solve_degenerate, solve_elliptic, solve_opposite_sign, InclusionTag,
    Profile1D,
};
use bdlab_core::symtensor::{classify_dyad, sym_eigen, DEFAULT_DYAD_TOL};
use bdlab_core::youngmeasures::{
    elementary_ym, jensen_check, staircase_average, JensenSite, JensenVerdict, YoungMeasure,
};
use bdlab_core::{Error as CoreError, SymMatrix};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use report::Report;

#[derive(Parser)]
#[command(name = "bdlab", version, about = "Experiments on functions of bounded deformation and their symmetrized gradients")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance override (classify: dyad eigenvalue tolerance).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for report JSON, CSV tables and output fields.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether a symmetric matrix is a symmetric tensor product a⊙b and
    /// print witnesses.
    Classify {
        /// Matrix as JSON rows, e.g. '[[0,1],[1,0]]'.
        #[arg(long)]
        matrix: String,
    },
    /// Solve the differential inclusion 𝓔u = P g in the plane for the case
    /// selected by the eigenvalue signs of P.
    Rigidity(RigidityArgs),
    /// Search for a violation of symmetric quasiconvexity with the periodic
    /// cell problem at a fixed matrix.
    QcTest {
        #[arg(long, allow_hyphen_values = true)]
        integrand: String,
        /// Matrix A as JSON rows.
        #[arg(long)]
        at: String,
        /// Nodes per axis of the unit cell.
        #[arg(long, default_value_t = 33)]
        grid: usize,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 2)]
        starts: usize,
    },
    /// Evaluate the linear-growth functional with its bulk, jump and boundary
    /// parts on a field.
    Evaluate {
        /// Field JSON file.
        #[arg(long)]
        field: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        integrand: String,
        #[arg(long)]
        no_boundary: bool,
    },
    /// Minimize the relaxed functional with boundary penalty over nodal fields.
    Minimize(MinimizeArgs),
    /// Lower semicontinuity along a sequence: compare liminf F(u_j) with F(u).
    LscDemo {
        /// Sequence specification JSON file.
        #[arg(long)]
        sequence: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        integrand: String,
    },
    /// Continuity along strictly converging mollifications u_δ → u.
    StrictDemo {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        integrand: String,
        /// Strictly decreasing radii, comma separated.
        #[arg(long, default_value = "0.2,0.1,0.05")]
        deltas: String,
    },
    /// Jensen-type inequalities for a generalized Young measure, at cells and
    /// at concentration atoms.
    Jensen {
        /// Young measure JSON file.
        #[arg(long, conflicts_with = "field", required_unless_present = "field")]
        ym: Option<PathBuf>,
        /// Field JSON file; its elementary Young measure is checked.
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        integrand: String,
        /// `all`, `cell:K` or `atom:K`.
        #[arg(long, default_value = "all")]
        site: String,
    },
    /// Tile a cell field into a staircase approximating the affine map of its
    /// face increments.
    Staircase {
        /// Cell field JSON file.
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value = "1,0")]
        a: String,
        #[arg(long, default_value = "0,1")]
        b: String,
        #[arg(long, default_value_t = 0.0)]
        q1: f64,
        #[arg(long, default_value_t = 0.0)]
        q2: f64,
        /// Tiling levels, comma separated.
        #[arg(long, default_value = "1,2,4,8")]
        n: String,
    },
    /// Doubling ratios |μ|(B(x₀, t r)) / |μ|(B(x₀, r)) of a symmetrized
    /// gradient measure.
    Doubling {
        #[arg(long, conflicts_with = "measure", required_unless_present = "measure")]
        field: Option<PathBuf>,
        /// Measure JSON file.
        #[arg(long)]
        measure: Option<PathBuf>,
        /// Centre, comma separated.
        #[arg(long)]
        x0: String,
        #[arg(long, default_value_t = 2.0)]
        t: f64,
        #[arg(long, default_value = "0.2,0.1,0.05")]
        radii: String,
    },
}

#[derive(Args)]
struct RigidityArgs {
    /// P as JSON rows.
    #[arg(long)]
    matrix: String,
    /// Nodes per axis.
    #[arg(long, default_value_t = 33)]
    grid: usize,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    /// Elliptic case: g in x[0], x[1].
    #[arg(long)]
    g: Option<String>,
    /// Opposite-sign case: profiles in t along the two witness directions.
    #[arg(long, default_value = "0")]
    h1: String,
    #[arg(long, default_value = "0")]
    h2: String,
    /// Degenerate case P = diag(λ, 0): g = h(x₁) + p(x₁)·x₂, profiles in t.
    #[arg(long, default_value = "0")]
    h: String,
    #[arg(long, default_value = "0")]
    p: String,
}

#[derive(Args)]
struct MinimizeArgs {
    #[arg(long, allow_hyphen_values = true)]
    integrand: String,
    /// Nodes per axis of the square [lo, hi]².
    #[arg(long, default_value_t = 9)]
    grid: usize,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    /// Boundary datum as `expr1;expr2` in x[0], x[1].
    #[arg(long)]
    dirichlet: Option<String>,
    #[arg(long)]
    no_boundary: bool,
    /// Constant m in m(|A| − 1) ≤ f.
    #[arg(long, default_value_t = 1.0)]
    coercivity: f64,
    #[arg(long, default_value_t = 300)]
    iters: usize,
    #[arg(long, default_value_t = 1)]
    starts: usize,
}

enum Outcome {
    Ok,
    Fail,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let c = cli.common;
    if let Some(t) = c.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let out = c.out.as_deref();
    match cli.cmd {
        Cmd::Classify { matrix } => classify(&matrix, c.tol, out),
        Cmd::Rigidity(a) => rigidity(&a, out),
        Cmd::QcTest { integrand, at, grid, iters, starts } => qc_test(&integrand, &at, grid, iters, starts, c.seed, out),
        Cmd::Evaluate { field, integrand, no_boundary } => {
            let u = read_field(&field)?;
            let f = integrand_for(&integrand, u.dim())?;
            let b = evaluate_functional(&f, &u, !no_boundary)?;
            let rows = vec![vec![b.bulk, b.singular, b.boundary, b.total]];
            Report::new("evaluate", &b)?.table(vec!["bulk", "singular", "boundary", "total"], rows).emit(out)?;
            Ok(Outcome::Ok)
        }
        Cmd::Minimize(a) => minimize(&a, c.seed, out),
        Cmd::LscDemo { sequence, integrand } => {
            let spec: SequenceSpec = read_json(&sequence)?;
            let f = integrand_for(&integrand, 2)?;
            let r = lsc_experiment(&f, &spec)?;
            let rows = r.trajectory.iter().map(|t| vec![t.j as f64, t.f_uj, t.area_uj]).collect();
            Report::new("lsc", &r)?.table(vec!["j", "F_uj", "area_uj"], rows).emit(out)?;
            Ok(if r.verdict == Verdict::Fail { Outcome::Fail } else { Outcome::Ok })
        }
        Cmd::StrictDemo { field, integrand, deltas } => {
            let u = read_field(&field)?;
            let f = integrand_for(&integrand, u.dim())?;
            let r = strict_continuity_experiment(&f, &u, &floats(&deltas)?)?;
            let rows = r.trajectory.iter().map(|t| vec![t.delta, t.area_delta, t.f_delta, t.area_gap, t.f_gap]).collect();
            Report::new("strict", &r)?
                .table(vec!["delta", "area_delta", "F_delta", "area_gap", "F_gap"], rows)
                .emit(out)?;
            Ok(Outcome::Ok)
        }
        Cmd::Jensen { ym, field, integrand, site } => jensen(ym.as_deref(), field.as_deref(), &integrand, &site, out),
        Cmd::Staircase { field, a, b, q1, q2, n } => {
            let v = read_field(&field)?;
            let (a, b) = (pair(&a)?, pair(&b)?);
            let ns: Vec<usize> = n.split(',').map(|s| s.trim().parse()).collect::<std::result::Result<_, _>>().context("--n")?;
            let mut rows = Vec::new();
            let mut last = None;
            for &k in &ns {
                let r = staircase_average(&v, a, b, q1, q2, k)?;
                rows.push(vec![k as f64, r.dist_to_affine, r.gluing_mass]);
                last = Some(r);
            }
            let last = last.ok_or_else(|| anyhow!("--n is empty"))?;
            let body = json!({
                "target": last.target,
                "target_sym": last.target_sym,
                "rows": rows.iter().map(|r| json!({"n": r[0] as usize, "dist_to_affine": r[1], "gluing_mass": r[2]})).collect::<Vec<_>>(),
            });
            Report::new("staircase", &body)?
                .table(vec!["n", "dist_to_affine", "gluing_mass"], rows)
                .attach("staircase_field.json", &last.u)?
                .emit(out)?;
            Ok(Outcome::Ok)
        }
        Cmd::Doubling { field, measure, x0, t, radii } => {
            let mu: SymMeasure = match (field, measure) {
                (Some(f), _) => assemble_symmetrized_measure(&read_field(&f)?)?,
                (None, Some(m)) => read_json(&m)?,
                (None, None) => bail!("one of --field or --measure is required"),
            };
            let r = doubling_scan(&mu, &floats(&x0)?, t, &floats(&radii)?)?;
            let rows = r.rows.iter().map(|w| vec![w.r, w.mass_r, w.mass_tr, w.ratio]).collect();
            Report::new("doubling", &r)?.table(vec!["r", "mass_r", "mass_tr", "ratio"], rows).emit(out)?;
            Ok(Outcome::Ok)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T> {
    let s = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
    serde_json::from_str(&s).with_context(|| format!("malformed JSON in {}", p.display()))
}

fn read_field(p: &Path) -> Result<DisplacementField> {
    read_json(p)
}

fn matrix(s: &str) -> Result<SymMatrix> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(s).with_context(|| format!("malformed matrix JSON `{s}`"))?;
    Ok(SymMatrix::from_rows(&rows, 1e-12)?)
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("not a number: `{t}`")))
        .collect()
}

fn pair(s: &str) -> Result<[f64; 2]> {
    match floats(s)?[..] {
        [a, b] => Ok([a, b]),
        _ => bail!("expected two comma-separated numbers, got `{s}`"),
    }
}

fn integrand_for(src: &str, dim: usize) -> Result<Integrand> {
    parse_integrand(src, dim).with_context(|| format!("integrand `{src}`"))
}

fn classify(m: &str, tol: Option<f64>, out: Option<&Path>) -> Result<Outcome> {
    let m = matrix(m)?;
    let c = classify_dyad(&m, tol.unwrap_or(DEFAULT_DYAD_TOL))?;
    let eig = sym_eigen(&m);
    let body = json!({
        "tag": c.tag,
        "a": c.a,
        "b": c.b,
        "sign": c.sign,
        "eigenvalues": eig.values,
        "reconstruction_error": c.reconstruct().map(|r| r.max_abs_diff(&m)),
    });
    Report::new("classify", &body)?.emit(out)?;
    Ok(Outcome::Ok)
}

fn rigidity(a: &RigidityArgs, out: Option<&Path>) -> Result<Outcome> {
    let p = matrix(&a.matrix)?;
    let grid = Grid::cube(2, a.lo, a.hi, a.grid)?;
    let case = classify_inclusion(&p)?;
    let samples = 4 * a.grid;
    let profile = |src: &str, lo: f64, hi: f64| -> Result<Profile1D> {
        let f = ProfileFn::parse(src).with_context(|| format!("profile `{src}`"))?;
        Ok(Profile1D::sample(|t| f.eval(t), lo, hi, samples)?)
    };
    let (u, body) = match case.tag {
        InclusionTag::Trivial => (DisplacementField::zeros(grid), json!({"case": case, "residual": 0.0})),
        InclusionTag::OppositeSign => {
            let c = classify_dyad(&p, DEFAULT_DYAD_TOL)?;
            let (wa, wb) = (c.a.expect("dyad witness"), c.b.expect("dyad witness"));
            let (a0, a1) = projection_range(&grid, &wa);
            let (b0, b1) = projection_range(&grid, &wb);
            let s = solve_opposite_sign(&p, &profile(&a.h1, a0, a1)?, &profile(&a.h2, b0, b1)?, &grid)?;
            (s.u, json!({"case": case, "a": wa, "b": wb, "residual": s.residual}))
        }
        InclusionTag::Degenerate => {
            if p.get(0, 1) != 0.0 || p.get(1, 1) != 0.0 {
                bail!("degenerate P must be given as diag(λ, 0)");
            }
            let s = solve_degenerate(p.get(0, 0), &profile(&a.h, a.lo, a.hi)?, &profile(&a.p, a.lo, a.hi)?, &grid)?;
            (s.u, json!({"case": case, "residual": s.residual}))
        }
        InclusionTag::Elliptic => {
            let src = a.g.as_deref().ok_or_else(|| anyhow!("elliptic P needs --g"))?;
            let g = FieldFn::parse(src, 2).with_context(|| format!("g `{src}`"))?;
            match solve_elliptic(&p, &sample_nodes(&grid, |x| g.eval(x)), &grid) {
                Ok(s) => (
                    s.u,
                    json!({"case": case, "residual_pde": s.residual_pde, "residual_incl": s.residual_incl, "tol": s.tol, "verdict": "SOLVABLE"}),
                ),
                Err(CoreError::NotSolvable { residual, tol }) => {
                    let body = json!({"case": case, "residual_pde": residual, "tol": tol, "verdict": "NOT_SOLVABLE"});
                    Report::new("rigidity", &body)?.emit(out)?;
                    return Ok(Outcome::Fail);
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    Report::new("rigidity", &body)?.attach("rigidity_field.json", &u)?.emit(out)?;
    Ok(Outcome::Ok)
}

fn qc_test(src: &str, at: &str, n: usize, iters: usize, starts: usize, seed: u64, out: Option<&Path>) -> Result<Outcome> {
    let a = matrix(at)?;
    let h = integrand_for(src, a.dim())?;
    let cell = Grid::cube(a.dim(), 0.0, 1.0, n)?;
    let opts = CellOptions {
        iters,
        random_starts: starts,
        seed,
        ..Default::default()
    };
    let r = cell_problem_min(&h, &a, &cell, &opts)?;
    let body = json!({
        "h_at_a": r.h_at_a,
        "min_mean": r.min_mean,
        "tol": r.tol,
        "verdict": if r.violation { "violation" } else { "none" },
        "best_start": r.best_start,
        "starts": r.starts,
    });
    let rows = r.starts.iter().enumerate().map(|(k, s)| vec![k as f64, s.initial_mean, s.final_mean]).collect();
    Report::new("qc", &body)?
        .table(vec!["start", "initial_mean", "final_mean"], rows)
        .attach("qc_psi.json", &r.psi)?
        .emit(out)?;
    Ok(if r.violation { Outcome::Fail } else { Outcome::Ok })
}

fn minimize(a: &MinimizeArgs, seed: u64, out: Option<&Path>) -> Result<Outcome> {
    let grid = Grid::cube(2, a.lo, a.hi, a.grid)?;
    let f = integrand_for(&a.integrand, 2)?;
    let dirichlet = match &a.dirichlet {
        None => None,
        Some(s) => {
            let parts: Vec<&str> = s.split(';').collect();
            if parts.len() != 2 {
                bail!("--dirichlet needs two expressions separated by `;`");
            }
            let g: Vec<FieldFn> = parts.iter().map(|p| FieldFn::parse(p, 2)).collect::<std::result::Result<_, _>>()?;
            Some((0..grid.node_count()).flat_map(|k| {
                let x = grid.node_coord(k);
                [g[0].eval(&x), g[1].eval(&x)]
            }).collect())
        }
    };
    let opts = MinimizeOptions {
        coercivity_m: a.coercivity,
        dirichlet,
        include_boundary: !a.no_boundary,
        iters: a.iters,
        random_starts: a.starts,
        seed,
        competitors: Vec::new(),
    };
    let r = minimize_functional(&f, &grid, &opts)?;
    let body = json!({
        "bulk": r.breakdown.bulk,
        "singular": r.breakdown.singular,
        "boundary": r.breakdown.boundary,
        "total": r.breakdown.total,
        "best_start": r.best_start,
        "stagnated": r.stagnated,
        "starts": r.starts,
    });
    let rows = r.starts.iter().enumerate().map(|(k, s)| vec![k as f64, s.initial_total, s.final_total, s.iterations as f64]).collect();
    Report::new("minimize", &body)?
        .table(vec!["start", "initial_total", "final_total", "iterations"], rows)
        .attach("minimize_field.json", &r.u)?
        .emit(out)?;
    Ok(Outcome::Ok)
}

fn parse_site(s: &str) -> Result<JensenSite> {
    let (kind, k) = s.split_once(':').ok_or_else(|| anyhow!("site must be `cell:K` or `atom:K`, got `{s}`"))?;
    let k: usize = k.parse().with_context(|| format!("site index `{k}`"))?;
    match kind {
        "cell" => Ok(JensenSite::Cell(k)),
        "atom" => Ok(JensenSite::Atom(k)),
        _ => bail!("site must be `cell:K` or `atom:K`, got `{s}`"),
    }
}

fn jensen(ym: Option<&Path>, field: Option<&Path>, src: &str, site: &str, out: Option<&Path>) -> Result<Outcome> {
    let nu: YoungMeasure = match (ym, field) {
        (Some(p), _) => read_json(p)?,
        (None, Some(f)) => elementary_ym(&assemble_symmetrized_measure(&read_field(f)?)?),
        (None, None) => bail!("one of --ym or --field is required"),
    };
    let h = integrand_for(src, nu.grid().dim())?;
    let sites: Vec<JensenSite> = if site == "all" {
        (0..nu.grid().cell_count())
            .map(JensenSite::Cell)
            .chain((0..nu.conc_atoms().len()).map(JensenSite::Atom))
            .collect()
    } else {
        vec![parse_site(site)?]
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut fails = 0usize;
    let mut min_gap = f64::INFINITY;
    for s in sites {
        let r = jensen_check(&nu, &h, s)?;
        let (kind, k) = match s {
            JensenSite::Cell(k) => (0.0, k),
            JensenSite::Atom(k) => (1.0, k),
        };
        rows.push(vec![kind, k as f64, r.lhs, r.rhs, r.gap]);
        if r.verdict == JensenVerdict::Fails {
            fails += 1;
        }
        min_gap = min_gap.min(r.gap);
        reports.push(json!({"site": s, "report": r}));
    }
    let verdict = if fails > 0 { JensenVerdict::Fails } else { JensenVerdict::Holds };
    let body = json!({"verdict": verdict, "failures": fails, "min_gap": min_gap, "sites": reports});
    Report::new("jensen", &body)?
        .table(vec!["is_atom", "index", "lhs", "rhs", "gap"], rows)
        .emit(out)?;
    Ok(if fails > 0 { Outcome::Fail } else { Outcome::Ok })
}
