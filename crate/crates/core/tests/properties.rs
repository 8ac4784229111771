use bdlab_core::fields::{assemble_symmetrized_measure, doubling_scan, DisplacementField, Grid, JumpInterface, SymMeasure};
use bdlab_core::functional::mollify::Mollified;
use bdlab_core::functional::evaluate_functional;
use bdlab_core::integrands::Integrand;
use bdlab_core::symtensor::{classify_dyad, sym_dyad, DyadTag, SymMatrix, DEFAULT_DYAD_TOL};
use bdlab_core::youngmeasures::{barycenter, elementary_ym, jensen_check, laminate_ym, pair_duality, staircase_average, JensenSite, JensenVerdict};
use proptest::prelude::*;

fn vec2() -> impl Strategy<Value = [f64; 2]> {
    [-2.0f64..2.0, -2.0f64..2.0]
}

fn field_with_jump(xv: f64, jump: [f64; 2], c: f64) -> DisplacementField {
    let grid = Grid::cube(2, 0.0, 1.0, 13).unwrap();
    let j = JumpInterface::segment([xv, 0.0], [xv, 1.0], jump.to_vec()).unwrap();
    DisplacementField::from_fn(
        grid,
        |x| {
            let s = if j.is_plus_side(x) { 1.0 } else { 0.0 };
            vec![c * x[1].sin() + s * jump[0], c * x[0] * x[1] + s * jump[1]]
        },
        vec![j.clone()],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dyads_classify_and_reconstruct(a in vec2(), b in vec2()) {
        let m = sym_dyad(&a, &b).unwrap();
        prop_assume!(m.norm() > 1e-3);
        // |a⊙b|² = (|a|²|b|² + (a·b)²)/2
        let (aa, bb, ab) = (a[0] * a[0] + a[1] * a[1], b[0] * b[0] + b[1] * b[1], a[0] * b[0] + a[1] * b[1]);
        prop_assert!((m.norm_sq() - 0.5 * (aa * bb + ab * ab)).abs() < 1e-12 * (1.0 + aa * bb));
        let c = classify_dyad(&m, DEFAULT_DYAD_TOL).unwrap();
        prop_assert!(matches!(c.tag, DyadTag::RankOneDyad | DyadTag::OppositeSignDyad));
        prop_assert!(c.reconstruct().unwrap().max_abs_diff(&m) < 1e-10 * (1.0 + m.norm()));
    }

    #[test]
    fn rigid_fields_have_no_strain(u0 in vec2(), w in -3.0f64..3.0) {
        let grid = Grid::cube(2, -1.0, 1.0, 9).unwrap();
        let u = DisplacementField::from_fn(grid, |x| vec![u0[0] - w * x[1], u0[1] + w * x[0]], vec![]).unwrap();
        prop_assert!(assemble_symmetrized_measure(&u).unwrap().total_variation() < 1e-12);
    }

    #[test]
    fn norm_functional_is_homogeneous(xv in 0.3f64..0.7, jump in vec2(), c in -1.0f64..1.0, s in -3.0f64..3.0) {
        let u = field_with_jump(xv, jump, c);
        let scaled = DisplacementField::new(
            u.grid().clone(),
            u.values().iter().map(|v| s * v).collect(),
            vec![JumpInterface::segment([xv, 0.0], [xv, 1.0], vec![s * jump[0], s * jump[1]]).unwrap()],
        ).unwrap();
        let f = Integrand::norm(2);
        let a = evaluate_functional(&f, &u, true).unwrap().total;
        let b = evaluate_functional(&f, &scaled, true).unwrap().total;
        prop_assert!((b - s.abs() * a).abs() < 1e-9 * (1.0 + b.abs()));
    }

    #[test]
    fn elementary_measure_pairs_like_the_functional(xv in 0.3f64..0.7, jump in vec2(), c in -1.0f64..1.0) {
        let u = field_with_jump(xv, jump, c);
        let mu = assemble_symmetrized_measure(&u).unwrap();
        let nu = elementary_ym(&mu);
        let back = barycenter(&nu);
        for (p, q) in mu.density().iter().zip(back.density()) {
            prop_assert!(p.max_abs_diff(q) < 1e-14);
        }
        for f in [Integrand::norm(2), Integrand::area(2)] {
            let pair = pair_duality(&f, &nu).unwrap().total;
            let direct = evaluate_functional(&f, &u, false).unwrap().total;
            prop_assert!((pair - direct).abs() < 1e-12 * (1.0 + direct));
        }
    }

    #[test]
    fn convex_integrands_satisfy_jensen_on_laminates(a in vec2(), b in vec2(), base in prop::collection::vec(-1.0f64..1.0, 3), theta in 0.05f64..0.95) {
        let d = sym_dyad(&a, &b).unwrap();
        prop_assume!(d.norm() > 1e-3);
        let grid = Grid::cube(2, 0.0, 1.0, 3).unwrap();
        let m = SymMatrix::from_coords(2, &base);
        let nu = laminate_ym(&grid, &(&m + &d), &m, theta).unwrap();
        for h in [Integrand::norm(2), Integrand::area(2), Integrand::shifted_norm(m.clone())] {
            let r = jensen_check(&nu, &h, JensenSite::Cell(0)).unwrap();
            prop_assert_eq!(r.verdict, JensenVerdict::Holds);
        }
    }

    #[test]
    fn mollification_preserves_jump_mass(xv in 0.35f64..0.65, jump in vec2(), delta in 0.08f64..0.2) {
        // a step mollified in the normal direction keeps |jump⊙e₁|·length
        let grid = Grid::cube(2, 0.0, 1.0, 41).unwrap();
        let j = JumpInterface::segment([xv, 0.0], [xv, 1.0], jump.to_vec()).unwrap();
        let u = DisplacementField::from_fn(grid, |x| if j.is_plus_side(x) { jump.to_vec() } else { vec![0.0, 0.0] }, vec![j.clone()]).unwrap();
        let m = Mollified::new(&u, delta).unwrap();
        let mass = m.integrate(|_, e| e.norm());
        let expected = sym_dyad(&jump, &[1.0, 0.0]).unwrap().norm();
        prop_assert!((mass - expected).abs() < 1e-9 * (1.0 + expected));
    }

    #[test]
    fn lebesgue_doubling_is_t_squared(x0 in vec2(), r in 0.01f64..0.1, t in 1.5f64..4.0) {
        let grid = Grid::cube(2, -3.0, 3.0, 13).unwrap();
        let mu = SymMeasure::lebesgue(grid, &SymMatrix::identity(2)).unwrap();
        let rep = doubling_scan(&mu, &[x0[0] * 0.5, x0[1] * 0.5], t, &[r]).unwrap();
        prop_assert!((rep.rows[0].ratio - t * t).abs() < 1e-10 * t * t);
    }

    #[test]
    fn affine_cells_tile_without_error(q1 in -1.0f64..1.0, q2 in -1.0f64..1.0, n in 1usize..5) {
        // v = q₁x₁e₂ + q₂x₂e₁ already has the face increments q₁b and q₂a
        let cell = Grid::cube(2, -0.5, 0.5, 5).unwrap();
        let v = DisplacementField::from_fn(cell, |x| vec![q2 * x[1], q1 * x[0]], vec![]).unwrap();
        let r = staircase_average(&v, [1.0, 0.0], [0.0, 1.0], q1, q2, n).unwrap();
        prop_assert!(r.gluing_mass < 1e-12);
        prop_assert!(r.dist_to_affine < 1e-12);
    }
}
