use bdlab_core::fields::Grid;
use bdlab_core::functional::experiments::Verdict;
use bdlab_core::functional::{lsc_experiment, SequenceKind, SequenceSpec};
use bdlab_core::integrands::Integrand;
use bdlab_core::symtensor::sym_dyad;
use bdlab_core::youngmeasures::{empirical_ym, pair_duality, EmpiricalOptions};

fn laminate_spec() -> SequenceSpec {
    SequenceSpec {
        kind: SequenceKind::LaminateOscillation {
            a: [1.0, 0.0],
            b: [0.0, 1.0],
            amplitude: 2.0,
        },
        js: vec![2, 4, 8, 8],
        grid: Grid::cube(2, 0.0, 1.0, 65).unwrap(),
        include_boundary: false,
    }
}

#[test]
fn laminate_sequence_generates_its_young_measure() {
    let spec = laminate_spec();
    let seq: Vec<_> = spec.js.iter().map(|&j| spec.realize(j).unwrap()).collect();
    let nu = empirical_ym(&seq, &EmpiricalOptions { window: 8, ..Default::default() }).unwrap();
    // ∇u_j = ±2 e₂⊗e₁, so ν = ½δ_P + ½δ_{−P} with P = 2 e₁⊙e₂
    let p = sym_dyad(&[1.0, 0.0], &[0.0, 2.0]).unwrap();
    for cell in nu.osc() {
        for a in cell {
            assert!((a.weight - 0.5).abs() < 0.05);
            assert!(a.matrix.max_abs_diff(&p).min(a.matrix.max_abs_diff(&p.scaled(-1.0))) < 0.1);
        }
    }
    // the limit of F(u_j) is the pairing, not F(0) = 0
    let f = Integrand::norm(2);
    let report = lsc_experiment(&f, &spec).unwrap();
    let pair = pair_duality(&f, &nu).unwrap().total;
    assert!((pair - report.liminf).abs() < 1e-9);
    assert!((pair - p.norm()).abs() < 1e-9);
    assert_eq!(report.verdict, Verdict::Pass);
}

#[test]
fn concentrating_bumps_keep_area_lower_semicontinuous() {
    let spec = SequenceSpec {
        kind: SequenceKind::Concentration {
            axis: 0,
            position: 0.5,
            jump: [1.0, 0.0],
        },
        js: vec![3, 4, 6],
        grid: Grid::cube(2, 0.0, 1.0, 51).unwrap(),
        include_boundary: false,
    };
    let r = lsc_experiment(&Integrand::area(2), &spec).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.liminf > r.f_limit);
}

#[test]
fn sequence_specs_round_trip_through_json() {
    let spec = laminate_spec();
    let s = serde_json::to_string(&spec).unwrap();
    assert!(s.contains(r#""kind":"laminate_oscillation""#));
    let back: SequenceSpec = serde_json::from_str(&s).unwrap();
    assert_eq!(back.js, spec.js);
    assert!(serde_json::from_str::<SequenceSpec>(r#"{"kind":"nope","js":[1],"grid":{"box":[[0,1],[0,1]],"n":[5,5]}}"#).is_err());
}
