use num_complex::Complex64;
use proptest::prelude::*;
use toric_lg::critsolve::{jacobian_rank, lift_tadic, same_points, solve_critical, SolverConfig};
use toric_lg::polytope::ToricData;
use toric_lg::potential::{boundary_example, default_potential};
use toric_lg::qh::{c1_eigen_check, qsr_identity_check, qsr_identity_check_with, qsr_relations};
use toric_lg::rational::{q, Rational, Valuation};
use toric_lg::report::{lift_residual_valuation, run, Command, ModelSpec, Report, RunOptions};

const BUILTINS: [&str; 9] = [
    "cpn(1)",
    "cpn(2)",
    "cpn(3)",
    "s2xs2",
    "s2xs2(1/3)",
    "blowup_cp2",
    "f2(1/4)",
    "f2(1/3)",
    "f2(3/4)",
];

#[test]
fn interior_count_equals_vertex_count() {
    for name in BUILTINS {
        let td = ToricData::builtin(name).unwrap();
        let po = default_potential(&td).unwrap();
        let pts = solve_critical(&po, &SolverConfig::default()).unwrap();
        let (vertices, rank) = td.vertices_and_rank();
        assert_eq!(rank, vertices.len());
        assert_eq!(jacobian_rank(&pts).unwrap(), rank, "{name}");
    }
}

#[test]
fn rank_counts_match_the_catalogue() {
    let counts: Vec<usize> = ["cpn(1)", "cpn(2)", "cpn(3)", "s2xs2", "blowup_cp2", "f2(1/4)"]
        .iter()
        .map(|n| ToricData::builtin(n).unwrap().betti_rank())
        .collect();
    assert_eq!(counts, vec![2, 3, 4, 4, 4, 4]);
}

#[test]
fn accepted_points_satisfy_solver_invariants() {
    let eps = q(1, 1_000_000);
    for name in BUILTINS {
        let td = ToricData::builtin(name).unwrap();
        let po = default_potential(&td).unwrap();
        let cfg = SolverConfig::default();
        let pts = solve_critical(&po, &cfg).unwrap();
        for p in &pts {
            assert!(p.samples.iter().all(|s| s.residual <= cfg.grad_tol), "{name}");
            assert!(td.interior_test(&p.valuation, eps).unwrap(), "{name}");
        }
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                let (ya, yb) = (&a.reference().y, &b.reference().y);
                let same = ya
                    .iter()
                    .zip(yb)
                    .all(|(u, v)| (u - v).norm() < cfg.dedupe_tol * u.norm());
                assert!(!same, "{name}: duplicate points");
            }
        }
    }
}

#[test]
fn boundary_point_is_excluded() {
    let po = boundary_example(Complex64::new(1.0, 0.0));
    let pts = solve_critical(&po, &SolverConfig::default()).unwrap();
    let outside: Vec<_> = pts.iter().filter(|p| !p.interior).collect();
    assert_eq!(outside.len(), 1);
    assert_eq!(outside[0].valuation, vec![Rational::ZERO, Rational::ZERO]);
    assert_eq!(jacobian_rank(&pts).unwrap(), 3);
}

#[test]
fn lifted_points_solve_to_requested_order() {
    for (name, order) in [("cpn(2)", q(2, 1)), ("f2(1/4)", q(2, 1)), ("blowup_cp2", q(3, 2)), ("s2xs2(1/3)", q(2, 1))] {
        let td = ToricData::builtin(name).unwrap();
        let po = default_potential(&td).unwrap();
        for p in solve_critical(&po, &SolverConfig::default()).unwrap() {
            let ys = lift_tadic(&po, &p, order).unwrap();
            let v = lift_residual_valuation(&po, &ys);
            assert!(v >= Valuation::Finite(order), "{name}: residual valuation {v}");
        }
    }
}

#[test]
fn f2_values_and_determinants() {
    let td = ToricData::hirzebruch(q(1, 4)).unwrap();
    let po = default_potential(&td).unwrap();
    let pts = solve_critical(&po, &SolverConfig::default()).unwrap();
    for t in [0.05f64, 0.1] {
        let (a, b) = (2.0 * t.powf(3.0 / 8.0), t.powf(0.25));
        let mut want = [a * (1.0 + b), a * (1.0 - b), -a * (1.0 + b), -a * (1.0 - b)];
        let mut got: Vec<f64> = pts.iter().map(|p| p.sample(t).unwrap().crit_value.re).collect();
        want.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        for (w, g) in want.iter().zip(&got) {
            assert!((w - g).abs() <= 1e-8 * w.abs(), "{w} vs {g}");
        }
        for p in &pts {
            let s = p.sample(t).unwrap();
            assert!(s.crit_value.im.abs() < 1e-12);
            assert!((s.hess_det.norm() - 4.0 * t).abs() <= 1e-8 * 4.0 * t);
        }
        let signs: i32 = pts.iter().map(|p| p.sample(t).unwrap().hess_det.re.signum() as i32).sum();
        assert_eq!(signs, 0);
    }
}

#[test]
fn qsr_identities_hold_on_builtins() {
    for name in BUILTINS {
        let td = ToricData::builtin(name).unwrap();
        let po = default_potential(&td).unwrap();
        assert!(qsr_identity_check(&po, 100, 1).unwrap() < 1e-12, "{name}");
        let pres = qsr_relations(&td).unwrap();
        assert_eq!(pres.qsr, td.primitive_collections().unwrap());
        for (i, row) in pres.linear.iter().enumerate() {
            let normals: Vec<i64> = td.facets.iter().map(|f| f.normal[i]).collect();
            assert_eq!(row, &normals);
        }
        let perturbed: Vec<_> = pres
            .qsr
            .iter()
            .cloned()
            .map(|mut c| {
                c.omega = c.omega + q(1, 100);
                c
            })
            .collect();
        assert!(qsr_identity_check_with(&po, &perturbed, 100, 1).unwrap() > 1e-3, "{name}");
    }
}

#[test]
fn c1_spectrum_matches_critical_values() {
    for name in BUILTINS {
        let td = ToricData::builtin(name).unwrap();
        for t in [0.05, 0.1] {
            let c = c1_eigen_check(&td, t, 5).unwrap();
            assert!(c.matched, "{name} t={t}: {}", c.residual);
        }
    }
}

#[test]
fn json_model_matches_builtin() {
    let doc = r#"{"name": "square", "dim": 2, "facets": [
        {"normal": [1, 0], "lambda": "0"}, {"normal": [0, 1], "lambda": "0"},
        {"normal": [-1, 0], "lambda": "-1"}, {"normal": [0, -1], "lambda": "-1"}]}"#;
    let td = ToricData::from_json(doc).unwrap();
    assert_eq!(td.betti_rank(), 4);
    let spec = ModelSpec {
        document: Some(doc.into()),
        ..Default::default()
    };
    let r = run(Command::Verify, &spec.resolve().unwrap(), &RunOptions::default()).unwrap();
    assert!(r.passed(), "{:?}", r.verdicts);
}

#[test]
fn reports_are_deterministic() {
    let model = ModelSpec::builtin("f2(1/4)").resolve().unwrap();
    let opts = RunOptions {
        seed: 17,
        ..Default::default()
    };
    let a = run(Command::Verify, &model, &opts).unwrap().to_json();
    let b = run(Command::Verify, &model, &opts).unwrap().to_json();
    assert_eq!(a, b);
    assert_eq!(Report::from_json(&a).unwrap().to_json(), a);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn seeds_agree(seed in any::<u64>(), name in prop::sample::select(BUILTINS.to_vec())) {
        let td = ToricData::builtin(name).unwrap();
        let po = default_potential(&td).unwrap();
        let a = solve_critical(&po, &SolverConfig::default()).unwrap();
        let b = solve_critical(&po, &SolverConfig::with_seed(seed)).unwrap();
        prop_assert!(same_points(&a, &b, 1e-8));
    }
}
