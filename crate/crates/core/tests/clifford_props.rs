use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use toric_lg::frobenius::{clifford_algebra, star_sign, trace_z, CliffordSpec, FrobeniusAlgebra};

fn nonzero() -> impl Strategy<Value = Complex64> {
    (0.2f64..3.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, a)| Complex64::from_polar(r, a))
}

fn spec(max_n: usize) -> impl Strategy<Value = CliffordSpec> {
    prop::collection::vec(nonzero(), 1..=max_n).prop_map(CliffordSpec::new)
}

fn closed_form(d: &[Complex64]) -> Complex64 {
    d.iter().product::<Complex64>() * 2f64.powi(d.len() as i32)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

/// Identity plus random entries inside each degree block; the unit column
/// stays fixed.
fn basis_change(alg: &FrobeniusAlgebra, entries: &[Complex64]) -> DMatrix<Complex64> {
    let dim = alg.dim();
    let deg = alg.degrees();
    let unit = alg.unit_index();
    let mut m = DMatrix::identity(dim, dim);
    let mut it = entries.iter().cycle();
    for a in 0..dim {
        if a == unit {
            continue;
        }
        for b in 0..dim {
            if deg[a] == deg[b] {
                m[(b, a)] += it.next().unwrap() * 0.3;
            }
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trace_matches_closed_form(s in spec(4)) {
        let alg = clifford_algebra(&s).unwrap();
        let z = trace_z(&alg).unwrap();
        prop_assert!(rel(z, closed_form(&s.d)) <= 1e-10, "{z} vs {}", closed_form(&s.d));
    }

    #[test]
    fn pairing_is_signed_complement(s in spec(4)) {
        let alg = clifford_algebra(&s).unwrap();
        let n = s.n();
        let dim = alg.dim();
        for i in 0..dim {
            for j in 0..dim {
                let p = alg.pairing()[(i, j)];
                let li = &alg.labels()[i];
                let lj = &alg.labels()[j];
                let subset = |l: &str| -> Vec<usize> {
                    l.trim_start_matches('X').chars().filter_map(|c| c.to_digit(10)).map(|d| d as usize).collect()
                };
                let (si, sj) = (if i == 0 { vec![] } else { subset(li) }, if j == 0 { vec![] } else { subset(lj) });
                let complement = si.len() + sj.len() == n && si.iter().all(|x| !sj.contains(x));
                if complement {
                    let sign = if star_sign(&si, n).is_multiple_of(2) { 1.0 } else { -1.0 };
                    prop_assert!((p - Complex64::new(sign, 0.0)).norm() < 1e-12);
                } else {
                    prop_assert!(p.norm() < 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trace_is_basis_independent(s in spec(4), entries in prop::collection::vec(nonzero(), 64)) {
        let alg = clifford_algebra(&s).unwrap();
        let m = basis_change(&alg, &entries);
        prop_assume!(m.clone().try_inverse().is_some());
        prop_assume!(m.clone().svd(false, false).singular_values.min() > 1e-2);
        let changed = alg.change_basis(&m).unwrap();
        let (z0, z1) = (trace_z(&alg).unwrap(), trace_z(&changed).unwrap());
        prop_assert!(rel(z0, z1) <= 1e-8, "{z0} vs {z1}");
    }
}
