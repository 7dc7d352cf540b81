use num_complex::Complex64;
use proptest::prelude::*;
use toric_lg::rational::{q, Rational, Valuation};
use toric_lg::NovikovSeries;

fn coefficient() -> impl Strategy<Value = Complex64> {
    (0.1f64..2.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, a)| Complex64::from_polar(r, a))
}

fn exponent(lo: i64, hi: i64) -> impl Strategy<Value = Rational> {
    (1i64..=12, lo..=hi).prop_map(|(d, p)| q(p, d))
}

/// Exponents share one denominator per series, which keeps inverse
/// coefficients inside `f64` range.
fn series_from(lo: i64, hi: i64) -> impl Strategy<Value = NovikovSeries> {
    (1i64..=12)
        .prop_flat_map(move |d| {
            (
                prop::collection::vec(((lo * d)..=(hi * d)).prop_map(move |p| q(p, d)), 1..5),
                prop::collection::vec(coefficient(), 4),
                prop::option::of(0i64..=6),
            )
        })
        .prop_map(|(exps, coeffs, extra)| {
            let terms = exps.into_iter().zip(coeffs).collect();
            let exact = NovikovSeries::from_terms(terms, Valuation::Infinite);
            match (extra, exact.valuation()) {
                (Some(k), Valuation::Finite(v)) => exact.with_cutoff(Valuation::Finite(v + q(k + 1, 2))),
                _ => exact,
            }
        })
}

fn series() -> impl Strategy<Value = NovikovSeries> {
    series_from(-6, 12)
}

/// Nonnegative valuation, so `exp` is defined.
fn small_series() -> impl Strategy<Value = NovikovSeries> {
    series_from(0, 12)
}

/// Coefficients agree below the smaller cutoff, within `tol` relative to
/// the largest coefficient.
fn close(a: &NovikovSeries, b: &NovikovSeries, tol: f64) -> bool {
    close_at(a, b, tol, a.max_coefficient().max(b.max_coefficient()).max(1.0))
}

/// Size of the terms summed into a product coefficient.
fn product_scale(factors: &[&NovikovSeries]) -> f64 {
    factors.iter().map(|f| f.max_coefficient()).product::<f64>().max(1.0)
}

fn close_at(a: &NovikovSeries, b: &NovikovSeries, tol: f64, scale: f64) -> bool {
    let cut = a.cutoff().min(b.cutoff());
    let (a, b) = (a.with_cutoff(cut), b.with_cutoff(cut));
    let exps: Vec<Rational> = a.terms().iter().chain(b.terms()).map(|(e, _)| *e).collect();
    exps.iter().all(|&e| (a.coefficient(e) - b.coefficient(e)).norm() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn valuation_of_product_is_sum(a in series(), b in series()) {
        let p = a.mul(&b);
        prop_assert_eq!(p.valuation(), a.valuation() + b.valuation());
    }

    #[test]
    fn valuation_of_sum_is_ultrametric(a in series(), b in series()) {
        let s = a.add(&b);
        let m = a.valuation().min(b.valuation());
        prop_assert!(s.valuation() >= m || s.valuation() >= a.cutoff().min(b.cutoff()));
        if a.valuation() != b.valuation() {
            prop_assert_eq!(s.valuation(), m);
        }
    }

    #[test]
    fn valuation_of_shift_and_negation(a in series(), e in exponent(-4, 4)) {
        prop_assert_eq!(a.neg().valuation(), a.valuation());
        prop_assert_eq!(a.shift(e).valuation(), a.valuation() + e);
    }

    #[test]
    fn ring_laws(a in series(), b in series(), c in series()) {
        prop_assert!(close(&a.add(&b), &b.add(&a), 1e-10));
        prop_assert!(close(&a.mul(&b), &b.mul(&a), 1e-10));
        prop_assert!(close(&a.add(&b).add(&c), &a.add(&b.add(&c)), 1e-10));
        let abc = product_scale(&[&a, &b, &c]);
        prop_assert!(close_at(&a.mul(&b).mul(&c), &a.mul(&b.mul(&c)), 1e-10, abc));
        let ab = product_scale(&[&a, &b.add(&c)]).max(product_scale(&[&a, &c]));
        prop_assert!(close_at(&a.mul(&b.add(&c)), &a.mul(&b).add(&a.mul(&c)), 1e-10, ab));
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn inverse_is_two_sided(a in series()) {
        let inv = a.inv().unwrap();
        let one = NovikovSeries::one();
        let scale = product_scale(&[&a, &inv]);
        prop_assert!(close_at(&a.mul(&inv), &one, 1e-10, scale));
        prop_assert!(close_at(&inv.mul(&a), &one, 1e-10, scale));
        prop_assert_eq!(inv.valuation(), Valuation::Finite(-a.valuation().finite().unwrap()));
    }

    #[test]
    fn exp_is_a_homomorphism(a in small_series(), b in small_series()) {
        let lhs = a.add(&b).exp().unwrap();
        let (ea, eb) = (a.exp().unwrap(), b.exp().unwrap());
        let rhs = ea.mul(&eb);
        prop_assert!(close_at(&lhs, &rhs, 1e-9, product_scale(&[&ea, &eb])));
    }

    #[test]
    fn truncation_error_is_bounded(a in small_series(), k in exponent(1, 24)) {
        let c: f64 = a.terms().iter().map(|(_, c)| c.norm()).sum();
        let cut = a.truncate(k);
        for t in [0.05f64, 0.1] {
            let err = (a.eval(t).unwrap() - cut.eval(t).unwrap()).norm();
            prop_assert!(err <= c * t.powf(k.to_f64()) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn literal_round_trip(a in series()) {
        let back: NovikovSeries = a.to_string().parse().unwrap();
        prop_assert!(close(&a, &back, 1e-15));
    }
}

#[test]
fn exp_of_zero_is_one() {
    assert_eq!(NovikovSeries::zero().exp().unwrap(), NovikovSeries::one());
}
