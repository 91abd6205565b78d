use jnsc::bounds::{gamma_star, max_p, max_p_predicate, NscBoundInput, RicFamily};
use jnsc::exact::{exact_nsc_power, ric, NullSpaceVector};
use jnsc::experiments::{fmt_sig, random_gaussian_matrix, recovery_test_1sparse};
use jnsc::holder::{check_holder_inequality, select_coefficients};
use jnsc::{Family, Measure, SparsityFunction};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Power),
        Just(Family::Lorentzian),
        Just(Family::ConcaveExp),
        Just(Family::MixedNorm),
    ]
}

fn function() -> impl Strategy<Value = SparsityFunction> {
    (family(), 0.05..1.0f64, 0.05..1.0f64).prop_map(|(fam, p, r)| match fam {
        Family::MixedNorm => {
            let (a, b) = if p < r { (p, r) } else { (r, p) };
            SparsityFunction::mixed_norm(Measure::uniform(a, b.max(a + 1e-3).min(1.0)).unwrap())
        }
        _ => SparsityFunction::with_exponent(fam, p).unwrap(),
    })
}

fn magnitude() -> impl Strategy<Value = f64> {
    (-6.0..6.0f64).prop_map(|e| 10f64.powf(e))
}

fn sorted_vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(magnitude(), 2..10).prop_map(|mut v| {
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    })
}

proptest! {
    #[test]
    fn scale_is_submultiplicative_and_sandwiched(f in function(), x in magnitude(), y in magnitude()) {
        let (gx, gy) = (f.scale(x), f.scale(y));
        prop_assert!(f.scale(x * y) <= gx * gy * (1.0 + 1e-12));
        prop_assert!(gx >= x.min(1.0) * (1.0 - 1e-12) && gx <= x.max(1.0) * (1.0 + 1e-12));
        if x <= y {
            prop_assert!(gx <= gy);
            prop_assert!(gy / y <= gx / x * (1.0 + 1e-12));
        }
    }

    #[test]
    fn holder_inequality_holds(f in function(), q in prop_oneof![Just(1.0), Just(2.0), 1.0..4.0f64],
                               a in prop::collection::vec(magnitude(), 2..12)) {
        let c = select_coefficients(&f, q, a.len()).unwrap();
        prop_assert!(check_holder_inequality(&f, &c, &a).unwrap());
    }

    #[test]
    fn gamma_star_grows_with_delta(f in function(), k0 in 1usize..8, dk in 0usize..8,
                                   d1 in 0.0..0.99f64, d2 in 0.0..0.99f64) {
        let k = 1 + dk % k0;
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let a = gamma_star(&f, &NscBoundInput::new(k, k0, lo).unwrap()).unwrap();
        let b = gamma_star(&f, &NscBoundInput::new(k, k0, hi).unwrap()).unwrap();
        prop_assert!(a.gamma_star <= b.gamma_star * (1.0 + 1e-12));
        prop_assert!(a.gamma_star > 0.0);
    }

    #[test]
    fn max_p_is_the_predicate_supremum(k0 in 1usize..8, dk in 0usize..8, delta in 0.0..0.99f64,
                                       mixed in any::<bool>(), frac in 0.0..1.0f64) {
        let family = if mixed { RicFamily::MixedNorm } else { RicFamily::LogExp };
        let k = 1 + dk % k0;
        let top = max_p(family, k, k0, delta).unwrap();
        let p = top * frac;
        prop_assume!(p > 0.0 && top < 1.0);
        prop_assert!(max_p_predicate(family, k, k0, delta, p).unwrap());
        prop_assert!(!max_p_predicate(family, k, k0, delta, top * 1.000001).unwrap());
    }

    #[test]
    fn power_recovery_ignores_amplitude(p in 0.01..1.0f64, v in sorted_vector(),
                                        l1 in magnitude(), l2 in magnitude()) {
        let f = SparsityFunction::power(p).unwrap();
        let z = NullSpaceVector::new(v).unwrap();
        let ratio: f64 = z.z[1..].iter().map(|x| (x / z.z[0]).powf(p)).sum();
        prop_assume!((ratio - 1.0).abs() > 1e-9);
        prop_assert_eq!(
            recovery_test_1sparse(&f, &z, 0, l1).unwrap(),
            recovery_test_1sparse(&f, &z, 0, l2).unwrap()
        );
    }

    #[test]
    fn exact_nsc_grows_with_k(p in 0.01..1.0f64, v in sorted_vector()) {
        let z = NullSpaceVector::new(v).unwrap();
        let gammas: Vec<f64> = (1..z.len()).map(|k| exact_nsc_power(&z, k, p).unwrap()).collect();
        prop_assert!(gammas.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fmt_sig_round_trips(x in prop_oneof![magnitude(), -1e12..1e12f64]) {
        let back: f64 = fmt_sig(x).parse().unwrap();
        prop_assert!((back - x).abs() <= x.abs() * 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ric_is_monotone_in_order(seed in any::<u64>()) {
        let m = random_gaussian_matrix(4, 6, seed).unwrap();
        let d: Vec<f64> = (1..=4).map(|k| ric(&m, k).unwrap()).collect();
        prop_assert!(d[0] < 1e-12);
        prop_assert!(d.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }
}
