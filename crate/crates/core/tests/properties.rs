use avg_core::arith::{divisor_count, euler_phi, gcd, mod_inverse};
use avg_core::characters::enumerate_characters;
use avg_core::kloosterman::{kloosterman_sum, twisted_sum_closed, twisted_sum_direct, weil_bound};
use avg_core::petersson::{
    geometric_sums, inner_product, AveragingParams, TruncationPolicy,
};
use avg_core::special::{bessel_j1_oracle, j1, one_minus_exp_ratio, zeta_enclosure};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn mod_inverse_round_trip(x in -100_000i64..100_000, c in 2u64..50_000) {
        prop_assume!(gcd(x.unsigned_abs(), c) == 1);
        let inv = mod_inverse(x, c).unwrap();
        prop_assert!(inv < c);
        let prod = (x.rem_euclid(c as i64) as u128 * inv as u128) % c as u128;
        prop_assert_eq!(prod, 1);
    }

    #[test]
    fn divisor_and_phi_multiplicative(a in 1u64..5000, b in 1u64..5000) {
        prop_assume!(gcd(a, b) == 1);
        prop_assert_eq!(divisor_count(a * b).unwrap(), divisor_count(a).unwrap() * divisor_count(b).unwrap());
        prop_assert_eq!(euler_phi(a * b).unwrap(), euler_phi(a).unwrap() * euler_phi(b).unwrap());
    }

    #[test]
    fn kloosterman_within_weil(m in -500i64..500, n in -500i64..500, c in 1u64..1500) {
        let s = kloosterman_sum(m, n, c).unwrap();
        let w = weil_bound(m.unsigned_abs(), n.unsigned_abs(), c).unwrap();
        prop_assert!(s.abs() <= w * (1.0 + 1e-12) + 1e-9);
    }

    #[test]
    fn kloosterman_symmetric_and_periodic(m in -300i64..300, n in -300i64..300, c in 1u64..800, k in -3i64..3) {
        let s = kloosterman_sum(m, n, c).unwrap();
        prop_assert!((s - kloosterman_sum(n, m, c).unwrap()).abs() <= 1e-9);
        let shifted = kloosterman_sum(m + k * c as i64, n - k * c as i64, c).unwrap();
        prop_assert!((s - shifted).abs() <= 1e-9);
    }

    #[test]
    fn kloosterman_twisted_by_unit(m in 1i64..300, n in 1i64..300, c in 2u64..800) {
        prop_assume!(gcd(m as u64, c) == 1);
        let s = kloosterman_sum(m, n, c).unwrap();
        prop_assert!((s - kloosterman_sum(1, m * n, c).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn j1_bounded(x in 0.0f64..200.0) {
        let v = j1(x);
        prop_assert!(v.abs() <= 1.0f64.min(0.5 * x) + 1e-15);
    }

    #[test]
    fn j1_matches_integral(x in 0.0f64..60.0) {
        let oracle = bessel_j1_oracle(x, 1e-13).unwrap();
        prop_assert!((j1(x) - oracle).abs() <= 1e-11);
    }

    #[test]
    fn one_minus_exp_ratio_in_band(re in -2.0 * PI / 30.0..0.0f64, im in -PI..PI) {
        prop_assume!(re != 0.0 || im != 0.0);
        let r = one_minus_exp_ratio(Complex64::new(re, im)).unwrap();
        prop_assert!(r > 0.5 && r <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn characters_multiplicative(q in 1u64..60, a in 0i64..500, b in 0i64..500) {
        for chi in enumerate_characters(q).unwrap() {
            let lhs = chi.eval(a * b);
            let rhs = chi.eval(a) * chi.eval(b);
            prop_assert!((lhs - rhs).norm() <= 1e-12);
            prop_assert!((chi.eval(a + q as i64) - chi.eval(a)).norm() <= 1e-12);
            prop_assert_eq!(q % chi.conductor(), 0);
        }
    }

    #[test]
    fn characters_orthogonal(q in 1u64..40) {
        let chars = enumerate_characters(q).unwrap();
        let phi = euler_phi(q).unwrap() as f64;
        prop_assert_eq!(chars.len() as f64, phi);
        for (i, x) in chars.iter().enumerate() {
            for (j, y) in chars.iter().enumerate() {
                let s: Complex64 = (0..q as i64).map(|a| x.eval(a) * y.eval(a).conj()).sum();
                let expect = if i == j { phi } else { 0.0 };
                prop_assert!((s - expect).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn inner_product_symmetric(m in 1u64..40, n in 1u64..40, level in 2u64..300, b in 1u64..8) {
        let policy = TruncationPolicy::shared(None, b);
        let x = inner_product(m, n, level, &policy).unwrap();
        let y = inner_product(n, m, level, &policy).unwrap();
        prop_assert_eq!(x.value.re.to_bits(), y.value.re.to_bits());
        prop_assert_eq!(x.tail_radius.to_bits(), y.tail_radius.to_bits());
    }
}

#[test]
fn zeta_two_enclosed() {
    let truth = PI * PI / 6.0;
    for tol in [1e-6, 1e-9, 1e-12] {
        let e = zeta_enclosure(2.0, tol).unwrap();
        assert!(e.contains(truth), "{tol}: {e:?}");
        assert!(e.width() <= tol, "{tol}: {e:?}");
    }
}

proptest! {
    #![proptest_config(config(20))]

    #[test]
    fn inner_product_tail_is_honest(m in 1u64..8, n in 1u64..8, level in 400u64..1200, b in 2u64..12) {
        let short = inner_product(m, n, level, &TruncationPolicy::shared(None, b)).unwrap();
        let long = inner_product(m, n, level, &TruncationPolicy::shared(None, 2 * b)).unwrap();
        prop_assert!((short.value - long.value).norm() <= short.tail_radius);
    }

    #[test]
    fn twisted_methods_agree(level in 20u64..400, m in 1u64..6, qi in 0usize..4, b in 1u64..4, sigma in 0.3f64..2.0) {
        let q = [1u64, 3, 4, 5][qi];
        prop_assume!(level % q != 0);
        for chi in enumerate_characters(q).unwrap() {
            let p = AveragingParams::new(level, m, chi, sigma).unwrap();
            let c = level * b;
            let closed = twisted_sum_closed(c, &p).unwrap();
            let n_max = (p.scale() * 45.0 / (2.0 * PI)) as u64 + 1;
            let direct = twisted_sum_direct(c, &p, n_max).unwrap();
            let scale = 1.0 + direct.value.norm() + weil_bound(m, 0, c).unwrap();
            prop_assert!((closed.value - direct.value).norm() <= 1e-9 * scale + direct.tail_radius);
        }
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn shared_identity_holds(level in 400u64..700, m in 1u64..4, qi in 0usize..3, b in 1u64..4) {
        let q = [1u64, 3, 4][qi];
        prop_assume!(level % q != 0);
        let chi = enumerate_characters(q).unwrap().pop().unwrap();
        let p = AveragingParams::new(level, m, chi, 1.0).unwrap();
        let mut policy = TruncationPolicy::shared(None, b);
        policy.rel_tol = 1e-12;
        policy.tail_b = 1 << 12;
        let s = geometric_sums(&p, &policy).unwrap();
        prop_assert!(s.identity_residual() <= 1e-9 * (1.0 + s.main.norm()));
        prop_assert!((s.e2_algebraic() - s.e2.value).norm() <= 1e-9 * (1.0 + s.main.norm()));
    }

    #[test]
    fn zero_coverage_means_empty_terms(level in 400u64..2000, m in 1u64..4, n_max in 1u64..400) {
        let chi = enumerate_characters(1).unwrap().pop().unwrap();
        let p = AveragingParams::new(level, m, chi, 1.0).unwrap();
        let mut policy = TruncationPolicy::shared(Some(n_max), 2);
        policy.tail_b = 1 << 12;
        let s = geometric_sums(&p, &policy).unwrap();
        let smallest = (level * level) as f64 / (4.0 * PI * PI * m as f64);
        prop_assert_eq!(s.zero_coverage, (n_max as f64) < smallest.ceil());
        if s.zero_coverage {
            prop_assert_eq!(s.e1.value, Complex64::new(0.0, 0.0));
            prop_assert_eq!(s.e3.value, Complex64::new(0.0, 0.0));
        }
    }
}
