//! Certifies the closed-form leaf constants against an independent
//! fixed-point evaluation carrying 192 fractional bits.

mod support;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use pm_core::policies::leaf_parameters;

use support::{oracle_leaf_parameters, rel_err, ulp_distance, Fx};

fn decimal(digits: &str, scale: u32) -> BigRational {
    let n: BigInt = digits.parse().expect("decimal digits");
    BigRational::new(n, BigInt::from(10u32).pow(scale))
}

fn assert_close(value: &Fx, reference: &BigRational, tol: &BigRational) {
    let diff = (value.to_rational() - reference).abs();
    assert!(diff < *tol, "difference {diff} exceeds tolerance");
}

#[test]
fn fixed_point_constants_match_published_digits() {
    let tol = decimal("1", 38);
    // First forty decimals, truncated.
    let ln2 = decimal("6931471805599453094172321214581765680755", 40);
    assert_close(&Fx::ln2(), &ln2, &tol);
    let sqrt2 = decimal("14142135623730950488016887242096980785696", 40);
    assert_close(&Fx::from_u64(2).sqrt(), &sqrt2, &tol);
    // ln 10 exercises the power-of-two normalization with k = 3.
    let ln10 = decimal("23025850929940456840179914546843642076011", 40);
    assert_close(&Fx::from_u64(10).ln(), &ln10, &tol);
}

#[test]
fn fixed_point_round_trips_doubles() {
    for x in [0.1f64, 0.01, 1.0, 2.5, 1e-6, 12345.678] {
        assert_eq!(Fx::from_f64(x).to_f64_nearest(), x);
    }
    assert_eq!(ulp_distance(1.0, 1.0), 0);
    assert_eq!(ulp_distance(1.0, 1.0 + f64::EPSILON), 1);
}

#[test]
fn leaf_parameters_match_the_oracle_to_1e12_relative() {
    for (t, delta) in [(1_000u64, 0.1f64), (10_000, 0.01)] {
        let got = leaf_parameters(t, delta);
        let want = oracle_leaf_parameters(t, delta);
        for (name, g, w) in [
            ("beta", got.beta, &want.beta),
            ("gamma", got.gamma, &want.gamma),
            ("eta_one_armed", got.eta_one_armed, &want.eta_one_armed),
            ("eta_full_info", got.eta_full_info, &want.eta_full_info),
        ] {
            let err = rel_err(g, w);
            assert!(
                err <= 1e-12,
                "{name} at T={t} delta={delta}: relative error {err:e}"
            );
        }
    }
}

#[test]
fn leaf_parameters_are_within_one_ulp_across_a_wide_grid() {
    let mut worst = 0u64;
    for t in [64u64, 1 << 10, 1_000, 10_000, 1 << 16, 1_000_000] {
        for delta in [0.5f64, 0.1, 0.01, 1.0 / (t as f64).sqrt()] {
            let got = leaf_parameters(t, delta);
            let want = oracle_leaf_parameters(t, delta);
            for (name, g, w) in [
                ("beta", got.beta, &want.beta),
                ("gamma", got.gamma, &want.gamma),
                ("eta_one_armed", got.eta_one_armed, &want.eta_one_armed),
                ("eta_full_info", got.eta_full_info, &want.eta_full_info),
            ] {
                let ulps = ulp_distance(g, w.to_f64_nearest());
                worst = worst.max(ulps);
                assert!(
                    ulps <= 1,
                    "{name} at T={t} delta={delta}: {ulps} ulps from the oracle"
                );
            }
        }
    }
    assert!(worst <= 1, "worst observed distance {worst} ulps");
}
