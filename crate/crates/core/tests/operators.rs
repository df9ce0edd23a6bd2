//! Component-wise operators against scalar oracles written from the operator
//! table, independent of the library's helpers.

use proptest::prelude::*;
use wordgp_core::ops::{apply_binary, apply_unary};
use wordgp_core::OperatorKind::{self, *};
use wordgp_core::RintMode;

fn component() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1.0f64..1.0,
        -1e6f64..1e6,
        Just(0.0),
        Just(-0.0),
        (-50i32..50).prop_map(f64::from),
        (-50i32..50).prop_map(|n| f64::from(n) + 0.5),
    ]
}

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(component(), dim)
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=32).prop_flat_map(|d| (vector(d), vector(d)))
}

fn close(got: f64, want: f64) -> bool {
    if want.is_nan() {
        return got.is_nan();
    }
    if want.is_infinite() {
        return got == want;
    }
    (got - want).abs() <= 1e-12 * want.abs().max(1.0)
}

fn scalar_binary(op: OperatorKind, a: f64, b: f64) -> f64 {
    match op {
        Add => a + b,
        Sub => a - b,
        Mul => a * b,
        SafeDiv => {
            if b == 0.0 {
                0.0
            } else {
                a / b
            }
        }
        _ => unreachable!(),
    }
}

/// Oracle for the unary operators; `m` is the largest magnitude in the vector.
fn scalar_unary(op: OperatorKind, w: &[f64], i: usize, m: f64, rint: RintMode) -> f64 {
    let x = w[i];
    let normed = if m == 0.0 { 0.0 } else { x / m };
    match op {
        Neg => -x,
        Diff => 1.0 + x,
        Abs => x.abs(),
        Cos => x.cos(),
        Sin => x.sin(),
        Roll => w[(i + 1) % w.len()],
        Rint => match rint {
            RintMode::HalfEven => x.round_ties_even(),
            RintMode::TowardZero => x.trunc(),
        },
        Half => x / 2.0,
        Norm => normed,
        Log1p => (1.0 + normed).ln(),
        _ => unreachable!(),
    }
}

const EXACT: [OperatorKind; 5] = [Add, Sub, Neg, Half, Roll];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn binary_operators_match_oracle((w, v) in pair()) {
        for op in [Add, Sub, Mul, SafeDiv] {
            let out = apply_binary(op, &w, &v);
            for i in 0..w.len() {
                let want = scalar_binary(op, w[i], v[i]);
                if EXACT.contains(&op) {
                    prop_assert_eq!(out[i].to_bits(), want.to_bits(), "{} at {}", op, i);
                } else {
                    prop_assert!(close(out[i], want), "{} at {}: {} vs {}", op, i, out[i], want);
                }
            }
        }
    }

    #[test]
    fn unary_operators_match_oracle((w, _) in pair()) {
        let m = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for op in OperatorKind::OPERATORS.into_iter().filter(|op| op.arity() == 1) {
            for mode in [RintMode::HalfEven, RintMode::TowardZero] {
                let out = apply_unary(op, &w, mode);
                prop_assert_eq!(out.len(), w.len());
                for i in 0..w.len() {
                    let want = scalar_unary(op, &w, i, m, mode);
                    if EXACT.contains(&op) {
                        prop_assert_eq!(out[i].to_bits(), want.to_bits(), "{} at {}", op, i);
                    } else {
                        prop_assert!(close(out[i], want), "{} at {}: {} vs {}", op, i, out[i], want);
                    }
                }
            }
        }
    }

    #[test]
    fn safe_div_never_blows_up_on_zero((w, mut v) in pair(), zeros in prop::collection::vec(any::<bool>(), 32)) {
        for (x, z) in v.iter_mut().zip(zeros) {
            if z {
                *x = 0.0;
            }
        }
        let out = apply_binary(SafeDiv, &w, &v);
        for i in 0..w.len() {
            if v[i] == 0.0 {
                prop_assert_eq!(out[i], 0.0);
            }
            prop_assert!(out[i].is_finite());
        }
    }

    #[test]
    fn norm_lands_in_unit_box((w, _) in pair()) {
        let out = apply_unary(Norm, &w, RintMode::HalfEven);
        prop_assert!(out.iter().all(|x| (-1.0..=1.0).contains(x)));
        if w.iter().any(|&x| x != 0.0) {
            prop_assert!(out.iter().any(|x| x.abs() == 1.0));
        } else {
            prop_assert!(out.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn roll_dim_times_is_identity((w, _) in pair()) {
        let mut out = w.clone();
        for _ in 0..w.len() {
            out = apply_unary(Roll, &out, RintMode::HalfEven);
        }
        prop_assert_eq!(out, w);
    }
}

#[test]
fn zero_vector_protection() {
    for dim in [1, 2, 5, 300] {
        let zero = vec![0.0; dim];
        assert_eq!(apply_unary(Norm, &zero, RintMode::HalfEven), zero);
        assert_eq!(apply_unary(Log1p, &zero, RintMode::HalfEven), zero);
        let w: Vec<f64> = (0..dim).map(|i| i as f64 - 2.0).collect();
        assert_eq!(apply_binary(SafeDiv, &w, &zero), zero);
    }
}

#[test]
fn log1p_of_the_most_negative_component_is_minus_infinity() {
    let out = apply_unary(Log1p, &[-2.0, 1.0, 0.0], RintMode::HalfEven);
    assert_eq!(out[0], f64::NEG_INFINITY);
    assert!((out[1] - 0.5f64.ln_1p()).abs() < 1e-15);
    assert_eq!(out[2], 0.0);
}
