//! Randomised semantic equivalence of programs.

use alloc::vec::Vec;

use rand::Rng;

use crate::program::ProgramTree;

const TRIAL_DIMS: [usize; 3] = [3, 8, 16];

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum ValueClass {
    Finite,
    Nan,
    PosInf,
    NegInf,
}

fn class(x: f64) -> ValueClass {
    if x.is_nan() {
        ValueClass::Nan
    } else if x == f64::INFINITY {
        ValueClass::PosInf
    } else if x == f64::NEG_INFINITY {
        ValueClass::NegInf
    } else {
        ValueClass::Finite
    }
}

/// Compares two output vectors: finite components within `tol`, non-finite
/// components of the same class at the same position.
pub fn outputs_match(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(&x, &y)| match (class(x), class(y)) {
            (ValueClass::Finite, ValueClass::Finite) => libm::fabs(x - y) <= tol,
            (cx, cy) => cx == cy,
        })
}

/// True when the two programs agree on `trials` random argument triples.
///
/// Components are drawn i.i.d. uniform on [-1, 1]; the dimension cycles
/// through 3, 8 and 16.
pub fn semantically_equivalent<R: Rng + ?Sized>(
    p1: &ProgramTree,
    p2: &ProgramTree,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> bool {
    assert!(trials >= 1, "at least one trial is required");
    for t in 0..trials {
        let dim = TRIAL_DIMS[t % TRIAL_DIMS.len()];
        let args: [Vec<f64>; 3] = core::array::from_fn(|_| {
            (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
        });
        let refs = [args[0].as_slice(), args[1].as_slice(), args[2].as_slice()];
        let a = p1.evaluate(refs).expect("equal dimensions");
        let b = p2.evaluate(refs).expect("equal dimensions");
        if !outputs_match(&a, &b, tol) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;
    use crate::seeded_rng;

    fn p(s: &str) -> ProgramTree {
        parse_program(s).unwrap()
    }

    #[test]
    fn commutative_add() {
        let mut rng = seeded_rng(0);
        assert!(semantically_equivalent(&p("add(ARG0,ARG1)"), &p("add(ARG1,ARG0)"), 200, 1e-9, &mut rng));
    }

    #[test]
    fn sub_is_not_symmetric() {
        let mut rng = seeded_rng(0);
        assert!(!semantically_equivalent(&p("sub(ARG0,ARG1)"), &p("sub(ARG1,ARG0)"), 200, 1e-9, &mut rng));
    }

    #[test]
    fn rule_rearrangements() {
        let mut rng = seeded_rng(7);
        let rule = p("add(ARG2,sub(ARG1,ARG0))");
        for other in ["sub(add(ARG1,ARG2),ARG0)", "add(neg(ARG0),add(ARG2,ARG1))"] {
            assert!(semantically_equivalent(&rule, &p(other), 200, 1e-9, &mut rng), "{other}");
        }
        assert!(!semantically_equivalent(&rule, &p("add(ARG2,sub(ARG0,ARG1))"), 200, 1e-9, &mut rng));
    }

    #[test]
    fn non_finite_classes() {
        let inf = f64::INFINITY;
        assert!(outputs_match(&[inf, f64::NAN, 1.0], &[inf, f64::NAN, 1.0 + 1e-12], 1e-9));
        assert!(!outputs_match(&[inf], &[-inf], 1e-9));
        assert!(!outputs_match(&[f64::NAN], &[0.0], 1e-9));
        assert!(!outputs_match(&[1.0], &[1.0, 2.0], 1e-9));
    }
}
