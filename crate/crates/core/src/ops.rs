//! The vector operator set and its component-wise semantics.

use alloc::vec::Vec;
use core::fmt;

/// Every node kind a program tree may contain.
///
/// Binary operators take two vectors, unary operators one, terminals none.
/// There are no constant terminals: programs only ever see the three
/// question vectors, so they stay valid for any dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorKind {
    Add,
    Sub,
    Mul,
    SafeDiv,
    Neg,
    Diff,
    Abs,
    Cos,
    Sin,
    Roll,
    Rint,
    Half,
    Norm,
    Log1p,
    Arg0,
    Arg1,
    Arg2,
}

use OperatorKind::*;

impl OperatorKind {
    pub const ALL: [OperatorKind; 17] = [
        Add, Sub, Mul, SafeDiv, Neg, Diff, Abs, Cos, Sin, Roll, Rint, Half, Norm, Log1p, Arg0,
        Arg1, Arg2,
    ];

    /// The 14 non-terminal kinds.
    pub const OPERATORS: [OperatorKind; 14] = [
        Add, Sub, Mul, SafeDiv, Neg, Diff, Abs, Cos, Sin, Roll, Rint, Half, Norm, Log1p,
    ];

    pub const TERMINALS: [OperatorKind; 3] = [Arg0, Arg1, Arg2];

    pub const fn arity(self) -> usize {
        match self {
            Add | Sub | Mul | SafeDiv => 2,
            Neg | Diff | Abs | Cos | Sin | Roll | Rint | Half | Norm | Log1p => 1,
            Arg0 | Arg1 | Arg2 => 0,
        }
    }

    pub const fn is_terminal(self) -> bool {
        self.arity() == 0
    }

    /// Canonical textual name, as written by the program formatter.
    pub const fn name(self) -> &'static str {
        match self {
            Add => "add",
            Sub => "sub",
            Mul => "mul",
            SafeDiv => "safeDiv",
            Neg => "neg",
            Diff => "diff",
            Abs => "abs",
            Cos => "cos",
            Sin => "sin",
            Roll => "roll",
            Rint => "rint",
            Half => "half",
            Norm => "norm",
            Log1p => "log1p",
            Arg0 => "ARG0",
            Arg1 => "ARG1",
            Arg2 => "ARG2",
        }
    }

    /// Case-insensitive lookup of a canonical name. `saveDiv` is accepted
    /// as a spelling of `safeDiv`.
    pub fn from_name(name: &str) -> Option<Self> {
        if name.eq_ignore_ascii_case("saveDiv") {
            return Some(SafeDiv);
        }
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(name))
    }

    /// Argument slot of a terminal.
    pub const fn arg_index(self) -> Option<usize> {
        match self {
            Arg0 => Some(0),
            Arg1 => Some(1),
            Arg2 => Some(2),
            _ => None,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How `rint` maps a component to an integer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RintMode {
    /// Round to nearest, ties to even.
    #[default]
    HalfEven,
    /// Truncate toward zero.
    TowardZero,
}

/// Protected division: a zero divisor yields zero.
#[inline]
pub fn safe_div(w: f64, v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        w / v
    }
}

#[inline]
pub fn rint(w: f64, mode: RintMode) -> f64 {
    match mode {
        RintMode::HalfEven => libm::rint(w),
        RintMode::TowardZero => libm::trunc(w),
    }
}

/// Largest component magnitude; NaN if any component is NaN.
pub fn max_abs(w: &[f64]) -> f64 {
    w.iter().fold(0.0, |m: f64, &x| {
        let a = libm::fabs(x);
        if m.is_nan() {
            m
        } else if a.is_nan() || a > m {
            a
        } else {
            m
        }
    })
}

/// Scales by the largest magnitude in place. The zero vector stays zero.
pub fn norm_in_place(w: &mut [f64]) {
    let m = max_abs(w);
    if m == 0.0 {
        return;
    }
    for x in w.iter_mut() {
        *x /= m;
    }
}

/// Applies a unary operator to `w` in place.
///
/// # Panics
/// If `op` is not unary.
pub fn apply_unary_in_place(op: OperatorKind, w: &mut [f64], mode: RintMode) {
    match op {
        Neg => w.iter_mut().for_each(|x| *x = -*x),
        Diff => w.iter_mut().for_each(|x| *x += 1.0),
        Abs => w.iter_mut().for_each(|x| *x = libm::fabs(*x)),
        Cos => w.iter_mut().for_each(|x| *x = libm::cos(*x)),
        Sin => w.iter_mut().for_each(|x| *x = libm::sin(*x)),
        Roll => {
            if !w.is_empty() {
                w.rotate_left(1)
            }
        }
        Rint => w.iter_mut().for_each(|x| *x = rint(*x, mode)),
        Half => w.iter_mut().for_each(|x| *x *= 0.5),
        Norm => norm_in_place(w),
        Log1p => {
            norm_in_place(w);
            // -1 after normalisation gives -inf; the fitness layer catches it.
            w.iter_mut().for_each(|x| *x = libm::log1p(*x));
        }
        _ => panic!("{op} is not a unary operator"),
    }
}

/// Applies a binary operator, writing the result into `w`.
///
/// # Panics
/// If `op` is not binary or the lengths differ.
pub fn apply_binary_in_place(op: OperatorKind, w: &mut [f64], v: &[f64]) {
    assert_eq!(w.len(), v.len(), "operand dimensions differ");
    let f: fn(f64, f64) -> f64 = match op {
        Add => |a, b| a + b,
        Sub => |a, b| a - b,
        Mul => |a, b| a * b,
        SafeDiv => safe_div,
        _ => panic!("{op} is not a binary operator"),
    };
    for (a, &b) in w.iter_mut().zip(v) {
        *a = f(*a, b);
    }
}

pub fn apply_unary(op: OperatorKind, w: &[f64], mode: RintMode) -> Vec<f64> {
    let mut out = w.to_vec();
    apply_unary_in_place(op, &mut out, mode);
    out
}

pub fn apply_binary(op: OperatorKind, w: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = w.to_vec();
    apply_binary_in_place(op, &mut out, v);
    out
}
