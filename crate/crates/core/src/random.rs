//! Random program generation.

use alloc::vec::Vec;

use rand::Rng;

use crate::ops::OperatorKind;
use crate::program::{ProgramTree, DEPTH_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenMethod {
    /// Every leaf sits at exactly the target depth.
    Full,
    /// Any node above the target depth may be a terminal.
    Grow,
}

/// Samples a target depth uniformly from `min_depth..=max_depth` and builds a
/// tree with `method`.
///
/// Internal positions draw uniformly from the 14 operators (`Full`) or from
/// all 17 kinds (`Grow`); positions at the target depth draw from the 3
/// terminals.
pub fn random_tree<R: Rng + ?Sized>(
    rng: &mut R,
    min_depth: usize,
    max_depth: usize,
    method: GenMethod,
) -> ProgramTree {
    assert!(min_depth <= max_depth && max_depth <= DEPTH_LIMIT, "bad depth range");
    let target = rng.random_range(min_depth..=max_depth);
    let mut nodes = Vec::new();
    // Depths of positions still to be filled, processed in prefix order.
    let mut pending: Vec<usize> = alloc::vec![0];
    while let Some(depth) = pending.pop() {
        let kind = if depth == target {
            OperatorKind::TERMINALS[rng.random_range(0..3)]
        } else {
            match method {
                GenMethod::Full => OperatorKind::OPERATORS[rng.random_range(0..14)],
                GenMethod::Grow => OperatorKind::ALL[rng.random_range(0..17)],
            }
        };
        nodes.push(kind);
        for _ in 0..kind.arity() {
            pending.push(depth + 1);
        }
    }
    ProgramTree::from_prefix(nodes).expect("generated prefix is complete")
}

/// Ramped half-and-half: even slots use `Full`, odd slots `Grow`, each with a
/// target depth drawn from `min_depth..=max_depth`.
pub fn ramped_half_and_half<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    min_depth: usize,
    max_depth: usize,
) -> Vec<ProgramTree> {
    (0..count)
        .map(|i| {
            let method = if i % 2 == 0 { GenMethod::Full } else { GenMethod::Grow };
            random_tree(rng, min_depth, max_depth, method)
        })
        .collect()
}
