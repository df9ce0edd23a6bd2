use proptest::prelude::*;
use rand::Rng;
use wordgp_core::equivalence::semantically_equivalent;
use wordgp_core::evolve::{one_point_crossover, uniform_mutation};
use wordgp_core::program::parse_program;
use wordgp_core::random::{ramped_half_and_half, random_tree, GenMethod};
use wordgp_core::{seeded_rng, OperatorKind, ProgramTree, DEPTH_LIMIT};

const RULE: &str = "add(ARG2,sub(ARG1,ARG0))";

/// Add/sub/neg arrangements of c - a + b.
const RULE_VARIANTS: [&str; 4] = [
    "sub(add(ARG1,ARG2),ARG0)",
    "add(sub(ARG2,ARG0),ARG1)",
    "sub(ARG2,sub(ARG0,ARG1))",
    "add(neg(ARG0),add(ARG2,ARG1))",
];

/// Renders with random case and spacing to exercise the tolerant reader.
fn scramble<R: Rng>(tree: &ProgramTree, rng: &mut R) -> String {
    tree.to_string()
        .chars()
        .flat_map(|c| {
            let c = if rng.random_bool(0.5) { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() };
            let pad = if matches!(c, '(' | ')' | ',') && rng.random_bool(0.3) { " " } else { "" };
            [Some(c), pad.chars().next()].into_iter().flatten()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parse_inverts_format(seed in any::<u64>(), grow in any::<bool>(), max in 0usize..=6) {
        let mut rng = seeded_rng(seed);
        let method = if grow { GenMethod::Grow } else { GenMethod::Full };
        let tree = random_tree(&mut rng, 0, max, method);
        let text = tree.to_string();
        prop_assert_eq!(&parse_program(&text).unwrap(), &tree);
        let messy = scramble(&tree, &mut rng);
        let back = parse_program(&messy).unwrap();
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn evaluation_is_repeatable(seed in any::<u64>(), dim in 1usize..20) {
        let mut rng = seeded_rng(seed);
        let tree = random_tree(&mut rng, 0, 5, GenMethod::Grow);
        let args: Vec<Vec<f64>> = (0..3).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let refs = [args[0].as_slice(), args[1].as_slice(), args[2].as_slice()];
        let a = tree.evaluate(refs).unwrap();
        let b = tree.evaluate(refs).unwrap();
        prop_assert_eq!(a.len(), dim);
        prop_assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn full_trees_have_exact_depth_and_grow_trees_stay_below() {
    let mut rng = seeded_rng(3);
    for target in 0..=6 {
        for _ in 0..200 {
            let full = random_tree(&mut rng, target, target, GenMethod::Full);
            assert_eq!(full.depth(), target);
            let depths = full.node_depths();
            for (kind, d) in full.nodes().iter().zip(depths) {
                assert_eq!(kind.is_terminal(), d == target);
            }
            assert!(random_tree(&mut rng, 0, target, GenMethod::Grow).depth() <= target);
        }
    }
}

#[test]
fn depth_limit_survives_ten_thousand_variation_steps() {
    let mut rng = seeded_rng(11);
    let mut pop = ramped_half_and_half(&mut rng, 50, 1, 4);
    let mut deepest = 0;
    for _ in 0..10_000 {
        let i = rng.random_range(0..pop.len());
        let j = rng.random_range(0..pop.len());
        if rng.random_bool(0.5) {
            let (a, b) = one_point_crossover(&pop[i], &pop[j], DEPTH_LIMIT, &mut rng);
            pop[i] = a;
            pop[j] = b;
        } else {
            pop[i] = uniform_mutation(&pop[i], DEPTH_LIMIT, &mut rng);
        }
        for t in [&pop[i], &pop[j]] {
            assert!(t.depth() <= DEPTH_LIMIT, "{t}");
            deepest = deepest.max(t.depth());
        }
    }
    // The limit is actually exercised, not trivially respected.
    assert!(deepest >= 8, "deepest tree only reached depth {deepest}");
}

#[test]
fn chain_boundary() {
    let chain = |n: usize| {
        (0..n).fold(ProgramTree::terminal(OperatorKind::Arg0), |t, _| ProgramTree::unary(OperatorKind::Neg, t))
    };
    assert_eq!(chain(10).depth(), DEPTH_LIMIT);
    assert!(chain(11).depth() > DEPTH_LIMIT);
}

#[test]
fn rule_variants_are_equivalent_to_the_rule() {
    let rule = parse_program(RULE).unwrap();
    let mut rng = seeded_rng(2024);
    for src in RULE_VARIANTS {
        let p = parse_program(src).unwrap();
        assert!(semantically_equivalent(&p, &rule, 200, 1e-9, &mut rng), "{src}");
    }
    let wrong = parse_program("add(ARG2,sub(ARG0,ARG1))").unwrap();
    assert!(!semantically_equivalent(&wrong, &rule, 200, 1e-9, &mut rng));
}
