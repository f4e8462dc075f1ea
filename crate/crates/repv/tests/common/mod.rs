//! Shared helpers for integration tests: a brute-force bounded model checker
//! (independent of the tableau/Büchi/nested-DFS pipeline) and seeded random
//! generators for automata, environments, and formulas.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use repv::automata::{product, universal_ts, Fsa, Guard, Label, PropSet, TransitionSystem};
use repv::ltl::{eval_on_lasso, LtlFormula};

/// Search every lasso `u v^ω` of the (stutter-closed) plan ⊗ environment
/// product with `|u| + |v| <= max_len` and return the first whose label word
/// violates `phi`, judged by direct evaluation of the temporal semantics on
/// the ultimately periodic word — not by the Büchi pipeline under test.
pub fn bounded_violating_lasso(
    fsa: &Fsa,
    ts: &TransitionSystem,
    phi: &LtlFormula,
    max_len: usize,
) -> Option<(Vec<Label>, Vec<Label>)> {
    let closed = fsa.stutter_closed();
    let prod = product(&closed, ts).expect("product builds");
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); prod.pairs.len()];
    for (a, b) in &prod.transitions {
        adj[*a].push(*b);
    }
    let inits: Vec<usize> = prod
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.0 == closed.initial)
        .map(|(i, _)| i)
        .collect();

    fn dfs(
        walk: &mut Vec<usize>,
        adj: &[Vec<usize>],
        labels: &[Label],
        phi: &LtlFormula,
        max_len: usize,
    ) -> Option<(Vec<Label>, Vec<Label>)> {
        let s = *walk.last().unwrap();
        let k = walk.len() - 1;
        for j in 0..k {
            if walk[j] == s {
                let prefix: Vec<Label> = walk[..j].iter().map(|&q| labels[q].clone()).collect();
                let cycle: Vec<Label> = walk[j..k].iter().map(|&q| labels[q].clone()).collect();
                if !eval_on_lasso(phi, &prefix, &cycle) {
                    return Some((prefix, cycle));
                }
            }
        }
        if walk.len() <= max_len {
            for &t in &adj[s] {
                walk.push(t);
                if let Some(hit) = dfs(walk, adj, labels, phi, max_len) {
                    return Some(hit);
                }
                walk.pop();
            }
        }
        None
    }

    for &s in &inits {
        let mut walk = vec![s];
        if let Some(hit) = dfs(&mut walk, &adj, &prod.labels, phi, max_len) {
            return Some(hit);
        }
    }
    None
}

pub fn two_prop_ap() -> PropSet {
    PropSet::new(["a", "b"]).expect("two props")
}

/// Random automaton over AP {a, b}: 2–3 states, labels drawn from {∅, {b}},
/// one or two outgoing edges per state guarded by true / a / !a.
pub fn random_fsa(rng: &mut ChaCha8Rng) -> Fsa {
    let ap = two_prop_ap();
    let n = rng.gen_range(2..=3);
    let labels: Vec<Label> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                ["b".to_string()].into_iter().collect()
            } else {
                BTreeSet::new()
            }
        })
        .collect();
    let mut transitions = Vec::new();
    for s in 0..n {
        // Terminal states (no edges) are allowed: stutter closure covers them.
        for _ in 0..rng.gen_range(0..=2) {
            let guard = match rng.gen_range(0..3) {
                0 => Guard::True,
                1 => Guard::atom("a"),
                _ => Guard::not(Guard::atom("a")),
            };
            transitions.push((s, guard, rng.gen_range(0..n)));
        }
    }
    let fsa = Fsa {
        ap,
        state_names: (0..n).map(|i| format!("q{i}")).collect(),
        labels,
        initial: 0,
        transitions,
    };
    fsa.validate().expect("random automaton is well-formed");
    fsa
}

/// Random two-state environment over AP {a, b} where only `a` is
/// environment-controlled: either the universal environment or a random
/// total two-state system.
pub fn random_ts(rng: &mut ChaCha8Rng) -> TransitionSystem {
    let ap = two_prop_ap();
    if rng.gen_bool(0.5) {
        return universal_ts(&ap, &["a".to_string()].into_iter().collect())
            .expect("universal environment");
    }
    let labels: Vec<Label> = (0..2)
        .map(|_| {
            if rng.gen_bool(0.5) {
                ["a".to_string()].into_iter().collect()
            } else {
                BTreeSet::new()
            }
        })
        .collect();
    let mut transitions: BTreeSet<(usize, usize)> = BTreeSet::new();
    for s in 0..2 {
        transitions.insert((s, rng.gen_range(0..2)));
        if rng.gen_bool(0.5) {
            transitions.insert((s, rng.gen_range(0..2)));
        }
    }
    TransitionSystem::new(
        ap,
        vec!["t0".into(), "t1".into()],
        labels,
        transitions,
    )
    .expect("random environment is well-formed")
}

/// Random formula over atoms {a, b} with at most `depth` operator layers.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize) -> LtlFormula {
    let leaf = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            LtlFormula::atom("a")
        } else {
            LtlFormula::atom("b")
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..8) {
        0 => leaf(rng),
        1 => LtlFormula::not(random_formula(rng, depth - 1)),
        2 => LtlFormula::and(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        3 => LtlFormula::or(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        4 => LtlFormula::next(random_formula(rng, depth - 1)),
        5 => LtlFormula::eventually(random_formula(rng, depth - 1)),
        6 => LtlFormula::always(random_formula(rng, depth - 1)),
        _ => LtlFormula::until(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
    }
}
