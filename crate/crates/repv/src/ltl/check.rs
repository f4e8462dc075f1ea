//! Emptiness-based model checking: a plan automaton composed with an
//! environment satisfies a specification iff the synchronized product with
//! the Büchi automaton of the negated specification has no accepting lasso.

use super::{eval_on_lasso, to_buchi, LtlError, LtlFormula};
use crate::automata::{product, Fsa, Label, ProductAutomaton, TransitionSystem};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Counterexample trace: a finite prefix followed by a repeated cycle, both
/// given as product-state names and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lasso {
    pub prefix_states: Vec<String>,
    pub cycle_states: Vec<String>,
    pub prefix_labels: Vec<Label>,
    pub cycle_labels: Vec<Label>,
}

/// Model-checking outcome. `counterexample` is present iff `holds` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    pub counterexample: Option<Lasso>,
}

/// Synchronized state: (product state, Büchi state).
type Sync = (usize, usize);

struct SyncGraph<'a> {
    prod: &'a ProductAutomaton,
    buchi: &'a super::BuchiAutomaton,
}

impl<'a> SyncGraph<'a> {
    fn initials(&self) -> Vec<Sync> {
        let mut out = Vec::new();
        for &s0 in &self.prod.initial {
            for &b0 in &self.buchi.initial {
                for b in self.buchi.step(b0, &self.prod.labels[s0]) {
                    out.push((s0, b));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn successors(&self, (s, b): Sync) -> Vec<Sync> {
        let mut out = Vec::new();
        for s2 in self.prod.successors(s) {
            for b2 in self.buchi.step(b, &self.prod.labels[s2]) {
                out.push((s2, b2));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn accepting(&self, (_, b): Sync) -> bool {
        self.buchi.accepting[b]
    }
}

/// Nested depth-first search for an accepting cycle. Returns the violating
/// run as (path from an initial sync state, cycle) if one exists. Successors
/// are explored in ascending order, so the counterexample is deterministic.
fn ndfs(graph: &SyncGraph) -> Option<(Vec<Sync>, Vec<Sync>)> {
    let mut blue: BTreeSet<Sync> = BTreeSet::new();
    let mut red: BTreeSet<Sync> = BTreeSet::new();

    // Iterative blue DFS with an explicit stack so deep products don't
    // overflow the call stack. Frames carry the remaining successor list.
    for init in graph.initials() {
        if blue.contains(&init) {
            continue;
        }
        let mut path: Vec<Sync> = Vec::new();
        let mut frames: Vec<(Sync, Vec<Sync>)> = Vec::new();
        blue.insert(init);
        path.push(init);
        frames.push((init, graph.successors(init)));
        while let Some((node, succs)) = frames.last_mut() {
            if let Some(next) = succs.first().copied() {
                succs.remove(0);
                if !blue.contains(&next) {
                    blue.insert(next);
                    path.push(next);
                    frames.push((next, graph.successors(next)));
                }
                continue;
            }
            // Postorder: seed the red search from accepting states.
            let node = *node;
            if graph.accepting(node) {
                if let Some(cycle) = red_search(graph, node, &path, &mut red) {
                    let on_stack = cycle[cycle.len() - 1];
                    let k = path.iter().position(|&s| s == on_stack).unwrap();
                    // Prefix runs up to (not including) the cycle entry; the
                    // cycle is path[k..] followed by the red path back.
                    let mut cyc: Vec<Sync> = path[k..].to_vec();
                    cyc.extend(cycle[..cycle.len() - 1].iter().copied());
                    return Some((path[..k].to_vec(), cyc));
                }
            }
            frames.pop();
            path.pop();
        }
    }
    None
}

/// Red DFS from `seed`: looks for a state on the blue DFS path, which closes
/// an accepting cycle through `seed`. Returns the red path
/// `[first-after-seed, ..., state-on-blue-path]`.
fn red_search(
    graph: &SyncGraph,
    seed: Sync,
    blue_path: &[Sync],
    red: &mut BTreeSet<Sync>,
) -> Option<Vec<Sync>> {
    let on_path: BTreeSet<Sync> = blue_path.iter().copied().collect();
    let mut parent: std::collections::BTreeMap<Sync, Sync> = std::collections::BTreeMap::new();
    let mut stack: Vec<Sync> = Vec::new();
    for s in graph.successors(seed) {
        if !parent.contains_key(&s) {
            parent.insert(s, seed);
            stack.push(s);
        }
    }
    while let Some(v) = stack.pop() {
        if on_path.contains(&v) {
            // Reconstruct seed -> ... -> v.
            let mut path = vec![v];
            let mut cur = v;
            while parent[&cur] != seed {
                cur = parent[&cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        if red.contains(&v) {
            continue;
        }
        red.insert(v);
        for s in graph.successors(v) {
            if !parent.contains_key(&s) {
                parent.insert(s, v);
                stack.push(s);
            }
        }
    }
    None
}

/// Decide whether every infinite execution of `a ⊗ ts` (with terminal-state
/// stutter extension) satisfies `phi`. The verdict carries a lasso
/// counterexample when it does not.
pub fn model_check(a: &Fsa, ts: &TransitionSystem, phi: &LtlFormula) -> Result<Verdict, LtlError> {
    let closed = a.stutter_closed();
    let prod = product(&closed, ts)?;
    let neg = LtlFormula::not(phi.clone());
    let buchi = to_buchi(&neg, &closed.ap)?;
    let graph = SyncGraph {
        prod: &prod,
        buchi: &buchi,
    };
    match ndfs(&graph) {
        None => Ok(Verdict {
            holds: true,
            counterexample: None,
        }),
        Some((prefix, cycle)) => {
            let lasso = Lasso {
                prefix_states: prefix.iter().map(|&(s, _)| prod.state_name(s)).collect(),
                cycle_states: cycle.iter().map(|&(s, _)| prod.state_name(s)).collect(),
                prefix_labels: prefix.iter().map(|&(s, _)| prod.labels[s].clone()).collect(),
                cycle_labels: cycle.iter().map(|&(s, _)| prod.labels[s].clone()).collect(),
            };
            debug_assert!(
                !eval_on_lasso(phi, &lasso.prefix_labels, &lasso.cycle_labels),
                "counterexample lasso does not violate the formula"
            );
            Ok(Verdict {
                holds: false,
                counterexample: Some(lasso),
            })
        }
    }
}
