//! Tableau translation from temporal-logic formulas to Büchi automata.
//!
//! Pipeline: negation normal form → node-expansion tableau (generalized
//! Büchi with one acceptance set per Until subformula) → counter-based
//! degeneralization → reachability pruning.

use super::{to_nnf, LtlError, LtlFormula, Nnf};
use crate::automata::{Label, PropSet};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Cap on tableau nodes; exceeded means the formula is rejected rather than
/// the translation running away.
pub const MAX_TABLEAU_NODES: usize = 1 << 12;

/// Conjunctive constraint on one alphabet letter (a subset of AP): the letter
/// must contain every `must` proposition and none of the `must_not` ones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LetterConstraint {
    pub must: BTreeSet<String>,
    pub must_not: BTreeSet<String>,
}

impl LetterConstraint {
    pub fn satisfied_by(&self, letter: &Label) -> bool {
        self.must.iter().all(|p| letter.contains(p))
            && self.must_not.iter().all(|p| !letter.contains(p))
    }
}

/// Nondeterministic Büchi automaton. State 0 is a distinguished initial
/// state that consumes no input; each transition consumes one letter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuchiAutomaton {
    pub ap: PropSet,
    pub n_states: usize,
    /// Initial states (in this construction always `[0]`).
    pub initial: Vec<usize>,
    pub transitions: Vec<(usize, LetterConstraint, usize)>,
    pub accepting: Vec<bool>,
}

impl BuchiAutomaton {
    /// Successors of `state` on `letter`, in ascending state order.
    pub fn step(&self, state: usize, letter: &Label) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .transitions
            .iter()
            .filter(|(s, c, _)| *s == state && c.satisfied_by(letter))
            .map(|(_, _, d)| *d)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Exact acceptance of the ultimately periodic word `prefix · cycle^ω`.
    ///
    /// Explores the synchronized graph of word positions and automaton
    /// states and looks for a reachable cycle through an accepting state.
    pub fn accepts_lasso(&self, prefix: &[Label], cycle: &[Label]) -> bool {
        assert!(!cycle.is_empty());
        let n = prefix.len() + cycle.len();
        let letter = |i: usize| -> &Label {
            if i < prefix.len() {
                &prefix[i]
            } else {
                &cycle[i - prefix.len()]
            }
        };
        let succ_pos = |i: usize| if i + 1 < n { i + 1 } else { prefix.len() };

        // Nodes: (word position about to be read, automaton state).
        let mut nodes: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut stack: Vec<(usize, usize)> = self.initial.iter().map(|&s| (0usize, s)).collect();
        let mut edges: BTreeSet<((usize, usize), (usize, usize))> = BTreeSet::new();
        while let Some((i, s)) = stack.pop() {
            if !nodes.insert((i, s)) {
                continue;
            }
            for d in self.step(s, letter(i)) {
                let nxt = (succ_pos(i), d);
                edges.insert(((i, s), nxt));
                stack.push(nxt);
            }
        }
        // A run is accepting iff some accepting node lies on a cycle
        // reachable from an initial node. All nodes in `nodes` are reachable.
        for &(i, s) in &nodes {
            if !self.accepting[s] {
                continue;
            }
            // DFS from (i,s) back to itself.
            let mut seen = BTreeSet::new();
            let mut st: Vec<(usize, usize)> = edges
                .iter()
                .filter(|(a, _)| *a == (i, s))
                .map(|(_, b)| *b)
                .collect();
            while let Some(v) = st.pop() {
                if v == (i, s) {
                    return true;
                }
                if !seen.insert(v) {
                    continue;
                }
                st.extend(edges.iter().filter(|(a, _)| *a == v).map(|(_, b)| *b));
            }
        }
        false
    }
}

#[derive(Debug, Clone)]
struct Node {
    incoming: BTreeSet<usize>,
    old: BTreeSet<Nnf>,
    next: BTreeSet<Nnf>,
}

const INIT_MARK: usize = usize::MAX;

/// Node-expansion step of the tableau construction.
fn expand(
    mut new: BTreeSet<Nnf>,
    old: BTreeSet<Nnf>,
    next: BTreeSet<Nnf>,
    incoming: BTreeSet<usize>,
    nodes: &mut Vec<Node>,
) -> Result<(), LtlError> {
    if nodes.len() > MAX_TABLEAU_NODES {
        return Err(LtlError::FormulaTooLarge(MAX_TABLEAU_NODES));
    }
    let f = match new.iter().next().cloned() {
        None => {
            // Fully expanded: merge with an existing node or create one.
            if let Some(existing) = nodes
                .iter_mut()
                .find(|n| n.old == old && n.next == next)
            {
                existing.incoming.extend(incoming);
                return Ok(());
            }
            let id = nodes.len();
            nodes.push(Node {
                incoming,
                old: old.clone(),
                next: next.clone(),
            });
            let mut inc = BTreeSet::new();
            inc.insert(id);
            return expand(next, BTreeSet::new(), BTreeSet::new(), inc, nodes);
        }
        Some(f) => f,
    };
    new.remove(&f);
    match &f {
        Nnf::False => Ok(()), // contradiction: drop this branch
        Nnf::True => expand(new, old, next, incoming, nodes),
        Nnf::Pos(p) => {
            if old.contains(&Nnf::Neg(p.clone())) {
                return Ok(());
            }
            let mut old = old;
            old.insert(f);
            expand(new, old, next, incoming, nodes)
        }
        Nnf::Neg(p) => {
            if old.contains(&Nnf::Pos(p.clone())) {
                return Ok(());
            }
            let mut old = old;
            old.insert(f);
            expand(new, old, next, incoming, nodes)
        }
        Nnf::And(a, b) => {
            let mut new = new;
            if !old.contains(a.as_ref()) {
                new.insert((**a).clone());
            }
            if !old.contains(b.as_ref()) {
                new.insert((**b).clone());
            }
            let mut old = old;
            old.insert(f.clone());
            expand(new, old, next, incoming, nodes)
        }
        Nnf::Next(a) => {
            let mut old = old;
            old.insert(f.clone());
            let mut next = next;
            next.insert((**a).clone());
            expand(new, old, next, incoming, nodes)
        }
        Nnf::Or(a, b) => {
            let mut old1 = old.clone();
            old1.insert(f.clone());
            let mut new1 = new.clone();
            if !old.contains(a.as_ref()) {
                new1.insert((**a).clone());
            }
            expand(new1, old1.clone(), next.clone(), incoming.clone(), nodes)?;
            let mut new2 = new;
            if !old.contains(b.as_ref()) {
                new2.insert((**b).clone());
            }
            expand(new2, old1, next, incoming, nodes)
        }
        Nnf::Until(a, b) => {
            // a U b == b | (a & X(a U b))
            let mut old1 = old.clone();
            old1.insert(f.clone());
            let mut new1 = new.clone();
            if !old.contains(a.as_ref()) {
                new1.insert((**a).clone());
            }
            let mut next1 = next.clone();
            next1.insert(f.clone());
            expand(new1, old1.clone(), next1, incoming.clone(), nodes)?;
            let mut new2 = new;
            if !old.contains(b.as_ref()) {
                new2.insert((**b).clone());
            }
            expand(new2, old1, next, incoming, nodes)
        }
        Nnf::Release(a, b) => {
            // a R b == b & (a | X(a R b))
            let mut old1 = old.clone();
            old1.insert(f.clone());
            let mut new1 = new.clone();
            if !old.contains(a.as_ref()) {
                new1.insert((**a).clone());
            }
            if !old.contains(b.as_ref()) {
                new1.insert((**b).clone());
            }
            expand(new1, old1.clone(), next.clone(), incoming.clone(), nodes)?;
            let mut new2 = new;
            if !old.contains(b.as_ref()) {
                new2.insert((**b).clone());
            }
            let mut next2 = next;
            next2.insert(f.clone());
            expand(new2, old1, next2, incoming, nodes)
        }
    }
}

fn until_subformulas(f: &Nnf, out: &mut BTreeSet<Nnf>) {
    match f {
        Nnf::True | Nnf::False | Nnf::Pos(_) | Nnf::Neg(_) => {}
        Nnf::Next(a) => until_subformulas(a, out),
        Nnf::And(a, b) | Nnf::Or(a, b) | Nnf::Release(a, b) => {
            until_subformulas(a, out);
            until_subformulas(b, out);
        }
        Nnf::Until(a, b) => {
            out.insert(f.clone());
            until_subformulas(a, out);
            until_subformulas(b, out);
        }
    }
}

/// Translate a formula into a Büchi automaton over `ap` whose accepted
/// ω-language is exactly the set of satisfying traces.
pub fn to_buchi(phi: &LtlFormula, ap: &PropSet) -> Result<BuchiAutomaton, LtlError> {
    let nnf = to_nnf(phi, false);
    let mut nodes: Vec<Node> = Vec::new();
    let mut init_new = BTreeSet::new();
    init_new.insert(nnf.clone());
    let mut init_incoming = BTreeSet::new();
    init_incoming.insert(INIT_MARK);
    expand(
        init_new,
        BTreeSet::new(),
        BTreeSet::new(),
        init_incoming,
        &mut nodes,
    )?;

    // Generalized acceptance: one set per Until subformula.
    let mut untils = BTreeSet::new();
    until_subformulas(&nnf, &mut untils);
    let untils: Vec<Nnf> = untils.into_iter().collect();
    let k = untils.len().max(1);
    let in_acc_set = |node: &Node, j: usize| -> bool {
        if untils.is_empty() {
            return true;
        }
        let u = &untils[j];
        let goal = match u {
            Nnf::Until(_, b) => b.as_ref(),
            _ => unreachable!(),
        };
        node.old.contains(goal) || !node.old.contains(u)
    };

    let constraint_of = |node: &Node| -> LetterConstraint {
        let mut must = BTreeSet::new();
        let mut must_not = BTreeSet::new();
        for f in &node.old {
            match f {
                Nnf::Pos(p) => {
                    must.insert(p.clone());
                }
                Nnf::Neg(p) => {
                    must_not.insert(p.clone());
                }
                _ => {}
            }
        }
        LetterConstraint { must, must_not }
    };

    // Degeneralize: states are (node, counter) pairs plus the distinguished
    // initial state 0. Counter j waits for acceptance set j; it advances when
    // the current node is in set j, and a wrap through set k-1 is accepting.
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for j in 0..k {
        for (i, _) in nodes.iter().enumerate() {
            index.insert((i, j), 1 + order.len());
            order.push((i, j));
        }
    }
    let n_states = 1 + order.len();
    let mut transitions: Vec<(usize, LetterConstraint, usize)> = Vec::new();
    let mut accepting = vec![false; n_states];
    for (&(i, j), &sid) in &index {
        let node = &nodes[i];
        let next_j = if in_acc_set(node, j) { (j + 1) % k } else { j };
        if in_acc_set(node, j) && j == k - 1 {
            accepting[sid] = true;
        }
        // Edges into node r exist from every node listed in r.incoming.
        for (r_id, r) in nodes.iter().enumerate() {
            if r.incoming.contains(&i) {
                transitions.push((sid, constraint_of(r), index[&(r_id, next_j)]));
            }
        }
        if node.incoming.contains(&INIT_MARK) {
            transitions.push((0, constraint_of(node), index[&(i, 0)]));
        }
    }

    // Prune states unreachable from the initial state.
    let mut reach = vec![false; n_states];
    reach[0] = true;
    let mut stack = vec![0usize];
    while let Some(s) = stack.pop() {
        for (a, _, b) in &transitions {
            if *a == s && !reach[*b] {
                reach[*b] = true;
                stack.push(*b);
            }
        }
    }
    let mut renum = vec![usize::MAX; n_states];
    let mut count = 0;
    for (s, r) in reach.iter().enumerate() {
        if *r {
            renum[s] = count;
            count += 1;
        }
    }
    let transitions: Vec<(usize, LetterConstraint, usize)> = {
        let mut v: Vec<_> = transitions
            .into_iter()
            .filter(|(a, _, b)| reach[*a] && reach[*b])
            .map(|(a, c, b)| (renum[a], c, renum[b]))
            .collect();
        v.sort();
        v.dedup();
        v
    };
    let accepting: Vec<bool> = (0..n_states)
        .filter(|&s| reach[s])
        .map(|s| accepting[s])
        .collect();
    Ok(BuchiAutomaton {
        ap: ap.clone(),
        n_states: count,
        initial: vec![0],
        transitions,
        accepting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{eval_on_lasso, LtlFormula as L};

    /// All lasso words `u v^ω` with |u|+|v| <= max_len over the given atoms.
    fn all_lassos(atoms: &[&str], max_len: usize) -> Vec<(Vec<Label>, Vec<Label>)> {
        let letters: Vec<Label> = (0..(1usize << atoms.len()))
            .map(|bits| {
                atoms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| bits & (1 << i) != 0)
                    .map(|(_, a)| a.to_string())
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        fn words(letters: &[Label], len: usize) -> Vec<Vec<Label>> {
            if len == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for w in words(letters, len - 1) {
                for l in letters {
                    let mut w2 = w.clone();
                    w2.push(l.clone());
                    out.push(w2);
                }
            }
            out
        }
        for total in 1..=max_len {
            for cyc_len in 1..=total {
                let pre_len = total - cyc_len;
                for pre in words(&letters, pre_len) {
                    for cyc in words(&letters, cyc_len) {
                        out.push((pre.clone(), cyc));
                    }
                }
            }
        }
        out
    }

    /// Bounded-trace oracle: the automaton must agree with direct formula
    /// evaluation on every short lasso word.
    fn agrees_with_semantics(phi: &L, atoms: &[&str], max_len: usize) {
        let ap = PropSet::new(atoms.iter().map(|s| s.to_string())).unwrap();
        let ba = to_buchi(phi, &ap).unwrap();
        for (pre, cyc) in all_lassos(atoms, max_len) {
            let expect = eval_on_lasso(phi, &pre, &cyc);
            let got = ba.accepts_lasso(&pre, &cyc);
            assert_eq!(
                got, expect,
                "mismatch for {phi} on prefix {pre:?} cycle {cyc:?}"
            );
        }
    }

    #[test]
    fn atom_automaton() {
        agrees_with_semantics(&L::atom("p"), &["p"], 6);
    }

    #[test]
    fn g_true_accepts_everything() {
        let ap = PropSet::new(["p"]).unwrap();
        let ba = to_buchi(&L::always(L::True), &ap).unwrap();
        for (pre, cyc) in all_lassos(&["p"], 4) {
            assert!(ba.accepts_lasso(&pre, &cyc));
        }
    }

    #[test]
    fn g_p_rejects_not_p() {
        agrees_with_semantics(&L::always(L::atom("p")), &["p"], 6);
    }

    #[test]
    fn f_p_and_next() {
        agrees_with_semantics(&L::eventually(L::atom("p")), &["p"], 5);
        agrees_with_semantics(&L::next(L::atom("p")), &["p"], 5);
    }

    #[test]
    fn until_two_atoms() {
        agrees_with_semantics(&L::until(L::atom("p"), L::atom("q")), &["p", "q"], 4);
    }

    #[test]
    fn implication_with_temporal_antecedent() {
        let phi = L::implies(L::always(L::atom("p")), L::next(L::not(L::atom("q"))));
        agrees_with_semantics(&phi, &["p", "q"], 4);
    }
}
