//! Transition systems, finite-state automata, and the product construction.
//!
//! A [`TransitionSystem`] models the environment (states labeled with atomic
//! propositions, total transition relation). An [`Fsa`] represents a compiled
//! plan: guarded transitions, labeled states. Their synchronized composition
//! is a [`ProductAutomaton`] whose infinite executions are exactly the runs
//! of the plan in the environment.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// A label: the set of atomic propositions that hold at a state.
pub type Label = BTreeSet<String>;

#[derive(Debug, Error, PartialEq)]
pub enum AutomataError {
    #[error("duplicate atomic proposition `{0}`")]
    DuplicateProposition(String),
    #[error("too many atomic propositions: {0} (max 16)")]
    TooManyPropositions(usize),
    #[error("too many environment propositions: {0} (max 10)")]
    TooManyEnvProps(usize),
    #[error("atomic proposition sets differ: {0}")]
    PropositionMismatch(String),
    #[error("state index {0} out of range")]
    BadStateIndex(usize),
    #[error("guard references undeclared proposition `{0}`")]
    UndeclaredProposition(String),
    #[error("transition system state `{0}` has no outgoing transition")]
    NotTotal(String),
}

/// Ordered set of atomic proposition names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropSet {
    names: Vec<String>,
}

impl PropSet {
    pub fn new<I, S>(names: I) -> Result<Self, AutomataError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for n in names {
            let n = n.into();
            if !seen.insert(n.clone()) {
                return Err(AutomataError::DuplicateProposition(n));
            }
            out.push(n);
        }
        if out.len() > 16 {
            return Err(AutomataError::TooManyPropositions(out.len()));
        }
        Ok(PropSet { names: out })
    }

    /// Sorted union of two proposition sets.
    pub fn union(&self, other: &PropSet) -> Result<PropSet, AutomataError> {
        let mut all: BTreeSet<&str> = self.names.iter().map(|s| s.as_str()).collect();
        all.extend(other.names.iter().map(|s| s.as_str()));
        PropSet::new(all.into_iter().map(|s| s.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn same_set(&self, other: &PropSet) -> bool {
        let a: BTreeSet<_> = self.names.iter().collect();
        let b: BTreeSet<_> = other.names.iter().collect();
        a == b
    }
}

/// Propositional formula used as a transition guard.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Guard {
    True,
    False,
    Atom(String),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn atom(name: impl Into<String>) -> Guard {
        Guard::Atom(name.into())
    }

    pub fn not(g: Guard) -> Guard {
        Guard::Not(Box::new(g))
    }

    pub fn and(a: Guard, b: Guard) -> Guard {
        Guard::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Guard, b: Guard) -> Guard {
        Guard::Or(Box::new(a), Box::new(b))
    }

    pub fn eval(&self, label: &Label) -> bool {
        match self {
            Guard::True => true,
            Guard::False => false,
            Guard::Atom(a) => label.contains(a),
            Guard::Not(g) => !g.eval(label),
            Guard::And(a, b) => a.eval(label) && b.eval(label),
            Guard::Or(a, b) => a.eval(label) || b.eval(label),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Guard::True | Guard::False => {}
            Guard::Atom(a) => {
                out.insert(a.clone());
            }
            Guard::Not(g) => g.collect_atoms(out),
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Semantic equivalence: identical truth tables over the atoms of both guards.
    pub fn equivalent(&self, other: &Guard) -> bool {
        let mut atoms = self.atoms();
        atoms.extend(other.atoms());
        let atoms: Vec<String> = atoms.into_iter().collect();
        let n = atoms.len();
        for bits in 0u32..(1 << n) {
            let label: Label = atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| bits & (1 << i) != 0)
                .map(|(_, a)| a.clone())
                .collect();
            if self.eval(&label) != other.eval(&label) {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::True => write!(f, "true"),
            Guard::False => write!(f, "false"),
            Guard::Atom(a) => {
                if a.chars().all(|c| c.is_alphanumeric() || c == '_') {
                    write!(f, "{a}")
                } else {
                    write!(f, "\"{a}\"")
                }
            }
            Guard::Not(g) => write!(f, "!{g}"),
            Guard::And(a, b) => write!(f, "({a} & {b})"),
            Guard::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

/// Environment model: states, total transition relation, labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSystem {
    pub ap: PropSet,
    pub state_names: Vec<String>,
    pub labels: Vec<Label>,
    /// Pairs of state indices.
    pub transitions: BTreeSet<(usize, usize)>,
}

impl TransitionSystem {
    pub fn new(
        ap: PropSet,
        state_names: Vec<String>,
        labels: Vec<Label>,
        transitions: BTreeSet<(usize, usize)>,
    ) -> Result<Self, AutomataError> {
        assert_eq!(state_names.len(), labels.len());
        let n = state_names.len();
        for &(a, b) in &transitions {
            if a >= n || b >= n {
                return Err(AutomataError::BadStateIndex(a.max(b)));
            }
        }
        for l in &labels {
            for p in l {
                if !ap.contains(p) {
                    return Err(AutomataError::UndeclaredProposition(p.clone()));
                }
            }
        }
        for i in 0..n {
            if !transitions.iter().any(|&(a, _)| a == i) {
                return Err(AutomataError::NotTotal(state_names[i].clone()));
            }
        }
        Ok(TransitionSystem {
            ap,
            state_names,
            labels,
            transitions,
        })
    }

    pub fn len(&self) -> usize {
        self.state_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state_names.is_empty()
    }
}

/// Fully connected environment over every subset of `env_props`.
///
/// This is the most permissive environment: one state per subset, every state
/// reaches every state (self-loops included). A plan that satisfies a
/// specification here satisfies it in any refinement of the environment.
pub fn universal_ts(ap: &PropSet, env_props: &BTreeSet<String>) -> Result<TransitionSystem, AutomataError> {
    if env_props.len() > 10 {
        return Err(AutomataError::TooManyEnvProps(env_props.len()));
    }
    for p in env_props {
        if !ap.contains(p) {
            return Err(AutomataError::UndeclaredProposition(p.clone()));
        }
    }
    let props: Vec<&String> = env_props.iter().collect();
    let n = 1usize << props.len();
    let mut state_names = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    // Subsets enumerated in lexicographic order of their label text so that
    // serialized output is byte-stable.
    let mut subsets: Vec<Label> = (0..n)
        .map(|bits| {
            props
                .iter()
                .enumerate()
                .filter(|(i, _)| bits & (1 << i) != 0)
                .map(|(_, p)| (*p).clone())
                .collect()
        })
        .collect();
    subsets.sort();
    for label in subsets {
        let name = if label.is_empty() {
            "{}".to_string()
        } else {
            format!("{{{}}}", label.iter().cloned().collect::<Vec<_>>().join(","))
        };
        state_names.push(name);
        labels.push(label);
    }
    let mut transitions = BTreeSet::new();
    for a in 0..n {
        for b in 0..n {
            transitions.insert((a, b));
        }
    }
    TransitionSystem::new(ap.clone(), state_names, labels, transitions)
}

/// Compiled-plan automaton: guarded transitions, labeled states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fsa {
    pub ap: PropSet,
    pub state_names: Vec<String>,
    pub labels: Vec<Label>,
    pub initial: usize,
    pub transitions: Vec<(usize, Guard, usize)>,
}

impl Fsa {
    pub fn validate(&self) -> Result<(), AutomataError> {
        let n = self.state_names.len();
        if self.initial >= n {
            return Err(AutomataError::BadStateIndex(self.initial));
        }
        for (a, g, b) in &self.transitions {
            if *a >= n || *b >= n {
                return Err(AutomataError::BadStateIndex(*a.max(b)));
            }
            for atom in g.atoms() {
                if !self.ap.contains(&atom) {
                    return Err(AutomataError::UndeclaredProposition(atom));
                }
            }
        }
        for l in &self.labels {
            for p in l {
                if !self.ap.contains(p) {
                    return Err(AutomataError::UndeclaredProposition(p.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.state_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state_names.is_empty()
    }

    /// Widen the proposition set (labels and guards are unchanged).
    pub fn extend_ap(&self, ap: &PropSet) -> Result<Fsa, AutomataError> {
        let merged = self.ap.union(ap)?;
        let mut out = self.clone();
        out.ap = merged;
        Ok(out)
    }

    /// Add a `true`-guarded self-loop to every state with no outgoing
    /// transition, so finite plans denote infinite (stuttering) executions.
    pub fn stutter_closed(&self) -> Fsa {
        let mut out = self.clone();
        for s in 0..self.len() {
            if !self.transitions.iter().any(|(a, _, _)| *a == s) {
                out.transitions.push((s, Guard::True, s));
            }
        }
        out
    }

    /// Graphviz text rendering.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph fsa {\n  rankdir=LR;\n  init [shape=point];\n");
        for (i, name) in self.state_names.iter().enumerate() {
            let label = self.labels[i]
                .iter()
                .cloned()
                .collect::<Vec<_>>()
                .join(", ");
            let label = if label.is_empty() { "∅".to_string() } else { label };
            s.push_str(&format!(
                "  s{i} [shape=circle, label=\"{name}\\n{{{label}}}\"];\n"
            ));
        }
        s.push_str(&format!("  init -> s{};\n", self.initial));
        for (a, g, b) in &self.transitions {
            s.push_str(&format!("  s{a} -> s{b} [label=\"{g}\"];\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// Synchronized composition of a plan automaton with an environment model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductAutomaton {
    pub ap: PropSet,
    /// (fsa state, ts state) per product state, reachable states only.
    pub pairs: Vec<(usize, usize)>,
    pub labels: Vec<Label>,
    pub initial: Vec<usize>,
    /// Adjacency: sorted edge list over product-state indices.
    pub transitions: Vec<(usize, usize)>,
    pub fsa_names: Vec<String>,
    pub ts_names: Vec<String>,
}

impl ProductAutomaton {
    pub fn state_name(&self, i: usize) -> String {
        let (p, q) = self.pairs[i];
        format!("({},{})", self.fsa_names[p], self.ts_names[q])
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.transitions
            .iter()
            .filter(move |(a, _)| *a == i)
            .map(|(_, b)| *b)
    }
}

/// Product construction: a product transition ((p,q),(p',q')) exists iff the
/// automaton has (p, g, p') with L_s(q) satisfying g and the environment has
/// (q, q'). The product label is the union of the component labels.
/// Product states unreachable from the initial set are pruned.
pub fn product(a: &Fsa, ts: &TransitionSystem) -> Result<ProductAutomaton, AutomataError> {
    if !a.ap.same_set(&ts.ap) {
        return Err(AutomataError::PropositionMismatch(format!(
            "automaton AP {:?} vs transition system AP {:?}",
            a.ap.names(),
            ts.ap.names()
        )));
    }
    a.validate()?;

    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut worklist: Vec<(usize, usize)> = Vec::new();
    // Initial set {p0} x Q_s, in deterministic (ts index) order.
    for q in 0..ts.len() {
        let pair = (a.initial, q);
        index.insert(pair, pairs.len());
        pairs.push(pair);
        worklist.push(pair);
    }
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    while let Some((p, q)) = worklist.pop() {
        let from = index[&(p, q)];
        let mut succs: Vec<(usize, usize)> = Vec::new();
        for (src, g, dst) in &a.transitions {
            if *src != p || !g.eval(&ts.labels[q]) {
                continue;
            }
            for &(qa, qb) in &ts.transitions {
                if qa == q {
                    succs.push((*dst, qb));
                }
            }
        }
        succs.sort();
        succs.dedup();
        for pair in succs {
            let to = *index.entry(pair).or_insert_with(|| {
                pairs.push(pair);
                worklist.push(pair);
                pairs.len() - 1
            });
            edges.insert((from, to));
        }
    }

    // Renumber in lexicographic (fsa, ts) order for byte-stable output.
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by_key(|&i| pairs[i]);
    let mut renum = vec![0usize; pairs.len()];
    for (new, &old) in order.iter().enumerate() {
        renum[old] = new;
    }
    let sorted_pairs: Vec<(usize, usize)> = order.iter().map(|&i| pairs[i]).collect();
    let labels: Vec<Label> = sorted_pairs
        .iter()
        .map(|&(p, q)| {
            let mut l = a.labels[p].clone();
            l.extend(ts.labels[q].iter().cloned());
            l
        })
        .collect();
    let initial: Vec<usize> = {
        let mut v: Vec<usize> = (0..ts.len()).map(|q| renum[index[&(a.initial, q)]]).collect();
        v.sort();
        v
    };
    let transitions: Vec<(usize, usize)> = {
        let mut v: Vec<(usize, usize)> = edges
            .into_iter()
            .map(|(x, y)| (renum[x], renum[y]))
            .collect();
        v.sort();
        v
    };
    Ok(ProductAutomaton {
        ap: a.ap.clone(),
        pairs: sorted_pairs,
        labels,
        initial,
        transitions,
        fsa_names: a.state_names.clone(),
        ts_names: ts.state_names.clone(),
    })
}

/// Label- and guard-preserving isomorphism test, respecting initial states.
///
/// Exhaustive backtracking over label-compatible bijections; intended for the
/// small automata this crate compiles, not for large inputs.
pub fn iso_check(a: &Fsa, b: &Fsa) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let n = a.len();
    let mut mapping: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; n];
    mapping[a.initial] = Some(b.initial);
    used[b.initial] = true;
    if a.labels[a.initial] != b.labels[b.initial] {
        return false;
    }
    fn edges_match(a: &Fsa, b: &Fsa, mapping: &[Option<usize>]) -> bool {
        // Every mapped edge of `a` must have a guard-equivalent counterpart in
        // `b`, and vice versa.
        for (src, g, dst) in &a.transitions {
            if let (Some(ms), Some(md)) = (mapping[*src], mapping[*dst]) {
                let ok = b
                    .transitions
                    .iter()
                    .any(|(bs, bg, bd)| *bs == ms && *bd == md && g.equivalent(bg));
                if !ok {
                    return false;
                }
            }
        }
        for (bs, bg, bd) in &b.transitions {
            let pre_src: Vec<usize> = mapping
                .iter()
                .enumerate()
                .filter(|(_, m)| **m == Some(*bs))
                .map(|(i, _)| i)
                .collect();
            let pre_dst: Vec<usize> = mapping
                .iter()
                .enumerate()
                .filter(|(_, m)| **m == Some(*bd))
                .map(|(i, _)| i)
                .collect();
            for &s in &pre_src {
                for &d in &pre_dst {
                    let ok = a
                        .transitions
                        .iter()
                        .any(|(as_, ag, ad)| *as_ == s && *ad == d && ag.equivalent(bg));
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }
    fn backtrack(a: &Fsa, b: &Fsa, mapping: &mut Vec<Option<usize>>, used: &mut Vec<bool>) -> bool {
        let next = match mapping.iter().position(|m| m.is_none()) {
            None => return edges_match(a, b, mapping),
            Some(i) => i,
        };
        for cand in 0..b.len() {
            if used[cand] || a.labels[next] != b.labels[cand] {
                continue;
            }
            mapping[next] = Some(cand);
            used[cand] = true;
            if edges_match(a, b, mapping) && backtrack(a, b, mapping, used) {
                return true;
            }
            mapping[next] = None;
            used[cand] = false;
        }
        false
    }
    if !edges_match(a, b, &mapping) {
        return false;
    }
    backtrack(a, b, &mut mapping, &mut used)
}
