//! Linear temporal logic: formulas, parsing, automaton translation, and the
//! model checker that decides whether every execution of a plan-in-environment
//! product satisfies a specification.

mod buchi;
mod check;
mod parser;

pub use buchi::{to_buchi, BuchiAutomaton, LetterConstraint};
pub use check::{model_check, Lasso, Verdict};
pub use parser::parse_ltl;

use crate::automata::Label;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LtlError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("formula too large: tableau produced more than {0} states")]
    FormulaTooLarge(usize),
    #[error(transparent)]
    Automata(#[from] crate::automata::AutomataError),
}

/// Temporal-logic formula over named atomic propositions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LtlFormula {
    True,
    False,
    Atom(String),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Implies(Box<LtlFormula>, Box<LtlFormula>),
    /// X: holds at the next position.
    Next(Box<LtlFormula>),
    /// F: holds at some current-or-future position.
    Eventually(Box<LtlFormula>),
    /// G: holds at every current-or-future position.
    Always(Box<LtlFormula>),
    /// U: right operand eventually holds, left holds until then.
    Until(Box<LtlFormula>, Box<LtlFormula>),
}

impl LtlFormula {
    pub fn atom(name: impl Into<String>) -> Self {
        LtlFormula::Atom(name.into())
    }
    pub fn not(f: LtlFormula) -> Self {
        LtlFormula::Not(Box::new(f))
    }
    pub fn and(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Implies(Box::new(a), Box::new(b))
    }
    pub fn next(f: LtlFormula) -> Self {
        LtlFormula::Next(Box::new(f))
    }
    pub fn eventually(f: LtlFormula) -> Self {
        LtlFormula::Eventually(Box::new(f))
    }
    pub fn always(f: LtlFormula) -> Self {
        LtlFormula::Always(Box::new(f))
    }
    pub fn until(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Until(Box::new(a), Box::new(b))
    }

    pub fn atoms(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            LtlFormula::True | LtlFormula::False => {}
            LtlFormula::Atom(a) => {
                out.insert(a.clone());
            }
            LtlFormula::Not(f)
            | LtlFormula::Next(f)
            | LtlFormula::Eventually(f)
            | LtlFormula::Always(f) => f.collect_atoms(out),
            LtlFormula::And(a, b)
            | LtlFormula::Or(a, b)
            | LtlFormula::Implies(a, b)
            | LtlFormula::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Number of temporal operators (X, F, G, U) in the formula.
    pub fn temporal_ops(&self) -> usize {
        match self {
            LtlFormula::True | LtlFormula::False | LtlFormula::Atom(_) => 0,
            LtlFormula::Not(f) => f.temporal_ops(),
            LtlFormula::Next(f) | LtlFormula::Eventually(f) | LtlFormula::Always(f) => {
                1 + f.temporal_ops()
            }
            LtlFormula::And(a, b) | LtlFormula::Or(a, b) | LtlFormula::Implies(a, b) => {
                a.temporal_ops() + b.temporal_ops()
            }
            LtlFormula::Until(a, b) => 1 + a.temporal_ops() + b.temporal_ops(),
        }
    }
}

fn fmt_atom(f: &mut fmt::Formatter<'_>, a: &str) -> fmt::Result {
    if !a.is_empty()
        && a.chars().all(|c| c.is_alphanumeric() || c == '_')
        && !matches!(a, "G" | "F" | "X" | "U" | "true" | "false")
    {
        write!(f, "{a}")
    } else {
        write!(f, "\"{a}\"")
    }
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LtlFormula::True => write!(f, "true"),
            LtlFormula::False => write!(f, "false"),
            LtlFormula::Atom(a) => fmt_atom(f, a),
            LtlFormula::Not(x) => write!(f, "!({x})"),
            LtlFormula::And(a, b) => write!(f, "({a} & {b})"),
            LtlFormula::Or(a, b) => write!(f, "({a} | {b})"),
            LtlFormula::Implies(a, b) => write!(f, "({a} -> {b})"),
            LtlFormula::Next(x) => write!(f, "X ({x})"),
            LtlFormula::Eventually(x) => write!(f, "F ({x})"),
            LtlFormula::Always(x) => write!(f, "G ({x})"),
            LtlFormula::Until(a, b) => write!(f, "({a} U {b})"),
        }
    }
}

/// Exact evaluation of a formula on an ultimately periodic word
/// `prefix · cycle^ω` given as state labels. The cycle must be non-empty.
///
/// Until is solved as a least fixpoint over the lasso positions, so the
/// result is exact, not a bounded approximation.
pub fn eval_on_lasso(phi: &LtlFormula, prefix: &[Label], cycle: &[Label]) -> bool {
    assert!(!cycle.is_empty(), "lasso cycle must be non-empty");
    let n = prefix.len() + cycle.len();
    let succ = |i: usize| if i + 1 < n { i + 1 } else { prefix.len() };
    let label = |i: usize| -> &Label {
        if i < prefix.len() {
            &prefix[i]
        } else {
            &cycle[i - prefix.len()]
        }
    };
    fn eval<'a>(
        phi: &LtlFormula,
        n: usize,
        succ: &dyn Fn(usize) -> usize,
        label: &dyn Fn(usize) -> &'a Label,
    ) -> Vec<bool> {
        match phi {
            LtlFormula::True => vec![true; n],
            LtlFormula::False => vec![false; n],
            LtlFormula::Atom(a) => (0..n).map(|i| label(i).contains(a)).collect(),
            LtlFormula::Not(f) => eval(f, n, succ, label).into_iter().map(|b| !b).collect(),
            LtlFormula::And(a, b) => {
                let (va, vb) = (eval(a, n, succ, label), eval(b, n, succ, label));
                (0..n).map(|i| va[i] && vb[i]).collect()
            }
            LtlFormula::Or(a, b) => {
                let (va, vb) = (eval(a, n, succ, label), eval(b, n, succ, label));
                (0..n).map(|i| va[i] || vb[i]).collect()
            }
            LtlFormula::Implies(a, b) => {
                let (va, vb) = (eval(a, n, succ, label), eval(b, n, succ, label));
                (0..n).map(|i| !va[i] || vb[i]).collect()
            }
            LtlFormula::Next(f) => {
                let v = eval(f, n, succ, label);
                (0..n).map(|i| v[succ(i)]).collect()
            }
            LtlFormula::Eventually(f) => {
                // least fixpoint of F f = f | X F f
                let vf = eval(f, n, succ, label);
                let mut v = vf.clone();
                for _ in 0..n {
                    let mut changed = false;
                    for i in 0..n {
                        let nv = vf[i] || v[succ(i)];
                        if nv != v[i] {
                            v[i] = nv;
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                v
            }
            LtlFormula::Always(f) => {
                // greatest fixpoint of G f = f & X G f
                let vf = eval(f, n, succ, label);
                let mut v = vf.clone();
                for _ in 0..n {
                    let mut changed = false;
                    for i in 0..n {
                        let nv = vf[i] && v[succ(i)];
                        if nv != v[i] {
                            v[i] = nv;
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                v
            }
            LtlFormula::Until(a, b) => {
                let (va, vb) = (eval(a, n, succ, label), eval(b, n, succ, label));
                let mut v = vb.clone();
                for _ in 0..n {
                    let mut changed = false;
                    for i in 0..n {
                        let nv = vb[i] || (va[i] && v[succ(i)]);
                        if nv != v[i] {
                            v[i] = nv;
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                v
            }
        }
    }
    eval(phi, n, &succ, &label)[0]
}

/// Negation-normal form with a Release operator, used internally by the
/// tableau translation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Nnf {
    True,
    False,
    Pos(String),
    Neg(String),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    Next(Box<Nnf>),
    Until(Box<Nnf>, Box<Nnf>),
    Release(Box<Nnf>, Box<Nnf>),
}

pub(crate) fn to_nnf(phi: &LtlFormula, negated: bool) -> Nnf {
    match (phi, negated) {
        (LtlFormula::True, false) | (LtlFormula::False, true) => Nnf::True,
        (LtlFormula::True, true) | (LtlFormula::False, false) => Nnf::False,
        (LtlFormula::Atom(a), false) => Nnf::Pos(a.clone()),
        (LtlFormula::Atom(a), true) => Nnf::Neg(a.clone()),
        (LtlFormula::Not(f), neg) => to_nnf(f, !neg),
        (LtlFormula::And(a, b), false) => Nnf::And(Box::new(to_nnf(a, false)), Box::new(to_nnf(b, false))),
        (LtlFormula::And(a, b), true) => Nnf::Or(Box::new(to_nnf(a, true)), Box::new(to_nnf(b, true))),
        (LtlFormula::Or(a, b), false) => Nnf::Or(Box::new(to_nnf(a, false)), Box::new(to_nnf(b, false))),
        (LtlFormula::Or(a, b), true) => Nnf::And(Box::new(to_nnf(a, true)), Box::new(to_nnf(b, true))),
        (LtlFormula::Implies(a, b), false) => {
            Nnf::Or(Box::new(to_nnf(a, true)), Box::new(to_nnf(b, false)))
        }
        (LtlFormula::Implies(a, b), true) => {
            Nnf::And(Box::new(to_nnf(a, false)), Box::new(to_nnf(b, true)))
        }
        (LtlFormula::Next(f), neg) => Nnf::Next(Box::new(to_nnf(f, neg))),
        // F f == true U f; G f == false R f
        (LtlFormula::Eventually(f), false) => {
            Nnf::Until(Box::new(Nnf::True), Box::new(to_nnf(f, false)))
        }
        (LtlFormula::Eventually(f), true) => {
            Nnf::Release(Box::new(Nnf::False), Box::new(to_nnf(f, true)))
        }
        (LtlFormula::Always(f), false) => {
            Nnf::Release(Box::new(Nnf::False), Box::new(to_nnf(f, false)))
        }
        (LtlFormula::Always(f), true) => {
            Nnf::Until(Box::new(Nnf::True), Box::new(to_nnf(f, true)))
        }
        (LtlFormula::Until(a, b), false) => {
            Nnf::Until(Box::new(to_nnf(a, false)), Box::new(to_nnf(b, false)))
        }
        (LtlFormula::Until(a, b), true) => {
            Nnf::Release(Box::new(to_nnf(a, true)), Box::new(to_nnf(b, true)))
        }
    }
}
