//! Plan-to-automaton compilation.
//!
//! Compiles a parsed plan into a finite-state automaton whose states are
//! labeled with the propositions emitted by each API call and whose guarded
//! transitions reflect the plan's control flow: sequences chain through
//! `True` edges, `if`/`else` branches from a shared unlabeled hub that both
//! arms rejoin, `while` loops re-test its condition at the body exit,
//! bounded `for` loops unroll, and helper functions are inlined.

use crate::automata::{AutomataError, Fsa, Guard, Label, PropSet};
use crate::plan_lang::{CondExpr, PlanAst, Stmt, SLEEP_BUILTIN};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeSet;
use thiserror::Error;

/// Maximum helper-inlining depth before compilation is aborted.
pub const MAX_INLINE_DEPTH: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum L2aError {
    #[error("no proposition mapping matches `{api}` at {site}")]
    UnmappedApi { api: String, site: String },
    #[error("helper inlining exceeded depth {limit}; check for deeply nested calls")]
    InlineDepthExceeded { limit: usize },
    #[error("plan references undefined function `{0}`")]
    MissingFunction(String),
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

// ---------------------------------------------------------------------------
// Proposition mapping
// ---------------------------------------------------------------------------

/// Pattern over a single opaque argument. Arguments written as keyword
/// arguments (`linear=10`) are matched on the value part.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgPattern {
    /// `*` — any argument.
    Any,
    /// `+` — numeric literal strictly greater than zero.
    Positive,
    /// `-` — numeric literal strictly less than zero.
    Negative,
    /// `0` — numeric literal equal to zero.
    Zero,
    /// `=text` — exact match (numeric when both sides parse, textual otherwise).
    Literal(String),
}

impl ArgPattern {
    pub fn parse(text: &str) -> Result<Self, String> {
        match text {
            "*" => Ok(ArgPattern::Any),
            "+" => Ok(ArgPattern::Positive),
            "-" => Ok(ArgPattern::Negative),
            "0" => Ok(ArgPattern::Zero),
            _ => match text.strip_prefix('=') {
                Some(lit) if !lit.is_empty() => Ok(ArgPattern::Literal(lit.to_string())),
                _ => Err(format!(
                    "invalid argument pattern `{text}` (expected `*`, `+`, `-`, `0`, or `=literal`)"
                )),
            },
        }
    }

    fn render(&self) -> String {
        match self {
            ArgPattern::Any => "*".into(),
            ArgPattern::Positive => "+".into(),
            ArgPattern::Negative => "-".into(),
            ArgPattern::Zero => "0".into(),
            ArgPattern::Literal(l) => format!("={l}"),
        }
    }

    pub fn matches(&self, arg: &str) -> bool {
        let value = strip_keyword(arg);
        match self {
            ArgPattern::Any => true,
            ArgPattern::Positive => value.parse::<f64>().map(|v| v > 0.0).unwrap_or(false),
            ArgPattern::Negative => value.parse::<f64>().map(|v| v < 0.0).unwrap_or(false),
            ArgPattern::Zero => value.parse::<f64>().map(|v| v == 0.0).unwrap_or(false),
            ArgPattern::Literal(lit) => match (value.parse::<f64>(), lit.parse::<f64>()) {
                (Ok(a), Ok(b)) => a == b,
                _ => value.trim_matches(|c| c == '"' || c == '\'') == lit,
            },
        }
    }
}

fn strip_keyword(arg: &str) -> &str {
    match arg.split_once('=') {
        Some((name, value))
            if !value.starts_with('=')
                && name
                    .trim()
                    .chars()
                    .all(|c| c.is_alphanumeric() || c == '_') =>
        {
            value.trim()
        }
        _ => arg.trim(),
    }
}

impl Serialize for ArgPattern {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for ArgPattern {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        ArgPattern::parse(&text).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    /// Matched calls appear in conditions; emitted propositions become
    /// guard atoms.
    Sensor,
    /// Matched calls appear as statements; emitted propositions become
    /// state labels.
    Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingRule {
    pub api: String,
    pub kind: RuleKind,
    /// One pattern per argument; the rule only matches calls with the same
    /// arity. First matching rule wins.
    #[serde(default)]
    pub args: Vec<ArgPattern>,
    pub props: Vec<String>,
}

impl MappingRule {
    fn matches(&self, api: &str, args: &[String]) -> bool {
        self.api == api
            && self.args.len() == args.len()
            && self.args.iter().zip(args).all(|(p, a)| p.matches(a))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropositionMapping {
    pub rules: Vec<MappingRule>,
    /// When set, action calls with no matching rule compile to an unlabeled
    /// state instead of failing. Unmapped sensor calls are always an error:
    /// a guard cannot be approximated soundly.
    #[serde(default)]
    pub permissive: bool,
}

impl PropositionMapping {
    pub fn lookup(&self, kind: RuleKind, api: &str, args: &[String]) -> Option<&MappingRule> {
        self.rules
            .iter()
            .filter(|r| r.kind == kind)
            .find(|r| r.matches(api, args))
    }

    /// Every proposition any rule can emit, in sorted order. Used as the
    /// compiled automaton's alphabet so automata from the same mapping are
    /// directly comparable.
    pub fn all_props(&self) -> BTreeSet<String> {
        self.rules
            .iter()
            .flat_map(|r| r.props.iter().cloned())
            .collect()
    }

    /// Propositions emitted by sensor rules; these are the
    /// environment-controlled inputs of the transition system.
    pub fn sensor_props(&self) -> BTreeSet<String> {
        self.rules
            .iter()
            .filter(|r| r.kind == RuleKind::Sensor)
            .flat_map(|r| r.props.iter().cloned())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Compiler
// ---------------------------------------------------------------------------

/// A compiled plan fragment: its entry state and the states control leaves
/// from. `None` for fragments that compile to nothing (assignments, bare
/// returns), which pass control straight through.
type Fragment = Option<(usize, Vec<usize>)>;

struct Compiler<'a> {
    ast: &'a PlanAst,
    map: &'a PropositionMapping,
    labels: Vec<Label>,
    transitions: Vec<(usize, Guard, usize)>,
}

impl<'a> Compiler<'a> {
    fn state(&mut self, label: Label) -> usize {
        self.labels.push(label);
        self.labels.len() - 1
    }

    fn edge(&mut self, from: usize, guard: Guard, to: usize) {
        self.transitions.push((from, guard, to));
    }

    fn connect(&mut self, froms: &[usize], guard: &Guard, to: usize) {
        for &f in froms {
            self.edge(f, guard.clone(), to);
        }
    }

    fn guard_of(&self, cond: &CondExpr, site: &str) -> Result<Guard, L2aError> {
        Ok(match cond {
            CondExpr::Bool(true) => Guard::True,
            CondExpr::Bool(false) => Guard::False,
            CondExpr::Call { target, args } => {
                let rule = self.map.lookup(RuleKind::Sensor, target, args).ok_or_else(|| {
                    L2aError::UnmappedApi {
                        api: target.clone(),
                        site: site.to_string(),
                    }
                })?;
                rule.props
                    .iter()
                    .map(|p| Guard::atom(p))
                    .reduce(Guard::and)
                    .unwrap_or(Guard::True)
            }
            CondExpr::Not(c) => Guard::not(self.guard_of(c, site)?),
            CondExpr::And(a, b) => Guard::and(self.guard_of(a, site)?, self.guard_of(b, site)?),
            CondExpr::Or(a, b) => Guard::or(self.guard_of(a, site)?, self.guard_of(b, site)?),
        })
    }

    fn compile_call(
        &mut self,
        target: &str,
        args: &[String],
        depth: usize,
    ) -> Result<Fragment, L2aError> {
        if target == SLEEP_BUILTIN {
            // Time is abstracted: sleeping is an unlabeled pass-through state.
            let s = self.state(Label::new());
            return Ok(Some((s, vec![s])));
        }
        if let Some(f) = self.ast.function(target) {
            if depth >= MAX_INLINE_DEPTH {
                return Err(L2aError::InlineDepthExceeded {
                    limit: MAX_INLINE_DEPTH,
                });
            }
            let body = f.body.clone();
            return self.compile_block(&body, depth + 1);
        }
        match self.map.lookup(RuleKind::Action, target, args) {
            Some(rule) => {
                let s = self.state(rule.props.iter().cloned().collect());
                Ok(Some((s, vec![s])))
            }
            None if self.map.permissive => {
                let s = self.state(Label::new());
                Ok(Some((s, vec![s])))
            }
            None => Err(L2aError::UnmappedApi {
                api: target.to_string(),
                site: format!("{target}({})", args.join(", ")),
            }),
        }
    }

    fn compile_stmt(&mut self, stmt: &Stmt, depth: usize) -> Result<Fragment, L2aError> {
        match stmt {
            // Assignments carry no operational semantics; returns are
            // control-inert because helpers are inlined and plans only use
            // trailing returns.
            Stmt::Assign { .. } | Stmt::Return => Ok(None),
            Stmt::Call { target, args } => self.compile_call(target, args, depth),
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                let guard = self.guard_of(cond, "if condition")?;
                // The branch state is the shared unlabeled hub both arms
                // rejoin, so a bare if/else compiles to the three-state
                // test/act/act loop.
                let hub = self.state(Label::new());
                for (g, body) in [
                    (guard.clone(), then_body),
                    (Guard::not(guard), else_body),
                ] {
                    match self.compile_block(body, depth)? {
                        Some((entry, exits)) => {
                            self.edge(hub, g, entry);
                            self.connect(&exits, &Guard::True, hub);
                        }
                        None => self.edge(hub, g, hub),
                    }
                }
                Ok(Some((hub, vec![hub])))
            }
            Stmt::While { cond, body } => {
                let guard = self.guard_of(cond, "while condition")?;
                let entry = self.state(Label::new());
                let exit = self.state(Label::new());
                // The loop head commits to its condition: there is no direct
                // entry→exit bypass, matching the canonical loop structure.
                // Unsatisfiable exit edges (from `while True`) are dropped.
                let neg = Guard::not(guard.clone());
                let neg_sat = !neg.equivalent(&Guard::False);
                match self.compile_block(body, depth)? {
                    Some((body_entry, body_exits)) => {
                        self.edge(entry, guard.clone(), body_entry);
                        self.connect(&body_exits, &guard, body_entry);
                        if neg_sat {
                            self.connect(&body_exits, &neg, exit);
                        }
                    }
                    None => {
                        self.edge(entry, guard.clone(), entry);
                        if neg_sat {
                            self.edge(entry, neg, exit);
                        }
                    }
                }
                Ok(Some((entry, vec![exit])))
            }
            Stmt::For { count, body } => {
                let mut combined: Fragment = None;
                for _ in 0..*count {
                    let next = self.compile_block(body, depth)?;
                    combined = self.chain(combined, next);
                }
                Ok(combined)
            }
        }
    }

    fn chain(&mut self, first: Fragment, second: Fragment) -> Fragment {
        match (first, second) {
            (None, f) | (f, None) => f,
            (Some((entry, exits)), Some((entry2, exits2))) => {
                self.connect(&exits, &Guard::True, entry2);
                Some((entry, exits2))
            }
        }
    }

    fn compile_block(&mut self, body: &[Stmt], depth: usize) -> Result<Fragment, L2aError> {
        let mut frag: Fragment = None;
        for stmt in body {
            let next = self.compile_stmt(stmt, depth)?;
            frag = self.chain(frag, next);
        }
        Ok(frag)
    }
}

/// Compile a plan to an automaton. The alphabet is every proposition the
/// mapping can emit; plans compiled under the same mapping therefore share
/// an alphabet and can be compared or composed directly.
pub fn l2a(ast: &PlanAst, map: &PropositionMapping) -> Result<Fsa, L2aError> {
    let entry = ast
        .entry_function()
        .ok_or_else(|| L2aError::MissingFunction(ast.entry.clone()))?;
    let mut c = Compiler {
        ast,
        map,
        labels: Vec::new(),
        transitions: Vec::new(),
    };
    let body = entry.body.clone();
    let frag = c.compile_block(&body, 0)?;
    let initial = match frag {
        Some((entry, _)) => entry,
        None => c.state(Label::new()),
    };
    // Terminal states stutter: a finished plan keeps holding its last state.
    let mut has_out = vec![false; c.labels.len()];
    for &(from, _, _) in &c.transitions {
        has_out[from] = true;
    }
    for (s, out) in has_out.iter().enumerate() {
        if !out {
            c.transitions.push((s, Guard::True, s));
        }
    }
    let ap = PropSet::new(map.all_props())?;
    let fsa = Fsa {
        state_names: (0..c.labels.len()).map(|i| format!("q{i}")).collect(),
        labels: c.labels,
        initial,
        transitions: c.transitions,
        ap,
    };
    fsa.validate()?;
    Ok(fsa)
}

/// One entry per call statement, in source order: the rendered call site and
/// the propositions it emits. Helper calls recurse into the helper body;
/// `sleep` and permissively unmapped calls report an empty set.
pub fn explain_mapping(
    ast: &PlanAst,
    map: &PropositionMapping,
) -> Vec<(String, BTreeSet<String>)> {
    let mut out = Vec::new();
    if let Some(entry) = ast.entry_function() {
        explain_block(&entry.body, ast, map, &mut out, 0);
    }
    out
}

fn explain_block(
    body: &[Stmt],
    ast: &PlanAst,
    map: &PropositionMapping,
    out: &mut Vec<(String, BTreeSet<String>)>,
    depth: usize,
) {
    if depth >= MAX_INLINE_DEPTH {
        return;
    }
    for stmt in body {
        match stmt {
            Stmt::Call { target, args } => {
                if let Some(f) = ast.function(target) {
                    explain_block(&f.body, ast, map, out, depth + 1);
                    continue;
                }
                let site = format!("{target}({})", args.join(", "));
                let props = if target == SLEEP_BUILTIN {
                    BTreeSet::new()
                } else {
                    map.lookup(RuleKind::Action, target, args)
                        .map(|r| r.props.iter().cloned().collect())
                        .unwrap_or_default()
                };
                out.push((site, props));
            }
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                explain_block(then_body, ast, map, out, depth);
                explain_block(else_body, ast, map, out, depth);
            }
            Stmt::While { body, .. } | Stmt::For { body, .. } => {
                explain_block(body, ast, map, out, depth)
            }
            Stmt::Assign { .. } | Stmt::Return => {}
        }
    }
}
