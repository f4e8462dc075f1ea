//! Parser for the indentation-delimited plan language.
//!
//! The grammar is deliberately closed: function definitions, API calls,
//! `if`/`else`, `while`, bounded `for _ in range(n)`, assignments (recorded
//! but semantically inert), `return`, and the built-in `sleep`. Anything else
//! is rejected rather than guessed at. Call arguments are kept as opaque
//! strings; downstream proposition mapping only inspects sign/zero classes
//! and exact literals.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use thiserror::Error;

pub const SLEEP_BUILTIN: &str = "sleep";
/// Name of the implicit entry function holding top-level statements.
pub const IMPLICIT_ENTRY: &str = "__main__";

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("syntax error at line {line}, column {col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("recursive call cycle: {}", cycle.join(" -> "))]
    Recursion { cycle: Vec<String> },
    #[error("unsupported construct at line {line}: {found}")]
    UnknownConstruct { line: usize, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CondExpr {
    Bool(bool),
    /// Sensor-API call used as a boolean leaf.
    Call { target: String, args: Vec<String> },
    Not(Box<CondExpr>),
    And(Box<CondExpr>, Box<CondExpr>),
    Or(Box<CondExpr>, Box<CondExpr>),
}

impl CondExpr {
    pub fn leaves(&self) -> Vec<(&str, &[String])> {
        match self {
            CondExpr::Bool(_) => vec![],
            CondExpr::Call { target, args } => vec![(target.as_str(), args.as_slice())],
            CondExpr::Not(c) => c.leaves(),
            CondExpr::And(a, b) | CondExpr::Or(a, b) => {
                let mut v = a.leaves();
                v.extend(b.leaves());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stmt {
    Call {
        target: String,
        args: Vec<String>,
    },
    If {
        cond: CondExpr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    While {
        cond: CondExpr,
        body: Vec<Stmt>,
    },
    For {
        count: u32,
        body: Vec<Stmt>,
    },
    Assign {
        name: String,
        expr: String,
    },
    Return,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanAst {
    pub functions: Vec<FunctionDef>,
    pub entry: String,
}

impl PlanAst {
    pub fn entry_function(&self) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == self.entry)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }
}

// ---------------------------------------------------------------------------
// API table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApiKind {
    /// Sensor call returning a boolean; usable in conditions.
    Boolean,
    /// Actuation call; usable as a statement.
    Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiDecl {
    pub name: String,
    /// Expected argument count; `None` accepts any arity.
    #[serde(default)]
    pub arity: Option<usize>,
    pub kind: ApiKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ApiTable {
    pub apis: Vec<ApiDecl>,
}

impl ApiTable {
    pub fn get(&self, name: &str) -> Option<&ApiDecl> {
        self.apis.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    UnknownApi,
    Recursion,
    ArityMismatch,
    NotBoolean,
    DuplicateParam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub subject: String,
    pub message: String,
}

// ---------------------------------------------------------------------------
// Line scanning
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct Line {
    number: usize,
    indent: usize,
    text: String,
}

fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    for (i, c) in line.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '"' || c == '\'' => quote = Some(c),
            None if c == '#' => return &line[..i],
            None => {}
        }
    }
    line
}

fn scan_lines(source: &str) -> Result<Vec<Line>, PlanError> {
    let mut out = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let number = idx + 1;
        let body = strip_comment(raw);
        let trimmed_end = body.trim_end();
        if trimmed_end.trim().is_empty() {
            continue;
        }
        let mut indent = 0;
        for c in trimmed_end.chars() {
            match c {
                ' ' => indent += 1,
                '\t' => {
                    return Err(PlanError::Syntax {
                        line: number,
                        col: indent + 1,
                        expected: "spaces for indentation (tabs are not allowed)".into(),
                    })
                }
                _ => break,
            }
        }
        out.push(Line {
            number,
            indent,
            text: trimmed_end[indent..].to_string(),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Statement-level cursor
// ---------------------------------------------------------------------------

struct Cursor<'a> {
    line: usize,
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        Cursor { line, text, pos: 0 }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn err(&self, expected: impl Into<String>) -> PlanError {
        PlanError::Syntax {
            line: self.line,
            col: self.col(),
            expected: expected.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(' ') {
            self.pos += 1;
        }
    }

    fn at_end(&self) -> bool {
        self.rest().is_empty()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), PlanError> {
        self.skip_ws();
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("`{c}`")))
        }
    }

    fn peek_ident(&self) -> Option<&'a str> {
        let rest = self.rest();
        let mut end = 0;
        for (i, c) in rest.char_indices() {
            if c.is_alphanumeric() || c == '_' {
                end = i + c.len_utf8();
            } else {
                break;
            }
        }
        if end == 0 || rest.chars().next().map(|c| c.is_ascii_digit()) == Some(true) {
            None
        } else {
            Some(&rest[..end])
        }
    }

    fn ident(&mut self) -> Result<&'a str, PlanError> {
        self.skip_ws();
        match self.peek_ident() {
            Some(id) => {
                self.pos += id.len();
                Ok(id)
            }
            None => Err(self.err("identifier")),
        }
    }

    /// Eat a keyword only when followed by a non-identifier character.
    fn eat_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        if self.peek_ident() == Some(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    /// Parse `( arg, arg, ... )`; arguments are opaque strings split on
    /// top-level commas, respecting nested parentheses and quotes.
    fn args(&mut self) -> Result<Vec<String>, PlanError> {
        self.expect('(')?;
        let mut depth = 1usize;
        let mut quote: Option<char> = None;
        let mut current = String::new();
        let mut out: Vec<String> = Vec::new();
        loop {
            let c = match self.rest().chars().next() {
                Some(c) => c,
                None => return Err(self.err("`)` to close argument list")),
            };
            self.pos += c.len_utf8();
            match quote {
                Some(q) => {
                    current.push(c);
                    if c == q {
                        quote = None;
                    }
                }
                None => match c {
                    '"' | '\'' => {
                        quote = Some(c);
                        current.push(c);
                    }
                    '(' | '[' | '{' => {
                        depth += 1;
                        current.push(c);
                    }
                    ')' | ']' | '}' => {
                        if c == ')' {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        } else {
                            depth = depth.saturating_sub(0);
                        }
                        current.push(c);
                    }
                    ',' if depth == 1 => {
                        out.push(current.trim().to_string());
                        current.clear();
                    }
                    _ => current.push(c),
                },
            }
        }
        let last = current.trim();
        if !last.is_empty() {
            out.push(last.to_string());
        } else if !out.is_empty() {
            return Err(self.err("argument after `,`"));
        }
        Ok(out)
    }

    fn expect_colon_then_rest(&mut self) -> Result<Option<&'a str>, PlanError> {
        self.expect(':')?;
        self.skip_ws();
        let rest = self.rest();
        if rest.is_empty() {
            Ok(None)
        } else {
            Ok(Some(rest))
        }
    }
}

// ---------------------------------------------------------------------------
// Condition parsing: or > and > not > atom
// ---------------------------------------------------------------------------

fn parse_cond(cur: &mut Cursor) -> Result<CondExpr, PlanError> {
    parse_cond_or(cur)
}

fn parse_cond_or(cur: &mut Cursor) -> Result<CondExpr, PlanError> {
    let mut lhs = parse_cond_and(cur)?;
    while cur.eat_keyword("or") {
        let rhs = parse_cond_and(cur)?;
        lhs = CondExpr::Or(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_cond_and(cur: &mut Cursor) -> Result<CondExpr, PlanError> {
    let mut lhs = parse_cond_not(cur)?;
    while cur.eat_keyword("and") {
        let rhs = parse_cond_not(cur)?;
        lhs = CondExpr::And(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_cond_not(cur: &mut Cursor) -> Result<CondExpr, PlanError> {
    if cur.eat_keyword("not") {
        Ok(CondExpr::Not(Box::new(parse_cond_not(cur)?)))
    } else {
        parse_cond_atom(cur)
    }
}

fn parse_cond_atom(cur: &mut Cursor) -> Result<CondExpr, PlanError> {
    cur.skip_ws();
    if cur.eat('(') {
        let inner = parse_cond(cur)?;
        cur.expect(')')?;
        return Ok(inner);
    }
    match cur.peek_ident() {
        Some("True") | Some("true") => {
            cur.ident()?;
            Ok(CondExpr::Bool(true))
        }
        Some("False") | Some("false") => {
            cur.ident()?;
            Ok(CondExpr::Bool(false))
        }
        Some(_) => {
            let name = cur.ident()?.to_string();
            cur.skip_ws();
            if !cur.rest().starts_with('(') {
                return Err(cur.err("`(` (conditions may only contain boolean API calls and literals)"));
            }
            let args = cur.args()?;
            Ok(CondExpr::Call { target: name, args })
        }
        None => Err(cur.err("condition")),
    }
}

// ---------------------------------------------------------------------------
// Block parser
// ---------------------------------------------------------------------------

struct BlockParser<'a> {
    lines: &'a [Line],
    pos: usize,
}

impl<'a> BlockParser<'a> {
    fn peek(&self) -> Option<&'a Line> {
        self.lines.get(self.pos)
    }

    /// Parse the suite following a block header: either an inline statement
    /// on the same line or an indented block on the following lines.
    fn suite(
        &mut self,
        header: &Line,
        inline: Option<&str>,
        known_indents: &mut BTreeSet<usize>,
    ) -> Result<Vec<Stmt>, PlanError> {
        if let Some(text) = inline {
            let pseudo = Line {
                number: header.number,
                indent: header.indent,
                text: text.to_string(),
            };
            let stmt = self.statement(&pseudo, known_indents)?;
            return Ok(vec![stmt]);
        }
        let next = match self.peek() {
            Some(l) if l.indent > header.indent => l.indent,
            _ => {
                return Err(PlanError::Syntax {
                    line: header.number,
                    col: header.text.len() + header.indent + 1,
                    expected: "an indented block".into(),
                })
            }
        };
        known_indents.insert(next);
        let body = self.block(next, known_indents)?;
        known_indents.remove(&next);
        Ok(body)
    }

    fn block(
        &mut self,
        indent: usize,
        known_indents: &mut BTreeSet<usize>,
    ) -> Result<Vec<Stmt>, PlanError> {
        let mut out = Vec::new();
        while let Some(line) = self.peek() {
            if line.indent < indent {
                // Dedent must land on an enclosing block's column.
                if !known_indents.contains(&line.indent) {
                    return Err(PlanError::Syntax {
                        line: line.number,
                        col: line.indent + 1,
                        expected: "dedent to an enclosing block's indentation".into(),
                    });
                }
                break;
            }
            if line.indent > indent {
                return Err(PlanError::Syntax {
                    line: line.number,
                    col: line.indent + 1,
                    expected: "statement at the current indentation".into(),
                });
            }
            // `else` belongs to an enclosing `if`, not this block.
            if line.text.starts_with("else") {
                break;
            }
            self.pos += 1;
            let line = line;
            out.push(self.statement(line, known_indents)?);
        }
        Ok(out)
    }

    fn statement(
        &mut self,
        line: &Line,
        known_indents: &mut BTreeSet<usize>,
    ) -> Result<Stmt, PlanError> {
        let mut cur = Cursor::new(line.number, &line.text);
        let head = match cur.peek_ident() {
            Some(h) => h,
            None => {
                return Err(PlanError::UnknownConstruct {
                    line: line.number,
                    found: line.text.clone(),
                })
            }
        };
        match head {
            "if" => {
                cur.ident()?;
                let cond = parse_cond(&mut cur)?;
                let inline = cur.expect_colon_then_rest()?;
                let then_body = self.suite(line, inline, known_indents)?;
                let else_body = if let Some(next) = self.peek() {
                    if next.indent == line.indent && next.text.starts_with("else") {
                        self.pos += 1;
                        let mut ec = Cursor::new(next.number, &next.text);
                        ec.ident()?; // "else"
                        let inline = ec.expect_colon_then_rest()?;
                        self.suite(next, inline, known_indents)?
                    } else {
                        Vec::new()
                    }
                } else {
                    Vec::new()
                };
                Ok(Stmt::If {
                    cond,
                    then_body,
                    else_body,
                })
            }
            "elif" => Err(PlanError::UnknownConstruct {
                line: line.number,
                found: "elif (use nested if/else)".into(),
            }),
            "while" => {
                cur.ident()?;
                let cond = parse_cond(&mut cur)?;
                let inline = cur.expect_colon_then_rest()?;
                let body = self.suite(line, inline, known_indents)?;
                Ok(Stmt::While { cond, body })
            }
            "for" => {
                cur.ident()?;
                let _var = cur.ident()?;
                if !cur.eat_keyword("in") {
                    return Err(cur.err("`in`"));
                }
                if !cur.eat_keyword("range") {
                    return Err(cur.err("`range`"));
                }
                let args = cur.args()?;
                let count = match args.as_slice() {
                    [n] => n.parse::<u32>().ok().filter(|&n| n > 0).ok_or_else(|| {
                        cur.err("a positive integer literal loop count")
                    })?,
                    _ => return Err(cur.err("`range(<count>)` with one literal argument")),
                };
                let inline = cur.expect_colon_then_rest()?;
                let body = self.suite(line, inline, known_indents)?;
                Ok(Stmt::For { count, body })
            }
            "return" => {
                cur.ident()?;
                // A returned expression is recorded nowhere; plans are
                // verified for control structure, not data flow.
                Ok(Stmt::Return)
            }
            "def" => Err(PlanError::UnknownConstruct {
                line: line.number,
                found: "nested function definition".into(),
            }),
            _ => {
                let name = cur.ident()?.to_string();
                cur.skip_ws();
                if cur.rest().starts_with('(') {
                    let args = cur.args()?;
                    cur.skip_ws();
                    if !cur.at_end() {
                        return Err(cur.err("end of line after call"));
                    }
                    Ok(Stmt::Call { target: name, args })
                } else if cur.rest().starts_with('=') && !cur.rest().starts_with("==") {
                    cur.eat('=');
                    cur.skip_ws();
                    let expr = cur.rest().to_string();
                    if expr.is_empty() {
                        return Err(cur.err("expression after `=`"));
                    }
                    Ok(Stmt::Assign { name, expr })
                } else {
                    Err(PlanError::UnknownConstruct {
                        line: line.number,
                        found: line.text.clone(),
                    })
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Program parser
// ---------------------------------------------------------------------------

/// Parse plan text into an AST. Top-level statements outside any function
/// are collected into the implicit entry `__main__`; otherwise the first
/// defined function is the entry. Call-graph cycles among defined functions
/// are rejected.
pub fn parse_plan(source: &str) -> Result<PlanAst, PlanError> {
    let lines = scan_lines(source)?;
    let mut functions: Vec<FunctionDef> = Vec::new();
    let mut top: Vec<Stmt> = Vec::new();

    let mut parser = BlockParser {
        lines: &lines,
        pos: 0,
    };
    while let Some(line) = parser.peek() {
        if line.indent != 0 {
            return Err(PlanError::Syntax {
                line: line.number,
                col: line.indent + 1,
                expected: "top-level statement at column 1".into(),
            });
        }
        if line.text.starts_with("def") && Cursor::new(0, &line.text).peek_ident() == Some("def") {
            parser.pos += 1;
            let mut cur = Cursor::new(line.number, &line.text);
            cur.ident()?; // def
            let name = cur.ident()?.to_string();
            cur.skip_ws();
            if !cur.rest().starts_with('(') {
                return Err(cur.err("`(`"));
            }
            let params = cur.args()?;
            for p in &params {
                let pc = Cursor::new(line.number, p);
                if pc.peek_ident() != Some(p.as_str()) {
                    return Err(PlanError::Syntax {
                        line: line.number,
                        col: cur.col(),
                        expected: format!("parameter name, found `{p}`"),
                    });
                }
            }
            let mut cur2 = cur;
            let inline = cur2.expect_colon_then_rest()?;
            let mut known = BTreeSet::new();
            known.insert(0usize);
            let body = parser.suite(line, inline, &mut known)?;
            functions.push(FunctionDef { name, params, body });
        } else {
            parser.pos += 1;
            let mut known = BTreeSet::new();
            known.insert(0usize);
            let line = line;
            top.push(parser.statement(line, &mut known)?);
        }
    }

    let entry = if !top.is_empty() || functions.is_empty() {
        functions.insert(
            0,
            FunctionDef {
                name: IMPLICIT_ENTRY.to_string(),
                params: Vec::new(),
                body: top,
            },
        );
        IMPLICIT_ENTRY.to_string()
    } else {
        functions[0].name.clone()
    };

    let ast = PlanAst { functions, entry };
    if let Some(cycle) = find_call_cycle(&ast) {
        return Err(PlanError::Recursion { cycle });
    }
    Ok(ast)
}

fn stmt_call_targets<'b>(stmt: &'b Stmt, out: &mut Vec<&'b str>) {
    match stmt {
        Stmt::Call { target, .. } => out.push(target),
        Stmt::If {
            cond,
            then_body,
            else_body,
        } => {
            for (t, _) in cond.leaves() {
                out.push(t);
            }
            for s in then_body.iter().chain(else_body) {
                stmt_call_targets(s, out);
            }
        }
        Stmt::While { cond, body } => {
            for (t, _) in cond.leaves() {
                out.push(t);
            }
            for s in body {
                stmt_call_targets(s, out);
            }
        }
        Stmt::For { body, .. } => {
            for s in body {
                stmt_call_targets(s, out);
            }
        }
        Stmt::Assign { .. } | Stmt::Return => {}
    }
}

fn function_call_targets(f: &FunctionDef) -> Vec<&str> {
    let mut out = Vec::new();
    for s in &f.body {
        stmt_call_targets(s, &mut out);
    }
    out
}

/// Detect direct or mutual recursion among defined functions. Returns the
/// cycle path when one exists.
pub fn find_call_cycle(ast: &PlanAst) -> Option<Vec<String>> {
    let defined: BTreeSet<&str> = ast.functions.iter().map(|f| f.name.as_str()).collect();
    let graph: BTreeMap<&str, Vec<&str>> = ast
        .functions
        .iter()
        .map(|f| {
            (
                f.name.as_str(),
                function_call_targets(f)
                    .into_iter()
                    .filter(|t| defined.contains(t))
                    .collect(),
            )
        })
        .collect();
    fn visit<'b>(
        node: &'b str,
        graph: &BTreeMap<&'b str, Vec<&'b str>>,
        stack: &mut Vec<&'b str>,
        done: &mut BTreeSet<&'b str>,
    ) -> Option<Vec<String>> {
        if let Some(i) = stack.iter().position(|&s| s == node) {
            let mut cycle: Vec<String> = stack[i..].iter().map(|s| s.to_string()).collect();
            cycle.push(node.to_string());
            return Some(cycle);
        }
        if done.contains(node) {
            return None;
        }
        stack.push(node);
        if let Some(succs) = graph.get(node) {
            for s in succs {
                if let Some(c) = visit(s, graph, stack, done) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        done.insert(node);
        None
    }
    let mut done = BTreeSet::new();
    for f in &ast.functions {
        let mut stack = Vec::new();
        if let Some(c) = visit(&f.name, &graph, &mut stack, &mut done) {
            return Some(c);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Pretty printer (canonical 4-space indentation)
// ---------------------------------------------------------------------------

fn print_cond(cond: &CondExpr, out: &mut String) {
    match cond {
        CondExpr::Bool(true) => out.push_str("True"),
        CondExpr::Bool(false) => out.push_str("False"),
        CondExpr::Call { target, args } => {
            let _ = write!(out, "{target}({})", args.join(", "));
        }
        CondExpr::Not(c) => {
            out.push_str("not ");
            print_cond_nested(c, out);
        }
        CondExpr::And(a, b) => {
            print_cond_nested(a, out);
            out.push_str(" and ");
            print_cond_nested(b, out);
        }
        CondExpr::Or(a, b) => {
            print_cond_nested(a, out);
            out.push_str(" or ");
            print_cond_nested(b, out);
        }
    }
}

fn print_cond_nested(cond: &CondExpr, out: &mut String) {
    match cond {
        CondExpr::And(..) | CondExpr::Or(..) | CondExpr::Not(..) => {
            out.push('(');
            print_cond(cond, out);
            out.push(')');
        }
        _ => print_cond(cond, out),
    }
}

fn print_block(body: &[Stmt], depth: usize, out: &mut String) {
    if body.is_empty() {
        let _ = writeln!(out, "{}return", "    ".repeat(depth));
        return;
    }
    for stmt in body {
        let pad = "    ".repeat(depth);
        match stmt {
            Stmt::Call { target, args } => {
                let _ = writeln!(out, "{pad}{target}({})", args.join(", "));
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                let mut c = String::new();
                print_cond(cond, &mut c);
                let _ = writeln!(out, "{pad}if {c}:");
                print_block(then_body, depth + 1, out);
                if !else_body.is_empty() {
                    let _ = writeln!(out, "{pad}else:");
                    print_block(else_body, depth + 1, out);
                }
            }
            Stmt::While { cond, body } => {
                let mut c = String::new();
                print_cond(cond, &mut c);
                let _ = writeln!(out, "{pad}while {c}:");
                print_block(body, depth + 1, out);
            }
            Stmt::For { count, body } => {
                let _ = writeln!(out, "{pad}for _ in range({count}):");
                print_block(body, depth + 1, out);
            }
            Stmt::Assign { name, expr } => {
                let _ = writeln!(out, "{pad}{name} = {expr}");
            }
            Stmt::Return => {
                let _ = writeln!(out, "{pad}return");
            }
        }
    }
}

/// Canonical source rendering; `parse_plan(pretty_print(ast))` is
/// structurally equal to `ast` up to empty-block normalization.
pub fn pretty_print(ast: &PlanAst) -> String {
    let mut out = String::new();
    for f in &ast.functions {
        if f.name == IMPLICIT_ENTRY {
            print_block(&f.body, 0, &mut out);
        } else {
            let _ = writeln!(out, "def {}({}):", f.name, f.params.join(", "));
            print_block(&f.body, 1, &mut out);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Validation against an API table
// ---------------------------------------------------------------------------

fn validate_cond(cond: &CondExpr, table: &ApiTable, ast: &PlanAst, diags: &mut Vec<Diagnostic>) {
    for (target, args) in cond.leaves() {
        match table.get(target) {
            None => {
                if ast.function(target).is_some() {
                    diags.push(Diagnostic {
                        kind: DiagnosticKind::NotBoolean,
                        subject: target.to_string(),
                        message: format!(
                            "condition calls plan function `{target}`; only declared boolean APIs may appear in conditions"
                        ),
                    });
                } else {
                    diags.push(Diagnostic {
                        kind: DiagnosticKind::UnknownApi,
                        subject: target.to_string(),
                        message: format!("condition calls undeclared API `{target}`"),
                    });
                }
            }
            Some(decl) => {
                if decl.kind != ApiKind::Boolean {
                    diags.push(Diagnostic {
                        kind: DiagnosticKind::NotBoolean,
                        subject: target.to_string(),
                        message: format!("condition calls non-boolean API `{target}`"),
                    });
                }
                if let Some(arity) = decl.arity {
                    if args.len() != arity {
                        diags.push(Diagnostic {
                            kind: DiagnosticKind::ArityMismatch,
                            subject: target.to_string(),
                            message: format!(
                                "`{target}` expects {arity} argument(s), found {}",
                                args.len()
                            ),
                        });
                    }
                }
            }
        }
    }
}

fn validate_stmt(stmt: &Stmt, table: &ApiTable, ast: &PlanAst, diags: &mut Vec<Diagnostic>) {
    match stmt {
        Stmt::Call { target, args } => {
            if target == SLEEP_BUILTIN || ast.function(target).is_some() {
                return;
            }
            match table.get(target) {
                None => diags.push(Diagnostic {
                    kind: DiagnosticKind::UnknownApi,
                    subject: target.clone(),
                    message: format!("call to undeclared API `{target}`"),
                }),
                Some(decl) => {
                    if let Some(arity) = decl.arity {
                        if args.len() != arity {
                            diags.push(Diagnostic {
                                kind: DiagnosticKind::ArityMismatch,
                                subject: target.clone(),
                                message: format!(
                                    "`{target}` expects {arity} argument(s), found {}",
                                    args.len()
                                ),
                            });
                        }
                    }
                }
            }
        }
        Stmt::If {
            cond,
            then_body,
            else_body,
        } => {
            validate_cond(cond, table, ast, diags);
            for s in then_body.iter().chain(else_body) {
                validate_stmt(s, table, ast, diags);
            }
        }
        Stmt::While { cond, body } => {
            validate_cond(cond, table, ast, diags);
            for s in body {
                validate_stmt(s, table, ast, diags);
            }
        }
        Stmt::For { body, .. } => {
            for s in body {
                validate_stmt(s, table, ast, diags);
            }
        }
        Stmt::Assign { .. } | Stmt::Return => {}
    }
}

/// Check the AST's invariants against a declared API table. Diagnostics are
/// data, not errors: an empty list means the plan is valid.
pub fn validate_plan(ast: &PlanAst, table: &ApiTable) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for f in &ast.functions {
        let mut seen = BTreeSet::new();
        for p in &f.params {
            if !seen.insert(p) {
                diags.push(Diagnostic {
                    kind: DiagnosticKind::DuplicateParam,
                    subject: f.name.clone(),
                    message: format!("duplicate parameter `{p}` in `{}`", f.name),
                });
            }
        }
        for s in &f.body {
            validate_stmt(s, table, ast, &mut diags);
        }
    }
    if let Some(cycle) = find_call_cycle(ast) {
        diags.push(Diagnostic {
            kind: DiagnosticKind::Recursion,
            subject: cycle[0].clone(),
            message: format!("recursive call cycle: {}", cycle.join(" -> ")),
        });
    }
    diags
}
