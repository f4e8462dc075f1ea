//! Surface-syntax parser for temporal-logic specifications.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! implies := or ('->' implies)?            (right-associative)
//! or      := and ('|' and)*
//! and     := until ('&' until)*
//! until   := unary ('U' until)?            (right-associative)
//! unary   := ('!' | 'X' | 'F' | 'G') unary | primary
//! primary := 'true' | 'false' | atom | '"' chars '"' | '(' implies ')'
//! ```

use super::{LtlError, LtlFormula};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Bang,
    Amp,
    Pipe,
    Arrow,
    LParen,
    RParen,
    OpG,
    OpF,
    OpX,
    OpU,
    True,
    False,
    Atom(String),
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, LtlError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = src[i..].chars().next().unwrap();
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '!' | '¬' => {
                toks.push((i, Tok::Bang));
                i += c.len_utf8();
            }
            '&' | '∧' => {
                toks.push((i, Tok::Amp));
                i += c.len_utf8();
            }
            '|' | '∨' => {
                toks.push((i, Tok::Pipe));
                i += c.len_utf8();
            }
            '(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((i, Tok::Arrow));
                    i += 2;
                } else {
                    return Err(LtlError::Syntax {
                        pos: i,
                        message: "expected `->`".into(),
                    });
                }
            }
            '→' => {
                toks.push((i, Tok::Arrow));
                i += '→'.len_utf8();
            }
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j] != b'"' {
                    j += 1;
                }
                if j >= bytes.len() {
                    return Err(LtlError::Syntax {
                        pos: i,
                        message: "unterminated quoted atom".into(),
                    });
                }
                let name = src[start..j].trim().to_string();
                if name.is_empty() {
                    return Err(LtlError::Syntax {
                        pos: i,
                        message: "empty quoted atom".into(),
                    });
                }
                toks.push((i, Tok::Atom(name)));
                i = j + 1;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < bytes.len() {
                    let ch = src[j..].chars().next().unwrap();
                    if ch.is_alphanumeric() || ch == '_' {
                        j += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                let word = &src[start..j];
                let tok = match word {
                    "G" => Tok::OpG,
                    "F" => Tok::OpF,
                    "X" => Tok::OpX,
                    "U" => Tok::OpU,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Atom(word.to_string()),
                };
                toks.push((start, tok));
                i = j;
            }
            _ => {
                return Err(LtlError::Syntax {
                    pos: i,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.lexer.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.lexer
            .toks
            .get(self.pos)
            .map(|(p, _)| *p)
            .unwrap_or(self.lexer.src.len())
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.lexer.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), LtlError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(LtlError::Syntax {
                pos: self.here(),
                message: format!("expected {what}"),
            })
        }
    }

    fn implies(&mut self) -> Result<LtlFormula, LtlError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.implies()?;
            Ok(LtlFormula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<LtlFormula, LtlError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let rhs = self.and()?;
            lhs = LtlFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<LtlFormula, LtlError> {
        let mut lhs = self.until()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.until()?;
            lhs = LtlFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<LtlFormula, LtlError> {
        let lhs = self.unary()?;
        if self.peek() == Some(&Tok::OpU) {
            self.pos += 1;
            let rhs = self.until()?;
            Ok(LtlFormula::until(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn unary(&mut self) -> Result<LtlFormula, LtlError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(LtlFormula::not(self.unary()?))
            }
            Some(Tok::OpX) => {
                self.pos += 1;
                Ok(LtlFormula::next(self.unary()?))
            }
            Some(Tok::OpF) => {
                self.pos += 1;
                Ok(LtlFormula::eventually(self.unary()?))
            }
            Some(Tok::OpG) => {
                self.pos += 1;
                Ok(LtlFormula::always(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<LtlFormula, LtlError> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::True) => Ok(LtlFormula::True),
            Some(Tok::False) => Ok(LtlFormula::False),
            Some(Tok::Atom(a)) => Ok(LtlFormula::Atom(a)),
            Some(Tok::LParen) => {
                let f = self.implies()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            other => Err(LtlError::Syntax {
                pos,
                message: format!("expected formula, found {other:?}"),
            }),
        }
    }
}

pub fn parse_ltl(src: &str) -> Result<LtlFormula, LtlError> {
    let toks = lex(src)?;
    let mut p = Parser {
        lexer: Lexer { src, toks },
        pos: 0,
    };
    let f = p.implies()?;
    if p.peek().is_some() {
        return Err(LtlError::Syntax {
            pos: p.here(),
            message: "trailing input after formula".into(),
        });
    }
    Ok(f)
}
