//! Concrete formula syntax.
//!
//! Tokens: `top`, `!`, `&&`, `||`, `->`, `X`, `<>`, `[]`, `U`, `T`,
//! parentheses, and predicate identifiers. Unary prefixes bind tightest,
//! then `&&`, `||`, `->`; the binary temporal operators `U` and `T` bind
//! loosest and associate to the right.

use thiserror::Error;

use super::{Formula, GuardFormula, PredicateTable};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown predicate `{name}` at byte {pos}")]
    UnknownPredicate { name: String, pos: usize },
    #[error("temporal operator at byte {pos} not allowed in a guard")]
    TemporalInGuard { pos: usize },
}

/// Parses a formula, resolving predicate names against `table`.
pub fn parse_formula<T: Scalar>(
    text: &str,
    table: &PredicateTable<T>,
) -> Result<Formula<T>, ParseError> {
    Parser::new(text, table, true)?.parse()
}

/// Parses a temporal-free guard formula.
pub fn parse_guard<T: Scalar>(
    text: &str,
    table: &PredicateTable<T>,
) -> Result<GuardFormula<T>, ParseError> {
    let formula = Parser::new(text, table, false)?.parse()?;
    Ok(GuardFormula::try_from(formula).expect("parser rejects temporal operators in guard mode"))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    True,
    Ident(String),
    Not,
    And,
    Or,
    Imply,
    Next,
    Eventually,
    Always,
    Until,
    Then,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::True => "`top`".into(),
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Not => "`!`".into(),
            Tok::And => "`&&`".into(),
            Tok::Or => "`||`".into(),
            Tok::Imply => "`->`".into(),
            Tok::Next => "`X`".into(),
            Tok::Eventually => "`<>`".into(),
            Tok::Always => "`[]`".into(),
            Tok::Until => "`U`".into(),
            Tok::Then => "`T`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b'!' => {
                toks.push((Tok::Not, i));
                i += 1;
            }
            b'&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    toks.push((Tok::And, i));
                    i += 2;
                } else {
                    return Err(ParseError::Syntax { pos: i, msg: "expected `&&`".into() });
                }
            }
            b'|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    toks.push((Tok::Or, i));
                    i += 2;
                } else {
                    return Err(ParseError::Syntax { pos: i, msg: "expected `||`".into() });
                }
            }
            b'-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((Tok::Imply, i));
                    i += 2;
                } else {
                    return Err(ParseError::Syntax { pos: i, msg: "expected `->`".into() });
                }
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((Tok::Eventually, i));
                    i += 2;
                } else {
                    return Err(ParseError::Syntax { pos: i, msg: "expected `<>`".into() });
                }
            }
            b'[' => {
                if bytes.get(i + 1) == Some(&b']') {
                    toks.push((Tok::Always, i));
                    i += 2;
                } else {
                    return Err(ParseError::Syntax { pos: i, msg: "expected `[]`".into() });
                }
            }
            _ if b.is_ascii_alphabetic() || b == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word {
                    "top" => Tok::True,
                    "X" => Tok::Next,
                    "U" => Tok::Until,
                    "T" => Tok::Then,
                    _ => Tok::Ident(word.to_string()),
                };
                toks.push((tok, start));
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{}`", text[i..].chars().next().unwrap()),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser<'a, T> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    table: &'a PredicateTable<T>,
    allow_temporal: bool,
    input_len: usize,
}

impl<'a, T: Scalar> Parser<'a, T> {
    fn new(
        text: &str,
        table: &'a PredicateTable<T>,
        allow_temporal: bool,
    ) -> Result<Self, ParseError> {
        Ok(Self { toks: lex(text)?, pos: 0, table, allow_temporal, input_len: text.len() })
    }

    fn parse(mut self) -> Result<Formula<T>, ParseError> {
        let formula = self.until_expr()?;
        if let Some((tok, pos)) = self.peek() {
            return Err(ParseError::Syntax {
                pos,
                msg: format!("unexpected {}", tok.describe()),
            });
        }
        Ok(formula)
    }

    fn peek(&self) -> Option<(Tok, usize)> {
        self.toks.get(self.pos).cloned()
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn temporal_here(&self, pos: usize) -> Result<(), ParseError> {
        if self.allow_temporal {
            Ok(())
        } else {
            Err(ParseError::TemporalInGuard { pos })
        }
    }

    fn until_expr(&mut self) -> Result<Formula<T>, ParseError> {
        let lhs = self.imply_expr()?;
        match self.peek() {
            Some((Tok::Until, pos)) => {
                self.temporal_here(pos)?;
                self.bump();
                let rhs = self.until_expr()?;
                Ok(lhs.until(rhs))
            }
            Some((Tok::Then, pos)) => {
                self.temporal_here(pos)?;
                self.bump();
                let rhs = self.until_expr()?;
                Ok(lhs.then(rhs))
            }
            _ => Ok(lhs),
        }
    }

    fn imply_expr(&mut self) -> Result<Formula<T>, ParseError> {
        let lhs = self.or_expr()?;
        if let Some((Tok::Imply, _)) = self.peek() {
            self.bump();
            let rhs = self.imply_expr()?;
            return Ok(lhs.imply(rhs));
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> Result<Formula<T>, ParseError> {
        let mut lhs = self.and_expr()?;
        while let Some((Tok::Or, _)) = self.peek() {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Formula<T>, ParseError> {
        let mut lhs = self.unary_expr()?;
        while let Some((Tok::And, _)) = self.peek() {
            self.bump();
            let rhs = self.unary_expr()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<Formula<T>, ParseError> {
        match self.peek() {
            Some((Tok::Not, _)) => {
                self.bump();
                Ok(self.unary_expr()?.not())
            }
            Some((Tok::Next, pos)) => {
                self.temporal_here(pos)?;
                self.bump();
                Ok(self.unary_expr()?.next())
            }
            Some((Tok::Eventually, pos)) => {
                self.temporal_here(pos)?;
                self.bump();
                Ok(self.unary_expr()?.eventually())
            }
            Some((Tok::Always, pos)) => {
                self.temporal_here(pos)?;
                self.bump();
                Ok(self.unary_expr()?.always())
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula<T>, ParseError> {
        match self.bump() {
            Some((Tok::True, _)) => Ok(Formula::True),
            Some((Tok::Ident(name), pos)) => match self.table.get(&name) {
                Some(pred) => Ok(Formula::Pred(pred.clone())),
                None => Err(ParseError::UnknownPredicate { name, pos }),
            },
            Some((Tok::LParen, open_pos)) => {
                let inner = self.until_expr()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    Some((tok, pos)) => Err(ParseError::Syntax {
                        pos,
                        msg: format!("expected `)`, found {}", tok.describe()),
                    }),
                    None => Err(ParseError::Syntax {
                        pos: open_pos,
                        msg: "unclosed parenthesis".into(),
                    }),
                }
            }
            Some((tok, pos)) => Err(ParseError::Syntax {
                pos,
                msg: format!("expected a formula, found {}", tok.describe()),
            }),
            None => Err(ParseError::Syntax {
                pos: self.input_len,
                msg: "unexpected end of input".into(),
            }),
        }
    }
}
