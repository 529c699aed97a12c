//! Recursive-descent parser for the vector-field expression language.
//!
//! Precedence, tightest first: `^` (right-associative, integer exponent),
//! unary `-`, `*` `/`, `+` `-`; equal tiers associate left. Function calls
//! `sin cos exp log` take a single parenthesized argument.

use std::sync::Arc;

use crate::error::{ParseError, ParseErrorKind};
use crate::expr::Expr;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0 }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut out = Vec::new();
        while let Some((off, c)) = self.peek_char() {
            if c.is_whitespace() {
                self.pos = off + c.len_utf8();
                continue;
            }
            let tok = match c {
                '+' => self.single(off, c, Tok::Plus),
                '-' => self.single(off, c, Tok::Minus),
                '*' => self.single(off, c, Tok::Star),
                '/' => self.single(off, c, Tok::Slash),
                '^' => self.single(off, c, Tok::Caret),
                '(' => self.single(off, c, Tok::LParen),
                ')' => self.single(off, c, Tok::RParen),
                '0'..='9' | '.' => self.number(off)?,
                c if c.is_alphabetic() || c == '_' => self.ident(off),
                _ => {
                    return Err(ParseError {
                        offset: off,
                        kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")),
                    })
                }
            };
            out.push((off, tok));
        }
        Ok(out)
    }

    fn peek_char(&self) -> Option<(usize, char)> {
        self.src[self.pos..]
            .chars()
            .next()
            .map(|c| (self.pos, c))
    }

    fn single(&mut self, off: usize, c: char, t: Tok) -> Tok {
        self.pos = off + c.len_utf8();
        t
    }

    fn number(&mut self, start: usize) -> Result<Tok, ParseError> {
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        // optional exponent part: e / E, optional sign, digits
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut e = end + 1;
            if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                e += 1;
            }
            if e < bytes.len() && bytes[e].is_ascii_digit() {
                while e < bytes.len() && bytes[e].is_ascii_digit() {
                    e += 1;
                }
                end = e;
            }
        }
        self.pos = end;
        self.src[start..end]
            .parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| ParseError {
                offset: start,
                kind: ParseErrorKind::InvalidNumber,
            })
    }

    fn ident(&mut self, start: usize) -> Tok {
        let end = self.src[start..]
            .char_indices()
            .find(|(_, c)| !(c.is_alphanumeric() || *c == '_'))
            .map(|(i, _)| start + i)
            .unwrap_or(self.src.len());
        self.pos = end;
        Tok::Ident(self.src[start..end].to_string())
    }
}

struct Parser<'a, T> {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    end_offset: usize,
    variables: &'a [String],
    aliases: &'a [(String, usize)],
    _marker: std::marker::PhantomData<T>,
}

/// Parse `text` into an expression over the ordered `variables`.
///
/// `aliases` maps additional accepted spellings to variable indices
/// (for example `y1` for the single `y` of a one-dimensional model).
pub fn parse_expression<T: Real>(
    text: &str,
    variables: &[String],
    aliases: &[(String, usize)],
) -> Result<Arc<Expr<T>>, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser {
        toks,
        idx: 0,
        end_offset: text.len(),
        variables,
        aliases,
        _marker: std::marker::PhantomData,
    };
    let e = p.sum()?;
    if let Some((off, _)) = p.peek() {
        return Err(ParseError {
            offset: off,
            kind: ParseErrorKind::Syntax("unexpected trailing input".into()),
        });
    }
    Ok(e)
}

impl<T: Real> Parser<'_, T> {
    fn peek(&self) -> Option<(usize, &Tok)> {
        self.toks.get(self.idx).map(|(o, t)| (*o, t))
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.idx)
            .map(|(o, _)| *o)
            .unwrap_or(self.end_offset)
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.bump() {
            Some((_, Tok::RParen)) => Ok(()),
            Some((off, _)) => Err(ParseError {
                offset: off,
                kind: ParseErrorKind::Syntax("expected `)`".into()),
            }),
            None => Err(ParseError {
                offset: self.end_offset,
                kind: ParseErrorKind::Syntax("expected `)`".into()),
            }),
        }
    }

    fn sum(&mut self) -> Result<Arc<Expr<T>>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some((_, Tok::Plus)) => {
                    self.bump();
                    lhs = Arc::new(Expr::Add(lhs, self.term()?));
                }
                Some((_, Tok::Minus)) => {
                    self.bump();
                    lhs = Arc::new(Expr::Sub(lhs, self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Expr<T>>, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some((_, Tok::Star)) => {
                    self.bump();
                    lhs = Arc::new(Expr::Mul(lhs, self.unary()?));
                }
                Some((_, Tok::Slash)) => {
                    self.bump();
                    lhs = Arc::new(Expr::Div(lhs, self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Expr<T>>, ParseError> {
        if let Some((_, Tok::Minus)) = self.peek() {
            self.bump();
            return Ok(Arc::new(Expr::Neg(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Arc<Expr<T>>, ParseError> {
        let base = self.atom()?;
        if let Some((_, Tok::Caret)) = self.peek() {
            self.bump();
            let exp_offset = self.here();
            let exponent = self.unary()?;
            let n = fold_integer_exponent(&exponent, exp_offset)?;
            return Ok(Arc::new(Expr::Pow(base, n)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Arc<Expr<T>>, ParseError> {
        match self.bump() {
            Some((_, Tok::Num(v))) => Ok(Expr::constant(T::of(v))),
            Some((_, Tok::LParen)) => {
                let e = self.sum()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Some((off, Tok::Ident(name))) => {
                if let Some((_, Tok::LParen)) = self.peek() {
                    self.bump();
                    let arg = self.sum()?;
                    self.expect_rparen()?;
                    return match name.as_str() {
                        "sin" => Ok(Arc::new(Expr::Sin(arg))),
                        "cos" => Ok(Arc::new(Expr::Cos(arg))),
                        "exp" => Ok(Arc::new(Expr::Exp(arg))),
                        "log" => Ok(Arc::new(Expr::Log(arg))),
                        _ => Err(ParseError {
                            offset: off,
                            kind: ParseErrorKind::UnknownIdentifier(name),
                        }),
                    };
                }
                if let Some(i) = self.variables.iter().position(|v| *v == name) {
                    return Ok(Expr::var(i));
                }
                if let Some((_, i)) = self.aliases.iter().find(|(a, _)| *a == name) {
                    return Ok(Expr::var(*i));
                }
                Err(ParseError {
                    offset: off,
                    kind: ParseErrorKind::UnknownIdentifier(name),
                })
            }
            Some((off, _)) => Err(ParseError {
                offset: off,
                kind: ParseErrorKind::Syntax("expected an operand".into()),
            }),
            None => Err(ParseError {
                offset: self.end_offset,
                kind: ParseErrorKind::Syntax("expected an operand".into()),
            }),
        }
    }
}

fn fold_integer_exponent<T: Real>(e: &Expr<T>, offset: usize) -> Result<i32, ParseError> {
    if e.has_variables() {
        return Err(ParseError {
            offset,
            kind: ParseErrorKind::NonConstantExponent,
        });
    }
    let v = e.eval(&[]).map_err(|_| ParseError {
        offset,
        kind: ParseErrorKind::NonConstantExponent,
    })?;
    let v = v.as_f64();
    let rounded = v.round();
    if (v - rounded).abs() > 1e-9 * v.abs().max(1.0) {
        return Err(ParseError {
            offset,
            kind: ParseErrorKind::FractionalExponent,
        });
    }
    if rounded.abs() > f64::from(i32::MAX) {
        return Err(ParseError {
            offset,
            kind: ParseErrorKind::Syntax("exponent out of range".into()),
        });
    }
    Ok(rounded as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ParseErrorKind;

    fn vars() -> Vec<String> {
        vec!["x".into(), "y1".into(), "y2".into()]
    }

    fn parse(text: &str) -> Result<Arc<Expr<f64>>, ParseError> {
        parse_expression(text, &vars(), &[])
    }

    #[test]
    fn product_evaluates() {
        let e = parse("x*y1").unwrap();
        assert_eq!(e.eval(&[2.0, 3.0, 0.0]).unwrap(), 6.0);
    }

    #[test]
    fn grouping_and_power() {
        let e = parse("x*(y1 + y2^2)").unwrap();
        assert_eq!(e.eval(&[2.0, 1.0, 3.0]).unwrap(), 20.0);
    }

    #[test]
    fn unbalanced_paren_offset() {
        let err = parse("x*(").unwrap_err();
        assert_eq!(err.offset, 3);
    }

    #[test]
    fn exp_of_zero() {
        let e = parse("exp(0)*x").unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), 3.0);
    }

    #[test]
    fn symmetric_difference() {
        let e = parse("y1 - y2").unwrap();
        assert_eq!(e.eval(&[0.0, 4.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn fractional_exponent_rejected() {
        let err = parse("x^2.5").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::FractionalExponent);
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn variable_exponent_rejected() {
        let err = parse("x^y1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonConstantExponent);
    }

    #[test]
    fn constant_exponent_folds() {
        let e = parse("x^(1+1)").unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), 9.0);
    }

    #[test]
    fn power_is_right_associative() {
        // x^2^3 = x^(2^3) = x^8
        let e = parse("x^2^3").unwrap();
        assert_eq!(e.eval(&[2.0, 0.0, 0.0]).unwrap(), 256.0);
    }

    #[test]
    fn negative_exponent() {
        let e = parse("x^-2").unwrap();
        assert_eq!(e.eval(&[2.0, 0.0, 0.0]).unwrap(), 0.25);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse("-x^2").unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), -9.0);
    }

    #[test]
    fn precedence_mul_over_add() {
        let e = parse("1 + 2*y1").unwrap();
        assert_eq!(e.eval(&[0.0, 3.0, 0.0]).unwrap(), 7.0);
    }

    #[test]
    fn left_associative_subtraction() {
        let e = parse("4 - 2 - 1").unwrap();
        assert_eq!(e.eval(&[0.0; 3]).unwrap(), 1.0);
    }

    #[test]
    fn unknown_identifier() {
        let err = parse("x*z").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("z".into()));
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn alias_resolves() {
        let vars = vec!["x".into(), "y".into()];
        let aliases = vec![("y1".to_string(), 1)];
        let e: Arc<Expr<f64>> = parse_expression("x*y1", &vars, &aliases).unwrap();
        assert_eq!(e.eval(&[2.0, 5.0]).unwrap(), 10.0);
    }

    #[test]
    fn scientific_literals() {
        let e = parse("1.5e-3 + 2E2").unwrap();
        assert_eq!(e.eval(&[0.0; 3]).unwrap(), 200.0015);
    }
}
