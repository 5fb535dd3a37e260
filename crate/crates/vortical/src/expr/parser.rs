//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := power (('*' | '/') power)*
//! power  := base ('^' power)?            // right-associative
//! base   := '-' base | atom
//! atom   := number | ident '(' expr ')' | ident | '(' expr ')'
//! ```
//!
//! `ident` followed by `(` must name a built-in function; any other ident is
//! `x`, `y`, or a parameter. Errors carry the byte offset of the offending
//! token.

use super::{Expr, Func, ParseError, Var};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let start = self.pos;
            let c = self.src[self.pos];
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.pos += 1;
                }
                b'+' => self.push_single(&mut out, Tok::Plus),
                b'-' => self.push_single(&mut out, Tok::Minus),
                b'*' => self.push_single(&mut out, Tok::Star),
                b'/' => self.push_single(&mut out, Tok::Slash),
                b'^' => self.push_single(&mut out, Tok::Caret),
                b'(' => self.push_single(&mut out, Tok::LParen),
                b')' => self.push_single(&mut out, Tok::RParen),
                b',' => self.push_single(&mut out, Tok::Comma),
                b'0'..=b'9' | b'.' => {
                    let tok = self.lex_number()?;
                    out.push((tok, start));
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    while self.pos < self.src.len()
                        && matches!(self.src[self.pos], b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_')
                    {
                        self.pos += 1;
                    }
                    let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
                    out.push((Tok::Ident(name), start));
                }
                _ => {
                    return Err(ParseError {
                        offset: start,
                        message: format!("unexpected character {:?}", c as char),
                    })
                }
            }
        }
        Ok(out)
    }

    fn push_single(&mut self, out: &mut Vec<(Tok, usize)>, tok: Tok) {
        out.push((tok, self.pos));
        self.pos += 1;
    }

    fn lex_number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // Optional exponent, e.g. 1e-3.
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all ("2e" could start an ident elsewhere);
                // treat the number as ending before 'e'.
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Tok::Number)
            .map_err(|_| ParseError { offset: start, message: format!("invalid number literal {text:?}") })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.idx).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t.clone());
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.idx += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn error(&self, message: String) -> ParseError {
        ParseError { offset: self.offset(), message }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.idx += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.idx += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.idx += 1;
                    let rhs = self.parse_power()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.idx += 1;
                    let rhs = self.parse_power()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_base()?;
        if self.peek() == Some(&Tok::Caret) {
            self.idx += 1;
            let exp = self.parse_power()?;
            Ok(Expr::Pow(Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn parse_base(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.idx += 1;
            let inner = self.parse_base()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Number(v)) => Ok(Expr::Constant(v)),
            Some(Tok::LParen) => {
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let func = Func::from_name(&name).ok_or(ParseError {
                        offset,
                        message: format!("unknown function {name:?}"),
                    })?;
                    self.idx += 1; // consume '('
                    let arg = self.parse_expr()?;
                    if self.peek() == Some(&Tok::Comma) {
                        return Err(self.error(format!("function {name:?} takes exactly one argument")));
                    }
                    self.expect(Tok::RParen, "closing parenthesis")?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else {
                    match name.as_str() {
                        "x" => Ok(Expr::Var(Var::X)),
                        "y" => Ok(Expr::Var(Var::Y)),
                        _ => Ok(Expr::Param(name)),
                    }
                }
            }
            Some(_) => Err(ParseError { offset, message: "expected an operand".to_string() }),
            None => Err(ParseError { offset, message: "unexpected end of input".to_string() }),
        }
    }
}

/// Parses an expression, requiring the whole input to be consumed.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError { offset: 0, message: "empty expression".to_string() });
    }
    let toks = Lexer::new(text).tokens()?;
    let mut parser = Parser { toks, idx: 0, end: text.len() };
    let expr = parser.parse_expr()?;
    if parser.idx != parser.toks.len() {
        return Err(parser.error("unexpected token after expression".to_string()));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_examples() {
        assert_eq!(
            parse("x*y").unwrap(),
            Expr::Mul(Box::new(Expr::Var(Var::X)), Box::new(Expr::Var(Var::Y)))
        );
        assert!(matches!(parse("0.5*(x^2+y^2)").unwrap(), Expr::Mul(..)));
    }

    #[test]
    fn syntax_error_offsets() {
        let err = parse("x +").unwrap_err();
        assert_eq!(err.offset, 3);
        let err = parse("(x").unwrap_err();
        assert_eq!(err.offset, 2);
        let err = parse("x + * y").unwrap_err();
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn implicit_multiplication_rejected() {
        let err = parse("2x").unwrap_err();
        assert_eq!(err.offset, 1);
        assert!(parse("2 x").is_err());
    }

    #[test]
    fn unknown_function_and_arity() {
        let err = parse("sinh(x)").unwrap_err();
        assert!(err.message.contains("unknown function"));
        assert_eq!(err.offset, 0);
        let err = parse("sin(x, y)").unwrap_err();
        assert!(err.message.contains("exactly one argument"));
    }

    #[test]
    fn empty_input() {
        assert!(parse("").is_err());
        assert!(parse("   ").is_err());
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(parse("1e-3").unwrap(), Expr::Constant(1e-3));
        assert_eq!(parse("2.5E2").unwrap(), Expr::Constant(250.0));
    }
}
