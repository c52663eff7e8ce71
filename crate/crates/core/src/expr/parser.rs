//! Recursive-descent parser for scale expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | ident | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use std::fmt;

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at byte {}: expected one of [{}], found {}",
            self.offset,
            self.expected.join(", "),
            self.found
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(v) => format!("number {v}"),
            Token::Ident(name) => format!("identifier `{name}`"),
            Token::Op(c) => format!("`{c}`"),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Comma => "`,`".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                tokens.push((i, Token::Op(c as char)));
                i += 1;
            }
            b'(' => {
                tokens.push((i, Token::LParen));
                i += 1;
            }
            b')' => {
                tokens.push((i, Token::RParen));
                i += 1;
            }
            b',' => {
                tokens.push((i, Token::Comma));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let literal = &text[start..i];
                let value = literal.parse::<f64>().map_err(|_| ParseError {
                    offset: start,
                    expected: vec!["number".into()],
                    found: format!("`{literal}`"),
                })?;
                tokens.push((start, Token::Number(value)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push((start, Token::Ident(text[start..i].to_string())));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: i,
                    expected: vec!["expression".into()],
                    found: format!("`{ch}`"),
                });
            }
        }
    }
    tokens.push((text.len(), Token::End));
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    var: &'a str,
}

const OPERAND: [&str; 5] = ["number", "identifier", "function call", "`(`", "`-`"];

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].1
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].1.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, token: Token, name: &str) -> Result<(), ParseError> {
        if *self.peek() == token {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Op('+') => BinOp::Add,
                Token::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Op('*') => BinOp::Mul,
                Token::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Token::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Token::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Token::Number(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Token::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Token::Ident(name) => {
                let at = self.offset();
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    return self.call(func);
                }
                if *self.peek() == Token::LParen {
                    let mut expected: Vec<String> =
                        Func::ALL.iter().map(|f| f.name().to_string()).collect();
                    expected.sort();
                    return Err(ParseError {
                        offset: at,
                        expected,
                        found: format!("unknown function `{name}`"),
                    });
                }
                Ok(match name.as_str() {
                    "pi" => Expr::Pi,
                    n if n == self.var => Expr::Var(name),
                    _ => Expr::Param(name),
                })
            }
            _ => Err(self.error(&OPERAND)),
        }
    }

    fn call(&mut self, func: Func) -> Result<Expr, ParseError> {
        self.expect(Token::LParen, "`(`")?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Token::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        if args.len() != func.arity() {
            return Err(ParseError {
                offset: self.offset(),
                expected: vec![format!("{} argument(s) to {}", func.arity(), func.name())],
                found: format!("{} argument(s)", args.len()),
            });
        }
        self.expect(Token::RParen, "`)`")?;
        Ok(Expr::Call(func, args))
    }
}

/// Parses an expression whose free variable is `x`.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    parse_expression_in(text, "x")
}

/// Parses an expression whose free variable is `var`; every other
/// non-function identifier becomes a parameter.
pub fn parse_expression_in(text: &str, var: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, var };
    let expr = parser.expr()?;
    if *parser.peek() != Token::End {
        return Err(parser.error(&["operator", "end of input"]));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_tree() {
        let e = parse_expression("1/x").unwrap();
        assert_eq!(e, Expr::Num(1.0) / Expr::var("x"));
    }

    #[test]
    fn lorentz_slide_function() {
        let e = parse_expression("-0.5*ln(1 - x^2/c^2)").unwrap();
        let x2 = Expr::var("x").pow(Expr::Num(2.0));
        let c2 = Expr::param("c").pow(Expr::Num(2.0));
        let expected = -Expr::Num(0.5) * (Expr::Num(1.0) - x2 / c2).ln();
        assert_eq!(e, expected);
    }

    #[test]
    fn horizon_function() {
        let e = parse_expression("R*arccos(R/(R+x))").unwrap();
        let r = || Expr::param("R");
        let expected = r() * Expr::call(Func::Arccos, r() / (r() + Expr::var("x")));
        assert_eq!(e, expected);
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expression("2^3^2").unwrap();
        assert_eq!(e.eval(0.0, &Default::default()).unwrap(), 512.0);
        let e = parse_expression("-2^2").unwrap();
        assert_eq!(e.eval(0.0, &Default::default()).unwrap(), -4.0);
        let e = parse_expression("8/4/2").unwrap();
        assert_eq!(e.eval(0.0, &Default::default()).unwrap(), 1.0);
        let e = parse_expression("1 - 2 - 3").unwrap();
        assert_eq!(e.eval(0.0, &Default::default()).unwrap(), -4.0);
        let e = parse_expression("2.5e-1 * 4E2").unwrap();
        assert_eq!(e.eval(0.0, &Default::default()).unwrap(), 100.0);
    }

    #[test]
    fn errors_carry_offset_and_expectations() {
        let err = parse_expression("1 + * x").unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(err.expected.iter().any(|e| e == "number"));

        let err = parse_expression("foo(x)").unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(err.expected.iter().any(|e| e == "ln"));

        let err = parse_expression("(x + 1").unwrap_err();
        assert_eq!(err.offset, 6);
        assert_eq!(err.expected, vec!["`)`".to_string()]);

        let err = parse_expression("x 2").unwrap_err();
        assert_eq!(err.offset, 2);

        assert!(parse_expression("pow(x)").is_err());
        assert!(parse_expression("ln x").is_err());
        assert!(parse_expression("").is_err());
        assert!(parse_expression("x $ 2").is_err());
    }

    #[test]
    fn custom_variable_name() {
        let e = parse_expression_in("M*v", "v").unwrap();
        assert_eq!(e, Expr::param("M") * Expr::var("v"));
    }
}
