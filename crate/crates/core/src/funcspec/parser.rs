use super::{BinOp, Expr, ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(u64),
    Coord(usize),
    X,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Int(v) => format!("number {v}"),
            Tok::Coord(i) => format!("'w{}'", i + 1),
            Tok::X => "'x'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const OPERAND: &[&str] = &["number", "variable", "'('", "'-'"];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (at, tok) = lx.next()?;
            let end = tok == Tok::End;
            out.push((at, tok));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok((start, Tok::End));
        };
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((start, tok));
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number(start).map(|t| (start, t));
        }
        if c.is_alphabetic() || c == '_' {
            let ident_len = self.src[start..]
                .char_indices()
                .find(|(_, ch)| !(ch.is_alphanumeric() || *ch == '_'))
                .map_or(self.src.len() - start, |(i, _)| i);
            let ident = &self.src[start..start + ident_len];
            self.pos = start + ident_len;
            if ident == "x" {
                return Ok((start, Tok::X));
            }
            if let Some(digits) = ident.strip_prefix('w') {
                if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                    if let Ok(i) = digits.parse::<usize>() {
                        if i >= 1 {
                            return Ok((start, Tok::Coord(i - 1)));
                        }
                    }
                }
            }
            return Err(ParseError {
                offset: start,
                expected: vec!["'w1'..'wd'", "'x'"],
                found: format!("identifier '{ident}'"),
                kind: ParseErrorKind::UnknownIdentifier,
            });
        }
        Err(ParseError {
            offset: start,
            expected: vec!["number", "variable", "operator", "'('", "')'"],
            found: format!("'{c}'"),
            kind: ParseErrorKind::Syntax,
        })
    }

    fn number(&mut self, start: usize) -> Result<Tok, ParseError> {
        let bytes = self.src.as_bytes();
        let mut i = start;
        let digits = |i: &mut usize| {
            let s = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            *i - s
        };
        let int_digits = digits(&mut i);
        let mut integral = true;
        let mut frac_digits = 0;
        if i < bytes.len() && bytes[i] == b'.' {
            integral = false;
            i += 1;
            frac_digits = digits(&mut i);
        }
        if int_digits + frac_digits == 0 {
            return Err(ParseError {
                offset: start,
                expected: vec!["digit"],
                found: "'.'".into(),
                kind: ParseErrorKind::Syntax,
            });
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if digits(&mut j) == 0 {
                return Err(ParseError {
                    offset: j,
                    expected: vec!["exponent digits"],
                    found: describe_at(self.src, j),
                    kind: ParseErrorKind::Syntax,
                });
            }
            integral = false;
            i = j;
        }
        let text = &self.src[start..i];
        self.pos = i;
        if integral {
            if let Ok(n) = text.parse::<u64>() {
                return Ok(Tok::Int(n));
            }
        }
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Tok::Num(v)),
            _ => Err(ParseError {
                offset: start,
                expected: vec!["finite number"],
                found: format!("'{text}'"),
                kind: ParseErrorKind::Syntax,
            }),
        }
    }
}

fn describe_at(src: &str, at: usize) -> String {
    src[at..]
        .chars()
        .next()
        .map_or_else(|| "end of input".to_string(), |c| format!("'{c}'"))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    idx: usize,
}

/// Parses an expression; errors carry the byte offset of the offending token.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: Lexer::tokens(text)?,
        idx: 0,
    };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        _ => Err(p.error(&["operator", "end of input"])),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].1.clone();
        if t != Tok::End {
            self.idx += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        let (offset, tok) = &self.toks[self.idx];
        ParseError {
            offset: *offset,
            expected: expected.to_vec(),
            found: tok.describe(),
            kind: ParseErrorKind::Syntax,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let n = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    /// Integer exponents fold at parse time: `a^2^3` is `a^8`.
    fn exponent(&mut self) -> Result<u32, ParseError> {
        let at = self.idx;
        let Tok::Int(n) = self.peek().clone() else {
            return Err(self.error(&["non-negative integer exponent"]));
        };
        self.bump();
        let n = if *self.peek() == Tok::Caret {
            self.bump();
            let m = self.exponent()?;
            u32::try_from(n).ok().and_then(|n| n.checked_pow(m))
        } else {
            u32::try_from(n).ok()
        };
        n.ok_or_else(|| ParseError {
            offset: self.toks[at].0,
            expected: vec!["exponent below 2^32"],
            found: "overflowing exponent".into(),
            kind: ParseErrorKind::Syntax,
        })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Num(n as f64))
            }
            Tok::Coord(i) => {
                self.bump();
                Ok(Expr::Coord(i))
            }
            Tok::X => {
                self.bump();
                Ok(Expr::X)
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(&["')'", "operator"]));
                }
                self.bump();
                Ok(e)
            }
            _ => Err(self.error(OPERAND)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::EvalError;
    use super::*;

    fn ev(s: &str, p: &[f64]) -> f64 {
        parse(s).unwrap().eval(p).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(ev("1 + 2*w1", &[1.0, 0.0, 0.0]), 3.0);
        let v = ev("w1^2 - w2*w3", &[0.5, 0.8660254, 0.0]);
        assert!((v - 0.25).abs() < 1e-15);
        let err = parse("w1 + * 2").unwrap_err();
        assert_eq!(err.offset, 5);
        assert_eq!(err.kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn eval_errors() {
        assert!(matches!(
            parse("w4").unwrap().eval(&[0.0, 0.0, 1.0]),
            Err(EvalError::DimensionMismatch { index: 4, dim: 3 })
        ));
        assert_eq!(
            parse("1/ (w1 - w1)").unwrap().eval(&[0.3, 0.0, 0.0]),
            Err(EvalError::DivisionByZero)
        );
        assert_eq!(ev("-w2^2", &[0.0, 3.0, 0.0]), -9.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2+3*4", &[0.0, 0.0]), 14.0);
        assert_eq!(ev("2*3^2", &[0.0, 0.0]), 18.0);
        assert_eq!(ev("10-4-3", &[0.0, 0.0]), 3.0);
        assert_eq!(ev("64/4/2", &[0.0, 0.0]), 8.0);
        assert_eq!(ev("2^3^2", &[0.0, 0.0]), 512.0);
        assert_eq!(ev("(1+1)^3", &[0.0, 0.0]), 8.0);
        assert_eq!(ev("--w1", &[2.0, 0.0]), 2.0);
        assert_eq!(ev("  1.5e1 *  w2 ", &[0.0, 2.0]), 30.0);
        assert_eq!(parse("x^3").unwrap().eval_scalar(0.5).unwrap(), 0.125);
    }

    #[test]
    fn syntax_errors_are_positioned() {
        let cases = [
            ("", 0),
            ("(w1", 3),
            ("w1)", 2),
            ("w1^-1", 3),
            ("w1^0.5", 3),
            ("3 $ 4", 2),
            ("1e", 2),
            ("1e999", 0),
            ("w0", 0),
            ("sin(w1)", 0),
            ("w1 w2", 3),
        ];
        for (src, offset) in cases {
            let err = parse(src).unwrap_err();
            assert_eq!(err.offset, offset, "{src:?}: {err}");
        }
        assert_eq!(parse("foo").unwrap_err().kind, ParseErrorKind::UnknownIdentifier);
    }
}
