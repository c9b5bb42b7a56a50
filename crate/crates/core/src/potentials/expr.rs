//! Recursive-descent parser for potential expressions in the variable `x`.
//!
//! ```text
//! expr    = term , { ( "+" | "-" ) , term } ;
//! term    = unary , { ( "*" | "/" ) , unary } ;
//! unary   = "-" , unary | power ;
//! power   = primary , [ "^" , unary ] ;          (* right-associative *)
//! primary = number | "x" | "pi"
//!         | func , "(" , expr , ")"
//!         | "(" , expr , ")" ;
//! func    = "exp" | "ln" | "sqrt" | "cosh" | "sech" ;
//! number  = digit , { digit } , [ "." , { digit } ] , [ ( "e" | "E" ) , [ "+" | "-" ] , digit , { digit } ]
//!         | "." , digit , { digit } , [ exponent ] ;
//! ```
//!
//! So `-x^2` is `-(x^2)` and `2^-x` is `2^(-x)`. Whitespace is ignored.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Expr {
    Num(f64),
    X,
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Func {
    Exp,
    Ln,
    Sqrt,
    Cosh,
    Sech,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "cosh" => Func::Cosh,
            "sech" => Func::Sech,
            _ => return None,
        })
    }
}

impl Expr {
    pub(crate) fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Neg(e) => -e.eval(x),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                    Op::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(x);
                match f {
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln(),
                    Func::Sqrt => v.sqrt(),
                    Func::Cosh => v.cosh(),
                    Func::Sech => 1.0 / v.cosh(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
}

impl std::error::Error for SyntaxError {}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at byte {}", self.message, self.offset)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(u8),
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token and the byte offset where it starts.
    fn next(&mut self) -> Result<(Tok, usize), SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(start) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start).map(|t| (t, start));
        }
        if c.is_ascii_alphabetic() {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
            return Ok((Tok::Ident(s.to_string()), start));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Sym(c), start));
        }
        Err(SyntaxError {
            offset: start,
            message: format!(
                "unexpected character `{}`",
                std::str::from_utf8(&self.src[start..])
                    .ok()
                    .and_then(|s| s.chars().next())
                    .unwrap_or('?')
            ),
        })
    }

    fn number(&mut self, start: usize) -> Result<Tok, SyntaxError> {
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(SyntaxError {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // `2e` followed by something that is not an exponent.
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Tok::Num).map_err(|_| SyntaxError {
            offset: start,
            message: "malformed number".into(),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

pub(crate) fn parse(src: &str) -> Result<Expr, SyntaxError> {
    let mut lexer = Lexer {
        src: src.as_bytes(),
        pos: 0,
    };
    let (tok, at) = lexer.next()?;
    let mut p = Parser { lexer, tok, at };
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

impl Parser<'_> {
    fn bump(&mut self) -> Result<(), SyntaxError> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn error(&self, message: &str) -> SyntaxError {
        SyntaxError {
            offset: self.at,
            message: message.to_string(),
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), SyntaxError> {
        if self.tok == Tok::Sym(c) {
            self.bump()
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym(b'+') => Op::Add,
                Tok::Sym(b'-') => Op::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Sym(b'*') => Op::Mul,
                Tok::Sym(b'/') => Op::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.tok == Tok::Sym(b'-') {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.primary()?;
        if self.tok == Tok::Sym(b'^') {
            self.bump()?;
            let exp = self.unary()?;
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::Sym(b'(') => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "x" {
                    self.bump()?;
                    return Ok(Expr::X);
                }
                if name == "pi" {
                    self.bump()?;
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(self.error(&format!("unknown identifier `{name}`")));
                };
                self.bump()?;
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::End => Err(self.error("unexpected end of input")),
            Tok::Sym(c) => Err(self.error(&format!("unexpected `{}`", c as char))),
        }
    }
}
