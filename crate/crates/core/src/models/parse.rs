//! Recursive-descent parser for scalar and operator expressions.
//!
//! Grammar (whitespace ignored, `−` accepted as minus):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' exponent)?
//! exponent := int | '-' int | '(' '-'? int ')'
//! atom   := number | number 'i' | 'i' | 'x' | 'p' | '(' expr ')'
//!         | ('abs' | 'exp') '(' expr ')' | 'ipow' '(' expr ',' signed-number ')'
//! ```
//!
//! Momentum `p` may only appear with x-dependent factors on its left, at total
//! degree at most 2, and never inside a function argument.

use crate::operators::{OperatorExpr, ScalarExpr};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Sym(char),
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = input.char_indices().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let (pos, c) = chars[k];
        if c.is_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < chars.len() && (chars[k].1.is_ascii_digit() || chars[k].1 == '.') {
                k += 1;
            }
            if k < chars.len() && matches!(chars[k].1, 'e' | 'E') {
                let mut j = k + 1;
                if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].1.is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text: String = chars[start..k].iter().map(|&(_, c)| c).collect();
            let value: f64 = text.parse().map_err(|_| Error::Parse {
                position: pos,
                expected: "number".into(),
                found: text.clone(),
            })?;
            let followed_by_i = k < chars.len()
                && chars[k].1 == 'i'
                && !(k + 1 < chars.len() && chars[k + 1].1.is_ascii_alphanumeric());
            if followed_by_i {
                k += 1;
                out.push((pos, Tok::Imag(value)));
            } else {
                out.push((pos, Tok::Num(value)));
            }
        } else if c.is_ascii_alphabetic() {
            let start = k;
            while k < chars.len() && chars[k].1.is_ascii_alphanumeric() {
                k += 1;
            }
            out.push((pos, Tok::Ident(chars[start..k].iter().map(|&(_, c)| c).collect())));
        } else if "+-*/^(),".contains(c) || c == '\u{2212}' {
            out.push((pos, Tok::Sym(if c == '\u{2212}' { '-' } else { c })));
            k += 1;
        } else {
            return Err(Error::Parse {
                position: pos,
                expected: "expression".into(),
                found: c.to_string(),
            });
        }
    }
    Ok(out)
}

/// Coefficient of a power of p. `Unit` is the implicit factor of a bare `p`, kept
/// apart from a literal `1` so that printing and re-parsing reproduce the tree.
#[derive(Debug, Clone)]
enum Coef {
    Unit,
    Expr(ScalarExpr),
}

impl Coef {
    fn into_expr(self) -> ScalarExpr {
        match self {
            Coef::Unit => ScalarExpr::one(),
            Coef::Expr(e) => e,
        }
    }

    fn depends_on_x(&self) -> bool {
        matches!(self, Coef::Expr(e) if e.depends_on_x())
    }

    fn times(&self, other: &Coef) -> Coef {
        match (self, other) {
            (Coef::Unit, c) | (c, Coef::Unit) => c.clone(),
            (Coef::Expr(a), Coef::Expr(b)) => {
                Coef::Expr(ScalarExpr::Mul(bx(a.clone()), bx(b.clone())).folded())
            }
        }
    }
}

/// Polynomial in p with coefficients standing to the left: `Σ cₖ(x)·p^k`.
#[derive(Debug, Clone)]
struct PolyP {
    coeffs: [Option<Coef>; 3],
}

impl PolyP {
    fn scalar(s: ScalarExpr) -> Self {
        PolyP {
            coeffs: [Some(Coef::Expr(s)), None, None],
        }
    }

    fn momentum() -> Self {
        PolyP {
            coeffs: [None, Some(Coef::Unit), None],
        }
    }

    fn as_scalar(&self) -> Option<ScalarExpr> {
        match &self.coeffs {
            [Some(c), None, None] => Some(c.clone().into_expr()),
            _ => None,
        }
    }

    fn has_p(&self) -> bool {
        self.coeffs[1].is_some() || self.coeffs[2].is_some()
    }

    fn map(&mut self, f: impl Fn(ScalarExpr) -> ScalarExpr) {
        for c in self.coeffs.iter_mut() {
            if let Some(v) = c.take() {
                *c = Some(Coef::Expr(f(v.into_expr()).folded()));
            }
        }
    }
}

fn bx(e: ScalarExpr) -> Box<ScalarExpr> {
    Box::new(e)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn found(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Num(v)) => v.to_string(),
            Some(Tok::Imag(v)) => format!("{v}i"),
            Some(Tok::Ident(s)) => s.clone(),
            Some(Tok::Sym(c)) => c.to_string(),
        }
    }

    fn error<T>(&self, expected: &str) -> Result<T> {
        Err(Error::Parse {
            position: self.pos(),
            expected: expected.into(),
            found: self.found(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(&format!("`{c}`"))
        }
    }

    fn expr(&mut self) -> Result<PolyP> {
        let mut acc = self.term()?;
        loop {
            let sub = if self.eat('+') {
                false
            } else if self.eat('-') {
                true
            } else {
                return Ok(acc);
            };
            let rhs = self.term()?;
            for (slot, r) in acc.coeffs.iter_mut().zip(rhs.coeffs) {
                let Some(r) = r else { continue };
                *slot = Some(match slot.take() {
                    None if sub => Coef::Expr(ScalarExpr::Neg(bx(r.into_expr())).folded()),
                    None => r,
                    Some(l) => {
                        let (l, r) = (bx(l.into_expr()), bx(r.into_expr()));
                        Coef::Expr(if sub { ScalarExpr::Sub(l, r) } else { ScalarExpr::Add(l, r) }.folded())
                    }
                });
            }
        }
    }

    fn term(&mut self) -> Result<PolyP> {
        let mut acc = self.unary()?;
        loop {
            let start = self.pos();
            if self.eat('*') {
                let rhs = self.unary()?;
                acc = multiply(&acc, &rhs, start)?;
            } else if self.eat('/') {
                let rhs = self.unary()?;
                let Some(d) = rhs.as_scalar() else {
                    return Err(Error::Parse {
                        position: start,
                        expected: "divisor free of p".into(),
                        found: "p".into(),
                    });
                };
                if acc.has_p() && d.depends_on_x() {
                    return Err(Error::Parse {
                        position: start,
                        expected: "constant divisor of a p term".into(),
                        found: d.to_string(),
                    });
                }
                acc.map(|c| ScalarExpr::Div(bx(c), bx(d.clone())));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<PolyP> {
        if self.eat('-') {
            let mut inner = self.unary()?;
            inner.map(|c| ScalarExpr::Neg(bx(c)));
            Ok(inner)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<PolyP> {
        let start = self.pos();
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let n = self.exponent()?;
        match base.as_scalar() {
            Some(s) => Ok(PolyP::scalar(ScalarExpr::Pow(bx(s), n).folded())),
            None => {
                if n < 0 {
                    return Err(Error::Parse {
                        position: start,
                        expected: "non-negative power of an operator".into(),
                        found: n.to_string(),
                    });
                }
                let mut acc = PolyP {
                    coeffs: [Some(Coef::Unit), None, None],
                };
                for _ in 0..n {
                    acc = multiply(&acc, &base, start)?;
                }
                Ok(acc)
            }
        }
    }

    fn integer(&mut self) -> Result<i32> {
        match self.peek() {
            Some(&Tok::Num(v)) if v.fract() == 0.0 && v.abs() < i32::MAX as f64 => {
                self.at += 1;
                Ok(v as i32)
            }
            _ => self.error("integer exponent"),
        }
    }

    fn exponent(&mut self) -> Result<i32> {
        if self.eat('(') {
            let neg = self.eat('-');
            let n = self.integer()?;
            self.expect(')')?;
            Ok(if neg { -n } else { n })
        } else if self.eat('-') {
            Ok(-self.integer()?)
        } else {
            self.integer()
        }
    }

    fn signed_number(&mut self) -> Result<f64> {
        let neg = self.eat('-');
        match self.peek() {
            Some(&Tok::Num(v)) => {
                self.at += 1;
                Ok(if neg { -v } else { v })
            }
            _ => self.error("number"),
        }
    }

    fn function_arg(&mut self, name: &str) -> Result<ScalarExpr> {
        let start = self.pos();
        let arg = self.expr()?;
        match arg.as_scalar() {
            Some(s) => Ok(s),
            None => Err(Error::Parse {
                position: start,
                expected: format!("argument of {name} free of p"),
                found: "p".into(),
            }),
        }
    }

    fn atom(&mut self) -> Result<PolyP> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.error("operand"),
        };
        match tok {
            Tok::Num(v) => {
                self.at += 1;
                Ok(PolyP::scalar(ScalarExpr::real(v)))
            }
            Tok::Imag(v) => {
                self.at += 1;
                Ok(PolyP::scalar(ScalarExpr::Const(C64::new(0.0, v))))
            }
            Tok::Sym('(') => {
                self.at += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.at += 1;
                match name.as_str() {
                    "x" => Ok(PolyP::scalar(ScalarExpr::X)),
                    "p" => Ok(PolyP::momentum()),
                    "i" => Ok(PolyP::scalar(ScalarExpr::Const(C64::new(0.0, 1.0)))),
                    "abs" | "exp" => {
                        self.expect('(')?;
                        let arg = self.function_arg(&name)?;
                        self.expect(')')?;
                        let e = if name == "abs" {
                            ScalarExpr::Abs(bx(arg))
                        } else {
                            ScalarExpr::Exp(bx(arg))
                        };
                        Ok(PolyP::scalar(e.folded()))
                    }
                    "ipow" => {
                        self.expect('(')?;
                        let arg = self.function_arg(&name)?;
                        self.expect(',')?;
                        let nu = self.signed_number()?;
                        self.expect(')')?;
                        Ok(PolyP::scalar(ScalarExpr::Ipow(bx(arg), nu).folded()))
                    }
                    _ => {
                        self.at -= 1;
                        self.error("x, p, i, abs, exp or ipow")
                    }
                }
            }
            _ => self.error("operand"),
        }
    }
}

fn multiply(a: &PolyP, b: &PolyP, position: usize) -> Result<PolyP> {
    let mut out = PolyP {
        coeffs: [None, None, None],
    };
    for (i, ca) in a.coeffs.iter().enumerate() {
        let Some(ca) = ca else { continue };
        for (j, cb) in b.coeffs.iter().enumerate() {
            let Some(cb) = cb else { continue };
            if i > 0 && cb.depends_on_x() {
                return Err(Error::Parse {
                    position,
                    expected: "x-dependent factors to the left of p".into(),
                    found: cb.clone().into_expr().to_string(),
                });
            }
            if i + j > 2 {
                return Err(Error::Parse {
                    position,
                    expected: "total power of p at most 2".into(),
                    found: format!("p^{}", i + j),
                });
            }
            let term = ca.times(cb);
            let slot = &mut out.coeffs[i + j];
            *slot = Some(match slot.take() {
                None => term,
                Some(prev) => Coef::Expr(ScalarExpr::Add(bx(prev.into_expr()), bx(term.into_expr())).folded()),
            });
        }
    }
    Ok(out)
}

fn parse_poly(input: &str) -> Result<PolyP> {
    let toks = lex(input)?;
    let mut parser = Parser {
        toks,
        at: 0,
        end: input.len(),
    };
    let poly = parser.expr()?;
    if parser.peek().is_some() {
        return parser.error("operator or end of input");
    }
    Ok(poly)
}

/// Parse an operator such as `p^2 + (2i/x)*p - 2/x^2 + x^2`.
pub fn parse_expression(input: &str) -> Result<OperatorExpr> {
    let poly = parse_poly(input)?;
    let terms = poly
        .coeffs
        .into_iter()
        .enumerate()
        .filter_map(|(k, c)| c.map(|c| (c.into_expr(), k as u8)))
        .collect();
    OperatorExpr::new(terms)
}

/// Parse a scalar function of x (no momentum allowed).
pub fn parse_scalar(input: &str) -> Result<ScalarExpr> {
    let poly = parse_poly(input)?;
    match poly.as_scalar() {
        Some(s) => Ok(s),
        None if !poly.has_p() => Ok(ScalarExpr::real(0.0)),
        None => Err(Error::Parse {
            position: 0,
            expected: "function of x only".into(),
            found: "p".into(),
        }),
    }
}
