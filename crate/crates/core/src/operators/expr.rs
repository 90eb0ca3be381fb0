use std::fmt;

use crate::{Error, Result, C64};

/// Scalar function of the coordinate `x`.
///
/// `Ipow(arg, ν)` is the principal-branch power `(i·arg)^ν`; on the real line it
/// equals `|x|^ν·e^{iνπ·sgn(x)/2}`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Const(C64),
    X,
    Neg(Box<ScalarExpr>),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    Pow(Box<ScalarExpr>, i32),
    Abs(Box<ScalarExpr>),
    Exp(Box<ScalarExpr>),
    Ipow(Box<ScalarExpr>, f64),
}

pub(crate) fn principal_ipow(z: C64, nu: f64) -> C64 {
    let w = C64::new(-z.im, z.re);
    if w.norm() == 0.0 {
        return if nu == 0.0 {
            C64::new(1.0, 0.0)
        } else if nu > 0.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(f64::INFINITY, 0.0)
        };
    }
    (w.ln() * nu).exp()
}

impl ScalarExpr {
    pub fn real(v: f64) -> Self {
        ScalarExpr::Const(C64::new(v, 0.0))
    }

    pub fn constant(v: C64) -> Self {
        ScalarExpr::Const(v)
    }

    pub fn one() -> Self {
        Self::real(1.0)
    }

    pub fn x() -> Self {
        ScalarExpr::X
    }

    pub fn eval(&self, x: f64) -> C64 {
        use ScalarExpr::*;
        match self {
            Const(c) => *c,
            X => C64::new(x, 0.0),
            Neg(a) => -a.eval(x),
            Add(a, b) => a.eval(x) + b.eval(x),
            Sub(a, b) => a.eval(x) - b.eval(x),
            Mul(a, b) => a.eval(x) * b.eval(x),
            Div(a, b) => a.eval(x) / b.eval(x),
            Pow(a, n) => {
                let z = a.eval(x);
                if z.im == 0.0 {
                    C64::new(z.re.powi(*n), 0.0)
                } else {
                    z.powi(*n)
                }
            }
            Abs(a) => C64::new(a.eval(x).norm(), 0.0),
            Exp(a) => a.eval(x).exp(),
            Ipow(a, nu) => principal_ipow(a.eval(x), *nu),
        }
    }

    pub fn as_const(&self) -> Option<C64> {
        match self {
            ScalarExpr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(C64::new(1.0, 0.0))
    }

    pub fn depends_on_x(&self) -> bool {
        use ScalarExpr::*;
        match self {
            Const(_) => false,
            X => true,
            Neg(a) | Pow(a, _) | Abs(a) | Exp(a) | Ipow(a, _) => a.depends_on_x(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }

    /// False when the expression may have a kink or branch point on the real
    /// line: any `abs`, or `ipow` with an exponent that is not a non-negative integer.
    pub fn is_smooth(&self) -> bool {
        use ScalarExpr::*;
        match self {
            Const(_) | X => true,
            Abs(_) => false,
            Ipow(a, nu) => nu.fract() == 0.0 && *nu >= 0.0 && a.is_smooth(),
            Neg(a) | Pow(a, _) | Exp(a) => a.is_smooth(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.is_smooth() && b.is_smooth(),
        }
    }

    /// Local power-law exponent β of `|f(x)| ~ |x|^β` at the origin, estimated from
    /// the two sides at x = ±1e-8 and ±1e-4; the smaller side wins. Identically zero
    /// near the origin gives `+∞`.
    pub fn origin_exponent(&self) -> f64 {
        let (near, far) = (1e-8, 1e-4);
        let mut beta = f64::INFINITY;
        for sign in [-1.0, 1.0] {
            let a = self.eval(sign * near).norm();
            let b = self.eval(sign * far).norm();
            if !a.is_finite() {
                return f64::NEG_INFINITY;
            }
            if a == 0.0 && b == 0.0 {
                continue;
            }
            if a == 0.0 {
                continue;
            }
            let side = (a / b).ln() / (near / far).ln();
            beta = beta.min(side);
        }
        beta
    }

    /// Constant folding: operations whose operands are all constants are
    /// evaluated, recursively. Parsed expressions are always folded.
    pub fn folded(&self) -> ScalarExpr {
        use ScalarExpr::*;
        // a constant subtree is replaced by its value when that value is finite
        let settle = |e: ScalarExpr, operands_constant: bool| {
            if operands_constant {
                let v = e.eval(0.0);
                if v.re.is_finite() && v.im.is_finite() {
                    return Const(v);
                }
            }
            e
        };
        let fold1 = |a: &ScalarExpr, make: fn(Box<ScalarExpr>) -> ScalarExpr| {
            let a = a.folded();
            let constant = a.as_const().is_some();
            settle(make(Box::new(a)), constant)
        };
        match self {
            Const(_) | X => self.clone(),
            Neg(a) => fold1(a, Neg),
            Abs(a) => fold1(a, Abs),
            Exp(a) => fold1(a, Exp),
            Pow(a, n) => {
                let a = a.folded();
                let constant = a.as_const().is_some();
                settle(Pow(Box::new(a), *n), constant)
            }
            Ipow(a, nu) => {
                let a = a.folded();
                let constant = a.as_const().is_some();
                settle(Ipow(Box::new(a), *nu), constant)
            }
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                let (a, b) = (a.folded(), b.folded());
                let constant = a.as_const().is_some() && b.as_const().is_some();
                settle(rebuild(self, a, b), constant)
            }
        }
    }

    fn precedence(&self) -> u8 {
        use ScalarExpr::*;
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(_) => 3,
            Pow(..) => 4,
            // constants print as atoms (parenthesized when signed or complex)
            Const(_) | X | Abs(_) | Exp(_) | Ipow(..) => 5,
        }
    }
}

fn rebuild(template: &ScalarExpr, a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    use ScalarExpr::*;
    let (a, b) = (Box::new(a), Box::new(b));
    match template {
        Add(..) => Add(a, b),
        Sub(..) => Sub(a, b),
        Mul(..) => Mul(a, b),
        _ => Div(a, b),
    }
}

fn fmt_real(v: f64) -> String {
    format!("{v}")
}

fn fmt_const(c: C64) -> String {
    let negative = |v: f64| v.is_sign_negative();
    if c.im == 0.0 {
        if negative(c.re) {
            format!("({})", fmt_real(c.re))
        } else {
            fmt_real(c.re)
        }
    } else if c.re == 0.0 && !negative(c.re) {
        if negative(c.im) {
            format!("({}i)", fmt_real(c.im))
        } else {
            format!("{}i", fmt_real(c.im))
        }
    } else {
        let sign = if negative(c.im) { '-' } else { '+' };
        format!("({}{}{}i)", fmt_real(c.re), sign, fmt_real(c.im.abs()))
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ScalarExpr::*;
        let wrap = |e: &ScalarExpr, paren: bool| {
            if paren {
                format!("({e})")
            } else {
                e.to_string()
            }
        };
        match self {
            Const(c) => write!(f, "{}", fmt_const(*c)),
            X => write!(f, "x"),
            Neg(a) => write!(f, "-{}", wrap(a, a.precedence() < 3)),
            Add(a, b) | Sub(a, b) => {
                let op = if matches!(self, Add(..)) { '+' } else { '-' };
                write!(f, "{} {} {}", wrap(a, a.precedence() < 1), op, wrap(b, b.precedence() <= 1))
            }
            Mul(a, b) | Div(a, b) => {
                let op = if matches!(self, Mul(..)) { '*' } else { '/' };
                write!(f, "{}{}{}", wrap(a, a.precedence() < 2), op, wrap(b, b.precedence() <= 2))
            }
            Pow(a, n) => {
                let base = wrap(a, a.precedence() < 5);
                if *n < 0 {
                    write!(f, "{base}^({n})")
                } else {
                    write!(f, "{base}^{n}")
                }
            }
            Abs(a) => write!(f, "abs({a})"),
            Exp(a) => write!(f, "exp({a})"),
            Ipow(a, nu) => write!(f, "ipow({a}, {})", fmt_real(*nu)),
        }
    }
}

/// One term `coefficient(x)·p^order` with the coefficient standing left of p.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: ScalarExpr,
    pub order: u8,
}

/// Differential operator `Σₖ fₖ(x)·p^k`, `p = -i d/dx`, `k ≤ 2`.
///
/// Terms are kept with distinct orders, highest order first. The coefficient is
/// applied after the momentum power (the ordering `f(x)·p`).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorExpr {
    terms: Vec<Term>,
}

impl OperatorExpr {
    /// Build from `(coefficient, order)` pairs; coefficients of equal order are summed
    /// in the given sequence.
    pub fn new(terms: Vec<(ScalarExpr, u8)>) -> Result<Self> {
        let mut merged: [Option<ScalarExpr>; 3] = [None, None, None];
        for (coefficient, order) in terms {
            if order > 2 {
                return Err(Error::InvalidArgument(format!(
                    "derivative order {order} exceeds 2"
                )));
            }
            let slot = &mut merged[order as usize];
            *slot = Some(match slot.take() {
                None => coefficient,
                Some(prev) => ScalarExpr::Add(Box::new(prev), Box::new(coefficient)),
            });
        }
        Ok(OperatorExpr {
            terms: merged
                .into_iter()
                .enumerate()
                .rev()
                .filter_map(|(order, c)| {
                    c.map(|coefficient| Term {
                        coefficient,
                        order: order as u8,
                    })
                })
                .collect(),
        })
    }

    /// Pure multiplication operator `f(x)`.
    pub fn multiplication(f: ScalarExpr) -> Self {
        OperatorExpr {
            terms: vec![Term {
                coefficient: f,
                order: 0,
            }],
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn coefficient(&self, order: u8) -> Option<&ScalarExpr> {
        self.terms.iter().find(|t| t.order == order).map(|t| &t.coefficient)
    }

    pub fn max_order(&self) -> u8 {
        self.terms.iter().map(|t| t.order).max().unwrap_or(0)
    }

    /// True when some coefficient blows up at the origin (the grid's excluded point).
    pub fn singular_at_origin(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.coefficient.origin_exponent() < -1e-6)
    }

    pub fn is_smooth(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient.is_smooth())
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, term) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let c = &term.coefficient;
            let needs_paren = c.precedence() < 2;
            let coeff = if needs_paren { format!("({c})") } else { c.to_string() };
            match term.order {
                0 => {
                    // left-nested sums re-merge into one coefficient, anything else is grouped
                    if k > 0 && needs_paren && !left_nested_sum(c) {
                        write!(f, "({c})")?
                    } else {
                        write!(f, "{c}")?
                    }
                }
                order => {
                    let p = if order == 1 { "p".to_string() } else { format!("p^{order}") };
                    if c.is_one() {
                        write!(f, "{p}")?
                    } else {
                        write!(f, "{coeff}*{p}")?
                    }
                }
            }
        }
        Ok(())
    }
}

/// A chain `a ± b ± c …` whose right operands are not themselves sums.
fn left_nested_sum(e: &ScalarExpr) -> bool {
    match e {
        ScalarExpr::Add(a, b) | ScalarExpr::Sub(a, b) => b.precedence() > 1 && (a.precedence() > 1 || left_nested_sum(a)),
        _ => true,
    }
}
