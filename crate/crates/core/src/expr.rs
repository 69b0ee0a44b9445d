//! Scalar expressions over chart variables.
//!
//! An [`Expr`] is an immutable, reference-counted AST. The grammar accepted by
//! [`parse`] is
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = ("+" | "-") unary | power ;
//! power    = atom [ "^" exponent ] ;
//! exponent = [ "+" | "-" ] integer | "(" [ "+" | "-" ] integer ")" ;
//! atom     = number | variable | function "(" expr ")" | "(" expr ")" ;
//! function = "sin" | "cos" | "exp" | "log" | "sqrt" ;
//! number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! variable = letter { letter | digit | "_" } ;
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

/// The closed set of unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> Result<f64, DomainErrorKind> {
        match self {
            Func::Sin => Ok(libm::sin(v)),
            Func::Cos => Ok(libm::cos(v)),
            Func::Exp => Ok(libm::exp(v)),
            Func::Log if v > 0.0 => Ok(libm::log(v)),
            Func::Log => Err(DomainErrorKind::LogNonPositive),
            Func::Sqrt if v >= 0.0 => Ok(libm::sqrt(v)),
            Func::Sqrt => Err(DomainErrorKind::SqrtNegative),
        }
    }
}

/// AST node. Sums and products are n-ary and kept flat.
#[derive(Debug, Clone)]
pub enum Node {
    Const(f64),
    Var { index: usize, name: Arc<str> },
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quotient(Expr, Expr),
    Power(Expr, i32),
    Call(Func, Expr),
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    LogNonPositive,
    SqrtNegative,
    NonFinite,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::LogNonPositive => "log of a non-positive value",
            DomainErrorKind::SqrtNegative => "sqrt of a negative value",
            DomainErrorKind::NonFinite => "non-finite value",
        })
    }
}

/// Evaluation failure, carrying the subexpression where it happened.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{kind} in `{expr}`")]
pub struct EvalError {
    pub kind: DomainErrorKind,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. } | ParseError::UnknownIdentifier { position, .. } => {
                *position
            }
        }
    }
}

impl Expr {
    fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Expr {
        Expr::new(Node::Const(c))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(index: usize, name: &str) -> Expr {
        Expr::new(Node::Var { index, name: Arc::from(name) })
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// Flattened sum; constants are folded into a single trailing term.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut out = Vec::new();
        let mut constant = 0.0;
        for t in terms {
            match t.node() {
                Node::Const(c) => constant += c,
                Node::Sum(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Const(c) => constant += c,
                            _ => out.push(u.clone()),
                        }
                    }
                }
                _ => out.push(t),
            }
        }
        if constant != 0.0 {
            out.push(Expr::constant(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::new(Node::Sum(out)),
        }
    }

    /// Flattened product; constants are folded into a single leading factor.
    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut out = Vec::new();
        let mut constant = 1.0;
        for f in factors {
            match f.node() {
                Node::Const(c) => constant *= c,
                Node::Product(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Const(c) => constant *= c,
                            _ => out.push(u.clone()),
                        }
                    }
                }
                _ => out.push(f),
            }
        }
        if constant == 0.0 {
            return Expr::zero();
        }
        if out.is_empty() {
            return Expr::constant(constant);
        }
        if constant != 1.0 {
            out.insert(0, Expr::constant(constant));
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Expr::new(Node::Product(out))
        }
    }

    pub fn quotient(num: Expr, den: Expr) -> Expr {
        if num.is_zero() {
            return Expr::zero();
        }
        match (num.as_const(), den.as_const()) {
            (_, Some(d)) if d == 1.0 => num,
            (_, Some(d)) if d == -1.0 => -num,
            (Some(a), Some(b)) if b != 0.0 && (a / b).is_finite() => Expr::constant(a / b),
            _ => Expr::new(Node::Quotient(num, den)),
        }
    }

    pub fn powi(base: Expr, k: i32) -> Expr {
        if k == 0 {
            return Expr::one();
        }
        if k == 1 {
            return base;
        }
        if let Some(c) = base.as_const() {
            let v = libm::pow(c, k as f64);
            if v.is_finite() && !(c == 0.0 && k < 0) {
                return Expr::constant(v);
            }
        }
        if let Node::Power(inner, j) = base.node() {
            if let Some(jk) = j.checked_mul(k) {
                return Expr::powi(inner.clone(), jk);
            }
        }
        Expr::new(Node::Power(base, k))
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        if let Some(c) = arg.as_const() {
            if let Ok(v) = func.apply(c) {
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        Expr::new(Node::Call(func, arg))
    }

    pub fn sin(&self) -> Expr {
        Expr::call(Func::Sin, self.clone())
    }
    pub fn cos(&self) -> Expr {
        Expr::call(Func::Cos, self.clone())
    }
    pub fn exp(&self) -> Expr {
        Expr::call(Func::Exp, self.clone())
    }
    pub fn ln(&self) -> Expr {
        Expr::call(Func::Log, self.clone())
    }
    pub fn sqrt(&self) -> Expr {
        Expr::call(Func::Sqrt, self.clone())
    }
    pub fn pow(&self, k: i32) -> Expr {
        Expr::powi(self.clone(), k)
    }

    /// Evaluates at `point`, indexed by variable index.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let fail = |kind| EvalError { kind, expr: self.clone() };
        let v = match self.node() {
            Node::Const(c) => *c,
            Node::Var { index, .. } => match point.get(*index) {
                Some(v) => *v,
                None => return Err(fail(DomainErrorKind::NonFinite)),
            },
            Node::Sum(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval(point)?;
                }
                acc
            }
            Node::Product(factors) => {
                let mut acc = 1.0;
                for f in factors {
                    acc *= f.eval(point)?;
                }
                acc
            }
            Node::Quotient(a, b) => {
                let den = b.eval(point)?;
                let num = a.eval(point)?;
                if den == 0.0 {
                    return Err(fail(DomainErrorKind::DivisionByZero));
                }
                num / den
            }
            Node::Power(b, k) => {
                let base = b.eval(point)?;
                if base == 0.0 && *k < 0 {
                    return Err(fail(DomainErrorKind::DivisionByZero));
                }
                powi(base, *k)
            }
            Node::Call(func, a) => func.apply(a.eval(point)?).map_err(fail)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(DomainErrorKind::NonFinite))
        }
    }

    /// Exact structural derivative with respect to the variable with `index`.
    pub fn derivative(&self, index: usize) -> Expr {
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var { index: i, .. } => {
                if *i == index {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sum(terms) => Expr::sum(terms.iter().map(|t| t.derivative(index))),
            Node::Product(factors) => {
                let mut terms = Vec::new();
                for (k, f) in factors.iter().enumerate() {
                    let df = f.derivative(index);
                    if df.is_zero() {
                        continue;
                    }
                    let mut prod = Vec::with_capacity(factors.len());
                    for (j, g) in factors.iter().enumerate() {
                        prod.push(if j == k { df.clone() } else { g.clone() });
                    }
                    terms.push(Expr::product(prod));
                }
                Expr::sum(terms)
            }
            Node::Quotient(a, b) => {
                let da = a.derivative(index);
                let db = b.derivative(index);
                let first = Expr::quotient(da, b.clone());
                if db.is_zero() {
                    return first;
                }
                let second = Expr::quotient(Expr::product([a.clone(), db]), b.pow(2));
                first - second
            }
            Node::Power(b, k) => {
                let db = b.derivative(index);
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::product([Expr::constant(*k as f64), b.pow(k - 1), db])
            }
            Node::Call(func, a) => {
                let da = a.derivative(index);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match func {
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Exp => self.clone(),
                    Func::Log => return Expr::quotient(da, a.clone()),
                    Func::Sqrt => {
                        return Expr::quotient(da, Expr::product([Expr::constant(2.0), self.clone()]))
                    }
                };
                Expr::product([outer, da])
            }
        }
    }

    /// Rewrites every variable through `map`, which returns the new index and name.
    pub fn remap_vars(&self, map: &dyn Fn(usize) -> (usize, Arc<str>)) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var { index, .. } => {
                let (i, name) = map(*index);
                Expr::new(Node::Var { index: i, name })
            }
            Node::Sum(t) => Expr::sum(t.iter().map(|e| e.remap_vars(map))),
            Node::Product(t) => Expr::product(t.iter().map(|e| e.remap_vars(map))),
            Node::Quotient(a, b) => Expr::quotient(a.remap_vars(map), b.remap_vars(map)),
            Node::Power(b, k) => Expr::powi(b.remap_vars(map), *k),
            Node::Call(f, a) => Expr::call(*f, a.remap_vars(map)),
        }
    }

    /// Indices of the variables that occur in the expression, sorted.
    pub fn variables(&self) -> Vec<usize> {
        fn walk(e: &Expr, out: &mut Vec<usize>) {
            match e.node() {
                Node::Const(_) => {}
                Node::Var { index, .. } => out.push(*index),
                Node::Sum(t) | Node::Product(t) => t.iter().for_each(|u| walk(u, out)),
                Node::Quotient(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Node::Power(b, _) | Node::Call(_, b) => walk(b, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var { .. } => 1,
            Node::Sum(t) | Node::Product(t) => 1 + t.iter().map(Expr::size).sum::<usize>(),
            Node::Quotient(a, b) => 1 + a.size() + b.size(),
            Node::Power(b, _) | Node::Call(_, b) => 1 + b.size(),
        }
    }
}

fn powi(base: f64, k: i32) -> f64 {
    let mut result = 1.0;
    let mut b = base;
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result *= b;
        }
        b *= b;
        e >>= 1;
    }
    if k < 0 {
        1.0 / result
    } else {
        result
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Var { index: a, .. }, Node::Var { index: b, .. }) => a == b,
            (Node::Sum(a), Node::Sum(b)) | (Node::Product(a), Node::Product(b)) => a == b,
            (Node::Quotient(a1, b1), Node::Quotient(a2, b2)) => a1 == a2 && b1 == b2,
            (Node::Power(a, j), Node::Power(b, k)) => j == k && a == b,
            (Node::Call(f, a), Node::Call(g, b)) => f == g && a == b,
            _ => false,
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{:?})", -c)
    } else {
        write!(f, "{:?}", c)
    }
}

fn is_atomic(e: &Expr) -> bool {
    match e.node() {
        Node::Const(c) => *c >= 0.0,
        Node::Var { .. } | Node::Call(..) => true,
        _ => false,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if is_atomic(e) {
        write!(f, "{}", e)
    } else {
        write!(f, "({})", e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write_const(f, *c),
            Node::Var { name, .. } => f.write_str(name),
            Node::Sum(terms) => {
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{}", t)?;
                }
                Ok(())
            }
            Node::Product(factors) => {
                for (i, t) in factors.iter().enumerate() {
                    if i > 0 {
                        f.write_str("*")?;
                    }
                    match t.node() {
                        Node::Sum(_) | Node::Quotient(..) => write!(f, "({})", t)?,
                        _ => write!(f, "{}", t)?,
                    }
                }
                Ok(())
            }
            Node::Quotient(a, b) => {
                write_wrapped(f, a)?;
                f.write_str("/")?;
                write_wrapped(f, b)
            }
            Node::Power(b, k) => {
                write_wrapped(f, b)?;
                if *k < 0 {
                    write!(f, "^({})", k)
                } else {
                    write!(f, "^{}", k)
                }
            }
            Node::Call(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product([Expr::constant(-1.0), self])
    }
}
impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $build:expr) => {
        impl $trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $build(self, rhs)
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $build(self, rhs.clone())
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $build(self.clone(), rhs)
            }
        }
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $build(self.clone(), rhs.clone())
            }
        }
        impl $trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $build(self, Expr::constant(rhs))
            }
        }
        impl $trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $build(self.clone(), Expr::constant(rhs))
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a, b]));
binop!(Sub, sub, |a, b: Expr| Expr::sum([a, -b]));
binop!(Mul, mul, |a, b| Expr::product([a, b]));
binop!(Div, div, Expr::quotient);

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        Expr::constant(c)
    }
}

/// Parses `text` over the given variable names (variable `i` gets index `i`).
pub fn parse(text: &str, variables: &[&str]) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, variables };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.syntax("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    variables: &'a [&'a str],
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax { position: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = alloc::vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(-self.term()?);
            } else {
                return Ok(Expr::sum(terms));
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                acc = Expr::product([acc, rhs]);
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                acc = Expr::quotient(acc, rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            Ok(-self.unary()?)
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let paren = self.eat(b'(');
        let negative = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("integer exponent expected"));
        }
        if matches!(self.src.get(self.pos), Some(b'.') | Some(b'e') | Some(b'E')) {
            self.pos = start;
            return Err(self.syntax("exponent must be an integer"));
        }
        let digits = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let mut k: i32 = digits.parse().map_err(|_| ParseError::Syntax {
            position: start,
            message: "exponent out of range".to_string(),
        })?;
        if negative {
            k = -k;
        }
        if paren && !self.eat(b')') {
            return Err(self.syntax("expected `)` after exponent"));
        }
        if self.peek() == Some(b'^') {
            return Err(self.syntax("chained exponents need parentheses"));
        }
        Ok(Expr::powi(base, k))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.syntax("malformed exponent in number"));
            }
        }
        if matches!(self.src.get(self.pos), Some(c) if c.is_ascii_alphanumeric() || *c == b'_') {
            return Err(self.syntax("missing operator between number and identifier"));
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
            position: start,
            message: format!("malformed number `{}`", text),
        })?;
        if !v.is_finite() {
            return Err(ParseError::Syntax { position: start, message: "number out of range".to_string() });
        }
        Ok(Expr::constant(v))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if self.peek() == Some(b'(') {
            let Some(func) = Func::from_name(name) else {
                return Err(ParseError::UnknownIdentifier { name: name.to_string(), position: start });
            };
            self.pos += 1;
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.syntax("expected `)` after function argument"));
            }
            return Ok(Expr::call(func, arg));
        }
        match self.variables.iter().position(|v| *v == name) {
            Some(i) => Ok(Expr::var(i, name)),
            None => Err(ParseError::UnknownIdentifier { name: name.to_string(), position: start }),
        }
    }
}

/// Central finite difference of `e` in variable `index` with step `h`.
pub fn central_difference(e: &Expr, point: &[f64], index: usize, h: f64) -> Result<f64, EvalError> {
    let mut p = point.to_vec();
    p[index] = point[index] + h;
    let fp = e.eval(&p)?;
    p[index] = point[index] - h;
    let fm = e.eval(&p)?;
    Ok((fp - fm) / (2.0 * h))
}

/// Symbolic determinant by cofactor expansion along the first row.
pub fn determinant(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        _ => {
            let mut terms = Vec::new();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, e)| e.clone()).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                terms.push(Expr::product([Expr::constant(sign), m[0][j].clone(), determinant(&minor)]));
            }
            Expr::sum(terms)
        }
    }
}

/// Symbolic inverse through the adjugate; `None` if the determinant folds to zero.
pub fn inverse(m: &[Vec<Expr>]) -> Option<Vec<Vec<Expr>>> {
    let n = m.len();
    let det = determinant(m);
    if det.is_zero() {
        return None;
    }
    if n == 1 {
        return Some(alloc::vec![alloc::vec![Expr::quotient(Expr::one(), det)]]);
    }
    let mut inv = alloc::vec![alloc::vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<Expr>> = m
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != j)
                .map(|(_, row)| row.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, e)| e.clone()).collect())
                .collect();
            let cof = determinant(&minor);
            let signed = if (i + j) % 2 == 0 { cof } else { -cof };
            inv[i][j] = Expr::quotient(signed, det.clone());
        }
    }
    Some(inv)
}
