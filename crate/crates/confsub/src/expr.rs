//! Arithmetic expressions for chart and immersion components.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?          right associative
//! atom  := number | ident | func '(' expr ')' | '(' expr ')'
//! func  := sin | cos | tan | exp | log | sqrt | sinh | cosh | tanh
//! ```
//!
//! The identifier `pi` is read as the numeric constant. `log` is the natural
//! logarithm. Domain errors (e.g. `log` of a negative number) appear at
//! evaluation time as non-finite values.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == s)
    }

    pub fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

pub fn num(x: f64) -> Expr {
    Expr::Num(x)
}

pub fn var(name: &str) -> Expr {
    Expr::Var(name.to_string())
}

fn as_int(x: f64) -> Option<i32> {
    if num_traits::Float::fract(x) == 0.0 && num_traits::Float::abs(x) < 1.0e6 {
        Some(x as i32)
    } else {
        None
    }
}

// Smart constructors. They fold numeric subtrees and the neutral elements
// 0 and 1 and nothing else.
impl Expr {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(x) => Some(*x),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(x) => Expr::Num(-x),
            Expr::Neg(inner) => *inner,
            a => Expr::Neg(Box::new(a)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x + y),
            (Some(x), None) if x == 0.0 => b,
            (None, Some(y)) if y == 0.0 => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x - y),
            (Some(x), None) if x == 0.0 => Expr::neg(b),
            (None, Some(y)) if y == 0.0 => a,
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Num(0.0),
            (Some(x), None) if x == 1.0 => b,
            (None, Some(y)) if y == 1.0 => a,
            (Some(x), None) if x == -1.0 => Expr::neg(b),
            (None, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(x / y),
            (Some(x), None) if x == 0.0 => Expr::Num(0.0),
            (None, Some(y)) if y == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => Expr::Num(match as_int(y) {
                Some(n) => num_traits::Float::powi(x, n),
                None => num_traits::Float::powf(x, y),
            }),
            (_, Some(y)) if y == 0.0 => Expr::Num(1.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Pow(Box::new(a), Box::new(b)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        match a.as_num() {
            Some(x) => Expr::Num(f.apply(x)),
            None => Expr::Call(f, Box::new(a)),
        }
    }

    /// Evaluates with a name lookup. Unbound variables are an error.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        let v = self.eval_inner(env)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval(format!("non-finite value {v} from `{self}`")))
        }
    }

    fn eval_inner(&self, env: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        Ok(match self {
            Expr::Num(x) => *x,
            Expr::Var(v) => env(v).ok_or_else(|| Error::Eval(format!("unbound variable `{v}`")))?,
            Expr::Neg(a) => -a.eval_inner(env)?,
            Expr::Add(a, b) => a.eval_inner(env)? + b.eval_inner(env)?,
            Expr::Sub(a, b) => a.eval_inner(env)? - b.eval_inner(env)?,
            Expr::Mul(a, b) => a.eval_inner(env)? * b.eval_inner(env)?,
            Expr::Div(a, b) => a.eval_inner(env)? / b.eval_inner(env)?,
            Expr::Pow(a, b) => {
                let base = a.eval_inner(env)?;
                let e = b.eval_inner(env)?;
                match as_int(e) {
                    Some(n) => num_traits::Float::powi(base, n),
                    None => num_traits::Float::powf(base, e),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval_inner(env)?),
        })
    }

    /// Evaluates with variables bound positionally to `names`.
    pub fn eval_at(&self, names: &[&str], values: &[f64]) -> Result<f64> {
        self.eval(&|v| names.iter().position(|n| *n == v).map(|i| values[i]))
    }

    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => out.push(v.clone()),
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    /// Replaces variables by expressions, folding constants on the way up.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Num(x) => Expr::Num(*x),
            Expr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::neg(a.substitute(map)),
            Expr::Add(a, b) => Expr::add(a.substitute(map), b.substitute(map)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(map), b.substitute(map)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(map), b.substitute(map)),
            Expr::Div(a, b) => Expr::div(a.substitute(map), b.substitute(map)),
            Expr::Pow(a, b) => Expr::pow(a.substitute(map), b.substitute(map)),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(map)),
        }
    }

    /// Rebuilds the tree through the folding constructors.
    pub fn simplify(&self) -> Expr {
        self.substitute(&BTreeMap::new())
    }

    /// Exact symbolic derivative with respect to `v`.
    pub fn differentiate(&self, v: &str) -> Expr {
        match self {
            Expr::Num(_) => num(0.0),
            Expr::Var(w) => num(if w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.differentiate(v)),
            Expr::Add(a, b) => Expr::add(a.differentiate(v), b.differentiate(v)),
            Expr::Sub(a, b) => Expr::sub(a.differentiate(v), b.differentiate(v)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.differentiate(v), (**b).clone()),
                Expr::mul((**a).clone(), b.differentiate(v)),
            ),
            Expr::Div(a, b) => {
                // (a' b - a b') / b^2
                let top = Expr::sub(
                    Expr::mul(a.differentiate(v), (**b).clone()),
                    Expr::mul((**a).clone(), b.differentiate(v)),
                );
                Expr::div(top, Expr::pow((**b).clone(), num(2.0)))
            }
            Expr::Pow(a, b) => {
                let da = a.differentiate(v);
                let db = b.differentiate(v);
                if db.is_zero() {
                    // b a^(b-1) a'
                    let e = Expr::sub((**b).clone(), num(1.0));
                    Expr::mul(Expr::mul((**b).clone(), Expr::pow((**a).clone(), e)), da)
                } else {
                    // a^b (b' log a + b a'/a)
                    let inner = Expr::add(
                        Expr::mul(db, Expr::call(Func::Log, (**a).clone())),
                        Expr::div(Expr::mul((**b).clone(), da), (**a).clone()),
                    );
                    Expr::mul(self.clone(), inner)
                }
            }
            Expr::Call(f, a) => {
                let da = a.differentiate(v);
                if da.is_zero() {
                    return num(0.0);
                }
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, a),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, a)),
                    Func::Tan => Expr::div(num(1.0), Expr::pow(Expr::call(Func::Cos, a), num(2.0))),
                    Func::Exp => Expr::call(Func::Exp, a),
                    Func::Log => Expr::div(num(1.0), a),
                    Func::Sqrt => Expr::div(num(0.5), Expr::call(Func::Sqrt, a)),
                    Func::Sinh => Expr::call(Func::Cosh, a),
                    Func::Cosh => Expr::call(Func::Sinh, a),
                    Func::Tanh => Expr::div(num(1.0), Expr::pow(Expr::call(Func::Cosh, a), num(2.0))),
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// Compiles to a postfix program with variables bound to `names`.
    pub fn compile(&self, names: &[&str]) -> Result<Program> {
        let mut ops = Vec::new();
        self.emit(names, &mut ops)?;
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => depth += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => depth -= 1,
                _ => {}
            }
            max_depth = max_depth.max(depth);
        }
        Ok(Program { ops, max_depth })
    }

    fn emit(&self, names: &[&str], ops: &mut Vec<Op>) -> Result<()> {
        match self {
            Expr::Num(x) => ops.push(Op::Const(*x)),
            Expr::Var(v) => {
                let i = names
                    .iter()
                    .position(|n| n == v)
                    .ok_or_else(|| Error::Eval(format!("unbound variable `{v}`")))?;
                ops.push(Op::Var(i));
            }
            Expr::Neg(a) => {
                a.emit(names, ops)?;
                ops.push(Op::Neg);
            }
            Expr::Call(f, a) => {
                a.emit(names, ops)?;
                ops.push(Op::Call(*f));
            }
            Expr::Pow(a, b) => {
                a.emit(names, ops)?;
                match b.as_num().and_then(as_int) {
                    Some(n) => ops.push(Op::PowI(n)),
                    None => {
                        b.emit(names, ops)?;
                        ops.push(Op::Pow);
                    }
                }
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.emit(names, ops)?;
                b.emit(names, ops)?;
                ops.push(match self {
                    Expr::Add(..) => Op::Add,
                    Expr::Sub(..) => Op::Sub,
                    Expr::Mul(..) => Op::Mul,
                    _ => Op::Div,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) if *x < 0.0 || x.is_sign_negative() => write!(f, "(-{})", -x),
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    PowI(i32),
    Pow,
    Call(Func),
}

/// A compiled expression: postfix operations over positional variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
    max_depth: usize,
}

impl Program {
    pub fn constant(&self) -> Option<f64> {
        match self.ops.as_slice() {
            [Op::Const(x)] => Some(*x),
            _ => None,
        }
    }

    pub fn eval<S: Scalar>(&self, vars: &[S]) -> S {
        let mut stack: Vec<S> = Vec::with_capacity(self.max_depth);
        for op in &self.ops {
            match *op {
                Op::Const(x) => stack.push(S::from_f64(x)),
                Op::Var(i) => stack.push(vars[i]),
                Op::Neg => {
                    let a = stack.pop().unwrap();
                    stack.push(-a);
                }
                Op::PowI(n) => {
                    let a = stack.pop().unwrap();
                    stack.push(a.powi(n));
                }
                Op::Call(func) => {
                    let a = stack.pop().unwrap();
                    stack.push(func.apply(a));
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(match op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => a / b,
                        _ => a.powf(b),
                    });
                }
            }
        }
        stack.pop().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let s = &text[start..i];
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                offset: start,
                message: format!("malformed number `{s}`"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            return Err(Error::Parse { offset: i, message: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn peek_sym(&self, c: char) -> bool {
        matches!(self.toks.get(self.pos), Some((Tok::Sym(s), _)) if *s == c)
    }

    fn err<T>(&self, message: String) -> Result<T> {
        Err(Error::Parse { offset: self.offset(), message })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.peek_sym('+') {
                self.pos += 1;
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.peek_sym('-') {
                self.pos += 1;
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.peek_sym('*') {
                self.pos += 1;
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.peek_sym('/') {
                self.pos += 1;
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_sym('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_sym('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn expect_close(&mut self) -> Result<()> {
        if self.peek_sym(')') {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected `)`".to_string())
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some((tok, off)) = self.toks.get(self.pos).cloned() else {
            return self.err("unexpected end of input".to_string());
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if self.peek_sym('(') {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(Error::Parse { offset: off, message: format!("unknown function `{name}`") });
                    };
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_close()?;
                    Ok(Expr::Call(f, Box::new(arg)))
                } else if name == "pi" {
                    Ok(Expr::Num(core::f64::consts::PI))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            Tok::Sym(c) => self.err(format!("unexpected `{c}`")),
        }
    }
}

pub fn parse(text: &str) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Parse { offset: 0, message: "empty expression".to_string() });
    }
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return p.err("trailing input".to_string());
    }
    Ok(e)
}
