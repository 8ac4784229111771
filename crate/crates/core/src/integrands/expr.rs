//! Small expression language for integrands `f(x, A)`, scalar fields `g(x)`
//! and profiles `p(t)`.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | factor
//! factor := base ("^" ["-"] number)?
//! base   := number | "A" | "I" | "t" | "pi" | "x" "[" index "]"
//!         | func "(" expr ("," expr)* ")" | "(" expr ")" | "[" row ("," row)* "]"
//! row    := "[" expr ("," expr)* "]"
//! ```
//!
//! `x[i]` is 0-based. Matrix values may be added, subtracted, negated and
//! scaled; every other operation needs scalars. The whole expression must be
//! scalar.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vars {
    pub dim: usize,
    pub allow_a: bool,
    pub allow_x: bool,
    pub allow_t: bool,
}

impl Vars {
    pub fn integrand(dim: usize) -> Self {
        Self {
            dim,
            allow_a: true,
            allow_x: true,
            allow_t: false,
        }
    }

    pub fn field(dim: usize) -> Self {
        Self {
            dim,
            allow_a: false,
            allow_x: true,
            allow_t: false,
        }
    }

    pub fn profile() -> Self {
        Self {
            dim: 1,
            allow_a: false,
            allow_x: false,
            allow_t: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Norm,
    NormSq,
    Tr,
    Dot,
    Sqrt,
    Exp,
    Sin,
    Cos,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "norm" => Func::Norm,
            "normsq" => Func::NormSq,
            "tr" => Func::Tr,
            "dot" => Func::Dot,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Norm => "norm",
            Func::NormSq => "normsq",
            Func::Tr => "tr",
            Func::Dot => "dot",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    A,
    Identity,
    X(usize),
    T,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Vec<Expr>),
    Matrix(Vec<Vec<Expr>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Scalar,
    Matrix,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => write!(f, "pi"),
            Expr::A => write!(f, "A"),
            Expr::Identity => write!(f, "I"),
            Expr::X(i) => write!(f, "x[{i}]"),
            Expr::T => write!(f, "t"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Pow(e, p) => {
                if *p < 0.0 {
                    write!(f, "({e}^-{:?})", -p)
                } else {
                    write!(f, "({e}^{p:?})")
                }
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Matrix(rows) => {
                write!(f, "[")?;
                for (i, row) in rows.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "[")?;
                    for (j, e) in row.iter().enumerate() {
                        if j > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{e}")?;
                    }
                    write!(f, "]")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^(),[]".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            return Err(Error::Syntax {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    vars: Vars,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{c}`, found {}", describe(self.peek())))
        }
    }

    fn expr(&mut self) -> Result<(Expr, Ty)> {
        let (mut lhs, mut ty) = self.term()?;
        while let Tok::Sym(c @ ('+' | '-')) = *self.peek() {
            let pos = self.pos();
            self.bump();
            let (rhs, rty) = self.term()?;
            if ty != rty {
                return Err(Error::Syntax {
                    pos,
                    msg: "cannot add or subtract a scalar and a matrix".into(),
                });
            }
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
            ty = rty;
        }
        Ok((lhs, ty))
    }

    fn term(&mut self) -> Result<(Expr, Ty)> {
        let (mut lhs, mut ty) = self.unary()?;
        while let Tok::Sym(c @ ('*' | '/')) = *self.peek() {
            let pos = self.pos();
            self.bump();
            let (rhs, rty) = self.unary()?;
            let out_ty = match (c, ty, rty) {
                (_, Ty::Scalar, Ty::Scalar) => Ty::Scalar,
                ('*', Ty::Scalar, Ty::Matrix) | ('*', Ty::Matrix, Ty::Scalar) | ('/', Ty::Matrix, Ty::Scalar) => {
                    Ty::Matrix
                }
                _ => {
                    return Err(Error::Syntax {
                        pos,
                        msg: "matrix products are not supported; use dot(M, N)".into(),
                    })
                }
            };
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
            ty = out_ty;
        }
        Ok((lhs, ty))
    }

    fn unary(&mut self) -> Result<(Expr, Ty)> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            let (e, ty) = self.unary()?;
            return Ok((Expr::Neg(Box::new(e)), ty));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<(Expr, Ty)> {
        let (base, ty) = self.base()?;
        if *self.peek() == Tok::Sym('^') {
            let pos = self.pos();
            self.bump();
            let neg = if *self.peek() == Tok::Sym('-') {
                self.bump();
                true
            } else {
                false
            };
            let Tok::Num(p) = *self.peek() else {
                return self.err("exponent must be a number");
            };
            self.bump();
            if ty != Ty::Scalar {
                return Err(Error::Syntax {
                    pos,
                    msg: "cannot raise a matrix to a power".into(),
                });
            }
            return Ok((Expr::Pow(Box::new(base), if neg { -p } else { p }), Ty::Scalar));
        }
        Ok((base, ty))
    }

    fn base(&mut self) -> Result<(Expr, Ty)> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok((Expr::Num(v), Ty::Scalar)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Sym('[') => self.matrix(pos),
            Tok::Ident(name) => self.ident(name, pos),
            Tok::End => Err(Error::Syntax {
                pos,
                msg: "unexpected end of expression".into(),
            }),
            t => Err(Error::Syntax {
                pos,
                msg: format!("unexpected {}", describe(&t)),
            }),
        }
    }

    fn matrix(&mut self, pos: usize) -> Result<(Expr, Ty)> {
        let mut rows = Vec::new();
        loop {
            self.expect('[')?;
            let mut row = Vec::new();
            loop {
                let epos = self.pos();
                let (e, ty) = self.expr()?;
                if ty != Ty::Scalar {
                    return Err(Error::Syntax {
                        pos: epos,
                        msg: "matrix entries must be scalars".into(),
                    });
                }
                row.push(e);
                if *self.peek() == Tok::Sym(',') {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(']')?;
            rows.push(row);
            if *self.peek() == Tok::Sym(',') {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(']')?;
        let d = self.vars.dim;
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Syntax {
                pos,
                msg: format!("matrix literal must be {d}x{d}"),
            });
        }
        Ok((Expr::Matrix(rows), Ty::Matrix))
    }

    fn ident(&mut self, name: String, pos: usize) -> Result<(Expr, Ty)> {
        let unknown = || Error::UnknownIdentifier {
            pos,
            name: name.clone(),
        };
        match name.as_str() {
            "pi" => return Ok((Expr::Pi, Ty::Scalar)),
            "A" if self.vars.allow_a => return Ok((Expr::A, Ty::Matrix)),
            "I" if self.vars.allow_a => return Ok((Expr::Identity, Ty::Matrix)),
            "t" if self.vars.allow_t => return Ok((Expr::T, Ty::Scalar)),
            "x" if self.vars.allow_x => {
                self.expect('[')?;
                let ipos = self.pos();
                let Tok::Num(v) = self.bump() else {
                    return Err(Error::Syntax {
                        pos: ipos,
                        msg: "expected an index".into(),
                    });
                };
                if v.fract() != 0.0 || v < 0.0 || v as usize >= self.vars.dim {
                    return Err(Error::Syntax {
                        pos: ipos,
                        msg: format!("index must be an integer in 0..{}", self.vars.dim),
                    });
                }
                self.expect(']')?;
                return Ok((Expr::X(v as usize), Ty::Scalar));
            }
            _ => {}
        }
        let Some(func) = Func::from_name(&name) else {
            return Err(unknown());
        };
        if *self.peek() != Tok::Sym('(') {
            return self.err(format!("expected `(` after `{name}`"));
        }
        self.bump();
        let mut args = Vec::new();
        let mut tys = Vec::new();
        loop {
            let (e, ty) = self.expr()?;
            args.push(e);
            tys.push(ty);
            if *self.peek() == Tok::Sym(',') {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(')')?;
        let bad = |msg: &str| {
            Err(Error::Syntax {
                pos,
                msg: format!("`{name}` {msg}"),
            })
        };
        match func {
            Func::Norm | Func::NormSq | Func::Tr => {
                if tys != [Ty::Matrix] {
                    return bad("takes one matrix argument");
                }
            }
            Func::Dot => {
                if tys != [Ty::Matrix, Ty::Matrix] {
                    return bad("takes two matrix arguments");
                }
            }
            Func::Min | Func::Max => {
                if tys.len() < 2 || tys.iter().any(|t| *t != Ty::Scalar) {
                    return bad("takes two or more scalar arguments");
                }
            }
            _ => {
                if tys != [Ty::Scalar] {
                    return bad("takes one scalar argument");
                }
            }
        }
        Ok((Expr::Call(func, args), Ty::Scalar))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number `{v}`"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::End => "end of expression".into(),
    }
}

/// Parse a scalar expression over the given variables.
pub fn parse_expr(src: &str, vars: Vars) -> Result<Expr> {
    let toks = lex(src)?;
    let mut p = Parser { toks, at: 0, vars };
    let (e, ty) = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err(format!("unexpected {}", describe(p.peek())));
    }
    if ty != Ty::Scalar {
        return Err(Error::Syntax {
            pos: 0,
            msg: "expression must be scalar-valued".into(),
        });
    }
    Ok(e)
}

impl Expr {
    pub fn uses_x(&self) -> bool {
        match self {
            Expr::X(_) => true,
            Expr::Num(_) | Expr::Pi | Expr::A | Expr::Identity | Expr::T => false,
            Expr::Neg(e) | Expr::Pow(e, _) => e.uses_x(),
            Expr::Bin(_, a, b) => a.uses_x() || b.uses_x(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_x),
            Expr::Matrix(rows) => rows.iter().flatten().any(Expr::uses_x),
        }
    }
}

/// Scalar types the evaluator runs on: plain floats and forward-mode duals.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn val(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn abs(self) -> Self;
    fn powf(self, p: f64) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn val(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

/// Forward-mode dual number with up to six tangent directions (the
/// coordinates of `Sym(3)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub g: [f64; 6],
}

impl Dual {
    fn chain(self, v: f64, dv: f64) -> Self {
        let mut g = self.g;
        g.iter_mut().for_each(|x| *x *= dv);
        Dual { v, g }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        let mut g = self.g;
        g.iter_mut().zip(o.g).for_each(|(a, b)| *a += b);
        Dual { v: self.v + o.v, g }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        let mut g = self.g;
        g.iter_mut().zip(o.g).for_each(|(a, b)| *a -= b);
        Dual { v: self.v - o.v, g }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        let mut g = [0.0; 6];
        for k in 0..6 {
            g[k] = self.g[k] * o.v + self.v * o.g[k];
        }
        Dual { v: self.v * o.v, g }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        let mut g = [0.0; 6];
        for k in 0..6 {
            g[k] = (self.g[k] - self.v * inv * o.g[k]) * inv;
        }
        Dual { v: self.v * inv, g }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.chain(-self.v, -1.0)
    }
}

impl Scalar for Dual {
    fn cst(v: f64) -> Self {
        Dual { v, g: [0.0; 6] }
    }
    fn val(self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        // subgradient 0 at the kink
        self.chain(s, if s > 0.0 { 0.5 / s } else { 0.0 })
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn abs(self) -> Self {
        let s = if self.v > 0.0 {
            1.0
        } else if self.v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.v.abs(), s)
    }
    fn powf(self, p: f64) -> Self {
        let v = self.v.powf(p);
        let dv = if self.v == 0.0 && p < 1.0 { 0.0 } else { p * self.v.powf(p - 1.0) };
        self.chain(v, dv)
    }
}

/// Evaluation context. `a` is the full `d×d` matrix, row-major.
pub struct Ctx<'a, T> {
    pub dim: usize,
    pub a: &'a [T],
    pub x: &'a [f64],
    pub t: f64,
}

enum Val<T> {
    S(T),
    M(SmallVec<[T; 9]>),
}

impl<T: Scalar> Val<T> {
    fn s(self) -> T {
        match self {
            Val::S(v) => v,
            Val::M(_) => unreachable!("type-checked"),
        }
    }

    fn m(self) -> SmallVec<[T; 9]> {
        match self {
            Val::M(v) => v,
            Val::S(_) => unreachable!("type-checked"),
        }
    }
}

impl Expr {
    /// Evaluate a type-checked scalar expression.
    pub fn eval<T: Scalar>(&self, ctx: &Ctx<'_, T>) -> T {
        self.eval_val(ctx).s()
    }

    fn eval_val<T: Scalar>(&self, ctx: &Ctx<'_, T>) -> Val<T> {
        match self {
            Expr::Num(v) => Val::S(T::cst(*v)),
            Expr::Pi => Val::S(T::cst(std::f64::consts::PI)),
            Expr::A => Val::M(ctx.a.iter().copied().collect()),
            Expr::Identity => {
                let d = ctx.dim;
                Val::M((0..d * d).map(|k| T::cst(if k / d == k % d { 1.0 } else { 0.0 })).collect())
            }
            Expr::X(i) => Val::S(T::cst(ctx.x[*i])),
            Expr::T => Val::S(T::cst(ctx.t)),
            Expr::Neg(e) => match e.eval_val(ctx) {
                Val::S(v) => Val::S(-v),
                Val::M(m) => Val::M(m.into_iter().map(|v| -v).collect()),
            },
            Expr::Bin(op, a, b) => {
                let (va, vb) = (a.eval_val(ctx), b.eval_val(ctx));
                match (op, va, vb) {
                    (BinOp::Add, Val::S(x), Val::S(y)) => Val::S(x + y),
                    (BinOp::Sub, Val::S(x), Val::S(y)) => Val::S(x - y),
                    (BinOp::Mul, Val::S(x), Val::S(y)) => Val::S(x * y),
                    (BinOp::Div, Val::S(x), Val::S(y)) => Val::S(x / y),
                    (BinOp::Add, Val::M(x), Val::M(y)) => Val::M(x.into_iter().zip(y).map(|(p, q)| p + q).collect()),
                    (BinOp::Sub, Val::M(x), Val::M(y)) => Val::M(x.into_iter().zip(y).map(|(p, q)| p - q).collect()),
                    (BinOp::Mul, Val::S(s), Val::M(m)) | (BinOp::Mul, Val::M(m), Val::S(s)) => {
                        Val::M(m.into_iter().map(|p| p * s).collect())
                    }
                    (BinOp::Div, Val::M(m), Val::S(s)) => Val::M(m.into_iter().map(|p| p / s).collect()),
                    _ => unreachable!("type-checked"),
                }
            }
            Expr::Pow(e, p) => Val::S(e.eval_val(ctx).s().powf(*p)),
            Expr::Matrix(rows) => Val::M(rows.iter().flatten().map(|e| e.eval(ctx)).collect()),
            Expr::Call(func, args) => Val::S(match func {
                Func::Norm => frob_sq(&args[0].eval_val(ctx).m()).sqrt(),
                Func::NormSq => frob_sq(&args[0].eval_val(ctx).m()),
                Func::Tr => {
                    let m = args[0].eval_val(ctx).m();
                    (0..ctx.dim).fold(T::cst(0.0), |acc, i| acc + m[i * ctx.dim + i])
                }
                Func::Dot => {
                    let m = args[0].eval_val(ctx).m();
                    let n = args[1].eval_val(ctx).m();
                    m.into_iter().zip(n).fold(T::cst(0.0), |acc, (p, q)| acc + p * q)
                }
                Func::Sqrt => args[0].eval(ctx).sqrt(),
                Func::Exp => args[0].eval(ctx).exp(),
                Func::Sin => args[0].eval(ctx).sin(),
                Func::Cos => args[0].eval(ctx).cos(),
                Func::Abs => args[0].eval(ctx).abs(),
                Func::Min | Func::Max => {
                    let mut best = args[0].eval(ctx);
                    for a in &args[1..] {
                        let v = a.eval(ctx);
                        let better = if *func == Func::Min { v.val() < best.val() } else { v.val() > best.val() };
                        if better {
                            best = v;
                        }
                    }
                    best
                }
            }),
        }
    }
}

fn frob_sq<T: Scalar>(m: &[T]) -> T {
    m.iter().fold(T::cst(0.0), |acc, &v| acc + v * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_a(src: &str, a: &[f64]) -> f64 {
        let e = parse_expr(src, Vars::integrand(2)).unwrap();
        e.eval(&Ctx {
            dim: 2,
            a,
            x: &[0.0, 0.0],
            t: 0.0,
        })
    }

    #[test]
    fn basic_values() {
        let id = [1.0, 0.0, 0.0, 1.0];
        assert!((eval_a("norm(A)", &id) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(eval_a("sqrt(1 + normsq(A))", &[0.0; 4]), 1.0);
        assert_eq!(eval_a("2^3 - -1", &id), 9.0);
        assert_eq!(eval_a("-norm(A - I)", &id), 0.0);
        assert_eq!(eval_a("dot(A, [[1, 2], [2, 0]])", &[1.0, 1.0, 1.0, 1.0]), 5.0);
        assert_eq!(eval_a("max(1, 3, 2) + min(tr(A), 0)", &id), 3.0);
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_expr("norm(A) @ x", Vars::integrand(2)).unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                pos: 8,
                msg: "unexpected character `@`".into()
            }
        );
    }

    #[test]
    fn unknown_identifier() {
        let err = parse_expr("norm(B)", Vars::integrand(2)).unwrap_err();
        assert!(matches!(err, Error::UnknownIdentifier { pos: 5, .. }));
        assert!(matches!(parse_expr("t", Vars::integrand(2)), Err(Error::UnknownIdentifier { .. })));
    }

    #[test]
    fn type_errors() {
        assert!(parse_expr("A", Vars::integrand(2)).is_err());
        assert!(parse_expr("A + 1", Vars::integrand(2)).is_err());
        assert!(parse_expr("sqrt(A)", Vars::integrand(2)).is_err());
        assert!(parse_expr("x[2]", Vars::integrand(2)).is_err());
        assert!(parse_expr("norm([[1]])", Vars::integrand(2)).is_err());
    }

    #[test]
    fn print_is_fixed_point() {
        for src in [
            "sqrt(1 + normsq(A))",
            "-norm(A) + 2*x[1]^-0.5",
            "max(abs(tr(A)), 0.25) / (1e-3 + exp(sin(x[0])))",
            "norm(A + [[0, 1], [1, 0]]) + norm(A - 2*[[0, 1], [1, 0]]) - 2*norm(A)",
        ] {
            let p1 = parse_expr(src, Vars::integrand(2)).unwrap().to_string();
            let p2 = parse_expr(&p1, Vars::integrand(2)).unwrap().to_string();
            assert_eq!(p1, p2);
        }
    }

    #[test]
    fn dual_gradient_matches_difference() {
        let e = parse_expr("sqrt(1 + normsq(A)) + sin(tr(A))", Vars::integrand(2)).unwrap();
        let a = [0.3, -0.2, -0.2, 0.7];
        let mut da = [Dual::cst(0.0); 4];
        for (i, v) in a.iter().enumerate() {
            da[i] = Dual::cst(*v);
        }
        da[0].g[0] = 1.0;
        let d = e.eval(&Ctx {
            dim: 2,
            a: &da,
            x: &[0.0, 0.0],
            t: 0.0,
        });
        let f = |a00: f64| {
            e.eval(&Ctx {
                dim: 2,
                a: &[a00, a[1], a[2], a[3]],
                x: &[0.0, 0.0],
                t: 0.0,
            })
        };
        let fd = (f(a[0] + 1e-6) - f(a[0] - 1e-6)) / 2e-6;
        assert!((d.g[0] - fd).abs() < 1e-8);
    }
}
