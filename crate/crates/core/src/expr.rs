//! A small expression language for definable functions, with first-order
//! jet evaluation (value + gradient) by forward-mode differentiation.
//!
//! Grammar: constants, variables, `+ - * / ^` (with `^` right-associative
//! and binding tighter than unary minus), and the functions `exp`, `ln`,
//! `sqrt`, `abs`, `sin`. Unknown identifiers are variables. `a ^ b` with a
//! non-constant-integer exponent means `exp(b·ln a)` and requires `a > 0`;
//! constant integer exponents use exact integer powers and allow any base.

use crate::numscale::{NumError, Scalar};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error at offset {offset} ({op}): {source}")]
    Domain {
        offset: usize,
        op: &'static str,
        source: NumError,
    },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Const(f64),
    Var(usize),
    Unary(UnOp, Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    /// Byte offset of the token that introduced the node, for error reports.
    pub offset: usize,
}

// structural equality only; offsets are diagnostics
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// Parsed expression plus its free variables in sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
}

/// Value and gradient of an expression at a point; gradient entries are
/// indexed like [`Expr::free_vars`].
#[derive(Debug, Clone)]
pub struct Jet<S> {
    pub value: S,
    pub gradient: Vec<S>,
}

// ---------------------------------------------------------------------------
// Lexer / parser
// ---------------------------------------------------------------------------

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
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<Option<(Tok, usize)>, ParseError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                let mut seen_dot = false;
                let mut seen_exp = false;
                while end < self.src.len() {
                    let ch = self.src[end];
                    match ch {
                        b'0'..=b'9' => end += 1,
                        b'.' if !seen_dot && !seen_exp => {
                            seen_dot = true;
                            end += 1;
                        }
                        b'e' | b'E' if !seen_exp && end > self.pos => {
                            // exponent only if followed by digit or sign+digit
                            let mut peek = end + 1;
                            if peek < self.src.len() && (self.src[peek] == b'+' || self.src[peek] == b'-') {
                                peek += 1;
                            }
                            if peek < self.src.len() && self.src[peek].is_ascii_digit() {
                                seen_exp = true;
                                end = peek + 1;
                            } else {
                                break;
                            }
                        }
                        _ => break,
                    }
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let v: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    message: format!("invalid number `{text}`"),
                })?;
                self.pos = end;
                return Ok(Some((Tok::Num(v), start)));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap().to_string();
                self.pos = end;
                return Ok(Some((Tok::Ident(text), start)));
            }
            _ => {
                return Err(ParseError {
                    offset: start,
                    message: format!("unexpected character `{}`", c as char),
                })
            }
        };
        self.pos += 1;
        Ok(Some((tok, start)))
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    end_offset: usize,
    var_names: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.idx)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.1).unwrap_or(self.end_offset)
    }

    fn var_index(&mut self, name: &str) -> usize {
        if let Some(i) = self.var_names.iter().position(|v| v == name) {
            i
        } else {
            self.var_names.push(name.to_string());
            self.var_names.len() - 1
        }
    }

    // additive level
    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some((tok, off)) = self.peek().cloned() {
            let op = match tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node { kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)), offset: off };
        }
        Ok(lhs)
    }

    // multiplicative level
    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((tok, off)) = self.peek().cloned() {
            let op = match tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node { kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)), offset: off };
        }
        Ok(lhs)
    }

    // unary minus binds looser than ^
    fn unary(&mut self) -> Result<Node, ParseError> {
        if let Some((Tok::Minus, off)) = self.peek().cloned() {
            self.bump();
            let inner = self.unary()?;
            return Ok(Node { kind: NodeKind::Unary(UnOp::Neg, Box::new(inner)), offset: off });
        }
        self.power()
    }

    // right-associative ^
    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if let Some((Tok::Caret, off)) = self.peek().cloned() {
            self.bump();
            // exponent may itself carry unary minus: x^-2
            let exponent = self.unary_for_exponent()?;
            return Ok(Node {
                kind: NodeKind::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)),
                offset: off,
            });
        }
        Ok(base)
    }

    fn unary_for_exponent(&mut self) -> Result<Node, ParseError> {
        if let Some((Tok::Minus, off)) = self.peek().cloned() {
            self.bump();
            let inner = self.unary_for_exponent()?;
            return Ok(Node { kind: NodeKind::Unary(UnOp::Neg, Box::new(inner)), offset: off });
        }
        self.power()
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let at = self.here();
        match self.bump() {
            None => Err(ParseError { offset: at, message: "expected operand".into() }),
            Some((Tok::Num(v), off)) => Ok(Node { kind: NodeKind::Const(v), offset: off }),
            Some((Tok::Ident(name), off)) => {
                let func = match name.as_str() {
                    "exp" => Some(UnOp::Exp),
                    "ln" => Some(UnOp::Ln),
                    "sqrt" => Some(UnOp::Sqrt),
                    "abs" => Some(UnOp::Abs),
                    "sin" => Some(UnOp::Sin),
                    _ => None,
                };
                if let Some(f) = func {
                    if matches!(self.peek(), Some((Tok::LParen, _))) {
                        self.bump();
                        let arg = self.expr()?;
                        match self.bump() {
                            Some((Tok::RParen, _)) => {}
                            other => {
                                let off = other.map(|t| t.1).unwrap_or(self.end_offset);
                                return Err(ParseError {
                                    offset: off,
                                    message: "expected `)`".into(),
                                });
                            }
                        }
                        return Ok(Node { kind: NodeKind::Unary(f, Box::new(arg)), offset: off });
                    }
                    // function name without call syntax: treat as variable
                }
                let idx = self.var_index(&name);
                Ok(Node { kind: NodeKind::Var(idx), offset: off })
            }
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    other => {
                        let off = other.map(|t| t.1).unwrap_or(self.end_offset);
                        Err(ParseError { offset: off, message: "expected `)`".into() })
                    }
                }
            }
            Some((tok, off)) => Err(ParseError {
                offset: off,
                message: format!("unexpected token `{tok:?}`"),
            }),
        }
    }
}

fn remap_vars(node: &mut Node, perm: &[usize]) {
    match &mut node.kind {
        NodeKind::Var(i) => *i = perm[*i],
        NodeKind::Unary(_, a) => remap_vars(a, perm),
        NodeKind::Binary(_, a, b) => {
            remap_vars(a, perm);
            remap_vars(b, perm);
        }
        NodeKind::Const(_) => {}
    }
}

/// Parse an expression. Free variables are reported in sorted name order.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError { offset: 0, message: "empty input".into() });
    }
    let mut lx = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lx.next()? {
        toks.push(t);
    }
    let mut p = Parser { toks, idx: 0, end_offset: text.len(), var_names: Vec::new() };
    let mut root = p.expr()?;
    if let Some((tok, off)) = p.peek() {
        return Err(ParseError { offset: *off, message: format!("unexpected token `{tok:?}`") });
    }
    // reorder variable indices to sorted name order
    let mut sorted: Vec<String> = p.var_names.clone();
    sorted.sort();
    let perm: Vec<usize> = p
        .var_names
        .iter()
        .map(|n| sorted.iter().position(|s| s == n).unwrap())
        .collect();
    remap_vars(&mut root, &perm);
    Ok(Expr { root, vars: sorted })
}

impl Expr {
    pub fn free_vars(&self) -> &[String] {
        &self.vars
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Evaluate value and gradient at a named point. Every free variable
    /// must be bound; extra bindings are ignored.
    pub fn eval_jet<S: Scalar>(&self, point: &[(&str, S)]) -> Result<Jet<S>, EvalError> {
        let mut bind: Vec<S> = Vec::with_capacity(self.vars.len());
        for name in &self.vars {
            match point.iter().find(|(n, _)| n == name) {
                Some((_, v)) => bind.push(*v),
                None => return Err(EvalError::UnboundVariable(name.clone())),
            }
        }
        let jet = eval_node(&self.root, &bind, self.vars.len())?;
        // standard-mode overflow poisons silently through multiplication;
        // surface it as a domain error instead of returning non-finite jets
        if !jet.value.is_finite_val() || jet.gradient.iter().any(|g| !g.is_finite_val()) {
            return Err(EvalError::Domain {
                offset: self.root.offset,
                op: "eval",
                source: NumError::Overflow,
            });
        }
        Ok(jet)
    }

    /// Value only (gradient still computed internally; fine at these sizes).
    pub fn eval_value<S: Scalar>(&self, point: &[(&str, S)]) -> Result<S, EvalError> {
        Ok(self.eval_jet(point)?.value)
    }
}

fn err(offset: usize, op: &'static str, source: NumError) -> EvalError {
    EvalError::Domain { offset, op, source }
}

fn eval_node<S: Scalar>(node: &Node, bind: &[S], nvars: usize) -> Result<Jet<S>, EvalError> {
    let off = node.offset;
    match &node.kind {
        NodeKind::Const(c) => Ok(Jet { value: S::from_f64(*c), gradient: vec![S::zero(); nvars] }),
        NodeKind::Var(i) => {
            let mut g = vec![S::zero(); nvars];
            g[*i] = S::one();
            Ok(Jet { value: bind[*i], gradient: g })
        }
        NodeKind::Unary(op, a) => {
            let ja = eval_node(a, bind, nvars)?;
            match op {
                UnOp::Neg => Ok(Jet {
                    value: ja.value.neg(),
                    gradient: ja.gradient.iter().map(|g| g.neg()).collect(),
                }),
                UnOp::Exp => {
                    let v = ja.value.exp().map_err(|e| err(off, "exp", e))?;
                    Ok(Jet {
                        value: v,
                        gradient: ja.gradient.iter().map(|g| g.mul(v)).collect(),
                    })
                }
                UnOp::Ln => {
                    let v = ja.value.ln().map_err(|e| err(off, "ln", e))?;
                    let inv = S::one().div(ja.value).map_err(|e| err(off, "ln", e))?;
                    Ok(Jet {
                        value: v,
                        gradient: ja.gradient.iter().map(|g| g.mul(inv)).collect(),
                    })
                }
                UnOp::Sqrt => {
                    let v = ja.value.sqrt().map_err(|e| err(off, "sqrt", e))?;
                    // d sqrt = da / (2 sqrt)
                    let denom = S::from_f64(2.0).mul(v);
                    let inv = S::one().div(denom).map_err(|e| err(off, "sqrt", e))?;
                    Ok(Jet {
                        value: v,
                        gradient: ja.gradient.iter().map(|g| g.mul(inv)).collect(),
                    })
                }
                UnOp::Abs => {
                    let s = match ja.value.cmp_total(S::zero()) {
                        std::cmp::Ordering::Less => S::from_f64(-1.0),
                        std::cmp::Ordering::Equal => S::zero(),
                        std::cmp::Ordering::Greater => S::one(),
                    };
                    Ok(Jet {
                        value: ja.value.abs(),
                        gradient: ja.gradient.iter().map(|g| g.mul(s)).collect(),
                    })
                }
                UnOp::Sin => {
                    let c = S::from_f64(ja.value.to_f64().cos());
                    Ok(Jet {
                        value: ja.value.sin(),
                        gradient: ja.gradient.iter().map(|g| g.mul(c)).collect(),
                    })
                }
            }
        }
        NodeKind::Binary(op, a, b) => {
            let ja = eval_node(a, bind, nvars)?;
            let jb = eval_node(b, bind, nvars)?;
            match op {
                BinOp::Add => Ok(Jet {
                    value: ja.value.add(jb.value),
                    gradient: ja
                        .gradient
                        .iter()
                        .zip(&jb.gradient)
                        .map(|(x, y)| x.add(*y))
                        .collect(),
                }),
                BinOp::Sub => Ok(Jet {
                    value: ja.value.sub(jb.value),
                    gradient: ja
                        .gradient
                        .iter()
                        .zip(&jb.gradient)
                        .map(|(x, y)| x.sub(*y))
                        .collect(),
                }),
                BinOp::Mul => Ok(Jet {
                    value: ja.value.mul(jb.value),
                    gradient: ja
                        .gradient
                        .iter()
                        .zip(&jb.gradient)
                        .map(|(x, y)| x.mul(jb.value).add(y.mul(ja.value)))
                        .collect(),
                }),
                BinOp::Div => {
                    let v = ja.value.div(jb.value).map_err(|e| err(off, "/", e))?;
                    let inv = S::one().div(jb.value).map_err(|e| err(off, "/", e))?;
                    // (da b - a db)/b^2 = (da - v db)/b
                    Ok(Jet {
                        value: v,
                        gradient: ja
                            .gradient
                            .iter()
                            .zip(&jb.gradient)
                            .map(|(x, y)| x.sub(v.mul(*y)).mul(inv))
                            .collect(),
                    })
                }
                BinOp::Pow => {
                    // constant integer exponent: exact integer power, any base
                    if let NodeKind::Const(c) = b.kind {
                        if c.fract() == 0.0 && c.abs() <= 512.0 {
                            let n = c as i64;
                            let v = ja.value.powi(n).map_err(|e| err(off, "^", e))?;
                            if n == 0 {
                                return Ok(Jet { value: v, gradient: vec![S::zero(); nvars] });
                            }
                            let vm1 = ja.value.powi(n - 1).map_err(|e| err(off, "^", e))?;
                            let coef = S::from_f64(n as f64).mul(vm1);
                            return Ok(Jet {
                                value: v,
                                gradient: ja.gradient.iter().map(|g| g.mul(coef)).collect(),
                            });
                        }
                    }
                    // general: a^b = exp(b ln a), a > 0
                    let ln_a = ja.value.ln().map_err(|e| err(off, "^", e))?;
                    let v = jb.value.mul(ln_a).exp().map_err(|e| err(off, "^", e))?;
                    let a_inv = S::one().div(ja.value).map_err(|e| err(off, "^", e))?;
                    // dv = v (db ln a + b da / a)
                    Ok(Jet {
                        value: v,
                        gradient: ja
                            .gradient
                            .iter()
                            .zip(&jb.gradient)
                            .map(|(da, db)| {
                                v.mul(db.mul(ln_a).add(jb.value.mul(da.mul(a_inv))))
                            })
                            .collect(),
                    })
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Compiled form: flat postfix program for allocation-free evaluation in
// Monte Carlo loops. Semantics identical to the tree walker.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum OpCode {
    Const(f64),
    Var(u8),
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    PowI(i32),
    Neg,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sin,
}

#[derive(Debug, Clone)]
pub struct Compiled {
    code: Vec<(OpCode, u32)>,
    n_vars: usize,
    max_stack: usize,
}

fn emit(node: &Node, code: &mut Vec<(OpCode, u32)>) {
    let off = node.offset as u32;
    match &node.kind {
        NodeKind::Const(c) => code.push((OpCode::Const(*c), off)),
        NodeKind::Var(i) => code.push((OpCode::Var(*i as u8), off)),
        NodeKind::Unary(op, a) => {
            emit(a, code);
            let oc = match op {
                UnOp::Neg => OpCode::Neg,
                UnOp::Exp => OpCode::Exp,
                UnOp::Ln => OpCode::Ln,
                UnOp::Sqrt => OpCode::Sqrt,
                UnOp::Abs => OpCode::Abs,
                UnOp::Sin => OpCode::Sin,
            };
            code.push((oc, off));
        }
        NodeKind::Binary(op, a, b) => {
            if let (BinOp::Pow, NodeKind::Const(c)) = (op, &b.kind) {
                if c.fract() == 0.0 && c.abs() <= 512.0 {
                    emit(a, code);
                    code.push((OpCode::PowI(*c as i32), off));
                    return;
                }
            }
            emit(a, code);
            emit(b, code);
            let oc = match op {
                BinOp::Add => OpCode::Add,
                BinOp::Sub => OpCode::Sub,
                BinOp::Mul => OpCode::Mul,
                BinOp::Div => OpCode::Div,
                BinOp::Pow => OpCode::Pow,
            };
            code.push((oc, off));
        }
    }
}

impl Expr {
    pub fn compile(&self) -> Compiled {
        let mut code = Vec::new();
        emit(&self.root, &mut code);
        let mut depth = 0usize;
        let mut max_stack = 0usize;
        for (op, _) in &code {
            match op {
                OpCode::Const(_) | OpCode::Var(_) => depth += 1,
                OpCode::Add | OpCode::Sub | OpCode::Mul | OpCode::Div | OpCode::Pow => depth -= 1,
                _ => {}
            }
            max_stack = max_stack.max(depth);
        }
        Compiled { code, n_vars: self.vars.len(), max_stack }
    }
}

const STACK: usize = 64;

impl Compiled {
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Value at a point given by variable index (f64, no gradient).
    pub fn value(&self, vars: &[f64]) -> Result<f64, EvalError> {
        debug_assert!(vars.len() >= self.n_vars && self.max_stack <= STACK);
        let mut st = [0.0f64; STACK];
        let mut sp = 0usize;
        for &(op, off) in &self.code {
            let off = off as usize;
            match op {
                OpCode::Const(c) => {
                    st[sp] = c;
                    sp += 1;
                }
                OpCode::Var(i) => {
                    st[sp] = vars[i as usize];
                    sp += 1;
                }
                OpCode::Neg => st[sp - 1] = -st[sp - 1],
                OpCode::Exp => st[sp - 1] = st[sp - 1].exp(),
                OpCode::Ln => {
                    let a = st[sp - 1];
                    if a <= 0.0 {
                        return Err(err(off, "ln", NumError::LnNonPositive));
                    }
                    st[sp - 1] = a.ln();
                }
                OpCode::Sqrt => {
                    let a = st[sp - 1];
                    if a < 0.0 {
                        return Err(err(off, "sqrt", NumError::SqrtNegative));
                    }
                    st[sp - 1] = a.sqrt();
                }
                OpCode::Abs => st[sp - 1] = st[sp - 1].abs(),
                OpCode::Sin => st[sp - 1] = st[sp - 1].sin(),
                OpCode::PowI(n) => {
                    let a = st[sp - 1];
                    if a == 0.0 && n <= 0 {
                        return Err(err(off, "^", NumError::ZeroToNonPositivePower));
                    }
                    st[sp - 1] = a.powi(n);
                }
                OpCode::Add => {
                    sp -= 1;
                    st[sp - 1] += st[sp];
                }
                OpCode::Sub => {
                    sp -= 1;
                    st[sp - 1] -= st[sp];
                }
                OpCode::Mul => {
                    sp -= 1;
                    st[sp - 1] *= st[sp];
                }
                OpCode::Div => {
                    sp -= 1;
                    if st[sp] == 0.0 {
                        return Err(err(off, "/", NumError::DivisionByZero));
                    }
                    st[sp - 1] /= st[sp];
                }
                OpCode::Pow => {
                    sp -= 1;
                    let (a, b) = (st[sp - 1], st[sp]);
                    if a <= 0.0 {
                        return Err(err(off, "^", NumError::LnNonPositive));
                    }
                    st[sp - 1] = (b * a.ln()).exp();
                }
            }
        }
        let v = st[0];
        if !v.is_finite() {
            return Err(err(0, "eval", NumError::Overflow));
        }
        Ok(v)
    }

    /// Value and two-variable gradient (the catalog's graph strata).
    pub fn jet2(&self, vars: &[f64; 2]) -> Result<(f64, [f64; 2]), EvalError> {
        debug_assert!(self.n_vars <= 2 && self.max_stack <= STACK);
        let mut v = [0.0f64; STACK];
        let mut g = [[0.0f64; 2]; STACK];
        let mut sp = 0usize;
        for &(op, off) in &self.code {
            let off = off as usize;
            match op {
                OpCode::Const(c) => {
                    v[sp] = c;
                    g[sp] = [0.0; 2];
                    sp += 1;
                }
                OpCode::Var(i) => {
                    v[sp] = vars[i as usize];
                    g[sp] = [0.0; 2];
                    g[sp][i as usize] = 1.0;
                    sp += 1;
                }
                OpCode::Neg => {
                    v[sp - 1] = -v[sp - 1];
                    g[sp - 1] = [-g[sp - 1][0], -g[sp - 1][1]];
                }
                OpCode::Exp => {
                    let e = v[sp - 1].exp();
                    v[sp - 1] = e;
                    g[sp - 1] = [g[sp - 1][0] * e, g[sp - 1][1] * e];
                }
                OpCode::Ln => {
                    let a = v[sp - 1];
                    if a <= 0.0 {
                        return Err(err(off, "ln", NumError::LnNonPositive));
                    }
                    v[sp - 1] = a.ln();
                    g[sp - 1] = [g[sp - 1][0] / a, g[sp - 1][1] / a];
                }
                OpCode::Sqrt => {
                    let a = v[sp - 1];
                    if a < 0.0 {
                        return Err(err(off, "sqrt", NumError::SqrtNegative));
                    }
                    let s = a.sqrt();
                    if s == 0.0 {
                        return Err(err(off, "sqrt", NumError::DivisionByZero));
                    }
                    v[sp - 1] = s;
                    g[sp - 1] = [g[sp - 1][0] / (2.0 * s), g[sp - 1][1] / (2.0 * s)];
                }
                OpCode::Abs => {
                    let s = v[sp - 1].signum();
                    let s = if v[sp - 1] == 0.0 { 0.0 } else { s };
                    v[sp - 1] = v[sp - 1].abs();
                    g[sp - 1] = [g[sp - 1][0] * s, g[sp - 1][1] * s];
                }
                OpCode::Sin => {
                    let c = v[sp - 1].cos();
                    v[sp - 1] = v[sp - 1].sin();
                    g[sp - 1] = [g[sp - 1][0] * c, g[sp - 1][1] * c];
                }
                OpCode::PowI(n) => {
                    let a = v[sp - 1];
                    if a == 0.0 && n <= 0 {
                        return Err(err(off, "^", NumError::ZeroToNonPositivePower));
                    }
                    if n == 0 {
                        v[sp - 1] = 1.0;
                        g[sp - 1] = [0.0; 2];
                    } else {
                        let p = a.powi(n - 1);
                        v[sp - 1] = p * a;
                        let c = n as f64 * p;
                        g[sp - 1] = [g[sp - 1][0] * c, g[sp - 1][1] * c];
                    }
                }
                OpCode::Add => {
                    sp -= 1;
                    v[sp - 1] += v[sp];
                    g[sp - 1] = [g[sp - 1][0] + g[sp][0], g[sp - 1][1] + g[sp][1]];
                }
                OpCode::Sub => {
                    sp -= 1;
                    v[sp - 1] -= v[sp];
                    g[sp - 1] = [g[sp - 1][0] - g[sp][0], g[sp - 1][1] - g[sp][1]];
                }
                OpCode::Mul => {
                    sp -= 1;
                    let (a, b) = (v[sp - 1], v[sp]);
                    v[sp - 1] = a * b;
                    g[sp - 1] = [
                        g[sp - 1][0] * b + g[sp][0] * a,
                        g[sp - 1][1] * b + g[sp][1] * a,
                    ];
                }
                OpCode::Div => {
                    sp -= 1;
                    let (a, b) = (v[sp - 1], v[sp]);
                    if b == 0.0 {
                        return Err(err(off, "/", NumError::DivisionByZero));
                    }
                    let q = a / b;
                    v[sp - 1] = q;
                    g[sp - 1] = [
                        (g[sp - 1][0] - q * g[sp][0]) / b,
                        (g[sp - 1][1] - q * g[sp][1]) / b,
                    ];
                }
                OpCode::Pow => {
                    sp -= 1;
                    let (a, b) = (v[sp - 1], v[sp]);
                    if a <= 0.0 {
                        return Err(err(off, "^", NumError::LnNonPositive));
                    }
                    let ln_a = a.ln();
                    let val = (b * ln_a).exp();
                    v[sp - 1] = val;
                    g[sp - 1] = [
                        val * (g[sp][0] * ln_a + b * g[sp - 1][0] / a),
                        val * (g[sp][1] * ln_a + b * g[sp - 1][1] / a),
                    ];
                }
            }
        }
        if !v[0].is_finite() || !g[0][0].is_finite() || !g[0][1].is_finite() {
            return Err(err(0, "eval", NumError::Overflow));
        }
        Ok((v[0], g[0]))
    }
}

// ---------------------------------------------------------------------------
// Printer (fully parenthesized; reparses to an identical tree)
// ---------------------------------------------------------------------------

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.root, &self.vars, f)
    }
}

fn fmt_node(node: &Node, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match &node.kind {
        NodeKind::Const(c) => write!(f, "{c}"),
        NodeKind::Var(i) => write!(f, "{}", vars[*i]),
        NodeKind::Unary(op, a) => {
            let name = match op {
                UnOp::Neg => {
                    write!(f, "(-")?;
                    fmt_node(a, vars, f)?;
                    return write!(f, ")");
                }
                UnOp::Exp => "exp",
                UnOp::Ln => "ln",
                UnOp::Sqrt => "sqrt",
                UnOp::Abs => "abs",
                UnOp::Sin => "sin",
            };
            write!(f, "{name}(")?;
            fmt_node(a, vars, f)?;
            write!(f, ")")
        }
        NodeKind::Binary(op, a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Pow => "^",
            };
            write!(f, "(")?;
            fmt_node(a, vars, f)?;
            write!(f, " {sym} ")?;
            fmt_node(b, vars, f)?;
            write!(f, ")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numscale::XScalar;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn parse_pow_tree_and_sorted_vars() {
        let e = p("z^(x^2+1)");
        assert_eq!(e.free_vars(), &["x".to_string(), "z".to_string()]);
        // pow(var z, add(pow(var x, 2), 1))
        match &e.root().kind {
            NodeKind::Binary(BinOp::Pow, base, exp) => {
                assert!(matches!(base.kind, NodeKind::Var(1)));
                match &exp.kind {
                    NodeKind::Binary(BinOp::Add, l, r) => {
                        assert!(matches!(
                            l.kind,
                            NodeKind::Binary(BinOp::Pow, _, _)
                        ));
                        assert!(matches!(r.kind, NodeKind::Const(c) if c == 1.0));
                    }
                    other => panic!("unexpected exponent {other:?}"),
                }
            }
            other => panic!("unexpected root {other:?}"),
        }
    }

    #[test]
    fn incomplete_input_offset() {
        let e = parse("x +").unwrap_err();
        assert_eq!(e.offset, 3);
        assert!(parse("").is_err());
        assert!(parse("   ").is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ tighter than unary minus: -x^2 = -(x^2)
        let e = p("-x^2");
        match &e.root().kind {
            NodeKind::Unary(UnOp::Neg, inner) => {
                assert!(matches!(inner.kind, NodeKind::Binary(BinOp::Pow, _, _)))
            }
            other => panic!("{other:?}"),
        }
        // right-associative ^: 2^3^2 = 2^(3^2) = 512 (outer exponent is a
        // compound expression, so it evaluates through exp(b ln a))
        let v: f64 = p("2^3^2").eval_value(&[]).unwrap();
        assert!((v - 512.0).abs() < 1e-10, "{v}");
        // precedence: 1+2*3^2 = 19
        let v: f64 = p("1+2*3^2").eval_value(&[]).unwrap();
        assert_eq!(v, 19.0);
    }

    #[test]
    fn pow_identity_of_g() {
        // exp((x^2+1)*ln(z)) == z^(x^2+1) at (0.3, 0.2), 1e-12 relative
        let lhs = p("exp((x^2+1)*ln(z))");
        let rhs = p("z^(x^2+1)");
        let pt: &[(&str, f64)] = &[("x", 0.3), ("z", 0.2)];
        let a = lhs.eval_value(pt).unwrap();
        let b = rhs.eval_value(pt).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn print_reparses_identically() {
        for s in [
            "z^(x^2+1)",
            "exp((x^2+1)*ln(z))",
            "z - z/ln(z) * ln(x + sqrt(x^2 + z^2))",
            "-x^2 + 4/(1 - z)",
            "sin(1/x)",
            "x^-2",
        ] {
            let e = p(s);
            let printed = e.to_string();
            let re = parse(&printed).unwrap();
            assert_eq!(e, re, "print/reparse mismatch for {s} -> {printed}");
        }
    }

    #[test]
    fn g_jet_values() {
        let g = p("exp((x^2+1)*ln(z))");
        // at (0, 0.5): value 0.5, dg/dx = 0, dg/dz = 1
        let j = g.eval_jet(&[("x", 0.0f64), ("z", 0.5)]).unwrap();
        assert!((j.value - 0.5).abs() < 1e-15);
        assert_eq!(j.gradient[0], 0.0);
        assert!((j.gradient[1] - 1.0).abs() < 1e-12);
        // dg/dz = 1 for any z0 in (0,1) at x=0
        for z0 in [0.1, 0.25, 0.9] {
            let j = g.eval_jet(&[("x", 0.0f64), ("z", z0)]).unwrap();
            assert!((j.gradient[1] - 1.0).abs() < 1e-12);
        }
    }

    /// Central finite differences on the value path; the independent check
    /// for forward-mode gradients.
    pub(crate) fn fd_gradient(e: &Expr, pt: &[(&str, f64)], h: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..pt.len() {
            let mut up = pt.to_vec();
            let mut dn = pt.to_vec();
            up[i].1 += h;
            dn[i].1 -= h;
            let a = e.eval_value(&up).unwrap();
            let b = e.eval_value(&dn).unwrap();
            out.push((a - b) / (2.0 * h));
        }
        out
    }

    #[test]
    fn f_gradient_matches_finite_differences() {
        let f = p("z - z/ln(z) * ln(x + sqrt(x^2 + z^2))");
        let pt: &[(&str, f64)] = &[("x", 0.1), ("z", 0.2)];
        let j = f.eval_jet(pt).unwrap();
        let fd = fd_gradient(&f, pt, 1e-6);
        for (g, d) in j.gradient.iter().zip(&fd) {
            assert!((g - d).abs() <= 1e-6 * d.abs().max(1.0), "ad {g} vs fd {d}");
        }
    }

    #[test]
    fn evenness_of_g_in_x() {
        let g = p("exp((x^2+1)*ln(z))");
        let j1 = g.eval_jet(&[("x", 0.17f64), ("z", 0.3)]).unwrap();
        let j2 = g.eval_jet(&[("x", -0.17f64), ("z", 0.3)]).unwrap();
        assert!((j1.value - j2.value).abs() < 1e-15);
        assert!((j1.gradient[0] + j2.gradient[0]).abs() < 1e-15);
        assert!((j1.gradient[1] - j2.gradient[1]).abs() < 1e-15);
    }

    #[test]
    fn extended_mode_survives_flat_curve() {
        let g = p("exp((x^2+1)*ln(z))");
        let x = 0.02f64;
        // z = exp(-1/x^2) = exp(-2500): f64 0.0, XScalar fine
        let z = XScalar::from_log(1, -1.0 / (x * x));
        let j = g
            .eval_jet(&[("x", XScalar::from_float(x)), ("z", z)])
            .unwrap();
        let lm = j.value.logmag().unwrap();
        assert!((lm - (1.0 + x * x) * (-2500.0)).abs() < 1e-9 * 2500.0);
        // standard mode: z underflows to 0, ln errors
        let r = g.eval_jet(&[("x", x), ("z", 0.0f64)]);
        assert!(matches!(r, Err(EvalError::Domain { .. })));
    }

    #[test]
    fn domain_errors_carry_offset() {
        let e = p("ln(x)");
        let r = e.eval_jet(&[("x", -1.0f64)]);
        match r {
            Err(EvalError::Domain { offset, op, .. }) => {
                assert_eq!(offset, 0);
                assert_eq!(op, "ln");
            }
            other => panic!("{other:?}"),
        }
        let e = p("1/x");
        assert!(matches!(e.eval_jet(&[("x", 0.0f64)]), Err(EvalError::Domain { .. })));
        let e = p("sqrt(x)");
        assert!(matches!(e.eval_jet(&[("x", -2.0f64)]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn compiled_matches_tree_evaluator() {
        for text in [
            "exp((x^2+1)*ln(z))",
            "z - z/ln(z) * ln(x + sqrt(x^2 + z^2))",
            "abs(x - z) + sin(x*z) / (1 + x^2)",
            "z^3 + 0*x",
        ] {
            let e = p(text);
            let c = e.compile();
            for &(x, z) in &[(0.3, 0.2), (0.01, 1e-6), (-0.4, 0.45), (0.49, 0.001)] {
                let pt: &[(&str, f64)] = &[("x", x), ("z", z)];
                let jet = e.eval_jet(pt).unwrap();
                let (cv, cg) = c.jet2(&[x, z]).unwrap();
                assert!((jet.value - cv).abs() <= 1e-14 * jet.value.abs().max(1e-300));
                for (a, b) in jet.gradient.iter().zip(&cg) {
                    assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-12), "{text}: {a} vs {b}");
                }
                let vv = c.value(&[x, z]).unwrap();
                assert_eq!(vv, cv);
            }
        }
        // domain errors surface identically
        let e = p("ln(z) + 0*x");
        let c = e.compile();
        assert!(matches!(c.value(&[0.1, -1.0]), Err(EvalError::Domain { .. })));
        assert!(matches!(c.jet2(&[0.1, 0.0]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn unbound_variable() {
        let e = p("x + y");
        assert!(matches!(
            e.eval_jet(&[("x", 1.0f64)]),
            Err(EvalError::UnboundVariable(_))
        ));
    }
}
