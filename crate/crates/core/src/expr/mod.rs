//! Expression DSL over `x ∈ R^d`, `t ∈ R^s` with truncated Taylor jets.
//!
//! Every scalar field used by the toolkit (symbols, phases, amplitudes,
//! graph data) is an [`Expression`]. Expressions are immutable after
//! construction and can be evaluated concurrently.

mod eval;
mod jet;
mod parse;

use std::fmt;

pub use jet::{Jet, JetSpace, MAX_ORDER};
pub use parse::ParseError;

/// Which variable group a symbol refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    X,
    T,
}

impl VarKind {
    pub fn letter(self) -> char {
        match self {
            VarKind::X => 'x',
            VarKind::T => 't',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

/// Exponent of `^`: an integer, or `Half(n)` meaning `n/2` with `n` odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Power {
    Int(i32),
    Half(i32),
}

impl Power {
    pub fn value(self) -> f64 {
        match self {
            Power::Int(n) => n as f64,
            Power::Half(n) => n as f64 / 2.0,
        }
    }
}

/// Argument of `jb`/`norm2`: a whole variable tuple or a scalar expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Vector(VarKind),
    Scalar(Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Zero-based component of `x` or `t`.
    Var(VarKind, usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Power),
    Func(Func, Box<Node>),
    /// `sqrt(1 + |v|^2)`.
    Jb(Arg),
    /// `|v|`.
    Norm2(Arg),
    Dot(VarKind, VarKind),
    /// `χ(|v|) * body` with the quintic smoothstep profile between `inner`
    /// and `outer`. The body is never evaluated where `χ` vanishes.
    Excise {
        var: VarKind,
        inner: f64,
        outer: f64,
        body: Box<Node>,
    },
}

/// A parsed (or assembled) scalar field on `R^d × R^s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    d: usize,
    s: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error: {message} in `{subtree}`")]
    Domain { message: String, subtree: String },
    #[error("requested jet order {0} exceeds the supported maximum {MAX_ORDER}")]
    Order(usize),
    #[error("point has {got} {kind} coordinates, expected {expected}")]
    Dimension {
        kind: char,
        got: usize,
        expected: usize,
    },
    #[error("non-finite input coordinate")]
    NonFinite,
}

impl EvalError {
    pub(crate) fn domain(message: impl Into<String>, node: &Node) -> Self {
        EvalError::Domain {
            message: message.into(),
            subtree: node.to_string(),
        }
    }
}

impl Expression {
    /// Parses `text` against dimensions `(d, s)`.
    pub fn parse(text: &str, d: usize, s: usize) -> Result<Self, ParseError> {
        let root = parse::parse(text, d, s)?;
        Ok(Expression { root, d, s })
    }

    /// Wraps an assembled tree, validating variable indices and vector arities.
    pub fn from_node(root: Node, d: usize, s: usize) -> Result<Self, ParseError> {
        parse::validate(&root, d, s)?;
        Ok(Expression { root, d, s })
    }

    pub fn constant(value: f64, d: usize, s: usize) -> Self {
        Expression {
            root: Node::Const(value),
            d,
            s,
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn nvars(&self) -> usize {
        self.d + self.s
    }

    /// Value only; the hot path for quadrature and sampling.
    pub fn eval(&self, x: &[f64], t: &[f64]) -> Result<f64, EvalError> {
        self.check_point(x, t)?;
        eval::value(&self.root, x, t)
    }

    /// Value and all partials up to `order` by forward-mode Taylor arithmetic.
    pub fn eval_jet(&self, x: &[f64], t: &[f64], order: usize) -> Result<Jet, EvalError> {
        if order > MAX_ORDER {
            return Err(EvalError::Order(order));
        }
        self.check_point(x, t)?;
        let space = JetSpace::shared(self.nvars(), order);
        let coeffs = eval::jet(&self.root, x, t, &space)?;
        Ok(Jet::from_parts(space, self.d, coeffs))
    }

    fn check_point(&self, x: &[f64], t: &[f64]) -> Result<(), EvalError> {
        if x.len() != self.d {
            return Err(EvalError::Dimension {
                kind: 'x',
                got: x.len(),
                expected: self.d,
            });
        }
        if t.len() != self.s {
            return Err(EvalError::Dimension {
                kind: 't',
                got: t.len(),
                expected: self.s,
            });
        }
        if x.iter().chain(t).any(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        Ok(())
    }

    /// Variable groups that occur in the tree.
    pub fn uses(&self, kind: VarKind) -> bool {
        self.root.uses(kind)
    }

    /// Whether `x_i` (zero-based) occurs, either directly or through a vector built-in.
    pub fn uses_component(&self, kind: VarKind, index: usize) -> bool {
        self.root.uses_component(kind, index)
    }

    pub fn add(&self, other: &Expression) -> Expression {
        self.combine(other, |a, b| Node::Add(Box::new(a), Box::new(b)))
    }

    pub fn sub(&self, other: &Expression) -> Expression {
        self.combine(other, |a, b| Node::Sub(Box::new(a), Box::new(b)))
    }

    pub fn mul(&self, other: &Expression) -> Expression {
        self.combine(other, |a, b| Node::Mul(Box::new(a), Box::new(b)))
    }

    pub fn scale(&self, factor: f64) -> Expression {
        Expression {
            root: Node::Mul(Box::new(Node::Const(factor)), Box::new(self.root.clone())),
            d: self.d,
            s: self.s,
        }
    }

    /// Re-homes the tree in larger (or equal) dimensions; indices are kept.
    pub fn with_dims(&self, d: usize, s: usize) -> Result<Expression, ParseError> {
        Expression::from_node(self.root.clone(), d, s)
    }

    fn combine(&self, other: &Expression, f: impl FnOnce(Node, Node) -> Node) -> Expression {
        assert_eq!(
            (self.d, self.s),
            (other.d, other.s),
            "combining expressions of different dimensions"
        );
        Expression {
            root: f(self.root.clone(), other.root.clone()),
            d: self.d,
            s: self.s,
        }
    }
}

impl Node {
    pub fn var(kind: VarKind, index: usize) -> Node {
        Node::Var(kind, index)
    }

    fn uses(&self, kind: VarKind) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(k, _) => *k == kind,
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => a.uses(kind),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.uses(kind) || b.uses(kind)
            }
            Node::Jb(arg) | Node::Norm2(arg) => match arg {
                Arg::Vector(k) => *k == kind,
                Arg::Scalar(a) => a.uses(kind),
            },
            Node::Dot(a, b) => *a == kind || *b == kind,
            Node::Excise { var, body, .. } => *var == kind || body.uses(kind),
        }
    }

    fn uses_component(&self, kind: VarKind, index: usize) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(k, i) => *k == kind && *i == index,
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => a.uses_component(kind, index),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.uses_component(kind, index) || b.uses_component(kind, index)
            }
            Node::Jb(arg) | Node::Norm2(arg) => match arg {
                Arg::Vector(k) => *k == kind,
                Arg::Scalar(a) => a.uses_component(kind, index),
            },
            Node::Dot(a, b) => *a == kind || *b == kind,
            Node::Excise { var, body, .. } => *var == kind || body.uses_component(kind, index),
        }
    }

    /// Conservative test for strict positivity everywhere.
    pub(crate) fn is_positive(&self) -> bool {
        match self {
            Node::Const(c) => *c > 0.0,
            Node::Jb(_) | Node::Func(Func::Exp, _) => true,
            Node::Mul(a, b) | Node::Div(a, b) => a.is_positive() && b.is_positive(),
            Node::Add(a, b) => {
                (a.is_positive() && b.is_nonnegative()) || (a.is_nonnegative() && b.is_positive())
            }
            Node::Pow(a, _) => a.is_positive(),
            Node::Func(Func::Sqrt, a) => a.is_positive(),
            _ => false,
        }
    }

    fn is_nonnegative(&self) -> bool {
        match self {
            Node::Const(c) => *c >= 0.0,
            Node::Norm2(_) | Node::Func(Func::Sqrt, _) => true,
            Node::Pow(a, Power::Int(n)) => n % 2 == 0 || a.is_nonnegative(),
            Node::Mul(a, b) | Node::Div(a, b) | Node::Add(a, b) => {
                a.is_nonnegative() && b.is_nonnegative()
            }
            Node::Excise { body, .. } => body.is_nonnegative(),
            other => other.is_positive(),
        }
    }
}

fn fmt_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
        write!(f, "(0 - {:?})", -v)
    } else {
        write!(f, "{v:?}")
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Vector(k) => write!(f, "{}", k.letter()),
            Arg::Scalar(n) => write!(f, "{n}"),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(v) => fmt_number(f, *v),
            Node::Var(k, i) => write!(f, "{}{}", k.letter(), i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, p) => match p {
                Power::Int(n) => write!(f, "({a})^{n}"),
                Power::Half(n) => write!(f, "({a})^{:?}", *n as f64 / 2.0),
            },
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
            Node::Jb(arg) => write!(f, "jb({arg})"),
            Node::Norm2(arg) => write!(f, "norm2({arg})"),
            Node::Dot(a, b) => write!(f, "dot({}, {})", a.letter(), b.letter()),
            Node::Excise {
                var,
                inner,
                outer,
                body,
            } => write!(
                f,
                "excise_{}({inner:?}, {outer:?}, {body})",
                var.letter()
            ),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_round_trips() {
        for text in [
            "dot(x,t) - jb(t)",
            "x1*t1 + 0.5*x2^2 - jb(x)^-1",
            "jb(x)^1.5 / (1 + exp(-t1))",
            "excise_x(1, 2, norm2(x) * jb(t))",
            "sin(x1)*cos(t2) + sqrt(jb(x1 - t1))",
        ] {
            let e = Expression::parse(text, 2, 2).unwrap();
            let again = Expression::parse(&e.to_string(), 2, 2).unwrap();
            assert_eq!(e, again, "{text}");
        }
    }

    #[test]
    fn component_usage() {
        let e = Expression::parse("x2 * t1 + norm2(t)", 2, 2).unwrap();
        assert!(e.uses_component(VarKind::X, 1));
        assert!(!e.uses_component(VarKind::X, 0));
        assert!(e.uses_component(VarKind::T, 1));
    }
}
