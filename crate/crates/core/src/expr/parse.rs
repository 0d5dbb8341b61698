//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := unary (('*'|'/') unary)*
//! unary  := '-' unary | power
//! power  := atom ['^' exponent]
//! atom   := number | x<i> | t<i> | func '(' args ')' | '(' expr ')'
//! ```
//!
//! Bare `x`/`t` denote the whole tuple inside `dot`, `norm2` and `jb`; in
//! scalar position they are accepted only when the tuple has length one.

use super::{Arg, Func, Node, Power, VarKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier \"{name}\" at {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("arity mismatch at {pos}: {message}")]
    Arity { pos: usize, message: String },
    #[error("variable {name} out of range (dimension {dim})")]
    IndexOutOfRange { name: String, dim: usize },
    #[error("half-integer power needs a base that is provably positive: `{0}`")]
    HalfPower(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(text: &'a str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer {
            src: text.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while let Some(tok) = lx.next()? {
            out.push(tok);
        }
        Ok(out)
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let Some(&c) = self.src.get(self.pos) else {
            return Ok(None);
        };
        let start = self.pos;
        if c.is_ascii_digit() || c == b'.' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
                let save = self.pos;
                self.pos += 1;
                if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                    self.pos += 1;
                }
                if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                pos: start,
                message: format!("malformed number \"{text}\""),
            })?;
            return Ok(Some((start, Tok::Num(value))));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return Ok(Some((start, Tok::Ident(text.to_string()))));
        }
        if b"+-*/^(),".contains(&c) {
            self.pos += 1;
            return Ok(Some((start, Tok::Sym(c as char))));
        }
        Err(ParseError::Syntax {
            pos: start,
            message: format!("unexpected character '{}'", c as char),
        })
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
    end: usize,
    d: usize,
    s: usize,
}

pub(crate) fn parse(text: &str, d: usize, s: usize) -> Result<Node, ParseError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        toks,
        i: 0,
        end: text.len(),
        d,
        s,
    };
    let node = p.expr()?;
    if let Some((pos, tok)) = p.toks.get(p.i) {
        return Err(ParseError::Syntax {
            pos: *pos,
            message: format!("unexpected trailing token {tok:?}"),
        });
    }
    Ok(node)
}

/// Checks indices and vector arities of an assembled tree.
pub(crate) fn validate(node: &Node, d: usize, s: usize) -> Result<(), ParseError> {
    let dim = |k: VarKind| if k == VarKind::X { d } else { s };
    match node {
        Node::Const(_) => Ok(()),
        Node::Var(k, i) => {
            if *i < dim(*k) {
                Ok(())
            } else {
                Err(ParseError::IndexOutOfRange {
                    name: format!("{}{}", k.letter(), i + 1),
                    dim: dim(*k),
                })
            }
        }
        Node::Neg(a) | Node::Func(_, a) => validate(a, d, s),
        Node::Pow(a, p) => {
            if matches!(p, Power::Half(_)) && !a.is_positive() {
                return Err(ParseError::HalfPower(a.to_string()));
            }
            validate(a, d, s)
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            validate(a, d, s)?;
            validate(b, d, s)
        }
        Node::Jb(arg) | Node::Norm2(arg) => match arg {
            Arg::Vector(k) if dim(*k) == 0 => Err(ParseError::Arity {
                pos: 0,
                message: format!("empty tuple {}", k.letter()),
            }),
            Arg::Vector(_) => Ok(()),
            Arg::Scalar(a) => validate(a, d, s),
        },
        Node::Dot(a, b) => {
            if dim(*a) != dim(*b) || dim(*a) == 0 {
                Err(ParseError::Arity {
                    pos: 0,
                    message: format!(
                        "dot({}, {}) needs tuples of equal non-zero length, got {} and {}",
                        a.letter(),
                        b.letter(),
                        dim(*a),
                        dim(*b)
                    ),
                })
            } else {
                Ok(())
            }
        }
        Node::Excise {
            var,
            inner,
            outer,
            body,
        } => {
            if !(*inner > 0.0 && inner < outer) || dim(*var) == 0 {
                return Err(ParseError::Arity {
                    pos: 0,
                    message: format!("excision radii must satisfy 0 < {inner} < {outer}"),
                });
            }
            validate(body, d, s)
        }
    }
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map_or(self.end, |(p, _)| *p)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: self.pos(),
                message: format!("expected '{c}'"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let pos = self.pos();
        let negative = self.eat('-');
        let value = match self.peek() {
            Some(Tok::Num(v)) => *v,
            _ => {
                return Err(ParseError::Syntax {
                    pos,
                    message: "expected numeric exponent".into(),
                })
            }
        };
        self.i += 1;
        let value = if negative { -value } else { value };
        let twice = value * 2.0;
        if twice.fract() != 0.0 || twice.abs() > 1e6 {
            return Err(ParseError::Syntax {
                pos,
                message: format!("exponent {value} is neither integer nor half-integer"),
            });
        }
        let power = if value.fract() == 0.0 {
            Power::Int(value as i32)
        } else {
            Power::Half(twice as i32)
        };
        if matches!(power, Power::Half(_)) && !base.is_positive() {
            return Err(ParseError::HalfPower(base.to_string()));
        }
        Ok(Node::Pow(Box::new(base), power))
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.i += 1;
                Ok(Node::Const(v))
            }
            Some(Tok::Sym('(')) => {
                self.i += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.i += 1;
                if self.peek() == Some(&Tok::Sym('(')) {
                    self.i += 1;
                    self.call(&name, pos)
                } else {
                    self.variable(&name, pos)
                }
            }
            Some(tok) => Err(ParseError::Syntax {
                pos,
                message: format!("unexpected token {tok:?}"),
            }),
            None => Err(ParseError::Syntax {
                pos,
                message: "unexpected end of input".into(),
            }),
        }
    }

    fn dim(&self, k: VarKind) -> usize {
        match k {
            VarKind::X => self.d,
            VarKind::T => self.s,
        }
    }

    fn variable(&self, name: &str, pos: usize) -> Result<Node, ParseError> {
        let unknown = || ParseError::UnknownIdentifier {
            pos,
            name: name.to_string(),
        };
        let kind = match name.as_bytes().first() {
            Some(b'x') => VarKind::X,
            Some(b't') => VarKind::T,
            _ => return Err(unknown()),
        };
        let rest = name[1..].strip_prefix('_').unwrap_or(&name[1..]);
        if rest.is_empty() {
            return if self.dim(kind) == 1 {
                Ok(Node::Var(kind, 0))
            } else {
                Err(ParseError::Arity {
                    pos,
                    message: format!(
                        "tuple '{name}' used as a scalar (only allowed inside dot/norm2/jb)"
                    ),
                })
            };
        }
        if !rest.bytes().all(|b| b.is_ascii_digit()) {
            return Err(unknown());
        }
        let index: usize = rest.parse().map_err(|_| unknown())?;
        if index == 0 || index > self.dim(kind) {
            return Err(ParseError::IndexOutOfRange {
                name: name.to_string(),
                dim: self.dim(kind),
            });
        }
        Ok(Node::Var(kind, index - 1))
    }

    /// Bare `x` / `t` at the current position followed by ',' or ')'.
    fn vector_token(&mut self) -> Option<VarKind> {
        let kind = match self.peek() {
            Some(Tok::Ident(n)) if n == "x" => VarKind::X,
            Some(Tok::Ident(n)) if n == "t" => VarKind::T,
            _ => return None,
        };
        match self.toks.get(self.i + 1).map(|(_, t)| t) {
            Some(Tok::Sym(',')) | Some(Tok::Sym(')')) => {
                self.i += 1;
                Some(kind)
            }
            _ => None,
        }
    }

    fn args(&mut self) -> Result<Vec<(usize, Result<VarKind, Node>)>, ParseError> {
        let mut out = Vec::new();
        if self.eat(')') {
            return Ok(out);
        }
        loop {
            let pos = self.pos();
            let arg = match self.vector_token() {
                Some(k) => Ok(k),
                None => Err(self.expr()?),
            };
            out.push((pos, arg));
            if self.eat(')') {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<Node, ParseError> {
        let args = self.args()?;
        let arity = |n: usize| -> Result<(), ParseError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(ParseError::Arity {
                    pos,
                    message: format!("{name} takes {n} argument(s), got {}", args.len()),
                })
            }
        };
        let scalar = |arg: &(usize, Result<VarKind, Node>), this: &Parser| match &arg.1 {
            Err(node) => Ok(node.clone()),
            Ok(k) if this.dim(*k) == 1 => Ok(Node::Var(*k, 0)),
            Ok(k) => Err(ParseError::Arity {
                pos: arg.0,
                message: format!("tuple '{}' passed where a scalar is expected", k.letter()),
            }),
        };
        let number = |arg: &(usize, Result<VarKind, Node>)| match &arg.1 {
            Err(Node::Const(v)) => Ok(*v),
            _ => Err(ParseError::Syntax {
                pos: arg.0,
                message: "expected a numeric literal".into(),
            }),
        };
        match name {
            "sqrt" | "exp" | "sin" | "cos" => {
                arity(1)?;
                let f = match name {
                    "sqrt" => Func::Sqrt,
                    "exp" => Func::Exp,
                    "sin" => Func::Sin,
                    _ => Func::Cos,
                };
                Ok(Node::Func(f, Box::new(scalar(&args[0], self)?)))
            }
            "jb" | "norm2" => {
                arity(1)?;
                let arg = match &args[0].1 {
                    Ok(k) => Arg::Vector(*k),
                    Err(node) => Arg::Scalar(Box::new(node.clone())),
                };
                if let Arg::Vector(k) = arg {
                    if self.dim(k) == 0 {
                        return Err(ParseError::Arity {
                            pos,
                            message: format!("empty tuple {}", k.letter()),
                        });
                    }
                }
                Ok(if name == "jb" {
                    Node::Jb(arg)
                } else {
                    Node::Norm2(arg)
                })
            }
            "dot" => {
                arity(2)?;
                let (a, b) = match (&args[0].1, &args[1].1) {
                    (Ok(a), Ok(b)) => (*a, *b),
                    _ => {
                        return Err(ParseError::Arity {
                            pos,
                            message: "dot takes the tuples x or t".into(),
                        })
                    }
                };
                let node = Node::Dot(a, b);
                validate(&node, self.d, self.s).map_err(|e| match e {
                    ParseError::Arity { message, .. } => ParseError::Arity { pos, message },
                    other => other,
                })?;
                Ok(node)
            }
            "excise_x" | "excise_t" => {
                arity(3)?;
                let var = if name == "excise_x" {
                    VarKind::X
                } else {
                    VarKind::T
                };
                let node = Node::Excise {
                    var,
                    inner: number(&args[0])?,
                    outer: number(&args[1])?,
                    body: Box::new(scalar(&args[2], self)?),
                };
                validate(&node, self.d, self.s).map_err(|e| match e {
                    ParseError::Arity { message, .. } => ParseError::Arity { pos, message },
                    other => other,
                })?;
                Ok(node)
            }
            _ => Err(ParseError::UnknownIdentifier {
                pos,
                name: name.to_string(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str, d: usize, s: usize) -> Result<Node, ParseError> {
        parse(text, d, s)
    }

    #[test]
    fn dot_expands_to_bilinear_form() {
        assert_eq!(
            p("dot(x,t)", 2, 2).unwrap(),
            Node::Dot(VarKind::X, VarKind::T)
        );
        let kg = p("dot(x,t) - jb(t)", 1, 1).unwrap();
        assert_eq!(
            kg,
            Node::Sub(
                Box::new(Node::Dot(VarKind::X, VarKind::T)),
                Box::new(Node::Jb(Arg::Vector(VarKind::T)))
            )
        );
    }

    #[test]
    fn unknown_identifier() {
        match p("jb(q)", 1, 1) {
            Err(ParseError::UnknownIdentifier { name, .. }) => assert_eq!(name, "q"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            p("foo(x1)", 1, 1),
            Err(ParseError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn index_and_arity_errors() {
        assert!(matches!(
            p("x3", 2, 1),
            Err(ParseError::IndexOutOfRange { .. })
        ));
        assert!(matches!(p("t1", 2, 0), Err(ParseError::IndexOutOfRange { .. })));
        assert!(matches!(p("dot(x,t)", 2, 1), Err(ParseError::Arity { .. })));
        assert!(matches!(p("sqrt(x1, t1)", 1, 1), Err(ParseError::Arity { .. })));
        assert!(matches!(p("x + 1", 2, 1), Err(ParseError::Arity { .. })));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match p("x1 + * t1", 1, 1) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(p("(x1", 1, 1), Err(ParseError::Syntax { .. })));
        assert!(matches!(p("x1 ^ 0.3", 1, 1), Err(ParseError::Syntax { .. })));
        assert!(matches!(p("", 1, 1), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn half_powers_need_positive_base() {
        assert!(p("jb(x)^0.5", 2, 1).is_ok());
        assert!(p("(1 + jb(t))^-1.5", 2, 1).is_ok());
        assert!(matches!(p("x1^0.5", 2, 1), Err(ParseError::HalfPower(_))));
    }

    #[test]
    fn scalar_shorthand_in_one_dimension() {
        assert_eq!(p("x*t", 1, 1).unwrap(), p("x1*t1", 1, 1).unwrap());
        assert_eq!(p("x_2", 2, 1).unwrap(), Node::Var(VarKind::X, 1));
        assert_eq!(p("2e-3", 1, 1).unwrap(), Node::Const(2e-3));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(
            p("-x1^2", 1, 1).unwrap(),
            Node::Neg(Box::new(Node::Pow(
                Box::new(Node::Var(VarKind::X, 0)),
                Power::Int(2)
            )))
        );
    }
}
