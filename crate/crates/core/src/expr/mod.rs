//! A small arithmetic expression language for integrands in config files.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          (right associative)
//! primary := number | ident | ident '(' args ')' | '(' expr ')'
//! ```
//!
//! Functions: `exp log sqrt abs sin cos` (one argument) and `pow` (two).
//! Identifiers must belong to the variable set declared at parse time.

mod parse;

use std::fmt;

use thiserror::Error;

pub use parse::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },

    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("function `{name}` expects {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },

    #[error("domain error: {function}({value})")]
    Domain { function: &'static str, value: f64 },

    #[error("division by zero")]
    DivisionByZero,

    #[error("non-finite result ({0})")]
    NonFinite(f64),

    #[error("missing binding for `{0}`")]
    MissingBinding(String),

    #[error("expected {expected} bindings, got {got}")]
    BindingCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Pow,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Self::Exp,
            "log" => Self::Log,
            "sqrt" => Self::Sqrt,
            "abs" => Self::Abs,
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "pow" => Self::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Exp => "exp",
            Self::Log => "log",
            Self::Sqrt => "sqrt",
            Self::Abs => "abs",
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        if self == Self::Pow {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            Self::Add => "+",
            Self::Sub => "-",
            Self::Mul => "*",
            Self::Div => "/",
            Self::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            Self::Add | Self::Sub => 1,
            Self::Mul | Self::Div => 2,
            Self::Pow => 4,
        }
    }
}

const NEG_PREC: u8 = 3;
const ATOM_PREC: u8 = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    /// Index into the declared variable list.
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Num(v) if *v < 0.0 => NEG_PREC,
            Node::Num(_) | Node::Var(_) | Node::Call(..) => ATOM_PREC,
            Node::Neg(_) => NEG_PREC,
            Node::Bin(op, ..) => op.precedence(),
        }
    }

    fn eval(&self, vars: &[f64]) -> Result<f64, ExprError> {
        Ok(match self {
            Node::Num(v) => *v,
            Node::Var(i) => vars[*i],
            Node::Neg(x) => -x.eval(vars)?,
            Node::Bin(op, a, b) => {
                let a = a.eval(vars)?;
                let b = b.eval(vars)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(ExprError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => power(a, b)?,
                }
            }
            Node::Call(f, args) => {
                let x = args[0].eval(vars)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(ExprError::Domain { function: "log", value: x });
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(ExprError::Domain { function: "sqrt", value: x });
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Pow => power(x, args[1].eval(vars)?)?,
                }
            }
        })
    }

    fn write(&self, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) if *v < 0.0 => write!(f, "{v:?}"),
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Var(i) => f.write_str(&names[*i]),
            Node::Neg(x) => {
                f.write_str("-")?;
                write_child(x, names, x.precedence() < NEG_PREC, f)
            }
            Node::Bin(op, a, b) => {
                let p = op.precedence();
                let (left_paren, right_paren) = if *op == BinOp::Pow {
                    (a.precedence() <= p, b.precedence() < NEG_PREC)
                } else {
                    (a.precedence() < p, b.precedence() <= p)
                };
                write_child(a, names, left_paren, f)?;
                f.write_str(op.symbol())?;
                write_child(b, names, right_paren, f)
            }
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.write(names, f)?;
                }
                f.write_str(")")
            }
        }
    }
}

fn write_child(node: &Node, names: &[String], paren: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // A negative literal always needs parentheses to survive re-parsing
    // as a literal rather than a negation.
    let paren = paren || matches!(node, Node::Num(v) if *v < 0.0);
    if paren {
        f.write_str("(")?;
        node.write(names, f)?;
        f.write_str(")")
    } else {
        node.write(names, f)
    }
}

fn power(base: f64, exponent: f64) -> Result<f64, ExprError> {
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(ExprError::Domain { function: "pow", value: base });
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(ExprError::DivisionByZero);
    }
    Ok(base.powf(exponent))
}

/// A parsed expression together with its declared variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    variables: Vec<String>,
}

impl Expr {
    pub fn new(root: Node, variables: Vec<String>) -> Self {
        Self { root, variables }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Evaluate with positional bindings in declared-variable order.
    pub fn eval(&self, values: &[f64]) -> Result<f64, ExprError> {
        if values.len() != self.variables.len() {
            return Err(ExprError::BindingCount { expected: self.variables.len(), got: values.len() });
        }
        let v = self.root.eval(values)?;
        if !v.is_finite() {
            return Err(ExprError::NonFinite(v));
        }
        Ok(v)
    }

    /// Evaluate with named bindings.
    pub fn eval_named(&self, bindings: &[(&str, f64)]) -> Result<f64, ExprError> {
        let values = self
            .variables
            .iter()
            .map(|name| {
                bindings
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| ExprError::MissingBinding(name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.eval(&values)
    }

    /// Whether the expression references variable `name`.
    pub fn uses(&self, name: &str) -> bool {
        fn walk(node: &Node, idx: usize) -> bool {
            match node {
                Node::Num(_) => false,
                Node::Var(i) => *i == idx,
                Node::Neg(x) => walk(x, idx),
                Node::Bin(_, a, b) => walk(a, idx) || walk(b, idx),
                Node::Call(_, args) => args.iter().any(|a| walk(a, idx)),
            }
        }
        self.variables.iter().position(|v| v == name).is_some_and(|i| walk(&self.root, i))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(&self.variables, f)
    }
}

#[cfg(test)]
mod tests;
