//! Scalar expressions in the configuration, such as `F` or an exact solution.
//!
//! `evalexpr` parses; the syntax tree is then lowered to a small `f64`
//! evaluator, which is what the conjugate searches call millions of times.

use std::fmt;

use evalexpr::{build_operator_tree, DefaultNumericTypes, Node, Operator, Value};

const FUNCTIONS: &[(&str, fn(f64) -> f64)] = &[
    ("sin", f64::sin),
    ("cos", f64::cos),
    ("tan", f64::tan),
    ("atan", f64::atan),
    ("sinh", f64::sinh),
    ("cosh", f64::cosh),
    ("tanh", f64::tanh),
    ("exp", f64::exp),
    ("ln", f64::ln),
    ("sqrt", f64::sqrt),
    ("abs", f64::abs),
    ("sign", sign),
];

fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A parsed expression over a fixed list of variable names.
///
/// The `evalexpr` syntax tree is lowered to [`Op`] so evaluation works on
/// plain `f64` values: every literal is a float, so `1/2` is `0.5`.
#[derive(Clone)]
pub struct Expression {
    source: String,
    op: Op,
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Expression").field(&self.source).finish()
    }
}

#[derive(Clone, Copy, Debug)]
enum Bin {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Pow,
    Min,
    Max,
}

#[derive(Clone, Debug)]
enum Op {
    Num(f64),
    Var(usize),
    Neg(Box<Op>),
    Bin(Bin, Box<Op>, Box<Op>),
    Call(fn(f64) -> f64, Box<Op>),
}

impl Op {
    fn eval<V: Fn(usize) -> f64>(&self, v: &V) -> f64 {
        match self {
            Op::Num(c) => *c,
            Op::Var(k) => v(*k),
            Op::Neg(a) => -a.eval(v),
            Op::Call(f, a) => f(a.eval(v)),
            Op::Bin(b, l, r) => {
                let (x, y) = (l.eval(v), r.eval(v));
                match b {
                    Bin::Add => x + y,
                    Bin::Sub => x - y,
                    Bin::Mul => x * y,
                    Bin::Div => x / y,
                    Bin::Rem => x % y,
                    Bin::Pow => x.powf(y),
                    Bin::Min => x.min(y),
                    Bin::Max => x.max(y),
                }
            }
        }
    }
}

type Tree = Node<DefaultNumericTypes>;

fn lower(node: &Tree, names: &[&str]) -> Result<Op, String> {
    let kids = node.children();
    let arg = |k: usize| lower(&kids[k], names).map(Box::new);
    let binary = |b: Bin| -> Result<Op, String> { Ok(Op::Bin(b, arg(0)?, arg(1)?)) };
    match node.operator() {
        Operator::RootNode if kids.len() == 1 => lower(&kids[0], names),
        Operator::Const { value } => match value {
            Value::Float(c) => Ok(Op::Num(*c)),
            Value::Int(c) => Ok(Op::Num(*c as f64)),
            other => Err(format!("unsupported literal {other}")),
        },
        Operator::VariableIdentifierRead { identifier } => match identifier.as_str() {
            "pi" => Ok(Op::Num(std::f64::consts::PI)),
            "e" => Ok(Op::Num(std::f64::consts::E)),
            id => names
                .iter()
                .position(|n| *n == id)
                .map(Op::Var)
                .ok_or_else(|| format!("unknown variable `{id}` (expected one of {})", names.join(", "))),
        },
        Operator::Neg => Ok(Op::Neg(arg(0)?)),
        Operator::Add => binary(Bin::Add),
        Operator::Sub => binary(Bin::Sub),
        Operator::Mul => binary(Bin::Mul),
        Operator::Div => binary(Bin::Div),
        Operator::Mod => binary(Bin::Rem),
        Operator::Exp => binary(Bin::Pow),
        Operator::FunctionIdentifier { identifier } => {
            let id = identifier.as_str();
            let mut inner = match kids {
                [only] => only,
                _ => return Err(format!("`{id}` expects an argument")),
            };
            while let (Operator::RootNode, [only]) = (inner.operator(), inner.children()) {
                inner = only;
            }
            let pair = match (id, inner.operator()) {
                ("min", Operator::Tuple) => Some(Bin::Min),
                ("max", Operator::Tuple) => Some(Bin::Max),
                _ => None,
            };
            if let Some(b) = pair {
                let args = inner.children();
                if args.len() != 2 {
                    return Err(format!("`{id}` takes two arguments"));
                }
                return Ok(Op::Bin(
                    b,
                    Box::new(lower(&args[0], names)?),
                    Box::new(lower(&args[1], names)?),
                ));
            }
            match FUNCTIONS.iter().find(|(name, _)| *name == id) {
                Some((_, f)) => Ok(Op::Call(*f, Box::new(lower(inner, names)?))),
                None => Err(format!("unknown function `{id}`")),
            }
        }
        other => Err(format!("unsupported operator `{other}`")),
    }
}

impl Expression {
    /// Parses `source`; every variable it reads must be in `names`.
    pub fn parse(source: &str, names: &[&str]) -> Result<Self, String> {
        let tree = build_operator_tree::<DefaultNumericTypes>(source).map_err(|e| format!("`{source}`: {e}"))?;
        let op = lower(&tree, names).map_err(|e| format!("`{source}`: {e}"))?;
        Ok(Self {
            source: source.to_string(),
            op,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Value at `values`, given in the order of the names passed to
    /// [`Expression::parse`].
    pub fn value(&self, values: &[f64]) -> f64 {
        self.op.eval(&|k| values[k])
    }

    /// Same as [`Expression::value`] with the values split as `head ++ tail`.
    pub fn value_split(&self, head: &[f64], tail: &[f64]) -> f64 {
        let n = head.len();
        self.op.eval(&|k| if k < n { head[k] } else { tail[k - n] })
    }
}

/// Names `{prefix}1, …, {prefix}d`.
pub fn coordinate_names(dim: usize, prefix: &str) -> Vec<String> {
    (1..=dim).map(|k| format!("{prefix}{k}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_with_variables_and_functions() {
        let e = Expression::parse("pi * cos(pi * x1) + x2^2", &["x1", "x2"]).unwrap();
        let v = e.value(&[0.0, 3.0]);
        assert!((v - (std::f64::consts::PI + 9.0)).abs() < 1e-14);
        let abs = Expression::parse("abs(1 - 2*x1) * (1 - 2*x1)", &["x1"]).unwrap();
        assert!((abs.value(&[1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(e.value_split(&[0.0], &[3.0]), v);
    }

    #[test]
    fn rejects_unknown_names_and_bad_syntax() {
        assert!(Expression::parse("x3 + 1", &["x1", "x2"]).unwrap_err().contains("x3"));
        assert!(Expression::parse("sin(", &["x1"]).is_err());
        assert!(Expression::parse("foo(x1)", &["x1"]).is_err());
    }

    #[test]
    fn arithmetic_is_floating_point() {
        let e = Expression::parse("2 * x1 + 1", &["x1"]).unwrap();
        assert_eq!(e.value(&[0.25]), 1.5);
        assert_eq!(Expression::parse("1/2", &[]).unwrap().value(&[]), 0.5);
        assert_eq!(Expression::parse("7 % 4", &[]).unwrap().value(&[]), 3.0);
        assert_eq!(sign(-2.0), -1.0);
    }

    #[test]
    fn precedence_and_two_argument_functions() {
        let e = Expression::parse("-x1^2 + max(x1, 3) - min(1, 2)", &["x1"]).unwrap();
        assert_eq!(e.value(&[2.0]), -4.0 + 3.0 - 1.0);
        assert_eq!(Expression::parse("2^3^2", &[]).unwrap().value(&[]), 64.0);
        assert!((Expression::parse("e^1 - exp(1)", &[]).unwrap().value(&[])).abs() < 1e-15);
        assert!(Expression::parse("max(1)", &[]).is_err());
        assert!(Expression::parse("x1 == 1", &["x1"]).is_err());
        assert!(Expression::parse("a = 1", &[]).is_err());
    }
}
