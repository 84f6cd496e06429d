use std::fmt;

use crate::error::{FinslerError, Result};
use crate::jets::{Budget, Jet};

/// A chart variable, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X(usize),
    Y(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::Y(i) => write!(f, "y{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

/// Expression tree over `x1..xn`, `y1..yn`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }
    pub fn x(i: usize) -> Expr {
        Expr::Var(Var::X(i))
    }
    pub fn y(i: usize) -> Expr {
        Expr::Var(Var::Y(i))
    }
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }
    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }
    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::Pow(Box::new(a), Box::new(b))
    }
    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }
    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    /// Sum of terms, `0` when empty.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms.into_iter().reduce(Expr::add).unwrap_or(Expr::Num(0.0))
    }

    /// Visits every variable occurrence.
    pub fn for_each_var(&self, f: &mut impl FnMut(Var)) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Neg(a) | Expr::Call(_, a) => a.for_each_var(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }

    /// Value of a variable-free subtree.
    pub fn const_value(&self) -> Option<f64> {
        let mut has_var = false;
        self.for_each_var(&mut |_| has_var = true);
        if has_var {
            None
        } else {
            self.eval(&[], &[]).ok()
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let var = |v: &Var| -> Result<f64> {
            match *v {
                Var::X(i) => x.get(i).copied(),
                Var::Y(i) => y.get(i).copied(),
            }
            .ok_or_else(|| FinslerError::VariableOutOfRange { name: v.to_string(), dim: x.len() })
        };
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => var(v)?,
            Expr::Neg(a) => -a.eval(x, y)?,
            Expr::Add(a, b) => a.eval(x, y)? + b.eval(x, y)?,
            Expr::Sub(a, b) => a.eval(x, y)? - b.eval(x, y)?,
            Expr::Mul(a, b) => a.eval(x, y)? * b.eval(x, y)?,
            Expr::Div(a, b) => a.eval(x, y)? / b.eval(x, y)?,
            Expr::Pow(a, b) => {
                let base = a.eval(x, y)?;
                match b.const_value() {
                    Some(p) if p.fract() == 0.0 && p.abs() < 64.0 => base.powi(p as i32),
                    Some(p) => base.powf(p),
                    None => base.powf(b.eval(x, y)?),
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(x, y)?;
                match f {
                    Func::Sqrt => v.sqrt(),
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
        })
    }

    pub fn eval_jet(&self, x: &[f64], y: &[f64], budget: Budget) -> Result<Jet> {
        let n = x.len();
        Ok(match self {
            Expr::Num(v) => Jet::constant(n, budget, *v),
            Expr::Var(Var::X(i)) => Jet::var_x(n, budget, x[*i], *i),
            Expr::Var(Var::Y(i)) => Jet::var_y(n, budget, y[*i], *i),
            Expr::Neg(a) => -a.eval_jet(x, y, budget)?,
            Expr::Add(a, b) => a.eval_jet(x, y, budget)? + b.eval_jet(x, y, budget)?,
            Expr::Sub(a, b) => a.eval_jet(x, y, budget)? - b.eval_jet(x, y, budget)?,
            Expr::Mul(a, b) => a.eval_jet(x, y, budget)? * b.eval_jet(x, y, budget)?,
            Expr::Div(a, b) => a.eval_jet(x, y, budget)?.div(&b.eval_jet(x, y, budget)?)?,
            Expr::Pow(a, b) => {
                let base = a.eval_jet(x, y, budget)?;
                match b.const_value() {
                    Some(p) => base.powf(p)?,
                    None => (b.eval_jet(x, y, budget)? * base.ln()?).exp()?,
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval_jet(x, y, budget)?;
                match f {
                    Func::Sqrt => v.sqrt()?,
                    Func::Exp => v.exp()?,
                    Func::Ln => v.ln()?,
                    Func::Sin => v.sin()?,
                    Func::Cos => v.cos()?,
                }
            }
        })
    }
}

fn fmt_num(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v.is_sign_negative() {
        write!(f, "(-{:?})", -v)
    } else {
        write!(f, "{v:?}")
    }
}

/// Fully parenthesised, so printing and re-parsing gives back the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => fmt_num(*v, f),
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
