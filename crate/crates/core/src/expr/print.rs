use std::fmt;

use super::{BinOp, Constant, Expr, Var};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => match op {
            BinOp::Add | BinOp::Sub => PREC_ADD,
            BinOp::Mul | BinOp::Div => PREC_MUL,
            BinOp::Pow => PREC_POW,
        },
        Expr::Neg(_) => PREC_NEG,
        _ => PREC_ATOM,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Imag => f.write_str("i"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::Y) => f.write_str("y"),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Const(Constant::E) => f.write_str("e"),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                write_wrapped(f, inner, precedence(inner) < PREC_NEG)
            }
            Expr::Call { func, arg } => write!(f, "{}({arg})", func.name()),
            Expr::Binary { op, lhs, rhs, .. } => {
                let p = precedence(self);
                let (lwrap, rwrap) = if *op == BinOp::Pow {
                    (precedence(lhs) <= PREC_POW, precedence(rhs) < PREC_NEG)
                } else {
                    (precedence(lhs) < p, precedence(rhs) <= p)
                };
                write_wrapped(f, lhs, lwrap)?;
                f.write_str(op.symbol())?;
                write_wrapped(f, rhs, rwrap)
            }
        }
    }
}
