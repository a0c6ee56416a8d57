//! Complex scalar expressions in the real variables `x` and `y`.
//!
//! ```
//! use cusp_core::expr::Expr;
//! let e = Expr::parse("x^2+y^2-0.25+i*y").unwrap();
//! assert_eq!(e.eval(0.5, 0.0).unwrap(), cusp_core::Complex64::new(0.0, 0.0));
//! ```

mod lexer;
mod parser;
mod print;

use std::fmt;

use num_complex::Complex64;

/// Byte offset into the source. Ignored by equality so that re-parsed trees
/// compare equal to their originals.
#[derive(Debug, Clone, Copy, Default)]
pub struct Offset(pub usize);

impl PartialEq for Offset {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
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
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Re,
    Im,
    Conj,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Sqrt,
        Func::Abs,
        Func::Re,
        Func::Im,
        Func::Conj,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Re => "re",
            Func::Im => "im",
            Func::Conj => "conj",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Exp => z.exp(),
            // Adding +0 clears a negative zero so the principal branch is used on the cut.
            Func::Sqrt => Complex64::new(z.re, z.im + 0.0).sqrt(),
            Func::Abs => Complex64::new(z.norm(), 0.0),
            Func::Re => Complex64::new(z.re, 0.0),
            Func::Im => Complex64::new(z.im, 0.0),
            Func::Conj => z.conj(),
        }
    }
}

/// Expression tree. Literals are non-negative; a leading minus is `Neg`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Imag,
    Var(Var),
    Const(Constant),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        at: Offset,
    },
    Call {
        func: Func,
        arg: Box<Expr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} error at offset {offset}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn lexical(offset: usize, message: impl Into<String>) -> Self {
        Self {
            kind: ParseErrorKind::Lexical,
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn syntax(offset: usize, message: impl Into<String>) -> Self {
        Self {
            kind: ParseErrorKind::Syntax,
            offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("evaluation error: {message} at offset {offset}")]
pub struct EvalError {
    pub offset: usize,
    pub message: String,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        parser::parse(src)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<Complex64, EvalError> {
        Ok(match self {
            Expr::Num(v) => Complex64::new(*v, 0.0),
            Expr::Imag => Complex64::i(),
            Expr::Var(Var::X) => Complex64::new(x, 0.0),
            Expr::Var(Var::Y) => Complex64::new(y, 0.0),
            Expr::Const(Constant::Pi) => Complex64::new(std::f64::consts::PI, 0.0),
            Expr::Const(Constant::E) => Complex64::new(std::f64::consts::E, 0.0),
            Expr::Neg(inner) => Complex64::new(0.0, 0.0) - inner.eval(x, y)?,
            Expr::Call { func, arg } => func.apply(arg.eval(x, y)?),
            Expr::Binary { op, lhs, rhs, at } => {
                let a = lhs.eval(x, y)?;
                let b = rhs.eval(x, y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.re == 0.0 && b.im == 0.0 {
                            return Err(division_by_zero(at.0));
                        }
                        a / b
                    }
                    BinOp::Pow => integer_power(a, b, at.0)?,
                }
            }
        })
    }

    /// True if `x` or `y` occurs anywhere in the tree.
    pub fn depends_on_point(&self) -> bool {
        match self {
            Expr::Var(_) => true,
            Expr::Num(_) | Expr::Imag | Expr::Const(_) => false,
            Expr::Neg(e) | Expr::Call { arg: e, .. } => e.depends_on_point(),
            Expr::Binary { lhs, rhs, .. } => lhs.depends_on_point() || rhs.depends_on_point(),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

fn division_by_zero(offset: usize) -> EvalError {
    EvalError {
        offset,
        message: "division by zero".into(),
    }
}

fn integer_power(base: Complex64, exponent: Complex64, offset: usize) -> Result<Complex64, EvalError> {
    let k = exponent.re;
    if exponent.im != 0.0 || k.fract() != 0.0 || k.abs() > i32::MAX as f64 {
        return Err(EvalError {
            offset,
            message: format!("exponent {exponent} is not an integer"),
        });
    }
    let k = k as i64;
    let mut result = Complex64::new(1.0, 0.0);
    let mut square = base;
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result *= square;
        }
        e >>= 1;
        if e > 0 {
            square *= square;
        }
    }
    if k < 0 {
        if result.re == 0.0 && result.im == 0.0 {
            return Err(division_by_zero(offset));
        }
        result = result.inv();
    }
    Ok(result)
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Lexical => "lexical",
            ParseErrorKind::Syntax => "syntax",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ev(src: &str, x: f64, y: f64) -> Complex64 {
        Expr::parse(src).unwrap().eval(x, y).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(ev("x+i*y", 3.0, 4.0), c(3.0, 4.0));
        assert_eq!(ev("x^2+y^2-0.25+i*y", 0.5, 0.0), c(0.0, 0.0));
        assert_eq!(Expr::parse("0").unwrap(), Expr::Num(0.0));
        assert!(Expr::parse("x*y-0.1+i*(x^2-y^2-0.1)").is_ok());
        assert_eq!(ev("2+3*4", 0.0, 0.0), c(14.0, 0.0));
        assert_eq!(ev("2^3^2", 0.0, 0.0), c(512.0, 0.0));
        assert_eq!(ev("-2^2", 0.0, 0.0), c(-4.0, 0.0));
        assert_eq!(ev("2^-1", 0.0, 0.0), c(0.5, 0.0));
        assert_eq!(ev("sqrt(-4)", 0.0, 0.0), c(0.0, 2.0));
        assert_eq!(ev("abs(3+4*i)", 0.0, 0.0), c(5.0, 0.0));
        assert_eq!(ev("conj(i)+re(2+i)+im(3*i)", 0.0, 0.0), c(5.0, -1.0));
    }

    #[test]
    fn four_term_sum() {
        // ((x^2 + y^2) - 0.25) + i*y
        let e = Expr::parse("x^2+y^2-0.25+i*y").unwrap();
        let mut terms = 1;
        let mut cur = &e;
        while let Expr::Binary {
            op: BinOp::Add | BinOp::Sub,
            lhs,
            ..
        } = cur
        {
            terms += 1;
            cur = lhs;
        }
        assert_eq!(terms, 4);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let err = Expr::parse("2x").unwrap_err();
        assert_eq!((err.kind, err.offset), (ParseErrorKind::Syntax, 1));
        let err = Expr::parse("x + foo").unwrap_err();
        assert_eq!(err.offset, 4);
        let err = Expr::parse("sin(x, y)").unwrap_err();
        assert_eq!(err.offset, 5);
        let err = Expr::parse("(x+1").unwrap_err();
        assert_eq!(err.offset, 4);
        assert_eq!(Expr::parse("x)").unwrap_err().offset, 1);
        assert_eq!(Expr::parse("").unwrap_err().offset, 0);
        assert_eq!(Expr::parse("x @ y").unwrap_err().kind, ParseErrorKind::Lexical);
        assert!(Expr::parse("sin x").is_err());
        assert!(Expr::parse("x*").is_err());
    }

    #[test]
    fn evaluation_errors() {
        let err = Expr::parse("1/(x-1)").unwrap().eval(1.0, 0.0).unwrap_err();
        assert_eq!(err.offset, 1);
        assert!(err.to_string().contains("division by zero at offset 1"));
        assert!(Expr::parse("x^0.5").unwrap().eval(2.0, 0.0).is_err());
        assert!(Expr::parse("x^-1").unwrap().eval(0.0, 0.0).is_err());
        assert!(Expr::parse("x^i").unwrap().eval(2.0, 0.0).is_err());
    }

    #[test]
    fn printing_is_minimal() {
        for (src, printed) in [
            ("(x+y)*2", "(x+y)*2.0"),
            ("x-(y-1)", "x-(y-1.0)"),
            ("(x-y)-1", "x-y-1.0"),
            ("(2^3)^2", "(2.0^3.0)^2.0"),
            ("-(x^2)", "-x^2.0"),
            ("(-x)^2", "(-x)^2.0"),
            ("x^(-y)", "x^-y"),
            ("x/(y*2)", "x/(y*2.0)"),
        ] {
            assert_eq!(Expr::parse(src).unwrap().to_string(), printed);
        }
    }

    /// Tree-walking reference evaluator written without shared helpers.
    fn naive(e: &Expr, x: f64, y: f64) -> Option<Complex64> {
        Some(match e {
            Expr::Num(v) => c(*v, 0.0),
            Expr::Imag => c(0.0, 1.0),
            Expr::Var(Var::X) => c(x, 0.0),
            Expr::Var(Var::Y) => c(y, 0.0),
            Expr::Const(Constant::Pi) => c(std::f64::consts::PI, 0.0),
            Expr::Const(Constant::E) => c(1.0, 0.0).exp(),
            Expr::Neg(a) => c(0.0, 0.0) - naive(a, x, y)?,
            Expr::Call { func, arg } => {
                let z = naive(arg, x, y)?;
                match func {
                    Func::Sin => c(z.re.sin() * z.im.cosh(), z.re.cos() * z.im.sinh()),
                    Func::Cos => c(z.re.cos() * z.im.cosh(), -z.re.sin() * z.im.sinh()),
                    Func::Exp => c(z.im.cos(), z.im.sin()) * z.re.exp(),
                    Func::Sqrt => {
                        let theta = if z.im == 0.0 && z.re < 0.0 { std::f64::consts::PI } else { z.im.atan2(z.re) };
                        Complex64::from_polar(z.norm().sqrt(), theta / 2.0)
                    }
                    Func::Abs => c(z.re.hypot(z.im), 0.0),
                    Func::Re => c(z.re, 0.0),
                    Func::Im => c(z.im, 0.0),
                    Func::Conj => c(z.re, -z.im),
                }
            }
            Expr::Binary { op, lhs, rhs, .. } => {
                let a = naive(lhs, x, y)?;
                let b = naive(rhs, x, y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        let d = b.re * b.re + b.im * b.im;
                        if d == 0.0 {
                            return None;
                        }
                        c((a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d)
                    }
                    BinOp::Pow => {
                        if b.im != 0.0 || b.re.fract() != 0.0 {
                            return None;
                        }
                        let mut acc = c(1.0, 0.0);
                        for _ in 0..(b.re.abs() as i64) {
                            acc *= a;
                        }
                        if b.re < 0.0 {
                            if acc.norm() == 0.0 {
                                return None;
                            }
                            acc = c(1.0, 0.0) / acc;
                        }
                        acc
                    }
                }
            }
        })
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..40).prop_map(|k| Expr::Num(k as f64 * 0.25)),
            Just(Expr::Imag),
            Just(Expr::Var(Var::X)),
            Just(Expr::Var(Var::Y)),
            Just(Expr::Const(Constant::Pi)),
            Just(Expr::Const(Constant::E)),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expr::Binary {
                        op,
                        lhs: Box::new(l),
                        rhs: Box::new(r),
                        at: Offset(0),
                    }),
                (inner.clone(), -3i32..=4).prop_map(|(l, k)| {
                    let rhs = if k < 0 {
                        Expr::Neg(Box::new(Expr::Num(-k as f64)))
                    } else {
                        Expr::Num(k as f64)
                    };
                    Expr::Binary {
                        op: BinOp::Pow,
                        lhs: Box::new(l),
                        rhs: Box::new(rhs),
                        at: Offset(0),
                    }
                }),
                (0usize..8, inner).prop_map(|(k, a)| Expr::Call {
                    func: Func::ALL[k],
                    arg: Box::new(a),
                }),
            ]
        })
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        if a.is_nan() || b.is_nan() {
            return a.is_nan() == b.is_nan();
        }
        if !a.is_finite() || !b.is_finite() {
            return true;
        }
        (a - b).norm() <= 1e-14 * (1.0 + a.norm().max(b.norm())) * 1e2
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = Expr::parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(reparsed.to_string(), printed);
        }

        #[test]
        fn round_trip_preserves_values(e in arb_expr(), pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 100)) {
            let again = Expr::parse(&e.to_string()).unwrap();
            for (x, y) in pts {
                let a = e.eval(x, y);
                let b = again.eval(x, y);
                match (a, b) {
                    (Ok(a), Ok(b)) => prop_assert!(a == b || (a.is_nan() && b.is_nan()) || (a.re.is_nan() || a.im.is_nan())),
                    (Err(_), Err(_)) => {}
                    other => prop_assert!(false, "mismatch {:?}", other),
                }
            }
        }

        #[test]
        fn agrees_with_naive_evaluator(e in arb_expr(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            match (e.eval(x, y), naive(&e, x, y)) {
                (Ok(a), Some(b)) => prop_assert!(close(a, b), "{} vs {} for {}", a, b, e),
                (Err(_), None) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?} for {}", a, b, e),
            }
        }
    }
}
