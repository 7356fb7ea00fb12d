//! A small expression language for defining test functions at run time.
//!
//! Grammar (see `docs/grammar.md` for the EBNF): real literals, `pi`, `e`,
//! variables `t1..tn`, parameters `x1..xp`, unary `-`, binary `+ - * / ^`
//! (`^` binds tightest and is right-associative), the real functions
//! `sin cos exp abs sqrt min max`, the complex exponential `cis(a) = e^{ia}`,
//! and `hs(a, N)`, the truncated series `Σ_{n=1}^{N} (1/n) sin²(a/2ⁿ)`.

mod parser;

use std::fmt;
use std::sync::Arc;

pub use parser::{parse, ParseError, ParseErrorKind};

use crate::error::{Error, EvalFault, Result};
use crate::field::{Field, FieldFunction, ParamField, ParamFieldFunction, C64};

/// Number of `hs` terms when the truncation is omitted.
pub const DEFAULT_HS_TERMS: u32 = 60;

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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
    Min,
    Max,
    Cis,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            "cis" => Func::Cis,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
            Func::Cis => "cis",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// Expression tree. Variables and parameters are stored 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    Var(usize),
    Param(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Hs(Box<Expr>, u32),
}

impl fmt::Display for Expr {
    /// Fully parenthesized; re-parsing the output yields the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Const(Constant::Pi) => write!(f, "pi"),
            Expr::Const(Constant::E) => write!(f, "e"),
            Expr::Var(i) => write!(f, "t{}", i + 1),
            Expr::Param(i) => write!(f, "x{}", i + 1),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
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
            Expr::Hs(a, n) => write!(f, "hs({a}, {n})"),
        }
    }
}

/// `Σ_{n=1}^{terms} (1/n) sin²(t/2ⁿ)`.
pub fn haraux_souplet(t: f64, terms: u32) -> f64 {
    let mut scale = 1.0f64;
    let mut sum = 0.0;
    for n in 1..=terms {
        scale *= 0.5;
        let s = (t * scale).sin();
        sum += s * s / n as f64;
    }
    sum
}

impl Expr {
    /// Whether any parameter `x_k` occurs.
    pub fn uses_params(&self) -> bool {
        match self {
            Expr::Param(_) => true,
            Expr::Num(_) | Expr::Const(_) | Expr::Var(_) => false,
            Expr::Neg(e) | Expr::Hs(e, _) => e.uses_params(),
            Expr::Binary(_, a, b) => a.uses_params() || b.uses_params(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_params),
        }
    }

    /// Evaluates at variables `t` and parameters `x`; the error string names
    /// the domain violation.
    pub fn eval(&self, t: &[f64], x: &[C64]) -> Result<C64, String> {
        let v = match self {
            Expr::Num(v) => C64::new(*v, 0.0),
            Expr::Const(Constant::Pi) => C64::new(std::f64::consts::PI, 0.0),
            Expr::Const(Constant::E) => C64::new(std::f64::consts::E, 0.0),
            Expr::Var(i) => C64::new(t[*i], 0.0),
            Expr::Param(i) => x[*i],
            Expr::Neg(e) => -e.eval(t, x)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(t, x)?, b.eval(t, x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == C64::new(0.0, 0.0) {
                            return Err("division by zero".into());
                        }
                        a / b
                    }
                    BinOp::Pow => power(a, b)?,
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(t, x)?;
                match func {
                    Func::Abs => C64::new(a.norm(), 0.0),
                    Func::Sin => C64::new(real_arg(*func, a)?.sin(), 0.0),
                    Func::Cos => C64::new(real_arg(*func, a)?.cos(), 0.0),
                    Func::Exp => C64::new(real_arg(*func, a)?.exp(), 0.0),
                    Func::Sqrt => {
                        let r = real_arg(*func, a)?;
                        if r < 0.0 {
                            return Err(format!("sqrt of negative value {r}"));
                        }
                        C64::new(r.sqrt(), 0.0)
                    }
                    Func::Cis => {
                        let r = real_arg(*func, a)?;
                        C64::new(r.cos(), r.sin())
                    }
                    Func::Min | Func::Max => {
                        let a = real_arg(*func, a)?;
                        let b = real_arg(*func, args[1].eval(t, x)?)?;
                        C64::new(
                            if *func == Func::Min {
                                a.min(b)
                            } else {
                                a.max(b)
                            },
                            0.0,
                        )
                    }
                }
            }
            Expr::Hs(e, n) => {
                let a = e.eval(t, x)?;
                if a.im != 0.0 {
                    return Err("hs expects a real argument".into());
                }
                C64::new(haraux_souplet(a.re, *n), 0.0)
            }
        };
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err("non-finite result".into());
        }
        Ok(v)
    }
}

fn real_arg(func: Func, a: C64) -> Result<f64, String> {
    if a.im != 0.0 {
        return Err(format!("{} expects a real argument, got {a}", func.name()));
    }
    Ok(a.re)
}

fn power(base: C64, exp: C64) -> Result<C64, String> {
    if base.im == 0.0 && exp.im == 0.0 {
        let (b, e) = (base.re, exp.re);
        if b == 0.0 && e < 0.0 {
            return Err("division by zero (0 raised to a negative power)".into());
        }
        if b < 0.0 && e.fract() != 0.0 {
            return Err(format!("negative base {b} raised to non-integer power {e}"));
        }
        return Ok(C64::new(b.powf(e), 0.0));
    }
    if exp.im == 0.0 && exp.re.fract() == 0.0 && exp.re.abs() <= i32::MAX as f64 {
        if base == C64::new(0.0, 0.0) && exp.re < 0.0 {
            return Err("division by zero (0 raised to a negative power)".into());
        }
        return Ok(base.powi(exp.re as i32));
    }
    if base == C64::new(0.0, 0.0) {
        return Err("complex power of zero".into());
    }
    Ok(base.powc(exp))
}

/// A compiled expression; usable as a [`Field`] and as a [`ParamField`].
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    expr: Arc<Expr>,
    dim: usize,
    params: usize,
}

impl CompiledExpr {
    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    fn run(&self, t: &[f64], x: &[C64], out: &mut [C64]) -> Result<(), EvalFault> {
        out[0] = self.expr.eval(t, x).map_err(|msg| EvalFault::new(t, msg))?;
        Ok(())
    }
}

impl Field for CompiledExpr {
    fn dim(&self) -> usize {
        self.dim
    }
    fn range_dim(&self) -> usize {
        1
    }
    fn eval_into(&self, t: &[f64], out: &mut [C64]) -> Result<(), EvalFault> {
        self.run(t, &[], out)
    }
}

impl ParamField for CompiledExpr {
    fn dim(&self) -> usize {
        self.dim
    }
    fn param_dim(&self) -> usize {
        self.params
    }
    fn range_dim(&self) -> usize {
        1
    }
    fn eval_into(&self, t: &[f64], x: &[C64], out: &mut [C64]) -> Result<(), EvalFault> {
        self.run(t, x, out)
    }
}

/// Output of [`compile`].
#[derive(Debug, Clone)]
pub enum Compiled {
    Field(FieldFunction),
    Param(ParamFieldFunction),
}

/// Compiles an expression over `dim` variables and `params` parameters.
/// Expressions that use parameters become a [`ParamFieldFunction`].
pub fn compile(expr: &Expr, dim: usize, params: usize) -> Compiled {
    let c = CompiledExpr {
        expr: Arc::new(expr.clone()),
        dim,
        params,
    };
    if expr.uses_params() {
        Compiled::Param(ParamFieldFunction::new(c))
    } else {
        Compiled::Field(FieldFunction::new(c).with_label(expr.to_string()))
    }
}

/// Parses and compiles a parameter-free scalar function of `dim` variables.
pub fn field(source: &str, dim: usize) -> Result<FieldFunction> {
    let e = parse(source, dim, 0)?;
    let c = CompiledExpr {
        expr: Arc::new(e),
        dim,
        params: 0,
    };
    Ok(FieldFunction::new(c).with_label(source.trim()))
}

/// Parses and compiles a scalar function of `dim` variables and `params`
/// parameters. Parameter-free sources are accepted and ignore `x`.
pub fn param_field(source: &str, dim: usize, params: usize) -> Result<ParamFieldFunction> {
    let e = parse(source, dim, params)?;
    Ok(ParamFieldFunction::new(CompiledExpr {
        expr: Arc::new(e),
        dim,
        params,
    }))
}

/// Stacks several sources (one per range component) into one function.
pub fn vector_field(sources: &[&str], dim: usize) -> Result<FieldFunction> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument("no function sources".into()));
    }
    let parts = sources
        .iter()
        .map(|s| field(s, dim))
        .collect::<Result<Vec<_>>>()?;
    if parts.len() == 1 {
        return Ok(parts.into_iter().next().unwrap());
    }
    FieldFunction::stack(&parts)
}

/// Stacks scalar parameter sources into `ℝⁿ × ℂᵖ → ℂᵈ`, `d = sources.len()`.
pub fn vector_param_field(
    sources: &[&str],
    dim: usize,
    params: usize,
) -> Result<ParamFieldFunction> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument("no function sources".into()));
    }
    let parts = sources
        .iter()
        .map(|s| param_field(s, dim, params))
        .collect::<Result<Vec<_>>>()?;
    let d = parts.len();
    Ok(ParamFieldFunction::try_from_fn(
        dim,
        params,
        d,
        move |t, x, out| {
            for (k, p) in parts.iter().enumerate() {
                p.eval_into(t, x, &mut out[k..k + 1])?;
            }
            Ok(())
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ev(src: &str, n: usize, t: &[f64]) -> C64 {
        field(src, n).unwrap().eval1(t).unwrap()
    }

    #[test]
    fn odd_functions_vanish_at_zero() {
        assert_eq!(ev("sin(t1)+sin(sqrt(2)*t1)", 1, &[0.0]).re, 0.0);
        assert_eq!(ev("hs(t1, 50)", 1, &[0.0]).re, 0.0);
    }

    #[test]
    fn power_is_right_associative_and_binds_tighter_than_minus() {
        assert_eq!(ev("2^3^2", 1, &[0.0]).re, 512.0);
        assert_eq!(ev("-2^2", 1, &[0.0]).re, -4.0);
        assert_eq!(ev("2^-1", 1, &[0.0]).re, 0.5);
        assert_eq!(ev("1-2-3", 1, &[0.0]).re, -4.0);
        assert_eq!(ev("8/2/2", 1, &[0.0]).re, 2.0);
        assert_eq!(ev("1+2*3", 1, &[0.0]).re, 7.0);
    }

    #[test]
    fn constants_and_cis() {
        assert_eq!(ev("1", 3, &[5.0, 6.0, 7.0]).re, 1.0);
        let z = ev("cis(t1+2*t2)", 2, &[PI, 0.0]);
        assert!((z - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((ev("e", 1, &[0.0]).re - std::f64::consts::E).abs() == 0.0);
        assert_eq!(ev("max(t1, 3) - min(t1, 3)", 1, &[1.0]).re, 2.0);
        assert_eq!(ev("abs(cis(t1))", 1, &[0.7]).re, 1.0);
    }

    #[test]
    fn hs_matches_direct_summation() {
        let t = 1024.0 * PI;
        let mut oracle = 0.0;
        for n in 1..=50 {
            let s = (t / 2f64.powi(n)).sin();
            oracle += s * s / n as f64;
        }
        let got = ev("hs(t1,50)", 1, &[t]).re;
        assert!((got - oracle).abs() < 1e-12);
        // default truncation
        let d = ev("hs(t1)", 1, &[3.0]).re;
        assert_eq!(d, haraux_souplet(3.0, DEFAULT_HS_TERMS));
    }

    #[test]
    fn syntax_errors_carry_position_and_expected_set() {
        let err = parse("sin(t1 +", 1, 0).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!((err.line, err.column), (1, 9));
        assert!(!err.expected.is_empty());

        let err = parse("1 +\n  * 2", 1, 0).unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));

        let err = parse("sin(t1) t1", 1, 0).unwrap_err();
        assert_eq!(err.column, 9);
        assert!(parse("", 1, 0).is_err());
        assert!(parse("2 $ 3", 1, 0).is_err());
    }

    #[test]
    fn semantic_errors() {
        assert_eq!(
            parse("foo(t1)", 1, 0).unwrap_err().kind,
            ParseErrorKind::UnknownIdentifier
        );
        assert_eq!(
            parse("sin(t1, t1)", 1, 0).unwrap_err().kind,
            ParseErrorKind::Arity
        );
        assert_eq!(
            parse("min(t1)", 1, 0).unwrap_err().kind,
            ParseErrorKind::Arity
        );
        assert_eq!(
            parse("hs(t1, 0)", 1, 0).unwrap_err().kind,
            ParseErrorKind::Arity
        );
        assert_eq!(
            parse("hs(t1, 2.5)", 1, 0).unwrap_err().kind,
            ParseErrorKind::Arity
        );
        assert_eq!(
            parse("t3", 2, 0).unwrap_err().kind,
            ParseErrorKind::VariableOutOfRange
        );
        assert_eq!(
            parse("t0", 2, 0).unwrap_err().kind,
            ParseErrorKind::VariableOutOfRange
        );
        assert_eq!(
            parse("x1", 1, 0).unwrap_err().kind,
            ParseErrorKind::VariableOutOfRange
        );
    }

    #[test]
    fn evaluation_faults_carry_point() {
        let f = field("1/t1", 1).unwrap();
        match f.eval(&[0.0]) {
            Err(Error::Eval(fault)) => {
                assert_eq!(fault.point, vec![0.0]);
                assert!(fault.message.contains("division by zero"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(field("sqrt(t1)", 1).unwrap().eval(&[-1.0]).is_err());
        assert!(field("(-2)^0.5", 1).unwrap().eval(&[0.0]).is_err());
        assert!(field("sin(cis(t1))", 1).unwrap().eval(&[1.0]).is_err());
        assert!(field("exp(t1)", 1).unwrap().eval(&[1000.0]).is_err());
    }

    #[test]
    fn parameters_produce_param_fields() {
        let e = parse("x1 * sin(t1)", 1, 1).unwrap();
        match compile(&e, 1, 1) {
            Compiled::Param(p) => {
                let v = p.eval(&[PI / 2.0], &[C64::new(3.0, 0.0)]).unwrap();
                assert!((v[0].re - 3.0).abs() < 1e-15);
            }
            Compiled::Field(_) => panic!("expected a parameterized function"),
        }
        let e = parse("sin(t1)", 1, 0).unwrap();
        assert!(matches!(compile(&e, 1, 0), Compiled::Field(_)));
    }

    #[test]
    fn print_round_trip_examples() {
        for src in [
            "sin(t1)+sin(sqrt(2)*t1)",
            "-2^-3^2",
            "hs(t1*pi, 7) - cis(t2)/e",
            "min(x1, 1e-7) * max(t1, 12345678901234567890)",
            "0.1 + 0.2 - .5",
        ] {
            let e = parse(src, 2, 1).unwrap();
            let again = parse(&e.to_string(), 2, 1).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            Just(Expr::Const(Constant::Pi)),
            Just(Expr::Const(Constant::E)),
            (0usize..2).prop_map(Expr::Var),
            Just(Expr::Param(0)),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Binary(
                        op,
                        Box::new(a),
                        Box::new(b)
                    )),
                (
                    prop_oneof![
                        Just(Func::Sin),
                        Just(Func::Cos),
                        Just(Func::Exp),
                        Just(Func::Abs),
                        Just(Func::Sqrt),
                        Just(Func::Cis)
                    ],
                    inner.clone()
                )
                    .prop_map(|(f, a)| Expr::Call(f, vec![a])),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Call(Func::Max, vec![a, b])),
                (inner, 1u32..80).prop_map(|(a, n)| Expr::Hs(Box::new(a), n)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse(&printed, 2, 1).unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn hs_respects_termwise_bound(t in -1e6f64..1e6, n in 1u32..80) {
            let v = haraux_souplet(t, n);
            let harmonic: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
            prop_assert!(v >= 0.0);
            prop_assert!(v <= harmonic + 1e-12);
        }

        #[test]
        fn compiled_evaluation_is_referentially_transparent(t in -50.0f64..50.0) {
            let f = field("sin(t1)*exp(-abs(t1)/10) + hs(t1, 20)", 1).unwrap();
            prop_assert_eq!(f.eval(&[t]).unwrap(), f.eval(&[t]).unwrap());
        }
    }
}
