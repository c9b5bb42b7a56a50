//! Radial shapes `v(x) >= 0` of attractive potentials `V = -g v(x)`, with
//! `x = r / R` dimensionless.
//!
//! Every [`Potential`] is validated on construction: non-negative on a
//! log-spaced grid over `[1e-6, 1e3]`, less singular than `1/x` at the
//! origin, and decaying faster than `1/x` (a sampled, heuristic check).

mod expr;
mod table;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::SyntaxError;
pub use table::{parse_table, Interpolation, Tabulated};

/// Number of validation samples, log-spaced over `[VALIDATION_LO, VALIDATION_HI]`.
pub const VALIDATION_POINTS: usize = 1000;
pub const VALIDATION_LO: f64 = 1e-6;
pub const VALIDATION_HI: f64 = 1e3;
/// Negative values down to this are treated as round-off and clamped.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;
/// Minimum number of rows in a potential table.
pub const MIN_TABLE_ROWS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("unknown built-in potential `{0}` (expected exp, sech2, gauss or xexp)")]
    UnknownBuiltin(String),
    #[error("expression syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("table abscissae must increase strictly (row {index}, x = {x})")]
    NotIncreasing { index: usize, x: f64 },
    #[error("potential fails `{invariant}` at x = {x:e} (v = {value:e})")]
    Validation {
        invariant: &'static str,
        x: f64,
        value: f64,
    },
}

impl PotentialError {
    /// True for errors raised by the shape invariants rather than by input
    /// syntax or I/O.
    pub fn is_validation(&self) -> bool {
        matches!(self, PotentialError::Validation { .. })
    }
}

/// The four shapes used throughout the reference tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    /// `exp(-x)`
    Exp,
    /// `1 / cosh(x)^2`
    Sech2,
    /// `exp(-x^2)`
    Gauss,
    /// `x exp(-x)`
    Xexp,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [Builtin::Exp, Builtin::Sech2, Builtin::Gauss, Builtin::Xexp];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Exp => "exp",
            Builtin::Sech2 => "sech2",
            Builtin::Gauss => "gauss",
            Builtin::Xexp => "xexp",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Builtin::Exp => "exp(-x)",
            Builtin::Sech2 => "cosh(x)^-2",
            Builtin::Gauss => "exp(-x^2)",
            Builtin::Xexp => "x*exp(-x)",
        }
    }

    pub fn origin_exponent(self) -> f64 {
        match self {
            Builtin::Xexp => 1.0,
            _ => 0.0,
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Builtin::Exp => (-x).exp(),
            Builtin::Sech2 => {
                let c = x.cosh();
                1.0 / (c * c)
            }
            Builtin::Gauss => (-x * x).exp(),
            Builtin::Xexp => x * (-x).exp(),
        }
    }
}

impl FromStr for Builtin {
    type Err = PotentialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| PotentialError::UnknownBuiltin(s.to_string()))
    }
}

/// Behaviour of `x v(x)` at large `x`, judged from samples at 1e2 and 1e3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayClass {
    FasterThanInverse,
    Borderline,
    Slower,
}

/// Where a potential comes from; the command-line `--potential` argument.
///
/// Text forms: a built-in name, `expr:<expression>`, `table:<path>` (cubic
/// spline) or `table-linear:<path>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum PotentialSpec {
    Builtin { name: Builtin },
    Expression { src: String },
    Table { path: PathBuf, interpolation: Interpolation },
}

impl FromStr for PotentialSpec {
    type Err = PotentialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(src) = s.strip_prefix("expr:") {
            Ok(PotentialSpec::Expression { src: src.to_string() })
        } else if let Some(p) = s.strip_prefix("table:") {
            Ok(PotentialSpec::Table {
                path: p.into(),
                interpolation: Interpolation::CubicSpline,
            })
        } else if let Some(p) = s.strip_prefix("table-linear:") {
            Ok(PotentialSpec::Table {
                path: p.into(),
                interpolation: Interpolation::Linear,
            })
        } else {
            Ok(PotentialSpec::Builtin { name: s.parse()? })
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Builtin { name } => f.write_str(name.name()),
            PotentialSpec::Expression { src } => write!(f, "expr:{src}"),
            PotentialSpec::Table {
                path,
                interpolation: Interpolation::CubicSpline,
            } => write!(f, "table:{}", path.display()),
            PotentialSpec::Table { path, .. } => write!(f, "table-linear:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Builtin(Builtin),
    Expr(Arc<expr::Expr>),
    Table(Arc<Tabulated>),
    /// `inner(x / lambda)`
    Scaled(Box<Shape>, f64),
}

impl Shape {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Shape::Builtin(b) => b.eval(x),
            Shape::Expr(e) => e.eval(x),
            Shape::Table(t) => t.eval(x),
            Shape::Scaled(inner, lambda) => inner.eval(x / lambda),
        }
    }
}

/// A validated radial shape; cheap to clone and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Potential {
    name: String,
    shape: Shape,
    origin_exponent: f64,
    decay: DecayClass,
    zero: bool,
}

/// The validation abscissae.
pub fn validation_grid() -> Vec<f64> {
    let ratio = VALIDATION_HI / VALIDATION_LO;
    (0..VALIDATION_POINTS)
        .map(|i| VALIDATION_LO * ratio.powf(i as f64 / (VALIDATION_POINTS - 1) as f64))
        .collect()
}

impl Potential {
    pub fn builtin(name: &str) -> Result<Self, PotentialError> {
        Ok(Self::from_builtin(name.parse()?))
    }

    pub fn from_builtin(b: Builtin) -> Self {
        Self::validated(b.name().to_string(), Shape::Builtin(b), Some(b.origin_exponent()))
            .expect("built-in shapes satisfy the invariants")
    }

    pub fn parse_expression(src: &str) -> Result<Self, PotentialError> {
        let e = expr::parse(src)?;
        Self::validated(format!("expr:{src}"), Shape::Expr(Arc::new(e)), None)
    }

    pub fn load_table(path: &Path, interpolation: Interpolation) -> Result<Self, PotentialError> {
        let (xs, vs) = table::read_table(path)?;
        let name = match interpolation {
            Interpolation::CubicSpline => format!("table:{}", path.display()),
            Interpolation::Linear => format!("table-linear:{}", path.display()),
        };
        Self::from_samples(&name, xs, vs, interpolation)
    }

    /// Potential interpolating in-memory samples.
    pub fn from_samples(
        name: &str,
        xs: Vec<f64>,
        vs: Vec<f64>,
        interpolation: Interpolation,
    ) -> Result<Self, PotentialError> {
        if xs.len() < MIN_TABLE_ROWS {
            return Err(PotentialError::Table {
                line: 0,
                message: format!("need at least {MIN_TABLE_ROWS} rows, found {}", xs.len()),
            });
        }
        if let Some(i) = vs.iter().position(|&v| v < -NEGATIVITY_TOLERANCE) {
            return Err(PotentialError::Validation {
                invariant: "v(x) >= 0",
                x: xs[i],
                value: vs[i],
            });
        }
        let t = Tabulated::new(xs, vs, interpolation)?;
        Self::validated(name.to_string(), Shape::Table(Arc::new(t)), None)
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self, PotentialError> {
        match spec {
            PotentialSpec::Builtin { name } => Ok(Self::from_builtin(*name)),
            PotentialSpec::Expression { src } => Self::parse_expression(src),
            PotentialSpec::Table { path, interpolation } => Self::load_table(path, *interpolation),
        }
    }

    fn validated(name: String, shape: Shape, origin: Option<f64>) -> Result<Self, PotentialError> {
        let grid = validation_grid();
        let mut peak = 0.0_f64;
        for &x in &grid {
            let v = shape.eval(x);
            if !v.is_finite() {
                return Err(PotentialError::Validation {
                    invariant: "v(x) finite",
                    x,
                    value: v,
                });
            }
            if v < -NEGATIVITY_TOLERANCE {
                return Err(PotentialError::Validation {
                    invariant: "v(x) >= 0",
                    x,
                    value: v,
                });
            }
            peak = peak.max(v);
        }
        let zero = peak == 0.0;
        let at = |x: f64| shape.eval(x).max(0.0);
        let origin_exponent = match origin {
            Some(s) => s,
            None => {
                let (v0, v1) = (at(1e-6), at(1e-5));
                if v0 == 0.0 && v1 == 0.0 {
                    // Vanishes near the origin: no constraint from this end.
                    f64::INFINITY
                } else {
                    (v1 / v0).ln() / 10f64.ln()
                }
            }
        };
        if !(origin_exponent > -1.0) {
            return Err(PotentialError::Validation {
                invariant: "less singular than 1/x at the origin",
                x: 1e-6,
                value: at(1e-6),
            });
        }
        let (t2, t3) = (1e2 * at(1e2), 1e3 * at(1e3));
        let decay = if t3 <= 1e-12 * peak.max(f64::MIN_POSITIVE) || t3 < 0.9 * t2 {
            DecayClass::FasterThanInverse
        } else if t3 <= 1.1 * t2 {
            DecayClass::Borderline
        } else {
            DecayClass::Slower
        };
        if decay != DecayClass::FasterThanInverse {
            return Err(PotentialError::Validation {
                invariant: "x v(x) -> 0 as x -> infinity",
                x: 1e3,
                value: at(1e3),
            });
        }
        Ok(Self {
            name,
            shape,
            origin_exponent,
            decay,
            zero,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `s` with `v(x) ~ x^s` as `x -> 0`; infinite when `v` vanishes there.
    pub fn origin_exponent(&self) -> f64 {
        self.origin_exponent
    }

    pub fn decay_class(&self) -> DecayClass {
        self.decay
    }

    /// True when every validation sample is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// `v(x)`, clamped at zero so spline undershoot never goes negative.
    pub fn eval(&self, x: f64) -> f64 {
        self.shape.eval(x).max(0.0)
    }

    /// `sqrt(v(x))`, zero where `v` is subnormal and carries too few bits
    /// to be smooth.
    pub fn sqrt_eval(&self, x: f64) -> f64 {
        let v = self.eval(x);
        if v < f64::MIN_POSITIVE {
            0.0
        } else {
            v.sqrt()
        }
    }

    /// `v(x / lambda)`; `lambda > 1` stretches the shape outward.
    pub fn rescaled(&self, lambda: f64) -> Self {
        assert!(lambda.is_finite() && lambda > 0.0, "scale must be positive");
        Self {
            name: format!("{}@{lambda}", self.name),
            shape: Shape::Scaled(Box::new(self.shape.clone()), lambda),
            ..self.clone()
        }
    }

    /// Table text (`x v` per line, shortest round-trip decimals) sampling
    /// the shape at `xs`.
    pub fn to_table(&self, xs: &[f64]) -> String {
        let mut out = format!("# {}\n", self.name);
        for &x in xs {
            out.push_str(&format!("{x:e} {:e}\n", self.eval(x)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        assert_eq!(Potential::builtin("exp").unwrap().eval(0.0), 1.0);
        assert_eq!(Potential::builtin("sech2").unwrap().eval(0.0), 1.0);
        let c = 0.7f64.cosh();
        assert_eq!(Potential::builtin("sech2").unwrap().eval(0.7), 1.0 / (c * c));
        assert!((Potential::builtin("xexp").unwrap().eval(1.0) - 0.36787944117144233).abs() < 1e-16);
        assert!(matches!(
            Potential::builtin("yukawa"),
            Err(PotentialError::UnknownBuiltin(_))
        ));
        let exps: Vec<f64> = Builtin::ALL.iter().map(|b| b.origin_exponent()).collect();
        assert_eq!(exps, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn expressions_match_builtins() {
        for b in Builtin::ALL {
            let e = Potential::parse_expression(b.formula()).unwrap();
            let p = Potential::from_builtin(b);
            for x in validation_grid() {
                let (u, v) = (e.eval(x), p.eval(x));
                assert!((u - v).abs() <= 1e-15, "{b:?} x={x}");
            }
            assert!((e.origin_exponent() - b.origin_exponent()).abs() < 1e-4);
        }
        let g = Potential::parse_expression("exp(-x^2)").unwrap();
        assert!((g.eval(2.0) - 0.01831563888873418).abs() < 1e-17);
    }

    #[test]
    fn validation_failures_name_the_invariant() {
        match Potential::parse_expression("x - 2") {
            Err(PotentialError::Validation { invariant, x, .. }) => {
                assert_eq!(invariant, "v(x) >= 0");
                assert!(x < 2.0);
            }
            other => panic!("{other:?}"),
        }
        for (src, inv) in [
            ("1/x", "less singular than 1/x at the origin"),
            ("1/(1+x)", "x v(x) -> 0 as x -> infinity"),
            ("1/sqrt(1+x)", "x v(x) -> 0 as x -> infinity"),
            ("ln(x)^2", "x v(x) -> 0 as x -> infinity"),
            ("ln(x - 1)", "v(x) finite"),
        ] {
            match Potential::parse_expression(src) {
                Err(PotentialError::Validation { invariant, .. }) => assert_eq!(invariant, inv, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
        assert!(Potential::parse_expression("exp(-x) - 1e-13").is_ok());
        assert!(Potential::parse_expression("1/(1+x^2)").is_ok());
        assert!(Potential::parse_expression("x^-0.5*exp(-x)").is_ok());
    }

    #[test]
    fn zero_potential_constructs() {
        let z = Potential::parse_expression("0").unwrap();
        assert!(z.is_zero());
        assert_eq!(z.eval(1.0), 0.0);
        assert!(!Potential::builtin("gauss").unwrap().is_zero());
    }

    #[test]
    fn table_round_trip() {
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| 1e-4 * (5e5f64).powf(i as f64 / (n - 1) as f64))
            .collect();
        for b in Builtin::ALL {
            let p = Potential::from_builtin(b);
            let text = p.to_table(&xs);
            let (tx, tv) = parse_table(&text).unwrap();
            let q = Potential::from_samples("rt", tx, tv, Interpolation::CubicSpline).unwrap();
            for i in 0..500 {
                let x = 1e-3 + (20.0 - 1e-3) * i as f64 / 499.0;
                assert!((p.eval(x) - q.eval(x)).abs() < 1e-8, "{b:?} x={x}");
            }
        }
    }

    #[test]
    fn table_rules() {
        // Starts near the origin: the power-law head is fitted to the first two rows.
        let xs: Vec<f64> = (0..10).map(|k| 1e-3 * 3f64.powi(k)).collect();
        let mut vs: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
        assert!(Potential::from_samples("t", xs.clone(), vs.clone(), Interpolation::Linear).is_ok());
        vs[3] = -0.1;
        assert!(matches!(
            Potential::from_samples("t", xs.clone(), vs, Interpolation::Linear),
            Err(PotentialError::Validation { .. })
        ));
        assert!(Potential::from_samples("t", xs[..5].to_vec(), vec![1.0; 5], Interpolation::Linear).is_err());
        let flat = Potential::from_samples("t", xs, vec![1.0; 10], Interpolation::Linear);
        assert!(matches!(flat, Err(PotentialError::Validation { .. })));
    }

    #[test]
    fn rescaling() {
        let p = Potential::from_builtin(Builtin::Exp);
        let q = p.rescaled(2.0);
        assert_eq!(q.eval(2.0), p.eval(1.0));
        assert_eq!(q.origin_exponent(), 0.0);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "gauss".parse::<PotentialSpec>().unwrap(),
            PotentialSpec::Builtin { name: Builtin::Gauss }
        );
        let s: PotentialSpec = "expr:x*exp(-x)".parse().unwrap();
        assert_eq!(s.to_string(), "expr:x*exp(-x)");
        let s: PotentialSpec = "table-linear:/tmp/v.dat".parse().unwrap();
        assert_eq!(s.to_string(), "table-linear:/tmp/v.dat");
        assert!("bogus".parse::<PotentialSpec>().is_err());
    }
}
