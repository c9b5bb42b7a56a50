use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PotentialError;

/// How tabulated values are joined between abscissae.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    CubicSpline,
    Linear,
}

/// Interpolant through `(x, v)` samples with analytic extrapolation:
/// `c x^s` below the first abscissa and `c e^{-kappa x}` beyond the last,
/// each fitted to the two nearest samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    xs: Vec<f64>,
    vs: Vec<f64>,
    /// Second derivatives of the natural spline (empty for linear).
    m: Vec<f64>,
    interpolation: Interpolation,
    head_power: f64,
    tail_rate: f64,
}

impl Tabulated {
    pub fn new(xs: Vec<f64>, vs: Vec<f64>, interpolation: Interpolation) -> Result<Self, PotentialError> {
        if xs.len() != vs.len() || xs.len() < 2 {
            return Err(PotentialError::Table {
                line: 0,
                message: "need at least two (x, v) pairs".into(),
            });
        }
        if let Some(i) = xs.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(PotentialError::Table {
                line: 0,
                message: format!("abscissa {} at index {i} is not positive", xs[i]),
            });
        }
        if let Some(i) = (1..xs.len()).find(|&i| xs[i] <= xs[i - 1]) {
            return Err(PotentialError::NotIncreasing { index: i, x: xs[i] });
        }
        if let Some(i) = vs.iter().position(|v| !v.is_finite()) {
            return Err(PotentialError::Table {
                line: 0,
                message: format!("ordinate at index {i} is not finite"),
            });
        }
        let n = xs.len();
        let head_power = {
            let s = (vs[1] / vs[0]).ln() / (xs[1] / xs[0]).ln();
            if s.is_finite() {
                s
            } else {
                0.0
            }
        };
        let tail_rate = {
            let k = (vs[n - 2] / vs[n - 1]).ln() / (xs[n - 1] - xs[n - 2]);
            if k.is_nan() || k < 0.0 {
                0.0
            } else {
                k
            }
        };
        let m = match interpolation {
            Interpolation::Linear => Vec::new(),
            Interpolation::CubicSpline => natural_spline(&xs, &vs),
        };
        Ok(Self {
            xs,
            vs,
            m,
            interpolation,
            head_power,
            tail_rate,
        })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn vs(&self) -> &[f64] {
        &self.vs
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            if self.vs[0] == 0.0 {
                return 0.0;
            }
            return self.vs[0] * (x / self.xs[0]).powf(self.head_power);
        }
        if x >= self.xs[n - 1] {
            if self.vs[n - 1] == 0.0 || self.tail_rate.is_infinite() {
                return 0.0;
            }
            return self.vs[n - 1] * (-self.tail_rate * (x - self.xs[n - 1])).exp();
        }
        let k = self.xs.partition_point(|&xi| xi <= x) - 1;
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let (v0, v1) = (self.vs[k], self.vs[k + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        match self.interpolation {
            Interpolation::Linear => a * v0 + b * v1,
            Interpolation::CubicSpline => {
                a * v0
                    + b * v1
                    + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
            }
        }
    }
}

/// Second derivatives of the natural cubic spline (Thomas algorithm).
fn natural_spline(xs: &[f64], vs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let rhs = 6.0 * ((vs[i + 1] - vs[i]) / h1 - (vs[i] - vs[i - 1]) / h0);
        let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
        c[i] = h1 / diag;
        d[i] = (rhs - h0 * d[i - 1]) / diag;
    }
    for i in (1..n - 1).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    m
}

/// Parses a two-column text table: `x v` per line, separated by whitespace
/// or a comma; `#` starts a comment; blank lines are skipped.
pub fn parse_table(text: &str) -> Result<(Vec<f64>, Vec<f64>), PotentialError> {
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let bad = |message: String| PotentialError::Table {
            line: i + 1,
            message,
        };
        if fields.len() != 2 {
            return Err(bad(format!("expected 2 columns, found {}", fields.len())));
        }
        let num = |f: &str| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("`{f}` is not a finite number")))
        };
        let (x, v) = (num(fields[0])?, num(fields[1])?);
        if let Some(&prev) = xs.last() {
            if x <= prev {
                return Err(PotentialError::NotIncreasing { index: xs.len(), x });
            }
        }
        xs.push(x);
        vs.push(v);
    }
    Ok((xs, vs))
}

pub(crate) fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), PotentialError> {
    let text = std::fs::read_to_string(path).map_err(|e| PotentialError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_table(&text)
}
