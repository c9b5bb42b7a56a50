use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{gauss_legendre, pairwise_sum, QuadratureError};

/// Map from the reference variable `t` to the integration variable `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainMap {
    /// `x = t` on whatever breakpoints the caller supplied.
    Identity,
    /// `x = scale * t / (1 - t)`, `t` in (0, 1).
    Rational { scale: f64 },
    /// `x = -scale * ln(1 - t)`, `t` in (0, 1).
    Exponential { scale: f64 },
    /// `x = x_max * t`, `t` in (0, 1); the tail beyond `x_max` is dropped.
    Truncated { x_max: f64 },
}

impl DomainMap {
    /// `(x, dx/dt)` at `t`.
    fn apply(&self, t: f64) -> (f64, f64) {
        match *self {
            DomainMap::Identity => (t, 1.0),
            DomainMap::Rational { scale } => {
                let u = 1.0 - t;
                (scale * t / u, scale / (u * u))
            }
            DomainMap::Exponential { scale } => {
                let u = 1.0 - t;
                (-scale * (-t).ln_1p(), scale / u)
            }
            DomainMap::Truncated { x_max } => (x_max * t, x_max),
        }
    }

    fn parameter(&self) -> f64 {
        match *self {
            DomainMap::Identity => 1.0,
            DomainMap::Rational { scale } | DomainMap::Exponential { scale } => scale,
            DomainMap::Truncated { x_max } => x_max,
        }
    }
}

impl fmt::Display for DomainMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DomainMap::Identity => write!(f, "identity"),
            DomainMap::Rational { scale } if scale == 1.0 => write!(f, "rational"),
            DomainMap::Rational { scale } => write!(f, "rational:{scale}"),
            DomainMap::Exponential { scale } if scale == 1.0 => write!(f, "exp"),
            DomainMap::Exponential { scale } => write!(f, "exp:{scale}"),
            DomainMap::Truncated { x_max } => write!(f, "trunc:{x_max}"),
        }
    }
}

impl FromStr for DomainMap {
    type Err = String;

    /// `rational[:scale]`, `exp[:scale]` or `trunc:X`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let number = |a: Option<&str>, default: Option<f64>| -> Result<f64, String> {
            match (a, default) {
                (Some(a), _) => a
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v > 0.0)
                    .ok_or_else(|| format!("invalid map parameter `{a}`")),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(format!("map `{head}` needs a parameter")),
            }
        };
        match head {
            "rational" => Ok(DomainMap::Rational {
                scale: number(arg, Some(1.0))?,
            }),
            "exp" => Ok(DomainMap::Exponential {
                scale: number(arg, Some(1.0))?,
            }),
            "trunc" => Ok(DomainMap::Truncated {
                x_max: number(arg, None)?,
            }),
            _ => Err(format!(
                "unknown grid map `{s}` (expected rational, exp or trunc:X)"
            )),
        }
    }
}

/// Recipe for a composite Gauss–Legendre grid on (0, inf).
///
/// Panels are uniform in an auxiliary variable `u`, which is graded
/// algebraically toward both ends, `t = u^a / (u^a + (1-u)^b)`, before the
/// domain map. Endpoint power and log behaviour in `x` becomes smooth in
/// `u`, and doubling `panels` nests the breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub map: DomainMap,
    pub panels: usize,
    pub n_per_panel: usize,
    pub grade_left: f64,
    pub grade_right: f64,
}

impl GridSpec {
    /// 24 panels of 16 nodes on the rational map; used for variational bounds.
    pub fn bound_default() -> Self {
        Self {
            map: DomainMap::Rational { scale: 1.0 },
            panels: 24,
            n_per_panel: 16,
            grade_left: 4.0,
            grade_right: 2.0,
        }
    }

    /// Grid of `n` total nodes (8 per panel) for Nyström discretization.
    pub fn nystrom(n: usize, map: DomainMap) -> Self {
        Self {
            map,
            panels: (n / 8).max(2),
            n_per_panel: 8,
            grade_left: 2.0,
            grade_right: match map {
                DomainMap::Exponential { .. } => 3.0,
                _ => 2.0,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.panels * self.n_per_panel
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn with_panels(self, panels: usize) -> Self {
        Self { panels, ..self }
    }

    pub fn refined(self) -> Self {
        self.with_panels(self.panels * 2)
    }

    pub fn coarsened(self) -> Self {
        self.with_panels((self.panels / 2).max(1))
    }

    /// `(t, dt/du)` for the algebraic grading.
    fn grade(&self, u: f64) -> (f64, f64) {
        let (qa, qb) = (self.grade_left, self.grade_right);
        let a = u.powf(qa);
        let b = (1.0 - u).powf(qb);
        let s = a + b;
        let da = qa * u.powf(qa - 1.0);
        let db = qb * (1.0 - u).powf(qb - 1.0);
        (a / s, (da * b + a * db) / (s * s))
    }

    /// Endpoints of panel `k` in `x`; the last panel of an unbounded map ends
    /// at infinity.
    pub fn panel_bounds(&self, k: usize) -> (f64, f64) {
        let at = |j: usize| {
            if j == 0 {
                0.0
            } else if j >= self.panels {
                self.map.apply(1.0).0
            } else {
                self.map.apply(self.grade(j as f64 / self.panels as f64).0).0
            }
        };
        (at(k), at(k + 1))
    }

    pub fn build(&self) -> Result<QuadratureGrid, QuadratureError> {
        check_panel_size(self.n_per_panel)?;
        if self.len() < 16 {
            return Err(QuadratureError::TooFewNodes {
                min: 16,
                got: self.len(),
            });
        }
        let p = self.map.parameter();
        if !(p.is_finite() && p > 0.0) || matches!(self.map, DomainMap::Identity) {
            return Err(QuadratureError::InvalidMap(p));
        }
        if !(self.grade_left >= 1.0 && self.grade_right >= 1.0) {
            return Err(QuadratureError::InvalidMap(self.grade_left.min(self.grade_right)));
        }
        let breaks: Vec<f64> = (0..=self.panels)
            .map(|k| k as f64 / self.panels as f64)
            .collect();
        let map = self.map;
        let mut grid = composite(self.n_per_panel, &breaks, map, |u| {
            let (t, dt) = self.grade(u);
            let (x, dx) = map.apply(t);
            (x, dx * dt)
        })?;
        grid.spec = Some(*self);
        Ok(grid)
    }
}

/// Composite Gauss–Legendre nodes and weights, ascending in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    map: DomainMap,
    spec: Option<GridSpec>,
}

fn check_panel_size(n: usize) -> Result<(), QuadratureError> {
    if (4..=64).contains(&n) {
        Ok(())
    } else {
        Err(QuadratureError::InvalidPanelSize(n))
    }
}

fn composite<T: Fn(f64) -> (f64, f64)>(
    n_per_panel: usize,
    breaks: &[f64],
    map: DomainMap,
    transform: T,
) -> Result<QuadratureGrid, QuadratureError> {
    if breaks.len() < 2
        || breaks.iter().any(|b| !b.is_finite())
        || breaks.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(QuadratureError::InvalidBreakpoints);
    }
    let (ref_x, ref_w) = gauss_legendre(n_per_panel);
    let mut nodes = Vec::with_capacity(n_per_panel * (breaks.len() - 1));
    let mut weights = Vec::with_capacity(nodes.capacity());
    for w in breaks.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        let mid = 0.5 * (w[1] + w[0]);
        for (xi, wi) in ref_x.iter().zip(&ref_w) {
            let (x, jac) = transform(mid + half * xi);
            nodes.push(x);
            weights.push(half * wi * jac);
        }
    }
    if nodes.windows(2).any(|p| p[1] <= p[0]) || weights.iter().any(|w| !(*w > 0.0)) {
        // Grading so extreme that mapped nodes collide in floating point.
        return Err(QuadratureError::InvalidBreakpoints);
    }
    Ok(QuadratureGrid {
        nodes,
        weights,
        map,
        spec: None,
    })
}

/// Composite Gauss–Legendre rule with `n_per_panel` nodes on each interval
/// between consecutive `breakpoints`.
pub fn gauss_panels(
    n_per_panel: usize,
    breakpoints: &[f64],
) -> Result<QuadratureGrid, QuadratureError> {
    check_panel_size(n_per_panel)?;
    composite(n_per_panel, breakpoints, DomainMap::Identity, |x| (x, 1.0))
}

impl QuadratureGrid {
    /// Rule on (0, 1) graded geometrically toward both endpoints.
    ///
    /// `levels_right` is kept small enough that no node comes closer to 1
    /// than ~1e-11, which keeps `y = x s` clear of the kernel diagonal guard.
    pub fn unit_graded(
        n_per_panel: usize,
        ratio: f64,
        levels_left: usize,
        levels_right: usize,
    ) -> Result<Self, QuadratureError> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(QuadratureError::InvalidMap(ratio));
        }
        let mut breaks = vec![0.0];
        for k in (1..levels_left).rev() {
            breaks.push(0.5 * ratio.powi(k as i32));
        }
        breaks.push(0.5);
        for k in 1..levels_right {
            breaks.push(1.0 - 0.5 * ratio.powi(k as i32));
        }
        breaks.push(1.0);
        gauss_panels(n_per_panel, &breaks)
    }

    /// Default inner rule for triangular double integrals and kernel row sums.
    pub fn inner_default() -> Self {
        Self::unit_graded(12, 0.2, 20, 12).expect("static parameters are valid")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn map(&self) -> DomainMap {
        self.map
    }

    pub fn spec(&self) -> Option<GridSpec> {
        self.spec
    }

    /// `sum_i w_i f(x_i)` with pairwise summation in node order.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .collect();
        pairwise_sum(&terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_panel_polynomial_exactness() {
        let g = gauss_panels(4, &[0.0, 1.0]).unwrap();
        assert!((g.integrate(|x| x * x * x) - 0.25).abs() < 1e-16);
        let g = gauss_panels(5, &[0.0, 0.5, 2.0]).unwrap();
        let want = 2.0_f64.powi(10) / 10.0;
        assert!((g.integrate(|x| x.powi(9)) - want).abs() < 1e-12 * want);
    }

    #[test]
    fn rational_map_known_integrals() {
        let spec = GridSpec {
            map: DomainMap::Rational { scale: 1.0 },
            panels: 25,
            n_per_panel: 8,
            grade_left: 2.0,
            grade_right: 2.0,
        };
        let g = spec.build().unwrap();
        assert_eq!(g.len(), 200);
        assert!((g.integrate(|x| (-x).exp()) - 1.0).abs() < 1e-12);
        assert!((g.integrate(|x| x * (-x).exp()) - 1.0).abs() < 1e-12);
        let g = GridSpec::bound_default().build().unwrap();
        let v = g.integrate(|x| (-x).exp() / x.sqrt());
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn exponential_and_truncated_maps() {
        let g = GridSpec::nystrom(400, DomainMap::Exponential { scale: 1.0 })
            .build()
            .unwrap();
        assert!((g.integrate(|x| (-x).exp()) - 1.0).abs() < 1e-13);
        // A log-type endpoint remains in u for decay other than e^{-x}.
        let v = g.integrate(|x| x * (-x).exp());
        assert!((v - 1.0).abs() < 1e-9, "{v}");
        let g = GridSpec::nystrom(400, DomainMap::Truncated { x_max: 60.0 })
            .build()
            .unwrap();
        assert!((g.integrate(|x| (-x).exp()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_invariants() {
        for spec in [
            GridSpec::bound_default(),
            GridSpec::nystrom(200, DomainMap::Rational { scale: 1.0 }),
        ] {
            let g = spec.build().unwrap();
            assert!(g.len() >= 16);
            assert!(g.nodes().windows(2).all(|p| p[0] < p[1]));
            assert!(g.weights().iter().all(|&w| w > 0.0));
            assert!(g.nodes()[0] > 0.0);
        }
        let u = QuadratureGrid::inner_default();
        assert!(u.nodes().windows(2).all(|p| p[0] < p[1]));
        assert!(1.0 - u.nodes()[u.len() - 1] > 1e-11);
        assert!((u.integrate(|s| -(1.0 - s).ln()) - 1.0).abs() < 1e-9);
        assert!((u.integrate(|s| s.powf(-0.25)) - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn refinement_nests_breakpoints() {
        let s = GridSpec::nystrom(200, DomainMap::Rational { scale: 1.0 });
        assert_eq!(s.refined().len(), 400);
        assert_eq!(s.refined().coarsened(), s);
    }

    #[test]
    fn panel_bounds_bracket_their_nodes() {
        for map in [DomainMap::Rational { scale: 1.0 }, DomainMap::Exponential { scale: 2.0 }, DomainMap::Truncated { x_max: 30.0 }] {
            let s = GridSpec::nystrom(64, map);
            let g = s.build().unwrap();
            for (i, &x) in g.nodes().iter().enumerate() {
                let (a, b) = s.panel_bounds(i / s.n_per_panel);
                assert!(a < x && x < b, "{map} node {i}");
            }
            assert_eq!(s.panel_bounds(0).0, 0.0);
            let end = s.panel_bounds(s.panels - 1).1;
            assert_eq!(end.is_infinite(), !matches!(map, DomainMap::Truncated { .. }));
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(gauss_panels(3, &[0.0, 1.0]).is_err());
        assert!(gauss_panels(65, &[0.0, 1.0]).is_err());
        assert!(gauss_panels(8, &[0.0, 0.0]).is_err());
        assert!(gauss_panels(8, &[1.0, 0.0]).is_err());
        let s = GridSpec {
            panels: 1,
            n_per_panel: 8,
            ..GridSpec::bound_default()
        };
        assert!(matches!(s.build(), Err(QuadratureError::TooFewNodes { .. })));
    }

    #[test]
    fn map_parsing() {
        assert_eq!("rational".parse::<DomainMap>().unwrap(), DomainMap::Rational { scale: 1.0 });
        assert_eq!("exp".parse::<DomainMap>().unwrap(), DomainMap::Exponential { scale: 1.0 });
        assert_eq!("trunc:40".parse::<DomainMap>().unwrap(), DomainMap::Truncated { x_max: 40.0 });
        assert!("trunc".parse::<DomainMap>().is_err());
        assert!("spline".parse::<DomainMap>().is_err());
        assert!("trunc:-1".parse::<DomainMap>().is_err());
    }
}
