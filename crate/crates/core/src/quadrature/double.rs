use super::{pairwise_sum, QuadResult, QuadratureGrid};
use crate::exec;

/// `2 ∫_0^∞ dx w(x) ∫_0^x dy w(y) K(x, y)` with the inner integral written as
/// `x ∫_0^1 ds w(xs) K(x, xs)` on `inner`, so the diagonal is never sampled.
///
/// The returned error is the difference from the same sum on the outer grid
/// with half as many panels (zero if `outer` was not built from a spec).
pub fn double_integral_triangular<K, W, E>(
    kernel: K,
    weight: W,
    outer: &QuadratureGrid,
    inner: &QuadratureGrid,
) -> Result<QuadResult, E>
where
    K: Fn(f64, f64) -> Result<f64, E> + Sync,
    W: Fn(f64) -> f64 + Sync,
    E: Send,
{
    let value = triangular_sum(&kernel, &weight, outer, inner)?;
    let error = match outer.spec().filter(|s| s.panels >= 4) {
        Some(spec) => match spec.coarsened().build() {
            Ok(coarse) => (value - triangular_sum(&kernel, &weight, &coarse, inner)?).abs(),
            Err(_) => 0.0,
        },
        None => 0.0,
    };
    Ok(QuadResult {
        value,
        error,
        panels: outer.len(),
    })
}

fn triangular_sum<K, W, E>(
    kernel: &K,
    weight: &W,
    outer: &QuadratureGrid,
    inner: &QuadratureGrid,
) -> Result<f64, E>
where
    K: Fn(f64, f64) -> Result<f64, E> + Sync,
    W: Fn(f64) -> f64 + Sync,
    E: Send,
{
    let (xs, ws) = (outer.nodes(), outer.weights());
    let rows = exec::try_map_indexed(xs.len(), |i| -> Result<f64, E> {
        let x = xs[i];
        let wx = weight(x);
        if wx == 0.0 {
            return Ok(0.0);
        }
        let mut terms = Vec::with_capacity(inner.len());
        for (&s, &u) in inner.nodes().iter().zip(inner.weights()) {
            let y = x * s;
            let wy = weight(y);
            if wy != 0.0 {
                terms.push(u * wy * kernel(x, y)?);
            }
        }
        Ok(2.0 * ws[i] * wx * x * pairwise_sum(&terms))
    })?;
    Ok(pairwise_sum(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{DomainMap, GridSpec};
    use std::convert::Infallible;

    fn outer(panels: usize) -> QuadratureGrid {
        GridSpec {
            map: DomainMap::Rational { scale: 1.0 },
            panels,
            n_per_panel: 16,
            grade_left: 4.0,
            grade_right: 2.0,
        }
        .build()
        .unwrap()
    }

    fn ok(v: f64) -> Result<f64, Infallible> {
        Ok(v)
    }

    #[test]
    fn constant_kernel_gives_half_square() {
        // 2 ∫∫_{y<x} e^{-x} e^{-y} = (∫e^{-x})^2 = 1
        let r = double_integral_triangular(
            |_, _| ok(1.0),
            |x| (-x).exp(),
            &outer(24),
            &QuadratureGrid::inner_default(),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn min_kernel_matches_closed_form() {
        // 2 ∫_0^∞ e^{-x} ∫_0^x y e^{-y} dy dx = 2 (1 - 1/2 - 1/4) = 1/2
        let r = double_integral_triangular(
            |x: f64, y: f64| ok(x.min(y)),
            |x| (-x).exp(),
            &outer(24),
            &QuadratureGrid::inner_default(),
        )
        .unwrap();
        assert!((r.value - 0.5).abs() < 1e-12, "{}", r.value);
        assert!(r.error < 1e-10);
    }

    #[test]
    fn log_kernel_self_converges() {
        let k = |x: f64, y: f64| ok(-((x - y) / (x + y)).ln());
        let w = |x: f64| x.sqrt() * (-x).exp();
        let inner = QuadratureGrid::inner_default();
        let a = double_integral_triangular(k, w, &outer(24), &inner).unwrap().value;
        let b = double_integral_triangular(k, w, &outer(48), &inner).unwrap().value;
        assert!((a - b).abs() < 1e-7 * b.abs(), "{a} {b}");
    }

    #[test]
    fn triangle_is_half_of_square_for_symmetric_kernel() {
        let k = |x: f64, y: f64| (-(x * y)).exp() / (1.0 + x + y);
        let w = |x: f64| (-x).exp() * (1.0 + x);
        let g = outer(32);
        let tri = double_integral_triangular(|x, y| ok(k(x, y)), w, &g, &QuadratureGrid::inner_default())
            .unwrap()
            .value;
        let mut square = 0.0;
        for (&x, &wx) in g.nodes().iter().zip(g.weights()) {
            for (&y, &wy) in g.nodes().iter().zip(g.weights()) {
                square += wx * wy * w(x) * w(y) * k(x, y);
            }
        }
        assert!((tri - square).abs() < 1e-11 * square, "{tri} {square}");
    }

    #[test]
    fn kernel_errors_propagate() {
        let r: Result<QuadResult, &str> = double_integral_triangular(
            |x, _| if x > 3.0 { Err("boom") } else { Ok(1.0) },
            |x| (-x).exp(),
            &outer(8),
            &QuadratureGrid::inner_default(),
        );
        assert_eq!(r.unwrap_err(), "boom");
    }
}
