//! Globally adaptive Gauss–Kronrod (10/21) quadrature with singularity-aware
//! initial panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{pairwise_sum, QuadResult, QuadratureError};

/// Maximum number of panels before giving up.
pub const MAX_PANELS: usize = 10_000;
/// Geometric refinement ratio toward a hinted singularity.
pub const GRADING_RATIO: f64 = 0.25;
/// Number of geometric levels laid down toward a hinted singularity.
pub const GRADING_LEVELS: usize = 16;

/// Endpoint or interior behaviour the caller knows about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Singularity {
    /// `ln|x - c|`
    Log,
    /// `|x - c|^s` with `s > -1`
    Power(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityHint {
    pub at: f64,
    pub kind: Singularity,
}

impl SingularityHint {
    pub fn log(at: f64) -> Self {
        Self {
            at,
            kind: Singularity::Log,
        }
    }

    pub fn power(at: f64, s: f64) -> Self {
        Self {
            at,
            kind: Singularity::Power(s),
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    roundoff: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel, QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { x, value: v })
        }
    };
    let fc = eval(center)?;
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let value = res_k * half;
    res_abs *= scale;
    res_asc *= scale;
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(roundoff);
    }
    Ok(Panel {
        a,
        b,
        value,
        error,
        roundoff,
    })
}

/// Initial breakpoints: split at interior hints, then lay geometric panels
/// toward every hinted point.
fn initial_breakpoints(a: f64, b: f64, hints: &[SingularityHint]) -> Vec<f64> {
    let mut cuts: Vec<f64> = hints
        .iter()
        .map(|h| h.at)
        .filter(|&c| c > a && c < b)
        .collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let near = |x: f64| hints.iter().any(|h| h.at == x);
    let mut points = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let len = hi - lo;
        points.push(lo);
        let grade_lo = near(lo);
        let grade_hi = near(hi);
        let (lo_end, hi_start) = match (grade_lo, grade_hi) {
            (true, true) => (lo + 0.5 * len, lo + 0.5 * len),
            (true, false) => (hi, hi),
            (false, true) => (lo, lo),
            (false, false) => (lo, hi),
        };
        if grade_lo {
            let span = lo_end - lo;
            for k in (1..=GRADING_LEVELS).rev() {
                points.push(lo + span * GRADING_RATIO.powi(k as i32));
            }
            if grade_hi {
                points.push(lo_end);
            }
        }
        if grade_hi {
            let span = hi - hi_start;
            for k in 1..=GRADING_LEVELS {
                points.push(hi - span * GRADING_RATIO.powi(k as i32));
            }
        }
    }
    points.push(b);
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Adaptive integration of `f` over `[a, b]` to tolerance `tol`
/// (relative to the integral, with a round-off floor).
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadResult, QuadratureError> {
    integrate_adaptive_with_hints(f, a, b, tol, &[])
}

pub fn integrate_adaptive_with_hints<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    hints: &[SingularityHint],
) -> Result<QuadResult, QuadratureError> {
    integrate_adaptive_floored(f, a, b, tol, 0.0, hints)
}

/// As [`integrate_adaptive_with_hints`], also accepting any error estimate
/// below the absolute `floor`.
pub fn integrate_adaptive_floored<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    floor: f64,
    hints: &[SingularityHint],
) -> Result<QuadResult, QuadratureError> {
    if !(floor >= 0.0) {
        return Err(QuadratureError::InvalidTolerance(floor));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    if !(tol >= 1e-15) {
        return Err(QuadratureError::InvalidTolerance(tol));
    }
    let points = initial_breakpoints(a, b, hints);
    let mut heap = BinaryHeap::with_capacity(2 * points.len());
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk21(&f, w[0], w[1])?);
        }
    }
    let (mut value, mut error, mut roundoff) = totals(heap.iter());
    loop {
        if error <= (tol * value.abs()).max(2.0 * roundoff).max(floor) || error == 0.0 {
            return Ok(finish(heap));
        }
        if heap.len() >= MAX_PANELS {
            let best = finish(heap);
            return Err(QuadratureError::NonConvergence {
                best: best.value,
                estimate: best.error,
                panels: best.panels,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || worst.b - worst.a < 1e-100 * (b - a) {
            // The worst panel cannot be split in floating point: the
            // integrand is not integrable to this tolerance.
            heap.push(worst);
            let best = finish(heap);
            return Err(QuadratureError::NonConvergence {
                best: best.value,
                estimate: best.error,
                panels: best.panels,
            });
        }
        let left = gk21(&f, worst.a, mid)?;
        let right = gk21(&f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        roundoff += left.roundoff + right.roundoff - worst.roundoff;
        heap.push(left);
        heap.push(right);
        if heap.len() % 64 == 0 {
            (value, error, roundoff) = totals(heap.iter());
        }
    }
}

fn totals<'a>(panels: impl Iterator<Item = &'a Panel>) -> (f64, f64, f64) {
    panels.fold((0.0, 0.0, 0.0), |acc, p| {
        (acc.0 + p.value, acc.1 + p.error, acc.2 + p.roundoff)
    })
}

fn finish(heap: BinaryHeap<Panel>) -> QuadResult {
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let values: Vec<f64> = panels.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = panels.iter().map(|p| p.error).collect();
    QuadResult {
        value: pairwise_sum(&values),
        error: pairwise_sum(&errors),
        panels: panels.len(),
    }
}

/// `int_a^inf f(x) dx` through `x = a + t / (1 - t)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: f64,
) -> Result<QuadResult, QuadratureError> {
    integrate_semi_infinite_floored(f, a, tol, 0.0)
}

/// As [`integrate_semi_infinite`] with an absolute error floor.
pub fn integrate_semi_infinite_floored<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: f64,
    floor: f64,
) -> Result<QuadResult, QuadratureError> {
    integrate_adaptive_floored(
        |t| {
            let u = 1.0 - t;
            let x = a + t / u;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v / (u * u)
            }
        },
        0.0,
        1.0,
        tol,
        floor,
        &[],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{k0_raw, k1_raw};

    #[test]
    fn floor_stops_on_noise_below_it() {
        let noisy = |x: f64| 1e-300 * (1e6 * x).sin().signum();
        assert!(integrate_adaptive(noisy, 0.0, 1.0, 1e-9).is_err());
        let r = integrate_adaptive_floored(noisy, 0.0, 1.0, 1e-9, 1e-290, &[]).unwrap();
        assert!(r.value.abs() < 1e-290);
        let r = integrate_semi_infinite_floored(|x: f64| (-x).exp(), 0.0, 1e-12, 1e-30).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
        assert!(integrate_adaptive_floored(|x: f64| x, 0.0, 1.0, 1e-9, -1.0, &[]).is_err());
    }

    #[test]
    fn log_endpoint() {
        let r = integrate_adaptive_with_hints(
            |x: f64| -x.ln(),
            0.0,
            1.0,
            1e-12,
            &[SingularityHint::log(0.0)],
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-10, "{r:?}");
        // no hint: adaptivity alone still gets there
        let r = integrate_adaptive(|x: f64| -x.ln(), 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn power_endpoint() {
        let r = integrate_adaptive_with_hints(
            |x: f64| 1.0 / x.sqrt(),
            0.0,
            1.0,
            1e-12,
            &[SingularityHint::power(0.0, -0.5)],
        )
        .unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn interior_log_singularity() {
        // int_0^2 ln|x - 1| dx = -2
        let r = integrate_adaptive_with_hints(
            |x: f64| (x - 1.0).abs().ln(),
            0.0,
            2.0,
            1e-12,
            &[SingularityHint::log(1.0)],
        )
        .unwrap();
        assert!((r.value + 2.0).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn k1_antiderivative() {
        let (beta, x, y) = (1.0_f64, 2.0_f64, 1.0_f64);
        let (lo, hi) = ((x - y).abs(), x + y);
        let r = integrate_adaptive(|u| beta * k1_raw(beta * u), lo, hi, 1e-13).unwrap();
        let want = k0_raw(beta * lo) - k0_raw(beta * hi);
        assert!((r.value - want).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate_semi_infinite(|x: f64| x * (-x).exp(), 0.0, 1e-13).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn error_estimate_bounds_true_error() {
        let r = integrate_adaptive(|x: f64| (3.0 * x).cos() * x.exp(), 0.0, 4.0, 1e-6).unwrap();
        let exact = {
            let f = |x: f64| x.exp() * ((3.0 * x).cos() + 3.0 * (3.0 * x).sin()) / 10.0;
            f(4.0) - f(0.0)
        };
        assert!((r.value - exact).abs() <= r.error.max(1e-6 * exact.abs()));
    }

    #[test]
    fn non_convergence_reports_best_estimate() {
        let err = integrate_adaptive(|x: f64| 1.0 / x, 0.0, 1.0, 1e-12);
        let err = err.expect_err("1/x is not integrable");
        assert!(matches!(err, QuadratureError::NonConvergence { .. }));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(integrate_adaptive(|x| x, 1.0, 0.0, 1e-10).is_err());
        assert!(integrate_adaptive(|x| x, 0.0, 1.0, 1e-20).is_err());
    }
}
