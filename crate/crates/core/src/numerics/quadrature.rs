use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Tolerance;
use crate::error::{invalid, ModelError, Result};
use crate::scalar::Scalar;

/// Result of a quadrature: value, estimated absolute error, and integrand evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

// 21-point Kronrod abscissae; odd indices are the embedded 10-point Gauss nodes.
#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
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

struct Rule<T> {
    xgk: [T; 11],
    wg: [T; 5],
    wgk: [T; 11],
}

impl<T: Scalar> Rule<T> {
    fn new() -> Self {
        Self {
            xgk: XGK.map(T::lit),
            wg: WG.map(T::lit),
            wgk: WGK.map(T::lit),
        }
    }

    /// One GK21 panel on `[a, b]`; returns (estimate, error estimate).
    fn apply<F: FnMut(T) -> T>(&self, f: &mut F, a: T, b: T) -> (T, T) {
        let two = T::lit(2.0);
        let center = (a + b) / two;
        let half = (b - a) / two;
        let f_center = f(center);
        let mut kronrod = f_center * self.wgk[10];
        let mut gauss = T::zero();
        let mut abs_sum = f_center.abs() * self.wgk[10];
        let mut f1 = [T::zero(); 10];
        let mut f2 = [T::zero(); 10];
        for j in 0..10 {
            let dx = half * self.xgk[j];
            let lo = f(center - dx);
            let hi = f(center + dx);
            f1[j] = lo;
            f2[j] = hi;
            kronrod = kronrod + self.wgk[j] * (lo + hi);
            abs_sum = abs_sum + self.wgk[j] * (lo.abs() + hi.abs());
            if j % 2 == 1 {
                gauss = gauss + self.wg[j / 2] * (lo + hi);
            }
        }
        let mean = kronrod / two;
        let mut asc = self.wgk[10] * (f_center - mean).abs();
        for j in 0..10 {
            asc = asc + self.wgk[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
        }
        let abs_half = half.abs();
        let result = kronrod * half;
        let res_abs = abs_sum * abs_half;
        let res_asc = asc * abs_half;
        let mut err = ((kronrod - gauss) * half).abs();
        if res_asc != T::zero() && err != T::zero() {
            let scale = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
            err = res_asc * scale.min(T::one());
        }
        let round_off = T::lit(50.0) * T::epsilon() * res_abs;
        if res_abs > T::min_positive_value() / (T::lit(50.0) * T::epsilon()) {
            err = err.max(round_off);
        }
        (result, err)
    }
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Scalar> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Scalar> Eq for Panel<T> {}
impl<T: Scalar> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive Gauss-Kronrod (10/21) quadrature of `f` over `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed error
/// estimate falls under `tol.threshold(value)`.
pub fn integrate<T, F>(mut f: F, a: T, b: T, tol: &Tolerance<T>) -> Result<Integral<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    tol.validate()?;
    if !a.is_finite() || !b.is_finite() {
        return Err(invalid("integration bounds must be finite"));
    }
    if a == b {
        return Ok(Integral {
            value: T::zero(),
            error: T::zero(),
            evaluations: 0,
        });
    }
    let rule = Rule::new();
    let mut evaluations = 21;
    let (value, error) = rule.apply(&mut f, a, b);
    if !value.is_finite() {
        return Err(ModelError::QuadratureFailure {
            subdivisions: 1,
            error_estimate: f64::INFINITY,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut subdivisions = 1;
    while total_err > tol.threshold(total) {
        if subdivisions >= tol.max_subdivisions {
            return Err(ModelError::QuadratureFailure {
                subdivisions,
                error_estimate: total_err.to_f64_lossy(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = (worst.a + worst.b) / T::lit(2.0);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Panel cannot be split further in this precision.
            return Err(ModelError::QuadratureFailure {
                subdivisions,
                error_estimate: total_err.to_f64_lossy(),
            });
        }
        let (v1, e1) = rule.apply(&mut f, worst.a, mid);
        let (v2, e2) = rule.apply(&mut f, mid, worst.b);
        evaluations += 42;
        if !(v1 + v2).is_finite() {
            return Err(ModelError::QuadratureFailure {
                subdivisions,
                error_estimate: f64::INFINITY,
            });
        }
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        subdivisions += 1;
        // Re-sum instead of updating incrementally to avoid drift.
        total = heap.iter().fold(T::zero(), |acc, p| acc + p.value);
        total_err = heap.iter().fold(T::zero(), |acc, p| acc + p.error);
    }
    Ok(Integral {
        value: total,
        error: total_err,
        evaluations,
    })
}

/// Integrates `f` over `[0, inf)`: directly on `[0, 30 / decay]`, then the tail
/// through the substitution `u = 1 - exp(-decay * (t - 30 / decay))`.
///
/// `decay` should not exceed the slowest exponential decay rate of `f`; the
/// mapped integrand is then bounded on `[0, 1)`. When `decay` is below the true
/// rate the mapped integrand has a cusp at `u = 1` that defeats the panel error
/// estimate, so the bulk is kept out of the mapped range.
pub fn integrate_halfline<T, F>(mut f: F, decay: T, tol: &Tolerance<T>) -> Result<Integral<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if !(decay > T::zero()) || !decay.is_finite() {
        return Err(invalid("half-line decay rate must be positive"));
    }
    let split = T::lit(30.0) / decay;
    if !split.is_finite() {
        return Err(invalid("half-line decay rate is too small"));
    }
    let head = integrate(&mut f, T::zero(), split, tol)?;
    let mapped = |u: T| {
        let rest = T::one() - u;
        if rest <= T::zero() {
            return T::zero();
        }
        let t = split - (-u).ln_1p() / decay;
        if !t.is_finite() {
            return T::zero();
        }
        let v = f(t);
        if v == T::zero() {
            T::zero()
        } else {
            v / (decay * rest)
        }
    };
    let tail = integrate(mapped, T::zero(), T::one(), tol)?;
    Ok(Integral {
        value: head.value + tail.value,
        error: head.error + tail.error,
        evaluations: head.evaluations + tail.evaluations,
    })
}

/// A feature of the integrand (a peak or an edge) at `center`, varying on the
/// length scale `width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature<T> {
    pub center: T,
    pub width: T,
}

/// Breakpoints `center +- width * 2^n`, `n = 0..=6`, plus the center, clipped to `(a, b)`.
fn graded_points<T: Scalar>(a: T, b: T, features: &[Feature<T>]) -> Vec<T> {
    let mut pts = vec![a, b];
    for f in features {
        if !(f.width > T::zero()) || !f.width.is_finite() || !f.center.is_finite() {
            continue;
        }
        pts.push(f.center);
        let mut step = f.width;
        for _ in 0..=6 {
            pts.push(f.center - step);
            pts.push(f.center + step);
            step = step * T::lit(2.0);
        }
    }
    pts.retain(|&x| x >= a && x <= b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    pts.dedup();
    pts
}

/// Adaptive quadrature over `[a, b]` (`a <= b`), pre-split around the given
/// features so that narrow peaks cannot slip between the nodes of the first panel.
pub fn integrate_graded<T, F>(mut f: F, a: T, b: T, features: &[Feature<T>], tol: &Tolerance<T>) -> Result<Integral<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if !(a <= b) {
        return Err(invalid("graded quadrature needs a <= b"));
    }
    let pts = graded_points(a, b, features);
    let mut out = Integral {
        value: T::zero(),
        error: T::zero(),
        evaluations: 0,
    };
    for w in pts.windows(2) {
        let r = integrate(&mut f, w[0], w[1], tol)?;
        out.value = out.value + r.value;
        out.error = out.error + r.error;
        out.evaluations += r.evaluations;
    }
    Ok(out)
}

/// Half-line quadrature pre-split around `features`: graded panels up to the
/// last breakpoint, then [`integrate_halfline`] for the remainder.
pub fn integrate_halfline_graded<T, F>(
    mut f: F,
    decay: T,
    features: &[Feature<T>],
    tol: &Tolerance<T>,
) -> Result<Integral<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let reach = features
        .iter()
        .filter(|x| x.center.is_finite() && x.width.is_finite())
        .fold(T::zero(), |acc, x| acc.max(x.center + x.width * T::lit(64.0)));
    let head = integrate_graded(&mut f, T::zero(), reach, features, tol)?;
    let tail = integrate_halfline(|t| f(reach + t), decay, tol)?;
    Ok(Integral {
        value: head.value + tail.value,
        error: head.error + tail.error,
        evaluations: head.evaluations + tail.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance<f64> {
        Tolerance::default()
    }

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, &tol()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let fwd = integrate(|x: f64| x.sin(), 0.0, 1.0, &tol()).unwrap().value;
        let rev = integrate(|x: f64| x.sin(), 1.0, 0.0, &tol()).unwrap().value;
        assert!((fwd + rev).abs() < 1e-14);
    }

    #[test]
    fn exponential_on_halfline() {
        let r = integrate_halfline(|t: f64| (-t).exp(), 1.0, &tol()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gamma_two_on_halfline() {
        let r = integrate_halfline(|t: f64| t * (-t).exp(), 1.0, &tol()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn loose_decay_hint_keeps_error_honest() {
        for decay in [0.9, 0.5, 0.2] {
            let r = integrate_halfline(|t: f64| t * t * (-t).exp(), decay, &tol()).unwrap();
            assert!((r.value - 2.0).abs() <= r.error.max(1e-12), "{decay}: {r:?}");
        }
    }

    #[test]
    fn peaked_integrand_needs_subdivision() {
        let f = |x: f64| 1.0 / (1e-4 + (x - 0.3).powi(2));
        let exact = ((0.7f64 / 1e-2).atan() + (0.3f64 / 1e-2).atan()) / 1e-2;
        let r = integrate(f, 0.0, 1.0, &tol()).unwrap();
        assert!((r.value - exact).abs() < 1e-9 * exact);
        assert!(r.evaluations > 21);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let t = Tolerance::new(1e-15, 0.0, 10, 2);
        let err = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, &t).unwrap_err();
        assert!(matches!(err, ModelError::QuadratureFailure { .. }));
    }

    #[test]
    fn graded_catches_narrow_edge_peak() {
        let alpha = 1e4;
        let f = |t: f64| alpha * (-alpha * t).exp();
        let plain = integrate(f, 0.0, 3.0, &tol()).unwrap().value;
        let feats = [Feature {
            center: 0.0,
            width: 1.0 / alpha,
        }];
        let graded = integrate_graded(f, 0.0, 3.0, &feats, &tol()).unwrap().value;
        assert!((graded - 1.0).abs() < 1e-9, "graded {graded}");
        // the ungraded rule is fooled by the narrow peak
        assert!((plain - 1.0).abs() > 1e-3, "plain {plain}");
    }

    #[test]
    fn graded_halfline_erlang_mass() {
        let alpha = 1e5;
        let feats = [Feature {
            center: 2.0 / alpha,
            width: 3f64.sqrt() / alpha,
        }];
        let f = |t: f64| alpha.powi(3) * t * t * (-alpha * t).exp() / 2.0;
        let r = integrate_halfline_graded(f, 1.0, &feats, &tol()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nonpositive_decay_rejected() {
        assert!(integrate_halfline(|t: f64| t, 0.0, &tol()).is_err());
    }
}
