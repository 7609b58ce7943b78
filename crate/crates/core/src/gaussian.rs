//! Standard normal distribution helpers shared across the distance and
//! variance code: density, distribution function, absolute moments and the
//! closed-form primitives used by the exact distance oracles.

use libm::{erfc, lgamma};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal density `phi(x)`.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal distribution function `Phi(x)`, accurate in both tails.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Upper tail `1 - Phi(x)` without cancellation for large `x`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Absolute moment `E|Z|^q` of a standard normal, `q > -1`.
///
/// `E|Z|^q = 2^{q/2} Gamma((q+1)/2) / sqrt(pi)`.
pub fn abs_moment(q: f64) -> f64 {
    assert!(q > -1.0, "absolute moment requires q > -1, got {q}");
    (0.5 * q * std::f64::consts::LN_2 + lgamma(0.5 * (q + 1.0))
        - 0.5 * std::f64::consts::PI.ln())
    .exp()
}

/// Antiderivative of `Phi`: `int_{-inf}^{x} Phi(t) dt = x Phi(x) + phi(x)`.
pub fn cdf_primitive(x: f64) -> f64 {
    x * cdf(x) + pdf(x)
}

/// Exact `int_a^b Phi(t) dt`.
pub fn integral_cdf(a: f64, b: f64) -> f64 {
    cdf_primitive(b) - cdf_primitive(a)
}

/// Exact `int_a^b (1 - Phi(t)) dt`.
pub fn integral_sf(a: f64, b: f64) -> f64 {
    (b - a) - integral_cdf(a, b)
}

/// Exact `int_a^b |c - Phi(t)| dt` for a constant level `c in [0, 1]`.
///
/// `Phi` crosses the level at most once, so the integral splits at the
/// quantile and each side is a difference of primitives.
pub fn integral_abs_cdf_gap(a: f64, b: f64, c: f64) -> f64 {
    debug_assert!(a <= b);
    let gap = |lo: f64, hi: f64| -> f64 {
        // signed integral of (c - Phi) on [lo, hi]
        c * (hi - lo) - integral_cdf(lo, hi)
    };
    if c <= 0.0 {
        return integral_cdf(a, b) - c * (b - a);
    }
    if c >= 1.0 {
        return gap(a, b);
    }
    let z = quantile(c);
    if z <= a {
        -gap(a, b)
    } else if z >= b {
        gap(a, b)
    } else {
        gap(a, z) - gap(z, b)
    }
}

/// Standard normal quantile via Acklam's rational approximation polished by
/// one Halley step; good to ~1e-15 over (0, 1).
pub fn quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile requires p in (0,1), got {p}");
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.02425;
    let x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement against the high-accuracy cdf.
    let e = cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// `E[f(|Z|)]` for a smooth `f` via adaptive Simpson on `[0, cut]`.
///
/// The integrand is `2 phi(x) f(x)`; the cut at 12 standard deviations leaves
/// a remainder below 1e-30 for bounded `f`.
pub fn expect_abs<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    adaptive_simpson(&|x| 2.0 * pdf(x) * f(x), 0.0, 12.0, tol, 24)
}

/// Adaptive Simpson quadrature with interval-halving error control.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, left, 0.5 * tol, depth - 1) + rec(f, m, b, right, 0.5 * tol, depth - 1)
        }
    }
    let whole = simpson(f, a, b);
    rec(f, a, b, whole, tol, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cdf_reference_points() {
        assert_abs_diff_eq!(cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(cdf(1.0), 0.841_344_746_068_542_9, epsilon = 1e-14);
        assert_abs_diff_eq!(cdf(-1.0), 1.0 - cdf(1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(sf(2.0), 0.022_750_131_948_179_21, epsilon = 1e-14);
    }

    #[test]
    fn abs_moments_match_closed_forms() {
        // E|Z| = sqrt(2/pi), E|Z|^2 = 1, E|Z|^3 = 2 sqrt(2/pi), E|Z|^4 = 3.
        let m1 = (2.0 / std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(abs_moment(1.0), m1, epsilon = 1e-14);
        assert_abs_diff_eq!(abs_moment(2.0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(abs_moment(3.0), 2.0 * m1, epsilon = 1e-13);
        assert_abs_diff_eq!(abs_moment(4.0), 3.0, epsilon = 1e-13);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-9] {
            let x = quantile(p);
            assert_abs_diff_eq!(cdf(x), p, epsilon = 1e-13);
        }
    }

    #[test]
    fn level_crossing_integral_matches_quadrature() {
        // int_{-1}^{1} |0.5 - Phi(x)| dx against adaptive Simpson.
        let exact = integral_abs_cdf_gap(-1.0, 1.0, 0.5);
        let quad = adaptive_simpson(&|x: f64| (0.5 - cdf(x)).abs(), -1.0, 1.0, 1e-12, 30);
        assert_abs_diff_eq!(exact, quad, epsilon = 1e-10);
    }

    #[test]
    fn expect_abs_of_square_is_one() {
        assert_abs_diff_eq!(expect_abs(|x| x * x, 1e-12), 1.0, epsilon = 1e-9);
    }
}
