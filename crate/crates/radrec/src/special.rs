//! Special functions backing the histogram transform.
//!
//! Everything here is implemented in-module with explicit accuracy
//! contracts rather than pulled from a dependency, because the simulated
//! fields are part of the deterministic output surface:
//!
//! - `erf` / `erfc`: rational approximations in three ranges, absolute
//!   error below 1e-15 (relative for `erfc` down to its underflow);
//! - `ln_gamma`: Stirling series after an argument shift to x >= 10,
//!   relative error ~1e-15;
//! - `gamma_p` / `gamma_q`: power series below `x = a + 1` and a Lentz
//!   continued fraction above, relative error ~1e-14;
//! - `inv_gamma_p` / `inv_gamma_q`: bracketed Newton iterations that stop
//!   once `|F(x) - p|` falls below 1e-13 (absolute and relative to `p`),
//!   well inside the 1e-12 contract.

use crate::error::{Error, Result};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_95;

// erf on |x| <= 0.46875.
const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_60e0,
    1.138_641_541_510_501_56e2,
    3.774_852_376_853_020_21e2,
    3.209_377_589_138_469_47e3,
    1.857_777_061_846_031_53e-1,
];
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412_09e1,
    2.440_246_379_344_441_73e2,
    1.282_616_526_077_372_28e3,
    2.844_236_833_439_170_62e3,
];
// erfc * exp(x^2) on 0.46875 < x <= 4.
const ERF_C: [f64; 9] = [
    5.641_884_969_886_700_89e-1,
    8.883_149_794_388_375_94e0,
    6.611_919_063_714_162_95e1,
    2.986_351_381_974_001_31e2,
    8.819_522_212_417_690_90e2,
    1.712_047_612_634_070_58e3,
    2.051_078_377_826_071_47e3,
    1.230_339_354_797_997_25e3,
    2.153_115_354_744_038_46e-8,
];
const ERF_D: [f64; 8] = [
    1.574_492_611_070_983_47e1,
    1.176_939_508_913_124_99e2,
    5.371_811_018_620_098_58e2,
    1.621_389_574_566_690_19e3,
    3.290_799_235_733_459_63e3,
    4.362_619_090_143_247_16e3,
    3.439_367_674_143_721_64e3,
    1.230_339_354_803_749_42e3,
];
// erfc * x * exp(x^2) asymptotic correction for x > 4.
const ERF_P: [f64; 6] = [
    3.053_266_349_612_323_44e-1,
    3.603_448_999_498_044_39e-1,
    1.257_817_261_112_292_46e-1,
    1.608_378_514_874_227_66e-2,
    6.587_491_615_298_378_03e-4,
    1.631_538_713_730_209_78e-2,
];
const ERF_Q: [f64; 5] = [
    2.568_520_192_289_822_42e0,
    1.872_952_849_923_460_47e0,
    5.279_051_029_514_284_12e-1,
    6.051_834_131_244_131_91e-2,
    2.335_204_976_268_691_85e-3,
];

/// exp(-y^2) evaluated as exp(-t^2) * exp(-(y-t)(y+t)) with t = y rounded
/// to 1/16, which keeps the argument splitting error out of the tail.
fn exp_neg_sq(y: f64) -> f64 {
    let t = (y * 16.0).trunc() / 16.0;
    let del = (y - t) * (y + t);
    (-t * t).exp() * (-del).exp()
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        return 1.0 - erf(x);
    }
    let result = if y <= 4.0 {
        let mut num = ERF_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERF_C[i]) * y;
            den = (den + ERF_D[i]) * y;
        }
        exp_neg_sq(y) * (num + ERF_C[7]) / (den + ERF_D[7])
    } else {
        let z = 1.0 / (y * y);
        let mut num = ERF_P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + ERF_P[i]) * z;
            den = (den + ERF_Q[i]) * z;
        }
        let r = z * (num + ERF_P[4]) / (den + ERF_Q[4]);
        exp_neg_sq(y) * (FRAC_1_SQRT_PI - r) / y
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        let z = y * y;
        let mut num = ERF_A[4] * z;
        let mut den = z;
        for i in 0..3 {
            num = (num + ERF_A[i]) * z;
            den = (den + ERF_B[i]) * z;
        }
        x * (num + ERF_A[3]) / (den + ERF_B[3])
    } else if x < 0.0 {
        erfc(y) - 1.0
    } else {
        1.0 - erfc(y)
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_741_78;
// Stirling series coefficients B_{2n} / (2n (2n-1)).
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

/// Natural log of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires a positive argument, got {x}");
    // Shift into the Stirling regime, then subtract the shift product.
    let mut shift = 0.0f64;
    let mut y = x;
    while y < 10.0 {
        shift += y.ln();
        y += 1.0;
    }
    let z = 1.0 / (y * y);
    let mut series = STIRLING[6];
    for c in STIRLING[..6].iter().rev() {
        series = c + z * series;
    }
    (y - 0.5) * y.ln() - y + HALF_LN_TWO_PI + series / y - shift
}

const GAMMA_MAX_ITER: usize = 500;

/// Regularized lower incomplete gamma P(a, x), split at x = a + 1 between
/// the power series and the continued fraction.
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        Ok(lower_series(a, x))
    } else {
        Ok(1.0 - upper_continued_fraction(a, x))
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed on
/// whichever side avoids cancellation.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - lower_series(a, x))
    } else {
        Ok(upper_continued_fraction(a, x))
    }
}

fn check_gamma_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gamma shape must be positive and finite, got {a}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "incomplete gamma argument must be non-negative, got {x}"
        )));
    }
    Ok(())
}

/// Prefactor x^a e^{-x} / Gamma(a), evaluated in log space.
fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (a * x.ln() - x - ln_gamma(a)).exp()
}

fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    for n in 1..=GAMMA_MAX_ITER {
        term *= x / (a + n as f64);
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    // Modified Lentz evaluation of the standard continued fraction.
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b.max(TINY);
    let mut h = d;
    for i in 1..=GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// Gamma density (scale 1) for Newton steps.
fn gamma_pdf(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ((a - 1.0) * x.ln() - x - ln_gamma(a)).exp()
}

const INV_MAX_ITER: usize = 200;

/// Convergence is relative to the target probability so quantiles stay
/// accurate deep in the tails, where the defining residual is tiny for
/// any nearby x.
fn inv_converged(f: f64, p: f64) -> bool {
    f.abs() <= 1e-13 * p.abs()
}

/// Bracket midpoint: geometric when the bracket spans decades (quantile
/// brackets in the deep lower tail can span hundreds of orders of
/// magnitude), arithmetic once it is tight.
fn bracket_midpoint(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 && hi > 4.0 * lo {
        (lo * hi).sqrt()
    } else {
        0.5 * (lo + hi)
    }
}

/// Inverse of P(a, .): the x with P(a, x) = p, for p in (0, 1).
///
/// Bracketed Newton in log space: with t = ln x the lower tail behaves
/// as ln P ~ a t + const, so the iteration jumps across the hundreds of
/// decades a deep-tail bracket can span instead of crawling through
/// them. Steps leaving the bracket fall back to its geometric midpoint.
pub fn inv_gamma_p(a: f64, p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) || p == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lower-tail probability must lie in (0, 1), got {p}"
        )));
    }
    // P(a, x) <= x^a / Gamma(a+1), so the leading-order solution is a
    // guaranteed lower bracket end.
    let lo_guess = ((p.ln() + ln_gamma(a + 1.0)) / a).exp();
    let mut lo = if lo_guess.is_finite() && gamma_p(a, lo_guess)? <= p {
        lo_guess
    } else {
        f64::MIN_POSITIVE
    };
    let mut hi = (2.0 * a + 10.0).max(lo * 2.0);
    for _ in 0..INV_MAX_ITER {
        if gamma_p(a, hi)? >= p {
            break;
        }
        hi *= 2.0;
    }
    let mut x = bracket_midpoint(lo, hi);
    for _ in 0..INV_MAX_ITER {
        let cdf = gamma_p(a, x)?;
        if inv_converged(cdf - p, p) {
            break;
        }
        if cdf > p {
            hi = x;
        } else {
            lo = x;
        }
        // d(ln P)/d(ln x) = x pdf / P.
        let slope = x * gamma_pdf(a, x) / cdf;
        let next = if cdf > 0.0 && slope.is_finite() && slope > 0.0 {
            x * ((p.ln() - cdf.ln()) / slope).exp()
        } else {
            f64::NAN
        };
        x = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            bracket_midpoint(lo, hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(x.max(f64::MIN_POSITIVE))
}

/// Inverse of Q(a, .): the x with Q(a, x) = q, for q in (0, 1). Same
/// bracketed scheme as [`inv_gamma_p`] with the decreasing tail.
pub fn inv_gamma_q(a: f64, q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&q) || q == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "upper-tail probability must lie in (0, 1), got {q}"
        )));
    }
    let mut lo = f64::MIN_POSITIVE;
    let mut hi = (2.0 * a + 10.0).max(2.0 * (-q.ln()));
    for _ in 0..INV_MAX_ITER {
        if gamma_q(a, hi)? <= q {
            break;
        }
        hi *= 2.0;
    }
    let mut x = bracket_midpoint(lo, hi);
    for _ in 0..INV_MAX_ITER {
        let ccdf = gamma_q(a, x)?;
        if inv_converged(ccdf - q, q) {
            break;
        }
        // Q decreases in x.
        if ccdf > q {
            lo = x;
        } else {
            hi = x;
        }
        let slope = x * gamma_pdf(a, x) / ccdf;
        let next = if ccdf > 0.0 && slope.is_finite() && slope > 0.0 {
            x * (-(q.ln() - ccdf.ln()) / slope).exp()
        } else {
            f64::NAN
        };
        x = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            bracket_midpoint(lo, hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    Ok(x.max(f64::MIN_POSITIVE))
}
