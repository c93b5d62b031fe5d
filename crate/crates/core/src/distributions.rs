//! Special functions and the handful of distributions inference needs:
//! standard normal, Student t, Fisher F (upper tail only) and the asymptotic
//! Kolmogorov law.
//!
//! Everything is generic over [`Scalar`]; series and continued fractions stop
//! at the scalar's machine epsilon, so `f64` callers get close to full double
//! precision.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probability strictly inside (0, 1), e.g. a significance level.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TailProbability<T>(T);

impl<T: Scalar> TailProbability<T> {
    pub fn new(p: T) -> Result<Self> {
        if p > T::zero() && p < T::one() {
            Ok(TailProbability(p))
        } else {
            Err(Error::InvalidProbability(p.to_f64().unwrap_or(f64::NAN)))
        }
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }
}

const MAX_ITER: usize = 500;

fn check_df<T: Scalar>(df: T) -> Result<()> {
    if df > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidDegreesOfFreedom(df.as_f64()))
    }
}

/// `erfc(x)` for `x ≥ 0`.
///
/// Below 2.5 uses the positive-term series
/// `erf x = 2/√π · e^{-x²} Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))`; above it a
/// Lentz-evaluated continued fraction for `erfc`.
fn erfc_nonneg<T: Scalar>(x: T) -> T {
    let two = T::lit(2.0);
    let frac_2_sqrt_pi = T::FRAC_2_SQRT_PI();
    if x < T::lit(2.5) {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        for n in 1..MAX_ITER {
            term = term * two * x2 / T::from_usize_lossy(2 * n + 1);
            sum = sum + term;
            if term < sum * T::epsilon() {
                break;
            }
        }
        T::one() - frac_2_sqrt_pi * (-x2).exp() * sum
    } else {
        // erfc x = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        let tiny = T::min_positive_value() / T::epsilon();
        let mut f = x;
        let mut c = x;
        let mut d = T::zero();
        for k in 1..MAX_ITER {
            let a = T::from_usize_lossy(k) / two;
            d = x + a * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = x + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = T::one() / d;
            let delta = c * d;
            f = f * delta;
            if (delta - T::one()).abs() < T::epsilon() {
                break;
            }
        }
        (-x * x).exp() / (f * T::PI().sqrt())
    }
}

/// Complementary error function.
pub fn erfc<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        erfc_nonneg(x)
    } else {
        T::lit(2.0) - erfc_nonneg(-x)
    }
}

pub fn normal_pdf<T: Scalar>(x: T) -> T {
    (-x * x / T::lit(2.0)).exp() / (T::TAU()).sqrt()
}

/// Standard normal CDF Φ(x).
pub fn normal_cdf<T: Scalar>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    erfc(-x / T::SQRT_2()) / T::lit(2.0)
}

/// Upper tail `1 − Φ(x)` without cancellation.
pub fn normal_sf<T: Scalar>(x: T) -> T {
    normal_cdf(-x)
}

/// Φ⁻¹(p): Acklam's rational approximation followed by Halley refinement.
pub fn normal_quantile<T: Scalar>(p: T) -> Result<T> {
    let p = TailProbability::new(p)?.get();
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let pf = p.as_f64();
    let p_low = 0.02425;
    let x0 = if pf < p_low {
        let q = (-2.0 * pf.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if pf <= 1.0 - p_low {
        let q = pf - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - pf).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = T::lit(x0);
    let half = T::lit(0.5);
    for _ in 0..3 {
        // Work on the smaller tail so the residual keeps full precision.
        let e = if p < half {
            normal_cdf(x) - p
        } else {
            (T::one() - p) - normal_sf(x)
        };
        let pdf = normal_pdf(x);
        if pdf == T::zero() {
            break;
        }
        let u = e / pdf;
        let step = u / (T::one() + x * u / T::lit(2.0));
        x = x - step;
        if step.abs() <= T::epsilon() * x.abs().max(T::one()) {
            break;
        }
    }
    Ok(x)
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < T::lit(0.5) {
        // reflection
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let g = T::lit(7.0);
    let mut a = T::lit(COEF[0]);
    let t = x + g + T::lit(0.5);
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a = a + T::lit(c) / (x + T::from_usize_lossy(i));
    }
    T::lit(0.5) * T::TAU().ln() + (x + T::lit(0.5)) * t.ln() - t + a.ln()
}

/// ln B(a, b).
pub fn ln_beta<T: Scalar>(a: T, b: T) -> T {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction<T: Scalar>(a: T, b: T, x: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let tiny = T::min_positive_value() / T::epsilon();
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = one / d;
    let mut h = d;
    for m in 1..=MAX_ITER * 20 {
        let m = T::from_usize_lossy(m);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() <= T::epsilon() {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn inc_beta<T: Scalar>(a: T, b: T, x: T) -> T {
    let one = T::one();
    if x <= T::zero() {
        return T::zero();
    }
    if x >= one {
        return one;
    }
    let ln_front = a * x.ln() + b * (one - x).ln() - ln_beta(a, b);
    if x < (a + one) / (a + b + T::lit(2.0)) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        one - ln_front.exp() * beta_continued_fraction(b, a, one - x) / b
    }
}

/// Upper tail `P(T > t)` for `t ≥ 0`, computed directly from the incomplete beta.
fn student_upper_tail<T: Scalar>(t: T, df: T) -> T {
    if t.is_infinite() {
        return T::zero();
    }
    let x = df / (df + t * t);
    inc_beta(df / T::lit(2.0), T::lit(0.5), x) / T::lit(2.0)
}

/// Student t CDF.
pub fn student_cdf<T: Scalar>(x: T, df: T) -> Result<T> {
    check_df(df)?;
    if x.is_nan() {
        return Ok(x);
    }
    let tail = student_upper_tail(x.abs(), df);
    Ok(if x >= T::zero() { T::one() - tail } else { tail })
}

/// Two-sided p-value `2·P(T > |t|)`.
pub fn student_two_sided_p<T: Scalar>(t: T, df: T) -> Result<T> {
    check_df(df)?;
    Ok((T::lit(2.0) * student_upper_tail(t.abs(), df)).min(T::one()))
}

pub fn student_pdf<T: Scalar>(x: T, df: T) -> T {
    let half = T::lit(0.5);
    let ln_norm = ln_gamma((df + T::one()) * half) - ln_gamma(df * half) - half * (df * T::PI()).ln();
    (ln_norm - (df + T::one()) * half * (T::one() + x * x / df).ln()).exp()
}

/// Student t quantile by safeguarded Newton iteration on the upper tail.
pub fn student_quantile<T: Scalar>(p: T, df: T) -> Result<T> {
    let p = TailProbability::new(p)?.get();
    check_df(df)?;
    let half = T::lit(0.5);
    if p == half {
        return Ok(T::zero());
    }
    // Solve P(T > x) = q with x > 0, then restore the sign.
    let (q, sign) = if p > half {
        (T::one() - p, T::one())
    } else {
        (p, -T::one())
    };
    let mut lo = T::zero();
    let mut hi = T::one();
    while student_upper_tail(hi, df) > q {
        lo = hi;
        hi = hi * T::lit(2.0);
        if !hi.is_finite() {
            return Ok(sign * T::infinity());
        }
    }
    let mut x = (lo + hi) * half;
    let tol = T::epsilon() * T::lit(16.0);
    for _ in 0..MAX_ITER {
        let f = student_upper_tail(x, df) - q;
        if f > T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        // tail is decreasing, so d(tail)/dx = -pdf
        let pdf = student_pdf(x, df);
        let newton = x + f / pdf;
        let next = if pdf > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * half
        };
        let done = (next - x).abs() <= tol * x.abs().max(T::one()) || hi - lo <= tol * hi;
        x = next;
        if done {
            break;
        }
    }
    Ok(sign * x)
}

/// Upper tail `P(F > f)` of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_sf<T: Scalar>(f: T, d1: T, d2: T) -> Result<T> {
    check_df(d1)?;
    check_df(d2)?;
    if f <= T::zero() {
        return Ok(T::one());
    }
    let two = T::lit(2.0);
    Ok(inc_beta(d2 / two, d1 / two, d2 / (d2 + d1 * f)))
}

/// Asymptotic Kolmogorov p-value `P(K > √n·d)`.
///
/// Uses `2 Σ (−1)^{k−1} e^{−2k²λ²}` for `λ ≥ 1`, and the equivalent theta-function form
/// `1 − √(2π)/λ Σ e^{−(2k−1)²π²/(8λ²)}` below, where the alternating series
/// converges too slowly. Result clamped to [0, 1].
pub fn kolmogorov_pvalue<T: Scalar>(d: T, n: usize) -> T {
    let lambda = T::from_usize_lossy(n.max(1)).sqrt() * d.max(T::zero());
    let cutoff = T::lit(1e-12).max(T::epsilon());
    let p = if lambda <= T::lit(1e-3) {
        T::one()
    } else if lambda < T::one() {
        let pi2 = T::PI() * T::PI();
        let l2 = lambda * lambda;
        let mut sum = T::zero();
        for k in 1..MAX_ITER {
            let m = T::from_usize_lossy(2 * k - 1);
            let term = (-(m * m) * pi2 / (T::lit(8.0) * l2)).exp();
            sum = sum + term;
            if term < cutoff * sum.max(T::min_positive_value()) || term == T::zero() {
                break;
            }
        }
        T::one() - T::TAU().sqrt() / lambda * sum
    } else {
        let l2 = lambda * lambda;
        let mut sum = T::zero();
        for k in 1..MAX_ITER {
            let kk = T::from_usize_lossy(k * k);
            let term = (-T::lit(2.0) * kk * l2).exp();
            sum = if k % 2 == 1 { sum + term } else { sum - term };
            if term < cutoff {
                break;
            }
        }
        T::lit(2.0) * sum
    };
    p.max(T::zero()).min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0f64), 0.5);
        assert!(normal_cdf(10.0f64) > 1.0 - 1e-15);
        assert!((normal_cdf(1.959964f64) - 0.975).abs() < 1e-6);
        assert!((normal_cdf(-1.0f64) - 0.158_655_253_931_457_05).abs() < 1e-15);
    }

    #[test]
    fn normal_quantile_values() {
        assert_eq!(normal_quantile(0.5f64).unwrap(), 0.0);
        assert!((normal_quantile(0.975f64).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        for &p in &[1e-6f64, 0.01, 0.3, 0.77, 0.999] {
            let a = normal_quantile(p).unwrap();
            let b = normal_quantile(1.0 - p).unwrap();
            assert!((a + b).abs() < 1e-8, "p={p}");
            assert!((normal_cdf(a) - p).abs() <= 1e-10);
        }
        assert!(normal_quantile(0.0f64).is_err());
        assert!(normal_quantile(1.0f64).is_err());
    }

    #[test]
    fn student_values() {
        assert_eq!(student_cdf(0.0f64, 3.7).unwrap(), 0.5);
        assert!((student_quantile(0.975f64, 10.0).unwrap() - 2.2281).abs() < 5e-4);
        // Cauchy closed form: F(x) = 1/2 + atan(x)/π
        for &x in &[-3.0f64, -0.4, 0.2, 1.0, 7.5] {
            let exact = 0.5 + x.atan() / std::f64::consts::PI;
            assert!((student_cdf(x, 1.0).unwrap() - exact).abs() < 1e-13);
        }
        // df = 2 closed form: F(x) = 1/2 + x / (2 sqrt(2 + x²))
        for &x in &[-2.0f64, 0.5, 3.0] {
            let exact = 0.5 + x / (2.0 * (2.0 + x * x).sqrt());
            assert!((student_cdf(x, 2.0).unwrap() - exact).abs() < 1e-13);
        }
        assert!(student_cdf(1.0f64, 0.0).is_err());
        assert!(student_quantile(0.9f64, -1.0).is_err());
    }

    #[test]
    fn gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12 * fact.ln().abs().max(1.0));
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5f64) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn f_tail_matches_t_squared() {
        // F(1, d) is the square of t(d).
        let t = 1.7f64;
        let p_t = student_two_sided_p(t, 9.0).unwrap();
        let p_f = f_sf(t * t, 1.0, 9.0).unwrap();
        assert!((p_t - p_f).abs() < 1e-13);
    }

    #[test]
    fn kolmogorov_values() {
        assert_eq!(kolmogorov_pvalue(0.0f64, 10), 1.0);
        assert!(kolmogorov_pvalue(1.0f64, 1000) < 1e-100);
        let n = 10_000;
        let d = 1.36 / (n as f64).sqrt();
        assert!((kolmogorov_pvalue(d, n) - 0.049).abs() < 0.003);
        // both branches agree at the switch point
        let below = kolmogorov_pvalue(0.999_999_9f64, 1);
        let above = kolmogorov_pvalue(1.0f64, 1);
        assert!((below - above).abs() < 1e-6);
    }

    #[test]
    fn single_precision_kernel() {
        assert!((normal_quantile(0.975f32).unwrap() - 1.959_964f32).abs() < 1e-4);
        assert!((student_quantile(0.975f32, 10.0).unwrap() - 2.2281f32).abs() < 1e-3);
    }
}
