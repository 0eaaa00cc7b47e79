//! Special-function kernel: Gamma, reciprocal Gamma, the generalized binomial
//! coefficient, the error function, and the bracket `⟨p⟩` that counts how many
//! classical derivatives sit outside the singular integral of a
//! Riemann-Liouville operator.

use std::f64::consts::PI;

/// Absolute tolerance for deciding whether an order is an integer.
///
/// Orders arrive from CLI text and are either exact or clearly non-integer,
/// so a tight tolerance is safe.
pub const INTEGER_TOL: f64 = 1e-12;

/// Classification of a fractional order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderClass {
    PositiveNonInteger,
    NegativeNonInteger,
    NonnegativeInteger,
    NegativeInteger,
}

/// A fractional order together with its classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Order {
    pub p: f64,
    pub class: OrderClass,
}

impl Order {
    /// Classify `p`, detecting integers within [`INTEGER_TOL`].
    pub fn classify(p: f64) -> Order {
        let class = match nearest_integer(p) {
            Some(k) if k >= 0 => OrderClass::NonnegativeInteger,
            Some(_) => OrderClass::NegativeInteger,
            None if p > 0.0 => OrderClass::PositiveNonInteger,
            None => OrderClass::NegativeNonInteger,
        };
        Order { p, class }
    }

    pub fn is_integer(&self) -> bool {
        matches!(
            self.class,
            OrderClass::NonnegativeInteger | OrderClass::NegativeInteger
        )
    }
}

/// Returns `Some(k)` when `x` is within [`INTEGER_TOL`] of the integer `k`.
pub fn nearest_integer(x: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= INTEGER_TOL && r.abs() < 2.0_f64.powi(53) {
        Some(r as i64)
    } else {
        None
    }
}

/// The bracket `⟨p⟩`: `floor(p)` for `p >= 0` and `-1` for `p < 0`.
///
/// `⟨p⟩ + 1` is the number of outer derivatives in the RL operator; it is
/// zero in the pure-integral case `p < 0`.
pub fn bracket(p: f64) -> i64 {
    assert!(p.is_finite(), "bracket requires a finite order, got {p}");
    if p >= 0.0 {
        // Guard against floor(2.9999999999999) style noise on exact integers.
        match nearest_integer(p) {
            Some(k) => k,
            None => p.floor() as i64,
        }
    } else {
        -1
    }
}

// Lanczos coefficients (g = 10.900511), Pugh's thesis; ~16 significant digits.
const LANCZOS_R: f64 = 10.900511;
const LANCZOS_DK: [f64; 11] = [
    2.485_740_891_387_535_7e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_4,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267_1,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412_2e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];
const TWO_SQRT_E_OVER_PI: f64 = 1.860_382_734_205_265_7;

fn lanczos_sum(x: f64) -> f64 {
    let mut s = LANCZOS_DK[0];
    for (i, dk) in LANCZOS_DK.iter().enumerate().skip(1) {
        s += dk / (x + i as f64 - 1.0);
    }
    s
}

/// Gamma function for real arguments (Lanczos approximation with reflection).
///
/// Returns NaN at the poles (nonpositive integers).
pub fn gamma(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    if x < 0.5 {
        if let Some(k) = nearest_integer(x) {
            if k <= 0 {
                return f64::NAN;
            }
        }
        // Reflection: Γ(x) Γ(1-x) = π / sin(πx).
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        lanczos_sum(x)
            * TWO_SQRT_E_OVER_PI
            * ((x - 0.5 + LANCZOS_R) / std::f64::consts::E).powf(x - 0.5)
    }
}

/// Reciprocal Gamma `1/Γ(x)`, continued as an entire function.
///
/// Exactly zero at the poles of Γ (nonpositive integers within
/// [`INTEGER_TOL`]); elsewhere computed via `sin(πx) Γ(1-x) / π` for
/// `x <= 0.5`, which stays stable near the poles.
pub fn recip_gamma(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    if let Some(k) = nearest_integer(x) {
        if k <= 0 {
            return 0.0;
        }
    }
    if x <= 0.5 {
        (PI * x).sin() * gamma(1.0 - x) / PI
    } else {
        1.0 / gamma(x)
    }
}

/// Generalized binomial coefficient `C(p, k) = ∏_{i=1..k}(p-i+1) / k!`.
///
/// The empty product gives `C(p, 0) = 1`; integer `p < k` makes the product
/// hit an exact zero factor. Built by the Pascal-type recurrence
/// `C(p, k) = C(p, k-1) (p-k+1)/k`, so the recurrence holds to rounding.
pub fn gen_binomial(p: f64, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 1..=k {
        c *= (p - i as f64 + 1.0) / i as f64;
    }
    c
}

/// Error function, full double accuracy.
///
/// Taylor series for |x| <= 2, continued fraction for the tail.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax <= 2.0 {
        // erf(x) = 2/√π Σ (-1)^n x^(2n+1) / (n! (2n+1))
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x2 / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    } else if ax >= 6.5 {
        x.signum()
    } else {
        x.signum() * (1.0 - erfc_cf(ax))
    }
}

/// Complementary error function via the Legendre continued fraction,
/// valid for x > 0 (used here for x > 2).
fn erfc_cf(x: f64) -> f64 {
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    // Evaluated with the modified Lentz algorithm.
    let tiny = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..200 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bracket_positive_noninteger() {
        assert_eq!(bracket(2.3), 2);
    }

    #[test]
    fn bracket_integer() {
        assert_eq!(bracket(3.0), 3);
    }

    #[test]
    fn bracket_negative() {
        assert_eq!(bracket(-2.5), -1);
        assert_eq!(bracket(-0.0001), -1);
    }

    #[test]
    fn bracket_counts_outer_derivatives() {
        // ⟨p⟩+1 outer derivatives for p >= 0; zero for p < 0.
        for p in [0.3, 1.7, 2.0, 4.2] {
            assert!(bracket(p) + 1 >= 1);
            assert_eq!(bracket(p), p.floor() as i64);
        }
        for p in [-0.3, -1.0, -2.7] {
            assert_eq!(bracket(p) + 1, 0);
        }
    }

    #[test]
    fn recip_gamma_values() {
        assert_relative_eq!(recip_gamma(1.0), 1.0, max_relative = 1e-14);
        assert_eq!(recip_gamma(0.0), 0.0);
        assert_eq!(recip_gamma(-3.0), 0.0);
        // 1/Γ(1/2) = 1/√π
        assert_relative_eq!(recip_gamma(0.5), 0.564_189_583_547_756_3, max_relative = 1e-13);
    }

    #[test]
    fn gamma_reflection_consistency() {
        // recip_gamma(x) · Γ(x) = 1 on [0.1, 10] off the poles.
        let mut x = 0.1;
        while x <= 10.0 {
            let prod = recip_gamma(x) * gamma(x);
            assert_relative_eq!(prod, 1.0, max_relative = 1e-12);
            x += 0.037;
        }
        // Negative non-integers too.
        for x in [-0.5, -1.5, -2.3, -4.7] {
            assert_relative_eq!(recip_gamma(x) * gamma(x), 1.0, max_relative = 1e-11);
        }
    }

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(1.5), PI.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(2.5), 1.329_340_388_179_137, max_relative = 1e-14);
    }

    #[test]
    fn gen_binomial_base_cases() {
        for p in [-1.3, 0.5, 2.0, 7.7] {
            assert_eq!(gen_binomial(p, 0), 1.0);
        }
        // Direct evaluation of the product formula: (1/2)(1/2 - 1)/2! = -1/8.
        assert_relative_eq!(gen_binomial(0.5, 2), -0.125, max_relative = 1e-15);
        // Integer p < k kills the product exactly.
        assert_eq!(gen_binomial(3.0, 5), 0.0);
    }

    #[test]
    fn gen_binomial_pascal_recurrence() {
        for p in [-1.7, -0.5, 1.0 / 3.0, 1.0, 2.5, 6.0] {
            for k in 1..=20usize {
                let lhs = gen_binomial(p, k);
                let rhs = gen_binomial(p, k - 1) * (p - k as f64 + 1.0) / k as f64;
                let scale = lhs.abs().max(rhs.abs()).max(1e-300);
                assert!(
                    (lhs - rhs).abs() <= 1e-13 * scale,
                    "recurrence failed p={p} k={k}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn order_classification() {
        assert_eq!(Order::classify(0.5).class, OrderClass::PositiveNonInteger);
        assert_eq!(Order::classify(-0.5).class, OrderClass::NegativeNonInteger);
        assert_eq!(Order::classify(2.0).class, OrderClass::NonnegativeInteger);
        assert_eq!(Order::classify(0.0).class, OrderClass::NonnegativeInteger);
        assert_eq!(Order::classify(-3.0).class, OrderClass::NegativeInteger);
        assert_eq!(
            Order::classify(2.0 + 0.9e-12).class,
            OrderClass::NonnegativeInteger
        );
    }

    #[test]
    fn erf_reference_values() {
        // Series oracle, independent of the implementation's tail branch.
        let series = |x: f64| {
            let mut term = x;
            let mut sum = x;
            for n in 1..200 {
                term *= -x * x / n as f64;
                sum += term / (2.0 * n as f64 + 1.0);
            }
            2.0 / PI.sqrt() * sum
        };
        for x in [0.1, 0.5, 1.0, 1.9, 2.5, 3.0] {
            assert_relative_eq!(erf(x), series(x), max_relative = 1e-13);
            assert_relative_eq!(erf(-x), -erf(x), max_relative = 1e-15);
        }
        assert_relative_eq!(erf(1.0), 0.842_700_792_949_714_9, max_relative = 1e-14);
        assert_eq!(erf(10.0), 1.0);
    }
}
