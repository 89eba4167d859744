//! Special functions used by the bath machinery.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Bernoulli numbers B_2, B_4, ..., B_16.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Real part above which the asymptotic series is used directly.
const ASYMPTOTIC_RE: f64 = 10.0;

/// Trigamma function ψ⁽¹⁾(z) for complex `z`.
///
/// Upward recurrence ψ⁽¹⁾(z) = ψ⁽¹⁾(z+1) + 1/z² shifts the argument until
/// Re(z) ≥ 10, where the Bernoulli asymptotic series is summed to 8 terms.
/// Poles at the non-positive integers are rejected.
pub fn trigamma(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("trigamma of non-finite argument {z}")));
    }
    if z.im.abs() < 1e-12 && z.re <= 1e-12 && (z.re - z.re.round()).abs() < 1e-12 {
        return Err(Error::Domain(format!("trigamma pole at z = {z}")));
    }
    Ok(trigamma_unchecked(z))
}

/// [`trigamma`] without the pole check; callers guarantee Re(z) > 0 or Im(z) ≠ 0.
#[inline]
pub(crate) fn trigamma_unchecked(mut z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while z.re < ASYMPTOTIC_RE {
        acc += (z * z).inv();
        z += 1.0;
    }
    let w = z.inv();
    let w2 = w * w;
    // 1/z + 1/(2z²) + Σ B_2k / z^(2k+1)
    let mut series = Complex64::new(0.0, 0.0);
    for b in BERNOULLI.iter().rev() {
        series = (series + b) * w2;
    }
    acc + w + 0.5 * w2 + series * w
}

/// Bose-Einstein occupation N(ω) = 1/(e^{βω} − 1).
///
/// For |βω| < 1e-8 the series 1/(βω) − 1/2 is returned. Negative frequencies are
/// allowed and satisfy N(−ω) = −(1 + N(ω)).
pub fn bose_occupation(omega: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", format!("must be positive, got {beta}")));
    }
    let x = beta * omega;
    if x == 0.0 {
        return Err(Error::Domain("Bose occupation is singular at omega = 0".into()));
    }
    if x.abs() < 1e-8 {
        return Ok(1.0 / x - 0.5);
    }
    Ok(1.0 / x.exp_m1())
}

/// x / (1 − e^{−x}), i.e. x·(1 + N) at unit β, continuous through x = 0.
#[inline]
pub(crate) fn x_one_plus_n(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        1.0 + 0.5 * x
    } else {
        -x / (-x).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trigamma_known_values() {
        let z1 = trigamma(c(1.0, 0.0)).unwrap();
        assert_relative_eq!(z1.re, PI * PI / 6.0, max_relative = 1e-13);
        assert!(z1.im.abs() < 1e-15);
        let z2 = trigamma(c(2.0, 0.0)).unwrap();
        assert_relative_eq!(z2.re, PI * PI / 6.0 - 1.0, max_relative = 1e-13);
        // ψ⁽¹⁾(1/2) = π²/2
        assert_relative_eq!(trigamma(c(0.5, 0.0)).unwrap().re, PI * PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn trigamma_small_argument_against_series() {
        // Brute-force Σ_{k<N} 1/(z+k)² with Euler–Maclaurin tail 1/(z+N) + 1/(2(z+N)²) + 1/(6(z+N)³).
        let z = 0.1;
        let n = 10_000_000u64;
        let mut sum = 0.0;
        for k in (0..n).rev() {
            let x = z + k as f64;
            sum += 1.0 / (x * x);
        }
        let zn = z + n as f64;
        sum += 1.0 / zn + 0.5 / (zn * zn) + 1.0 / (6.0 * zn * zn * zn);
        let got = trigamma(c(z, 0.0)).unwrap().re;
        assert_relative_eq!(got, sum, max_relative = 1e-13);
        assert_relative_eq!(got, 101.43329915079275, max_relative = 1e-12);
    }

    #[test]
    fn trigamma_rejects_poles() {
        for re in [0.0, -1.0, -7.0] {
            assert!(matches!(trigamma(c(re, 0.0)), Err(Error::Domain(_))));
        }
        assert!(trigamma(c(-1.0, 1e-3)).is_ok());
        assert!(trigamma(c(-0.5, 0.0)).is_ok());
    }

    #[test]
    fn bose_values() {
        assert_relative_eq!(bose_occupation(1.0, 1.0).unwrap(), 1.0 / (1f64.exp() - 1.0), max_relative = 1e-14);
        assert_relative_eq!(bose_occupation(1.0, 1.0).unwrap(), 0.5819767068693265, max_relative = 1e-12);
        assert_relative_eq!(bose_occupation(-1.0, 1.0).unwrap(), -1.5819767068693265, max_relative = 1e-12);
        assert_eq!(bose_occupation(1000.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(bose_occupation(1e-10, 1.0).unwrap(), 1e10 - 0.5, max_relative = 1e-15);
        assert!(bose_occupation(0.0, 1.0).is_err());
        assert!(bose_occupation(1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn trigamma_recurrence(re in 1e-3f64..20.0, im in -50.0f64..50.0) {
            let z = c(re, im);
            let lhs = trigamma(z).unwrap() - trigamma(z + 1.0).unwrap() - (z * z).inv();
            let scale = 1.0f64.max((z * z).inv().norm());
            prop_assert!(lhs.norm() < 1e-12 * scale, "residual {} at {}", lhs.norm(), z);
        }

        #[test]
        fn trigamma_conjugation(re in 1e-3f64..20.0, im in -50.0f64..50.0) {
            let z = c(re, im);
            let d = trigamma(z.conj()).unwrap() - trigamma(z).unwrap().conj();
            prop_assert!(d.norm() < 1e-14 * trigamma(z).unwrap().norm().max(1.0));
        }

        #[test]
        fn bose_reflection(omega in prop_oneof![-50.0f64..-1e-6, 1e-6f64..50.0], beta in 0.05f64..10.0) {
            let s = bose_occupation(omega, beta).unwrap() + bose_occupation(-omega, beta).unwrap();
            prop_assert!((s + 1.0).abs() < 1e-9 * (1.0 + bose_occupation(omega.abs(), beta).unwrap()));
        }
    }
}
