use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
// Below this the ascending series is cheaper and loses < 2 digits to cancellation.
const SERIES_LIMIT: f64 = 2.0;
const MAX_TERMS: usize = 10_000;

/// Modified Bessel function of the second kind, order zero.
pub fn bessel_k0(x: f64) -> Result<f64> {
    check_domain("bessel_k0", x)?;
    Ok(if x <= SERIES_LIMIT { k0_series(x) } else { k01_continued_fraction(x).0 })
}

/// Modified Bessel function of the second kind, order one.
pub fn bessel_k1(x: f64) -> Result<f64> {
    check_domain("bessel_k1", x)?;
    Ok(if x <= SERIES_LIMIT { k1_series(x) } else { k01_continued_fraction(x).1 })
}

fn check_domain(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value: x })
    }
}

fn k0_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut harmonic = 0.0;
    let mut tail = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= y / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term * harmonic < 1e-18 * tail.abs().max(i0) {
            break;
        }
    }
    -((0.5 * x).ln() + EULER_GAMMA) * i0 + tail
}

fn k1_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    // term_k = y^k / (k! (k+1)!)
    let mut term = 1.0;
    let mut i1_sum = 1.0;
    // psi(k+1) + psi(k+2) at k = 0
    let mut psi_sum = -2.0 * EULER_GAMMA + 1.0;
    let mut tail = psi_sum;
    for k in 1..200 {
        let kf = k as f64;
        term *= y / (kf * (kf + 1.0));
        psi_sum += 1.0 / kf + 1.0 / (kf + 1.0);
        i1_sum += term;
        tail += term * psi_sum;
        if term * psi_sum.abs() < 1e-18 * tail.abs() {
            break;
        }
    }
    let i1 = 0.5 * x * i1_sum;
    1.0 / x + (0.5 * x).ln() * i1 - 0.25 * x * tail
}

// Steed's continued fraction for K_nu / K_{nu+1} at nu = 0 (Temme's normalization).
fn k01_continued_fraction(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_TERMS {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Integral representation K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt,
    // summed by the trapezoid rule (exponentially convergent here).
    fn k_oracle(nu: f64, x: f64) -> f64 {
        let h: f64 = 1e-3;
        let mut sum = 0.5 * (-x).exp();
        let mut t = h;
        loop {
            let term = (-x * t.cosh()).exp() * (nu * t).cosh();
            sum += term;
            if term < 1e-300 || t > 40.0 {
                break;
            }
            t += h;
        }
        sum * h
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn frozen_values() {
        let cases = [
            (1.0, 0.421_024_438_240_708_33, 0.601_907_230_197_234_6),
            (10.0, 1.778_006_231_616_918e-5, 1.864_877_345_382_558e-5),
        ];
        for (x, k0, k1) in cases {
            assert!(rel(bessel_k0(x).unwrap(), k0) < 1e-12, "K0({x})");
            assert!(rel(bessel_k1(x).unwrap(), k1) < 1e-12, "K1({x})");
        }
    }

    #[test]
    fn agrees_with_integral_representation() {
        let mut x: f64 = 1e-3;
        while x < 50.0 {
            assert!(rel(bessel_k0(x).unwrap(), k_oracle(0.0, x)) < 1e-10, "K0({x})");
            assert!(rel(bessel_k1(x).unwrap(), k_oracle(1.0, x)) < 1e-10, "K1({x})");
            x *= 1.37;
        }
    }

    #[test]
    fn continuous_across_branch_switch() {
        for x in [SERIES_LIMIT - 1e-12, SERIES_LIMIT + 1e-12] {
            assert!(rel(k0_series(x), k01_continued_fraction(x).0) < 1e-12);
            assert!(rel(k1_series(x), k01_continued_fraction(x).1) < 1e-12);
        }
    }

    #[test]
    fn small_argument_limits() {
        let x = 1e-6;
        assert!((x * bessel_k1(x).unwrap() - 1.0).abs() < 1e-10);
        assert!(bessel_k0(1e-12).unwrap() > bessel_k0(1e-6).unwrap());
        assert!(bessel_k0(1e-300).unwrap() > 600.0);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(bessel_k0(0.0).is_err());
        assert!(bessel_k1(-1.0).is_err());
        assert!(bessel_k0(f64::NAN).is_err());
    }

    #[test]
    fn k1_dominates_k0() {
        for i in 1..=500 {
            let x = 0.1 * i as f64;
            assert!(bessel_k1(x).unwrap() > bessel_k0(x).unwrap());
        }
    }

    #[test]
    fn derivative_of_k0_is_minus_k1() {
        let h = 1e-5;
        let mut x = 0.5;
        while x <= 10.0 {
            let fd = -(bessel_k0(x + h).unwrap() - bessel_k0(x - h).unwrap()) / (2.0 * h);
            assert!(rel(fd, bessel_k1(x).unwrap()) < 1e-6, "x = {x}");
            x += 0.25;
        }
    }
}
