use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Gauss–Kronrod 7/15 abscissae and weights on [−1, 1]. Endpoints are never sampled.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
// Gauss weights for the odd-index Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 2000 }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let pair = f(c - h * x) + f(c + h * x);
        k += w * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    Segment { a, b, value: k * h, error: ((k - g) * h).abs() }
}

/// Adaptive Gauss–Kronrod integration to absolute tolerance `tol`.
pub fn integrate_adaptive(f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with(f, a, b, IntegrateOptions { abs_tol: tol, rel_tol: 0.0, ..Default::default() })
}

/// Global adaptive bisection: always splits the segment with the largest error estimate.
/// Stops when the summed estimate falls below max(abs_tol, rel_tol·|I|).
pub fn integrate_with(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, opts: IntegrateOptions) -> Result<f64> {
    if !(a < b) {
        if a == b {
            return Ok(0.0);
        }
        return Err(Error::Domain { what: "integrate_adaptive (a < b)", value: a - b });
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&mut f, a, b);
    let mut total = first.value;
    let mut err = first.error;
    heap.push(first);
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::NonConvergence {
                what: "integrate_adaptive",
                detail: format!("error estimate {err:.3e} after {} subintervals", heap.len()),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Segment at machine resolution; its estimate cannot improve.
            return Err(Error::NonConvergence {
                what: "integrate_adaptive",
                detail: format!("interval collapsed near {mid:e}"),
            });
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of incremental updates.
    Ok(heap.iter().map(|s| s.value).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bessel_k0;

    #[test]
    fn constant_and_polynomial() {
        assert!((integrate_adaptive(|_| 1.0, 0.0, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-14);
        let v = integrate_adaptive(|x| x.powi(5), -1.0, 2.0, 1e-12).unwrap();
        assert!((v - 63.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn log_singular_endpoint() {
        // ∫₀¹ ln x dx = −1
        let v = integrate_adaptive(|x| x.ln(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v + 1.0).abs() < 1e-11);
    }

    #[test]
    fn u_k0_has_unit_mass() {
        // ∫₀^∞ u K0(u) du = 1; tail beyond 60 is below 1e-24.
        let v = integrate_adaptive(|u| u * bessel_k0(u).unwrap(), 0.0, 60.0, 1e-13).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k0_of_scaled_root_integrates_to_inverse_square() {
        // ∫₀^T K0(2λ√x) dx → 1/(2λ²)
        for m in [1.0, 10.0, 30.0] {
            let lambda: f64 = 1.0 / m;
            let top = (40.0 / (2.0 * lambda)).powi(2);
            let v = integrate_with(
                |x| bessel_k0(2.0 * lambda * x.sqrt()).unwrap(),
                0.0,
                top,
                IntegrateOptions { abs_tol: 0.0, rel_tol: 1e-11, max_intervals: 4000 },
            )
            .unwrap();
            let want = 1.0 / (2.0 * lambda * lambda);
            assert!(((v - want) / want).abs() < 1e-10, "M = {m}");
        }
    }

    #[test]
    fn empty_and_reversed_intervals() {
        assert_eq!(integrate_adaptive(|x| x, 1.0, 1.0, 1e-9).unwrap(), 0.0);
        assert!(integrate_adaptive(|x| x, 2.0, 1.0, 1e-9).is_err());
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let opts = IntegrateOptions { abs_tol: 1e-15, rel_tol: 0.0, max_intervals: 4 };
        assert!(integrate_with(|x| (1.0 / x).sin(), 1e-4, 1.0, opts).is_err());
    }
}
