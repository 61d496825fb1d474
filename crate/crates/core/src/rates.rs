//! Achievable rates for parasitic (PSR) and commensal (CSR) symbiotic radio.
//!
//! All powers in watts. Preconditions p > 0 and 0 ≤ α ≤ 1 are the caller's.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{CascadeGains, SystemConfig, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Psr,
    Csr,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Psr => "psr",
            Mode::Csr => "csr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub r_s: f64,
    pub r_c: f64,
    pub mode: Mode,
    pub sic_feasible: bool,
    pub qos_feasible: bool,
}

/// Primary rate with the backscatter signal as interference.
pub fn rate_s_psr(p: f64, alpha: f64, gains: &CascadeGains, sigma2: f64) -> f64 {
    let interference = alpha * p * gains.backscatter_gain();
    (1.0 + p * gains.h_sr.norm_sqr() / (interference + sigma2)).log2()
}

/// Backscatter rate after the primary signal is cancelled.
pub fn rate_c_psr(p: f64, alpha: f64, gains: &CascadeGains, sigma2: f64) -> f64 {
    (alpha * p * gains.backscatter_gain() / sigma2).ln_1p() / std::f64::consts::LN_2
}

/// Same quantity averaged over `draws` unit-modulus primary symbols; the integrand
/// is constant, so this reproduces [`rate_c_psr`] exactly.
pub fn rate_c_psr_monte_carlo<R: Rng + ?Sized>(
    p: f64,
    alpha: f64,
    gains: &CascadeGains,
    sigma2: f64,
    draws: usize,
    rng: &mut R,
) -> f64 {
    let cascade = gains.h_sb * gains.h_br;
    let mut acc = 0.0;
    for _ in 0..draws {
        let s = C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
        acc += (alpha * p * (cascade * s).norm_sqr() / sigma2).ln_1p() / std::f64::consts::LN_2;
    }
    acc / draws as f64
}

/// Primary rate averaged over the two equiprobable BPSK backscatter symbols,
/// which act as an extra multipath component.
pub fn rate_s_csr(p: f64, alpha: f64, gains: &CascadeGains, sigma2: f64) -> f64 {
    let extra = alpha.sqrt() * gains.h_sb * gains.h_br;
    let branch = |h: C64| (1.0 + p * h.norm_sqr() / sigma2).log2();
    0.5 * branch(gains.h_sr + extra) + 0.5 * branch(gains.h_sr - extra)
}

/// Backscatter rate over a symbol η primary periods long.
pub fn rate_c_csr(p: f64, alpha: f64, gains: &CascadeGains, sigma2: f64, eta: u32) -> f64 {
    let eta = eta as f64;
    (eta * alpha * p * gains.backscatter_gain() / sigma2).ln_1p() / std::f64::consts::LN_2 / eta
}

/// SIC feasibility from the exact two-branch average.
pub fn sic_check_csr(p: f64, alpha: f64, gains: &CascadeGains, sigma2: f64, eps_sic: f64) -> bool {
    rate_s_csr(p, alpha, gains, sigma2) >= eps_sic
}

pub fn rate_report(mode: Mode, p: f64, alpha: f64, gains: &CascadeGains, config: &SystemConfig) -> RateReport {
    let s2 = config.noise_power;
    let (r_s, r_c) = match mode {
        Mode::Psr => (rate_s_psr(p, alpha, gains, s2), rate_c_psr(p, alpha, gains, s2)),
        Mode::Csr => (rate_s_csr(p, alpha, gains, s2), rate_c_csr(p, alpha, gains, s2, config.eta)),
    };
    RateReport { r_s, r_c, mode, sic_feasible: r_s >= config.eps_sic, qos_feasible: r_c >= config.eps_c }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use proptest::prelude::*;

    fn gains(sr: (f64, f64), sb: (f64, f64), br: (f64, f64)) -> CascadeGains {
        let c = |(re, im): (f64, f64)| C64::new(re, im);
        CascadeGains { h_sr: c(sr), h_sb: c(sb), h_br: c(br), h_sw: c((0.0, 0.0)), h_bw: c((0.0, 0.0)) }
    }

    fn arb_gains() -> impl Strategy<Value = CascadeGains> {
        let c = || (-1e-4f64..1e-4, -1e-4f64..1e-4);
        (c(), c(), c()).prop_map(|(a, b, d)| gains(a, b, d))
    }

    // Independent restatement of the four rate formulas in SNR terms.
    fn reference(p: f64, a: f64, g: &CascadeGains, s2: f64, eta: f64) -> [f64; 4] {
        let x = g.h_sr.norm_sqr() * p / s2;
        let y = g.h_sb.norm_sqr() * g.h_br.norm_sqr() * p / s2;
        let cross = 2.0 * (g.h_sr * (g.h_sb * g.h_br).conj()).re * a.sqrt() * p / s2;
        [
            (1.0 + x / (a * y + 1.0)).log2(),
            (1.0 + a * y).log2(),
            0.5 * ((1.0 + x + a * y + cross) * (1.0 + x + a * y - cross)).log2(),
            (1.0 + eta * a * y).log2() / eta,
        ]
    }

    #[test]
    fn limits() {
        let g = gains((1e-5, 0.0), (0.0, 0.0), (1e-5, 1e-5));
        let s2 = 1e-11;
        let free = (1.0f64 + 0.1 * 1e-10 / s2).log2();
        assert!((rate_s_psr(0.1, 0.5, &g, s2) - free).abs() < 1e-12);
        assert!((rate_s_csr(0.1, 0.5, &g, s2) - free).abs() < 1e-12);
        assert_eq!(rate_c_psr(0.1, 0.5, &g, s2), 0.0);
        let g = gains((0.0, 0.0), (1e-5, 0.0), (1e-5, 0.0));
        assert_eq!(rate_s_psr(0.1, 0.5, &g, s2), 0.0);
        assert_eq!(rate_c_psr(0.1, 0.0, &g, s2), 0.0);
        assert_eq!(rate_c_csr(0.1, 0.0, &g, s2, 8), 0.0);
        assert!(sic_check_csr(0.1, 0.5, &g, s2, 0.0));
        assert!(!sic_check_csr(1e-300, 0.5, &g, s2, 1.0));
    }

    #[test]
    fn constant_modulus_average_is_exact() {
        let g = gains((1e-5, 2e-6), (3e-6, -1e-6), (4e-6, 5e-7));
        let mut rng = RngStream::new(1, 1).rng();
        let mc = rate_c_psr_monte_carlo(0.3, 0.4, &g, 1e-11, 1000, &mut rng);
        assert!((mc - rate_c_psr(0.3, 0.4, &g, 1e-11)).abs() < 1e-12);
    }

    #[test]
    fn ratio_monotone_on_eta_grid() {
        let g = gains((1e-5, 2e-6), (3e-6, -1e-6), (4e-6, 5e-7));
        let r: Vec<f64> = (1..=64).map(|e| rate_c_csr(0.3, 0.4, &g, 1e-11, e)).collect();
        assert!(r.windows(2).all(|w| w[1] <= w[0]));
    }

    proptest! {
        #[test]
        fn matches_reference(g in arb_gains(), p in 1e-3f64..1.0, a in 1e-3f64..1.0, eta in 1u32..64) {
            let s2 = 1e-11;
            let want = reference(p, a, &g, s2, eta as f64);
            let got = [rate_s_psr(p, a, &g, s2), rate_c_psr(p, a, &g, s2), rate_s_csr(p, a, &g, s2), rate_c_csr(p, a, &g, s2, eta)];
            for (w, h) in want.iter().zip(got.iter()) {
                prop_assert!((w - h).abs() <= 1e-9 * w.abs().max(1.0));
            }
        }

        #[test]
        fn monotone_in_alpha_and_power(g in arb_gains(), p in 1e-3f64..1.0, a in 1e-3f64..0.5, eta in 1u32..16) {
            let s2 = 1e-11;
            prop_assert!(rate_s_psr(p, 2.0 * a, &g, s2) <= rate_s_psr(p, a, &g, s2));
            prop_assert!(rate_c_psr(p, 2.0 * a, &g, s2) >= rate_c_psr(p, a, &g, s2));
            prop_assert!(rate_c_psr(2.0 * p, a, &g, s2) >= rate_c_psr(p, a, &g, s2));
            prop_assert!(rate_c_csr(p, 2.0 * a, &g, s2, eta) >= rate_c_csr(p, a, &g, s2, eta));
            prop_assert!(rate_c_csr(2.0 * p, a, &g, s2, eta) >= rate_c_csr(p, a, &g, s2, eta));
        }

        #[test]
        fn csr_primary_beats_worst_branch(g in arb_gains(), p in 1e-3f64..1.0, a in 0.0f64..1.0) {
            let s2 = 1e-11;
            let worst = g.h_sr.norm() - a.sqrt() * (g.h_sb * g.h_br).norm();
            let bound = (1.0 + p * worst * worst / s2).log2();
            prop_assert!(rate_s_csr(p, a, &g, s2) >= bound - 1e-12 * bound.max(1.0));
        }

        #[test]
        fn unit_ratio_collapses_to_psr(g in arb_gains(), p in 1e-3f64..1.0, a in 0.0f64..1.0) {
            let s2 = 1e-11;
            let (x, y) = (rate_c_csr(p, a, &g, s2, 1), rate_c_psr(p, a, &g, s2));
            prop_assert!((x - y).abs() <= 1e-12 * y.max(1.0));
        }
    }
}
