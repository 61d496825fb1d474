//! Closed-form choice of the reflection coefficient α and transmit power p,
//! and the CSR SNR-regime split.

use serde::{Deserialize, Serialize};

use crate::channel::{CascadeGains, C64};
use crate::error::{Error, Result};

/// Feasible reflection coefficients [lower, min(1, upper)].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaRegion {
    pub lower: f64,
    pub upper: f64,
    /// lower > 0 and lower ≤ min(1, upper).
    pub feasible: bool,
}

impl AlphaRegion {
    fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper, feasible: lower > 0.0 && lower <= upper.min(1.0) }
    }
}

/// PSR: the QoS requirement bounds α from below, SIC decodability from above.
pub fn alpha_region_psr(p: f64, gains: &CascadeGains, sigma2: f64, gamma_c: f64, gamma_sic: f64) -> AlphaRegion {
    let bg = p * gains.backscatter_gain();
    let lower = gamma_c * sigma2 / bg;
    let upper = (p * gains.h_sr.norm_sqr() - sigma2 * gamma_sic) / (gamma_sic * bg);
    AlphaRegion::new(lower, upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrRegime {
    Low,
    High,
}

impl SnrRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            SnrRegime::Low => "low",
            SnrRegime::High => "high",
        }
    }
}

/// High iff p|h_SR|²/σ₀² ≥ (γ_SIC + 1)/4.
pub fn snr_regime(p: f64, h_sr: C64, sigma2: f64, gamma_sic: f64) -> SnrRegime {
    if p * h_sr.norm_sqr() / sigma2 >= 0.25 * (gamma_sic + 1.0) {
        SnrRegime::High
    } else {
        SnrRegime::Low
    }
}

/// How the CSR SIC requirement turns into a lower bound on α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsrSicBound {
    /// Exact inversion of the two-branch BPSK primary rate.
    #[default]
    Exact,
    /// Worst-case cross term, product threshold 1 + γ_SIC, coefficient 3 on p|h_SR|².
    Printed,
    /// As `Printed` with the coefficient re-derived as 1.
    Rederived,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsrAlphaBound {
    /// (2^{ηε_c} − 1)σ₀² / (p·η·|h_SB|²|h_BR|²).
    pub qos: f64,
    /// The SIC-driven bound when it binds above `qos`.
    pub sic: Option<f64>,
    pub lower: f64,
    pub feasible: bool,
    pub regime: SnrRegime,
}

/// Smallest admissible α for CSR.
///
/// `Exact` ignores `regime` and solves the two-branch condition directly: with
/// x = p/σ₀², A = |h_SR|², B = |h_SB h_BR|², C = 2 Re(h_SR·conj(h_SB h_BR)),
/// (1 + x(A + αB))² − x²C²α ≥ (1 + γ_SIC)² is a quadratic in α with positive
/// leading term, so the infeasible α form one interval.
#[allow(clippy::too_many_arguments)]
pub fn alpha_lower_csr(
    p: f64,
    gains: &CascadeGains,
    sigma2: f64,
    gamma_sic: f64,
    eta: u32,
    eps_c: f64,
    regime: SnrRegime,
    form: CsrSicBound,
) -> CsrAlphaBound {
    let eta_f = eta as f64;
    let bg = p * gains.backscatter_gain();
    let qos = ((eta_f * eps_c).exp2() - 1.0) * sigma2 / (eta_f * bg);
    let sic = match form {
        CsrSicBound::Exact => exact_sic_bound(p, gains, sigma2, gamma_sic, qos),
        CsrSicBound::Printed | CsrSicBound::Rederived if regime == SnrRegime::Low => {
            let coeff = if form == CsrSicBound::Printed { 3.0 } else { 1.0 };
            let ps = p * gains.h_sr.norm_sqr();
            let disc = sigma2 * sigma2 * (1.0 + gamma_sic) - 4.0 * sigma2 * ps;
            Some((disc.max(0.0).sqrt() - sigma2 + coeff * ps) / bg).filter(|&b| b > qos)
        }
        _ => None,
    };
    let lower = sic.unwrap_or(qos);
    CsrAlphaBound { qos, sic, lower, feasible: lower > 0.0 && lower <= 1.0, regime }
}

fn exact_sic_bound(p: f64, gains: &CascadeGains, sigma2: f64, gamma_sic: f64, floor: f64) -> Option<f64> {
    let x = p / sigma2;
    let a = gains.h_sr.norm_sqr();
    let b = gains.backscatter_gain();
    let c = 2.0 * (gains.h_sr * (gains.h_sb * gains.h_br).conj()).re;
    let target = (1.0 + gamma_sic).powi(2);
    // q2·α² + q1·α + q0 ≥ 0
    let q2 = x * x * b * b;
    let q1 = 2.0 * (1.0 + x * a) * x * b - x * x * c * c;
    let q0 = (1.0 + x * a).powi(2) - target;
    let g = |al: f64| (q2 * al + q1) * al + q0;
    if g(floor) >= 0.0 || q2 == 0.0 {
        return None;
    }
    // floor lies strictly inside the root interval; take the upper root.
    let disc = (q1 * q1 - 4.0 * q2 * q0).max(0.0);
    let root = if q1 >= 0.0 {
        // Stable form avoids cancellation when q1 > 0.
        (2.0 * q0) / (-q1 - disc.sqrt())
    } else {
        (-q1 + disc.sqrt()) / (2.0 * q2)
    };
    Some(root.max(floor))
}

/// ξ(p) for a fixed threshold excess when the warden-path power ratio ω is known:
/// 1 − e^{−c/(p(1+αω))} + e^{−c/p}, c = λ·l1·(τ − σ₀²). Returns (ξ, 1 − ξ).
pub fn dep_ratio_form(excess: f64, p: f64, alpha: f64, omega: f64, lambda: f64, l1: f64) -> (f64, f64) {
    let s = lambda * l1 * excess / p;
    let k = 1.0 + alpha * omega;
    let gap = (-s).exp() * (s * (k - 1.0) / k).exp_m1();
    (1.0 - gap, gap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerChoice {
    pub p: f64,
    /// The interior minimizer of ξ(p).
    pub p_interior: f64,
    pub xi: f64,
}

/// Transmit power for a fixed (non-optimal) warden threshold. ξ(p) falls then
/// rises around p* = λ·l1·(τ − σ₀²)·αω / ((1+αω)·ln(1+αω)), so its maximum on
/// [p_min_f, p_max] sits at an endpoint.
#[allow(clippy::too_many_arguments)]
pub fn optimal_power_fixed_tau(
    excess: f64,
    omega: f64,
    alpha: f64,
    lambda: f64,
    l1: f64,
    p_min_f: f64,
    p_max: f64,
) -> Result<PowerChoice> {
    if !(excess > 0.0) {
        return Err(Error::Domain { what: "fixed threshold excess", value: excess });
    }
    if !(omega > 0.0) {
        return Err(Error::Domain { what: "power ratio omega", value: omega });
    }
    if !(p_min_f > 0.0 && p_min_f < p_max) {
        return Err(Error::Domain { what: "minimum feasible power", value: p_min_f });
    }
    let x = alpha * omega;
    let shape = if x < 1e-8 { 1.0 - 0.5 * x } else { x / ((1.0 + x) * x.ln_1p()) };
    let p_interior = lambda * l1 * excess * shape;
    let (xi_lo, gap_lo) = dep_ratio_form(excess, p_min_f, alpha, omega, lambda, l1);
    let (xi_hi, gap_hi) = dep_ratio_form(excess, p_max, alpha, omega, lambda, l1);
    // Compare gaps: both ξ may round to 1.
    Ok(if gap_lo < gap_hi {
        PowerChoice { p: p_min_f, p_interior, xi: xi_lo }
    } else {
        PowerChoice { p: p_max, p_interior, xi: xi_hi }
    })
}

/// Smallest power in (0, p_max] at which `feasible` holds, assuming feasibility
/// is monotone in p. None when p_max itself is infeasible.
pub fn min_feasible_power(mut feasible: impl FnMut(f64) -> bool, p_max: f64) -> Option<f64> {
    if !feasible(p_max) {
        return None;
    }
    let mut lo = p_max * 1e-12;
    if feasible(lo) {
        return Some(lo);
    }
    let mut hi = p_max;
    // Bisection in log-space to 1e-10 relative.
    while hi / lo > 1.0 + 1e-10 {
        let mid = (lo * hi).sqrt();
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}
