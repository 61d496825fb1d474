//! The warden's average-power radiometer: false-alarm and miss-detection
//! probabilities, average detection error probability (DEP), and the
//! DEP-minimizing threshold.
//!
//! Thresholds are carried as the excess τ − σ₀² over the noise floor. At the
//! default scenario the optimal excess is ~1e−26 W against σ₀² = 1e−11 W, so
//! an absolute τ would round to σ₀² and lose the threshold entirely.

mod analytic;
mod monte_carlo;

pub use analytic::{
    avg_dep_closed_form, avg_dep_quadrature, dep_at_optimal_threshold, optimal_threshold_ratio_form,
    optimal_threshold_theorem1, prob_false_alarm, prob_miss_detection, threshold_residual, MissMode,
};
pub use monte_carlo::{avg_dep_monte_carlo, dep_probability_form_monte_carlo};

use serde::{Deserialize, Serialize};

use crate::channel::{CascadeGains, LinkLosses};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Backscatter device silent.
    H0,
    /// Backscatter device active.
    H1,
}

pub fn received_power(hypothesis: Hypothesis, p: f64, alpha: f64, gains: &CascadeGains, sigma2: f64) -> f64 {
    let base = p * gains.h_sw.norm_sqr() + sigma2;
    match hypothesis {
        Hypothesis::H0 => base,
        Hypothesis::H1 => base + alpha * p * gains.h_sb.norm_sqr() * gains.h_bw.norm_sqr(),
    }
}

/// A detection threshold τ = noise + excess.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub noise: f64,
    pub excess: f64,
}

impl Threshold {
    pub fn from_tau(tau: f64, noise: f64) -> Self {
        Self { noise, excess: tau - noise }
    }

    pub fn tau(&self) -> f64 {
        self.noise + self.excess
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionParams {
    pub threshold: Threshold,
    pub p: f64,
    pub alpha: f64,
    /// 1/M.
    pub lambda: f64,
    /// L_S·L_W.
    pub l1: f64,
    /// l1·L_B².
    pub l2: f64,
}

impl DetectionParams {
    pub fn new(threshold: Threshold, p: f64, alpha: f64, elements: usize, losses: &LinkLosses) -> Self {
        Self { threshold, p, alpha, lambda: 1.0 / elements as f64, l1: losses.l1(), l2: losses.l2() }
    }

    pub fn sigma2(&self) -> f64 {
        self.threshold.noise
    }

    pub fn tau(&self) -> f64 {
        self.threshold.tau()
    }

    /// (τ − σ₀²)/p.
    pub fn z(&self) -> f64 {
        self.threshold.excess / self.p
    }

    /// λ·l1·z, the false-alarm exponent.
    pub fn fa_exponent(&self) -> f64 {
        self.lambda * self.l1 * self.z()
    }

    /// 2λ√(l2·z/α): the miss-detection integration limit in u = 2λ√x.
    pub fn u_limit(&self) -> f64 {
        if self.alpha == 0.0 {
            return f64::INFINITY;
        }
        2.0 * self.lambda * (self.l2 * self.z() / self.alpha).sqrt()
    }

    /// α·l1/(λ·l2): backscatter leakage relative to the direct path. The
    /// optimal-threshold DEP depends on the scenario only through this.
    pub fn leakage_ratio(&self) -> f64 {
        self.alpha * self.l1 / (self.lambda * self.l2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl DepMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            DepMethod::ClosedForm => "closed-form",
            DepMethod::Quadrature => "quadrature",
            DepMethod::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepReport {
    pub p_fa: f64,
    pub p_md: f64,
    /// p_fa + p_md.
    pub xi: f64,
    /// 1 − ξ, computed without cancellation for the closed form.
    pub gap: f64,
    pub method: DepMethod,
    pub trials: Option<u64>,
    pub quadrature_order: Option<usize>,
}
