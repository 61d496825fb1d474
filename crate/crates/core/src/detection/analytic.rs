use super::{DepMethod, DepReport, DetectionParams, Threshold};
use crate::channel::LinkLosses;
use crate::error::{Error, Result};
use crate::numerics::{bessel_k0, bessel_k1, chebyshev_nodes, find_root_bracketed, integrate_with, IntegrateOptions};

// u·K0(u) integrates to 1 on (0, ∞); the mass beyond this is below 1e−33.
const U_CUTOFF: f64 = 80.0;
// Above this K1 underflows and the threshold equation has no usable bracket.
const U_BRACKET_MAX: f64 = 700.0;

const INTEGRAL_OPTS: IntegrateOptions = IntegrateOptions { abs_tol: 1e-16, rel_tol: 1e-12, max_intervals: 4000 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissMode {
    /// Adaptive evaluation of the exact integral.
    Integral,
    /// Gauss–Chebyshev rule with the given number of nodes.
    Quadrature(usize),
}

pub fn prob_false_alarm(params: &DetectionParams) -> f64 {
    if params.threshold.excess <= 0.0 {
        return 1.0;
    }
    (-params.fa_exponent()).exp()
}

fn u_k0(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    u * bessel_k0(u).expect("u > 0")
}

fn u_k1(u: f64) -> f64 {
    if u == 0.0 {
        return 1.0;
    }
    u * bessel_k1(u).expect("u > 0")
}

fn integrate_u(f: impl FnMut(f64) -> f64, top: f64) -> Result<f64> {
    integrate_with(f, 0.0, top.min(U_CUTOFF), INTEGRAL_OPTS)
}

// With a = λ·l1·z and u = 2λ√x, the miss-detection integral becomes
// ∫₀^{u_T} (1 − e^{−a(1 − u²/u_T²)})·u·K0(u) du.
fn md_integral(a: f64, u_top: f64) -> Result<f64> {
    if u_top.is_infinite() {
        return Ok(-(-a).exp_m1() * integrate_u(u_k0, U_CUTOFF)?);
    }
    let inv = 1.0 / (u_top * u_top);
    integrate_u(|u| -(-a * (1.0 - u * u * inv)).exp_m1() * u_k0(u), u_top)
}

// 1 − ξ = e^{−a}∫₀^{u_T} expm1(a·u²/u_T²)·u·K0(u) du + (1 − e^{−a})·u_T·K1(u_T).
fn dep_gap(a: f64, u_top: f64) -> Result<f64> {
    if u_top.is_infinite() {
        return Ok(0.0);
    }
    let inv = 1.0 / (u_top * u_top);
    let lead = if u_top > U_CUTOFF { 0.0 } else { -(-a).exp_m1() * u_k1(u_top) };
    let body = integrate_u(|u| (a * u * u * inv).exp_m1() * u_k0(u), u_top)?;
    Ok((-a).exp() * body + lead)
}

fn md_quadrature(a: f64, u_top: f64, order: usize) -> Result<f64> {
    let rule = chebyshev_nodes(order)?;
    if u_top.is_infinite() {
        return Ok(1.0);
    }
    let sum = rule.apply(|x| {
        let arg = u_top * (0.5 * (1.0 + x)).sqrt();
        (1.0 - x * x).sqrt() * (0.5 * a * (x - 1.0)).exp() * bessel_k0(arg).unwrap_or(0.0)
    });
    Ok(1.0 - u_k1(u_top) - 0.25 * u_top * u_top * sum)
}

pub fn prob_miss_detection(params: &DetectionParams, mode: MissMode) -> Result<f64> {
    if params.threshold.excess <= 0.0 {
        return Ok(0.0);
    }
    let (a, u) = (params.fa_exponent(), params.u_limit());
    match mode {
        MissMode::Integral => md_integral(a, u),
        MissMode::Quadrature(q) => md_quadrature(a, u, q),
    }
}

/// DEP from the exact miss-detection integral.
pub fn avg_dep_closed_form(params: &DetectionParams) -> Result<DepReport> {
    let mut report = DepReport {
        p_fa: 1.0,
        p_md: 0.0,
        xi: 1.0,
        gap: 0.0,
        method: DepMethod::ClosedForm,
        trials: None,
        quadrature_order: None,
    };
    if params.threshold.excess <= 0.0 {
        return Ok(report);
    }
    let (a, u) = (params.fa_exponent(), params.u_limit());
    report.p_fa = prob_false_alarm(params);
    report.p_md = md_integral(a, u)?;
    report.xi = report.p_fa + report.p_md;
    report.gap = dep_gap(a, u)?;
    Ok(report)
}

/// DEP with the miss-detection term from a Q-node Gauss–Chebyshev rule.
pub fn avg_dep_quadrature(params: &DetectionParams, order: usize) -> Result<DepReport> {
    let p_fa = prob_false_alarm(params);
    let p_md = prob_miss_detection(params, MissMode::Quadrature(order))?;
    Ok(DepReport {
        p_fa,
        p_md,
        xi: p_fa + p_md,
        gap: 1.0 - p_fa - p_md,
        method: DepMethod::Quadrature,
        trials: None,
        quadrature_order: Some(order),
    })
}

/// Optimal-threshold equation in u-space, divided by 1/(2λ²):
/// h(u₀) = ∫₀^{u₀} expm1(r·u²/4)·u·K0(u) du − u₀·K1(u₀), with r the leakage ratio.
/// h(0) = −1 and h is increasing.
pub fn threshold_residual(u0: f64, leakage_ratio: f64) -> Result<f64> {
    if u0 <= 0.0 {
        return Ok(-1.0);
    }
    let q = 0.25 * leakage_ratio;
    let body = integrate_u(|u| (q * u * u).exp_m1() * u_k0(u), u0)?;
    // Past the cutoff the integrand is still growing only if q·u² outpaces u.
    let tail = if u0 > U_CUTOFF {
        integrate_with(|u| (q * u * u).exp_m1() * u_k0(u), U_CUTOFF, u0, INTEGRAL_OPTS)?
    } else {
        0.0
    };
    Ok(body + tail - u_k1(u0))
}

/// DEP-minimizing threshold, from the root of [`threshold_residual`].
pub fn optimal_threshold_theorem1(p: f64, alpha: f64, lambda: f64, l1: f64, l2: f64, sigma2: f64) -> Result<Threshold> {
    if !(alpha > 0.0) {
        return Err(Error::Domain { what: "optimal threshold: alpha", value: alpha });
    }
    if !(p > 0.0) {
        return Err(Error::Domain { what: "optimal threshold: p", value: p });
    }
    let r = alpha * l1 / (lambda * l2);
    let f = |u: f64| threshold_residual(u, r).unwrap_or(f64::NAN);
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > U_BRACKET_MAX {
            return Err(Error::Bracket { lo: 0.0, hi, flo: -1.0, fhi: f(hi) });
        }
    }
    let lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
    let u_star = find_root_bracketed(f, lo, hi, 0.0)?;
    let z = alpha * u_star * u_star / (4.0 * lambda * lambda * l2);
    Ok(Threshold { noise: sigma2, excess: p * z })
}

/// Closed-form DEP with the warden at its DEP-minimizing threshold.
pub fn dep_at_optimal_threshold(
    p: f64,
    alpha: f64,
    elements: usize,
    losses: &LinkLosses,
    sigma2: f64,
) -> Result<DepReport> {
    let probe = DetectionParams::new(Threshold { noise: sigma2, excess: 0.0 }, p, alpha, elements, losses);
    let threshold = optimal_threshold_theorem1(p, alpha, probe.lambda, probe.l1, probe.l2, sigma2)?;
    avg_dep_closed_form(&DetectionParams { threshold, ..probe })
}

/// Optimal threshold when the double-reflection-to-direct power ratio ω is known:
/// τ* = σ₀² + p(1+αω)·ln(1+αω)/(λ·l1·αω).
pub fn optimal_threshold_ratio_form(
    omega: f64,
    p: f64,
    alpha: f64,
    lambda: f64,
    l1: f64,
    sigma2: f64,
) -> Result<Threshold> {
    if !(omega > 0.0) {
        return Err(Error::Domain { what: "optimal threshold: omega", value: omega });
    }
    let x = alpha * omega;
    // (1+x)·ln(1+x)/x, with its series near 0.
    let shape = if x < 1e-8 { 1.0 + 0.5 * x } else { (1.0 + x) * x.ln_1p() / x };
    Ok(Threshold { noise: sigma2, excess: p * shape / (lambda * l1) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SystemConfig;
    use crate::numerics::integrate_adaptive;

    fn params(excess: f64, p: f64, alpha: f64, lambda: f64, l1: f64, l2: f64) -> DetectionParams {
        DetectionParams { threshold: Threshold { noise: 1e-11, excess }, p, alpha, lambda, l1, l2 }
    }

    // Scenario with a leakage ratio of order one, where ξ is far from 1.
    fn moderate(excess: f64, alpha: f64) -> DetectionParams {
        params(excess, 1.0, alpha, 1.0 / 30.0, 30.0, 30.0 * 30.0 * 0.2 / 0.31)
    }

    // Direct x-domain oracle: 2λ²∫₀^{l2 z/α} (1 − e^{−l1λz + (l1/l2)αλx})·K0(2λ√x) dx.
    fn md_x_domain(d: &DetectionParams) -> f64 {
        let z = d.z();
        let top = d.l2 * z / d.alpha;
        let f = |x: f64| {
            let e = -d.l1 * d.lambda * z + d.l1 / d.l2 * d.alpha * d.lambda * x;
            if x <= 0.0 {
                0.0
            } else {
                -e.exp_m1() * bessel_k0(2.0 * d.lambda * x.sqrt()).unwrap()
            }
        };
        2.0 * d.lambda * d.lambda * integrate_adaptive(f, 0.0, top, 1e-13 * top).unwrap()
    }

    #[test]
    fn false_alarm_branches() {
        assert_eq!(prob_false_alarm(&moderate(0.0, 0.2)), 1.0);
        assert_eq!(prob_false_alarm(&moderate(-1.0, 0.2)), 1.0);
        let d = params(std::f64::consts::LN_2, 1.0, 0.5, 1.0, 1.0, 4.0);
        assert!((prob_false_alarm(&d) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn miss_detection_matches_x_domain_oracle() {
        for (excess, alpha) in [(0.5, 0.2), (2.0, 0.2), (0.1, 0.9), (5.0, 0.05)] {
            let d = moderate(excess, alpha);
            let got = prob_miss_detection(&d, MissMode::Integral).unwrap();
            assert!((got - md_x_domain(&d)).abs() < 1e-10, "excess {excess}, alpha {alpha}");
        }
    }

    #[test]
    fn at_or_below_noise_floor() {
        let d = moderate(0.0, 0.2);
        assert_eq!(prob_miss_detection(&d, MissMode::Integral).unwrap(), 0.0);
        let r = avg_dep_closed_form(&d).unwrap();
        assert_eq!((r.xi, r.p_fa, r.p_md), (1.0, 1.0, 0.0));
    }

    #[test]
    fn gap_is_complement_of_xi() {
        for (excess, alpha) in [(0.5, 0.2), (2.0, 0.7), (0.05, 1.0), (9.0, 0.01)] {
            let r = avg_dep_closed_form(&moderate(excess, alpha)).unwrap();
            assert!((r.gap - (1.0 - r.xi)).abs() < 1e-11);
            assert!(r.xi >= 0.0 && r.xi <= 1.0);
        }
    }

    #[test]
    fn vanishing_miss_for_large_reflection() {
        let d = moderate(1.0, 1e12);
        assert!(prob_miss_detection(&d, MissMode::Integral).unwrap() < 1e-9);
    }

    #[test]
    fn quadrature_converges_to_integral() {
        let d = moderate(0.6, 0.2);
        let exact = prob_miss_detection(&d, MissMode::Integral).unwrap();
        let errs: Vec<f64> = [5, 20, 80, 320]
            .iter()
            .map(|&q| (prob_miss_detection(&d, MissMode::Quadrature(q)).unwrap() - exact).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[3] < 1e-4);
    }

    // Max |quadrature − integral| over a ∈ [0.05, 5], u_T ∈ [0.1, 6].
    fn worst_quadrature_error(order: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                let a = 0.05 * 100f64.powf(i as f64 / 7.0);
                let u = 0.1 + 5.9 * j as f64 / 7.0;
                let exact = md_integral(a, u).unwrap();
                worst = worst.max((md_quadrature(a, u, order).unwrap() - exact).abs());
            }
        }
        worst
    }

    #[test]
    fn quadrature_error_decays_slowly_because_of_log_singularity() {
        // K0 is log-singular at the lower limit, so the Chebyshev rule converges
        // only like Q^-1.8; twenty nodes leave errors near 1e-2, not 1e-4.
        let e20 = worst_quadrature_error(20);
        let e640 = worst_quadrature_error(640);
        assert!(e20 > 1e-3 && e20 < 2e-2, "{e20}");
        assert!(e640 < 1e-4, "{e640}");
    }

    #[test]
    fn residual_at_zero_and_monotone() {
        assert_eq!(threshold_residual(0.0, 0.3).unwrap(), -1.0);
        assert!((threshold_residual(1e-9, 0.3).unwrap() + 1.0).abs() < 1e-9);
        let v: Vec<f64> = (1..60).map(|k| threshold_residual(0.2 * k as f64, 0.3).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn theorem1_threshold_is_grid_minimizer() {
        let d = moderate(1.0, 0.2);
        let t = optimal_threshold_theorem1(d.p, d.alpha, d.lambda, d.l1, d.l2, 1e-11).unwrap();
        let xi_star = avg_dep_closed_form(&DetectionParams { threshold: t, ..d }).unwrap().xi;
        let mut best = (f64::INFINITY, 0.0);
        for k in 1..=2000 {
            let e = t.excess * 3.0 * k as f64 / 2000.0;
            let xi = avg_dep_closed_form(&DetectionParams { threshold: Threshold { noise: 1e-11, excess: e }, ..d })
                .unwrap()
                .xi;
            if xi < best.0 {
                best = (xi, e);
            }
        }
        assert!(xi_star <= best.0 + 1e-12);
        assert!((best.1 - t.excess).abs() <= 3.0 * t.excess / 2000.0);
    }

    #[test]
    fn theorem1_root_values() {
        // Frozen from an independent mpmath evaluation of the u-space equation.
        for (r, xi) in [(0.01, 0.990_99), (0.31, 0.854_65), (1.0, 0.717_76), (5.0, 0.470_16)] {
            let lambda = 0.1;
            let l1 = 1.0;
            let l2 = 1.0 / (r * lambda);
            let t = optimal_threshold_theorem1(1.0, 1.0, lambda, l1, l2, 1e-11).unwrap();
            let rep = avg_dep_closed_form(&params(t.excess, 1.0, 1.0, lambda, l1, l2)).unwrap();
            assert!((rep.xi - xi).abs() < 1e-5, "r = {r}: {}", rep.xi);
        }
    }

    #[test]
    fn integration_limit_diverges_as_reflection_vanishes() {
        // The x-domain limit l2·z*/α grows without bound; τ* itself tends to σ₀²
        // because z* carries a factor α.
        let d = moderate(1.0, 0.2);
        let mut prev_limit = 0.0;
        let mut prev_excess = f64::INFINITY;
        for alpha in [1e-1, 1e-3, 1e-5, 1e-7] {
            let t = optimal_threshold_theorem1(d.p, alpha, d.lambda, d.l1, d.l2, 1e-11).unwrap();
            let limit = d.l2 * t.excess / (d.p * alpha);
            assert!(limit > prev_limit && t.excess < prev_excess);
            prev_limit = limit;
            prev_excess = t.excess;
        }
        assert!(optimal_threshold_theorem1(1.0, 0.0, 0.1, 1.0, 1.0, 1e-11).is_err());
    }

    #[test]
    fn default_scenario_is_nearly_undetectable() {
        let c = SystemConfig { elements: 30, ..Default::default() };
        let l = c.losses().unwrap();
        let t = optimal_threshold_theorem1(0.1, 0.2, c.lambda(), l.l1(), l.l2(), c.noise_power).unwrap();
        assert!(t.excess > 0.0 && t.excess < 1e-20);
        let d = DetectionParams::new(t, 0.1, 0.2, 30, &l);
        let rep = avg_dep_closed_form(&d).unwrap();
        assert!(rep.gap > 0.0 && rep.gap < 1e-10);
    }

    #[test]
    fn ratio_form_limits_and_value() {
        let t = optimal_threshold_ratio_form(1e-12, 2.0, 0.5, 0.1, 4.0, 1e-11).unwrap();
        assert!((t.excess - 2.0 / (0.1 * 4.0)).abs() < 1e-9);
        let x = std::f64::consts::E - 1.0;
        let t = optimal_threshold_ratio_form(x, 2.0, 1.0, 0.1, 4.0, 1e-11).unwrap();
        let want = 2.0 * std::f64::consts::E * 1.0 / (0.1 * 4.0 * x);
        assert!((t.excess - want).abs() < 1e-12 * want);
        assert!(t.tau() > 1e-11);
        assert!(optimal_threshold_ratio_form(0.0, 2.0, 1.0, 0.1, 4.0, 1e-11).is_err());
    }
}
