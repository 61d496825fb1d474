use rayon::prelude::*;

use super::{DepMethod, DepReport, Threshold};
use crate::channel::{rician_vector, CVector, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

const CHUNK: u64 = 4096;

// g_i^H g_j with Θ = I; the entries are i.i.d. with uniform LoS phase, so any
// fixed Θ gives the same distribution.
fn cascade_power(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).norm_sqr()
}

struct Counts {
    first: u64,
    second: u64,
}

fn run_chunks(
    trials: u64,
    stream: RngStream,
    body: impl Fn(&mut rand_chacha::ChaCha8Rng) -> (bool, bool) + Sync,
) -> Counts {
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.fork(k).rng();
            let n = CHUNK.min(trials - k * CHUNK);
            let mut c = Counts { first: 0, second: 0 };
            for _ in 0..n {
                let (x, y) = body(&mut rng);
                c.first += x as u64;
                c.second += y as u64;
            }
            c
        })
        .reduce(
            || Counts { first: 0, second: 0 },
            |a, b| Counts { first: a.first + b.first, second: a.second + b.second },
        )
}

/// Counts false alarms (received power > τ under H0) and misses (< τ under H1),
/// with an independent channel realization per trial and hypothesis.
/// Result is independent of thread count for a fixed stream.
pub fn avg_dep_monte_carlo(
    config: &SystemConfig,
    p: f64,
    alpha: f64,
    threshold: Threshold,
    trials: u64,
    stream: RngStream,
) -> Result<DepReport> {
    if trials == 0 {
        return Err(Error::Domain { what: "monte carlo trials", value: 0.0 });
    }
    config.validate()?;
    let losses = config.losses()?;
    let (m, b) = (config.elements, config.rician_factor);
    let (l1, l2) = (losses.l1(), losses.l2());
    let excess = threshold.excess;
    let counts = run_chunks(trials, stream, |rng| {
        let g_s = rician_vector(m, b, rng);
        let g_w = rician_vector(m, b, rng);
        let h0 = p * cascade_power(&g_s, &g_w) / l1;
        let g_s = rician_vector(m, b, rng);
        let g_b = rician_vector(m, b, rng);
        let g_w = rician_vector(m, b, rng);
        let h1 =
            p * cascade_power(&g_s, &g_w) / l1 + alpha * p * cascade_power(&g_s, &g_b) * cascade_power(&g_b, &g_w) / l2;
        (h0 > excess, h1 < excess)
    });
    let p_fa = counts.first as f64 / trials as f64;
    let p_md = counts.second as f64 / trials as f64;
    Ok(DepReport {
        p_fa,
        p_md,
        xi: p_fa + p_md,
        gap: 1.0 - p_fa - p_md,
        method: DepMethod::MonteCarlo,
        trials: Some(trials),
        quadrature_order: None,
    })
}

/// ξ = 1 − Pr(X < z < X + αY) with X = |h_SW|², Y = |h_SB·h_BW|² drawn from
/// one realization per trial. Returns (ξ, standard error).
pub fn dep_probability_form_monte_carlo(
    config: &SystemConfig,
    p: f64,
    alpha: f64,
    threshold: Threshold,
    trials: u64,
    stream: RngStream,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Domain { what: "monte carlo trials", value: 0.0 });
    }
    config.validate()?;
    let losses = config.losses()?;
    let (m, b) = (config.elements, config.rician_factor);
    let (l1, l2) = (losses.l1(), losses.l2());
    let z = threshold.excess / p;
    let counts = run_chunks(trials, stream, |rng| {
        let g_s = rician_vector(m, b, rng);
        let g_b = rician_vector(m, b, rng);
        let g_w = rician_vector(m, b, rng);
        let x = cascade_power(&g_s, &g_w) / l1;
        let y = cascade_power(&g_s, &g_b) * cascade_power(&g_b, &g_w) / l2;
        (x < z && z < x + alpha * y, false)
    });
    let hit = counts.first as f64 / trials as f64;
    Ok((1.0 - hit, (hit * (1.0 - hit) / trials as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{avg_dep_closed_form, optimal_threshold_theorem1, DetectionParams};

    // Geometry where the double-reflection path is strong enough that ξ ≈ 0.85.
    fn strong_leakage(m: usize) -> SystemConfig {
        SystemConfig::calibrated(m)
    }

    #[test]
    fn no_reflection_means_blind_warden() {
        let c = SystemConfig { elements: 8, ..Default::default() };
        let t = Threshold { noise: c.noise_power, excess: 1e-24 };
        let r = avg_dep_monte_carlo(&c, 0.1, 0.0, t, 20_000, RngStream::new(1, 0)).unwrap();
        assert!((r.xi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn below_noise_floor_always_alarms() {
        let c = SystemConfig { elements: 8, ..Default::default() };
        let t = Threshold { noise: c.noise_power, excess: -1e-12 };
        let r = avg_dep_monte_carlo(&c, 0.1, 0.5, t, 5_000, RngStream::new(2, 0)).unwrap();
        assert_eq!((r.p_fa, r.p_md), (1.0, 0.0));
        assert_eq!(r.trials, Some(5_000));
    }

    #[test]
    fn deterministic_for_fixed_stream() {
        let c = strong_leakage(8);
        let t = Threshold { noise: c.noise_power, excess: 1e-12 };
        let a = avg_dep_monte_carlo(&c, 0.1, 0.3, t, 30_000, RngStream::new(3, 4)).unwrap();
        let b = avg_dep_monte_carlo(&c, 0.1, 0.3, t, 30_000, RngStream::new(3, 4)).unwrap();
        assert_eq!(a, b);
        assert!(avg_dep_monte_carlo(&c, 0.1, 0.3, t, 0, RngStream::new(3, 4)).is_err());
    }

    #[test]
    fn agrees_with_closed_form_at_optimal_threshold() {
        let c = strong_leakage(30);
        let l = c.losses().unwrap();
        let (p, alpha) = (0.1, 0.2);
        let t = optimal_threshold_theorem1(p, alpha, c.lambda(), l.l1(), l.l2(), c.noise_power).unwrap();
        let exact = avg_dep_closed_form(&DetectionParams::new(t, p, alpha, 30, &l)).unwrap();
        assert!(exact.xi < 0.99);
        let mc = avg_dep_monte_carlo(&c, p, alpha, t, 100_000, RngStream::new(9, 0)).unwrap();
        assert!((mc.xi - exact.xi).abs() < 0.02, "{} vs {}", mc.xi, exact.xi);
    }

    #[test]
    fn probability_form_matches_hypothesis_counts() {
        let c = strong_leakage(16);
        let l = c.losses().unwrap();
        let t = optimal_threshold_theorem1(0.1, 0.4, c.lambda(), l.l1(), l.l2(), c.noise_power).unwrap();
        let n = 100_000;
        let counted = avg_dep_monte_carlo(&c, 0.1, 0.4, t, n, RngStream::new(10, 0)).unwrap();
        let (xi, se) = dep_probability_form_monte_carlo(&c, 0.1, 0.4, t, n, RngStream::new(10, 1)).unwrap();
        // Counted form has two independent binomial terms.
        let se_counted =
            ((counted.p_fa * (1.0 - counted.p_fa) + counted.p_md * (1.0 - counted.p_md)) / n as f64).sqrt();
        let se_diff = (se * se + se_counted * se_counted).sqrt();
        assert!((xi - counted.xi).abs() <= 3.0 * se_diff, "{xi} vs {}", counted.xi);
    }
}
