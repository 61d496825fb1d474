//! CSR: minimize the smallest admissible reflection coefficient, with separate
//! programs below and above the SNR_p regime boundary.
//!
//! The low-regime program works in units of σ₀²: with s = p̂·a_sr/σ₀² and
//! b = p̂·a_bg/σ₀², the SIC epigraph reads κ ≥ χ(t) − 1 + s·t with
//! χ(t) = √(1 + γ_SIC − 4s·t), t = Tr(Q_SR·V), and ε ≤ b·Γ.

use std::cell::RefCell;

use super::{chi, pick_start, run_sca, Instance, OptimResult, OptimizerOptions, ScaSpec, Surrogate, TraceRow};
use crate::channel::{quad_form, CMatrix, CVector, ChannelRealization, PhaseProfile, SystemConfig, C64};
use crate::detection::dep_at_optimal_threshold;
use crate::rates::Mode;
use crate::sdp::{Relation, SdpProblem, Sense};
use crate::strategy::{alpha_lower_csr, snr_regime, SnrRegime};
use crate::{Error, Result};

// Coefficient on s·t in the SIC epigraph; the commonly quoted 3 does not
// survive re-derivation (see the strategy module's CsrSicBound).
const SIC_COEFF: f64 = 1.0;
// Closes the strict low-regime inequality.
const STRICT_MARGIN: f64 = 1e-9;

pub fn plm_solve(ch: &ChannelRealization, config: &SystemConfig, opts: &OptimizerOptions) -> Result<OptimResult> {
    plm_core(ch, config, opts, None)
}

/// With `forced` set, only that regime's program runs, from a start inside it,
/// and neither the cross-regime re-solve nor the exact-α polish follows.
pub(crate) fn plm_core(
    ch: &ChannelRealization,
    config: &SystemConfig,
    opts: &OptimizerOptions,
    forced: Option<SnrRegime>,
) -> Result<OptimResult> {
    let inst = Instance::new(ch, config, opts)?;
    let sigma2 = config.noise_power;
    let gamma_sic = config.gamma_sic();
    let p = inst.p_hat;
    let eta = config.eta as f64;
    let s = p * inst.a_sr / sigma2;
    let b = p * inst.a_bg / sigma2;
    let qos_k = ((eta * config.eps_c).exp2() - 1.0) / eta;

    let regime_of = |phase: &PhaseProfile| -> Option<SnrRegime> {
        inst.gains(phase).ok().map(|g| snr_regime(p, g.h_sr, sigma2, gamma_sic))
    };
    let alpha_of = |phase: &PhaseProfile| -> Option<f64> {
        let g = inst.gains(phase).ok()?;
        let regime = snr_regime(p, g.h_sr, sigma2, gamma_sic);
        let bound = alpha_lower_csr(p, &g, sigma2, gamma_sic, config.eta, config.eps_c, regime, opts.csr_bound);
        bound.feasible.then_some(bound.lower)
    };

    let build_low = |sur: &Surrogate, anchor: &PhaseProfile, tightened: bool| -> Result<SdpProblem> {
        let k = if tightened { 1.0 + opts.margin } else { 1.0 };
        let n = sur.v0.len() + 1;
        let t0 = quad_form(&inst.lifted.g_sr, &anchor.v);
        let chi0 = chi(t0, s, 1.0, gamma_sic)?;
        let kappa_l = (chi0 - 1.0 + SIC_COEFF * s * t0).max(qos_k);
        let eps_l = b * sur.gamma0;
        let mut prob = SdpProblem::new(n, Sense::Minimize, CMatrix::zeros(n, n))?.with_unit_diagonal();
        let kappa = prob.add_scalar(1.0 / kappa_l);
        let eps = prob.add_scalar(-1.0 / eps_l);
        // κ ≥ χ_upper(t) − 1 + c·s·t, with χ_upper linear in t.
        let slope = SIC_COEFF * s - 2.0 * s / chi0;
        let rhs = chi0 + 2.0 * s * t0 / chi0 - 1.0;
        let q_sr = &inst.lifted.q_sr;
        prob.add_constraint_with_scalars(
            q_sr * C64::new(-slope, 0.0),
            vec![(kappa, 1.0)],
            Relation::Ge,
            rhs + (k - 1.0) * rhs.abs(),
        )?;
        prob.add_constraint_with_scalars(CMatrix::zeros(n, n), vec![(kappa, 1.0)], Relation::Ge, k * qos_k)?;
        // ε ≤ b·((L/2)Tr(UV) + const)
        let surr = &sur.u * C64::new(-0.5 * b * sur.lipschitz, 0.0);
        prob.add_constraint_with_scalars(surr, vec![(eps, 1.0)], Relation::Le, b * sur.constant)?;
        prob.add_constraint_with_scalars(CMatrix::zeros(n, n), vec![(kappa, 1.0), (eps, -1.0)], Relation::Le, 0.0)?;
        prob.add_constraint(q_sr * C64::new(4.0 * s, 0.0), Relation::Le, (1.0 + gamma_sic) * (1.0 - STRICT_MARGIN))?;
        Ok(prob)
    };
    let build_high = |sur: &Surrogate, _: &PhaseProfile, tightened: bool| -> Result<SdpProblem> {
        let k = if tightened { 1.0 + opts.margin } else { 1.0 };
        let n = sur.v0.len() + 1;
        let obj = &sur.u * C64::new(0.5 * sur.lipschitz, 0.0);
        let mut prob = SdpProblem::new(n, Sense::Maximize, obj.clone())?.with_unit_diagonal();
        prob.offset = sur.constant;
        prob.add_constraint(obj, Relation::Ge, k * qos_k / b - sur.constant)?;
        prob.add_constraint(&inst.lifted.q_sr * C64::new(4.0 * s, 0.0), Relation::Ge, 1.0 + gamma_sic)?;
        Ok(prob)
    };

    // A regime run keeps its iterates inside its regime; the best phase that
    // tried to cross is remembered for one re-solve on the other side.
    let run = |start: PhaseProfile, start_alpha: f64, regime: SnrRegime| {
        let crossing: RefCell<Option<(PhaseProfile, f64)>> = RefCell::new(None);
        let objective = |phase: &PhaseProfile| -> Option<f64> {
            let a = alpha_of(phase)?;
            if regime_of(phase)? != regime {
                let mut c = crossing.borrow_mut();
                if c.as_ref().is_none_or(|(_, best)| a < *best) {
                    *c = Some((phase.clone(), a));
                }
                return None;
            }
            Some(a)
        };
        let build: &dyn Fn(&Surrogate, &PhaseProfile, bool) -> Result<SdpProblem> = match regime {
            SnrRegime::Low => &build_low,
            SnrRegime::High => &build_high,
        };
        let spec = ScaSpec {
            build,
            objective: &objective,
            minimize: true,
            maximizes_surrogate: regime == SnrRegime::High,
            regime: Some(regime),
        };
        let out = run_sca(&inst, &spec, start, start_alpha, opts);
        out.map(|o| (o, crossing.into_inner()))
    };

    let start_objective = |phase: &PhaseProfile| match forced {
        Some(r) if regime_of(phase)? != r => None,
        _ => alpha_of(phase),
    };
    let (start, start_alpha) = pick_start(inst.start_candidates(opts.init), &start_objective, true)
        .ok_or_else(|| Error::Infeasible("no start phase admits a CSR reflection coefficient ≤ 1".into()))?;
    let regime = regime_of(&start).ok_or_else(|| Error::Degenerate("start phase gains".into()))?;
    let (mut best, crossing) = run(start, start_alpha, regime)?;
    let mut best_regime = regime;
    if let Some((phase, a)) = crossing.filter(|_| forced.is_none()) {
        let other = match regime {
            SnrRegime::Low => SnrRegime::High,
            SnrRegime::High => SnrRegime::Low,
        };
        let (alt, _) = run(phase, a, other)?;
        let (srocr, iterations) = (best.srocr.merge(alt.srocr), best.iterations + alt.iterations);
        if alt.value < best.value {
            // The re-solve restarts from the crossing point, which can sit above the
            // first run's end, so only the winning run's trace is kept.
            best = alt;
            best_regime = other;
        }
        best.srocr = srocr;
        best.iterations = iterations;
    }

    let binds = |phase: &PhaseProfile| {
        inst.gains(phase).ok().is_some_and(|g| {
            let regime = snr_regime(p, g.h_sr, sigma2, gamma_sic);
            alpha_lower_csr(p, &g, sigma2, gamma_sic, config.eta, config.eps_c, regime, opts.csr_bound).sic.is_some()
        })
    };
    if forced.is_none() && binds(&best.phase) {
        let start_iter = best.trace.last().map_or(0, |r| r.iteration);
        let (phase, value, rows) =
            polish_exact_alpha(&inst, best.phase.clone(), best.value, &alpha_of, &regime_of, start_iter);
        if value < best.value {
            best.iterations += rows.len();
            best.trace.extend(rows);
            best.phase = phase;
            best.value = value;
            best_regime = regime_of(&best.phase).unwrap_or(best_regime);
        }
    }

    let gains = inst.gains(&best.phase)?;
    let alpha = best.value;
    let dep = dep_at_optimal_threshold(p, alpha, config.elements, &ch.losses, sigma2)?;
    Ok(OptimResult {
        mode: Mode::Csr,
        phase: best.phase,
        alpha,
        p,
        gains,
        trace: best.trace,
        dep,
        iterations: best.iterations,
        converged: best.converged,
        regime: Some(best_regime),
        fidelity: best.fidelity,
        surrogate_rebuilt: best.rebuilt,
        srocr: best.srocr,
    })
}

/// Descent-lemma steps on the exact α(θ) for when the SIC bound binds, which
/// neither regime program models: the majorant
/// α₀ + Σ ∂α/∂θ_m·Δθ-direction + (L/2)‖v − v₀‖² is minimized on the unit-modulus
/// set by θ_m ← θ_m − atan(∂α/∂θ_m / L), with L doubled until the majorant
/// holds at the new point and α decreases.
fn polish_exact_alpha(
    inst: &Instance,
    mut phase: PhaseProfile,
    mut alpha: f64,
    alpha_of: &dyn Fn(&PhaseProfile) -> Option<f64>,
    regime_of: &dyn Fn(&PhaseProfile) -> Option<SnrRegime>,
    start_iter: usize,
) -> (PhaseProfile, f64, Vec<TraceRow>) {
    const FD_STEP: f64 = 1e-6;
    let m = phase.len();
    let mut rows = Vec::new();
    let mut lip: f64 = 0.0;
    for it in 1..=inst.opts_max_iter {
        let grad: Vec<f64> = (0..m)
            .map(|k| {
                let shifted = |d: f64| {
                    let mut th = phase.theta.clone();
                    th[k] += d;
                    alpha_of(&PhaseProfile::from_theta(th))
                };
                match (shifted(FD_STEP), shifted(-FD_STEP)) {
                    (Some(a), Some(b)) => (a - b) / (2.0 * FD_STEP),
                    _ => 0.0,
                }
            })
            .collect();
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        // Tangent-space gradient in v: g_m = j·v0_m·∂α/∂θ_m.
        let g = CVector::from_iterator(m, phase.v.iter().zip(&grad).map(|(v, d)| v * C64::new(0.0, *d)));
        let mut l = if lip > 0.0 { 0.5 * lip } else { gnorm };
        let mut accepted = None;
        for _ in 0..80 {
            let th: Vec<f64> = phase.theta.iter().zip(&grad).map(|(t, d)| t - (d / l).atan()).collect();
            let cand = PhaseProfile::from_theta(th);
            let d = &cand.v - &phase.v;
            let majorant = alpha + g.dotc(&d).re + 0.5 * l * d.norm_squared();
            match alpha_of(&cand) {
                Some(a) if a <= majorant && a < alpha => {
                    accepted = Some((cand, a, majorant));
                    break;
                }
                _ => l *= 2.0,
            }
        }
        let Some((cand, a, majorant)) = accepted else { break };
        let change = (alpha - a) / alpha;
        rows.push(TraceRow {
            iteration: start_iter + it,
            surrogate: majorant,
            objective: a,
            rank_ratio: 1.0,
            regime: regime_of(&cand),
            lipschitz: l,
        });
        phase = cand;
        alpha = a;
        lip = l;
        if change < inst.config.tol {
            break;
        }
    }
    (phase, alpha, rows)
}
