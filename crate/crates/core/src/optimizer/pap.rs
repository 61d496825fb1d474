//! PSR: maximize the double-reflection gain Γ under the SIC and QoS floors.

use super::{pick_start, run_sca, Instance, OptimResult, OptimizerOptions, ScaSpec, Surrogate};
use crate::channel::{ChannelRealization, PhaseProfile, SystemConfig, C64};
use crate::detection::dep_at_optimal_threshold;
use crate::rates::Mode;
use crate::sdp::{Relation, SdpProblem, Sense};
use crate::strategy::alpha_region_psr;
use crate::{Error, Result};

pub fn pap_solve(ch: &ChannelRealization, config: &SystemConfig, opts: &OptimizerOptions) -> Result<OptimResult> {
    let inst = Instance::new(ch, config, opts)?;
    let sigma2 = config.noise_power;
    let (gamma_c, gamma_sic) = (config.gamma_c(), config.gamma_sic());
    let p = inst.p_hat;
    // SIC at the QoS-minimal α: p|h_SR|² ≥ σ₀²(1+γ_c)γ_SIC.
    let sic_floor = sigma2 * (1.0 + gamma_c) * gamma_sic / (p * inst.a_sr);
    let qos_floor = sigma2 * gamma_c / (p * inst.a_bg);

    let objective = |phase: &PhaseProfile| -> Option<f64> {
        let gains = inst.gains(phase).ok()?;
        alpha_region_psr(p, &gains, sigma2, gamma_c, gamma_sic).feasible.then(|| inst.gamma(&phase.v))
    };
    let build = |sur: &Surrogate, _: &PhaseProfile, tightened: bool| -> Result<SdpProblem> {
        let k = if tightened { 1.0 + opts.margin } else { 1.0 };
        let n = sur.v0.len() + 1;
        let obj = &sur.u * C64::new(0.5 * sur.lipschitz, 0.0);
        let mut prob = SdpProblem::new(n, Sense::Maximize, obj.clone())?.with_unit_diagonal();
        prob.offset = sur.constant;
        prob.add_constraint(inst.lifted.q_sr.clone(), Relation::Ge, k * sic_floor)?;
        prob.add_constraint(obj, Relation::Ge, k * qos_floor - sur.constant)?;
        Ok(prob)
    };

    let (start, start_value) = pick_start(inst.start_candidates(opts.init), &objective, false)
        .ok_or_else(|| Error::Infeasible("no start phase satisfies the PSR SIC and QoS constraints".into()))?;
    let spec =
        ScaSpec { build: &build, objective: &objective, minimize: false, maximizes_surrogate: true, regime: None };
    let out = run_sca(&inst, &spec, start, start_value, opts)?;

    let gains = inst.gains(&out.phase)?;
    let alpha = alpha_region_psr(p, &gains, sigma2, gamma_c, gamma_sic).lower;
    let dep = dep_at_optimal_threshold(p, alpha, config.elements, &ch.losses, sigma2)?;
    Ok(OptimResult {
        mode: Mode::Psr,
        phase: out.phase,
        alpha,
        p,
        gains,
        trace: out.trace,
        dep,
        iterations: out.iterations,
        converged: out.converged,
        regime: None,
        fidelity: out.fidelity,
        surrogate_rebuilt: out.rebuilt,
        srocr: out.srocr,
    })
}
