use rand::Rng;
use rayon::prelude::*;

use super::{
    Cell, Column, ExperimentSpec, ModeSelection, SweepPoint, Table, Wcsi, DEFAULT_DEP_TRIALS, DEFAULT_OPT_TRIALS,
};
use crate::channel::{sample_channels, CascadeGains, ChannelRealization, PhaseProfile, SystemConfig};
use crate::detection::{
    avg_dep_closed_form, avg_dep_monte_carlo, optimal_threshold_theorem1, DepReport, DetectionParams, Threshold,
};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::optimizer::{pap_solve, plm_solve, OptimResult, OptimizerOptions};
use crate::rates::{rate_c_csr, rate_s_csr, Mode};
use crate::strategy::{alpha_lower_csr, alpha_region_psr, snr_regime, CsrSicBound};

// Stream-id offsets keeping channel draws, optimizer starts and baseline draws apart.
const CHANNEL_STREAM: u64 = 1;
const BASELINE_STREAM: u64 = 2;

fn theorem1(config: &SystemConfig, p: f64, alpha: f64) -> Result<Threshold> {
    let losses = config.losses()?;
    optimal_threshold_theorem1(p, alpha, config.lambda(), losses.l1(), losses.l2(), config.noise_power)
}

/// The warden's threshold at one point.
fn warden_threshold(
    spec: &ExperimentSpec,
    fixed: Option<Threshold>,
    config: &SystemConfig,
    p: f64,
    alpha: f64,
) -> Result<Threshold> {
    match (spec.wcsi, fixed) {
        (Wcsi::None, Some(t)) => Ok(Threshold { noise: config.noise_power, ..t }),
        _ => theorem1(config, p, alpha),
    }
}

fn fixed_threshold(spec: &ExperimentSpec) -> Result<Option<Threshold>> {
    if spec.wcsi != Wcsi::None {
        return Ok(None);
    }
    let base = spec.scenario.build()?;
    theorem1(&base, base.p_max, spec.alpha).map(Some)
}

fn dep_at(config: &SystemConfig, threshold: Threshold, p: f64, alpha: f64) -> Result<DepReport> {
    let losses = config.losses()?;
    avg_dep_closed_form(&DetectionParams::new(threshold, p, alpha, config.elements, &losses))
}

/// One row per sweep value: closed-form and Monte Carlo DEP at P_max and α.
pub fn run_dep_analysis(spec: &ExperimentSpec) -> Result<Table> {
    spec.validate()?;
    let trials = spec.trials_or(DEFAULT_DEP_TRIALS);
    let fixed = fixed_threshold(spec)?;
    let mut table = Table::new(vec![
        spec.sweep.param.column(),
        Column::new("threshold", ""),
        Column::new("tau_excess", "W"),
        Column::new("xi_closed", ""),
        Column::new("gap_closed", ""),
        Column::new("p_fa", ""),
        Column::new("p_md", ""),
        Column::new("xi_mc", ""),
        Column::new("mc_stderr", ""),
        Column::new("trials", ""),
        Column::new("abs_dev", ""),
    ]);
    for (k, point) in spec.points()?.into_iter().enumerate() {
        let SweepPoint { value, config, alpha } = point;
        let p = config.p_max;
        let threshold = warden_threshold(spec, fixed, &config, p, alpha)?;
        let closed = dep_at(&config, threshold, p, alpha)?;
        let mc = avg_dep_monte_carlo(&config, p, alpha, threshold, trials, RngStream::new(spec.seed, k as u64))?;
        let n = trials as f64;
        let stderr = (mc.p_fa * (1.0 - mc.p_fa) / n + mc.p_md * (1.0 - mc.p_md) / n).sqrt();
        table.push(vec![
            spec.sweep.cell(value),
            Cell::Text(if fixed.is_some() { "fixed" } else { "optimal" }.into()),
            Cell::Num(threshold.excess),
            Cell::Num(closed.xi),
            Cell::Num(closed.gap),
            Cell::Num(closed.p_fa),
            Cell::Num(closed.p_md),
            Cell::Num(mc.xi),
            Cell::Num(stderr),
            Cell::Int(trials),
            Cell::Num((closed.xi - mc.xi).abs()),
        ]);
    }
    Ok(table)
}

/// Best of the random-phase, random-α draws for one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineDraw {
    pub alpha: f64,
    pub gains: CascadeGains,
}

/// `draws` uniform phase profiles, each paired with an α uniform on the
/// feasible region of its gains. Returns the draw with the smallest α, which
/// at the warden's optimal threshold is also the one with the largest DEP.
/// None when no draw admits a feasible α.
pub fn random_baseline(
    ch: &ChannelRealization,
    config: &SystemConfig,
    mode: Mode,
    draws: usize,
    stream: RngStream,
) -> Result<Option<BaselineDraw>> {
    let mut rng = stream.rng();
    let (p, s2) = (config.p_max, config.noise_power);
    let mut best: Option<BaselineDraw> = None;
    for _ in 0..draws {
        let phase = PhaseProfile::random(ch.elements(), &mut rng);
        let gains = CascadeGains::new(ch, &phase)?;
        let u: f64 = rng.random();
        let alpha = match mode {
            Mode::Psr => {
                let r = alpha_region_psr(p, &gains, s2, config.gamma_c(), config.gamma_sic());
                r.feasible.then(|| r.lower + u * (r.upper.min(1.0) - r.lower))
            }
            Mode::Csr => {
                let regime = snr_regime(p, gains.h_sr, s2, config.gamma_sic());
                let b = alpha_lower_csr(
                    p,
                    &gains,
                    s2,
                    config.gamma_sic(),
                    config.eta,
                    config.eps_c,
                    regime,
                    CsrSicBound::Exact,
                );
                // The exact SIC condition excludes one α interval; the draw must clear both rates.
                b.feasible.then(|| b.lower + u * (1.0 - b.lower)).filter(|&a| {
                    rate_s_csr(p, a, &gains, s2) >= config.eps_sic
                        && rate_c_csr(p, a, &gains, s2, config.eta) >= config.eps_c
                })
            }
        };
        if let Some(alpha) = alpha {
            if best.is_none_or(|b| alpha < b.alpha) {
                best = Some(BaselineDraw { alpha, gains });
            }
        }
    }
    Ok(best)
}

/// Aggregated rows plus the per-iteration traces of every run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationOutput {
    pub table: Table,
    pub traces: Table,
}

struct InstanceOutcome {
    result: std::result::Result<OptimResult, Error>,
    xi: Option<DepReport>,
    baseline: Option<DepReport>,
}

fn modes(selection: ModeSelection) -> Vec<Mode> {
    match selection {
        ModeSelection::Psr => vec![Mode::Psr],
        ModeSelection::Csr => vec![Mode::Csr],
        ModeSelection::Both => vec![Mode::Psr, Mode::Csr],
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One row per sweep value and mode, averaged over `trials` channel instances.
/// Both modes see the same channels. Instances where no start phase is
/// feasible are counted in `infeasible`; any other optimizer error in `failed`.
pub fn run_optimization(spec: &ExperimentSpec, opts: &OptimizerOptions) -> Result<OptimizationOutput> {
    spec.validate()?;
    let trials = spec.trials_or(DEFAULT_OPT_TRIALS);
    let fixed = fixed_threshold(spec)?;
    let sweep_col = spec.sweep.param.column();
    let mut table = Table::new(vec![
        sweep_col.clone(),
        Column::new("mode", ""),
        Column::new("instances", ""),
        Column::new("infeasible", ""),
        Column::new("failed", ""),
        Column::new("xi_opt", ""),
        Column::new("gap_opt", ""),
        Column::new("gap_opt_median", ""),
        Column::new("alpha_opt", ""),
        Column::new("iterations_median", ""),
        Column::new("converged", ""),
        Column::new("xi_baseline", ""),
        Column::new("gap_baseline", ""),
        Column::new("baseline_infeasible", ""),
    ]);
    let mut traces = Table::new(vec![
        sweep_col,
        Column::new("mode", ""),
        Column::new("instance", ""),
        Column::new("iteration", ""),
        Column::new("surrogate", ""),
        Column::new("objective", ""),
        Column::new("rank_ratio", ""),
        Column::new("regime", ""),
        Column::new("lipschitz", ""),
    ]);
    for (k, point) in spec.points()?.into_iter().enumerate() {
        let SweepPoint { value, config, .. } = point;
        let point_stream = RngStream::new(spec.seed, k as u64);
        let channels: Vec<ChannelRealization> = (0..trials)
            .map(|i| sample_channels(&config, &mut point_stream.fork(CHANNEL_STREAM).fork(i).rng()))
            .collect::<Result<_>>()?;
        for mode in modes(spec.mode) {
            let outcomes: Vec<InstanceOutcome> = channels
                .par_iter()
                .enumerate()
                .map(|(i, ch)| -> Result<InstanceOutcome> {
                    let run_opts =
                        OptimizerOptions { seed: opts.seed ^ point_stream.fork(i as u64).stream_id, ..*opts };
                    let result = match mode {
                        Mode::Psr => pap_solve(ch, &config, &run_opts),
                        Mode::Csr => plm_solve(ch, &config, &run_opts),
                    };
                    let xi = match &result {
                        Ok(r) => {
                            Some(dep_at(&config, warden_threshold(spec, fixed, &config, r.p, r.alpha)?, r.p, r.alpha)?)
                        }
                        Err(_) => None,
                    };
                    let stream = point_stream.fork(BASELINE_STREAM).fork(i as u64);
                    let baseline = match random_baseline(ch, &config, mode, spec.baseline_draws, stream)? {
                        Some(b) => {
                            let p = config.p_max;
                            Some(dep_at(&config, warden_threshold(spec, fixed, &config, p, b.alpha)?, p, b.alpha)?)
                        }
                        None => None,
                    };
                    Ok(InstanceOutcome { result, xi, baseline })
                })
                .collect::<Result<_>>()?;

            let solved: Vec<&OptimResult> = outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect();
            let infeasible = outcomes.iter().filter(|o| matches!(o.result, Err(Error::Infeasible(_)))).count();
            let failed = outcomes.len() - solved.len() - infeasible;
            let xi: Vec<&DepReport> = outcomes.iter().filter_map(|o| o.xi.as_ref()).collect();
            let base: Vec<&DepReport> = outcomes.iter().filter_map(|o| o.baseline.as_ref()).collect();
            let gaps: Vec<f64> = xi.iter().map(|d| d.gap).collect();
            let iters: Vec<f64> = solved.iter().map(|r| r.iterations as f64).collect();
            table.push(vec![
                spec.sweep.cell(value),
                Cell::Text(mode.as_str().into()),
                Cell::Int(trials),
                Cell::Int(infeasible as u64),
                Cell::Int(failed as u64),
                Cell::Num(mean(&xi.iter().map(|d| d.xi).collect::<Vec<_>>())),
                Cell::Num(mean(&gaps)),
                Cell::Num(median(&gaps)),
                Cell::Num(mean(&solved.iter().map(|r| r.alpha).collect::<Vec<_>>())),
                Cell::Num(median(&iters)),
                Cell::Num(mean(&solved.iter().map(|r| f64::from(u8::from(r.converged))).collect::<Vec<_>>())),
                Cell::Num(mean(&base.iter().map(|d| d.xi).collect::<Vec<_>>())),
                Cell::Num(mean(&base.iter().map(|d| d.gap).collect::<Vec<_>>())),
                Cell::Int((outcomes.len() - base.len()) as u64),
            ]);
            for (i, o) in outcomes.iter().enumerate() {
                let Ok(r) = &o.result else { continue };
                for row in &r.trace {
                    traces.push(vec![
                        spec.sweep.cell(value),
                        Cell::Text(mode.as_str().into()),
                        Cell::Int(i as u64),
                        Cell::Int(row.iteration as u64),
                        Cell::Num(row.surrogate),
                        Cell::Num(row.objective),
                        Cell::Num(row.rank_ratio),
                        Cell::Text(row.regime.map_or("-", |g| g.as_str()).into()),
                        Cell::Num(row.lipschitz),
                    ]);
                }
            }
        }
    }
    Ok(OptimizationOutput { table, traces })
}
