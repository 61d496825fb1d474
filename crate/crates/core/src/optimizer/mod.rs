//! Phase-shift optimization: successive descent-lemma surrogates solved as SDPs
//! with SROCR, for the PSR (maximize the double-reflection gain) and CSR
//! (minimize the admissible reflection coefficient) strategies.

mod pap;
mod plm;
mod surrogate;

pub use pap::pap_solve;
pub use plm::plm_solve;
pub use surrogate::{
    backtracked_lipschitz, build_surrogate, certified_lipschitz, chi, gamma, taylor_chi_upper, Surrogate,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    build_lifted, CVector, CascadeGains, ChannelRealization, LiftedMatrices, PhaseProfile, SystemConfig,
};
use crate::detection::DepReport;
use crate::numerics::RngStream;
use crate::rates::Mode;
use crate::sdp::{extract_phase, srocr, SdpProblem, SdpSolution, SdpStatus, SrocrSchedule};
use crate::strategy::{CsrSicBound, SnrRegime};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initialization {
    /// Uniform random phases.
    #[default]
    Random,
    /// Phases that co-phase the single-reflection S→IRS→R path.
    AlignSourceReceiver,
}

/// How each outer iteration picks the surrogate curvature L.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LipschitzPolicy {
    /// Double until the sampled minorant check passes. Longer steps, but the
    /// minorant is only verified on the samples and the accepted candidate.
    #[default]
    Sampled,
    /// Also clear the analytic bound, so the surrogate is a global minorant.
    Certified,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub max_iter: usize,
    pub sdp_tol: f64,
    pub schedule: SrocrSchedule,
    pub init: Initialization,
    pub seed: u64,
    /// Relative tightening of the SDP constraints so the rank-one projection
    /// still satisfies the exact ones.
    pub margin: f64,
    /// Random unit-modulus points on which each surrogate must stay below Γ.
    pub minorant_samples: usize,
    /// Doublings of L allowed per outer iteration before declaring a stationary point.
    pub max_backtracks: usize,
    pub csr_bound: CsrSicBound,
    pub lipschitz: LipschitzPolicy,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            sdp_tol: 1e-9,
            schedule: SrocrSchedule::default(),
            init: Initialization::Random,
            seed: 0,
            margin: 1e-2,
            minorant_samples: 100,
            max_backtracks: 20,
            csr_bound: CsrSicBound::Exact,
            lipschitz: LipschitzPolicy::Sampled,
        }
    }
}

/// One accepted outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Surrogate value at the accepted phase.
    pub surrogate: f64,
    /// Γ for PSR, the smallest admissible α for CSR.
    pub objective: f64,
    /// λ_max/Tr of the last relaxed SDP solution before rank-one projection.
    pub rank_ratio: f64,
    pub regime: Option<SnrRegime>,
    pub lipschitz: f64,
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub mode: Mode,
    pub phase: PhaseProfile,
    pub alpha: f64,
    pub p: f64,
    pub gains: CascadeGains,
    pub trace: Vec<TraceRow>,
    pub dep: DepReport,
    /// Outer iterations over every run, including a discarded regime re-solve.
    pub iterations: usize,
    pub converged: bool,
    pub regime: Option<SnrRegime>,
    /// |Γ(v) − relaxed SDP objective|/Γ at the last accepted Γ-maximizing step.
    pub fidelity: Option<f64>,
    pub surrogate_rebuilt: bool,
    pub srocr: SrocrStats,
}

/// SROCR outcomes over every step SDP a run solved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SrocrStats {
    /// Calls whose relaxed SDP was feasible.
    pub runs: usize,
    /// Of those, calls that stopped short of a rank-one solution.
    pub failures: usize,
}

impl SrocrStats {
    pub fn merge(self, other: SrocrStats) -> SrocrStats {
        SrocrStats { runs: self.runs + other.runs, failures: self.failures + other.failures }
    }
}

impl OptimResult {
    pub fn objective_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.objective).collect()
    }
}

/// Channel-derived data shared by both algorithms. Lifted matrices carry no
/// path loss; `a_sr` and `a_bg` restore it.
pub(crate) struct Instance<'a> {
    pub ch: &'a ChannelRealization,
    pub config: &'a SystemConfig,
    pub lifted: LiftedMatrices,
    pub p_hat: f64,
    /// |h_SR|² = a_sr·vᴴG_SR v.
    pub a_sr: f64,
    /// |h_SB|²|h_BR|² = a_bg·Γ(v).
    pub a_bg: f64,
    pub samples: Vec<CVector>,
    pub stream: RngStream,
    pub opts_max_iter: usize,
}

impl<'a> Instance<'a> {
    pub fn new(ch: &'a ChannelRealization, config: &'a SystemConfig, opts: &OptimizerOptions) -> Result<Self> {
        config.validate()?;
        let m = ch.elements();
        if m != config.elements {
            return Err(Error::Dimension { expected: config.elements, got: m });
        }
        let l = &ch.losses;
        let stream = RngStream::new(opts.seed, 0x0b7);
        let mut rng = stream.fork(0).rng();
        let samples = (0..opts.minorant_samples).map(|_| PhaseProfile::random(m, &mut rng).v).collect();
        Ok(Self {
            ch,
            config,
            lifted: build_lifted(ch),
            p_hat: config.p_max,
            a_sr: 1.0 / (l.source * l.receiver),
            a_bg: 1.0 / (l.source * l.backscatter * l.backscatter * l.receiver),
            samples,
            stream,
            opts_max_iter: opts.max_iter,
        })
    }

    pub fn gains(&self, phase: &PhaseProfile) -> Result<CascadeGains> {
        CascadeGains::new(self.ch, phase)
    }

    pub fn gamma(&self, v: &CVector) -> f64 {
        gamma(v, &self.lifted.g_sb, &self.lifted.g_br)
    }

    /// The configured start first, then co-phasing candidates and a random draw.
    pub fn start_candidates(&self, init: Initialization) -> Vec<PhaseProfile> {
        let m = self.ch.elements();
        let mut rng = self.stream.fork(1).rng();
        let random = PhaseProfile::from_theta((0..m).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect());
        let align = |c: &CVector| PhaseProfile::from_vector(c);
        let sr = align(&self.lifted.c_sr);
        let mut out = match init {
            Initialization::Random => vec![random, sr],
            Initialization::AlignSourceReceiver => vec![sr, random],
        };
        out.push(align(&self.lifted.c_sb));
        out.push(align(&self.lifted.c_br));
        out
    }
}

/// Whether a true-objective value improves (or ties) the incumbent.
fn no_worse(candidate: f64, incumbent: f64, minimize: bool) -> bool {
    if minimize {
        candidate <= incumbent
    } else {
        candidate >= incumbent
    }
}

/// Start from the configured candidate if it is feasible, otherwise the best feasible one.
pub(crate) fn pick_start(
    candidates: Vec<PhaseProfile>,
    objective: &dyn Fn(&PhaseProfile) -> Option<f64>,
    minimize: bool,
) -> Option<(PhaseProfile, f64)> {
    let mut iter = candidates.into_iter();
    let first = iter.next()?;
    if let Some(f) = objective(&first) {
        return Some((first, f));
    }
    iter.filter_map(|p| objective(&p).map(|f| (p, f))).fold(
        None,
        |best: Option<(PhaseProfile, f64)>, (p, f)| match best {
            Some((_, bf)) if no_worse(bf, f, minimize) => best,
            _ => Some((p, f)),
        },
    )
}

/// One successive-surrogate run.
pub(crate) struct ScaSpec<'a> {
    /// SDP for one step; the bool asks for the tightened (margin) version.
    pub build: &'a dyn Fn(&Surrogate, &PhaseProfile, bool) -> Result<SdpProblem>,
    /// True objective of an exactly feasible phase, None otherwise.
    pub objective: &'a dyn Fn(&PhaseProfile) -> Option<f64>,
    pub minimize: bool,
    /// Whether the SDP objective is the Γ surrogate itself (enables the fidelity check).
    pub maximizes_surrogate: bool,
    pub regime: Option<SnrRegime>,
}

pub(crate) struct ScaOutcome {
    pub phase: PhaseProfile,
    pub value: f64,
    pub trace: Vec<TraceRow>,
    pub iterations: usize,
    pub converged: bool,
    pub fidelity: Option<f64>,
    pub rebuilt: bool,
    pub srocr: SrocrStats,
}

fn solve_step(
    spec: &ScaSpec,
    sur: &Surrogate,
    anchor: &PhaseProfile,
    opts: &OptimizerOptions,
    stats: &mut SrocrStats,
) -> Result<Option<SdpSolution>> {
    for tightened in [true, false] {
        let problem = (spec.build)(sur, anchor, tightened)?;
        let result = srocr(&problem, &opts.schedule, opts.sdp_tol);
        if !matches!(&result, Ok(sol) if sol.status == SdpStatus::Infeasible) {
            stats.runs += 1;
            stats.failures += usize::from(!matches!(&result, Ok(sol) if sol.status == SdpStatus::Optimal));
        }
        match result {
            Ok(sol) if sol.status == SdpStatus::Infeasible => continue,
            Ok(sol) => return Ok(Some(sol)),
            Err(_) => return Ok(None),
        }
    }
    Ok(None)
}

pub(crate) fn run_sca(
    inst: &Instance,
    spec: &ScaSpec,
    start: PhaseProfile,
    start_value: f64,
    opts: &OptimizerOptions,
) -> Result<ScaOutcome> {
    let (g_sb, g_br) = (&inst.lifted.g_sb, &inst.lifted.g_br);
    let l_floor = inst.config.lipschitz;
    let mut phase = start;
    let mut value = start_value;
    let mut lip = l_floor;
    let mut rebuilt = false;
    let mut fidelity = None;
    let mut stats = SrocrStats::default();
    let mut trace = vec![TraceRow {
        iteration: 0,
        surrogate: inst.gamma(&phase.v),
        objective: value,
        rank_ratio: 1.0,
        regime: spec.regime,
        lipschitz: lip,
    }];
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let mut l = l_floor.max(0.5 * lip);
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            // Raising L until the minorant checks pass does not count against the budget.
            l = backtracked_lipschitz(
                &phase.v,
                g_sb,
                g_br,
                l,
                &inst.samples,
                opts.lipschitz == LipschitzPolicy::Certified,
            )?;
            let sur = build_surrogate(&phase.v, g_sb, g_br, l)?;
            rebuilt |= sur.rebuilt;
            let Some(sol) = solve_step(spec, &sur, &phase, opts, &mut stats)? else { break };
            if sol.status != SdpStatus::Optimal {
                l *= 2.0;
                continue;
            }
            let Ok(cand) = extract_phase(&sol) else {
                l *= 2.0;
                continue;
            };
            let cand_slice = std::slice::from_ref(&cand.v);
            if !sur.is_minorant(cand_slice, g_sb, g_br) {
                // Raise L until the surrogate would have been valid at this candidate.
                while l.is_finite() && !build_surrogate(&phase.v, g_sb, g_br, l)?.is_minorant(cand_slice, g_sb, g_br) {
                    l *= 2.0;
                }
                continue;
            }
            match (spec.objective)(&cand) {
                Some(f) if no_worse(f, value, spec.minimize) => {
                    accepted = Some((cand, f, sol, sur));
                    break;
                }
                _ => l *= 2.0,
            }
        }
        let Some((cand, f, sol, sur)) = accepted else {
            // No step improves the exact objective: stationary for this surrogate family.
            converged = true;
            break;
        };
        let g_new = inst.gamma(&cand.v);
        if spec.maximizes_surrogate && g_new > 0.0 {
            fidelity = Some((g_new - sol.relaxed_objective).abs() / g_new);
        }
        let change = (f - value).abs() / value.abs().max(f64::MIN_POSITIVE);
        trace.push(TraceRow {
            iteration: it,
            surrogate: sur.value(&cand.v),
            objective: f,
            rank_ratio: sol.relaxed_rank_ratio,
            regime: spec.regime,
            lipschitz: l,
        });
        phase = cand;
        value = f;
        lip = l;
        if change < inst.config.tol {
            converged = true;
            break;
        }
    }
    Ok(ScaOutcome { phase, value, trace, iterations, converged, fidelity, rebuilt, srocr: stats })
}
