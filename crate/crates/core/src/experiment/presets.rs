use super::{ExperimentSpec, Layout, ModeSelection, ScenarioSpec, Sweep, SweepParam};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Dep,
    Optimize,
}

pub const PRESET_NAMES: [&str; 7] = ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// The reference figure sweeps: B = 3, σ₀² = −80 dBm, Q = 5, L = 2.5e−3 and
/// the reference node positions throughout. `calibrated` swaps in the
/// calibrated layout, under which the rate constraints are satisfiable.
pub fn preset(name: &str, calibrated: bool) -> Result<(Analysis, ExperimentSpec)> {
    let scenario = |elements: usize, p_max_dbm: f64| ScenarioSpec {
        layout: if calibrated { Layout::Calibrated } else { Layout::Paper },
        elements: Some(elements),
        p_max_dbm: Some(p_max_dbm),
        noise_power_dbm: Some(-80.0),
        rician_factor: Some(3.0),
        quadrature_order: Some(5),
        lipschitz: Some(2.5e-3),
        eps_sic: Some(2.0),
        eps_c: Some(0.5),
        ..Default::default()
    };
    let sweep = |param, values| Sweep { param, values };
    let (analysis, mut spec) = match name {
        // DEP versus transmit power at α = 0.2.
        "fig3" => {
            (Analysis::Dep, ExperimentSpec::new(scenario(30, 25.0), sweep(SweepParam::PMaxDbm, range(0.0, 30.0, 2.0))))
        }
        // Convergence traces at 25 dBm for growing M.
        "fig4" => (
            Analysis::Optimize,
            ExperimentSpec {
                trials: Some(1),
                ..ExperimentSpec::new(scenario(10, 25.0), sweep(SweepParam::Elements, vec![4.0, 8.0, 10.0]))
            },
        ),
        // Optimized DEP versus transmit power.
        "fig5" => (
            Analysis::Optimize,
            ExperimentSpec::new(scenario(10, 25.0), sweep(SweepParam::PMaxDbm, range(0.0, 30.0, 5.0))),
        ),
        // Versus the primary rate requirement at ε_c = 0.5.
        "fig6" => (
            Analysis::Optimize,
            ExperimentSpec::new(scenario(10, 25.0), sweep(SweepParam::EpsSic, range(1.0, 3.0, 0.5))),
        ),
        // Versus the BD rate requirement at ε_SIC = 2.
        "fig7" => (
            Analysis::Optimize,
            ExperimentSpec::new(scenario(10, 25.0), sweep(SweepParam::EpsC, range(0.25, 1.25, 0.25))),
        ),
        // Versus the symbol-period ratio, CSR only.
        "fig8" => (
            Analysis::Optimize,
            ExperimentSpec {
                mode: ModeSelection::Csr,
                ..ExperimentSpec::new(scenario(10, 25.0), sweep(SweepParam::Eta, vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]))
            },
        ),
        // DEP versus the reflection coefficient under the optimal threshold.
        "fig9" => {
            (Analysis::Dep, ExperimentSpec::new(scenario(30, 25.0), sweep(SweepParam::Alpha, range(0.1, 1.0, 0.1))))
        }
        other => {
            return Err(Error::Config(format!("unknown preset {other:?}; expected one of {}", PRESET_NAMES.join(", "))))
        }
    };
    spec.validate()?;
    spec.seed = 1;
    Ok((analysis, spec))
}
