//! `covert`: detection-analysis and phase-optimization sweeps as CSV.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use covert_core::detection::{dep_at_optimal_threshold, optimal_threshold_theorem1, DetectionParams};
use covert_core::experiment::{
    emit_csv, preset, run_dep_analysis, run_optimization, Analysis, Cell, Column, ModeSelection, ScenarioSpec, Table,
    Wcsi, PRESET_NAMES,
};
use covert_core::optimizer::Initialization;
use covert_core::{dbm_to_watts, Error, ExperimentSpec, OptimizerOptions, Result, Threshold};

#[derive(Parser)]
#[command(name = "covert", version, about = "Covert IRS-assisted symbiotic radio: DEP analysis and phase optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and Monte Carlo DEP over a sweep.
    Dep {
        #[command(flatten)]
        run: RunFlags,
    },
    /// PAP (PSR) and PLM (CSR) phase optimization over a sweep, with the random baseline.
    Optimize {
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        opt: OptFlags,
    },
    /// DEP-minimizing warden threshold for one operating point.
    Threshold {
        /// Experiment or scenario file; only its [scenario] table is read.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 25.0)]
        p_dbm: f64,
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,
        /// Overrides the scenario's IRS element count.
        #[arg(long)]
        elements: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs one of the reference figure sweeps.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        name: String,
        /// Use the calibrated layout, under which the rate constraints can be met.
        #[arg(long)]
        calibrated: bool,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        opt: OptFlags,
    },
}

#[derive(Args)]
struct RunFlags {
    /// Experiment file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials (dep) or channel instances (optimize) per point.
    #[arg(long)]
    trials: Option<u64>,
    /// CSV destination; stdout when neither this nor the file's `out` is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    wcsi: Option<WcsiArg>,
}

#[derive(Args)]
struct OptFlags {
    /// Also write per-iteration traces to this CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Start from phases co-phasing the S→IRS→R path instead of random ones.
    #[arg(long)]
    align_init: bool,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Psr,
    Csr,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum WcsiArg {
    Stat,
    None,
}

impl RunFlags {
    fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(t) = self.trials {
            spec.trials = Some(t);
        }
        if let Some(o) = &self.out {
            spec.out = Some(o.clone());
        }
        if let Some(m) = self.mode {
            spec.mode = match m {
                ModeArg::Psr => ModeSelection::Psr,
                ModeArg::Csr => ModeSelection::Csr,
                ModeArg::Both => ModeSelection::Both,
            };
        }
        if let Some(w) = self.wcsi {
            spec.wcsi = match w {
                WcsiArg::Stat => Wcsi::Stat,
                WcsiArg::None => Wcsi::None,
            };
        }
    }

    fn load(&self) -> Result<ExperimentSpec> {
        let path = self.config.as_deref().ok_or_else(|| Error::Config("--config <path> is required".into()))?;
        let mut spec = ExperimentSpec::from_path(path)?;
        self.apply(&mut spec);
        spec.validate()?;
        Ok(spec)
    }
}

impl OptFlags {
    fn options(&self) -> OptimizerOptions {
        OptimizerOptions {
            max_iter: self.max_iter,
            init: if self.align_init { Initialization::AlignSourceReceiver } else { Initialization::Random },
            ..Default::default()
        }
    }
}

fn write_table(table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => emit_csv(table, path),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(table.to_csv_string().as_bytes())
                .map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}

fn optimize(spec: &ExperimentSpec, opt: &OptFlags) -> Result<()> {
    let out = run_optimization(spec, &opt.options())?;
    let infeasible: f64 = out.table.numbers("infeasible").unwrap_or_default().iter().sum();
    if infeasible > 0.0 {
        eprintln!(
            "note: {infeasible} instance(s) admit no feasible reflection coefficient; their rows carry NaN averages"
        );
    }
    write_table(&out.table, spec.out.as_deref())?;
    if let Some(path) = &opt.trace {
        emit_csv(&out.traces, path)?;
    }
    Ok(())
}

fn threshold(config: Option<&Path>, p_dbm: f64, alpha: f64, elements: Option<usize>, out: Option<&Path>) -> Result<()> {
    let scenario = match config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
            ScenarioSpec::from_toml_str(&text)?
        }
        None => ScenarioSpec::default(),
    };
    let mut c = scenario.build()?;
    if let Some(m) = elements {
        c.elements = m;
        c.validate()?;
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let p = dbm_to_watts(p_dbm);
    let losses = c.losses()?;
    let probe = DetectionParams::new(Threshold { noise: c.noise_power, excess: 0.0 }, p, alpha, c.elements, &losses);
    let t = optimal_threshold_theorem1(p, alpha, probe.lambda, probe.l1, probe.l2, c.noise_power)?;
    let dep = dep_at_optimal_threshold(p, alpha, c.elements, &losses, c.noise_power)?;
    let mut table = Table::new(vec![
        Column::new("p", "dBm"),
        Column::new("alpha", ""),
        Column::new("elements", ""),
        Column::new("tau", "W"),
        Column::new("tau_excess", "W"),
        Column::new("xi", ""),
        Column::new("gap", ""),
    ]);
    table.push(vec![
        Cell::Num(p_dbm),
        Cell::Num(alpha),
        Cell::Int(c.elements as u64),
        Cell::Num(t.tau()),
        Cell::Num(t.excess),
        Cell::Num(dep.xi),
        Cell::Num(dep.gap),
    ]);
    write_table(&table, out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dep { run } => {
            let spec = run.load()?;
            write_table(&run_dep_analysis(&spec)?, spec.out.as_deref())
        }
        Command::Optimize { run, opt } => optimize(&run.load()?, &opt),
        Command::Threshold { config, p_dbm, alpha, elements, out } => {
            threshold(config.as_deref(), p_dbm, alpha, elements, out.as_deref())
        }
        Command::Preset { name, calibrated, run, opt } => {
            if run.config.is_some() {
                return Err(Error::Config("presets take no --config".into()));
            }
            let (analysis, mut spec) = preset(&name, calibrated)?;
            run.apply(&mut spec);
            spec.validate()?;
            match analysis {
                Analysis::Dep => write_table(&run_dep_analysis(&spec)?, spec.out.as_deref()),
                Analysis::Optimize => optimize(&spec, &opt),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
