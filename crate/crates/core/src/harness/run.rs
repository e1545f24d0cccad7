use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::absorber::{self, BetaScan, CalibrationReport};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{self, JunctionConfig};
use crate::propagator::{relax_ground_state, BiasSchedule, GroundState, GroundStateOptions, Propagator, StopReason, TrajectoryRecord};
use crate::switching::{self, ComparisonMetrics, RateSeries, SwitchingDistribution};
use crate::wavefunction::expectation_phi;

use super::spec::{ExperimentSpec, Mode, SweepAxis};

/// Trajectory of one propagation with everything derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub record: TrajectoryRecord,
    pub rates: RateSeries,
    pub distribution: SwitchingDistribution,
}

/// Ground state of the initial well with reference energies.
#[derive(Debug, Clone)]
pub struct GroundStateOutput {
    pub state: GroundState,
    pub bias: f64,
    pub u_min: f64,
    pub omega_p: f64,
    pub phi_mean: f64,
    pub grid: Grid,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateSummary {
    #[serde(rename = "I")]
    pub bias: f64,
    pub energy: f64,
    pub energy_above_min: f64,
    pub omega_p: f64,
    pub phi_mean: f64,
    pub iterations: usize,
}

impl GroundStateOutput {
    pub fn summary(&self) -> GroundStateSummary {
        GroundStateSummary {
            bias: self.bias,
            energy: self.state.energy,
            energy_above_min: self.state.energy - self.u_min,
            omega_p: self.omega_p,
            phi_mean: self.phi_mean,
            iterations: self.state.iterations,
        }
    }
}

/// Quasi-static comparison of a simulated ramp with the closed-form rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareOutput {
    pub run: RunOutput,
    pub cl: SwitchingDistribution,
    pub metrics: ComparisonMetrics,
}

/// Calibration scan and, when a plateau exists, its report.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutput {
    pub scan: BetaScan,
    pub report: Option<CalibrationReport>,
}

/// Compact per-cell result of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub total_mass: f64,
    pub final_norm2: f64,
    pub peak: Option<f64>,
    pub fwhm: Option<f64>,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub params: Vec<(String, f64)>,
    pub outcome: std::result::Result<RunOutput, String>,
}

impl SweepCell {
    pub fn summary(&self) -> Option<CellSummary> {
        self.outcome.as_ref().ok().map(|run| CellSummary {
            total_mass: run.distribution.total_mass,
            final_norm2: run.record.final_norm2(),
            peak: run.distribution.peak(),
            fwhm: run.distribution.fwhm(),
            stop_reason: run.record.stop_reason,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub base: Mode,
    pub axes: Vec<SweepAxis>,
    pub cells: Vec<SweepCell>,
    pub wall_seconds: f64,
}

impl SweepResult {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }
}

fn ground_state_options(spec: &ExperimentSpec) -> GroundStateOptions {
    GroundStateOptions {
        tolerance: spec.numerics.ground_state_tolerance,
        max_iter: spec.numerics.ground_state_max_iter,
        ..GroundStateOptions::default()
    }
}

pub fn run_ground_state(spec: &ExperimentSpec) -> Result<GroundStateOutput> {
    let cfg = spec.junction_config()?;
    let bias = spec.bias.i0;
    let state = relax_ground_state(&cfg, bias, &ground_state_options(spec))?;
    let grid = Grid::new(cfg.grid)?;
    let (phi_min, _) = model::well_extrema(bias)?;
    Ok(GroundStateOutput {
        phi_mean: expectation_phi(&state.psi, &grid)?,
        u_min: model::tilted_washboard(phi_min, bias),
        omega_p: model::plasma_frequency(bias, cfg.omega0)?,
        state,
        bias,
        grid,
    })
}

fn propagate_from_ground(spec: &ExperimentSpec, cfg: &JunctionConfig, schedule: BiasSchedule) -> Result<TrajectoryRecord> {
    let start = schedule.bias(0.0);
    let psi = relax_ground_state(cfg, start, &ground_state_options(spec))?.psi;
    let mut propagator = Propagator::new(cfg, schedule)?;
    Ok(propagator.run(psi, &spec.stop_criteria(), spec.output.stride)?.record)
}

/// Ground state at `I0`, linear ramp with the configured drive, and `P(I)`.
pub fn run_ramp(spec: &ExperimentSpec) -> Result<RunOutput> {
    let cfg = spec.junction_config()?;
    let record = propagate_from_ground(spec, &cfg, BiasSchedule::ramp(&cfg))?;
    let distribution = switching::switching_distribution(&record, cfg.di_dt)?;
    Ok(RunOutput {
        rates: switching::instantaneous_rate(&record),
        record,
        distribution,
    })
}

/// Ground state at `I_const`, drive on from `t = 0`, and the switching
/// density over time.
pub fn run_constant_bias(spec: &ExperimentSpec) -> Result<RunOutput> {
    let cfg = spec.junction_config()?;
    let record = propagate_from_ground(spec, &cfg, BiasSchedule::constant(spec.bias.i_const))?;
    let distribution = switching::time_resolved_distribution(&record)?;
    Ok(RunOutput {
        rates: switching::instantaneous_rate(&record),
        record,
        distribution,
    })
}

/// A ramp compared with the quasi-static Caldeira–Leggett distribution on
/// the same current axis.
pub fn run_compare_cl(spec: &ExperimentSpec) -> Result<CompareOutput> {
    let run = run_ramp(spec)?;
    let cfg = spec.junction_config()?;
    let cl = switching::cl_distribution(&run.distribution.axis, cfg.di_dt, &cfg)?;
    let metrics = switching::compare(&run.distribution, &cl)?;
    Ok(CompareOutput { run, cl, metrics })
}

pub fn run_calibration(spec: &ExperimentSpec) -> Result<CalibrationOutput> {
    let cfg = spec.junction_config()?;
    let options = spec.calibration_options();
    let scan = absorber::scan_beta(&cfg, spec.calibrate.i_ref, &options)?;
    let report = match absorber::select_plateau(&cfg, scan.clone(), &options) {
        Ok(report) => Some(report),
        Err(Error::Calibration { table }) => {
            log::error!("no β plateau found\n{table}");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(CalibrationOutput { scan, report })
}

fn run_cell(spec: &ExperimentSpec) -> Result<RunOutput> {
    match spec.mode {
        Mode::Ramp => run_ramp(spec),
        Mode::ConstantBias => run_constant_bias(spec),
        other => Err(Error::validation("sweep.base", &format!("ramp or constant_bias, not {}", other.name()))),
    }
}

/// Runs every sweep cell on a pool of at most `sweep.workers` threads.
/// A failing cell keeps its error message and does not stop the others.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    if spec.mode != Mode::Sweep {
        return Err(Error::validation("mode", "sweep"));
    }
    spec.validate()?;
    let cells = spec.sweep_cells()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.sweep.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<SweepCell> = pool.install(|| {
        cells
            .par_iter()
            .map(|(params, cell)| {
                let outcome = run_cell(cell).map_err(|e| {
                    log::warn!("sweep cell {} failed: {e}", param_tuple(params));
                    e.to_string()
                });
                SweepCell {
                    params: params.clone(),
                    outcome,
                }
            })
            .collect()
    });
    Ok(SweepResult {
        base: spec.sweep.base,
        axes: spec.sweep.axis.clone(),
        cells: results,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Directory name of a parameter tuple, e.g. `eta=0.01_omega_mw_rel=0.51`.
pub fn param_tuple(params: &[(String, f64)]) -> String {
    if params.is_empty() {
        return "default".into();
    }
    params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join("_")
}

/// Parameter tuple identifying a single run of `spec`.
pub fn run_params(spec: &ExperimentSpec) -> Vec<(String, f64)> {
    let p = |k: &str, v: f64| (k.to_string(), v);
    match spec.mode {
        Mode::Ramp | Mode::CompareCl => vec![
            p("I0", spec.bias.i0),
            p("dIdt", spec.bias.di_dt),
            p("eta", spec.drive.eta),
            p("omega_mw_rel", spec.drive.omega_mw_rel),
        ],
        Mode::ConstantBias => vec![
            p("I_const", spec.bias.i_const),
            p("eta", spec.drive.eta),
            p("omega_mw_rel", spec.drive.omega_mw_rel),
        ],
        Mode::GroundState => vec![p("I0", spec.bias.i0)],
        Mode::Calibrate => vec![p("I_ref", spec.calibrate.i_ref)],
        Mode::Sweep => Vec::new(),
    }
}
