//! Declarative experiments: configuration, execution and result files.

mod output;
mod run;
mod spec;

pub use output::{config_hash, emit_results, run_experiment, trajectory_csv, CellEntry, ExperimentResult, Manifest};
pub use run::{
    param_tuple, run_calibration, run_compare_cl, run_constant_bias, run_ground_state, run_params, run_ramp,
    run_sweep, CalibrationOutput, CellSummary, CompareOutput, GroundStateOutput, GroundStateSummary, RunOutput,
    SweepCell, SweepResult,
};
pub use spec::{
    load_config, BiasSection, CalibrateSection, DriveSection, ExperimentSpec, GridSection, JunctionSection, Mode,
    NumericsSection, OutputSection, StopSection, SweepAxis, SweepSection, SWEEP_PARAMETERS,
};
