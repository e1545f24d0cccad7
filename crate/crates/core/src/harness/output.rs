use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::propagator::TrajectoryRecord;
use crate::switching::{RateSeries, SwitchingDistribution};

use super::run::{
    self, param_tuple, run_params, CalibrationOutput, CellSummary, CompareOutput, GroundStateOutput, RunOutput,
    SweepResult,
};
use super::spec::{ExperimentSpec, Mode, SweepAxis};

/// Result of any experiment mode.
#[derive(Debug, Clone)]
pub enum ExperimentResult {
    GroundState(GroundStateOutput),
    Ramp(RunOutput),
    ConstantBias(RunOutput),
    CompareCl(CompareOutput),
    Calibrate(CalibrationOutput),
    Sweep(SweepResult),
}

impl ExperimentResult {
    /// Process exit code: 3 when some sweep cells failed, 2 when the β scan
    /// found no plateau, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentResult::Sweep(s) if s.failed() > 0 => 3,
            ExperimentResult::Calibrate(c) if c.report.is_none() => 2,
            _ => 0,
        }
    }
}

/// Runs the experiment described by `spec` and reports its wall time.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<(ExperimentResult, f64)> {
    spec.validate()?;
    let started = Instant::now();
    let result = match spec.mode {
        Mode::GroundState => ExperimentResult::GroundState(run::run_ground_state(spec)?),
        Mode::Ramp => ExperimentResult::Ramp(run::run_ramp(spec)?),
        Mode::ConstantBias => ExperimentResult::ConstantBias(run::run_constant_bias(spec)?),
        Mode::CompareCl => ExperimentResult::CompareCl(run::run_compare_cl(spec)?),
        Mode::Calibrate => ExperimentResult::Calibrate(run::run_calibration(spec)?),
        Mode::Sweep => ExperimentResult::Sweep(run::run_sweep(spec)?),
    };
    Ok((result, started.elapsed().as_secs_f64()))
}

/// Hex SHA-256 of the canonical resolved configuration.
pub fn config_hash(spec: &ExperimentSpec) -> String {
    let digest = Sha256::digest(spec.to_toml().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Per-cell entry of a sweep manifest.
#[derive(Debug, Clone, Serialize)]
pub struct CellEntry {
    pub dir: String,
    pub params: Vec<(String, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<CellSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub mode: Mode,
    pub config_hash: String,
    pub version: String,
    pub wall_seconds: f64,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<SweepAxis>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellEntry>,
}

/// `t,I,norm2,gamma_t,phi_mean,tunnel_loss,friction_loss` rows. `gamma_t`
/// is NaN past the last sample with positive norm.
pub fn trajectory_csv(record: &TrajectoryRecord, rates: &RateSeries) -> String {
    let mut out = String::from("t,I,norm2,gamma_t,phi_mean,tunnel_loss,friction_loss\n");
    for (k, s) in record.samples.iter().enumerate() {
        let gamma = rates.gamma.get(k).copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.t, s.bias, s.norm2, gamma, s.phi_mean, s.tunnel_loss, s.friction_loss
        );
    }
    out
}

struct Writer {
    root: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn write(&mut self, relative: &str, contents: &str) -> Result<()> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(relative.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, relative: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
        self.write(relative, &(text + "\n"))
    }

    fn distribution(&mut self, dir: &str, name: &str, d: &SwitchingDistribution) -> Result<()> {
        self.write(&format!("{dir}/{name}.csv"), &d.to_csv())?;
        self.json(&format!("{dir}/{name}.json"), &d.summary())
    }

    fn run(&mut self, dir: &str, run: &RunOutput) -> Result<()> {
        self.write(&format!("{dir}/trajectory.csv"), &trajectory_csv(&run.record, &run.rates))?;
        self.distribution(dir, "distribution", &run.distribution)
    }
}

/// Writes all artifacts of `result` under `<output.dir>/<mode>/` and a
/// `manifest.json` there; returns the manifest.
pub fn emit_results(result: &ExperimentResult, spec: &ExperimentSpec, wall_seconds: f64) -> Result<Manifest> {
    let root = Path::new(&spec.output.dir).join(spec.mode.name());
    let mut w = Writer { root, files: Vec::new() };
    w.write("config.toml", &spec.to_toml())?;
    let single = param_tuple(&run_params(spec));
    let mut axes = None;
    let mut cells = Vec::new();
    match result {
        ExperimentResult::GroundState(g) => {
            let mut csv = String::from("phi,re,im,density\n");
            for (phi, a) in g.grid.phi().iter().zip(&g.state.psi.amplitudes) {
                let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e},{:.16e}", phi, a.re, a.im, a.norm_sqr());
            }
            w.write(&format!("{single}/ground_state.csv"), &csv)?;
            w.json(&format!("{single}/ground_state.json"), &g.summary())?;
        }
        ExperimentResult::Ramp(r) | ExperimentResult::ConstantBias(r) => w.run(&single, r)?,
        ExperimentResult::CompareCl(c) => {
            w.run(&single, &c.run)?;
            w.distribution(&single, "cl_distribution", &c.cl)?;
            w.json(&format!("{single}/comparison.json"), &c.metrics)?;
        }
        ExperimentResult::Calibrate(c) => {
            w.write(&format!("{single}/calibration.csv"), &c.scan.table())?;
            if let Some(report) = &c.report {
                w.json(&format!("{single}/calibration.json"), report)?;
            }
        }
        ExperimentResult::Sweep(s) => {
            axes = Some(s.axes.clone());
            for cell in &s.cells {
                let dir = param_tuple(&cell.params);
                let entry = CellEntry {
                    dir: dir.clone(),
                    params: cell.params.clone(),
                    summary: cell.summary(),
                    error: cell.outcome.as_ref().err().cloned(),
                };
                if let Ok(run) = &cell.outcome {
                    w.run(&dir, run)?;
                }
                w.json(&format!("{dir}/cell.json"), &entry)?;
                cells.push(entry);
            }
        }
    }
    let manifest = Manifest {
        mode: spec.mode,
        config_hash: config_hash(spec),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_seconds,
        files: w.files.clone(),
        axes,
        cells,
    };
    w.json("manifest.json", &manifest)?;
    Ok(manifest)
}
