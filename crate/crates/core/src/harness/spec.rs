use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::absorber::CalibrationOptions;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::JunctionConfig;
use crate::propagator::StopCriteria;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ramp,
    ConstantBias,
    Sweep,
    Calibrate,
    GroundState,
    CompareCl,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Ramp => "ramp",
            Mode::ConstantBias => "constant_bias",
            Mode::Sweep => "sweep",
            Mode::Calibrate => "calibrate",
            Mode::GroundState => "ground_state",
            Mode::CompareCl => "compare_cl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JunctionSection {
    pub omega0: f64,
    pub zeta: f64,
    pub beta: f64,
    pub q_damp: f64,
}

impl Default for JunctionSection {
    fn default() -> Self {
        JunctionSection {
            omega0: JunctionConfig::DEFAULT_OMEGA0,
            zeta: JunctionConfig::DEFAULT_ZETA,
            beta: JunctionConfig::DEFAULT_BETA,
            q_damp: JunctionConfig::DEFAULT_Q_DAMP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasSection {
    /// Ramp start, and the bias of `ground_state` runs.
    #[serde(rename = "I0")]
    pub i0: f64,
    #[serde(rename = "dIdt")]
    pub di_dt: f64,
    /// Fixed bias of `constant_bias` runs.
    #[serde(rename = "I_const")]
    pub i_const: f64,
}

impl Default for BiasSection {
    fn default() -> Self {
        BiasSection {
            i0: JunctionConfig::DEFAULT_I0,
            di_dt: JunctionConfig::DEFAULT_DI_DT,
            i_const: 0.96,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveSection {
    pub eta: f64,
    /// Microwave frequency in units of ω₀.
    pub omega_mw_rel: f64,
}

/// Grid bounds left out are placed around the initial well of each run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_hi: Option<f64>,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            phi_lo: None,
            phi_hi: None,
            n_points: GridSpec::DEFAULT_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSection {
    pub dt: f64,
    pub ground_state_tolerance: f64,
    pub ground_state_max_iter: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        NumericsSection {
            dt: JunctionConfig::DEFAULT_DT,
            ground_state_tolerance: 1e-12,
            ground_state_max_iter: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopSection {
    pub norm_floor: f64,
    #[serde(rename = "I_ceiling")]
    pub i_ceiling: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

impl Default for StopSection {
    fn default() -> Self {
        let d = StopCriteria::default();
        StopSection {
            norm_floor: d.norm_floor,
            i_ceiling: d.bias_ceiling,
            t_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            stride: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Mode run in every cell: `ramp` or `constant_bias`.
    pub base: Mode,
    /// Upper bound on concurrently running cells.
    pub workers: usize,
    pub axis: Vec<SweepAxis>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            base: Mode::Ramp,
            workers: 1,
            axis: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateSection {
    #[serde(rename = "I_ref")]
    pub i_ref: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub per_decade: usize,
    pub duration: f64,
    pub plateau_tolerance: f64,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        let d = CalibrationOptions::default();
        CalibrateSection {
            i_ref: 0.98,
            beta_lo: d.betas[0],
            beta_hi: d.betas[d.betas.len() - 1],
            per_decade: 4,
            duration: d.duration,
            plateau_tolerance: d.plateau_tolerance,
        }
    }
}

/// Declarative description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: Mode,
    #[serde(default)]
    pub junction: JunctionSection,
    #[serde(default)]
    pub bias: BiasSection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub stop: StopSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub calibrate: CalibrateSection,
}

/// Parameter names a sweep axis may vary.
pub const SWEEP_PARAMETERS: [&str; 11] = [
    "omega0",
    "zeta",
    "beta",
    "q_damp",
    "I0",
    "dIdt",
    "I_const",
    "eta",
    "omega_mw_rel",
    "dt",
    "n_points",
];

fn in_unit_interval(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::validation(key, &format!("{key} ∈ (0,1)")))
    }
}

impl ExperimentSpec {
    pub fn new(mode: Mode) -> Self {
        ExperimentSpec {
            mode,
            junction: Default::default(),
            bias: Default::default(),
            drive: Default::default(),
            grid: Default::default(),
            numerics: Default::default(),
            stop: Default::default(),
            output: Default::default(),
            sweep: Default::default(),
            calibrate: Default::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical resolved form; reloading it gives back the same spec.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes to TOML")
    }

    /// Bias at which the initial state is prepared.
    pub fn start_bias(&self) -> f64 {
        match self.mode {
            Mode::ConstantBias => self.bias.i_const,
            Mode::Calibrate => self.calibrate.i_ref,
            Mode::Sweep if self.sweep.base == Mode::ConstantBias => self.bias.i_const,
            _ => self.bias.i0,
        }
    }

    /// Junction parameters of a single run of this spec.
    pub fn junction_config(&self) -> Result<JunctionConfig> {
        let start = self.start_bias();
        let auto = GridSpec::default_for_bias(start)?;
        let grid = GridSpec {
            phi_lo: self.grid.phi_lo.unwrap_or(auto.phi_lo),
            phi_hi: self.grid.phi_hi.unwrap_or(auto.phi_hi),
            n_points: self.grid.n_points,
        };
        let cfg = JunctionConfig {
            omega0: self.junction.omega0,
            zeta: self.junction.zeta,
            eta: self.drive.eta,
            omega_mw: self.drive.omega_mw_rel * self.junction.omega0,
            beta: self.junction.beta,
            i0: start,
            di_dt: self.bias.di_dt,
            q_damp: self.junction.q_damp,
            grid,
            dt: self.numerics.dt,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn stop_criteria(&self) -> StopCriteria {
        StopCriteria {
            norm_floor: self.stop.norm_floor,
            bias_ceiling: self.stop.i_ceiling,
            t_max: self.stop.t_max,
        }
    }

    pub fn calibration_options(&self) -> CalibrationOptions {
        let c = &self.calibrate;
        let mut options = CalibrationOptions::log_spaced(c.beta_lo, c.beta_hi, c.per_decade);
        options.duration = c.duration;
        options.stride = self.output.stride;
        options.plateau_tolerance = c.plateau_tolerance;
        options
    }

    /// Copy of the spec with one named parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        let mut s = self.clone();
        match name {
            "omega0" => s.junction.omega0 = value,
            "zeta" => s.junction.zeta = value,
            "beta" => s.junction.beta = value,
            "q_damp" => s.junction.q_damp = value,
            "I0" => s.bias.i0 = value,
            "dIdt" => s.bias.di_dt = value,
            "I_const" => s.bias.i_const = value,
            "eta" => s.drive.eta = value,
            "omega_mw_rel" => s.drive.omega_mw_rel = value,
            "dt" => s.numerics.dt = value,
            "n_points" => {
                if !(value >= 0.0 && value.fract() == 0.0) {
                    return Err(Error::validation("n_points", "a whole number"));
                }
                s.grid.n_points = value as usize
            }
            _ => {
                return Err(Error::validation(
                    "sweep.axis.name",
                    &format!("one of {}", SWEEP_PARAMETERS.join(", ")),
                ))
            }
        }
        Ok(s)
    }

    /// Specs of all sweep cells in row-major axis order, each with its
    /// parameter tuple.
    pub fn sweep_cells(&self) -> Result<Vec<(Vec<(String, f64)>, ExperimentSpec)>> {
        let mut base = self.clone();
        base.mode = self.sweep.base;
        let mut cells = vec![(Vec::new(), base)];
        for axis in &self.sweep.axis {
            let mut next = Vec::with_capacity(cells.len() * axis.values.len());
            for (params, spec) in &cells {
                for &v in &axis.values {
                    let mut p: Vec<(String, f64)> = params.clone();
                    p.push((axis.name.clone(), v));
                    next.push((p, spec.with_parameter(&axis.name, v)?));
                }
            }
            cells = next;
        }
        Ok(cells)
    }

    pub fn validate(&self) -> Result<()> {
        in_unit_interval("I0", self.bias.i0)?;
        if !(self.bias.di_dt >= 0.0) {
            return Err(Error::validation("dIdt", "dIdt ≥ 0"));
        }
        if !(self.drive.omega_mw_rel >= 0.0) {
            return Err(Error::validation("omega_mw_rel", "omega_mw_rel ≥ 0"));
        }
        if self.output.stride == 0 {
            return Err(Error::validation("output.stride", "stride ≥ 1"));
        }
        if !(self.stop.norm_floor >= 0.0 && self.stop.norm_floor < 1.0) {
            return Err(Error::validation("stop.norm_floor", "norm_floor ∈ [0,1)"));
        }
        if self.stop.t_max.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::validation("stop.t_max", "t_max > 0"));
        }
        if !(self.numerics.ground_state_tolerance > 0.0) || self.numerics.ground_state_max_iter == 0 {
            return Err(Error::validation(
                "numerics.ground_state_tolerance",
                "a positive tolerance and at least one iteration",
            ));
        }
        match self.mode {
            Mode::Ramp | Mode::CompareCl => {
                if !(self.bias.di_dt > 0.0) {
                    return Err(Error::validation("dIdt", "dIdt > 0 for a ramp"));
                }
                if !(self.stop.i_ceiling > self.bias.i0) && self.stop.t_max.is_none() {
                    return Err(Error::validation("stop.I_ceiling", "I_ceiling > I0 or a t_max"));
                }
            }
            Mode::ConstantBias => {
                in_unit_interval("I_const", self.bias.i_const)?;
                if self.stop.t_max.is_none() {
                    return Err(Error::validation("stop.t_max", "a t_max for constant_bias"));
                }
            }
            Mode::Calibrate => {
                in_unit_interval("I_ref", self.calibrate.i_ref)?;
                let c = &self.calibrate;
                if !(c.beta_lo > 0.0 && c.beta_hi > c.beta_lo && c.per_decade > 0) {
                    return Err(Error::validation(
                        "calibrate.beta_lo",
                        "0 < beta_lo < beta_hi and per_decade ≥ 1",
                    ));
                }
                if !(c.duration > 0.0) {
                    return Err(Error::validation("calibrate.duration", "duration > 0"));
                }
            }
            Mode::Sweep => {
                if !matches!(self.sweep.base, Mode::Ramp | Mode::ConstantBias) {
                    return Err(Error::validation("sweep.base", "ramp or constant_bias"));
                }
                if self.sweep.workers == 0 {
                    return Err(Error::validation("sweep.workers", "workers ≥ 1"));
                }
                if self.sweep.axis.is_empty() {
                    return Err(Error::validation("sweep.axis", "at least one axis"));
                }
                for axis in &self.sweep.axis {
                    if !SWEEP_PARAMETERS.contains(&axis.name.as_str()) {
                        return Err(Error::validation(
                            "sweep.axis.name",
                            &format!("one of {}", SWEEP_PARAMETERS.join(", ")),
                        ));
                    }
                    if axis.values.is_empty() {
                        return Err(Error::validation("sweep.axis.values", "a non-empty list"));
                    }
                }
                for (_, cell) in self.sweep_cells()? {
                    cell.validate()?;
                }
                return Ok(());
            }
            Mode::GroundState => {}
        }
        self.junction_config().map(|_| ())
    }
}

/// Reads, validates and echoes an experiment file.
pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec = ExperimentSpec::from_toml(&text)?;
    log::info!("resolved configuration from {}:\n{}", path.display(), spec.to_toml());
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let spec = ExperimentSpec::from_toml("mode = \"ramp\"\n[junction]\nomega0 = 0.02\n").unwrap();
        assert_eq!(spec.junction.omega0, 0.02);
        assert_eq!(spec.junction.zeta, JunctionConfig::DEFAULT_ZETA);
        assert_eq!(spec.bias.i0, 0.95);
        assert_eq!(spec.bias.di_dt, 2e-5);
        assert_eq!(spec.stop.norm_floor, 1e-4);
        assert_eq!(spec.stop.i_ceiling, 0.999);
        assert_eq!(spec.grid.n_points, 4096);
    }

    #[test]
    fn out_of_range_bias_names_constraint() {
        let err = ExperimentSpec::from_toml("mode = \"ramp\"\n[bias]\nI0 = 1.2\n").unwrap_err();
        assert!(err.to_string().contains("I0 ∈ (0,1)"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentSpec::from_toml("mode = \"ramp\"\n[junction]\nomega = 0.02\n").unwrap_err();
        assert!(err.to_string().contains("omega"), "{err}");
        assert!(ExperimentSpec::from_toml("mode = \"ramp\"\nextra = 1\n").is_err());
        assert!(ExperimentSpec::from_toml("mode = \"bounce\"\n").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let text = "mode = \"sweep\"\n[stop]\nt_max = 100.0\n[sweep]\nbase = \"constant_bias\"\nworkers = 2\n\
                    [[sweep.axis]]\nname = \"eta\"\nvalues = [0.0, 0.01]\n";
        let spec = ExperimentSpec::from_toml(text).unwrap();
        let again = ExperimentSpec::from_toml(&spec.to_toml()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(spec.to_toml(), again.to_toml());
    }

    #[test]
    fn sweep_cells_cover_grid() {
        let mut spec = ExperimentSpec::new(Mode::Sweep);
        spec.sweep.axis = vec![
            SweepAxis {
                name: "eta".into(),
                values: vec![0.0, 0.01, 0.02],
            },
            SweepAxis {
                name: "omega_mw_rel".into(),
                values: vec![0.5, 0.6],
            },
        ];
        let cells = spec.sweep_cells().unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[3].0, vec![("eta".to_string(), 0.01), ("omega_mw_rel".to_string(), 0.6)]);
        assert_eq!(cells[3].1.drive.eta, 0.01);
        assert_eq!(cells[3].1.mode, Mode::Ramp);
    }

    #[test]
    fn sweep_axis_must_exist() {
        let mut spec = ExperimentSpec::new(Mode::Sweep);
        spec.sweep.axis = vec![SweepAxis {
            name: "temperature".into(),
            values: vec![1.0],
        }];
        assert!(spec.validate().is_err());
        spec.sweep.axis[0].name = "eta".into();
        spec.sweep.axis[0].values.clear();
        assert!(spec.validate().is_err());
    }
}
