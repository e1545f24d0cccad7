//! Strang-split propagation of the non-Hermitian, nonlinear phase equation.
//!
//! One step is `K(dt/2) · P(dt) · K(dt/2)`: the kinetic factors are applied
//! in Fourier space, the potential factor on the grid. `P` combines the real
//! potential phase, the imaginary absorber and the renormalized friction
//! term, all evaluated at the midpoint time of the step.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::absorber;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{self, JunctionConfig};
use crate::wavefunction::{expectation_phi, Wavefunction};

/// Edge probability above which a propagation is aborted.
pub const EDGE_NORM_LIMIT: f64 = 1e-6;

/// Time dependence of the bias current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasSchedule {
    /// `I(t) = i0 + di_dt · t`.
    Ramp { i0: f64, di_dt: f64 },
    Constant { i: f64 },
}

impl BiasSchedule {
    pub fn ramp(config: &JunctionConfig) -> Self {
        BiasSchedule::Ramp {
            i0: config.i0,
            di_dt: config.di_dt,
        }
    }

    pub fn constant(i: f64) -> Self {
        BiasSchedule::Constant { i }
    }

    pub fn bias(&self, t: f64) -> f64 {
        match *self {
            BiasSchedule::Ramp { i0, di_dt } => i0 + di_dt * t,
            BiasSchedule::Constant { i } => i,
        }
    }

    /// Rate of change of the bias; zero for a constant schedule.
    pub fn rate(&self) -> f64 {
        match *self {
            BiasSchedule::Ramp { di_dt, .. } => di_dt,
            BiasSchedule::Constant { .. } => 0.0,
        }
    }

    /// Bias plus the instantaneous microwave tilt `η sin(ω_mw t)`.
    pub fn effective_bias(&self, t: f64, config: &JunctionConfig) -> f64 {
        self.bias(t) + config.eta * (config.omega_mw * t).sin()
    }
}

/// Norm removed during one step, by channel.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepLosses {
    /// Removed by the absorber; counted as switching probability.
    pub tunnel_loss: f64,
    /// Removed by the friction term and restored by renormalization.
    pub friction_loss: f64,
}

/// Conditions that end a propagation; the first one met wins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    pub norm_floor: f64,
    pub bias_ceiling: f64,
    pub t_max: Option<f64>,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria {
            norm_floor: 1e-4,
            bias_ceiling: 0.999,
            t_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NormFloor,
    BiasCeiling,
    TimeLimit,
}

/// One output row. Losses are accumulated since the previous row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub bias: f64,
    pub norm2: f64,
    pub phi_mean: f64,
    pub tunnel_loss: f64,
    pub friction_loss: f64,
}

/// Sampled time series of one propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub samples: Vec<TrajectorySample>,
    pub initial_norm2: f64,
    pub stop_reason: StopReason,
    pub dt: f64,
    pub stride: usize,
    pub bias_rate: f64,
}

impl TrajectoryRecord {
    pub fn final_norm2(&self) -> f64 {
        self.samples.last().map_or(self.initial_norm2, |s| s.norm2)
    }

    pub fn total_tunnel_loss(&self) -> f64 {
        self.samples.iter().map(|s| s.tunnel_loss).sum()
    }
}

/// Output of [`Propagator::run`]: the record plus the final state.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub record: TrajectoryRecord,
    pub final_state: Wavefunction,
}

/// Reusable propagation workspace for one configuration and schedule.
pub struct Propagator {
    config: JunctionConfig,
    schedule: BiasSchedule,
    grid: Grid,
    kinetic_half: Vec<Complex64>,
    kinetic_energy: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    work: Vec<Complex64>,
    static_phase: Vec<Complex64>,
    kinetic_full: Vec<Complex64>,
    tdip: Vec<f64>,
    absorber_decay: Vec<f64>,
    absorber_loss: Vec<f64>,
    absorber_start: usize,
    absorber_bias: Option<[u64; 3]>,
}

/// Nodes per block of the phase and friction recurrences.
const BLOCK: usize = 64;

impl Propagator {
    pub fn new(config: &JunctionConfig, schedule: BiasSchedule) -> Result<Self> {
        config.validate_dynamics()?;
        let grid = Grid::new(config.grid)?;
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        let mass = config.mass();
        let kinetic_energy: Vec<f64> = grid
            .wavenumbers()
            .iter()
            .map(|k| k * k / (2.0 * mass))
            .collect();
        // 1/N of the unnormalized inverse transform is folded into the phase.
        let inv_n = 1.0 / n as f64;
        let kinetic_half = kinetic_energy
            .iter()
            .map(|&e| Complex64::from_polar(inv_n, -e * 0.5 * config.dt))
            .collect();
        let kinetic_full = kinetic_energy
            .iter()
            .map(|&e| Complex64::from_polar(inv_n, -e * config.dt))
            .collect();
        Ok(Propagator {
            static_phase: grid
                .phi()
                .iter()
                .map(|p| Complex64::from_polar(1.0, p.cos() * config.dt))
                .collect(),
            kinetic_full,
            absorber_decay: vec![1.0; n],
            absorber_loss: vec![0.0; n],
            absorber_start: n,
            absorber_bias: None,
            config: config.clone(),
            schedule,
            kinetic_half,
            kinetic_energy,
            fft,
            ifft,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            work: vec![Complex64::new(0.0, 0.0); n],
            tdip: vec![0.0; n],
            grid,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &JunctionConfig {
        &self.config
    }

    pub fn schedule(&self) -> BiasSchedule {
        self.schedule
    }

    /// Applies `exp(−i k²/(2M) · dt/2)` in Fourier space. Unitary.
    pub fn kinetic_half_step(&mut self, psi: &mut Wavefunction) {
        self.fft
            .process_with_scratch(&mut psi.amplitudes, &mut self.scratch);
        for (a, f) in psi.amplitudes.iter_mut().zip(&self.kinetic_half) {
            *a *= f;
        }
        self.ifft
            .process_with_scratch(&mut psi.amplitudes, &mut self.scratch);
    }

    fn kinetic_full_step(&mut self, psi: &mut Wavefunction) {
        self.fft
            .process_with_scratch(&mut psi.amplitudes, &mut self.scratch);
        for (a, f) in psi.amplitudes.iter_mut().zip(&self.kinetic_full) {
            *a *= f;
        }
        self.ifft
            .process_with_scratch(&mut psi.amplitudes, &mut self.scratch);
    }

    /// Applies the grid-local factor of one step starting at time `t`.
    ///
    /// In order: the real phase `exp(−iU dt)`, the absorber decay
    /// `exp(−V_im dt)`, and the friction decay `exp(−ζ(φ − ⟨φ⟩)² dt)`
    /// followed by a global rescale back to the pre-friction norm. Both `U`
    /// and `V_im` use the bias at the midpoint `t + dt/2`.
    pub fn potential_step(&mut self, psi: &mut Wavefunction, t: f64) -> Result<StepLosses> {
        let dt = self.config.dt;
        let t_mid = t + 0.5 * dt;
        let tilt = self.schedule.effective_bias(t_mid, &self.config);
        self.refresh_absorber(t)?;

        // exp(−iU dt) = exp(i cos φ · dt) · exp(i tilt·φ · dt); the first factor
        // is tabulated, the second is a linear phase advanced by recurrence.
        let dphi = self.grid.dphi();
        let phi = self.grid.phi();
        let slope = tilt * dt;
        let rotation = Complex64::from_polar(1.0, slope * dphi);
        let mut before = 0.0;
        for ((block, statics), phis) in psi
            .amplitudes
            .chunks_mut(BLOCK)
            .zip(self.static_phase.chunks(BLOCK))
            .zip(phi.chunks(BLOCK))
        {
            let mut linear = Complex64::from_polar(1.0, slope * phis[0]);
            for (a, s) in block.iter_mut().zip(statics) {
                before += a.norm_sqr();
                *a *= s * linear;
                linear *= rotation;
            }
        }

        let start = self.absorber_start;
        let mut tunnel = 0.0;
        for ((a, &decay), &loss) in psi.amplitudes[start..]
            .iter_mut()
            .zip(&self.absorber_decay[start..])
            .zip(&self.absorber_loss[start..])
        {
            tunnel += a.norm_sqr() * loss;
            *a *= decay;
        }
        let tunnel_loss = tunnel * dphi;
        let norm_pre_friction = before * dphi - tunnel_loss;

        let mut friction_loss = 0.0;
        let zeta = self.config.zeta;
        if zeta > 0.0 && norm_pre_friction > 0.0 {
            let mean = mean_phase(&psi.amplitudes, phi);
            // exp(−ζ dt (φ_j − m)²) by the Gaussian recurrence
            // g_{j+1} = g_j r_j, r_{j+1} = r_j c, restarted every block.
            let c = (-2.0 * zeta * dt * dphi * dphi).exp();
            let mut removed = 0.0;
            let mut after = 0.0;
            for (block, phis) in psi.amplitudes.chunks_mut(BLOCK).zip(phi.chunks(BLOCK)) {
                let x = phis[0] - mean;
                let mut g = (-zeta * dt * x * x).exp();
                let mut r = (-zeta * dt * (2.0 * x * dphi + dphi * dphi)).exp();
                for a in block.iter_mut() {
                    let p = a.norm_sqr();
                    let kept = p * g * g;
                    removed += p - kept;
                    after += kept;
                    *a *= g;
                    g *= r;
                    r *= c;
                }
            }
            friction_loss = removed * dphi;
            let remaining = after * dphi;
            if remaining > 0.0 {
                let factor = (norm_pre_friction / remaining).sqrt();
                for a in psi.amplitudes.iter_mut() {
                    *a *= factor;
                }
            }
        }
        psi.norm2 = (psi.norm2 - tunnel_loss).max(0.0);
        Ok(StepLosses {
            tunnel_loss,
            friction_loss,
        })
    }

    /// Rebuilds the absorber factors for the step starting at `t` unless the
    /// effective bias at its start, midpoint and end is unchanged.
    ///
    /// Field values come from the midpoint bias. Each node near the cutoff
    /// is weighted by the share of its cell `[φ − dφ/2, φ + dφ/2]` lying
    /// beyond the turning point, averaged over the step with the turning
    /// point moving linearly in time.
    fn refresh_absorber(&mut self, t: f64) -> Result<()> {
        if self.config.beta == 0.0 {
            return Ok(());
        }
        let dt = self.config.dt;
        let biases = [t, t + 0.5 * dt, t + dt].map(|s| self.schedule.effective_bias(s, &self.config));
        let key = biases.map(f64::to_bits);
        if self.absorber_bias == Some(key) {
            return Ok(());
        }
        absorber::fill_tdip(&mut self.tdip, &self.grid, biases[1], &self.config)?;
        let mid = model::cutoff_geometry(biases[1], self.config.omega0)?;
        let turn_a = model::cutoff_geometry(biases[0], self.config.omega0)?.phi_turn;
        let turn_b = model::cutoff_geometry(biases[2], self.config.omega0)?.phi_turn;
        let (lo, hi) = (turn_a.min(turn_b), turn_a.max(turn_b));
        let phi = self.grid.phi();
        let h = self.grid.dphi();
        let scale = self.config.beta / mid.omega_p;
        let first = self.grid.index_at_or_below(lo - 0.5 * h).map_or(0, |j| j + 1);
        for (v, &p) in self.tdip[first..].iter_mut().zip(&phi[first..]) {
            if p - 0.5 * h >= hi {
                break;
            }
            *v = cell_exposure(p, h, lo, hi) * scale / (2.0 * (p - mid.phi_well)).sqrt();
        }
        self.absorber_start = self.tdip.iter().position(|&v| v > 0.0).unwrap_or(self.tdip.len());
        let start = self.absorber_start;
        self.absorber_decay[..start].iter_mut().for_each(|d| *d = 1.0);
        self.absorber_loss[..start].iter_mut().for_each(|l| *l = 0.0);
        for ((v, decay), loss) in self.tdip[start..]
            .iter()
            .zip(&mut self.absorber_decay[start..])
            .zip(&mut self.absorber_loss[start..])
        {
            let m1 = (-2.0 * v * dt).exp_m1();
            *loss = -m1;
            *decay = (1.0 + m1).sqrt();
        }
        self.absorber_bias = Some(key);
        Ok(())
    }

    /// One full Strang step; advances `psi.t` by `dt`.
    pub fn step(&mut self, psi: &mut Wavefunction) -> Result<StepLosses> {
        let t = psi.t;
        self.kinetic_half_step(psi);
        let losses = self.potential_step(psi, t)?;
        self.kinetic_half_step(psi);
        psi.t = t + self.config.dt;
        Ok(losses)
    }

    /// Kinetic energy expectation of the normalized state.
    pub fn kinetic_energy(&mut self, psi: &Wavefunction) -> f64 {
        self.work.copy_from_slice(&psi.amplitudes);
        self.fft.process_with_scratch(&mut self.work, &mut self.scratch);
        let mut weight = 0.0;
        let mut energy = 0.0;
        for (a, &e) in self.work.iter().zip(&self.kinetic_energy) {
            let p = a.norm_sqr();
            weight += p;
            energy += p * e;
        }
        if weight > 0.0 {
            energy / weight
        } else {
            0.0
        }
    }

    /// `⟨T + U₀⟩` of the normalized state in the static, undriven washboard
    /// at bias `i`.
    pub fn static_energy(&mut self, psi: &Wavefunction, i: f64) -> f64 {
        self.kinetic_energy(psi) + potential_expectation(psi, &self.grid, i)
    }

    /// Propagates until a stop criterion is met, sampling every `stride`
    /// steps and once more at termination.
    pub fn run(&mut self, psi0: Wavefunction, stop: &StopCriteria, stride: usize) -> Result<Propagation> {
        self.run_observed(psi0, stop, stride, |_, _| {})
    }

    /// Like [`Propagator::run`], calling `observer` with the state and the
    /// new row every time a sample is recorded.
    pub fn run_observed<F>(
        &mut self,
        psi0: Wavefunction,
        stop: &StopCriteria,
        stride: usize,
        mut observer: F,
    ) -> Result<Propagation>
    where
        F: FnMut(&Wavefunction, &TrajectorySample),
    {
        if stride == 0 {
            return Err(Error::validation("output.stride", "stride ≥ 1"));
        }
        if stop.t_max.is_none() && !(self.schedule.rate() > 0.0 && stop.bias_ceiling.is_finite()) {
            return Err(Error::validation(
                "stop.t_max",
                "a time limit when the bias does not ramp towards the ceiling",
            ));
        }
        let mut psi = psi0;
        psi.refresh_norm();
        let initial_norm2 = psi.norm2;
        let first = TrajectorySample {
            t: psi.t,
            bias: self.schedule.bias(psi.t),
            norm2: psi.norm2,
            phi_mean: expectation_phi(&psi, &self.grid)?,
            tunnel_loss: 0.0,
            friction_loss: 0.0,
        };
        observer(&psi, &first);
        let mut samples = vec![first];
        let dt = self.config.dt;
        let t0 = psi.t;
        let mut steps = 0u64;
        let mut acc = StepLosses::default();
        let mut steps_since_sample = 0usize;
        // Consecutive kinetic half steps are fused into one full step; the
        // trailing half step is only completed where a sample is taken.
        self.kinetic_half_step(&mut psi);
        let reason = loop {
            let t = psi.t;
            let losses = self.potential_step(&mut psi, t)?;
            steps += 1;
            psi.t = t0 + steps as f64 * dt;
            acc.tunnel_loss += losses.tunnel_loss;
            acc.friction_loss += losses.friction_loss;
            steps_since_sample += 1;

            let reason = if psi.norm2 < stop.norm_floor {
                Some(StopReason::NormFloor)
            } else if self.schedule.bias(psi.t) >= stop.bias_ceiling {
                Some(StopReason::BiasCeiling)
            } else if stop.t_max.is_some_and(|t_max| psi.t >= t_max - 1e-9 * dt) {
                Some(StopReason::TimeLimit)
            } else {
                None
            };

            if steps_since_sample == stride || reason.is_some() {
                self.kinetic_half_step(&mut psi);
                let edge_norm = psi.edge_norm();
                if edge_norm > EDGE_NORM_LIMIT {
                    return Err(Error::GridTooSmall { t: psi.t, edge_norm });
                }
                let sample = TrajectorySample {
                    t: psi.t,
                    bias: self.schedule.bias(psi.t),
                    norm2: psi.norm2,
                    phi_mean: expectation_phi(&psi, &self.grid)?,
                    tunnel_loss: acc.tunnel_loss,
                    friction_loss: acc.friction_loss,
                };
                observer(&psi, &sample);
                samples.push(sample);
                acc = StepLosses::default();
                steps_since_sample = 0;
                if let Some(reason) = reason {
                    break reason;
                }
                self.kinetic_half_step(&mut psi);
            } else {
                self.kinetic_full_step(&mut psi);
            }
        };
        Ok(Propagation {
            record: TrajectoryRecord {
                samples,
                initial_norm2,
                stop_reason: reason,
                dt,
                stride,
                bias_rate: self.schedule.rate(),
            },
            final_state: psi,
        })
    }
}

/// Spectral probability-current probe `j = Im(ψ* ∂φψ)/M`.
pub struct CurrentProbe {
    grid: Grid,
    mass: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    work: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl CurrentProbe {
    pub fn new(config: &JunctionConfig) -> Result<Self> {
        let grid = Grid::new(config.grid)?;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(grid.len());
        let ifft = planner.plan_fft_inverse(grid.len());
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        Ok(CurrentProbe {
            mass: config.mass(),
            work: vec![Complex64::new(0.0, 0.0); grid.len()],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            grid,
            fft,
            ifft,
        })
    }

    /// Current at the node nearest to `phi`.
    pub fn at(&mut self, psi: &Wavefunction, phi: f64) -> f64 {
        self.work.copy_from_slice(&psi.amplitudes);
        self.fft.process_with_scratch(&mut self.work, &mut self.scratch);
        let inv_n = 1.0 / self.grid.len() as f64;
        for (a, &k) in self.work.iter_mut().zip(self.grid.wavenumbers()) {
            *a *= Complex64::new(0.0, k * inv_n);
        }
        self.ifft.process_with_scratch(&mut self.work, &mut self.scratch);
        let j = self
            .grid
            .index_at_or_below(phi + 0.5 * self.grid.dphi())
            .unwrap_or(0);
        (psi.amplitudes[j].conj() * self.work[j]).im / self.mass
    }
}

fn mean_phase(amplitudes: &[Complex64], phi: &[f64]) -> f64 {
    let mut weight = 0.0;
    let mut first = 0.0;
    for (a, &p) in amplitudes.iter().zip(phi) {
        let d = a.norm_sqr();
        weight += d;
        first += d * p;
    }
    first / weight
}

fn potential_expectation(psi: &Wavefunction, grid: &Grid, i: f64) -> f64 {
    let mut weight = 0.0;
    let mut energy = 0.0;
    for (a, &phi) in psi.amplitudes.iter().zip(grid.phi()) {
        let p = a.norm_sqr();
        weight += p;
        energy += p * model::tilted_washboard(phi, i);
    }
    energy / weight
}

/// Convenience wrapper: propagates `psi0` under `schedule` and returns the
/// sampled trajectory.
pub fn propagate(
    psi0: Wavefunction,
    schedule: BiasSchedule,
    config: &JunctionConfig,
    stop: &StopCriteria,
    stride: usize,
) -> Result<TrajectoryRecord> {
    let mut propagator = Propagator::new(config, schedule)?;
    Ok(propagator.run(psi0, stop, stride)?.record)
}

/// Settings for imaginary-time relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    /// Imaginary time step (ħ/E_J).
    pub dtau: f64,
    /// Stop once `|ΔE| < tolerance · |E|` between consecutive steps.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        GroundStateOptions {
            dtau: 1.0,
            tolerance: 1e-12,
            max_iter: 200_000,
        }
    }
}

/// A relaxed initial state with its static energy.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub psi: Wavefunction,
    /// `⟨T + U₀⟩` in the unflattened washboard.
    pub energy: f64,
    pub iterations: usize,
}

/// Normalized quasi-bound ground state of the k = 0 well at bias `i`.
pub fn ground_state(config: &JunctionConfig, i: f64) -> Result<Wavefunction> {
    Ok(relax_ground_state(config, i, &GroundStateOptions::default())?.psi)
}

/// Imaginary-time relaxation in the static washboard at bias `i`.
///
/// Beyond the outer turning point the potential is held flat at `U(φ_turn)`
/// so the state cannot drain into the running region.
pub fn relax_ground_state(config: &JunctionConfig, i: f64, options: &GroundStateOptions) -> Result<GroundState> {
    if !(i > 0.0 && i < 1.0) {
        return Err(Error::validation("I", "I ∈ (0,1) for the ground state"));
    }
    config.validate_dynamics()?;
    let grid = Grid::new(config.grid)?;
    let n = grid.len();
    let cutoff = model::cutoff_geometry(i, config.omega0)?;
    let phi_min = cutoff.phi_well;
    let omega_p = model::plasma_frequency(i, config.omega0)?;
    let mass = config.mass();
    let sigma = (1.0 / (2.0 * mass * omega_p)).sqrt();
    let spec = config.grid;
    if spec.phi_lo > phi_min - 8.0 * sigma || spec.phi_hi <= cutoff.phi_turn {
        return Err(Error::validation(
            "grid",
            "a grid covering [φ_min − 8σ, φ_turn] of the initial well",
        ));
    }

    let u_turn = model::tilted_washboard(cutoff.phi_turn, i);
    let u_min = model::tilted_washboard(phi_min, i);
    let dtau = options.dtau;
    let potential_decay: Vec<f64> = grid
        .phi()
        .iter()
        .map(|&phi| {
            let u = if phi > cutoff.phi_turn {
                u_turn
            } else {
                model::tilted_washboard(phi, i)
            };
            (-(u - u_min) * dtau).exp()
        })
        .collect();

    let schedule = BiasSchedule::constant(i);
    let mut workspace = Propagator::new(config, schedule)?;
    let kinetic_decay: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .map(|k| (-k * k / (2.0 * mass) * 0.5 * dtau).exp() / n as f64)
        .collect();

    let mut psi = Wavefunction::gaussian(&grid, phi_min, sigma, 0.0);
    let fft = workspace.fft.clone();
    let ifft = workspace.ifft.clone();
    let mut scratch = workspace.scratch.clone();
    let mut half_kinetic = |psi: &mut Wavefunction| {
        fft.process_with_scratch(&mut psi.amplitudes, &mut scratch);
        for (a, &f) in psi.amplitudes.iter_mut().zip(&kinetic_decay) {
            *a *= f;
        }
        ifft.process_with_scratch(&mut psi.amplitudes, &mut scratch);
    };

    let mut energy = workspace.static_energy(&psi, i);
    for iteration in 1..=options.max_iter {
        half_kinetic(&mut psi);
        for (a, &f) in psi.amplitudes.iter_mut().zip(&potential_decay) {
            *a *= f;
        }
        half_kinetic(&mut psi);
        psi.normalize();
        let next = workspace.static_energy(&psi, i);
        let change = (next - energy).abs();
        energy = next;
        if change < options.tolerance * energy.abs() {
            psi.t = 0.0;
            return Ok(GroundState {
                psi,
                energy,
                iterations: iteration,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: options.max_iter,
        last_energy: energy,
    })
}

/// Mean share of the cell `[p − h/2, p + h/2]` beyond a cutoff that moves
/// uniformly from `lo` to `hi`.
fn cell_exposure(p: f64, h: f64, lo: f64, hi: f64) -> f64 {
    let u = |c: f64| (c - (p - 0.5 * h)) / h;
    let (ua, ub) = (u(lo), u(hi));
    if ub - ua < 1e-6 {
        return (1.0 - 0.5 * (ua + ub)).clamp(0.0, 1.0);
    }
    let antiderivative = |u: f64| {
        if u <= 0.0 {
            u
        } else if u >= 1.0 {
            0.5
        } else {
            u - 0.5 * u * u
        }
    };
    (antiderivative(ub) - antiderivative(ua)) / (ub - ua)
}
