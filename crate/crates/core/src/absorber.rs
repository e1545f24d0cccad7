//! The time-dependent imaginary potential (TDIP) that absorbs tunneled
//! amplitude beyond the moving outer turning point, the running-state
//! wavefunction it is built from, and calibration of its strength β.
//!
//! Beyond the turning point the absorber is `β / (√(2φ′) ω_p(t))` with
//! `φ′ = φ − φ_min(t)`; at and below it the absorber is exactly zero.

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{self, JunctionConfig};
use crate::numerics::{adaptive_trapezoid, linear_fit};
use crate::propagator::{ground_state, BiasSchedule, CurrentProbe, Propagator, StopCriteria};
use crate::wavefunction::Wavefunction;

/// Snapshot of the absorber on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TdipField {
    pub values: Vec<f64>,
    pub phi_turn_used: f64,
    pub t: f64,
}

/// Absorber at time `t` for the instantaneous effective bias `i`.
pub fn build_tdip(grid: &Grid, t: f64, i: f64, config: &JunctionConfig) -> Result<TdipField> {
    let mut values = vec![0.0; grid.len()];
    let phi_turn_used = fill_tdip(&mut values, grid, i, config)?;
    Ok(TdipField {
        values,
        phi_turn_used,
        t,
    })
}

/// Writes the absorber into `values` and returns the cutoff used.
pub(crate) fn fill_tdip(values: &mut [f64], grid: &Grid, i: f64, config: &JunctionConfig) -> Result<f64> {
    let cutoff = model::cutoff_geometry(i, config.omega0)?;
    let phi = grid.phi();
    let last = *phi.last().expect("grid is never empty");
    if cutoff.phi_turn >= last {
        return Err(Error::Config(format!(
            "grid ends at φ = {last} but the turning point is at {} (I = {i})",
            cutoff.phi_turn
        )));
    }
    // First node strictly beyond the turning point.
    let start = match grid.index_at_or_below(cutoff.phi_turn) {
        Some(j) => j + 1,
        None => 0,
    };
    let scale = config.beta / cutoff.omega_p;
    values[..start].iter_mut().for_each(|v| *v = 0.0);
    for (v, &p) in values[start..].iter_mut().zip(&phi[start..]) {
        *v = scale / (2.0 * (p - cutoff.phi_well)).sqrt();
    }
    Ok(cutoff.phi_turn)
}

/// Parameters of one running state emitted from the well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningStateParams {
    /// Decay rate Γ of the emitting state (E_J/ħ).
    pub gamma: f64,
    /// Emission time τ.
    pub tau: f64,
    /// Well bottom the running coordinate is measured from.
    pub phi0: f64,
    /// Energy of the emitting level above the well bottom (ħω).
    pub omega_shift: f64,
    /// Plasma frequency at emission.
    pub omega_p: f64,
}

impl RunningStateParams {
    /// Running state emitted at `tau` from the well at bias `i`; the level
    /// sits `ω_p/2` above the well bottom.
    pub fn new(gamma: f64, tau: f64, i: f64, omega0: f64) -> Result<Self> {
        if !(i > 0.0 && i < 1.0) {
            return Err(Error::Domain(format!("running state needs 0 < I < 1, got {i}")));
        }
        let omega_p = model::plasma_frequency(i, omega0)?;
        let params = RunningStateParams {
            gamma,
            tau,
            phi0: i.asin(),
            omega_shift: 0.5 * omega_p,
            omega_p,
        };
        if !params.regime_ok() {
            warn!(
                "Γ/ω_p = {:.3} is not small; the running-state form assumes Γ ≪ ω_p",
                gamma / omega_p
            );
        }
        Ok(params)
    }

    /// `Γ/ω_p < 0.1`.
    pub fn regime_ok(&self) -> bool {
        self.gamma / self.omega_p < 0.1
    }

    pub fn emitted_at(&self, tau: f64) -> Self {
        RunningStateParams { tau, ..*self }
    }
}

/// Amplitude of the running state at phase `phi` and time `t`.
///
/// Defined for `φ′ = φ − φ₀ > 0` once the front has arrived,
/// `(t − τ)ω_p > √(2φ′)`.
pub fn running_state(phi: f64, t: f64, params: &RunningStateParams) -> Result<Complex64> {
    let shifted = phi - params.phi0;
    if shifted <= 0.0 {
        return Err(Error::Domain(format!("running state needs φ > φ₀, got φ′ = {shifted}")));
    }
    let omega_p = params.omega_p;
    let root = (2.0 * shifted).sqrt();
    let retarded = (t - params.tau) * omega_p - root;
    if retarded <= 0.0 {
        return Err(Error::Domain(format!(
            "running state not yet arrived at φ′ = {shifted} (t − τ = {})",
            t - params.tau
        )));
    }
    let modulus2 = params.gamma / (root * omega_p) * (-params.gamma / omega_p * retarded).exp();
    let spatial_phase = omega_p * shifted.powf(1.5) / (6.0 * 2f64.sqrt());
    let temporal_phase = -params.omega_shift / omega_p * retarded;
    Ok(Complex64::from_polar(modulus2.sqrt(), spatial_phase + temporal_phase))
}

/// `∫_{t−window}^{t} |ψ_out(φ, t, τ)|² dτ` by quadrature over the emission
/// times whose front has reached `phi`.
pub fn integrated_running_density(phi: f64, t: f64, window: f64, params: &RunningStateParams) -> Result<f64> {
    let shifted = phi - params.phi0;
    if shifted <= 0.0 {
        return Err(Error::Domain(format!("φ′ = {shifted} must be positive")));
    }
    let latest = t - (2.0 * shifted).sqrt() / params.omega_p;
    let earliest = t - window;
    if latest <= earliest {
        return Ok(0.0);
    }
    let density = |tau: f64| {
        running_state(phi, t, &params.emitted_at(tau))
            .map(|a| a.norm_sqr())
            .unwrap_or(0.0)
    };
    // The integrand is undefined exactly on the arrival front; stop a hair short.
    let edge = latest - 1e-12 * window;
    Ok(adaptive_trapezoid(density, earliest, edge, 1e-10))
}

/// Closed-form absorber profile `1/(√(2φ′) ω_p)` for β = 1.
pub fn collapsed_profile(shifted_phi: f64, omega_p: f64) -> f64 {
    1.0 / ((2.0 * shifted_phi).sqrt() * omega_p)
}

/// Options of the β scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub betas: Vec<f64>,
    /// Length of each static propagation (ħ/E_J).
    pub duration: f64,
    /// Steps between samples of the norm.
    pub stride: usize,
    /// Largest tolerated rate change per decade of β.
    pub plateau_tolerance: f64,
}

impl CalibrationOptions {
    /// Log-spaced scan from `lo` to `hi` with `per_decade` points per decade.
    pub fn log_spaced(lo: f64, hi: f64, per_decade: usize) -> Self {
        let decades = (hi / lo).log10();
        let n = (decades * per_decade as f64).round() as usize;
        let betas = (0..=n)
            .map(|k| lo * 10f64.powf(k as f64 / per_decade as f64))
            .collect();
        CalibrationOptions {
            betas,
            duration: 6000.0,
            stride: 50,
            plateau_tolerance: 0.2,
        }
    }
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self::log_spaced(1e-5, 1e-2, 4)
    }
}

/// One row of the β scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub beta: f64,
    pub fitted_rate: f64,
    pub cl_ratio: f64,
}

/// Result of [`calibrate_beta`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub beta_star: f64,
    pub plateau_lo: f64,
    pub plateau_hi: f64,
    pub rate_at_beta_star: f64,
    #[serde(skip)]
    pub rows: Vec<CalibrationRow>,
    #[serde(skip)]
    pub cl_rate: f64,
    /// Absorbed norm per unit time over the flux through the turning point,
    /// measured on the tail of the β* run.
    #[serde(skip)]
    pub absorbed_flux_ratio: f64,
}

impl CalibrationReport {
    /// `beta,fitted_rate,cl_ratio` rows.
    pub fn table(&self) -> String {
        format_table(&self.rows)
    }
}

fn format_table(rows: &[CalibrationRow]) -> String {
    let mut out = String::from("beta,fitted_rate,cl_ratio\n");
    for r in rows {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", r.beta, r.fitted_rate, r.cl_ratio));
    }
    out
}

/// Static decay measurement at one bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub r_squared: f64,
    /// Absorbed norm over the integrated turning-point current on the tail.
    pub absorbed_flux_ratio: f64,
}

/// Propagates the ground state at fixed bias `i` for `duration` and fits
/// `ln ‖ψ‖²` against `t` on the second half.
pub fn static_decay(config: &JunctionConfig, i: f64, duration: f64, stride: usize) -> Result<DecayFit> {
    let mut cfg = config.clone();
    cfg.eta = 0.0;
    let psi = ground_state(&cfg, i)?;
    let mut prop = Propagator::new(&cfg, BiasSchedule::constant(i))?;
    let phi_turn = model::cutoff_geometry(i, cfg.omega0)?.phi_turn;
    decay_series(&mut prop, psi, duration, stride, phi_turn)
}

fn decay_series(
    prop: &mut Propagator,
    psi: Wavefunction,
    duration: f64,
    stride: usize,
    phi_turn: f64,
) -> Result<DecayFit> {
    let stop = StopCriteria {
        norm_floor: 0.0,
        bias_ceiling: f64::INFINITY,
        t_max: Some(duration),
    };
    let mut probe = CurrentProbe::new(prop.config())?;
    let mut currents = Vec::new();
    let run = prop.run_observed(psi, &stop, stride, |state, _| {
        currents.push(probe.at(state, phi_turn));
    })?;
    let samples = &run.record.samples;
    let tail = samples.len() / 2;
    let (mut times, mut logs) = (Vec::new(), Vec::new());
    for s in &samples[tail..] {
        if s.norm2 > 0.0 {
            times.push(s.t);
            logs.push(s.norm2.ln());
        }
    }
    let (mut absorbed, mut flux) = (0.0, 0.0);
    for k in tail + 1..samples.len() {
        absorbed += samples[k].tunnel_loss;
        flux += 0.5 * (currents[k - 1] + currents[k]) * (samples[k].t - samples[k - 1].t);
    }
    let fit = linear_fit(&times, &logs)
        .ok_or_else(|| Error::Domain("too few samples to fit a decay rate".into()))?;
    Ok(DecayFit {
        rate: -fit.slope,
        r_squared: fit.r_squared,
        absorbed_flux_ratio: if flux > 0.0 { absorbed / flux } else { f64::NAN },
    })
}

/// Fitted decay rates over a β scan, next to the closed-form rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaScan {
    pub i_ref: f64,
    pub rows: Vec<CalibrationRow>,
    pub cl_rate: f64,
}

impl BetaScan {
    pub fn table(&self) -> String {
        format_table(&self.rows)
    }
}

/// Runs one static propagation per β at `i_ref` and fits its asymptotic
/// decay rate. A run that fails numerically is logged and kept as a row
/// with a NaN rate.
pub fn scan_beta(config: &JunctionConfig, i_ref: f64, options: &CalibrationOptions) -> Result<BetaScan> {
    if options.betas.len() < 2 || options.betas.windows(2).any(|w| w[1] <= w[0] || w[0] <= 0.0) {
        return Err(Error::validation("betas", "at least two increasing positive values"));
    }
    let cl = model::caldeira_leggett_rate(i_ref, config)?;
    let mut cfg = config.clone();
    cfg.eta = 0.0;
    let psi0 = ground_state(&cfg, i_ref)?;
    let phi_turn = model::cutoff_geometry(i_ref, cfg.omega0)?.phi_turn;
    let fits: Vec<Result<DecayFit>> = options
        .betas
        .par_iter()
        .map(|&beta| {
            let mut c = cfg.clone();
            c.beta = beta;
            let mut prop = Propagator::new(&c, BiasSchedule::constant(i_ref))?;
            decay_series(&mut prop, psi0.clone(), options.duration, options.stride, phi_turn)
        })
        .collect();
    let mut rows = Vec::with_capacity(fits.len());
    for (&beta, fit) in options.betas.iter().zip(fits) {
        let rate = match fit {
            Ok(fit) => fit.rate,
            Err(e) if e.exit_code() == 2 => {
                log::warn!("β = {beta:e}: {e}");
                f64::NAN
            }
            Err(e) => return Err(e),
        };
        rows.push(CalibrationRow {
            beta,
            fitted_rate: rate,
            cl_ratio: rate / cl,
        });
    }
    Ok(BetaScan { i_ref, rows, cl_rate: cl })
}

/// Scans β, fits the asymptotic static decay rate at `i_ref` for each
/// value and returns the centre of the widest plateau.
///
/// A pair of neighbouring scan points belongs to a plateau when the rate
/// changes by less than `plateau_tolerance` per decade of β.
pub fn calibrate_beta(config: &JunctionConfig, i_ref: f64, options: &CalibrationOptions) -> Result<CalibrationReport> {
    let scan = scan_beta(config, i_ref, options)?;
    select_plateau(config, scan, options)
}

/// Picks β* from a finished scan and re-measures the decay there.
pub fn select_plateau(config: &JunctionConfig, scan: BetaScan, options: &CalibrationOptions) -> Result<CalibrationReport> {
    let rows = scan.rows;
    let (lo, hi) = widest_plateau(&rows, options.plateau_tolerance).ok_or_else(|| Error::Calibration {
        table: format_table(&rows),
    })?;
    let beta_star = (rows[lo].beta * rows[hi].beta).sqrt();
    let mut cfg = config.clone();
    cfg.beta = beta_star;
    let fit = static_decay(&cfg, scan.i_ref, options.duration, options.stride)?;
    Ok(CalibrationReport {
        beta_star,
        plateau_lo: rows[lo].beta,
        plateau_hi: rows[hi].beta,
        rate_at_beta_star: fit.rate,
        rows,
        cl_rate: scan.cl_rate,
        absorbed_flux_ratio: fit.absorbed_flux_ratio,
    })
}

pub(crate) fn widest_plateau(rows: &[CalibrationRow], tolerance: f64) -> Option<(usize, usize)> {
    let limit = (1.0 + tolerance).ln();
    let flat = |a: &CalibrationRow, b: &CalibrationRow| {
        if !(a.fitted_rate > 0.0 && b.fitted_rate > 0.0) {
            return false;
        }
        let decades = (b.beta / a.beta).log10();
        (b.fitted_rate / a.fitted_rate).ln().abs() / decades < limit
    };
    let mut best: Option<(usize, usize)> = None;
    let mut start = 0;
    for k in 0..rows.len() {
        let extends = k + 1 < rows.len() && flat(&rows[k], &rows[k + 1]);
        if !extends {
            if k > start {
                let width = (rows[k].beta / rows[start].beta).log10();
                let better = best.is_none_or(|(a, b)| width > (rows[b].beta / rows[a].beta).log10());
                if better {
                    best = Some((start, k));
                }
            }
            start = k + 1;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn config() -> JunctionConfig {
        JunctionConfig::with_bias(0.96).unwrap()
    }

    #[test]
    fn field_vanishes_up_to_turning_point() {
        let cfg = config();
        let grid = Grid::new(cfg.grid).unwrap();
        let field = build_tdip(&grid, 0.0, 0.96, &cfg).unwrap();
        let j = grid.index_at_or_below(field.phi_turn_used).unwrap();
        assert!(field.values[..=j].iter().all(|&v| v == 0.0));
        assert!(field.values[j + 1..].iter().all(|&v| v > 0.0 && v.is_finite()));
        assert!(field.values[j + 1..].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn field_follows_inverse_square_root() {
        let cfg = config();
        let grid = Grid::new(GridSpec {
            phi_lo: 0.0,
            phi_hi: 64.0,
            n_points: 1024,
        })
        .unwrap();
        let field = build_tdip(&grid, 0.0, 0.96, &cfg).unwrap();
        let phi0 = 0.96f64.asin();
        // nodes are at multiples of 1/16; pick φ′ with exact 1:4 ratio
        let delta = 2.0;
        let a = grid.index_at_or_below(phi0 + 2.0 * delta).unwrap();
        let shift = phi0 + 2.0 * delta - grid.phi()[a];
        let b = grid.index_at_or_below(phi0 + 8.0 * delta - shift + 1e-9).unwrap();
        let (pa, pb) = (grid.phi()[a] - phi0, grid.phi()[b] - phi0);
        let expected = (pb / pa).sqrt();
        assert!((field.values[a] / field.values[b] - expected).abs() < 1e-12);
        assert!((expected - 2.0).abs() < 0.02);
    }

    #[test]
    fn field_scales_with_inverse_plasma_frequency() {
        let cfg = config();
        let grid = Grid::new(cfg.grid).unwrap();
        let lo = build_tdip(&grid, 0.0, 0.90, &cfg).unwrap();
        let hi = build_tdip(&grid, 0.0, 0.96, &cfg).unwrap();
        let j = grid.len() - 10;
        let phi = grid.phi()[j];
        let ratio = hi.values[j] / lo.values[j];
        let wp = |i: f64| model::plasma_frequency(i, cfg.omega0).unwrap();
        let well = |i: f64| f64::asin(i);
        let expected = wp(0.90) / wp(0.96) * ((phi - well(0.90)) / (phi - well(0.96))).sqrt();
        assert!((ratio - expected).abs() < 1e-12);
        assert!(ratio > 1.0);
    }

    #[test]
    fn field_rebuild_is_bit_identical() {
        let cfg = config();
        let grid = Grid::new(cfg.grid).unwrap();
        assert_eq!(build_tdip(&grid, 3.0, 0.97, &cfg).unwrap(), build_tdip(&grid, 3.0, 0.97, &cfg).unwrap());
    }

    #[test]
    fn cutoff_moves_inward_along_ramp() {
        let cfg = config();
        let grid = Grid::new(cfg.grid).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let i = 0.90 + 0.0005 * k as f64;
            let field = build_tdip(&grid, 0.0, i, &cfg).unwrap();
            assert!(field.phi_turn_used <= prev);
            prev = field.phi_turn_used;
        }
    }

    #[test]
    fn short_grid_is_rejected() {
        let cfg = config();
        let grid = Grid::new(GridSpec {
            phi_lo: -2.0,
            phi_hi: 2.0,
            n_points: 256,
        })
        .unwrap();
        assert!(build_tdip(&grid, 0.0, 0.96, &cfg).is_err());
    }

    #[test]
    fn running_state_log_slope_is_gamma() {
        let p = RunningStateParams::new(3e-4, 0.0, 0.96, 0.0183).unwrap();
        let phi = p.phi0 + 4.0;
        let (t1, t2) = (5000.0, 6000.0);
        let a = running_state(phi, t1, &p).unwrap().norm_sqr();
        let b = running_state(phi, t2, &p).unwrap().norm_sqr();
        let slope = (b.ln() - a.ln()) / (t2 - t1);
        assert!((slope + p.gamma).abs() / p.gamma < 1e-6);
    }

    #[test]
    fn running_state_domain() {
        let p = RunningStateParams::new(3e-4, 0.0, 0.96, 0.0183).unwrap();
        assert!(running_state(p.phi0 - 0.1, 1e4, &p).is_err());
        assert!(running_state(p.phi0 + 10.0, 1.0, &p).is_err());
    }

    #[test]
    fn running_state_modulus_ignores_phases() {
        let mut p = RunningStateParams::new(3e-4, 0.0, 0.96, 0.0183).unwrap();
        let phi = p.phi0 + 3.0;
        let a = running_state(phi, 2000.0, &p).unwrap();
        p.omega_shift *= 3.7;
        let b = running_state(phi, 2000.0, &p).unwrap();
        assert!((a.norm() - b.norm()).abs() < 1e-15);
    }

    #[test]
    fn plateau_detection() {
        let row = |beta: f64, rate: f64| CalibrationRow {
            beta,
            fitted_rate: rate,
            cl_ratio: 1.0,
        };
        let rows = vec![
            row(1e-3, 1e-6),
            row(1e-2, 1e-4),
            row(1e-1, 1.0e-3),
            row(1e0, 1.05e-3),
            row(1e1, 1.1e-3),
            row(1e2, 1e-5),
        ];
        assert_eq!(widest_plateau(&rows, 0.2), Some((2, 4)));
        let rising: Vec<_> = (0..5).map(|k| row(10f64.powi(k), 10f64.powi(k))).collect();
        assert_eq!(widest_plateau(&rising, 0.2), None);
    }
}
