//! Closed-form junction physics in reduced units (ħ = 1, energies in E_J).
//!
//! The phase particle has mass `M = 1/ω₀²` and moves in the tilted washboard
//! `U₀(φ) = −(Iφ + cos φ)`, optionally modulated by a microwave term
//! `−ηφ sin(ω_mw t)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Bisection stops once the bracket is narrower than this (radians).
const ROOT_TOLERANCE: f64 = 1e-12;

/// Physical and numerical parameters of one junction simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionConfig {
    /// Junction frequency scale ω₀ (E_J/ħ).
    pub omega0: f64,
    /// Friction strength ζ (E_J).
    pub zeta: f64,
    /// Microwave amplitude η (dimensionless).
    pub eta: f64,
    /// Microwave angular frequency (E_J/ħ).
    pub omega_mw: f64,
    /// Absorber strength β with constant prefactors folded in (E_J).
    pub beta: f64,
    /// Initial bias I₀ = I_b/I_c.
    pub i0: f64,
    /// Bias ramp rate (per ħ/E_J).
    pub di_dt: f64,
    /// Quality factor ω_p·R·C used only by the Caldeira–Leggett rate.
    pub q_damp: f64,
    pub grid: GridSpec,
    /// Time step (ħ/E_J).
    pub dt: f64,
}

impl JunctionConfig {
    pub const DEFAULT_OMEGA0: f64 = 0.0183;
    pub const DEFAULT_ZETA: f64 = 8.4e-4;
    pub const DEFAULT_BETA: f64 = 1e-4;
    pub const DEFAULT_I0: f64 = 0.95;
    pub const DEFAULT_DI_DT: f64 = 2e-5;
    pub const DEFAULT_Q_DAMP: f64 = 1e4;
    pub const DEFAULT_DT: f64 = 0.1;

    /// Default parameters for a given starting bias; the grid is placed
    /// around the initial well.
    pub fn with_bias(i0: f64) -> Result<Self> {
        Ok(JunctionConfig {
            omega0: Self::DEFAULT_OMEGA0,
            zeta: Self::DEFAULT_ZETA,
            eta: 0.0,
            omega_mw: 0.0,
            beta: Self::DEFAULT_BETA,
            i0,
            di_dt: Self::DEFAULT_DI_DT,
            q_damp: Self::DEFAULT_Q_DAMP,
            grid: GridSpec::default_for_bias(i0)?,
            dt: Self::DEFAULT_DT,
        })
    }

    /// Phase-particle mass M = E_J/ω₀² (reduced units).
    pub fn mass(&self) -> f64 {
        1.0 / (self.omega0 * self.omega0)
    }

    /// Checks every invariant of an experiment configuration.
    pub fn validate(&self) -> Result<()> {
        self.validate_dynamics()?;
        if !(self.beta > 0.0) {
            return Err(Error::validation("beta", "beta > 0"));
        }
        Ok(())
    }

    /// Like [`JunctionConfig::validate`] but also admits `beta = 0`, which
    /// switches the absorber off.
    pub fn validate_dynamics(&self) -> Result<()> {
        let checks: [(&str, &str, bool); 7] = [
            ("I0", "I0 ∈ (0,1)", self.i0 > 0.0 && self.i0 < 1.0),
            ("omega0", "omega0 > 0", self.omega0 > 0.0),
            ("zeta", "zeta ≥ 0", self.zeta >= 0.0),
            ("eta", "eta ≥ 0", self.eta >= 0.0),
            ("beta", "beta ≥ 0", self.beta >= 0.0),
            ("dt", "dt > 0", self.dt > 0.0),
            ("q_damp", "q_damp > 0", self.q_damp > 0.0),
        ];
        for (key, constraint, ok) in checks {
            if !ok {
                return Err(Error::validation(key, constraint));
            }
        }
        if !(self.omega_mw.is_finite() && self.di_dt.is_finite()) {
            return Err(Error::validation("omega_mw/dIdt", "finite values"));
        }
        self.grid.validate()
    }
}

/// Stationary-point geometry of the washboard at a fixed bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierGeometry {
    pub phi_min: f64,
    pub phi_top: f64,
    pub phi_turn: f64,
    pub delta_u: f64,
    pub valid_i: f64,
}

impl BarrierGeometry {
    /// Geometry at bias `i` with the turning point taken at the harmonic
    /// ground-state energy `U(φ_min) + ω_p/2`.
    pub fn at(i: f64, omega0: f64) -> Result<Self> {
        let (phi_min, phi_top) = well_extrema(i)?;
        let omega_p = plasma_frequency(i, omega0)?;
        let energy = tilted_washboard(phi_min, i) + 0.5 * omega_p;
        let phi_turn = outer_turning_point(i, energy)?;
        Ok(BarrierGeometry {
            phi_min,
            phi_top,
            phi_turn,
            delta_u: barrier_height(i)?,
            valid_i: i,
        })
    }
}

/// `U₀(φ) = −(Iφ + cos φ)`.
pub fn tilted_washboard(phi: f64, i: f64) -> f64 {
    -(i * phi + phi.cos())
}

/// dU₀/dφ.
pub fn washboard_slope(phi: f64, i: f64) -> f64 {
    phi.sin() - i
}

/// `U_mw(φ, t) = −ηφ sin(ω_mw t)`.
pub fn microwave_term(phi: f64, t: f64, eta: f64, omega_mw: f64) -> f64 {
    -eta * phi * (omega_mw * t).sin()
}

/// Full potential `U₀ + U_mw` for the bias `i` in effect at time `t`.
pub fn total_potential(phi: f64, t: f64, i: f64, config: &JunctionConfig) -> f64 {
    tilted_washboard(phi, i) + microwave_term(phi, t, config.eta, config.omega_mw)
}

/// `ω_p = ω₀(1 − I²)^{1/4}`.
pub fn plasma_frequency(i: f64, omega0: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&i) {
        return Err(Error::Domain(format!(
            "plasma frequency needs 0 ≤ I < 1, got {i}"
        )));
    }
    Ok(omega0 * (1.0 - i * i).powf(0.25))
}

/// `ΔU = 2(√(1 − I²) − I·acos I)`, the depth of the well at bias `i`.
pub fn barrier_height(i: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&i) {
        return Err(Error::Domain(format!(
            "barrier height needs 0 ≤ I ≤ 1, got {i}"
        )));
    }
    Ok(2.0 * ((1.0 - i * i).sqrt() - i * i.acos()))
}

/// Well bottom and barrier top of the k = 0 well.
pub fn well_extrema(i: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&i) {
        return Err(Error::Domain(format!(
            "the washboard has no extrema for I = {i}"
        )));
    }
    let a = i.asin();
    Ok((a, PI - a))
}

/// Outer classical turning point: the root of `U₀(φ) = energy` beyond the
/// barrier top, found by bisection.
pub fn outer_turning_point(i: f64, energy: f64) -> Result<f64> {
    let (phi_min, phi_top) = well_extrema(i)?;
    let u_min = tilted_washboard(phi_min, i);
    let u_top = tilted_washboard(phi_top, i);
    if !(energy > u_min && energy < u_top) {
        return Err(Error::NoBarrier {
            bias: i,
            energy,
            u_min,
            u_top,
        });
    }
    // U is strictly decreasing on (φ_top, φ_min + 2π) and drops below U(φ_min)
    // at the right end, so the bracket holds exactly one root.
    let (mut lo, mut hi) = (phi_top, phi_min + 2.0 * PI);
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tilted_washboard(mid, i) > energy {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ω₀₁ = ω_p(1 − 5ω_p/(36ΔU))`, the 0→1 transition frequency.
pub fn resonance_frequency(i: f64, omega0: f64) -> Result<f64> {
    if !(i > 0.0 && i < 1.0) {
        return Err(Error::Domain(format!(
            "resonance frequency needs 0 < I < 1, got {i}"
        )));
    }
    let omega_p = plasma_frequency(i, omega0)?;
    let delta_u = barrier_height(i)?;
    if delta_u <= 0.0 {
        return Err(Error::Domain(format!("barrier vanished at I = {i}")));
    }
    Ok(omega_p * (1.0 - 5.0 * omega_p / (36.0 * delta_u)))
}

/// Bias at which `ω₀₁(I)` equals `omega`, searched on `[lo, hi]`.
///
/// ω₀₁ decreases monotonically in I near the top of the bias range, so
/// the bracket must straddle the crossing.
pub fn resonance_bias(omega: f64, omega0: f64, lo: f64, hi: f64) -> Result<f64> {
    let f = |i: f64| resonance_frequency(i, omega0).map(|w| w - omega);
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa.signum() == fb.signum() {
        return Err(Error::Domain(format!(
            "ω = {omega} is not resonant for I in [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid)?.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Caldeira–Leggett zero-temperature escape rate at bias `i`.
pub fn caldeira_leggett_rate(i: f64, config: &JunctionConfig) -> Result<f64> {
    cl_rate(i, config.omega0, config.q_damp)
}

pub(crate) fn cl_rate(i: f64, omega0: f64, q_damp: f64) -> Result<f64> {
    if !(i > 0.0 && i < 1.0) {
        return Err(Error::Domain(format!(
            "Caldeira–Leggett rate needs 0 < I < 1, got {i}"
        )));
    }
    let omega_p = plasma_frequency(i, omega0)?;
    let x = 7.2 * barrier_height(i)? / omega_p;
    let prefactor = omega_p / (2.0 * PI) * (120.0 * PI * x).sqrt();
    Ok(prefactor * (-x * (1.0 + 0.87 / q_damp)).exp())
}

/// The WKB exponent `7.2ΔU/ω_p` of the Caldeira–Leggett rate.
pub fn cl_exponent(i: f64, omega0: f64) -> Result<f64> {
    Ok(7.2 * barrier_height(i)? / plasma_frequency(i, omega0)?)
}

/// Where the absorber starts and how it is scaled at an instantaneous bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffGeometry {
    /// Well bottom, the reference of the absorber's square-root coordinate.
    pub phi_well: f64,
    pub phi_turn: f64,
    pub omega_p: f64,
    /// True when the default energy is at or above the barrier top.
    pub over_barrier: bool,
}

/// Bias above which the absorber freezes its plasma frequency.
pub const OVER_BARRIER_BIAS_CAP: f64 = 0.999;

/// Absorber geometry at the instantaneous effective bias.
///
/// Below the barrier top this is the ordinary turning point. When the
/// ground-state estimate reaches the barrier top the cutoff collapses onto
/// φ_top; once the well disappears altogether (I ≥ 1) it sits at the
/// inflection point π/2 and ω_p is held at its value for
/// [`OVER_BARRIER_BIAS_CAP`].
pub fn cutoff_geometry(i: f64, omega0: f64) -> Result<CutoffGeometry> {
    if i < 0.0 || !i.is_finite() {
        return Err(Error::Domain(format!(
            "effective bias {i} is outside the supported range I ≥ 0"
        )));
    }
    let omega_p = plasma_frequency(i.min(OVER_BARRIER_BIAS_CAP), omega0)?;
    if i >= 1.0 {
        return Ok(CutoffGeometry {
            phi_well: FRAC_PI_2,
            phi_turn: FRAC_PI_2,
            omega_p,
            over_barrier: true,
        });
    }
    let (phi_min, phi_top) = well_extrema(i)?;
    let energy = tilted_washboard(phi_min, i) + 0.5 * plasma_frequency(i, omega0)?;
    if energy >= tilted_washboard(phi_top, i) {
        return Ok(CutoffGeometry {
            phi_well: phi_min,
            phi_turn: phi_top,
            omega_p,
            over_barrier: true,
        });
    }
    Ok(CutoffGeometry {
        phi_well: phi_min,
        phi_turn: outer_turning_point(i, energy)?,
        omega_p,
        over_barrier: false,
    })
}
