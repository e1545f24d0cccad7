use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::well_extrema;

/// A uniform periodic phase grid `[phi_lo, phi_hi)` with `n_points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub const DEFAULT_POINTS: usize = 4096;
    /// Extent below the initial well bottom (radians).
    pub const DEFAULT_MARGIN_BELOW: f64 = 3.0;
    /// Extent above the initial well bottom (radians).
    pub const DEFAULT_MARGIN_ABOVE: f64 = 45.0;

    /// `[φ_min(I₀) − 3, φ_min(I₀) + 45]` with 4096 points.
    pub fn default_for_bias(i0: f64) -> Result<Self> {
        let (phi_min, _) = well_extrema(i0)?;
        Ok(GridSpec {
            phi_lo: phi_min - Self::DEFAULT_MARGIN_BELOW,
            phi_hi: phi_min + Self::DEFAULT_MARGIN_ABOVE,
            n_points: Self::DEFAULT_POINTS,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi_hi - self.phi_lo > 0.0) {
            return Err(Error::validation("grid.phi_hi", "phi_hi > phi_lo"));
        }
        if self.n_points < 256 || !self.n_points.is_power_of_two() {
            return Err(Error::validation(
                "grid.n_points",
                "a power of two ≥ 256",
            ));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.phi_hi - self.phi_lo
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n_points as f64
    }
}

/// Node coordinates and spectral wavenumbers of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    phi: Vec<f64>,
    wavenumbers: Vec<f64>,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_points;
        let dphi = spec.spacing();
        let phi = (0..n).map(|j| spec.phi_lo + j as f64 * dphi).collect();
        let dk = 2.0 * PI / spec.length();
        let wavenumbers = (0..n)
            .map(|j| {
                if j < n / 2 {
                    j as f64 * dk
                } else {
                    (j as f64 - n as f64) * dk
                }
            })
            .collect();
        Ok(Grid {
            spec,
            phi,
            wavenumbers,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn dphi(&self) -> f64 {
        self.spec.spacing()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Index of the last node at or below `phi`, if any.
    pub fn index_at_or_below(&self, phi: f64) -> Option<usize> {
        if phi < self.spec.phi_lo {
            return None;
        }
        let j = ((phi - self.spec.phi_lo) / self.dphi()).floor() as usize;
        Some(j.min(self.len() - 1))
    }
}
