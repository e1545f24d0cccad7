#![allow(dead_code)]

use std::f64::consts::PI;

use jjtunnel::absorber::{self, RunningStateParams};
use jjtunnel::model::{self, JunctionConfig};
use jjtunnel::Grid;
use nalgebra::{DMatrix, SymmetricEigen};

/// Lowest eigenpair of the discretized static Hamiltonian restricted to the
/// grid nodes within `half_width` of the well bottom.
pub struct DenseGroundState {
    pub energy: f64,
    pub phi_mean: f64,
    pub nodes: usize,
}

/// Matrix elements of the periodic spectral kinetic operator,
/// `t(d) = (1/N) Σ_m cos(k_m d dφ) k_m²/(2M)`, summed mode by mode.
fn kinetic_band(n: usize, dphi: f64, mass: f64, width: usize) -> Vec<f64> {
    let length = n as f64 * dphi;
    (0..width)
        .map(|d| {
            let mut sum = 0.0;
            for m in 0..n {
                let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                let k = 2.0 * PI * signed / length;
                sum += (k * d as f64 * dphi).cos() * k * k / (2.0 * mass);
            }
            sum / n as f64
        })
        .collect()
}

pub fn dense_ground_state(config: &JunctionConfig, i: f64, half_width: f64) -> DenseGroundState {
    let grid = Grid::new(config.grid).unwrap();
    let (phi_min, _) = model::well_extrema(i).unwrap();
    let nodes: Vec<f64> = grid
        .phi()
        .iter()
        .copied()
        .filter(|p| (p - phi_min).abs() <= half_width)
        .collect();
    let m = nodes.len();
    let band = kinetic_band(grid.len(), grid.dphi(), config.mass(), m);
    let h = DMatrix::from_fn(m, m, |a, b| {
        let d = a.abs_diff(b);
        let mut v = band[d];
        if a == b {
            v += model::tilted_washboard(nodes[a], i);
        }
        v
    });
    let eig = SymmetricEigen::new(h);
    let (k, &energy) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let v = eig.eigenvectors.column(k);
    let weight: f64 = v.iter().map(|c| c * c).sum();
    let phi_mean = v.iter().zip(&nodes).map(|(c, p)| c * c * p).sum::<f64>() / weight;
    DenseGroundState {
        energy,
        phi_mean,
        nodes: m,
    }
}

/// Window-integrated running-state density divided by the closed-form
/// absorber profile over `φ′ ∈ [2, 20]`, for one Γ/ω_p. With
/// `absolute = true` the running coordinate is measured from φ = 0
/// instead of the well bottom.
pub fn collapse_ratios(gamma_over_omega_p: f64, absolute: bool) -> Vec<f64> {
    let i = 0.96;
    let omega0 = JunctionConfig::DEFAULT_OMEGA0;
    let omega_p = model::plasma_frequency(i, omega0).unwrap();
    let gamma = gamma_over_omega_p * omega_p;
    let mut params = RunningStateParams::new(gamma, 0.0, i, omega0).unwrap();
    if absolute {
        params.phi0 = 0.0;
    }
    let window = 60.0 / gamma;
    let t = window;
    (0..=36)
        .map(|k| {
            let shifted = 2.0 + 0.5 * k as f64;
            let phi = params.phi0 + shifted;
            let integrated = absorber::integrated_running_density(phi, t, window, &params).unwrap();
            integrated / absorber::collapsed_profile(shifted, omega_p)
        })
        .collect()
}

/// Largest relative deviation of `values` from their mean.
pub fn relative_spread(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max)
}
