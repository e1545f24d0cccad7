use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Number of nodes at each grid edge that must stay empty.
pub const EDGE_POINTS: usize = 5;

/// Complex amplitudes on a phase grid at time `t`.
///
/// `norm2` is the Riemann sum `Σ|ψ_j|²·dφ`, kept in sync by every
/// operation that changes the amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub amplitudes: Vec<Complex64>,
    pub t: f64,
    pub norm2: f64,
    dphi: f64,
}

impl Wavefunction {
    pub fn new(amplitudes: Vec<Complex64>, dphi: f64, t: f64) -> Self {
        let norm2 = density_sum(&amplitudes) * dphi;
        Wavefunction {
            amplitudes,
            t,
            norm2,
            dphi,
        }
    }

    /// Gaussian packet `exp(−(φ−center)²/(4σ²) + i k φ)`, normalized.
    pub fn gaussian(grid: &Grid, center: f64, sigma: f64, wavenumber: f64) -> Self {
        let amplitudes = grid
            .phi()
            .iter()
            .map(|&phi| {
                let x = phi - center;
                Complex64::from_polar((-x * x / (4.0 * sigma * sigma)).exp(), wavenumber * phi)
            })
            .collect();
        let mut psi = Wavefunction::new(amplitudes, grid.dphi(), 0.0);
        psi.normalize();
        psi
    }

    pub fn dphi(&self) -> f64 {
        self.dphi
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Recomputes `norm2` from the amplitudes.
    pub fn refresh_norm(&mut self) -> f64 {
        self.norm2 = density_sum(&self.amplitudes) * self.dphi;
        self.norm2
    }

    /// Rescales to unit norm. A zero state is left untouched.
    pub fn normalize(&mut self) {
        let n = self.refresh_norm();
        if n > 0.0 {
            self.scale(1.0 / n.sqrt());
            self.norm2 = 1.0;
        }
    }

    /// Multiplies every amplitude by `factor` and updates the norm.
    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
        self.norm2 *= factor * factor;
    }

    /// Probability `Σ|ψ|²dφ` held in the outermost nodes on both sides.
    pub fn edge_norm(&self) -> f64 {
        let n = self.amplitudes.len();
        let k = EDGE_POINTS.min(n / 2);
        let left = density_sum(&self.amplitudes[..k]);
        let right = density_sum(&self.amplitudes[n - k..]);
        (left + right) * self.dphi
    }
}

fn density_sum(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

/// `∫φ|ψ|²dφ / ‖ψ‖²`, the mean phase of the conditioned state.
pub fn expectation_phi(psi: &Wavefunction, grid: &Grid) -> Result<f64> {
    let mut weight = 0.0;
    let mut first = 0.0;
    for (a, &phi) in psi.amplitudes.iter().zip(grid.phi()) {
        let p = a.norm_sqr();
        weight += p;
        first += p * phi;
    }
    if weight <= 0.0 {
        return Err(Error::Domain("⟨φ⟩ is undefined for a zero state".into()));
    }
    Ok(first / weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn grid() -> Grid {
        Grid::new(GridSpec {
            phi_lo: -10.0,
            phi_hi: 10.0,
            n_points: 512,
        })
        .unwrap()
    }

    #[test]
    fn symmetric_packet_mean() {
        let g = grid();
        let psi = Wavefunction::gaussian(&g, g.phi()[300], 0.7, 0.0);
        let mean = expectation_phi(&psi, &g).unwrap();
        assert!((mean - g.phi()[300]).abs() < 1e-12);
        assert!((psi.norm2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn delta_packet_mean() {
        let g = grid();
        let mut amps = vec![Complex64::new(0.0, 0.0); g.len()];
        amps[123] = Complex64::new(0.0, 2.0);
        let psi = Wavefunction::new(amps, g.dphi(), 0.0);
        let mean = expectation_phi(&psi, &g).unwrap();
        assert!((mean - g.phi()[123]).abs() < g.dphi());
    }

    #[test]
    fn mean_is_scale_invariant() {
        let g = grid();
        let mut psi = Wavefunction::gaussian(&g, 1.3, 0.4, 2.0);
        let a = expectation_phi(&psi, &g).unwrap();
        psi.scale(1e-3);
        let b = expectation_phi(&psi, &g).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn zero_state_has_no_mean() {
        let g = grid();
        let psi = Wavefunction::new(vec![Complex64::new(0.0, 0.0); g.len()], g.dphi(), 0.0);
        assert!(expectation_phi(&psi, &g).is_err());
    }

    #[test]
    fn edge_norm_of_centered_packet() {
        let g = grid();
        let psi = Wavefunction::gaussian(&g, 0.0, 0.5, 0.0);
        assert!(psi.edge_norm() < 1e-30);
    }
}
