//! Switching rates and distributions derived from norm-loss trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, JunctionConfig};
use crate::numerics::adaptive_trapezoid;
use crate::propagator::TrajectoryRecord;

/// Tolerance on `total_mass` exceeding one.
pub const MASS_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    /// Density over the bias current `I`.
    Current,
    /// Density over time `t`.
    Time,
}

/// A switching density sampled on an increasing axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingDistribution {
    pub axis: Vec<f64>,
    pub density: Vec<f64>,
    pub total_mass: f64,
    pub kind: DistributionKind,
}

/// Compact description written next to a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub kind: DistributionKind,
    pub total_mass: f64,
    pub peak: Option<f64>,
    pub fwhm: Option<f64>,
}

/// A local maximum of a density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    /// Parabola-refined location.
    pub location: f64,
    pub height: f64,
    pub prominence: f64,
}

impl SwitchingDistribution {
    fn checked(axis: Vec<f64>, density: Vec<f64>, total_mass: f64, kind: DistributionKind) -> Result<Self> {
        if axis.len() != density.len() {
            return Err(Error::Domain("axis and density lengths differ".into()));
        }
        if axis.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("distribution axis must be strictly increasing".into()));
        }
        if density.iter().any(|&d| !(d >= 0.0)) {
            return Err(Error::Domain("negative or undefined switching density".into()));
        }
        if total_mass > 1.0 + MASS_SLACK {
            return Err(Error::Domain(format!("switching mass {total_mass} exceeds one")));
        }
        Ok(SwitchingDistribution {
            axis,
            density,
            total_mass,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Location of the global maximum, refined by a parabola through the
    /// neighbouring samples.
    pub fn peak(&self) -> Option<f64> {
        let k = argmax(&self.density)?;
        if self.density[k] <= 0.0 {
            return None;
        }
        Some(refine_peak(&self.axis, &self.density, k))
    }

    /// Full width at half maximum around the global maximum, with linear
    /// interpolation of the crossings. `None` when a side never drops
    /// below half height.
    pub fn fwhm(&self) -> Option<f64> {
        let k = argmax(&self.density)?;
        let half = 0.5 * self.density[k];
        if half <= 0.0 {
            return None;
        }
        let (x, y) = (&self.axis, &self.density);
        let mut left = None;
        for j in (0..k).rev() {
            if y[j] <= half {
                left = Some(x[j] + (half - y[j]) / (y[j + 1] - y[j]) * (x[j + 1] - x[j]));
                break;
            }
        }
        let mut right = None;
        for j in k + 1..y.len() {
            if y[j] <= half {
                right = Some(x[j - 1] + (y[j - 1] - half) / (y[j - 1] - y[j]) * (x[j] - x[j - 1]));
                break;
            }
        }
        Some(right? - left?)
    }

    /// Local maxima whose prominence is at least `min_fraction` of the
    /// global maximum, highest first.
    pub fn peaks(&self, min_fraction: f64) -> Vec<Peak> {
        let y = &self.density;
        let top = y.iter().cloned().fold(0.0, f64::max);
        if top <= 0.0 {
            return Vec::new();
        }
        let mut found = Vec::new();
        for k in 0..y.len() {
            let rises = k == 0 || y[k] > y[k - 1];
            let holds = k + 1 == y.len() || y[k] >= y[k + 1];
            if !(rises && holds) || y[k] <= 0.0 {
                continue;
            }
            let prominence = prominence(y, k);
            if prominence >= min_fraction * top {
                found.push(Peak {
                    index: k,
                    location: refine_peak(&self.axis, y, k),
                    height: y[k],
                    prominence,
                });
            }
        }
        found.sort_by(|a, b| b.height.total_cmp(&a.height));
        found
    }

    /// Mass accumulated up to and including `x` on the axis.
    pub fn cumulative_mass(&self, x: f64) -> f64 {
        let widths = cell_widths(&self.axis);
        let mut mass = 0.0;
        for ((&a, &d), &w) in self.axis.iter().zip(&self.density).zip(&widths) {
            let lo = a - 0.5 * w;
            let hi = a + 0.5 * w;
            if x >= hi {
                mass += d * w;
            } else if x > lo {
                mass += d * (x - lo);
            }
        }
        mass
    }

    pub fn summary(&self) -> DistributionSummary {
        DistributionSummary {
            kind: self.kind,
            total_mass: self.total_mass,
            peak: self.peak(),
            fwhm: self.fwhm(),
        }
    }

    /// `axis,density` CSV with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,density\n");
        for (a, d) in self.axis.iter().zip(&self.density) {
            out.push_str(&format!("{a:.16e},{d:.16e}\n"));
        }
        out
    }
}

fn argmax(y: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, v) in y.iter().enumerate() {
        if best.is_none_or(|b| *v > y[b]) {
            best = Some(k);
        }
    }
    best
}

fn refine_peak(x: &[f64], y: &[f64], k: usize) -> f64 {
    if k == 0 || k + 1 >= y.len() {
        return x[k];
    }
    let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
    let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        return x1;
    }
    (x1 - 0.5 * num / den).clamp(x0, x2)
}

fn prominence(y: &[f64], k: usize) -> f64 {
    let mut left_min = y[k];
    let mut left_bounded = false;
    for j in (0..k).rev() {
        if y[j] > y[k] {
            left_bounded = true;
            break;
        }
        left_min = left_min.min(y[j]);
    }
    let mut right_min = y[k];
    let mut right_bounded = false;
    for &v in &y[k + 1..] {
        if v > y[k] {
            right_bounded = true;
            break;
        }
        right_min = right_min.min(v);
    }
    let base = match (left_bounded, right_bounded) {
        (true, true) | (false, false) => left_min.max(right_min),
        (true, false) if k + 1 == y.len() => left_min,
        (false, true) if k == 0 => right_min,
        _ => left_min.max(right_min),
    };
    y[k] - base
}

/// Width of the cell around each axis node, halfway to its neighbours.
fn cell_widths(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    (0..n)
        .map(|k| match n {
            0 => 0.0,
            1 => 0.0,
            _ if k == 0 => axis[1] - axis[0],
            _ if k == n - 1 => axis[n - 1] - axis[n - 2],
            _ => 0.5 * (axis[k + 1] - axis[k - 1]),
        })
        .collect()
}

/// Instantaneous decay rate `γ_t = −d ln‖ψ‖²/dt` at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    pub t: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// Centered log differences of the sampled norm, one-sided at both ends.
/// The series stops at the last sample with positive norm.
pub fn instantaneous_rate(record: &TrajectoryRecord) -> RateSeries {
    let usable = record.samples.iter().take_while(|s| s.norm2 > 0.0).count();
    let samples = &record.samples[..usable];
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let logs: Vec<f64> = samples.iter().map(|s| s.norm2.ln()).collect();
    let n = t.len();
    let gamma = (0..n)
        .map(|k| {
            if n < 2 {
                return 0.0;
            }
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            -(logs[b] - logs[a]) / (t[b] - t[a])
        })
        .collect();
    RateSeries { t, gamma }
}

/// Spreads interval masses `[lo, hi) → mass` uniformly over their extent
/// and collects them into bins of `width` starting at `origin`.
fn rebin(intervals: &[(f64, f64, f64)], origin: f64, width: f64, end: f64) -> (Vec<f64>, Vec<f64>) {
    let bins = (((end - origin) / width) - 1e-9).ceil().max(1.0) as usize;
    let mut mass = vec![0.0; bins];
    for &(lo, hi, m) in intervals {
        if m == 0.0 {
            continue;
        }
        if hi <= lo {
            let k = (((lo - origin) / width).floor() as usize).min(bins - 1);
            mass[k] += m;
            continue;
        }
        let first = (((lo - origin) / width).floor().max(0.0) as usize).min(bins - 1);
        let last = ((((hi - origin) / width).ceil() as usize).max(first + 1)).min(bins);
        for (k, slot) in mass.iter_mut().enumerate().take(last).skip(first) {
            let a = origin + k as f64 * width;
            let b = a + width;
            let overlap = (hi.min(b) - lo.max(a)).max(0.0);
            *slot += m * overlap / (hi - lo);
        }
    }
    let axis = (0..bins).map(|k| origin + (k as f64 + 0.5) * width).collect();
    let density = mass.iter().map(|m| m / width).collect();
    (axis, density)
}

/// `P(I) = −(d‖ψ‖²/dt)/(dI/dt)` from the tunnel losses of a ramped run,
/// on a uniform `I` axis whose spacing is one output stride of bias.
pub fn switching_distribution(record: &TrajectoryRecord, di_dt: f64) -> Result<SwitchingDistribution> {
    if !(di_dt > 0.0) {
        return Err(Error::validation("dIdt", "dIdt > 0"));
    }
    let s = &record.samples;
    if s.len() < 2 {
        return Err(Error::Domain("a distribution needs at least two samples".into()));
    }
    if s.windows(2).any(|w| !(w[1].bias > w[0].bias)) {
        return Err(Error::Domain(
            "bias schedule is not monotone; use the time-resolved distribution".into(),
        ));
    }
    let origin = s[0].bias;
    let intervals: Vec<(f64, f64, f64)> = s
        .windows(2)
        .map(|w| {
            let lo = origin + di_dt * (w[0].t - s[0].t);
            let hi = origin + di_dt * (w[1].t - s[0].t);
            (lo, hi, w[1].tunnel_loss)
        })
        .collect();
    let width = di_dt * record.dt * record.stride as f64;
    let end = intervals.last().map_or(origin, |i| i.1);
    let (axis, density) = rebin(&intervals, origin, width, end);
    SwitchingDistribution::checked(axis, density, record.total_tunnel_loss(), DistributionKind::Current)
}

/// Switching density over time from the tunnel losses of any run.
pub fn time_resolved_distribution(record: &TrajectoryRecord) -> Result<SwitchingDistribution> {
    let s = &record.samples;
    if s.len() < 2 {
        return Err(Error::Domain("a distribution needs at least two samples".into()));
    }
    let intervals: Vec<(f64, f64, f64)> = s.windows(2).map(|w| (w[0].t, w[1].t, w[1].tunnel_loss)).collect();
    let width = record.dt * record.stride as f64;
    let (axis, density) = rebin(&intervals, s[0].t, width, s[s.len() - 1].t);
    SwitchingDistribution::checked(axis, density, record.total_tunnel_loss(), DistributionKind::Time)
}

/// Quasi-static distribution `P(I) = γ(I)/r · exp(−∫_{I₀}^{I} γ/r dI′)` for an
/// arbitrary rate function, with `I₀` the first axis point.
pub fn rate_distribution<F>(axis: &[f64], di_dt: f64, rate: F) -> Result<SwitchingDistribution>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(di_dt > 0.0) {
        return Err(Error::validation("dIdt", "dIdt > 0"));
    }
    if axis.is_empty() {
        return Err(Error::Domain("empty current axis".into()));
    }
    // Errors inside the quadrature are surfaced after it returns.
    let failure = std::cell::RefCell::new(None);
    let integrand = |i: f64| match rate(i) {
        Ok(g) => g / di_dt,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let mut exponent = 0.0;
    let mut density = Vec::with_capacity(axis.len());
    for k in 0..axis.len() {
        if k > 0 {
            exponent += adaptive_trapezoid(integrand, axis[k - 1], axis[k], 1e-8);
        }
        density.push(integrand(axis[k]) * (-exponent).exp());
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let total = -(-exponent).exp_m1();
    SwitchingDistribution::checked(axis.to_vec(), density, total, DistributionKind::Current)
}

/// Quasi-static distribution built from the Caldeira–Leggett rate.
pub fn cl_distribution(axis: &[f64], di_dt: f64, config: &JunctionConfig) -> Result<SwitchingDistribution> {
    if axis.iter().any(|&i| !(i > 0.0 && i < 1.0)) {
        return Err(Error::validation("I_axis", "all I ∈ (0,1)"));
    }
    rate_distribution(axis, di_dt, |i| model::caldeira_leggett_rate(i, config))
}

/// Shape comparison of two distributions of the same kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonMetrics {
    pub peak_location_a: f64,
    pub peak_location_b: f64,
    pub peak_shift: f64,
    /// `∫|p_a − p_b|` of the densities normalized on the common axis.
    pub l1_distance: f64,
    pub width_a: Option<f64>,
    pub width_b: Option<f64>,
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    if at <= x[0] {
        return y[0];
    }
    if at >= x[x.len() - 1] {
        return y[y.len() - 1];
    }
    let j = x.partition_point(|&v| v <= at) - 1;
    let w = (at - x[j]) / (x[j + 1] - x[j]);
    y[j] + w * (y[j + 1] - y[j])
}

fn min_spacing(axis: &[f64]) -> f64 {
    axis.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Peak locations, widths and the L1 distance of two distributions
/// resampled onto the finer spacing over their common support.
pub fn compare(a: &SwitchingDistribution, b: &SwitchingDistribution) -> Result<ComparisonMetrics> {
    if a.kind != b.kind {
        return Err(Error::Domain("cannot compare distributions of different kinds".into()));
    }
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Domain("comparison needs at least two points per distribution".into()));
    }
    let lo = a.axis[0].max(b.axis[0]);
    let hi = a.axis[a.len() - 1].min(b.axis[b.len() - 1]);
    if !(hi > lo) {
        return Err(Error::Domain("distributions have no overlapping support".into()));
    }
    let h = min_spacing(&a.axis).min(min_spacing(&b.axis));
    let n = ((hi - lo) / h).ceil().max(1.0) as usize;
    let step = (hi - lo) / n as f64;
    let common: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    let resample = |d: &SwitchingDistribution| -> Vec<f64> {
        let ys: Vec<f64> = common.iter().map(|&x| interpolate(&d.axis, &d.density, x)).collect();
        let mass = trapezoid(&ys, step);
        if mass > 0.0 {
            ys.iter().map(|v| v / mass).collect()
        } else {
            ys
        }
    };
    let pa = resample(a);
    let pb = resample(b);
    let diff: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).collect();
    let l1 = trapezoid(&diff, step).clamp(0.0, 2.0);
    let peak_a = a.peak().ok_or_else(|| Error::Domain("first distribution is identically zero".into()))?;
    let peak_b = b.peak().ok_or_else(|| Error::Domain("second distribution is identically zero".into()))?;
    Ok(ComparisonMetrics {
        peak_location_a: peak_a,
        peak_location_b: peak_b,
        peak_shift: peak_b - peak_a,
        l1_distance: l1,
        width_a: a.fwhm(),
        width_b: b.fwhm(),
    })
}

fn trapezoid(y: &[f64], h: f64) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    h * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[y.len() - 1]))
}
