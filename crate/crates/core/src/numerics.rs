//! Small numerical helpers shared by the analysis modules.

const MAX_DEPTH: u32 = 48;

/// Adaptive trapezoid quadrature of `f` over `[a, b]`.
///
/// Each panel is bisected until the trapezoid estimates on the panel and on
/// its halves agree to within the panel's share of `rel_tol · |I|`, where
/// `I` is a coarse estimate of the whole integral.
pub fn adaptive_trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    // Coarse 16-panel estimate fixes the absolute scale of the tolerance.
    let n = 16;
    let h = (b - a) / n as f64;
    let mut coarse = 0.5 * (fa + fb);
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push((a, fa));
    for k in 1..n {
        let x = a + k as f64 * h;
        let fx = f(x);
        coarse += fx;
        nodes.push((x, fx));
    }
    nodes.push((b, fb));
    coarse *= h;
    let scale = coarse.abs().max(f64::MIN_POSITIVE);
    let tol = rel_tol * scale;
    let mut total = 0.0;
    for w in nodes.windows(2) {
        let (x0, f0) = w[0];
        let (x1, f1) = w[1];
        total += refine(&f, x0, f0, x1, f1, tol / n as f64, 0);
    }
    total
}

fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = 0.5 * (b - a) * (fa + fb);
    let halves = 0.25 * (b - a) * (fa + 2.0 * fm + fb);
    // Trapezoid error of the halves is a third of their difference to `whole`.
    if (halves - whole).abs() <= 3.0 * tol || depth >= MAX_DEPTH {
        return halves;
    }
    refine(f, a, fa, m, fm, 0.5 * tol, depth + 1) + refine(f, m, fm, b, fb, 0.5 * tol, depth + 1)
}

/// Ordinary least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_exponential() {
        let v = adaptive_trapezoid(|x| (-x).exp(), 0.0, 5.0, 1e-10);
        let exact = 1.0 - (-5.0f64).exp();
        assert!(((v - exact) / exact).abs() < 1e-9);
    }

    #[test]
    fn trapezoid_handles_sharp_peak() {
        let s = 1e-3;
        let v = adaptive_trapezoid(|x: f64| (-(x * x) / (2.0 * s * s)).exp(), -1.0, 1.0, 1e-9);
        let exact = s * (2.0 * std::f64::consts::PI).sqrt();
        assert!(((v - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14);
        assert!((fit.intercept - 3.0).abs() < 1e-13);
        assert!((fit.r_squared - 1.0).abs() < 1e-14);
    }
}
