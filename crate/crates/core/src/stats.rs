//! Summation, moments, autocorrelation and least-squares helpers.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanErr {
    pub mean: f64,
    pub err: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().copied().collect::<CompensatedSum>().value() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).collect::<CompensatedSum>().value() / (xs.len() - 1) as f64
}

/// Mean with the naive (independent samples) standard error.
pub fn mean_err(xs: &[f64]) -> MeanErr {
    MeanErr { mean: mean(xs), err: (variance(xs) / xs.len() as f64).sqrt() }
}

/// Integrated autocorrelation time with the self-consistent window rule:
/// the window `M` grows until `M >= c * tau(M)`. Returns `(tau, window)`;
/// `tau = 0.5` for an uncorrelated series and for a constant series.
pub fn integrated_autocorrelation(xs: &[f64], c: f64) -> (f64, usize) {
    let n = xs.len();
    if n < 4 {
        return (0.5, 0);
    }
    let m = mean(xs);
    let centered: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let c0: f64 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return (0.5, 0);
    }
    let mut tau = 0.5;
    for w in 1..n {
        let ct: f64 = centered[..n - w].iter().zip(&centered[w..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        tau += ct / c0;
        if w as f64 >= c * tau {
            return (tau.max(0.5), w);
        }
    }
    (tau.max(0.5), n - 1)
}

/// Mean with an error bar inflated by the integrated autocorrelation time.
pub fn mean_err_correlated(xs: &[f64]) -> (MeanErr, f64) {
    let (tau, _) = integrated_autocorrelation(xs, 5.0);
    let me = mean_err(xs);
    (MeanErr { mean: me.mean, err: me.err * (2.0 * tau).sqrt() }, tau)
}

/// Combines independent estimates by inverse-variance weighting.
pub fn combine(estimates: &[MeanErr]) -> MeanErr {
    if estimates.iter().any(|e| e.err <= 0.0 || !e.err.is_finite()) {
        let ms: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
        return mean_err(&ms);
    }
    let w: f64 = estimates.iter().map(|e| 1.0 / (e.err * e.err)).sum();
    let m: f64 = estimates.iter().map(|e| e.mean / (e.err * e.err)).sum::<f64>() / w;
    MeanErr { mean: m, err: (1.0 / w).sqrt() }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub slope_err: f64,
    pub intercept: f64,
}

/// Weighted least squares `y = a + b x` with weights `w_i`.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Option<LineFit> {
    if x.len() < 2 || x.len() != y.len() || x.len() != w.len() {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let xm = sx / sw;
    let ym = sy / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    Some(LineFit { slope, slope_err: (1.0 / sxx).sqrt(), intercept: ym - slope * xm })
}

/// Log–log fit of `y` against `x`, weighting each point by the inverse
/// variance of `log y` (`(y / err)^2`).
pub fn power_law_fit(x: &[f64], y: &[MeanErr]) -> Option<LineFit> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.mean.ln()).collect();
    let w: Vec<f64> = y
        .iter()
        .map(|v| if v.err > 0.0 && v.err.is_finite() { (v.mean / v.err).powi(2) } else { 1.0 })
        .collect();
    weighted_line_fit(&lx, &ly, &w)
}
