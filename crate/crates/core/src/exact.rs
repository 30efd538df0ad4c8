//! Exhaustive enumeration over all `(2d)^N` walks of length `N`.
//!
//! Every path has probability `(2d)^{-N}` under the simple random walk and
//! Gibbs weight `p^{|range|}` under the polymer measure.

use serde::{Deserialize, Serialize};

use crate::env::ModelParams;
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::stats::CompensatedSum;
use crate::walk::WalkPath;

pub const DEFAULT_PATH_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub d: usize,
    pub p: f64,
    pub n: usize,
    pub value: f64,
    pub paths_enumerated: u64,
}

impl ExactResult {
    pub const CSV_HEADER: &'static str = "d,p,N,value,paths_enumerated";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{:.17e},{}", self.d, self.p, self.n, self.value, self.paths_enumerated)
    }
}

/// Number of paths, or `BudgetExceeded`.
pub fn path_count(d: usize, n: usize, budget: u64) -> Result<u64> {
    let total = ((2 * d) as f64).powi(n as i32);
    if total > budget as f64 {
        return Err(Error::BudgetExceeded { paths: total, budget });
    }
    Ok((2 * d as u64).pow(n as u32))
}

/// Visits every path of length `n` from the origin in lexicographic order
/// of its step codes. The path is extended and shrunk in place.
pub fn for_each_path(d: usize, n: usize, budget: u64, mut visit: impl FnMut(&WalkPath)) -> Result<u64> {
    let count = path_count(d, n, budget)?;
    let mut w = WalkPath::new(Point::origin(d)?);
    fn rec(w: &mut WalkPath, dirs: u8, left: usize, visit: &mut dyn FnMut(&WalkPath)) {
        if left == 0 {
            visit(w);
            return;
        }
        for s in 0..dirs {
            w.push(s);
            rec(w, dirs, left - 1, visit);
            w.pop();
        }
    }
    rec(&mut w, 2 * d as u8, n, &mut visit);
    Ok(count)
}

/// `hist[k]` = number of length-`n` paths with range size `k`.
pub fn range_size_histogram(d: usize, n: usize, budget: u64) -> Result<Vec<u64>> {
    let mut hist = vec![0u64; n + 2];
    for_each_path(d, n, budget, |w| hist[w.range_size()] += 1)?;
    Ok(hist)
}

/// `Z_N = E[p^{|S_[0,N]|}]`.
pub fn exact_partition_function(params: &ModelParams) -> Result<ExactResult> {
    exact_partition_function_with_budget(params, DEFAULT_PATH_BUDGET)
}

pub fn exact_partition_function_with_budget(params: &ModelParams, budget: u64) -> Result<ExactResult> {
    let hist = range_size_histogram(params.d, params.n, budget)?;
    let paths: u64 = hist.iter().sum();
    let scale = ((2 * params.d) as f64).powi(-(params.n as i32));
    let z: CompensatedSum = hist
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 * scale * params.p.powi(k as i32))
        .collect();
    Ok(ExactResult { d: params.d, p: params.p, n: params.n, value: z.value(), paths_enumerated: paths })
}

/// `E_{μ_N}[f(S)]`.
pub fn exact_mu_expectation(params: &ModelParams, f: impl FnMut(&WalkPath) -> f64) -> Result<ExactResult> {
    exact_mu_expectation_with_budget(params, DEFAULT_PATH_BUDGET, f)
}

pub fn exact_mu_expectation_with_budget(
    params: &ModelParams,
    budget: u64,
    mut f: impl FnMut(&WalkPath) -> f64,
) -> Result<ExactResult> {
    // weights are p^{|range|}; the (2d)^{-N} factor cancels in the ratio
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    let paths = for_each_path(params.d, params.n, budget, |w| {
        let weight = params.p.powi(w.range_size() as i32);
        num.add(weight * f(w));
        den.add(weight);
    })?;
    Ok(ExactResult { d: params.d, p: params.p, n: params.n, value: num.value() / den.value(), paths_enumerated: paths })
}

/// Index of a path in enumeration order: its step codes read as base-`2d`
/// digits, first step most significant.
pub fn path_index(steps: &[u8], d: usize) -> usize {
    steps.iter().fold(0usize, |acc, &s| acc * 2 * d + s as usize)
}

/// The full μ_N path law, indexed by [`path_index`].
pub fn exact_path_law(params: &ModelParams) -> Result<Vec<f64>> {
    let mut law = Vec::new();
    for_each_path(params.d, params.n, DEFAULT_PATH_BUDGET, |w| law.push(params.p.powi(w.range_size() as i32)))?;
    let z = law.iter().copied().collect::<CompensatedSum>().value();
    law.iter_mut().for_each(|x| *x /= z);
    Ok(law)
}

/// Mean of `k` under weights `hist[k] * q^k` (`q = 1` gives the free walk).
pub fn weighted_range_mean(hist: &[u64], q: f64) -> f64 {
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for (k, &c) in hist.iter().enumerate() {
        let w = c as f64 * q.powi(k as i32);
        num.add(k as f64 * w);
        den.add(w);
    }
    num.value() / den.value()
}
