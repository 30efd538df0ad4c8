//! Killed heat kernels, Dirichlet spectra of `I - Q` on finite lattice sets,
//! continuum ball eigenvalues, Faber–Krahn comparisons, the Green visit
//! function and survival bounds.

use nalgebra::linalg::SymmetricTridiagonal;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, ObstacleField};
use crate::error::{Error, Result};
use crate::lattice::{
    ball_points, component_count, empirical_center, external_boundary, unit_ball_volume, BallSpec, LatticeSet, Point,
};

/// Largest domain handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 4000;
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
pub const GREEN_RESIDUAL_TOL: f64 = 1e-10;
pub const GREEN_EXIT_TOL: f64 = 1e-9;

const NONE: u32 = u32::MAX;

/// Sites of a set with their nearest-neighbour table.
#[derive(Clone, Debug)]
pub struct DomainIndex {
    pub sites: LatticeSet,
    dirs: usize,
    nbr: Vec<u32>,
}

impl DomainIndex {
    pub fn new(sites: LatticeSet) -> Self {
        let dirs = 2 * sites.dim();
        let mut nbr = vec![NONE; sites.len() * dirs];
        for (i, p) in sites.iter().enumerate() {
            for dir in 0..dirs {
                if let Some(j) = sites.index_of(&p.step(dir as u8)) {
                    nbr[i * dirs + dir] = j as u32;
                }
            }
        }
        DomainIndex { sites, dirs, nbr }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.nbr[i * self.dirs..(i + 1) * self.dirs].iter().filter(|&&j| j != NONE).map(|&j| j as usize)
    }

    /// `y = Q x`.
    pub fn apply_q(&self, x: &[f64], y: &mut [f64]) {
        let w = 1.0 / self.dirs as f64;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for &j in &self.nbr[i * self.dirs..(i + 1) * self.dirs] {
                if j != NONE {
                    s += x[j as usize];
                }
            }
            *yi = w * s;
        }
    }

    pub fn dense_q(&self) -> DMatrix<f64> {
        let n = self.len();
        let w = 1.0 / self.dirs as f64;
        let mut q = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in self.neighbors(i) {
                q[(i, j)] = w;
            }
        }
        q
    }
}

fn require_connected(domain: &LatticeSet) -> Result<()> {
    if domain.is_empty() {
        return Err(Error::EmptySet("Dirichlet problem"));
    }
    let components = component_count(domain);
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    Ok(())
}

// ---------------------------------------------------------------- heat kernel

/// `p_n^D(u, ·)` on `D ∪ ∂D`, with `p_{n+1}^D(u, ·)` kept for the parity
/// convention.
#[derive(Clone, Debug)]
pub struct HeatKernel {
    pub u: Point,
    pub n: usize,
    pub support: LatticeSet,
    pub values: Vec<f64>,
    pub next_values: Vec<f64>,
    /// Mass that left `D` before time `n` (or, from `u ∈ ∂D`, left `D ∪ ∂D` at the first step).
    pub exited_mass: f64,
}

impl HeatKernel {
    /// `p_n^D(u, v)` without the parity convention.
    pub fn raw(&self, v: &Point) -> f64 {
        self.support.index_of(v).map_or(0.0, |i| self.values[i])
    }

    /// `p_n^D(u, v)`, read as `p_{n+1}^D(u, v)` when `n + |u - v|_1` is odd.
    pub fn value(&self, v: &Point) -> f64 {
        let i = match self.support.index_of(v) {
            Some(i) => i,
            None => return 0.0,
        };
        if (self.n as i64 + self.u.l1(v)) % 2 == 1 {
            self.next_values[i]
        } else {
            self.values[i]
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `p_n^D(u, v) = P_u(S_n = v, S_[1, n-1] ⊂ D)` by `n` applications of the
/// killed transition operator.
pub fn heat_kernel(domain: &LatticeSet, u: Point, n: usize) -> Result<HeatKernel> {
    let boundary = external_boundary(domain);
    let support = domain.union(&boundary)?;
    let start = support.index_of(&u).ok_or_else(|| Error::OutsideWindow(format!("{u} is not in D ∪ ∂D")))?;
    let index = DomainIndex::new(support.clone());
    let inside: Vec<bool> = support.iter().map(|p| domain.contains(p)).collect();
    let w = 1.0 / (2 * domain.dim()) as f64;
    let dirs = 2 * domain.dim();
    // one step of the killed operator; returns the mass lost
    let step = |t: usize, cur: &[f64], nxt: &mut [f64]| -> f64 {
        let mut lost = 0.0;
        nxt.iter_mut().for_each(|x| *x = 0.0);
        for (i, &m) in cur.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            if t > 0 && !inside[i] {
                // S_t ∈ ∂D at an intermediate time
                lost += m;
                continue;
            }
            let mut kept = 0;
            for j in index.neighbors(i) {
                nxt[j] += m * w;
                kept += 1;
            }
            lost += m * w * (dirs - kept) as f64;
        }
        lost
    };
    let mut cur = vec![0.0; support.len()];
    let mut nxt = vec![0.0; support.len()];
    cur[start] = 1.0;
    let mut exited_mass = 0.0;
    for t in 0..n {
        exited_mass += step(t, &cur, &mut nxt);
        std::mem::swap(&mut cur, &mut nxt);
    }
    step(n, &cur, &mut nxt);
    let (values, next_values) = (cur, nxt);
    Ok(HeatKernel { u, n, support, values, next_values, exited_mass })
}

// ------------------------------------------------------------------- spectra

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub domain: LatticeSet,
    /// Ascending eigenvalues of `I - Q`.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub k_computed: usize,
    pub method: EigenMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub sites: usize,
    pub method: EigenMethod,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl SpectrumResult {
    pub fn summary(&self) -> SpectrumSummary {
        SpectrumSummary {
            sites: self.domain.len(),
            method: self.method,
            eigenvalues: self.eigenvalues.clone(),
            residuals: self.residuals.clone(),
        }
    }

    /// Site coordinates followed by one column per eigenvector.
    pub fn to_csv(&self) -> String {
        let d = self.domain.dim();
        let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        header.extend((1..=self.k_computed).map(|k| format!("phi{k}")));
        let mut out = header.join(",") + "\n";
        for (i, p) in self.domain.iter().enumerate() {
            let mut row: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
            row.extend(self.eigenvectors.iter().map(|v| format!("{:.12e}", v[i])));
            out += &row.join(",");
            out.push('\n');
        }
        out
    }
}

fn residual(index: &DomainIndex, lambda: f64, v: &[f64], scratch: &mut [f64]) -> f64 {
    index.apply_q(v, scratch);
    // (I - Q) v - λ v = (1 - λ) v - Q v
    v.iter().zip(scratch.iter()).map(|(x, qx)| ((1.0 - lambda) * x - qx).powi(2)).sum::<f64>().sqrt()
}

fn finish(domain: LatticeSet, index: &DomainIndex, mut pairs: Vec<(f64, Vec<f64>)>, method: EigenMethod) -> SpectrumResult {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some((_, v)) = pairs.first_mut() {
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let mut scratch = vec![0.0; index.len()];
    let residuals = pairs.iter().map(|(l, v)| residual(index, *l, v, &mut scratch)).collect();
    let k = pairs.len();
    let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
    SpectrumResult { domain, eigenvalues, eigenvectors, residuals, k_computed: k, method }
}

/// Bottom `k` eigenpairs of `I - Q_D`: dense below [`DENSE_LIMIT`] sites,
/// Lanczos with deflation above.
pub fn dirichlet_spectrum(domain: &LatticeSet, k: usize) -> Result<SpectrumResult> {
    require_connected(domain)?;
    if k == 0 || k > domain.len() {
        return Err(Error::InvalidParameter(format!("k={k} for a domain of {} sites", domain.len())));
    }
    if domain.len() <= DENSE_LIMIT {
        dense_spectrum(domain, k)
    } else {
        lanczos_spectrum(domain, k)
    }
}

pub fn dense_spectrum(domain: &LatticeSet, k: usize) -> Result<SpectrumResult> {
    require_connected(domain)?;
    if k == 0 || k > domain.len() {
        return Err(Error::InvalidParameter(format!("k={k} for a domain of {} sites", domain.len())));
    }
    let index = DomainIndex::new(domain.clone());
    let n = index.len();
    // Q = H T H^T, then the top k pairs of the tridiagonal T
    let (h, diag, off) = SymmetricTridiagonal::new(index.dense_q()).unpack();
    let diag: Vec<f64> = diag.iter().copied().collect();
    let off: Vec<f64> = off.iter().copied().collect();
    let mut tri_vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut pairs = Vec::with_capacity(k);
    let mut rng = ChaCha8Rng::seed_from_u64(0x7d1a_9e05);
    for i in 0..k {
        let theta = tridiagonal_eigenvalue_desc(&diag, &off, i);
        let s = tridiagonal_eigenvector(&diag, &off, theta, &tri_vectors, &mut rng);
        let mut v = vec![0.0; n];
        for (c, &sc) in s.iter().enumerate() {
            if sc != 0.0 {
                axpy(&mut v, sc, h.column(c).as_slice());
            }
        }
        normalize(&mut v);
        tri_vectors.push(s);
        pairs.push((1.0 - theta, v));
    }
    Ok(finish(domain.clone(), &index, pairs, EigenMethod::Dense))
}

/// Number of eigenvalues of the tridiagonal matrix below `x` (Sturm count).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `i`-th largest eigenvalue (from 0) by bisection.
fn tridiagonal_eigenvalue_desc(diag: &[f64], off: &[f64], i: usize) -> f64 {
    let n = diag.len();
    let bound = (0..n)
        .map(|r| diag[r].abs() + if r > 0 { off[r - 1].abs() } else { 0.0 } + if r + 1 < n { off[r].abs() } else { 0.0 })
        .fold(0.0, f64::max);
    let (mut lo, mut hi) = (-bound - 1e-12, bound + 1e-12);
    // want the point where n - count(x) drops from i + 1 to i
    while hi - lo > 2.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if n - sturm_count(diag, off, mid) > i {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse iteration for the eigenvalue `theta`, kept orthogonal to
/// `previous` (which may contain vectors of the same eigenvalue).
fn tridiagonal_eigenvector(diag: &[f64], off: &[f64], theta: f64, previous: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = diag.len();
    let shift = theta + 1e3 * f64::EPSILON * (theta.abs() + 1.0);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    for _ in 0..4 {
        orthogonalize(&mut x, previous);
        normalize(&mut x);
        x = tridiagonal_solve(diag, off, shift, &x);
    }
    orthogonalize(&mut x, previous);
    normalize(&mut x);
    x
}

/// Solves `(T - shift I) y = r` by Gaussian elimination with partial pivoting.
fn tridiagonal_solve(diag: &[f64], off: &[f64], shift: f64, r: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        let p = diag[0] - shift;
        return vec![r[0] / if p == 0.0 { f64::EPSILON } else { p }];
    }
    // rows stored as (main, upper, upper2) after pivoting
    let mut a: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut up: Vec<f64> = off.to_vec();
    up.push(0.0);
    let mut up2 = vec![0.0; n];
    let mut low: Vec<f64> = off.to_vec();
    let mut rhs = r.to_vec();
    for i in 0..n - 1 {
        if low[i].abs() > a[i].abs() {
            // swap rows i and i + 1
            let (a_i, up_i, up2_i, r_i) = (a[i], up[i], up2[i], rhs[i]);
            a[i] = low[i];
            up[i] = a[i + 1];
            up2[i] = up[i + 1];
            rhs[i] = rhs[i + 1];
            low[i] = a_i;
            a[i + 1] = up_i;
            up[i + 1] = up2_i;
            rhs[i + 1] = r_i;
        }
        if a[i] == 0.0 {
            a[i] = f64::EPSILON;
        }
        let m = low[i] / a[i];
        a[i + 1] -= m * up[i];
        if i + 1 < n - 1 {
            up[i + 1] -= m * up2[i];
        }
        rhs[i + 1] -= m * rhs[i];
    }
    if a[n - 1] == 0.0 {
        a[n - 1] = f64::EPSILON;
    }
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = rhs[i];
        if i + 1 < n {
            v -= up[i] * y[i + 1];
        }
        if i + 2 < n {
            v -= up2[i] * y[i + 2];
        }
        y[i] = v / a[i];
    }
    y
}

/// Full spectrum of `Q_D`, ascending.
pub fn q_spectrum(domain: &LatticeSet) -> Vec<f64> {
    let index = DomainIndex::new(domain.clone());
    let mut ev: Vec<f64> = SymmetricEigen::new(index.dense_q()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            axpy(v, -c, b);
        }
    }
}

/// Bottom `k` eigenpairs by Lanczos with full reorthogonalization, explicit
/// restarts, and deflation of converged vectors.
pub fn lanczos_spectrum(domain: &LatticeSet, k: usize) -> Result<SpectrumResult> {
    require_connected(domain)?;
    let index = DomainIndex::new(domain.clone());
    let n = index.len();
    let max_basis = n.min(400);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_2051);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut pairs = Vec::new();
    let mut qv = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for _ in 0..k {
        let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut found = None;
        for _restart in 0..200 {
            orthogonalize(&mut start, &locked);
            normalize(&mut start);
            let mut basis: Vec<Vec<f64>> = vec![start.clone()];
            let mut alpha: Vec<f64> = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            let best: Option<(f64, Vec<f64>)>;
            loop {
                let j = basis.len() - 1;
                index.apply_q(&basis[j], &mut qv);
                let mut w = qv.clone();
                let a = dot(&w, &basis[j]);
                alpha.push(a);
                orthogonalize(&mut w, &locked);
                orthogonalize(&mut w, &basis);
                let b = normalize(&mut w);
                let m = alpha.len();
                let check = m % 10 == 0 || m == max_basis || b < 1e-12 || m + locked.len() >= n;
                if check {
                    let t = DMatrix::from_fn(m, m, |r, c| {
                        if r == c {
                            alpha[r]
                        } else if r + 1 == c {
                            beta[r]
                        } else if c + 1 == r {
                            beta[c]
                        } else {
                            0.0
                        }
                    });
                    let eig = SymmetricEigen::new(t);
                    let top = (0..m).max_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y])).unwrap();
                    let theta = eig.eigenvalues[top];
                    let s = eig.eigenvectors.column(top);
                    let est = (b * s[m - 1]).abs();
                    if est < 0.01 * EIGEN_RESIDUAL_TOL || b < 1e-12 || m == max_basis || m + locked.len() >= n {
                        let mut y = vec![0.0; n];
                        for (i, v) in basis.iter().enumerate() {
                            axpy(&mut y, s[i], v);
                        }
                        orthogonalize(&mut y, &locked);
                        normalize(&mut y);
                        index.apply_q(&y, &mut scratch);
                        let rq = dot(&y, &scratch);
                        best = Some((rq, y));
                        let _ = theta;
                        break;
                    }
                }
                beta.push(b);
                basis.push(w);
            }
            let (rq, y) = best.expect("Ritz pair");
            let res = residual(&index, 1.0 - rq, &y, &mut scratch);
            if res <= EIGEN_RESIDUAL_TOL {
                found = Some((rq, y));
                break;
            }
            start = y;
        }
        let (rq, y) = found.ok_or_else(|| Error::Convergence(format!("Lanczos on {n} sites")))?;
        locked.push(y.clone());
        pairs.push((1.0 - rq, y));
    }
    Ok(finish(domain.clone(), &index, pairs, EigenMethod::Lanczos))
}

// --------------------------------------------------------- continuum values

/// `J_ν(x) Γ(ν+1) (2/x)^ν` by its ascending series.
fn scaled_bessel_j(nu: f64, x: f64) -> f64 {
    let z = -(x * x) / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= z / (kf * (nu + kf));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// First positive zero `j_{ν,1}` of `J_ν`, bisected on `(ν + 1, ν + 4)`.
pub fn bessel_zero(nu: f64) -> Result<f64> {
    if !(nu >= 0.0 && nu <= 20.0) {
        return Err(Error::InvalidParameter(format!("Bessel order {nu} outside [0, 20]")));
    }
    let (mut lo, mut hi) = (nu + 1.0, nu + 4.0);
    let flo = scaled_bessel_j(nu, lo);
    if flo.signum() == scaled_bessel_j(nu, hi).signum() {
        return Err(Error::Convergence(format!("no sign change bracketing j_{{{nu},1}}")));
    }
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if scaled_bessel_j(nu, mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Principal Dirichlet eigenvalue of `-(1/2d) Δ` on a ball:
/// `j_{d/2-1,1}^2 / (2 d R^2)`.
pub fn continuum_ball_eigenvalue(d: usize, radius: f64, k: usize) -> Result<f64> {
    crate::lattice::check_dim(d)?;
    if k != 1 {
        return Err(Error::InvalidParameter("only the principal continuum eigenvalue is supported".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let j = bessel_zero(d as f64 / 2.0 - 1.0)?;
    Ok(j * j / (2.0 * d as f64 * radius * radius))
}

/// Continuum spectral gap of the ball: `(j_{d/2,1}^2 - j_{d/2-1,1}^2) / (2 d R^2)`.
pub fn continuum_ball_gap(d: usize, radius: f64) -> Result<f64> {
    let j0 = bessel_zero(d as f64 / 2.0 - 1.0)?;
    let j1 = bessel_zero(d as f64 / 2.0)?;
    Ok((j1 * j1 - j0 * j0) / (2.0 * d as f64 * radius * radius))
}

/// Radius of the Euclidean ball of the given volume.
pub fn ball_radius_of_volume(d: usize, volume: f64) -> f64 {
    (volume / unit_ball_volume(d)).powf(1.0 / d as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    pub d: usize,
    pub p: f64,
    /// Principal eigenvalue on the unit-volume ball.
    pub lambda1_continuum: f64,
    pub c_dp: f64,
    pub rho_coefficient: f64,
}

impl ScalingConstants {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in (0,1), got {p}")));
        }
        let lambda1 = continuum_ball_eigenvalue(d, ball_radius_of_volume(d, 1.0), 1)?;
        let df = d as f64;
        let lg = (1.0 / p).ln();
        let c_dp = (df + 2.0) / 2.0 * lg.powf(2.0 / (df + 2.0)) * (2.0 * lambda1 / df).powf(df / (df + 2.0));
        let rho_coefficient = (2.0 * lambda1 / (df * lg)).powf(1.0 / (df + 2.0));
        Ok(ScalingConstants { d, p, lambda1_continuum: lambda1, c_dp, rho_coefficient })
    }

    /// `ρ_N = rho_coefficient · N^{1/(d+2)}`.
    pub fn rho_n(&self, n: f64) -> f64 {
        self.rho_coefficient * n.powf(1.0 / (self.d as f64 + 2.0))
    }

    /// Radius minimising `vol(B(R)) ln(1/p) + N λ(B(R))`.
    pub fn optimal_radius(&self, n: f64) -> f64 {
        self.rho_n(n) * ball_radius_of_volume(self.d, 1.0)
    }
}

// -------------------------------------------------------------- Faber–Krahn

/// Volume of `{x : dist_∞(x, T) < 2}`: the number of unit cells `c` with
/// `c_i ∈ [x_i - 2, x_i + 1]` for some `x ∈ T`.
pub fn continuous_hull_volume(t: &LatticeSet) -> usize {
    let d = t.dim();
    let mut cells: FxHashSet<Point> = FxHashSet::default();
    let offsets: Vec<Point> = {
        let lo = Point::new(&vec![-2; d]).expect("valid dimension");
        let hi = Point::new(&vec![1; d]).expect("valid dimension");
        let mut v = Vec::new();
        crate::lattice::for_each_in_box(&lo, &hi, |p| v.push(p));
        v
    };
    for x in t.iter() {
        for o in &offsets {
            cells.insert(x.add(o));
        }
    }
    cells.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaberKrahn {
    pub lambda_discrete: f64,
    pub hull_volume: f64,
    pub lambda_ball_same_volume: f64,
    pub gap: f64,
}

pub fn faber_krahn_gap(domain: &LatticeSet) -> Result<FaberKrahn> {
    let lambda_discrete = dirichlet_spectrum(domain, 1)?.eigenvalues[0];
    let hull_volume = continuous_hull_volume(domain) as f64;
    let lambda_ball = continuum_ball_eigenvalue(domain.dim(), ball_radius_of_volume(domain.dim(), hull_volume), 1)?;
    Ok(FaberKrahn { lambda_discrete, hull_volume, lambda_ball_same_volume: lambda_ball, gap: lambda_discrete - lambda_ball })
}

// ------------------------------------------------------------ Green visits

#[derive(Clone, Debug)]
pub struct GreenSolution {
    /// `G_O(u, x)`.
    pub value: f64,
    /// `‖b - (I - Q) g‖_2` of the final iterate.
    pub residual: f64,
    pub iterations: usize,
    /// Largest probability, over open sites, of leaving the window before `τ_O`.
    pub max_exit_probability: f64,
    pub open_sites: LatticeSet,
    pub g: Vec<f64>,
}

impl GreenSolution {
    pub fn to_csv(&self) -> String {
        let d = self.open_sites.dim();
        let mut out: String = (0..d).map(|i| format!("x{i},")).collect::<String>() + "g\n";
        for (p, g) in self.open_sites.iter().zip(&self.g) {
            for c in p.coords() {
                out += &format!("{c},");
            }
            out += &format!("{g:.12e}\n");
        }
        out
    }
}

/// Conjugate gradients for `(I - Q_U) x = b`.
fn cg_solve(index: &DomainIndex, b: &[f64], tol: f64) -> Result<(Vec<f64>, f64, usize)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let max_iter = 20 * n + 1000;
    for it in 0..max_iter {
        if rr.sqrt() <= 0.1 * tol {
            let res = true_residual(index, &x, b);
            if res <= tol {
                return Ok((x, res, it));
            }
            // restart from the true residual
            index.apply_q(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - (x[i] - ap[i]);
            }
            p.copy_from_slice(&r);
            rr = dot(&r, &r);
        }
        index.apply_q(&p, &mut ap);
        for i in 0..n {
            ap[i] = p[i] - ap[i];
        }
        let alpha = rr / dot(&p, &ap);
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::Convergence(format!("conjugate gradients on {n} unknowns")))
}

fn true_residual(index: &DomainIndex, x: &[f64], b: &[f64]) -> f64 {
    let mut qx = vec![0.0; x.len()];
    index.apply_q(x, &mut qx);
    x.iter().zip(&qx).zip(b).map(|((x, q), b)| (b - (x - q)).powi(2)).sum::<f64>().sqrt()
}

/// `G_O(u, x) = E_u[Σ_{n=0}^{τ_O} 1{S_n ∈ B(x, r)}]`, the visit at `τ_O`
/// included.
pub fn green_visits(env: &Environment, u: Point, x: Point, r: f64) -> Result<GreenSolution> {
    let window = env.window();
    if !window.contains(&u) {
        return Err(Error::OutsideWindow(u.to_string()));
    }
    let ball = BallSpec::new(x, r)?;
    let ball_set = ball_points(&ball);
    if !ball_set.is_subset(window) {
        return Err(Error::WindowTooSmall(format!("B({x}, {r}) is not inside the window")));
    }
    let open = window.difference(env.obstacles());
    let index = DomainIndex::new(open.clone());
    let w = 1.0 / (2 * window.dim()) as f64;
    let mut b = vec![0.0; open.len()];
    let mut escape = vec![0.0; open.len()];
    for (i, p) in open.iter().enumerate() {
        let mut bi = if ball.contains(p) { 1.0 } else { 0.0 };
        for q in p.neighbors() {
            if env.is_obstacle(&q) {
                if ball.contains(&q) {
                    bi += w;
                }
            } else if !window.contains(&q) {
                escape[i] += w;
            }
        }
        b[i] = bi;
    }
    let (h, _, _) = cg_solve(&index, &escape, 1e-13)?;
    let max_exit = h.iter().copied().fold(0.0, f64::max);
    if max_exit > GREEN_EXIT_TOL {
        return Err(Error::WindowTooSmall(format!(
            "walk leaves the window before hitting an obstacle with probability {max_exit:.3e}"
        )));
    }
    let (g, residual, iterations) = cg_solve(&index, &b, GREEN_RESIDUAL_TOL)?;
    let value = match open.index_of(&u) {
        Some(i) => g[i],
        None => {
            if ball.contains(&u) {
                1.0
            } else {
                0.0
            }
        }
    };
    Ok(GreenSolution { value, residual, iterations, max_exit_probability: max_exit, open_sites: open, g })
}

// ------------------------------------------------------------ survival bound

/// `vol(B(R)) ln p - N λ(B(R)) - c R^{d-1}` with continuum volume and eigenvalue.
pub fn log_survival_lower_bound_at_radius(d: usize, p: f64, n: f64, c: f64, radius: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0,1), got {p}")));
    }
    let vol = unit_ball_volume(d) * radius.powi(d as i32);
    let lambda = continuum_ball_eigenvalue(d, radius, 1)?;
    Ok(vol * p.ln() - n * lambda - c * radius.powi(d as i32 - 1))
}

/// Logarithm of the survival lower bound at `R = ρ_N`.
pub fn log_survival_lower_bound(d: usize, p: f64, n: u64, c: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let rho = ScalingConstants::new(d, p)?.rho_n(n as f64);
    log_survival_lower_bound_at_radius(d, p, n as f64, c, rho)
}

pub fn survival_lower_bound(d: usize, p: f64, n: u64, c: f64) -> Result<f64> {
    log_survival_lower_bound(d, p, n, c).map(f64::exp)
}

// ------------------------------------------------------------------ parity

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    /// `max_i |μ_i + μ_{n+1-i}|` over the ascending spectrum of `Q`.
    pub asymmetry: f64,
    /// Residual of `span{φ 1_even, φ 1_odd}` as an invariant subspace of `Q²`.
    pub projection_residual: f64,
    pub top_q_eigenvalue: f64,
}

pub fn parity_spectrum_check(domain: &LatticeSet) -> Result<ParityReport> {
    require_connected(domain)?;
    let spectrum = q_spectrum(domain);
    let n = spectrum.len();
    let asymmetry = (0..n).map(|i| (spectrum[i] + spectrum[n - 1 - i]).abs()).fold(0.0, f64::max);
    let top = dense_spectrum(domain, 1)?;
    let phi = &top.eigenvectors[0];
    let index = DomainIndex::new(domain.clone());
    let mut basis = Vec::new();
    for parity in [true, false] {
        let mut v: Vec<f64> = domain.iter().zip(phi).map(|(p, f)| if p.is_even() == parity { *f } else { 0.0 }).collect();
        if normalize(&mut v) > 0.0 {
            basis.push(v);
        }
    }
    let mut q1 = vec![0.0; n];
    let mut q2 = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for v in &basis {
        index.apply_q(v, &mut q1);
        index.apply_q(&q1, &mut q2);
        let mut r = q2.clone();
        for b in &basis {
            let c = dot(&q2, b);
            axpy(&mut r, -c, b);
        }
        worst = worst.max(dot(&r, &r).sqrt());
    }
    Ok(ParityReport { asymmetry, projection_residual: worst, top_q_eigenvalue: 1.0 - top.eigenvalues[0] })
}

// ------------------------------------------------------------ eigen bounds

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenBounds {
    pub center: Point,
    /// Covering radius around `center`.
    pub radius: f64,
    /// Distance from `center` to the nearest site outside the domain.
    pub inscribed_radius: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap_times_r2: f64,
    pub sup_times_rd2: f64,
}

/// Smallest inscribed radius accepted by [`eigen_bounds_measurement`].
pub const MIN_INSCRIBED_RADIUS: f64 = 10.0;

/// `(λ2 - λ1) R²` and `‖φ1‖_∞ R^{d/2}` with `R` the covering radius about
/// the empirical center. The domain must contain a ball of radius at least
/// 10 about that center and at least half of `R`.
pub fn eigen_bounds_measurement(domain: &LatticeSet) -> Result<EigenBounds> {
    require_connected(domain)?;
    let (center, radius) = empirical_center(domain)?;
    let inscribed = external_boundary(domain).iter().map(|y| y.dist(&center)).fold(f64::INFINITY, f64::min);
    if inscribed < MIN_INSCRIBED_RADIUS || inscribed < radius / 2.0 {
        return Err(Error::Precondition(format!(
            "domain is not sandwiched between balls: inscribed radius {inscribed:.3}, covering radius {radius:.3}"
        )));
    }
    let spec = dirichlet_spectrum(domain, 2)?;
    let sup = spec.eigenvectors[0].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let d = domain.dim() as f64;
    Ok(EigenBounds {
        center,
        radius,
        inscribed_radius: inscribed,
        lambda1: spec.eigenvalues[0],
        lambda2: spec.eigenvalues[1],
        gap_times_r2: (spec.eigenvalues[1] - spec.eigenvalues[0]) * radius * radius,
        sup_times_rd2: sup * radius.powf(d / 2.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[(i32, i32)]) -> LatticeSet {
        LatticeSet::from_points(2, points.iter().map(|&(x, y)| Point::xy(x, y))).unwrap()
    }

    fn ball(r: f64) -> LatticeSet {
        ball_points(&BallSpec::new(Point::xy(0, 0), r).unwrap())
    }

    #[test]
    fn heat_kernel_one_and_two_steps() {
        let d = ball(5.0);
        let o = Point::xy(0, 0);
        let h1 = heat_kernel(&d, o, 1).unwrap();
        for q in o.neighbors() {
            assert!((h1.raw(&q) - 0.25).abs() < 1e-15);
        }
        let h2 = heat_kernel(&d, o, 2).unwrap();
        assert!((h2.raw(&o) - 0.25).abs() < 1e-15);
        // parity: p_1(0,0) is read as p_2(0,0)
        assert!((h1.value(&o) - 0.25).abs() < 1e-15);
        assert!(heat_kernel(&d, Point::xy(9, 9), 1).is_err());
    }

    #[test]
    fn heat_kernel_conserves_mass() {
        let d = set(&[(0, 0), (1, 0), (2, 0), (2, 1)]);
        for n in 0..30 {
            let h = heat_kernel(&d, Point::xy(1, 0), n).unwrap();
            assert!((h.total_mass() + h.exited_mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_spectra() {
        let s = dirichlet_spectrum(&set(&[(0, 0)]), 1).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-15);
        let s = dirichlet_spectrum(&set(&[(0, 0), (1, 0)]), 2).unwrap();
        assert!((s.eigenvalues[0] - 0.75).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.25).abs() < 1e-14);
        assert!(s.eigenvectors[0].iter().all(|&x| x > 0.0));
        assert!(matches!(dirichlet_spectrum(&set(&[(0, 0), (2, 0)]), 1), Err(Error::Disconnected { components: 2 })));
    }

    #[test]
    fn bessel_zeros() {
        assert!((bessel_zero(0.0).unwrap() - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((bessel_zero(1.0).unwrap() - 3.831_705_970_207_512).abs() < 1e-12);
        assert!((bessel_zero(0.5).unwrap() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn continuum_values() {
        let l1 = continuum_ball_eigenvalue(2, 1.0, 1).unwrap();
        assert!((l1 - 1.445_796).abs() < 1e-6);
        assert_eq!(continuum_ball_eigenvalue(2, 2.0, 1).unwrap(), l1 / 4.0);
        assert!(continuum_ball_eigenvalue(2, 1.0, 2).is_err());
        // π j01² / 4
        let unit = continuum_ball_eigenvalue(2, 1.0 / std::f64::consts::PI.sqrt(), 1).unwrap();
        assert!((unit - 4.542_103_633_884_307).abs() < 1e-11);
    }

    #[test]
    fn scaling_constants_d2() {
        let s = ScalingConstants::new(2, 0.5).unwrap();
        assert!((s.c_dp - 3.548_716_0).abs() < 1e-6, "{}", s.c_dp);
        assert!((s.rho_coefficient - 1.599_955_5).abs() < 1e-6, "{}", s.rho_coefficient);
        let mut last = 0.0;
        for p in [0.5, 0.9, 0.99, 0.999] {
            let r = ScalingConstants::new(2, p).unwrap().rho_coefficient;
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn hull_volume_of_single_site_and_bar() {
        assert_eq!(continuous_hull_volume(&set(&[(0, 0)])), 16);
        assert_eq!(continuous_hull_volume(&set(&[(0, 0), (1, 0)])), 20);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let d = ball(12.0);
        let a = dense_spectrum(&d, 4).unwrap();
        let b = lanczos_spectrum(&d, 4).unwrap();
        for k in 0..4 {
            assert!((a.eigenvalues[k] - b.eigenvalues[k]).abs() < 1e-10, "{k}: {:?} {:?}", a.eigenvalues, b.eigenvalues);
            assert!(b.residuals[k] <= EIGEN_RESIDUAL_TOL);
        }
    }

    #[test]
    fn green_trivial_cases() {
        let window = ball(8.0);
        let wall = window.filter(|p| p.dist(&Point::xy(0, 0)) > 6.0);
        let env = Environment::new(window.clone(), wall.union(&set(&[(0, 0), (3, 0)])).unwrap()).unwrap();
        let g = green_visits(&env, Point::xy(0, 0), Point::xy(0, 0), 1.0).unwrap();
        assert_eq!(g.value, 1.0);
        let g = green_visits(&env, Point::xy(3, 0), Point::xy(0, 0), 1.0).unwrap();
        assert_eq!(g.value, 0.0);
        // a wide open window lets the walk escape
        let env = Environment::new(window, set(&[(0, 0)])).unwrap();
        assert!(matches!(green_visits(&env, Point::xy(1, 0), Point::xy(0, 0), 1.0), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn survival_bound_monotone_in_c() {
        let a = survival_lower_bound(2, 0.5, 10, 0.0).unwrap();
        let b = survival_lower_bound(2, 0.5, 10, 1.0).unwrap();
        assert!(b < a);
    }

    #[test]
    fn parity_on_two_sites() {
        let r = parity_spectrum_check(&set(&[(0, 0), (1, 0)])).unwrap();
        assert!(r.asymmetry < 1e-15);
        assert!((r.top_q_eigenvalue - 0.25).abs() < 1e-15);
    }
}
