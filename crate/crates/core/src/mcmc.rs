//! Metropolis sampler for the polymer measure with weight `p^{|range|}`
//! relative to the uniform measure on walks of length `N`.
//!
//! All moves redraw steps from the uniform step distribution (or permute
//! them), so proposal ratios are one and acceptance is `min(1, p^Δ)`.

use std::fmt::Write as _;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{site_uniform, Environment, ModelParams};
use crate::error::{Error, Result};
use crate::lattice::{empirical_center, external_boundary, LatticeSet, Point};
use crate::stats::{integrated_autocorrelation, mean_err_correlated, MeanErr};
use crate::walk::{direction_between, direction_vector, WalkPath};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    /// Redraw `steps[t0..t1]`; the suffix after `t1` is translated rigidly.
    SegmentRegrow,
    /// Redraw `steps[t0..N]`.
    EndpointRegrow,
    /// Redraw step `t0` and compensate at step `t1 - 1` so that `S_t1` is
    /// unchanged; fails when no unit step compensates.
    LocalWiggle,
    /// Uniformly permute `steps[t0..t1]`; both window ends stay fixed.
    SegmentShuffle,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] =
        [MoveKind::SegmentRegrow, MoveKind::EndpointRegrow, MoveKind::LocalWiggle, MoveKind::SegmentShuffle];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::SegmentRegrow => "segment_regrow",
            MoveKind::EndpointRegrow => "endpoint_regrow",
            MoveKind::LocalWiggle => "local_wiggle",
            MoveKind::SegmentShuffle => "segment_shuffle",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveSpec {
    pub kind: MoveKind,
    pub t0: usize,
    pub t1: usize,
}

impl MoveSpec {
    pub fn new(kind: MoveKind, t0: usize, t1: usize, n: usize) -> Result<Self> {
        if t0 >= t1 || t1 > n {
            return Err(Error::InvalidParameter(format!("move window {t0}..{t1} invalid for N={n}")));
        }
        if kind == MoveKind::EndpointRegrow && t1 != n {
            return Err(Error::InvalidParameter("endpoint_regrow must end at N".into()));
        }
        if kind == MoveKind::LocalWiggle && t1 - t0 < 2 {
            return Err(Error::InvalidParameter("local_wiggle needs a window of at least 2 steps".into()));
        }
        Ok(MoveSpec { kind, t0, t1 })
    }
}

/// Move weights and window-length distributions.
///
/// Regrow and shuffle windows have geometric lengths with the given means
/// (default `N/10`), capped at `segment_cap` (default `N/2`; endpoint
/// windows are capped at `N`). Wiggle windows are uniform on
/// `2..=wiggle_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoveMix {
    pub segment_regrow: f64,
    pub endpoint_regrow: f64,
    pub local_wiggle: f64,
    pub segment_shuffle: f64,
    pub segment_mean: Option<f64>,
    pub endpoint_mean: Option<f64>,
    pub shuffle_mean: Option<f64>,
    pub segment_cap: Option<usize>,
    pub wiggle_max: usize,
}

impl Default for MoveMix {
    fn default() -> Self {
        MoveMix {
            segment_regrow: 0.7,
            endpoint_regrow: 0.2,
            local_wiggle: 0.1,
            segment_shuffle: 0.0,
            segment_mean: None,
            endpoint_mean: None,
            shuffle_mean: None,
            segment_cap: None,
            wiggle_max: 4,
        }
    }
}

impl MoveMix {
    fn weights(&self) -> [f64; 4] {
        [self.segment_regrow, self.endpoint_regrow, self.local_wiggle, self.segment_shuffle]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weights();
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter(format!("move weights must be nonnegative with positive sum: {w:?}")));
        }
        for m in [self.segment_mean, self.endpoint_mean, self.shuffle_mean].into_iter().flatten() {
            if !(m.is_finite() && m >= 1.0) {
                return Err(Error::InvalidParameter(format!("mean window length must be >= 1, got {m}")));
            }
        }
        if self.wiggle_max < 2 {
            return Err(Error::InvalidParameter("wiggle_max must be at least 2".into()));
        }
        Ok(())
    }

    fn mean_for(&self, kind: MoveKind, n: usize) -> f64 {
        let default = (n as f64 / 10.0).max(1.0);
        match kind {
            MoveKind::SegmentRegrow => self.segment_mean.unwrap_or(default),
            MoveKind::EndpointRegrow => self.endpoint_mean.unwrap_or(default),
            MoveKind::SegmentShuffle => self.shuffle_mean.unwrap_or(default),
            MoveKind::LocalWiggle => (2 + self.wiggle_max.min(n).max(2)) as f64 / 2.0,
        }
    }

    fn cap_for(&self, kind: MoveKind, n: usize) -> usize {
        match kind {
            MoveKind::EndpointRegrow => n,
            _ => self.segment_cap.unwrap_or(n / 2).clamp(1, n.max(1)),
        }
    }

    /// Attempts per sweep: `N` divided by the mix-averaged window length.
    pub fn attempts_per_sweep(&self, n: usize) -> u64 {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        let mean_len: f64 = MoveKind::ALL
            .iter()
            .map(|&k| w[k.index()] * self.mean_for(k, n).min(self.cap_for(k, n) as f64))
            .sum::<f64>()
            / total;
        ((n as f64 / mean_len.max(1.0)).round() as u64).max(1)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCounter {
    pub proposed: u64,
    pub accepted: u64,
    /// Proposals that could not be formed and were rejected outright.
    pub auto_rejected: u64,
}

impl MoveCounter {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

pub type MoveStats = [MoveCounter; 4];

/// `min(1, p^Δ)`.
pub fn acceptance_probability(delta_range: i64, p: f64) -> f64 {
    if delta_range <= 0 {
        1.0
    } else {
        p.powi(delta_range as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub kind: MoveKind,
    pub accepted: bool,
    /// Range change of the candidate, when it was fully evaluated.
    pub delta: Option<i64>,
}

/// Candidate path produced by [`ChainState::propose`].
#[derive(Clone, Debug)]
pub struct Proposal {
    pub candidate: WalkPath,
    pub delta_range: i64,
    pub well_formed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialPath {
    Straight,
    /// Walk reflected inside the closed Euclidean ball of this radius.
    Confined { radius: f64 },
}

#[derive(Clone, Debug)]
pub struct ChainState {
    params: ModelParams,
    mix: MoveMix,
    path: WalkPath,
    ln_p: f64,
    log_weight: f64,
    stats: MoveStats,
    rng: ChaCha8Rng,
    attempts: u64,
    scratch_points: Vec<Point>,
    scratch_steps: Vec<u8>,
}

impl ChainState {
    /// Chain `stream` of the generator seeded by `params.seed`.
    pub fn new(params: ModelParams, mix: MoveMix, init: InitialPath, stream: u64) -> Result<Self> {
        mix.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(stream);
        let origin = Point::origin(params.d)?;
        let path = match init {
            InitialPath::Straight => WalkPath::straight(origin, params.n),
            InitialPath::Confined { radius } => confined_walk(origin, params.n, radius, &mut rng)?,
        };
        Ok(Self::assemble(params, mix, path, rng, [MoveCounter::default(); 4], 0))
    }

    pub fn from_path(params: ModelParams, mix: MoveMix, path: WalkPath, stream: u64) -> Result<Self> {
        mix.validate()?;
        if path.len() != params.n || path.dim() != params.d {
            return Err(Error::InvalidParameter("path does not match model parameters".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(stream);
        Ok(Self::assemble(params, mix, path, rng, [MoveCounter::default(); 4], 0))
    }

    fn assemble(params: ModelParams, mix: MoveMix, path: WalkPath, rng: ChaCha8Rng, stats: MoveStats, attempts: u64) -> Self {
        let ln_p = params.p.ln();
        let log_weight = path.range_size() as f64 * ln_p;
        ChainState {
            params,
            mix,
            path,
            ln_p,
            log_weight,
            stats,
            rng,
            attempts,
            scratch_points: Vec::new(),
            scratch_steps: Vec::new(),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn mix(&self) -> &MoveMix {
        &self.mix
    }

    pub fn path(&self) -> &WalkPath {
        &self.path
    }

    /// `|range| · ln p`.
    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn stats(&self) -> &MoveStats {
        &self.stats
    }

    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    pub fn reset_stats(&mut self) {
        self.stats = [MoveCounter::default(); 4];
    }

    fn geometric_len(&mut self, mean: f64, cap: usize) -> usize {
        let len = if mean <= 1.0 {
            1
        } else {
            let q = 1.0 / mean;
            let u: f64 = 1.0 - self.rng.random::<f64>();
            1 + (u.ln() / (1.0 - q).ln()).floor() as usize
        };
        len.min(cap).max(1)
    }

    /// Draws a move from the mix. `None` if the move cannot be placed.
    pub fn draw_move(&mut self) -> (MoveKind, Option<MoveSpec>) {
        let n = self.params.n;
        let w = self.mix.weights();
        let total: f64 = w.iter().sum();
        let mut x = self.rng.random::<f64>() * total;
        let mut kind = MoveKind::SegmentRegrow;
        for k in MoveKind::ALL {
            if w[k.index()] > 0.0 {
                kind = k;
                if x < w[k.index()] {
                    break;
                }
                x -= w[k.index()];
            }
        }
        if n == 0 {
            return (kind, None);
        }
        let spec = match kind {
            MoveKind::SegmentRegrow | MoveKind::SegmentShuffle => {
                let len = self.geometric_len(self.mix.mean_for(kind, n), self.mix.cap_for(kind, n));
                let t0 = self.rng.random_range(0..=n - len);
                Some(MoveSpec { kind, t0, t1: t0 + len })
            }
            MoveKind::EndpointRegrow => {
                let len = self.geometric_len(self.mix.mean_for(kind, n), n);
                Some(MoveSpec { kind, t0: n - len, t1: n })
            }
            MoveKind::LocalWiggle => {
                if n < 2 {
                    None
                } else {
                    let len = self.rng.random_range(2..=self.mix.wiggle_max.min(n));
                    let t0 = self.rng.random_range(0..=n - len);
                    Some(MoveSpec { kind, t0, t1: t0 + len })
                }
            }
        };
        (kind, spec)
    }

    /// Fills `scratch_steps` with the replacement for `steps[t0..t1]`;
    /// `false` on a wiggle reconnection failure.
    fn draw_replacement(&mut self, spec: &MoveSpec) -> bool {
        let dirs = 2 * self.params.d as u8;
        let old = &self.path.steps()[spec.t0..spec.t1];
        self.scratch_steps.clear();
        match spec.kind {
            MoveKind::SegmentRegrow | MoveKind::EndpointRegrow => {
                for _ in spec.t0..spec.t1 {
                    self.scratch_steps.push(self.rng.random_range(0..dirs));
                }
                true
            }
            MoveKind::SegmentShuffle => {
                self.scratch_steps.extend_from_slice(old);
                for i in (1..self.scratch_steps.len()).rev() {
                    let j = self.rng.random_range(0..=i);
                    self.scratch_steps.swap(i, j);
                }
                true
            }
            MoveKind::LocalWiggle => {
                let d = self.params.d;
                let first = old[0];
                let last = old[old.len() - 1];
                let e = self.rng.random_range(0..dirs);
                // v = s_first + s_last - e must be a unit step
                let v = direction_vector(d, first).add(&direction_vector(d, last)).sub(&direction_vector(d, e));
                let origin = Point::origin(d).expect("valid dimension");
                match direction_between(&origin, &v) {
                    Some(c) => {
                        self.scratch_steps.extend_from_slice(old);
                        self.scratch_steps[0] = e;
                        let k = self.scratch_steps.len() - 1;
                        self.scratch_steps[k] = c;
                        true
                    }
                    None => false,
                }
            }
        }
    }

    /// Builds the candidate of `spec` without touching the chain's path.
    /// Consumes randomness exactly as [`ChainState::metropolis_step`] would
    /// for the replacement steps.
    pub fn propose(&mut self, spec: &MoveSpec) -> Proposal {
        if !self.draw_replacement(spec) {
            return Proposal { candidate: self.path.clone(), delta_range: 0, well_formed: false };
        }
        let mut candidate = self.path.clone();
        let out = candidate.splice(spec.t0, &self.scratch_steps, None, &mut self.scratch_points);
        Proposal { candidate, delta_range: out.delta, well_formed: true }
    }

    /// One Metropolis update with the given move.
    pub fn metropolis_step(&mut self, spec: &MoveSpec) -> StepOutcome {
        self.attempts += 1;
        let counter = &mut self.stats[spec.kind.index()];
        counter.proposed += 1;
        if !self.draw_replacement(spec) {
            self.stats[spec.kind.index()].auto_rejected += 1;
            return StepOutcome { kind: spec.kind, accepted: false, delta: None };
        }
        // accept iff p^Δ >= u, i.e. Δ <= ln u / ln p
        let u: f64 = 1.0 - self.rng.random::<f64>();
        let bound = u.ln() / self.ln_p;
        let max_delta = if bound >= i64::MAX as f64 { i64::MAX } else { bound.floor() as i64 };
        let out = self.path.splice(spec.t0, &self.scratch_steps, Some(max_delta), &mut self.scratch_points);
        if out.applied {
            self.stats[spec.kind.index()].accepted += 1;
            self.log_weight = self.path.range_size() as f64 * self.ln_p;
            StepOutcome { kind: spec.kind, accepted: true, delta: Some(out.delta) }
        } else {
            StepOutcome { kind: spec.kind, accepted: false, delta: None }
        }
    }

    /// Draws a move from the mix and applies one Metropolis update.
    pub fn step(&mut self) -> StepOutcome {
        match self.draw_move() {
            (_, Some(spec)) => self.metropolis_step(&spec),
            (kind, None) => {
                self.attempts += 1;
                let c = &mut self.stats[kind.index()];
                c.proposed += 1;
                c.auto_rejected += 1;
                StepOutcome { kind, accepted: false, delta: None }
            }
        }
    }

    pub fn sweep(&mut self) {
        for _ in 0..self.mix.attempts_per_sweep(self.params.n) {
            self.step();
        }
    }

    /// Text checkpoint; [`ChainState::from_checkpoint`] resumes bit-exactly.
    pub fn checkpoint(&self) -> String {
        let mut s = String::new();
        let m = &self.mix;
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:?}"));
        writeln!(s, "trapwalk-chain 1").unwrap();
        writeln!(s, "params d={} p={:?} n={} seed={}", self.params.d, self.params.p, self.params.n, self.params.seed)
            .unwrap();
        writeln!(
            s,
            "mix {:?} {:?} {:?} {:?} {} {} {} {} {}",
            m.segment_regrow,
            m.endpoint_regrow,
            m.local_wiggle,
            m.segment_shuffle,
            opt(m.segment_mean),
            opt(m.endpoint_mean),
            opt(m.shuffle_mean),
            m.segment_cap.map_or("-".to_string(), |c| c.to_string()),
            m.wiggle_max
        )
        .unwrap();
        let seed: String = self.rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        writeln!(s, "rng {} {} {}", seed, self.rng.get_stream(), self.rng.get_word_pos()).unwrap();
        writeln!(s, "attempts {}", self.attempts).unwrap();
        let counts: Vec<String> =
            self.stats.iter().map(|c| format!("{} {} {}", c.proposed, c.accepted, c.auto_rejected)).collect();
        writeln!(s, "stats {}", counts.join(" ")).unwrap();
        let start: Vec<String> = self.path.start().coords().iter().map(|c| c.to_string()).collect();
        writeln!(s, "start {}", start.join(" ")).unwrap();
        let steps: String = self.path.steps().iter().map(|&c| char::from_digit(c as u32, 16).unwrap()).collect();
        writeln!(s, "steps {steps}").unwrap();
        s
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut field = |key: &str| -> Result<(usize, Vec<String>)> {
            let (no, line) = lines.next().ok_or_else(|| Error::parse(0, format!("missing `{key}` line")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::parse(no, format!("expected `{key}`")));
            }
            Ok((no, parts.map(str::to_string).collect()))
        };
        fn num<T: std::str::FromStr>(no: usize, s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::parse(no, format!("bad number `{s}`")))
        }
        let (no, v) = field("trapwalk-chain")?;
        if v != ["1"] {
            return Err(Error::parse(no, "unsupported checkpoint version"));
        }
        let (no, v) = field("params")?;
        let kv = |k: &str| -> Result<String> {
            v.iter()
                .find_map(|t| t.strip_prefix(&format!("{k}=")).map(str::to_string))
                .ok_or_else(|| Error::parse(no, format!("missing {k}")))
        };
        let params = ModelParams::new(num(no, &kv("d")?)?, num(no, &kv("p")?)?, num(no, &kv("n")?)?, num(no, &kv("seed")?)?)?;
        let (no, v) = field("mix")?;
        if v.len() != 9 {
            return Err(Error::parse(no, "mix needs 9 fields"));
        }
        let opt = |s: &str| -> Result<Option<f64>> { if s == "-" { Ok(None) } else { num(no, s).map(Some) } };
        let mix = MoveMix {
            segment_regrow: num(no, &v[0])?,
            endpoint_regrow: num(no, &v[1])?,
            local_wiggle: num(no, &v[2])?,
            segment_shuffle: num(no, &v[3])?,
            segment_mean: opt(&v[4])?,
            endpoint_mean: opt(&v[5])?,
            shuffle_mean: opt(&v[6])?,
            segment_cap: if v[7] == "-" { None } else { Some(num(no, &v[7])?) },
            wiggle_max: num(no, &v[8])?,
        };
        mix.validate()?;
        let (no, v) = field("rng")?;
        if v.len() != 3 || v[0].len() != 64 {
            return Err(Error::parse(no, "rng needs seed, stream and word position"));
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&v[0][2 * i..2 * i + 2], 16).map_err(|_| Error::parse(no, "bad rng seed"))?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(num(no, &v[1])?);
        rng.set_word_pos(num(no, &v[2])?);
        let (no, v) = field("attempts")?;
        let attempts: u64 = num(no, v.first().map(String::as_str).unwrap_or(""))?;
        let (no, v) = field("stats")?;
        if v.len() != 12 {
            return Err(Error::parse(no, "stats needs 12 counters"));
        }
        let mut stats = [MoveCounter::default(); 4];
        for (i, c) in stats.iter_mut().enumerate() {
            *c = MoveCounter {
                proposed: num(no, &v[3 * i])?,
                accepted: num(no, &v[3 * i + 1])?,
                auto_rejected: num(no, &v[3 * i + 2])?,
            };
        }
        let (no, v) = field("start")?;
        let coords: Vec<i32> = v.iter().map(|c| num(no, c)).collect::<Result<_>>()?;
        let start = Point::new(&coords)?;
        let (no, v) = field("steps")?;
        let steps: Vec<u8> = v
            .first()
            .map(String::as_str)
            .unwrap_or("")
            .chars()
            .map(|c| c.to_digit(16).map(|x| x as u8).ok_or_else(|| Error::parse(no, "bad step code")))
            .collect::<Result<_>>()?;
        let path = WalkPath::from_steps(start, &steps)?;
        if path.len() != params.n || path.dim() != params.d {
            return Err(Error::parse(no, "path does not match params"));
        }
        Ok(Self::assemble(params, mix, path, rng, stats, attempts))
    }
}

fn confined_walk(start: Point, n: usize, radius: f64, rng: &mut ChaCha8Rng) -> Result<WalkPath> {
    if !(radius >= 1.0) {
        return Err(Error::InvalidParameter(format!("confinement radius must be >= 1, got {radius}")));
    }
    let r2 = radius * radius;
    let mut w = WalkPath::new(start);
    let mut allowed = Vec::with_capacity(2 * start.dim());
    for _ in 0..n {
        let here = w.end();
        allowed.clear();
        for dir in 0..2 * start.dim() as u8 {
            if (here.step(dir).dist2(&start) as f64) <= r2 {
                allowed.push(dir);
            }
        }
        w.push(allowed[rng.random_range(0..allowed.len())]);
    }
    Ok(w)
}

/// Observables of one retained sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub sweep: u64,
    pub range_size: usize,
    pub boundary_size: usize,
    pub center: Point,
    pub covering_radius: f64,
    pub endpoint_r2: i64,
    pub accept_rate_by_move: [f64; 4],
}

impl SampleSummary {
    pub fn of_path(path: &WalkPath, sweep: u64, stats: &MoveStats) -> Self {
        let range = path.range_set();
        let (center, covering_radius) = empirical_center(&range).expect("range is nonempty");
        SampleSummary {
            sweep,
            range_size: range.len(),
            boundary_size: external_boundary(&range).len(),
            center,
            covering_radius,
            endpoint_r2: path.end().dist2(&path.start()),
            accept_rate_by_move: [stats[0].rate(), stats[1].rate(), stats[2].rate(), stats[3].rate()],
        }
    }
}

pub const SAMPLE_CSV_HEADER: &str = "sweep,range_size,boundary_size,covering_radius,endpoint_r2,accept_rate_by_move";

/// Writes samples as CSV. `comment` lines are emitted first, prefixed `# `.
pub fn write_samples_csv<W: Write>(mut w: W, comment: &str, samples: &[SampleSummary]) -> std::io::Result<()> {
    for line in comment.lines() {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{SAMPLE_CSV_HEADER}")?;
    for s in samples {
        let rates: Vec<String> =
            MoveKind::ALL.iter().map(|k| format!("{}={:.6}", k.name(), s.accept_rate_by_move[k.index()])).collect();
        writeln!(
            w,
            "{},{},{},{:.6},{},{}",
            s.sweep,
            s.range_size,
            s.boundary_size,
            s.covering_radius,
            s.endpoint_r2,
            rates.join(";")
        )?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BurnIn {
    Sweeps { sweeps: u64 },
    /// Pilot run, then `10 τ̂` further sweeps.
    Auto { pilot_sweeps: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSchedule {
    pub mix: MoveMix,
    pub sweeps: u64,
    pub burn_in: BurnIn,
    pub thin: u64,
    pub init: InitialPath,
}

impl ChainSchedule {
    pub fn new(sweeps: u64) -> Self {
        ChainSchedule {
            mix: MoveMix::default(),
            sweeps,
            burn_in: BurnIn::Auto { pilot_sweeps: (sweeps / 10).max(100) },
            thin: 1,
            init: InitialPath::Straight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub attempts_per_sweep: u64,
    pub burn_in_sweeps: u64,
    pub pilot_tau: Option<f64>,
    /// Integrated autocorrelation time of `|range|`, in sweeps.
    pub tau_range: f64,
    pub tau_window: usize,
    /// `τ̂ > sweeps / 50`.
    pub flagged: bool,
    pub moves: MoveStats,
    pub range_mean: MeanErr,
}

#[derive(Clone, Debug)]
pub struct ChainRun {
    pub samples: Vec<SampleSummary>,
    pub diagnostics: ChainDiagnostics,
    pub final_state: ChainState,
}

/// Runs chain `stream` of `params.seed`: burn-in, then `sweeps` sweeps,
/// retaining every `thin`-th.
pub fn run_chain(params: &ModelParams, schedule: &ChainSchedule, stream: u64) -> Result<ChainRun> {
    run_chain_observed(params, schedule, stream, |_, _| {})
}

/// [`run_chain`], calling `observe` on every retained path.
pub fn run_chain_observed(
    params: &ModelParams,
    schedule: &ChainSchedule,
    stream: u64,
    mut observe: impl FnMut(&WalkPath, &SampleSummary),
) -> Result<ChainRun> {
    if schedule.thin == 0 || schedule.sweeps == 0 {
        return Err(Error::InvalidParameter("sweeps and thin must be positive".into()));
    }
    let mut state = ChainState::new(*params, schedule.mix, schedule.init, stream)?;
    let (burn_in_sweeps, pilot_tau) = match schedule.burn_in {
        BurnIn::Sweeps { sweeps } => {
            for _ in 0..sweeps {
                state.sweep();
            }
            (sweeps, None)
        }
        BurnIn::Auto { pilot_sweeps } => {
            let mut series = Vec::with_capacity(pilot_sweeps as usize);
            for _ in 0..pilot_sweeps {
                state.sweep();
                series.push(state.path().range_size() as f64);
            }
            let (tau, _) = integrated_autocorrelation(&series, 5.0);
            let extra = (10.0 * tau).ceil() as u64;
            for _ in 0..extra {
                state.sweep();
            }
            (pilot_sweeps + extra, Some(tau))
        }
    };
    state.reset_stats();
    let mut series = Vec::with_capacity(schedule.sweeps as usize);
    let mut samples = Vec::new();
    for s in 1..=schedule.sweeps {
        state.sweep();
        series.push(state.path().range_size() as f64);
        if s % schedule.thin == 0 {
            let summary = SampleSummary::of_path(state.path(), s, state.stats());
            observe(state.path(), &summary);
            samples.push(summary);
        }
    }
    let (tau, window) = integrated_autocorrelation(&series, 5.0);
    let (range_mean, _) = mean_err_correlated(&series);
    let diagnostics = ChainDiagnostics {
        attempts_per_sweep: schedule.mix.attempts_per_sweep(params.n),
        burn_in_sweeps,
        pilot_tau,
        tau_range: tau,
        tau_window: window,
        flagged: tau > schedule.sweeps as f64 / 50.0,
        moves: *state.stats(),
        range_mean,
    };
    Ok(ChainRun { samples, diagnostics, final_state: state })
}

/// Obstacles given the path: range sites are open, every other window site
/// is independently an obstacle with probability `1 - p` (keyed by
/// `params.seed`).
pub fn sample_obstacles_given_path(path: &WalkPath, params: &ModelParams, window: LatticeSet) -> Result<Environment> {
    if let Some(p) = path.range().sites().find(|p| !window.contains(p)) {
        return Err(Error::OutsideWindow(p.to_string()));
    }
    let obstacles = window.filter(|x| path.visits(x) == 0 && site_uniform(params.seed, x) < 1.0 - params.p);
    Environment::new(window, obstacles)
}
