//! Geometry on Z^d: points, finite site sets, Euclidean lattice balls,
//! external boundaries, nearest-neighbour components and a lattice 1-center.
//!
//! Balls are always `{y : |y - c| <= r}` in the Euclidean norm. Squared
//! distances between lattice points are exact integers, so every membership
//! test reduces to comparing an `i64` with `r^2`.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};

use indexmap::IndexSet;
use rustc_hash::{FxBuildHasher, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 6;

/// A site of Z^d, `2 <= d <= MAX_DIM`. Unused trailing coordinates are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point {
    coords: [i32; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn new(coords: &[i32]) -> Result<Self> {
        check_dim(coords.len())?;
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Point { coords: c, dim: coords.len() as u8 })
    }

    pub fn origin(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Point { coords: [0; MAX_DIM], dim: dim as u8 })
    }

    /// Convenience constructor for the planar case.
    pub fn xy(x: i32, y: i32) -> Self {
        let mut c = [0; MAX_DIM];
        c[0] = x;
        c[1] = y;
        Point { coords: c, dim: 2 }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn add(&self, other: &Point) -> Point {
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] += other.coords[i];
        }
        out
    }

    #[inline]
    pub fn sub(&self, other: &Point) -> Point {
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] -= other.coords[i];
        }
        out
    }

    /// The neighbour in lattice direction `dir`, encoded as `2 * axis + (0 for +, 1 for -)`.
    #[inline]
    pub fn step(&self, dir: u8) -> Point {
        let mut out = *self;
        let axis = (dir >> 1) as usize;
        if dir & 1 == 0 {
            out.coords[axis] += 1;
        } else {
            out.coords[axis] -= 1;
        }
        out
    }

    /// All `2d` nearest neighbours, in direction order.
    pub fn neighbors(&self) -> impl Iterator<Item = Point> + '_ {
        (0..2 * self.dim() as u8).map(move |dir| self.step(dir))
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> i64 {
        (0..self.dim())
            .map(|i| {
                let d = (self.coords[i] - other.coords[i]) as i64;
                d * d
            })
            .sum()
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        (self.dist2(other) as f64).sqrt()
    }

    #[inline]
    pub fn l1(&self, other: &Point) -> i64 {
        (0..self.dim())
            .map(|i| ((self.coords[i] - other.coords[i]) as i64).abs())
            .sum()
    }

    /// Parity class of the bipartite lattice: `true` for even coordinate sum.
    #[inline]
    pub fn is_even(&self) -> bool {
        self.coords().iter().map(|&c| c as i64).sum::<i64>().rem_euclid(2) == 0
    }
}

impl std::ops::Index<usize> for Point {
    type Output = i32;
    fn index(&self, i: usize) -> &i32 {
        &self.coords()[i]
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coords().cmp(other.coords()).then(self.dim.cmp(&other.dim))
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i32>::deserialize(d)?;
        Point::new(&v).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

pub(crate) fn expect_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `|y - c|^2 <= r^2`, with a few ulps of slack so radii such as `sqrt(5)`
/// include the points they were computed from.
#[inline]
pub fn within_radius(dist2: i64, radius: f64) -> bool {
    (dist2 as f64) <= radius * radius * (1.0 + 4.0 * f64::EPSILON)
}

/// Visits every point of the box `[lo, hi]` in lexicographic order.
pub fn for_each_in_box(lo: &Point, hi: &Point, mut f: impl FnMut(Point)) {
    let d = lo.dim();
    if (0..d).any(|i| lo[i] > hi[i]) {
        return;
    }
    let mut cur = *lo;
    loop {
        f(cur);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if cur.coords[axis] < hi.coords[axis] {
                cur.coords[axis] += 1;
                break;
            }
            cur.coords[axis] = lo.coords[axis];
        }
    }
}

/// A finite subset of Z^d. Members are kept in lexicographic order, which
/// doubles as a stable site indexing for matrix assembly.
#[derive(Clone)]
pub struct LatticeSet {
    dim: usize,
    members: IndexSet<Point, FxBuildHasher>,
}

impl LatticeSet {
    pub fn empty(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(LatticeSet { dim, members: IndexSet::default() })
    }

    pub fn from_points<I: IntoIterator<Item = Point>>(dim: usize, points: I) -> Result<Self> {
        check_dim(dim)?;
        let mut v: Vec<Point> = points.into_iter().collect();
        for p in &v {
            expect_dim(dim, p.dim())?;
        }
        v.sort_unstable();
        v.dedup();
        Ok(Self::from_sorted(dim, v))
    }

    /// `points` must be strictly increasing and of dimension `dim`.
    pub(crate) fn from_sorted(dim: usize, points: Vec<Point>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        let mut members = IndexSet::with_capacity_and_hasher(points.len(), FxBuildHasher);
        members.extend(points);
        LatticeSet { dim, members }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        self.members.contains(p)
    }

    /// Position of `p` in lexicographic order.
    #[inline]
    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.members.get_index_of(p)
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point {
        self.members[i]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Point> + '_ {
        self.members.iter()
    }

    pub fn to_vec(&self) -> Vec<Point> {
        self.members.iter().copied().collect()
    }

    pub fn union(&self, other: &LatticeSet) -> Result<LatticeSet> {
        expect_dim(self.dim, other.dim)?;
        LatticeSet::from_points(self.dim, self.iter().chain(other.iter()).copied())
    }

    pub fn difference(&self, other: &LatticeSet) -> LatticeSet {
        let v = self.iter().filter(|p| !other.contains(p)).copied().collect();
        LatticeSet::from_sorted(self.dim, v)
    }

    pub fn intersection(&self, other: &LatticeSet) -> LatticeSet {
        let v = self.iter().filter(|p| other.contains(p)).copied().collect();
        LatticeSet::from_sorted(self.dim, v)
    }

    pub fn filter(&self, mut keep: impl FnMut(&Point) -> bool) -> LatticeSet {
        let v = self.iter().filter(|p| keep(p)).copied().collect();
        LatticeSet::from_sorted(self.dim, v)
    }

    pub fn is_subset(&self, other: &LatticeSet) -> bool {
        self.iter().all(|p| other.contains(p))
    }

    pub fn translate(&self, by: &Point) -> Result<LatticeSet> {
        expect_dim(self.dim, by.dim())?;
        // translation preserves lexicographic order
        Ok(LatticeSet::from_sorted(self.dim, self.iter().map(|p| p.add(by)).collect()))
    }

    /// Coordinate-wise minimum and maximum, or `None` for the empty set.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let first = *self.members.first()?;
        let (mut lo, mut hi) = (first, first);
        for p in self.iter() {
            for i in 0..self.dim {
                lo.coords[i] = lo.coords[i].min(p.coords[i]);
                hi.coords[i] = hi.coords[i].max(p.coords[i]);
            }
        }
        Some((lo, hi))
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "d={} n={}", self.dim, self.len())?;
        let mut line = String::new();
        for p in self.iter() {
            line.clear();
            for (i, c) in p.coords().iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&c.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Line-oriented text form: `d=<dim> n=<count>` then one point per line.
    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<LatticeSet> {
        let mut lines = r.lines().enumerate();
        let (dim, n) = loop {
            let (no, line) = lines.next().ok_or_else(|| Error::parse(0, "missing header"))?;
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            break parse_header(t).ok_or_else(|| Error::parse(no + 1, "expected `d=<dim> n=<count>`"))?;
        };
        check_dim(dim)?;
        let mut pts = Vec::with_capacity(n);
        for (no, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let coords = line
                .split_whitespace()
                .map(|s| s.parse::<i32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(no + 1, e.to_string()))?;
            if coords.len() != dim {
                return Err(Error::parse(no + 1, format!("expected {dim} coordinates")));
            }
            pts.push(Point::new(&coords)?);
        }
        if pts.len() != n {
            return Err(Error::parse(0, format!("header announces {n} points, found {}", pts.len())));
        }
        let set = LatticeSet::from_points(dim, pts)?;
        if set.len() != n {
            return Err(Error::parse(0, "duplicate points"));
        }
        Ok(set)
    }

    pub fn from_text(s: &str) -> Result<LatticeSet> {
        Self::read_text(s.as_bytes())
    }
}

fn parse_header(t: &str) -> Option<(usize, usize)> {
    let mut it = t.split_whitespace();
    let d = it.next()?.strip_prefix("d=")?.parse().ok()?;
    let n = it.next()?.strip_prefix("n=")?.parse().ok()?;
    if it.next().is_some() {
        return None;
    }
    Some((d, n))
}

impl PartialEq for LatticeSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.len() == other.len() && self.iter().eq(other.iter())
    }
}

impl Eq for LatticeSet {}

impl fmt::Debug for LatticeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Euclidean ball `B(center, radius)` realised on the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Point,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius must be finite and >= 0, got {radius}")));
        }
        Ok(BallSpec { center, radius })
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        within_radius(self.center.dist2(p), self.radius)
    }

    /// Membership in the closure `B ∪ ∂B`.
    pub fn closure_contains(&self, p: &Point) -> bool {
        self.contains(p) || p.neighbors().any(|q| self.contains(&q))
    }
}

pub fn ball_points(spec: &BallSpec) -> LatticeSet {
    let d = spec.center.dim();
    let reach = spec.radius.floor() as i32;
    let mut lo = spec.center;
    let mut hi = spec.center;
    for i in 0..d {
        lo.coords[i] -= reach;
        hi.coords[i] += reach;
    }
    let mut pts = Vec::new();
    for_each_in_box(&lo, &hi, |p| {
        if spec.contains(&p) {
            pts.push(p);
        }
    });
    LatticeSet::from_sorted(d, pts)
}

/// `B̄(c, r) = B(c, r) ∪ ∂B(c, r)`.
pub fn closed_ball_points(spec: &BallSpec) -> LatticeSet {
    let ball = ball_points(spec);
    let boundary = external_boundary(&ball);
    ball.union(&boundary).expect("same dimension")
}

/// `B(c, outer) \ B̄(c, inner)`.
pub fn annulus_points(center: Point, inner: f64, outer: f64) -> Result<LatticeSet> {
    let outer_ball = ball_points(&BallSpec::new(center, outer)?);
    let inner_closed = BallSpec::new(center, inner)?;
    Ok(outer_ball.filter(|p| !inner_closed.closure_contains(p)))
}

/// `∂A = {y ∉ A : |y - x| = 1 for some x ∈ A}`.
pub fn external_boundary(a: &LatticeSet) -> LatticeSet {
    let mut out = Vec::new();
    for p in a.iter() {
        for q in p.neighbors() {
            if !a.contains(&q) {
                out.push(q);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    LatticeSet::from_sorted(a.dim(), out)
}

/// Nearest-neighbour component of `a` containing `seed`; empty if `seed ∉ a`.
pub fn connected_component(a: &LatticeSet, seed: &Point) -> LatticeSet {
    let Some(start) = a.index_of(seed) else {
        return LatticeSet::from_sorted(a.dim(), Vec::new());
    };
    let mut seen = vec![false; a.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut found = Vec::new();
    while let Some(i) = queue.pop_front() {
        let p = a.point(i);
        found.push(p);
        for q in p.neighbors() {
            if let Some(j) = a.index_of(&q) {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    found.sort_unstable();
    LatticeSet::from_sorted(a.dim(), found)
}

/// Number of nearest-neighbour components.
pub fn component_count(a: &LatticeSet) -> usize {
    let mut seen = vec![false; a.len()];
    let mut count = 0;
    for start in 0..a.len() {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for q in a.point(i).neighbors() {
                if let Some(j) = a.index_of(&q) {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    count
}

pub fn is_connected(a: &LatticeSet) -> bool {
    !a.is_empty() && component_count(a) == 1
}

// Candidate-box size times surface size above which the 1-center switches
// from exhaustive search to descent.
const EXHAUSTIVE_BUDGET: u64 = 20_000_000;

/// Lattice point minimising the maximal Euclidean distance to `a`, together
/// with that covering radius. Ties go to the lexicographically smallest point.
pub fn empirical_center(a: &LatticeSet) -> Result<(Point, f64)> {
    let (lo, hi) = a.bounding_box().ok_or(Error::EmptySet("empirical_center"))?;
    // The farthest member from any candidate always has a neighbour outside `a`.
    let surface: Vec<Point> =
        a.iter().filter(|p| p.neighbors().any(|q| !a.contains(&q))).copied().collect();
    let volume: u64 = (0..a.dim()).map(|i| (hi[i] - lo[i] + 1) as u64).product();
    let (center, r2) = if volume.saturating_mul(surface.len() as u64) <= EXHAUSTIVE_BUDGET {
        best_in_box(&surface, &lo, &hi, None)
    } else {
        descend(&surface, &lo, &hi)
    };
    Ok((center, (r2 as f64).sqrt()))
}

fn max_dist2(c: &Point, pts: &[Point], stop_above: i64) -> i64 {
    let mut m = 0;
    for p in pts {
        m = m.max(c.dist2(p));
        if m > stop_above {
            break;
        }
    }
    m
}

fn best_in_box(pts: &[Point], lo: &Point, hi: &Point, seed: Option<(Point, i64)>) -> (Point, i64) {
    let mut best = seed;
    for_each_in_box(lo, hi, |c| {
        let bound = best.map_or(i64::MAX, |(_, b)| b);
        let m = max_dist2(&c, pts, bound);
        match best {
            Some((bp, b)) if m > b || (m == b && bp <= c) => {}
            _ => best = Some((c, m)),
        }
    });
    best.expect("nonempty box")
}

fn descend(pts: &[Point], lo: &Point, hi: &Point) -> (Point, i64) {
    let d = lo.dim();
    let mut sum = [0f64; MAX_DIM];
    for p in pts {
        for (i, s) in sum.iter_mut().enumerate().take(d) {
            *s += p[i] as f64;
        }
    }
    let coords: Vec<i32> = (0..d).map(|i| (sum[i] / pts.len() as f64).round() as i32).collect();
    let mut cur = Point::new(&coords).expect("valid dim");
    let mut cur_val = max_dist2(&cur, pts, i64::MAX);
    let mut offsets_lo = cur;
    let mut offsets_hi = cur;
    loop {
        for i in 0..d {
            offsets_lo.coords[i] = (cur[i] - 1).max(lo[i]);
            offsets_hi.coords[i] = (cur[i] + 1).min(hi[i]);
        }
        let (cand, val) = best_in_box(pts, &offsets_lo, &offsets_hi, None);
        if val < cur_val {
            cur = cand;
            cur_val = val;
        } else {
            break;
        }
    }
    for i in 0..d {
        offsets_lo.coords[i] = (cur[i] - 2).max(lo[i]);
        offsets_hi.coords[i] = (cur[i] + 2).min(hi[i]);
    }
    best_in_box(pts, &offsets_lo, &offsets_hi, None)
}

/// Eden growth: adds `extra` sites to `base`, each drawn uniformly from the
/// external boundary intersected with `bound`. Stops early if that is empty.
pub fn grow_animal<R: rand::Rng + ?Sized>(base: &LatticeSet, bound: &LatticeSet, extra: usize, rng: &mut R) -> LatticeSet {
    let mut members: Vec<Point> = base.to_vec();
    let mut inside: FxHashSet<Point> = members.iter().copied().collect();
    let mut frontier: Vec<Point> = external_boundary(base).iter().filter(|p| bound.contains(p)).copied().collect();
    let mut in_frontier: FxHashSet<Point> = frontier.iter().copied().collect();
    for _ in 0..extra {
        if frontier.is_empty() {
            break;
        }
        let p = frontier.swap_remove(rng.random_range(0..frontier.len()));
        in_frontier.remove(&p);
        inside.insert(p);
        members.push(p);
        for q in p.neighbors() {
            if bound.contains(&q) && !inside.contains(&q) && in_frontier.insert(q) {
                frontier.push(q);
            }
        }
    }
    LatticeSet::from_points(base.dim(), members).expect("points share the dimension")
}

/// Volume of the Euclidean unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set2(pts: &[(i32, i32)]) -> LatticeSet {
        LatticeSet::from_points(2, pts.iter().map(|&(x, y)| Point::xy(x, y))).unwrap()
    }

    #[test]
    fn unit_ball_is_plus_shape() {
        let b = ball_points(&BallSpec::new(Point::xy(0, 0), 1.0).unwrap());
        assert_eq!(b, set2(&[(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]));
        assert_eq!(b.len(), 5);
    }

    #[test]
    fn zero_radius_ball() {
        let b = ball_points(&BallSpec::new(Point::xy(3, -2), 0.0).unwrap());
        assert_eq!(b, set2(&[(3, -2)]));
    }

    #[test]
    fn radius_two_ball_matches_grid_count() {
        let mut count = 0;
        for x in -2..=2 {
            for y in -2..=2 {
                if x * x + y * y <= 4 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 13);
        assert_eq!(ball_points(&BallSpec::new(Point::xy(0, 0), 2.0).unwrap()).len(), count);
    }

    #[test]
    fn negative_radius_rejected() {
        assert!(BallSpec::new(Point::xy(0, 0), -1.0).is_err());
        assert!(BallSpec::new(Point::xy(0, 0), f64::NAN).is_err());
    }

    #[test]
    fn ball_volume_ratio_at_radius_fifty() {
        for d in [2usize, 3] {
            let b = ball_points(&BallSpec::new(Point::origin(d).unwrap(), 50.0).unwrap());
            let ratio = b.len() as f64 / (unit_ball_volume(d) * 50f64.powi(d as i32));
            assert!((ratio - 1.0).abs() <= 0.05, "d={d} ratio={ratio}");
        }
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_of_single_site() {
        let b = external_boundary(&set2(&[(0, 0)]));
        assert_eq!(b, set2(&[(1, 0), (-1, 0), (0, 1), (0, -1)]));
    }

    #[test]
    fn boundary_of_empty_set() {
        assert!(external_boundary(&LatticeSet::empty(2).unwrap()).is_empty());
    }

    #[test]
    fn boundary_of_plus_shape() {
        let plus = ball_points(&BallSpec::new(Point::xy(0, 0), 1.0).unwrap());
        let b = external_boundary(&plus);
        // brute force: scan a window for outside sites adjacent to the plus
        let mut expect = Vec::new();
        for x in -3..=3 {
            for y in -3..=3 {
                let p = Point::xy(x, y);
                if !plus.contains(&p) && plus.iter().any(|q| q.dist2(&p) == 1) {
                    expect.push(p);
                }
            }
        }
        assert_eq!(b, LatticeSet::from_points(2, expect).unwrap());
        assert_eq!(b.len(), 8);
        assert!(b.iter().all(|p| {
            let r2 = p.dist2(&Point::xy(0, 0));
            r2 == 2 || r2 == 4
        }));
    }

    #[test]
    fn component_examples() {
        let a = set2(&[(0, 0), (1, 0), (5, 5)]);
        assert_eq!(connected_component(&a, &Point::xy(0, 0)), set2(&[(0, 0), (1, 0)]));
        assert!(connected_component(&a, &Point::xy(2, 2)).is_empty());
        assert_eq!(component_count(&a), 2);

        let ball = ball_points(&BallSpec::new(Point::xy(0, 0), 3.0).unwrap());
        let nbrs = set2(&[(1, 0), (-1, 0), (0, 1), (0, -1)]);
        let punctured = ball.difference(&nbrs);
        assert_eq!(connected_component(&punctured, &Point::xy(0, 0)), set2(&[(0, 0)]));
    }

    #[test]
    fn center_examples() {
        let (c, r) = empirical_center(&set2(&[(0, 0)])).unwrap();
        assert_eq!((c, r), (Point::xy(0, 0), 0.0));
        let (c, r) = empirical_center(&set2(&[(0, 0), (2, 0)])).unwrap();
        assert_eq!((c, r), (Point::xy(1, 0), 1.0));
        let ball = ball_points(&BallSpec::new(Point::xy(3, -1), 4.0).unwrap());
        let (c, r) = empirical_center(&ball).unwrap();
        assert_eq!((c, r), (Point::xy(3, -1), 4.0));
        assert!(matches!(empirical_center(&LatticeSet::empty(2).unwrap()), Err(Error::EmptySet(_))));
    }

    #[test]
    fn center_ties_go_lexicographic() {
        // {(0,0),(1,0)}: candidates (0,0) and (1,0) both cover with radius 1
        let (c, r) = empirical_center(&set2(&[(0, 0), (1, 0)])).unwrap();
        assert_eq!((c, r), (Point::xy(0, 0), 1.0));
    }

    #[test]
    fn descent_agrees_on_large_ball() {
        let ball = ball_points(&BallSpec::new(Point::xy(7, 4), 60.0).unwrap());
        let surface: Vec<Point> =
            ball.iter().filter(|p| p.neighbors().any(|q| !ball.contains(&q))).copied().collect();
        let (lo, hi) = ball.bounding_box().unwrap();
        let (c, r2) = descend(&surface, &lo, &hi);
        assert_eq!(c, Point::xy(7, 4));
        assert_eq!(r2, 3600);
    }

    #[test]
    fn text_round_trip_and_header() {
        let a = set2(&[(3, -1), (0, 0), (-2, 7)]);
        let text = a.to_text();
        assert_eq!(text, "d=2 n=3\n-2 7\n0 0\n3 -1\n");
        let b = LatticeSet::from_text(&text).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.to_text(), text);
    }

    #[test]
    fn text_rejects_bad_input() {
        assert!(LatticeSet::from_text("d=2 n=2\n0 0\n").is_err());
        assert!(LatticeSet::from_text("d=2 n=1\n0 0 0\n").is_err());
        assert!(LatticeSet::from_text("n=1 d=2\n0 0\n").is_err());
        assert!(LatticeSet::from_text("d=2 n=2\n0 0\n0 0\n").is_err());
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let r = LatticeSet::from_points(2, [Point::xy(0, 0), Point::new(&[0, 0, 0]).unwrap()]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
        assert!(Point::new(&[1]).is_err());
        assert!(Point::new(&[0; MAX_DIM + 1]).is_err());
    }

    #[test]
    fn annulus_excludes_closed_inner_ball() {
        let ann = annulus_points(Point::xy(0, 0), 2.0, 5.0).unwrap();
        let inner = closed_ball_points(&BallSpec::new(Point::xy(0, 0), 2.0).unwrap());
        assert!(ann.iter().all(|p| !inner.contains(p) && p.dist2(&Point::xy(0, 0)) <= 25));
        assert_eq!(ann.len() + inner.len(), ball_points(&BallSpec::new(Point::xy(0, 0), 5.0).unwrap()).len());
    }
}
