//! Nearest-neighbour walk paths with an incrementally maintained range.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::lattice::{check_dim, expect_dim, LatticeSet, Point};

/// Visit multiset of a path: site -> number of visits.
#[derive(Clone, Debug, Default)]
pub struct RangeCounter {
    counts: FxHashMap<Point, u32>,
}

impl RangeCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a visit; returns `true` if the site is new to the range.
    #[inline]
    pub fn add(&mut self, p: Point) -> bool {
        let c = self.counts.entry(p).or_insert(0);
        *c += 1;
        *c == 1
    }

    /// Removes one visit; returns `true` if the site left the range.
    #[inline]
    pub fn remove(&mut self, p: &Point) -> bool {
        match self.counts.get_mut(p) {
            Some(c) if *c > 1 => {
                *c -= 1;
                false
            }
            Some(_) => {
                self.counts.remove(p);
                true
            }
            None => panic!("removing unvisited site {p}"),
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn visits(&self, p: &Point) -> u32 {
        self.counts.get(p).copied().unwrap_or(0)
    }

    pub fn total_visits(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }

    pub fn sites(&self) -> impl Iterator<Item = &Point> + '_ {
        self.counts.keys()
    }
}

/// A walk `S_0, ..., S_N` stored as its start, its unit steps and the derived
/// positions, plus the range multiset.
///
/// Steps are direction codes `2 * axis + sign` (sign 0 = +, 1 = -).
#[derive(Clone, Debug)]
pub struct WalkPath {
    start: Point,
    steps: Vec<u8>,
    positions: Vec<Point>,
    range: RangeCounter,
}

pub(crate) struct SpliceOutcome {
    pub delta: i64,
    pub applied: bool,
}

impl WalkPath {
    pub fn new(start: Point) -> Self {
        let mut range = RangeCounter::new();
        range.add(start);
        WalkPath { start, steps: Vec::new(), positions: vec![start], range }
    }

    pub fn from_steps(start: Point, steps: &[u8]) -> Result<Self> {
        check_dim(start.dim())?;
        let mut w = WalkPath::new(start);
        for &s in steps {
            if s as usize >= 2 * start.dim() {
                return Err(Error::InvalidParameter(format!("step code {s} out of range for d={}", start.dim())));
            }
            w.push(s);
        }
        Ok(w)
    }

    /// Path moving `n` times in direction `+e_1`.
    pub fn straight(start: Point, n: usize) -> Self {
        let mut w = WalkPath::new(start);
        for _ in 0..n {
            w.push(0);
        }
        w
    }

    /// Builds a path from explicit positions, which must be nearest neighbours.
    pub fn from_positions(positions: &[Point]) -> Result<Self> {
        let start = *positions.first().ok_or(Error::EmptySet("WalkPath::from_positions"))?;
        let mut steps = Vec::with_capacity(positions.len() - 1);
        for w in positions.windows(2) {
            expect_dim(start.dim(), w[1].dim())?;
            let dir = direction_between(&w[0], &w[1])
                .ok_or_else(|| Error::InvalidParameter(format!("{} -> {} is not a unit step", w[0], w[1])))?;
            steps.push(dir);
        }
        WalkPath::from_steps(start, &steps)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.start.dim()
    }

    /// Number of steps `N`.
    #[inline]
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    #[inline]
    pub fn start(&self) -> Point {
        self.start
    }

    #[inline]
    pub fn end(&self) -> Point {
        *self.positions.last().expect("nonempty")
    }

    #[inline]
    pub fn steps(&self) -> &[u8] {
        &self.steps
    }

    #[inline]
    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    #[inline]
    pub fn range_size(&self) -> usize {
        self.range.size()
    }

    #[inline]
    pub fn visits(&self, p: &Point) -> u32 {
        self.range.visits(p)
    }

    pub fn range(&self) -> &RangeCounter {
        &self.range
    }

    pub fn range_set(&self) -> LatticeSet {
        LatticeSet::from_points(self.dim(), self.range.sites().copied()).expect("consistent dimension")
    }

    /// `|S_[0,N]|` recomputed from the positions alone.
    pub fn recount_range(&self) -> usize {
        let mut v = self.positions.clone();
        v.sort_unstable();
        v.dedup();
        v.len()
    }

    #[inline]
    pub fn push(&mut self, dir: u8) {
        let next = self.end().step(dir);
        self.steps.push(dir);
        self.positions.push(next);
        self.range.add(next);
    }

    #[inline]
    pub fn pop(&mut self) -> Option<u8> {
        let dir = self.steps.pop()?;
        let p = self.positions.pop().expect("positions outnumber steps");
        self.range.remove(&p);
        Some(dir)
    }

    /// Replaces `steps[t0 .. t0 + new_steps.len()]`. Positions after the
    /// window are translated rigidly by the displacement of the window end.
    ///
    /// The range is updated by removing every moved position first and then
    /// adding the new ones, so the running size change is nondecreasing
    /// during the second pass. If it exceeds `max_delta` the splice is
    /// undone and reported as not applied.
    pub(crate) fn splice(
        &mut self,
        t0: usize,
        new_steps: &[u8],
        max_delta: Option<i64>,
        scratch: &mut Vec<Point>,
    ) -> SpliceOutcome {
        let n = self.steps.len();
        let t1 = t0 + new_steps.len();
        debug_assert!(t1 <= n);
        scratch.clear();
        let mut cur = self.positions[t0];
        for &s in new_steps {
            cur = cur.step(s);
            scratch.push(cur);
        }
        let shift = cur.sub(&self.positions[t1]);
        let moved_end = if shift.coords().iter().all(|&c| c == 0) { t1 } else { n };
        if moved_end == t1 && new_steps == &self.steps[t0..t1] {
            return SpliceOutcome { delta: 0, applied: true };
        }
        let new_pos = |i: usize, scratch: &Vec<Point>, old: &Point| -> Point {
            if i <= t1 {
                scratch[i - t0 - 1]
            } else {
                old.add(&shift)
            }
        };

        let size0 = self.range.size() as i64;
        for i in t0 + 1..=moved_end {
            self.range.remove(&self.positions[i]);
        }
        let mut added = t0;
        let mut rejected = false;
        for i in t0 + 1..=moved_end {
            let p = new_pos(i, scratch, &self.positions[i]);
            self.range.add(p);
            added = i;
            if let Some(m) = max_delta {
                if self.range.size() as i64 - size0 > m {
                    rejected = true;
                    break;
                }
            }
        }
        if rejected {
            let delta = self.range.size() as i64 - size0;
            for i in t0 + 1..=added {
                let p = new_pos(i, scratch, &self.positions[i]);
                self.range.remove(&p);
            }
            for i in t0 + 1..=moved_end {
                self.range.add(self.positions[i]);
            }
            return SpliceOutcome { delta, applied: false };
        }
        for i in t0 + 1..=moved_end {
            let p = new_pos(i, scratch, &self.positions[i]);
            self.positions[i] = p;
        }
        self.steps[t0..t1].copy_from_slice(new_steps);
        SpliceOutcome { delta: self.range.size() as i64 - size0, applied: true }
    }
}

/// Direction code of the unit step `a -> b`, if it is one.
pub fn direction_between(a: &Point, b: &Point) -> Option<u8> {
    let diff = b.sub(a);
    let mut dir = None;
    for (axis, &c) in diff.coords().iter().enumerate() {
        match c {
            0 => {}
            1 if dir.is_none() => dir = Some(2 * axis as u8),
            -1 if dir.is_none() => dir = Some(2 * axis as u8 + 1),
            _ => return None,
        }
    }
    dir
}

/// Unit vector of a direction code.
pub fn direction_vector(dim: usize, dir: u8) -> Point {
    Point::origin(dim).expect("valid dimension").step(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_pop_keeps_multiset() {
        let mut w = WalkPath::new(Point::xy(0, 0));
        w.push(0);
        w.push(1);
        assert_eq!(w.range_size(), 2);
        assert_eq!(w.visits(&Point::xy(0, 0)), 2);
        assert_eq!(w.range().total_visits(), 3);
        w.pop();
        assert_eq!(w.range_size(), 2);
        assert_eq!(w.visits(&Point::xy(0, 0)), 1);
        w.pop();
        assert_eq!(w.range_size(), 1);
    }

    #[test]
    fn from_positions_rejects_jumps() {
        assert!(WalkPath::from_positions(&[Point::xy(0, 0), Point::xy(1, 1)]).is_err());
        let w = WalkPath::from_positions(&[Point::xy(0, 0), Point::xy(0, -1), Point::xy(1, -1)]).unwrap();
        assert_eq!(w.steps(), &[3, 0]);
    }

    #[test]
    fn splice_translates_suffix() {
        let mut w = WalkPath::straight(Point::xy(0, 0), 4);
        let mut scratch = Vec::new();
        // change the first step from +x to +y: the suffix shifts by (-1, 1)
        let out = w.splice(0, &[2], None, &mut scratch);
        assert!(out.applied);
        assert_eq!(w.positions()[4], Point::xy(3, 1));
        assert_eq!(out.delta, 0);
        assert_eq!(w.range_size(), w.recount_range());
    }

    #[test]
    fn rejected_splice_restores_state() {
        let mut w = WalkPath::from_steps(Point::xy(0, 0), &[0, 1, 0, 1]).unwrap();
        let before = w.positions().to_vec();
        let mut scratch = Vec::new();
        let out = w.splice(1, &[0, 0, 0], Some(0), &mut scratch);
        assert!(!out.applied);
        assert_eq!(w.positions(), &before[..]);
        assert_eq!(w.range_size(), 2);
        assert_eq!(w.range_size(), w.recount_range());
    }
}
