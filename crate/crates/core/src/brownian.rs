//! Discretised Brownian paths with conditionally exact bridge refinement,
//! and grid maximisation of path-plus-drift objectives.
//!
//! A path lives on a coarse time grid containing `t = 0`, where it is pinned
//! to zero. Its variance clock `s(t)` may be nonlinear, so the same machinery
//! serves the Chernoff process (`s(t) = t`) and Brownian motion composed with
//! a distribution function. Refinement splits an interval into eight equal
//! time steps and fills them by a Brownian bridge in clock time. Infill noise
//! is keyed by `(path key, level, interval)`, so a refined value never
//! depends on which drift asked for it first.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::rng::{self, Stream};

/// Number of sub-steps each refinement level puts in one interval.
pub const SUBDIVISIONS: usize = 8;

type Infill = [f64; SUBDIVISIONS + 1];

pub struct Path<C: Fn(f64) -> f64> {
    times: Vec<f64>,
    clock: C,
    values: Vec<f64>,
    key: u64,
    noisy: bool,
    infill: HashMap<(u32, usize), Infill>,
}

impl<C: Fn(f64) -> f64> Path<C> {
    /// Brownian motion in clock time, started from zero at `t = 0`.
    ///
    /// `times` must be strictly increasing and contain `0.0`.
    pub fn sample<R: Rng + ?Sized>(times: Vec<f64>, clock: C, key: u64, rng: &mut R) -> Self {
        let anchor = anchor_index(&times);
        let mut values = vec![0.0; times.len()];
        let clocks: Vec<f64> = times.iter().map(|&t| clock(t)).collect();
        for i in anchor..times.len() - 1 {
            let z: f64 = rng.sample(StandardNormal);
            values[i + 1] = values[i] + (clocks[i + 1] - clocks[i]).max(0.0).sqrt() * z;
        }
        for i in (1..=anchor).rev() {
            let z: f64 = rng.sample(StandardNormal);
            values[i - 1] = values[i] + (clocks[i] - clocks[i - 1]).max(0.0).sqrt() * z;
        }
        Self {
            times,
            clock,
            values,
            key,
            noisy: true,
            infill: HashMap::new(),
        }
    }

    /// The identically zero path, for checking drift-only behaviour.
    pub fn zero(times: Vec<f64>, clock: C) -> Self {
        anchor_index(&times);
        let values = vec![0.0; times.len()];
        Self {
            times,
            clock,
            values,
            key: 0,
            noisy: false,
            infill: HashMap::new(),
        }
    }

    /// Number of coarse grid points.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn coarse_times(&self) -> &[f64] {
        &self.times
    }

    pub fn coarse_values(&self) -> &[f64] {
        &self.values
    }

    /// Number of grid points at refinement `level` (0 is the coarse grid).
    pub fn level_len(&self, level: u32) -> usize {
        (self.len() - 1) * SUBDIVISIONS.pow(level) + 1
    }

    pub fn time(&self, level: u32, idx: usize) -> f64 {
        if level == 0 {
            return self.times[idx];
        }
        let (p, s) = (idx / SUBDIVISIONS, idx % SUBDIVISIONS);
        let t0 = self.time(level - 1, p);
        if s == 0 {
            return t0;
        }
        let t1 = self.time(level - 1, p + 1);
        t0 + (t1 - t0) * s as f64 / SUBDIVISIONS as f64
    }

    pub fn value(&mut self, level: u32, idx: usize) -> f64 {
        if level == 0 {
            return self.values[idx];
        }
        let (p, s) = (idx / SUBDIVISIONS, idx % SUBDIVISIONS);
        if s == 0 {
            return self.value(level - 1, p);
        }
        self.fill(level, p)[s]
    }

    fn fill(&mut self, level: u32, p: usize) -> Infill {
        if let Some(v) = self.infill.get(&(level, p)) {
            return *v;
        }
        let w0 = self.value(level - 1, p);
        let w1 = self.value(level - 1, p + 1);
        let base = p * SUBDIVISIONS;
        let mut s = [0.0; SUBDIVISIONS + 1];
        for (j, sj) in s.iter_mut().enumerate() {
            *sj = (self.clock)(self.time(level, base + j));
        }
        let mut out = [0.0; SUBDIVISIONS + 1];
        out[0] = w0;
        out[SUBDIVISIONS] = w1;
        let mut noise = self
            .noisy
            .then(|| Stream::seed_from_u64(rng::key(&[self.key, level as u64, p as u64])));
        for j in 1..SUBDIVISIONS {
            let prev = out[j - 1];
            let rest = s[SUBDIVISIONS] - s[j - 1];
            let ds = s[j] - s[j - 1];
            let (mean, var) = if rest > 0.0 {
                (
                    prev + (w1 - prev) * ds / rest,
                    ds * (s[SUBDIVISIONS] - s[j]) / rest,
                )
            } else {
                (prev, 0.0)
            };
            let z: f64 = match noise.as_mut() {
                Some(r) => r.sample(StandardNormal),
                None => 0.0,
            };
            out[j] = mean + var.max(0.0).sqrt() * z;
        }
        self.infill.insert((level, p), out);
        out
    }
}

fn anchor_index(times: &[f64]) -> usize {
    assert!(
        times.windows(2).all(|w| w[0] < w[1]),
        "path grid must increase strictly"
    );
    times
        .iter()
        .position(|&t| t == 0.0)
        .expect("path grid must contain t = 0")
}

/// Uniform grid `{i h}` covering `[lo, hi]`, anchored at zero and extended by
/// a shorter final step so both endpoints are hit exactly.
pub fn anchored_grid(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    assert!(lo <= 0.0 && hi >= 0.0 && h > 0.0);
    let mut left = Vec::new();
    let mut i = 1usize;
    loop {
        let t = -(i as f64) * h;
        if t <= lo + 1e-9 * h {
            if lo < 0.0 {
                left.push(lo);
            }
            break;
        }
        left.push(t);
        i += 1;
    }
    left.reverse();
    left.push(0.0);
    let mut i = 1usize;
    loop {
        let t = i as f64 * h;
        if t >= hi - 1e-9 * h {
            if hi > 0.0 {
                left.push(hi);
            }
            break;
        }
        left.push(t);
        i += 1;
    }
    left
}

/// Grid maximiser of `path + drift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximiser {
    pub t: f64,
    pub value: f64,
    /// Coarse-grid index the refinement started from.
    pub coarse_index: usize,
    /// The coarse maximiser sat on the edge of the grid.
    pub at_boundary: bool,
}

/// Rightmost maximiser of `path + drift` over coarse indices `lo..=hi`.
pub fn coarse_argmax<C, D>(path: &Path<C>, drift: &D, lo: usize, hi: usize) -> usize
where
    C: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut best = f64::NEG_INFINITY;
    let mut arg = lo;
    for i in lo..=hi {
        let v = path.values[i] + drift(path.times[i]);
        if v >= best {
            best = v;
            arg = i;
        }
    }
    arg
}

/// Refine a coarse maximiser `depth` times, each time rescanning `window`
/// intervals either side of the incumbent on the next finer grid.
pub fn refine<C, D>(path: &mut Path<C>, drift: &D, coarse: usize, depth: u32, window: usize) -> Maximiser
where
    C: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let at_boundary = coarse == 0 || coarse + 1 == path.len();
    let mut best = coarse;
    for level in 1..=depth {
        let lo = best.saturating_sub(window) * SUBDIVISIONS;
        let hi = ((best + window) * SUBDIVISIONS).min(path.level_len(level) - 1);
        let mut top = f64::NEG_INFINITY;
        for idx in lo..=hi {
            let v = path.value(level, idx) + drift(path.time(level, idx));
            if v >= top {
                top = v;
                best = idx;
            }
        }
    }
    let t = path.time(depth, best);
    Maximiser {
        t,
        value: path.value(depth, best) + drift(t),
        coarse_index: coarse,
        at_boundary,
    }
}

/// Maximisers of `y_i + 2 c t_i` for many slopes `c` at once, through the
/// upper hull of the points `(t_i, y_i)`.
///
/// With `y_i = W(t_i) - t_i^2` this is the coarse argmax of
/// `W(t) - (t - c)^2` for every drift centre `c`.
#[derive(Debug, Clone)]
pub struct ParabolaArgmax {
    vertices: Vec<usize>,
    slopes: Vec<f64>,
}

impl ParabolaArgmax {
    pub fn new(t: &[f64], y: &[f64]) -> Self {
        let mut hull: Vec<usize> = Vec::with_capacity(64);
        for i in 0..t.len() {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                // Drop b unless it lies strictly above the chord a -> i.
                let cross = (t[b] - t[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (t[i] - t[a]);
                if cross < 0.0 {
                    break;
                }
                hull.pop();
            }
            hull.push(i);
        }
        let slopes = hull
            .windows(2)
            .map(|w| (y[w[1]] - y[w[0]]) / (t[w[1]] - t[w[0]]))
            .collect();
        Self {
            vertices: hull,
            slopes,
        }
    }

    /// Index maximising `y_i + 2 c t_i`; ties go right.
    pub fn query(&self, c: f64) -> usize {
        let j = self.slopes.partition_point(|&s| s >= -2.0 * c);
        self.vertices[j]
    }
}
