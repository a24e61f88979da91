//! Time-stepping kernel shared by every coalescing Brownian simulator.
//!
//! The ensemble is a left-to-right list of clusters, each holding the labels
//! of the particles stuck together at one location. Over a step of length
//! `dt` each cluster takes an independent Gaussian increment; two neighbours
//! then coalesce either because they swapped order or, if not, with the exact
//! probability that the Brownian bridge of their gap touched zero in between.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};

/// Exponent beyond which `exp(−e)` is below the resolution of a 53-bit uniform.
const CROSSING_CUTOFF: f64 = 37.0;

/// Probability that the gap between two independent standard Brownian
/// motions hits zero during a step of length `h`, given gaps `d0` at the
/// start and `d1` at the end: `exp(−d0·d1/h)` (a bridge of variance rate 2).
pub fn bridge_cross_prob(d0: f64, d1: f64, h: f64) -> Result<f64> {
    if !(d0 >= 0.0) || !(d1 >= 0.0) {
        return Err(invalid("gap", "gaps must be nonnegative"));
    }
    if !(h > 0.0) {
        return Err(invalid("h", format!("{h} is not a positive step")));
    }
    Ok((-d0 * d1 / h).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub pos: f64,
    /// Particle labels in attachment order; the first is the free particle.
    pub members: Vec<usize>,
}

/// A coalescing Brownian ensemble advanced step by step.
#[derive(Clone, Debug, Default)]
pub struct CoalescingBm {
    clusters: Vec<Cluster>,
    spare: Vec<Cluster>,
    time: f64,
}

impl CoalescingBm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Particles labelled `0..starts.len()`, in any order; equal starts are
    /// coalesced from the outset.
    pub fn from_starts(starts: &[f64]) -> Self {
        let mut bm = Self::new();
        for (label, &x) in starts.iter().enumerate() {
            bm.insert(label, x);
        }
        bm
    }

    /// Adds a particle at `x` at the current time. Landing exactly on a
    /// cluster attaches it to that cluster.
    pub fn insert(&mut self, label: usize, x: f64) {
        let idx = self.clusters.partition_point(|c| c.pos < x);
        match self.clusters.get_mut(idx) {
            Some(c) if c.pos == x => c.members.push(label),
            _ => self.clusters.insert(
                idx,
                Cluster {
                    pos: x,
                    members: vec![label],
                },
            ),
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Writes each particle's position into `out[label]`; labels not present
    /// are left untouched.
    pub fn write_positions(&self, out: &mut [Option<f64>]) {
        for c in &self.clusters {
            for &m in &c.members {
                out[m] = Some(c.pos);
            }
        }
    }

    pub fn positions(&self, labels: usize) -> Vec<Option<f64>> {
        let mut out = vec![None; labels];
        self.write_positions(&mut out);
        out
    }

    /// Advances by one step of length `dt > 0`.
    ///
    /// Neighbouring pairs are resolved in a single left-to-right pass. When a
    /// cluster has just absorbed its left neighbour, the next pair is tested
    /// against the merged cluster's end point with the original start gap.
    /// A merged cluster sits at the end point of its left-most constituent.
    pub fn advance<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        debug_assert!(dt > 0.0);
        self.time += dt;
        if self.clusters.is_empty() {
            return;
        }
        let sd = dt.sqrt();
        std::mem::swap(&mut self.clusters, &mut self.spare);
        let mut old = self.spare.drain(..);
        let mut cur = old.next().expect("nonempty");
        let mut prev_start = cur.pos;
        let z: f64 = StandardNormal.sample(rng);
        let mut cur_end = cur.pos + sd * z;
        for mut next in old {
            let z: f64 = StandardNormal.sample(rng);
            let end = next.pos + sd * z;
            let d0 = next.pos - prev_start;
            prev_start = next.pos;
            let d1 = end - cur_end;
            let merge = d1 <= 0.0 || {
                let e = d0 * d1 / dt;
                e < CROSSING_CUTOFF && rng.random::<f64>() < (-e).exp()
            };
            if merge {
                cur.members.append(&mut next.members);
            } else {
                cur.pos = cur_end;
                self.clusters.push(cur);
                cur = next;
                cur_end = end;
            }
        }
        cur.pos = cur_end;
        self.clusters.push(cur);
    }

    /// Advances to time `target` in steps of at most `h`.
    pub fn advance_to<R: Rng + ?Sized>(&mut self, target: f64, h: f64, rng: &mut R) {
        let eps = 1e-9 * h;
        while self.time < target - eps {
            let dt = h.min(target - self.time);
            self.advance(dt, rng);
        }
        self.time = self.time.max(target);
    }
}
