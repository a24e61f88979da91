//! Coalescing Brownian motion: ordered, unordered and staggered-start
//! ensembles on a time grid, with the path diagnostics used by the duality
//! and martingale checks.

mod engine;

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use engine::{bridge_cross_prob, Cluster, CoalescingBm};

use crate::error::{invalid, Error, Result};

/// An ordered ensemble started at time 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BMEnsembleConfig {
    starts: Vec<f64>,
    step: f64,
    horizon: f64,
}

pub(crate) fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(invalid("step", format!("{h} is not a positive step")))
    }
}

pub(crate) fn check_time(name: &'static str, t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("{t} is not a finite nonnegative time")))
    }
}

fn check_finite(name: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid(name, "positions must be finite"))
    }
}

impl BMEnsembleConfig {
    pub fn new(starts: Vec<f64>, step: f64, horizon: f64) -> Result<Self> {
        check_step(step)?;
        check_time("horizon", horizon)?;
        check_finite("starts", &starts)?;
        if !starts.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::NonMonotone { what: "starts" });
        }
        Ok(Self { starts, step, horizon })
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

/// Particles entering at their own birth times: `(s_i, x_i)` sorted by `s_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaggeredConfig {
    entries: Vec<(f64, f64)>,
}

impl StaggeredConfig {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        for &(s, x) in &entries {
            check_time("birth", s)?;
            check_finite("position", &[x])?;
        }
        if !entries.windows(2).all(|w| w[0].0 <= w[1].0) {
            return Err(Error::NonMonotone { what: "birth times" });
        }
        Ok(Self { entries })
    }

    /// Everyone born at time 0.
    pub fn simultaneous(starts: &[f64]) -> Result<Self> {
        Self::new(starts.iter().map(|&x| (0.0, x)).collect())
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn last_birth(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.0)
    }
}

/// Sampled paths on the grid `0, h, 2h, …, T`.
///
/// `paths[i][k]` is `None` while particle `i` is not yet born.
#[derive(Clone, Debug, PartialEq)]
pub struct PathGrid {
    pub times: Vec<f64>,
    pub paths: Vec<Vec<Option<f64>>>,
    /// Meeting times `T_ij` (infinite if the pair never met on the grid).
    pub meet: Vec<Vec<f64>>,
    /// First grid index at which each particle is alive.
    pub alive_from: Vec<usize>,
}

impl PathGrid {
    pub fn num_particles(&self) -> usize {
        self.paths.len()
    }

    pub fn value(&self, particle: usize, k: usize) -> Option<f64> {
        self.paths[particle][k]
    }

    pub fn final_positions(&self) -> Vec<Option<f64>> {
        self.paths.iter().map(|p| *p.last().expect("grid has a time 0")).collect()
    }

    /// Linear interpolation of a particle's path; `None` before its birth or
    /// outside the grid.
    pub fn interpolate(&self, particle: usize, t: f64) -> Option<f64> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return None;
        }
        let path = &self.paths[particle];
        if k == self.times.len() {
            return if t <= *self.times.last()? { path[k - 1] } else { None };
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (a, b) = (path[k - 1]?, path[k]?);
        Some(a + (b - a) * (t - t0) / (t1 - t0))
    }

    /// CSV with a `time` column and one column per particle; cells before a
    /// particle's birth are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_owned()];
        header.extend((0..self.num_particles()).map(|i| format!("x{}", i + 1)));
        w.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.paths.iter().map(|p| p[k].map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Meeting-time matrix as JSON; pairs that never met are `null`.
    pub fn meet_json(&self) -> Result<String> {
        let rows: Vec<Vec<Option<f64>>> = self
            .meet
            .iter()
            .map(|r| r.iter().map(|&t| t.is_finite().then_some(t)).collect())
            .collect();
        Ok(serde_json::to_string(&rows)?)
    }
}

/// Grid `0, h, 2h, …` ending exactly at `horizon`.
pub fn time_grid(h: f64, horizon: f64) -> Vec<f64> {
    let steps = (horizon / h - 1e-9).ceil().max(0.0) as usize;
    let mut times: Vec<f64> = (0..steps).map(|k| k as f64 * h).collect();
    times.push(horizon);
    times
}

/// Evolves particles born at `births[label] = (s, x)` (sorted by `s`),
/// calling `checkpoint(k, ensemble)` at each of the increasing `times`.
/// Particles born at a checkpoint are alive there. Between births the
/// ensemble advances in steps of at most `h`, and each birth happens exactly
/// at its birth time.
pub(crate) fn evolve_staggered<R, F>(births: &[(f64, f64)], times: &[f64], h: f64, rng: &mut R, mut checkpoint: F) -> CoalescingBm
where
    R: Rng + ?Sized,
    F: FnMut(usize, &CoalescingBm),
{
    let eps = 1e-9 * h;
    let mut bm = CoalescingBm::new();
    let mut next = 0;
    for (k, &tk) in times.iter().enumerate() {
        while next < births.len() && births[next].0 < tk - eps {
            let (s, x) = births[next];
            bm.advance_to(s, h, rng);
            bm.insert(next, x);
            next += 1;
        }
        bm.advance_to(tk, h, rng);
        while next < births.len() && births[next].0 <= tk + eps {
            bm.insert(next, births[next].1);
            next += 1;
        }
        checkpoint(k, &bm);
    }
    bm
}

fn record(births: &[(f64, f64)], h: f64, horizon: f64, rng: &mut (impl Rng + ?Sized)) -> PathGrid {
    let times = time_grid(h, horizon);
    let m = births.len();
    let mut paths = vec![vec![None; times.len()]; m];
    let mut snapshot = vec![None; m];
    evolve_staggered(births, &times, h, rng, |k, bm| {
        bm.write_positions(&mut snapshot);
        for (path, v) in paths.iter_mut().zip(&snapshot) {
            path[k] = *v;
        }
    });
    let alive_from = paths
        .iter()
        .map(|p| p.iter().position(Option::is_some).unwrap_or(times.len()))
        .collect();
    let mut grid = PathGrid {
        times,
        paths,
        meet: Vec::new(),
        alive_from,
    };
    grid.meet = meeting_times(&grid);
    grid
}

/// Ordered coalescing Brownian motion from `config.starts()`.
pub fn simulate_cbm<R: Rng + ?Sized>(config: &BMEnsembleConfig, rng: &mut R) -> PathGrid {
    let births: Vec<(f64, f64)> = config.starts.iter().map(|&x| (0.0, x)).collect();
    record(&births, config.step, config.horizon, rng)
}

/// Unordered coalescing Brownian motion: output path `i` starts at
/// `starts[i]` whatever the order of the starts.
pub fn simulate_unordered<R: Rng + ?Sized>(starts: &[f64], h: f64, horizon: f64, rng: &mut R) -> Result<PathGrid> {
    check_step(h)?;
    check_time("horizon", horizon)?;
    check_finite("starts", starts)?;
    let births: Vec<(f64, f64)> = starts.iter().map(|&x| (0.0, x)).collect();
    Ok(record(&births, h, horizon, rng))
}

/// Particles injected at their birth times into a running unordered ensemble.
pub fn simulate_staggered<R: Rng + ?Sized>(config: &StaggeredConfig, h: f64, horizon: f64, rng: &mut R) -> Result<PathGrid> {
    check_step(h)?;
    check_time("horizon", horizon)?;
    if let Some(&(birth, _)) = config.entries.iter().find(|e| e.0 > horizon) {
        return Err(Error::BirthOutsideHorizon { birth, horizon });
    }
    Ok(record(&config.entries, h, horizon, rng))
}

/// First grid time at which two paths agree (`∞` if they never do).
#[allow(clippy::needless_range_loop)]
pub fn meeting_times(grid: &PathGrid) -> Vec<Vec<f64>> {
    let m = grid.num_particles();
    let mut meet = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let k = (0..grid.times.len()).find(|&k| match (grid.paths[i][k], grid.paths[j][k]) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            });
            let t = k.map_or(f64::INFINITY, |k| grid.times[k]);
            meet[i][j] = t;
            meet[j][i] = t;
        }
    }
    meet
}

/// Orientation of the region between two paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `{(s, x) : lower(s) < x < upper(s)}`
    Forward,
    /// The forward region reversed at time `t`: `lower(t − s) < x < upper(t − s)`.
    Reversed,
}

/// Whether `(s, x)` lies strictly between `lower` and `upper` on `[0, t]`.
pub fn region_contains(
    lower: impl Fn(f64) -> f64,
    upper: impl Fn(f64) -> f64,
    t: f64,
    (s, x): (f64, f64),
    direction: Direction,
) -> Result<bool> {
    if !(0.0..=t).contains(&s) {
        return Err(invalid("s", format!("{s} is outside [0, {t}]")));
    }
    let at = match direction {
        Direction::Forward => s,
        Direction::Reversed => t - s,
    };
    Ok(lower(at) < x && x < upper(at))
}

/// Running sum of `ΔX_i ΔX_j` over grid steps where both particles are
/// alive; entry `k` covers the steps up to `times[k]`.
pub fn quadratic_covariation(grid: &PathGrid, i: usize, j: usize) -> Result<Vec<f64>> {
    let m = grid.num_particles();
    for idx in [i, j] {
        if idx >= m {
            return Err(Error::IndexOutOfRange { index: idx, len: m });
        }
    }
    let (a, b) = (&grid.paths[i], &grid.paths[j]);
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(grid.times.len());
    out.push(0.0);
    for k in 1..grid.times.len() {
        if let (Some(a0), Some(a1), Some(b0), Some(b1)) = (a[k - 1], a[k], b[k - 1], b[k]) {
            acc += (a1 - a0) * (b1 - b0);
        }
        out.push(acc);
    }
    Ok(out)
}
