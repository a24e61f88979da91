//! Coalescing Brownian flow with Poisson immigration.
//!
//! Particles appear at the atoms of a Poisson field on time × space and then
//! move as one coalescing Brownian ensemble, so every replicate is a single
//! coupled realization of the flow restricted to its source points. The
//! line is replaced by a finite window; statistics are read only on a core
//! sub-window inset by a margin.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::brownian::{self, check_step, check_time, CoalescingBm, PathGrid, StaggeredConfig};
use crate::error::{invalid, Error, Result};
use crate::seed::SeedStream;
use crate::stats::McEstimate;

/// Default margin `4√T` between the simulated window and its core.
pub fn default_margin(horizon: f64) -> f64 {
    4.0 * horizon.sqrt()
}

/// Parameters of the immigration system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub lambda: f64,
    /// Simulated space window `[x_lo, x_hi]`.
    pub window: (f64, f64),
    pub horizon: f64,
    pub step: f64,
    /// Length of the backward Poisson field used for the stationary law.
    pub truncation: f64,
    /// Inset of the core sub-window on each side.
    pub margin: f64,
}

impl FlowConfig {
    /// Config whose core is `core` and whose margin is `4√(max(T, T_back))`.
    pub fn around(lambda: f64, core: (f64, f64), horizon: f64, step: f64, truncation: f64) -> Result<Self> {
        let margin = default_margin(horizon.max(truncation));
        let cfg = Self {
            lambda,
            window: (core.0 - margin, core.1 + margin),
            horizon,
            step,
            truncation,
            margin,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", format!("{} is not a finite nonnegative rate", self.lambda)));
        }
        let (lo, hi) = self.window;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(invalid("window", format!("[{lo}, {hi}] is not a bounded interval")));
        }
        check_step(self.step)?;
        for (name, v) in [("horizon", self.horizon), ("truncation", self.truncation)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("{v} must be positive")));
            }
        }
        if !(self.margin >= 0.0 && 2.0 * self.margin < hi - lo) {
            return Err(invalid("margin", format!("{} leaves no core in [{lo}, {hi}]", self.margin)));
        }
        Ok(())
    }

    pub fn core(&self) -> (f64, f64) {
        (self.window.0 + self.margin, self.window.1 - self.margin)
    }
}

/// Atoms of a Poisson field of intensity `λ × Lebesgue` on a time × space
/// box, sorted by time.
pub fn sample_poisson_field<R: Rng + ?Sized>(
    lambda: f64,
    time_window: (f64, f64),
    space_window: (f64, f64),
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    let (t0, t1) = time_window;
    let (x0, x1) = space_window;
    if !(lambda >= 0.0) || !(t0 <= t1) || !(x0 <= x1) || ![t0, t1, x0, x1, lambda].iter().all(|v| v.is_finite()) {
        return Err(invalid("poisson field", "need λ ≥ 0 and bounded, ordered windows"));
    }
    let mean = lambda * (t1 - t0) * (x1 - x0);
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let count: f64 = Poisson::new(mean).map_err(|e| invalid("lambda", e.to_string()))?.sample(rng);
    let mut atoms: Vec<(f64, f64)> = (0..count as usize)
        .map(|_| (rng.random_range(t0..=t1), rng.random_range(x0..=x1)))
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(atoms)
}

/// A finite configuration of points; `multiplicity` counts the immigrants
/// that coalesced into each location.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    /// `(location, multiplicity)` sorted by location.
    pub atoms: Vec<(f64, u32)>,
}

impl PointSample {
    fn from_ensemble(bm: &CoalescingBm, core: (f64, f64)) -> Self {
        Self {
            atoms: bm
                .clusters()
                .iter()
                .filter(|c| core.0 <= c.pos && c.pos <= core.1)
                .map(|c| (c.pos, c.members.len() as u32))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Number of distinct locations in `(a, b]`.
    pub fn count_distinct(&self, a: f64, b: f64) -> usize {
        self.atoms.iter().filter(|(x, _)| a < *x && *x <= b).count()
    }

    /// Total multiplicity in `(a, b]`.
    pub fn count_with_multiplicity(&self, a: f64, b: f64) -> u64 {
        self.atoms
            .iter()
            .filter(|(x, _)| a < *x && *x <= b)
            .map(|&(_, k)| u64::from(k))
            .sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["location", "multiplicity"])?;
        for (x, k) in &self.atoms {
            w.write_record([x.to_string(), k.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Immigrants on `[0, T] × window` flowed to time `T`; the returned sample
/// is restricted to the core. Cheaper than [`simulate_immigration_system`]
/// as no paths are recorded.
pub fn immigration_point_sample<R: Rng + ?Sized>(config: &FlowConfig, rng: &mut R) -> Result<PointSample> {
    config.validate()?;
    let atoms = sample_poisson_field(config.lambda, (0.0, config.horizon), config.window, rng)?;
    let bm = brownian::evolve_staggered(&atoms, &[config.horizon], config.step, rng, |_, _| {});
    Ok(PointSample::from_ensemble(&bm, config.core()))
}

/// `S_T` on the core together with the grid of all immigrant paths.
pub fn simulate_immigration_system<R: Rng + ?Sized>(config: &FlowConfig, rng: &mut R) -> Result<(PointSample, PathGrid)> {
    config.validate()?;
    let atoms = sample_poisson_field(config.lambda, (0.0, config.horizon), config.window, rng)?;
    let grid = brownian::simulate_staggered(&StaggeredConfig::new(atoms)?, config.step, config.horizon, rng)?;
    let core = config.core();
    let mut atoms: Vec<(f64, u32)> = Vec::new();
    let mut finals: Vec<f64> = grid.final_positions().into_iter().flatten().collect();
    finals.sort_by(f64::total_cmp);
    for x in finals {
        if !(core.0 <= x && x <= core.1) {
            continue;
        }
        match atoms.last_mut() {
            Some((y, k)) if *y == x => *k += 1,
            _ => atoms.push((x, 1)),
        }
    }
    Ok((PointSample { atoms }, grid))
}

/// One sample of `S_∞` on the core: a backward Poisson field on
/// `[−T_back, 0] × window` flowed to time 0. By time-homogeneity this is
/// the forward system run for `T_back`.
pub fn sample_s_infty<R: Rng + ?Sized>(config: &FlowConfig, rng: &mut R) -> Result<PointSample> {
    let forward = FlowConfig {
        horizon: config.truncation,
        ..config.clone()
    };
    immigration_point_sample(&forward, rng)
}

/// Which side of the avoidance identity to estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AvoidanceSide {
    /// Fraction of immigration runs whose `S_t` misses every interval.
    Direct,
    /// Mean of `exp(−λ Σ_j ∫₀ᵗ Y_{2j} − Y_{2j−1} ds)` over coalescing motions
    /// started from the interval endpoints.
    Dual,
}

/// Disjoint test intervals `(a_j, b_j]` and the system they probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceSetup {
    intervals: Vec<(f64, f64)>,
    pub t: f64,
    pub lambda: f64,
    pub step: f64,
    /// Extra space simulated on each side of the intervals (direct side).
    pub margin: f64,
}

impl AvoidanceSetup {
    pub fn new(intervals: Vec<(f64, f64)>, t: f64, lambda: f64, step: f64) -> Result<Self> {
        if intervals.is_empty() || !intervals.iter().all(|&(a, b)| a < b && a.is_finite() && b.is_finite()) {
            return Err(invalid("intervals", "need at least one interval (a, b] with a < b"));
        }
        if !intervals.windows(2).all(|w| w[0].1 < w[1].0) {
            return Err(Error::OverlappingIntervals);
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("t", format!("{t} must be positive")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("{lambda} is not a finite nonnegative rate")));
        }
        check_step(step)?;
        Ok(Self {
            intervals,
            t,
            lambda,
            step,
            margin: default_margin(t),
        })
    }

    pub fn with_margin(mut self, margin: f64) -> Result<Self> {
        check_time("margin", margin)?;
        self.margin = margin;
        Ok(self)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Endpoints `y_1 < … < y_{2n}`.
    pub fn endpoints(&self) -> Vec<f64> {
        self.intervals.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    fn flow_config(&self) -> FlowConfig {
        let lo = self.intervals[0].0;
        let hi = self.intervals[self.intervals.len() - 1].1;
        FlowConfig {
            lambda: self.lambda,
            window: (lo - self.margin, hi + self.margin),
            horizon: self.t,
            step: self.step,
            truncation: self.t,
            margin: self.margin,
        }
    }

    /// One direct-side indicator: 1 when `S_t` misses all intervals.
    pub fn direct_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let s = immigration_point_sample(&self.flow_config(), rng)?;
        let hit = self.intervals.iter().any(|&(a, b)| s.count_distinct(a, b) > 0);
        Ok(if hit { 0.0 } else { 1.0 })
    }

    /// `Σ_j ∫₀ᵗ Y_{2j} − Y_{2j−1} ds` by the trapezoid rule on the step grid.
    pub fn dual_area<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let y = self.endpoints();
        let mut bm = CoalescingBm::from_starts(&y);
        let mut pos: Vec<Option<f64>> = y.iter().map(|&v| Some(v)).collect();
        let gaps = |pos: &[Option<f64>]| -> f64 { pos.chunks_exact(2).map(|w| w[1].expect("alive") - w[0].expect("alive")).sum() };
        let mut prev = gaps(&pos);
        let mut area = 0.0;
        let eps = 1e-9 * self.step;
        while bm.time() < self.t - eps {
            let dt = self.step.min(self.t - bm.time());
            bm.advance(dt, rng);
            bm.write_positions(&mut pos);
            let g = gaps(&pos);
            area += 0.5 * (prev + g) * dt;
            prev = g;
        }
        area
    }

    pub fn dual_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (-self.lambda * self.dual_area(rng)).exp()
    }
}

/// Monte Carlo estimate of the avoidance probability from `n` replicates.
pub fn avoidance_probability_mc(setup: &AvoidanceSetup, side: AvoidanceSide, n: u64, stream: &SeedStream) -> Result<McEstimate> {
    if n == 0 {
        return Err(invalid("n", "need at least one replicate"));
    }
    let samples: Vec<f64> = match side {
        AvoidanceSide::Direct => stream
            .map_replicates(n, |rng, _| setup.direct_sample(rng))
            .into_iter()
            .collect::<Result<_>>()?,
        AvoidanceSide::Dual => stream.map_replicates(n, |rng, _| setup.dual_sample(rng)),
    };
    Ok(McEstimate::from_samples(&samples))
}

/// Horizon of a wedge integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

/// Safety cap on steps for one wedge sample; a capped run is restarted.
pub const WEDGE_STEP_CAP: u64 = 1_000_000;

/// One sample of `∫₀ᵗ Y₂ − Y₁ ds` for a coalescing pair from `(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeSample {
    pub area: f64,
    /// Step at which the pair merged, bucketed to its right end.
    pub meet_time: Option<f64>,
    pub steps: u64,
    /// Runs discarded for hitting [`WEDGE_STEP_CAP`].
    pub restarts: u32,
}

/// Samples the wedge area between the flow lines from `a` and `b`.
///
/// The step is `h·max(1, (gap/(b − a))²)`, so long excursions of the gap
/// are crossed in few steps while small gaps use the base step. Coalescence
/// within a step uses the exact bridge-crossing test; the trapezoid rule
/// integrates the gap. For an infinite horizon the run ends at coalescence.
pub fn wedge_area<R: Rng + ?Sized>(a: f64, b: f64, horizon: Horizon, h: f64, rng: &mut R) -> Result<WedgeSample> {
    if !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(invalid("interval", format!("need a ≤ b, got a = {a}, b = {b}")));
    }
    check_step(h)?;
    let end = match horizon {
        Horizon::Finite(t) => {
            check_time("t", t)?;
            t
        }
        Horizon::Infinite => f64::INFINITY,
    };
    if a == b || end == 0.0 {
        return Ok(WedgeSample {
            area: 0.0,
            meet_time: (a == b).then_some(0.0),
            steps: 0,
            restarts: 0,
        });
    }
    let scale = b - a;
    let mut restarts = 0;
    loop {
        let mut bm = CoalescingBm::from_starts(&[a, b]);
        let mut gap = scale;
        let mut area = 0.0;
        let mut steps = 0;
        while steps < WEDGE_STEP_CAP {
            let remaining = end - bm.time();
            if remaining <= 1e-9 * h {
                return Ok(WedgeSample {
                    area,
                    meet_time: None,
                    steps,
                    restarts,
                });
            }
            let dt = (h * (gap / scale).powi(2).max(1.0)).min(remaining);
            bm.advance(dt, rng);
            steps += 1;
            let next = match bm.clusters() {
                [lo, hi] => hi.pos - lo.pos,
                _ => 0.0,
            };
            area += 0.5 * (gap + next) * dt;
            gap = next;
            if gap == 0.0 {
                return Ok(WedgeSample {
                    area,
                    meet_time: Some(bm.time()),
                    steps,
                    restarts,
                });
            }
        }
        restarts += 1;
    }
}

/// Wedge masses `M_t(]p_k, p_{k+1}])` of consecutive points from one
/// coupled flow, so masses of unions are sums of these.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeMeasure {
    pub points: Vec<f64>,
    pub t: f64,
    /// `masses[k] = M_t(]points[k], points[k + 1]])`.
    pub masses: Vec<f64>,
}

impl WedgeMeasure {
    /// Runs one flow from the sorted `points` up to `t` with step `h`.
    pub fn sample<R: Rng + ?Sized>(points: &[f64], t: f64, h: f64, rng: &mut R) -> Result<Self> {
        check_step(h)?;
        check_time("t", t)?;
        if points.len() < 2 || !points.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::NonMonotone { what: "wedge points" });
        }
        let mut bm = CoalescingBm::from_starts(points);
        let mut pos: Vec<Option<f64>> = points.iter().map(|&v| Some(v)).collect();
        let gaps = |pos: &[Option<f64>]| -> Vec<f64> { pos.windows(2).map(|w| w[1].expect("alive") - w[0].expect("alive")).collect() };
        let mut prev = gaps(&pos);
        let mut masses = vec![0.0; points.len() - 1];
        let eps = 1e-9 * h;
        while bm.time() < t - eps {
            let dt = h.min(t - bm.time());
            bm.advance(dt, rng);
            bm.write_positions(&mut pos);
            let g = gaps(&pos);
            for ((m, p), q) in masses.iter_mut().zip(&prev).zip(&g) {
                *m += 0.5 * (p + q) * dt;
            }
            prev = g;
        }
        Ok(Self {
            points: points.to_vec(),
            t,
            masses,
        })
    }

    /// `M_t(]points[i], points[j]])` for `i ≤ j`.
    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.masses[i.min(j)..j.max(i)].iter().sum()
    }
}
