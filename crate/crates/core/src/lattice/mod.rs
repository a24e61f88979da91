//! p-simple coalescing random walks on `ℤ` and `ℤ + ½`.
//!
//! Positions are [`HalfInt`]s so that balls (on `ℤ`) and box boundaries (on
//! `ℤ + ½`) live in one exact number type and can never tie.

pub mod boxes;
pub mod generator;
pub mod skellam;

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::partition::{partition_of, IntervalPartition};

/// A point of `½ℤ`, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub struct HalfInt(i64);

impl HalfInt {
    pub const fn from_int(k: i64) -> Self {
        Self(2 * k)
    }

    /// The point `halves / 2`.
    pub const fn from_halves(halves: i64) -> Self {
        Self(halves)
    }

    pub const fn halves(self) -> i64 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Moves by `steps` whole lattice spacings.
    pub const fn shift(self, steps: i64) -> Self {
        Self(self.0 + 2 * steps)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl From<HalfInt> for f64 {
    fn from(h: HalfInt) -> f64 {
        h.to_f64()
    }
}

impl TryFrom<f64> for HalfInt {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        let twice = v * 2.0;
        if twice.is_finite() && twice.fract() == 0.0 && twice.abs() < 2f64.powi(52) {
            Ok(Self(twice as i64))
        } else {
            Err(invalid("position", format!("{v} is not a multiple of 1/2")))
        }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}", self.to_f64())
        }
    }
}

/// Which copy of the lattice a walk lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lattice {
    /// `ℤ`
    Integer,
    /// `ℤ + ½`
    HalfShifted,
}

impl Lattice {
    pub fn contains(self, h: HalfInt) -> bool {
        h.is_integer() == (self == Lattice::Integer)
    }

    pub(crate) fn name(self) -> &'static str {
        match self {
            Lattice::Integer => "integer",
            Lattice::HalfShifted => "half-integer",
        }
    }

    pub(crate) fn check(self, what: &'static str, points: &[HalfInt]) -> Result<()> {
        if points.iter().all(|&h| self.contains(h)) {
            Ok(())
        } else {
            Err(Error::WrongLattice {
                what,
                expected: self.name(),
            })
        }
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(name, format!("{p} is not in [0, 1]")))
    }
}

/// Parameters of an `m`-particle p-simple coalescing walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    p: f64,
    start: Vec<HalfInt>,
    lattice: Lattice,
}

impl WalkConfig {
    pub fn new(p: f64, start: Vec<HalfInt>, lattice: Lattice) -> Result<Self> {
        check_probability("p", p)?;
        if !start.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::NonMonotone { what: "start" });
        }
        lattice.check("start", &start)?;
        Ok(Self { p, start, lattice })
    }

    /// Balls: integer starts.
    pub fn on_integers(p: f64, start: &[i64]) -> Result<Self> {
        Self::new(p, start.iter().map(|&k| HalfInt::from_int(k)).collect(), Lattice::Integer)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn start(&self) -> &[HalfInt] {
        &self.start
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }
}

/// State of a coalescing walk: ordered positions, their coalescence
/// partition, and the elapsed time.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeEnsemble {
    pub positions: Vec<HalfInt>,
    pub partition: IntervalPartition,
    pub clock: f64,
}

/// One jump of a free block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkEvent {
    pub time: f64,
    /// Leader index of the block that jumped.
    pub block: usize,
    pub old_pos: HalfInt,
    pub new_pos: HalfInt,
    /// Leader of the block it landed on, if the jump caused a coalescence.
    pub merged_with: Option<usize>,
}

/// Runs the walk to time `t` with exponential clocks, one of rate 1 per
/// free block. A block landing on its neighbour's site merges with it; the
/// block of higher indices attaches to the lower one.
pub fn simulate_crw<R: Rng + ?Sized>(config: &WalkConfig, t: f64, rng: &mut R) -> Result<LatticeEnsemble> {
    run_walk(config, t, rng, None)
}

/// [`simulate_crw`] that also returns the event log.
pub fn simulate_crw_logged<R: Rng + ?Sized>(config: &WalkConfig, t: f64, rng: &mut R) -> Result<(LatticeEnsemble, Vec<WalkEvent>)> {
    let mut log = Vec::new();
    let state = run_walk(config, t, rng, Some(&mut log))?;
    Ok((state, log))
}

fn run_walk<R: Rng + ?Sized>(config: &WalkConfig, t: f64, rng: &mut R, mut log: Option<&mut Vec<WalkEvent>>) -> Result<LatticeEnsemble> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("{t} is not a finite nonnegative time")));
    }
    let mut positions = config.start.clone();
    let mut partition = partition_of(&positions)?;
    let mut leaders: Vec<usize> = partition.leaders().collect();
    let mut clock = 0.0;
    if positions.is_empty() {
        return Ok(LatticeEnsemble {
            positions,
            partition,
            clock: t,
        });
    }
    loop {
        let rate = leaders.len() as f64;
        let wait: f64 = Exp1.sample(rng);
        if clock + wait / rate > t {
            break;
        }
        clock += wait / rate;
        let b = rng.random_range(0..leaders.len());
        let right = rng.random::<f64>() < config.p;
        let leader = leaders[b];
        let old = positions[leader];
        let new = old.shift(if right { 1 } else { -1 });
        let end = leaders.get(b + 1).copied().unwrap_or(positions.len());
        for x in &mut positions[leader..end] {
            *x = new;
        }
        let neighbour = if right {
            leaders.get(b + 1).copied().filter(|&l| positions[l] == new).map(|l| (b, l))
        } else if b > 0 && positions[leaders[b - 1]] == new {
            Some((b - 1, leaders[b - 1]))
        } else {
            None
        };
        let merged_with = neighbour.map(|(left_block, other)| {
            partition.merge_with_next(left_block).expect("adjacent blocks always exist here");
            leaders.remove(left_block + 1);
            other
        });
        if let Some(log) = log.as_deref_mut() {
            log.push(WalkEvent {
                time: clock,
                block: leader,
                old_pos: old,
                new_pos: new,
                merged_with,
            });
        }
    }
    Ok(LatticeEnsemble {
        positions,
        partition,
        clock: t,
    })
}
