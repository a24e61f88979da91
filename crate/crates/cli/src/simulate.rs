//! Path and point dumps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use coalesce::brownian::{simulate_staggered, simulate_unordered, StaggeredConfig};
use coalesce::flow::{simulate_immigration_system, FlowConfig};
use coalesce::lattice::{simulate_crw_logged, HalfInt, Lattice, WalkConfig};
use coalesce::{Result, SeedStream};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// p-simple coalescing walk, one row per jump.
    Walk,
    /// Coalescing Brownian motions on a time grid.
    Bm,
    /// Brownian motions born at the times in `births`.
    Staggered,
    /// Poisson immigration of coalescing Brownian motions.
    Immigration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulate {
    pub kind: Kind,
    pub starts: Vec<f64>,
    /// Birth times, one per start; all zero when empty.
    pub births: Vec<f64>,
    pub p: f64,
    pub t: f64,
    pub h: f64,
    pub lambda: f64,
    pub window: (f64, f64),
}

impl Default for Simulate {
    fn default() -> Self {
        Self {
            kind: Kind::Bm,
            starts: vec![-1.0, 0.0, 1.0],
            births: Vec::new(),
            p: 0.5,
            t: 1.0,
            h: 1e-3,
            lambda: 1.0,
            window: (-5.0, 5.0),
        }
    }
}

const NAME: &str = "simulate";

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn walk_csv<W: Write>(cfg: &Simulate, rng: &mut coalesce::SimRng, out: W) -> Result<()> {
    let start = cfg.starts.iter().map(|&x| HalfInt::try_from(x)).collect::<Result<Vec<_>>>()?;
    let lattice = if start.iter().all(|h| h.is_integer()) {
        Lattice::Integer
    } else {
        Lattice::HalfShifted
    };
    let walk = WalkConfig::new(cfg.p, start.clone(), lattice)?;
    let (_, events) = simulate_crw_logged(&walk, cfg.t, rng)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_owned()];
    header.extend((1..=start.len()).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    let row = |time: f64, pos: &[HalfInt]| -> Vec<String> {
        std::iter::once(time.to_string()).chain(pos.iter().map(|h| h.to_string())).collect()
    };
    let mut pos = start;
    w.write_record(row(0.0, &pos))?;
    for e in &events {
        // Coalesced particles share a site, so the block is everything at the old site.
        for x in pos.iter_mut().filter(|x| **x == e.old_pos) {
            *x = e.new_pos;
        }
        w.write_record(row(e.time, &pos))?;
    }
    if cfg.t > 0.0 {
        w.write_record(row(cfg.t, &pos))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the dump for `cfg` into `dir` and returns the files written.
pub fn run(cfg: &Simulate, seed: u64, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut rng = SeedStream::new(seed, NAME).rng(0);
    let stem = match cfg.kind {
        Kind::Walk => "walk",
        Kind::Bm => "bm",
        Kind::Staggered => "staggered",
        Kind::Immigration => "immigration",
    };
    let paths_file = dir.join(format!("{NAME}-{stem}.csv"));
    let mut written = vec![paths_file.clone()];
    match cfg.kind {
        Kind::Walk => walk_csv(cfg, &mut rng, create(&paths_file)?)?,
        Kind::Bm | Kind::Staggered => {
            let grid = if cfg.kind == Kind::Bm {
                simulate_unordered(&cfg.starts, cfg.h, cfg.t, &mut rng)?
            } else {
                let births = if cfg.births.is_empty() {
                    vec![0.0; cfg.starts.len()]
                } else {
                    cfg.births.clone()
                };
                if births.len() != cfg.starts.len() {
                    return Err(coalesce::Error::LengthMismatch {
                        what: "births",
                        expected: cfg.starts.len(),
                        found: births.len(),
                    });
                }
                let entries = births.into_iter().zip(cfg.starts.iter().copied()).collect();
                simulate_staggered(&StaggeredConfig::new(entries)?, cfg.h, cfg.t, &mut rng)?
            };
            grid.write_csv(create(&paths_file)?)?;
            let meet_file = dir.join(format!("{NAME}-{stem}-meet.json"));
            std::fs::write(&meet_file, grid.meet_json()?)?;
            written.push(meet_file);
        }
        Kind::Immigration => {
            let flow = FlowConfig {
                lambda: cfg.lambda,
                window: cfg.window,
                horizon: cfg.t,
                step: cfg.h,
                truncation: cfg.t,
                margin: 0.0,
            };
            let (points, grid) = simulate_immigration_system(&flow, &mut rng)?;
            grid.write_csv(create(&paths_file)?)?;
            let points_file = dir.join(format!("{NAME}-{stem}-points.csv"));
            points.write_csv(create(&points_file)?)?;
            written.push(points_file);
        }
    }
    Ok(written)
}
