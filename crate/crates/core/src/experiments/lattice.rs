use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_count, Experiment};
use crate::error::{invalid, Result};
use crate::lattice::boxes::{indicator_array, BoxFunction, MAX_TABLE_BITS};
use crate::lattice::generator::{duality_gap, duality_gap_with_jump};
use crate::lattice::skellam::skellam_pmf;
use crate::lattice::{check_probability, simulate_crw, HalfInt, Lattice, WalkConfig};
use crate::seed::{SeedStream, SimRng};
use crate::stats::{two_sample_test, CategoricalSample, TestReport, TV_MULTIPLIER};

/// A random instance of the generator identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCase {
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub x: Vec<HalfInt>,
    pub y: Vec<HalfInt>,
    pub gap: f64,
}

fn random_case(rng: &mut SimRng, m: usize, n: usize, spread: i64) -> (Vec<HalfInt>, Vec<HalfInt>, f64) {
    let mut x: Vec<i64> = (0..m).map(|_| rng.random_range(-spread..=spread)).collect();
    // Odd half-steps: boundaries on ℤ + ½, ties allowed.
    let mut y: Vec<i64> = (0..n).map(|_| 2 * rng.random_range(-spread - 1..=spread) + 1).collect();
    x.sort_unstable();
    y.sort_unstable();
    let p = rng.random::<f64>();
    (
        x.into_iter().map(HalfInt::from_int).collect(),
        y.into_iter().map(HalfInt::from_halves).collect(),
        p,
    )
}

/// Exact generator duality on random `(g, x, y, p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDuality {
    /// Number of random cases.
    #[serde(alias = "N")]
    pub replicates: u64,
    pub min_m: usize,
    pub max_m: usize,
    pub min_n: usize,
    pub max_n: usize,
    /// Positions are drawn from `[−spread, spread]`.
    pub spread: i64,
    pub tolerance: f64,
}

impl Default for GenDuality {
    fn default() -> Self {
        Self {
            replicates: 1000,
            min_m: 2,
            max_m: 5,
            min_n: 2,
            max_n: 5,
            spread: 3,
            tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenDualityReport {
    pub cases: u64,
    pub max_abs_gap: f64,
    pub worst: GapCase,
    pub tolerance: f64,
}

fn check_sizes(min_m: usize, max_m: usize, min_n: usize, max_n: usize) -> Result<()> {
    if !(1 <= min_m && min_m <= max_m && 2 <= min_n && min_n <= max_n) {
        return Err(invalid("sizes", "need 1 ≤ min_m ≤ max_m and 2 ≤ min_n ≤ max_n"));
    }
    if max_m * (max_n - 1) > MAX_TABLE_BITS {
        return Err(invalid("sizes", format!("m(n − 1) may not exceed {MAX_TABLE_BITS}")));
    }
    Ok(())
}

impl Experiment for GenDuality {
    const NAME: &'static str = "gen-duality";
    type Output = GenDualityReport;

    fn validate(&self) -> Result<()> {
        check_count("replicates", self.replicates, 1)?;
        check_sizes(self.min_m, self.max_m, self.min_n, self.max_n)?;
        if self.spread < 0 {
            return Err(invalid("spread", "must be nonnegative"));
        }
        Ok(())
    }

    fn execute(&self, seed: u64) -> Result<GenDualityReport> {
        let stream = SeedStream::new(seed, Self::NAME);
        let cases = stream.map_replicates(self.replicates, |rng, _| -> Result<GapCase> {
            let m = rng.random_range(self.min_m..=self.max_m);
            let n = rng.random_range(self.min_n..=self.max_n);
            let (x, y, p) = random_case(rng, m, n, self.spread);
            let g = BoxFunction::random(m, n, rng)?;
            let gap = duality_gap(&g, &x, &y, p)?;
            Ok(GapCase { m, n, p, x, y, gap })
        });
        let mut worst: Option<GapCase> = None;
        for case in cases {
            let case = case?;
            if worst.as_ref().map_or(true, |w| case.gap.abs() > w.gap.abs()) {
                worst = Some(case);
            }
        }
        let worst = worst.expect("at least one case");
        Ok(GenDualityReport {
            cases: self.replicates,
            max_abs_gap: worst.gap.abs(),
            worst,
            tolerance: self.tolerance,
        })
    }

    fn passed(out: &GenDualityReport) -> bool {
        out.max_abs_gap <= out.tolerance
    }

    fn summary(out: &GenDualityReport) -> String {
        format!(
            "{} cases, max |gap| = {:.3e} (tolerance {:.0e})",
            out.cases, out.max_abs_gap, out.tolerance
        )
    }

    fn smoke() -> Self {
        Self {
            replicates: 50,
            max_m: 3,
            max_n: 3,
            ..Self::default()
        }
    }
}

/// Search for instances where walks with jumps of two break the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnNecessity {
    #[serde(alias = "N")]
    pub replicates: u64,
    pub m: usize,
    pub n: usize,
    pub spread: i64,
    pub jump: i64,
    pub threshold: f64,
}

impl Default for NnNecessity {
    fn default() -> Self {
        Self {
            replicates: 200,
            m: 2,
            n: 3,
            spread: 3,
            jump: 2,
            threshold: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnReport {
    pub searched: u64,
    pub jump: i64,
    /// Largest `|gap|` with the larger jump.
    pub max_abs_gap: f64,
    pub witness: GapCase,
    /// Largest `|gap|` on the same instances with unit jumps.
    pub unit_jump_max_abs_gap: f64,
    pub threshold: f64,
}

impl Experiment for NnNecessity {
    const NAME: &'static str = "nn-necessity";
    type Output = NnReport;

    fn validate(&self) -> Result<()> {
        check_count("replicates", self.replicates, 1)?;
        check_sizes(self.m, self.m, self.n, self.n)?;
        if self.jump < 2 {
            return Err(invalid("jump", "must be at least 2"));
        }
        Ok(())
    }

    fn execute(&self, seed: u64) -> Result<NnReport> {
        let stream = SeedStream::new(seed, Self::NAME);
        let results = stream.map_replicates(self.replicates, |rng, _| -> Result<(GapCase, f64)> {
            let (x, y, p) = random_case(rng, self.m, self.n, self.spread);
            let g = BoxFunction::random(self.m, self.n, rng)?;
            let gap = duality_gap_with_jump(&g, &x, &y, p, self.jump)?;
            let unit = duality_gap(&g, &x, &y, p)?;
            Ok((
                GapCase {
                    m: self.m,
                    n: self.n,
                    p,
                    x,
                    y,
                    gap,
                },
                unit,
            ))
        });
        let mut witness: Option<GapCase> = None;
        let mut unit_max = 0.0f64;
        for r in results {
            let (case, unit) = r?;
            unit_max = unit_max.max(unit.abs());
            if witness.as_ref().map_or(true, |w| case.gap.abs() > w.gap.abs()) {
                witness = Some(case);
            }
        }
        let witness = witness.expect("at least one case");
        Ok(NnReport {
            searched: self.replicates,
            jump: self.jump,
            max_abs_gap: witness.gap.abs(),
            witness,
            unit_jump_max_abs_gap: unit_max,
            threshold: self.threshold,
        })
    }

    fn passed(out: &NnReport) -> bool {
        out.max_abs_gap > out.threshold
    }

    fn summary(out: &NnReport) -> String {
        format!(
            "jump {}: max |gap| = {:.4} over {} instances (unit jumps: {:.1e})",
            out.jump, out.max_abs_gap, out.searched, out.unit_jump_max_abs_gap
        )
    }

    fn smoke() -> Self {
        Self {
            replicates: 30,
            ..Self::default()
        }
    }
}

/// One start configuration for the path-level lattice check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwCase {
    /// Balls on `ℤ`.
    pub x: Vec<f64>,
    /// Box boundaries on `ℤ + ½`.
    pub y: Vec<f64>,
}

fn half_ints(v: &[f64], lattice: Lattice, what: &'static str) -> Result<Vec<HalfInt>> {
    let out = v.iter().map(|&a| HalfInt::try_from(a)).collect::<Result<Vec<_>>>()?;
    lattice.check(what, &out)?;
    Ok(out)
}

/// Path-level balls-in-boxes duality for p-simple coalescing walks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwDuality {
    pub cases: Vec<RwCase>,
    pub p: Vec<f64>,
    pub t: f64,
    /// Samples per side.
    #[serde(alias = "N")]
    pub replicates: u64,
}

impl Default for RwDuality {
    fn default() -> Self {
        Self {
            cases: vec![
                RwCase {
                    x: vec![0.0, 1.0],
                    y: vec![-0.5, 1.5],
                },
                RwCase {
                    x: vec![-1.0, 0.0, 2.0],
                    y: vec![-1.5, 0.5, 1.5],
                },
            ],
            p: vec![0.5, 0.7],
            t: 4.0,
            replicates: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwDualityReport {
    pub tests: Vec<TestReport>,
}

impl Experiment for RwDuality {
    const NAME: &'static str = "rw-duality";
    type Output = RwDualityReport;

    fn validate(&self) -> Result<()> {
        check_count("replicates", self.replicates, crate::stats::MIN_TOTAL)?;
        crate::brownian::check_time("t", self.t)?;
        if self.cases.is_empty() || self.p.is_empty() {
            return Err(invalid("cases", "need at least one case and one p"));
        }
        for &p in &self.p {
            check_probability("p", p)?;
        }
        for c in &self.cases {
            WalkConfig::new(0.5, half_ints(&c.x, Lattice::Integer, "x")?, Lattice::Integer)?;
            WalkConfig::new(0.5, half_ints(&c.y, Lattice::HalfShifted, "y")?, Lattice::HalfShifted)?;
            indicator_array(&c.x, &c.y)?;
        }
        Ok(())
    }

    fn execute(&self, seed: u64) -> Result<RwDualityReport> {
        let stream = SeedStream::new(seed, Self::NAME);
        let mut tests = Vec::new();
        for (ci, case) in self.cases.iter().enumerate() {
            let x = half_ints(&case.x, Lattice::Integer, "x")?;
            let y = half_ints(&case.y, Lattice::HalfShifted, "y")?;
            let bits = x.len() * (y.len() - 1);
            for &p in &self.p {
                let balls = WalkConfig::new(p, x.clone(), Lattice::Integer)?;
                let boxes = WalkConfig::new(1.0 - p, y.clone(), Lattice::HalfShifted)?;
                let sub = stream.substream(&format!("case{ci}/p{p}"));
                let left = sub.substream("balls").map_replicates(self.replicates, |rng, _| -> Result<u64> {
                    let s = simulate_crw(&balls, self.t, rng)?;
                    Ok(indicator_array(&s.positions, &y)?.symbol())
                });
                let right = sub.substream("boxes").map_replicates(self.replicates, |rng, _| -> Result<u64> {
                    let s = simulate_crw(&boxes, self.t, rng)?;
                    Ok(indicator_array(&x, &s.positions)?.symbol())
                });
                let a = CategoricalSample::from_symbols(1 << bits, left.into_iter().collect::<Result<Vec<_>>>()?)?;
                let b = CategoricalSample::from_symbols(1 << bits, right.into_iter().collect::<Result<Vec<_>>>()?)?;
                let context = serde_json::json!({ "x": case.x, "y": case.y, "p": p, "t": self.t });
                tests.push(two_sample_test(&a, &b)?.with_context(seed, context));
            }
        }
        Ok(RwDualityReport { tests })
    }

    fn passed(out: &RwDualityReport) -> bool {
        out.tests.iter().all(|t| t.verdict.passed())
    }

    fn summary(out: &RwDualityReport) -> String {
        let min_p = out.tests.iter().map(|t| t.p_value).fold(1.0, f64::min);
        let worst_tv = out.tests.iter().map(|t| t.tv / t.tv_bound).fold(0.0, f64::max);
        format!("{} tests, min p-value {:.4}, max TV/bound {:.3}", out.tests.len(), min_p, worst_tv)
    }

    fn smoke() -> Self {
        Self {
            replicates: 2000,
            ..Self::default()
        }
    }
}

/// Single-walker displacement law against the exact Skellam pmf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Marginal {
    pub p: Vec<f64>,
    pub t: f64,
    #[serde(alias = "N")]
    pub replicates: u64,
}

impl Default for Marginal {
    fn default() -> Self {
        Self {
            p: vec![0.5, 0.7],
            t: 2.0,
            replicates: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalCase {
    pub p: f64,
    pub tv: f64,
    pub tv_bound: f64,
    /// Observed support size `K`.
    pub support: usize,
    pub n: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub cases: Vec<MarginalCase>,
}

impl Experiment for Marginal {
    const NAME: &'static str = "marginal";
    type Output = MarginalReport;

    fn validate(&self) -> Result<()> {
        check_count("replicates", self.replicates, 1)?;
        crate::brownian::check_time("t", self.t)?;
        for &p in &self.p {
            check_probability("p", p)?;
        }
        Ok(())
    }

    fn execute(&self, seed: u64) -> Result<MarginalReport> {
        let stream = SeedStream::new(seed, Self::NAME);
        let mut cases = Vec::new();
        for &p in &self.p {
            let cfg = WalkConfig::on_integers(p, &[0])?;
            let draws = stream
                .substream(&format!("p{p}"))
                .map_replicates(self.replicates, |rng, _| -> Result<i64> {
                    Ok(simulate_crw(&cfg, self.t, rng)?.positions[0].halves() / 2)
                });
            let draws = draws.into_iter().collect::<Result<Vec<i64>>>()?;
            let mut counts = std::collections::BTreeMap::new();
            for d in draws {
                *counts.entry(d).or_insert(0u64) += 1;
            }
            let n = self.replicates as f64;
            // ½ Σ |p̂_k − pmf_k| over observed k, plus the pmf mass never observed.
            let mut tv = 0.0;
            let mut seen_mass = 0.0;
            for (&k, &c) in &counts {
                let pmf = skellam_pmf(p, self.t, k)?;
                seen_mass += pmf;
                tv += (c as f64 / n - pmf).abs();
            }
            tv = 0.5 * (tv + (1.0 - seen_mass).max(0.0));
            let support = counts.len();
            cases.push(MarginalCase {
                p,
                tv,
                tv_bound: TV_MULTIPLIER * (support as f64 / n).sqrt(),
                support,
                n: self.replicates,
            });
        }
        Ok(MarginalReport { cases })
    }

    fn passed(out: &MarginalReport) -> bool {
        out.cases.iter().all(|c| c.tv <= c.tv_bound)
    }

    fn summary(out: &MarginalReport) -> String {
        out.cases
            .iter()
            .map(|c| format!("p={}: TV {:.4} ≤ {:.4}", c.p, c.tv, c.tv_bound))
            .collect::<Vec<_>>()
            .join("; ")
    }

    fn smoke() -> Self {
        Self {
            replicates: 5000,
            ..Self::default()
        }
    }
}
