use serde::{Deserialize, Serialize};

use super::{check_count, Experiment};
use crate::brownian::{check_step, check_time, evolve_staggered, CoalescingBm, StaggeredConfig};
use crate::error::{invalid, Error, Result};
use crate::lattice::boxes::indicator_array;
use crate::seed::{SeedStream, SimRng};
use crate::stats::{tv_null_level, two_sample_test, CategoricalSample, McEstimate, TestReport, MIN_TOTAL};

fn sample_symbols(stream: &SeedStream, n: u64, bits: usize, f: impl Fn(&mut SimRng) -> Result<u64> + Sync) -> Result<CategoricalSample> {
    let symbols = stream.map_replicates(n, |rng, _| f(rng));
    CategoricalSample::from_symbols(1 << bits, symbols.into_iter().collect::<Result<Vec<_>>>()?)
}

fn final_positions(starts: &[f64], t: f64, h: f64, rng: &mut SimRng) -> Vec<f64> {
    let mut bm = CoalescingBm::from_starts(starts);
    bm.advance_to(t, h, rng);
    bm.positions(starts.len()).into_iter().map(|p| p.expect("all born at 0")).collect()
}

/// Balls-in-boxes duality for coalescing Brownian motions started together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BmDuality {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub h: f64,
    #[serde(alias = "N")]
    pub replicates: u64,
    /// Also rerun both sides at `h/2` and compare the TV estimates.
    pub check_halving: bool,
    /// Resamples used to estimate the TV noise floor.
    pub null_draws: usize,
}

impl Default for BmDuality {
    fn default() -> Self {
        Self {
            x: vec![-0.4, 0.1, 0.5],
            y: vec![-0.8, 0.0, 0.9],
            t: 1.0,
            h: 1e-3,
            replicates: 100_000,
            check_halving: true,
            null_draws: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmDualityReport {
    pub test: TestReport,
    pub half_step: Option<HalvingCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalvingCheck {
    pub test: TestReport,
    /// `|TV(h) − TV(h/2)|`
    pub tv_shift: f64,
    /// Mean TV between two independent samples from one law at these
    /// sample sizes: the Monte Carlo error level of a TV estimate.
    pub tv_noise: f64,
    pub tv_noise_sd: f64,
    pub stable: bool,
}

impl BmDuality {
    fn compare(&self, stream: &SeedStream, h: f64, seed: u64) -> Result<(TestReport, CategoricalSample, CategoricalSample)> {
        let bits = self.x.len() * (self.y.len() - 1);
        let balls = sample_symbols(&stream.substream("balls"), self.replicates, bits, |rng| {
            Ok(indicator_array(&final_positions(&self.x, self.t, h, rng), &self.y)?.symbol())
        })?;
        let boxes = sample_symbols(&stream.substream("boxes"), self.replicates, bits, |rng| {
            Ok(indicator_array(&self.x, &final_positions(&self.y, self.t, h, rng))?.symbol())
        })?;
        let context = serde_json::json!({ "x": self.x, "y": self.y, "t": self.t, "h": h });
        let test = two_sample_test(&balls, &boxes)?.with_context(seed, context);
        Ok((test, balls, boxes))
    }
}

fn check_positions(x: &[f64], y: &[f64]) -> Result<()> {
    if !x.iter().chain(y).all(|v| v.is_finite()) {
        return Err(invalid("positions", "must be finite"));
    }
    indicator_array(x, y)?;
    Ok(())
}

impl Experiment for BmDuality {
    const NAME: &'static str = "bm-duality";
    type Output = BmDualityReport;

    fn validate(&self) -> Result<()> {
        check_count("replicates", self.replicates, MIN_TOTAL)?;
        check_step(self.h)?;
        check_time("t", self.t)?;
        check_positions(&self.x, &self.y)?;
        if !self.x.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::NonMonotone { what: "x" });
        }
        if self.check_halving && self.null_draws < 10 {
            return Err(invalid("null_draws", "need at least 10 resamples"));
        }
        Ok(())
    }

    fn execute(&self, seed: u64) -> Result<BmDualityReport> {
        let stream = SeedStream::new(seed, Self::NAME);
        let (test, balls, boxes) = self.compare(&stream.substream("h"), self.h, seed)?;
        let half_step = if self.check_halving {
            let (half, _, _) = self.compare(&stream.substream("h/2"), self.h / 2.0, seed)?;
            let mut rng = stream.substream("noise").rng(0);
            let (tv_noise, tv_noise_sd) = tv_null_level(&balls, &boxes, self.null_draws, &mut rng)?;
            let tv_shift = (test.tv - half.tv).abs();
            Some(HalvingCheck {
                test: half,
                tv_shift,
                tv_noise,
                tv_noise_sd,
                stable: tv_shift < tv_noise,
            })
        } else {
            None
        };
        Ok(BmDualityReport { test, half_step })
    }

    fn passed(out: &BmDualityReport) -> bool {
        out.test.verdict.passed() && out.half_step.as_ref().map_or(true, |c| c.test.verdict.passed() && c.stable)
    }

    fn summary(out: &BmDualityReport) -> String {
        let mut s = format!(
            "p-value {:.4}, TV {:.4} (bound {:.4})",
            out.test.p_value, out.test.tv, out.test.tv_bound
        );
        if let Some(c) = &out.half_step {
            s += &format!(
                "; h/2: p-value {:.4}, |ΔTV| {:.1e} vs MC error {:.4}",
                c.test.p_value, c.tv_shift, c.tv_noise
            );
        }
        s
    }

    fn smoke() -> Self {
        Self {
            replicates: 2000,
            h: 1e-2,
            null_draws: 20,
            ..Self::default()
        }
    }
}

/// Duality for particles entering at different times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaggeredDuality {
    pub births: Vec<f64>,
    /// Ball positions in birth order (any spatial order).
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub h: f64,
    #[serde(alias = "N")]
    pub replicates: u64,
}

impl Default for StaggeredDuality {
    fn default() -> Self {
        Self {
            births: vec![0.0, 0.3, 0.6],
            x: vec![-0.4, 0.5, 0.1],
            y: vec![-0.8, 0.0, 0.9],
            t: 1.0,
            h: 1e-3,
            replicates: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaggeredReport {
    pub test: TestReport,
}

impl StaggeredDuality {
    fn entries(&self) -> Result<StaggeredConfig> {
        StaggeredConfig::new(self.births.iter().copied().zip(self.x.iter().copied()).collect())
    }
}

impl Experiment for StaggeredDuality {
    const NAME: &'static str = "staggered-duality";
    type Output = StaggeredReport;

    fn validate(&self) -> Result<()> {
        check_count("replicates", self.replicates, MIN_TOTAL)?;
        check_step(self.h)?;
        check_time("t", self.t)?;
        check_positions(&self.x, &self.y)?;
        if self.births.len() != self.x.len() {
            return Err(Error::LengthMismatch {
                what: "births",
                expected: self.x.len(),
                found: self.births.len(),
            });
        }
        let cfg = self.entries()?;
        // The identity is only claimed once every ball has been born.
        if self.t < cfg.last_birth() {
            return Err(Error::BirthOutsideHorizon {
                birth: cfg.last_birth(),
                horizon: self.t,
            });
        }
        Ok(())
    }

    fn execute(&self, seed: u64) -> Result<StaggeredReport> {
        let stream = SeedStream::new(seed, Self::NAME);
        let cfg = self.entries()?;
        let (m, n) = (self.x.len(), self.y.len());
        let bits = m * (n - 1);
        let balls = sample_symbols(&stream.substream("balls"), self.replicates, bits, |rng| {
            let bm = evolve_staggered(cfg.entries(), &[self.t], self.h, rng, |_, _| {});
            let pos: Vec<f64> = bm.positions(m).into_iter().map(|p| p.expect("born by t")).collect();
            Ok(indicator_array(&pos, &self.y)?.symbol())
        })?;
        // Box side: ball i is tested against the boundaries at time t − s_i.
        let mut lags: Vec<f64> = self.births.iter().map(|s| self.t - s).collect();
        lags.sort_by(f64::total_cmp);
        lags.dedup();
        let y_births: Vec<(f64, f64)> = self.y.iter().map(|&v| (0.0, v)).collect();
        let boxes = sample_symbols(&stream.substream("boxes"), self.replicates, bits, |rng| {
            let mut at = vec![Vec::new(); lags.len()];
            evolve_staggered(&y_births, &lags, self.h, rng, |k, bm| {
                at[k] = bm.positions(n).into_iter().map(|p| p.expect("born at 0")).collect();
            });
            let mut symbol = 0u64;
            for (i, (&s, &x)) in self.births.iter().zip(&self.x).enumerate() {
                let k = lags.iter().position(|&l| l == self.t - s).expect("lag recorded");
                symbol |= indicator_array(&[x], &at[k])?.symbol() << (i * (n - 1));
            }
            Ok(symbol)
        })?;
        let context = serde_json::json!({ "births": self.births, "x": self.x, "y": self.y, "t": self.t, "h": self.h });
        Ok(StaggeredReport {
            test: two_sample_test(&balls, &boxes)?.with_context(seed, context),
        })
    }

    fn passed(out: &StaggeredReport) -> bool {
        out.test.verdict.passed()
    }

    fn summary(out: &StaggeredReport) -> String {
        format!(
            "p-value {:.4}, TV {:.4} (bound {:.4})",
            out.test.p_value, out.test.tv, out.test.tv_bound
        )
    }

    fn smoke() -> Self {
        Self {
            replicates: 2000,
            h: 1e-2,
            ..Self::default()
        }
    }
}

/// Realized covariation of a coalescing pair against `t − T₁₂ ∧ t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QvCheck {
    pub starts: [f64; 2],
    pub t: f64,
    pub h: f64,
    #[serde(alias = "N")]
    pub replicates: u64,
    /// Agreement tolerance in standard errors.
    pub sigmas: f64,
}

impl Default for QvCheck {
    fn default() -> Self {
        Self {
            starts: [0.0, 1.0],
            t: 1.0,
            h: 1e-4,
            replicates: 10_000,
            sigmas: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QvReport {
    /// Realized `Σ ΔX₁ΔX₂` up to `t`.
    pub covariation: McEstimate,
    /// `t − T₁₂ ∧ t`
    pub target: McEstimate,
    /// Paired difference of the two.
    pub difference: McEstimate,
    /// Covariation over the steps before the meeting step.
    pub pre_meeting: McEstimate,
    /// Fraction of runs that met by `t`.
    pub met: f64,
    pub sigmas: f64,
}

impl Experiment for QvCheck {
    const NAME: &'static str = "qv-check";
    type Output = QvReport;

    fn validate(&self) -> Result<()> {
        check_count("replicates", self.replicates, 2)?;
        check_step(self.h)?;
        check_time("t", self.t)?;
        if !(self.starts[0] <= self.starts[1]) {
            return Err(Error::NonMonotone { what: "starts" });
        }
        Ok(())
    }

    fn execute(&self, seed: u64) -> Result<QvReport> {
        let stream = SeedStream::new(seed, Self::NAME);
        let runs = stream.map_replicates(self.replicates, |rng, _| {
            let mut bm = CoalescingBm::from_starts(&self.starts);
            let mut pos = [Some(self.starts[0]), Some(self.starts[1])];
            let mut qv = 0.0;
            let mut pre = 0.0;
            let mut meet = if self.starts[0] == self.starts[1] { Some(0.0) } else { None };
            let eps = 1e-9 * self.h;
            while bm.time() < self.t - eps {
                let dt = self.h.min(self.t - bm.time());
                let before = pos;
                bm.advance(dt, rng);
                bm.write_positions(&mut pos);
                let d1 = pos[0].expect("alive") - before[0].expect("alive");
                let d2 = pos[1].expect("alive") - before[1].expect("alive");
                qv += d1 * d2;
                if meet.is_none() {
                    if bm.num_clusters() == 1 {
                        meet = Some(bm.time());
                    } else {
                        pre += d1 * d2;
                    }
                }
            }
            let target = self.t - meet.map_or(self.t, |m| m.min(self.t));
            (qv, target, pre, meet.is_some())
        });
        let qv: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let target: Vec<f64> = runs.iter().map(|r| r.1).collect();
        let diff: Vec<f64> = runs.iter().map(|r| r.0 - r.1).collect();
        let pre: Vec<f64> = runs.iter().map(|r| r.2).collect();
        let met = runs.iter().filter(|r| r.3).count() as f64 / runs.len() as f64;
        Ok(QvReport {
            covariation: McEstimate::from_samples(&qv),
            target: McEstimate::from_samples(&target),
            difference: McEstimate::from_samples(&diff),
            pre_meeting: McEstimate::from_samples(&pre),
            met,
            sigmas: self.sigmas,
        })
    }

    fn passed(out: &QvReport) -> bool {
        let within = |e: &McEstimate| e.mean.abs() <= out.sigmas * e.std_error;
        within(&out.difference) && within(&out.pre_meeting)
    }

    fn summary(out: &QvReport) -> String {
        format!(
            "E⟨X₁,X₂⟩ = {:.4}, E(t − T∧t) = {:.4}, paired diff {:.2} SE; pre-meeting {:.2} SE",
            out.covariation.mean,
            out.target.mean,
            out.difference.mean / out.difference.std_error,
            out.pre_meeting.mean / out.pre_meeting.std_error
        )
    }

    fn smoke() -> Self {
        Self {
            replicates: 500,
            h: 1e-3,
            ..Self::default()
        }
    }
}
