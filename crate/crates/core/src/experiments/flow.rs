use serde::{Deserialize, Serialize};

use super::{check_count, Experiment};
use crate::brownian::check_step;
use crate::error::{invalid, Result};
use crate::flow::{avoidance_probability_mc, sample_s_infty, wedge_area, AvoidanceSetup, AvoidanceSide, FlowConfig, Horizon};
use crate::seed::SeedStream;
use crate::special::{stationary_avoidance, stationary_intensity};
use crate::stats::McEstimate;

/// Direct against dual estimates of the avoidance probability of `S_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Avoidance {
    /// Each case is a list of disjoint intervals `(a, b]`.
    pub cases: Vec<Vec<(f64, f64)>>,
    pub lambda: f64,
    pub t: f64,
    pub h: f64,
    #[serde(alias = "N")]
    pub replicates: u64,
    /// Extra space simulated around the intervals; `4√t` when absent.
    pub margin: Option<f64>,
    pub sigmas: f64,
}

impl Default for Avoidance {
    fn default() -> Self {
        Self {
            cases: vec![vec![(0.0, 1.0)], vec![(0.0, 1.0), (1.5, 2.5)]],
            lambda: 1.0,
            t: 2.0,
            h: 2e-3,
            replicates: 100_000,
            margin: None,
            sigmas: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceCaseReport {
    pub intervals: Vec<(f64, f64)>,
    pub direct: McEstimate,
    pub dual: McEstimate,
    /// `|direct − dual|` in combined standard errors.
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceReport {
    pub cases: Vec<AvoidanceCaseReport>,
    pub sigmas: f64,
}

impl Avoidance {
    fn setups(&self) -> Result<Vec<AvoidanceSetup>> {
        self.cases
            .iter()
            .map(|iv| {
                let s = AvoidanceSetup::new(iv.clone(), self.t, self.lambda, self.h)?;
                match self.margin {
                    Some(m) => s.with_margin(m),
                    None => Ok(s),
                }
            })
            .collect()
    }
}

impl Experiment for Avoidance {
    const NAME: &'static str = "avoidance";
    type Output = AvoidanceReport;

    fn validate(&self) -> Result<()> {
        check_count("replicates", self.replicates, 2)?;
        if self.cases.is_empty() {
            return Err(invalid("cases", "need at least one case"));
        }
        self.setups().map(|_| ())
    }

    fn execute(&self, seed: u64) -> Result<AvoidanceReport> {
        let stream = SeedStream::new(seed, Self::NAME);
        let mut cases = Vec::new();
        for (k, setup) in self.setups()?.iter().enumerate() {
            let sub = stream.substream(&format!("case{k}"));
            let direct = avoidance_probability_mc(setup, AvoidanceSide::Direct, self.replicates, &sub.substream("direct"))?;
            let dual = avoidance_probability_mc(setup, AvoidanceSide::Dual, self.replicates, &sub.substream("dual"))?;
            cases.push(AvoidanceCaseReport {
                intervals: setup.intervals().to_vec(),
                z: direct.z_distance(&dual),
                direct,
                dual,
            });
        }
        Ok(AvoidanceReport {
            cases,
            sigmas: self.sigmas,
        })
    }

    fn passed(out: &AvoidanceReport) -> bool {
        out.cases.iter().all(|c| c.z <= out.sigmas)
    }

    fn summary(out: &AvoidanceReport) -> String {
        out.cases
            .iter()
            .map(|c| {
                format!(
                    "{} interval(s): direct {:.4} vs dual {:.4} ({:.2} SE)",
                    c.intervals.len(),
                    c.direct.mean,
                    c.dual.mean,
                    c.z
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    fn smoke() -> Self {
        Self {
            replicates: 500,
            h: 2e-2,
            ..Self::default()
        }
    }
}

/// Laplace transform of the infinite-horizon wedge mass against the Airy ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Wedge {
    pub gap: f64,
    pub lambda: f64,
    pub h: f64,
    #[serde(alias = "N")]
    pub replicates: u64,
    pub tolerance: f64,
}

impl Default for Wedge {
    fn default() -> Self {
        Self {
            gap: 1.0,
            lambda: 1.0,
            h: 1e-3,
            replicates: 100_000,
            tolerance: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeReport {
    /// Mean of `exp(−λ·M_∞(]0, gap]))`.
    pub laplace: McEstimate,
    pub exact: f64,
    pub mean_area: f64,
    pub mean_steps: f64,
    /// Samples that hit the step cap at least once before finishing.
    pub capped_samples: u64,
    pub restarts: u64,
    pub tolerance: f64,
}

impl Experiment for Wedge {
    const NAME: &'static str = "wedge";
    type Output = WedgeReport;

    fn validate(&self) -> Result<()> {
        check_count("replicates", self.replicates, 2)?;
        check_step(self.h)?;
        if !(self.gap > 0.0 && self.gap.is_finite()) || !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("gap", "need gap > 0 and λ ≥ 0"));
        }
        Ok(())
    }

    fn execute(&self, seed: u64) -> Result<WedgeReport> {
        let stream = SeedStream::new(seed, Self::NAME);
        let samples = stream.map_replicates(self.replicates, |rng, _| wedge_area(0.0, self.gap, Horizon::Infinite, self.h, rng));
        let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = samples.iter().map(|s| (-self.lambda * s.area).exp()).collect();
        let n = samples.len() as f64;
        Ok(WedgeReport {
            laplace: McEstimate::from_samples(&values),
            exact: stationary_avoidance(self.lambda, self.gap)?,
            mean_area: samples.iter().map(|s| s.area).sum::<f64>() / n,
            mean_steps: samples.iter().map(|s| s.steps as f64).sum::<f64>() / n,
            capped_samples: samples.iter().filter(|s| s.restarts > 0).count() as u64,
            restarts: samples.iter().map(|s| u64::from(s.restarts)).sum(),
            tolerance: self.tolerance,
        })
    }

    fn passed(out: &WedgeReport) -> bool {
        let err = (out.laplace.mean - out.exact).abs();
        err <= out.tolerance && 3.0 * out.laplace.std_error <= out.tolerance
    }

    fn summary(out: &WedgeReport) -> String {
        format!(
            "E exp(−λM) = {:.4} ± {:.4} vs Ai ratio {:.4}; {} capped samples",
            out.laplace.mean,
            3.0 * out.laplace.std_error,
            out.exact,
            out.capped_samples
        )
    }

    fn smoke() -> Self {
        Self {
            replicates: 2000,
            h: 1e-2,
            tolerance: 0.05,
            ..Self::default()
        }
    }
}

/// Intensity and unit-interval avoidance of `S_∞` on a core window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stationary {
    pub lambda: f64,
    pub core_length: f64,
    pub h: f64,
    #[serde(alias = "N")]
    pub replicates: u64,
    /// First backward horizon tried; doubled until the intensity settles.
    pub t_back_start: f64,
    pub t_back_max: f64,
    /// Margin override; `4√T_back` when absent.
    pub margin: Option<f64>,
    /// Relative tolerance on the intensity.
    pub tolerance: f64,
    /// Rerun the chosen horizon with twice the margin.
    pub check_margin: bool,
}

impl Default for Stationary {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            core_length: 20.0,
            h: 1e-2,
            replicates: 500,
            t_back_start: 0.5,
            t_back_max: 64.0,
            margin: None,
            tolerance: 0.05,
            check_margin: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryStep {
    pub t_back: f64,
    pub margin: f64,
    pub intensity: McEstimate,
    /// Fraction of unit cells of the core with no point.
    pub unit_avoidance: McEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub steps: Vec<StationaryStep>,
    /// Horizon picked by the doubling rule.
    pub t_back: f64,
    pub converged: bool,
    pub intensity: McEstimate,
    pub exact_intensity: f64,
    pub relative_error: f64,
    pub unit_avoidance: McEstimate,
    pub exact_unit_avoidance: f64,
    pub doubled_margin: Option<StationaryStep>,
    pub tolerance: f64,
}

impl Stationary {
    fn step(&self, stream: &SeedStream, t_back: f64, margin: f64) -> Result<StationaryStep> {
        let cfg = FlowConfig {
            lambda: self.lambda,
            window: (-margin, self.core_length + margin),
            horizon: t_back,
            step: self.h,
            truncation: t_back,
            margin,
        };
        cfg.validate()?;
        let cells = self.core_length.floor() as usize;
        let sub = stream.substream(&format!("t_back={t_back}/margin={margin}"));
        let runs = sub.map_replicates(self.replicates, |rng, _| -> Result<(f64, f64)> {
            let s = sample_s_infty(&cfg, rng)?;
            let density = s.count_distinct(0.0, self.core_length) as f64 / self.core_length;
            let empty = (0..cells).filter(|&c| s.count_distinct(c as f64, c as f64 + 1.0) == 0).count();
            Ok((density, empty as f64 / cells as f64))
        });
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        let density: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let empty: Vec<f64> = runs.iter().map(|r| r.1).collect();
        Ok(StationaryStep {
            t_back,
            margin,
            intensity: McEstimate::from_samples(&density),
            unit_avoidance: McEstimate::from_samples(&empty),
        })
    }

    fn margin_for(&self, t_back: f64) -> f64 {
        self.margin.unwrap_or_else(|| crate::flow::default_margin(t_back))
    }
}

impl Experiment for Stationary {
    const NAME: &'static str = "stationary";
    type Output = StationaryReport;

    fn validate(&self) -> Result<()> {
        check_count("replicates", self.replicates, 2)?;
        check_step(self.h)?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", "must be positive"));
        }
        if !(self.core_length >= 1.0 && self.core_length.is_finite()) {
            return Err(invalid("core_length", "must be at least 1"));
        }
        if !(self.t_back_start > 0.0 && self.t_back_start < self.t_back_max && self.t_back_max.is_finite()) {
            return Err(invalid("t_back_start", "need 0 < t_back_start < t_back_max"));
        }
        if let Some(m) = self.margin {
            crate::brownian::check_time("margin", m)?;
        }
        Ok(())
    }

    fn execute(&self, seed: u64) -> Result<StationaryReport> {
        let stream = SeedStream::new(seed, Self::NAME);
        let mut t_back = self.t_back_start;
        let mut steps = vec![self.step(&stream, t_back, self.margin_for(t_back))?];
        let mut converged = false;
        while 2.0 * t_back <= self.t_back_max {
            t_back *= 2.0;
            let next = self.step(&stream, t_back, self.margin_for(t_back))?;
            let prev = steps.last().expect("nonempty");
            let settled = (next.intensity.mean - prev.intensity.mean).abs() < next.intensity.std_error.hypot(prev.intensity.std_error);
            steps.push(next);
            if settled {
                converged = true;
                break;
            }
        }
        let chosen = steps.last().expect("nonempty").clone();
        let doubled_margin = if self.check_margin {
            Some(self.step(&stream, chosen.t_back, 2.0 * chosen.margin)?)
        } else {
            None
        };
        let exact = stationary_intensity(self.lambda)?;
        Ok(StationaryReport {
            t_back: chosen.t_back,
            converged,
            intensity: chosen.intensity,
            exact_intensity: exact,
            relative_error: (chosen.intensity.mean - exact).abs() / exact,
            unit_avoidance: chosen.unit_avoidance,
            exact_unit_avoidance: stationary_avoidance(self.lambda, 1.0)?,
            doubled_margin,
            steps,
            tolerance: self.tolerance,
        })
    }

    fn passed(out: &StationaryReport) -> bool {
        out.relative_error <= out.tolerance
    }

    fn summary(out: &StationaryReport) -> String {
        format!(
            "T_back = {}: intensity {:.4} ± {:.4} vs {:.5} ({:.2}% off); unit avoidance {:.4} vs {:.4}",
            out.t_back,
            out.intensity.mean,
            out.intensity.std_error,
            out.exact_intensity,
            100.0 * out.relative_error,
            out.unit_avoidance.mean,
            out.exact_unit_avoidance
        )
    }

    fn smoke() -> Self {
        Self {
            replicates: 40,
            core_length: 5.0,
            h: 5e-2,
            t_back_max: 2.0,
            tolerance: 0.5,
            ..Self::default()
        }
    }
}
