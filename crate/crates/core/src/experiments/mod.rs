//! End-to-end verification experiments: one per checked claim, each with a
//! serializable configuration and report. The command-line driver and the
//! acceptance suite both run these.

mod airy;
mod brownian;
mod flow;
mod lattice;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use airy::{AiryTable, AiryTableReport};
pub use brownian::{BmDuality, BmDualityReport, QvCheck, QvReport, StaggeredDuality, StaggeredReport};
pub use flow::{Avoidance, AvoidanceCaseReport, AvoidanceReport, Stationary, StationaryReport, StationaryStep, Wedge, WedgeReport};
pub use lattice::{
    GenDuality, GenDualityReport, Marginal, MarginalCase, MarginalReport, NnNecessity, NnReport, RwCase, RwDuality, RwDualityReport,
};

use crate::error::Result;
use crate::stats::Verdict;

/// A configured experiment.
pub trait Experiment: Serialize + DeserializeOwned + Default + Clone + Send + Sync {
    /// Command name, also the label of the experiment's random stream.
    const NAME: &'static str;
    type Output: Serialize;

    /// Checks every parameter against the preconditions of the routines it feeds.
    fn validate(&self) -> Result<()>;

    fn execute(&self, seed: u64) -> Result<Self::Output>;

    fn passed(out: &Self::Output) -> bool;

    /// One human-readable line.
    fn summary(out: &Self::Output) -> String;

    /// A much cheaper configuration exercising the same code paths.
    fn smoke() -> Self;
}

/// What an experiment run writes out.
#[derive(Clone, Debug, Serialize)]
pub struct Report<C, O> {
    pub experiment: &'static str,
    pub seed: u64,
    pub verdict: Verdict,
    pub summary: String,
    pub config: C,
    pub result: O,
}

impl<C: Serialize, O: Serialize> Report<C, O> {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn run<E: Experiment>(config: &E, seed: u64) -> Result<Report<E, E::Output>> {
    config.validate()?;
    let result = config.execute(seed)?;
    Ok(Report {
        experiment: E::NAME,
        seed,
        verdict: Verdict::from_bool(E::passed(&result)),
        summary: E::summary(&result),
        config: config.clone(),
        result,
    })
}

pub(crate) fn check_count(name: &'static str, n: u64, min: u64) -> Result<()> {
    if n >= min {
        Ok(())
    } else {
        Err(crate::error::invalid(name, format!("{n} is below the minimum of {min}")))
    }
}
