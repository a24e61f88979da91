//! Coalescing random walks and coalescing Brownian motions on the line.

pub mod brownian;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod lattice;
pub mod partition;
pub mod seed;
pub mod special;
pub mod stats;

pub use brownian::{BMEnsembleConfig, CoalescingBm, PathGrid, StaggeredConfig};
pub use error::{Error, Result};
pub use experiments::{run, Experiment, Report};
pub use flow::{FlowConfig, PointSample};
pub use lattice::boxes::{BoxFunction, IndicatorArray};
pub use lattice::{HalfInt, Lattice, LatticeEnsemble, WalkConfig};
pub use partition::IntervalPartition;
pub use seed::{SeedStream, SimRng};
pub use stats::{CategoricalSample, McEstimate, TestReport, Verdict};
