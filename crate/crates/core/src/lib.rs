//! Performance analysis and output-rate control for a large dam modelled as a
//! state-dependent M/GI/1 queue.

pub mod analytics;
pub mod distributions;
pub mod error;
pub mod numeric;
pub mod asymptotics;
pub mod control;
pub mod minimize;
mod precision;
pub mod rng;
pub mod series;
pub mod simulator;
pub mod verify;

pub use analytics::{
    BusyPeriodCounts, BusyPeriodMetrics, CostModel, DamModel, ExactAnalysis, Precision, StationaryMetrics,
};
pub use control::{ControlSolution, CostRegime, SolveMode};
pub use distributions::ServiceDistribution;
pub use error::{DamError, Result};
pub use simulator::{SimulationConfig, SimulationReport};
pub use numeric::ScaledFloat;
