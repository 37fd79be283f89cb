//! Expansion quantities: cell systems and subset search, profiles, Cheeger
//! constants, spectral bounds and the constant-manipulation formulas.

pub mod cells;
pub mod cheeger;
pub mod engine;
pub mod metric;
pub mod profile;
pub mod spectral;
pub mod transforms;

pub use cells::{action_system, CellSystem, Granularity, Neighborhood};
pub use engine::{MinimizationStrategy, SearchOptions, StrategyRegistry};
pub use metric::MeasuredMetricSpace;
pub use profile::{domain_profile, expansion_profile, metric_profile, ExpansionProfile, ProfileEntry, Scope};
