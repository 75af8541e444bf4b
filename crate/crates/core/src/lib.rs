//! Avatar placement in a cloudlet network with live-migration costs.
//!
//! Each slot, every avatar (a VM serving one mobile UE) may be moved to a
//! different cloudlet. Moving cuts the UE's core-network delay but costs
//! a pre-copy live migration weighted by the avatar's resource use. The
//! [`placement`] module chooses the new assignment and [`engine`] runs the
//! slot-by-slot simulation.

pub mod config;
pub mod domain;
pub mod engine;
pub mod migration;
pub mod mobility;
pub mod placement;
pub mod report;
pub mod workload;

pub use config::{ConfigError, SimConfig};
pub use domain::{Assignment, Association, DelayMatrix, Position, Site, Topology};
pub use engine::{run, run_matrix, MetricsReport, Scenario, SimError, SlotMetrics, Summary};
pub use migration::{ImpactWeights, MigrationError, MigrationParams, ProfitBreakdown};
pub use placement::{PlacementError, PlacementInstance, PlacementPlan, Strategy};
pub use workload::{AvatarSpec, AvatarWorkload, DirtyRateMode, Trace, TraceError};
