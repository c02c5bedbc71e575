//! Energy-cost model and discrete-event simulator for a device-to-device
//! (D2D) storage community under node churn.
//!
//! A community of mobile nodes caches a single file and serves requests
//! either locally (cost 1 per file) or from the base station (cost R). The
//! crate compares four delivery policies — base-station only, simple
//! caching, 2-replication, and (k+1, k, k) MBR regenerating-code caching —
//! both in closed form ([`analytic`]) and by simulation ([`engine`]) over an
//! M/M/∞ churn process ([`population`]).

pub mod analytic;
pub mod codes;
pub mod engine;
mod error;
pub mod population;
pub mod seed;

pub use analytic::{PolicySpec, SystemParams};
pub use codes::MbrCodeParams;
pub use engine::{CostBreakdown, ReplicationSummary, RunStats, SimConfig};
pub use error::ParamError;
pub use population::{NodeId, PopulationEvent, PopulationTrajectory};
