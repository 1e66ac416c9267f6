//! Order effects in event logs: ingestion, family detection, estimation,
//! and a finite simulator with known ground truth.

pub mod estimate;
pub mod family;
pub mod log;
pub mod model;
pub mod simulate;
pub mod support;
pub mod witness;

pub use estimate::{estimate_family, EstimateConfig, Estimate, EstimationReport};
pub use family::{detect_families, extract_episodes, EndpointClass, Episode, FamilySpec, Order};
pub use log::{ingest_log, ingest_log_with, write_log, EventLog, IngestOptions};
pub use model::{CausalModel, ModelSpec, ObservationalLaw, Trajectory};
pub use simulate::{simulate_episodes, simulate_log};
pub use support::{log_support_report, model_support_report, SupportReport};
pub use witness::{nonid_witness, NonIdWitness};
