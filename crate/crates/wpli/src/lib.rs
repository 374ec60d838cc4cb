//! Scenario files, Monte Carlo campaigns, persistence and IQ ingest on top
//! of `wpli-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN scores count as accepted

pub mod campaign;
pub mod db;
pub mod error;
pub mod iq;
pub mod results;
pub mod scenario;

pub use campaign::{run_campaign, CampaignResult, DecisionReport, PointResult};
pub use error::{CliError, Result};
pub use scenario::{load_scenario, Scenario};
