//! Win-probability modeling and player valuation for CSGO-style match event
//! streams.
//!
//! The pipeline runs `ingest` (JSON event logs or synthetic matches) →
//! `model::replay_round` (game states) → `features` (numeric rows) →
//! `winprob` (trained estimators) → `valuation` (action values, WPA,
//! classic metrics). `navmesh` supplies the bombsite graph distances.

pub mod cli;
pub mod features;
pub mod ingest;
pub mod model;
pub mod navmesh;
pub mod valuation;
pub mod winprob;
