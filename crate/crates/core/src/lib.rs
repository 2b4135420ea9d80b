//! Testbed for a camera- and proximity-sensor-instrumented fridge.
//!
//! * [`detection`]: moving-window add/remove detection and item correlation
//! * [`sim`]: deterministic simulation of door, sensors and camera
//! * [`recognition`]: leased recognizer pool, frame cache, canonicalization
//! * [`eval`]: scripted experiments, truth classification, bootstrap stats
//! * [`rig`]: simulator, engine and recognizer wired together
//! * [`takeout`]: dwell-time alerts, time-of-day recommendations, search

pub mod config;
pub mod detection;
pub mod eval;
pub mod recognition;
pub mod rig;
pub mod sim;
pub mod takeout;

pub use config::{ConfigError, TestbedConfig};
