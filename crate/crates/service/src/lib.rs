//! Fridge web service: per-fridge event logs behind a JSON/HTTP API with
//! long-poll notifications, plus the take-out assistant endpoints and an
//! optional simulated fridge per id.

pub mod clock;
pub mod error;
pub mod http;
pub mod hub;
pub mod model;
pub mod persist;

pub use clock::{Clock, ManualClock, SystemClock};
pub use error::ServiceError;
pub use http::router;
pub use hub::{Fridge, Hub, HubConfig, SimOutcome, DEFAULT_POLL_TIMEOUT_MS, MAX_POLL_TIMEOUT_MS};
pub use model::{EventEnvelope, FridgeState, HistoryAction, HistoryEntry, IncomingEvent, IncomingItem, StateView};
