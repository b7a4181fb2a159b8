//! Core library for the compulsive gambler process: meeting-model
//! generators, an event-driven simulator built on first-meeting schedules,
//! replicate statistics, exact closed forms and bounds, and a numerical
//! solver for the tree generating-function recursions.

// negated float comparisons like `!(p >= 0.0)` are deliberate: they also
// reject NaN, which the suggested `p < 0.0` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod solver;
pub mod stats;

pub use engine::{
    ClockKind, FirstMeetingSchedule, MoneyState, RunResult, SizeBiasedOrder, TokenState,
    TrajectoryEvent,
};
pub use error::Error;
pub use models::{AgentId, GwOffspring, MeetingModel};
pub use solver::{Grid, PgfTable};
pub use stats::{EstimateCI, Histogram};

pub type Result<T> = std::result::Result<T, Error>;
