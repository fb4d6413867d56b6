//! Seasonal wind-generation and load profiling feeding Monte-Carlo AC
//! power-flow scans for bus voltage violations.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ingest`] reads half-hourly wind histories, monthly sector energy
//!   tables and network cases (MATPOWER text or the native JSON schema).
//! * [`wind`] builds normalized seasonal normative-day profiles with their
//!   deviation envelopes, the annual speed-based profile, Weibull fits and
//!   hold-out outlier validation.
//! * [`load`] composes residential, commercial and industrial components
//!   into 48-slot seasonal system demand curves.
//! * [`grid`] holds the Newton–Raphson AC power flow and the loss-iterated
//!   economic dispatch used as the optimal-injection surrogate.
//! * [`scan`] draws wind-bus selections, applies seasonal scale factors,
//!   counts voltage violations and ranks vulnerable buses.
//! * [`report`] persists profiles, reports and the reproducibility manifest.
//!
//! Scan cells run on rayon when the `parallel` feature is enabled (the
//! default); [`Execution::Serial`] forces the sequential path and is what
//! every build falls back to without the feature.

pub mod error;
pub mod exec;
pub mod grid;
pub mod ingest;
pub mod load;
pub mod report;
pub mod scan;
pub mod season;
pub mod synthetic;
pub mod wind;

pub use error::{Error, ErrorKind, Result};
pub use exec::Execution;
pub use season::{Period, Season};

/// Half-hour slots per day.
pub const SLOTS_PER_DAY: usize = 48;
