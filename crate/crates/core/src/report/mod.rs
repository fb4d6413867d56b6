//! Persistence of profiles and reports, the reproducibility manifest and the
//! pipeline stages built on them.

pub mod documents;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod summary;

pub use documents::*;
pub use manifest::{PipelineManifest, StageRecord, StageRun, MANIFEST_FILE};
pub use pipeline::{
    build_load, build_wind, report, scan, validate_wind, LoadConfig, PipelineConfig, ScanSection, WindConfig,
};
pub use summary::{render_summary, SummaryInputs};
