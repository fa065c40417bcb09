//! Staged streaming pipeline over the core toolkit: ingest, fusion, depth
//! stats, feedback and analytics, with replay and live modes, latency
//! percentiles, and a latest-wins frame-drop policy.

mod config;
mod live;
mod process;
mod replay;
mod slot;
mod timing;

pub use config::{Mode, PipelineConfig, SinkConfig};
pub use live::{start_live, LiveServer};
pub use process::{FrameIssue, FrameProcessor, ProcessedFrame, STAGE_NAMES};
pub use replay::{run_replay, PipelineError, RunReport};
pub use slot::Slot;
pub use timing::{StageStats, TimingCollector, TimingReport};
