//! Pipeline configuration: mode, cadence, stage configs, sink selection.

use panoptic_core::feedback::FeedbackPolicy;
use panoptic_core::fusion::FusionConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every frame is processed in order; outputs are byte-deterministic.
    Lossless,
    /// A busy stage lets newer frames replace waiting ones; drops counted.
    LatestWins,
}

/// Which run artifacts get written.
#[derive(Debug, Clone, Copy)]
pub struct SinkConfig {
    pub fused: bool,
    pub events: bool,
    pub analytics: bool,
    pub timing: bool,
}

impl Default for SinkConfig {
    fn default() -> SinkConfig {
        SinkConfig { fused: true, events: true, analytics: true, timing: true }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: Mode,
    /// Nominal input cadence; used to synthesize arrival times when frame
    /// timestamps are absent or not strictly increasing.
    pub target_rate_fps: f64,
    pub fusion: FusionConfig,
    pub policy: FeedbackPolicy,
    /// Sliding-window length for the analytics aggregates.
    pub analytics_window: usize,
    /// Artificial per-frame stage cost. In latest-wins replay this is the
    /// virtual service time driving the drop decisions; in live mode the
    /// worker really sleeps for it.
    pub stage_stall_us: u64,
    pub sinks: SinkConfig,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            mode: Mode::Lossless,
            target_rate_fps: 4.0,
            fusion: FusionConfig::default(),
            policy: FeedbackPolicy::default(),
            analytics_window: 4,
            stage_stall_us: 0,
            sinks: SinkConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.target_rate_fps > 0.0) {
            return Err(format!("target_rate_fps {} must be > 0", self.target_rate_fps));
        }
        if self.analytics_window == 0 {
            return Err("analytics window must be >= 1".to_string());
        }
        self.fusion.validate()?;
        self.policy.validate()?;
        Ok(())
    }
}
