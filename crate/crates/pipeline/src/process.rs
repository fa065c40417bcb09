//! The per-frame processing chain shared by replay and live modes:
//! fuse, depth stats, feedback scheduling, analytics counting.

use std::time::Instant;

use panoptic_core::analytics::{count_instances, FrameCounts};
use panoptic_core::depth::{segment_stats, DepthMap, SegmentInfo};
use panoptic_core::feedback::{schedule, score_segments, FeedbackEvent, SchedulerState};
use panoptic_core::fusion::{fuse_frame, PanopticMap};
use panoptic_core::LabelSchema;
use panoptic_transport::Frame;

use crate::config::PipelineConfig;
use crate::timing::TimingCollector;

pub const STAGE_NAMES: [&str; 4] = ["fuse", "depth", "feedback", "analytics"];
const STAGE_FUSE: usize = 0;
const STAGE_DEPTH: usize = 1;
const STAGE_FEEDBACK: usize = 2;
const STAGE_ANALYTICS: usize = 3;

/// Everything one frame produced.
#[derive(Debug, Clone)]
pub struct ProcessedFrame {
    pub frame_id: u64,
    pub timestamp_us: u64,
    pub panoptic: PanopticMap,
    pub segments: Vec<SegmentInfo>,
    pub events: Vec<FeedbackEvent>,
    pub counts: FrameCounts,
}

/// A frame the pipeline had to skip, and why.
#[derive(Debug, Clone)]
pub struct FrameIssue {
    pub frame_id: u64,
    pub message: String,
}

/// Owns the scheduler state and timing samples for one session.
pub struct FrameProcessor {
    schema: LabelSchema,
    config: PipelineConfig,
    scheduler: SchedulerState,
    pub timing: TimingCollector,
}

impl FrameProcessor {
    pub fn new(schema: LabelSchema, config: PipelineConfig) -> FrameProcessor {
        FrameProcessor {
            schema,
            config,
            scheduler: SchedulerState::new(),
            timing: TimingCollector::new(&STAGE_NAMES),
        }
    }

    pub fn schema(&self) -> &LabelSchema {
        &self.schema
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Run the full chain on one frame. Requires semantic and instance
    /// planes; depth is optional (distances come back undefined without it).
    pub fn process(&mut self, frame: &Frame) -> Result<ProcessedFrame, FrameIssue> {
        let issue = |message: String| FrameIssue { frame_id: frame.frame_id, message };
        let started = Instant::now();

        let semantic = frame
            .semantic
            .as_ref()
            .ok_or_else(|| issue("missing semantic plane".to_string()))?;
        let raw_instances = frame
            .instances
            .as_ref()
            .ok_or_else(|| issue("missing instance plane".to_string()))?;

        let t = Instant::now();
        let mut predictions = Vec::with_capacity(raw_instances.len());
        for inst in raw_instances {
            predictions
                .push(inst.to_prediction().map_err(|e| issue(format!("bad instance: {e}")))?);
        }
        let panoptic = fuse_frame(semantic, &predictions, &self.schema, &self.config.fusion)
            .map_err(|e| issue(format!("fusion failed: {e}")))?;
        self.timing.record(STAGE_FUSE, t.elapsed().as_micros() as u64);

        let t = Instant::now();
        let owned_depth;
        let depth = match &frame.depth {
            Some(d) => d,
            None => {
                owned_depth = DepthMap::invalid(panoptic.width(), panoptic.height());
                &owned_depth
            }
        };
        let segments =
            segment_stats(&panoptic, depth).map_err(|e| issue(format!("depth stats: {e}")))?;
        self.timing.record(STAGE_DEPTH, t.elapsed().as_micros() as u64);

        let t = Instant::now();
        let candidates = score_segments(&segments, &self.schema, &self.config.policy);
        let events = schedule(
            frame.frame_id,
            frame.timestamp_us,
            &candidates,
            &self.config.policy,
            &mut self.scheduler,
        )
        .map_err(|e| issue(format!("scheduling: {e}")))?;
        self.timing.record(STAGE_FEEDBACK, t.elapsed().as_micros() as u64);

        let t = Instant::now();
        let counts = count_instances(&panoptic, &self.schema, frame.frame_id, frame.timestamp_us);
        self.timing.record(STAGE_ANALYTICS, t.elapsed().as_micros() as u64);

        self.timing.record_end_to_end(started.elapsed().as_micros() as u64);
        Ok(ProcessedFrame {
            frame_id: frame.frame_id,
            timestamp_us: frame.timestamp_us,
            panoptic,
            segments,
            events,
            counts,
        })
    }
}
