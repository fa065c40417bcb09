//! Sequence replay: lossless (every frame, deterministic outputs) or
//! latest-wins (virtual-time drops driven by frame timestamps).

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use panoptic_core::analytics::{aggregate, SequenceDistribution};
use panoptic_core::feedback::{events_to_jsonl, FeedbackEvent};
use panoptic_core::LabelSchema;
use panoptic_transport::{read_sequence, write_sequence, Frame, SequenceError};
use thiserror::Error;

use crate::config::{Mode, PipelineConfig};
use crate::process::{FrameIssue, FrameProcessor, ProcessedFrame};
use crate::timing::TimingReport;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("analytics aggregation: {0}")]
    Analytics(#[from] panoptic_core::analytics::AnalyticsError),
}

/// Everything a replay run produced. The same data lands in the out
/// directory when sinks are enabled.
#[derive(Debug)]
pub struct RunReport {
    pub processed: Vec<u64>,
    pub dropped: u64,
    pub issues: Vec<FrameIssue>,
    pub events: Vec<FeedbackEvent>,
    pub analytics: SequenceDistribution,
    pub timing: TimingReport,
}

/// Virtual-time capacity-1 latest-wins decision: which frame indices reach
/// the worker given arrival times and a fixed service cost. At equal times
/// the waiting worker picks up before the new frame lands.
fn latest_wins_selection(arrivals: &[u64], service_us: u64) -> (Vec<usize>, u64) {
    let mut selected = Vec::new();
    let mut dropped = 0u64;
    let mut worker_free_at = 0u64;
    let mut waiting: Option<(usize, u64)> = None;
    for (idx, &arrived_at) in arrivals.iter().enumerate() {
        if let Some((held_idx, held_at)) = waiting {
            let pickup_at = worker_free_at.max(held_at);
            if pickup_at <= arrived_at {
                selected.push(held_idx);
                worker_free_at = pickup_at + service_us;
            } else {
                dropped += 1;
            }
        }
        waiting = Some((idx, arrived_at));
    }
    if let Some((held_idx, _)) = waiting {
        selected.push(held_idx);
    }
    (selected, dropped)
}

/// Arrival times for the drop decision: relative frame timestamps when they
/// are strictly increasing, otherwise synthesized from the target rate.
fn arrival_times(frames: &[Frame], rate_fps: f64) -> Vec<u64> {
    let strictly_increasing =
        frames.windows(2).all(|w| w[1].timestamp_us > w[0].timestamp_us);
    if strictly_increasing && !frames.is_empty() {
        let base = frames[0].timestamp_us;
        frames.iter().map(|f| f.timestamp_us - base).collect()
    } else {
        let period = (1_000_000.0 / rate_fps) as u64;
        (0..frames.len() as u64).map(|i| i * period).collect()
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, contents)
        .map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

/// Replay a sequence directory through the full chain. Outputs are written
/// under `out_dir` when given: `fused/` (sequence with panoptic planes),
/// `events.jsonl`, `analytics.csv`, `analytics_summary.json`, `timing.txt`,
/// `timing.json`.
pub fn run_replay(
    sequence_dir: &Path,
    out_dir: Option<&Path>,
    schema: &LabelSchema,
    config: &PipelineConfig,
) -> Result<RunReport, PipelineError> {
    config.validate().map_err(PipelineError::InvalidConfig)?;
    let frames = read_sequence(sequence_dir)?;

    // Frames that cannot enter the chain at all are skipped at ingest and
    // never occupy the handoff slot.
    let mut issues = Vec::new();
    let mut viable: Vec<&Frame> = Vec::with_capacity(frames.len());
    for frame in &frames {
        if frame.semantic.is_none() || frame.instances.is_none() {
            let missing =
                if frame.semantic.is_none() { "semantic" } else { "instances" };
            issues.push(FrameIssue {
                frame_id: frame.frame_id,
                message: format!("missing {missing} plane"),
            });
            continue;
        }
        viable.push(frame);
    }

    let (selection, dropped) = match config.mode {
        Mode::Lossless => ((0..viable.len()).collect::<Vec<_>>(), 0),
        Mode::LatestWins => {
            let arrivals: Vec<u64> =
                arrival_times(&frames, config.target_rate_fps)
                    .into_iter()
                    .zip(&frames)
                    .filter(|(_, f)| f.semantic.is_some() && f.instances.is_some())
                    .map(|(t, _)| t)
                    .collect();
            latest_wins_selection(&arrivals, config.stage_stall_us)
        }
    };

    let mut processor = FrameProcessor::new(schema.clone(), config.clone());
    let mut processed: Vec<ProcessedFrame> = Vec::with_capacity(selection.len());
    for idx in selection {
        match processor.process(viable[idx]) {
            Ok(p) => processed.push(p),
            Err(issue) => issues.push(issue),
        }
    }

    let events: Vec<FeedbackEvent> =
        processed.iter().flat_map(|p| p.events.iter().copied()).collect();
    let analytics =
        aggregate(processed.iter().map(|p| p.counts.clone()).collect(), config.analytics_window)?;
    let timing = processor.timing.report(dropped);

    if let Some(out) = out_dir {
        fs::create_dir_all(out)
            .map_err(|source| PipelineError::Io { path: out.to_path_buf(), source })?;
        if config.sinks.fused {
            let fused: Vec<Frame> = processed
                .iter()
                .map(|p| {
                    let original = viable
                        .iter()
                        .find(|f| f.frame_id == p.frame_id)
                        .expect("processed frames come from the input");
                    Frame { panoptic: Some(p.panoptic.clone()), ..(*original).clone() }
                })
                .collect();
            write_sequence(&fused, &out.join("fused"))?;
        }
        if config.sinks.events {
            write_file(&out.join("events.jsonl"), events_to_jsonl(&events).as_bytes())?;
        }
        if config.sinks.analytics {
            write_file(
                &out.join("analytics.csv"),
                panoptic_core::analytics::to_csv(&analytics, schema).as_bytes(),
            )?;
            write_file(
                &out.join("analytics_summary.json"),
                panoptic_core::analytics::summary_json(&analytics, schema).as_bytes(),
            )?;
        }
        if config.sinks.timing {
            write_file(&out.join("timing.txt"), timing.render_text().as_bytes())?;
            write_file(&out.join("timing.json"), timing.to_json().as_bytes())?;
        }
    }

    Ok(RunReport {
        processed: processed.iter().map(|p| p.frame_id).collect(),
        dropped,
        issues,
        events,
        analytics,
        timing,
    })
}
