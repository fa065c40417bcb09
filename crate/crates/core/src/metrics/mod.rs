//! The evaluation suite: segment matching, panoptic quality, mIoU, and
//! average precision, plus text/JSON report rendering.

mod ap;
mod matching;
mod miou;
mod pq;
mod report;

pub use ap::{
    average_precision, default_ap_thresholds, ApImage, ApReport, ClassAp, GtInstance, IouKind,
};
pub use matching::{match_segments, ClassMatches, MatchResult, SegmentKey, TruePositive};
pub use miou::{miou, SemReport};
pub use pq::{pq_scores, ClassPq, PqReport};
pub use report::{render_table, EvalReport, ReportRow};

use thiserror::Error;

use crate::fusion::FusionError;
use crate::mask::MaskError;
use crate::schema::{ClassId, MapValidationError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: pred {pred_width}x{pred_height} vs gt {gt_width}x{gt_height}")]
    DimensionMismatch { pred_width: u32, pred_height: u32, gt_width: u32, gt_height: u32 },
    #[error("invalid panoptic map: {0}")]
    InvalidMap(FusionError),
    #[error("invalid semantic map: {0}")]
    InvalidSemanticMap(MapValidationError),
    #[error("unknown class id {class_id}")]
    UnknownClass { class_id: ClassId },
    #[error("class {class_id} is not a thing class")]
    NotAThingClass { class_id: ClassId },
    #[error("threshold list is empty")]
    EmptyThresholds,
    #[error("threshold {value} outside (0, 1)")]
    ThresholdOutOfRange { value: f64 },
    #[error("confidence {value} outside [0, 1]")]
    BadConfidence { value: f64 },
    #[error("empty instance mask in image {image_id}")]
    EmptyInstanceMask { image_id: u64 },
    #[error(transparent)]
    Mask(#[from] MaskError),
}
