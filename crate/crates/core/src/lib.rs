//! Non-neural core of a streaming panoptic-perception toolkit: class
//! schemas, mask primitives, panoptic fusion, the segmentation metric
//! suite, depth-augmented scene description, instance analytics, and
//! feedback-event scheduling.
//!
//! Everything here is pure and deterministic: identical inputs yield
//! byte-identical outputs, which the golden and oracle tests rely on.

pub mod analytics;
pub mod depth;
pub mod feedback;
pub mod mask;
pub mod metrics;
pub mod schema;

pub mod fusion;

pub use fusion::{
    fuse_frame, relabel_canonical, FusionConfig, FusionError, InstanceId, InstancePrediction,
    InstanceSegment, PanopticMap, SemanticMap,
};
pub use mask::{bbox_of_mask, box_iou, mask_iou, rle_decode, rle_encode, BBox, BitMask, RleMask};
pub use schema::{load_schema, validate_map, ClassDef, ClassId, LabelSchema};
