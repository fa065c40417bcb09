//! Merges ranked instance predictions with a semantic map into a panoptic
//! map: every pixel ends up with exactly one (class id, instance id) pair.
//!
//! The merge is deterministic: instances are ranked by confidence with a
//! total tie-break, claim pixels greedily, and survivors are renumbered
//! 1, 2, 3, ... in claim order.

use thiserror::Error;

use crate::mask::{rle_encode, BBox, BitMask};
use crate::schema::{ClassId, LabelSchema};

/// Instance identifier within one frame. 0 is reserved for stuff/void pixels.
pub type InstanceId = u32;

/// Per-pixel class id plane, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMap {
    width: u32,
    height: u32,
    ids: Vec<ClassId>,
}

impl SemanticMap {
    pub fn new(width: u32, height: u32, ids: Vec<ClassId>) -> Result<SemanticMap, FusionError> {
        let expected = (width as usize) * (height as usize);
        if ids.len() != expected {
            return Err(FusionError::PlaneSizeMismatch { expected, got: ids.len() });
        }
        Ok(SemanticMap { width, height, ids })
    }

    pub fn filled(width: u32, height: u32, id: ClassId) -> SemanticMap {
        SemanticMap { width, height, ids: vec![id; (width as usize) * (height as usize)] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn ids(&self) -> &[ClassId] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> ClassId {
        self.ids[(row as usize) * (self.width as usize) + col as usize]
    }
}

/// One ranked instance proposal entering fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct InstancePrediction {
    pub class_id: ClassId,
    /// Score in [0, 1].
    pub confidence: f64,
    pub mask: BitMask,
    pub bbox: Option<BBox>,
}

/// One surviving instance in the segment index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceSegment {
    pub instance_id: InstanceId,
    pub class_id: ClassId,
    pub area: u64,
}

/// Per-pixel (class id, instance id) assignment covering the whole image,
/// plus an index of the instance segments.
///
/// Invariants: instance id 0 marks stuff/void pixels; every id >= 1 maps to
/// exactly one class and a nonempty pixel set; the index always matches the
/// pixel grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanopticMap {
    width: u32,
    height: u32,
    classes: Vec<ClassId>,
    instances: Vec<InstanceId>,
    segments: Vec<InstanceSegment>,
}

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("plane size mismatch: expected {expected} entries, got {got}")]
    PlaneSizeMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: semantic {semantic_width}x{semantic_height} vs mask {mask_width}x{mask_height}")]
    DimensionMismatch {
        semantic_width: u32,
        semantic_height: u32,
        mask_width: u32,
        mask_height: u32,
    },
    #[error("instance prediction references non-thing class {class_id}")]
    StuffInstance { class_id: ClassId },
    #[error("instance prediction references unknown class {class_id}")]
    UnknownClass { class_id: ClassId },
    #[error("instance confidence {value} outside [0, 1]")]
    ConfidenceOutOfRange { value: f64 },
    #[error("instance prediction has an empty mask")]
    EmptyInstanceMask,
    #[error("semantic map contains unknown class id {id} at ({row}, {col})")]
    UnknownSemanticId { row: u32, col: u32, id: ClassId },
    #[error("instance id {instance_id} maps to classes {first} and {second}")]
    InconsistentInstanceClass { instance_id: InstanceId, first: ClassId, second: ClassId },
    #[error("pixel ({row}, {col}) with class {class_id} violates the thing/stuff instance-id rule")]
    InstanceIdRule { row: u32, col: u32, class_id: ClassId },
}

impl PanopticMap {
    /// Build from raw planes, recomputing the segment index. Checks that each
    /// instance id maps to a single class; schema-dependent rules are checked
    /// separately by [`PanopticMap::validate_schema`].
    pub fn from_planes(
        width: u32,
        height: u32,
        classes: Vec<ClassId>,
        instances: Vec<InstanceId>,
    ) -> Result<PanopticMap, FusionError> {
        let expected = (width as usize) * (height as usize);
        if classes.len() != expected {
            return Err(FusionError::PlaneSizeMismatch { expected, got: classes.len() });
        }
        if instances.len() != expected {
            return Err(FusionError::PlaneSizeMismatch { expected, got: instances.len() });
        }
        let segments = compute_segment_index(&classes, &instances)?;
        Ok(PanopticMap { width, height, classes, instances, segments })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn class_ids(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn instance_ids(&self) -> &[InstanceId] {
        &self.instances
    }

    /// Instance segments sorted by instance id.
    pub fn segments(&self) -> &[InstanceSegment] {
        &self.segments
    }

    #[inline]
    pub fn pair(&self, row: u32, col: u32) -> (ClassId, InstanceId) {
        let idx = (row as usize) * (self.width as usize) + col as usize;
        (self.classes[idx], self.instances[idx])
    }

    /// The class plane viewed as a semantic map (copied).
    pub fn class_plane(&self) -> SemanticMap {
        SemanticMap { width: self.width, height: self.height, ids: self.classes.clone() }
    }

    /// Dense mask of one instance segment.
    pub fn instance_mask(&self, instance_id: InstanceId) -> BitMask {
        BitMask::from_bits(
            self.width,
            self.height,
            self.instances.iter().map(|&i| i != 0 && i == instance_id).collect(),
        )
        .expect("plane sizes are consistent")
    }

    /// Check the schema-dependent invariants: all class ids known, thing
    /// pixels carry instance ids >= 1, stuff/void pixels carry 0.
    pub fn validate_schema(&self, schema: &LabelSchema) -> Result<(), FusionError> {
        for (i, (&class_id, &instance_id)) in self.classes.iter().zip(&self.instances).enumerate()
        {
            let row = (i as u32) / self.width;
            let col = (i as u32) % self.width;
            let is_thing = match schema.is_thing(class_id) {
                Some(t) => t,
                None => return Err(FusionError::UnknownSemanticId { row, col, id: class_id }),
            };
            if is_thing != (instance_id != 0) {
                return Err(FusionError::InstanceIdRule { row, col, class_id });
            }
        }
        Ok(())
    }
}

fn compute_segment_index(
    classes: &[ClassId],
    instances: &[InstanceId],
) -> Result<Vec<InstanceSegment>, FusionError> {
    use std::collections::BTreeMap;
    let mut map: BTreeMap<InstanceId, (ClassId, u64)> = BTreeMap::new();
    for (&class_id, &instance_id) in classes.iter().zip(instances) {
        if instance_id == 0 {
            continue;
        }
        match map.get_mut(&instance_id) {
            None => {
                map.insert(instance_id, (class_id, 1));
            }
            Some((first, area)) => {
                if *first != class_id {
                    return Err(FusionError::InconsistentInstanceClass {
                        instance_id,
                        first: *first,
                        second: class_id,
                    });
                }
                *area += 1;
            }
        }
    }
    Ok(map
        .into_iter()
        .map(|(instance_id, (class_id, area))| InstanceSegment { instance_id, class_id, area })
        .collect())
}

/// Parameters of the merge heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    /// Instances below this confidence are discarded up front.
    pub confidence_threshold: f64,
    /// Minimum surviving fraction of an instance's original area after
    /// higher-ranked instances claimed their pixels.
    pub overlap_keep_fraction: f64,
    /// Minimum total unclaimed area for a stuff class to be kept.
    pub min_stuff_area: u32,
    /// Minimum surviving pixel count for an instance to be kept.
    pub min_instance_area: u32,
}

impl Default for FusionConfig {
    /// Defaults sized for 480x640 input; see [`FusionConfig::for_resolution`]
    /// for other sizes.
    fn default() -> FusionConfig {
        FusionConfig {
            confidence_threshold: 0.5,
            overlap_keep_fraction: 0.5,
            min_stuff_area: 4096,
            min_instance_area: 16,
        }
    }
}

impl FusionConfig {
    /// Defaults with `min_stuff_area` scaled proportionally to image area
    /// from its 4096-at-480x640 baseline.
    pub fn for_resolution(width: u32, height: u32) -> FusionConfig {
        let base = FusionConfig::default();
        let scale = (width as f64) * (height as f64) / (640.0 * 480.0);
        FusionConfig {
            min_stuff_area: (base.min_stuff_area as f64 * scale).round() as u32,
            ..base
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(format!(
                "confidence_threshold {} outside [0, 1]",
                self.confidence_threshold
            ));
        }
        if !(0.0..=1.0).contains(&self.overlap_keep_fraction) {
            return Err(format!(
                "overlap_keep_fraction {} outside [0, 1]",
                self.overlap_keep_fraction
            ));
        }
        Ok(())
    }
}

/// Merge `instances` with `semantic` into a panoptic map.
///
/// Procedure, in order: (1) drop instances below the confidence threshold;
/// (2) rank by confidence desc, class id asc, encoded-mask bytes asc;
/// (3) claim pixels greedily, discarding instances whose surviving fraction
/// or area is too small; (4) fill unclaimed pixels from the semantic map,
/// keeping stuff classes above the area floor and voiding everything else.
/// Unclaimed thing-class semantic pixels always become void.
pub fn fuse_frame(
    semantic: &SemanticMap,
    instances: &[InstancePrediction],
    schema: &LabelSchema,
    cfg: &FusionConfig,
) -> Result<PanopticMap, FusionError> {
    let width = semantic.width;
    let height = semantic.height;
    let pixel_count = (width as usize) * (height as usize);

    for inst in instances {
        if inst.mask.width() != width || inst.mask.height() != height {
            return Err(FusionError::DimensionMismatch {
                semantic_width: width,
                semantic_height: height,
                mask_width: inst.mask.width(),
                mask_height: inst.mask.height(),
            });
        }
        match schema.is_thing(inst.class_id) {
            None => return Err(FusionError::UnknownClass { class_id: inst.class_id }),
            Some(false) => return Err(FusionError::StuffInstance { class_id: inst.class_id }),
            Some(true) => {}
        }
        if !(0.0..=1.0).contains(&inst.confidence) {
            return Err(FusionError::ConfidenceOutOfRange { value: inst.confidence });
        }
        if inst.mask.area() == 0 {
            return Err(FusionError::EmptyInstanceMask);
        }
    }
    for (i, &id) in semantic.ids.iter().enumerate() {
        if !schema.contains(id) {
            return Err(FusionError::UnknownSemanticId {
                row: (i as u32) / width,
                col: (i as u32) % width,
                id,
            });
        }
    }

    // Step 1: confidence gate. Step 2: total-order ranking.
    let mut ranked: Vec<&InstancePrediction> = instances
        .iter()
        .filter(|inst| inst.confidence >= cfg.confidence_threshold)
        .collect();
    let keys: Vec<Vec<u8>> = ranked.iter().map(|inst| rle_encode(&inst.mask).run_bytes()).collect();
    let mut order: Vec<usize> = (0..ranked.len()).collect();
    order.sort_by(|&a, &b| {
        ranked[b]
            .confidence
            .total_cmp(&ranked[a].confidence)
            .then(ranked[a].class_id.cmp(&ranked[b].class_id))
            .then(keys[a].cmp(&keys[b]))
    });
    ranked = order.iter().map(|&i| ranked[i]).collect();

    // Step 3: greedy pixel claiming.
    let mut instance_plane: Vec<InstanceId> = vec![0; pixel_count];
    let mut class_plane: Vec<ClassId> = vec![0; pixel_count];
    let mut segments = Vec::new();
    let mut next_id: InstanceId = 1;
    let mut claimed_px: Vec<usize> = Vec::new();
    for inst in ranked {
        claimed_px.clear();
        for (i, &bit) in inst.mask.bits().iter().enumerate() {
            if bit && instance_plane[i] == 0 {
                claimed_px.push(i);
            }
        }
        let remaining = claimed_px.len() as u64;
        let original = inst.mask.area();
        // A fully occluded instance is always dropped, whatever the
        // thresholds: instance segments must be nonempty.
        if remaining == 0
            || (remaining as f64) / (original as f64) < cfg.overlap_keep_fraction
            || remaining < cfg.min_instance_area as u64
        {
            continue;
        }
        for &i in &claimed_px {
            instance_plane[i] = next_id;
            class_plane[i] = inst.class_id;
        }
        segments.push(InstanceSegment {
            instance_id: next_id,
            class_id: inst.class_id,
            area: remaining,
        });
        next_id += 1;
    }

    // Step 4: semantic fill of unclaimed pixels.
    let mut unclaimed_area: std::collections::HashMap<ClassId, u64> = std::collections::HashMap::new();
    for (i, &instance_id) in instance_plane.iter().enumerate() {
        if instance_id == 0 {
            *unclaimed_area.entry(semantic.ids[i]).or_insert(0) += 1;
        }
    }
    let void = schema.void_id();
    for (i, &instance_id) in instance_plane.iter().enumerate() {
        if instance_id != 0 {
            continue;
        }
        let sem_id = semantic.ids[i];
        let keep = !schema.is_thing(sem_id).expect("validated above")
            && unclaimed_area[&sem_id] >= cfg.min_stuff_area as u64;
        class_plane[i] = if keep { sem_id } else { void };
    }

    Ok(PanopticMap {
        width,
        height,
        classes: class_plane,
        instances: instance_plane,
        segments,
    })
}

/// Renumber instance ids 1..N in first-pixel raster order. Pixel-wise
/// semantics are unchanged; idempotent.
pub fn relabel_canonical(map: &PanopticMap) -> PanopticMap {
    use std::collections::HashMap;
    let mut remap: HashMap<InstanceId, InstanceId> = HashMap::new();
    let mut next: InstanceId = 1;
    for &id in &map.instances {
        if id != 0 && !remap.contains_key(&id) {
            remap.insert(id, next);
            next += 1;
        }
    }
    let instances: Vec<InstanceId> =
        map.instances.iter().map(|&id| if id == 0 { 0 } else { remap[&id] }).collect();
    let mut segments: Vec<InstanceSegment> = map
        .segments
        .iter()
        .map(|s| InstanceSegment { instance_id: remap[&s.instance_id], ..*s })
        .collect();
    segments.sort_by_key(|s| s.instance_id);
    PanopticMap {
        width: map.width,
        height: map.height,
        classes: map.classes.clone(),
        instances,
        segments,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::load_schema;

    pub(crate) fn test_schema() -> LabelSchema {
        load_schema(
            r#"{
                "classes": [
                    {"id": 0, "name": "void", "is_thing": false, "weight": 0.0, "color": [0,0,0]},
                    {"id": 1, "name": "road", "is_thing": false, "weight": 0.0, "color": [128,64,128]},
                    {"id": 2, "name": "sky", "is_thing": false, "weight": 0.0, "color": [70,130,180]},
                    {"id": 10, "name": "car", "is_thing": true, "weight": 2.0, "color": [0,0,142]},
                    {"id": 11, "name": "person", "is_thing": true, "weight": 2.5, "color": [220,20,60]}
                ],
                "void_id": 0
            }"#,
        )
        .unwrap()
    }

    fn no_minimums() -> FusionConfig {
        FusionConfig { min_stuff_area: 0, min_instance_area: 0, ..FusionConfig::default() }
    }

    #[test]
    fn stuff_only_frame_keeps_the_class() {
        let schema = test_schema();
        let semantic = SemanticMap::filled(8, 8, 1);
        let cfg = FusionConfig { min_stuff_area: 64, ..no_minimums() };
        let map = fuse_frame(&semantic, &[], &schema, &cfg).unwrap();
        for row in 0..8 {
            for col in 0..8 {
                assert_eq!(map.pair(row, col), (1, 0));
            }
        }
        assert!(map.segments().is_empty());
    }

    #[test]
    fn identical_masks_second_discarded() {
        let schema = test_schema();
        let semantic = SemanticMap::filled(4, 4, 1);
        let mask = BitMask::from_fn(4, 4, |r, _| r < 2);
        let preds = vec![
            InstancePrediction { class_id: 10, confidence: 0.9, mask: mask.clone(), bbox: None },
            InstancePrediction { class_id: 10, confidence: 0.8, mask, bbox: None },
        ];
        let map = fuse_frame(&semantic, &preds, &schema, &no_minimums()).unwrap();
        assert_eq!(map.segments().len(), 1);
        assert_eq!(map.segments()[0].instance_id, 1);
        assert_eq!(map.segments()[0].area, 8);
    }

    #[test]
    fn small_stuff_region_becomes_void() {
        let schema = test_schema();
        // 3 pixels of sky in a road frame, below the stuff floor.
        let mut ids = vec![1u16; 16];
        ids[0] = 2;
        ids[1] = 2;
        ids[2] = 2;
        let semantic = SemanticMap::new(4, 4, ids).unwrap();
        let cfg = FusionConfig { min_stuff_area: 4, ..no_minimums() };
        let map = fuse_frame(&semantic, &[], &schema, &cfg).unwrap();
        assert_eq!(map.pair(0, 0), (0, 0));
        assert_eq!(map.pair(0, 3), (1, 0));
    }

    #[test]
    fn unclaimed_thing_semantic_pixels_become_void() {
        let schema = test_schema();
        let semantic = SemanticMap::filled(4, 4, 10);
        let map = fuse_frame(&semantic, &[], &schema, &no_minimums()).unwrap();
        for row in 0..4 {
            for col in 0..4 {
                assert_eq!(map.pair(row, col), (0, 0));
            }
        }
    }

    #[test]
    fn low_confidence_instances_dropped() {
        let schema = test_schema();
        let semantic = SemanticMap::filled(4, 4, 1);
        let mask = BitMask::from_fn(4, 4, |r, _| r == 0);
        let preds = vec![InstancePrediction { class_id: 10, confidence: 0.4, mask, bbox: None }];
        let cfg = FusionConfig { confidence_threshold: 0.5, ..no_minimums() };
        let map = fuse_frame(&semantic, &preds, &schema, &cfg).unwrap();
        assert!(map.segments().is_empty());
    }

    #[test]
    fn stuff_instance_rejected() {
        let schema = test_schema();
        let semantic = SemanticMap::filled(2, 2, 1);
        let mask = BitMask::from_fn(2, 2, |_, _| true);
        let preds = vec![InstancePrediction { class_id: 1, confidence: 0.9, mask, bbox: None }];
        assert_eq!(
            fuse_frame(&semantic, &preds, &schema, &no_minimums()).unwrap_err(),
            FusionError::StuffInstance { class_id: 1 }
        );
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let schema = test_schema();
        let semantic = SemanticMap::filled(2, 2, 1);
        let mask = BitMask::zeros(3, 3);
        let preds = vec![InstancePrediction { class_id: 10, confidence: 0.9, mask, bbox: None }];
        assert!(matches!(
            fuse_frame(&semantic, &preds, &schema, &no_minimums()),
            Err(FusionError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn class_plane_revalidates() {
        let schema = test_schema();
        let semantic = SemanticMap::filled(4, 4, 1);
        let mask = BitMask::from_fn(4, 4, |r, c| r < 2 && c < 2);
        let preds = vec![InstancePrediction { class_id: 10, confidence: 0.9, mask, bbox: None }];
        let map = fuse_frame(&semantic, &preds, &schema, &no_minimums()).unwrap();
        assert!(crate::schema::validate_map(&map.class_plane(), &schema).is_ok());
        assert!(map.validate_schema(&schema).is_ok());
    }

    #[test]
    fn relabel_renumbers_in_raster_order() {
        // ids {5, 2}: 2 appears first in raster order -> 2 becomes 1, 5 becomes 2.
        let classes = vec![10, 10, 0, 0, 11, 11, 0, 0, 0];
        let instances = vec![2, 2, 0, 0, 5, 5, 0, 0, 0];
        let map = PanopticMap::from_planes(3, 3, classes, instances).unwrap();
        let canon = relabel_canonical(&map);
        assert_eq!(canon.pair(0, 0), (10, 1));
        assert_eq!(canon.pair(1, 1), (11, 2));
        assert_eq!(canon.segments().len(), 2);
        assert_eq!(relabel_canonical(&canon), canon);
    }

    #[test]
    fn inconsistent_instance_class_rejected() {
        let classes = vec![10, 11];
        let instances = vec![1, 1];
        assert!(matches!(
            PanopticMap::from_planes(2, 1, classes, instances),
            Err(FusionError::InconsistentInstanceClass { instance_id: 1, .. })
        ));
    }

    #[test]
    fn exact_keep_fraction_boundary_is_kept() {
        let schema = test_schema();
        let semantic = SemanticMap::filled(4, 4, 1);
        // First instance covers the left half of the second's mask exactly.
        let left = BitMask::from_fn(4, 4, |_, c| c < 2);
        let wide = BitMask::from_fn(4, 4, |_, _| true);
        let preds = vec![
            InstancePrediction { class_id: 10, confidence: 0.9, mask: left, bbox: None },
            InstancePrediction { class_id: 11, confidence: 0.8, mask: wide, bbox: None },
        ];
        let cfg = FusionConfig { overlap_keep_fraction: 0.5, ..no_minimums() };
        let map = fuse_frame(&semantic, &preds, &schema, &cfg).unwrap();
        // remaining/original == 0.5 is not < 0.5, so the second instance survives.
        assert_eq!(map.segments().len(), 2);
    }
}
