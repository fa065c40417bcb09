//! Per-segment distance and direction from the RGB-D depth plane.
//!
//! Distances are the median of valid (nonzero) depth samples: robust to the
//! speckle and invalid fringes typical of stereo RGB-D sensors.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::fusion::{InstanceId, PanopticMap};
use crate::schema::{ClassId, LabelSchema};

/// Row-major depth plane in millimeters; 0 marks an invalid/no-return sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    depths: Vec<u16>,
}

#[derive(Debug, Error, PartialEq)]
pub enum DepthError {
    #[error("plane size mismatch: expected {expected} entries, got {got}")]
    PlaneSizeMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: map {map_width}x{map_height} vs depth {depth_width}x{depth_height}")]
    DimensionMismatch { map_width: u32, map_height: u32, depth_width: u32, depth_height: u32 },
}

impl DepthMap {
    pub fn new(width: u32, height: u32, depths: Vec<u16>) -> Result<DepthMap, DepthError> {
        let expected = (width as usize) * (height as usize);
        if depths.len() != expected {
            return Err(DepthError::PlaneSizeMismatch { expected, got: depths.len() });
        }
        Ok(DepthMap { width, height, depths })
    }

    /// All-invalid plane; useful when a frame carries no depth.
    pub fn invalid(width: u32, height: u32) -> DepthMap {
        DepthMap { width, height, depths: vec![0; (width as usize) * (height as usize)] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn depths(&self) -> &[u16] {
        &self.depths
    }
}

/// Coarse horizontal direction bin, matching the three-cue audio channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Hash)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Left,
    Center,
    Right,
}

/// Area, centroid, distance, and direction of one segment. Stuff segments
/// (instance id 0) are keyed by class; instances by instance id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentInfo {
    pub instance_id: InstanceId,
    pub class_id: ClassId,
    pub area: u64,
    pub centroid_row: f64,
    pub centroid_col: f64,
    /// Median of valid depth samples; `None` iff no valid sample covers the
    /// segment.
    pub distance_mm: Option<u16>,
    pub valid_depth_fraction: f64,
    pub sector: Sector,
}

/// Column thirds with half-open boundaries: `col < W/3` is left,
/// `col < 2W/3` is center, the rest is right.
pub fn sectorize(centroid_col: f64, width: u32) -> Sector {
    let w = width as f64;
    if centroid_col < w / 3.0 {
        Sector::Left
    } else if centroid_col < 2.0 * w / 3.0 {
        Sector::Center
    } else {
        Sector::Right
    }
}

#[derive(Default)]
struct Accumulator {
    area: u64,
    row_sum: u64,
    col_sum: u64,
    valid: Vec<u16>,
}

/// One [`SegmentInfo`] per segment: things per instance id, stuff (including
/// void) one segment per class. Output order: instances ascending by id, then
/// stuff classes ascending by id.
pub fn segment_stats(
    map: &PanopticMap,
    depth: &DepthMap,
) -> Result<Vec<SegmentInfo>, DepthError> {
    if map.width() != depth.width || map.height() != depth.height {
        return Err(DepthError::DimensionMismatch {
            map_width: map.width(),
            map_height: map.height(),
            depth_width: depth.width,
            depth_height: depth.height,
        });
    }

    let mut instance_acc: BTreeMap<InstanceId, Accumulator> = BTreeMap::new();
    let mut stuff_acc: BTreeMap<ClassId, Accumulator> = BTreeMap::new();
    let width = map.width() as usize;
    for (i, (&class_id, &instance_id)) in
        map.class_ids().iter().zip(map.instance_ids()).enumerate()
    {
        let acc = if instance_id != 0 {
            instance_acc.entry(instance_id).or_default()
        } else {
            stuff_acc.entry(class_id).or_default()
        };
        acc.area += 1;
        acc.row_sum += (i / width) as u64;
        acc.col_sum += (i % width) as u64;
        let d = depth.depths[i];
        if d != 0 {
            acc.valid.push(d);
        }
    }

    let class_of: BTreeMap<InstanceId, ClassId> =
        map.segments().iter().map(|s| (s.instance_id, s.class_id)).collect();
    let mut out = Vec::with_capacity(instance_acc.len() + stuff_acc.len());
    for (instance_id, acc) in instance_acc {
        out.push(finish(acc, instance_id, class_of[&instance_id], map.width()));
    }
    for (class_id, acc) in stuff_acc {
        out.push(finish(acc, 0, class_id, map.width()));
    }
    Ok(out)
}

fn finish(mut acc: Accumulator, instance_id: InstanceId, class_id: ClassId, width: u32) -> SegmentInfo {
    let centroid_row = acc.row_sum as f64 / acc.area as f64;
    let centroid_col = acc.col_sum as f64 / acc.area as f64;
    let distance_mm = median_lower(&mut acc.valid);
    SegmentInfo {
        instance_id,
        class_id,
        area: acc.area,
        centroid_row,
        centroid_col,
        distance_mm,
        valid_depth_fraction: acc.valid.len() as f64 / acc.area as f64,
        sector: sectorize(centroid_col, width),
    }
}

/// Median taking the lower of the two middle values on even counts.
fn median_lower(values: &mut [u16]) -> Option<u16> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    Some(values[(values.len() - 1) / 2])
}

/// Thing segments ordered nearest first: defined distances ascending with
/// ties broken by larger area then lower instance id; undefined distances
/// appended last in instance-id order.
pub fn nearest_things(segments: &[SegmentInfo], schema: &LabelSchema) -> Vec<SegmentInfo> {
    let mut things: Vec<SegmentInfo> = segments
        .iter()
        .filter(|s| s.instance_id != 0 && schema.is_thing(s.class_id) == Some(true))
        .copied()
        .collect();
    things.sort_by(|a, b| match (a.distance_mm, b.distance_mm) {
        (Some(da), Some(db)) => da
            .cmp(&db)
            .then(b.area.cmp(&a.area))
            .then(a.instance_id.cmp(&b.instance_id)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.instance_id.cmp(&b.instance_id),
    });
    things
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::PanopticMap;
    use crate::schema::load_schema;

    fn schema() -> LabelSchema {
        load_schema(
            r#"{
                "classes": [
                    {"id": 0, "name": "void", "is_thing": false, "weight": 0.0, "color": [0,0,0]},
                    {"id": 1, "name": "road", "is_thing": false, "weight": 0.0, "color": [1,1,1]},
                    {"id": 5, "name": "car", "is_thing": true, "weight": 2.0, "color": [2,2,2]},
                    {"id": 6, "name": "person", "is_thing": true, "weight": 2.5, "color": [3,3,3]}
                ],
                "void_id": 0
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn uniform_depth_segment() {
        let map = PanopticMap::from_planes(2, 2, vec![5, 5, 1, 1], vec![1, 1, 0, 0]).unwrap();
        let depth = DepthMap::new(2, 2, vec![2000, 2000, 2000, 2000]).unwrap();
        let stats = segment_stats(&map, &depth).unwrap();
        let car = stats.iter().find(|s| s.instance_id == 1).unwrap();
        assert_eq!(car.distance_mm, Some(2000));
        assert_eq!(car.valid_depth_fraction, 1.0);
    }

    #[test]
    fn all_invalid_depth_is_undefined() {
        let map = PanopticMap::from_planes(2, 1, vec![5, 5], vec![1, 1]).unwrap();
        let depth = DepthMap::new(2, 1, vec![0, 0]).unwrap();
        let stats = segment_stats(&map, &depth).unwrap();
        assert_eq!(stats[0].distance_mm, None);
        assert_eq!(stats[0].valid_depth_fraction, 0.0);
    }

    #[test]
    fn median_ignores_invalid_and_takes_lower() {
        // depths {1000, 3000, 0, 2000}: valid {1000, 2000, 3000}, median 2000,
        // valid fraction 0.75.
        let map = PanopticMap::from_planes(4, 1, vec![5; 4], vec![1; 4]).unwrap();
        let depth = DepthMap::new(4, 1, vec![1000, 3000, 0, 2000]).unwrap();
        let stats = segment_stats(&map, &depth).unwrap();
        assert_eq!(stats[0].distance_mm, Some(2000));
        assert_eq!(stats[0].valid_depth_fraction, 0.75);
    }

    #[test]
    fn even_count_takes_lower_middle() {
        let mut v = vec![4000u16, 1000, 3000, 2000];
        assert_eq!(median_lower(&mut v), Some(2000));
    }

    #[test]
    fn sector_boundaries() {
        assert_eq!(sectorize(10.0, 640), Sector::Left);
        assert_eq!(sectorize(320.0, 640), Sector::Center);
        assert_eq!(sectorize(2.0 * 640.0 / 3.0, 640), Sector::Right);
        assert_eq!(sectorize(639.0, 640), Sector::Right);
    }

    #[test]
    fn stuff_and_void_reported_once_per_class() {
        let map =
            PanopticMap::from_planes(2, 2, vec![1, 1, 0, 5], vec![0, 0, 0, 1]).unwrap();
        let depth = DepthMap::invalid(2, 2);
        let stats = segment_stats(&map, &depth).unwrap();
        let total: u64 = stats.iter().map(|s| s.area).sum();
        assert_eq!(total, 4);
        assert_eq!(stats.len(), 3); // car instance, road, void
    }

    #[test]
    fn nearest_things_ordering() {
        let map = PanopticMap::from_planes(
            4,
            1,
            vec![5, 6, 5, 1],
            vec![1, 2, 3, 0],
        )
        .unwrap();
        let depth = DepthMap::new(4, 1, vec![5000, 2000, 0, 1000]).unwrap();
        let stats = segment_stats(&map, &depth).unwrap();
        let ordered = nearest_things(&stats, &schema());
        // person at 2000 first, car at 5000 next, undefined-distance car last.
        assert_eq!(ordered.len(), 3);
        assert_eq!(ordered[0].instance_id, 2);
        assert_eq!(ordered[1].instance_id, 1);
        assert_eq!(ordered[2].instance_id, 3);
        assert_eq!(ordered[2].distance_mm, None);
    }

    #[test]
    fn equal_distance_larger_area_first() {
        let a = SegmentInfo {
            instance_id: 2,
            class_id: 5,
            area: 50,
            centroid_row: 0.0,
            centroid_col: 0.0,
            distance_mm: Some(1000),
            valid_depth_fraction: 1.0,
            sector: Sector::Left,
        };
        let b = SegmentInfo { instance_id: 1, area: 100, ..a };
        let ordered = nearest_things(&[a, b], &schema());
        assert_eq!(ordered[0].instance_id, 1);
        assert_eq!(ordered[1].instance_id, 2);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let map = PanopticMap::from_planes(2, 1, vec![1, 1], vec![0, 0]).unwrap();
        let depth = DepthMap::invalid(3, 1);
        assert!(matches!(
            segment_stats(&map, &depth),
            Err(DepthError::DimensionMismatch { .. })
        ));
    }
}
