//! Keyframe poses, per-video trajectories and map coordinates.
//!
//! Trajectories are the output of an upstream visual SLAM run: relative
//! camera positions and headings in an arbitrary local frame and scale.
//! Two reference points (the map positions of the first and last keyframe)
//! anchor each one on the shared map. Only the plan view matters
//! downstream, so `z` is carried but never used.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::math::{self, wrap_angle};
use crate::registration;

/// Equatorial radius of WGS84, meters.
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Crossings of two polylines closer than this are counted once.
pub const CROSSING_MERGE_M: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyframePose {
    #[serde(rename = "frame")]
    pub frame_index: u64,
    #[serde(rename = "t")]
    pub timestamp_s: f64,
    #[serde(rename = "pos")]
    pub position: [f64; 3],
    #[serde(rename = "yaw")]
    pub yaw_rad: f64,
}

impl KeyframePose {
    pub fn xy(&self) -> [f64; 2] {
        [self.position[0], self.position[1]]
    }
}

/// A point on the shared map, meters east/north of the area origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MapPoint {
    pub x_m: f64,
    pub y_m: f64,
}

impl MapPoint {
    pub const fn new(x_m: f64, y_m: f64) -> Self {
        Self { x_m, y_m }
    }

    pub fn distance(&self, other: &MapPoint) -> f64 {
        math::hypot(self.x_m - other.x_m, self.y_m - other.y_m)
    }

    pub fn midpoint(&self, other: &MapPoint) -> MapPoint {
        MapPoint::new(
            0.5 * (self.x_m + other.x_m),
            0.5 * (self.y_m + other.y_m),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x_m.is_finite() && self.y_m.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// How reference coordinates in an area config are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GeoRef {
    LatlngWgs84 {
        origin_lat_deg: f64,
        origin_lng_deg: f64,
    },
    LocalXy,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeoError {
    #[error("latitude/longitude given but the area uses local x/y coordinates")]
    ModeMismatch,
    #[error("non-finite coordinate")]
    NonFinite,
}

/// Local equirectangular projection around the area origin.
pub fn latlng_to_local(lat_deg: f64, lng_deg: f64, geo: &GeoRef) -> Result<MapPoint, GeoError> {
    let GeoRef::LatlngWgs84 {
        origin_lat_deg,
        origin_lng_deg,
    } = *geo
    else {
        return Err(GeoError::ModeMismatch);
    };
    if !(lat_deg.is_finite() && lng_deg.is_finite()) {
        return Err(GeoError::NonFinite);
    }
    let deg = PI / 180.0;
    let x_m = (lng_deg - origin_lng_deg) * deg * EARTH_RADIUS_M * math::cos(origin_lat_deg * deg);
    let y_m = (lat_deg - origin_lat_deg) * deg * EARTH_RADIUS_M;
    Ok(MapPoint { x_m, y_m })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("{video_id}: need at least 2 keyframes, got {count}")]
    TooFewPoses { video_id: String, count: usize },
    #[error("{video_id}: keyframe {index} has frame {frame}, not after {previous}")]
    NonMonotonicFrame {
        video_id: String,
        index: usize,
        previous: u64,
        frame: u64,
    },
    #[error("{video_id}: keyframe {index} timestamp {t} is negative or earlier than its predecessor")]
    BadTimestamp {
        video_id: String,
        index: usize,
        t: f64,
    },
    #[error("{video_id}: keyframe {index} has a non-finite value")]
    NonFinite { video_id: String, index: usize },
    #[error("{video_id}: reference start and end coincide")]
    CoincidentReferences { video_id: String },
    #[error("{video_id}: reference point is not finite")]
    BadReference { video_id: String },
    #[error("{video_id}: frame rate must be positive, got {hz}")]
    BadFrameRate { video_id: String, hz: f64 },
}

/// Checks a keyframe sequence in order and normalizes yaw into `[-π, π)`.
///
/// On failure the error carries the zero-based keyframe index.
pub fn check_poses(video_id: &str, poses: &mut [KeyframePose]) -> Result<(), TrajectoryError> {
    let mut prev: Option<&KeyframePose> = None;
    for (index, pose) in poses.iter_mut().enumerate() {
        let finite = pose.timestamp_s.is_finite()
            && pose.position.iter().all(|v| v.is_finite())
            && pose.yaw_rad.is_finite();
        if !finite {
            return Err(TrajectoryError::NonFinite {
                video_id: video_id.into(),
                index,
            });
        }
        pose.yaw_rad = wrap_angle(pose.yaw_rad);
        if let Some(p) = prev {
            if pose.frame_index <= p.frame_index {
                return Err(TrajectoryError::NonMonotonicFrame {
                    video_id: video_id.into(),
                    index,
                    previous: p.frame_index,
                    frame: pose.frame_index,
                });
            }
        }
        let earlier = prev.is_some_and(|p| pose.timestamp_s < p.timestamp_s);
        if pose.timestamp_s < 0.0 || earlier {
            return Err(TrajectoryError::BadTimestamp {
                video_id: video_id.into(),
                index,
                t: pose.timestamp_s,
            });
        }
        prev = Some(pose);
    }
    if poses.len() < 2 {
        return Err(TrajectoryError::TooFewPoses {
            video_id: video_id.into(),
            count: poses.len(),
        });
    }
    Ok(())
}

/// One street video's keyframe trajectory plus its map anchors.
///
/// `ref_start`/`ref_end` must be the map positions of the first and last
/// keyframe; interior reference keyframes are not supported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoTrajectory {
    pub video_id: String,
    pub street_id: String,
    pub direction: Direction,
    pub poses: Vec<KeyframePose>,
    pub ref_start: MapPoint,
    pub ref_end: MapPoint,
    pub frame_rate_hz: f64,
}

impl VideoTrajectory {
    pub fn new(
        video_id: impl Into<String>,
        street_id: impl Into<String>,
        direction: Direction,
        mut poses: Vec<KeyframePose>,
        ref_start: MapPoint,
        ref_end: MapPoint,
        frame_rate_hz: f64,
    ) -> Result<Self, TrajectoryError> {
        let video_id = video_id.into();
        check_poses(&video_id, &mut poses)?;
        if !(ref_start.is_finite() && ref_end.is_finite()) {
            return Err(TrajectoryError::BadReference { video_id });
        }
        if ref_start == ref_end {
            return Err(TrajectoryError::CoincidentReferences { video_id });
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(TrajectoryError::BadFrameRate {
                video_id,
                hz: frame_rate_hz,
            });
        }
        Ok(Self {
            video_id,
            street_id: street_id.into(),
            direction,
            poses,
            ref_start,
            ref_end,
            frame_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AreaWarning {
    /// Only one walking direction of a street was captured.
    MissingDirection {
        street_id: String,
        present: Direction,
    },
    /// More than one video claims the same street and direction.
    DuplicateDirection {
        street_id: String,
        direction: Direction,
        video_ids: Vec<String>,
    },
    /// Two paths cross more than once; one of them should be split.
    MultipleCrossings {
        video_a: String,
        video_b: String,
        crossings: usize,
    },
    /// The trajectory could not be previewed on the map.
    Unregistrable { video_id: String },
}

/// Reports capture-convention problems. Never fails; the operator decides.
pub fn validate_area(trajectories: &[VideoTrajectory]) -> Vec<AreaWarning> {
    let mut warnings = Vec::new();

    let mut by_street: BTreeMap<&str, BTreeMap<Direction, Vec<String>>> = BTreeMap::new();
    for t in trajectories {
        by_street
            .entry(t.street_id.as_str())
            .or_default()
            .entry(t.direction)
            .or_default()
            .push(t.video_id.clone());
    }
    for (street, dirs) in &by_street {
        for (dir, ids) in dirs {
            if ids.len() > 1 {
                warnings.push(AreaWarning::DuplicateDirection {
                    street_id: (*street).into(),
                    direction: *dir,
                    video_ids: ids.clone(),
                });
            }
        }
        if dirs.len() == 1 {
            let present = *dirs.keys().next().expect("non-empty");
            warnings.push(AreaWarning::MissingDirection {
                street_id: (*street).into(),
                present,
            });
        }
    }

    let mut previews: Vec<(&VideoTrajectory, Vec<[f64; 2]>)> = Vec::new();
    for t in trajectories {
        match registration::compute_similarity(t) {
            Ok(s) => {
                let pts = t.poses.iter().map(|p| s.apply_point(p.xy())).collect();
                previews.push((t, pts));
            }
            Err(_) => warnings.push(AreaWarning::Unregistrable {
                video_id: t.video_id.clone(),
            }),
        }
    }
    for i in 0..previews.len() {
        for j in i + 1..previews.len() {
            let (ta, pa) = &previews[i];
            let (tb, pb) = &previews[j];
            if ta.street_id == tb.street_id {
                continue;
            }
            let n = count_crossings(pa, pb, CROSSING_MERGE_M);
            if n > 1 {
                let (a, b) = if ta.video_id <= tb.video_id {
                    (ta, tb)
                } else {
                    (tb, ta)
                };
                warnings.push(AreaWarning::MultipleCrossings {
                    video_a: a.video_id.clone(),
                    video_b: b.video_id.clone(),
                    crossings: n,
                });
            }
        }
    }
    warnings
}

/// Number of distinct places where two polylines cross. Crossing points
/// within `merge_m` of each other (transitively) count once.
pub fn count_crossings(a: &[[f64; 2]], b: &[[f64; 2]], merge_m: f64) -> usize {
    let mut points: Vec<[f64; 2]> = Vec::new();
    let boxes_b: Vec<_> = b.windows(2).map(|s| seg_box(s[0], s[1])).collect();
    for sa in a.windows(2) {
        let ba = seg_box(sa[0], sa[1]);
        for (k, sb) in b.windows(2).enumerate() {
            let bb = boxes_b[k];
            if ba[0] > bb[2] || bb[0] > ba[2] || ba[1] > bb[3] || bb[1] > ba[3] {
                continue;
            }
            if let Some(p) = segment_intersection(sa[0], sa[1], sb[0], sb[1]) {
                points.push(p);
            }
        }
    }
    // single-linkage grouping of crossing points
    let n = points.len();
    let mut group: Vec<usize> = (0..n).collect();
    fn root(g: &mut [usize], mut i: usize) -> usize {
        while g[i] != i {
            g[i] = g[g[i]];
            i = g[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = math::hypot(points[i][0] - points[j][0], points[i][1] - points[j][1]);
            if d <= merge_m {
                let (ri, rj) = (root(&mut group, i), root(&mut group, j));
                group[ri] = rj;
            }
        }
    }
    (0..n).filter(|&i| root(&mut group, i) == i).count()
}

fn seg_box(p: [f64; 2], q: [f64; 2]) -> [f64; 4] {
    [p[0].min(q[0]), p[1].min(q[1]), p[0].max(q[0]), p[1].max(q[1])]
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Intersection point of closed segments `pq` and `rs`, if any. Collinear
/// overlaps report the first overlapping endpoint.
pub fn segment_intersection(p: [f64; 2], q: [f64; 2], r: [f64; 2], s: [f64; 2]) -> Option<[f64; 2]> {
    let d1 = cross(r, s, p);
    let d2 = cross(r, s, q);
    let d3 = cross(p, q, r);
    let d4 = cross(p, q, s);
    let straddles = |a: f64, b: f64| (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0);
    if straddles(d1, d2) && straddles(d3, d4) {
        let t = d1 / (d1 - d2);
        return Some([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
    }
    let on = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    if d1 == 0.0 && on(r, s, p) {
        return Some(p);
    }
    if d2 == 0.0 && on(r, s, q) {
        return Some(q);
    }
    if d3 == 0.0 && on(p, q, r) {
        return Some(r);
    }
    if d4 == 0.0 && on(p, q, s) {
        return Some(s);
    }
    None
}
