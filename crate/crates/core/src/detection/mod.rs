//! Intersection detection between registered street trajectories.
//!
//! For each pair of trajectories: cut both into rectangles of consecutive
//! keyframes, add endpoint-extension rectangles, keep rectangle pairs that
//! overlap, search all keyframe pairs inside them for the closest one, and
//! optionally refine that pair by visual similarity.

mod rects;
mod refine;
mod search;

pub use rects::{decompose_rects, extend_endpoints, find_overlapping_pairs, Aabb, ChunkRect};
pub use refine::{refine_visual, RefineError, RefinedPair};
pub use search::{nearest_frame_pair, search_candidates, CandidateSearch, NearestPair};

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::frame::FrameSource;
use crate::math::wrap_angle;
use crate::registration::RegisteredTrajectory;
use crate::scorer::FrameScorer;
use crate::trajectory::MapPoint;

/// A frame pair where two street videos cross.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionRecord {
    /// Lexicographically smaller video id.
    pub video_a: String,
    pub video_b: String,
    pub pose_a: usize,
    pub pose_b: usize,
    pub timestamp_a_s: f64,
    pub timestamp_b_s: f64,
    /// Midpoint of the two frame positions.
    pub map_point: MapPoint,
    /// `map_yaw_b − map_yaw_a`, wrapped to `[-π, π)`.
    pub relative_yaw_rad: f64,
    pub distance_m: f64,
    pub refined: bool,
}

impl IntersectionRecord {
    /// The pose this record assigns to `video_id`, if it is one of its two.
    pub fn pose_of(&self, video_id: &str) -> Option<usize> {
        if self.video_a == video_id {
            Some(self.pose_a)
        } else if self.video_b == video_id {
            Some(self.pose_b)
        } else {
            None
        }
    }

    pub fn involves(&self, video_id: &str) -> bool {
        self.video_a == video_id || self.video_b == video_id
    }

    fn key(&self) -> (&str, &str, usize, usize) {
        (&self.video_a, &self.video_b, self.pose_a, self.pose_b)
    }

    pub(crate) fn cmp_key(&self, other: &Self) -> core::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionParams {
    pub chunk_len: usize,
    pub pad_m: f64,
    pub ext_len: usize,
    pub intersect_threshold_m: f64,
    pub refine_window: usize,
    /// Also pair the two directions of the same street.
    pub same_street_pairs: bool,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            chunk_len: 100,
            pad_m: 3.0,
            ext_len: 200,
            intersect_threshold_m: 5.0,
            refine_window: 30,
            same_street_pairs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("chunk_len must be at least 2")]
    ChunkLen,
    #[error("ext_len must be at least 1")]
    ExtLen,
    #[error("pad_m and intersect_threshold_m must be finite and non-negative")]
    Distance,
}

impl DetectionParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.chunk_len < 2 {
            return Err(ParamError::ChunkLen);
        }
        if self.ext_len < 1 {
            return Err(ParamError::ExtLen);
        }
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.pad_m) || !ok(self.intersect_threshold_m) {
            return Err(ParamError::Distance);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectionWarning {
    /// Separate places along the two paths both pass the distance
    /// threshold; the best one was kept.
    MultipleCrossings {
        video_a: String,
        video_b: String,
        places: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub video_a: String,
    pub video_b: String,
    pub reason: String,
}

/// Frames and scorer for visual refinement.
pub struct Visual<'a, S> {
    pub frames: &'a dyn FrameSource,
    pub scorer: &'a S,
}

impl<S> Clone for Visual<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for Visual<'_, S> {}

/// Everything detection learned about one trajectory pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub record: Option<IntersectionRecord>,
    /// Closest pair before refinement, if any rectangles overlapped.
    pub geometric: Option<NearestPair>,
    pub warning: Option<DetectionWarning>,
    /// Refinement failed; the record, if any, is the unrefined one.
    pub failure: Option<PairFailure>,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionReport {
    /// Sorted by `(video_a, video_b)`.
    pub records: Vec<IntersectionRecord>,
    pub warnings: Vec<DetectionWarning>,
    pub failures: Vec<PairFailure>,
    pub evaluations: u64,
}

/// Rectangles searched for one trajectory: the regular chunks followed by
/// the two endpoint extensions, with `chunk_index` equal to list position.
pub fn candidate_rects(reg: &RegisteredTrajectory, params: &DetectionParams) -> Vec<ChunkRect> {
    let mut rects = decompose_rects(reg, params.chunk_len, params.pad_m);
    let base = rects.len();
    for (k, mut r) in extend_endpoints(reg, params.ext_len, params.pad_m).into_iter().enumerate() {
        r.chunk_index = base + k;
        rects.push(r);
    }
    rects
}

/// Detects the crossing of one trajectory pair. Argument order does not
/// matter; the result is expressed with the smaller video id first.
pub fn detect_pair<S: FrameScorer>(
    a: &RegisteredTrajectory,
    b: &RegisteredTrajectory,
    visual: Option<Visual<'_, S>>,
    params: &DetectionParams,
) -> PairOutcome {
    let (a, b) = if a.video_id <= b.video_id { (a, b) } else { (b, a) };
    let rects_a = candidate_rects(a, params);
    let rects_b = candidate_rects(b, params);
    let candidates = find_overlapping_pairs(&rects_a, &rects_b);
    let search = search_candidates(a, b, &rects_a, &rects_b, &candidates);
    let mut outcome = PairOutcome {
        record: None,
        geometric: search.best,
        warning: None,
        failure: None,
        evaluations: search.evaluations,
    };
    let Some(best) = search.best else {
        return outcome;
    };
    if best.distance_m > params.intersect_threshold_m {
        return outcome;
    }

    let places = count_places(&search.per_candidate, params);
    if places > 1 {
        outcome.warning = Some(DetectionWarning::MultipleCrossings {
            video_a: a.video_id.clone(),
            video_b: b.video_id.clone(),
            places,
        });
    }

    let mut pair = (best.pose_a, best.pose_b);
    let mut refined = false;
    if let Some(v) = visual {
        match refine_visual(v.frames, v.scorer, pair, a, b, params.refine_window) {
            Ok(r) => {
                pair = (r.pose_a, r.pose_b);
                refined = true;
            }
            Err(e) => {
                outcome.failure = Some(PairFailure {
                    video_a: a.video_id.clone(),
                    video_b: b.video_id.clone(),
                    reason: alloc::format!("{e}"),
                });
            }
        }
    }
    outcome.record = Some(make_record(a, b, pair.0, pair.1, refined));
    outcome
}

fn make_record(a: &RegisteredTrajectory, b: &RegisteredTrajectory, pa: usize, pb: usize, refined: bool) -> IntersectionRecord {
    let (p, q) = (a.map_positions[pa], b.map_positions[pb]);
    IntersectionRecord {
        video_a: a.video_id.clone(),
        video_b: b.video_id.clone(),
        pose_a: pa,
        pose_b: pb,
        timestamp_a_s: a.timestamp(pa),
        timestamp_b_s: b.timestamp(pb),
        map_point: p.midpoint(&q),
        relative_yaw_rad: wrap_angle(b.map_yaws[pb] - a.map_yaws[pa]),
        distance_m: p.distance(&q),
        refined,
    }
}

/// Groups the per-rectangle-pair minima that pass the threshold into places;
/// minima whose chunks are adjacent (or the same) on both paths belong to
/// one place.
fn count_places(minima: &[NearestPair], params: &DetectionParams) -> usize {
    let cells: BTreeSet<(usize, usize)> = minima
        .iter()
        .filter(|m| m.distance_m <= params.intersect_threshold_m)
        .map(|m| (m.pose_a / params.chunk_len, m.pose_b / params.chunk_len))
        .collect();
    let cells: Vec<_> = cells.into_iter().collect();
    let n = cells.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = cells[i].0.abs_diff(cells[j].0) <= 1 && cells[i].1.abs_diff(cells[j].1) <= 1;
            if adjacent {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    (0..n).filter(|&i| root(&mut parent, i) == i).count()
}

/// Whether detection should consider this pair at all.
pub fn pair_eligible(a: &RegisteredTrajectory, b: &RegisteredTrajectory, params: &DetectionParams) -> bool {
    a.video_id != b.video_id && (params.same_street_pairs || a.street_id() != b.street_id())
}

/// Runs [`detect_pair`] over every eligible unordered pair of the area and
/// collects the results in canonical order.
pub fn detect_all<S: FrameScorer>(
    area: &[RegisteredTrajectory],
    visual: Option<Visual<'_, S>>,
    params: &DetectionParams,
) -> DetectionReport {
    let mut outcomes = Vec::new();
    for i in 0..area.len() {
        for j in i + 1..area.len() {
            if pair_eligible(&area[i], &area[j], params) {
                outcomes.push(detect_pair(&area[i], &area[j], visual, params));
            }
        }
    }
    collect_report(outcomes)
}

/// Geometry-only detection.
pub fn detect_geometric(area: &[RegisteredTrajectory], params: &DetectionParams) -> DetectionReport {
    detect_all::<crate::scorer::PatchCorrelation>(area, None, params)
}

/// Merges per-pair outcomes (in any order) into a canonical report.
pub fn collect_report(outcomes: impl IntoIterator<Item = PairOutcome>) -> DetectionReport {
    let mut report = DetectionReport::default();
    for o in outcomes {
        report.evaluations += o.evaluations;
        report.records.extend(o.record);
        report.warnings.extend(o.warning);
        report.failures.extend(o.failure);
    }
    report.records.sort_by(|x, y| x.cmp_key(y));
    let wkey = |w: &DetectionWarning| match w {
        DetectionWarning::MultipleCrossings { video_a, video_b, .. } => (video_a.clone(), video_b.clone()),
    };
    report.warnings.sort_by_key(wkey);
    report
        .failures
        .sort_by(|x, y| (&x.video_a, &x.video_b).cmp(&(&y.video_a, &y.video_b)));
    report
}
