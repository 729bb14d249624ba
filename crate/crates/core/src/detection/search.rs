//! Exhaustive nearest-pair search restricted to overlapping rectangles.

use alloc::vec::Vec;

use super::rects::ChunkRect;
use crate::math;
use crate::registration::RegisteredTrajectory;

/// Closest keyframe pair found by a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestPair {
    pub pose_a: usize,
    pub pose_b: usize,
    pub distance_m: f64,
}

/// Result of searching a set of candidate rectangle pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSearch {
    /// Global minimum over every candidate.
    pub best: Option<NearestPair>,
    /// Minimum of each candidate pair, in candidate order.
    pub per_candidate: Vec<NearestPair>,
    /// Point-to-point distance evaluations performed.
    pub evaluations: u64,
}

#[inline]
fn better(d2: f64, pair: (usize, usize), best_d2: f64, best: (usize, usize)) -> bool {
    d2 < best_d2 || (d2 == best_d2 && pair < best)
}

/// Searches every keyframe pair inside each candidate rectangle pair.
/// Equal distances resolve to the lexicographically smallest `(pose_a, pose_b)`.
pub fn search_candidates(
    reg_a: &RegisteredTrajectory,
    reg_b: &RegisteredTrajectory,
    rects_a: &[ChunkRect],
    rects_b: &[ChunkRect],
    candidates: &[(usize, usize)],
) -> CandidateSearch {
    let mut evaluations = 0u64;
    let mut per_candidate = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, (usize, usize))> = None;
    for &(ia, ib) in candidates {
        let mut local: Option<(f64, (usize, usize))> = None;
        for i in rects_a[ia].poses() {
            let p = reg_a.xy(i);
            for j in rects_b[ib].poses() {
                let q = reg_b.xy(j);
                let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
                let d2 = dx * dx + dy * dy;
                evaluations += 1;
                if local.is_none_or(|(bd, bp)| better(d2, (i, j), bd, bp)) {
                    local = Some((d2, (i, j)));
                }
            }
        }
        if let Some((d2, pair)) = local {
            per_candidate.push(NearestPair {
                pose_a: pair.0,
                pose_b: pair.1,
                distance_m: math::sqrt(d2),
            });
            if best.is_none_or(|(bd, bp)| better(d2, pair, bd, bp)) {
                best = Some((d2, pair));
            }
        }
    }
    CandidateSearch {
        best: best.map(|(d2, (pose_a, pose_b))| NearestPair {
            pose_a,
            pose_b,
            distance_m: math::sqrt(d2),
        }),
        per_candidate,
        evaluations,
    }
}

/// Globally closest keyframe pair among the candidate rectangle pairs, or
/// `None` when there are no candidates.
pub fn nearest_frame_pair(
    reg_a: &RegisteredTrajectory,
    reg_b: &RegisteredTrajectory,
    rects_a: &[ChunkRect],
    rects_b: &[ChunkRect],
    candidates: &[(usize, usize)],
) -> Option<NearestPair> {
    search_candidates(reg_a, reg_b, rects_a, rects_b, candidates).best
}
