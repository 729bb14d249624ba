//! Visual refinement of a geometric intersection frame pair.

use alloc::vec::Vec;

use crate::frame::{FrameError, FrameSource};
use crate::registration::RegisteredTrajectory;
use crate::scorer::FrameScorer;
use crate::turning::yaw_rotate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedPair {
    pub pose_a: usize,
    pub pose_b: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RefineError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("seed pose {pose} lies outside a trajectory of {len} keyframes")]
    EmptyWindow { pose: usize, len: usize },
}

fn window(seed: usize, len: usize, half: usize) -> Result<core::ops::RangeInclusive<usize>, RefineError> {
    if seed >= len {
        return Err(RefineError::EmptyWindow { pose: seed, len });
    }
    Ok(seed.saturating_sub(half)..=(seed + half).min(len - 1))
}

/// Scores every keyframe pair within `±window` of the seed and returns the
/// most similar one.
///
/// Each frame is first turned to map heading 0 using its registered yaw, so
/// frames of crossing streets are compared looking the same way. Equal
/// scores go to the pair nearest the seed (sum of pose offsets), then to the
/// lexicographically smallest pair.
pub fn refine_visual<F: FrameSource + ?Sized, S: FrameScorer>(
    frames: &F,
    scorer: &S,
    seed: (usize, usize),
    reg_a: &RegisteredTrajectory,
    reg_b: &RegisteredTrajectory,
    window_half: usize,
) -> Result<RefinedPair, RefineError> {
    let wa = window(seed.0, reg_a.len(), window_half)?;
    let wb = window(seed.1, reg_b.len(), window_half)?;
    let features = |reg: &RegisteredTrajectory, range: core::ops::RangeInclusive<usize>| {
        range
            .map(|k| {
                let f = frames.frame(&reg.video_id, k)?;
                Ok((k, scorer.prepare(&yaw_rotate(&f, -reg.map_yaws[k]))))
            })
            .collect::<Result<Vec<_>, FrameError>>()
    };
    let fa = features(reg_a, wa)?;
    let fb = features(reg_b, wb)?;

    let offset = |i: usize, j: usize| i.abs_diff(seed.0) + j.abs_diff(seed.1);
    let mut best: Option<RefinedPair> = None;
    for (i, a) in &fa {
        for (j, b) in &fb {
            let score = scorer.score(a, b);
            let take = match best {
                None => true,
                Some(bp) => {
                    score > bp.score
                        || (score == bp.score
                            && (offset(*i, *j), *i, *j) < (offset(bp.pose_a, bp.pose_b), bp.pose_a, bp.pose_b))
                }
            };
            if take {
                best = Some(RefinedPair {
                    pose_a: *i,
                    pose_b: *j,
                    score,
                });
            }
        }
    }
    Ok(best.expect("windows are non-empty"))
}
