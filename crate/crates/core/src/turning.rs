//! Turning views: the rotating, cross-blended frames shown when playback
//! switches from one street video to another at an intersection.
//!
//! Rotation is a whole-column circular shift of the panorama, so every
//! operation here is exact integer arithmetic on pixels.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::assembly::{exits_toward, ExitPolicy, NavGraph};
use crate::frame::{EquirectFrame, FrameError, FrameSource};
use crate::math::{self, wrap_angle};
use crate::registration::RegisteredTrajectory;

/// Column shift that realizes a heading change of `yaw_rad`.
pub fn yaw_shift(yaw_rad: f64, width: u32) -> i64 {
    math::round(yaw_rad / TAU * width as f64) as i64
}

/// Turns the virtual camera by `yaw_rad` (counter-clockwise on the map).
pub fn yaw_rotate(frame: &EquirectFrame, yaw_rad: f64) -> EquirectFrame {
    shift_columns(frame, yaw_shift(yaw_rad, frame.width()))
}

fn shift_columns(frame: &EquirectFrame, shift: i64) -> EquirectFrame {
    let w = frame.width() as usize;
    let s = shift.rem_euclid(w as i64) as usize;
    if s == 0 {
        return frame.clone();
    }
    let src = frame.pixels();
    let mut out = vec![0u8; src.len()];
    let row_bytes = 3 * w;
    // out[x] = in[x - s]
    for (dst, row) in out.chunks_exact_mut(row_bytes).zip(src.chunks_exact(row_bytes)) {
        dst[3 * s..].copy_from_slice(&row[..3 * (w - s)]);
        dst[..3 * s].copy_from_slice(&row[3 * (w - s)..]);
    }
    EquirectFrame::new(frame.width(), frame.height(), out).expect("same shape")
}

/// Turning view synthesis methods compared in the user study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TurnMethod {
    /// Direct switch, no inserted frames.
    #[serde(rename = "A")]
    ACut,
    /// The before-turn frame rotated over the turn arc; the switch to the
    /// next section is a hard cut after the last inserted frame.
    #[serde(rename = "B")]
    BRotateOnly,
    /// Rotation over the turn arc while cross-blending into the after-turn
    /// frame.
    #[serde(rename = "C")]
    CBlendRotate,
}

impl TurnMethod {
    pub fn letter(&self) -> char {
        match self {
            TurnMethod::ACut => 'A',
            TurnMethod::BRotateOnly => 'B',
            TurnMethod::CBlendRotate => 'C',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(TurnMethod::ACut),
            'B' => Some(TurnMethod::BRotateOnly),
            'C' => Some(TurnMethod::CBlendRotate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TurnSpec {
    /// Last frame before the turn.
    pub frame_i: EquirectFrame,
    /// First frame after the turn.
    pub frame_j: EquirectFrame,
    /// Map heading of `frame_j` minus that of `frame_i`.
    pub delta_yaw_rad: f64,
    pub n_frames: usize,
    pub method: TurnMethod,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TurnError {
    #[error("frames differ in size: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("method {0:?} needs at least 2 frames, got {1}")]
    TooFewFrames(TurnMethod, usize),
}

pub fn synthesize_turn(spec: &TurnSpec) -> Result<Vec<EquirectFrame>, TurnError> {
    let (i, j) = (&spec.frame_i, &spec.frame_j);
    if !i.same_shape(j) {
        return Err(TurnError::DimensionMismatch(i.width(), i.height(), j.width(), j.height()));
    }
    let n = spec.n_frames;
    if spec.method != TurnMethod::ACut && n < 2 {
        return Err(TurnError::TooFewFrames(spec.method, n));
    }
    let delta = wrap_angle(spec.delta_yaw_rad);
    let last = n.saturating_sub(1) as f64;
    match spec.method {
        TurnMethod::ACut => Ok(Vec::new()),
        TurnMethod::BRotateOnly => Ok((0..n)
            .map(|k| yaw_rotate(i, k as f64 / last * delta))
            .collect()),
        TurnMethod::CBlendRotate => {
            let aligned = yaw_rotate(j, -delta);
            let w = i.width();
            let total = yaw_shift(-delta, w);
            Ok((0..n)
                .map(|k| {
                    let blended = blend(i, &aligned, k as u64, (n - 1) as u64);
                    // the last step must undo the alignment shift exactly
                    let s = if k == n - 1 {
                        -total
                    } else {
                        yaw_shift(k as f64 / last * delta, w)
                    };
                    shift_columns(&blended, s)
                })
                .collect())
        }
    }
}

/// `(1 − k/d)·a + (k/d)·b` per channel, rounded half up, in integers.
pub fn blend(a: &EquirectFrame, b: &EquirectFrame, k: u64, d: u64) -> EquirectFrame {
    debug_assert!(k <= d && d > 0);
    let pixels = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let v = x as u64 * (d - k) + y as u64 * k;
            ((2 * v + d) / (2 * d)) as u8
        })
        .collect();
    EquirectFrame::new(a.width(), a.height(), pixels).expect("same shape")
}

/// One turn to synthesize: leaving `from_section` at `node_id` onto
/// `to_section`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnPlan {
    pub node_id: String,
    pub from_section: String,
    pub to_section: String,
    pub video_i: String,
    pub pose_i: usize,
    pub video_j: String,
    pub pose_j: usize,
    pub delta_yaw_rad: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TurnAssetError {
    #[error("turn {node_id} {from_section} -> {to_section}: {source}")]
    Frame {
        node_id: String,
        from_section: String,
        to_section: String,
        source: Box<FrameError>,
    },
    #[error("turn {node_id} {from_section} -> {to_section}: {source}")]
    Synthesis {
        node_id: String,
        from_section: String,
        to_section: String,
        source: TurnError,
    },
}

/// Every turn a viewer can take: for each node, each section arriving there
/// and each exit offered by [`exits_toward`], except carrying on along the
/// same video (no turn needed).
///
/// Frames I and J are the intersection frames of the record linking the two
/// videos at that node; without such a record (a permitted u-turn) they are
/// the section boundary frames.
pub fn plan_turns(
    graph: &NavGraph,
    registered: &[RegisteredTrajectory],
    policy: &ExitPolicy,
) -> Vec<TurnPlan> {
    let regs: BTreeMap<&str, &RegisteredTrajectory> = registered.iter().map(|r| (r.video_id.as_str(), r)).collect();
    let mut plans = Vec::new();
    for (node_id, node) in &graph.nodes {
        let arriving = graph.sections.values().filter(|s| s.end_node.node() == Some(node_id.as_str()));
        for from in arriving {
            let Ok(exits) = exits_toward(graph, node_id, &from.section_id, policy) else {
                continue;
            };
            for exit in exits {
                let to = &graph.sections[&exit.section_id];
                if to.video_id == from.video_id {
                    continue;
                }
                let linking = node.members.iter().find(|r| r.involves(&from.video_id) && r.involves(&to.video_id));
                let (pose_i, pose_j) = match linking {
                    Some(r) => (
                        r.pose_of(&from.video_id).expect("involves"),
                        r.pose_of(&to.video_id).expect("involves"),
                    ),
                    None => (from.end_pose, to.start_pose),
                };
                let (Some(ri), Some(rj)) = (regs.get(from.video_id.as_str()), regs.get(to.video_id.as_str())) else {
                    continue;
                };
                plans.push(TurnPlan {
                    node_id: node_id.clone(),
                    from_section: from.section_id.clone(),
                    to_section: to.section_id.clone(),
                    video_i: from.video_id.clone(),
                    pose_i,
                    video_j: to.video_id.clone(),
                    pose_j,
                    delta_yaw_rad: wrap_angle(rj.map_yaws[pose_j] - ri.map_yaws[pose_i]),
                });
            }
        }
    }
    plans.sort_by(|a, b| {
        (&a.node_id, &a.from_section, &a.to_section).cmp(&(&b.node_id, &b.from_section, &b.to_section))
    });
    plans
}

pub fn render_turn<F: FrameSource + ?Sized>(
    plan: &TurnPlan,
    frames: &F,
    n_frames: usize,
    method: TurnMethod,
) -> Result<Vec<EquirectFrame>, TurnAssetError> {
    let ids = || (plan.node_id.clone(), plan.from_section.clone(), plan.to_section.clone());
    let load = |v: &str, p: usize| {
        frames.frame(v, p).map_err(|source| {
            let (node_id, from_section, to_section) = ids();
            TurnAssetError::Frame {
                node_id,
                from_section,
                to_section,
                source: Box::new(source),
            }
        })
    };
    let frame_i = load(&plan.video_i, plan.pose_i)?;
    let frame_j = load(&plan.video_j, plan.pose_j)?;
    synthesize_turn(&TurnSpec {
        frame_i,
        frame_j,
        delta_yaw_rad: plan.delta_yaw_rad,
        n_frames,
        method,
    })
    .map_err(|source| {
        let (node_id, from_section, to_section) = ids();
        TurnAssetError::Synthesis {
            node_id,
            from_section,
            to_section,
            source,
        }
    })
}

#[derive(Debug, Clone)]
pub struct TurnAsset {
    pub plan: TurnPlan,
    pub frames: Vec<EquirectFrame>,
}

#[derive(Debug, Clone, Default)]
pub struct TurnAssets {
    pub assets: Vec<TurnAsset>,
    pub failures: Vec<TurnAssetError>,
}

/// Plans and renders every turn, keeping going past per-turn failures.
pub fn precompute_turns<F: FrameSource + ?Sized>(
    graph: &NavGraph,
    registered: &[RegisteredTrajectory],
    frames: &F,
    n_frames: usize,
    method: TurnMethod,
    policy: &ExitPolicy,
) -> TurnAssets {
    let mut out = TurnAssets::default();
    for plan in plan_turns(graph, registered, policy) {
        match render_turn(&plan, frames, n_frames, method) {
            Ok(frames) => out.assets.push(TurnAsset { plan, frames }),
            Err(e) => out.failures.push(e),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn ramp(w: u32) -> EquirectFrame {
        let h = w / 2;
        let mut px = Vec::new();
        for y in 0..h {
            for x in 0..w {
                px.extend_from_slice(&[(x % 256) as u8, (y % 256) as u8, ((x * 7 + y) % 251) as u8]);
            }
        }
        EquirectFrame::new(w, h, px).unwrap()
    }

    #[test]
    fn full_turn_is_identity() {
        let f = ramp(64);
        assert_eq!(yaw_rotate(&f, TAU), f);
    }

    #[test]
    fn half_turn_is_an_involution() {
        let f = ramp(1024);
        assert_eq!(yaw_shift(PI, 1024), 512);
        let once = yaw_rotate(&f, PI);
        assert_ne!(once, f);
        assert_eq!(yaw_rotate(&once, PI), f);
    }

    #[test]
    fn small_turn_shift() {
        // round(0.1 / (2π) · 3600) = round(57.2958) = 57
        assert_eq!(yaw_shift(0.1, 3600), 57);
    }

    #[test]
    fn shift_moves_columns_right() {
        let f = ramp(8);
        let g = yaw_rotate(&f, TAU / 8.0);
        for y in 0..4 {
            for x in 0..8 {
                assert_eq!(g.pixel((x + 1) % 8, y), f.pixel(x, y));
            }
        }
    }

    #[test]
    fn method_c_identical_frames_no_turn() {
        let f = ramp(32);
        let out = synthesize_turn(&TurnSpec {
            frame_i: f.clone(),
            frame_j: f.clone(),
            delta_yaw_rad: 0.0,
            n_frames: 5,
            method: TurnMethod::CBlendRotate,
        })
        .unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|g| *g == f));
    }

    #[test]
    fn method_c_midpoint_of_grays() {
        let a = EquirectFrame::filled(16, 8, [100; 3]).unwrap();
        let b = EquirectFrame::filled(16, 8, [200; 3]).unwrap();
        let out = synthesize_turn(&TurnSpec {
            frame_i: a,
            frame_j: b,
            delta_yaw_rad: 0.0,
            n_frames: 3,
            method: TurnMethod::CBlendRotate,
        })
        .unwrap();
        assert!(out[1].pixels().iter().all(|&v| v == 150));
    }

    #[test]
    fn rounding_is_half_up() {
        let a = EquirectFrame::filled(4, 2, [0; 3]).unwrap();
        let b = EquirectFrame::filled(4, 2, [1; 3]).unwrap();
        // 0.5 rounds up, 0.25 rounds down
        assert!(blend(&a, &b, 1, 2).pixels().iter().all(|&v| v == 1));
        assert!(blend(&a, &b, 1, 4).pixels().iter().all(|&v| v == 0));
    }

    #[test]
    fn method_a_is_empty_and_allows_zero_frames() {
        let f = ramp(16);
        let out = synthesize_turn(&TurnSpec {
            frame_i: f.clone(),
            frame_j: f,
            delta_yaw_rad: 1.0,
            n_frames: 0,
            method: TurnMethod::ACut,
        })
        .unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn method_b_rotates_frame_i_over_the_arc() {
        let i = ramp(64);
        let j = EquirectFrame::filled(64, 32, [9; 3]).unwrap();
        let out = synthesize_turn(&TurnSpec {
            frame_i: i.clone(),
            frame_j: j,
            delta_yaw_rad: PI / 2.0,
            n_frames: 3,
            method: TurnMethod::BRotateOnly,
        })
        .unwrap();
        assert_eq!(out[0], i);
        assert_eq!(out[2], yaw_rotate(&i, PI / 2.0));
    }

    #[test]
    fn errors() {
        let a = ramp(16);
        let b = ramp(32);
        let spec = TurnSpec {
            frame_i: a.clone(),
            frame_j: b,
            delta_yaw_rad: 0.0,
            n_frames: 4,
            method: TurnMethod::CBlendRotate,
        };
        assert!(matches!(synthesize_turn(&spec), Err(TurnError::DimensionMismatch(..))));
        let spec = TurnSpec {
            frame_i: a.clone(),
            frame_j: a,
            delta_yaw_rad: 0.0,
            n_frames: 1,
            method: TurnMethod::BRotateOnly,
        };
        assert_eq!(
            synthesize_turn(&spec).unwrap_err(),
            TurnError::TooFewFrames(TurnMethod::BRotateOnly, 1)
        );
    }
}
