//! Where the viewer is on the map during playback.

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::assembly::Section;
use crate::math::wrap_angle;
use crate::registration::RegisteredTrajectory;
use crate::trajectory::MapPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackPointer {
    pub section_id: String,
    /// Seconds since the start of the section.
    pub t_s: f64,
    pub view_yaw_rad: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlaybackError {
    #[error("t = {t_s} s is outside section {section_id} (0..{duration_s} s)")]
    OutOfSection {
        section_id: String,
        t_s: f64,
        duration_s: f64,
    },
    #[error("section {section_id} does not belong to video {video_id}")]
    WrongVideo { section_id: String, video_id: String },
}

/// Map position and camera heading `t_s` seconds into `section`, linearly
/// interpolated between the bracketing keyframes (heading along the
/// shorter arc).
pub fn position_at(reg: &RegisteredTrajectory, section: &Section, t_s: f64) -> Result<(MapPoint, f64), PlaybackError> {
    if section.video_id != reg.video_id || section.end_pose >= reg.len() {
        return Err(PlaybackError::WrongVideo {
            section_id: section.section_id.clone(),
            video_id: reg.video_id.clone(),
        });
    }
    let duration_s = section.duration_s();
    if !(t_s >= 0.0 && t_s <= duration_s) {
        return Err(PlaybackError::OutOfSection {
            section_id: section.section_id.clone(),
            t_s,
            duration_s,
        });
    }
    let t = (section.start_timestamp_s + t_s).min(section.end_timestamp_s);
    let poses = &reg.source.poses[section.start_pose..=section.end_pose];
    // first keyframe at or after t
    let k = poses.partition_point(|p| p.timestamp_s < t);
    let hi = section.start_pose + k.min(poses.len() - 1);
    if reg.timestamp(hi) == t || hi == section.start_pose {
        return Ok((reg.map_positions[hi], reg.map_yaws[hi]));
    }
    let lo = hi - 1;
    let (t0, t1) = (reg.timestamp(lo), reg.timestamp(hi));
    let u = (t - t0) / (t1 - t0);
    let (p, q) = (reg.map_positions[lo], reg.map_positions[hi]);
    let pos = MapPoint::new(p.x_m + u * (q.x_m - p.x_m), p.y_m + u * (q.y_m - p.y_m));
    let (y0, y1) = (reg.map_yaws[lo], reg.map_yaws[hi]);
    let heading = wrap_angle(y0 + u * wrap_angle(y1 - y0));
    Ok((pos, heading))
}
