//! Places each trajectory on the shared map.
//!
//! The local start→end vector of a trajectory is rotated and scaled onto the
//! vector between its two reference points; the same rotation and scale go
//! to every keyframe position and heading, and a translation pins the start
//! to `ref_start`. There is no least-squares fit and no drift correction:
//! interior keyframes keep whatever error the upstream SLAM left in them.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{self, wrap_angle};
use crate::trajectory::{MapPoint, VideoTrajectory};

/// `p ↦ scale · R(rotation) · p + translation` in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform2D {
    pub rotation_rad: f64,
    pub scale: f64,
    pub translation: [f64; 2],
}

impl SimilarityTransform2D {
    pub const IDENTITY: Self = Self {
        rotation_rad: 0.0,
        scale: 1.0,
        translation: [0.0, 0.0],
    };

    pub fn apply_point(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = (math::sin(self.rotation_rad), math::cos(self.rotation_rad));
        let (a, b) = (self.scale * c, self.scale * s);
        [
            a * p[0] - b * p[1] + self.translation[0],
            b * p[0] + a * p[1] + self.translation[1],
        ]
    }

    pub fn apply_yaw(&self, yaw: f64) -> f64 {
        wrap_angle(yaw + self.rotation_rad)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegistrationError {
    #[error("{video_id}: first and last keyframe share a plan position, no transform exists")]
    Degenerate { video_id: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("registration failed for {}", .failures.iter().map(|e| match e {
    RegistrationError::Degenerate { video_id } => video_id.as_str(),
}).collect::<Vec<_>>().join(", "))]
pub struct AreaRegistrationError {
    pub failures: Vec<RegistrationError>,
}

impl AreaRegistrationError {
    pub fn video_ids(&self) -> Vec<&str> {
        self.failures
            .iter()
            .map(|e| match e {
                RegistrationError::Degenerate { video_id } => video_id.as_str(),
            })
            .collect()
    }
}

/// Rotation and scale that take the local start→end vector onto
/// `ref_start → ref_end`, plus the translation that pins the start.
pub fn compute_similarity(traj: &VideoTrajectory) -> Result<SimilarityTransform2D, RegistrationError> {
    let first = traj.poses.first().map(|p| p.xy());
    let last = traj.poses.last().map(|p| p.xy());
    let (Some(s), Some(e)) = (first, last) else {
        return Err(RegistrationError::Degenerate {
            video_id: traj.video_id.clone(),
        });
    };
    let local = [e[0] - s[0], e[1] - s[1]];
    let map = [
        traj.ref_end.x_m - traj.ref_start.x_m,
        traj.ref_end.y_m - traj.ref_start.y_m,
    ];
    let local_len = math::hypot(local[0], local[1]);
    let map_len = math::hypot(map[0], map[1]);
    if local_len == 0.0 || !local_len.is_finite() || map_len == 0.0 {
        return Err(RegistrationError::Degenerate {
            video_id: traj.video_id.clone(),
        });
    }
    let rotation_rad = wrap_angle(math::atan2(map[1], map[0]) - math::atan2(local[1], local[0]));
    let scale = map_len / local_len;
    let mut t = SimilarityTransform2D {
        rotation_rad,
        scale,
        translation: [0.0, 0.0],
    };
    let moved = t.apply_point(s);
    t.translation = [traj.ref_start.x_m - moved[0], traj.ref_start.y_m - moved[1]];
    Ok(t)
}

/// A trajectory expressed in map meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisteredTrajectory {
    pub video_id: String,
    pub map_positions: Vec<MapPoint>,
    pub map_yaws: Vec<f64>,
    pub transform: SimilarityTransform2D,
    pub source: VideoTrajectory,
}

impl RegisteredTrajectory {
    pub fn len(&self) -> usize {
        self.map_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map_positions.is_empty()
    }

    pub fn street_id(&self) -> &str {
        &self.source.street_id
    }

    pub fn timestamp(&self, pose: usize) -> f64 {
        self.source.poses[pose].timestamp_s
    }

    #[inline]
    pub fn xy(&self, pose: usize) -> [f64; 2] {
        let p = self.map_positions[pose];
        [p.x_m, p.y_m]
    }

    /// Map bearing of travel leaving `pose`, fitted over the keyframes up to
    /// the first one at least `min_disp_m` away (or the last keyframe).
    pub fn bearing_forward(&self, pose: usize, min_disp_m: f64) -> f64 {
        let from = self.map_positions[pose];
        let mut end = pose;
        for (k, p) in self.map_positions.iter().enumerate().skip(pose + 1) {
            end = k;
            if from.distance(p) >= min_disp_m {
                break;
            }
        }
        fit_bearing(&self.map_positions[pose..=end]).unwrap_or(self.map_yaws[pose])
    }

    /// Map bearing of travel arriving at `pose`, fitted over the earlier
    /// keyframes back to the first one at least `min_disp_m` away.
    pub fn bearing_arriving(&self, pose: usize, min_disp_m: f64) -> f64 {
        let to = self.map_positions[pose];
        let mut start = pose;
        for k in (0..pose).rev() {
            start = k;
            if to.distance(&self.map_positions[k]) >= min_disp_m {
                break;
            }
        }
        fit_bearing(&self.map_positions[start..=pose]).unwrap_or(self.map_yaws[pose])
    }
}

/// Direction of the best-fit line through `pts`, pointing from the first
/// point toward the last. `None` if they coincide.
fn fit_bearing(pts: &[MapPoint]) -> Option<f64> {
    let (first, last) = (pts.first()?, pts.last()?);
    let (cx, cy) = (last.x_m - first.x_m, last.y_m - first.y_m);
    if cx == 0.0 && cy == 0.0 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.x_m).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.y_m).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.x_m - mx, p.y_m - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let axis = 0.5 * math::atan2(2.0 * sxy, sxx - syy);
    let (ux, uy) = (math::cos(axis), math::sin(axis));
    let sign = if ux * cx + uy * cy < 0.0 { -1.0 } else { 1.0 };
    Some(math::bearing(sign * ux, sign * uy))
}

pub fn apply_transform(traj: &VideoTrajectory, t: &SimilarityTransform2D) -> RegisteredTrajectory {
    let map_positions = traj
        .poses
        .iter()
        .map(|p| {
            let q = t.apply_point(p.xy());
            MapPoint::new(q[0], q[1])
        })
        .collect();
    let map_yaws = traj.poses.iter().map(|p| t.apply_yaw(p.yaw_rad)).collect();
    RegisteredTrajectory {
        video_id: traj.video_id.clone(),
        map_positions,
        map_yaws,
        transform: *t,
        source: traj.clone(),
    }
}

/// Registers every trajectory, preserving order. All failures are collected
/// before returning.
pub fn register_area(trajectories: &[VideoTrajectory]) -> Result<Vec<RegisteredTrajectory>, AreaRegistrationError> {
    let mut out = Vec::with_capacity(trajectories.len());
    let mut failures = Vec::new();
    for t in trajectories {
        match compute_similarity(t) {
            Ok(s) => out.push(apply_transform(t, &s)),
            Err(e) => failures.push(e),
        }
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        Err(AreaRegistrationError { failures })
    }
}
