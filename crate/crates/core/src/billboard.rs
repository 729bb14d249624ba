//! Virtual billboards anchored to a video timestamp and a view direction.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

pub const DEFAULT_WINDOW_S: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Billboard {
    pub billboard_id: String,
    pub video_id: String,
    pub anchor_timestamp_s: f64,
    pub yaw_rad: f64,
    pub pitch_rad: f64,
    pub title: String,
    /// Text or URL shown when the billboard is clicked.
    pub info: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BillboardError {
    #[error("billboard {0}: anchor {1} s is outside the video's {2}..{3} s")]
    AnchorOutOfRange(String, f64, f64, f64),
    #[error("billboard {0}: yaw must be in [-π, π) and pitch in [-π/2, π/2]")]
    BadDirection(String),
}

impl Billboard {
    /// Checks placement against the video's timestamp span.
    pub fn check(&self, first_s: f64, last_s: f64) -> Result<(), BillboardError> {
        let t = self.anchor_timestamp_s;
        if !(t >= first_s && t <= last_s) {
            return Err(BillboardError::AnchorOutOfRange(self.billboard_id.clone(), t, first_s, last_s));
        }
        if !((-PI..PI).contains(&self.yaw_rad) && (-FRAC_PI_2..=FRAC_PI_2).contains(&self.pitch_rad)) {
            return Err(BillboardError::BadDirection(self.billboard_id.clone()));
        }
        Ok(())
    }
}

/// Billboards of `video_id` anchored within `window_s` of `t_s`, nearest
/// first; equal distances sort by id.
pub fn billboards_near<'a>(billboards: &'a [Billboard], video_id: &str, t_s: f64, window_s: f64) -> Vec<&'a Billboard> {
    let mut hits: Vec<(f64, &Billboard)> = billboards
        .iter()
        .filter(|b| b.video_id == video_id)
        .map(|b| ((b.anchor_timestamp_s - t_s).abs(), b))
        .filter(|(d, _)| *d <= window_s)
        .collect();
    hits.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.billboard_id.cmp(&y.1.billboard_id)));
    hits.into_iter().map(|(_, b)| b).collect()
}
