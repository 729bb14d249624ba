//! Procedural panoramas of a flat textured world.
//!
//! The ground is tiled with 1 m cells, each carrying its own colour and a
//! 3×3 bit pattern drawn from a hash of the cell coordinates, separated by
//! dark grid lines. Rendering is a ray cast from a camera 1.6 m above the
//! ground; anything farther than the fog distance fades out.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::frame::{EquirectFrame, FrameError, FrameSource};
use crate::math;

pub const CAMERA_HEIGHT_M: f64 = 1.6;
const FOG_M: f64 = 60.0;
const FOG: [f64; 3] = [150.0, 160.0, 170.0];
const LINE_W: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct World {
    pub seed: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl World {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn cell_hash(&self, cx: i64, cy: i64) -> u64 {
        splitmix(self.seed ^ splitmix((cx as u64).wrapping_mul(0x1f1f_1f1f) ^ (cy as u64).wrapping_mul(0x7a3b_9c5d_0000_0001)))
    }

    /// Ground colour at a map point.
    pub fn ground(&self, x: f64, y: f64) -> [f64; 3] {
        let (fx, fy) = (math::floor(x), math::floor(y));
        let (u, v) = (x - fx, y - fy);
        if u < LINE_W || v < LINE_W {
            return [35.0, 35.0, 40.0];
        }
        let h = self.cell_hash(fx as i64, fy as i64);
        let base = [
            (80 + (h & 0x7f)) as f64,
            (80 + ((h >> 8) & 0x7f)) as f64,
            (80 + ((h >> 16) & 0x7f)) as f64,
        ];
        let bx = ((u - LINE_W) / (1.0 - LINE_W) * 3.0) as u64;
        let by = ((v - LINE_W) / (1.0 - LINE_W) * 3.0) as u64;
        let bit = (h >> (24 + by.min(2) * 3 + bx.min(2))) & 1;
        if bit == 1 {
            base
        } else {
            [base[0] * 0.3, base[1] * 0.3, base[2] * 0.3]
        }
    }

    /// Colour seen from `(x, y)` at map bearing `bearing` and elevation
    /// `elevation` (radians above the horizon).
    pub fn sample(&self, x: f64, y: f64, bearing: f64, elevation: f64) -> [f64; 3] {
        if elevation >= 0.0 {
            let k = elevation / (PI / 2.0);
            return [
                FOG[0] + (90.0 - FOG[0]) * k,
                FOG[1] + (140.0 - FOG[1]) * k,
                FOG[2] + (220.0 - FOG[2]) * k,
            ];
        }
        let d = CAMERA_HEIGHT_M / math::tan(-elevation);
        if d >= FOG_M {
            return FOG;
        }
        let c = self.ground(x + d * math::cos(bearing), y + d * math::sin(bearing));
        let f = d / FOG_M;
        [
            c[0] + (FOG[0] - c[0]) * f,
            c[1] + (FOG[1] - c[1]) * f,
            c[2] + (FOG[2] - c[2]) * f,
        ]
    }

    /// Panorama from `(x, y)` looking along map bearing `heading`, 2×2
    /// supersampled.
    pub fn render(&self, x: f64, y: f64, heading: f64, width: u32) -> EquirectFrame {
        let height = width / 2;
        let mut px = Vec::with_capacity(3 * width as usize * height as usize);
        for row in 0..height {
            for col in 0..width {
                let mut acc = [0.0; 3];
                for (sx, sy) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
                    let rel = TAU * (col as f64 + sx) / width as f64 - PI;
                    let elev = PI / 2.0 - PI * (row as f64 + sy) / height as f64;
                    let c = self.sample(x, y, heading - rel, elev);
                    for k in 0..3 {
                        acc[k] += c[k];
                    }
                }
                for a in acc {
                    px.push(math::round(a / 4.0).clamp(0.0, 255.0) as u8);
                }
            }
        }
        EquirectFrame::new(width, height, px).expect("2:1 by construction")
    }
}

/// True camera track of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraTrack {
    pub positions: Vec<[f64; 2]>,
    pub headings: Vec<f64>,
}

/// Renders fixture frames on demand from the true camera tracks.
#[derive(Debug, Clone)]
pub struct FixtureFrames {
    pub world: World,
    pub width: u32,
    pub tracks: BTreeMap<String, CameraTrack>,
}

impl FrameSource for FixtureFrames {
    fn frame(&self, video_id: &str, pose: usize) -> Result<EquirectFrame, FrameError> {
        let missing = || FrameError::Missing {
            video_id: video_id.into(),
            pose,
        };
        let track = self.tracks.get(video_id).ok_or_else(missing)?;
        let p = track.positions.get(pose).ok_or_else(missing)?;
        Ok(self.world.render(p[0], p[1], track.headings[pose], self.width))
    }
}
