//! Oriented FAST corners with steered binary (BRIEF) descriptors, matched
//! by mutual nearest neighbour under Hamming distance.
//!
//! Panoramas wrap horizontally, so every sample index wraps in x and clamps
//! in y.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FrameScorer;
use crate::frame::EquirectFrame;
use crate::math;

const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];
const ARC: usize = 9;
const ANGLE_BINS: usize = 30;
const PATTERN_RADIUS: i32 = 13;
const CENTROID_RADIUS: i32 = 7;
const BORDER: i32 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: u32,
    pub y: u32,
    pub response: u32,
    pub angle_rad: f64,
}

pub struct OrbFeatures {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<[u64; 4]>,
}

#[derive(Debug, Clone)]
pub struct OrbScorer {
    pub fast_threshold: u8,
    pub max_keypoints: usize,
    /// Matches farther apart than this many bits are ignored.
    pub max_hamming: u32,
    /// Test-point pairs `(ax, ay, bx, by)`, one table per angle bin.
    steered: Vec<[[i8; 4]; 256]>,
}

impl Default for OrbScorer {
    fn default() -> Self {
        Self::new(20, 200, 64)
    }
}

impl OrbScorer {
    pub fn new(fast_threshold: u8, max_keypoints: usize, max_hamming: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0b5e_55ed);
        let mut sample = || loop {
            // average of two uniforms concentrates points near the center
            let mut p = [0i32; 2];
            for v in &mut p {
                let a: i32 = rng.gen_range(-PATTERN_RADIUS..=PATTERN_RADIUS);
                let b: i32 = rng.gen_range(-PATTERN_RADIUS..=PATTERN_RADIUS);
                *v = (a + b) / 2;
            }
            if p[0] * p[0] + p[1] * p[1] <= PATTERN_RADIUS * PATTERN_RADIUS {
                return p;
            }
        };
        let mut base = [[0f64; 4]; 256];
        for t in base.iter_mut() {
            let (a, b) = (sample(), sample());
            *t = [a[0] as f64, a[1] as f64, b[0] as f64, b[1] as f64];
        }
        let steered = (0..ANGLE_BINS)
            .map(|bin| {
                let ang = bin as f64 * TAU / ANGLE_BINS as f64;
                let (s, c) = (math::sin(ang), math::cos(ang));
                let rot = |x: f64, y: f64| {
                    let rx = math::round(c * x - s * y) as i32;
                    let ry = math::round(s * x + c * y) as i32;
                    (rx.clamp(-PATTERN_RADIUS, PATTERN_RADIUS) as i8, ry.clamp(-PATTERN_RADIUS, PATTERN_RADIUS) as i8)
                };
                let mut table = [[0i8; 4]; 256];
                for (dst, t) in table.iter_mut().zip(&base) {
                    let (ax, ay) = rot(t[0], t[1]);
                    let (bx, by) = rot(t[2], t[3]);
                    *dst = [ax, ay, bx, by];
                }
                table
            })
            .collect();
        Self {
            fast_threshold,
            max_keypoints,
            max_hamming,
            steered,
        }
    }

    pub fn detect(&self, frame: &EquirectFrame) -> OrbFeatures {
        let img = Gray::from_frame(frame);
        let keypoints = self.fast_corners(&img);
        let smooth = img.box_blur();
        let descriptors = keypoints.iter().map(|k| self.describe(&smooth, k)).collect();
        OrbFeatures {
            keypoints,
            descriptors,
        }
    }

    fn fast_corners(&self, img: &Gray) -> Vec<Keypoint> {
        let (w, h) = (img.w as i32, img.h as i32);
        if h <= 2 * BORDER {
            return Vec::new();
        }
        let t = self.fast_threshold as i32;
        let mut response = vec![0u32; (w * h) as usize];
        for y in BORDER..h - BORDER {
            for x in 0..w {
                let c = img.at(x, y) as i32;
                let mut ring = [0i8; 16];
                let mut vals = [0i32; 16];
                for (k, (dx, dy)) in CIRCLE.iter().enumerate() {
                    let v = img.at(x + dx, y + dy) as i32;
                    vals[k] = v;
                    ring[k] = if v > c + t {
                        1
                    } else if v < c - t {
                        -1
                    } else {
                        0
                    };
                }
                for sign in [1i8, -1] {
                    if longest_run(&ring, sign) >= ARC {
                        let sad: i32 = vals
                            .iter()
                            .zip(&ring)
                            .filter(|(_, r)| **r == sign)
                            .map(|(v, _)| (v - c).abs() - t)
                            .sum();
                        let idx = (y * w + x) as usize;
                        response[idx] = response[idx].max(sad as u32);
                    }
                }
            }
        }
        let mut kps = Vec::new();
        for y in BORDER..h - BORDER {
            for x in 0..w {
                let r = response[(y * w + x) as usize];
                if r == 0 {
                    continue;
                }
                let mut keep = true;
                'nms: for dy in -1..=1 {
                    for dx in -1..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = (x + dx).rem_euclid(w);
                        let o = response[((y + dy) * w + nx) as usize];
                        let earlier = dy < 0 || (dy == 0 && dx < 0);
                        if o > r || (o == r && earlier) {
                            keep = false;
                            break 'nms;
                        }
                    }
                }
                if keep {
                    kps.push(Keypoint {
                        x: x as u32,
                        y: y as u32,
                        response: r,
                        angle_rad: centroid_angle(img, x, y),
                    });
                }
            }
        }
        kps.sort_by(|a, b| b.response.cmp(&a.response).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)));
        kps.truncate(self.max_keypoints);
        kps
    }

    fn describe(&self, smooth: &Gray, kp: &Keypoint) -> [u64; 4] {
        let bin = (math::round(kp.angle_rad / TAU * ANGLE_BINS as f64) as i64).rem_euclid(ANGLE_BINS as i64);
        let table = &self.steered[bin as usize];
        let (x, y) = (kp.x as i32, kp.y as i32);
        let mut d = [0u64; 4];
        for (i, t) in table.iter().enumerate() {
            let a = smooth.at(x + t[0] as i32, y + t[1] as i32);
            let b = smooth.at(x + t[2] as i32, y + t[3] as i32);
            if a < b {
                d[i / 64] |= 1 << (i % 64);
            }
        }
        d
    }

    /// Number of mutual nearest-neighbour descriptor pairs within
    /// `max_hamming` bits.
    pub fn mutual_matches(&self, a: &OrbFeatures, b: &OrbFeatures) -> usize {
        if a.descriptors.is_empty() || b.descriptors.is_empty() {
            return 0;
        }
        let nb = b.descriptors.len();
        let mut best_for_b = vec![(u32::MAX, usize::MAX); nb];
        let mut best_for_a = Vec::with_capacity(a.descriptors.len());
        for (i, da) in a.descriptors.iter().enumerate() {
            let mut best = (u32::MAX, usize::MAX);
            for (j, db) in b.descriptors.iter().enumerate() {
                let d = hamming(da, db);
                if d < best.0 {
                    best = (d, j);
                }
                if d < best_for_b[j].0 {
                    best_for_b[j] = (d, i);
                }
            }
            best_for_a.push(best);
        }
        best_for_a
            .iter()
            .enumerate()
            .filter(|(i, (d, j))| *d <= self.max_hamming && best_for_b[*j].1 == *i)
            .count()
    }
}

impl FrameScorer for OrbScorer {
    type Features = OrbFeatures;

    fn prepare(&self, frame: &EquirectFrame) -> OrbFeatures {
        self.detect(frame)
    }

    fn score(&self, a: &OrbFeatures, b: &OrbFeatures) -> f64 {
        self.mutual_matches(a, b) as f64
    }
}

#[inline]
pub fn hamming(a: &[u64; 4], b: &[u64; 4]) -> u32 {
    (a[0] ^ b[0]).count_ones() + (a[1] ^ b[1]).count_ones() + (a[2] ^ b[2]).count_ones() + (a[3] ^ b[3]).count_ones()
}

fn longest_run(ring: &[i8; 16], sign: i8) -> usize {
    let mut best = 0;
    let mut run = 0;
    for k in 0..32 {
        if ring[k % 16] == sign {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best.min(16)
}

fn centroid_angle(img: &Gray, x: i32, y: i32) -> f64 {
    let (mut m10, mut m01) = (0i64, 0i64);
    let r2 = CENTROID_RADIUS * CENTROID_RADIUS;
    for dy in -CENTROID_RADIUS..=CENTROID_RADIUS {
        for dx in -CENTROID_RADIUS..=CENTROID_RADIUS {
            if dx * dx + dy * dy > r2 {
                continue;
            }
            let v = img.at(x + dx, y + dy) as i64;
            m10 += dx as i64 * v;
            m01 += dy as i64 * v;
        }
    }
    math::atan2(m01 as f64, m10 as f64)
}

struct Gray {
    w: usize,
    h: usize,
    px: Vec<u8>,
}

impl Gray {
    fn from_frame(f: &EquirectFrame) -> Self {
        Self {
            w: f.width() as usize,
            h: f.height() as usize,
            px: f.luma(),
        }
    }

    #[inline]
    fn at(&self, x: i32, y: i32) -> u8 {
        let x = x.rem_euclid(self.w as i32) as usize;
        let y = y.clamp(0, self.h as i32 - 1) as usize;
        self.px[y * self.w + x]
    }

    /// 5×5 box filter.
    fn box_blur(&self) -> Gray {
        let mut px = vec![0u8; self.px.len()];
        for y in 0..self.h as i32 {
            for x in 0..self.w as i32 {
                let mut s = 0u32;
                for dy in -2..=2 {
                    for dx in -2..=2 {
                        s += self.at(x + dx, y + dy) as u32;
                    }
                }
                px[y as usize * self.w + x as usize] = ((s + 12) / 25) as u8;
            }
        }
        Gray {
            w: self.w,
            h: self.h,
            px,
        }
    }
}
