//! Rectangle decomposition of registered trajectories and the overlap
//! search between two rectangle lists.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::registration::RegisteredTrajectory;

/// Closed axis-aligned rectangle in map meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Aabb {
    pub fn around(p: [f64; 2]) -> Self {
        Self {
            min_x: p[0],
            min_y: p[1],
            max_x: p[0],
            max_y: p[1],
        }
    }

    pub fn include(&mut self, p: [f64; 2]) {
        self.min_x = self.min_x.min(p[0]);
        self.min_y = self.min_y.min(p[1]);
        self.max_x = self.max_x.max(p[0]);
        self.max_y = self.max_y.max(p[1]);
    }

    pub fn inflate(&self, pad: f64) -> Self {
        Self {
            min_x: self.min_x - pad,
            min_y: self.min_y - pad,
            max_x: self.max_x + pad,
            max_y: self.max_y + pad,
        }
    }

    pub fn intersects(&self, o: &Aabb) -> bool {
        self.min_x <= o.max_x && o.min_x <= self.max_x && self.min_y <= o.max_y && o.min_y <= self.max_y
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min_x && p[0] <= self.max_x && p[1] >= self.min_y && p[1] <= self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }
}

/// Bounding rectangle of a run of consecutive keyframes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRect {
    pub video_id: String,
    /// Position of this rectangle in the list it was produced in.
    pub chunk_index: usize,
    /// Inclusive pose ordinals `[first, last]`.
    pub pose_range: [usize; 2],
    pub bounds: Aabb,
    /// Set on endpoint-extension rectangles.
    pub extended: bool,
}

impl ChunkRect {
    pub fn poses(&self) -> core::ops::RangeInclusive<usize> {
        self.pose_range[0]..=self.pose_range[1]
    }
}

fn bounds_of(reg: &RegisteredTrajectory, first: usize, last: usize) -> Aabb {
    let mut b = Aabb::around(reg.xy(first));
    for k in first + 1..=last {
        b.include(reg.xy(k));
    }
    b
}

/// Splits a trajectory into runs of `chunk_len` keyframes (the last run may
/// be shorter) and bounds each run, inflated by `pad_m`.
pub fn decompose_rects(reg: &RegisteredTrajectory, chunk_len: usize, pad_m: f64) -> Vec<ChunkRect> {
    assert!(chunk_len >= 2, "chunk_len must be at least 2");
    assert!(pad_m >= 0.0, "pad_m must be non-negative");
    let n = reg.len();
    (0..n)
        .step_by(chunk_len)
        .enumerate()
        .map(|(chunk_index, first)| {
            let last = (first + chunk_len - 1).min(n - 1);
            ChunkRect {
                video_id: reg.video_id.clone(),
                chunk_index,
                pose_range: [first, last],
                bounds: bounds_of(reg, first, last).inflate(pad_m),
                extended: false,
            }
        })
        .collect()
}

/// Two extra rectangles reaching past the path's ends along the end
/// tangents, by the mean spacing of the last `ext_len` keyframes times
/// `ext_len`. Catches crossings where a path stops just short of another
/// street.
///
/// Each covers only the virtual stretch from its endpoint outward, and its
/// pose range is the endpoint alone: the real keyframes are already in the
/// regular chunks, so searching them again would only repeat work.
pub fn extend_endpoints(reg: &RegisteredTrajectory, ext_len: usize, pad_m: f64) -> Vec<ChunkRect> {
    assert!(ext_len >= 1, "ext_len must be at least 1");
    let n = reg.len();
    let cover = ext_len.min(n);

    let spacing = |first: usize, last: usize| {
        if last == first {
            return 0.0;
        }
        let len: f64 = (first..last)
            .map(|k| reg.map_positions[k].distance(&reg.map_positions[k + 1]))
            .sum();
        len / (last - first) as f64
    };

    let reach_start = spacing(0, cover - 1) * ext_len as f64;
    // leaving the start backwards
    let back = reg.bearing_forward(0, 1.0) + core::f64::consts::PI;
    let p0 = reg.xy(0);
    let mut start = Aabb::around(p0);
    start.include([p0[0] + reach_start * math::cos(back), p0[1] + reach_start * math::sin(back)]);

    let reach_end = spacing(n - cover, n - 1) * ext_len as f64;
    let ahead = reg.bearing_arriving(n - 1, 1.0);
    let pn = reg.xy(n - 1);
    let mut end = Aabb::around(pn);
    end.include([pn[0] + reach_end * math::cos(ahead), pn[1] + reach_end * math::sin(ahead)]);

    [(0, [0, 0], start), (1, [n - 1, n - 1], end)]
        .into_iter()
        .map(|(chunk_index, pose_range, b)| ChunkRect {
            video_id: reg.video_id.clone(),
            chunk_index,
            pose_range,
            bounds: b.inflate(pad_m),
            extended: true,
        })
        .collect()
}

/// All index pairs `(i, j)` with `rects_a[i]` and `rects_b[j]` overlapping,
/// sorted. Sweeps along x so only rectangles with overlapping x-extents are
/// compared.
pub fn find_overlapping_pairs(rects_a: &[ChunkRect], rects_b: &[ChunkRect]) -> Vec<(usize, usize)> {
    #[derive(Clone, Copy)]
    struct Item {
        side: u8,
        index: usize,
        min_x: f64,
    }
    let mut items: Vec<Item> = rects_a
        .iter()
        .enumerate()
        .map(|(index, r)| Item {
            side: 0,
            index,
            min_x: r.bounds.min_x,
        })
        .chain(rects_b.iter().enumerate().map(|(index, r)| Item {
            side: 1,
            index,
            min_x: r.bounds.min_x,
        }))
        .collect();
    items.sort_by(|p, q| p.min_x.total_cmp(&q.min_x).then(p.side.cmp(&q.side)).then(p.index.cmp(&q.index)));

    let mut active: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    let mut out = Vec::new();
    for it in items {
        let x = it.min_x;
        active[0].retain(|&i| rects_a[i].bounds.max_x >= x);
        active[1].retain(|&j| rects_b[j].bounds.max_x >= x);
        let other = 1 - it.side as usize;
        for &k in &active[other] {
            let (i, j) = if it.side == 0 { (it.index, k) } else { (k, it.index) };
            if rects_a[i].bounds.intersects(&rects_b[j].bounds) {
                out.push((i, j));
            }
        }
        active[it.side as usize].push(it.index);
    }
    out.sort_unstable();
    out
}
