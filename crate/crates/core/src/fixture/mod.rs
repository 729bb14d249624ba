//! Deterministic synthetic areas with known ground truth.
//!
//! Streets are straight polylines in map meters. Each is walked in both
//! directions; keyframes are sampled at a fixed spacing, jittered by bounded
//! uniform noise, and expressed in a random per-video local frame (rotation,
//! scale and offset) the way an upstream SLAM run would report them.

mod render;

pub use render::{CameraTrack, FixtureFrames, World, CAMERA_HEIGHT_M};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::billboard::Billboard;
use crate::math;
use crate::trajectory::{Direction, KeyframePose, MapPoint, VideoTrajectory};

pub const WALK_SPEED_MPS: f64 = 1.25;
pub const FRAME_RATE_HZ: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Straight,
    Cross,
    TJunction,
    Grid2x2,
    Parallel,
}

impl Layout {
    pub const ALL: [Layout; 5] = [
        Layout::Straight,
        Layout::Cross,
        Layout::TJunction,
        Layout::Grid2x2,
        Layout::Parallel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Layout::Straight => "straight",
            Layout::Cross => "cross",
            Layout::TJunction => "t_junction",
            Layout::Grid2x2 => "grid2x2",
            Layout::Parallel => "parallel",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub layout: Layout,
    pub keyframe_spacing_m: f64,
    pub noise_m: f64,
    pub seed: u64,
    /// Panorama width and height in pixels (2:1).
    pub frame_size: (u32, u32),
    /// Street length for the single-crossing layouts; the grid is fixed.
    pub street_length_m: f64,
}

impl FixtureSpec {
    pub fn new(layout: Layout, seed: u64) -> Self {
        Self {
            layout,
            keyframe_spacing_m: 0.5,
            noise_m: 0.0,
            seed,
            frame_size: (256, 128),
            street_length_m: 100.0,
        }
    }
}

/// A straight street, walked `forward` from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Street {
    pub street_id: String,
    pub from: MapPoint,
    pub to: MapPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruePair {
    pub video_a: String,
    pub video_b: String,
    pub pose_a: usize,
    pub pose_b: usize,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueCrossing {
    pub street_a: String,
    pub street_b: String,
    pub position: MapPoint,
    /// Closest true-position keyframe pair for every direction combination.
    pub pairs: Vec<TruePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub layout: Layout,
    pub trajectory_count: usize,
    pub node_count: usize,
    pub crossings: Vec<TrueCrossing>,
    pub section_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub name: String,
    pub map_point: MapPoint,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub spec: FixtureSpec,
    pub streets: Vec<Street>,
    /// As SLAM would report them: local frame, noisy.
    pub trajectories: Vec<VideoTrajectory>,
    pub frames: FixtureFrames,
    pub truth: GroundTruth,
    pub landmarks: Vec<Landmark>,
    pub billboards: Vec<Billboard>,
}

fn p(x: f64, y: f64) -> MapPoint {
    MapPoint::new(x, y)
}

fn street(id: &str, from: MapPoint, to: MapPoint) -> Street {
    Street {
        street_id: id.into(),
        from,
        to,
    }
}

/// Streets of a layout plus the designed crossing points between them.
pub fn layout_streets(layout: Layout, length_m: f64) -> (Vec<Street>, Vec<(usize, usize, MapPoint)>) {
    let h = length_m / 2.0;
    match layout {
        Layout::Straight => (vec![street("main", p(-h, 0.0), p(h, 0.0))], vec![]),
        Layout::Cross => (
            vec![street("ew", p(-h, 0.0), p(h, 0.0)), street("ns", p(0.0, -h), p(0.0, h))],
            vec![(0, 1, p(0.0, 0.0))],
        ),
        // the stem stops 2 m short of the through street
        Layout::TJunction => (
            vec![street("ew", p(-h, 0.0), p(h, 0.0)), street("stem", p(0.0, h), p(0.0, 2.0))],
            vec![(0, 1, p(0.0, 0.0))],
        ),
        Layout::Grid2x2 => (
            vec![
                street("h0", p(-20.0, 0.0), p(60.0, 0.0)),
                street("h1", p(-20.0, 40.0), p(60.0, 40.0)),
                street("v0", p(0.0, -20.0), p(0.0, 60.0)),
                street("v1", p(40.0, -20.0), p(40.0, 60.0)),
            ],
            vec![
                (0, 2, p(0.0, 0.0)),
                (0, 3, p(40.0, 0.0)),
                (1, 2, p(0.0, 40.0)),
                (1, 3, p(40.0, 40.0)),
            ],
        ),
        Layout::Parallel => (
            vec![street("p0", p(-h, 0.0), p(h, 0.0)), street("p1", p(-h, 20.0), p(h, 20.0))],
            vec![],
        ),
    }
}

/// Points every `spacing` metres along a straight segment, endpoint included.
pub fn sample_segment(from: MapPoint, to: MapPoint, spacing: f64) -> Vec<[f64; 2]> {
    let len = from.distance(&to);
    let n = math::floor(len / spacing + 1e-9) as usize;
    let (ux, uy) = ((to.x_m - from.x_m) / len, (to.y_m - from.y_m) / len);
    let mut pts: Vec<[f64; 2]> = (0..=n)
        .map(|k| {
            let s = k as f64 * spacing;
            [from.x_m + s * ux, from.y_m + s * uy]
        })
        .collect();
    let end = [to.x_m, to.y_m];
    let last = pts[pts.len() - 1];
    if math::hypot(last[0] - end[0], last[1] - end[1]) > 1e-9 {
        pts.push(end);
    } else {
        let k = pts.len() - 1;
        pts[k] = end;
    }
    pts
}

pub fn video_id(street_id: &str, dir: Direction) -> String {
    match dir {
        Direction::Forward => format!("{street_id}_f"),
        Direction::Backward => format!("{street_id}_b"),
    }
}

/// Expresses map-frame keyframes in a random local frame. Returns the local
/// poses for a true map track with the given headings.
fn to_local(rng: &mut ChaCha8Rng, pts: &[[f64; 2]], heading: f64, spacing: f64) -> Vec<KeyframePose> {
    let rot = rng.gen_range(-PI..PI);
    let scale = rng.gen_range(0.2..5.0);
    let t = [rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0)];
    let (s, c) = (math::sin(-rot), math::cos(-rot));
    pts.iter()
        .enumerate()
        .map(|(k, q)| {
            let (dx, dy) = (q[0] - t[0], q[1] - t[1]);
            let time = k as f64 * spacing / WALK_SPEED_MPS;
            KeyframePose {
                frame_index: math::round(time * FRAME_RATE_HZ) as u64,
                timestamp_s: time,
                position: [(c * dx - s * dy) / scale, (s * dx + c * dy) / scale, 0.0],
                yaw_rad: math::wrap_angle(heading - rot),
            }
        })
        .collect()
}

/// Builds the whole fixture. Same spec, same output.
pub fn generate(spec: &FixtureSpec) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (streets, crossings) = layout_streets(spec.layout, spec.street_length_m);

    let mut trajectories = Vec::new();
    let mut tracks = BTreeMap::new();
    for st in &streets {
        for dir in [Direction::Forward, Direction::Backward] {
            let (from, to) = match dir {
                Direction::Forward => (st.from, st.to),
                Direction::Backward => (st.to, st.from),
            };
            let truth = sample_segment(from, to, spec.keyframe_spacing_m);
            let heading = math::bearing(to.x_m - from.x_m, to.y_m - from.y_m);
            let noisy: Vec<[f64; 2]> = truth
                .iter()
                .map(|q| {
                    if spec.noise_m > 0.0 {
                        [
                            q[0] + rng.gen_range(-spec.noise_m..=spec.noise_m),
                            q[1] + rng.gen_range(-spec.noise_m..=spec.noise_m),
                        ]
                    } else {
                        *q
                    }
                })
                .collect();
            let poses = to_local(&mut rng, &noisy, heading, spec.keyframe_spacing_m);
            let id = video_id(&st.street_id, dir);
            let traj = VideoTrajectory::new(id.clone(), st.street_id.clone(), dir, poses, from, to, FRAME_RATE_HZ)
                .expect("fixture trajectories are valid");
            trajectories.push(traj);
            tracks.insert(
                id,
                CameraTrack {
                    headings: vec![heading; truth.len()],
                    positions: truth,
                },
            );
        }
    }

    let truth = ground_truth(spec.layout, &streets, &crossings, &tracks);
    let landmarks = streets
        .iter()
        .map(|s| Landmark {
            name: format!("{} start", s.street_id),
            map_point: s.from,
        })
        .collect();
    let first = &trajectories[0];
    let last_t = first.poses[first.len() - 1].timestamp_s;
    let billboards = vec![Billboard {
        billboard_id: "bb0".into(),
        video_id: first.video_id.clone(),
        anchor_timestamp_s: 10.0f64.min(last_t),
        yaw_rad: 0.5,
        pitch_rad: 0.1,
        title: "Corner cafe".into(),
        info: "Open 8:00-18:00".into(),
    }];
    Fixture {
        spec: spec.clone(),
        streets,
        trajectories,
        frames: FixtureFrames {
            world: World::new(spec.seed),
            width: spec.frame_size.0,
            tracks,
        },
        truth,
        landmarks,
        billboards,
    }
}

fn ground_truth(
    layout: Layout,
    streets: &[Street],
    crossings: &[(usize, usize, MapPoint)],
    tracks: &BTreeMap<String, CameraTrack>,
) -> GroundTruth {
    let dirs = [Direction::Forward, Direction::Backward];
    let mut out = Vec::new();
    let mut cuts: BTreeMap<String, Vec<usize>> = tracks.keys().map(|k| (k.clone(), Vec::new())).collect();
    for &(a, b, position) in crossings {
        let mut pairs = Vec::new();
        for da in dirs {
            for db in dirs {
                let (va, vb) = (video_id(&streets[a].street_id, da), video_id(&streets[b].street_id, db));
                let (va, vb) = if va <= vb { (va, vb) } else { (vb, va) };
                let (ta, tb) = (&tracks[&va], &tracks[&vb]);
                let mut best = (f64::INFINITY, 0, 0);
                for (i, pa) in ta.positions.iter().enumerate() {
                    for (j, pb) in tb.positions.iter().enumerate() {
                        let d = math::hypot(pa[0] - pb[0], pa[1] - pb[1]);
                        if d < best.0 {
                            best = (d, i, j);
                        }
                    }
                }
                cuts.get_mut(&va).expect("known").push(best.1);
                cuts.get_mut(&vb).expect("known").push(best.2);
                pairs.push(TruePair {
                    video_a: va,
                    video_b: vb,
                    pose_a: best.1,
                    pose_b: best.2,
                    distance_m: best.0,
                });
            }
        }
        out.push(TrueCrossing {
            street_a: streets[a].street_id.clone(),
            street_b: streets[b].street_id.clone(),
            position,
            pairs,
        });
    }
    let section_counts = cuts
        .into_iter()
        .map(|(v, mut c)| {
            let last = tracks[&v].positions.len() - 1;
            c.push(0);
            c.push(last);
            c.sort_unstable();
            c.dedup();
            (v, c.len() - 1)
        })
        .collect();
    GroundTruth {
        layout,
        trajectory_count: tracks.len(),
        node_count: crossings.len(),
        crossings: out,
        section_counts,
    }
}
