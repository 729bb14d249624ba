#![allow(dead_code)]

use moviemap_core::fixture::{generate, Fixture, FixtureSpec, Layout};
use moviemap_core::registration::{register_area, RegisteredTrajectory};

pub fn fixture(layout: Layout, seed: u64, noise_m: f64) -> (Fixture, Vec<RegisteredTrajectory>) {
    let spec = FixtureSpec {
        noise_m,
        ..FixtureSpec::new(layout, seed)
    };
    let f = generate(&spec);
    let regs = register_area(&f.trajectories).expect("fixture registers");
    (f, regs)
}

pub fn by_id<'a>(regs: &'a [RegisteredTrajectory], id: &str) -> &'a RegisteredTrajectory {
    regs.iter().find(|r| r.video_id == id).expect("video present")
}

/// Exhaustive all-pairs nearest keyframe pair; ties go to the smallest
/// `(pose_a, pose_b)`. Returns squared distance.
pub fn brute_nearest(a: &RegisteredTrajectory, b: &RegisteredTrajectory) -> (usize, usize, f64) {
    let mut all: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            let (p, q) = (a.map_positions[i], b.map_positions[j]);
            let d2 = (p.x_m - q.x_m).powi(2) + (p.y_m - q.y_m).powi(2);
            all.push((d2, i, j));
        }
    }
    let m = all
        .into_iter()
        .min_by(|x, y| x.partial_cmp(y).unwrap())
        .unwrap();
    (m.1, m.2, m.0)
}

pub struct Assembled {
    pub fixture: Fixture,
    pub regs: Vec<RegisteredTrajectory>,
    pub report: moviemap_core::DetectionReport,
    pub graph: moviemap_core::NavGraph,
}

/// Geometry-only pipeline up to the navigation graph.
pub fn assemble(layout: Layout, seed: u64, noise_m: f64) -> Assembled {
    use moviemap_core::assembly::{build_graph, cluster_intersections, split_sections, DEFAULT_CLUSTER_RADIUS_M};
    use moviemap_core::detection::{detect_geometric, DetectionParams};
    let (fixture, regs) = self::fixture(layout, seed, noise_m);
    let report = detect_geometric(&regs, &DetectionParams::default());
    let streets = regs.iter().map(|r| (r.video_id.clone(), r.street_id().to_string())).collect();
    let nodes = cluster_intersections(&report.records, DEFAULT_CLUSTER_RADIUS_M, &streets);
    let mut sections = Vec::new();
    for r in &regs {
        sections.extend(split_sections(r, &nodes).expect("cuts in range"));
    }
    let graph = build_graph(&sections, &nodes, &regs).expect("graph links");
    Assembled {
        fixture,
        regs,
        report,
        graph,
    }
}
