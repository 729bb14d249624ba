#![allow(dead_code)]

use std::path::{Path, PathBuf};

use moviemap::formats::{read_registered, MapFile};
use moviemap::package::{export_package, ExportInput, Manifest};
use moviemap::pipeline::{self, TurnIndex};
use moviemap_core::assembly::{ExitPolicy, DEFAULT_CLUSTER_RADIUS_M};
use moviemap_core::detection::DetectionParams;
use moviemap_core::fixture::{generate, Fixture, FixtureSpec, Layout};
use moviemap_core::turning::TurnMethod;

pub fn small_fixture(layout: Layout, seed: u64) -> Fixture {
    generate(&FixtureSpec {
        frame_size: (64, 32),
        ..FixtureSpec::new(layout, seed)
    })
}

pub struct Built {
    pub root: PathBuf,
    pub map: MapFile,
    pub turn_index: TurnIndex,
    pub manifest: Manifest,
}

impl Built {
    pub fn pkg(&self) -> PathBuf {
        self.root.join("pkg")
    }
}

/// Whole pipeline in process, geometry-only detection. Writes `fx/`,
/// `reg/`, `turns/` and `pkg/` under `root`.
pub fn build(fixture: &Fixture, root: &Path, method: TurnMethod, frames_per_turn: usize) -> Built {
    pipeline::write_fixture(fixture, &root.join("fx")).unwrap();
    pipeline::register(&root.join("fx/area.json"), &root.join("reg")).unwrap();
    let area = read_registered(&root.join("reg")).unwrap();
    let frames = pipeline::frame_source(&area, None);
    let report = pipeline::detect(&area, &frames, None, &DetectionParams::default()).unwrap();
    let map = pipeline::assemble(&area, &report.records, DEFAULT_CLUSTER_RADIUS_M, &ExitPolicy::default()).unwrap();
    let turn_index = pipeline::render_turns(&map.turns, &frames, &root.join("turns"), frames_per_turn, method).unwrap();
    let manifest = export_package(
        &ExportInput {
            registered: &area,
            map: &map,
            frames: &frames,
            turns_dir: &root.join("turns"),
            turn_index: &turn_index,
        },
        &root.join("pkg"),
    )
    .unwrap();
    Built {
        root: root.to_path_buf(),
        map,
        turn_index,
        manifest,
    }
}

/// Two one-way videos on different streets that both stop at the centre of
/// the cross, so the single node has arrivals but no exits.
pub fn dead_end_fixture() -> Fixture {
    let mut f = small_fixture(Layout::Cross, 5);
    let first = f.trajectories[0].clone();
    let other = f
        .trajectories
        .iter()
        .find(|t| t.street_id != first.street_id)
        .cloned()
        .unwrap();
    f.trajectories = [first, other]
        .into_iter()
        .map(|mut t| {
            let mid = t.len() / 2;
            t.poses.truncate(mid + 1);
            t.ref_end = moviemap_core::MapPoint::new(
                (t.ref_start.x_m + t.ref_end.x_m) / 2.0,
                (t.ref_start.y_m + t.ref_end.y_m) / 2.0,
            );
            t
        })
        .collect();
    let keep: Vec<String> = f.trajectories.iter().map(|t| t.video_id.clone()).collect();
    f.billboards.retain(|b| keep.contains(&b.video_id));
    f
}
