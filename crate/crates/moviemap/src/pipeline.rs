//! The build stages, each reading and writing the on-disk formats.

use std::fs;
use std::path::{Path, PathBuf};

use moviemap_core::assembly::{build_graph, cluster_intersections, split_sections, AssemblyError, ExitPolicy};
use moviemap_core::detection::{collect_report, detect_pair, pair_eligible, DetectionParams, ParamError, Visual};
use moviemap_core::fixture::Fixture;
use moviemap_core::registration::{register_area, AreaRegistrationError};
use moviemap_core::scorer::AnyScorer;
use moviemap_core::trajectory::validate_area;
use moviemap_core::turning::{plan_turns, render_turn, TurnAssetError, TurnMethod, TurnPlan};
use moviemap_core::{DetectionReport, FrameSource};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formats::{
    io_err, load_area, write_json, write_registered, write_trajectory, AreaConfig, FormatError,
    MapFile, RegisteredArea, RegisteredIndex, VideoEntry,
};
use crate::frames::{frame_file, write_png, PngFrames};

pub const TURN_INDEX: &str = "index.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Registration(#[from] AreaRegistrationError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("{} turn(s) failed; first: {}", .0.len(), .0[0])]
    Turns(Vec<TurnAssetError>),
}

/// Writes a generated fixture in the external formats: `area.json`,
/// `trajectories/`, `frames/` and `ground_truth.json`.
pub fn write_fixture(fixture: &Fixture, out: &Path) -> Result<(), FormatError> {
    let traj_dir = out.join("trajectories");
    fs::create_dir_all(&traj_dir).map_err(io_err(&traj_dir))?;
    let mut videos = Vec::new();
    for t in &fixture.trajectories {
        let rel = PathBuf::from("trajectories").join(format!("{}.jsonl", t.video_id));
        let path = out.join(&rel);
        let f = fs::File::create(&path).map_err(io_err(&path))?;
        write_trajectory(f, &t.poses).map_err(io_err(&path))?;
        videos.push(VideoEntry {
            video_id: t.video_id.clone(),
            street_id: t.street_id.clone(),
            direction: t.direction,
            trajectory_path: rel,
            frames_dir: PathBuf::from("frames").join(&t.video_id),
            ref_start: t.ref_start.into(),
            ref_end: t.ref_end.into(),
            frame_rate_hz: t.frame_rate_hz,
        });
    }
    let config = AreaConfig {
        area_name: format!("{}-{}", fixture.spec.layout.name(), fixture.spec.seed),
        geo_ref: moviemap_core::GeoRef::LocalXy,
        videos,
        landmarks: fixture.landmarks.clone(),
        billboards: fixture.billboards.clone(),
    };
    write_json(&out.join("area.json"), &config)?;
    write_json(&out.join("ground_truth.json"), &fixture.truth)?;

    let jobs: Vec<(&str, usize)> = fixture
        .trajectories
        .iter()
        .flat_map(|t| (0..t.len()).map(move |k| (t.video_id.as_str(), k)))
        .collect();
    jobs.par_iter().try_for_each(|&(v, k)| {
        let frame = fixture.frames.frame(v, k).expect("fixture renders every keyframe");
        write_png(&out.join("frames").join(v).join(frame_file(k)), &frame)
    })
}

/// Registers every video of an area config and writes `registered/`.
pub fn register(config: &Path, out: &Path) -> Result<RegisteredIndex, PipelineError> {
    let area = load_area(config)?;
    let warnings = validate_area(&area.trajectories);
    for w in &warnings {
        tracing::warn!(?w, "area check");
    }
    let regs = register_area(&area.trajectories)?;
    Ok(write_registered(out, &area, &regs, warnings)?)
}

/// Frame source for a registered area: `{root}/{video_id}/` when a root is
/// given, otherwise each video's configured frames directory.
pub fn frame_source(area: &RegisteredArea, root: Option<&Path>) -> PngFrames {
    match root {
        Some(r) => PngFrames::under_root(r, area.index.videos.iter().map(|v| v.video_id.as_str())),
        None => PngFrames::new(area.index.videos.iter().map(|v| (v.video_id.clone(), v.frames_dir.clone()))),
    }
}

/// Detection over all eligible pairs in parallel. `scorer = None` skips
/// visual refinement.
pub fn detect(
    area: &RegisteredArea,
    frames: &(dyn FrameSource + Sync),
    scorer: Option<&AnyScorer>,
    params: &DetectionParams,
) -> Result<DetectionReport, PipelineError> {
    params.validate()?;
    let regs = &area.trajectories;
    let mut pairs = Vec::new();
    for i in 0..regs.len() {
        for j in i + 1..regs.len() {
            if pair_eligible(&regs[i], &regs[j], params) {
                pairs.push((i, j));
            }
        }
    }
    let outcomes: Vec<_> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let visual = scorer.map(|s| Visual { frames, scorer: s });
            detect_pair(&regs[i], &regs[j], visual, params)
        })
        .collect();
    let report = collect_report(outcomes);
    for w in &report.warnings {
        tracing::warn!(?w, "detection");
    }
    for f in &report.failures {
        tracing::warn!(video_a = %f.video_a, video_b = %f.video_b, reason = %f.reason, "refinement failed, kept geometric pair");
    }
    Ok(report)
}

/// Clusters records into nodes, cuts sections, links the graph and plans
/// every turn.
pub fn assemble(
    area: &RegisteredArea,
    records: &[moviemap_core::IntersectionRecord],
    cluster_radius_m: f64,
    policy: &ExitPolicy,
) -> Result<MapFile, PipelineError> {
    let regs = &area.trajectories;
    let streets = regs.iter().map(|r| (r.video_id.clone(), r.street_id().to_string())).collect();
    let nodes = cluster_intersections(records, cluster_radius_m, &streets);
    let mut sections = Vec::new();
    for r in regs {
        sections.extend(split_sections(r, &nodes)?);
    }
    let graph = build_graph(&sections, &nodes, regs)?;
    let turns = plan_turns(&graph, regs, policy);
    Ok(MapFile::new(&graph, turns, *policy))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnEntry {
    pub node_id: String,
    pub from_section: String,
    pub to_section: String,
    pub frame_count: usize,
}

/// `turns/index.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnIndex {
    pub method: TurnMethod,
    pub frames_per_turn: usize,
    pub turns: Vec<TurnEntry>,
}

pub fn turn_dir(root: &Path, node: &str, from: &str, to: &str) -> PathBuf {
    root.join(node).join(format!("{from}__{to}"))
}

pub fn turn_frame_file(k: usize) -> String {
    format!("{k:04}.png")
}

/// Renders every planned turn to PNG sequences under `out`.
pub fn render_turns(
    plans: &[TurnPlan],
    frames: &(dyn FrameSource + Sync),
    out: &Path,
    frames_per_turn: usize,
    method: TurnMethod,
) -> Result<TurnIndex, PipelineError> {
    let results: Vec<Result<TurnEntry, PipelineError>> = plans
        .par_iter()
        .map(|p| {
            let seq = render_turn(p, frames, frames_per_turn, method).map_err(|e| PipelineError::Turns(vec![e]))?;
            let dir = turn_dir(out, &p.node_id, &p.from_section, &p.to_section);
            fs::create_dir_all(&dir).map_err(|e| FormatError::Io {
                path: dir.clone(),
                source: e,
            })?;
            for (k, f) in seq.iter().enumerate() {
                write_png(&dir.join(turn_frame_file(k)), f)?;
            }
            Ok(TurnEntry {
                node_id: p.node_id.clone(),
                from_section: p.from_section.clone(),
                to_section: p.to_section.clone(),
                frame_count: seq.len(),
            })
        })
        .collect();
    let mut turns = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(t) => turns.push(t),
            Err(PipelineError::Turns(mut e)) => failures.append(&mut e),
            Err(e) => return Err(e),
        }
    }
    if !failures.is_empty() {
        return Err(PipelineError::Turns(failures));
    }
    let index = TurnIndex {
        method,
        frames_per_turn,
        turns,
    };
    write_json(&out.join(TURN_INDEX), &index)?;
    Ok(index)
}
