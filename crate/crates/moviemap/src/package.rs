//! The exported Movie Map package: `manifest.json` plus frame and turn
//! assets, self-contained and immutable once written.
//!
//! ```text
//! manifest.json
//! frames/{video_id}/{pose:06}.png
//! turns/{node}/{from}__{to}/{k:04}.png
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use moviemap_core::assembly::{exits_toward, AssemblyError, DirectedExit, ExitPolicy, NavGraph, NodeRef, PhysicalIntersection, Section};
use moviemap_core::billboard::billboards_near;
use moviemap_core::fixture::Landmark;
use moviemap_core::playback::{position_at, PlaybackError};
use moviemap_core::registration::{RegisteredTrajectory, SimilarityTransform2D};
use moviemap_core::trajectory::{Direction, GeoRef, KeyframePose, MapPoint, VideoTrajectory};
use moviemap_core::turning::TurnMethod;
use moviemap_core::Billboard;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::formats::{json_pointer, write_json, FormatError, MapFile, RegisteredArea};
use crate::frames::{frame_file, PngFrames};
use crate::pipeline::{turn_dir, turn_frame_file, TurnIndex};

pub const MANIFEST: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// How section and turn frames are stored. Only PNG sequences exist today;
/// the field lets encoded video be added later without a schema break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    PngSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackagePose {
    pub frame: u64,
    pub t: f64,
    pub map_x: f64,
    pub map_y: f64,
    pub map_yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageVideo {
    pub video_id: String,
    pub street_id: String,
    pub direction: Direction,
    pub frame_rate_hz: f64,
    pub poses: Vec<PackagePose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageSection {
    pub section_id: String,
    pub video_id: String,
    pub start_pose: usize,
    pub end_pose: usize,
    pub start_node: NodeRef,
    pub end_node: NodeRef,
    pub start_timestamp_s: f64,
    pub end_timestamp_s: f64,
    /// One path per pose, `start_pose..=end_pose`, relative to the package.
    pub frames: Vec<String>,
}

impl PackageSection {
    pub fn section(&self) -> Section {
        Section {
            section_id: self.section_id.clone(),
            video_id: self.video_id.clone(),
            start_pose: self.start_pose,
            end_pose: self.end_pose,
            start_node: self.start_node.clone(),
            end_node: self.end_node.clone(),
            start_timestamp_s: self.start_timestamp_s,
            end_timestamp_s: self.end_timestamp_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageTurn {
    pub node_id: String,
    pub from_section: String,
    pub to_section: String,
    pub delta_yaw_rad: f64,
    pub frames: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub area_name: String,
    pub geo_ref: GeoRef,
    pub asset_kind: AssetKind,
    pub turn_method: TurnMethod,
    pub frames_per_turn: usize,
    pub exit_policy: ExitPolicy,
    pub landmarks: Vec<Landmark>,
    pub videos: Vec<PackageVideo>,
    pub nodes: Vec<PhysicalIntersection>,
    pub sections: Vec<PackageSection>,
    pub exits: Vec<DirectedExit>,
    pub arrivals: BTreeMap<String, f64>,
    pub turns: Vec<PackageTurn>,
    pub billboards: Vec<Billboard>,
}

#[derive(Debug, thiserror::Error)]
pub enum PackageError {
    #[error("no {MANIFEST} in {0}")]
    MissingManifest(PathBuf),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{pointer}: {message}")]
    Integrity { pointer: String, message: String },
    #[error("{pointer}: asset {path} does not exist")]
    DanglingAsset { pointer: String, path: String },
    #[error("frame {pose} of {video_id} not found at {path}")]
    MissingFrame { video_id: String, pose: usize, path: PathBuf },
    #[error("turn asset missing for node {node_id}: {from_section} -> {to_section}")]
    MissingTurn {
        node_id: String,
        from_section: String,
        to_section: String,
    },
    #[error("unknown video {0}")]
    UnknownVideo(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Playback(#[from] PlaybackError),
}

fn integrity(pointer: impl Into<String>, message: impl Into<String>) -> PackageError {
    PackageError::Integrity {
        pointer: pointer.into(),
        message: message.into(),
    }
}

/// Everything export needs, already built by the earlier stages.
pub struct ExportInput<'a> {
    pub registered: &'a RegisteredArea,
    pub map: &'a MapFile,
    pub frames: &'a PngFrames,
    pub turns_dir: &'a Path,
    pub turn_index: &'a TurnIndex,
}

fn copy_asset(from: &Path, root: &Path, rel: &str) -> std::io::Result<()> {
    let to = root.join(rel);
    if let Some(dir) = to.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::copy(from, to).map(|_| ())
}

/// Writes a package into `out`. Identical inputs give byte-identical output.
pub fn export_package(input: &ExportInput<'_>, out: &Path) -> Result<Manifest, PackageError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| PackageError::Format(FormatError::Io { path, source })
    };
    let map = input.map;
    let regs: BTreeMap<&str, &RegisteredTrajectory> =
        input.registered.trajectories.iter().map(|r| (r.video_id.as_str(), r)).collect();

    let mut sections = Vec::new();
    let mut copied = BTreeSet::new();
    for s in &map.sections {
        let mut frames = Vec::new();
        for pose in s.start_pose..=s.end_pose {
            let rel = format!("frames/{}/{}", s.video_id, frame_file(pose));
            if copied.insert(rel.clone()) {
                let src = input.frames.path(&s.video_id, pose).filter(|p| p.is_file()).ok_or_else(|| {
                    PackageError::MissingFrame {
                        video_id: s.video_id.clone(),
                        pose,
                        path: input.frames.path(&s.video_id, pose).unwrap_or_default(),
                    }
                })?;
                copy_asset(&src, out, &rel).map_err(io(&src))?;
            }
            frames.push(rel);
        }
        sections.push(PackageSection {
            section_id: s.section_id.clone(),
            video_id: s.video_id.clone(),
            start_pose: s.start_pose,
            end_pose: s.end_pose,
            start_node: s.start_node.clone(),
            end_node: s.end_node.clone(),
            start_timestamp_s: s.start_timestamp_s,
            end_timestamp_s: s.end_timestamp_s,
            frames,
        });
    }

    let ti = input.turn_index;
    let rendered: BTreeMap<(&str, &str, &str), usize> = ti
        .turns
        .iter()
        .map(|t| ((t.node_id.as_str(), t.from_section.as_str(), t.to_section.as_str()), t.frame_count))
        .collect();
    let expected = if ti.method == TurnMethod::ACut { 0 } else { ti.frames_per_turn };
    let mut turns = Vec::new();
    for p in &map.turns {
        let missing = || PackageError::MissingTurn {
            node_id: p.node_id.clone(),
            from_section: p.from_section.clone(),
            to_section: p.to_section.clone(),
        };
        let key = (p.node_id.as_str(), p.from_section.as_str(), p.to_section.as_str());
        if rendered.get(&key) != Some(&expected) {
            return Err(missing());
        }
        let src_dir = turn_dir(input.turns_dir, &p.node_id, &p.from_section, &p.to_section);
        let mut frames = Vec::new();
        for k in 0..expected {
            let src = src_dir.join(turn_frame_file(k));
            if !src.is_file() {
                return Err(missing());
            }
            let rel = format!("turns/{}/{}__{}/{}", p.node_id, p.from_section, p.to_section, turn_frame_file(k));
            copy_asset(&src, out, &rel).map_err(io(&src))?;
            frames.push(rel);
        }
        turns.push(PackageTurn {
            node_id: p.node_id.clone(),
            from_section: p.from_section.clone(),
            to_section: p.to_section.clone(),
            delta_yaw_rad: p.delta_yaw_rad,
            frames,
        });
    }

    let index = &input.registered.index;
    let mut videos = Vec::new();
    for v in &index.videos {
        let reg = regs.get(v.video_id.as_str()).ok_or_else(|| PackageError::UnknownVideo(v.video_id.clone()))?;
        videos.push(PackageVideo {
            video_id: v.video_id.clone(),
            street_id: v.street_id.clone(),
            direction: v.direction,
            frame_rate_hz: v.frame_rate_hz,
            poses: (0..reg.len())
                .map(|k| PackagePose {
                    frame: reg.source.poses[k].frame_index,
                    t: reg.timestamp(k),
                    map_x: reg.map_positions[k].x_m,
                    map_y: reg.map_positions[k].y_m,
                    map_yaw: reg.map_yaws[k],
                })
                .collect(),
        });
    }

    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        area_name: index.area_name.clone(),
        geo_ref: index.geo_ref,
        asset_kind: AssetKind::PngSequence,
        turn_method: ti.method,
        frames_per_turn: ti.frames_per_turn,
        exit_policy: map.exit_policy,
        landmarks: index.landmarks.clone(),
        videos,
        nodes: map.nodes.clone(),
        sections,
        exits: map.exits.clone(),
        arrivals: map.arrivals.clone(),
        turns,
        billboards: index.billboards.clone(),
    };
    validate_manifest(&manifest, Some(out))?;
    write_json(&out.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// A loaded, validated package with lookup tables for serving.
#[derive(Debug, Clone)]
pub struct Package {
    pub root: PathBuf,
    pub manifest: Manifest,
    pub manifest_bytes: Vec<u8>,
    /// Hex SHA-256 over the manifest and every asset it references.
    pub hash: String,
    pub graph: NavGraph,
    pub trajectories: BTreeMap<String, RegisteredTrajectory>,
    sections: BTreeMap<String, usize>,
    turns: BTreeMap<(String, String, String), usize>,
}

pub fn load_package(dir: &Path) -> Result<Package, PackageError> {
    let path = dir.join(MANIFEST);
    if !path.is_file() {
        return Err(PackageError::MissingManifest(dir.to_path_buf()));
    }
    let bytes = fs::read(&path).map_err(|source| FormatError::Io {
        path: path.clone(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    let manifest: Manifest = serde_path_to_error::deserialize(de).map_err(|e| FormatError::Json {
        path: path.clone(),
        pointer: json_pointer(e.path()),
        message: e.into_inner().to_string(),
    })?;
    validate_manifest(&manifest, Some(dir))?;

    let mut h = Sha256::new();
    h.update(&bytes);
    let assets = manifest
        .sections
        .iter()
        .flat_map(|s| &s.frames)
        .chain(manifest.turns.iter().flat_map(|t| &t.frames));
    let mut seen = BTreeSet::new();
    for rel in assets {
        if seen.insert(rel) {
            let p = dir.join(rel);
            let data = fs::read(&p).map_err(|source| FormatError::Io { path: p, source })?;
            h.update(rel.as_bytes());
            h.update(&data);
        }
    }
    let hash = hex::encode(h.finalize());

    let graph = MapFile {
        nodes: manifest.nodes.clone(),
        sections: manifest.sections.iter().map(PackageSection::section).collect(),
        exits: manifest.exits.clone(),
        arrivals: manifest.arrivals.clone(),
        turns: Vec::new(),
        exit_policy: manifest.exit_policy,
    }
    .graph();
    let trajectories = manifest.videos.iter().map(|v| (v.video_id.clone(), trajectory_of(v))).collect();
    let sections = manifest.sections.iter().enumerate().map(|(k, s)| (s.section_id.clone(), k)).collect();
    let turns = manifest
        .turns
        .iter()
        .enumerate()
        .map(|(k, t)| ((t.node_id.clone(), t.from_section.clone(), t.to_section.clone()), k))
        .collect();
    Ok(Package {
        root: dir.to_path_buf(),
        manifest,
        manifest_bytes: bytes,
        hash,
        graph,
        trajectories,
        sections,
        turns,
    })
}

/// Rebuilds a map-frame trajectory from the manifest's poses.
fn trajectory_of(v: &PackageVideo) -> RegisteredTrajectory {
    let pts: Vec<MapPoint> = v.poses.iter().map(|p| MapPoint::new(p.map_x, p.map_y)).collect();
    let source = VideoTrajectory {
        video_id: v.video_id.clone(),
        street_id: v.street_id.clone(),
        direction: v.direction,
        poses: v
            .poses
            .iter()
            .map(|p| KeyframePose {
                frame_index: p.frame,
                timestamp_s: p.t,
                position: [p.map_x, p.map_y, 0.0],
                yaw_rad: p.map_yaw,
            })
            .collect(),
        ref_start: pts.first().copied().unwrap_or_default(),
        ref_end: pts.last().copied().unwrap_or_default(),
        frame_rate_hz: v.frame_rate_hz,
    };
    RegisteredTrajectory {
        video_id: v.video_id.clone(),
        map_yaws: v.poses.iter().map(|p| p.map_yaw).collect(),
        map_positions: pts,
        transform: SimilarityTransform2D::IDENTITY,
        source,
    }
}

impl Package {
    pub fn section(&self, id: &str) -> Option<&PackageSection> {
        self.sections.get(id).map(|&k| &self.manifest.sections[k])
    }

    pub fn turn(&self, node: &str, from: &str, to: &str) -> Option<&PackageTurn> {
        self.turns
            .get(&(node.to_string(), from.to_string(), to.to_string()))
            .map(|&k| &self.manifest.turns[k])
    }

    pub fn asset_path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Exits of a node; with an arriving section, the ones a viewer coming
    /// from it is offered, ordered right to left.
    pub fn exits(&self, node: &str, arriving: Option<&str>) -> Result<Vec<DirectedExit>, PackageError> {
        match arriving {
            Some(s) => Ok(exits_toward(&self.graph, node, s, &self.manifest.exit_policy)?),
            None => Ok(self
                .graph
                .outgoing
                .get(node)
                .cloned()
                .ok_or_else(|| AssemblyError::UnknownNode(node.into()))?),
        }
    }

    /// Billboards of a video anchored within `window_s` of `t_s`, nearest
    /// first.
    pub fn billboards_near(&self, video_id: &str, t_s: f64, window_s: f64) -> Result<Vec<&Billboard>, PackageError> {
        if !self.trajectories.contains_key(video_id) {
            return Err(PackageError::UnknownVideo(video_id.into()));
        }
        Ok(billboards_near(&self.manifest.billboards, video_id, t_s, window_s))
    }

    /// Map position and heading `t_s` seconds into a section.
    pub fn position(&self, section_id: &str, t_s: f64) -> Result<(MapPoint, f64), PackageError> {
        let s = self
            .section(section_id)
            .ok_or_else(|| AssemblyError::UnknownSection(section_id.into()))?;
        let reg = &self.trajectories[&s.video_id];
        Ok(position_at(reg, &s.section(), t_s)?)
    }
}

/// Checks every reference in a manifest. With `root`, asset files must
/// exist too. Errors carry the JSON pointer of the offending value.
pub fn validate_manifest(m: &Manifest, root: Option<&Path>) -> Result<(), PackageError> {
    if m.manifest_version != MANIFEST_VERSION {
        return Err(integrity("/manifest_version", format!("unsupported version {}", m.manifest_version)));
    }
    let asset = |pointer: String, rel: &str| -> Result<(), PackageError> {
        let bad = rel.starts_with('/') || rel.split('/').any(|c| c == ".." || c.is_empty());
        if bad {
            return Err(integrity(pointer, format!("asset path {rel} must be relative and normalized")));
        }
        if let Some(r) = root {
            if !r.join(rel).is_file() {
                return Err(PackageError::DanglingAsset {
                    pointer,
                    path: rel.into(),
                });
            }
        }
        Ok(())
    };

    let mut videos = BTreeMap::new();
    for (k, v) in m.videos.iter().enumerate() {
        if videos.insert(v.video_id.as_str(), v).is_some() {
            return Err(integrity(format!("/videos/{k}/video_id"), format!("duplicate video {}", v.video_id)));
        }
        if v.poses.len() < 2 {
            return Err(integrity(format!("/videos/{k}/poses"), "need at least 2 poses"));
        }
    }
    let mut nodes = BTreeSet::new();
    for (k, n) in m.nodes.iter().enumerate() {
        if !nodes.insert(n.node_id.as_str()) {
            return Err(integrity(format!("/nodes/{k}/node_id"), format!("duplicate node {}", n.node_id)));
        }
    }
    let node_ok = |r: &NodeRef| r.node().is_none_or(|id| nodes.contains(id));

    let mut sections = BTreeMap::new();
    for (k, s) in m.sections.iter().enumerate() {
        let at = |f: &str| format!("/sections/{k}/{f}");
        if sections.insert(s.section_id.as_str(), s).is_some() {
            return Err(integrity(at("section_id"), format!("duplicate section {}", s.section_id)));
        }
        let Some(v) = videos.get(s.video_id.as_str()) else {
            return Err(integrity(at("video_id"), format!("unknown video {}", s.video_id)));
        };
        if !(s.start_pose < s.end_pose && s.end_pose < v.poses.len()) {
            return Err(integrity(at("end_pose"), "pose range outside the video"));
        }
        if !node_ok(&s.start_node) {
            return Err(integrity(at("start_node"), format!("unknown node {}", s.start_node)));
        }
        if !node_ok(&s.end_node) {
            return Err(integrity(at("end_node"), format!("unknown node {}", s.end_node)));
        }
        if s.frames.len() != s.end_pose - s.start_pose + 1 {
            return Err(integrity(at("frames"), "one frame per pose required"));
        }
        for (i, f) in s.frames.iter().enumerate() {
            asset(format!("/sections/{k}/frames/{i}"), f)?;
        }
    }

    for (k, e) in m.exits.iter().enumerate() {
        if !nodes.contains(e.node_id.as_str()) {
            return Err(integrity(format!("/exits/{k}/node_id"), format!("unknown node {}", e.node_id)));
        }
        match sections.get(e.section_id.as_str()) {
            None => {
                return Err(integrity(format!("/exits/{k}/section_id"), format!("unknown section {}", e.section_id)))
            }
            Some(s) if s.start_node.node() != Some(e.node_id.as_str()) => {
                return Err(integrity(
                    format!("/exits/{k}/section_id"),
                    format!("section {} does not start at {}", e.section_id, e.node_id),
                ))
            }
            Some(_) => {}
        }
    }
    for s in m.arrivals.keys() {
        let ok = sections.get(s.as_str()).is_some_and(|x| x.end_node.node().is_some());
        if !ok {
            return Err(integrity(format!("/arrivals/{s}"), "not a section ending at a node"));
        }
    }
    for (k, s) in m.sections.iter().enumerate() {
        if s.end_node.node().is_some() && !m.arrivals.contains_key(&s.section_id) {
            return Err(integrity(format!("/sections/{k}/end_node"), "arrival bearing missing"));
        }
    }

    let expected = if m.turn_method == TurnMethod::ACut { 0 } else { m.frames_per_turn };
    let mut turns = BTreeSet::new();
    for (k, t) in m.turns.iter().enumerate() {
        let at = |f: &str| format!("/turns/{k}/{f}");
        if !nodes.contains(t.node_id.as_str()) {
            return Err(integrity(at("node_id"), format!("unknown node {}", t.node_id)));
        }
        let arrives = sections
            .get(t.from_section.as_str())
            .is_some_and(|s| s.end_node.node() == Some(t.node_id.as_str()));
        if !arrives {
            return Err(integrity(at("from_section"), format!("{} does not end at {}", t.from_section, t.node_id)));
        }
        let leaves = sections
            .get(t.to_section.as_str())
            .is_some_and(|s| s.start_node.node() == Some(t.node_id.as_str()));
        if !leaves {
            return Err(integrity(at("to_section"), format!("{} does not start at {}", t.to_section, t.node_id)));
        }
        if t.frames.len() != expected {
            return Err(integrity(at("frames"), format!("expected {expected} frames")));
        }
        for (i, f) in t.frames.iter().enumerate() {
            asset(format!("/turns/{k}/frames/{i}"), f)?;
        }
        turns.insert((t.node_id.as_str(), t.from_section.as_str(), t.to_section.as_str()));
    }

    // every turn a viewer can take has an asset
    let graph = MapFile {
        nodes: m.nodes.clone(),
        sections: m.sections.iter().map(PackageSection::section).collect(),
        exits: m.exits.clone(),
        arrivals: m.arrivals.clone(),
        turns: Vec::new(),
        exit_policy: m.exit_policy,
    }
    .graph();
    for s in m.sections.iter().filter(|s| s.end_node.node().is_some()) {
        let node = s.end_node.node().expect("filtered");
        for e in exits_toward(&graph, node, &s.section_id, &m.exit_policy)? {
            let to = &sections[e.section_id.as_str()];
            if to.video_id != s.video_id && !turns.contains(&(node, s.section_id.as_str(), e.section_id.as_str())) {
                return Err(PackageError::MissingTurn {
                    node_id: node.into(),
                    from_section: s.section_id.clone(),
                    to_section: e.section_id.clone(),
                });
            }
        }
    }

    for (k, b) in m.billboards.iter().enumerate() {
        let Some(v) = videos.get(b.video_id.as_str()) else {
            return Err(integrity(format!("/billboards/{k}/video_id"), format!("unknown video {}", b.video_id)));
        };
        let (first, last) = (v.poses[0].t, v.poses[v.poses.len() - 1].t);
        b.check(first, last)
            .map_err(|e| integrity(format!("/billboards/{k}"), e.to_string()))?;
    }
    Ok(())
}
