//! On-disk formats: trajectory JSON-Lines, the area config, registered
//! trajectories, intersection records and the assembled map.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use moviemap_core::assembly::{DirectedExit, ExitPolicy, NavGraph, PhysicalIntersection, Section};
use moviemap_core::fixture::Landmark;
use moviemap_core::registration::{RegisteredTrajectory, SimilarityTransform2D};
use moviemap_core::trajectory::{
    check_poses, latlng_to_local, AreaWarning, Direction, GeoError, GeoRef, KeyframePose, MapPoint, TrajectoryError,
    VideoTrajectory,
};
use moviemap_core::turning::TurnPlan;
use moviemap_core::{Billboard, IntersectionRecord};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const REGISTERED_INDEX: &str = "area.json";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {source}")]
    Line {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: line {line}: {source}")]
    Pose {
        path: PathBuf,
        line: usize,
        #[source]
        source: TrajectoryError,
    },
    #[error("{path}: {source}")]
    Trajectory {
        path: PathBuf,
        #[source]
        source: TrajectoryError,
    },
    #[error("{path}: at {pointer}: {message}")]
    Json {
        path: PathBuf,
        pointer: String,
        message: String,
    },
    #[error("video {video_id}: {source}")]
    Geo {
        video_id: String,
        #[source]
        source: GeoError,
    },
    #[error("{0}")]
    Invalid(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a JSON document, reporting schema errors with a JSON pointer.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_json(path, &bytes)
}

pub fn parse_json<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T, FormatError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| FormatError::Json {
        path: path.to_path_buf(),
        pointer: json_pointer(e.path()),
        message: e.into_inner().to_string(),
    })
}

/// `serde_path_to_error` path rendered as an RFC 6901 pointer.
pub fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Pretty JSON with a trailing newline. Output is byte-stable for equal
/// values since every collection we write is ordered.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serializes");
    bytes.push(b'\n');
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

fn json_lines<T: DeserializeOwned>(path: &Path, reader: impl Read) -> Result<Vec<(usize, T)>, FormatError> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|source| FormatError::Line {
            path: path.to_path_buf(),
            line: k + 1,
            source,
        })?;
        out.push((k + 1, v));
    }
    Ok(out)
}

/// Parses a keyframe trajectory file. Values are returned exactly as
/// written (yaw is not wrapped); the sequence is checked for order and
/// finiteness, with errors naming the offending line.
pub fn parse_trajectory(reader: impl Read, path: &Path) -> Result<Vec<KeyframePose>, FormatError> {
    let lines: Vec<(usize, KeyframePose)> = json_lines(path, reader)?;
    let mut check: Vec<KeyframePose> = lines.iter().map(|l| l.1).collect();
    check_poses(&path.display().to_string(), &mut check).map_err(|source| {
        let index = match &source {
            TrajectoryError::NonMonotonicFrame { index, .. }
            | TrajectoryError::BadTimestamp { index, .. }
            | TrajectoryError::NonFinite { index, .. } => Some(*index),
            _ => None,
        };
        match index {
            Some(i) => FormatError::Pose {
                path: path.to_path_buf(),
                line: lines[i].0,
                source,
            },
            None => FormatError::Trajectory {
                path: path.to_path_buf(),
                source,
            },
        }
    })?;
    Ok(lines.into_iter().map(|l| l.1).collect())
}

pub fn read_trajectory(path: &Path) -> Result<Vec<KeyframePose>, FormatError> {
    parse_trajectory(fs::File::open(path).map_err(io_err(path))?, path)
}

pub fn write_trajectory(out: impl Write, poses: &[KeyframePose]) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    for p in poses {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Map anchor given either in map meters or as WGS84 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RefPoint {
    Map { x_m: f64, y_m: f64 },
    LatLng { lat: f64, lng: f64 },
}

impl RefPoint {
    pub fn resolve(&self, geo: &GeoRef) -> Result<MapPoint, GeoError> {
        match *self {
            RefPoint::Map { x_m, y_m } => Ok(MapPoint::new(x_m, y_m)),
            RefPoint::LatLng { lat, lng } => latlng_to_local(lat, lng, geo),
        }
    }
}

impl From<MapPoint> for RefPoint {
    fn from(p: MapPoint) -> Self {
        RefPoint::Map { x_m: p.x_m, y_m: p.y_m }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub video_id: String,
    pub street_id: String,
    pub direction: Direction,
    /// Relative paths are taken from the config file's directory.
    pub trajectory_path: PathBuf,
    pub frames_dir: PathBuf,
    pub ref_start: RefPoint,
    pub ref_end: RefPoint,
    pub frame_rate_hz: f64,
}

fn default_area_name() -> String {
    "area".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaConfig {
    #[serde(default = "default_area_name")]
    pub area_name: String,
    pub geo_ref: GeoRef,
    pub videos: Vec<VideoEntry>,
    #[serde(default)]
    pub landmarks: Vec<Landmark>,
    #[serde(default)]
    pub billboards: Vec<Billboard>,
}

/// A loaded area: config plus parsed trajectories, with paths resolved.
#[derive(Debug, Clone)]
pub struct Area {
    pub config: AreaConfig,
    pub trajectories: Vec<VideoTrajectory>,
    pub frames_dirs: Vec<PathBuf>,
}

pub fn load_area(config_path: &Path) -> Result<Area, FormatError> {
    let config: AreaConfig = read_json(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let mut trajectories = Vec::new();
    let mut frames_dirs = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for v in &config.videos {
        // ids become file and directory names
        let id = v.video_id.as_str();
        if id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\']) {
            return Err(FormatError::Invalid(format!("video_id {id:?} cannot be used as a file name")));
        }
        if !seen.insert(v.video_id.as_str()) {
            return Err(FormatError::Invalid(format!("duplicate video_id {}", v.video_id)));
        }
        let path = base.join(&v.trajectory_path);
        let poses = read_trajectory(&path)?;
        let geo = |r: &RefPoint| {
            r.resolve(&config.geo_ref).map_err(|source| FormatError::Geo {
                video_id: v.video_id.clone(),
                source,
            })
        };
        let t = VideoTrajectory::new(
            v.video_id.clone(),
            v.street_id.clone(),
            v.direction,
            poses,
            geo(&v.ref_start)?,
            geo(&v.ref_end)?,
            v.frame_rate_hz,
        )
        .map_err(|source| FormatError::Trajectory { path, source })?;
        trajectories.push(t);
        frames_dirs.push(base.join(&v.frames_dir));
    }
    for b in &config.billboards {
        let t = trajectories
            .iter()
            .find(|t| t.video_id == b.video_id)
            .ok_or_else(|| FormatError::Invalid(format!("billboard {} names unknown video {}", b.billboard_id, b.video_id)))?;
        b.check(t.poses[0].timestamp_s, t.poses[t.poses.len() - 1].timestamp_s)
            .map_err(|e| FormatError::Invalid(e.to_string()))?;
    }
    Ok(Area {
        config,
        trajectories,
        frames_dirs,
    })
}

/// One line of a registered trajectory file: the source keyframe plus its
/// map placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegisteredPose {
    #[serde(flatten)]
    pub pose: KeyframePose,
    pub map_x: f64,
    pub map_y: f64,
    pub map_yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisteredVideo {
    pub video_id: String,
    pub street_id: String,
    pub direction: Direction,
    pub frame_rate_hz: f64,
    pub ref_start: MapPoint,
    pub ref_end: MapPoint,
    pub transform: SimilarityTransform2D,
    pub frames_dir: PathBuf,
    /// File name inside the registered directory.
    pub file: String,
}

/// `registered/area.json`: everything downstream stages need besides the
/// per-video pose files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisteredIndex {
    pub area_name: String,
    pub geo_ref: GeoRef,
    pub videos: Vec<RegisteredVideo>,
    pub landmarks: Vec<Landmark>,
    pub billboards: Vec<Billboard>,
    pub warnings: Vec<AreaWarning>,
}

pub struct RegisteredArea {
    pub index: RegisteredIndex,
    pub trajectories: Vec<RegisteredTrajectory>,
}

impl RegisteredArea {
    pub fn frames_dir(&self, video_id: &str) -> Option<&Path> {
        self.index
            .videos
            .iter()
            .find(|v| v.video_id == video_id)
            .map(|v| v.frames_dir.as_path())
    }
}

pub fn write_registered(dir: &Path, area: &Area, regs: &[RegisteredTrajectory], warnings: Vec<AreaWarning>) -> Result<RegisteredIndex, FormatError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut videos = Vec::new();
    for (reg, frames_dir) in regs.iter().zip(&area.frames_dirs) {
        let file = format!("{}.jsonl", reg.video_id);
        let path = dir.join(&file);
        let f = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(f);
        for (k, p) in reg.source.poses.iter().enumerate() {
            let line = RegisteredPose {
                pose: *p,
                map_x: reg.map_positions[k].x_m,
                map_y: reg.map_positions[k].y_m,
                map_yaw: reg.map_yaws[k],
            };
            serde_json::to_writer(&mut w, &line).expect("plain data serializes");
            w.write_all(b"\n").map_err(io_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
        let s = &reg.source;
        videos.push(RegisteredVideo {
            video_id: reg.video_id.clone(),
            street_id: s.street_id.clone(),
            direction: s.direction,
            frame_rate_hz: s.frame_rate_hz,
            ref_start: s.ref_start,
            ref_end: s.ref_end,
            transform: reg.transform,
            frames_dir: std::path::absolute(frames_dir).map_err(io_err(frames_dir))?,
            file,
        });
    }
    let index = RegisteredIndex {
        area_name: area.config.area_name.clone(),
        geo_ref: area.config.geo_ref,
        videos,
        landmarks: area.config.landmarks.clone(),
        billboards: area.config.billboards.clone(),
        warnings,
    };
    write_json(&dir.join(REGISTERED_INDEX), &index)?;
    Ok(index)
}

pub fn read_registered(dir: &Path) -> Result<RegisteredArea, FormatError> {
    let mut index: RegisteredIndex = read_json(&dir.join(REGISTERED_INDEX))?;
    // written absolute; a hand-edited relative path is taken from here
    for v in &mut index.videos {
        v.frames_dir = dir.join(&v.frames_dir);
    }
    let mut trajectories = Vec::new();
    for v in &index.videos {
        let path = dir.join(&v.file);
        let lines: Vec<(usize, RegisteredPose)> = json_lines(&path, fs::File::open(&path).map_err(io_err(&path))?)?;
        let poses = lines.iter().map(|l| l.1.pose).collect();
        let source = VideoTrajectory::new(
            v.video_id.clone(),
            v.street_id.clone(),
            v.direction,
            poses,
            v.ref_start,
            v.ref_end,
            v.frame_rate_hz,
        )
        .map_err(|source| FormatError::Trajectory {
            path: path.clone(),
            source,
        })?;
        trajectories.push(RegisteredTrajectory {
            video_id: v.video_id.clone(),
            map_positions: lines.iter().map(|l| MapPoint::new(l.1.map_x, l.1.map_y)).collect(),
            map_yaws: lines.iter().map(|l| l.1.map_yaw).collect(),
            transform: v.transform,
            source,
        });
    }
    Ok(RegisteredArea { index, trajectories })
}

/// `map.json`: the navigation graph in list form plus the planned turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub nodes: Vec<PhysicalIntersection>,
    pub sections: Vec<Section>,
    pub exits: Vec<DirectedExit>,
    /// Travel bearing at the end of every section that ends at a node.
    pub arrivals: std::collections::BTreeMap<String, f64>,
    pub turns: Vec<TurnPlan>,
    pub exit_policy: ExitPolicy,
}

impl MapFile {
    pub fn new(graph: &NavGraph, turns: Vec<TurnPlan>, exit_policy: ExitPolicy) -> Self {
        MapFile {
            nodes: graph.nodes.values().cloned().collect(),
            sections: graph.sections.values().cloned().collect(),
            exits: graph.exits().cloned().collect(),
            arrivals: graph.arrivals.clone(),
            turns,
            exit_policy,
        }
    }

    pub fn graph(&self) -> NavGraph {
        let mut g = NavGraph {
            nodes: self.nodes.iter().map(|n| (n.node_id.clone(), n.clone())).collect(),
            sections: self.sections.iter().map(|s| (s.section_id.clone(), s.clone())).collect(),
            arrivals: self.arrivals.clone(),
            ..NavGraph::default()
        };
        for n in &self.nodes {
            g.outgoing.insert(n.node_id.clone(), Vec::new());
        }
        for e in &self.exits {
            g.outgoing.entry(e.node_id.clone()).or_default().push(e.clone());
        }
        g
    }
}

pub fn read_intersections(path: &Path) -> Result<Vec<IntersectionRecord>, FormatError> {
    read_json(path)
}
