//! Physical intersections, playable sections and the navigation graph.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::detection::IntersectionRecord;
use crate::math::{angle_dist, wrap_angle};
use crate::registration::RegisteredTrajectory;
use crate::trajectory::MapPoint;

pub const DEFAULT_CLUSTER_RADIUS_M: f64 = 8.0;
pub const PATH_END: &str = "PATH_END";
/// Minimum displacement used to measure a travel bearing.
pub const BEARING_BASELINE_M: f64 = 5.0;

/// One real-world crossing: every record that lands there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalIntersection {
    pub node_id: String,
    pub center: MapPoint,
    pub members: Vec<IntersectionRecord>,
    pub incident_streets: BTreeSet<String>,
}

/// Either end of a section: a graph node or the end of the video.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRef {
    Node(String),
    PathEnd,
}

impl NodeRef {
    pub fn node(&self) -> Option<&str> {
        match self {
            NodeRef::Node(id) => Some(id),
            NodeRef::PathEnd => None,
        }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.node().unwrap_or(PATH_END))
    }
}

impl Serialize for NodeRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.node().unwrap_or(PATH_END))
    }
}

impl<'de> Deserialize<'de> for NodeRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(if s == PATH_END { NodeRef::PathEnd } else { NodeRef::Node(s) })
    }
}

/// A playable span of one video between two cut points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub section_id: String,
    pub video_id: String,
    pub start_pose: usize,
    pub end_pose: usize,
    pub start_node: NodeRef,
    pub end_node: NodeRef,
    pub start_timestamp_s: f64,
    pub end_timestamp_s: f64,
}

impl Section {
    pub fn duration_s(&self) -> f64 {
        self.end_timestamp_s - self.start_timestamp_s
    }
}

pub fn section_id(video_id: &str, start_pose: usize) -> String {
    format!("{video_id}@{start_pose}")
}

/// A way out of a node: the section that starts there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedExit {
    pub node_id: String,
    pub section_id: String,
    /// Map bearing of the first few metres of travel, `[-π, π)`.
    pub bearing_rad: f64,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NavGraph {
    pub nodes: BTreeMap<String, PhysicalIntersection>,
    pub sections: BTreeMap<String, Section>,
    /// Exits per node, sorted by bearing. Every node has an entry.
    pub outgoing: BTreeMap<String, Vec<DirectedExit>>,
    /// Travel bearing at the end of each section ending at a node.
    pub arrivals: BTreeMap<String, f64>,
}

impl NavGraph {
    pub fn exits(&self) -> impl Iterator<Item = &DirectedExit> {
        self.outgoing.values().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssemblyError {
    #[error("{video_id}: cut pose {pose} outside 0..{len}")]
    CutOutOfRange { video_id: String, pose: usize, len: usize },
    #[error("section {section_id} references unknown node {node_id}")]
    DanglingNode { section_id: String, node_id: String },
    #[error("section {section_id} references unknown video {video_id}")]
    UnknownVideo { section_id: String, video_id: String },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unknown section {0}")]
    UnknownSection(String),
    #[error("section {section_id} does not end at node {node_id}")]
    NotArriving { section_id: String, node_id: String },
}

/// Single-linkage clustering: records whose points are within
/// `cluster_radius_m` of each other end up in the same node, transitively.
///
/// `streets` maps video ids to street ids for `incident_streets`; videos it
/// does not know count as their own street. Node ids follow the order of
/// each cluster's smallest member.
pub fn cluster_intersections(
    records: &[IntersectionRecord],
    cluster_radius_m: f64,
    streets: &BTreeMap<String, String>,
) -> Vec<PhysicalIntersection> {
    let groups = single_linkage(
        &records.iter().map(|r| r.map_point).collect::<Vec<_>>(),
        cluster_radius_m,
    );
    let mut clusters: Vec<Vec<IntersectionRecord>> = groups
        .into_iter()
        .map(|g| {
            let mut m: Vec<_> = g.into_iter().map(|i| records[i].clone()).collect();
            m.sort_by(|x, y| x.cmp_key(y));
            m
        })
        .collect();
    clusters.sort_by(|x, y| x[0].cmp_key(&y[0]));
    clusters
        .into_iter()
        .enumerate()
        .map(|(k, members)| {
            let n = members.len() as f64;
            let (sx, sy) = members
                .iter()
                .fold((0.0, 0.0), |(sx, sy), r| (sx + r.map_point.x_m, sy + r.map_point.y_m));
            let incident_streets = members
                .iter()
                .flat_map(|r| [&r.video_a, &r.video_b])
                .map(|v| streets.get(v).unwrap_or(v).clone())
                .collect();
            PhysicalIntersection {
                node_id: format!("n{k:03}"),
                center: MapPoint::new(sx / n, sy / n),
                members,
                incident_streets,
            }
        })
        .collect()
}

/// Connected components of the "within `radius`" relation, each sorted,
/// ordered by smallest index.
pub fn single_linkage(points: &[MapPoint], radius: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if points[i].distance(&points[j]) <= radius {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Cuts one video at the nodes it passes through.
///
/// A video usually has several records at one node (one per crossing video).
/// Those poses are snapped to a single cut, their lower median, so a node
/// never produces a sliver section that starts and ends at itself.
pub fn split_sections(reg: &RegisteredTrajectory, nodes: &[PhysicalIntersection]) -> Result<Vec<Section>, AssemblyError> {
    let len = reg.len();
    let vid = reg.video_id.as_str();
    let mut cuts: Vec<(usize, &str)> = Vec::new();
    for node in nodes {
        let mut poses: Vec<usize> = node.members.iter().filter_map(|r| r.pose_of(vid)).collect();
        if poses.is_empty() {
            continue;
        }
        if let Some(&bad) = poses.iter().find(|&&p| p >= len) {
            return Err(AssemblyError::CutOutOfRange {
                video_id: vid.into(),
                pose: bad,
                len,
            });
        }
        poses.sort_unstable();
        cuts.push((poses[(poses.len() - 1) / 2], &node.node_id));
    }
    cuts.sort();
    cuts.dedup_by_key(|c| c.0);

    let mut bounds: Vec<(usize, NodeRef)> = Vec::with_capacity(cuts.len() + 2);
    if cuts.first().map(|c| c.0) != Some(0) {
        bounds.push((0, NodeRef::PathEnd));
    }
    bounds.extend(cuts.iter().map(|(p, n)| (*p, NodeRef::Node((*n).into()))));
    if bounds.last().map(|b| b.0) != Some(len - 1) {
        bounds.push((len - 1, NodeRef::PathEnd));
    }
    Ok(bounds
        .windows(2)
        .map(|w| {
            let ((s, sn), (e, en)) = (&w[0], &w[1]);
            Section {
                section_id: section_id(vid, *s),
                video_id: vid.into(),
                start_pose: *s,
                end_pose: *e,
                start_node: sn.clone(),
                end_node: en.clone(),
                start_timestamp_s: reg.timestamp(*s),
                end_timestamp_s: reg.timestamp(*e),
            }
        })
        .collect())
}

/// Links sections and nodes. Each section starting at a node becomes an exit
/// of that node, with the bearing of its first few metres of travel.
pub fn build_graph(
    sections: &[Section],
    nodes: &[PhysicalIntersection],
    registered: &[RegisteredTrajectory],
) -> Result<NavGraph, AssemblyError> {
    let regs: BTreeMap<&str, &RegisteredTrajectory> = registered.iter().map(|r| (r.video_id.as_str(), r)).collect();
    let mut g = NavGraph {
        nodes: nodes.iter().map(|n| (n.node_id.clone(), n.clone())).collect(),
        ..NavGraph::default()
    };
    for n in nodes {
        g.outgoing.insert(n.node_id.clone(), Vec::new());
    }
    for s in sections {
        let Some(reg) = regs.get(s.video_id.as_str()) else {
            return Err(AssemblyError::UnknownVideo {
                section_id: s.section_id.clone(),
                video_id: s.video_id.clone(),
            });
        };
        for end in [&s.start_node, &s.end_node] {
            if let Some(id) = end.node() {
                if !g.nodes.contains_key(id) {
                    return Err(AssemblyError::DanglingNode {
                        section_id: s.section_id.clone(),
                        node_id: id.into(),
                    });
                }
            }
        }
        if s.end_pose >= reg.len() {
            return Err(AssemblyError::CutOutOfRange {
                video_id: s.video_id.clone(),
                pose: s.end_pose,
                len: reg.len(),
            });
        }
        if let Some(id) = s.start_node.node() {
            let exit = DirectedExit {
                node_id: id.into(),
                section_id: s.section_id.clone(),
                bearing_rad: reg.bearing_forward(s.start_pose, BEARING_BASELINE_M),
                label: reg.street_id().to_string(),
            };
            g.outgoing.get_mut(id).expect("checked").push(exit);
        }
        if s.end_node.node().is_some() {
            g.arrivals
                .insert(s.section_id.clone(), reg.bearing_arriving(s.end_pose, BEARING_BASELINE_M));
        }
        g.sections.insert(s.section_id.clone(), s.clone());
    }
    for exits in g.outgoing.values_mut() {
        exits.sort_by(|a, b| a.bearing_rad.total_cmp(&b.bearing_rad).then_with(|| a.section_id.cmp(&b.section_id)));
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExitPolicy {
    pub include_uturn: bool,
    pub uturn_tolerance_rad: f64,
}

impl Default for ExitPolicy {
    fn default() -> Self {
        Self {
            include_uturn: false,
            uturn_tolerance_rad: 0.35,
        }
    }
}

/// Exits offered to someone arriving at `node_id` along `arriving_section`,
/// ordered from the sharpest right turn through straight ahead to the
/// sharpest left. Turning back the way one came is dropped unless the
/// policy allows it.
pub fn exits_toward(
    graph: &NavGraph,
    node_id: &str,
    arriving_section: &str,
    policy: &ExitPolicy,
) -> Result<Vec<DirectedExit>, AssemblyError> {
    let exits = graph
        .outgoing
        .get(node_id)
        .ok_or_else(|| AssemblyError::UnknownNode(node_id.into()))?;
    let section = graph
        .sections
        .get(arriving_section)
        .ok_or_else(|| AssemblyError::UnknownSection(arriving_section.into()))?;
    if section.end_node.node() != Some(node_id) {
        return Err(AssemblyError::NotArriving {
            section_id: arriving_section.into(),
            node_id: node_id.into(),
        });
    }
    let heading = graph.arrivals[arriving_section];
    let back = wrap_angle(heading + core::f64::consts::PI);
    let mut out: Vec<(f64, DirectedExit)> = exits
        .iter()
        .filter(|e| policy.include_uturn || angle_dist(e.bearing_rad, back) > policy.uturn_tolerance_rad)
        .map(|e| (wrap_angle(e.bearing_rad - heading), e.clone()))
        .collect();
    out.sort_by(|a, b| match a.0.total_cmp(&b.0) {
        Ordering::Equal => a.1.section_id.cmp(&b.1.section_id),
        o => o,
    });
    Ok(out.into_iter().map(|(_, e)| e).collect())
}
