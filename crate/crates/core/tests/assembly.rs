mod common;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use common::assemble;
use moviemap_core::assembly::{exits_toward, ExitPolicy, NodeRef, Section};
use moviemap_core::fixture::Layout;
use moviemap_core::math::angle_dist;

/// Sections of each video, in pose order, must tile it end to end and
/// alternate their shared node.
fn check_coverage(graph: &moviemap_core::NavGraph, regs: &[moviemap_core::RegisteredTrajectory]) {
    let mut per_video: BTreeMap<&str, Vec<&Section>> = BTreeMap::new();
    for s in graph.sections.values() {
        per_video.entry(&s.video_id).or_default().push(s);
    }
    for r in regs {
        let mut secs = per_video.remove(r.video_id.as_str()).expect("every video has sections");
        secs.sort_by_key(|s| s.start_pose);
        assert_eq!(secs[0].start_pose, 0);
        assert_eq!(secs.last().unwrap().end_pose, r.len() - 1);
        // a path end is only a node where the video stops at a crossing
        let ends = [&secs[0].start_node, &secs.last().unwrap().end_node];
        if graph.nodes.len() > 1 || r.street_id() != "stem" {
            assert!(ends.iter().all(|n| **n == NodeRef::PathEnd), "{}", r.video_id);
        }
        for w in secs.windows(2) {
            assert_eq!(w[0].end_pose, w[1].start_pose);
            assert_eq!(w[0].end_node, w[1].start_node);
            assert!(w[0].end_node.node().is_some());
        }
        for s in &secs {
            assert!(s.start_pose < s.end_pose);
            assert!(s.duration_s() > 0.0);
        }
    }
    assert!(per_video.is_empty());
}

fn near_one_of(b: f64, targets: &[f64], tol: f64) -> bool {
    targets.iter().any(|t| angle_dist(b, *t) <= tol)
}

#[test]
fn grid_has_four_nodes_with_four_exits() {
    let a = assemble(Layout::Grid2x2, 7, 0.3);
    assert_eq!(a.graph.nodes.len(), 4);
    assert_eq!(a.fixture.truth.node_count, 4);
    for (id, node) in &a.graph.nodes {
        assert_eq!(node.members.len(), 4, "{id}");
        assert_eq!(node.incident_streets.len(), 2);
        let exits = &a.graph.outgoing[id];
        assert_eq!(exits.len(), 4, "{id}");
        for e in exits {
            assert!(near_one_of(e.bearing_rad, &[0.0, FRAC_PI_2, -FRAC_PI_2, PI], 0.1), "{}", e.bearing_rad);
        }
        let truth = a.fixture.truth.crossings.iter().map(|c| c.position.distance(&node.center)).fold(f64::INFINITY, f64::min);
        assert!(truth < 1.0);
    }
    check_coverage(&a.graph, &a.regs);
    // each video is crossed twice, so three sections
    assert_eq!(a.graph.sections.len(), 8 * 3);
    for (v, n) in &a.fixture.truth.section_counts {
        assert_eq!(a.graph.sections.values().filter(|s| &s.video_id == v).count(), *n, "{v}");
    }
}

#[test]
fn four_way_exits_drop_the_uturn_and_order_right_to_left() {
    let a = assemble(Layout::Cross, 2, 0.0);
    assert_eq!(a.graph.nodes.len(), 1);
    let node = a.graph.nodes.keys().next().unwrap().clone();
    let arriving = a
        .graph
        .sections
        .values()
        .find(|s| s.video_id == "ew_f" && s.end_node.node() == Some(&node))
        .unwrap();
    let exits = exits_toward(&a.graph, &node, &arriving.section_id, &ExitPolicy::default()).unwrap();
    let labels: Vec<(&str, f64)> = exits.iter().map(|e| (e.section_id.as_str(), e.bearing_rad)).collect();
    assert_eq!(exits.len(), 3, "{labels:?}");
    // heading east: right is south, then straight east, then left north
    assert!(angle_dist(exits[0].bearing_rad, -FRAC_PI_2) < 0.1);
    assert!(angle_dist(exits[1].bearing_rad, 0.0) < 0.1);
    assert!(angle_dist(exits[2].bearing_rad, FRAC_PI_2) < 0.1);
    assert!(exits[1].section_id.starts_with("ew_f@"));

    let all = ExitPolicy {
        include_uturn: true,
        ..Default::default()
    };
    let with_back = exits_toward(&a.graph, &node, &arriving.section_id, &all).unwrap();
    assert_eq!(with_back.len(), 4);
    assert!(with_back.iter().any(|e| e.section_id.starts_with("ew_b@")));
}

#[test]
fn t_junction_has_three_ways_out() {
    let a = assemble(Layout::TJunction, 9, 0.2);
    assert_eq!(a.graph.nodes.len(), 1);
    let (id, node) = a.graph.nodes.iter().next().unwrap();
    assert_eq!(node.members.len(), 4);
    // ew_f, ew_b and stem_b leave the node; stem_f ends there
    let exits = &a.graph.outgoing[id];
    assert_eq!(exits.len(), 3, "{exits:?}");
    check_coverage(&a.graph, &a.regs);
    let stem_f: Vec<_> = a.graph.sections.values().filter(|s| s.video_id == "stem_f").collect();
    let stem_b: Vec<_> = a.graph.sections.values().filter(|s| s.video_id == "stem_b").collect();
    assert_eq!((stem_f.len(), stem_b.len()), (1, 1));
}

#[test]
fn arriving_from_the_stem_offers_left_and_right() {
    let a = assemble(Layout::TJunction, 1, 0.0);
    let id = a.graph.nodes.keys().next().unwrap().clone();
    let arriving = a
        .graph
        .sections
        .values()
        .find(|s| s.video_id == "stem_f" && s.end_node.node() == Some(&id))
        .unwrap();
    let exits = exits_toward(&a.graph, &id, &arriving.section_id, &ExitPolicy::default()).unwrap();
    // heading south: right is west, left is east
    let b: Vec<f64> = exits.iter().map(|e| e.bearing_rad).collect();
    assert_eq!(b.len(), 2, "{b:?}");
    assert!(angle_dist(b[0], PI) < 0.1 && angle_dist(b[1], 0.0) < 0.1, "{b:?}");
}

#[test]
fn straight_street_is_one_section_per_video() {
    let a = assemble(Layout::Straight, 0, 0.5);
    assert!(a.graph.nodes.is_empty());
    assert_eq!(a.graph.sections.len(), 2);
    check_coverage(&a.graph, &a.regs);
}

#[test]
fn graph_is_reproducible() {
    let x = assemble(Layout::Grid2x2, 3, 0.5);
    let y = assemble(Layout::Grid2x2, 3, 0.5);
    assert_eq!(x.graph, y.graph);
}
