//! Core algorithms for building a Movie Map: an explorable city map made of
//! omnidirectional street videos joined at intersections.
//!
//! The pipeline runs in this order:
//!
//! ```text
//! keyframe poses ──► registration ──► detection ──► assembly ──► turning
//!  (per video)       (map meters)     (records)     (graph)      (views)
//! ```
//!
//! Everything here is allocation-only (`no_std` + `alloc`). File formats,
//! PNG coding, the HTTP service and the command line live in the
//! `moviemap` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assembly;
pub mod billboard;
pub mod detection;
pub mod fixture;
pub mod frame;
pub mod math;
pub mod playback;
pub mod registration;
pub mod scorer;
pub mod trajectory;
pub mod turning;

pub use assembly::{
    build_graph, cluster_intersections, exits_toward, split_sections, DirectedExit, ExitPolicy,
    NavGraph, NodeRef, PhysicalIntersection, Section,
};
pub use billboard::{billboards_near, Billboard};
pub use detection::{detect_all, DetectionParams, DetectionReport, IntersectionRecord};
pub use frame::{EquirectFrame, FrameError, FrameSource};
pub use registration::{
    apply_transform, compute_similarity, register_area, RegisteredTrajectory,
    SimilarityTransform2D,
};
pub use trajectory::{
    latlng_to_local, validate_area, Direction, GeoRef, KeyframePose, MapPoint, VideoTrajectory,
};
pub use turning::{synthesize_turn, yaw_rotate, TurnMethod, TurnSpec};
