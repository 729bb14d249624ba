//! File formats, build stages, package store and HTTP server for Movie
//! Maps. The algorithms themselves live in `moviemap-core`.

pub mod formats;
pub mod frames;
pub mod package;
pub mod pipeline;
pub mod server;

pub use moviemap_core as core;
