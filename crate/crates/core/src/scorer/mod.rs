//! Frame similarity scorers used to refine intersection frame pairs.
//!
//! A scorer turns a frame into features once, then compares feature sets.
//! Higher scores mean more similar. Frames handed to a scorer are already
//! rotated to a common heading.

mod orb;
mod patch;

pub use orb::{Keypoint, OrbFeatures, OrbScorer};
pub use patch::{PatchCorrelation, PatchFeatures};

use crate::frame::EquirectFrame;

pub trait FrameScorer: Sync {
    type Features: Send + Sync;

    fn prepare(&self, frame: &EquirectFrame) -> Self::Features;

    fn score(&self, a: &Self::Features, b: &Self::Features) -> f64;
}

/// Either scorer, chosen at run time.
#[derive(Debug, Clone)]
pub enum AnyScorer {
    Patch(PatchCorrelation),
    Orb(OrbScorer),
}

pub enum AnyFeatures {
    Patch(PatchFeatures),
    Orb(OrbFeatures),
}

impl FrameScorer for AnyScorer {
    type Features = AnyFeatures;

    fn prepare(&self, frame: &EquirectFrame) -> AnyFeatures {
        match self {
            AnyScorer::Patch(s) => AnyFeatures::Patch(s.prepare(frame)),
            AnyScorer::Orb(s) => AnyFeatures::Orb(s.prepare(frame)),
        }
    }

    fn score(&self, a: &AnyFeatures, b: &AnyFeatures) -> f64 {
        match (self, a, b) {
            (AnyScorer::Patch(s), AnyFeatures::Patch(a), AnyFeatures::Patch(b)) => s.score(a, b),
            (AnyScorer::Orb(s), AnyFeatures::Orb(a), AnyFeatures::Orb(b)) => s.score(a, b),
            _ => f64::NEG_INFINITY,
        }
    }
}
