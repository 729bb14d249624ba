//! Equirectangular RGB frames and access to a video's keyframe images.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrameError {
    #[error("frame {width}x{height} is not 2:1 or has a wrong pixel count")]
    BadShape { width: u32, height: u32 },
    #[error("missing frame: video {video_id}, pose {pose}")]
    Missing { video_id: String, pose: usize },
    #[error("could not read frame for video {video_id}, pose {pose}: {reason}")]
    Unreadable {
        video_id: String,
        pose: usize,
        reason: String,
    },
}

/// A full 360°×180° panorama, 2:1, row-major RGB8.
///
/// The center column looks along the camera heading. Columns to the right
/// look further clockwise, so column `x` sees map bearing
/// `heading − (2π·(x + ½)/width − π)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquirectFrame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl EquirectFrame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, FrameError> {
        if height == 0 || width != 2 * height || pixels.len() != 3 * width as usize * height as usize {
            return Err(FrameError::BadShape { width, height });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, FrameError> {
        let n = width as usize * height as usize;
        let mut pixels = vec![0u8; 3 * n];
        for px in pixels.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn same_shape(&self, other: &EquirectFrame) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Rec. 601 luma, one byte per pixel.
    pub fn luma(&self) -> Vec<u8> {
        self.pixels
            .chunks_exact(3)
            .map(|p| ((299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32 + 500) / 1000) as u8)
            .collect()
    }
}

/// Read access to keyframe images, addressed by video and pose ordinal.
/// Implementations must be usable from several threads at once.
pub trait FrameSource: Sync {
    fn frame(&self, video_id: &str, pose: usize) -> Result<EquirectFrame, FrameError>;
}

impl<T: FrameSource + ?Sized> FrameSource for &T {
    fn frame(&self, video_id: &str, pose: usize) -> Result<EquirectFrame, FrameError> {
        (**self).frame(video_id, pose)
    }
}
