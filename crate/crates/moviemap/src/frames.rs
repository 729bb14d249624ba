//! PNG frame storage: `{dir}/{pose:06}.png` per video.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use moviemap_core::{EquirectFrame, FrameError, FrameSource};

use crate::formats::{io_err, FormatError};

pub fn frame_file(pose: usize) -> String {
    format!("{pose:06}.png")
}

/// Deterministic RGB8 PNG encoding.
pub fn encode_png(frame: &EquirectFrame) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, frame.width(), frame.height());
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().expect("in-memory write");
        w.write_image_data(frame.pixels()).expect("in-memory write");
    }
    out
}

pub fn write_png(path: &Path, frame: &EquirectFrame) -> Result<(), FormatError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let f = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    std::io::Write::write_all(&mut w, &encode_png(frame)).map_err(io_err(path))
}

#[derive(Debug, thiserror::Error)]
pub enum PngError {
    #[error(transparent)]
    Decode(#[from] png::DecodingError),
    #[error("unsupported PNG layout {0:?}/{1:?}")]
    Layout(png::ColorType, png::BitDepth),
    #[error(transparent)]
    Shape(#[from] FrameError),
}

pub fn decode_png(bytes: &[u8]) -> Result<EquirectFrame, PngError> {
    let mut dec = png::Decoder::new(std::io::Cursor::new(bytes));
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = dec.read_info()?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf)?;
    buf.truncate(info.buffer_size());
    let rgb = match info.color_type {
        png::ColorType::Rgb => buf,
        png::ColorType::Rgba => buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&v| [v, v, v]).collect(),
        png::ColorType::GrayscaleAlpha => buf.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
        other => return Err(PngError::Layout(other, info.bit_depth)),
    };
    Ok(EquirectFrame::new(info.width, info.height, rgb)?)
}

/// Frames read from per-video PNG directories on every request.
#[derive(Debug, Clone, Default)]
pub struct PngFrames {
    dirs: BTreeMap<String, PathBuf>,
}

impl PngFrames {
    pub fn new(dirs: impl IntoIterator<Item = (String, PathBuf)>) -> Self {
        PngFrames {
            dirs: dirs.into_iter().collect(),
        }
    }

    /// Every video under one root: `{root}/{video_id}/`.
    pub fn under_root<'a>(root: &Path, video_ids: impl IntoIterator<Item = &'a str>) -> Self {
        Self::new(video_ids.into_iter().map(|v| (v.to_string(), root.join(v))))
    }

    pub fn path(&self, video_id: &str, pose: usize) -> Option<PathBuf> {
        self.dirs.get(video_id).map(|d| d.join(frame_file(pose)))
    }
}

impl FrameSource for PngFrames {
    fn frame(&self, video_id: &str, pose: usize) -> Result<EquirectFrame, FrameError> {
        let path = self.path(video_id, pose).ok_or_else(|| FrameError::Missing {
            video_id: video_id.into(),
            pose,
        })?;
        let bytes = fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => FrameError::Missing {
                video_id: video_id.into(),
                pose,
            },
            _ => FrameError::Unreadable {
                video_id: video_id.into(),
                pose,
                reason: e.to_string(),
            },
        })?;
        decode_png(&bytes).map_err(|e| FrameError::Unreadable {
            video_id: video_id.into(),
            pose,
            reason: format!("{}: {e}", path.display()),
        })
    }
}
