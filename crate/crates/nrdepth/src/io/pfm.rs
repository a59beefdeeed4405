//! Grayscale PFM (portable float map) files.
//!
//! Layout: ASCII header `Pf\n{width} {height}\n{scale}\n`, then float32
//! samples stored row by row from the bottom of the image to the top. A
//! negative scale declares little-endian samples, positive big-endian; this
//! writer always emits `-1.0`.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// A single-channel float image; `data[y * width + x]` with `y = 0` the top
/// row.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} samples for {width}x{height} image",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

fn format_err(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

/// Serialize to PFM bytes (grayscale, little-endian).
pub fn image_to_bytes(img: &FloatImage) -> Vec<u8> {
    let header = format!("Pf\n{} {}\n-1.0\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.data.len() * 4);
    out.extend_from_slice(header.as_bytes());
    // Bottom row first.
    for y in (0..img.height).rev() {
        for x in 0..img.width {
            out.extend_from_slice(&img.data[y * img.width + x].to_le_bytes());
        }
    }
    out
}

/// Parse PFM bytes; `path` is used for error reporting only.
pub fn image_from_bytes(bytes: &[u8], path: &Path) -> Result<FloatImage> {
    // Header: three whitespace-separated tokens.
    let mut offset = 0usize;
    let token = |offset: &mut usize| -> Result<String> {
        while *offset < bytes.len() && bytes[*offset].is_ascii_whitespace() {
            *offset += 1;
        }
        let start = *offset;
        while *offset < bytes.len() && !bytes[*offset].is_ascii_whitespace() {
            *offset += 1;
        }
        if start == *offset {
            return Err(format_err(path, start as u64, "truncated header"));
        }
        // One whitespace byte terminates the token.
        if *offset < bytes.len() {
            *offset += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..*offset - 1]).into_owned())
    };

    let kind = token(&mut offset)?;
    match kind.as_str() {
        "Pf" => {}
        "PF" => {
            return Err(Error::Unsupported(
                "color PFM (\"PF\") is not supported, only grayscale \"Pf\"".into(),
            ))
        }
        other => {
            return Err(format_err(path, 0, format!("bad PFM type token {other:?}")));
        }
    }
    let dims_at = offset;
    let width: usize = token(&mut offset)?
        .parse()
        .map_err(|e| format_err(path, dims_at as u64, format!("bad width: {e}")))?;
    let height: usize = token(&mut offset)?
        .parse()
        .map_err(|e| format_err(path, dims_at as u64, format!("bad height: {e}")))?;
    let scale_at = offset;
    let scale: f64 = token(&mut offset)?
        .parse()
        .map_err(|e| format_err(path, scale_at as u64, format!("bad scale: {e}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(format_err(path, scale_at as u64, format!("bad scale {scale}")));
    }
    let little_endian = scale < 0.0;

    let need = width * height * 4;
    if bytes.len() < offset + need {
        return Err(format_err(
            path,
            bytes.len() as u64,
            format!("truncated payload: need {need} bytes, have {}", bytes.len() - offset),
        ));
    }
    if bytes.len() > offset + need {
        return Err(format_err(
            path,
            (offset + need) as u64,
            format!("{} trailing bytes after payload", bytes.len() - offset - need),
        ));
    }
    let mut data = vec![0f32; width * height];
    for stored_row in 0..height {
        let y = height - 1 - stored_row; // stored bottom-to-top
        for x in 0..width {
            let at = offset + (stored_row * width + x) * 4;
            let raw: [u8; 4] = bytes[at..at + 4].try_into().unwrap();
            data[y * width + x] = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
        }
    }
    FloatImage::new(width, height, data)
}

/// Write a PFM file atomically.
pub fn write_pfm(path: impl AsRef<Path>, img: &FloatImage) -> Result<()> {
    super::write_atomic(path.as_ref(), &image_to_bytes(img))
}

/// Read a PFM file.
pub fn read_pfm(path: impl AsRef<Path>) -> Result<FloatImage> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    image_from_bytes(&bytes, path)
}
