//! Middlebury `.flo` optical-flow files.
//!
//! Layout: little-endian float 202021.25 (the bytes "PIEH"), then int32
//! width and height, then row-major interleaved `(u, v)` float32 samples.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// The sanity-check magic float; its little-endian bytes read "PIEH".
pub const FLO_MAGIC: f32 = 202021.25;

/// A dense flow field; `uv[y * width + x]` is the displacement at `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub width: usize,
    pub height: usize,
    pub uv: Vec<[f32; 2]>,
}

impl Flow {
    pub fn new(width: usize, height: usize, uv: Vec<[f32; 2]>) -> Result<Self> {
        if uv.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} samples for {width}x{height} flow",
                uv.len()
            )));
        }
        Ok(Self { width, height, uv })
    }

    pub fn constant(width: usize, height: usize, u: f32, v: f32) -> Self {
        Self {
            width,
            height,
            uv: vec![[u, v]; width * height],
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

/// Serialize a flow field to `.flo` bytes.
pub fn flow_to_bytes(flow: &Flow) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + flow.uv.len() * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(flow.width as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height as i32).to_le_bytes());
    for [u, v] in &flow.uv {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parse `.flo` bytes; `path` is used for error reporting only.
pub fn flow_from_bytes(bytes: &[u8], path: &Path) -> Result<Flow> {
    let mut offset = 0u64;
    let take = |offset: &mut u64, n: usize| -> Result<&[u8]> {
        let start = *offset as usize;
        if start + n > bytes.len() {
            return Err(format_err(
                path,
                bytes.len() as u64,
                format!("truncated: need {} bytes, have {}", start + n, bytes.len()),
            ));
        }
        *offset += n as u64;
        Ok(&bytes[start..start + n])
    };

    let magic = f32::from_le_bytes(take(&mut offset, 4)?.try_into().unwrap());
    if magic != FLO_MAGIC {
        return Err(format_err(path, 0, format!("bad magic {magic}, want {FLO_MAGIC}")));
    }
    let width = i32::from_le_bytes(take(&mut offset, 4)?.try_into().unwrap());
    let height = i32::from_le_bytes(take(&mut offset, 4)?.try_into().unwrap());
    if width < 0 || height < 0 {
        return Err(format_err(path, 4, format!("negative dimensions {width}x{height}")));
    }
    let (width, height) = (width as usize, height as usize);
    let mut uv = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        let at = offset;
        let u = f32::from_le_bytes(take(&mut offset, 4)?.try_into().unwrap());
        let v = f32::from_le_bytes(take(&mut offset, 4)?.try_into().unwrap());
        if !u.is_finite() || !v.is_finite() {
            return Err(format_err(path, at, format!("non-finite flow sample ({u}, {v})")));
        }
        uv.push([u, v]);
    }
    if (offset as usize) < bytes.len() {
        return Err(format_err(
            path,
            offset,
            format!("{} trailing bytes after payload", bytes.len() - offset as usize),
        ));
    }
    Flow::new(width, height, uv)
}

/// Write a `.flo` file atomically (temp file then rename).
pub fn write_flow(path: impl AsRef<Path>, flow: &Flow) -> Result<()> {
    super::write_atomic(path.as_ref(), &flow_to_bytes(flow))
}

/// Read a `.flo` file.
pub fn read_flow(path: impl AsRef<Path>) -> Result<Flow> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    flow_from_bytes(&bytes, path)
}
