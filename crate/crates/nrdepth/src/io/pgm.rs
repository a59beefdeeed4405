//! Binary PGM masks (P5, maxval 255); 255 marks a dynamic pixel.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// A byte raster; `data[y * width + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ByteImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl ByteImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} bytes for {width}x{height} image",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }
}

/// Serialize a mask raster to P5 bytes.
pub fn mask_to_bytes(img: &ByteImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

/// Parse P5 bytes; `path` is used for error reporting only.
pub fn mask_from_bytes(bytes: &[u8], path: &Path) -> Result<ByteImage> {
    let err = |offset: u64, message: String| Error::Format {
        path: path.to_path_buf(),
        offset,
        message,
    };
    let header_end = bytes
        .iter()
        .enumerate()
        .filter(|&(_, &b)| b.is_ascii_whitespace())
        .nth(3)
        .map(|(i, _)| i + 1)
        .ok_or_else(|| err(bytes.len() as u64, "truncated header".into()))?;
    let header = String::from_utf8_lossy(&bytes[..header_end]);
    let mut tokens = header.split_ascii_whitespace();
    let magic = tokens.next().unwrap_or("");
    if magic != "P5" {
        return Err(err(0, format!("bad magic {magic:?}")));
    }
    let width: usize = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(2, "bad width".into()))?;
    let height: usize = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(2, "bad height".into()))?;
    let maxval: usize = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(2, "bad maxval".into()))?;
    if maxval != 255 {
        return Err(err(2, format!("unsupported maxval {maxval}")));
    }
    let payload = &bytes[header_end..];
    if payload.len() != width * height {
        return Err(err(
            header_end as u64,
            format!("payload of {} bytes for {width}x{height}", payload.len()),
        ));
    }
    ByteImage::new(width, height, payload.to_vec())
}

/// Write a mask PGM atomically.
pub fn write_pgm(path: impl AsRef<Path>, img: &ByteImage) -> Result<()> {
    super::write_atomic(path.as_ref(), &mask_to_bytes(img))
}

/// Read a mask PGM.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<ByteImage> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    mask_from_bytes(&bytes, path)
}

/// Rasterize per-point labels onto an image grid: each labeled point paints
/// its nearest pixel 255 (dynamic) or 0; untouched pixels stay 0.
pub fn rasterize_labels(
    labels: &[bool],
    positions: &[(f64, f64)],
    width: usize,
    height: usize,
) -> Result<ByteImage> {
    if labels.len() != positions.len() {
        return Err(Error::Dimension(format!(
            "{} labels vs {} positions",
            labels.len(),
            positions.len()
        )));
    }
    let mut data = vec![0u8; width * height];
    for (&dynamic, &(x, y)) in labels.iter().zip(positions) {
        let xi = x.round() as isize;
        let yi = y.round() as isize;
        if xi < 0 || yi < 0 || xi >= width as isize || yi >= height as isize {
            continue;
        }
        if dynamic {
            data[yi as usize * width + xi as usize] = 255;
        }
    }
    ByteImage::new(width, height, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let img = ByteImage::new(3, 2, vec![0, 255, 0, 255, 0, 255]).unwrap();
        let bytes = mask_to_bytes(&img);
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        let back = mask_from_bytes(&bytes, Path::new("m.pgm")).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn rasterization_paints_dynamic_pixels() {
        let img = rasterize_labels(
            &[true, false, true],
            &[(0.2, 0.1), (1.0, 0.0), (2.0, 1.0)],
            3,
            2,
        )
        .unwrap();
        assert_eq!(img.data, vec![255, 0, 0, 0, 0, 255]);
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(mask_from_bytes(b"P4\n1 1\n255\n\0", Path::new("m.pgm")).is_err());
        assert!(mask_from_bytes(b"P5\n2 1\n255\n\0", Path::new("m.pgm")).is_err());
    }
}
