//! File formats: Middlebury `.flo` flow, PFM float maps, PGM masks and the
//! CSV/JSON scene bundle.

pub mod flo;
pub mod pfm;
pub mod pgm;
pub mod tracks;

use std::path::Path;

use crate::error::Result;

/// Write bytes to `path` atomically: write a sibling temp file, then rename
/// it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_creates_parents_and_no_temp_residue() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/file.bin");
        write_atomic(&path, b"payload").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"payload");
        assert!(!path.with_extension("bin.tmp").exists());
    }
}
