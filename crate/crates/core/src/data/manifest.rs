use std::fs;
use std::path::{Path, PathBuf};

use super::image::{read_pnm, Image};
use crate::error::{Error, Result};

/// Reads a dataset manifest: one image path per line, blank lines and `#`
/// comments ignored. Relative paths are resolved against the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read manifest {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let p = Path::new(l);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        })
        .collect())
}

/// A named image loaded from a manifest entry.
#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub name: String,
    pub image: Image,
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<LabeledImage>> {
    read_manifest(path)?
        .into_iter()
        .map(|p| {
            let image = read_pnm(&p).map_err(|e| Error::Data(format!("{}: {e}", p.display())))?;
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(LabeledImage { name, image })
        })
        .collect()
}
