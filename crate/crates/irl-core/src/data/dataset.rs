use std::path::{Path, PathBuf};

use super::patches::sample_patches_from;
use super::{bicubic_resize, load_png, DataError, ImageBuffer, PatchPair};

/// A directory of HR images with their bicubic LR counterparts, cropped to a
/// multiple of the scale.
pub struct SrDataset {
    pub scale: usize,
    pub names: Vec<String>,
    pub hr: Vec<ImageBuffer>,
    pub lr: Vec<ImageBuffer>,
}

impl SrDataset {
    /// Loads every `.png` in `dir` (sorted by name) as an HR image,
    /// skipping `*_x<N>.png` siblings which are cached LR renditions.
    pub fn load_dir(dir: impl AsRef<Path>, scale: usize) -> Result<SrDataset, DataError> {
        let dir = dir.as_ref();
        let entries = std::fs::read_dir(dir)
            .map_err(|source| DataError::Io { path: dir.display().to_string(), source })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("png"))
                    && !is_lr_cache_name(p)
            })
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(DataError::EmptyDataset(dir.display().to_string()));
        }
        let mut images = Vec::with_capacity(paths.len());
        for p in &paths {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            images.push((name, load_png(p)?));
        }
        SrDataset::from_images(images, scale)
    }

    pub fn from_images(
        images: Vec<(String, ImageBuffer)>,
        scale: usize,
    ) -> Result<SrDataset, DataError> {
        let mut names = Vec::new();
        let mut hr = Vec::new();
        let mut lr = Vec::new();
        for (name, img) in images {
            let cropped =
                img.crop(0, 0, img.height - img.height % scale, img.width - img.width % scale);
            let low = bicubic_resize(&cropped, 1, scale as u32)?;
            names.push(name);
            hr.push(cropped);
            lr.push(low);
        }
        Ok(SrDataset { scale, names, hr, lr })
    }

    pub fn len(&self) -> usize {
        self.hr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hr.is_empty()
    }

    /// Draws `count` patch pairs from image `image_id`.
    pub fn sample(
        &self,
        image_id: usize,
        patch: usize,
        count: usize,
        seed: u64,
        augment: bool,
    ) -> Result<Vec<PatchPair>, DataError> {
        sample_patches_from(
            &self.hr[image_id],
            &self.lr[image_id],
            self.scale,
            patch,
            count,
            seed,
            augment,
            image_id,
        )
    }
}

fn is_lr_cache_name(p: &Path) -> bool {
    let stem = match p.file_stem().and_then(|s| s.to_str()) {
        Some(s) => s,
        None => return false,
    };
    if let Some(pos) = stem.rfind("_x") {
        return stem[pos + 2..].chars().all(|c| c.is_ascii_digit())
            && !stem[pos + 2..].is_empty();
    }
    false
}
