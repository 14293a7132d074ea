use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bicubic_resize, DataError, ImageBuffer};

/// Aligned (LR, HR) training sample. `top`/`left` are LR coordinates of the
/// window before augmentation; the HR window starts at scale * (top, left).
#[derive(Clone, Debug)]
pub struct PatchPair {
    pub lr_patch: ImageBuffer,
    pub hr_patch: ImageBuffer,
    pub image_id: usize,
    pub top: usize,
    pub left: usize,
}

fn flip_h(img: &ImageBuffer) -> ImageBuffer {
    let mut out = img.clone();
    for c in 0..3 {
        for y in 0..img.height {
            for x in 0..img.width {
                out.set(c, y, x, img.get(c, y, img.width - 1 - x));
            }
        }
    }
    out
}

fn flip_v(img: &ImageBuffer) -> ImageBuffer {
    let mut out = img.clone();
    for c in 0..3 {
        for y in 0..img.height {
            for x in 0..img.width {
                out.set(c, y, x, img.get(c, img.height - 1 - y, x));
            }
        }
    }
    out
}

fn transpose(img: &ImageBuffer) -> ImageBuffer {
    let mut out = ImageBuffer::new(img.width, img.height);
    for c in 0..3 {
        for y in 0..img.height {
            for x in 0..img.width {
                out.set(c, x, y, img.get(c, y, x));
            }
        }
    }
    out
}

/// One of the 8 dihedral transforms, same code applied to LR and HR.
fn augment8(img: &ImageBuffer, code: u8) -> ImageBuffer {
    let mut out = img.clone();
    if code & 1 != 0 {
        out = flip_h(&out);
    }
    if code & 2 != 0 {
        out = flip_v(&out);
    }
    if code & 4 != 0 {
        out = transpose(&out);
    }
    out
}

/// Uniformly random aligned LR/HR patch pairs. The LR image is the bicubic
/// 1/scale degradation of `hr` (cropped to a multiple of the scale first).
pub fn sample_patches(
    hr: &ImageBuffer,
    scale: usize,
    patch: usize,
    count: usize,
    seed: u64,
    augment: bool,
) -> Result<Vec<PatchPair>, DataError> {
    let hr_cropped = hr.crop(0, 0, hr.height - hr.height % scale, hr.width - hr.width % scale);
    let lr = bicubic_resize(&hr_cropped, 1, scale as u32)?;
    sample_patches_from(&hr_cropped, &lr, scale, patch, count, seed, augment, 0)
}

/// Same as [`sample_patches`] but with a precomputed LR image and source id.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sample_patches_from(
    hr: &ImageBuffer,
    lr: &ImageBuffer,
    scale: usize,
    patch: usize,
    count: usize,
    seed: u64,
    augment: bool,
    image_id: usize,
) -> Result<Vec<PatchPair>, DataError> {
    if lr.height < patch || lr.width < patch {
        return Err(DataError::TooSmall { h: lr.height, w: lr.width, need: patch });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let top = rng.gen_range(0..=lr.height - patch);
        let left = rng.gen_range(0..=lr.width - patch);
        let mut lr_patch = lr.crop(top, left, patch, patch);
        let mut hr_patch = hr.crop(scale * top, scale * left, scale * patch, scale * patch);
        // code drawn unconditionally so the position stream is identical
        // with augmentation on or off
        let code = rng.gen_range(0..8u8);
        if augment {
            lr_patch = augment8(&lr_patch, code);
            hr_patch = augment8(&hr_patch, code);
        }
        out.push(PatchPair { lr_patch, hr_patch, image_id, top, left });
    }
    Ok(out)
}
