//! Deterministic synthetic image corpus for training tests. Images mix
//! smooth gradients with sharp-edged rectangles and oriented stripe
//! patches, so residuals after a bicubic downscale contain the broadband
//! detail super-resolution actually has to reconstruct.

use irl_core::data::ImageBuffer;
use irl_core::data::SrDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn synth_image(seed: u64, size: usize) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = ImageBuffer::new(size, size);

    // smooth base: per-channel gradient plus one gentle wave
    for c in 0..3 {
        let gx = rng.gen_range(-30.0f32..30.0);
        let gy = rng.gen_range(-30.0f32..30.0);
        let base = rng.gen_range(90.0f32..166.0);
        let (kx, ky) = (rng.gen_range(0.05f32..0.2), rng.gen_range(0.05f32..0.2));
        let phase = rng.gen_range(0.0f32..std::f32::consts::TAU);
        let amp = rng.gen_range(5.0f32..15.0);
        for y in 0..size {
            for x in 0..size {
                let (fy, fx) = (y as f32 / size as f32, x as f32 / size as f32);
                let v = base
                    + gx * (fx - 0.5)
                    + gy * (fy - 0.5)
                    + amp * (kx * x as f32 + ky * y as f32 + phase).sin();
                img.set(c, y, x, v);
            }
        }
    }

    // sharp-edged rectangles with correlated per-channel offsets
    for _ in 0..10 {
        let h = rng.gen_range(6..size / 2);
        let w = rng.gen_range(6..size / 2);
        let top = rng.gen_range(0..size - h);
        let left = rng.gen_range(0..size - w);
        let delta = rng.gen_range(-70.0f32..70.0);
        let tint: [f32; 3] =
            [rng.gen_range(0.7..1.3), rng.gen_range(0.7..1.3), rng.gen_range(0.7..1.3)];
        for c in 0..3 {
            for y in top..top + h {
                for x in left..left + w {
                    let v = img.get(c, y, x) + delta * tint[c];
                    img.set(c, y, x, v);
                }
            }
        }
    }

    // localized high-frequency stripe patches (period 4-12 px)
    for _ in 0..4 {
        let h = rng.gen_range(12..size / 2);
        let w = rng.gen_range(12..size / 2);
        let top = rng.gen_range(0..size - h);
        let left = rng.gen_range(0..size - w);
        let theta = rng.gen_range(0.0f32..std::f32::consts::PI);
        let freq = rng.gen_range(0.5f32..1.5);
        let amp = rng.gen_range(15.0f32..40.0);
        let phase = rng.gen_range(0.0f32..std::f32::consts::TAU);
        let (ct, st) = (theta.cos(), theta.sin());
        for c in 0..3 {
            for y in top..top + h {
                for x in left..left + w {
                    let u = freq * (x as f32 * ct + y as f32 * st) + phase;
                    let v = img.get(c, y, x) + amp * u.sin();
                    img.set(c, y, x, v);
                }
            }
        }
    }

    for v in img.data.iter_mut() {
        *v = v.clamp(0.0, 255.0);
    }
    img
}

pub fn synth_dataset(scale: usize, count: usize, size: usize, seed: u64) -> SrDataset {
    let images = (0..count)
        .map(|i| (format!("synth{i:02}"), synth_image(seed + i as u64, size)))
        .collect();
    SrDataset::from_images(images, scale).unwrap()
}
