use super::{DataError, ImageBuffer};

/// Keys cubic convolution kernel with a = -0.5. Support is [-2, 2].
pub fn keys_kernel(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x < 1.0 {
        (A + 2.0) * x * x * x - (A + 3.0) * x * x + 1.0
    } else if x < 2.0 {
        A * x * x * x - 5.0 * A * x * x + 8.0 * A * x - 4.0 * A
    } else {
        0.0
    }
}

const SUPPORTED: &[(u32, u32)] = &[(1, 2), (1, 3), (1, 4), (2, 1), (3, 1), (4, 1)];

/// Separable bicubic resize by a rational factor num/den. Edge-clamped
/// sampling; when downscaling the kernel is widened by den/num for
/// anti-aliasing, with per-phase weight normalization.
pub fn bicubic_resize(img: &ImageBuffer, num: u32, den: u32) -> Result<ImageBuffer, DataError> {
    if !SUPPORTED.contains(&(num, den)) {
        return Err(DataError::BadFactor { num, den });
    }
    let out_h = (img.height * num as usize) / den as usize;
    let out_w = (img.width * num as usize) / den as usize;
    if out_h == 0 || out_w == 0 {
        return Err(DataError::DegenerateSize { num, den });
    }
    let scale = num as f64 / den as f64;

    let w_weights = axis_weights(img.width, out_w, scale);
    let h_weights = axis_weights(img.height, out_h, scale);

    let mut out = ImageBuffer::new(out_h, out_w);
    let mut tmp = vec![0.0f64; img.height * out_w];
    for c in 0..3 {
        let src = img.channel(c);
        // horizontal pass
        for y in 0..img.height {
            let row = &src[y * img.width..][..img.width];
            for (x, (start, taps)) in w_weights.iter().enumerate() {
                let mut acc = 0.0;
                for (i, wt) in taps.iter().enumerate() {
                    acc += wt * row[start + i] as f64;
                }
                tmp[y * out_w + x] = acc;
            }
        }
        // vertical pass
        let dst = out.channel_mut(c);
        for (y, (start, taps)) in h_weights.iter().enumerate() {
            for x in 0..out_w {
                let mut acc = 0.0;
                for (i, wt) in taps.iter().enumerate() {
                    acc += wt * tmp[(start + i) * out_w + x];
                }
                dst[y * out_w + x] = acc as f32;
            }
        }
    }
    Ok(out)
}

/// Per-output-pixel (start index, normalized weights) along one axis.
/// Source indexes are clamped to the valid range, which folds the edge
/// clamp into the weight table.
fn axis_weights(in_len: usize, out_len: usize, scale: f64) -> Vec<(usize, Vec<f64>)> {
    let kscale = (1.0 / scale).max(1.0);
    let radius = 2.0 * kscale;
    let mut table = Vec::with_capacity(out_len);
    for o in 0..out_len {
        let center = (o as f64 + 0.5) / scale - 0.5;
        let lo = (center - radius).ceil() as isize;
        let hi = (center + radius).floor() as isize;
        let mut clamped_lo = in_len as isize - 1;
        let mut clamped_hi = 0isize;
        let mut raw: Vec<(isize, f64)> = Vec::with_capacity((hi - lo + 1) as usize);
        let mut sum = 0.0;
        for i in lo..=hi {
            let w = keys_kernel((i as f64 - center) / kscale);
            if w == 0.0 {
                continue;
            }
            let idx = i.clamp(0, in_len as isize - 1);
            clamped_lo = clamped_lo.min(idx);
            clamped_hi = clamped_hi.max(idx);
            raw.push((idx, w));
            sum += w;
        }
        let start = clamped_lo as usize;
        let mut taps = vec![0.0; (clamped_hi - clamped_lo + 1) as usize];
        for (idx, w) in raw {
            taps[(idx - clamped_lo) as usize] += w / sum;
        }
        table.push((start, taps));
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_stays_constant() {
        let mut img = ImageBuffer::new(12, 12);
        img.data.fill(93.0);
        for &(num, den) in SUPPORTED {
            let out = bicubic_resize(&img, num, den).unwrap();
            for &v in &out.data {
                assert!((v - 93.0).abs() < 1e-4, "factor {num}/{den}: {v}");
            }
        }
    }

    #[test]
    fn upscale_dims_exact() {
        let img = ImageBuffer::new(7, 9);
        let out = bicubic_resize(&img, 2, 1).unwrap();
        assert_eq!((out.height, out.width), (14, 18));
    }

    #[test]
    fn linear_ramp_downscale_stays_linear() {
        // horizontal ramp 0..255; interior of the x1/2 result must remain a
        // ramp to well under 0.5/255 of the value range
        let (h, w) = (16, 64);
        let mut img = ImageBuffer::new(h, w);
        for c in 0..3 {
            for y in 0..h {
                for x in 0..w {
                    img.set(c, y, x, 255.0 * x as f32 / (w - 1) as f32);
                }
            }
        }
        let out = bicubic_resize(&img, 1, 2).unwrap();
        // expected: value at source coordinate (2*(x+0.5) - 0.5 - ...)
        for x in 2..out.width - 2 {
            let src_x = (x as f32 + 0.5) * 2.0 - 0.5;
            let expected = 255.0 * src_x / (w - 1) as f32;
            let got = out.get(0, 8, x);
            assert!((got - expected).abs() < 0.5, "x={x}: {got} vs {expected}");
        }
    }

    #[test]
    fn kernel_partition_of_unity() {
        // raw cubic weights at any phase sum to 1
        for step in 0..50 {
            let phase = step as f64 / 50.0;
            let mut sum = 0.0;
            for i in -3..=3 {
                sum += keys_kernel(i as f64 - phase);
            }
            assert!((sum - 1.0).abs() < 1e-6, "phase {phase}: {sum}");
        }
    }

    #[test]
    fn degenerate_output_rejected() {
        let img = ImageBuffer::new(2, 2);
        assert!(matches!(bicubic_resize(&img, 1, 3), Err(DataError::DegenerateSize { .. })));
    }
}
