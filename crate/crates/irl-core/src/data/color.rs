use super::{ImageBuffer, Plane};

/// BT.601 studio-swing luma, the SR-benchmark convention:
/// Y = 16 + (65.481 R + 128.553 G + 24.966 B) / 255.
pub fn rgb_to_y(img: &ImageBuffer) -> Plane {
    let mut out = Plane::new(img.height, img.width);
    let (r, g, b) = (img.channel(0), img.channel(1), img.channel(2));
    for i in 0..out.data.len() {
        out.data[i] = 16.0 + (65.481 * r[i] + 128.553 * g[i] + 24.966 * b[i]) / 255.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y_of(rgb: [f32; 3]) -> f32 {
        let mut img = ImageBuffer::new(1, 1);
        for c in 0..3 {
            img.set(c, 0, 0, rgb[c]);
        }
        rgb_to_y(&img).data[0]
    }

    #[test]
    fn formula_anchor_points() {
        assert!((y_of([255.0, 255.0, 255.0]) - 235.0).abs() < 1e-4);
        assert!((y_of([0.0, 0.0, 0.0]) - 16.0).abs() < 1e-6);
        let gray = 16.0 + 219.0 * 128.0 / 255.0;
        assert!((y_of([128.0, 128.0, 128.0]) - gray).abs() < 1e-4);
    }

    #[test]
    fn in_range_input_maps_to_studio_swing() {
        for r in (0..=255).step_by(51) {
            for g in (0..=255).step_by(51) {
                for b in (0..=255).step_by(51) {
                    let y = y_of([r as f32, g as f32, b as f32]);
                    assert!((16.0 - 1e-4..=235.0 + 1e-4).contains(&y));
                }
            }
        }
    }
}
