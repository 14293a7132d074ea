use std::path::Path;

use image::{ColorType, DynamicImage};

use super::{DataError, ImageBuffer};

/// Loads an 8-bit RGB or grayscale PNG; grayscale is replicated to 3
/// channels. 16-bit and alpha formats are rejected.
pub fn load_png(path: impl AsRef<Path>) -> Result<ImageBuffer, DataError> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| DataError::Io { path: pstr.clone(), source })?;
    let img = image::load_from_memory(&bytes)
        .map_err(|source| DataError::Decode { path: pstr.clone(), source })?;
    match img.color() {
        ColorType::Rgb8 => {}
        ColorType::L8 => {}
        other => {
            return Err(DataError::UnsupportedFormat { path: pstr, format: format!("{other:?}") })
        }
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut out = ImageBuffer::new(h, w);
    match img {
        DynamicImage::ImageRgb8(rgb) => {
            for (y, row) in rgb.rows().enumerate() {
                for (x, px) in row.enumerate() {
                    for c in 0..3 {
                        out.set(c, y, x, px.0[c] as f32);
                    }
                }
            }
        }
        DynamicImage::ImageLuma8(gray) => {
            for (y, row) in gray.rows().enumerate() {
                for (x, px) in row.enumerate() {
                    for c in 0..3 {
                        out.set(c, y, x, px.0[0] as f32);
                    }
                }
            }
        }
        _ => unreachable!("color type checked above"),
    }
    Ok(out)
}

/// Saves as 8-bit RGB PNG, clamping to [0, 255] and rounding half away
/// from zero.
pub fn save_png(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let mut rgb = image::RgbImage::new(img.width as u32, img.height as u32);
    for y in 0..img.height {
        for x in 0..img.width {
            let mut px = [0u8; 3];
            for c in 0..3 {
                px[c] = img.get(c, y, x).clamp(0.0, 255.0).round() as u8;
            }
            rgb.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    rgb.save(path).map_err(|source| DataError::Encode { path: pstr, source })
}
