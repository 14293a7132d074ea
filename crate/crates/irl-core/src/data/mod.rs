//! Image I/O, bicubic degradation, patch sampling and the PSNR/SSIM
//! evaluation protocol (Y channel, shaved borders).

mod color;
mod dataset;
mod io;
mod metrics;
mod patches;
mod resize;

pub use color::rgb_to_y;
pub use dataset::SrDataset;
pub use io::{load_png, save_png};
pub use metrics::{psnr, ssim, PSNR_CAP};
pub use patches::{sample_patches, PatchPair};
pub use resize::{bicubic_resize, keys_kernel};

use crate::tensor::{Shape, Tensor};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode {path}: {source}")]
    Decode {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("cannot encode {path}: {source}")]
    Encode {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: unsupported pixel format {format} (need 8-bit RGB or grayscale)")]
    UnsupportedFormat { path: String, format: String },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimMismatch(usize, usize, usize, usize),
    #[error("image {h}x{w} too small: need at least {need}x{need}")]
    TooSmall { h: usize, w: usize, need: usize },
    #[error("resize factor {num}/{den} gives a degenerate output size")]
    DegenerateSize { num: u32, den: u32 },
    #[error("unsupported resize factor {num}/{den}")]
    BadFactor { num: u32, den: u32 },
    #[error("no PNG images found in {0}")]
    EmptyDataset(String),
}

/// RGB image, planar channel-major layout, float values on the 0..255 range.
/// Values are clamped only at save or metric time.
#[derive(Clone, Debug)]
pub struct ImageBuffer {
    pub height: usize,
    pub width: usize,
    /// 3 * height * width, channel-major.
    pub data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(height: usize, width: usize) -> ImageBuffer {
        ImageBuffer { height, width, data: vec![0.0; 3 * height * width] }
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.data[c * self.height * self.width..][..self.height * self.width]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let hw = self.height * self.width;
        &mut self.data[c * hw..][..hw]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f32) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// Crop with top-left (y, x) and size (h, w).
    pub fn crop(&self, y: usize, x: usize, h: usize, w: usize) -> ImageBuffer {
        assert!(y + h <= self.height && x + w <= self.width);
        let mut out = ImageBuffer::new(h, w);
        for c in 0..3 {
            for row in 0..h {
                let src = &self.channel(c)[(y + row) * self.width + x..][..w];
                out.channel_mut(c)[row * w..][..w].copy_from_slice(src);
            }
        }
        out
    }
}

/// Single-channel float buffer (e.g. the luma plane).
#[derive(Clone, Debug)]
pub struct Plane {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn new(height: usize, width: usize) -> Plane {
        Plane { height, width, data: vec![0.0; height * width] }
    }

    pub fn shave(&self, border: usize) -> Plane {
        assert!(self.height > 2 * border && self.width > 2 * border);
        let (h, w) = (self.height - 2 * border, self.width - 2 * border);
        let mut out = Plane::new(h, w);
        for row in 0..h {
            let src = &self.data[(row + border) * self.width + border..][..w];
            out.data[row * w..][..w].copy_from_slice(src);
        }
        out
    }
}

/// Image (0..255) to network tensor (0..1), shape (1, 3, h, w).
pub fn image_to_tensor(img: &ImageBuffer) -> Tensor {
    let data: Vec<f32> = img.data.iter().map(|&v| v / 255.0).collect();
    Tensor::from_vec(Shape::new(1, 3, img.height, img.width), data).unwrap()
}

/// Network tensor (0..1) back to image range (0..255), unclamped.
pub fn tensor_to_image(t: &Tensor, batch: usize) -> ImageBuffer {
    let s = t.shape();
    assert_eq!(s.c, 3);
    let mut img = ImageBuffer::new(s.h, s.w);
    let data = t.data();
    let plane = s.h * s.w;
    for c in 0..3 {
        let src = &data[(batch * 3 + c) * plane..][..plane];
        for (dst, v) in img.channel_mut(c).iter_mut().zip(src) {
            *dst = v * 255.0;
        }
    }
    img
}
