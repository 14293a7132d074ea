use super::{DataError, Plane};

/// Returned for a zero-MSE pair so results stay finite and sortable.
pub const PSNR_CAP: f64 = 99.0;

/// PSNR in dB on the 0..255 range, after shaving `shave` border pixels from
/// both inputs.
pub fn psnr(a: &Plane, b: &Plane, shave: usize) -> Result<f64, DataError> {
    if a.height != b.height || a.width != b.width {
        return Err(DataError::DimMismatch(a.height, a.width, b.height, b.width));
    }
    if a.height <= 2 * shave || a.width <= 2 * shave {
        return Err(DataError::TooSmall { h: a.height, w: a.width, need: 2 * shave + 1 });
    }
    let (sa, sb) = (a.shave(shave), b.shave(shave));
    let mut mse = 0.0f64;
    for (&x, &y) in sa.data.iter().zip(&sb.data) {
        let d = x as f64 - y as f64;
        mse += d * d;
    }
    mse /= sa.data.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - c;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *t;
    }
    for t in taps.iter_mut() {
        *t /= sum;
    }
    taps
}

/// Separable Gaussian filter, valid mode: output (h-10) x (w-10).
fn gauss_filter_valid(src: &[f64], h: usize, w: usize) -> Vec<f64> {
    let taps = gaussian_taps();
    let ow = w - SSIM_WINDOW + 1;
    let mut tmp = vec![0.0f64; h * ow];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                acc += t * src[y * w + x + i];
            }
            tmp[y * ow + x] = acc;
        }
    }
    let oh = h - SSIM_WINDOW + 1;
    let mut out = vec![0.0f64; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                acc += t * tmp[(y + i) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5),
/// C1 = (0.01*255)^2, C2 = (0.03*255)^2, computed after shaving.
pub fn ssim(a: &Plane, b: &Plane, shave: usize) -> Result<f64, DataError> {
    if a.height != b.height || a.width != b.width {
        return Err(DataError::DimMismatch(a.height, a.width, b.height, b.width));
    }
    if a.height < 2 * shave + SSIM_WINDOW || a.width < 2 * shave + SSIM_WINDOW {
        return Err(DataError::TooSmall {
            h: a.height,
            w: a.width,
            need: 2 * shave + SSIM_WINDOW,
        });
    }
    let (sa, sb) = (a.shave(shave), b.shave(shave));
    let (h, w) = (sa.height, sa.width);
    let x: Vec<f64> = sa.data.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = sb.data.iter().map(|&v| v as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let mu_x = gauss_filter_valid(&x, h, w);
    let mu_y = gauss_filter_valid(&y, h, w);
    let e_xx = gauss_filter_valid(&xx, h, w);
    let e_yy = gauss_filter_valid(&yy, h, w);
    let e_xy = gauss_filter_valid(&xy, h, w);

    const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
    const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let val = ((2.0 * mx * my + C1) * (2.0 * cov + C2))
            / ((mx * mx + my * my + C1) * (var_x + var_y + C2));
        total += val;
    }
    Ok(total / mu_x.len() as f64)
}
