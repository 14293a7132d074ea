//! Test-only 64-bit reference implementations, independent of the library's
//! forward/backward paths. Used as oracles for finite-difference gradient
//! checks and metric parity tests.

#![allow(dead_code)]

pub mod gradsuite;
pub mod synth;

pub type Dims = (usize, usize, usize, usize);

pub fn conv2d_ref(
    input: &[f64],
    (n, ci, h, w): Dims,
    weight: &[f64],
    co: usize,
    k: usize,
    bias: &[f64],
    pad: usize,
) -> (Vec<f64>, Dims) {
    let oh = h + 2 * pad - k + 1;
    let ow = w + 2 * pad - k + 1;
    let mut out = vec![0.0; n * co * oh * ow];
    for ni in 0..n {
        for coi in 0..co {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = bias[coi];
                    for cii in 0..ci {
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = oy as isize + ky as isize - pad as isize;
                                let ix = ox as isize + kx as isize - pad as isize;
                                if iy < 0 || iy >= h as isize || ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let iv = input
                                    [((ni * ci + cii) * h + iy as usize) * w + ix as usize];
                                let wv = weight[((coi * ci + cii) * k + ky) * k + kx];
                                acc += iv * wv;
                            }
                        }
                    }
                    out[((ni * co + coi) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }
    (out, (n, co, oh, ow))
}

pub fn relu_ref(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub fn pixel_shuffle_ref(input: &[f64], (n, c, h, w): Dims, r: usize) -> (Vec<f64>, Dims) {
    let oc = c / (r * r);
    let (oh, ow) = (h * r, w * r);
    let mut out = vec![0.0; n * oc * oh * ow];
    for ni in 0..n {
        for ci in 0..c {
            let c2 = ci / (r * r);
            let rem = ci % (r * r);
            let (di, dj) = (rem / r, rem % r);
            for y in 0..h {
                for x in 0..w {
                    out[((ni * oc + c2) * oh + y * r + di) * ow + (x * r + dj)] =
                        input[((ni * c + ci) * h + y) * w + x];
                }
            }
        }
    }
    (out, (n, oc, oh, ow))
}

pub fn concat_ref(parts: &[(&[f64], Dims)]) -> (Vec<f64>, Dims) {
    let (n, _, h, w) = parts[0].1;
    let c_total: usize = parts.iter().map(|(_, d)| d.1).sum();
    let hw = h * w;
    let mut out = vec![0.0; n * c_total * hw];
    for ni in 0..n {
        let mut off = 0;
        for (data, (_, cp, _, _)) in parts {
            out[(ni * c_total + off) * hw..][..cp * hw]
                .copy_from_slice(&data[ni * cp * hw..][..cp * hw]);
            off += cp;
        }
    }
    (out, (n, c_total, h, w))
}

pub fn l1_ref(pred: &[f64], target: &[f64]) -> f64 {
    pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64
}

pub fn l2_ref(pred: &[f64], target: &[f64]) -> f64 {
    pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64
}

/// Central finite difference of `f` w.r.t. coordinate `i` of `x`.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, delta: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += delta;
    xm[i] -= delta;
    (f(&xp) - f(&xm)) / (2.0 * delta)
}

/// Relative-error criterion used by the gradient suite.
pub fn grad_close(analytic: f64, numeric: f64, tol: f64) -> bool {
    (analytic - numeric).abs() <= tol * numeric.abs().max(1.0)
}

// ---- brute-force metric references (direct formula evaluation) ----

/// PSNR by the direct formula, no shave handling (caller pre-shaves).
pub fn psnr_ref(a: &[f64], b: &[f64]) -> f64 {
    let mse = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    if mse == 0.0 {
        return 99.0;
    }
    10.0 * (255.0 * 255.0 / mse).log10()
}

/// SSIM by direct per-window evaluation with an explicit 2D Gaussian,
/// 11x11 window, sigma 1.5 (no separable shortcut).
pub fn ssim_ref(a: &[f64], b: &[f64], h: usize, w: usize) -> f64 {
    const WIN: usize = 11;
    const SIGMA: f64 = 1.5;
    let mut weights = [[0.0f64; WIN]; WIN];
    let mut wsum = 0.0;
    for (y, row) in weights.iter_mut().enumerate() {
        for (x, wv) in row.iter_mut().enumerate() {
            let dy = y as f64 - 5.0;
            let dx = x as f64 - 5.0;
            *wv = (-(dy * dy + dx * dx) / (2.0 * SIGMA * SIGMA)).exp();
            wsum += *wv;
        }
    }
    for row in weights.iter_mut() {
        for wv in row.iter_mut() {
            *wv /= wsum;
        }
    }
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);

    let mut total = 0.0;
    let mut count = 0usize;
    for ty in 0..=h - WIN {
        for tx in 0..=w - WIN {
            let (mut mx, mut my) = (0.0, 0.0);
            for wy in 0..WIN {
                for wx in 0..WIN {
                    let idx = (ty + wy) * w + tx + wx;
                    mx += weights[wy][wx] * a[idx];
                    my += weights[wy][wx] * b[idx];
                }
            }
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for wy in 0..WIN {
                for wx in 0..WIN {
                    let idx = (ty + wy) * w + tx + wx;
                    vx += weights[wy][wx] * (a[idx] - mx) * (a[idx] - mx);
                    vy += weights[wy][wx] * (b[idx] - my) * (b[idx] - my);
                    cov += weights[wy][wx] * (a[idx] - mx) * (b[idx] - my);
                }
            }
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    total / count as f64
}
