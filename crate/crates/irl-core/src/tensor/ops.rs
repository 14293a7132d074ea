//! Differentiable ops. Each op computes its output eagerly and, when the
//! output needs a gradient, records a backward rule on the tape.

use rayon::prelude::*;

use super::{Result, Shape, Tape, Tensor, TensorError};

fn track(tape: &Tape, inputs: &[&Tensor], out: &Tensor, rule: impl Fn() + 'static) {
    if inputs.iter().any(|t| t.requires_grad()) {
        out.set_requires_grad(true);
        tape.record(rule);
    }
}

fn out_grad(out: &Tensor) -> Option<Vec<f32>> {
    out.grad().clone()
}

/// 2D convolution, stride 1, square kernel, zero padding.
///
/// `weight` is (co, ci, k, k), `bias` is co elements.
pub fn conv2d(
    tape: &Tape,
    input: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    padding: usize,
) -> Result<Tensor> {
    let ishape = input.shape();
    let wshape = weight.shape();
    let (co, ci, k) = (wshape.n, wshape.c, wshape.h);
    if wshape.h != wshape.w {
        return Err(TensorError::ShapeMismatch(wshape, Shape::new(co, ci, k, k)));
    }
    if ishape.c != ci {
        return Err(TensorError::ChannelMismatch { input: ishape.c, expected: ci });
    }
    if bias.numel() != co {
        return Err(TensorError::ChannelMismatch { input: bias.numel(), expected: co });
    }
    let (h, w) = (ishape.h, ishape.w);
    if h + 2 * padding < k || w + 2 * padding < k {
        return Err(TensorError::KernelTooLarge { k, h, w, padding });
    }
    let oh = h + 2 * padding - k + 1;
    let ow = w + 2 * padding - k + 1;
    let oshape = Shape::new(ishape.n, co, oh, ow);

    let out_data = conv2d_forward_raw(
        &input.data(),
        ishape,
        &weight.data(),
        co,
        ci,
        k,
        &bias.data(),
        padding,
    );
    let out = Tensor::from_vec(oshape, out_data)?;

    let (inp, wt, bs, o) = (input.clone(), weight.clone(), bias.clone(), out.clone());
    track(tape, &[input, weight, bias], &out, move || {
        let gout = match out_grad(&o) {
            Some(g) => g,
            None => return,
        };
        conv2d_backward(&inp, &wt, &bs, padding, &gout, oh, ow);
    });
    Ok(out)
}

/// Direct convolution on raw buffers; also used by the optimizer-free
/// inference paths.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv2d_forward_raw(
    input: &[f32],
    ishape: Shape,
    weight: &[f32],
    co: usize,
    ci: usize,
    k: usize,
    bias: &[f32],
    padding: usize,
) -> Vec<f32> {
    let (n, h, w) = (ishape.n, ishape.h, ishape.w);
    let oh = h + 2 * padding - k + 1;
    let ow = w + 2 * padding - k + 1;
    let mut out = vec![0.0f32; n * co * oh * ow];
    let p = padding as isize;

    out.par_chunks_mut(oh * ow).enumerate().for_each(|(idx, out_plane)| {
        let (ni, coi) = (idx / co, idx % co);
        out_plane.fill(bias[coi]);
        for cii in 0..ci {
            let in_plane = &input[(ni * ci + cii) * h * w..][..h * w];
            let w_base = ((coi * ci + cii) * k) * k;
            for kh in 0..k {
                for kw in 0..k {
                    let wv = weight[w_base + kh * k + kw];
                    if wv == 0.0 {
                        continue;
                    }
                    let vshift = kh as isize - p;
                    let hshift = kw as isize - p;
                    let lo = 0isize.max(-hshift) as usize;
                    let hi = (ow as isize).min(w as isize - hshift).max(0) as usize;
                    if hi <= lo {
                        continue;
                    }
                    for ohi in 0..oh {
                        let ih = ohi as isize + vshift;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        let in_row = &in_plane[ih as usize * w..][..w];
                        let out_row = &mut out_plane[ohi * ow..][..ow];
                        let src = &in_row[(lo as isize + hshift) as usize..][..hi - lo];
                        for (dst, s) in out_row[lo..hi].iter_mut().zip(src) {
                            *dst += wv * s;
                        }
                    }
                }
            }
        }
    });
    out
}

fn conv2d_backward(
    input: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    padding: usize,
    gout: &[f32],
    oh: usize,
    ow: usize,
) {
    let ishape = input.shape();
    let wshape = weight.shape();
    let (n, h, w) = (ishape.n, ishape.h, ishape.w);
    let (co, ci, k) = (wshape.n, wshape.c, wshape.h);
    let p = padding as isize;
    let in_ref = input.data();
    let w_ref = weight.data();
    let in_data: &[f32] = &in_ref;
    let w_data: &[f32] = &w_ref;

    if bias.requires_grad() {
        bias.with_grad_buffer(|gb| {
            for ni in 0..n {
                for coi in 0..co {
                    let plane = &gout[(ni * co + coi) * oh * ow..][..oh * ow];
                    gb[coi] += plane.iter().sum::<f32>();
                }
            }
        });
    }

    if weight.requires_grad() {
        weight.with_grad_buffer(|gw| {
            gw.par_chunks_mut(ci * k * k).enumerate().for_each(|(coi, gw_co)| {
                for ni in 0..n {
                    let g_plane = &gout[(ni * co + coi) * oh * ow..][..oh * ow];
                    for cii in 0..ci {
                        let in_plane = &in_data[(ni * ci + cii) * h * w..][..h * w];
                        for kh in 0..k {
                            for kw in 0..k {
                                let vshift = kh as isize - p;
                                let hshift = kw as isize - p;
                                let lo = 0isize.max(-hshift) as usize;
                                let hi = (ow as isize).min(w as isize - hshift).max(0) as usize;
                                if hi <= lo {
                                    continue;
                                }
                                let mut acc = 0.0f32;
                                for ohi in 0..oh {
                                    let ih = ohi as isize + vshift;
                                    if ih < 0 || ih >= h as isize {
                                        continue;
                                    }
                                    let in_row = &in_plane[ih as usize * w..][..w];
                                    let g_row = &g_plane[ohi * ow..][..ow];
                                    let src = &in_row[(lo as isize + hshift) as usize..][..hi - lo];
                                    for (g, s) in g_row[lo..hi].iter().zip(src) {
                                        acc += g * s;
                                    }
                                }
                                gw_co[cii * k * k + kh * k + kw] += acc;
                            }
                        }
                    }
                }
            });
        });
    }

    if input.requires_grad() {
        input.with_grad_buffer(|gi| {
            gi.par_chunks_mut(ci * h * w).enumerate().for_each(|(ni, gi_n)| {
                for coi in 0..co {
                    let g_plane = &gout[(ni * co + coi) * oh * ow..][..oh * ow];
                    for cii in 0..ci {
                        let gi_plane = &mut gi_n[cii * h * w..][..h * w];
                        let w_base = ((coi * ci + cii) * k) * k;
                        for kh in 0..k {
                            for kw in 0..k {
                                let wv = w_data[w_base + kh * k + kw];
                                if wv == 0.0 {
                                    continue;
                                }
                                let vshift = kh as isize - p;
                                let hshift = kw as isize - p;
                                let lo = 0isize.max(-hshift) as usize;
                                let hi = (ow as isize).min(w as isize - hshift).max(0) as usize;
                                if hi <= lo {
                                    continue;
                                }
                                for ohi in 0..oh {
                                    let ih = ohi as isize + vshift;
                                    if ih < 0 || ih >= h as isize {
                                        continue;
                                    }
                                    let g_row = &g_plane[ohi * ow..][..ow];
                                    let gi_row = &mut gi_plane[ih as usize * w..][..w];
                                    let dst_start = (lo as isize + hshift) as usize;
                                    let dst = &mut gi_row[dst_start..][..hi - lo];
                                    for (d, g) in dst.iter_mut().zip(&g_row[lo..hi]) {
                                        *d += wv * g;
                                    }
                                }
                            }
                        }
                    }
                }
            });
        });
    }
}

pub fn relu(tape: &Tape, input: &Tensor) -> Tensor {
    let data: Vec<f32> = input.data().iter().map(|&x| x.max(0.0)).collect();
    let out = Tensor::from_vec(input.shape(), data).unwrap();
    let (inp, o) = (input.clone(), out.clone());
    track(tape, &[input], &out, move || {
        let gout = match out_grad(&o) {
            Some(g) => g,
            None => return,
        };
        if inp.requires_grad() {
            let x = inp.data();
            inp.with_grad_buffer(|gi| {
                for i in 0..gi.len() {
                    if x[i] > 0.0 {
                        gi[i] += gout[i];
                    }
                }
            });
        }
    });
    out
}

pub fn add(tape: &Tape, a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape() != b.shape() {
        return Err(TensorError::ShapeMismatch(a.shape(), b.shape()));
    }
    let data: Vec<f32> = a.data().iter().zip(b.data().iter()).map(|(x, y)| x + y).collect();
    let out = Tensor::from_vec(a.shape(), data)?;
    let (ta, tb, o) = (a.clone(), b.clone(), out.clone());
    track(tape, &[a, b], &out, move || {
        let gout = match out_grad(&o) {
            Some(g) => g,
            None => return,
        };
        if ta.requires_grad() {
            ta.accumulate_grad(&gout);
        }
        if tb.requires_grad() {
            tb.accumulate_grad(&gout);
        }
    });
    Ok(out)
}

pub fn scale(tape: &Tape, a: &Tensor, s: f32) -> Tensor {
    let data: Vec<f32> = a.data().iter().map(|&x| x * s).collect();
    let out = Tensor::from_vec(a.shape(), data).unwrap();
    let (ta, o) = (a.clone(), out.clone());
    track(tape, &[a], &out, move || {
        let gout = match out_grad(&o) {
            Some(g) => g,
            None => return,
        };
        if ta.requires_grad() {
            ta.with_grad_buffer(|gi| {
                for (g, go) in gi.iter_mut().zip(&gout) {
                    *g += s * go;
                }
            });
        }
    });
    out
}

/// Concatenates along the channel axis; parts must share n, h, w.
pub fn concat_channels(tape: &Tape, parts: &[Tensor]) -> Result<Tensor> {
    let first = parts.first().ok_or(TensorError::EmptyList)?;
    let (n, h, w) = (first.shape().n, first.shape().h, first.shape().w);
    let mut c_total = 0;
    for p in parts {
        let s = p.shape();
        if s.n != n || s.h != h || s.w != w {
            return Err(TensorError::ShapeMismatch(first.shape(), s));
        }
        c_total += s.c;
    }
    let oshape = Shape::new(n, c_total, h, w);
    let hw = h * w;
    let mut data = vec![0.0f32; oshape.numel()];
    for ni in 0..n {
        let mut c_off = 0;
        for p in parts {
            let cp = p.shape().c;
            let src = &p.data()[ni * cp * hw..][..cp * hw];
            data[(ni * c_total + c_off) * hw..][..cp * hw].copy_from_slice(src);
            c_off += cp;
        }
    }
    let out = Tensor::from_vec(oshape, data)?;
    let parts_owned: Vec<Tensor> = parts.to_vec();
    let o = out.clone();
    let inputs: Vec<&Tensor> = parts.iter().collect();
    track(tape, &inputs, &out, move || {
        let gout = match out_grad(&o) {
            Some(g) => g,
            None => return,
        };
        for ni in 0..n {
            let mut c_off = 0;
            for p in &parts_owned {
                let cp = p.shape().c;
                if p.requires_grad() {
                    let src = &gout[(ni * c_total + c_off) * hw..][..cp * hw];
                    p.with_grad_buffer(|gi| {
                        let dst = &mut gi[ni * cp * hw..][..cp * hw];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += s;
                        }
                    });
                }
                c_off += cp;
            }
        }
    });
    Ok(out)
}

/// Sub-pixel rearrangement: (n, c, h, w) -> (n, c/r^2, h*r, w*r) with
/// out[n, c, h*r+i, w*r+j] = in[n, c*r^2 + i*r + j, h, w].
pub fn pixel_shuffle(tape: &Tape, input: &Tensor, r: usize) -> Result<Tensor> {
    let s = input.shape();
    let rsq = r * r;
    if !s.c.is_multiple_of(rsq) {
        return Err(TensorError::ChannelsNotDivisible { c: s.c, rsq });
    }
    let oc = s.c / rsq;
    let oshape = Shape::new(s.n, oc, s.h * r, s.w * r);
    let mut data = vec![0.0f32; oshape.numel()];
    {
        let in_data = input.data();
        shuffle_raw(&in_data, &mut data, s, r, false);
    }
    let out = Tensor::from_vec(oshape, data)?;
    let (inp, o) = (input.clone(), out.clone());
    track(tape, &[input], &out, move || {
        let gout = match out_grad(&o) {
            Some(g) => g,
            None => return,
        };
        if inp.requires_grad() {
            inp.with_grad_buffer(|gi| {
                shuffle_raw(&gout, gi, s, r, true);
            });
        }
    });
    Ok(out)
}

// forward: dst (shuffled) gets src (unshuffled); inverse accumulates the
// exact inverse permutation (used for the gradient).
fn shuffle_raw(src: &[f32], dst: &mut [f32], in_shape: Shape, r: usize, inverse: bool) {
    let (n, c, h, w) = (in_shape.n, in_shape.c, in_shape.h, in_shape.w);
    let oc = c / (r * r);
    let (ohh, oww) = (h * r, w * r);
    for ni in 0..n {
        for ci in 0..c {
            let c_out = ci / (r * r);
            let rem = ci % (r * r);
            let (di, dj) = (rem / r, rem % r);
            let in_plane_base = (ni * c + ci) * h * w;
            let out_plane_base = (ni * oc + c_out) * ohh * oww;
            for hi in 0..h {
                for wi in 0..w {
                    let in_idx = in_plane_base + hi * w + wi;
                    let out_idx = out_plane_base + (hi * r + di) * oww + (wi * r + dj);
                    if inverse {
                        dst[in_idx] += src[out_idx];
                    } else {
                        dst[out_idx] = src[in_idx];
                    }
                }
            }
        }
    }
}

/// Mean absolute error, scalar output. Gradient w.r.t. pred is sign(d)/N.
pub fn l1_loss(tape: &Tape, pred: &Tensor, target: &Tensor) -> Result<Tensor> {
    if pred.shape() != target.shape() {
        return Err(TensorError::ShapeMismatch(pred.shape(), target.shape()));
    }
    let n = pred.numel() as f32;
    let loss: f32 = pred
        .data()
        .iter()
        .zip(target.data().iter())
        .map(|(p, t)| (p - t).abs())
        .sum::<f32>()
        / n;
    let out = Tensor::scalar(loss);
    let (tp, tt, o) = (pred.clone(), target.clone(), out.clone());
    track(tape, &[pred, target], &out, move || {
        let g = match out_grad(&o) {
            Some(g) => g[0],
            None => return,
        };
        let pd = tp.data();
        let td = tt.data();
        let n = pd.len() as f32;
        if tp.requires_grad() {
            tp.with_grad_buffer(|gi| {
                for i in 0..gi.len() {
                    gi[i] += g * (pd[i] - td[i]).signum() / n;
                }
            });
        }
        if tt.requires_grad() {
            tt.with_grad_buffer(|gi| {
                for i in 0..gi.len() {
                    gi[i] -= g * (pd[i] - td[i]).signum() / n;
                }
            });
        }
    });
    Ok(out)
}

/// Mean squared error, scalar output. Gradient w.r.t. pred is 2d/N.
pub fn l2_loss(tape: &Tape, pred: &Tensor, target: &Tensor) -> Result<Tensor> {
    if pred.shape() != target.shape() {
        return Err(TensorError::ShapeMismatch(pred.shape(), target.shape()));
    }
    let n = pred.numel() as f32;
    let loss: f32 = pred
        .data()
        .iter()
        .zip(target.data().iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f32>()
        / n;
    let out = Tensor::scalar(loss);
    let (tp, tt, o) = (pred.clone(), target.clone(), out.clone());
    track(tape, &[pred, target], &out, move || {
        let g = match out_grad(&o) {
            Some(g) => g[0],
            None => return,
        };
        let pd = tp.data();
        let td = tt.data();
        let n = pd.len() as f32;
        if tp.requires_grad() {
            tp.with_grad_buffer(|gi| {
                for i in 0..gi.len() {
                    gi[i] += g * 2.0 * (pd[i] - td[i]) / n;
                }
            });
        }
        if tt.requires_grad() {
            tt.with_grad_buffer(|gi| {
                for i in 0..gi.len() {
                    gi[i] -= g * 2.0 * (pd[i] - td[i]) / n;
                }
            });
        }
    });
    Ok(out)
}

pub fn mean(tape: &Tape, input: &Tensor) -> Tensor {
    let n = input.numel() as f32;
    let out = Tensor::scalar(input.data().iter().sum::<f32>() / n);
    let (inp, o) = (input.clone(), out.clone());
    track(tape, &[input], &out, move || {
        let g = match out_grad(&o) {
            Some(g) => g[0],
            None => return,
        };
        if inp.requires_grad() {
            let n = inp.numel() as f32;
            inp.with_grad_buffer(|gi| {
                for gv in gi.iter_mut() {
                    *gv += g / n;
                }
            });
        }
    });
    out
}

/// Seeds the loss gradient with 1 and replays the tape in reverse, populating
/// grads for every reachable tensor with `requires_grad`.
pub fn backward(tape: &Tape, loss: &Tensor) -> Result<()> {
    if loss.numel() != 1 {
        return Err(TensorError::NonScalarLoss(loss.numel()));
    }
    loss.accumulate_grad(&[1.0]);
    tape.replay_reverse();
    Ok(())
}
