use crate::data::{image_to_tensor, tensor_to_image, ImageBuffer};
use crate::model::{Model, ModelError};
use crate::tensor::Tape;

/// LR pixels of real context given to each tile beyond its core region.
pub const DEFAULT_TILE_CONTEXT: usize = 8;

/// Full-image forward at every composition level: element k is
/// P_0 + ... + P_k upsampled to full scale, unclamped, 0..255 range.
///
/// Images whose LR side exceeds `tile_size` are processed in tiles. Each
/// tile's input window is expanded by [`DEFAULT_TILE_CONTEXT`] pixels of
/// real image context and only the core region of its output is kept, so
/// tiling reproduces the untiled result whenever the network's receptive
/// field fits in the context margin.
pub fn sr_forward_levels(
    model: &Model,
    lr: &ImageBuffer,
    tile_size: usize,
) -> Result<Vec<ImageBuffer>, ModelError> {
    let s = model.config.scale;
    let levels = model.branches.len();
    if lr.height <= tile_size && lr.width <= tile_size {
        return forward_window_levels(model, lr);
    }

    let ctx = DEFAULT_TILE_CONTEXT;
    let mut out: Vec<ImageBuffer> =
        (0..levels).map(|_| ImageBuffer::new(lr.height * s, lr.width * s)).collect();
    let mut ty = 0;
    while ty < lr.height {
        let ch = tile_size.min(lr.height - ty);
        let mut tx = 0;
        while tx < lr.width {
            let cw = tile_size.min(lr.width - tx);
            let wy = ty.saturating_sub(ctx);
            let wx = tx.saturating_sub(ctx);
            let wy2 = (ty + ch + ctx).min(lr.height);
            let wx2 = (tx + cw + ctx).min(lr.width);
            let window = lr.crop(wy, wx, wy2 - wy, wx2 - wx);
            let tile_levels = forward_window_levels(model, &window)?;
            let (oy, ox) = ((ty - wy) * s, (tx - wx) * s);
            for (level, tile_img) in tile_levels.iter().enumerate() {
                let dst = &mut out[level];
                for c in 0..3 {
                    for row in 0..ch * s {
                        for col in 0..cw * s {
                            dst.set(
                                c,
                                ty * s + row,
                                tx * s + col,
                                tile_img.get(c, oy + row, ox + col),
                            );
                        }
                    }
                }
            }
            tx += cw;
        }
        ty += ch;
    }
    Ok(out)
}

/// Composed output only (the final level).
pub fn sr_forward(
    model: &Model,
    lr: &ImageBuffer,
    tile_size: usize,
) -> Result<ImageBuffer, ModelError> {
    Ok(sr_forward_levels(model, lr, tile_size)?.pop().expect("at least the master level"))
}

fn forward_window_levels(model: &Model, lr: &ImageBuffer) -> Result<Vec<ImageBuffer>, ModelError> {
    let tape = Tape::new();
    let input = image_to_tensor(lr);
    let out = model.forward(&tape, &input)?;
    let mut levels = Vec::with_capacity(out.preds.len());
    let mut acc = vec![0.0f32; out.preds[0].numel()];
    for pred in &out.preds {
        for (x, y) in acc.iter_mut().zip(pred.data().iter()) {
            *x += y;
        }
        let t = crate::tensor::Tensor::from_vec(pred.shape(), acc.clone())
            .map_err(ModelError::Tensor)?;
        levels.push(tensor_to_image(&t, 0));
    }
    Ok(levels)
}
