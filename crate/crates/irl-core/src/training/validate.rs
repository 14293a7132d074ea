use std::io::Write;
use std::path::Path;

use crate::data::{psnr, rgb_to_y, ssim, ImageBuffer, SrDataset};
use crate::model::Model;

use super::infer::sr_forward;
use super::TrainError;

#[derive(Clone, Debug)]
pub struct EvalRow {
    pub image: String,
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

pub(crate) fn clamp_image(img: &ImageBuffer) -> ImageBuffer {
    let mut out = img.clone();
    for v in out.data.iter_mut() {
        *v = v.clamp(0.0, 255.0);
    }
    out
}

/// Y-channel PSNR/SSIM over a dataset, shave = scale, composed output
/// clamped to image range first.
pub fn validate(model: &Model, ds: &SrDataset, tile_size: usize) -> Result<EvalReport, TrainError> {
    let s = model.config.scale;
    let mut rows = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let sr = sr_forward(model, &ds.lr[i], tile_size)?;
        let sr = clamp_image(&sr);
        let y_sr = rgb_to_y(&sr);
        let y_hr = rgb_to_y(&ds.hr[i]);
        rows.push(EvalRow {
            image: ds.names[i].clone(),
            psnr_db: psnr(&y_sr, &y_hr, s)?,
            ssim: ssim(&y_sr, &y_hr, s)?,
        });
    }
    let n = rows.len() as f64;
    let mean_psnr = rows.iter().map(|r| r.psnr_db).sum::<f64>() / n;
    let mean_ssim = rows.iter().map(|r| r.ssim).sum::<f64>() / n;
    Ok(EvalReport { rows, mean_psnr, mean_ssim })
}

#[derive(Clone, Debug)]
pub struct MetricsRecord {
    pub stage: usize,
    pub config: String,
    pub image: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub wall_clock_s: f64,
}

/// Writes the metrics CSV (stage, config, image, psnr_db, ssim, wall_clock_s).
pub fn write_metrics_csv(path: impl AsRef<Path>, records: &[MetricsRecord]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "stage,config,image,psnr_db,ssim,wall_clock_s")?;
    for r in records {
        writeln!(
            f,
            "{},{},{},{:.6},{:.6},{:.3}",
            r.stage, r.config, r.image, r.psnr_db, r.ssim, r.wall_clock_s
        )?;
    }
    f.flush()
}
